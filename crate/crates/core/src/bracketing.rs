//! Dirichlet–Neumann bracketing of the counting functions on `Omega_2M`.
//!
//! Every bound is a sum of exact rectangle counts. Rooms and passages are
//! indexed as in [`crate::domain`]: piece `i` has length `C^i`, passage `i`
//! has height `k C^(i alpha)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainParams, Piece, PieceKind};
use crate::error::{Error, Result};
use crate::spectrum::{count_exact, Bc1d, RectangleSpec};
use crate::tail::{min_m_for_lambda, TailPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet,
}

impl BoundaryCondition {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryCondition::Neumann => "neumann",
            BoundaryCondition::Dirichlet => "dirichlet",
        }
    }
}

/// Which domain the bounds refer to. `OmegaFull` adds the single trivial
/// eigenvalue the tail can contribute below `lambda` (Neumann only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Omega2M,
    OmegaFull,
}

/// Sub-rectangles of a room for the Neumann lower bound, stacked as
/// horizontal strips. For a generic room the strips are, top to bottom,
/// I, II, III, IV, V; for the first room I, II, III.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomPartition {
    pub j: usize,
    pub regions: Vec<RectangleSpec>,
}

impl RoomPartition {
    /// Generic room `j` (odd, `j >= 3`) between passages `j - 1` and `j + 1`.
    pub fn room(params: &DomainParams, j: usize) -> Result<Self> {
        if j % 2 == 0 || j < 3 {
            return Err(Error::OutOfRange(format!(
                "room partition needs an odd index >= 3, got {j}"
            )));
        }
        let h = params.h(j);
        let a = h / 2.0;
        let (wide, narrow) = {
            let l = params.delta(j - 1);
            let r = params.delta(j + 1);
            if l >= r {
                (l, r)
            } else {
                (r, l)
            }
        };
        // Outer strips touch only walls in x; the middle pair sees the wide
        // opening on one side; the centre strip sees both openings.
        let outer = RectangleSpec::new(a, (h - wide) / 4.0, Bc1d::NN, Bc1d::DN)?;
        let mid = RectangleSpec::new(a, (wide - narrow) / 4.0, Bc1d::DN, Bc1d::DD)?;
        let centre = RectangleSpec::new(a, narrow / 2.0, Bc1d::DD, Bc1d::DD)?;
        Ok(Self {
            j,
            regions: vec![outer, mid, centre, mid, outer],
        })
    }

    /// Room 1, closed on the left, opening into passage 2 on the right.
    pub fn first_room(params: &DomainParams) -> Result<Self> {
        let c = params.c;
        let d = params.delta(2);
        let outer = RectangleSpec::new(c / 2.0, (c - d) / 4.0, Bc1d::NN, Bc1d::DN)?;
        let centre = RectangleSpec::new(c / 2.0, d / 2.0, Bc1d::DN, Bc1d::DD)?;
        Ok(Self {
            j: 1,
            regions: vec![outer, centre, outer],
        })
    }

    pub fn area(&self) -> f64 {
        self.regions.iter().map(RectangleSpec::area).sum()
    }

    pub fn count(&self, lambda: f64) -> u64 {
        self.regions.iter().map(|r| count_exact(r, lambda)).sum()
    }
}

fn check_room(j: usize) -> Result<()> {
    if j % 2 == 0 || j == 0 {
        return Err(Error::OutOfRange(format!("room index must be odd, got {j}")));
    }
    Ok(())
}

/// Neumann lower count for room `j` (odd, `j >= 3`).
pub fn room_lower_count(params: &DomainParams, j: usize, lambda: f64) -> Result<u64> {
    Ok(RoomPartition::room(params, j)?.count(lambda))
}

/// Neumann upper count for room `j`: the Neumann square of side `C^j`.
pub fn room_upper_count(params: &DomainParams, j: usize, lambda: f64) -> Result<u64> {
    check_room(j)?;
    let a = params.h(j) / 2.0;
    Ok(count_exact(&RectangleSpec::new(a, a, Bc1d::NN, Bc1d::NN)?, lambda))
}

/// Neumann lower count for room 1.
pub fn first_room_lower_count(params: &DomainParams, lambda: f64) -> Result<u64> {
    Ok(RoomPartition::first_room(params)?.count(lambda))
}

/// Neumann `(lower, upper)` counts for passage `j` (even).
pub fn passage_counts(params: &DomainParams, j: usize, lambda: f64) -> Result<(u64, u64)> {
    if j % 2 != 0 || j == 0 {
        return Err(Error::OutOfRange(format!("passage index must be even, got {j}")));
    }
    let a = params.h(j) / 2.0;
    let b = params.delta(j) / 2.0;
    let lower = count_exact(&RectangleSpec::new(a, b, Bc1d::DD, Bc1d::NN)?, lambda);
    let upper = count_exact(&RectangleSpec::new(a, b, Bc1d::NN, Bc1d::NN)?, lambda);
    Ok((lower, upper))
}

/// Dirichlet `(lower, upper)` counts for one piece: all-Dirichlet below;
/// above, Neumann on the right side of room 1 and Neumann on the vertical
/// sides of every other piece.
pub fn dirichlet_piece_counts(piece: &Piece, lambda: f64) -> Result<(u64, u64)> {
    let a = piece.width() / 2.0;
    let b = piece.half_height;
    let lower = count_exact(&RectangleSpec::new(a, b, Bc1d::DD, Bc1d::DD)?, lambda);
    let upper_spec = if piece.index == 1 {
        RectangleSpec::new(a, b, Bc1d::DN, Bc1d::DD)?
    } else {
        RectangleSpec::new(a, b, Bc1d::NN, Bc1d::DD)?
    };
    Ok((lower, count_exact(&upper_spec, lambda)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub lambda: f64,
    pub m: usize,
    pub bc: BoundaryCondition,
    pub scope: Scope,
    pub lower_count: u64,
    pub upper_count: u64,
    /// `|Omega_2M| lambda / (4 pi)`
    pub weyl: f64,
    pub normalized_lower: f64,
    pub normalized_upper: f64,
    pub piece_lower: Vec<u64>,
    pub piece_upper: Vec<u64>,
}

/// Row of the bracketing CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketCsvRow {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub bc: String,
    pub lower: u64,
    pub upper: u64,
    pub weyl: f64,
    pub norm_lower: f64,
    pub norm_upper: f64,
}

impl From<&BracketReport> for BracketCsvRow {
    fn from(r: &BracketReport) -> Self {
        Self {
            lambda: r.lambda,
            m: r.m,
            bc: r.bc.as_str().to_string(),
            lower: r.lower_count,
            upper: r.upper_count,
            weyl: r.weyl,
            norm_lower: r.normalized_lower,
            norm_upper: r.normalized_upper,
        }
    }
}

/// `(count - weyl) / (sqrt(lambda) / pi)`.
pub fn normalize(count: f64, weyl: f64, lambda: f64) -> f64 {
    (count - weyl) / (lambda.sqrt() / PI)
}

/// Lower and upper counts on `Omega_2M` for the given boundary condition.
pub fn assemble_bounds(
    params: &DomainParams,
    bc: BoundaryCondition,
    m: usize,
    lambda: f64,
    scope: Scope,
) -> Result<BracketReport> {
    if m == 0 || m > 512 {
        return Err(Error::OutOfRange(format!("M = {m} must lie in 1..=512")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let n = 2 * m;
    let mut piece_lower = Vec::with_capacity(n);
    let mut piece_upper = Vec::with_capacity(n);
    match bc {
        BoundaryCondition::Neumann => {
            for i in 1..=n {
                let (lo, hi) = if i == 1 {
                    (first_room_lower_count(params, lambda)?, room_upper_count(params, 1, lambda)?)
                } else if i % 2 == 1 {
                    (room_lower_count(params, i, lambda)?, room_upper_count(params, i, lambda)?)
                } else {
                    passage_counts(params, i, lambda)?
                };
                piece_lower.push(lo);
                piece_upper.push(hi);
            }
        }
        BoundaryCondition::Dirichlet => {
            let mut x = 0.0;
            for i in 1..=n {
                let w = params.h(i);
                let half = if i % 2 == 1 { w / 2.0 } else { params.delta(i) / 2.0 };
                let piece = Piece {
                    index: i,
                    kind: if i % 2 == 1 { PieceKind::Room } else { PieceKind::Passage },
                    x_lo: x,
                    x_hi: x + w,
                    half_height: half,
                };
                x += w;
                let (lo, hi) = dirichlet_piece_counts(&piece, lambda)?;
                piece_lower.push(lo);
                piece_upper.push(hi);
            }
        }
    }
    let tail = u64::from(scope == Scope::OmegaFull && bc == BoundaryCondition::Neumann);
    let lower_count = piece_lower.iter().sum::<u64>() + tail;
    let upper_count = piece_upper.iter().sum::<u64>() + tail;
    let weyl = params.area_upto(n) * lambda / (4.0 * PI);
    Ok(BracketReport {
        lambda,
        m,
        bc,
        scope,
        lower_count,
        upper_count,
        weyl,
        normalized_lower: normalize(lower_count as f64, weyl, lambda),
        normalized_upper: normalize(upper_count as f64, weyl, lambda),
        piece_lower,
        piece_upper,
    })
}

/// [`assemble_bounds`] at the truncation depth `M(lambda)` from the tail
/// policy.
pub fn assemble_bounds_at_depth(
    params: &DomainParams,
    bc: BoundaryCondition,
    lambda: f64,
    policy: TailPolicy,
    scope: Scope,
) -> Result<BracketReport> {
    let depth = min_m_for_lambda(params, lambda, policy)?;
    assemble_bounds(params, bc, depth.m, lambda, scope)
}

/// Second-term constants: Neumann lower (`c1`), Neumann upper (`c2`) and
/// Dirichlet upper (`cd_upper`), as coefficients of `sqrt(lambda)/pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondTermConstants {
    pub c1: f64,
    pub c2: f64,
    pub cd_upper: f64,
}

impl SecondTermConstants {
    pub fn c1_positive(&self) -> bool {
        self.c1 > 0.0
    }
}

/// With `m = None` the `M -> infinity` limits; with `Some(M)` the bracketed
/// coefficients of the `Omega_2M` bounds.
pub fn second_term_constants(params: &DomainParams, m: Option<usize>) -> SecondTermConstants {
    let c = params.c;
    let k = params.k;
    let c2a = c.powf(2.0 * params.alpha);
    let room = (2.0 * c + c * c) / (1.0 - c * c);
    match m {
        None => SecondTermConstants {
            c1: room - k * c2a / (1.0 - c2a),
            c2: room + k * c2a / (1.0 - c2a),
            cd_upper: c * (c * c + 1.0) / (2.0 * (1.0 - c * c)) + k / (c2a.recip() - 1.0),
        },
        Some(m) => {
            let mf = m as f64;
            let c2m = c.powf(2.0 * mf);
            let c2am = c2a.powf(mf);
            let room = (2.0 * c + c * c - 2.0 * c * c2m - c * c * c2m) / (1.0 - c * c);
            SecondTermConstants {
                c1: room - 0.5 * k * (2.0 * c2a - c2am - c2am * c2a) / (1.0 - c2a),
                c2: room + k * (c2a - c2a * c2am) / (1.0 - c2a),
                cd_upper: c * (1.0 - c2m) / (1.0 - c * c) - c / 2.0
                    + k * c2a * (1.0 - c2am) / (1.0 - c2a),
            }
        }
    }
}
