//! Rooms-and-passages domains.
//!
//! A domain is a left-to-right chain of pieces centred on the x-axis. Odd
//! pieces are square rooms of side `h_i`, even pieces are passages of length
//! `h_i` and height `delta_i`. Room 1 starts at `x = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the geometric family `h_i = C^i`, `delta_i = k C^(i alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainParams {
    pub c: f64,
    pub alpha: f64,
    pub k: f64,
    pub n_pieces: usize,
}

impl DomainParams {
    pub fn new(c: f64, alpha: f64, k: f64, n_pieces: usize) -> Result<Self> {
        let params = Self {
            c,
            alpha,
            k,
            n_pieces,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks `0 < C < 1`, `alpha > 1`, `0 < k < C^(3 - 2 alpha)` and that the
    /// piece count is even and positive.
    pub fn validate(&self) -> Result<()> {
        let Self {
            c,
            alpha,
            k,
            n_pieces,
        } = *self;
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidParameter(format!("C = {c} must lie in (0, 1)")));
        }
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must exceed 1")));
        }
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("k = {k} must be positive")));
        }
        let k_max = self.k_bound();
        if k >= k_max {
            return Err(Error::InvalidParameter(format!(
                "k < C^(3-2alpha) violated: k = {k} >= {k_max}"
            )));
        }
        if n_pieces == 0 || n_pieces % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_pieces = {n_pieces} must be even and positive"
            )));
        }
        Ok(())
    }

    /// Upper bound `C^(3 - 2 alpha)` on `k`.
    pub fn k_bound(&self) -> f64 {
        self.c.powf(3.0 - 2.0 * self.alpha)
    }

    /// Length of piece `i` (side of room `i`, length of passage `i`).
    pub fn h(&self, i: usize) -> f64 {
        self.c.powi(i as i32)
    }

    /// Height of passage `i`.
    pub fn delta(&self, i: usize) -> f64 {
        self.k * self.c.powf(i as f64 * self.alpha)
    }

    /// `|Omega_p|` from the closed-form partial geometric sums.
    pub fn area_upto(&self, pieces: usize) -> f64 {
        let c = self.c;
        let rooms = pieces.div_ceil(2) as f64;
        let passages = (pieces / 2) as f64;
        let c4 = c.powi(4);
        let cp = c.powf(2.0 * (1.0 + self.alpha));
        c * c * (1.0 - c4.powf(rooms)) / (1.0 - c4)
            + self.k * cp * (1.0 - cp.powf(passages)) / (1.0 - cp)
    }

    /// `|Omega|` of the infinite domain.
    pub fn total_area(&self) -> f64 {
        let c = self.c;
        let cp = c.powf(2.0 * (1.0 + self.alpha));
        c * c / (1.0 - c.powi(4)) + self.k * cp / (1.0 - cp)
    }

    /// `|T_2M|`, the area beyond the first `2M` pieces.
    pub fn tail_area(&self, m: usize) -> f64 {
        let c = self.c;
        let m = m as f64;
        let cp = c.powf(2.0 * (1.0 + self.alpha));
        c.powf(2.0 + 4.0 * m) / (1.0 - c.powi(4)) + self.k * cp * cp.powf(m) / (1.0 - cp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Room,
    Passage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub index: usize,
    pub kind: PieceKind,
    pub x_lo: f64,
    pub x_hi: f64,
    pub half_height: f64,
}

impl Piece {
    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        2.0 * self.half_height
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_room(&self) -> bool {
        self.kind == PieceKind::Room
    }

    fn contains_open(&self, x: f64, y: f64) -> bool {
        x > self.x_lo && x < self.x_hi && y.abs() < self.half_height
    }
}

/// How the domain was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Geometric(DomainParams),
    /// Explicit lengths `h[i-1]` for every piece and heights `delta[j]` for
    /// passage `2(j+1)`.
    General { h: Vec<f64>, delta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpDomain {
    pub params: Family,
    pub pieces: Vec<Piece>,
}

impl RpDomain {
    /// Geometric family with `h_i = C^i`, `delta_i = k C^(i alpha)`.
    pub fn build_geometric(c: f64, alpha: f64, k: f64, n_pieces: usize) -> Result<Self> {
        let params = DomainParams::new(c, alpha, k, n_pieces)?;
        let h: Vec<f64> = (1..=n_pieces).map(|i| params.h(i)).collect();
        let delta: Vec<f64> = (1..=n_pieces / 2).map(|j| params.delta(2 * j)).collect();
        let pieces = layout(&h, &delta)?;
        Ok(Self {
            params: Family::Geometric(params),
            pieces,
        })
    }

    /// General sequences. `h` holds one length per piece, `delta` one height
    /// per passage.
    pub fn from_sequences(h: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if h.is_empty() || h.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "need an even positive number of pieces, got {}",
                h.len()
            )));
        }
        if delta.len() != h.len() / 2 {
            return Err(Error::InvalidParameter(format!(
                "{} pieces need {} passage heights, got {}",
                h.len(),
                h.len() / 2,
                delta.len()
            )));
        }
        let pieces = layout(&h, &delta)?;
        Ok(Self {
            params: Family::General { h, delta },
            pieces,
        })
    }

    pub fn geometric_params(&self) -> Option<&DomainParams> {
        match &self.params {
            Family::Geometric(p) => Some(p),
            Family::General { .. } => None,
        }
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// Piece with 1-based index `i`.
    pub fn piece(&self, i: usize) -> Option<&Piece> {
        i.checked_sub(1).and_then(|j| self.pieces.get(j))
    }

    /// Height of the passage with 1-based index `i`, or `0` when `i` is out of
    /// range (a closed end).
    pub fn passage_height(&self, i: usize) -> f64 {
        match self.piece(i) {
            Some(p) if p.kind == PieceKind::Passage => p.height(),
            _ => 0.0,
        }
    }

    /// `|Omega_p|`: closed form for the geometric family, direct sum otherwise.
    pub fn area_upto(&self, pieces: usize) -> Result<f64> {
        if pieces > self.n_pieces() {
            return Err(Error::OutOfRange(format!(
                "area_upto: {pieces} pieces requested, domain has {}",
                self.n_pieces()
            )));
        }
        Ok(match &self.params {
            Family::Geometric(p) => p.area_upto(pieces),
            Family::General { .. } => self.area_upto_summed(pieces),
        })
    }

    /// `|Omega_p|` by summing piece areas.
    pub fn area_upto_summed(&self, pieces: usize) -> f64 {
        self.pieces.iter().take(pieces).map(Piece::area).sum()
    }

    /// Area of the whole domain. For the geometric family this is the limit of
    /// the infinite chain, independent of how many pieces were laid out.
    pub fn total_area(&self) -> f64 {
        match &self.params {
            Family::Geometric(p) => p.total_area(),
            Family::General { .. } => self.area_upto_summed(self.n_pieces()),
        }
    }

    /// `|T_2M|`.
    pub fn tail_area(&self, m: usize) -> f64 {
        match &self.params {
            Family::Geometric(p) => p.tail_area(m),
            Family::General { .. } => self.pieces.iter().skip(2 * m).map(Piece::area).sum(),
        }
    }

    /// Total x-extent of the laid-out pieces.
    pub fn length(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.x_hi)
    }

    /// Whether `(x, y)` lies in the open union of the pieces. Points on a
    /// shared vertical edge inside the narrower opening are interior.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        if self.pieces.iter().any(|p| p.contains_open(x, y)) {
            return true;
        }
        self.pieces.windows(2).any(|w| {
            let opening = w[0].half_height.min(w[1].half_height);
            x == w[0].x_hi && y.abs() < opening
        })
    }

    /// The first `pieces` pieces as a standalone domain.
    pub fn truncate(&self, pieces: usize) -> Result<Self> {
        if pieces == 0 || pieces % 2 != 0 || pieces > self.n_pieces() {
            return Err(Error::OutOfRange(format!(
                "cannot truncate {} pieces to {pieces}",
                self.n_pieces()
            )));
        }
        let params = match &self.params {
            Family::Geometric(p) => Family::Geometric(DomainParams {
                n_pieces: pieces,
                ..*p
            }),
            Family::General { h, delta } => Family::General {
                h: h[..pieces].to_vec(),
                delta: delta[..pieces / 2].to_vec(),
            },
        };
        Ok(Self {
            params,
            pieces: self.pieces[..pieces].to_vec(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn layout(h: &[f64], delta: &[f64]) -> Result<Vec<Piece>> {
    if let Some(bad) = h.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "h_{} = {} must be positive",
            bad + 1,
            h[bad]
        )));
    }
    let mut pieces = Vec::with_capacity(h.len());
    let mut x = 0.0;
    for (j, &width) in h.iter().enumerate() {
        let index = j + 1;
        let (kind, half_height) = if index % 2 == 1 {
            (PieceKind::Room, width / 2.0)
        } else {
            let d = delta[j / 2];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "delta_{index} = {d} must be positive"
                )));
            }
            let left = h[j - 1];
            let right = h.get(j + 1).copied().unwrap_or(f64::INFINITY);
            if d >= left.min(right) {
                return Err(Error::ConstraintViolated {
                    inequality: format!(
                        "delta_{index} < min(h_{}, h_{}) ({d} >= {})",
                        index - 1,
                        index + 1,
                        left.min(right)
                    ),
                    index,
                });
            }
            (PieceKind::Passage, d / 2.0)
        };
        if kind == PieceKind::Room && index >= 3 && width >= h[j - 2] {
            return Err(Error::ConstraintViolated {
                inequality: format!("h_{index} < h_{} (room sizes strictly decreasing)", index - 2),
                index,
            });
        }
        pieces.push(Piece {
            index,
            kind,
            x_lo: x,
            x_hi: x + width,
            half_height,
        });
        x += width;
    }
    Ok(pieces)
}
