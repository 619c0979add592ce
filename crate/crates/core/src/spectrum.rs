//! Closed-form spectra of the Laplacian on rectangles with separable
//! boundary conditions, and exact eigenvalue counting by lattice enumeration.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative guard applied to the counting threshold: an eigenvalue counts
/// iff it is below `lambda * (1 - COUNT_GUARD)`.
pub const COUNT_GUARD: f64 = 1e-12;

/// Boundary conditions at the two ends `(-a, +a)` of an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bc1d {
    DD,
    DN,
    ND,
    NN,
}

impl Bc1d {
    /// Smallest admissible mode index.
    pub fn first_index(self) -> u64 {
        match self {
            Bc1d::DD => 1,
            _ => 0,
        }
    }

    fn is_mixed(self) -> bool {
        matches!(self, Bc1d::DN | Bc1d::ND)
    }
}

/// `m`-th eigenvalue of `-d^2/dx^2` on `[-a, a]`.
pub fn eigen_1d(bc: Bc1d, a: f64, m: u64) -> Result<f64> {
    if m < bc.first_index() {
        return Err(Error::OutOfRange(format!(
            "mode index {m} below first index {} for {bc:?}",
            bc.first_index()
        )));
    }
    Ok(eigen_1d_unchecked(bc, a, m))
}

#[inline]
fn eigen_1d_unchecked(bc: Bc1d, a: f64, m: u64) -> f64 {
    let m = m as f64;
    match bc {
        Bc1d::DD | Bc1d::NN => m * m * PI * PI / (4.0 * a * a),
        Bc1d::DN | Bc1d::ND => (2.0 * m + 1.0).powi(2) * PI * PI / (16.0 * a * a),
    }
}

/// Number of modes with eigenvalue strictly below `t`.
fn count_1d_below(bc: Bc1d, a: f64, t: f64) -> u64 {
    if t <= 0.0 {
        return 0;
    }
    let x = 2.0 * a * t.sqrt() / PI;
    let first = bc.first_index();
    // Index estimate of the last mode below t, then correct against the
    // closed form so the result is decided by the same arithmetic as
    // `eigen_1d`.
    let guess = if bc.is_mixed() { (2.0 * x - 1.0) / 2.0 } else { x };
    let mut m = guess.max(0.0).floor() as u64 + 1;
    while m > 0 && eigen_1d_unchecked(bc, a, m) >= t {
        m -= 1;
    }
    while eigen_1d_unchecked(bc, a, m + 1) < t {
        m += 1;
    }
    if eigen_1d_unchecked(bc, a, m) >= t {
        // only possible for m == 0
        return 0;
    }
    (m + 1).saturating_sub(first)
}

/// Rectangle `[-a, a] x [-b, b]` with per-axis boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleSpec {
    pub a: f64,
    pub b: f64,
    pub bc_x: Bc1d,
    pub bc_y: Bc1d,
}

impl RectangleSpec {
    pub fn new(a: f64, b: f64, bc_x: Bc1d, bc_y: Bc1d) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rectangle half-widths must be positive, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b, bc_x, bc_y })
    }

    pub fn area(&self) -> f64 {
        4.0 * self.a * self.b
    }

    /// `lambda_{m,n}`.
    pub fn eigenvalue(&self, m: u64, n: u64) -> Result<f64> {
        Ok(eigen_1d(self.bc_x, self.a, m)? + eigen_1d(self.bc_y, self.b, n)?)
    }

    /// The same rectangle with both half-widths multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            a: self.a * t,
            b: self.b * t,
            ..*self
        }
    }

    /// The lowest `count` eigenvalues, sorted, with multiplicity.
    pub fn lowest(&self, count: usize) -> Vec<f64> {
        if count == 0 {
            return Vec::new();
        }
        // Grow the threshold until enough modes lie below it.
        let mut t = (PI / (2.0 * self.a.max(self.b))).powi(2) * 4.0;
        while (count_exact(self, t) as usize) < count {
            t *= 2.0;
        }
        let mut out = Vec::new();
        let mut m = self.bc_x.first_index();
        loop {
            let lx = eigen_1d_unchecked(self.bc_x, self.a, m);
            if lx >= t {
                break;
            }
            let mut n = self.bc_y.first_index();
            loop {
                let v = lx + eigen_1d_unchecked(self.bc_y, self.b, n);
                if v >= t {
                    break;
                }
                out.push(v);
                n += 1;
            }
            m += 1;
        }
        out.sort_by(f64::total_cmp);
        out.truncate(count);
        out
    }
}

/// Number of eigenvalues `lambda_{m,n} < lambda (1 - 1e-12)`, by row-wise
/// lattice enumeration.
pub fn count_exact(spec: &RectangleSpec, lambda: f64) -> u64 {
    let thr = lambda * (1.0 - COUNT_GUARD);
    if thr <= 0.0 {
        return 0;
    }
    let mut total = 0;
    let mut m = spec.bc_x.first_index();
    loop {
        let lx = eigen_1d_unchecked(spec.bc_x, spec.a, m);
        if lx >= thr {
            break;
        }
        total += count_row(spec, lx, thr);
        m += 1;
    }
    total
}

/// Modes `n` with `lx + lambda_n < thr`.
fn count_row(spec: &RectangleSpec, lx: f64, thr: f64) -> u64 {
    let mut n = count_1d_below(spec.bc_y, spec.b, thr - lx);
    // `thr - lx` rounds; settle the boundary on the sum itself.
    let first = spec.bc_y.first_index();
    while n > 0 && lx + eigen_1d_unchecked(spec.bc_y, spec.b, first + n - 1) >= thr {
        n -= 1;
    }
    while lx + eigen_1d_unchecked(spec.bc_y, spec.b, first + n) < thr {
        n += 1;
    }
    n
}

/// Ellipse-area estimate `ab lambda / pi` plus the second-order term as
/// stated for each sub-rectangle type in the bracketing argument:
///
/// | `(bc_x, bc_y)`          | `sqrt(lambda)/pi` coefficient |
/// |-------------------------|-------------------------------|
/// | `(NN, NN)`              | `2(a + b)`                    |
/// | `(DD, DD)`              | `0`                           |
/// | `(NN, DN)`, `(NN, ND)`  | `2b + a`                      |
/// | `(DN, DD)`, `(ND, DD)`  | `b`                           |
/// | `(DD, NN)`              | `2a` (passage lower)          |
/// | `(NN, DD)`              | `2b` (Dirichlet upper)        |
///
/// These are the estimates as written, not exact asymptotics; compare
/// [`count_second_coefficient`].
pub fn count_leading_estimate(spec: &RectangleSpec, lambda: f64) -> Result<f64> {
    use Bc1d::*;
    let RectangleSpec { a, b, bc_x, bc_y } = *spec;
    let second = match (bc_x, bc_y) {
        (NN, NN) => 2.0 * (a + b),
        (DD, DD) => 0.0,
        (NN, DN) | (NN, ND) => 2.0 * b + a,
        (DN, DD) | (ND, DD) => b,
        (DD, NN) => 2.0 * a,
        (NN, DD) => 2.0 * b,
        _ => {
            return Err(Error::Unsupported(format!(
                "no leading estimate for ({bc_x:?}, {bc_y:?}); supported: (NN,NN), (DD,DD), \
                 (NN,DN), (NN,ND), (DN,DD), (ND,DD), (DD,NN), (NN,DD)"
            )))
        }
    };
    Ok(a * b * lambda / PI + second * lambda.sqrt() / PI)
}

/// Exact `sqrt(lambda)/pi` coefficient of the two-term asymptotics of
/// [`count_exact`]. Each Neumann axis adds half its lattice row, each
/// Dirichlet axis removes it, mixed axes are half-integer shifted and
/// contribute nothing.
pub fn count_second_coefficient(spec: &RectangleSpec) -> f64 {
    let axis = |bc: Bc1d| match bc {
        Bc1d::NN => 1.0,
        Bc1d::DD => -1.0,
        Bc1d::DN | Bc1d::ND => 0.0,
    };
    // The n = 0 row has length 2a sqrt(lambda)/pi and exists iff y is Neumann.
    axis(spec.bc_y) * spec.a + axis(spec.bc_x) * spec.b
}
