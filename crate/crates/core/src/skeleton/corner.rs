//! Closed forms near one re-entrant corner.
//!
//! Local chart: the room wall containing the passage mouth is `x = 0`, the
//! room extends into `x > 0`, the corner is `A = (0, delta/2)` and the room's
//! top wall is `y = h/2`. The parabolic edge runs from
//! `B = ((h - delta)/2, delta/2)` down to `E = (sqrt(h^2 - delta^2)/2, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerGeometry {
    pub h: f64,
    pub delta: f64,
}

impl CornerGeometry {
    /// `0 <= delta < h`; `delta = 0` is a closed wall with no corner.
    pub fn new(h: f64, delta: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("room height h = {h} must be positive")));
        }
        if !(delta >= 0.0) || delta >= h {
            return Err(Error::InvalidParameter(format!(
                "passage height must satisfy 0 <= delta < h, got delta = {delta}, h = {h}"
            )));
        }
        Ok(Self { h, delta })
    }

    pub fn is_closed(&self) -> bool {
        self.delta == 0.0
    }

    /// `h - delta`
    pub fn gap(&self) -> f64 {
        self.h - self.delta
    }

    pub fn corner(&self) -> [f64; 2] {
        [0.0, self.delta / 2.0]
    }

    /// `B`, where the diagonal meets the parabola.
    pub fn b_point(&self) -> [f64; 2] {
        [self.gap() / 2.0, self.delta / 2.0]
    }

    /// `E_x = sqrt(h^2 - delta^2) / 2`.
    pub fn x_intercept(&self) -> f64 {
        0.5 * ((self.h - self.delta) * (self.h + self.delta)).sqrt()
    }

    /// `t_0` at `E`: `sqrt((h + delta)/(h - delta))`.
    pub fn t_end(&self) -> f64 {
        ((self.h + self.delta) / (self.h - self.delta)).sqrt()
    }

    /// `y_0 = -x_0^2/(h - delta) + (h + delta)/4`.
    pub fn parabola_point(&self, x0: f64) -> f64 {
        -x0 * x0 / self.gap() + 0.25 * (self.h + self.delta)
    }

    /// Arc length along the parabola from `B` to the point with parameter
    /// `t_0 = 2 x_0/(h - delta)`.
    pub fn arclength(&self, t0: f64) -> Result<f64> {
        if t0 < 1.0 {
            return Err(Error::OutOfRange(format!("arclength needs t0 >= 1, got {t0}")));
        }
        Ok(self.arclength_unchecked(t0))
    }

    fn arclength_unchecked(&self, t0: f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        0.25 * self.gap() * (t0 * (t0 * t0 + 1.0).sqrt() + t0.asinh() - s2 - 1f64.asinh()).max(0.0)
    }

    /// Inverse of [`Self::arclength`] by safeguarded Newton iteration.
    pub fn t_from_sigma(&self, sigma: f64) -> f64 {
        let (mut lo, mut hi) = (1.0, self.t_end());
        let mut t = 1.0 + (hi - 1.0) * (sigma / self.edge_length()).clamp(0.0, 1.0);
        for _ in 0..60 {
            let f = self.arclength_unchecked(t) - sigma;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = 0.5 * self.gap() * (1.0 + t * t).sqrt();
            let mut next = t - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-16 * t {
                t = next;
                break;
            }
            t = next;
        }
        t
    }

    /// `|CE|`, the length of the parabolic edge.
    pub fn edge_length(&self) -> f64 {
        let (h, d) = (self.h, self.delta);
        let s2 = std::f64::consts::SQRT_2;
        s2 / 4.0 * (h * (h + d)).sqrt() - s2 / 4.0 * (h - d)
            + 0.25 * (h - d) * (((h + d) / (h - d)).sqrt().asinh() - 1f64.asinh())
    }

    /// Length `(h - delta)/sqrt 2` of the diagonal edge.
    pub fn diagonal_length(&self) -> f64 {
        self.gap() / std::f64::consts::SQRT_2
    }

    /// `t_0` of the fibre through `(x, y)` in the fan between `A` and the
    /// parabola.
    pub fn t0_of(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::OutOfRange(format!(
                "parabolic chart needs x > 0, got ({x}, {y})"
            )));
        }
        let q = (self.delta / 2.0 - y) / x;
        Ok(q + (q * q + 1.0).sqrt())
    }

    /// `(sigma, s)` for a point in the fan. `s > 0` on the corner side.
    pub fn tau_parabolic(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let t0 = self.t0_of(x, y)?;
        let s = -(t0 * t0 + 1.0) * (x - 0.5 * self.gap() * t0) / (2.0 * t0);
        Ok((self.arclength_unchecked(t0), s))
    }

    /// Fibre half-length `l = |AQ| = |QQ'| = (h - delta)(1 + t0^2)/4`.
    pub fn fiber_halflength(&self, t0: f64) -> f64 {
        0.25 * self.gap() * (1.0 + t0 * t0)
    }

    /// Parabola point `Q` for parameter `t0`.
    pub fn q_point(&self, t0: f64) -> [f64; 2] {
        let x0 = 0.5 * self.gap() * t0;
        [x0, self.parabola_point(x0)]
    }

    /// `|d(sigma, s)/d(x, y)|` in the fan, Cartesian closed form.
    pub fn jacobian_inv(&self, x: f64, y: f64) -> JacobianInv {
        let u = self.delta - 2.0 * y;
        let rho2 = u * u + 4.0 * x * x;
        if rho2 == 0.0 {
            return JacobianInv::Infinite;
        }
        let denom = rho2.sqrt() - self.delta + 2.0 * y;
        if denom <= 0.0 {
            return JacobianInv::Infinite;
        }
        JacobianInv::Finite(std::f64::consts::SQRT_2 * self.gap() * rho2.powf(0.25) / denom.powf(1.5))
    }

    /// Polar form with `x = r cos(theta)`, `y = delta/2 - r sin(theta)`.
    pub fn jacobian_inv_polar(&self, r: f64, theta: f64) -> JacobianInv {
        let d = 1.0 - theta.sin();
        if r == 0.0 || d <= 0.0 {
            return JacobianInv::Infinite;
        }
        JacobianInv::Finite(self.gap() / (std::f64::consts::SQRT_2 * r * d.powf(1.5)))
    }

    /// Polar radius of the parabola about its focus `A`.
    pub fn parabola_radius(&self, theta: f64) -> f64 {
        self.gap() / (2.0 * (1.0 - theta.sin()))
    }

    /// Polar angle of `E` as seen from `A`: `sin(theta_E) = delta/h`.
    pub fn theta_end(&self) -> f64 {
        (self.delta / self.h).asin()
    }

    /// Area of the diagonal's preimage, the square `[0, (h-delta)/2] x [delta/2, h/2]`.
    pub fn diagonal_region_area(&self) -> f64 {
        0.25 * self.gap() * self.gap()
    }

    /// Area of the parabolic edge's preimage.
    pub fn parabolic_region_area(&self) -> f64 {
        let e = self.x_intercept();
        e * self.h / 2.0 - 0.25 * self.gap() * self.gap() - self.delta * e / 4.0
    }

    /// Area of the `OE` segment's preimage, the triangle `A A' E`.
    pub fn segment_region_area(&self) -> f64 {
        self.delta * self.x_intercept() / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianInv {
    Finite(f64),
    /// At the corner itself.
    Infinite,
}

impl JacobianInv {
    pub fn value(self) -> Option<f64> {
        match self {
            JacobianInv::Finite(v) => Some(v),
            JacobianInv::Infinite => None,
        }
    }
}
