//! Singular sequences for `alpha > 3`.
//!
//! `phi_j` depends on `x` only: zero up to passage `2j`, a cosine ramp up
//! across passage `2j`, one until passage `4j`, a cosine ramp down across
//! passage `4j`, zero beyond. All norms are integrated exactly piece by piece.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::RpDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub x_lo: f64,
    pub width: f64,
    /// Height of the passage the ramp runs through.
    pub height: f64,
}

impl Ramp {
    fn rise(&self, x: f64) -> f64 {
        0.5 * (1.0 - (PI * (x - self.x_lo) / self.width).cos())
    }

    fn rise_prime(&self, x: f64) -> f64 {
        0.5 * PI / self.width * (PI * (x - self.x_lo) / self.width).sin()
    }

    fn x_hi(&self) -> f64 {
        self.x_lo + self.width
    }

    /// `int phi^2` over the passage: `(3/8) delta w`.
    fn mass(&self) -> f64 {
        0.375 * self.height * self.width
    }

    /// `int |phi'|^2` over the passage: `pi^2 delta / (8 w)`.
    fn energy(&self) -> f64 {
        PI * PI * self.height / (8.0 * self.width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampProfile {
    pub j: usize,
    pub up: Ramp,
    pub down: Ramp,
    /// `|Omega_(4j-1)| - |Omega_(2j)|`, the area where `phi_j = 1`.
    pub plateau_area: f64,
}

impl RampProfile {
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.up.x_lo || x >= self.down.x_hi() {
            0.0
        } else if x < self.up.x_hi() {
            self.up.rise(x)
        } else if x <= self.down.x_lo {
            1.0
        } else {
            1.0 - self.down.rise(x)
        }
    }

    /// `d phi / dx`.
    pub fn derivative(&self, x: f64) -> f64 {
        if x > self.up.x_lo && x < self.up.x_hi() {
            self.up.rise_prime(x)
        } else if x > self.down.x_lo && x < self.down.x_hi() {
            -self.down.rise_prime(x)
        } else {
            0.0
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.up.x_lo, self.down.x_hi())
    }
}

/// `phi_j` on a geometric domain with at least `4j` pieces.
pub fn build_profile(domain: &RpDomain, j: usize) -> Result<RampProfile> {
    if domain.geometric_params().is_none() {
        return Err(Error::Unsupported("singular sequences need the geometric family".into()));
    }
    if j == 0 {
        return Err(Error::OutOfRange("j must be positive".into()));
    }
    if domain.n_pieces() < 4 * j {
        return Err(Error::OutOfRange(format!(
            "phi_{j} needs {} pieces, domain has {}",
            4 * j,
            domain.n_pieces()
        )));
    }
    let ramp = |i: usize| {
        let p = domain.piece(i).expect("checked above");
        Ramp {
            x_lo: p.x_lo,
            width: p.width(),
            height: p.height(),
        }
    };
    let plateau_area = domain.pieces[2 * j..4 * j - 1].iter().map(|p| p.area()).sum();
    Ok(RampProfile {
        j,
        up: ramp(2 * j),
        down: ramp(4 * j),
        plateau_area,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighReport {
    pub j: usize,
    pub norm_phi: f64,
    pub norm_phi_prime: f64,
    /// `||phi'|| / ||phi||`, the gradient norm of the normalized `f_j`.
    pub rayleigh: f64,
}

pub fn rayleigh_report(domain: &RpDomain, j: usize) -> Result<RayleighReport> {
    let p = build_profile(domain, j)?;
    let mass = p.plateau_area + p.up.mass() + p.down.mass();
    let energy = p.up.energy() + p.down.energy();
    let norm_phi = mass.sqrt();
    let norm_phi_prime = energy.sqrt();
    Ok(RayleighReport {
        j,
        norm_phi,
        norm_phi_prime,
        rayleigh: norm_phi_prime / norm_phi,
    })
}

/// Least-squares slope of `log(rayleigh)` against `j`.
pub fn log_linear_slope(reports: &[RayleighReport]) -> f64 {
    let n = reports.len() as f64;
    let xs: Vec<f64> = reports.iter().map(|r| r.j as f64).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.rayleigh.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain(alpha: f64, pieces: usize) -> RpDomain {
        RpDomain::build_geometric(0.5, alpha, 1.0, pieces).unwrap()
    }

    /// Composite Gauss–Legendre on each piece, in x only (the profile is
    /// constant across each piece's height).
    fn numeric_norms(d: &RpDomain, p: &RampProfile) -> (f64, f64) {
        let (nodes, weights) = crate::quadrature::gauss_legendre(24);
        let mut m = 0.0;
        let mut e = 0.0;
        for piece in &d.pieces {
            let (a, b) = (piece.x_lo, piece.x_hi);
            for (t, w) in nodes.iter().zip(&weights) {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
                let ww = 0.5 * (b - a) * w * piece.height();
                m += ww * p.value(x).powi(2);
                e += ww * p.derivative(x).powi(2);
            }
        }
        (m.sqrt(), e.sqrt())
    }

    #[test]
    fn profile_shape() {
        let d = domain(4.0, 16);
        let p = build_profile(&d, 3).unwrap();
        let room = d.piece(7).unwrap();
        assert_eq!(p.value(0.5 * (room.x_lo + room.x_hi)), 1.0);
        assert_eq!(p.value(d.piece(6).unwrap().x_lo), 0.0);
        assert_eq!(p.value(d.piece(12).unwrap().x_hi), 0.0);
        let (lo, hi) = p.support();
        assert_eq!(lo, d.piece(5).unwrap().x_hi);
        assert_eq!(hi, d.piece(12).unwrap().x_hi);
        assert!(build_profile(&d, 5).is_err());
    }

    #[test]
    fn ramp_slope_bound() {
        let d = domain(4.0, 32);
        for j in 1..=8 {
            let p = build_profile(&d, j).unwrap();
            let w = p.up.width;
            let peak = (0..=1000)
                .map(|i| p.derivative(p.up.x_lo + w * i as f64 / 1000.0).abs())
                .fold(0.0, f64::max);
            let target = 0.5 * PI * 0.5f64.powi(-2 * j as i32);
            assert!((peak / target - 1.0).abs() < 0.1);
            assert!(peak <= target * (1.0 + 1e-12));
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let d = domain(4.0, 16);
        for j in 1..=4 {
            let p = build_profile(&d, j).unwrap();
            let r = rayleigh_report(&d, j).unwrap();
            let (m, e) = numeric_norms(&d, &p);
            assert!((m / r.norm_phi - 1.0).abs() < 1e-10, "j {j}");
            assert!((e / r.norm_phi_prime - 1.0).abs() < 1e-10, "j {j}");
            assert!(r.norm_phi.powi(2) >= p.plateau_area);
            let expect = d.area_upto(4 * j - 1).unwrap() - d.area_upto(2 * j).unwrap();
            assert!((p.plateau_area - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn norm_scales_like_c_2j() {
        let d = domain(4.0, 32);
        for j in 2..=8 {
            let r = rayleigh_report(&d, j).unwrap();
            let s = r.norm_phi / 0.5f64.powi(2 * j as i32);
            assert!(s > 0.5 && s < 1.5, "j {j}: {s}");
        }
    }

    #[test]
    fn decay_rate_for_alpha_above_three() {
        let d = domain(4.0, 40);
        let reps: Vec<_> = (3..=8).map(|j| rayleigh_report(&d, j).unwrap()).collect();
        for w in reps.windows(2) {
            let ratio = w[1].rayleigh / w[0].rayleigh;
            assert!((ratio / 0.5 - 1.0).abs() < 0.05, "{ratio}");
        }
        let slope = log_linear_slope(&reps);
        assert!((slope / -(2f64.ln()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn growth_for_alpha_below_three() {
        let d = RpDomain::build_geometric(0.5, 2.0, 0.5, 40).unwrap();
        let reps: Vec<_> = (2..=10).map(|j| rayleigh_report(&d, j).unwrap()).collect();
        assert!(reps.windows(2).all(|w| w[1].rayleigh > w[0].rayleigh));
    }

    #[test]
    fn normalized_function_has_unit_norm() {
        let d = domain(4.0, 16);
        let r = rayleigh_report(&d, 2).unwrap();
        let (m, e) = numeric_norms(&d, &build_profile(&d, 2).unwrap());
        assert!((m / r.norm_phi - 1.0).abs() < 1e-12);
        assert!((e / r.norm_phi - r.rayleigh).abs() < 1e-9 * r.rayleigh);
    }
}
