//! Poincaré control of the tail `T_2M` and the truncation depth `M(lambda)`.

use serde::{Deserialize, Serialize};

use crate::domain::DomainParams;
use crate::error::{Error, Result};

/// The constant `c` in `K(T_2M) <= c C^((3 - alpha) M)`. Its value is not
/// known explicitly, so it is a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    pub c: f64,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

impl TailPolicy {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("tail constant c = {c} must be positive")));
        }
        Ok(Self { c })
    }
}

fn check_compact(params: &DomainParams) -> Result<()> {
    if params.alpha >= 3.0 {
        return Err(Error::InvalidParameter(format!(
            "embedding not compact for alpha = {} >= 3",
            params.alpha
        )));
    }
    Ok(())
}

/// `c C^((3 - alpha) M)`.
pub fn poincare_bound(params: &DomainParams, m: usize, policy: TailPolicy) -> Result<f64> {
    check_compact(params)?;
    Ok(policy.c * params.c.powf((3.0 - params.alpha) * m as f64))
}

/// Truncation depth for a given `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailDepth {
    pub m: usize,
    /// `log(c^2 lambda) / (2 (3 - alpha) log(1/C))`
    pub threshold: f64,
    pub tail_area: f64,
    /// `|Omega| (c^2 lambda)^(-2/(3 - alpha))`, an upper bound for `tail_area`.
    pub area_bound: f64,
}

/// Smallest `M >= 1` with `M > log(c^2 lambda) / (2 (3 - alpha) log(1/C))`,
/// so that `1 / K(T_2M)^2 > lambda`.
pub fn min_m_for_lambda(params: &DomainParams, lambda: f64, policy: TailPolicy) -> Result<TailDepth> {
    check_compact(params)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    let exponent = 3.0 - params.alpha;
    let threshold = (policy.c * policy.c * lambda).ln() / (2.0 * exponent * (1.0 / params.c).ln());
    let m = if threshold < 0.0 {
        1
    } else {
        (threshold.floor() as usize + 1).max(1)
    };
    let tail_area = params.tail_area(m);
    // tail_area(M) <= |Omega| C^(4M) and C^(4M) < C^(4 threshold).
    let area_bound = params.total_area() * (policy.c * policy.c * lambda).powf(-2.0 / exponent);
    debug_assert!(m == 1 || tail_area <= area_bound * (1.0 + 1e-12));
    Ok(TailDepth {
        m,
        threshold,
        tail_area,
        area_bound,
    })
}
