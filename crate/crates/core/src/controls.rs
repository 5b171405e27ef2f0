//! Control functions φ(x, y, z) and their doubling series
//! φ̃ = ½ Σₙ 2⁻ⁿ φ(2ⁿx, 2ⁿy, 2ⁿz).
//!
//! Controls act on norms only. Every supported control has a closed-form φ̃
//! and an exact geometric tail, so bound certification never relies on an
//! unbounded numeric sum.
//!
//! Convention: 0^p := 0 for every p in [0, 1), including p = 0. This keeps
//! φ(0, 0, 0) = 0, consistent with h(0) = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum ControlDescriptor {
    Constant { c: f64 },
    Power { alpha: f64, p: f64 },
    Sum { parts: Vec<ControlDescriptor> },
}

/// Truncated series with a certified remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesEstimate {
    /// ½ Σ_{n<N} 2⁻ⁿ φ(2ⁿ·).
    pub value: f64,
    /// Exact value of the omitted geometric remainder ½ Σ_{n≥N} 2⁻ⁿ φ(2ⁿ·).
    pub geometric_tail: f64,
    /// `geometric_tail` plus a floating-point allowance for the summation, so
    /// that φ̃ ∈ [value, value + tail_bound] holds for the computed numbers.
    pub tail_bound: f64,
}

fn pow0(n: f64, p: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n.powf(p)
    }
}

fn power_sum(nx: f64, ny: f64, nz: f64, p: f64) -> f64 {
    pow0(nx, p) + pow0(ny, p) + pow0(nz, p)
}

fn check_norms(nx: f64, ny: f64, nz: f64) -> Result<()> {
    if [nx, ny, nz].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid(format!("control arguments must be finite norms, got ({nx}, {ny}, {nz})")));
    }
    Ok(())
}

impl ControlDescriptor {
    pub fn constant(c: f64) -> Result<Self> {
        let ctrl = ControlDescriptor::Constant { c };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn power(alpha: f64, p: f64) -> Result<Self> {
        let ctrl = ControlDescriptor::Power { alpha, p };
        ctrl.validate()?;
        Ok(ctrl)
    }

    pub fn sum(parts: Vec<ControlDescriptor>) -> Result<Self> {
        let ctrl = ControlDescriptor::Sum { parts };
        ctrl.validate()?;
        Ok(ctrl)
    }

    /// Admissibility: nonnegative finite coefficients and p in [0, 1).
    pub fn validate(&self) -> Result<()> {
        match self {
            ControlDescriptor::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::invalid(format!("constant control needs c >= 0, got {c}")));
                }
            }
            ControlDescriptor::Power { alpha, p } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(Error::invalid(format!("power control needs alpha >= 0, got {alpha}")));
                }
                if !(0.0..1.0).contains(p) {
                    return Err(Error::invalid(format!("power control needs p in [0, 1), got {p}")));
                }
            }
            ControlDescriptor::Sum { parts } => {
                for part in parts {
                    part.validate()?;
                }
            }
        }
        Ok(())
    }

    /// φ at the given norms.
    pub fn eval_phi(&self, nx: f64, ny: f64, nz: f64) -> f64 {
        match self {
            ControlDescriptor::Constant { c } => *c,
            ControlDescriptor::Power { alpha, p } => alpha * power_sum(nx, ny, nz, *p),
            ControlDescriptor::Sum { parts } => parts.iter().map(|c| c.eval_phi(nx, ny, nz)).sum(),
        }
    }

    /// Closed form of φ̃: c for a constant, α/(2 − 2^p)·Σ n^p for a power law.
    pub fn eval_tilde(&self, nx: f64, ny: f64, nz: f64) -> Result<f64> {
        self.validate()?;
        check_norms(nx, ny, nz)?;
        Ok(self.tilde_unchecked(nx, ny, nz))
    }

    fn tilde_unchecked(&self, nx: f64, ny: f64, nz: f64) -> f64 {
        match self {
            ControlDescriptor::Constant { c } => *c,
            ControlDescriptor::Power { alpha, p } => alpha / (2.0 - 2f64.powf(*p)) * power_sum(nx, ny, nz, *p),
            ControlDescriptor::Sum { parts } => parts.iter().map(|c| c.tilde_unchecked(nx, ny, nz)).sum(),
        }
    }

    /// First `n_terms` terms of the doubling series, summed directly, with
    /// the geometric remainder (ratio 1/2 for constants, 2^{p−1} for power laws).
    pub fn eval_tilde_series(&self, nx: f64, ny: f64, nz: f64, n_terms: usize) -> Result<SeriesEstimate> {
        self.validate()?;
        check_norms(nx, ny, nz)?;
        if n_terms == 0 {
            return Err(Error::invalid("series needs at least one term"));
        }
        // Neumaier-compensated sum of ½·2⁻ⁿ·φ(2ⁿ·).
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for n in 0..n_terms {
            let scale = 2f64.powi(n as i32);
            let term = 0.5 / scale * self.eval_phi(scale * nx, scale * ny, scale * nz);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        let value = sum + comp;
        let geometric_tail = self.tail(nx, ny, nz, n_terms);
        // Each term carries a few ulps from powf and the products; the
        // compensated sum adds at most two more.
        let allowance = 8.0 * f64::EPSILON * value;
        Ok(SeriesEstimate { value, geometric_tail, tail_bound: geometric_tail + allowance })
    }

    fn tail(&self, nx: f64, ny: f64, nz: f64, n_terms: usize) -> f64 {
        match self {
            ControlDescriptor::Constant { c } => c * 2f64.powi(-(n_terms as i32)),
            ControlDescriptor::Power { alpha, p } => {
                let ratio = 2f64.powf(p - 1.0);
                let first_omitted = 0.5 * alpha * power_sum(nx, ny, nz, *p) * ratio.powi(n_terms as i32);
                first_omitted / (1.0 - ratio)
            }
            ControlDescriptor::Sum { parts } => parts.iter().map(|c| c.tail(nx, ny, nz, n_terms)).sum(),
        }
    }
}

/// α/(1 − 2^{p−1})·‖x‖^p, the power-law bound on ‖h(x) − T(x)‖.
pub fn corollary_bound(alpha: f64, p: f64, nx: f64) -> Result<f64> {
    if p >= 1.0 {
        return Err(Error::invalid(format!("bound needs p < 1, got {p}")));
    }
    ControlDescriptor::power(alpha, p)?;
    check_norms(nx, 0.0, 0.0)?;
    Ok(alpha / (1.0 - 2f64.powf(p - 1.0)) * pow0(nx, p))
}
