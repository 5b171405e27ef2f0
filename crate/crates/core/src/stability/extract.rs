//! The direct method: T(x) = lim 2⁻ⁿ h(2ⁿx).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MatrixMap;
use crate::matrix::CMatrix;

/// Largest admissible 2ⁿ‖x‖ before the iterate is refused.
pub const OVERFLOW_GUARD: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionParams {
    pub tol: f64,
    pub max_n: usize,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self { tol: 1e-12, max_n: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionResult {
    /// Estimate of T(x): the last iterate.
    pub value: CMatrix,
    pub n_used: usize,
    /// ‖T_{n+1}(x) − T_n(x)‖ for each step taken.
    pub deltas: Vec<f64>,
    /// Geometric mean of the last (up to five) consecutive delta ratios.
    pub rate_estimate: f64,
    pub converged: bool,
}

fn pow2(n: usize) -> Result<f64> {
    if n > 1023 {
        return Err(Error::Overflow(format!("2^{n} is not representable")));
    }
    Ok(2f64.powi(n as i32))
}

fn scaled_iterate<M: MatrixMap + ?Sized>(h: &M, x: &CMatrix, x_norm: f64, n: usize) -> Result<CMatrix> {
    let up = pow2(n)?;
    if up * x_norm > OVERFLOW_GUARD {
        return Err(Error::Overflow(format!("2^{n}·‖x‖ = {:e} exceeds {OVERFLOW_GUARD:e}", up * x_norm)));
    }
    Ok(h.eval(&x.scale_real(up))?.scale_real(1.0 / up))
}

/// 2⁻ⁿ·h(2ⁿ·x); n = 0 gives h(x).
pub fn hyers_iterate<M: MatrixMap + ?Sized>(h: &M, x: &CMatrix, n: usize) -> Result<CMatrix> {
    scaled_iterate(h, x, x.spectral_norm(), n)
}

/// Doubles until two consecutive iterates agree within `tol`, or `max_n` steps.
///
/// When the map reports a radius beyond which it is exactly homogeneous, a
/// step only counts as converged once the doubled input has passed that
/// radius: inside it, two iterates can agree by accident (a truncated map
/// agrees with its inner homomorphism until the ball is left), while beyond
/// it every later iterate is equal to the current one.
pub fn extract<M: MatrixMap + ?Sized>(h: &M, x: &CMatrix, params: &ExtractionParams) -> Result<ExtractionResult> {
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(Error::invalid(format!("extraction tolerance must be positive, got {}", params.tol)));
    }
    let x_norm = x.spectral_norm();
    let radius = h.homogeneous_beyond();
    let mut current = scaled_iterate(h, x, x_norm, 0)?;
    let mut deltas = Vec::new();
    let mut converged = false;
    for n in 0..params.max_n {
        let next = scaled_iterate(h, x, x_norm, n + 1)?;
        let delta = next.distance(&current)?;
        deltas.push(delta);
        current = next;
        let settled = match radius {
            Some(r) => x_norm == 0.0 || pow2(n)? * x_norm >= r,
            None => true,
        };
        if delta <= params.tol && settled {
            converged = true;
            break;
        }
    }
    Ok(ExtractionResult {
        value: current,
        n_used: deltas.len(),
        rate_estimate: rate_estimate(&deltas),
        deltas,
        converged,
    })
}

fn rate_estimate(deltas: &[f64]) -> f64 {
    let pairs = deltas.len().saturating_sub(1).min(5);
    let ratios: Vec<f64> =
        deltas[deltas.len() - pairs..].windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    if ratios.is_empty() {
        return 0.0;
    }
    if ratios.contains(&0.0) {
        return 0.0;
    }
    (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp()
}

/// The extracted limit T as a map; each evaluation runs its own extraction.
/// Evaluating at a point where the iteration does not settle yields
/// [`Error::NotConverged`] carrying that point.
pub struct ExtractedMap<'a, M: MatrixMap + ?Sized> {
    pub map: &'a M,
    pub params: ExtractionParams,
}

impl<'a, M: MatrixMap + ?Sized> ExtractedMap<'a, M> {
    pub fn new(map: &'a M, params: ExtractionParams) -> Self {
        Self { map, params }
    }
}

impl<M: MatrixMap + ?Sized> MatrixMap for ExtractedMap<'_, M> {
    fn eval(&self, x: &CMatrix) -> Result<CMatrix> {
        let r = extract(self.map, x, &self.params)?;
        if !r.converged {
            return Err(Error::NotConverged {
                input: Box::new(x.clone()),
                n_used: r.n_used,
                last_delta: r.deltas.last().copied().unwrap_or(f64::NAN),
            });
        }
        Ok(r.value)
    }

    fn homogeneous_beyond(&self) -> Option<f64> {
        Some(0.0)
    }
}
