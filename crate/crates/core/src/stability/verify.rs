use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{argmax, AlgebraDescriptor, Sampling};
use crate::controls::ControlDescriptor;
use crate::error::{Error, Result};
use crate::maps::MatrixMap;
use crate::matrix::{CMatrix, Complex};
use crate::scalars::verify_lambda_action;
use crate::witness::Witness;

use super::extract::{extract, ExtractedMap, ExtractionParams, OVERFLOW_GUARD};
use super::{LAMBDA_SAMPLE, REAL_PAIRS, S1_SAMPLE};

/// Additive slack 1e-9·(1 + φ̃) separating bound violations from rounding.
pub fn bound_slack(tilde: f64) -> f64 {
    1e-9 * (1.0 + tilde)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub samples: usize,
    /// min over samples of φ̃(x, x, 0) − ‖h(x) − T(x)‖.
    pub min_margin: f64,
    pub max_error: f64,
    pub max_extracted_norm: f64,
    pub nonconverged: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

struct BoundSample {
    margin: f64,
    error: f64,
    t_norm: f64,
    // (reason, witness, severity); larger severity is reported first.
    fail: Option<(String, Witness, f64)>,
}

/// Checks ‖h(x) − T(x)‖ ≤ φ̃(‖x‖, ‖x‖, 0) + slack at every sampled x, with
/// T(x) extracted pointwise. Non-convergence or overflow at a sample fails
/// the check and is reported with that sample as witness.
pub fn verify_bound<M: MatrixMap + ?Sized>(
    h: &M,
    ctrl: &ControlDescriptor,
    algebra: &AlgebraDescriptor,
    sampling: &Sampling,
    params: &ExtractionParams,
) -> Result<BoundReport> {
    ctrl.validate()?;
    let outcomes: Vec<BoundSample> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|i| -> Result<BoundSample> {
            let x = algebra.sample_indexed(sampling, i);
            let xn = x.spectral_norm();
            let tilde = ctrl.eval_tilde(xn, xn, 0.0)?;
            let slack = bound_slack(tilde);
            let r = match extract(h, &x, params) {
                Ok(r) => r,
                Err(e @ Error::Overflow(_)) => {
                    let w = Witness::new("extraction_overflow", f64::INFINITY, tilde).input("x", &x);
                    return Ok(BoundSample {
                        margin: f64::NEG_INFINITY,
                        error: f64::INFINITY,
                        t_norm: f64::NAN,
                        fail: Some((e.to_string(), w, f64::INFINITY)),
                    });
                }
                Err(e) => return Err(e),
            };
            if !r.converged {
                let last = r.deltas.last().copied().unwrap_or(f64::NAN);
                let w = Witness::new("extraction_converged", last, params.tol).input("x", &x);
                return Ok(BoundSample {
                    margin: f64::NEG_INFINITY,
                    error: f64::NAN,
                    t_norm: r.value.spectral_norm(),
                    fail: Some((format!("extraction did not converge in {} steps", r.n_used), w, f64::INFINITY)),
                });
            }
            let error = h.eval(&x)?.distance(&r.value)?;
            let margin = tilde - error;
            let fail = (margin < -slack).then(|| {
                let w = Witness::new("bound", error, tilde + slack).input("x", &x);
                ("‖h(x) − T(x)‖ exceeds φ̃(x, x, 0)".to_string(), w, -margin)
            });
            Ok(BoundSample { margin, error, t_norm: r.value.spectral_norm(), fail })
        })
        .collect::<Result<_>>()?;

    let nonconverged = outcomes.iter().filter(|o| o.margin == f64::NEG_INFINITY).count();
    let worst_fail = outcomes.iter().filter_map(|o| o.fail.as_ref()).fold(
        None,
        |best: Option<&(String, Witness, f64)>, f| match best {
            Some(b) if b.2 >= f.2 => Some(b),
            _ => Some(f),
        },
    );
    Ok(BoundReport {
        samples: sampling.trials,
        min_margin: outcomes.iter().map(|o| o.margin).fold(f64::INFINITY, f64::min),
        max_error: outcomes.iter().map(|o| o.error).filter(|e| !e.is_nan()).fold(0.0, f64::max),
        max_extracted_norm: outcomes.iter().map(|o| o.t_norm).filter(|e| !e.is_nan()).fold(0.0, f64::max),
        nonconverged,
        pass: worst_fail.is_none(),
        failure: worst_fail.map(|f| f.0.clone()),
        witness: worst_fail.map(|f| f.1.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomResiduals {
    pub additivity: f64,
    pub s1_homogeneity: f64,
    pub general_lambda: f64,
    pub triple: f64,
}

impl HomResiduals {
    pub fn max(&self) -> f64 {
        self.additivity.max(self.s1_homogeneity).max(self.general_lambda).max(self.triple)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomReport {
    pub residuals: HomResiduals,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Max residuals of additivity, S¹-homogeneity, general-λ homogeneity (via
/// the unimodular decomposition) and the triple identity over samples.
/// Sample i uses stream indices 3i (x), 3i+1 (y), 3i+2 (z).
pub fn verify_hom<M: MatrixMap + ?Sized>(
    t: &M,
    algebra: &AlgebraDescriptor,
    sampling: &Sampling,
    tol: f64,
) -> Result<HomReport> {
    let rows: Vec<([f64; 4], [Witness; 4])> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = algebra.sample_indexed(sampling, 3 * i);
            let y = algebra.sample_indexed(sampling, 3 * i + 1);
            let z = algebra.sample_indexed(sampling, 3 * i + 2);
            let tx = t.eval(&x)?;

            let add = t.eval(&x.add(&y)?)?.sub(&tx)?.sub(&t.eval(&y)?)?.spectral_norm();

            let (mut s1, mut s1_mu) = (0.0f64, S1_SAMPLE[0]);
            for &mu in &S1_SAMPLE {
                let r = t.eval(&x.scale(mu))?.sub(&tx.scale(mu))?.spectral_norm();
                if r > s1 {
                    (s1, s1_mu) = (r, mu);
                }
            }

            let (mut gl, mut gl_lambda) = (0.0f64, LAMBDA_SAMPLE[0]);
            for &lambda in &LAMBDA_SAMPLE {
                let r = verify_lambda_action(t, lambda, &x)?;
                if r > gl {
                    (gl, gl_lambda) = (r, lambda);
                }
            }

            let tri = t.eval(&z.triple())?.sub(&t.eval(&z)?.triple())?.spectral_norm();

            let witnesses = [
                Witness::new("additivity", add, tol).input("x", &x).input("y", &y),
                Witness::new("s1_homogeneity", s1, tol).input("x", &x).scalar(s1_mu),
                Witness::new("general_lambda", gl, tol).input("x", &x).scalar(gl_lambda),
                Witness::new("triple", tri, tol).input("z", &z),
            ];
            Ok(([add, s1, gl, tri], witnesses))
        })
        .collect::<Result<_>>()?;

    let mut maxima = [0.0f64; 4];
    let mut worst: Option<&Witness> = None;
    for k in 0..4 {
        let column: Vec<(f64, &Witness)> = rows.iter().map(|(r, w)| (r[k], &w[k])).collect();
        if let Some((m, w)) = argmax(&column) {
            maxima[k] = *m;
            if *m > tol && worst.is_none_or(|cur| cur.residual < *m) {
                worst = Some(w);
            }
        }
    }
    let residuals =
        HomResiduals { additivity: maxima[0], s1_homogeneity: maxima[1], general_lambda: maxima[2], triple: maxima[3] };
    Ok(HomReport { residuals, tol, pass: worst.is_none(), witness: worst.cloned() })
}

/// max over samples of ‖T(r·x) − r·T(x)‖.
pub fn check_r_homogeneous<M: MatrixMap + ?Sized>(
    t: &M,
    r: f64,
    algebra: &AlgebraDescriptor,
    sampling: &Sampling,
) -> Result<f64> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid(format!("homogeneity factor must exceed 1, got {r}")));
    }
    let vals: Vec<f64> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = algebra.sample_indexed(sampling, i);
            Ok(t.eval(&x.scale_real(r))?.sub(&t.eval(&x)?.scale_real(r))?.spectral_norm())
        })
        .collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainStep {
    pub n: usize,
    /// ‖T(w w* w) − T(w)T(w)*T(w)‖ at w = rⁿz.
    pub raw: f64,
    /// raw / r^{3n}: constant in n for r-homogeneous T.
    pub cubic_scaled: f64,
    /// raw / rⁿ: the weaker scaling that dominates the cubic one.
    pub linear_scaled: f64,
}

/// Triple defect of T along the ray rⁿz, n = 0..=n_max, rescaled by r^{−3n}
/// (and, for comparison, r^{−n}).
pub fn scaled_defect_chain<M: MatrixMap + ?Sized>(t: &M, z: &CMatrix, r: f64, n_max: usize) -> Result<Vec<ChainStep>> {
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::invalid(format!("chain factor must exceed 1, got {r}")));
    }
    let top = r.powi(3 * n_max as i32) * z.spectral_norm().powi(3);
    if top.is_nan() || top > OVERFLOW_GUARD {
        return Err(Error::Overflow(format!("r^(3·{n_max})·‖z‖³ = {top:e} exceeds {OVERFLOW_GUARD:e}")));
    }
    (0..=n_max)
        .map(|n| {
            let rn = r.powi(n as i32);
            let w = z.scale_real(rn);
            let raw = t.eval(&w.triple())?.sub(&t.eval(&w)?.triple())?.spectral_norm();
            Ok(ChainStep { n, raw, cubic_scaled: raw / (rn * rn * rn), linear_scaled: raw / rn })
        })
        .collect()
}

/// True when every cubic-scaled d_n is within 1e-9·(1 + d_0) of d_0.
pub fn chain_is_constant(chain: &[ChainStep]) -> bool {
    let d0 = chain.first().map_or(0.0, |c| c.cubic_scaled);
    chain.iter().all(|c| (c.cubic_scaled - d0).abs() <= 1e-9 * (1.0 + d0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedMuReport {
    /// max ‖T(ix) − iT(x)‖.
    pub i_homogeneity: f64,
    /// max over real pairs (s, t) of ‖T((s+it)x) − sT(x) − itT(x)‖.
    pub c_linearity: f64,
}

/// Extracts T from h and checks the consequences of the μ ∈ {1, i} variant:
/// i-homogeneity and complex linearity from real linearity.
pub fn verify_restricted_mu<M: MatrixMap + ?Sized>(
    h: &M,
    algebra: &AlgebraDescriptor,
    sampling: &Sampling,
    params: &ExtractionParams,
) -> Result<RestrictedMuReport> {
    let t = ExtractedMap::new(h, *params);
    let i_unit = Complex::new(0.0, 1.0);
    let rows: Vec<(f64, f64)> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|k| {
            let x = algebra.sample_indexed(sampling, k);
            let tx = t.eval(&x)?;
            let ih = t.eval(&x.scale(i_unit))?.sub(&tx.scale(i_unit))?.spectral_norm();
            let mut cl = 0.0f64;
            for (s, tt) in REAL_PAIRS {
                let lambda = Complex::new(s, tt);
                let r = t
                    .eval(&x.scale(lambda))?
                    .sub(&tx.scale_real(s))?
                    .sub(&tx.scale(Complex::new(0.0, tt)))?
                    .spectral_norm();
                cl = cl.max(r);
            }
            Ok((ih, cl))
        })
        .collect::<Result<_>>()?;
    Ok(RestrictedMuReport {
        i_homogeneity: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        c_linearity: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

/// The 2-homogeneous, non-multiplicative linear map x ↦ x + xᵀ on square matrices.
pub fn symmetrizer(x: &CMatrix) -> Result<CMatrix> {
    x.add(&x.transpose())
}
