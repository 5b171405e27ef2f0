//! Defect functionals, the direct-method extractor and the checks built on them.
//!
//! The extracted limit T is materialised pointwise: every check that needs
//! T at some point runs an independent extraction there.

mod defect;
mod extract;
mod verify;

pub use defect::{defect_general, defect_mixed, sup_defect};
pub use extract::{extract, hyers_iterate, ExtractedMap, ExtractionParams, ExtractionResult, OVERFLOW_GUARD};
pub use verify::{
    bound_slack, chain_is_constant, check_r_homogeneous, scaled_defect_chain, symmetrizer, verify_bound, verify_hom,
    verify_restricted_mu, BoundReport, ChainStep, HomReport, HomResiduals, RestrictedMuReport,
};

use serde::Serialize;

use crate::algebra::Sampling;
use crate::controls::ControlDescriptor;
use crate::error::{Error, Result};
use crate::maps::{MapDescriptor, MatrixMap};
use crate::matrix::Complex;
use crate::witness::Witness;

/// Fixed unimodular sample: 1, −1, i, e^{iπ/4}, e^{i}.
pub const S1_SAMPLE: [Complex; 5] = [
    Complex::new(1.0, 0.0),
    Complex::new(-1.0, 0.0),
    Complex::new(0.0, 1.0),
    Complex::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    Complex::new(0.540_302_305_868_139_8, 0.841_470_984_807_896_5),
];

/// Scalars for the general-λ homogeneity check.
pub const LAMBDA_SAMPLE: [Complex; 3] = [Complex::new(2.0, 0.0), Complex::new(-0.5, 1.2), Complex::new(0.0, 10.0)];

/// Real pairs (s, t) for the check T((s+it)x) = sT(x) + itT(x).
pub const REAL_PAIRS: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (2.0, -3.0), (0.5, 0.5)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSource {
    /// Supplied by the caller.
    Given,
    /// Constant control set to the measured sup-defect.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub scenario: String,
    pub sup_defect: f64,
    pub control: ControlDescriptor,
    pub control_source: ControlSource,
    pub samples: usize,
    pub bound_margin_min: f64,
    pub slack_policy: &'static str,
    pub bound: BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hom_residuals: Option<HomResiduals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restricted_mu: Option<RestrictedMuReport>,
    pub hom_tol: f64,
    pub pass: bool,
    pub failures: Vec<String>,
    pub witnesses: Vec<Witness>,
}

pub const SLACK_POLICY: &str = "additive 1e-9*(1+phi_tilde)";

fn failure_witness(e: &Error) -> Option<Witness> {
    match e {
        Error::NotConverged { input, last_delta, .. } => {
            Some(Witness::new("extraction_converged", *last_delta, f64::NAN).input("x", input))
        }
        _ => None,
    }
}

/// Full stability assessment of h: sup-defect, bound certification against
/// `control` (or a constant control calibrated to the sup-defect when none
/// is given), homomorphism residuals of the extracted T, and the restricted-μ
/// consequences.
pub fn assess_stability(
    scenario: &str,
    h: &MapDescriptor,
    control: Option<&ControlDescriptor>,
    sampling: &Sampling,
    params: &ExtractionParams,
    hom_tol: f64,
) -> Result<StabilityReport> {
    let algebra = h.domain();
    let sup = sup_defect(h, algebra, &S1_SAMPLE, sampling)?;
    let (control, control_source) = match control {
        Some(c) => {
            c.validate()?;
            (c.clone(), ControlSource::Given)
        }
        None => (ControlDescriptor::constant(sup)?, ControlSource::Calibrated),
    };

    let mut failures = Vec::new();
    let mut witnesses = Vec::new();

    let bound = verify_bound(h, &control, algebra, sampling, params)?;
    if !bound.pass {
        failures.push(format!("bound: {}", bound.failure.clone().unwrap_or_default()));
        witnesses.extend(bound.witness.clone());
    }

    let t = ExtractedMap::new(h, *params);
    let hom_residuals = match verify_hom(&t, algebra, sampling, hom_tol) {
        Ok(rep) => {
            if !rep.pass {
                failures.push(format!("homomorphism residual above {hom_tol:e}"));
                witnesses.extend(rep.witness.clone());
            }
            Some(rep.residuals)
        }
        Err(e @ (Error::NotConverged { .. } | Error::Overflow(_))) => {
            failures.push(format!("homomorphism check: {e}"));
            witnesses.extend(failure_witness(&e));
            None
        }
        Err(e) => return Err(e),
    };

    let restricted_mu = match verify_restricted_mu(h, algebra, sampling, params) {
        Ok(rep) => {
            let worst = rep.i_homogeneity.max(rep.c_linearity);
            if worst > hom_tol {
                failures.push(format!("restricted-mu residual {worst:e} above {hom_tol:e}"));
            }
            Some(rep)
        }
        Err(e @ (Error::NotConverged { .. } | Error::Overflow(_))) => {
            failures.push(format!("restricted-mu check: {e}"));
            witnesses.extend(failure_witness(&e));
            None
        }
        Err(e) => return Err(e),
    };

    Ok(StabilityReport {
        scenario: scenario.to_string(),
        sup_defect: sup,
        control,
        control_source,
        samples: sampling.trials,
        bound_margin_min: bound.min_margin,
        slack_policy: SLACK_POLICY,
        bound,
        hom_residuals,
        restricted_mu,
        hom_tol,
        pass: failures.is_empty(),
        failures,
        witnesses,
    })
}

/// Convenience: is `t` exactly additive on a pair, within `tol`?
pub fn additivity_residual<M: MatrixMap + ?Sized>(
    t: &M,
    x: &crate::matrix::CMatrix,
    y: &crate::matrix::CMatrix,
) -> Result<f64> {
    Ok(t.eval(&x.add(y)?)?.sub(&t.eval(x)?)?.sub(&t.eval(y)?)?.spectral_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_full;
    use std::sync::Arc;

    #[test]
    fn s1_sample_is_unimodular() {
        for mu in S1_SAMPLE {
            assert!((mu.norm() - 1.0).abs() <= 1e-15);
        }
        assert!((S1_SAMPLE[4] - Complex::from_polar(1.0, 1.0)).norm() <= 1e-16);
    }

    #[test]
    fn assess_truncated_map() {
        let a = Arc::new(make_full(2).unwrap());
        let h = crate::maps::make_example23(MapDescriptor::transpose(a).unwrap()).unwrap();
        let four = ControlDescriptor::constant(4.0).unwrap();
        let rep =
            assess_stability("t", &h, Some(&four), &Sampling::new(100, 2, 1.0), &Default::default(), 1e-10).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
        assert!(rep.sup_defect <= 4.0);
        assert_eq!(rep.control_source, ControlSource::Given);

        let half = ControlDescriptor::constant(0.5).unwrap();
        let rep =
            assess_stability("t", &h, Some(&half), &Sampling::new(100, 2, 1.0), &Default::default(), 1e-10).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.witnesses[0].check, "bound");
    }

    #[test]
    fn assess_calibrates_control_for_noise() {
        let a = Arc::new(make_full(2).unwrap());
        let inner = MapDescriptor::identity(a).unwrap();
        let h = MapDescriptor::ball_noise(inner, 0.05, 0.5, 2.0, 4).unwrap();
        let rep = assess_stability("n", &h, None, &Sampling::new(100, 2, 1.0), &Default::default(), 1e-10).unwrap();
        assert_eq!(rep.control_source, ControlSource::Calibrated);
        assert!(rep.pass, "{:?}", rep.failures);
    }
}
