//! Executes one configured scenario and assembles its report.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::algebra::{AlgebraKind, ClosureReport};
use crate::config::{MapKind, ScenarioConfig, ScenarioKind};
use crate::controls::ControlDescriptor;
use crate::error::{Error, Result};
use crate::maps::make_example23;
use crate::matrix::{complex_literal, Complex};
use crate::scalars::decompose_lambda;
use crate::stability::{assess_stability, StabilityReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit status of a run: 0 pass, 1 a certified check failed, 2 invalid config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    Fail = 1,
    ConfigError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn from_pass(pass: bool) -> Self {
        if pass {
            ExitStatus::Pass
        } else {
            ExitStatus::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosurePayload {
    pub closure: ClosureReport,
    /// max ‖x² − (tr(x²)/n)·I‖ over samples; spin factors only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_residual: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposePayload {
    #[serde(with = "complex_literal")]
    pub lambda: Complex,
    #[serde(rename = "M")]
    pub m: u64,
    #[serde(with = "complex_literal")]
    pub mu1: Complex,
    #[serde(with = "complex_literal")]
    pub mu2: Complex,
    #[serde(with = "complex_literal")]
    pub mu3: Complex,
    pub reconstruction_residual: f64,
    pub modulus_defect: f64,
    pub pass: bool,
}

/// Unimodular decomposition of λ, checked at 1e-12 (relative to 1 + |λ|
/// for the reconstruction).
pub fn decompose_payload(lambda: Complex) -> Result<DecomposePayload> {
    let d = decompose_lambda(lambda)?;
    let reconstruction_residual = d.reconstruction_residual();
    let modulus_defect = d.triple.modulus_defect();
    Ok(DecomposePayload {
        lambda,
        m: d.m,
        mu1: d.triple.mu1,
        mu2: d.triple.mu2,
        mu3: d.triple.mu3,
        reconstruction_residual,
        modulus_defect,
        pass: modulus_defect <= 1e-12 && reconstruction_residual <= 1e-12 * (1.0 + lambda.norm()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Payload {
    Closure(ClosurePayload),
    Stability(Box<StabilityReport>),
    Decompose(DecomposePayload),
    Failed { reason: String },
}

impl Payload {
    pub fn pass(&self) -> bool {
        match self {
            Payload::Closure(p) => p.pass,
            Payload::Stability(p) => p.pass,
            Payload::Decompose(p) => p.pass,
            Payload::Failed { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub version: &'static str,
    pub scenario: ScenarioKind,
    pub config: ScenarioConfig,
    pub payload: Payload,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::from_pass(self.pass)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall time in the report. Off by default: timed reports are
    /// not byte-reproducible.
    pub timing: bool,
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Runs the configured scenario. Errors are configuration errors only;
/// numeric trouble during execution (overflow, non-convergence) marks the
/// report failed with a reason.
pub fn run(config: &ScenarioConfig, opts: RunOptions) -> Result<RunReport> {
    let start = Instant::now();
    config.validate()?;
    let payload = match execute(config)? {
        Ok(p) => p,
        Err(e) => Payload::Failed { reason: e.to_string() },
    };
    let pass = payload.pass();
    Ok(RunReport {
        version: VERSION,
        scenario: config.scenario,
        config: config.clone(),
        payload,
        pass,
        wall_time_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

// Outer error: invalid config. Inner error: the scenario itself broke down.
fn execute(config: &ScenarioConfig) -> Result<Result<Payload>> {
    if let Some(c) = &config.control {
        c.validate().map_err(as_config)?;
    }
    if config.scenario == ScenarioKind::Decompose {
        let lambda = config.lambda.ok_or_else(|| Error::Config("scenario decompose needs \"lambda\"".into()))?;
        return Ok(Ok(Payload::Decompose(decompose_payload(lambda).map_err(as_config)?)));
    }

    let algebra_cfg = config.algebra.as_ref().ok_or_else(|| Error::Config("missing \"algebra\"".into()))?;
    let algebra = Arc::new(algebra_cfg.build().map_err(as_config)?);

    match config.scenario {
        ScenarioKind::Closure => {
            let closure = algebra.verify_closure_with(&config.sampling, config.tolerances.closure);
            let spin_residual = match algebra.kind() {
                AlgebraKind::CartanIV => Some(algebra.verify_spin_property_with(&config.sampling).map_err(as_config)?),
                _ => None,
            };
            let pass = closure.pass && spin_residual.is_none_or(|r| r <= config.tolerances.closure);
            Ok(Ok(Payload::Closure(ClosurePayload { closure, spin_residual, pass })))
        }
        ScenarioKind::Stability | ScenarioKind::Example23 => {
            let map_cfg = config.map.as_ref().ok_or_else(|| Error::Config("missing \"map\"".into()))?;
            let mut h = map_cfg.build(&algebra).map_err(as_config)?;
            let mut control = config.control.clone();
            let example23 = config.scenario == ScenarioKind::Example23;
            if example23 {
                if !matches!(map_cfg.variant, MapKind::ExactUv | MapKind::Transpose) {
                    return Err(Error::Config("example23 needs an exact_uv or transpose map".into()));
                }
                h = make_example23(h).map_err(as_config)?;
                control.get_or_insert(ControlDescriptor::Constant { c: 4.0 });
            }
            let report = assess_stability(
                config.scenario.name(),
                &h,
                control.as_ref(),
                &config.sampling,
                &config.extraction,
                config.tolerances.hom,
            );
            Ok(report.map(|mut r| {
                if example23 {
                    if r.sup_defect > 4.0 {
                        r.failures.push(format!("sup-defect {:e} exceeds 4", r.sup_defect));
                    }
                    if r.bound.max_extracted_norm != 0.0 {
                        r.failures.push(format!(
                            "extracted map is not identically zero (max norm {:e})",
                            r.bound.max_extracted_norm
                        ));
                    }
                    r.pass = r.failures.is_empty();
                }
                Payload::Stability(Box::new(r))
            }))
        }
        ScenarioKind::Decompose => unreachable!("handled above"),
    }
}
