//! Writing a complex scalar as a sum of three unimodular numbers.
//!
//! For λ ≠ 0, pick the smallest integer M > 4|λ|; then z = 3λ/M has |z| < 3/4
//! and z = μ₁ + μ₂ + μ₃ with |μᵢ| = 1, so λ = (M/3)(μ₁ + μ₂ + μ₃). The split is
//! constructive: μ₁ points along z, and the remainder w = z − μ₁ (of modulus
//! ||z| − 1| ≤ 2) is the sum of the conjugate pair e^{i(arg w ± arccos(|w|/2))}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::MatrixMap;
use crate::matrix::{complex_literal, CMatrix, Complex, ONE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnimodularTriple {
    #[serde(with = "complex_literal")]
    pub mu1: Complex,
    #[serde(with = "complex_literal")]
    pub mu2: Complex,
    #[serde(with = "complex_literal")]
    pub mu3: Complex,
    #[serde(with = "complex_literal")]
    pub target: Complex,
}

impl UnimodularTriple {
    pub fn sum(&self) -> Complex {
        self.mu1 + self.mu2 + self.mu3
    }

    /// max_i ||μᵢ| − 1|.
    pub fn modulus_defect(&self) -> f64 {
        [self.mu1, self.mu2, self.mu3].iter().map(|m| (m.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn sum_defect(&self) -> f64 {
        (self.sum() - self.target).norm()
    }

    pub fn mus(&self) -> [Complex; 3] {
        [self.mu1, self.mu2, self.mu3]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaDecomposition {
    #[serde(with = "complex_literal")]
    pub lambda: Complex,
    #[serde(rename = "M")]
    pub m: u64,
    pub triple: UnimodularTriple,
}

impl LambdaDecomposition {
    /// |(M/3)(μ₁ + μ₂ + μ₃) − λ|.
    pub fn reconstruction_residual(&self) -> f64 {
        (self.triple.sum() * (self.m as f64 / 3.0) - self.lambda).norm()
    }
}

/// Smallest integer M with M > 4|λ|.
pub fn min_scaling_integer(lambda: Complex) -> Result<u64> {
    let r = lambda.norm();
    if r == 0.0 {
        return Err(Error::invalid("scaling integer is undefined for lambda = 0"));
    }
    if !r.is_finite() || 4.0 * r >= 9.0e15 {
        return Err(Error::invalid(format!("|lambda| = {r} is too large for an exact scaling integer")));
    }
    Ok((4.0 * r).floor() as u64 + 1)
}

/// μ₁ + μ₂ + μ₃ = z with |μᵢ| = 1, for |z| ≤ 3.
///
/// Tie-breaks: μ₁ = 1 when z = 0; when |z| = 1 the remainder vanishes and
/// μ₂, μ₃ = ±i·μ₁.
pub fn unimodular_triple(z: Complex) -> Result<UnimodularTriple> {
    let r = z.norm();
    if r.is_nan() || r > 3.0 {
        return Err(Error::invalid(format!("|z| = {r} exceeds 3; no three unimodulars sum to it")));
    }
    let mu1 = if r == 0.0 { ONE } else { z / r };
    // w = z − μ₁ = (r − 1)·μ₁, so arg w is arg μ₁ or arg μ₁ + π.
    let sign = if r >= 1.0 { 1.0 } else { -1.0 };
    let c = ((r - 1.0).abs() / 2.0).min(1.0);
    let s = ((1.0 - c) * (1.0 + c)).sqrt();
    let mu2 = mu1 * Complex::new(sign * c, sign * s);
    let mu3 = mu1 * Complex::new(sign * c, -sign * s);
    Ok(UnimodularTriple { mu1, mu2, mu3, target: z })
}

/// λ = (M/3)(μ₁ + μ₂ + μ₃) with M = min_scaling_integer(λ).
pub fn decompose_lambda(lambda: Complex) -> Result<LambdaDecomposition> {
    let m = min_scaling_integer(lambda)?;
    let triple = unimodular_triple(lambda * (3.0 / m as f64))?;
    Ok(LambdaDecomposition { lambda, m, triple })
}

/// ‖T(λx) − (M/3)(T(μ₁x) + T(μ₂x) + T(μ₃x))‖; for λ = 0 just ‖T(0)‖.
pub fn verify_lambda_action<T: MatrixMap + ?Sized>(t: &T, lambda: Complex, x: &CMatrix) -> Result<f64> {
    if lambda.norm() == 0.0 {
        return Ok(t.eval(&CMatrix::zeros(x.rows(), x.cols()))?.spectral_norm());
    }
    let d = decompose_lambda(lambda)?;
    let lhs = t.eval(&x.scale(lambda))?;
    let mut acc: Option<CMatrix> = None;
    for mu in d.triple.mus() {
        let term = t.eval(&x.scale(mu))?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    let rhs = acc.expect("three terms").scale_real(d.m as f64 / 3.0);
    Ok(lhs.sub(&rhs)?.spectral_norm())
}
