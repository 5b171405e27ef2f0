//! J*-algebras realised as complex spans of matrix bases.
//!
//! A descriptor stores its basis together with a Frobenius-orthonormal copy
//! of it, so projection and membership tests are a single pass of inner
//! products. Residuals are reported in the spectral norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Complex, I, ONE, ZERO};
use crate::rng::{substream, SplitMix64};

/// Smallest admissible singular value of the column-stacked basis.
pub const INDEPENDENCE_FLOOR: f64 = 1e-10;

const SELF_ADJOINT_TOL: f64 = 1e-12;

/// Largest spin system size with a built-in generator family.
pub const MAX_SPIN_GENERATORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraKind {
    Full,
    #[serde(rename = "cartan1")]
    CartanI,
    #[serde(rename = "cartan4")]
    CartanIV,
    Custom,
}

/// How many elements to draw, from which stream, at what norm scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub trials: usize,
    pub seed: u64,
    pub scale: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { trials: 100, seed: 0, scale: 1.0 }
    }
}

impl Sampling {
    pub fn new(trials: usize, seed: u64, scale: f64) -> Self {
        Self { trials, seed, scale }
    }
}

#[derive(Debug, Clone)]
pub struct AlgebraDescriptor {
    kind: AlgebraKind,
    rows: usize,
    cols: usize,
    basis: Vec<CMatrix>,
    orthonormal: Vec<Vec<Complex>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub trials: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Sample attaining the maximum residual.
    pub worst_input: Option<CMatrix>,
}

impl AlgebraDescriptor {
    /// Checks shapes, linear independence and the kind-specific invariants.
    pub fn from_basis(kind: AlgebraKind, basis: Vec<CMatrix>) -> Result<Self> {
        let first = basis.first().ok_or_else(|| Error::invalid("algebra basis is empty"))?;
        let (rows, cols) = first.shape();
        if let Some(b) = basis.iter().find(|b| b.shape() != (rows, cols)) {
            return Err(Error::DimensionMismatch { op: "algebra basis", left: (rows, cols), right: b.shape() });
        }
        let dim = rows * cols;
        if basis.len() > dim {
            return Err(Error::invalid(format!(
                "{} basis elements cannot be independent in a {dim}-dimensional space",
                basis.len()
            )));
        }
        let stacked =
            CMatrix::new(dim, basis.len(), (0..dim).flat_map(|r| basis.iter().map(move |b| b.entries()[r])).collect())?;
        let smin = stacked.min_singular_value();
        if smin <= INDEPENDENCE_FLOOR {
            return Err(Error::invalid(format!(
                "basis is not linearly independent (smallest singular value {smin:e})"
            )));
        }
        if kind == AlgebraKind::CartanIV {
            if rows != cols {
                return Err(Error::invalid("spin factor ambient space must be square"));
            }
            for (j, b) in basis.iter().enumerate() {
                let skew = b.sub(&b.adjoint())?.spectral_norm();
                if skew > SELF_ADJOINT_TOL {
                    return Err(Error::invalid(format!("spin generator {j} is not self-adjoint ({skew:e})")));
                }
            }
        }
        let orthonormal = orthonormalize(&basis);
        Ok(Self { kind, rows, cols, basis, orthonormal })
    }

    /// Custom basis: any linearly independent family of equal-shape matrices.
    pub fn custom(basis: Vec<CMatrix>) -> Result<Self> {
        Self::from_basis(AlgebraKind::Custom, basis)
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn ambient(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The algebra of transposes. Spans of transposed matrix units and of
    /// transposed self-adjoint generators keep their kind.
    pub fn transposed(&self) -> Self {
        let basis = self.basis.iter().map(CMatrix::transpose).collect();
        Self::from_basis(self.kind, basis).expect("transposition preserves independence")
    }

    fn check_shape(&self, x: &CMatrix, op: &'static str) -> Result<()> {
        if x.shape() != self.ambient() {
            return Err(Error::DimensionMismatch { op, left: self.ambient(), right: x.shape() });
        }
        Ok(())
    }

    /// Nearest point of the span in the Frobenius norm.
    pub fn project(&self, x: &CMatrix) -> Result<CMatrix> {
        self.check_shape(x, "project")?;
        let v = x.entries();
        let mut out = vec![ZERO; v.len()];
        for q in &self.orthonormal {
            let coeff: Complex = q.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            for (o, qi) in out.iter_mut().zip(q) {
                *o += coeff * qi;
            }
        }
        CMatrix::new(self.rows, self.cols, out)
    }

    /// Spectral norm of x minus its projection onto the span.
    pub fn membership_residual(&self, x: &CMatrix) -> Result<f64> {
        let p = self.project(x)?;
        Ok(x.sub(&p)?.spectral_norm())
    }

    /// Deterministic random element: complex Gaussian coefficients on the
    /// basis, rescaled to spectral norm `scale * u` with u uniform in (0, 2).
    pub fn sample(&self, seed: u64, scale: f64) -> CMatrix {
        let mut rng = SplitMix64::new(seed);
        loop {
            let mut acc = CMatrix::zeros(self.rows, self.cols);
            for b in &self.basis {
                let c = rng.complex_gaussian();
                acc = acc.add(&b.scale(c)).expect("basis shapes agree");
            }
            let norm = acc.spectral_norm();
            let u = 2.0 * rng.uniform();
            if norm > 0.0 {
                return acc.scale_real(scale * u / norm);
            }
        }
    }

    /// The `index`-th sample of the stream keyed by `sampling.seed`.
    pub fn sample_indexed(&self, sampling: &Sampling, index: u64) -> CMatrix {
        self.sample(substream(sampling.seed, index), sampling.scale)
    }

    /// Default-stream closure check (seed 0, scale 1).
    pub fn verify_closure(&self, trials: usize, tol: f64) -> ClosureReport {
        self.verify_closure_with(&Sampling::new(trials, 0, 1.0), tol)
    }

    /// Max over samples of the distance from x x* x to the span.
    pub fn verify_closure_with(&self, sampling: &Sampling, tol: f64) -> ClosureReport {
        let results: Vec<(f64, CMatrix)> = (0..sampling.trials as u64)
            .into_par_iter()
            .map(|i| {
                let x = self.sample_indexed(sampling, i);
                let r = self.membership_residual(&x.triple()).expect("sample has ambient shape");
                (r, x)
            })
            .collect();
        let worst = argmax(&results);
        let max_residual = worst.map_or(0.0, |(r, _)| *r);
        ClosureReport {
            trials: sampling.trials,
            max_residual,
            tol,
            pass: max_residual <= tol,
            worst_input: worst.map(|(_, x)| x.clone()),
        }
    }

    /// Max over samples of ‖x² − (tr(x²)/dim)·I‖. Spin factors only.
    pub fn verify_spin_property(&self, trials: usize) -> Result<f64> {
        self.verify_spin_property_with(&Sampling::new(trials, 0, 1.0))
    }

    pub fn verify_spin_property_with(&self, sampling: &Sampling) -> Result<f64> {
        if self.kind != AlgebraKind::CartanIV {
            return Err(Error::invalid(format!("spin property needs a cartan4 algebra, got {:?}", self.kind)));
        }
        let residuals: Vec<f64> = (0..sampling.trials as u64)
            .into_par_iter()
            .map(|i| spin_residual(&self.sample_indexed(sampling, i)))
            .collect();
        Ok(residuals.into_iter().fold(0.0, f64::max))
    }
}

/// ‖x² − (tr(x²)/n)·I‖ for a square x.
pub fn spin_residual(x: &CMatrix) -> f64 {
    let sq = x.matmul(x).expect("square");
    let n = x.rows();
    let scalar = sq.trace().expect("square") / n as f64;
    sq.sub(&CMatrix::identity(n).scale(scalar)).expect("square").spectral_norm()
}

pub(crate) fn argmax<T>(items: &[(f64, T)]) -> Option<&(f64, T)> {
    // First index wins ties, so the result is independent of scheduling.
    items.iter().fold(None, |best: Option<&(f64, T)>, item| match best {
        Some(b) if b.0 >= item.0 => Some(b),
        _ => Some(item),
    })
}

/// Modified Gram-Schmidt, applied twice, on vectorised matrices.
fn orthonormalize(basis: &[CMatrix]) -> Vec<Vec<Complex>> {
    let mut out: Vec<Vec<Complex>> = Vec::with_capacity(basis.len());
    for b in basis {
        let mut v = b.entries().to_vec();
        for _ in 0..2 {
            for q in &out {
                let proj: Complex = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        out.push(v.into_iter().map(|z| z / norm).collect());
    }
    out
}

fn matrix_units(n: usize, m: usize) -> Vec<CMatrix> {
    (0..n).flat_map(|j| (0..m).map(move |k| CMatrix::unit(n, m, j, k))).collect()
}

/// The full matrix algebra M_n(C).
pub fn make_full(n: usize) -> Result<AlgebraDescriptor> {
    if n == 0 {
        return Err(Error::invalid("make_full needs n >= 1"));
    }
    AlgebraDescriptor::from_basis(AlgebraKind::Full, matrix_units(n, n))
}

/// Cartan factor of type I: all n×m matrices.
pub fn make_cartan_type1(n: usize, m: usize) -> Result<AlgebraDescriptor> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("make_cartan_type1 needs n, m >= 1"));
    }
    AlgebraDescriptor::from_basis(AlgebraKind::CartanI, matrix_units(n, m))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(vec![vec![ZERO, ONE], vec![ONE, ZERO]]).expect("static")
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(vec![vec![ZERO, -I], vec![I, ZERO]]).expect("static")
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diag(&[ONE, -ONE])
}

/// The first `k` pairwise anticommuting self-adjoint unitaries of the
/// built-in family: σ₁, σ₂, σ₃ on C² for k ≤ 3, and σ₁⊗σ₃, σ₂⊗σ₃, I⊗σ₁,
/// I⊗σ₂, σ₃⊗σ₃ on C⁴ for k = 4, 5.
pub fn spin_generators(k: usize) -> Result<Vec<CMatrix>> {
    if k == 0 || k > MAX_SPIN_GENERATORS {
        return Err(Error::invalid(format!("spin system size {k} outside supported range 1..={MAX_SPIN_GENERATORS}")));
    }
    let (s1, s2, s3) = (pauli_x(), pauli_y(), pauli_z());
    let family = if k <= 3 {
        vec![s1, s2, s3]
    } else {
        let id = CMatrix::identity(2);
        vec![s1.kron(&s3), s2.kron(&s3), id.kron(&s1), id.kron(&s2), s3.kron(&s3)]
    };
    Ok(family.into_iter().take(k).collect())
}

/// Cartan factor of type IV (spin factor) spanned by `k` anticommuting generators.
pub fn make_cartan_type4(k: usize) -> Result<AlgebraDescriptor> {
    AlgebraDescriptor::from_basis(AlgebraKind::CartanIV, spin_generators(k)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn full_algebra_bases() {
        let a = make_full(1).unwrap();
        assert_eq!(a.basis(), &[CMatrix::identity(1)]);
        let a = make_full(2).unwrap();
        assert_eq!(a.dim(), 4);
        let rep = make_full(2).unwrap().verify_closure(50, 1e-12);
        assert!(rep.pass);
        assert!(rep.max_residual <= 1e-15);
        assert!(make_full(0).is_err());
    }

    #[test]
    fn cartan_type1_bases() {
        let a = make_cartan_type1(2, 3).unwrap();
        assert_eq!(a.dim(), 6);
        assert_eq!(a.ambient(), (2, 3));
        let b = make_cartan_type1(1, 1).unwrap();
        assert_eq!(b.basis(), make_full(1).unwrap().basis());
        let x = a.sample(4, 1.0);
        let t = x.triple();
        assert_eq!(t.shape(), (2, 3));
        assert!(a.membership_residual(&t).unwrap() <= 1e-14);
    }

    #[test]
    fn spin_generators_anticommute() {
        for k in 1..=MAX_SPIN_GENERATORS {
            let gens = spin_generators(k).unwrap();
            let n = gens[0].rows();
            assert_eq!(n, if k <= 3 { 2 } else { 4 });
            for (i, a) in gens.iter().enumerate() {
                for (j, b) in gens.iter().enumerate() {
                    let anti = a.matmul(b).unwrap().add(&b.matmul(a).unwrap()).unwrap();
                    let expect = if i == j { CMatrix::identity(n).scale_real(2.0) } else { CMatrix::zeros(n, n) };
                    assert!(anti.distance(&expect).unwrap() <= 1e-12, "k={k} ({i},{j})");
                }
            }
        }
        assert!(make_cartan_type4(0).is_err());
        assert!(make_cartan_type4(6).is_err());
    }

    #[test]
    fn spin_factor_square_is_scalar() {
        let gens = spin_generators(3).unwrap();
        let a = [0.3, -1.1, 2.0];
        let mut x = CMatrix::zeros(2, 2);
        for (g, &ai) in gens.iter().zip(&a) {
            x = x.add(&g.scale_real(ai)).unwrap();
        }
        let sq = x.matmul(&x).unwrap();
        let s = a.iter().map(|v| v * v).sum::<f64>();
        assert!(sq.distance(&CMatrix::identity(2).scale_real(s)).unwrap() <= 1e-12);
    }

    #[test]
    fn single_generator_spin_factor_is_closed() {
        let a = make_cartan_type4(1).unwrap();
        assert_eq!(a.basis(), &[pauli_x()]);
        assert!(a.verify_closure(100, 1e-12).pass);
    }

    #[test]
    fn spin_factor_closure_random() {
        let a = make_cartan_type4(3).unwrap();
        for seed in 0..50 {
            let x = a.sample(seed, 1.0);
            assert!(a.membership_residual(&x.triple()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn membership_residual_examples() {
        let a = make_cartan_type4(3).unwrap();
        for b in a.basis() {
            assert!(a.membership_residual(b).unwrap() <= 1e-13);
        }
        // I is Frobenius-orthogonal to the traceless generators.
        let r = a.membership_residual(&CMatrix::identity(2)).unwrap();
        assert!((r - 1.0).abs() <= 1e-13);
        let full = make_full(2).unwrap();
        assert!(full.membership_residual(&full.sample(1, 3.0)).unwrap() <= 1e-14);
        assert!(matches!(a.membership_residual(&CMatrix::zeros(3, 3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn project_examples() {
        let a = make_cartan_type4(3).unwrap();
        assert!(a.project(&CMatrix::identity(2)).unwrap().spectral_norm() <= 1e-15);
        let x = a.sample(9, 1.0);
        assert!(a.project(&x).unwrap().distance(&x).unwrap() <= 1e-14);
        let y = CMatrix::from_rows(vec![vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(-3.0, 0.0), c(0.0, 1.0)]]).unwrap();
        let p = a.project(&y).unwrap();
        assert!(a.project(&p).unwrap().distance(&p).unwrap() <= 1e-12);
        assert!(a.membership_residual(&p).unwrap() <= 1e-12);
    }

    #[test]
    fn sample_is_deterministic_and_in_span() {
        let a = make_cartan_type4(5).unwrap();
        let x1 = a.sample(17, 0.5);
        let x2 = a.sample(17, 0.5);
        assert_eq!(x1, x2);
        assert!(a.membership_residual(&x1).unwrap() <= 1e-12);
        let n = x1.spectral_norm();
        assert!(n > 0.0 && n < 1.0 + 1e-12);
        assert!(a.sample(0, 1.0).distance(&a.sample(1, 1.0)).unwrap() > 0.0);
    }

    #[test]
    fn spin_property_examples() {
        assert!(spin_residual(&pauli_x()) == 0.0);
        let x = pauli_x().add(&pauli_y().scale(I)).unwrap();
        let sq = x.matmul(&x).unwrap();
        assert!(sq.is_zero());
        assert_eq!(spin_residual(&x), 0.0);
        let a = make_cartan_type4(5).unwrap();
        assert!(a.verify_spin_property(200).unwrap() <= 1e-10);
        assert!(make_full(2).unwrap().verify_spin_property(10).is_err());
    }

    #[test]
    fn rejects_dependent_or_malformed_bases() {
        let e = CMatrix::unit(2, 2, 0, 0);
        assert!(AlgebraDescriptor::custom(vec![e.clone(), e.scale_real(2.0)]).is_err());
        assert!(AlgebraDescriptor::custom(vec![]).is_err());
        assert!(AlgebraDescriptor::custom(vec![e.clone(), CMatrix::zeros(2, 3)]).is_err());
        assert!(AlgebraDescriptor::from_basis(AlgebraKind::CartanIV, vec![pauli_y().scale(I)]).is_err());
    }

    #[test]
    fn transposed_algebra() {
        let a = make_cartan_type1(2, 3).unwrap().transposed();
        assert_eq!(a.ambient(), (3, 2));
        let s = make_cartan_type4(3).unwrap();
        let t = s.transposed();
        let x = s.sample(2, 1.0);
        assert!(t.membership_residual(&x.transpose()).unwrap() <= 1e-14);
    }
}
