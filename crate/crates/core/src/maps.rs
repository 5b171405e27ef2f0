//! Maps under test h: A → B.
//!
//! Exact J*-homomorphisms (x ↦ UxV with unitary U, V; transpose; zero) and
//! two perturbations of them: truncation to an open ball, which is the
//! counterexample map of the truncated-homomorphism construction, and a
//! bounded-support power-law noise used to observe the rate of the direct
//! method.
//!
//! Note on the triple identity: the truncated-map discussion this crate
//! follows states its conclusion as h(xx*x) = h(x)h(x*)h(x), while the
//! defining J*-identity is h(xx*x) = h(x)h(x)*h(x). Everything here checks
//! the defining identity.

use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{AlgebraDescriptor, AlgebraKind, Sampling};
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Complex};
use crate::rng::{mix64, substream, SplitMix64};
use crate::witness::Witness;

const UNITARY_TOL: f64 = 1e-12;
const CODOMAIN_TOL: f64 = 1e-10;
const CODOMAIN_SPOT_CHECKS: u64 = 4;

/// Anything that can be evaluated on matrices: descriptors, extracted limits, closures.
pub trait MatrixMap: Sync {
    fn eval(&self, x: &CMatrix) -> Result<CMatrix>;

    /// A norm beyond which the map is known to satisfy h(2x) = 2h(x) exactly.
    fn homogeneous_beyond(&self) -> Option<f64> {
        None
    }
}

impl<F> MatrixMap for F
where
    F: Fn(&CMatrix) -> Result<CMatrix> + Sync,
{
    fn eval(&self, x: &CMatrix) -> Result<CMatrix> {
        self(x)
    }
}

#[derive(Debug, Clone)]
pub enum MapVariant {
    ExactUV { u: CMatrix, v: CMatrix },
    Transpose,
    Zero,
    TruncatedBall { inner: Box<MapDescriptor>, radius: f64 },
    BallNoise { inner: Box<MapDescriptor>, alpha: f64, p: f64, support_radius: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct MapDescriptor {
    variant: MapVariant,
    domain: Arc<AlgebraDescriptor>,
    codomain: Arc<AlgebraDescriptor>,
}

fn is_unitary(u: &CMatrix) -> bool {
    u.is_square()
        && u.adjoint()
            .matmul(u)
            .and_then(|g| g.sub(&CMatrix::identity(u.rows())))
            .map(|d| d.spectral_norm() <= UNITARY_TOL)
            .unwrap_or(false)
}

impl MapDescriptor {
    fn build(variant: MapVariant, domain: Arc<AlgebraDescriptor>, codomain: Arc<AlgebraDescriptor>) -> Result<Self> {
        let h = Self { variant, domain, codomain };
        h.certify_codomain()?;
        Ok(h)
    }

    /// x ↦ U·x·V with square unitaries U (rows) and V (cols).
    ///
    /// Full and type-I domains are mapped onto themselves; other domains get
    /// the image span {U b V} as codomain.
    pub fn exact_uv(domain: Arc<AlgebraDescriptor>, u: CMatrix, v: CMatrix) -> Result<Self> {
        let (rows, cols) = domain.ambient();
        if u.shape() != (rows, rows) || v.shape() != (cols, cols) {
            return Err(Error::invalid(format!(
                "U must be {rows}x{rows} and V {cols}x{cols} for a {rows}x{cols} domain, got {:?} and {:?}",
                u.shape(),
                v.shape()
            )));
        }
        if !is_unitary(&u) || !is_unitary(&v) {
            return Err(Error::invalid("U and V must be unitary within 1e-12"));
        }
        let codomain = match domain.kind() {
            AlgebraKind::Full | AlgebraKind::CartanI => domain.clone(),
            _ => {
                let basis = domain
                    .basis()
                    .iter()
                    .map(|b| u.matmul(b).and_then(|ub| ub.matmul(&v)))
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(AlgebraDescriptor::custom(basis)?)
            }
        };
        Self::build(MapVariant::ExactUV { u, v }, domain, codomain)
    }

    pub fn identity(domain: Arc<AlgebraDescriptor>) -> Result<Self> {
        let (rows, cols) = domain.ambient();
        Self::exact_uv(domain, CMatrix::identity(rows), CMatrix::identity(cols))
    }

    /// x ↦ xᵀ, into the algebra of transposes.
    pub fn transpose(domain: Arc<AlgebraDescriptor>) -> Result<Self> {
        let codomain = Arc::new(domain.transposed());
        Self::build(MapVariant::Transpose, domain, codomain)
    }

    pub fn zero(domain: Arc<AlgebraDescriptor>) -> Result<Self> {
        let codomain = domain.clone();
        Self::build(MapVariant::Zero, domain, codomain)
    }

    /// inner(x) for ‖x‖ < radius, 0 otherwise.
    pub fn truncated(inner: MapDescriptor, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("truncation radius must be positive and finite, got {radius}")));
        }
        let (domain, codomain) = (inner.domain.clone(), inner.codomain.clone());
        Self::build(MapVariant::TruncatedBall { inner: Box::new(inner), radius }, domain, codomain)
    }

    /// inner(x) + alpha·‖x‖^p·u(x) for 0 < ‖x‖ < support_radius, where u(x)
    /// is a unit-norm codomain element keyed by `seed` and the direction of
    /// x rounded to three decimals.
    pub fn ball_noise(inner: MapDescriptor, alpha: f64, p: f64, support_radius: f64, seed: u64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("noise amplitude must be nonnegative, got {alpha}")));
        }
        if !(0.0..1.0).contains(&p) {
            return Err(Error::invalid(format!("noise exponent must lie in [0, 1), got {p}")));
        }
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::invalid(format!("support radius must be positive and finite, got {support_radius}")));
        }
        let (domain, codomain) = (inner.domain.clone(), inner.codomain.clone());
        let variant = MapVariant::BallNoise { inner: Box::new(inner), alpha, p, support_radius, seed };
        Self::build(variant, domain, codomain)
    }

    pub fn variant(&self) -> &MapVariant {
        &self.variant
    }

    pub fn domain(&self) -> &Arc<AlgebraDescriptor> {
        &self.domain
    }

    pub fn codomain(&self) -> &Arc<AlgebraDescriptor> {
        &self.codomain
    }

    /// True for the variants that are J*-homomorphisms by construction.
    pub fn is_exact(&self) -> bool {
        matches!(self.variant, MapVariant::ExactUV { .. } | MapVariant::Transpose | MapVariant::Zero)
    }

    fn certify_codomain(&self) -> Result<()> {
        for i in 0..CODOMAIN_SPOT_CHECKS {
            let x = self.domain.sample(substream(0xC0D0, i), 1.0);
            let y = self.eval(&x)?;
            let r = self.codomain.membership_residual(&y)?;
            if r > CODOMAIN_TOL {
                return Err(Error::invalid(format!("map output leaves the codomain (residual {r:e})")));
            }
        }
        Ok(())
    }

    fn noise_direction(&self, x: &CMatrix, norm: f64, seed: u64) -> CMatrix {
        let mut key = seed;
        for z in x.entries() {
            let d = z / norm;
            key = mix64(key ^ ((d.re * 1000.0).round() as i64 as u64));
            key = mix64(key ^ ((d.im * 1000.0).round() as i64 as u64));
        }
        let u = self.codomain.sample(key, 1.0);
        u.scale_real(1.0 / u.spectral_norm())
    }
}

impl MatrixMap for MapDescriptor {
    fn eval(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != self.domain.ambient() {
            return Err(Error::DimensionMismatch { op: "map eval", left: self.domain.ambient(), right: x.shape() });
        }
        let (rows, cols) = self.codomain.ambient();
        match &self.variant {
            MapVariant::ExactUV { u, v } => u.matmul(x)?.matmul(v),
            MapVariant::Transpose => Ok(x.transpose()),
            MapVariant::Zero => Ok(CMatrix::zeros(rows, cols)),
            MapVariant::TruncatedBall { inner, radius } => {
                // ‖x‖ = radius belongs to the zero branch.
                if x.spectral_norm() < *radius {
                    inner.eval(x)
                } else {
                    Ok(CMatrix::zeros(rows, cols))
                }
            }
            MapVariant::BallNoise { inner, alpha, p, support_radius, seed } => {
                let base = inner.eval(x)?;
                let norm = x.spectral_norm();
                if norm == 0.0 || norm >= *support_radius || *alpha == 0.0 {
                    return Ok(base);
                }
                let u = self.noise_direction(x, norm, *seed);
                base.add(&u.scale_real(alpha * norm.powf(*p)))
            }
        }
    }

    fn homogeneous_beyond(&self) -> Option<f64> {
        match &self.variant {
            MapVariant::ExactUV { .. } | MapVariant::Transpose | MapVariant::Zero => Some(0.0),
            MapVariant::TruncatedBall { radius, .. } => Some(*radius),
            MapVariant::BallNoise { inner, support_radius, .. } => {
                inner.homogeneous_beyond().map(|r| r.max(*support_radius))
            }
        }
    }
}

/// The truncated homomorphism: H(x) inside the open unit ball, 0 outside.
pub fn make_example23(h: MapDescriptor) -> Result<MapDescriptor> {
    match h.variant {
        MapVariant::ExactUV { .. } | MapVariant::Transpose => MapDescriptor::truncated(h, 1.0),
        _ => Err(Error::invalid("truncated-homomorphism construction needs an exact UV or transpose map")),
    }
}

/// Searches sampled inputs for a violation of additivity, complex
/// homogeneity or the triple identity, each at threshold tol·(1+m³) with
/// m the largest input norm.
pub fn find_hom_violation(h: &MapDescriptor, sampling: &Sampling, tol: f64) -> Result<Option<Witness>> {
    let dom = h.domain();
    let found: Vec<Option<Witness>> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|i| -> Result<Option<Witness>> {
            let x = dom.sample_indexed(sampling, 4 * i);
            let y = dom.sample_indexed(sampling, 4 * i + 1);
            let z = dom.sample_indexed(sampling, 4 * i + 2);
            let lambda = SplitMix64::new(substream(sampling.seed, 4 * i + 3)).complex_gaussian() * 2.0;
            let m = x.spectral_norm().max(y.spectral_norm()).max(z.spectral_norm());
            let threshold = tol * (1.0 + m.powi(3));

            let add = h.eval(&x.add(&y)?)?.sub(&h.eval(&x)?)?.sub(&h.eval(&y)?)?.spectral_norm();
            if add > threshold {
                return Ok(Some(Witness::new("additivity", add, threshold).input("x", &x).input("y", &y)));
            }
            let hom = h.eval(&x.scale(lambda))?.sub(&h.eval(&x)?.scale(lambda))?.spectral_norm();
            if hom > threshold {
                return Ok(Some(Witness::new("homogeneity", hom, threshold).input("x", &x).scalar(lambda)));
            }
            let tri = h.eval(&z.triple())?.sub(&h.eval(&z)?.triple())?.spectral_norm();
            if tri > threshold {
                return Ok(Some(Witness::new("triple", tri, threshold).input("z", &z)));
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().next())
}

/// Sampled check that h is additive, C-homogeneous and preserves x x* x.
pub fn is_exact_jstar_hom(h: &MapDescriptor, trials: usize, tol: f64) -> Result<bool> {
    Ok(find_hom_violation(h, &Sampling::new(trials, 0, 1.0), tol)?.is_none())
}

/// Max over samples of ‖h(x)‖ − ‖x‖.
pub fn norm_decreasing_check(h: &MapDescriptor, trials: usize) -> Result<f64> {
    let sampling = Sampling::new(trials, 0, 1.0);
    let gaps: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = h.domain().sample_indexed(&sampling, i);
            Ok(h.eval(&x)?.spectral_norm() - x.spectral_norm())
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Complex scalar as a 1x1 matrix, for the scalar-algebra examples.
pub fn scalar_input(re: f64, im: f64) -> CMatrix {
    CMatrix::scalar(Complex::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_cartan_type4, make_full};
    use crate::rng::random_unitary;

    fn full(n: usize) -> Arc<AlgebraDescriptor> {
        Arc::new(make_full(n).unwrap())
    }

    fn scalar_example23() -> MapDescriptor {
        make_example23(MapDescriptor::identity(full(1)).unwrap()).unwrap()
    }

    #[test]
    fn zero_map_is_zero() {
        let h = MapDescriptor::zero(full(2)).unwrap();
        let x = h.domain().sample(3, 1.0);
        assert!(h.eval(&x).unwrap().is_zero());
    }

    #[test]
    fn transpose_preserves_triples() {
        let h = MapDescriptor::transpose(full(2)).unwrap();
        for seed in 0..20 {
            let x = h.domain().sample(seed, 1.5);
            let lhs = h.eval(&x.triple()).unwrap();
            let rhs = h.eval(&x).unwrap().triple();
            assert!(lhs.distance(&rhs).unwrap() <= 1e-14);
            // (xx*x)ᵀ = xᵀ·conj(x)·xᵀ
            let direct = x.transpose().matmul(&x.conj()).unwrap().matmul(&x.transpose()).unwrap();
            assert!(lhs.distance(&direct).unwrap() <= 1e-14);
        }
    }

    #[test]
    fn truncated_scalar_example() {
        let h = scalar_example23();
        assert_eq!(h.eval(&scalar_input(0.9, 0.0)).unwrap(), scalar_input(0.9, 0.0));
        assert!(h.eval(&scalar_input(1.2, 0.0)).unwrap().is_zero());
        assert!(h.eval(&scalar_input(1.0, 0.0)).unwrap().is_zero());
        assert!(h.eval(&scalar_input(0.0, 0.0)).unwrap().is_zero());
    }

    #[test]
    fn example23_on_matrices() {
        let h = make_example23(MapDescriptor::identity(full(2)).unwrap()).unwrap();
        let x = h.domain().sample(1, 1.0);
        let unit = x.scale_real(1.0 / x.spectral_norm());
        assert!(h.eval(&CMatrix::identity(2)).unwrap().is_zero());
        assert!(h.eval(&unit.scale_real(1.0 + 1e-12)).unwrap().is_zero());
        assert!(h.eval(&CMatrix::zeros(2, 2)).unwrap().is_zero());
        let small = unit.scale_real(0.5);
        assert_eq!(h.eval(&small).unwrap(), small);
        assert!(make_example23(MapDescriptor::zero(full(2)).unwrap()).is_err());
        assert!(make_example23(h).is_err());
    }

    #[test]
    fn exactness_classification() {
        let a = full(2);
        let u = random_unitary(2, 1);
        let v = random_unitary(2, 2);
        assert!(is_exact_jstar_hom(&MapDescriptor::exact_uv(a.clone(), u, v).unwrap(), 50, 1e-10).unwrap());
        assert!(is_exact_jstar_hom(&MapDescriptor::transpose(a.clone()).unwrap(), 50, 1e-10).unwrap());
        assert!(is_exact_jstar_hom(&MapDescriptor::zero(a.clone()).unwrap(), 50, 1e-10).unwrap());
        let t = make_example23(MapDescriptor::transpose(a).unwrap()).unwrap();
        let w = find_hom_violation(&t, &Sampling::new(50, 0, 1.0), 1e-10).unwrap().unwrap();
        assert_eq!(w.check, "additivity");
        assert!(!is_exact_jstar_hom(&scalar_example23(), 50, 1e-10).unwrap());
    }

    #[test]
    fn scalar_additivity_witness() {
        let h = scalar_example23();
        let x = scalar_input(0.6, 0.0);
        let sum = h.eval(&x.add(&x).unwrap()).unwrap();
        assert!(sum.is_zero());
        let split = h.eval(&x).unwrap().add(&h.eval(&x).unwrap()).unwrap();
        assert_eq!(split, scalar_input(1.2, 0.0));
    }

    #[test]
    fn norm_decreasing_examples() {
        let a = full(3);
        assert!(norm_decreasing_check(&MapDescriptor::zero(a.clone()).unwrap(), 50).unwrap() <= 0.0);
        let uv = MapDescriptor::exact_uv(a.clone(), random_unitary(3, 4), random_unitary(3, 5)).unwrap();
        assert!(norm_decreasing_check(&uv, 50).unwrap().abs() <= 1e-12);
        let tr = MapDescriptor::transpose(a).unwrap();
        assert!(norm_decreasing_check(&tr, 50).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn exact_uv_validation() {
        let a = full(2);
        let bad = CMatrix::identity(2).scale_real(1.5);
        assert!(MapDescriptor::exact_uv(a.clone(), bad, CMatrix::identity(2)).is_err());
        assert!(MapDescriptor::exact_uv(a, CMatrix::identity(3), CMatrix::identity(2)).is_err());
    }

    #[test]
    fn exact_uv_on_spin_factor_uses_image_codomain() {
        let a = Arc::new(make_cartan_type4(3).unwrap());
        let h = MapDescriptor::exact_uv(a, random_unitary(2, 8), random_unitary(2, 9)).unwrap();
        let x = h.domain().sample(4, 1.0);
        assert!(h.codomain().membership_residual(&h.eval(&x).unwrap()).unwrap() <= 1e-12);
        assert!(is_exact_jstar_hom(&h, 30, 1e-10).unwrap());
    }

    #[test]
    fn ball_noise_properties() {
        let inner = MapDescriptor::identity(full(2)).unwrap();
        let h = MapDescriptor::ball_noise(inner.clone(), 0.3, 0.5, 2.0, 77).unwrap();
        for seed in 0..40 {
            let x = h.domain().sample(seed, 1.5);
            let n = x.spectral_norm();
            let diff = h.eval(&x).unwrap().distance(&inner.eval(&x).unwrap()).unwrap();
            if n >= 2.0 {
                assert_eq!(diff, 0.0);
            } else {
                assert!((diff - 0.3 * n.sqrt()).abs() <= 1e-12);
            }
            assert_eq!(h.eval(&x).unwrap(), h.eval(&x).unwrap());
        }
        assert!(h.eval(&CMatrix::zeros(2, 2)).unwrap().is_zero());
        assert!(MapDescriptor::ball_noise(inner.clone(), 0.3, 1.0, 2.0, 0).is_err());
        assert!(MapDescriptor::ball_noise(inner.clone(), -0.1, 0.5, 2.0, 0).is_err());
        assert!(MapDescriptor::ball_noise(inner, 0.1, 0.5, 0.0, 0).is_err());
    }

    #[test]
    fn noise_direction_is_constant_along_rays() {
        let inner = MapDescriptor::identity(full(1)).unwrap();
        let h = MapDescriptor::ball_noise(inner, 1.0, 0.0, 100.0, 5).unwrap();
        let x = scalar_input(0.3, 0.4);
        let e1 = h.eval(&x).unwrap().sub(&x).unwrap();
        let x2 = x.scale_real(8.0);
        let e2 = h.eval(&x2).unwrap().sub(&x2).unwrap();
        assert!(e1.distance(&e2).unwrap() <= 1e-14);
    }

    #[test]
    fn homogeneity_radius() {
        let a = full(2);
        let id = MapDescriptor::identity(a).unwrap();
        assert_eq!(id.homogeneous_beyond(), Some(0.0));
        let t = make_example23(id.clone()).unwrap();
        assert_eq!(t.homogeneous_beyond(), Some(1.0));
        let n = MapDescriptor::ball_noise(id, 0.1, 0.2, 3.0, 1).unwrap();
        assert_eq!(n.homogeneous_beyond(), Some(3.0));
    }

    #[test]
    fn eval_rejects_wrong_shape() {
        let h = MapDescriptor::zero(full(2)).unwrap();
        assert!(h.eval(&CMatrix::zeros(3, 3)).is_err());
    }
}
