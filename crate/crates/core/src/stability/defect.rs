use rayon::prelude::*;

use crate::algebra::{AlgebraDescriptor, Sampling};
use crate::error::{Error, Result};
use crate::maps::MatrixMap;
use crate::matrix::{CMatrix, Complex};

const UNIMODULAR_TOL: f64 = 1e-12;

fn combination<M: MatrixMap + ?Sized>(
    h: &M,
    lambda: Complex,
    lambda_y: Complex,
    x: &CMatrix,
    y: &CMatrix,
    z: &CMatrix,
) -> Result<f64> {
    let arg = x.scale(lambda).add(&y.scale(lambda_y))?.add(&z.triple())?;
    let res =
        h.eval(&arg)?.sub(&h.eval(x)?.scale(lambda))?.sub(&h.eval(y)?.scale(lambda_y))?.sub(&h.eval(z)?.triple())?;
    Ok(res.spectral_norm())
}

/// ‖h(μx + μy + zz*z) − μh(x) − μh(y) − h(z)h(z)*h(z)‖ for unimodular μ.
pub fn defect_mixed<M: MatrixMap + ?Sized>(h: &M, mu: Complex, x: &CMatrix, y: &CMatrix, z: &CMatrix) -> Result<f64> {
    if (mu.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::invalid(format!("mu = {mu} is not unimodular")));
    }
    combination(h, mu, mu, x, y, z)
}

/// ‖T(λx + y + zz*z) − λT(x) − T(y) − T(z)T(z)*T(z)‖ for any complex λ.
pub fn defect_general<M: MatrixMap + ?Sized>(
    t: &M,
    lambda: Complex,
    x: &CMatrix,
    y: &CMatrix,
    z: &CMatrix,
) -> Result<f64> {
    combination(t, lambda, Complex::new(1.0, 0.0), x, y, z)
}

/// Largest mixed defect over sampled (x, y, z) and every μ in `mu_set`.
/// Triple i uses sample indices 3i, 3i+1, 3i+2 of the stream.
pub fn sup_defect<M: MatrixMap + ?Sized>(
    h: &M,
    algebra: &AlgebraDescriptor,
    mu_set: &[Complex],
    sampling: &Sampling,
) -> Result<f64> {
    let per_sample: Vec<f64> = (0..sampling.trials as u64)
        .into_par_iter()
        .map(|i| {
            let x = algebra.sample_indexed(sampling, 3 * i);
            let y = algebra.sample_indexed(sampling, 3 * i + 1);
            let z = algebra.sample_indexed(sampling, 3 * i + 2);
            mu_set.iter().try_fold(0.0f64, |acc, &mu| Ok(acc.max(defect_mixed(h, mu, &x, &y, &z)?)))
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_full;
    use crate::maps::{make_example23, scalar_input, MapDescriptor};
    use crate::stability::S1_SAMPLE;
    use std::sync::Arc;

    #[test]
    fn mixed_defect_of_exact_map_vanishes() {
        let a = Arc::new(make_full(2).unwrap());
        let h = MapDescriptor::transpose(a.clone()).unwrap();
        for (i, &mu) in S1_SAMPLE.iter().enumerate() {
            let (x, y, z) = (a.sample(i as u64, 1.0), a.sample(10 + i as u64, 1.0), a.sample(20 + i as u64, 1.0));
            assert!(defect_mixed(&h, mu, &x, &y, &z).unwrap() <= 1e-12);
        }
        let zero = MapDescriptor::zero(a.clone()).unwrap();
        let x = a.sample(1, 1.0);
        assert_eq!(defect_mixed(&zero, S1_SAMPLE[4], &x, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn mixed_defect_scalar_hand_value() {
        let id = MapDescriptor::identity(Arc::new(make_full(1).unwrap())).unwrap();
        let h = make_example23(id).unwrap();
        let (x, z) = (scalar_input(0.5, 0.0), scalar_input(0.8, 0.0));
        // h(0.5 + 0.5 + 0.512) = 0, so the defect is 0.5 + 0.5 + 0.512.
        let d = defect_mixed(&h, Complex::new(1.0, 0.0), &x, &x, &z).unwrap();
        assert!((d - 1.512).abs() <= 1e-15);
        assert!(defect_mixed(&h, Complex::new(1.1, 0.0), &x, &x, &z).is_err());
    }

    #[test]
    fn general_defect_examples() {
        let a = Arc::new(make_full(2).unwrap());
        let h = MapDescriptor::exact_uv(a.clone(), crate::rng::random_unitary(2, 3), crate::rng::random_unitary(2, 4))
            .unwrap();
        let (x, y, z) = (a.sample(1, 1.0), a.sample(2, 1.0), a.sample(3, 1.0));
        assert!(defect_general(&h, Complex::new(2.0, -3.0), &x, &y, &z).unwrap() <= 1e-11);
        let zero = MapDescriptor::zero(a.clone()).unwrap();
        assert_eq!(defect_general(&zero, Complex::new(2.0, -3.0), &x, &y, &z).unwrap(), 0.0);
        let o = CMatrix::zeros(2, 2);
        assert_eq!(defect_general(&h, Complex::new(0.0, 0.0), &x, &o, &o).unwrap(), 0.0);
    }

    #[test]
    fn sup_defect_examples() {
        let a = Arc::new(make_full(2).unwrap());
        let s = Sampling::new(200, 7, 1.0);
        let tr = MapDescriptor::transpose(a.clone()).unwrap();
        assert!(sup_defect(&tr, &a, &S1_SAMPLE, &s).unwrap() <= 1e-11);
        let zero = MapDescriptor::zero(a.clone()).unwrap();
        assert_eq!(sup_defect(&zero, &a, &S1_SAMPLE, &s).unwrap(), 0.0);
        let ex = make_example23(tr).unwrap();
        let d = sup_defect(&ex, &a, &S1_SAMPLE, &s).unwrap();
        assert!(d > 0.0 && d <= 4.0);
    }
}
