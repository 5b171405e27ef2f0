//! Portable deterministic pseudo-random numbers.
//!
//! The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
//! increment `0x9E3779B97F4A7C15`, followed by the output mix
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! (wrapping arithmetic). Uniforms in the open interval (0, 1) are
//! `((z >> 11) + 0.5) * 2^-53`. Gaussians use Box-Muller with the `libm`
//! implementations of `log`, `cos` and `sin`, so every platform that
//! reproduces this recipe gets bit-identical streams.
//!
//! Independent streams are keyed with [`substream`], which mixes a parent
//! seed with an index. Every sampled quantity in the crate names its stream
//! explicitly, so results do not depend on evaluation order.

use crate::matrix::{CMatrix, Complex, ZERO};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `seed`.
pub fn substream(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&mut self) -> f64 {
        let (r, theta) = self.polar();
        r * libm::cos(theta)
    }

    /// Standard complex Gaussian: E|z|^2 = 1.
    pub fn complex_gaussian(&mut self) -> Complex {
        let (r, theta) = self.polar();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex::new(r * libm::cos(theta) * s, r * libm::sin(theta) * s)
    }

    fn polar(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        ((-2.0 * libm::log(u1)).sqrt(), 2.0 * std::f64::consts::PI * u2)
    }
}

/// Haar-like random unitary: Gram-Schmidt (twice) on the columns of a complex Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> CMatrix {
    let mut rng = SplitMix64::new(seed);
    let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<Complex> = (0..n).map(|_| rng.complex_gaussian()).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut data = vec![ZERO; n * n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            data[i * n + j] = z;
        }
    }
    CMatrix::new(n, n, data).expect("finite unitary")
}
