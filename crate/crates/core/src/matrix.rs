//! Dense complex matrices over binary64.
//!
//! `CMatrix` is the carrier for every algebra element. All operations return
//! fresh values; nothing mutates a matrix after construction, so matrices can
//! be shared freely across threads.
//!
//! Norms are C*-norms: [`CMatrix::spectral_norm`] is the largest singular
//! value, computed by a one-sided (Hestenes) Jacobi sweep on the columns.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

const JACOBI_MAX_SWEEPS: usize = 80;

/// Rectangular complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix shape {rows}x{cols} has a zero side")));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(format!("non-finite entry at index {pos}")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows of complex entries. Rows must be nonempty and equal length.
    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("ragged matrix rows"));
        }
        Self::new(n, m, rows.into_iter().flatten().collect())
    }

    /// Real-entry convenience constructor.
    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| Complex::new(v, 0.0)).collect()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix sides must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// 1x1 matrix holding `z`.
    pub fn scalar(z: Complex) -> Self {
        Self { rows: 1, cols: 1, data: vec![z] }
    }

    /// Matrix unit E_{jk} of the given shape.
    pub fn unit(rows: usize, cols: usize, j: usize, k: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.data[j * cols + k] = ONE;
        m
    }

    pub fn diag(entries: &[Complex]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    fn map(&self, f: impl Fn(Complex) -> Complex) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    fn same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch { op, left: self.shape(), right: other.shape() });
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).conj());
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, lambda: Complex) -> Self {
        self.map(|z| lambda * z)
    }

    /// Multiplies by a real factor. Exact when `factor` is a power of two.
    pub fn scale_real(&self, factor: f64) -> Self {
        self.map(|z| Complex::new(z.re * factor, z.im * factor))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { op: "matmul", left: self.shape(), right: other.shape() });
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut data = vec![ZERO; n * m];
        for i in 0..n {
            for l in 0..k {
                let a = self.data[i * k + l];
                if a == ZERO {
                    continue;
                }
                for j in 0..m {
                    data[i * m + j] += a * other.data[l * m + j];
                }
            }
        }
        Ok(Self { rows: n, cols: m, data })
    }

    /// The triple product x·x*·x.
    pub fn triple(&self) -> Self {
        let xxs = self.matmul(&self.adjoint()).expect("x·x* is always defined");
        xxs.matmul(self).expect("(x·x*)·x is always defined")
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for p in 0..other.rows {
                    for q in 0..other.cols {
                        data[(i * other.rows + p) * cols + j * other.cols + q] = a * other.get(p, q);
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    pub fn trace(&self) -> Result<Complex> {
        if !self.is_square() {
            return Err(Error::invalid(format!("trace of non-square {}x{} matrix", self.rows, self.cols)));
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
    }

    /// Singular values in descending order (min(rows, cols) of them).
    pub fn singular_values(&self) -> Vec<f64> {
        let scale = self.max_abs();
        if scale == 0.0 {
            return vec![0.0; self.rows.min(self.cols)];
        }
        // Rescale by a power of two so the column Gram entries cannot overflow.
        // Power-of-two factors are exact, which keeps the norm exactly
        // homogeneous under doubling.
        let exponent = binary_exponent(scale);
        let down = pow2(-exponent);
        let up = pow2(exponent);
        let oriented = if self.cols > self.rows { self.adjoint() } else { self.clone() };
        let scaled = oriented.scale_real(down);
        let mut sv = hestenes_column_norms(&scaled);
        for s in &mut sv {
            *s *= up;
        }
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Largest singular value (the C*-norm).
    pub fn spectral_norm(&self) -> f64 {
        self.singular_values()[0]
    }

    /// Smallest singular value.
    pub fn min_singular_value(&self) -> f64 {
        *self.singular_values().last().expect("nonempty matrix")
    }

    /// Spectral-norm distance.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.spectral_norm())
    }

    /// Column `j` as a vector.
    pub(crate) fn column(&self, j: usize) -> Vec<Complex> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

/// Unbiased binary exponent of a positive normal float; subnormals map to the minimum.
fn binary_exponent(v: f64) -> i32 {
    let bits = ((v.to_bits() >> 52) & 0x7ff) as i32;
    if bits == 0 {
        -1022
    } else {
        bits - 1023
    }
}

fn pow2(e: i32) -> f64 {
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// One-sided Jacobi: rotate column pairs until mutually orthogonal, then
/// the column norms are the singular values.
fn hestenes_column_norms(a: &CMatrix) -> Vec<f64> {
    let n = a.cols;
    let mut cols: Vec<Vec<Complex>> = (0..n).map(|j| a.column(j)).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex = cols[p].iter().zip(&cols[q]).map(|(u, v)| u.conj() * v).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (up, uq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let ap = *up;
                    let aq = *uq * phase;
                    *up = ap * c - aq * s;
                    *uq = ap * s + aq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let z = self.get(i, j);
                write!(f, "{}{:+}i", z.re, z.im)?;
            }
        }
        write!(f, "]")
    }
}

// Matrix literal: nested arrays of [re, im] pairs, row-major.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..self.rows).map(|i| (0..self.cols).map(|j| complex_pair(self.get(i, j))).collect()).collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows = rows.into_iter().map(|r| r.into_iter().map(|[re, im]| Complex::new(re, im)).collect()).collect();
        CMatrix::from_rows(rows).map_err(D::Error::custom)
    }
}

pub(crate) fn complex_pair(z: Complex) -> [f64; 2] {
    [z.re, z.im]
}

/// `#[serde(with = ...)]` adapter writing a complex number as `[re, im]`.
pub mod complex_literal {
    use super::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex::new(re, im))
    }
}
