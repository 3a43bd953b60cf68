//! Linear operators `x ↦ Ax` with explicit adjoints, a dense row-major
//! matrix, and a seeded Gaussian ensemble.
//!
//! # Random number generation
//!
//! All randomness flows through [`GaussianSampler`], which is pinned to
//! `Xoshiro256++` seeded with `Xoshiro256PlusPlus::seed_from_u64(seed)`
//! (SplitMix64 state expansion). Uniforms are `(next_u64() >> 11) · 2⁻⁵³`
//! and normals come from the Box–Muller transform, both members of each
//! pair used in order (cosine first). [`gaussian_ensemble`] fills the matrix
//! row by row. Identical `(m, n, variance, seed)` therefore give
//! bit-identical matrices on every platform with IEEE-754 `f64` and the
//! same `libm`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// A linear map `ℝⁿ → ℝᵐ` together with its adjoint.
///
/// `apply_into` and `adjoint_into` may assume the slice lengths are right;
/// [`apply`](Self::apply) and [`apply_adjoint`](Self::apply_adjoint) check
/// them.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `out ← Ax`, with `x.len() == cols()` and `out.len() == rows()`.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// `out ← Aᵀy`, with `y.len() == rows()` and `out.len() == cols()`.
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]);

    /// Whether the operator is known to be the identity. Used to pick
    /// closed-form routes; `false` is always a safe answer.
    fn is_identity(&self) -> bool {
        false
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols(), x.len())?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows(), y.len())?;
        let mut out = vec![0.0; self.cols()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).apply_into(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).adjoint_into(y, out)
    }
    fn is_identity(&self) -> bool {
        (**self).is_identity()
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Dense matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.as_ref().len())?;
            data.extend_from_slice(r.as_ref());
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = crate::linalg::dot(row, x);
        }
    }

    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            crate::linalg::axpy(*yi, row, out);
        }
    }

    fn is_identity(&self) -> bool {
        self.rows == self.cols
            && self.data.chunks_exact(self.cols).enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, &a)| a == if i == j { 1.0 } else { 0.0 })
            })
    }
}

/// An operator given by a pair of closures `(x ↦ Ax, y ↦ Aᵀy)`.
///
/// Adjoint consistency is the caller's responsibility.
pub struct FnOperator<F, G> {
    rows: usize,
    cols: usize,
    forward: F,
    adjoint: G,
}

impl<F, G> FnOperator<F, G>
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    pub fn new(rows: usize, cols: usize, forward: F, adjoint: G) -> Self {
        Self {
            rows,
            cols,
            forward,
            adjoint,
        }
    }
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(&[f64], &mut [f64]),
    G: Fn(&[f64], &mut [f64]),
{
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        (self.forward)(x, out)
    }
    fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        (self.adjoint)(y, out)
    }
}

/// Seeded uniform/normal stream; see the module docs for the exact algorithm.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − U lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    pub fn normal(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.standard_normal()
    }

    /// The underlying generator, for use with `rand` adaptors.
    pub fn rng_mut(&mut self) -> &mut Xoshiro256PlusPlus {
        &mut self.rng
    }
}

/// Dense `m × n` matrix with i.i.d. `N(0, variance)` entries.
pub fn gaussian_ensemble(m: usize, n: usize, variance: f64, seed: u64) -> Result<DenseMatrix> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "variance must be positive, got {variance}"
        )));
    }
    let std_dev = libm::sqrt(variance);
    let mut sampler = GaussianSampler::new(seed);
    let data = (0..m * n).map(|_| sampler.normal(0.0, std_dev)).collect();
    DenseMatrix::from_row_major(m, n, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> DenseMatrix {
        DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.apply(&[2.0, 1.0]).unwrap(), vec![2.0, 1.0]);
        assert_eq!(id.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(two_by_two().apply(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn adjoint_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(id.apply_adjoint(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(two_by_two().apply_adjoint(&[1.0, 0.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(two_by_two().apply_adjoint(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_errors() {
        let a = gaussian_ensemble(2, 3, 1.0, 0).unwrap();
        assert_eq!(
            a.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        );
        assert_eq!(
            a.apply_adjoint(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        );
        assert!(DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn identity_detection() {
        assert!(DenseMatrix::identity(3).is_identity());
        assert!(!two_by_two().is_identity());
    }

    #[test]
    fn ensemble_is_deterministic() {
        let a = gaussian_ensemble(2, 3, 0.1, 7).unwrap();
        let b = gaussian_ensemble(2, 3, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gaussian_ensemble(2, 3, 0.1, 8).unwrap());
        let big = gaussian_ensemble(120, 512, 0.1, 1).unwrap();
        assert_eq!((big.rows(), big.cols()), (120, 512));
    }

    #[test]
    fn ensemble_moments() {
        let variance = 0.1;
        let a = gaussian_ensemble(1000, 1000, variance, 3).unwrap();
        let n = a.data().len() as f64;
        let mean = a.data().iter().sum::<f64>() / n;
        let stderr = libm::sqrt(variance / n);
        assert!(mean.abs() <= 5.0 * stderr, "mean {mean} stderr {stderr}");
        let var = a.data().iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((var - variance).abs() < 0.01 * variance, "variance {var}");
    }

    #[test]
    fn invalid_variance() {
        assert!(gaussian_ensemble(2, 2, 0.0, 1).is_err());
        assert!(gaussian_ensemble(2, 2, f64::NAN, 1).is_err());
    }

    #[test]
    fn fn_operator_matches_dense() {
        let dense = two_by_two();
        let op = FnOperator::new(
            2,
            2,
            |x: &[f64], out: &mut [f64]| {
                out[0] = x[0] + 2.0 * x[1];
                out[1] = 3.0 * x[0] + 4.0 * x[1];
            },
            |y: &[f64], out: &mut [f64]| {
                out[0] = y[0] + 3.0 * y[1];
                out[1] = 2.0 * y[0] + 4.0 * y[1];
            },
        );
        let x = [0.3, -1.2];
        assert_eq!(op.apply(&x).unwrap(), dense.apply(&x).unwrap());
        assert_eq!(op.apply_adjoint(&x).unwrap(), dense.apply_adjoint(&x).unwrap());
    }
}
