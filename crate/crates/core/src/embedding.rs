//! The sparse point embedding and its dense coefficient vectors.
//!
//! A point `x` maps to a vector with `m + 1` nonzeros: a unit entry at the
//! `R` strip containing `x`, and `±1/√2` at the `T` rectangle of each band
//! containing `x` (`+` for its left half, `-` for its right half). The
//! squared norm is therefore `1 + m/2` for every point, and the embedding is
//! constant on each `2^-m × 2^-m` dyadic cell.

use std::f64::consts::FRAC_1_SQRT_2;

use arrayvec::ArrayVec;
use nalgebra::DMatrix;

use crate::dyadic::{self, check_level, check_point, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::Point;

/// Coefficient-touch counter, compiled in debug builds only.
///
/// Counts every coefficient read or written by [`dot`], [`axpy_into`] and
/// the integration kernel on the current thread.
pub mod opcount {
    #[cfg(debug_assertions)]
    thread_local! {
        static TOUCHES: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
    }

    #[inline(always)]
    pub(crate) fn add(_n: u64) {
        #[cfg(debug_assertions)]
        TOUCHES.with(|t| t.set(t.get() + _n));
    }

    pub fn reset() {
        #[cfg(debug_assertions)]
        TOUCHES.with(|t| t.set(0));
    }

    /// `None` in release builds.
    pub fn get() -> Option<u64> {
        #[cfg(debug_assertions)]
        {
            Some(TOUCHES.with(|t| t.get()))
        }
        #[cfg(not(debug_assertions))]
        {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseEmbedding {
    m: u32,
    beta0: usize,
    /// `(index, ±1/√2)` in band order.
    entries: ArrayVec<(usize, f64), { MAX_LEVEL as usize }>,
}

impl SparseEmbedding {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn beta0(&self) -> usize {
        self.beta0
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// All `m + 1` nonzeros, the unit entry first.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        std::iter::once((self.beta0, 1.0)).chain(self.entries.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        1.0 + self.entries.iter().map(|(_, c)| c * c).sum::<f64>()
    }

    /// Materialized row of length `D(m)`.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut row = vec![0.0; dyadic::dim(self.m)];
        for (j, c) in self.nonzeros() {
            row[j] = c;
        }
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector {
    m: u32,
    values: Vec<f64>,
}

impl CoefVector {
    pub fn zeros(m: u32) -> Result<Self> {
        check_level(m)?;
        Ok(Self {
            m,
            values: vec![0.0; dyadic::dim(m)],
        })
    }

    pub fn from_values(m: u32, values: Vec<f64>) -> Result<Self> {
        check_level(m)?;
        let expected = dyadic::dim(m);
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { m, values })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dist_sq(&self, other: &CoefVector) -> Result<f64> {
        same_level(self.m, other.m)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[inline]
fn same_level(expected: u32, found: u32) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LevelMismatch { expected, found })
    }
}

pub fn embed(p: Point, m: u32) -> Result<SparseEmbedding> {
    check_level(m)?;
    check_point(p)?;
    Ok(embed_unchecked(p, m))
}

#[inline]
pub(crate) fn embed_unchecked(p: Point, m: u32) -> SparseEmbedding {
    let loc = dyadic::locate_unchecked(p, m);
    let entries = loc.beta[1..]
        .iter()
        .zip(&loc.sign)
        .map(|(&j, &s)| (j, f64::from(s) * FRAC_1_SQRT_2))
        .collect();
    SparseEmbedding {
        m,
        beta0: loc.beta[0],
        entries,
    }
}

/// `<Ψ(x), v>` in `m + 1` multiply-adds.
#[inline]
pub fn dot(e: &SparseEmbedding, v: &CoefVector) -> Result<f64> {
    same_level(e.m, v.m)?;
    opcount::add(e.m as u64 + 1);
    let vals = &v.values;
    let mut acc = vals[e.beta0];
    for &(j, c) in &e.entries {
        acc += c * vals[j];
    }
    Ok(acc)
}

/// `v <- v + scale * Ψ(x)`, touching only the `m + 1` support entries.
#[inline]
pub fn axpy_into(e: &SparseEmbedding, scale: f64, v: &mut CoefVector) -> Result<()> {
    same_level(e.m, v.m)?;
    opcount::add(e.m as u64 + 1);
    let vals = &mut v.values;
    vals[e.beta0] += scale;
    for &(j, c) in &e.entries {
        vals[j] += scale * c;
    }
    Ok(())
}

/// Centers of the `4^m` finest cells, enumerated row-major in y then x.
pub fn cell_centers(m: u32) -> impl Iterator<Item = Point> {
    let n = 1u64 << m;
    let h = 1.0 / n as f64;
    (0..n).flat_map(move |iy| (0..n).map(move |ix| [(ix as f64 + 0.5) * h, (iy as f64 + 0.5) * h]))
}

pub const FULL_MATRIX_MAX_LEVEL: u32 = 7;

/// The `4^m × D(m)` matrix whose rows are the embeddings of all cell
/// centers. Test-scale only.
pub fn full_matrix(m: u32) -> Result<DMatrix<f64>> {
    check_level(m)?;
    if m > FULL_MATRIX_MAX_LEVEL {
        return Err(Error::MatrixTooLarge(m));
    }
    let centers: Vec<Point> = cell_centers(m).collect();
    let mut a = DMatrix::zeros(centers.len(), dyadic::dim(m));
    for (row, &p) in centers.iter().enumerate() {
        for (j, c) in embed_unchecked(p, m).nonzeros() {
            a[(row, j)] = c;
        }
    }
    Ok(a)
}
