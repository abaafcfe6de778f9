//! Randomized Kaczmarz iteration.
//!
//! [`kaczmarz_dense`] is the textbook projection method on an explicit matrix
//! with equal-norm rows. [`kaczmarz_sparse_step`] and [`kaczmarz_run`] are
//! the same projection specialized to embedding rows, where every row has
//! squared norm `1 + m/2` and only `m + 1` nonzeros, so one step costs
//! `O(m)`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::approximator::SampleSet;
use crate::dyadic::check_level;
use crate::embedding::{self, axpy_into, dot, CoefVector, SparseEmbedding};
use crate::error::{Error, Result};
use crate::rng::{substream, Stream};
use crate::Point;

/// Which sample each step consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleOrder {
    /// Step `k` uses sample `k`; requires `iterations <= samples`.
    #[default]
    InOrder,
    /// Step `k` uses a sample index drawn uniformly (with replacement) from
    /// the row-index stream of the seed.
    WithReplacement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaczmarzConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Starting iterate; `None` means the zero vector.
    pub initial: Option<CoefVector>,
    pub order: SampleOrder,
}

impl KaczmarzConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            seed,
            initial: None,
            order: SampleOrder::InOrder,
        }
    }

    pub fn with_replacement(mut self) -> Self {
        self.order = SampleOrder::WithReplacement;
        self
    }

    pub fn with_initial(mut self, v0: CoefVector) -> Self {
        self.initial = Some(v0);
        self
    }
}

/// `||v_k - reference||^2` for `k = 0..=iterations`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub sq_errors: Vec<f64>,
}

impl ConvergenceTrace {
    /// CSV with header `k,sq_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,sq_error\n");
        for (k, e) in self.sq_errors.iter().enumerate() {
            let _ = writeln!(out, "{k},{e:e}");
        }
        out
    }
}

/// Relative tolerance on row squared norms for [`kaczmarz_dense`].
pub const ROW_NORM_TOL: f64 = 1e-9;

/// Runs the projection `v <- v + (b_i - <a_i, v>) / ||a_i||^2 * a_i` for each
/// `i` in `row_indices`, in order.
pub fn kaczmarz_dense(
    rows: &DMatrix<f64>,
    b: &[f64],
    row_indices: &[usize],
    v0: &[f64],
) -> Result<Vec<f64>> {
    let (nrows, ncols) = rows.shape();
    if b.len() != nrows {
        return Err(Error::LengthMismatch {
            expected: nrows,
            found: b.len(),
        });
    }
    if v0.len() != ncols {
        return Err(Error::LengthMismatch {
            expected: ncols,
            found: v0.len(),
        });
    }
    let norms: Vec<f64> = rows.row_iter().map(|r| r.norm_squared()).collect();
    if let Some(&first) = norms.first() {
        for (row, &found) in norms.iter().enumerate() {
            if (found - first).abs() > ROW_NORM_TOL * first {
                return Err(Error::UnequalRowNorms {
                    row,
                    expected: first,
                    found,
                });
            }
        }
    }
    let mut v = nalgebra::DVector::from_column_slice(v0);
    for &i in row_indices {
        if i >= nrows {
            return Err(Error::IndexOutOfRange {
                index: i,
                m: 0,
                dim: nrows,
            });
        }
        let a = rows.row(i);
        let residual = b[i] - a.transpose().dot(&v);
        v.axpy(residual / norms[i], &a.transpose(), 1.0);
    }
    Ok(v.iter().copied().collect())
}

/// One projection onto `{v : <Ψ(x), v> = target}`.
#[inline]
pub fn kaczmarz_sparse_step(v: &mut CoefVector, e: &SparseEmbedding, target: f64) -> Result<()> {
    let residual = target - dot(e, v)?;
    let row_norm_sq = 1.0 + f64::from(e.m()) / 2.0;
    axpy_into(e, residual / row_norm_sq, v)
}

/// Runs `cfg.iterations` sparse steps with the sample values as targets.
///
/// Returns the final iterate, and the trace of squared distances to
/// `trace_ref` when one is given.
pub fn kaczmarz_run(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    trace_ref: Option<&CoefVector>,
) -> Result<(CoefVector, Option<ConvergenceTrace>)> {
    run_targets(samples, m, cfg, 0.0, None, trace_ref)
}

/// Shared driver: targets are `value - offset`, and points are translated by
/// `shift` on the torus before embedding.
pub(crate) fn run_targets(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    offset: f64,
    shift: Option<Point>,
    trace_ref: Option<&CoefVector>,
) -> Result<(CoefVector, Option<ConvergenceTrace>)> {
    check_level(m)?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if cfg.iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    if cfg.order == SampleOrder::InOrder && cfg.iterations > samples.len() {
        return Err(Error::IterationMismatch {
            iterations: cfg.iterations,
            samples: samples.len(),
        });
    }
    let mut v = match &cfg.initial {
        Some(v0) => {
            if v0.m() != m {
                return Err(Error::LevelMismatch {
                    expected: m,
                    found: v0.m(),
                });
            }
            v0.clone()
        }
        None => CoefVector::zeros(m)?,
    };
    let mut trace = match trace_ref {
        Some(r) => {
            let mut t = Vec::with_capacity(cfg.iterations + 1);
            t.push(v.dist_sq(r)?);
            Some(t)
        }
        None => None,
    };

    let points = samples.points();
    let values = samples.values();
    let mut index_rng = substream(cfg.seed, Stream::RowIndices);
    for k in 0..cfg.iterations {
        let i = match cfg.order {
            SampleOrder::InOrder => k,
            SampleOrder::WithReplacement => index_rng.gen_range(0..samples.len()),
        };
        let p = match shift {
            Some(z) => crate::approximator::torus_add(points[i], z),
            None => points[i],
        };
        let e = embedding::embed_unchecked(p, m);
        kaczmarz_sparse_step(&mut v, &e, values[i] - offset)?;
        if let (Some(t), Some(r)) = (trace.as_mut(), trace_ref) {
            t.push(v.dist_sq(r)?);
        }
    }
    Ok((v, trace.map(|sq_errors| ConvergenceTrace { sq_errors })))
}
