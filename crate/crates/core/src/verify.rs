//! Exact-identity self checks at small levels.
//!
//! Every check here is an algebraic identity, so tolerances only absorb
//! double-precision rounding. Two checks run the exactness identity against
//! a deliberately broken weight vector and pass only if the break is caught.

use clap::ValueEnum;
use rand::Rng;

use crate::approximator::{Model, ModelMeta};
use crate::dyadic::{dim, DyadicRect};
use crate::embedding::{cell_centers, dot, embed, full_matrix, CoefVector};
use crate::error::Result;
use crate::kaczmarz::{kaczmarz_dense, kaczmarz_sparse_step};
use crate::registry;
use crate::rng::{substream, uniform_point, Stream};
use crate::smolyak::{build_weight_vector_with, smolyak_eval, BandOffset, CenterSamples};

pub const MAX_LEVEL: u32 = 5;
pub const EXACTNESS_FUNCTIONS: [&str; 4] =
    ["paper-example", "separable-x", "bilinear", "holder-half"];
/// Size of the single-entry corruption the exactness check must detect.
pub const CORRUPTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// Pass when `measured <= tol`.
    AtMost,
    /// Pass when `measured > tol` (a fault was detected).
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub tol: f64,
    pub measured: f64,
    pub expect: Expect,
}

impl Check {
    fn at_most(name: &str, tol: f64, measured: f64) -> Self {
        Self {
            name: name.into(),
            tol,
            measured,
            expect: Expect::AtMost,
        }
    }

    fn above(name: &str, tol: f64, measured: f64) -> Self {
        Self {
            name: name.into(),
            tol,
            measured,
            expect: Expect::Above,
        }
    }

    pub fn passed(&self) -> bool {
        match self.expect {
            Expect::AtMost => self.measured <= self.tol,
            Expect::Above => self.measured > self.tol,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rel = match self.expect {
            Expect::AtMost => "<=",
            Expect::Above => ">",
        };
        write!(
            f,
            "{:<4} {:<44} measured={:<12.3e} required {rel} {:e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tol
        )
    }
}

/// Fault to inject into the exactness check, to confirm it can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mutation {
    #[default]
    None,
    /// Add `1e-3` to one weight-vector entry.
    Weight,
    /// Start the half-width sums one level too coarse.
    Convention,
}

/// Largest `|<Ψ(c), w> - smolyak(c)|` over all `2^-m` cell centers `c`.
pub fn exactness_gap(m: u32, f: fn(crate::Point) -> f64, mutation: Mutation) -> Result<f64> {
    let s = CenterSamples::from_fn(m, f)?;
    let offset = match mutation {
        Mutation::Convention => BandOffset::Rectangle,
        _ => BandOffset::Halves,
    };
    let mut w = build_weight_vector_with(&s, offset)?;
    if mutation == Mutation::Weight {
        let j = dim(m) / 2;
        w.values_mut()[j] += CORRUPTION;
    }
    let mut gap = 0.0f64;
    for c in cell_centers(m) {
        gap = gap.max((dot(&embed(c, m)?, &w)? - smolyak_eval(&s, c)?).abs());
    }
    Ok(gap)
}

fn exactness_over_registry(mutation: Mutation) -> Result<f64> {
    let mut gap = 0.0f64;
    for name in EXACTNESS_FUNCTIONS {
        let t = registry::get(name).expect("registry name");
        for m in 1..=MAX_LEVEL {
            gap = gap.max(exactness_gap(m, t.f, mutation)?);
        }
    }
    Ok(gap)
}

fn gram_gap() -> Result<f64> {
    let mut gap = 0.0f64;
    for m in 1..=MAX_LEVEL {
        let a = full_matrix(m)?;
        let g = a.transpose() * &a;
        let scale = (1u64 << m) as f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { scale } else { 0.0 };
                gap = gap.max((g[(i, j)] - want).abs());
            }
        }
    }
    Ok(gap)
}

fn norm_gap() -> Result<f64> {
    let mut gap = 0.0f64;
    for m in 1..=MAX_LEVEL {
        for c in cell_centers(m) {
            gap = gap.max((embed(c, m)?.norm_sq() - (1.0 + m as f64 / 2.0)).abs());
        }
    }
    Ok(gap)
}

fn count_mismatches() -> Result<f64> {
    let mut bad = 0usize;
    for m in 1..=MAX_LEVEL {
        let n = 1usize << m;
        let fine: usize = (0..=m)
            .map(|k| DyadicRect::all_of_shape(k, m - k).count())
            .sum();
        let coarse: usize = (0..m)
            .map(|k| DyadicRect::all_of_shape(k, m - 1 - k).count())
            .sum();
        let s = CenterSamples::from_fn(m, |_| 0.0)?;
        bad += usize::from(fine != (m as usize + 1) * n);
        bad += usize::from(coarse != m as usize * n / 2);
        bad += usize::from(s.fine_count() != fine || s.coarse_count() != coarse);
        bad += usize::from(dim(m) != (m as usize + 2) * n / 2);
        let a = full_matrix(m)?;
        bad += usize::from(a.shape() != (n * n, dim(m)));
    }
    Ok(bad as f64)
}

fn random_coef(m: u32, rng: &mut impl Rng) -> Result<CoefVector> {
    CoefVector::from_values(m, (0..dim(m)).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn projection_gap() -> Result<f64> {
    let mut rng = substream(0, Stream::Trials);
    let mut gap = 0.0f64;
    for m in 1..=MAX_LEVEL {
        let mut v = random_coef(m, &mut rng)?;
        for _ in 0..200 {
            let e = embed(uniform_point(&mut rng), m)?;
            let t: f64 = rng.gen_range(-5.0..5.0);
            kaczmarz_sparse_step(&mut v, &e, t)?;
            gap = gap.max((dot(&e, &v)? - t).abs() / t.abs().max(1.0));
        }
    }
    Ok(gap)
}

fn dense_sparse_gap() -> Result<f64> {
    let m = 3;
    let a = full_matrix(m)?;
    let centers: Vec<_> = cell_centers(m).collect();
    let mut rng = substream(1, Stream::Trials);
    let b: Vec<f64> = (0..centers.len())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let rows: Vec<usize> = (0..100).map(|_| rng.gen_range(0..centers.len())).collect();
    let dense = kaczmarz_dense(&a, &b, &rows, &vec![0.0; dim(m)])?;
    let mut v = CoefVector::zeros(m)?;
    for &r in &rows {
        kaczmarz_sparse_step(&mut v, &embed(centers[r], m)?, b[r])?;
    }
    Ok(v.values()
        .iter()
        .zip(&dense)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

fn integration_gap() -> Result<f64> {
    let mut rng = substream(2, Stream::Trials);
    let mut gap = 0.0f64;
    for m in 1..=MAX_LEVEL {
        let model = Model::new(random_coef(m, &mut rng)?, ModelMeta::default());
        let cells = 1usize << (2 * m);
        let mut sum = 0.0;
        for c in cell_centers(m) {
            sum += model.evaluate(c)?;
        }
        gap = gap.max((model.integrate() - sum / cells as f64).abs());
    }
    Ok(gap)
}

/// Runs every check; `mutation` is applied to the main exactness check only.
pub fn run_checks(mutation: Mutation) -> Result<Vec<Check>> {
    let exact_name = match mutation {
        Mutation::None => "exactness m=1..5, 4 functions",
        Mutation::Weight => "exactness m=1..5, 4 functions [corrupted w]",
        Mutation::Convention => "exactness m=1..5, 4 functions [band offset]",
    };
    Ok(vec![
        Check::at_most("gram identity A^T A = 2^m I, m=1..5", 1e-9, gram_gap()?),
        Check::at_most("embedding norm^2 = 1 + m/2", 1e-12, norm_gap()?),
        Check::at_most("rectangle and index counts", 0.0, count_mismatches()?),
        Check::at_most(exact_name, 1e-10, exactness_over_registry(mutation)?),
        Check::above(
            "exactness detects 1e-3 weight corruption",
            1e-10,
            exactness_over_registry(Mutation::Weight)?,
        ),
        Check::above(
            "exactness detects the band offset",
            1e-10,
            exactness_over_registry(Mutation::Convention)?,
        ),
        Check::at_most("single-step projection residual", 1e-12, projection_gap()?),
        Check::at_most(
            "dense/sparse Kaczmarz m=3, 100 steps",
            1e-12,
            dense_sparse_gap()?,
        ),
        Check::at_most(
            "integrate = mean over cell centers",
            1e-10,
            integration_gap()?,
        ),
    ])
}
