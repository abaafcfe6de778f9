//! End-to-end approximation from random samples.
//!
//! Samples `(X_i, f(X_i))` drive the sparse Kaczmarz iteration with the raw
//! function values as targets; the final iterate `v` defines
//! `f̃(x) = <Ψ(x), v>`. Evaluation costs `m + 1` coefficient reads and the
//! integral of `f̃` over the square is the mean of the `n = 2^m` strip
//! coefficients.
//!
//! Spin cycling refits on torus-shifted copies of the sample points and
//! averages the shifted approximations, which smooths out the dyadic grid
//! artifacts of a single fit. The torus convention assumes `f` is periodic;
//! for non-periodic `f` the shifted fits see a seam at the wrapped edges.

use std::io::BufRead;
use std::path::Path;

use crate::dyadic::{check_level, check_point, dyadic_floor};
use crate::embedding::{self, opcount, CoefVector};
use crate::error::{Error, Result};
use crate::kaczmarz::{run_targets, KaczmarzConfig};
use crate::rng::{substream, substream_at_point, uniform_point, Stream};
use crate::{par, Point};

pub const DEFAULT_C1: f64 = 8.0;
pub const DEFAULT_MC_POINTS: usize = 200_000;
pub const MIN_MC_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<Point>,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn new(points: Vec<Point>, values: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::MalformedSamples {
                points: points.len(),
                values: values.len(),
            });
        }
        for &p in &points {
            check_point(p)?;
        }
        Ok(Self {
            points,
            values,
            seed,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Plain Monte Carlo estimate of the integral: the sample mean.
    pub fn mean_value(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Reads `x,y,value` rows; a non-numeric first line is taken as a header.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 3 => {
                    points.push([v[0], v[1]]);
                    values.push(v[2]);
                }
                Err(_) if lineno == 0 => continue,
                _ => {
                    return Err(Error::Format(format!(
                        "sample line {}: expected three numbers `x,y,value`",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(points, values, None)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// `l` i.i.d. uniform points from the seed's point stream, with `f` applied.
pub fn draw_samples<F>(f: F, l: usize, seed: u64) -> Result<SampleSet>
where
    F: Fn(Point) -> f64 + Sync,
{
    if l == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = substream(seed, Stream::Points);
    let points: Vec<Point> = (0..l).map(|_| uniform_point(&mut rng)).collect();
    let values = par::map_slice(&points, |&p| f(p));
    Ok(SampleSet {
        points,
        values,
        seed: Some(seed),
    })
}

/// `ceil(c1 * n * ln(n)^2)` with `n = 2^m`.
pub fn default_iterations(m: u32, c1: f64) -> usize {
    let n = (1u64 << m) as f64;
    (c1 * n * n.ln().powi(2)).ceil() as usize
}

/// Addition on the unit torus, per coordinate, with results in `[0,1)`.
#[inline]
pub fn torus_add(a: Point, b: Point) -> Point {
    let wrap = |s: f64| {
        let t = s - s.floor();
        if t >= 1.0 {
            0.0
        } else {
            t
        }
    };
    [wrap(a[0] + b[0]), wrap(a[1] + b[1])]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub iterations: usize,
    pub c1: Option<f64>,
    pub seed: Option<u64>,
    pub recenter_offset: f64,
    pub shift: Option<Point>,
}

impl Default for ModelMeta {
    fn default() -> Self {
        Self {
            iterations: 0,
            c1: None,
            seed: None,
            recenter_offset: 0.0,
            shift: None,
        }
    }
}

/// A fitted approximation `x -> <Ψ(x), coef> + recenter_offset`.
///
/// A model carrying a shift `ζ` approximates `f(· - ζ)`; evaluate it at
/// `x + ζ` (or wrap it in a [`SpinEnsemble`]) to approximate `f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub coef: CoefVector,
    pub meta: ModelMeta,
}

impl Model {
    pub fn new(coef: CoefVector, meta: ModelMeta) -> Self {
        Self { coef, meta }
    }

    pub fn zero(m: u32) -> Result<Self> {
        Ok(Self::new(CoefVector::zeros(m)?, ModelMeta::default()))
    }

    pub fn m(&self) -> u32 {
        self.coef.m()
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        check_point(p)?;
        Ok(self.eval_unchecked(p))
    }

    #[inline]
    fn eval_unchecked(&self, p: Point) -> f64 {
        let e = embedding::embed_unchecked(p, self.m());
        // levels agree by construction
        embedding::dot(&e, &self.coef).unwrap_or(f64::NAN) + self.meta.recenter_offset
    }

    /// Exact integral of the piecewise-constant approximation.
    pub fn integrate(&self) -> f64 {
        let n = 1usize << self.m();
        opcount::add(n as u64);
        self.coef.values()[..n].iter().sum::<f64>() / n as f64 + self.meta.recenter_offset
    }
}

pub fn evaluate(model: &Model, p: Point) -> Result<f64> {
    model.evaluate(p)
}

pub fn integrate(model: &Model) -> f64 {
    model.integrate()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FitOptions {
    /// Fit `f - f(X_1)` and add `f(X_1)` back on evaluation.
    pub recenter: bool,
    /// Recorded in the model metadata only.
    pub c1: Option<f64>,
}

pub fn fit(samples: &SampleSet, m: u32, cfg: &KaczmarzConfig) -> Result<Model> {
    fit_with(samples, m, cfg, FitOptions::default())
}

pub fn fit_with(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    opts: FitOptions,
) -> Result<Model> {
    fit_shifted(samples, m, cfg, opts, None)
}

fn fit_shifted(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    opts: FitOptions,
    shift: Option<Point>,
) -> Result<Model> {
    let offset = match (opts.recenter, samples.values().first()) {
        (true, Some(&v0)) => v0,
        _ => 0.0,
    };
    let (coef, _) = run_targets(samples, m, cfg, offset, shift, None)?;
    Ok(Model::new(
        coef,
        ModelMeta {
            iterations: cfg.iterations,
            c1: opts.c1,
            seed: samples.seed(),
            recenter_offset: offset,
            shift,
        },
    ))
}

/// Average of `q` shifted fits: `x -> (1/q) Σ f̃_k(x + ζ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEnsemble {
    pub shifts: Vec<Point>,
    pub models: Vec<Model>,
}

impl SpinEnsemble {
    pub fn new(shifts: Vec<Point>, models: Vec<Model>) -> Result<Self> {
        if shifts.is_empty() || shifts.len() != models.len() {
            return Err(Error::InvalidArgument(format!(
                "ensemble needs matching non-empty shifts and models ({} vs {})",
                shifts.len(),
                models.len()
            )));
        }
        let m = models[0].m();
        if let Some(bad) = models.iter().find(|md| md.m() != m) {
            return Err(Error::LevelMismatch {
                expected: m,
                found: bad.m(),
            });
        }
        Ok(Self { shifts, models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn m(&self) -> u32 {
        self.models[0].m()
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        check_point(p)?;
        Ok(self.eval_unchecked(p))
    }

    fn eval_unchecked(&self, p: Point) -> f64 {
        let total: f64 = self
            .models
            .iter()
            .zip(&self.shifts)
            .map(|(md, &z)| md.eval_unchecked(torus_add(p, z)))
            .sum();
        total / self.models.len() as f64
    }

    /// Translation on the torus preserves integrals, so this is the mean of
    /// the member integrals.
    pub fn integrate(&self) -> f64 {
        self.models.iter().map(Model::integrate).sum::<f64>() / self.models.len() as f64
    }
}

/// Draws `q` shifts from the shift stream of `shift_seed` and fits one
/// model per shift, in parallel.
pub fn fit_spin(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    q: usize,
    shift_seed: u64,
    opts: FitOptions,
) -> Result<SpinEnsemble> {
    if q == 0 {
        return Err(Error::InvalidArgument(
            "spin count must be at least 1".into(),
        ));
    }
    let mut rng = substream(shift_seed, Stream::Shifts);
    let shifts: Vec<Point> = (0..q).map(|_| uniform_point(&mut rng)).collect();
    fit_spin_with_shifts(samples, m, cfg, shifts, opts)
}

pub fn fit_spin_with_shifts(
    samples: &SampleSet,
    m: u32,
    cfg: &KaczmarzConfig,
    shifts: Vec<Point>,
    opts: FitOptions,
) -> Result<SpinEnsemble> {
    check_level(m)?;
    for &z in &shifts {
        check_point(z)?;
    }
    let models = par::map_slice(&shifts, |&z| fit_shifted(samples, m, cfg, opts, Some(z)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    SpinEnsemble::new(shifts, models)
}

/// Anything that can be evaluated pointwise on `[0,1)^2`.
pub trait Approximant: Sync {
    /// `p` must lie in `[0,1)^2`.
    fn value(&self, p: Point) -> f64;
}

impl Approximant for Model {
    fn value(&self, p: Point) -> f64 {
        debug_assert!(check_point(p).is_ok());
        self.eval_unchecked(p)
    }
}

impl Approximant for SpinEnsemble {
    fn value(&self, p: Point) -> f64 {
        debug_assert!(check_point(p).is_ok());
        self.eval_unchecked(p)
    }
}

/// Adapter for plain functions.
pub struct FnApproximant<F>(pub F);

impl<F: Fn(Point) -> f64 + Sync> Approximant for FnApproximant<F> {
    fn value(&self, p: Point) -> f64 {
        (self.0)(p)
    }
}

/// Monte Carlo estimate of `||f - approx||_{L^2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Estimate {
    /// `sqrt(mean of squared deviations)`.
    pub estimate: f64,
    /// Delta-method standard error of `estimate`.
    pub std_error: f64,
    pub mean_square: f64,
    pub mean_square_std_error: f64,
    pub points: usize,
}

pub fn l2_error<A, F>(approx: &A, f: F, mc_points: usize, seed: u64) -> Result<L2Estimate>
where
    A: Approximant + ?Sized,
    F: Fn(Point) -> f64 + Sync,
{
    if mc_points < MIN_MC_POINTS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_MC_POINTS} Monte Carlo points are required, got {mc_points}"
        )));
    }
    let [s1, s2] = par::chunked_sum(mc_points, |start, end| {
        let mut rng = substream_at_point(seed, Stream::Evaluation, start as u64);
        let mut acc = [0.0; 2];
        for _ in start..end {
            let p = uniform_point(&mut rng);
            let d = f(p) - approx.value(p);
            let d2 = d * d;
            acc[0] += d2;
            acc[1] += d2 * d2;
        }
        acc
    });
    let n = mc_points as f64;
    let mean_square = s1 / n;
    let var = ((s2 / n - mean_square * mean_square) * n / (n - 1.0)).max(0.0);
    let ms_se = (var / n).sqrt();
    let estimate = mean_square.sqrt();
    let std_error = if estimate > 0.0 {
        ms_se / (2.0 * estimate)
    } else {
        0.0
    };
    Ok(L2Estimate {
        estimate,
        std_error,
        mean_square,
        mean_square_std_error: ms_se,
        points: mc_points,
    })
}

/// Index of the `2^-m` cell containing `p`, row-major in y then x.
pub fn cell_index(p: Point, m: u32) -> usize {
    ((dyadic_floor(p[1], m) as usize) << m) + dyadic_floor(p[0], m) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::cell_centers;
    use crate::smolyak::{build_weight_vector, smolyak_eval, CenterSamples};

    fn wave(p: Point) -> f64 {
        use std::f64::consts::PI;
        (20.0 * p[0] * p[0] + 10.0 * p[1]).sin() * (PI * p[0]).sin() * (PI * p[1]).sin()
    }

    #[test]
    fn draw_is_deterministic_and_uniform() {
        let a = draw_samples(wave, 1000, 5).unwrap();
        let b = draw_samples(wave, 1000, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, draw_samples(wave, 1000, 6).unwrap());

        let big = draw_samples(|_| 7.0, 100_000, 1).unwrap();
        assert!(big.values().iter().all(|&v| v == 7.0));
        let mean_x = big.points().iter().map(|p| p[0]).sum::<f64>() / 1e5;
        // three standard errors of a U(0,1) mean, times three
        assert!((mean_x - 0.5).abs() < 3.0 * 3.0 / (12.0f64 * 1e5).sqrt());
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![[0.1, 0.2]], vec![], None).is_err());
        assert!(SampleSet::new(vec![[1.0, 0.2]], vec![0.0], None).is_err());
        assert!(draw_samples(wave, 0, 1).is_err());
    }

    #[test]
    fn csv_reader() {
        let text = "x,y,value\n0.1,0.2,3.5\n0.5, 0.25, -1\n\n";
        let s = SampleSet::read_csv(text.as_bytes()).unwrap();
        assert_eq!(s.points(), &[[0.1, 0.2], [0.5, 0.25]]);
        assert_eq!(s.values(), &[3.5, -1.0]);
        assert!(SampleSet::read_csv("x,y,value\n0.1,0.2\n".as_bytes()).is_err());
        assert!(SampleSet::read_csv("0.1,1.5,2\n".as_bytes()).is_err());
    }

    #[test]
    fn iteration_budget() {
        // 8 * 128 * ln(128)^2
        assert_eq!(default_iterations(7, 8.0), 24_108);
        assert_eq!(default_iterations(3, 8.0), 277);
    }

    #[test]
    fn torus_addition_stays_in_unit_square() {
        assert_eq!(torus_add([0.75, 0.5], [0.5, 0.25]), [0.25, 0.75]);
        assert_eq!(torus_add([0.5, 0.0], [0.5, 0.0]), [0.0, 0.0]);
        let p = torus_add([1.0 - f64::EPSILON / 2.0, 0.3], [f64::EPSILON / 8.0, 0.0]);
        assert!(p[0] >= 0.0 && p[0] < 1.0);
    }

    #[test]
    fn zero_model_evaluates_and_integrates_to_zero() {
        let z = Model::zero(5).unwrap();
        assert_eq!(z.evaluate([0.3, 0.9]).unwrap(), 0.0);
        assert_eq!(z.integrate(), 0.0);
        assert!(z.evaluate([0.3, 1.0]).is_err());
    }

    #[test]
    fn piecewise_constant_on_cells() {
        let s = draw_samples(wave, 2000, 3).unwrap();
        let model = fit(&s, 5, &KaczmarzConfig::new(2000, 0)).unwrap();
        let h = 1.0 / 32.0;
        for cell in [0usize, 17, 513, 1023] {
            let (cx, cy) = ((cell % 32) as f64, (cell / 32) as f64);
            let a = model
                .evaluate([cx * h + 0.1 * h, cy * h + 0.2 * h])
                .unwrap();
            let b = model
                .evaluate([cx * h + 0.9 * h, cy * h + 0.7 * h])
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_cell_constant_is_recovered() {
        let m = 4;
        let p0 = [0.40, 0.70];
        let pts = vec![p0; 5000];
        let s = SampleSet::new(pts, vec![2.5; 5000], None).unwrap();
        let model = fit(&s, m, &KaczmarzConfig::new(5000, 0)).unwrap();
        assert!((model.evaluate([0.41, 0.71]).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn oracle_weights_reproduce_smolyak() {
        for m in 1..=5 {
            let cs = CenterSamples::from_fn(m, wave).unwrap();
            let model = Model::new(build_weight_vector(&cs).unwrap(), ModelMeta::default());
            for p in cell_centers(m) {
                let a = model.evaluate(p).unwrap();
                assert!((a - smolyak_eval(&cs, p).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn integral_equals_cell_average() {
        for m in 1..=5 {
            let s = draw_samples(wave, 3000, m as u64).unwrap();
            let model = fit_with(
                &s,
                m,
                &KaczmarzConfig::new(3000, 0),
                FitOptions {
                    recenter: true,
                    c1: None,
                },
            )
            .unwrap();
            let avg = cell_centers(m)
                .map(|p| model.evaluate(p).unwrap())
                .sum::<f64>()
                / (1u64 << (2 * m)) as f64;
            assert!((model.integrate() - avg).abs() < 1e-10, "m={m}");
        }
    }

    #[cfg(debug_assertions)]
    #[test]
    fn evaluation_and_integration_touch_counts() {
        let m = 9;
        let model = Model::zero(m).unwrap();
        opcount::reset();
        model.evaluate([0.123, 0.456]).unwrap();
        assert_eq!(opcount::get(), Some(m as u64 + 1));
        opcount::reset();
        model.integrate();
        assert_eq!(opcount::get(), Some(1 << m));
    }

    #[test]
    fn recentering_is_transparent_for_constants() {
        let s = draw_samples(|_| 4.25, 300, 9).unwrap();
        let opts = FitOptions {
            recenter: true,
            c1: None,
        };
        let model = fit_with(&s, 3, &KaczmarzConfig::new(300, 0), opts).unwrap();
        assert_eq!(model.meta.recenter_offset, 4.25);
        assert!(model.coef.values().iter().all(|&v| v == 0.0));
        assert_eq!(model.integrate(), 4.25);
        assert_eq!(model.evaluate([0.9, 0.1]).unwrap(), 4.25);
    }

    #[test]
    fn unshifted_single_spin_equals_plain_fit() {
        let s = draw_samples(wave, 4000, 11).unwrap();
        let cfg = KaczmarzConfig::new(4000, 0);
        let plain = fit(&s, 6, &cfg).unwrap();
        let ens =
            fit_spin_with_shifts(&s, 6, &cfg, vec![[0.0, 0.0]], FitOptions::default()).unwrap();
        assert_eq!(ens.models[0].coef, plain.coef);
        for p in cell_centers(6).step_by(37) {
            assert_eq!(ens.evaluate(p).unwrap(), plain.evaluate(p).unwrap());
        }
    }

    #[test]
    fn identical_unshifted_members_average_to_member() {
        let s = draw_samples(wave, 1000, 12).unwrap();
        let model = fit(&s, 4, &KaczmarzConfig::new(1000, 0)).unwrap();
        let ens = SpinEnsemble::new(vec![[0.0, 0.0]; 3], vec![model.clone(); 3]).unwrap();
        for p in cell_centers(4) {
            let a = ens.evaluate(p).unwrap();
            let b = model.evaluate(p).unwrap();
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn single_shift_round_trip() {
        let s = draw_samples(wave, 2000, 13).unwrap();
        let z = [0.3141, 0.2718];
        let ens = fit_spin_with_shifts(
            &s,
            5,
            &KaczmarzConfig::new(2000, 0),
            vec![z],
            FitOptions::default(),
        )
        .unwrap();
        let mut rng = substream(99, Stream::Evaluation);
        for _ in 0..500 {
            let p = uniform_point(&mut rng);
            assert_eq!(
                ens.evaluate(p).unwrap(),
                ens.models[0].evaluate(torus_add(p, z)).unwrap()
            );
        }
        assert_eq!(ens.models[0].meta.shift, Some(z));
    }

    #[test]
    fn spin_shifts_are_seeded() {
        let s = draw_samples(wave, 500, 14).unwrap();
        let cfg = KaczmarzConfig::new(500, 0);
        let a = fit_spin(&s, 3, &cfg, 4, 77, FitOptions::default()).unwrap();
        let b = fit_spin(&s, 3, &cfg, 4, 77, FitOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(fit_spin(&s, 3, &cfg, 0, 77, FitOptions::default()).is_err());
    }

    #[test]
    fn l2_error_trivial_cases() {
        let s = draw_samples(wave, 2000, 15).unwrap();
        let model = fit(&s, 5, &KaczmarzConfig::new(2000, 0)).unwrap();
        let self_err = l2_error(&model, |p| model.value(p), 1000, 1).unwrap();
        assert_eq!(self_err.estimate, 0.0);

        let zero = Model::zero(4).unwrap();
        let e = l2_error(&zero, |_| 1.0, 1000, 2).unwrap();
        assert!((e.estimate - 1.0).abs() <= 3.0 * e.std_error + 1e-15);
        assert!(l2_error(&zero, |_| 1.0, 99, 2).is_err());
    }

    #[test]
    fn l2_error_is_reproducible_and_has_sane_standard_error() {
        let zero = Model::zero(4).unwrap();
        let f = |p: Point| p[0] - 0.5;
        let a = l2_error(&zero, f, 50_000, 3).unwrap();
        assert_eq!(a, l2_error(&zero, f, 50_000, 3).unwrap());
        // exact: sqrt(1/12)
        let exact = (1.0f64 / 12.0).sqrt();
        assert!((a.estimate - exact).abs() < 4.0 * a.std_error);
        assert!(a.std_error > 0.0 && a.std_error < 1e-2);
    }

    #[test]
    fn cell_index_is_row_major() {
        assert_eq!(cell_index([0.0, 0.0], 3), 0);
        assert_eq!(cell_index([0.99, 0.0], 3), 7);
        assert_eq!(cell_index([0.0, 0.13], 3), 8);
    }
}
