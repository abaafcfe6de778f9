//! Smolyak combination from center samples, and the weight vector that
//! reproduces it as a linear functional of the embedding.
//!
//! The combination at level `m` adds `f` at the centers of the `m + 1`
//! area-`2^-m` rectangles containing `x` and subtracts `f` at the centers of
//! the `m` area-`2^(-m+1)` rectangles containing `x`.
//!
//! [`build_weight_vector`] produces `w` with `<Ψ(x), w>` equal to that
//! combination at every point. For a `T` coordinate in band `b` the inner sum
//! over widths starts at level `b + 1`, the width level of the rectangle's
//! halves ([`BandOffset::Halves`]). Starting at the rectangle's own width
//! level `b` ([`BandOffset::Rectangle`]) breaks exactness at every `m`
//! tested (1 through 5); the exactness tests below check both, and the
//! verification command uses the wrong one as a mutation check.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::dyadic::{self, check_level, check_point, DyadicRect, IndexLayout};
use crate::embedding::CoefVector;
use crate::error::{Error, Result};
use crate::{par, Point};

/// `f` at the centers of every area-`2^-m` (fine) and area-`2^(-m+1)`
/// (coarse) dyadic rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSamples {
    m: u32,
    /// `fine[k]`: shape `(k, m-k)`, indexed `iy * 2^k + ix`.
    fine: Vec<Vec<f64>>,
    /// `coarse[k]`: shape `(k, m-1-k)`, indexed `iy * 2^k + ix`.
    coarse: Vec<Vec<f64>>,
}

impl CenterSamples {
    pub fn from_fn<F>(m: u32, f: F) -> Result<Self>
    where
        F: Fn(Point) -> f64 + Sync,
    {
        check_level(m)?;
        let sample = |kx: u32, ky: u32| -> Vec<f64> {
            DyadicRect::all_of_shape(kx, ky)
                .map(|r| f(r.center()))
                .collect()
        };
        let fine = (0..=m).map(|k| sample(k, m - k)).collect();
        let coarse = (0..m).map(|k| sample(k, m - 1 - k)).collect();
        Ok(Self { m, fine, coarse })
    }

    /// Builds from explicit per-shape value tables, validating their sizes.
    pub fn from_tables(m: u32, fine: Vec<Vec<f64>>, coarse: Vec<Vec<f64>>) -> Result<Self> {
        check_level(m)?;
        let n = 1usize << m;
        let bad = |what: &str| Error::InvalidArgument(format!("malformed {what} center table"));
        if fine.len() != m as usize + 1 || fine.iter().any(|t| t.len() != n) {
            return Err(bad("fine"));
        }
        if coarse.len() != m as usize || coarse.iter().any(|t| t.len() != n / 2) {
            return Err(bad("coarse"));
        }
        Ok(Self { m, fine, coarse })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn fine_count(&self) -> usize {
        self.fine.iter().map(Vec::len).sum()
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse.iter().map(Vec::len).sum()
    }

    /// Sample at the center of `rect`, if `rect` has area `2^-m` or `2^(-m+1)`.
    pub fn get(&self, rect: &DyadicRect) -> Option<f64> {
        let table = if rect.kx + rect.ky == self.m {
            self.fine.get(rect.kx as usize)?
        } else if rect.kx + rect.ky + 1 == self.m {
            self.coarse.get(rect.kx as usize)?
        } else {
            return None;
        };
        table
            .get(((rect.iy as usize) << rect.kx) + rect.ix as usize)
            .copied()
    }

    fn lookup(&self, rect: &DyadicRect) -> Result<f64> {
        self.get(rect)
            .ok_or_else(|| Error::MissingSample(rect.to_string()))
    }

    /// Sum over all rectangles of shape `(kx, ky)` whose interior meets
    /// `rect`'s interior.
    fn sum_overlapping(&self, kx: u32, ky: u32, rect: &DyadicRect) -> Result<f64> {
        let (x0, nx) = overlapping_range(kx, rect.kx, rect.ix);
        let (y0, ny) = overlapping_range(ky, rect.ky, rect.iy);
        let mut acc = 0.0;
        for iy in y0..y0 + ny {
            for ix in x0..x0 + nx {
                acc += self.lookup(&DyadicRect { kx, ky, ix, iy })?;
            }
        }
        Ok(acc)
    }
}

/// Positions at `level` of the dyadic intervals overlapping interval
/// `pos` at `rect_level`: `(first, count)`.
#[inline]
fn overlapping_range(level: u32, rect_level: u32, pos: u64) -> (u64, u64) {
    if level >= rect_level {
        (pos << (level - rect_level), 1 << (level - rect_level))
    } else {
        (pos >> (rect_level - level), 1)
    }
}

pub fn smolyak_eval(s: &CenterSamples, p: Point) -> Result<f64> {
    check_point(p)?;
    let m = s.m;
    let mut acc = 0.0;
    for k in 0..=m {
        acc += s.lookup(&DyadicRect::containing(k, m - k, p))?;
    }
    for k in 1..=m {
        acc -= s.lookup(&DyadicRect::containing(k - 1, m - k, p))?;
    }
    Ok(acc)
}

/// Fine-minus-coarse center sum at width level `r` over the rectangles that
/// meet `rect` in positive area. The coarse family is empty at `r = m`.
pub fn s_r(s: &CenterSamples, rect: &DyadicRect, r: u32) -> Result<f64> {
    let m = s.m;
    if r > m {
        return Err(Error::InvalidArgument(format!(
            "width level {r} exceeds m = {m}"
        )));
    }
    let fine = s.sum_overlapping(r, m - r, rect)?;
    let coarse = if r < m {
        s.sum_overlapping(r, m - 1 - r, rect)?
    } else {
        0.0
    };
    Ok(fine - coarse)
}

/// Where the width sum for a band-`b` `T` coordinate starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BandOffset {
    /// Level `b + 1`, the width of the rectangle's halves. Exact.
    #[default]
    Halves,
    /// Level `b`, the width of the rectangle itself. Not exact; kept as a
    /// mutation check.
    Rectangle,
}

pub fn build_weight_vector(s: &CenterSamples) -> Result<CoefVector> {
    build_weight_vector_with(s, BandOffset::Halves)
}

pub fn build_weight_vector_with(s: &CenterSamples, offset: BandOffset) -> Result<CoefVector> {
    let m = s.m;
    let layout = IndexLayout::new(m)?;
    let entries = par::map_range(layout.dim(), |j| weight_entry(s, &layout, j, offset));
    let values = entries.into_iter().collect::<Result<Vec<f64>>>()?;
    CoefVector::from_values(m, values)
}

fn weight_entry(
    s: &CenterSamples,
    layout: &IndexLayout,
    j: usize,
    offset: BandOffset,
) -> Result<f64> {
    let m = s.m;
    let rect = layout.rect_of_index(j)?;
    match layout.band_of(j) {
        None => {
            let mut acc = 0.0;
            for r in 0..=m {
                acc += (-(r as f64)).exp2() * s_r(s, &rect, r)?;
            }
            Ok(acc)
        }
        Some(band) => {
            let kappa = match offset {
                BandOffset::Halves => band + 1,
                BandOffset::Rectangle => band,
            };
            let (left, right) = dyadic::halves(&rect);
            let mut acc = 0.0;
            for r in kappa..=m {
                acc += (-(r as f64)).exp2() * (s_r(s, &left, r)? - s_r(s, &right, r)?);
            }
            Ok((kappa as f64).exp2() * FRAC_1_SQRT_2 * acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::intersects_positively;
    use crate::embedding::{cell_centers, dot, embed};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    type Named = (&'static str, fn(Point) -> f64);

    fn test_functions() -> Vec<Named> {
        vec![
            ("bilinear", |p| p[0] * p[1]),
            ("separable", |p| (3.0 * p[0]).sin()),
            ("wave", |p| {
                (20.0 * p[0] * p[0] + 10.0 * p[1]).sin()
                    * (std::f64::consts::PI * p[0]).sin()
                    * (std::f64::consts::PI * p[1]).sin()
            }),
            ("kink", |p| ((p[0] - 0.5).abs() * (p[1] - 0.5).abs()).sqrt()),
            ("exp", |p| (p[0] - 2.0 * p[1]).exp()),
        ]
    }

    /// s_r by scanning every rectangle of the two shapes and filtering with
    /// the positive-intersection predicate.
    fn s_r_scan(s: &CenterSamples, rect: &DyadicRect, r: u32, f: impl Fn(Point) -> f64) -> f64 {
        let m = s.m();
        let fine: f64 = DyadicRect::all_of_shape(r, m - r)
            .filter(|q| intersects_positively(q, rect))
            .map(|q| f(q.center()))
            .sum();
        let coarse: f64 = if r < m {
            DyadicRect::all_of_shape(r, m - 1 - r)
                .filter(|q| intersects_positively(q, rect))
                .map(|q| f(q.center()))
                .sum()
        } else {
            0.0
        };
        fine - coarse
    }

    fn max_exactness_gap(m: u32, f: fn(Point) -> f64, offset: BandOffset) -> f64 {
        let s = CenterSamples::from_fn(m, f).unwrap();
        let w = build_weight_vector_with(&s, offset).unwrap();
        cell_centers(m)
            .map(|p| (dot(&embed(p, m).unwrap(), &w).unwrap() - smolyak_eval(&s, p).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sample_counts() {
        for m in 1..=8 {
            let s = CenterSamples::from_fn(m, |_| 0.0).unwrap();
            assert_eq!(s.fine_count(), (m as usize + 1) << m);
            assert_eq!(s.coarse_count(), (m as usize) << (m - 1));
        }
    }

    #[test]
    fn constant_is_reproduced() {
        let s = CenterSamples::from_fn(5, |_| 2.5).unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let v = smolyak_eval(&s, [r.gen(), r.gen()]).unwrap();
            assert!((v - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn x_only_function_telescopes_to_finest_center() {
        let g = |t: f64| (3.0 * t).sin() + t * t;
        let m = 6;
        let s = CenterSamples::from_fn(m, |p| g(p[0])).unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p: Point = [r.gen(), r.gen()];
            let xm = DyadicRect::containing(m, 0, p).center()[0];
            assert!((smolyak_eval(&s, p).unwrap() - g(xm)).abs() < 1e-13);
        }
    }

    #[test]
    fn bilinear_at_level_three_by_hand() {
        // (0.3, 0.6), m = 3. Fine centers (k, 3-k):
        //   (0.5, 0.5625) (0.25, 0.625) (0.375, 0.75) (0.3125, 0.5)
        // coarse centers (k-1, 3-k):
        //   (0.5, 0.625) (0.25, 0.75) (0.375, 0.5)
        let fine = 0.5 * 0.5625 + 0.25 * 0.625 + 0.375 * 0.75 + 0.3125 * 0.5;
        let coarse = 0.5 * 0.625 + 0.25 * 0.75 + 0.375 * 0.5;
        assert_eq!(fine - coarse, 0.1875);
        let s = CenterSamples::from_fn(3, |p| p[0] * p[1]).unwrap();
        assert!((smolyak_eval(&s, [0.3, 0.6]).unwrap() - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn s_r_matches_scan() {
        let f = |p: Point| (p[0] + 2.0 * p[1]).cos() + p[0] * p[1];
        for m in 1..=5 {
            let s = CenterSamples::from_fn(m, f).unwrap();
            let layout = IndexLayout::new(m).unwrap();
            for j in 0..layout.dim() {
                let rect = layout.rect_of_index(j).unwrap();
                let (l, rr) = rect.halves();
                for q in [rect, l, rr] {
                    if q.kx > m {
                        continue;
                    }
                    for r in 0..=m {
                        let a = s_r(&s, &q, r).unwrap();
                        let b = s_r_scan(&s, &q, r, f);
                        assert!((a - b).abs() < 1e-12, "m={m} rect={q} r={r}");
                    }
                }
            }
        }
    }

    #[test]
    fn s_r_at_top_level_sums_column() {
        let m = 4;
        let f = |p: Point| p[0] + 10.0 * p[1];
        let s = CenterSamples::from_fn(m, f).unwrap();
        // a width-2^-m column meets exactly one width-2^-m fine rectangle: itself
        let col = DyadicRect::new(m, 0, 5, 0).unwrap();
        assert!((s_r(&s, &col, m).unwrap() - f(col.center())).abs() < 1e-13);

        // a width-1 strip meets all 2^m of them
        let strip = DyadicRect::new(0, m, 0, 3).unwrap();
        let along: f64 = (0..1u64 << m)
            .map(|ix| f(DyadicRect::new(m, 0, ix, 0).unwrap().center()))
            .sum();
        assert!((s_r(&s, &strip, m).unwrap() - along).abs() < 1e-12);
    }

    #[test]
    fn s_r_counts_for_unit_function() {
        let m = 4;
        let s = CenterSamples::from_fn(m, |_| 1.0).unwrap();
        let layout = IndexLayout::new(m).unwrap();
        for j in 0..layout.dim() {
            let rect = layout.rect_of_index(j).unwrap();
            for r in 0..=m {
                let nf = DyadicRect::all_of_shape(r, m - r)
                    .filter(|q| intersects_positively(q, &rect))
                    .count() as f64;
                let nc = if r < m {
                    DyadicRect::all_of_shape(r, m - 1 - r)
                        .filter(|q| intersects_positively(q, &rect))
                        .count() as f64
                } else {
                    0.0
                };
                assert_eq!(s_r(&s, &rect, r).unwrap(), nf - nc);
            }
        }
    }

    #[test]
    fn s_zero_of_strip_is_two_term_difference() {
        let m = 4;
        let f = |p: Point| (5.0 * p[0] * p[1]).sin() + p[1];
        let s = CenterSamples::from_fn(m, f).unwrap();
        let layout = IndexLayout::new(m).unwrap();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p: Point = [r.gen(), r.gen()];
            let loc = dyadic::locate(p, m).unwrap();
            let strip = layout.rect_of_index(loc.beta[0]).unwrap();
            let t1 = layout.rect_of_index(loc.beta[1]).unwrap();
            let expect = f(strip.center()) - f(t1.center());
            assert!((s_r(&s, &strip, 0).unwrap() - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_function_gives_zero_weights() {
        let s = CenterSamples::from_fn(5, |_| 0.0).unwrap();
        let w = build_weight_vector(&s).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn weights_for_x_at_level_one_by_hand() {
        // fine centers: (0.5,0.25) (0.5,0.75) (0.25,0.5) (0.75,0.5); coarse (0.5,0.5)
        // w_R = s_0 + s_1/2 = (0.5 - 0.5) + (0.25 + 0.75)/2 = 0.5
        // w_T = (2/√2) * (s_1(T+) - s_1(T-))/2 = √2 * (0.25 - 0.75)/2
        let s = CenterSamples::from_fn(1, |p| p[0]).unwrap();
        let w = build_weight_vector(&s).unwrap();
        let expect = [0.5, 0.5, -std::f64::consts::SQRT_2 / 4.0];
        for (a, b) in w.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // rectangle-width offset: (1/√2) * (0 + (0.25 - 0.75)/2)
        let wrong = build_weight_vector_with(&s, BandOffset::Rectangle).unwrap();
        assert!((wrong.values()[2] + 0.25 * FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn exactness_selects_the_halves_offset() {
        for m in 1..=5 {
            let mut worst_bad = 0.0f64;
            for (name, f) in test_functions() {
                let good = max_exactness_gap(m, f, BandOffset::Halves);
                assert!(good < 1e-10, "{name} m={m}: gap {good}");
                worst_bad = worst_bad.max(max_exactness_gap(m, f, BandOffset::Rectangle));
            }
            // functions symmetric about x = 1/2 cannot tell the offsets apart,
            // so the rectangle offset only has to fail for some function
            assert!(
                worst_bad > 1e-3,
                "m={m}: rectangle offset unexpectedly exact"
            );
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(
            CenterSamples::from_tables(2, vec![vec![0.0; 4]; 3], vec![vec![0.0; 2]; 2]).is_ok()
        );
        assert!(
            CenterSamples::from_tables(2, vec![vec![0.0; 4]; 2], vec![vec![0.0; 2]; 2]).is_err()
        );
        assert!(
            CenterSamples::from_tables(2, vec![vec![0.0; 4]; 3], vec![vec![0.0; 3]; 2]).is_err()
        );
        let s = CenterSamples::from_fn(3, |_| 1.0).unwrap();
        assert!(s.get(&DyadicRect::new(1, 0, 0, 0).unwrap()).is_none());
        assert!(s_r(&s, &DyadicRect::new(0, 0, 0, 0).unwrap(), 4).is_err());
    }
}
