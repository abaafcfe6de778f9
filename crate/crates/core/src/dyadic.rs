//! Dyadic rectangles of the unit square and the coordinate layout of the
//! embedding space.
//!
//! A level `m` fixes two families of rectangles:
//!
//! * the `R` block: `2^m` horizontal strips of width 1 and height `2^-m`;
//! * the `T` block: `m * 2^(m-1)` rectangles of area `2^(-m+1)`, grouped in
//!   `m` bands. Band `k` holds the rectangles of width `2^-k` and height
//!   `2^(k-m+1)`, ordered row-major with the column varying fastest.
//!
//! Global indices are 0-based: `0..2^m` is the `R` block, and
//! `2^m + k*2^(m-1) + r*2^k + c` is the band-`k` rectangle in row `r`,
//! column `c`.

use std::fmt;

use arrayvec::ArrayVec;

use crate::error::{Error, Result};
use crate::Point;

pub const MAX_LEVEL: u32 = 26;

pub fn check_level(m: u32) -> Result<()> {
    if (1..=MAX_LEVEL).contains(&m) {
        Ok(())
    } else {
        Err(Error::LevelOutOfRange(m))
    }
}

/// Embedding dimension `(m+2) * 2^(m-1)`.
#[inline]
pub fn dim(m: u32) -> usize {
    (m as usize + 2) << (m - 1)
}

pub fn check_point(p: Point) -> Result<()> {
    let ok = |t: f64| (0.0..1.0).contains(&t);
    if ok(p[0]) && ok(p[1]) {
        Ok(())
    } else {
        Err(Error::PointOutOfDomain(p[0], p[1]))
    }
}

/// `floor(t * 2^k)`; exact in double precision for `k <= 52`.
#[inline]
pub(crate) fn dyadic_floor(t: f64, k: u32) -> u64 {
    (t * (1u64 << k) as f64) as u64
}

/// `[ix 2^-kx, (ix+1) 2^-kx) x [iy 2^-ky, (iy+1) 2^-ky)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicRect {
    pub kx: u32,
    pub ky: u32,
    pub ix: u64,
    pub iy: u64,
}

impl DyadicRect {
    pub fn new(kx: u32, ky: u32, ix: u64, iy: u64) -> Result<Self> {
        if kx > 62 || ky > 62 || ix >= 1u64 << kx || iy >= 1u64 << ky {
            return Err(Error::InvalidArgument(format!(
                "no dyadic rectangle with levels ({kx}, {ky}) at position ({ix}, {iy})"
            )));
        }
        Ok(Self { kx, ky, ix, iy })
    }

    /// The rectangle of the given shape containing `p`.
    pub fn containing(kx: u32, ky: u32, p: Point) -> Self {
        Self {
            kx,
            ky,
            ix: dyadic_floor(p[0], kx),
            iy: dyadic_floor(p[1], ky),
        }
    }

    pub fn width(&self) -> f64 {
        (-(self.kx as f64)).exp2()
    }

    pub fn height(&self) -> f64 {
        (-(self.ky as f64)).exp2()
    }

    pub fn area(&self) -> f64 {
        (-((self.kx + self.ky) as f64)).exp2()
    }

    pub fn x_interval(&self) -> (f64, f64) {
        let w = self.width();
        (self.ix as f64 * w, (self.ix + 1) as f64 * w)
    }

    pub fn y_interval(&self) -> (f64, f64) {
        let h = self.height();
        (self.iy as f64 * h, (self.iy + 1) as f64 * h)
    }

    pub fn center(&self) -> Point {
        [
            (self.ix as f64 + 0.5) * self.width(),
            (self.iy as f64 + 0.5) * self.height(),
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        let (x0, x1) = self.x_interval();
        let (y0, y1) = self.y_interval();
        x0 <= p[0] && p[0] < x1 && y0 <= p[1] && p[1] < y1
    }

    /// Left and right halves (split in x).
    pub fn halves(&self) -> (DyadicRect, DyadicRect) {
        let left = DyadicRect {
            kx: self.kx + 1,
            ky: self.ky,
            ix: 2 * self.ix,
            iy: self.iy,
        };
        let right = DyadicRect {
            ix: 2 * self.ix + 1,
            ..left
        };
        (left, right)
    }

    /// All `2^kx * 2^ky` rectangles of this shape, row-major in y then x.
    pub fn all_of_shape(kx: u32, ky: u32) -> impl Iterator<Item = DyadicRect> {
        (0..1u64 << ky)
            .flat_map(move |iy| (0..1u64 << kx).map(move |ix| DyadicRect { kx, ky, ix, iy }))
    }
}

impl fmt::Display for DyadicRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}/2^{}, {}/2^{}) x [{}/2^{}, {}/2^{})",
            self.ix,
            self.kx,
            self.ix + 1,
            self.kx,
            self.iy,
            self.ky,
            self.iy + 1,
            self.ky
        )
    }
}

/// Two half-open dyadic intervals overlap in positive length iff the coarser
/// one contains the finer one.
#[inline]
fn intervals_nest(ka: u32, ia: u64, kb: u32, ib: u64) -> bool {
    if ka <= kb {
        ib >> (kb - ka) == ia
    } else {
        ia >> (ka - kb) == ib
    }
}

/// True iff the open interiors of `a` and `b` overlap.
pub fn intersects_positively(a: &DyadicRect, b: &DyadicRect) -> bool {
    intervals_nest(a.kx, a.ix, b.kx, b.ix) && intervals_nest(a.ky, a.iy, b.ky, b.iy)
}

/// Index arithmetic for the embedding coordinates at level `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexLayout {
    m: u32,
}

impl IndexLayout {
    pub fn new(m: u32) -> Result<Self> {
        check_level(m)?;
        Ok(Self { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        dim(self.m)
    }

    /// Number of `R` coordinates, `n = 2^m`.
    pub fn r_count(&self) -> usize {
        1 << self.m
    }

    pub fn band_len(&self) -> usize {
        1 << (self.m - 1)
    }

    /// Band of a global `T` index.
    pub fn band_of(&self, j: usize) -> Option<u32> {
        if j < self.r_count() || j >= self.dim() {
            return None;
        }
        Some(((j - self.r_count()) >> (self.m - 1)) as u32)
    }

    /// Global index of the band-`band` `T` rectangle at column `c`, row `r`.
    #[inline]
    pub fn t_index(&self, band: u32, c: u64, r: u64) -> usize {
        self.r_count() + ((band as usize) << (self.m - 1)) + ((r as usize) << band) + c as usize
    }

    pub fn rect_of_index(&self, j: usize) -> Result<DyadicRect> {
        let m = self.m;
        if j < self.r_count() {
            return Ok(DyadicRect {
                kx: 0,
                ky: m,
                ix: 0,
                iy: j as u64,
            });
        }
        let band = self.band_of(j).ok_or(Error::IndexOutOfRange {
            index: j,
            m,
            dim: self.dim(),
        })?;
        let local = (j - self.r_count()) & (self.band_len() - 1);
        Ok(DyadicRect {
            kx: band,
            ky: m - band - 1,
            ix: (local & ((1 << band) - 1)) as u64,
            iy: (local >> band) as u64,
        })
    }
}

/// Where a point sits in the embedding layout.
///
/// `beta[0]` is the `R` strip containing the point; `beta[k]` for `k >= 1` is
/// the band-`(k-1)` `T` rectangle containing it, and `sign[k-1]` is `+1` when
/// the point lies in that rectangle's left half, `-1` for the right half.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub beta: ArrayVec<usize, { MAX_LEVEL as usize + 1 }>,
    pub sign: ArrayVec<i8, { MAX_LEVEL as usize }>,
}

pub fn locate(p: Point, m: u32) -> Result<Location> {
    check_level(m)?;
    check_point(p)?;
    Ok(locate_unchecked(p, m))
}

/// [`locate`] without validation; `m` and `p` must already be in range.
#[inline]
pub(crate) fn locate_unchecked(p: Point, m: u32) -> Location {
    let layout = IndexLayout { m };
    let mut beta = ArrayVec::new();
    let mut sign = ArrayVec::new();
    beta.push(dyadic_floor(p[1], m) as usize);
    for k in 1..=m {
        let c = dyadic_floor(p[0], k - 1);
        let r = dyadic_floor(p[1], m - k);
        beta.push(layout.t_index(k - 1, c, r));
        sign.push(if dyadic_floor(p[0], k).is_multiple_of(2) {
            1
        } else {
            -1
        });
    }
    Location { beta, sign }
}

pub fn rect_of_index(j: usize, m: u32) -> Result<DyadicRect> {
    IndexLayout::new(m)?.rect_of_index(j)
}

pub fn halves(t: &DyadicRect) -> (DyadicRect, DyadicRect) {
    t.halves()
}
