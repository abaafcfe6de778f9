//! Named test functions on the unit square.

use std::f64::consts::PI;

use crate::Point;

/// Integral of `paper-example` over the unit square.
///
/// Midpoint rule at 4096^2 and 8192^2 cells (agreeing to 2e-10) followed by
/// one Richardson step; see `examples/reference_integral.rs`.
pub const PAPER_EXAMPLE_INTEGRAL: f64 = -3.244_973_119_804_34e-4;

#[derive(Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub f: fn(Point) -> f64,
    /// Mixed Hölder exponent.
    pub alpha: f64,
    /// A constant `c` with `|f| <= 2c` and mixed Hölder constant at most `c`.
    pub holder_c: f64,
    pub reference_integral: Option<f64>,
    pub description: &'static str,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("reference_integral", &self.reference_integral)
            .finish()
    }
}

impl TestFunction {
    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }
}

pub fn paper_example(p: Point) -> f64 {
    let [x, y] = p;
    (20.0 * x * x + 10.0 * y).sin() * (PI * x).sin() * (PI * y).sin()
}

pub fn constant(_: Point) -> f64 {
    1.0
}

pub fn separable_x(p: Point) -> f64 {
    (3.0 * p[0]).sin()
}

pub fn bilinear(p: Point) -> f64 {
    p[0] * p[1]
}

pub fn holder_half(p: Point) -> f64 {
    let h = |t: f64| (t - 0.5).abs().sqrt();
    h(p[0]) * h(p[1])
}

static FUNCTIONS: [TestFunction; 5] = [
    TestFunction {
        name: "paper-example",
        f: paper_example,
        alpha: 1.0,
        // the mixed derivative of sin(20x^2 + 10y) sin(pi x) sin(pi y) peaks near 567
        holder_c: 567.0,
        reference_integral: Some(PAPER_EXAMPLE_INTEGRAL),
        description: "sin(20x^2 + 10y) sin(pi x) sin(pi y)",
    },
    TestFunction {
        name: "constant",
        f: constant,
        alpha: 1.0,
        holder_c: 0.5,
        reference_integral: Some(1.0),
        description: "1",
    },
    TestFunction {
        name: "separable-x",
        f: separable_x,
        alpha: 1.0,
        holder_c: 3.0,
        // (1 - cos 3) / 3
        reference_integral: Some(0.663_330_832_200_148_4),
        description: "sin(3x)",
    },
    TestFunction {
        name: "bilinear",
        f: bilinear,
        alpha: 1.0,
        holder_c: 1.0,
        reference_integral: Some(0.25),
        description: "xy",
    },
    TestFunction {
        name: "holder-half",
        f: holder_half,
        alpha: 0.5,
        holder_c: 1.0,
        reference_integral: Some(2.0 / 9.0),
        description: "sqrt|x - 1/2| sqrt|y - 1/2|",
    },
];

pub fn all() -> &'static [TestFunction] {
    &FUNCTIONS
}

pub fn get(name: &str) -> Option<&'static TestFunction> {
    FUNCTIONS.iter().find(|t| t.name == name)
}

pub fn names() -> Vec<&'static str> {
    FUNCTIONS.iter().map(|t| t.name).collect()
}
