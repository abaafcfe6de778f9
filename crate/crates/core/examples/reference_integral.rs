//! Derives the committed `paper-example` reference integral.
//!
//! Midpoint rule on `g x g` cells at g = 4096 and g = 8192. The rule is
//! second order, so `(4 I_8192 - I_4096) / 3` removes the leading error term.
//!
//! ```text
//! cargo run --release --example reference_integral
//! ```

use mhkz::registry::{paper_example, PAPER_EXAMPLE_INTEGRAL};

fn midpoint(g: usize) -> f64 {
    let h = 1.0 / g as f64;
    // row sums first keeps the accumulated rounding near 1e-16 per row
    let rows: Vec<f64> = mhkz::par::map_range(g, |j| {
        let y = (j as f64 + 0.5) * h;
        (0..g)
            .map(|i| paper_example([(i as f64 + 0.5) * h, y]))
            .sum::<f64>()
    });
    rows.iter().sum::<f64>() * h * h
}

fn main() {
    let coarse = midpoint(4096);
    let fine = midpoint(8192);
    let richardson = (4.0 * fine - coarse) / 3.0;
    println!("midpoint 4096^2 : {coarse:.15e}");
    println!("midpoint 8192^2 : {fine:.15e}");
    println!("difference      : {:.3e}", (fine - coarse).abs());
    println!("richardson      : {richardson:.15e}");
    println!("committed       : {PAPER_EXAMPLE_INTEGRAL:.15e}");
    assert!((fine - coarse).abs() < 1e-8, "resolutions disagree");
    assert!((richardson - PAPER_EXAMPLE_INTEGRAL).abs() < 1e-12);
}
