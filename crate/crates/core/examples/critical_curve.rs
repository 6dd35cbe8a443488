//! Traces the boundary of Λ for the symmetric MEMS model by bisection in μ,
//! and the diagonal crossing λ = μ.
//!
//! `cargo run --release --example critical_curve`

use quenchlab::stationary::{trace_critical_curve, CurveOptions};
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    let problem = Problem::new(Grid::unit_interval(199), Model::mems(1.0, 1.0))?;
    let samples: Vec<f64> = (1..=12).map(|k| 0.6 * k as f64).collect();
    let curve = trace_critical_curve(&problem, &samples, &CurveOptions::default())?;

    println!("{:>8} {:>12} {:>12}", "lambda", "mu_lo", "mu_hi");
    for s in &curve.samples {
        match &s.bracket {
            Some(b) => println!("{:>8.3} {:>12.6} {:>12.6}", s.lambda, b.lo, b.hi),
            None => println!("{:>8.3} {:>12} {:>12}", s.lambda, "-", "-"),
        }
    }
    println!("λ* ≈ {:.5}, μ* ≈ {:.5}", curve.lambda_star.mid(), curve.mu_star.mid());
    println!("diagonal crossing ≈ {:.5}", curve.diagonal.mid());
    println!("monotonicity defect {:.3e}", curve.monotonicity_defect());
    Ok(())
}
