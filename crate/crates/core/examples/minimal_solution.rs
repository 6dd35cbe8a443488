//! Minimal stationary solution by monotone iteration, and a second solution
//! above it found by Newton from an elevated seed.
//!
//! `cargo run --release --example minimal_solution -- 1.0 1.0`

use quenchlab::stationary::{mass_bound_check, monotone_minimal_solution, second_solution_scan, MembershipVerdict, StationaryConfig};
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let (lambda, mu) = (args.first().copied().unwrap_or(1.0), args.get(1).copied().unwrap_or(1.0));
    let problem = Problem::new(Grid::unit_interval(199), Model::mems(lambda, mu))?;

    match monotone_minimal_solution(&problem, &StationaryConfig::default())? {
        MembershipVerdict::InLambda(sol) => {
            println!("(λ, μ) = ({lambda}, {mu}) lies in Λ");
            println!("  iterations {}, residual {:.2e}", sol.iterations, sol.residual);
            println!("  max w = {:.6}, max z = {:.6}", sol.w.max(), sol.z.max());
            let mass = mass_bound_check(&problem, &sol.w, &sol.z)?;
            println!("  eigenfunction-mass bounds hold: {}", mass.passed);
            match second_solution_scan(&problem, &sol, &[0.8, 0.9, 0.95, 0.98])? {
                Some(upper) => println!("  second solution: max w = {:.6}, residual {:.2e}", upper.w.max(), upper.residual),
                None => println!("  no second solution from the tried seeds"),
            }
        }
        MembershipVerdict::NotInLambda(ev) => println!("(λ, μ) = ({lambda}, {mu}) lies outside Λ: {ev:?}"),
        MembershipVerdict::Undetermined { .. } => println!("membership undetermined at the iteration cap"),
    }
    Ok(())
}
