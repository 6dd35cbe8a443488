//! Exponential decay rate of the distance to the minimal solution, fitted
//! from the tail and compared with the rate predicted by λ₁ and ν₁.
//!
//! `cargo run --release --example convergence_rate`

use quenchlab::certificates::rate_certificate;
use quenchlab::evolution::{simulate, StepperConfig};
use quenchlab::model::PairField;
use quenchlab::spectra::stationary_eigenpair;
use quenchlab::stationary::{monotone_minimal_solution, StationaryConfig};
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    let n = 199;
    let problem = Problem::new(Grid::unit_interval(n), Model::mems(0.5, 0.5))?;
    let sol = monotone_minimal_solution(&problem, &StationaryConfig::default())?.into_solution().expect("(0.5, 0.5) lies in Λ");
    let eig = stationary_eigenpair(&problem, &sol)?;
    let traj = simulate(&problem, &PairField::zeros(n), &StepperConfig::default(), 5.0, Some(&sol.pair()))?;
    let lambda1 = problem.laplacian_eigenpair()?.lambda1;

    let cert = rate_certificate(&traj, lambda1, &eig)?;
    println!("λ₁ = {:.5}, ν₁ = {:.5}", cert.lambda1, cert.nu1);
    println!("fitted slope {:.4} on [{:.3}, {:.3}]", cert.fitted_slope, cert.window[0], cert.window[1]);
    println!("γ_proof = {:.4}, γ_theorem = {:.4}, passed: {}", cert.gamma_proof, cert.gamma_theorem, cert.passed);
    println!("{}", cert.note);
    Ok(())
}
