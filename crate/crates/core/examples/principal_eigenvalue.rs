//! Principal eigenvalue of the linearization at the minimal solution along
//! the diagonal. It decreases to zero at the edge of Λ.
//!
//! `cargo run --release --example principal_eigenvalue`

use quenchlab::spectra::stationary_eigenpair;
use quenchlab::stationary::{monotone_minimal_solution, StationaryConfig};
use quenchlab::{Grid, Model, ParamPoint, Problem};

fn main() -> quenchlab::Result<()> {
    let base = Problem::new(Grid::unit_interval(199), Model::mems(1.0, 1.0))?;
    println!("λ₁ = {:.8}", base.laplacian_eigenpair()?.lambda1);
    println!("{:>6} {:>12} {:>10}", "t", "nu1", "residual");
    for t in [0.1, 0.5, 1.0, 1.2, 1.3, 1.38, 1.4] {
        let problem = base.with_params(ParamPoint::symmetric(t));
        let Some(sol) = monotone_minimal_solution(&problem, &StationaryConfig::default())?.into_solution() else {
            println!("{t:>6.2} outside Λ");
            continue;
        };
        let eig = stationary_eigenpair(&problem, &sol)?;
        println!("{t:>6.2} {:>12.6} {:>10.2e}", eig.nu1, eig.residual);
    }
    Ok(())
}
