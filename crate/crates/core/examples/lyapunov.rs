//! Discrete energy along a fixed-step run. Its decrease matches
//! `-2 ∫ u_t v_t` up to an error that shrinks with the step.
//!
//! `cargo run --release --example lyapunov`

use quenchlab::evolution::{simulate, StepperConfig};
use quenchlab::model::PairField;
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    for (n, dt) in [(99, 4e-3), (99, 2e-3), (199, 1e-3), (399, 5e-4)] {
        let problem = Problem::new(Grid::unit_interval(n), Model::mems(0.5, 0.5))?;
        let traj = simulate(&problem, &PairField::zeros(n), &StepperConfig::fixed(dt), 2.0, None)?;
        let worst = traj.energy_residuals().iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let e0 = traj.records[0].energy;
        let e1 = traj.records.last().map_or(e0, |r| r.energy);
        println!("n = {n:>3}, dt = {dt:.1e}: E {e0:.6} -> {e1:.6}, max identity residual {worst:.3e}");
    }
    Ok(())
}
