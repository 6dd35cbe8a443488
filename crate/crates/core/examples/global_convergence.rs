//! Inside Λ the flow from zero data rises monotonically to the minimal
//! solution.
//!
//! `cargo run --release --example global_convergence`

use quenchlab::evolution::{simulate, StepperConfig};
use quenchlab::model::PairField;
use quenchlab::stationary::{monotone_minimal_solution, StationaryConfig};
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    let n = 199;
    let problem = Problem::new(Grid::unit_interval(n), Model::mems(0.5, 0.5))?;
    let sol = monotone_minimal_solution(&problem, &StationaryConfig::default())?.into_solution().expect("(0.5, 0.5) lies in Λ");
    let traj = simulate(&problem, &PairField::zeros(n), &StepperConfig::default(), 5.0, Some(&sol.pair()))?;

    println!("{:>8} {:>10} {:>10} {:>12}", "t", "max u", "max v", "|u - w|²");
    let stride = (traj.records.len() / 15).max(1);
    for r in traj.records.iter().step_by(stride) {
        println!("{:>8.4} {:>10.6} {:>10.6} {:>12.3e}", r.t, r.max_u, r.max_v, r.dist2_u);
    }
    println!("status {}, L² distance at t = {}: {:.3e}", traj.status.label(), traj.final_time(), traj.final_distance());
    Ok(())
}
