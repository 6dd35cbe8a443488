//! Outside Λ the solution from zero data quenches in finite time. The
//! quench time is stable under grid and tolerance refinement.
//!
//! `cargo run --release --example quenching`

use quenchlab::evolution::{simulate, StepperConfig, TerminalStatus};
use quenchlab::model::PairField;
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    for (n, tol) in [(99, 1e-6), (199, 5e-7), (399, 2.5e-7)] {
        let problem = Problem::new(Grid::unit_interval(n), Model::mems(12.0, 12.0))?;
        let cfg = StepperConfig { tol_step: tol, ..StepperConfig::default() };
        let traj = simulate(&problem, &PairField::zeros(n), &cfg, 1.0, None)?;
        match traj.status {
            TerminalStatus::Quenched { t_q, which, t_q_extrapolated } => println!(
                "n = {n:>3}, tol = {tol:.1e}: t_q = {t_q:.6} ({which:?}), extrapolated {t_q_extrapolated:.6}, {} steps",
                traj.records.len() - 1
            ),
            other => println!("n = {n:>3}: {}", other.label()),
        }
    }
    Ok(())
}
