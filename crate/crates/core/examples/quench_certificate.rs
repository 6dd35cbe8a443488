//! Upper bound on the quench time from the eigenfunction mass of large
//! initial data, checked against a simulation, and the case classification.
//!
//! `cargo run --release --example quench_certificate`

use quenchlab::certificates::{classify_case, quench_time_bound, verify_quench_bound};
use quenchlab::evolution::{simulate, StepperConfig};
use quenchlab::model::PairField;
use quenchlab::stationary::StationaryConfig;
use quenchlab::{Grid, Model, Problem};

fn main() -> quenchlab::Result<()> {
    let problem = Problem::new(Grid::unit_interval(199), Model::mems(20.0, 20.0))?;
    let s = problem.grid().sine_mode().scale(0.9);
    let initial = PairField::new(s.clone(), s);

    let bound = quench_time_bound(&problem, &initial)?;
    println!("u side: mass {:.5}, threshold {:.5}, bound {:?}", bound.u.mass, bound.u.threshold, bound.u.bound);
    let traj = simulate(&problem, &initial, &StepperConfig::default(), 1.0, None)?;
    let check = verify_quench_bound(&bound, &traj);
    println!("t_q = {:?}, ratio t_q / bound = {:?}, passed: {}", check.t_q, check.ratio, check.passed);

    let case = classify_case(&problem, &initial, &StationaryConfig::default(), None)?;
    println!("case {:?}: {}", case.case, case.evidence);
    Ok(())
}
