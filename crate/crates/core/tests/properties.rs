use proptest::prelude::*;

use quenchlab::certificates::quench_time_bound;
use quenchlab::evolution::{ratio_constants, simulate, step, StepperConfig, TerminalStatus};
use quenchlab::model::{Order, PairField};
use quenchlab::stationary::{mass_bound_check, monotone_iteration_observed, monotone_minimal_solution, StationaryConfig};
use quenchlab::{Field, Grid, Model, Nonlinearity, ParamPoint, Problem, Profile};

fn nonlinearity() -> impl Strategy<Value = Nonlinearity> {
    prop_oneof![
        Just(Nonlinearity::Log),
        Just(Nonlinearity::Exp),
        (0.3f64..4.0).prop_map(|p| Nonlinearity::Power { p }),
    ]
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|c| Profile::Constant { c }),
        (0.5f64..2.0, 0.5f64..8.0, 0.2f64..0.8).prop_map(|(c, k, x0)| Profile::Bump { c, k, x0, y0: 0.0 }),
    ]
}

fn model() -> impl Strategy<Value = Model> {
    (nonlinearity(), nonlinearity(), profile(), profile(), 0.02f64..0.5, 0.02f64..0.5).prop_map(|(f, g, alpha, beta, l, m)| Model {
        f,
        g,
        alpha,
        beta,
        params: ParamPoint { lambda: l, mu: m },
    })
}

fn minimal(p: &Problem) -> Option<quenchlab::stationary::StationarySolution> {
    monotone_minimal_solution(p, &StationaryConfig::default()).unwrap().into_solution()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonlinearity_structure(nl in nonlinearity(), s in 0.0f64..0.995) {
        prop_assert!(nl.eval(s, Order::Value).unwrap() > 0.0);
        prop_assert!(nl.eval(s, Order::D1).unwrap() > 0.0);
        prop_assert!(nl.eval(s, Order::D2).unwrap() > 0.0);
        prop_assert!(nl.eval(s, Order::Antideriv).unwrap() >= 0.0);
        prop_assert!(nl.eval(1.0 + s, Order::Value).is_err());
    }

    #[test]
    fn monotone_iterates_and_mass_bounds(m in model()) {
        let p = Problem::new(Grid::unit_interval(79), m).unwrap();
        let mut prev: Option<(Field, Field)> = None;
        let mut ok = true;
        let v = monotone_iteration_observed(&p, &StationaryConfig::default(), |_, w, z| {
            if let Some((pw, pz)) = &prev {
                ok &= w.iter().zip(pw.iter()).all(|(a, b)| a >= b) && z.iter().zip(pz.iter()).all(|(a, b)| a >= b);
            }
            prev = Some((w.clone(), z.clone()));
        }).unwrap();
        prop_assert!(ok);
        if let Some(sol) = v.into_solution() {
            prop_assert!(sol.residual <= 1e-8);
            prop_assert!(sol.w.max() < 1.0 && sol.z.max() < 1.0);
            prop_assert!(mass_bound_check(&p, &sol.w, &sol.z).unwrap().passed);
        }
    }

    #[test]
    fn minimal_solutions_increase_with_parameters(m in model(), dl in 0.0f64..0.2, dm in 0.0f64..0.2) {
        let grid = Grid::unit_interval(59);
        let lo = Problem::new(grid.clone(), m).unwrap();
        let hi = lo.with_params(ParamPoint { lambda: m.params.lambda + dl, mu: m.params.mu + dm });
        if let (Some(a), Some(b)) = (minimal(&lo), minimal(&hi)) {
            prop_assert!(a.pair().le(&b.pair(), 1e-12));
        }
    }

    #[test]
    fn one_step_preserves_order(m in model(), a in 0.0f64..0.5, da in 0.0f64..0.3, b in 0.0f64..0.5, db in 0.0f64..0.3, dt in 1e-5f64..0.5) {
        let p = Problem::new(Grid::unit_interval(49), m).unwrap();
        let s = p.grid().sine_mode();
        let lo = PairField::new(s.scale(a), s.scale(b));
        let hi = PairField::new(s.scale(a + da), s.scale(b + db));
        if let (Ok(x), Ok(y)) = (step(&p, &lo, dt), step(&p, &hi, dt)) {
            prop_assert!(x.le(&y, 0.0));
            prop_assert!(x.u.min() >= 0.0 && x.v.min() >= 0.0);
        }
    }

    #[test]
    fn monotone_run_diagnostics(m in model()) {
        let p = Problem::new(Grid::unit_interval(49), m).unwrap();
        let Some(sol) = minimal(&p) else { return Ok(()) };
        let cfg = StepperConfig { snapshot_stride: 1, ..StepperConfig::fixed(2e-3) };
        let traj = simulate(&p, &PairField::zeros(49), &cfg, 0.5, Some(&sol.pair())).unwrap();
        prop_assert_eq!(traj.status, TerminalStatus::ReachedHorizon);
        for w in traj.records.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].max_u >= w[0].max_u && w[1].max_v >= w[0].max_v);
            // energy dissipation in the monotone regime, up to the O(dt²) step error
            prop_assert!(w[1].energy <= w[0].energy + 1e-6 * w[1].dt, "{} -> {}", w[0].energy, w[1].energy);
        }
        // u_t ≥ c1 v_t and v_t ≥ c2 u_t, up to the time-discretization error
        let rc = ratio_constants(&p, &PairField::zeros(49), &sol).unwrap();
        let tol = 1e-8 + 5.0 * 2e-3;
        for pair in traj.snapshots.windows(2) {
            let dt = pair[1].t - pair[0].t;
            for k in 0..49 {
                let ut = (pair[1].state.u[k] - pair[0].state.u[k]) / dt;
                let vt = (pair[1].state.v[k] - pair[0].state.v[k]) / dt;
                prop_assert!(ut >= rc.c1 * vt - tol * (1.0 + vt.abs()));
                prop_assert!(vt >= rc.c2 * ut - tol * (1.0 + ut.abs()));
            }
        }
    }

    #[test]
    fn quench_bound_decreases_with_initial_mass(a in 0.6f64..0.9, da in 0.01f64..0.09, lambda in 15.0f64..40.0) {
        let p = Problem::new(Grid::unit_interval(99), Model::mems(lambda, lambda)).unwrap();
        let s = p.grid().sine_mode();
        let z = Field::zeros(99);
        let b1 = quench_time_bound(&p, &PairField::new(s.scale(a), z.clone())).unwrap();
        let b2 = quench_time_bound(&p, &PairField::new(s.scale(a + da), z)).unwrap();
        if let (Some(x), Some(y)) = (b1.u.bound, b2.u.bound) {
            prop_assert!(y < x);
        }
        prop_assert_eq!(b1, quench_time_bound(&p, &PairField::new(s.scale(a), Field::zeros(99))).unwrap());
    }
}
