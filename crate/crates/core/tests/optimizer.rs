use exoopt_core::error::Error;
use exoopt_core::optimizer::{Constraint, GridAxis, GridMetric, Optimizer};
use exoopt_core::requirements::{requirements_for_age, RequirementOverrides};
use exoopt_core::{ModelConfig, SearchBounds};

fn optimizer() -> Optimizer {
    Optimizer::new(ModelConfig::default()).unwrap()
}

#[test]
fn reported_optimum_is_feasible_and_tight() {
    let opt = optimizer();
    let req = requirements_for_age(8.0, &RequirementOverrides::default()).unwrap();
    let res = opt.optimize(&req).unwrap();
    assert!(res.report.feasible);
    let cfg = opt.config();
    assert!(res.gap_radius >= cfg.bounds.gap_radius[0] && res.gap_radius <= cfg.bounds.gap_radius[1]);
    assert!(res.feasible_ratios.lo <= res.gear_ratio && res.gear_ratio <= res.feasible_ratios.hi);

    // A slightly smaller motor admits no gear ratio at all.
    let smaller = res.gap_radius - 2.0 * cfg.radius_tolerance;
    assert!(opt.feasible_gear_interval(smaller, &req).unwrap().is_none());

    // Stepping outside the interval breaks a constraint on each side.
    let below = opt.evaluate_design(res.gap_radius, res.feasible_ratios.lo * 0.99, &req).unwrap();
    assert!(!below.status(Constraint::RequiredTorque).satisfied);
    let above = opt.evaluate_design(res.gap_radius, res.feasible_ratios.hi * 1.01, &req).unwrap();
    assert!(!above.feasible);
    assert!(above.status(Constraint::RequiredTorque).satisfied);
}

#[test]
fn interval_widens_with_radius() {
    let opt = optimizer();
    let req = requirements_for_age(6.0, &RequirementOverrides::default()).unwrap();
    let a = opt.feasible_gear_interval(0.02, &req).unwrap().unwrap();
    let b = opt.feasible_gear_interval(0.024, &req).unwrap().unwrap();
    assert!(b.lo < a.lo && b.hi > a.hi, "{a:?} {b:?}");
}

#[test]
fn unreachable_torque_names_binding_constraint() {
    let opt = optimizer();
    let o = RequirementOverrides {
        required_torque: Some(1000.0),
        ..Default::default()
    };
    let req = requirements_for_age(10.0, &o).unwrap();
    match opt.optimize(&req) {
        Err(Error::Infeasible { age, binding }) => {
            assert_eq!(age, 10.0);
            assert!(binding.contains("required_torque"), "{binding}");
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn tighter_backdrive_limit_needs_a_bigger_motor() {
    let opt = optimizer();
    let loose = requirements_for_age(16.0, &RequirementOverrides::default()).unwrap();
    let tight = requirements_for_age(
        16.0,
        &RequirementOverrides {
            max_backdrive_torque: Some(4.0),
            ..Default::default()
        },
    )
    .unwrap();
    let a = opt.optimize(&loose).unwrap();
    let b = opt.optimize(&tight).unwrap();
    assert!(b.gap_radius > a.gap_radius);
    assert!(b.active_constraints.contains(&Constraint::Backdrive));
}

#[test]
fn grid_search_never_beats_bisection() {
    // Coarse grid over a narrow box keeps this quick.
    let cfg = ModelConfig {
        bounds: SearchBounds {
            gap_radius: [0.01, 0.03],
            gear_ratio: [1.0, 20.0],
        },
        ..Default::default()
    };
    let opt = Optimizer::new(cfg).unwrap();
    let reqs: Vec<_> = [4.0, 9.0]
        .iter()
        .map(|&a| requirements_for_age(a, &RequirementOverrides::default()).unwrap())
        .collect();
    let grid = opt.brute_force_optimum(&reqs, 40).unwrap();
    let cell = 0.02 / 39.0;
    for (req, g) in reqs.iter().zip(grid) {
        let g = g.unwrap();
        let r = opt.optimize(req).unwrap();
        assert!(g.gap_radius >= r.gap_radius - 1e-12);
        assert!(g.gap_radius - r.gap_radius <= 2.0 * cell, "{} vs {}", g.gap_radius, r.gap_radius);
        let report = opt.evaluate_design(g.gap_radius, g.feasible_ratios.lo, req).unwrap();
        assert!(report.feasible);
    }
}

#[test]
fn sweep_keeps_input_order() {
    let opt = optimizer();
    let ages = [9.0, 4.0, 2.0, 6.0];
    let out = opt.sweep_ages(&ages, &RequirementOverrides::default());
    let got: Vec<f64> = out.iter().map(|(a, _)| *a).collect();
    assert_eq!(got, ages);
    assert!(matches!(out[2].1, Err(Error::Domain { .. })));
    let r9 = out[0].1.as_ref().unwrap().gap_radius;
    let r4 = out[1].1.as_ref().unwrap().gap_radius;
    assert!(r9 > r4);
}

#[test]
fn grid_is_radius_major() {
    let opt = optimizer();
    let rs = GridAxis::new(0.01, 0.02, 2).unwrap();
    let ns = GridAxis::new(2.0, 6.0, 3).unwrap();
    let cells = opt.constraint_grid(GridMetric::NaturalFrequency, &rs, &ns).unwrap();
    let coords: Vec<(f64, f64)> = cells.iter().map(|c| (c.gap_radius, c.gear_ratio)).collect();
    assert_eq!(
        coords,
        vec![(0.01, 2.0), (0.01, 4.0), (0.01, 6.0), (0.02, 2.0), (0.02, 4.0), (0.02, 6.0)]
    );
    for c in &cells {
        assert_eq!(c.value, opt.natural_frequency_hz(c.gap_radius, c.gear_ratio).unwrap());
    }
}

#[test]
fn grid_rejects_out_of_range_radius() {
    let opt = optimizer();
    let rs = GridAxis::new(0.05, 0.1, 2).unwrap();
    let ns = GridAxis::new(2.0, 2.0, 1).unwrap();
    assert!(matches!(
        opt.constraint_grid(GridMetric::MaxTorque, &rs, &ns),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn recorded_trace_matches_synthetic_backdrive() {
    use exoopt_core::gait::synthetic_knee_trace;
    let opt = optimizer();
    let trace = synthetic_knee_trace(1.0, 3.0, 1e-3, 1.0).unwrap();
    let recorded = Optimizer::new(ModelConfig::default())
        .unwrap()
        .with_gait_trace(&trace)
        .unwrap();
    let a = opt.backdrive(0.021, 10.0).unwrap().average;
    let b = recorded.backdrive(0.021, 10.0).unwrap().average;
    assert!((a - b).abs() < 1e-4 * a, "{a} vs {b}");

    let short = synthetic_knee_trace(1.0, 2.0, 1e-3, 1.0).unwrap();
    assert!(optimizer().with_gait_trace(&short).is_err());
}
