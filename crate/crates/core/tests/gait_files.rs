use std::fs;

use exoopt_core::error::Error;
use exoopt_core::gait::{
    load_trace, save_trace, synthetic_knee_trace, two_leg_synthetic, ExtraColumn, GaitAngles, GaitTrace,
};
use exoopt_core::motor::REFERENCE_MOTOR;
use exoopt_core::plant::DrivetrainConfig;
use exoopt_core::sim::{simulate_backdrive, SimOptions};

#[test]
fn two_leg_trace_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("legs.csv");
    let base = two_leg_synthetic(1.0, 2.0, 0.01, 0.5).unwrap();
    let (right, left) = base.legs().unwrap();
    let grf: Vec<f64> = (0..base.len()).map(|k| 400.0 + k as f64).collect();
    let trace = GaitTrace::new(
        0.01,
        0.0,
        GaitAngles::TwoLeg {
            right: right.to_vec(),
            left: left.to_vec(),
        },
        vec![ExtraColumn {
            name: "grf_n".into(),
            values: grf,
        }],
    )
    .unwrap();
    save_trace(&trace, &path).unwrap();
    let back = load_trace(&path).unwrap();
    assert_eq!(back, trace);
}

#[test]
fn degrees_are_converted_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deg.csv");
    fs::write(&path, "time_s,theta_h_deg\n0.5,0\n0.51,90\n0.52,180\n").unwrap();
    let t = load_trace(&path).unwrap();
    assert_eq!(t.start_time(), 0.5);
    let a = t.knee_angle().unwrap();
    assert!((a[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    assert!((a[2] - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_trace(dir.path().join("nope.csv")), Err(Error::Io(_))));
}

#[test]
fn backdrive_from_a_saved_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("knee.csv");
    let synthetic = synthetic_knee_trace(1.0, 3.0, 1e-3, 1.0).unwrap();
    save_trace(&synthetic, &path).unwrap();
    let mut loaded = load_trace(&path).unwrap();
    assert_eq!(loaded.cycle_period, None);
    loaded.cycle_period = Some(1.0);

    let m = REFERENCE_MOTOR;
    let d = DrivetrainConfig::with_gear_ratio(10.0);
    let opts = SimOptions::default();
    let a = simulate_backdrive(&m, &d, &synthetic, &opts).unwrap();
    let b = simulate_backdrive(&m, &d, &loaded, &opts).unwrap();
    assert!((a.average - b.average).abs() < 1e-6 * a.average);
}
