use serde_json::Value;
use windlq_web::{cp_slice_json, equilibrium_json, simulate_json};

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn zero_pitch_slice_peaks_at_the_surface_optimum() {
    let v = parse(&cp_slice_json(0.0, 401).unwrap());
    let cp = v["cp"].as_array().unwrap();
    assert_eq!(cp.len(), 401);
    let max = v["cp_max"].as_f64().unwrap();
    assert!(cp.iter().all(|c| c.as_f64().unwrap() <= max));
    let surface = windlq::coefficients::default_surface();
    assert!(max <= surface.cp_opt() + 1e-12);
    assert!(max >= surface.cp_opt() - 1e-3);
}

#[test]
fn out_of_range_pitch_is_clamped() {
    let v = parse(&cp_slice_json(500.0, 10).unwrap());
    let (_, hi) = windlq::coefficients::default_surface().theta_range();
    assert!((v["theta_deg"].as_f64().unwrap() - hi.to_degrees()).abs() < 1e-9);
}

#[test]
fn region_three_point_has_pitch_and_reference_power() {
    let v = parse(&equilibrium_json(16.0, 2.72).unwrap());
    assert_eq!(v["p_d"].as_f64().unwrap(), 2.72e6);
    assert!(v["theta_deg"].as_f64().unwrap() > 1.0);
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 7);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(equilibrium_json(-3.0, 2.0).is_err());
    assert!(equilibrium_json(12.0, 9.0).is_err());
    assert!(simulate_json("pid", 14.8, 0.06, 2.72, 10.0, 1).is_err());
    assert!(simulate_json("baseline", 14.8, 0.06, 2.72, 1e4, 1).is_err());
}

#[test]
fn short_runs_are_decimated_and_reproducible() {
    let a = simulate_json("robust-lq", 14.8, 0.06, 2.72, 20.0, 3).unwrap();
    let b = simulate_json("robust-lq", 14.8, 0.06, 2.72, 20.0, 3).unwrap();
    assert_eq!(a, b);
    let v = parse(&a);
    let n = v["time"].as_array().unwrap().len();
    assert!(n <= 1200 && n > 100);
    assert_eq!(v["power"].as_array().unwrap().len(), n);
    let base = parse(&simulate_json("baseline", 14.8, 0.06, 2.72, 20.0, 3).unwrap());
    assert_eq!(base["controller"], "baseline");
    assert!(base["metrics"]["rms_tracking_error"].as_f64().unwrap() > 0.0);
}
