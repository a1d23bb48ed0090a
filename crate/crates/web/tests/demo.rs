use hybridtime_web::{drafting_curve_json, mis_curves_json, simulate_gate_json, DraftingCurve, GateRun, MisCurves};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn mis_curves_meet_their_limits() {
    let out: MisCurves =
        serde_json::from_str(&mis_curves_json(r#"{"delta_min_ps": -60, "delta_max_ps": 60, "points": 121}"#).unwrap())
            .unwrap();
    assert_eq!(out.delta_ps.len(), 121);
    assert!(rel(out.fall_limits_ps[1], 2.190) < 1e-3);
    assert!(rel(out.rise_limits_ps[1], 4.107) < 1e-3);
    let mid = 60;
    assert_eq!(out.delta_ps[mid], 0.0);
    assert!(rel(out.fall_ps[mid], out.fall_limits_ps[1]) < 1e-12);
    // far from zero the curves have settled onto the single-input delays
    assert!(rel(out.fall_ps[0], out.fall_limits_ps[0]) < 1e-6);
    assert!(rel(out.fall_ps[120], out.fall_limits_ps[2]) < 1e-6);
    assert!(rel(out.rise_ps[120], out.rise_limits_ps[2]) < 1e-3);
    // falling output is fastest when both inputs switch together
    let min = out.fall_ps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(min, out.fall_ps[mid]);
}

#[test]
fn drafting_curve_shape() {
    let out: DraftingCurve =
        serde_json::from_str(&drafting_curve_json(r#"{"width_min_ps": 1, "width_max_ps": 20, "points": 20}"#).unwrap())
            .unwrap();
    assert_eq!(out.delay_ps[0], None);
    let last = out.delay_ps[19].unwrap();
    assert!((20.0 + last - 23.73).abs() < 0.05, "{last}");
    let real: Vec<f64> = out.delay_ps.iter().flatten().copied().collect();
    assert!(real.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}

#[test]
fn single_gate_run() {
    let req = r#"{"kind": "nor2", "events": [{"input": "A", "edge": "rise", "time_ps": 0},
                                           {"input": "A", "edge": "fall", "time_ps": 20}]}"#;
    let out: GateRun = serde_json::from_str(&simulate_gate_json(req).unwrap()).unwrap();
    assert!(out.initial_level);
    assert_eq!(out.outputs.len(), 2);
    assert!((out.outputs[0].time_ps - 3.7226).abs() < 0.01);
    assert!((out.outputs[1].time_ps - 23.73).abs() < 0.05);
    assert_eq!(out.events[0].case, 'a');
    assert!(out.events.iter().all(|e| e.real && !e.canceled));

    let nand = r#"{"kind": "nand2", "initial": [true, true],
                   "events": [{"input": "B", "edge": "fall", "time_ps": 0}]}"#;
    let out: GateRun = serde_json::from_str(&simulate_gate_json(nand).unwrap()).unwrap();
    assert!(!out.initial_level);
    assert!(out.outputs[0].level);
}

#[test]
fn bad_requests_are_reported() {
    let wrong_edge = r#"{"kind": "nor2", "events": [{"input": "A", "edge": "fall", "time_ps": 0}]}"#;
    assert!(simulate_gate_json(wrong_edge).is_err());
    assert!(simulate_gate_json("{").unwrap_err().starts_with("bad request"));
    assert!(mis_curves_json(r#"{"delta_min_ps": 1, "delta_max_ps": 0, "points": 5}"#).is_err());
    let bad_params = r#"{"params": {"vdd_v": 0.8, "c_f": -1, "r5_ohm": 1, "rna_ohm": 1, "rnb_ohm": 1, "r_ohm": 1,
                        "alpha1_ohm_s": 1e-9, "alpha2_ohm_s": 1e-9, "dmin_s": 0},
                        "width_min_ps": 1, "width_max_ps": 2, "points": 2}"#;
    assert!(drafting_curve_json(bad_params).unwrap_err().contains("c_f"));
}
