//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

mod common;

use std::f64::consts::LN_2;
use std::path::Path;
use std::time::Instant;

use common::{random_params, random_sequence, PS};
use hybridtime::benchmarks::nor_chain;
use hybridtime::channel::{process_incremental, process_sequence, Edge, GateKind, Input, InputTransition, TransitionKind};
use hybridtime::characterization::{characterize, MeasuredDelays, MisTriple};
use hybridtime::gate_model::{
    dual_case, mis_delay_falling, mis_delay_rising, nand_delay, nand_shifted_trajectory, nor_delay,
    nor_raw_trajectory, nor_shifted_trajectory, RawMode,
};
use hybridtime::metrics::{compare, compare_signals};
use hybridtime::netlist::{DelayModel, Netlist};
use hybridtime::simulator::{run, SimConfig};
use hybridtime::stimuli::{generate_stimuli, StimulusSpec};
use hybridtime::trace::Trace;
use hybridtime::{CaseId, ExtTime, GateParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id.to_string(), pass, detail));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Table values of the reference gate, typed in independently of the
/// library constant.
fn table() -> [(&'static str, f64); 6] {
    [
        ("RnA", 4408.82),
        ("RnB", 3884.42),
        ("R5", 828.49),
        ("R", 1705.77),
        ("alpha1", 966.42e-12),
        ("alpha2", 633.74e-12),
    ]
}

fn fields(p: &GateParams) -> [f64; 6] {
    [p.r_na, p.r_nb, p.r5, p.r, p.alpha1, p.alpha2]
}

/// Crossing time of `VDD/2` when the pMOS path has resistance
/// `2R + alpha/t` from a start voltage `v0`, by bisection on the integrated
/// ODE: `t - (alpha/2R) ln(1 + 2R t/alpha) = 2R C3 ln(2 (VDD - v0)/VDD)`.
fn rising_crossing_oracle(p: &GateParams, alpha: f64, v0: f64) -> f64 {
    let c3 = p.c_load * (p.r5 + 2.0 * p.r) / (2.0 * p.r);
    let rhs = 2.0 * p.r * c3 * (2.0 * (p.vdd - v0) / p.vdd).ln();
    let f = |t: f64| t - alpha / (2.0 * p.r) * (2.0 * p.r * t / alpha).ln_1p() - rhs;
    let (mut lo, mut hi) = (0.0, 1e-9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_golden_parametrization(r: &mut Report) {
    let m = MeasuredDelays {
        fall: MisTriple { d0: 2.190 * PS, d_plus_inf: 3.7226 * PS, d_minus_inf: 3.3798 * PS },
        rise: MisTriple { d0: 4.107 * PS, d_plus_inf: 3.616 * PS, d_minus_inf: 3.8054 * PS },
        d_min: 299e-15,
        c_load: 0.9431e-15,
        vdd: 0.8,
    };
    let start = Instant::now();
    let fit = characterize(&m);
    let elapsed = start.elapsed().as_secs_f64();
    match fit {
        Ok(p) => {
            let errs: Vec<f64> = fields(&p).iter().zip(table()).map(|(&got, (_, want))| rel(got, want)).collect();
            let worst = errs.iter().cloned().fold(0.0, f64::max);
            let pass = worst <= 5e-3 && elapsed < 1.0;
            let detail = table()
                .iter()
                .zip(fields(&p))
                .map(|((n, _), v)| format!("{n}={v:.5e}"))
                .collect::<Vec<_>>()
                .join(" ");
            r.record("1", pass, format!("worst rel err {worst:.3e} (<= 5e-3), {elapsed:.3} s (< 1 s); {detail}"));
        }
        Err(e) => r.record("1", false, format!("characterization failed: {e}")),
    }
}

fn c2_matching_contract(r: &mut Report) {
    let p = GateParams::nor_chain_reference();
    let deltas = [ExtTime::Finite(0.0), ExtTime::PosInf, ExtTime::NegInf];
    let fall_want = [2.190, 3.7226, 3.3798];
    let rise_want = [4.107, 3.616, 3.8054];
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (k, d) in deltas.iter().enumerate() {
        let f = mis_delay_falling(&p, *d).unwrap();
        let g = mis_delay_rising(&p, *d).unwrap();
        worst = worst.max(rel(f, fall_want[k] * PS)).max(rel(g, rise_want[k] * PS));
        values.push(format!("{:.4}/{:.4}", f / PS, g / PS));
    }
    // rising extremals against an integration-based bisection oracle
    let alphas = [p.alpha1 + p.alpha2, p.alpha2, p.alpha1];
    let mut oracle_worst: f64 = 0.0;
    for (k, d) in deltas.iter().enumerate() {
        let want = rising_crossing_oracle(&p, alphas[k], 0.0) + p.d_min;
        oracle_worst = oracle_worst.max(rel(mis_delay_rising(&p, *d).unwrap(), want));
    }
    let pass = worst <= 1e-3 && oracle_worst <= 1e-9;
    r.record(
        "2",
        pass,
        format!(
            "fall/rise ps at 0,+inf,-inf: {}; worst rel err {worst:.3e} (<= 1e-3); oracle rel err {oracle_worst:.1e}",
            values.join(", ")
        ),
    );
}

fn c3_round_trip(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..1000 {
        let p = random_params(&mut rng, 0.5);
        let result = MeasuredDelays::synthesize(&p).map_err(|e| e.to_string()).and_then(|m| characterize(&m).map_err(|e| e.to_string()));
        match result {
            Ok(q) => {
                let e = fields(&q).iter().zip(fields(&p)).map(|(a, b)| rel(*a, b)).fold(0.0, f64::max);
                worst = worst.max(e);
            }
            Err(e) => failures.push(format!("set {k}: {e}")),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && worst <= 1e-3 && elapsed < 30.0;
    r.record(
        "3",
        pass,
        format!("1000 sets, worst rel err {worst:.2e} (<= 1e-3), {} failures, {elapsed:.2} s (< 30 s){}", failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()),
    );
}

fn c4_scenarios(r: &mut Report) {
    let p = GateParams::nor_chain_reference();
    let vdd = p.vdd;
    let c1 = p.c_load * (p.r5 + p.r_na) / p.r_na;
    let tau_a = c1 * p.r_na;
    let ev = |input, edge, t_ps: f64| InputTransition::new(input, edge, t_ps * PS);
    let mut problems = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            problems.push(what);
        }
    };
    let d_a = LN_2 * tau_a + p.d_min;

    // single edge
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &[ev(Input::A, Edge::Rise, 0.0)]).unwrap();
    check(out.real.len() == 1 && (out.real[0].time - 3.7226 * PS).abs() <= 0.01 * PS, format!("single edge {:?}", out.real));
    check((out.real[0].time - d_a).abs() < 1e-18, "single edge vs ln2 tau_a".into());

    // MIS: rise B 10 ps after A
    let seq = [ev(Input::A, Edge::Rise, 0.0), ev(Input::B, Edge::Rise, 10.0)];
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &seq).unwrap();
    let v = out.events[1].v_int;
    let direct = nor_shifted_trajectory(CaseId::A, &p, 10.0 * PS - (d_a - p.d_min), ExtTime::PosInf, vdd).unwrap();
    check((v - direct).abs() <= 1e-12 * vdd, format!("MIS v_int {v} vs shifted trajectory {direct}"));
    check((v - vdd * (-10.0 * PS / tau_a).exp()).abs() <= 1e-9 * vdd, format!("MIS v_int {v} vs exponential"));
    check((v / vdd - 0.132).abs() < 5e-4, format!("MIS v_int/VDD {}", v / vdd));
    check(out.events[1].case == CaseId::C && out.events[1].kind == TransitionKind::Virtual, "MIS case-c output not virtual".into());
    check(out.real.len() == 1 && (out.real[0].time - 3.7226 * PS).abs() <= 0.01 * PS, format!("MIS outputs {:?}", out.real));
    let mis_v = v;

    // 1 ps pulse
    let seq = [ev(Input::A, Edge::Rise, 0.0), ev(Input::A, Edge::Fall, 1.0)];
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &seq).unwrap();
    let v = out.events[1].v_int;
    let direct = nor_shifted_trajectory(CaseId::A, &p, 1.0 * PS - (d_a - p.d_min), ExtTime::PosInf, vdd).unwrap();
    check((v - direct).abs() <= 1e-12 * vdd, format!("pulse v_int {v} vs {direct}"));
    check((v / vdd - 0.817).abs() < 5e-4, format!("pulse v_int/VDD {}", v / vdd));
    check(out.events[0].canceled, "case-a output not canceled".into());
    check(out.events[1].t_out.to_f64() - p.d_min < 1.0 * PS, "case-h crossing not in the past".into());
    check(out.real.is_empty(), format!("1 ps pulse outputs {:?}", out.real));
    let pulse_v = v;

    // 20 ps pulse
    let seq = [ev(Input::A, Edge::Rise, 0.0), ev(Input::A, Edge::Fall, 20.0)];
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &seq).unwrap();
    let v = out.events[1].v_int;
    let direct = nor_shifted_trajectory(CaseId::A, &p, 20.0 * PS - (d_a - p.d_min), ExtTime::PosInf, vdd).unwrap();
    check((v - direct).abs() <= 1e-12 * vdd, format!("long pulse v_int {v} vs {direct}"));
    check((v / vdd - 0.0174).abs() < 5e-4, format!("long pulse v_int/VDD {}", v / vdd));
    check(out.events[1].delta == ExtTime::NegInf, "case-h delta not -inf".into());
    let want = 20.0 * PS + rising_crossing_oracle(&p, p.alpha1, v) + p.d_min;
    let rise_ok = out.real.len() == 2 && (out.real[1].time - 23.73 * PS).abs() <= 0.05 * PS;
    check(rise_ok, format!("long pulse outputs {:?}", out.real));
    check(out.real.len() == 2 && rel(out.real[1].time, want) < 1e-9, format!("rising output vs oracle {want:e}"));
    let rise_t = out.real.get(1).map_or(f64::NAN, |o| o.time / PS);

    let pass = problems.is_empty();
    r.record(
        "4",
        pass,
        format!(
            "v_int/VDD = {:.5}, {:.5}, {:.6}; rising output {rise_t:.4} ps{}",
            mis_v / vdd,
            pulse_v / vdd,
            v / vdd,
            if pass { String::new() } else { format!("; problems: {}", problems.join("; ")) }
        ),
    );
}

fn c5_equivalence(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let mut mismatches = 0;
    let mut errors = 0;
    let mut events = 0usize;
    for _ in 0..100_000 {
        let p = random_params(&mut rng, 0.2);
        let kind = if rng.random_bool(0.5) { GateKind::Nand2 } else { GateKind::Nor2 };
        let (init, seq) = random_sequence(&mut rng, 64, 12.0 * PS, true);
        events += seq.len();
        let batch = process_sequence(&p, kind, init, &seq).map(|o| o.real);
        let inc = process_incremental(&p, kind, init, &seq);
        if batch.is_err() {
            errors += 1;
        }
        if batch != inc {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && elapsed < 60.0;
    r.record(
        "5",
        pass,
        format!("100000 sequences ({events} events), {mismatches} mismatches, {errors} rejected by both, {elapsed:.2} s (< 60 s)"),
    );
}

fn c6_inverse_consistency(r: &mut Report) {
    let p = GateParams::nor_chain_reference();
    let vdd = p.vdd;
    let caps = p.derived_caps();
    let taus = [
        (CaseId::A, caps.c1 * p.r_na),
        (CaseId::F, caps.c1 * p.r_na),
        (CaseId::B, caps.c1_prime * p.r_nb),
        (CaseId::E, caps.c1_prime * p.r_nb),
        (CaseId::C, caps.c2 * p.r_na * p.r_nb / (p.r_na + p.r_nb)),
        (CaseId::D, caps.c2 * p.r_na * p.r_nb / (p.r_na + p.r_nb)),
    ];
    let mut fall_worst: f64 = 0.0;
    for (case, tau) in taus {
        for i in 1..=100 {
            let v = vdd * i as f64 / 100.0;
            let t = nor_delay(case, &p, v, ExtTime::PosInf).unwrap().to_f64() - p.d_min;
            fall_worst = fall_worst.max((v * (-t / tau).exp() - 0.5 * vdd).abs() / vdd);
        }
    }

    let mut rise_worst: f64 = 0.0;
    let mut at = (0.0, 0.0);
    for (case, mode, sign) in [(CaseId::G, RawMode::DownDownPlus, 1.0), (CaseId::H, RawMode::DownDownMinus, -1.0)] {
        for i in 0..=40 {
            let v = 0.5 * vdd * i as f64 / 40.0;
            for k in 0..=200 {
                let delta = k as f64 * 0.05 * PS;
                let t = nor_delay(case, &p, v, ExtTime::Finite(sign * delta)).unwrap().to_f64() - p.d_min;
                let err = (nor_raw_trajectory(mode, &p, t, delta, v).unwrap() - 0.5 * vdd).abs() / vdd;
                if err > rise_worst {
                    rise_worst = err;
                    at = (v, sign * delta);
                }
            }
        }
    }
    let pass = fall_worst <= 1e-9 && rise_worst <= 0.02;
    r.record(
        "6",
        pass,
        format!(
            "falling worst {fall_worst:.2e} VDD (<= 1e-9); rising worst {:.3}% VDD (<= 2%) at v_int = {:.3} V, delta = {:.2} ps",
            100.0 * rise_worst,
            at.0,
            at.1 / PS
        ),
    );
}

fn c7_duality(r: &mut Report) {
    let p = GateParams::nor_chain_reference();
    let vdd = p.vdd;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut delay_mismatch = 0;
    for _ in 0..10_000 {
        let case = CaseId::ALL[rng.random_range(0..8)];
        let dual = dual_case(case);
        let v = rng.random_range(0.0..=vdd);
        let t = rng.random_range(-2.0 * PS..20.0 * PS);
        let sign = if dual == CaseId::H { -1.0 } else { 1.0 };
        let delta = ExtTime::Finite(sign * rng.random_range(0.0..15.0 * PS));
        if nand_delay(case, &p, v, delta).unwrap() != nor_delay(dual, &p, vdd - v, delta).unwrap() {
            delay_mismatch += 1;
        }
        let a = nand_shifted_trajectory(case, &p, t, delta, v).unwrap();
        let b = vdd - nor_shifted_trajectory(dual, &p, t, delta, vdd - v).unwrap();
        worst = worst.max((a - b).abs() / vdd);
    }
    let pass = worst <= 1e-12 && delay_mismatch == 0;
    r.record("7", pass, format!("10000 samples, worst {worst:.2e} VDD (<= 1e-12), {delay_mismatch} delay mismatches"));
}

fn c8_benchmark(r: &mut Report) {
    let p = GateParams::nor_chain_reference();
    let net = Netlist::from_doc(nor_chain(50, &p), Path::new(".")).unwrap();
    let spec = StimulusSpec::new(15.0 * PS, 5.0 * PS, 250, 2024);
    let stim = generate_stimuli(&spec, &net.input_names()).unwrap();
    let cfg = SimConfig::until(stim.last_time() + 1e-9);
    let mut times = Vec::new();
    let mut results = Vec::new();
    for _ in 0..5 {
        let start = Instant::now();
        let res = run(&net, &stim.traces, &cfg).unwrap();
        times.push(start.elapsed().as_secs_f64());
        results.push(res);
    }
    let deterministic = results.iter().all(|x| x.same_outcome(&results[0]));
    let alternating = results[0].traces.values().all(|t| t.validate().is_ok());
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    let a_pass = deterministic && alternating && slowest < 5.0;

    let inertial = net.with_model(DelayModel::Inertial).unwrap();
    let base = run(&inertial, &stim.traces, &cfg).unwrap();
    let mut b_pass = true;
    let mut total = 0.0;
    for &o in net.outputs() {
        let name = net.net_name(o);
        let rep = compare(&results[0].traces[name], &base.traces[name], true).unwrap();
        total += rep.total_area();
        let n = rep.transition_count as f64;
        let consistent = rep.leading_area >= 0.0
            && rep.trailing_area >= 0.0
            && rep.glitch_area >= 0.0
            && (n == 0.0 || ((rep.net_area_per_transition - (rep.leading_area - rep.trailing_area) / n).abs() <= 1e-27 + 1e-12 * rep.total_area() / n))
            && (n == 0.0 || (rep.area_per_transition - rep.total_area() / n).abs() <= 1e-12 * rep.total_area() / n + 1e-27);
        b_pass &= consistent;
    }
    b_pass &= total > 0.0;

    let base_times: Vec<f64> = (0..1000).map(|k| 10.0 * PS * k as f64 + 3.0 * PS).collect();
    let shifted: Vec<f64> = base_times.iter().map(|t| t + 0.5 * PS).collect();
    let rep = compare_signals(
        &Trace::from_toggle_times("y", false, &base_times),
        &Trace::from_toggle_times("y", false, &shifted),
        true,
    )
    .unwrap();
    let c_pass = rep.transition_count == 1000 && (rep.area_per_transition - 0.5 * PS).abs() <= 1e-15;

    let events = results[0].stats.events_processed;
    r.record(
        "8",
        a_pass && b_pass && c_pass,
        format!(
            "(a) 3x50 chain, {events} events, slowest of 5 runs {slowest:.3} s (< 5 s), deterministic {deterministic}; \
             (b) hybrid vs inertial total deviation {:.3} ps, report invariants {}; (c) {:.4} fs per transition",
            total / PS,
            if b_pass { "hold" } else { "violated" },
            rep.area_per_transition / 1e-15
        ),
    );
}

fn c9_metric_examples(r: &mut Report) {
    let d = 0.5 * PS;
    let times: Vec<f64> = (0..20).map(|k| 7.0 * PS * (k + 1) as f64).collect();
    let a = Trace::from_toggle_times("y", false, &times);
    let same = compare(&a, &a, true).unwrap();
    let identical = same.leading_area == 0.0
        && same.trailing_area == 0.0
        && same.glitch_area == 0.0
        && same.glitches == Default::default();

    let shifted_times: Vec<f64> = times.iter().map(|t| t + d).collect();
    let s = compare(&a, &Trace::from_toggle_times("y", false, &shifted_times), true).unwrap();
    let k = times.len() as f64;
    let shifted = s.leading_area == 0.0
        && (s.trailing_area - k * d).abs() <= 1e-9 * k * d
        && (s.area_per_transition - d).abs() <= 1e-9 * d;

    let reference = Trace::from_toggle_times("y", false, &[2.0 * PS, 3.5 * PS, 9.0 * PS]);
    let candidate = Trace::from_toggle_times("y", false, &[9.0 * PS]);
    let g = compare(&reference, &candidate, true).unwrap();
    let suppressed = g.glitches.original_suppressed == 1
        && g.glitches.original_induced == 0
        && (g.total_area() - 1.5 * PS).abs() <= 1e-9 * PS;

    r.record(
        "9",
        identical && shifted && suppressed,
        format!("identical {identical}, uniform shift {shifted}, suppressed pulse {suppressed}"),
    );
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };
    c1_golden_parametrization(&mut r);
    c2_matching_contract(&mut r);
    c3_round_trip(&mut r);
    c4_scenarios(&mut r);
    c5_equivalence(&mut r);
    c6_inverse_consistency(&mut r);
    c7_duality(&mut r);
    c8_benchmark(&mut r);
    c9_metric_examples(&mut r);
    let failed: Vec<&str> = r.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!("{} of {} criteria pass", r.lines.len() - failed.len(), r.lines.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
