//! Reference checks against the NOR chain gate plus a small property smoke set.

use anyhow::{bail, Result};
use hybridtime::channel::{
    process_incremental, process_sequence, ChannelError, Edge, GateKind, Input, InputTransition, ProcessOutput,
};
use hybridtime::characterization::{characterize, MeasuredDelays};
use hybridtime::gate_model::{dual_case, mis_delay_falling, mis_delay_rising, nand_delay, nor_delay};
use hybridtime::metrics::compare;
use hybridtime::stimuli::{generate_stimuli, StimulusSpec};
use hybridtime::trace::Trace;
use hybridtime::{CaseId, ExtTime, GateParams};

use crate::errors::Data;

const PS: f64 = 1e-12;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn record(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn golden(c: &mut Checks) {
    let want = GateParams::nor_chain_reference();
    match characterize(&MeasuredDelays::nor_chain_reference()) {
        Ok(p) => {
            let pairs = [
                (p.r5, want.r5),
                (p.r_na, want.r_na),
                (p.r_nb, want.r_nb),
                (p.r, want.r),
                (p.alpha1, want.alpha1),
                (p.alpha2, want.alpha2),
            ];
            let worst = pairs.iter().map(|&(a, b)| rel(a, b)).fold(0.0, f64::max);
            c.record("characterize", worst <= 5e-3, format!("worst relative error {worst:.3e}"));
        }
        Err(e) => c.record("characterize", false, e.to_string()),
    }
}

fn matching(c: &mut Checks, tolerance: f64) {
    let p = GateParams::nor_chain_reference();
    let m = MeasuredDelays::nor_chain_reference();
    let deltas = [ExtTime::Finite(0.0), ExtTime::PosInf, ExtTime::NegInf];
    let fall = [m.fall.d0, m.fall.d_plus_inf, m.fall.d_minus_inf];
    let rise = [m.rise.d0, m.rise.d_plus_inf, m.rise.d_minus_inf];
    let mut worst: f64 = 0.0;
    for (k, &d) in deltas.iter().enumerate() {
        match (mis_delay_falling(&p, d), mis_delay_rising(&p, d)) {
            (Ok(f), Ok(r)) => worst = worst.max(rel(f, fall[k])).max(rel(r, rise[k])),
            _ => worst = f64::INFINITY,
        }
    }
    c.record("mis delays", worst <= tolerance, format!("worst relative error {worst:.3e}"));
}

fn times_ps(out: &Result<ProcessOutput, ChannelError>) -> String {
    match out {
        Ok(o) => format!("outputs at {:?} ps", o.real.iter().map(|t| (t.time / PS * 1e4).round() / 1e4).collect::<Vec<_>>()),
        Err(e) => e.to_string(),
    }
}

fn scenarios(c: &mut Checks) {
    let p = GateParams::nor_chain_reference();
    let ev = |input, edge, t: f64| InputTransition::new(input, edge, t * PS);
    let single = process_sequence(&p, GateKind::Nor2, (false, false), &[ev(Input::A, Edge::Rise, 0.0)]);
    let ok = matches!(&single, Ok(o) if o.real.len() == 1 && (o.real[0].time - 3.7226 * PS).abs() <= 0.01 * PS);
    c.record("single edge", ok, times_ps(&single));

    let short = [ev(Input::A, Edge::Rise, 0.0), ev(Input::A, Edge::Fall, 1.0)];
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &short);
    c.record("1 ps pulse", matches!(&out, Ok(o) if o.real.is_empty()), times_ps(&out));

    let long = [ev(Input::A, Edge::Rise, 0.0), ev(Input::A, Edge::Fall, 20.0)];
    let out = process_sequence(&p, GateKind::Nor2, (false, false), &long);
    let ok = matches!(&out, Ok(o) if o.real.len() == 2 && (o.real[1].time - 23.73 * PS).abs() <= 0.05 * PS);
    c.record("20 ps pulse", ok, times_ps(&out));
}

fn merge(a: &Trace, b: &Trace) -> Vec<InputTransition> {
    let mut seq: Vec<InputTransition> = a
        .transitions
        .iter()
        .map(|t| (Input::A, t))
        .chain(b.transitions.iter().map(|t| (Input::B, t)))
        .map(|(input, t)| InputTransition::new(input, Edge::towards(t.level), t.time))
        .collect();
    // stable sort keeps A ahead of B on ties
    seq.sort_by(|x, y| x.time.total_cmp(&y.time));
    seq
}

fn equivalence(c: &mut Checks) {
    let p = GateParams::nor_chain_reference();
    let names = ["a".to_string(), "b".to_string()];
    let mut mismatches = 0;
    let runs = 200;
    for seed in 0..runs {
        let spec = StimulusSpec::new(6.0 * PS, 1.5 * PS, 32, seed);
        let stim = match generate_stimuli(&spec, &names) {
            Ok(s) => s,
            Err(_) => {
                mismatches += 1;
                continue;
            }
        };
        let seq = merge(&stim.traces[0], &stim.traces[1]);
        for kind in [GateKind::Nor2, GateKind::Nand2] {
            let batch = process_sequence(&p, kind, (false, false), &seq).map(|o| o.real);
            if batch.is_err() || batch != process_incremental(&p, kind, (false, false), &seq) {
                mismatches += 1;
            }
        }
    }
    c.record("batch vs incremental", mismatches == 0, format!("{mismatches} mismatches in {} runs", 2 * runs));
}

fn duality(c: &mut Checks) {
    let p = GateParams::nor_chain_reference();
    let mut bad = 0;
    let mut total = 0;
    for case in CaseId::ALL {
        let dual = dual_case(case);
        let sign = if dual == CaseId::H { -1.0 } else { 1.0 };
        for k in 0..=10 {
            let v = p.vdd * k as f64 / 10.0;
            for d in [0.0, 0.5, 2.0, 10.0] {
                let delta = ExtTime::Finite(sign * d * PS);
                total += 1;
                match (nand_delay(case, &p, v, delta), nor_delay(dual, &p, p.vdd - v, delta)) {
                    (Ok(x), Ok(y)) if x == y => {}
                    _ => bad += 1,
                }
            }
        }
    }
    c.record("nand duality", bad == 0, format!("{bad} of {total} samples differ"));
}

fn metric(c: &mut Checks) {
    let times: Vec<f64> = (1..=1000).map(|k| k as f64 * 10.0 * PS).collect();
    let shifted: Vec<f64> = times.iter().map(|t| t + 0.5 * PS).collect();
    let r = Trace::from_toggle_times("y", false, &times);
    let s = Trace::from_toggle_times("y", false, &shifted);
    match compare(&r, &s, false) {
        Ok(rep) => {
            let ok = (rep.area_per_transition - 0.5 * PS).abs() <= 1e-15;
            c.record("shift metric", ok, format!("{:.6} ps per transition", rep.area_per_transition / PS));
        }
        Err(e) => c.record("shift metric", false, e.to_string()),
    }
}

pub fn run(tolerance: f64) -> Result<()> {
    let mut c = Checks { failed: 0 };
    golden(&mut c);
    matching(&mut c, tolerance);
    scenarios(&mut c);
    equivalence(&mut c);
    duality(&mut c);
    metric(&mut c);
    if c.failed > 0 {
        bail!(Data(format!("{} selftest checks failed", c.failed)));
    }
    Ok(())
}
