//! Browser bindings: MIS delay curves, drafting curve and a single-gate
//! playground. Every call takes and returns JSON text; the `*_json`
//! functions are the plain-Rust versions used by the tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use hybridtime::channel::{process_sequence, Edge, GateKind, Input, InputTransition, TransitionKind};
use hybridtime::gate_model::{mis_delay_falling, mis_delay_rising};
use hybridtime::{ExtTime, GateParams};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const PS: f64 = 1e-12;

fn params_or_default(p: Option<GateParams>) -> Result<GateParams, String> {
    let p = p.unwrap_or_else(GateParams::nor_chain_reference);
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("bad request: {e}"))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(hi > lo) {
        return Err("need at least 2 points and max > min".into());
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

#[derive(Deserialize)]
struct MisRequest {
    #[serde(default)]
    params: Option<GateParams>,
    delta_min_ps: f64,
    delta_max_ps: f64,
    points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MisCurves {
    pub delta_ps: Vec<f64>,
    pub fall_ps: Vec<f64>,
    pub rise_ps: Vec<f64>,
    /// Values at `Δ = -∞, 0, +∞`.
    pub fall_limits_ps: [f64; 3],
    pub rise_limits_ps: [f64; 3],
}

pub fn mis_curves_json(request: &str) -> Result<String, String> {
    let req: MisRequest = parse(request)?;
    let p = params_or_default(req.params)?;
    let deltas = grid(req.delta_min_ps, req.delta_max_ps, req.points)?;
    let at = |f: fn(&GateParams, ExtTime) -> Result<f64, hybridtime::gate_model::ModelError>, d: ExtTime| {
        f(&p, d).map(|x| x / PS).map_err(|e| e.to_string())
    };
    let mut fall = Vec::with_capacity(deltas.len());
    let mut rise = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        fall.push(at(mis_delay_falling, ExtTime::Finite(d * PS))?);
        rise.push(at(mis_delay_rising, ExtTime::Finite(d * PS))?);
    }
    let limits = |f| -> Result<[f64; 3], String> {
        Ok([at(f, ExtTime::NegInf)?, at(f, ExtTime::Finite(0.0))?, at(f, ExtTime::PosInf)?])
    };
    to_json(&MisCurves {
        delta_ps: deltas,
        fall_ps: fall,
        rise_ps: rise,
        fall_limits_ps: limits(mis_delay_falling)?,
        rise_limits_ps: limits(mis_delay_rising)?,
    })
}

#[derive(Deserialize)]
struct DraftingRequest {
    #[serde(default)]
    params: Option<GateParams>,
    width_min_ps: f64,
    width_max_ps: f64,
    points: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DraftingCurve {
    pub width_ps: Vec<f64>,
    /// Delay of the output edge caused by the falling input edge, measured
    /// from that edge; `null` when the pulse is suppressed.
    pub delay_ps: Vec<Option<f64>>,
}

/// Rising-output delay of a NOR gate after an input pulse of varying width
/// on input A.
pub fn drafting_curve_json(request: &str) -> Result<String, String> {
    let req: DraftingRequest = parse(request)?;
    let p = params_or_default(req.params)?;
    let widths = grid(req.width_min_ps, req.width_max_ps, req.points)?;
    if widths[0] <= 0.0 {
        return Err("pulse widths must be positive".into());
    }
    let mut delay = Vec::with_capacity(widths.len());
    for &w in &widths {
        let seq = [
            InputTransition::new(Input::A, Edge::Rise, 0.0),
            InputTransition::new(Input::A, Edge::Fall, w * PS),
        ];
        let out = process_sequence(&p, GateKind::Nor2, (false, false), &seq).map_err(|e| e.to_string())?;
        let rec = &out.events[1];
        delay.push((rec.kind == TransitionKind::Real && !rec.canceled).then(|| (rec.t_out.to_f64() - w * PS) / PS));
    }
    to_json(&DraftingCurve { width_ps: widths, delay_ps: delay })
}

#[derive(Deserialize)]
struct EventIn {
    input: Input,
    edge: Edge,
    time_ps: f64,
}

#[derive(Deserialize)]
struct GateRequest {
    #[serde(default)]
    params: Option<GateParams>,
    kind: GateKind,
    #[serde(default)]
    initial: (bool, bool),
    events: Vec<EventIn>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventOut {
    pub time_ps: f64,
    pub case: char,
    pub v_int: f64,
    /// Output crossing time; `null` for a crossing in the infinite past.
    pub t_out_ps: Option<f64>,
    pub real: bool,
    pub canceled: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EdgeOut {
    pub time_ps: f64,
    pub level: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GateRun {
    pub initial_level: bool,
    pub outputs: Vec<EdgeOut>,
    pub events: Vec<EventOut>,
}

pub fn simulate_gate_json(request: &str) -> Result<String, String> {
    let req: GateRequest = parse(request)?;
    let p = params_or_default(req.params)?;
    let mut seq: Vec<InputTransition> =
        req.events.iter().map(|e| InputTransition::new(e.input, e.edge, e.time_ps * PS)).collect();
    seq.sort_by(|a, b| a.time.total_cmp(&b.time));
    let out = process_sequence(&p, req.kind, req.initial, &seq).map_err(|e| e.to_string())?;
    let events = out
        .events
        .iter()
        .map(|r| EventOut {
            time_ps: r.time / PS,
            case: r.case.label(),
            v_int: r.v_int,
            t_out_ps: match r.t_out {
                ExtTime::Finite(t) => Some(t / PS),
                _ => None,
            },
            real: r.kind == TransitionKind::Real,
            canceled: r.canceled,
        })
        .collect();
    let outputs = out.real.iter().map(|o| EdgeOut { time_ps: o.time / PS, level: o.level }).collect();
    to_json(&GateRun { initial_level: out.initial_level, outputs, events })
}

#[wasm_bindgen]
pub fn mis_curves(request: &str) -> Result<String, JsValue> {
    mis_curves_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn drafting_curve(request: &str) -> Result<String, JsValue> {
    drafting_curve_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_gate(request: &str) -> Result<String, JsValue> {
    simulate_gate_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn reference_params() -> String {
    serde_json::to_string_pretty(&GateParams::nor_chain_reference()).expect("params serialize")
}
