//! Pure and inertial delay channels behind a zero-time Boolean gate.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Edge, GateKind, Input, InputTransition, OutputTransition, Pending, TransitionKind};
use crate::gate_model::{CaseId, GateParams, ModelError, NorModel};
use crate::time::ExtTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("invalid baseline parameters: {0}")]
    InvalidParams(String),
    #[error("event {index}: {message}")]
    Input { index: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    #[serde(rename = "d_rise_s")]
    pub d_rise: f64,
    #[serde(rename = "d_fall_s")]
    pub d_fall: f64,
    /// Output pulses shorter than this are removed; 0 gives a pure delay.
    #[serde(rename = "inertial_window_s", default)]
    pub inertial_window: f64,
}

impl BaselineParams {
    pub fn pure(d_rise: f64, d_fall: f64) -> BaselineParams {
        BaselineParams { d_rise, d_fall, inertial_window: 0.0 }
    }

    /// Single-transition delays of the hybrid model: the output delay after
    /// one input switches with the other input low (NOR) or high (NAND),
    /// starting from a settled output.
    pub fn from_hybrid(p: &GateParams, kind: GateKind, inertial: bool) -> Result<BaselineParams, ModelError> {
        let m = NorModel::new(*p)?;
        let nor_fall = m.delay(CaseId::A, p.vdd, ExtTime::PosInf)?.to_f64();
        let nor_rise = m.delay(CaseId::G, 0.0, ExtTime::PosInf)?.to_f64();
        let (d_rise, d_fall) = match kind {
            GateKind::Nor2 => (nor_rise, nor_fall),
            GateKind::Nand2 => (nor_fall, nor_rise),
        };
        let inertial_window = if inertial { d_rise.min(d_fall) } else { 0.0 };
        Ok(BaselineParams { d_rise, d_fall, inertial_window })
    }

    /// The window may not exceed the smaller delay: a pulse could otherwise
    /// only be removed after its first edge had already been emitted.
    pub fn validate(&self) -> Result<(), BaselineError> {
        for (name, v) in [("d_rise_s", self.d_rise), ("d_fall_s", self.d_fall), ("inertial_window_s", self.inertial_window)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BaselineError::InvalidParams(format!("{name} must be >= 0 and finite, got {v:e}")));
            }
        }
        if self.inertial_window > self.d_rise.min(self.d_fall) {
            return Err(BaselineError::InvalidParams(format!(
                "inertial_window_s = {:e} exceeds the smaller delay {:e}",
                self.inertial_window,
                self.d_rise.min(self.d_fall)
            )));
        }
        Ok(())
    }

    fn delay(&self, level: bool) -> f64 {
        if level {
            self.d_rise
        } else {
            self.d_fall
        }
    }
}

/// Actions of one baseline step; more than one output may be pending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaselineActions {
    pub cancel: Option<Pending>,
    pub commit: Vec<Pending>,
    pub schedule: Option<Pending>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    kind: GateKind,
    bp: BaselineParams,
    inputs: (bool, bool),
    /// Level the output reaches once all pending transitions occurred.
    target: bool,
    out_level: bool,
    pending: VecDeque<Pending>,
    last_time: f64,
    events_seen: usize,
}

impl BaselineState {
    pub fn new(kind: GateKind, bp: BaselineParams, inputs: (bool, bool), t0: f64) -> Result<BaselineState, BaselineError> {
        bp.validate()?;
        let level = kind.eval(inputs.0, inputs.1);
        Ok(BaselineState {
            kind,
            bp,
            inputs,
            target: level,
            out_level: level,
            pending: VecDeque::new(),
            last_time: t0,
            events_seen: 0,
        })
    }

    pub fn out_level(&self) -> bool {
        self.out_level
    }

    pub fn input_levels(&self) -> (bool, bool) {
        self.inputs
    }

    pub fn feed_event(&mut self, ev: InputTransition) -> Result<BaselineActions, BaselineError> {
        let index = self.events_seen;
        if ev.time < self.last_time {
            return Err(BaselineError::Input { index, message: format!("time {:e} goes backwards", ev.time) });
        }
        let slot = match ev.input {
            Input::A => &mut self.inputs.0,
            Input::B => &mut self.inputs.1,
        };
        if *slot == ev.edge.to_level() {
            return Err(BaselineError::Input { index, message: format!("{:?} edge on {:?} does not change it", ev.edge, ev.input) });
        }
        *slot = ev.edge.to_level();
        self.last_time = ev.time;
        self.events_seen += 1;

        let mut actions = BaselineActions::default();
        while let Some(front) = self.pending.front().copied() {
            if front.time > ev.time {
                break;
            }
            self.pending.pop_front();
            self.out_level = front.level;
            actions.commit.push(front);
        }
        let level = self.kind.eval(self.inputs.0, self.inputs.1);
        if level == self.target {
            return Ok(actions);
        }
        self.target = level;
        let time = ev.time + self.bp.delay(level);
        if let Some(last) = self.pending.back().copied() {
            if time <= last.time || time - last.time < self.bp.inertial_window {
                self.pending.pop_back();
                actions.cancel = Some(last);
                return Ok(actions);
            }
        }
        let p = Pending { level, time };
        self.pending.push_back(p);
        actions.schedule = Some(p);
        Ok(actions)
    }

    pub fn flush(&mut self) -> Vec<Pending> {
        let out: Vec<Pending> = self.pending.drain(..).collect();
        if let Some(last) = out.last() {
            self.out_level = last.level;
        }
        out
    }
}

pub fn baseline_process(
    kind: GateKind,
    bp: &BaselineParams,
    initial: (bool, bool),
    inputs: &[InputTransition],
) -> Result<Vec<OutputTransition>, BaselineError> {
    let t0 = inputs.first().map_or(0.0, |e| e.time);
    let mut state = BaselineState::new(kind, *bp, initial, t0)?;
    let real = |p: Pending| OutputTransition { level: p.level, time: p.time, kind: TransitionKind::Real };
    let mut out = Vec::new();
    for ev in inputs {
        out.extend(state.feed_event(*ev)?.commit.into_iter().map(real));
    }
    out.extend(state.flush().into_iter().map(real));
    Ok(out)
}

/// Zero-delay Boolean output transitions of a gate.
pub fn boolean_outputs(kind: GateKind, initial: (bool, bool), inputs: &[InputTransition]) -> Vec<(f64, bool)> {
    let mut levels = initial;
    let mut out = kind.eval(levels.0, levels.1);
    let mut res = Vec::new();
    for ev in inputs {
        match ev.input {
            Input::A => levels.0 = ev.edge == Edge::Rise,
            Input::B => levels.1 = ev.edge == Edge::Rise,
        }
        let next = kind.eval(levels.0, levels.1);
        if next != out {
            // a zero-width Boolean pulse cancels itself
            if res.last().is_some_and(|&(t, _)| t == ev.time) {
                res.pop();
            } else {
                res.push((ev.time, next));
            }
            out = next;
        }
    }
    res
}
