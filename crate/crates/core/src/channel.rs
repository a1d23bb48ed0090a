//! Per-gate transition processing.
//!
//! Every input transition produces exactly one output transition. It is
//! *real* if its threshold crossing lies between the causing input event and
//! the next input event of the gate, and *virtual* otherwise. Virtual
//! transitions still anchor the trajectory that the next event starts from.
//!
//! Two forms are provided: [`process_sequence`] walks a complete input
//! sequence with one event of look-ahead, and [`ChannelState::feed_event`]
//! processes events one at a time for the circuit simulator, deferring the
//! cancel/commit decision of its pending output to the next event (or
//! [`ChannelState::flush`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate_model::{dual_case, CaseId, GateParams, ModelError, NorModel};
use crate::time::ExtTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Nor2,
    Nand2,
}

impl GateKind {
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::Nor2 => !(a || b),
            GateKind::Nand2 => !(a && b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Input {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Rise,
    Fall,
}

impl Edge {
    pub fn to_level(self) -> bool {
        self == Edge::Rise
    }

    pub fn towards(level: bool) -> Edge {
        if level {
            Edge::Rise
        } else {
            Edge::Fall
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputTransition {
    pub input: Input,
    pub edge: Edge,
    pub time: f64,
}

impl InputTransition {
    pub fn new(input: Input, edge: Edge, time: f64) -> Self {
        InputTransition { input, edge, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Real,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputTransition {
    pub level: bool,
    pub time: f64,
    pub kind: TransitionKind,
}

/// Diagnostic view of one processed input event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub index: usize,
    pub time: f64,
    /// Case in the gate's own (NOR or NAND) numbering.
    pub case: CaseId,
    /// Output voltage when the event switched the trajectory.
    pub v_int: f64,
    pub delta: ExtTime,
    pub output_level: bool,
    /// Crossing time plus `δmin`.
    pub t_out: ExtTime,
    pub kind: TransitionKind,
    /// Whether a later event canceled this (initially real) output.
    pub canceled: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("event {index}: {edge:?} edge on input {input:?}, which is already at that level")]
    InconsistentEdge { index: usize, input: Input, edge: Edge },
    #[error("event {index}: time {time:e} precedes the previous event at {previous:e}")]
    NonMonotonic { index: usize, time: f64, previous: f64 },
    #[error("event {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: ModelError,
    },
}

/// Trajectory started by the most recent input event, in the NOR domain.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Active {
    case: CaseId,
    delta: ExtTime,
    v_start: f64,
    t_out: ExtTime,
}

/// Registers and case arithmetic shared by both processing forms. All
/// voltages and levels here are those of the NOR gate; NAND gates are
/// handled by negating inputs and output.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NorCore {
    model: NorModel,
    inputs: (bool, bool),
    delta_e: ExtTime,
    delta_f: ExtTime,
    active: Option<Active>,
    initial_v: f64,
}

/// Result of applying one edge to [`NorCore`].
#[derive(Debug, Clone, Copy)]
struct Switch {
    case: CaseId,
    v_int: f64,
    delta: ExtTime,
    level: bool,
    t_out: ExtTime,
}

impl NorCore {
    fn new(model: NorModel, inputs: (bool, bool)) -> NorCore {
        let initial_v = if !(inputs.0 || inputs.1) { model.p.vdd } else { 0.0 };
        NorCore {
            model,
            inputs,
            delta_e: ExtTime::NegInf,
            delta_f: ExtTime::NegInf,
            active: None,
            initial_v,
        }
    }

    /// Output voltage at `t` along the current trajectory.
    fn voltage_at(&self, t: f64) -> Result<f64, ModelError> {
        let Some(act) = self.active else {
            return Ok(self.initial_v);
        };
        let vdd = self.model.p.vdd;
        let v = match act.t_out {
            ExtTime::Finite(t_out) => {
                let since_crossing = t - (t_out - self.model.p.d_min);
                self.model.shifted_trajectory(act.case, since_crossing, act.delta, act.v_start)?
            }
            // settled before the event
            _ if act.case.nor_output_rises() => vdd,
            _ => 0.0,
        };
        Ok(v.clamp(0.0, vdd))
    }

    fn classify(&self, input: Input, edge: Edge) -> Option<CaseId> {
        let level = edge.to_level();
        let to = match input {
            Input::A => (level, self.inputs.1),
            Input::B => (self.inputs.0, level),
        };
        CaseId::from_transition(self.inputs, to)
    }

    fn switch(&mut self, case: CaseId, t: f64) -> Result<Switch, ModelError> {
        let v_int = self.voltage_at(t)?;
        let delta = match case {
            CaseId::E => {
                self.delta_e = ExtTime::Finite(t);
                ExtTime::PosInf
            }
            CaseId::F => {
                self.delta_f = ExtTime::Finite(t);
                ExtTime::PosInf
            }
            CaseId::G => {
                let d = match self.delta_e {
                    ExtTime::Finite(te) => ExtTime::Finite(t - te),
                    _ => ExtTime::PosInf,
                };
                self.delta_f = ExtTime::Finite(t);
                d
            }
            CaseId::H => {
                let d = match self.delta_f {
                    ExtTime::Finite(tf) => ExtTime::Finite(tf - t),
                    _ => ExtTime::NegInf,
                };
                self.delta_e = ExtTime::Finite(t);
                d
            }
            _ => ExtTime::PosInf,
        };
        let t_out = self.model.delay(case, v_int, delta)?.plus(t);
        self.inputs = case.states().1;
        self.active = Some(Active { case, delta, v_start: v_int, t_out });
        Ok(Switch { case, v_int, delta, level: case.nor_output_rises(), t_out })
    }
}

/// Maps actual input edges and voltages to and from the NOR domain.
#[derive(Debug, Clone, Copy)]
struct Polarity {
    kind: GateKind,
    vdd: f64,
}

impl Polarity {
    fn edge(&self, edge: Edge) -> Edge {
        match (self.kind, edge) {
            (GateKind::Nor2, e) => e,
            (GateKind::Nand2, Edge::Rise) => Edge::Fall,
            (GateKind::Nand2, Edge::Fall) => Edge::Rise,
        }
    }

    fn level(&self, level: bool) -> bool {
        level ^ (self.kind == GateKind::Nand2)
    }

    fn inputs(&self, (a, b): (bool, bool)) -> (bool, bool) {
        (self.level(a), self.level(b))
    }

    fn voltage(&self, v: f64) -> f64 {
        match self.kind {
            GateKind::Nor2 => v,
            GateKind::Nand2 => self.vdd - v,
        }
    }

    fn case(&self, nor_case: CaseId) -> CaseId {
        match self.kind {
            GateKind::Nor2 => nor_case,
            GateKind::Nand2 => dual_case(nor_case),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessOutput {
    pub initial_level: bool,
    pub real: Vec<OutputTransition>,
    pub events: Vec<EventRecord>,
}

/// Processes a complete input sequence starting from settled `initial`
/// input levels.
pub fn process_sequence(
    p: &GateParams,
    kind: GateKind,
    initial: (bool, bool),
    inputs: &[InputTransition],
) -> Result<ProcessOutput, ChannelError> {
    let model = NorModel::new(*p).map_err(|source| ChannelError::Model { index: 0, source })?;
    let pol = Polarity { kind, vdd: p.vdd };
    let mut core = NorCore::new(model, pol.inputs(initial));
    let initial_level = kind.eval(initial.0, initial.1);
    let mut real: Vec<OutputTransition> = Vec::new();
    let mut events = Vec::with_capacity(inputs.len());
    let mut last_level = initial_level;
    let mut previous = f64::NEG_INFINITY;

    for (index, ev) in inputs.iter().enumerate() {
        if ev.time < previous {
            return Err(ChannelError::NonMonotonic { index, time: ev.time, previous });
        }
        previous = ev.time;
        let case = core
            .classify(ev.input, pol.edge(ev.edge))
            .ok_or(ChannelError::InconsistentEdge { index, input: ev.input, edge: ev.edge })?;
        let sw = core.switch(case, ev.time).map_err(|source| ChannelError::Model { index, source })?;
        let level = pol.level(sw.level);
        let t_next = inputs.get(index + 1).map_or(f64::INFINITY, |n| n.time);

        let mut kind_out = TransitionKind::Virtual;
        let mut canceled = false;
        if let ExtTime::Finite(t_out) = sw.t_out {
            let crossing = t_out - p.d_min;
            if crossing >= ev.time && level != last_level {
                if crossing > t_next {
                    canceled = true;
                } else {
                    kind_out = TransitionKind::Real;
                    real.push(OutputTransition { level, time: t_out, kind: TransitionKind::Real });
                    last_level = level;
                }
            }
        }
        events.push(EventRecord {
            index,
            time: ev.time,
            case: pol.case(sw.case),
            v_int: pol.voltage(sw.v_int),
            delta: sw.delta,
            output_level: level,
            t_out: sw.t_out,
            kind: kind_out,
            canceled,
        });
    }
    Ok(ProcessOutput { initial_level, real, events })
}

/// Output transition that is scheduled but may still be canceled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pending {
    pub level: bool,
    pub time: f64,
}

/// What the simulator has to do after one [`ChannelState::feed_event`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Actions {
    /// Previously scheduled output that must be withdrawn.
    pub cancel: Option<Pending>,
    /// Previously scheduled output that became final.
    pub commit: Option<Pending>,
    /// New output to schedule.
    pub schedule: Option<Pending>,
}

/// Event-driven state of one gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    kind: GateKind,
    pol_vdd: f64,
    core: NorCore,
    pending: Option<Pending>,
    out_level: bool,
    last_time: f64,
    events_seen: usize,
    last_record: Option<EventRecord>,
}

impl ChannelState {
    /// Gate settled at input levels `inputs` at time `t0`.
    pub fn new(p: &GateParams, kind: GateKind, inputs: (bool, bool), t0: f64) -> Result<ChannelState, ModelError> {
        let model = NorModel::new(*p)?;
        let pol = Polarity { kind, vdd: p.vdd };
        Ok(ChannelState {
            kind,
            pol_vdd: p.vdd,
            core: NorCore::new(model, pol.inputs(inputs)),
            pending: None,
            out_level: kind.eval(inputs.0, inputs.1),
            last_time: t0,
            events_seen: 0,
            last_record: None,
        })
    }

    fn pol(&self) -> Polarity {
        Polarity { kind: self.kind, vdd: self.pol_vdd }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn params(&self) -> &GateParams {
        &self.core.model.p
    }

    pub fn input_levels(&self) -> (bool, bool) {
        self.pol().inputs(self.core.inputs)
    }

    /// Committed output level.
    pub fn out_level(&self) -> bool {
        self.out_level
    }

    pub fn pending(&self) -> Option<Pending> {
        self.pending
    }

    /// Output voltage at the last processed event.
    pub fn v_int(&self) -> f64 {
        let v = self.core.active.map_or(self.core.initial_v, |a| a.v_start);
        self.pol().voltage(v)
    }

    /// Output voltage at `t` (not before the last event).
    pub fn voltage_at(&self, t: f64) -> Result<f64, ModelError> {
        Ok(self.pol().voltage(self.core.voltage_at(t)?))
    }

    pub fn delta_registers(&self) -> (ExtTime, ExtTime) {
        (self.core.delta_e, self.core.delta_f)
    }

    pub fn last_record(&self) -> Option<&EventRecord> {
        self.last_record.as_ref()
    }

    pub fn feed_event(&mut self, ev: InputTransition) -> Result<Actions, ChannelError> {
        let index = self.events_seen;
        if ev.time < self.last_time {
            return Err(ChannelError::NonMonotonic { index, time: ev.time, previous: self.last_time });
        }
        let pol = self.pol();
        let case = self
            .core
            .classify(ev.input, pol.edge(ev.edge))
            .ok_or(ChannelError::InconsistentEdge { index, input: ev.input, edge: ev.edge })?;

        let mut actions = Actions::default();
        if let Some(pending) = self.pending.take() {
            if pending.time - self.core.model.p.d_min > ev.time {
                actions.cancel = Some(pending);
                if let Some(rec) = self.last_record.as_mut() {
                    rec.kind = TransitionKind::Virtual;
                    rec.canceled = true;
                }
            } else {
                self.out_level = pending.level;
                actions.commit = Some(pending);
            }
        }

        let sw = self.core.switch(case, ev.time).map_err(|source| ChannelError::Model { index, source })?;
        let level = pol.level(sw.level);
        let mut kind_out = TransitionKind::Virtual;
        if let ExtTime::Finite(t_out) = sw.t_out {
            if t_out - self.core.model.p.d_min >= ev.time && level != self.out_level {
                let p = Pending { level, time: t_out };
                self.pending = Some(p);
                actions.schedule = Some(p);
                kind_out = TransitionKind::Real;
            }
        }
        self.last_record = Some(EventRecord {
            index,
            time: ev.time,
            case: pol.case(sw.case),
            v_int: pol.voltage(sw.v_int),
            delta: sw.delta,
            output_level: level,
            t_out: sw.t_out,
            kind: kind_out,
            canceled: false,
        });
        self.last_time = ev.time;
        self.events_seen += 1;
        Ok(actions)
    }

    /// Commits the pending output; no further input will arrive before it.
    pub fn flush(&mut self) -> Option<Pending> {
        let p = self.pending.take()?;
        self.out_level = p.level;
        Some(p)
    }
}

/// Folds [`ChannelState::feed_event`] over a sequence and flushes; returns
/// the real outputs.
pub fn process_incremental(
    p: &GateParams,
    kind: GateKind,
    initial: (bool, bool),
    inputs: &[InputTransition],
) -> Result<Vec<OutputTransition>, ChannelError> {
    let t0 = inputs.first().map_or(0.0, |e| e.time);
    let mut state =
        ChannelState::new(p, kind, initial, t0).map_err(|source| ChannelError::Model { index: 0, source })?;
    let mut out = Vec::new();
    let real = |p: Pending| OutputTransition { level: p.level, time: p.time, kind: TransitionKind::Real };
    for ev in inputs {
        if let Some(c) = state.feed_event(*ev)?.commit {
            out.push(real(c));
        }
    }
    out.extend(state.flush().map(real));
    Ok(out)
}
