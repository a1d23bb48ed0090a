//! Discrete-event simulation of a [`Netlist`].
//!
//! Every gate owns one channel (hybrid, pure or inertial). Net changes pop
//! from a queue ordered by `(time, insertion number)` and fan out to the
//! gates they drive; canceled outputs stay in the queue and are skipped when
//! popped.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashSet, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BaselineError, BaselineState};
use crate::channel::{ChannelError, ChannelState, Edge, InputTransition};
use crate::gate_model::ModelError;
use crate::metrics::compare_signals;
use crate::netlist::{DelayModel, Driver, NetId, Netlist, NetlistError};
use crate::stimuli::{generate_stimuli, StimulusError, StimulusSpec, DEFAULT_FLOOR};
use crate::trace::{Trace, Transition};

pub const DEFAULT_MAX_EVENTS_PER_NET: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("no stimulus for primary input {0:?}")]
    MissingStimulus(String),
    #[error("stimulus for {0:?}, which is not a primary input")]
    NotAnInput(String),
    #[error("stimulus for {net:?}: {message}")]
    BadStimulus { net: String, message: String },
    #[error("the circuit has no stable state for the initial input levels")]
    NoSteadyState,
    #[error("net {net:?} exceeded {limit} events at t = {time:e} s (oscillation?)")]
    Runaway { net: String, limit: usize, time: f64 },
    #[error("gate {gate:?}: {source}")]
    Channel {
        gate: String,
        #[source]
        source: ChannelError,
    },
    #[error("gate {gate:?}: {source}")]
    Baseline {
        gate: String,
        #[source]
        source: BaselineError,
    },
    #[error("gate {gate:?}: {source}")]
    Model {
        gate: String,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Events after this time are not processed.
    pub t_end: f64,
    pub max_events_per_net: usize,
}

impl SimConfig {
    pub fn until(t_end: f64) -> SimConfig {
        SimConfig { t_end, max_events_per_net: DEFAULT_MAX_EVENTS_PER_NET }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub events_processed: u64,
    /// Gate output transitions that reached their net.
    pub real_outputs: u64,
    /// Gate input events whose output transition was never scheduled.
    pub virtual_outputs: u64,
    pub cancellations: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub traces: BTreeMap<String, Trace>,
    pub stats: SimStats,
}

impl SimulationResult {
    /// Equality apart from wall time.
    pub fn same_outcome(&self, other: &SimulationResult) -> bool {
        let strip = |s: &SimStats| SimStats { wall_time_s: 0.0, ..*s };
        self.traces == other.traces && strip(&self.stats) == strip(&other.stats)
    }
}

#[derive(Debug, Clone, Copy)]
struct QueuedEvent {
    time: f64,
    seq: u64,
    net: NetId,
    level: bool,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueuedEvent {}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<QueuedEvent>>,
    next_seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, net: NetId, level: bool) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(QueuedEvent { time, seq, net, level }));
        seq
    }

    fn pop(&mut self) -> Option<QueuedEvent> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

#[allow(clippy::large_enum_variant)]
enum GateChannel {
    Hybrid { state: ChannelState, pending: Option<u64> },
    Baseline { state: BaselineState, pending: VecDeque<u64> },
}

/// Boolean fixed point of the circuit for the initial input levels, found
/// by repeated in-order evaluation.
fn settle(netlist: &Netlist, values: &mut [bool]) -> Result<(), SimulationError> {
    for _ in 0..=netlist.gates().len() + 1 {
        let mut changed = false;
        for g in netlist.gates() {
            let v = g.kind.eval(values[g.a], values[g.b]);
            if values[g.out] != v {
                values[g.out] = v;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
    }
    Err(SimulationError::NoSteadyState)
}

pub fn run(netlist: &Netlist, stimuli: &[Trace], cfg: &SimConfig) -> Result<SimulationResult, SimulationError> {
    let started = Instant::now();
    let mut by_input: Vec<Option<&Trace>> = vec![None; netlist.inputs().len()];
    for trace in stimuli {
        let net = netlist.net_id(&trace.net).ok_or_else(|| SimulationError::NotAnInput(trace.net.clone()))?;
        let Driver::Input(k) = netlist.driver(net) else {
            return Err(SimulationError::NotAnInput(trace.net.clone()));
        };
        trace.validate().map_err(|e| SimulationError::BadStimulus { net: trace.net.clone(), message: e.to_string() })?;
        by_input[k] = Some(trace);
    }

    let mut values = vec![false; netlist.net_count()];
    for (net, v) in values.iter_mut().enumerate() {
        if let Driver::Const(level) = netlist.driver(net) {
            *v = level;
        }
    }
    for (k, &net) in netlist.inputs().iter().enumerate() {
        let trace = by_input[k].ok_or_else(|| SimulationError::MissingStimulus(netlist.net_name(net).to_string()))?;
        values[net] = trace.initial_level;
    }
    settle(netlist, &mut values)?;

    let t0 = stimuli.iter().filter_map(|t| t.transitions.first()).map(|t| t.time).fold(0.0, f64::min);
    let mut channels = Vec::with_capacity(netlist.gates().len());
    for g in netlist.gates() {
        let inputs = (values[g.a], values[g.b]);
        let ch = match (g.model, g.baseline) {
            (DelayModel::Hybrid, _) | (_, None) => GateChannel::Hybrid {
                state: ChannelState::new(&g.params, g.kind, inputs, t0)
                    .map_err(|source| SimulationError::Model { gate: g.id.clone(), source })?,
                pending: None,
            },
            (_, Some(bp)) => GateChannel::Baseline {
                state: BaselineState::new(g.kind, bp, inputs, t0)
                    .map_err(|source| SimulationError::Baseline { gate: g.id.clone(), source })?,
                pending: VecDeque::new(),
            },
        };
        channels.push(ch);
    }

    let mut queue = EventQueue::default();
    let mut stim: Vec<(f64, usize, bool)> = Vec::new();
    for (k, trace) in by_input.iter().enumerate() {
        stim.extend(trace.expect("checked above").transitions.iter().map(|t| (t.time, k, t.level)));
    }
    stim.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (time, k, level) in stim {
        queue.push(time, netlist.inputs()[k], level);
    }

    let mut traces: Vec<Trace> = (0..netlist.net_count())
        .map(|n| Trace::constant(netlist.net_name(n), values[n]))
        .collect();
    let mut canceled: HashSet<u64> = HashSet::new();
    let mut per_net = vec![0usize; netlist.net_count()];
    let mut stats = SimStats::default();
    let mut last_time = f64::NEG_INFINITY;

    while let Some(ev) = queue.pop() {
        if canceled.remove(&ev.seq) {
            continue;
        }
        if ev.time > cfg.t_end {
            break;
        }
        debug_assert!(ev.time >= last_time);
        last_time = ev.time;
        if values[ev.net] == ev.level {
            log::debug!("dropping redundant event on {} at {:e}", netlist.net_name(ev.net), ev.time);
            continue;
        }
        values[ev.net] = ev.level;
        stats.events_processed += 1;
        if matches!(netlist.driver(ev.net), Driver::Gate(_)) {
            stats.real_outputs += 1;
        }
        per_net[ev.net] += 1;
        if per_net[ev.net] > cfg.max_events_per_net {
            return Err(SimulationError::Runaway {
                net: netlist.net_name(ev.net).to_string(),
                limit: cfg.max_events_per_net,
                time: ev.time,
            });
        }
        let trace = &mut traces[ev.net];
        if trace.transitions.last().is_some_and(|t| t.time == ev.time) {
            // zero-width pulse
            trace.transitions.pop();
        } else {
            trace.transitions.push(Transition { time: ev.time, level: ev.level });
        }

        for &(gi, input) in netlist.fanout(ev.net) {
            let gate = &netlist.gates()[gi];
            let input_ev = InputTransition::new(input, Edge::towards(ev.level), ev.time);
            match &mut channels[gi] {
                GateChannel::Hybrid { state, pending } => {
                    let actions = state
                        .feed_event(input_ev)
                        .map_err(|source| SimulationError::Channel { gate: gate.id.clone(), source })?;
                    if actions.cancel.is_some() {
                        canceled.insert(pending.take().expect("pending output has a queue entry"));
                        stats.cancellations += 1;
                    }
                    if actions.commit.is_some() {
                        *pending = None;
                    }
                    match actions.schedule {
                        Some(p) => *pending = Some(queue.push(p.time, gate.out, p.level)),
                        None => stats.virtual_outputs += 1,
                    }
                }
                GateChannel::Baseline { state, pending } => {
                    let actions = state
                        .feed_event(input_ev)
                        .map_err(|source| SimulationError::Baseline { gate: gate.id.clone(), source })?;
                    for _ in &actions.commit {
                        pending.pop_front();
                    }
                    if actions.cancel.is_some() {
                        canceled.insert(pending.pop_back().expect("pending output has a queue entry"));
                        stats.cancellations += 1;
                    }
                    if let Some(p) = actions.schedule {
                        pending.push_back(queue.push(p.time, gate.out, p.level));
                    }
                }
            }
        }
    }

    stats.wall_time_s = started.elapsed().as_secs_f64();
    let traces = traces
        .into_iter()
        .enumerate()
        .filter(|(n, _)| !matches!(netlist.driver(*n), Driver::Const(_)))
        .map(|(_, t)| (t.net.clone(), t))
        .collect();
    Ok(SimulationResult { traces, stats })
}

/// One `(μ, σ)` combination of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    #[serde(rename = "mu_s")]
    pub mu: f64,
    #[serde(rename = "sigma_s")]
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub points: Vec<SweepPoint>,
    pub runs_per_point: usize,
    /// Transitions per input and run.
    pub n: usize,
    pub base_seed: u64,
    #[serde(rename = "floor_s")]
    pub floor: f64,
    /// Simulated time after the last stimulus transition.
    #[serde(rename = "settle_s")]
    pub settle: f64,
    /// Also simulate each run with every gate switched to this model and
    /// record the deviation of its outputs from the netlist's own.
    pub compare_with: Option<DelayModel>,
    pub include_glitches: bool,
    /// Worker threads; `None` uses all cores.
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            points: Vec::new(),
            runs_per_point: 1,
            n: 100,
            base_seed: 0,
            floor: DEFAULT_FLOOR,
            settle: 1e-9,
            compare_with: None,
            include_glitches: true,
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub point: usize,
    pub run: usize,
    pub seed: u64,
    pub stats: Option<SimStats>,
    /// Mean deviation area per transition over the primary outputs.
    #[serde(rename = "deviation_per_transition_s")]
    pub deviation: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len();
        if n == 0 {
            return MeanStd::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        MeanStd { mean, std: var.sqrt(), count: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub point: SweepPoint,
    pub failures: usize,
    pub events_processed: MeanStd,
    pub real_outputs: MeanStd,
    pub cancellations: MeanStd,
    #[serde(rename = "deviation_per_transition_s")]
    pub deviation: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub points: Vec<PointSummary>,
}

fn sweep_run(
    netlist: &Netlist,
    other: Option<&Netlist>,
    cfg: &SweepConfig,
    point: usize,
    index: usize,
) -> RunRecord {
    let seed = cfg.base_seed.wrapping_add((point * cfg.runs_per_point + index) as u64);
    let mut rec = RunRecord { point, run: index, seed, stats: None, deviation: None, error: None };
    let sp = cfg.points[point];
    let spec = StimulusSpec { mu: sp.mu, sigma: sp.sigma, n: cfg.n, seed, floor: cfg.floor };
    let outcome = (|| -> Result<(SimStats, Option<f64>), String> {
        let stim = generate_stimuli(&spec, &netlist.input_names()).map_err(|e: StimulusError| e.to_string())?;
        let sim_cfg = SimConfig::until(stim.last_time() + cfg.settle);
        let own = run(netlist, &stim.traces, &sim_cfg).map_err(|e| e.to_string())?;
        let deviation = match other {
            None => None,
            Some(alt) => {
                let theirs = run(alt, &stim.traces, &sim_cfg).map_err(|e| e.to_string())?;
                let mut per = Vec::new();
                for &o in netlist.outputs() {
                    let name = netlist.net_name(o);
                    let (Some(r), Some(c)) = (own.traces.get(name), theirs.traces.get(name)) else { continue };
                    let rep = compare_signals(r, c, cfg.include_glitches).map_err(|e| e.to_string())?;
                    per.push(rep.area_per_transition);
                }
                Some(MeanStd::of(&per).mean)
            }
        };
        Ok((own.stats, deviation))
    })();
    match outcome {
        Ok((stats, deviation)) => {
            rec.stats = Some(stats);
            rec.deviation = deviation;
        }
        Err(e) => rec.error = Some(e),
    }
    rec
}

/// Repeats [`run`] over a grid of stimulus settings with fresh seeds. Run
/// failures are recorded, not propagated. The report does not depend on the
/// number of worker threads.
pub fn sweep(netlist: &Netlist, cfg: &SweepConfig) -> Result<SweepReport, NetlistError> {
    let other = cfg.compare_with.map(|m| netlist.with_model(m)).transpose()?;
    let jobs: Vec<(usize, usize)> =
        (0..cfg.points.len()).flat_map(|p| (0..cfg.runs_per_point).map(move |r| (p, r))).collect();
    let exec = |&(p, r): &(usize, usize)| sweep_run(netlist, other.as_ref(), cfg, p, r);

    #[cfg(feature = "parallel")]
    let runs: Vec<RunRecord> = {
        use rayon::prelude::*;
        let work = || jobs.par_iter().map(exec).collect();
        match cfg.jobs {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(work),
                Err(e) => {
                    log::warn!("could not build a {n}-thread pool ({e}); using the global pool");
                    work()
                }
            },
            None => work(),
        }
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<RunRecord> = jobs.iter().map(exec).collect();

    let points = cfg
        .points
        .iter()
        .enumerate()
        .map(|(p, &point)| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.point == p).collect();
            let ok: Vec<&SimStats> = mine.iter().filter_map(|r| r.stats.as_ref()).collect();
            let col = |f: fn(&SimStats) -> u64| MeanStd::of(&ok.iter().map(|s| f(s) as f64).collect::<Vec<_>>());
            PointSummary {
                point,
                failures: mine.len() - ok.len(),
                events_processed: col(|s| s.events_processed),
                real_outputs: col(|s| s.real_outputs),
                cancellations: col(|s| s.cancellations),
                deviation: MeanStd::of(&mine.iter().filter_map(|r| r.deviation).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok(SweepReport { runs, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate_model::GateParams;
    use serde_json::json;
    use std::path::Path;

    const PS: f64 = 1e-12;

    fn one_nor() -> Netlist {
        let p = serde_json::to_value(GateParams::nor_chain_reference()).unwrap();
        let doc = json!({"gates": [{"id": "g", "kind": "nor2", "a": "a", "b": "b", "out": "y", "params": p}],
                         "inputs": ["a", "b"], "outputs": ["y"]});
        Netlist::from_json_str(&doc.to_string(), Path::new(".")).unwrap()
    }

    #[test]
    fn suppressed_pulse_leaves_output_quiet() {
        let n = one_nor();
        let stim = [Trace::from_toggle_times("a", false, &[0.0, 1.0 * PS]), Trace::constant("b", false)];
        let res = run(&n, &stim, &SimConfig::until(1e-9)).unwrap();
        let y = &res.traces["y"];
        assert!(y.initial_level);
        assert!(y.transitions.is_empty());
        assert_eq!(res.stats.cancellations, 1);
        assert_eq!(res.stats.virtual_outputs, 1);
    }

    #[test]
    fn cross_coupled_latch_settles_and_sets() {
        let p = serde_json::to_value(GateParams::nor_chain_reference()).unwrap();
        let doc = json!({"gates": [
            {"id": "n1", "kind": "nor2", "a": "r", "b": "qn", "out": "q", "params": p},
            {"id": "n2", "kind": "nor2", "a": "s", "b": "q", "out": "qn", "params": p}],
            "inputs": ["s", "r"], "outputs": ["q", "qn"]});
        let n = Netlist::from_json_str(&doc.to_string(), Path::new(".")).unwrap();
        // reset pulse, then set pulse
        let stim = [
            Trace::from_toggle_times("r", false, &[10.0 * PS, 30.0 * PS]),
            Trace::from_toggle_times("s", false, &[60.0 * PS, 80.0 * PS]),
        ];
        let res = run(&n, &stim, &SimConfig::until(1e-9)).unwrap();
        let q = &res.traces["q"];
        let qn = &res.traces["qn"];
        assert!(q.final_level());
        assert!(!qn.final_level());
        assert_ne!(q.level_at(50.0 * PS), qn.level_at(50.0 * PS));
    }

    #[test]
    fn runaway_guard() {
        let n = one_nor();
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 20.0 * PS).collect();
        let stim = [Trace::from_toggle_times("a", false, &times), Trace::constant("b", false)];
        let cfg = SimConfig { t_end: 1e-9, max_events_per_net: 5 };
        assert!(matches!(run(&n, &stim, &cfg), Err(SimulationError::Runaway { .. })));
    }

    #[test]
    fn stimulus_errors() {
        let n = one_nor();
        let only_a = [Trace::constant("a", false)];
        assert!(matches!(run(&n, &only_a, &SimConfig::until(1e-9)), Err(SimulationError::MissingStimulus(_))));
        let on_output = [Trace::constant("a", false), Trace::constant("b", false), Trace::constant("y", true)];
        assert!(matches!(run(&n, &on_output, &SimConfig::until(1e-9)), Err(SimulationError::NotAnInput(_))));
    }

    #[test]
    fn sweep_shapes() {
        let n = one_nor();
        let empty = sweep(&n, &SweepConfig::default()).unwrap();
        assert!(empty.runs.is_empty() && empty.points.is_empty());
        let cfg = SweepConfig {
            points: vec![SweepPoint { mu: 15.0 * PS, sigma: 5.0 * PS }, SweepPoint { mu: 30.0 * PS, sigma: 5.0 * PS }],
            runs_per_point: 2,
            n: 20,
            compare_with: Some(DelayModel::Inertial),
            ..SweepConfig::default()
        };
        let rep = sweep(&n, &cfg).unwrap();
        assert_eq!(rep.runs.len(), 4);
        let seeds: HashSet<u64> = rep.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 4);
        assert!(rep.runs.iter().all(|r| r.error.is_none() && r.deviation.is_some()));
        assert_eq!(rep.points[0].events_processed.count, 2);
        let serial = sweep(&n, &SweepConfig { jobs: Some(1), ..cfg }).unwrap();
        let strip = |r: &SweepReport| {
            r.runs.iter().map(|x| (x.seed, x.stats.map(|s| s.events_processed), x.deviation)).collect::<Vec<_>>()
        };
        assert_eq!(strip(&rep), strip(&serial));
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0]);
        assert_eq!(m.mean, 2.0);
        assert_eq!(m.std, 1.0);
        assert_eq!(MeanStd::of(&[]).count, 0);
    }
}
