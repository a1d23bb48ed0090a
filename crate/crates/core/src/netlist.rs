//! Gate-level circuits of 2-input NOR/NAND gates.
//!
//! A netlist is a JSON document:
//!
//! ```json
//! {"gates": [{"id": "g1", "kind": "nor2", "a": "x", "b": "y", "out": "z",
//!             "params": "nor.json", "model": "hybrid"}],
//!  "inputs": ["x", "y"], "outputs": ["z"]}
//! ```
//!
//! `params` is either a path (relative to the netlist file) to a parameter
//! file or an inline parameter object. `model` is `hybrid` (default),
//! `pure` or `inertial`; the two baseline models take an optional
//! `baseline` object and otherwise derive their delays from the gate's
//! hybrid parameters. The nets `const0` and `const1` are always driven.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{BaselineError, BaselineParams};
use crate::channel::{GateKind, Input};
use crate::gate_model::{GateParams, ModelError};

pub const CONST0: &str = "const0";
pub const CONST1: &str = "const1";

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("netlist schema: {0}")]
    Schema(String),
    #[error("duplicate gate id {0:?}")]
    DuplicateGate(String),
    #[error("net {net:?} has several drivers: {drivers:?}")]
    MultipleDrivers { net: String, drivers: Vec<String> },
    #[error("net {net:?} used by {user} has no driver")]
    Dangling { net: String, user: String },
    #[error("gates {gates:?} form a cycle but have zero minimum delay")]
    ZeroDelayCycle { gates: Vec<String> },
    #[error("gate {gate:?}: {source}")]
    Params {
        gate: String,
        #[source]
        source: ModelError,
    },
    #[error("gate {gate:?}: {source}")]
    Baseline {
        gate: String,
        #[source]
        source: BaselineError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayModel {
    #[default]
    Hybrid,
    Pure,
    Inertial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsRef {
    Path(String),
    Inline(GateParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub id: String,
    pub kind: GateKind,
    pub a: String,
    pub b: String,
    pub out: String,
    pub params: ParamsRef,
    #[serde(default, skip_serializing_if = "is_hybrid")]
    pub model: DelayModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineParams>,
}

fn is_hybrid(m: &DelayModel) -> bool {
    *m == DelayModel::Hybrid
}

/// The file form of a netlist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistDoc {
    pub gates: Vec<GateSpec>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

pub type NetId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
    Const(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub id: String,
    pub kind: GateKind,
    pub a: NetId,
    pub b: NetId,
    pub out: NetId,
    pub params: GateParams,
    pub model: DelayModel,
    /// Resolved delays for the pure and inertial models.
    pub baseline: Option<BaselineParams>,
}

impl Gate {
    /// Lower bound of any output delay of the gate.
    pub fn min_delay(&self) -> f64 {
        match (self.model, self.baseline) {
            (DelayModel::Hybrid, _) | (_, None) => self.params.d_min,
            (_, Some(bp)) => bp.d_rise.min(bp.d_fall),
        }
    }
}

/// A validated circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    doc: NetlistDoc,
    gates: Vec<Gate>,
    nets: Vec<String>,
    net_ids: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    drivers: Vec<Driver>,
    fanout: Vec<Vec<(usize, Input)>>,
    cyclic: Vec<Vec<usize>>,
}

impl Netlist {
    pub fn from_file(path: &Path) -> Result<Netlist, NetlistError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| NetlistError::Io { path: path.to_path_buf(), source })?;
        Netlist::from_json_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses a netlist whose parameter paths are relative to `base_dir`.
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Netlist, NetlistError> {
        let doc: NetlistDoc = serde_json::from_str(text).map_err(|e| NetlistError::Schema(e.to_string()))?;
        Netlist::from_doc(doc, base_dir)
    }

    pub fn from_doc(doc: NetlistDoc, base_dir: &Path) -> Result<Netlist, NetlistError> {
        let mut seen = HashSet::new();
        for g in &doc.gates {
            if !seen.insert(g.id.as_str()) {
                return Err(NetlistError::DuplicateGate(g.id.clone()));
            }
        }

        let mut nets: Vec<String> = Vec::new();
        let mut net_ids: HashMap<String, NetId> = HashMap::new();
        let mut intern = |name: &str| -> NetId {
            if let Some(&id) = net_ids.get(name) {
                return id;
            }
            nets.push(name.to_string());
            net_ids.insert(name.to_string(), nets.len() - 1);
            nets.len() - 1
        };
        let c0 = intern(CONST0);
        let c1 = intern(CONST1);
        let inputs: Vec<NetId> = doc.inputs.iter().map(|n| intern(n)).collect();
        let gate_nets: Vec<(NetId, NetId, NetId)> =
            doc.gates.iter().map(|g| (intern(&g.a), intern(&g.b), intern(&g.out))).collect();
        let outputs: Vec<NetId> = doc.outputs.iter().map(|n| intern(n)).collect();

        let mut driver_lists: Vec<Vec<(String, Driver)>> = vec![Vec::new(); nets.len()];
        driver_lists[c0].push((CONST0.into(), Driver::Const(false)));
        driver_lists[c1].push((CONST1.into(), Driver::Const(true)));
        for (k, &n) in inputs.iter().enumerate() {
            driver_lists[n].push((format!("input {}", nets[n]), Driver::Input(k)));
        }
        for (k, g) in doc.gates.iter().enumerate() {
            driver_lists[gate_nets[k].2].push((format!("gate {}", g.id), Driver::Gate(k)));
        }
        let mut drivers = Vec::with_capacity(nets.len());
        for (n, list) in driver_lists.into_iter().enumerate() {
            match list.len() {
                1 => drivers.push(list[0].1),
                0 => drivers.push(Driver::Const(false)),
                _ => {
                    return Err(NetlistError::MultipleDrivers {
                        net: nets[n].clone(),
                        drivers: list.into_iter().map(|d| d.0).collect(),
                    })
                }
            }
        }
        let driven = |n: NetId| n == c0 || n == c1 || !matches!(drivers[n], Driver::Const(_));
        for (k, g) in doc.gates.iter().enumerate() {
            for n in [gate_nets[k].0, gate_nets[k].1] {
                if !driven(n) {
                    return Err(NetlistError::Dangling { net: nets[n].clone(), user: format!("gate {}", g.id) });
                }
            }
        }
        for &n in &outputs {
            if !driven(n) {
                return Err(NetlistError::Dangling { net: nets[n].clone(), user: "outputs".into() });
            }
        }

        let mut file_cache: BTreeMap<String, GateParams> = BTreeMap::new();
        let mut gates = Vec::with_capacity(doc.gates.len());
        for (k, spec) in doc.gates.iter().enumerate() {
            let params = match &spec.params {
                ParamsRef::Inline(p) => *p,
                ParamsRef::Path(rel) => match file_cache.get(rel) {
                    Some(p) => *p,
                    None => {
                        let p = load_params(&base_dir.join(rel))?;
                        file_cache.insert(rel.clone(), p);
                        p
                    }
                },
            };
            params.validate().map_err(|source| NetlistError::Params { gate: spec.id.clone(), source })?;
            let baseline = match spec.model {
                DelayModel::Hybrid => None,
                m => {
                    let bp = match spec.baseline {
                        Some(bp) => bp,
                        None => BaselineParams::from_hybrid(&params, spec.kind, m == DelayModel::Inertial)
                            .map_err(|source| NetlistError::Params { gate: spec.id.clone(), source })?,
                    };
                    let bp = if m == DelayModel::Pure { BaselineParams { inertial_window: 0.0, ..bp } } else { bp };
                    bp.validate().map_err(|source| NetlistError::Baseline { gate: spec.id.clone(), source })?;
                    Some(bp)
                }
            };
            let (a, b, out) = gate_nets[k];
            gates.push(Gate { id: spec.id.clone(), kind: spec.kind, a, b, out, params, model: spec.model, baseline });
        }

        let mut fanout = vec![Vec::new(); nets.len()];
        for (k, g) in gates.iter().enumerate() {
            fanout[g.a].push((k, Input::A));
            fanout[g.b].push((k, Input::B));
        }

        let mut graph = DiGraph::<usize, ()>::with_capacity(gates.len(), gates.len() * 2);
        let nodes: Vec<_> = (0..gates.len()).map(|k| graph.add_node(k)).collect();
        for (k, g) in gates.iter().enumerate() {
            for &(sink, _) in &fanout[g.out] {
                graph.add_edge(nodes[k], nodes[sink], ());
            }
        }
        let mut cyclic = Vec::new();
        for scc in tarjan_scc(&graph) {
            let looped = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
            if !looped {
                continue;
            }
            let mut members: Vec<usize> = scc.iter().map(|&n| graph[n]).collect();
            members.sort_unstable();
            let zero: Vec<String> =
                members.iter().filter(|&&k| !(gates[k].min_delay() > 0.0)).map(|&k| gates[k].id.clone()).collect();
            if !zero.is_empty() {
                return Err(NetlistError::ZeroDelayCycle { gates: zero });
            }
            cyclic.push(members);
        }
        cyclic.sort();
        if !cyclic.is_empty() {
            log::debug!("{} feedback loop(s) found", cyclic.len());
        }

        Ok(Netlist { doc, gates, nets, net_ids, inputs, outputs, drivers, fanout, cyclic })
    }

    /// The document this netlist was parsed from.
    pub fn doc(&self) -> &NetlistDoc {
        &self.doc
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("netlist serializes")
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id]
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.net_ids.get(name).copied()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn input_names(&self) -> Vec<String> {
        self.inputs.iter().map(|&n| self.nets[n].clone()).collect()
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net]
    }

    pub fn fanout(&self, net: NetId) -> &[(usize, Input)] {
        &self.fanout[net]
    }

    /// Gate index sets of the feedback loops.
    pub fn cycles(&self) -> &[Vec<usize>] {
        &self.cyclic
    }

    /// Same circuit with every gate switched to `model` (baseline delays
    /// derived from the hybrid parameters).
    pub fn with_model(&self, model: DelayModel) -> Result<Netlist, NetlistError> {
        let mut doc = self.doc.clone();
        for (spec, gate) in doc.gates.iter_mut().zip(&self.gates) {
            spec.model = model;
            spec.baseline = None;
            spec.params = ParamsRef::Inline(gate.params);
        }
        Netlist::from_doc(doc, Path::new("."))
    }
}

pub fn load_params(path: &Path) -> Result<GateParams, NetlistError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| NetlistError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| NetlistError::Schema(format!("{}: {e}", path.display())))
}
