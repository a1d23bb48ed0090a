//! Bundled benchmark circuits.

use crate::channel::GateKind;
use crate::gate_model::GateParams;
use crate::netlist::{DelayModel, GateSpec, NetlistDoc, ParamsRef};

fn gate(id: String, a: String, b: String, out: String, params: &GateParams) -> GateSpec {
    GateSpec {
        id,
        kind: GateKind::Nor2,
        a,
        b,
        out,
        params: ParamsRef::Inline(*params),
        model: DelayModel::Hybrid,
        baseline: None,
    }
}

/// Three parallel NOR chains with `stages` stages each. Every gate of
/// stage `k` combines two neighbouring signals of stage `k - 1`, so each
/// gate sees both inputs switching and the chains stay coupled.
///
/// Inputs are `i0..i2`; gate `(c, k)` drives net `n{c}_{k}`; the outputs
/// are the last stage.
pub fn nor_chain(stages: usize, params: &GateParams) -> NetlistDoc {
    let net = |c: usize, k: usize| if k == 0 { format!("i{c}") } else { format!("n{c}_{k}") };
    let mut gates = Vec::with_capacity(3 * stages);
    for k in 1..=stages {
        for c in 0..3 {
            gates.push(gate(format!("g{c}_{k}"), net(c, k - 1), net((c + 1) % 3, k - 1), net(c, k), params));
        }
    }
    NetlistDoc {
        gates,
        inputs: (0..3).map(|c| net(c, 0)).collect(),
        outputs: (0..3).map(|c| net(c, stages)).collect(),
    }
}

/// ISCAS-85 c17 with every NAND gate replaced by a NOR gate.
pub fn c17_nor(params: &GateParams) -> NetlistDoc {
    let s = |x: &str| x.to_string();
    let spec = [
        ("g10", "n1", "n3", "n10"),
        ("g11", "n3", "n6", "n11"),
        ("g16", "n2", "n11", "n16"),
        ("g19", "n11", "n7", "n19"),
        ("g22", "n10", "n16", "n22"),
        ("g23", "n16", "n19", "n23"),
    ];
    NetlistDoc {
        gates: spec.iter().map(|&(id, a, b, out)| gate(s(id), s(a), s(b), s(out), params)).collect(),
        inputs: ["n1", "n2", "n3", "n6", "n7"].map(s).to_vec(),
        outputs: vec![s("n22"), s("n23")],
    }
}
