//! Primitive functions built from composed virtual neurons.
//!
//! Constant, successor and predecessor share one shape: a holder neuron fed a
//! fixed value, an input neuron fed `x`, and an output neuron adding the two
//! with edge weights `(1, 0)` for the constant and `(1, 1)` otherwise. Negate
//! routes each rail of its input into the opposite rail of the output. The sum
//! tree reduces `N` inputs pairwise.

use std::fmt;
use std::str::FromStr;

use crate::circuit::{
    CompositionEdge, CompositionGraph, ConnectOptions, InputPort, VirtualNeuronHandle,
};
use crate::codec::{decode_output, stimulus_for, DyadicValue, PrecisionVector};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{simulate, Network, SpikeTrace, Stimulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    Constant,
    Successor,
    Predecessor,
    Negate,
    SumTree,
}

impl FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(FunctionKind::Constant),
            "successor" => Ok(FunctionKind::Successor),
            "predecessor" => Ok(FunctionKind::Predecessor),
            "negate" => Ok(FunctionKind::Negate),
            "sum-tree" | "sum_tree" => Ok(FunctionKind::SumTree),
            other => Err(Error::argument(format!("unknown function kind {other:?}"))),
        }
    }
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FunctionKind::Constant => "constant",
            FunctionKind::Successor => "successor",
            FunctionKind::Predecessor => "predecessor",
            FunctionKind::Negate => "negate",
            FunctionKind::SumTree => "sum-tree",
        })
    }
}

/// An externally driven input of a function circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operand {
    pub name: String,
    pub vn: VirtualNeuronHandle,
    pub port: InputPort,
}

#[derive(Debug, Clone)]
pub struct FunctionCircuit {
    pub kind: FunctionKind,
    pub network: Network,
    pub operands: Vec<Operand>,
    pub output: VirtualNeuronHandle,
    pub handles: Vec<VirtualNeuronHandle>,
    pub edges: Vec<CompositionEdge>,
    /// Charge delivered every run, independent of the operands.
    pub bias: Stimulus,
    /// The hard-wired value for constant, successor and predecessor.
    pub constant: Option<DyadicValue>,
    /// Adder levels above the inputs (sum tree only; 1 otherwise).
    pub levels: usize,
}

impl FunctionCircuit {
    pub fn arity(&self) -> usize {
        self.operands.len()
    }

    pub fn virtual_neuron_count(&self) -> usize {
        self.handles.len()
    }

    pub fn stimulus(&self, inputs: &[DyadicValue]) -> Result<Stimulus> {
        if inputs.len() != self.operands.len() {
            return Err(Error::argument(format!(
                "{} expects {} inputs, got {}",
                self.kind,
                self.operands.len(),
                inputs.len()
            )));
        }
        let mut stim = self.bias.clone();
        for (op, v) in self.operands.iter().zip(inputs) {
            stim.extend(stimulus_for(&op.vn, op.port, v)?);
        }
        Ok(stim)
    }

    pub fn run(&self, inputs: &[DyadicValue]) -> Result<(DyadicValue, SpikeTrace)> {
        let stim = self.stimulus(inputs)?;
        let trace = simulate(&self.network, &stim, self.output.ready_step as i64)?;
        let value = decode_output(&self.output, &trace)?;
        Ok((value, trace))
    }

    pub fn evaluate(&self, inputs: &[DyadicValue]) -> Result<DyadicValue> {
        self.run(inputs).map(|(v, _)| v)
    }
}

fn require_nonempty(p: &PrecisionVector) -> Result<()> {
    if p.is_empty() {
        return Err(Error::argument("precision has no bits on either rail"));
    }
    Ok(())
}

fn build_holder_circuit(
    kind: FunctionKind,
    k: DyadicValue,
    p: PrecisionVector,
    x_weight: u8,
) -> Result<FunctionCircuit> {
    require_nonempty(&p)?;
    let mut g = CompositionGraph::new();
    let holder = g.add_virtual_neuron("k", p, 0)?;
    let input = g.add_virtual_neuron("x", p, 0)?;
    let start = g.handle(holder).ready_step + 1;
    let out = g.add_virtual_neuron("out", p.widened(), start)?;
    g.connect_weighted(holder, out, InputPort::X, 1, ConnectOptions::default())?;
    g.connect_weighted(input, out, InputPort::Y, x_weight, ConnectOptions::default())?;
    let bias = g.expose_bias(holder, InputPort::X, &k)?;
    g.expose_input("x", input, InputPort::X)?;
    g.expose_output("z", out)?;
    let (network, handles, edges) = g.finish()?;
    Ok(FunctionCircuit {
        kind,
        network,
        operands: vec![Operand {
            name: "x".into(),
            vn: handles[input].clone(),
            port: InputPort::X,
        }],
        output: handles[out].clone(),
        handles,
        edges,
        bias,
        constant: Some(k),
        levels: 1,
    })
}

/// `C_k(x) = k`: the input edge has weight 0.
pub fn build_constant(k: DyadicValue, p: PrecisionVector) -> Result<FunctionCircuit> {
    build_holder_circuit(FunctionKind::Constant, k, p, 0)
}

/// `S(x) = x + 1`: the holder carries `1` on the positive rail.
pub fn build_successor(p: PrecisionVector) -> Result<FunctionCircuit> {
    if p.pos_int == 0 {
        return Err(Error::argument(
            "successor needs at least one positive integer bit",
        ));
    }
    let one = DyadicValue::new(Dyadic::ONE, Dyadic::ZERO)?;
    build_holder_circuit(FunctionKind::Successor, one, p, 1)
}

/// `pred(x) = x - 1`: the holder carries `-1` on the negative rail, so the
/// result is the dual-rail pair `(x, -1)` (value `-1` at `x = 0`).
pub fn build_predecessor(p: PrecisionVector) -> Result<FunctionCircuit> {
    if p.neg_int == 0 {
        return Err(Error::argument(
            "predecessor needs at least one negative integer bit",
        ));
    }
    let minus_one = DyadicValue::new(Dyadic::ZERO, Dyadic::from_int(-1))?;
    build_holder_circuit(FunctionKind::Predecessor, minus_one, p, 1)
}

/// Multiply by -1 by swapping the rails; needs equal rail formats.
pub fn build_negate(p: PrecisionVector) -> Result<FunctionCircuit> {
    require_nonempty(&p)?;
    if !p.is_symmetric() {
        return Err(Error::argument(format!(
            "negate needs matching positive and negative formats, got {p}"
        )));
    }
    let mut g = CompositionGraph::new();
    let input = g.add_virtual_neuron("x", p, 0)?;
    let start = g.handle(input).ready_step + 1;
    let out = g.add_virtual_neuron("out", p.widened(), start)?;
    g.connect_weighted(
        input,
        out,
        InputPort::X,
        1,
        ConnectOptions {
            truncate: false,
            swap_rails: true,
        },
    )?;
    g.expose_input("x", input, InputPort::X)?;
    g.expose_output("z", out)?;
    let (network, handles, edges) = g.finish()?;
    Ok(FunctionCircuit {
        kind: FunctionKind::Negate,
        network,
        operands: vec![Operand {
            name: "x".into(),
            vn: handles[input].clone(),
            port: InputPort::X,
        }],
        output: handles[out].clone(),
        handles,
        edges,
        bias: Stimulus::new(),
        constant: None,
        levels: 1,
    })
}

/// Pairwise reduction of `n` inputs.
///
/// Every level widens the integer side by one bit. When a level has an odd
/// count its last element skips that level and is paired at the next one,
/// through a longer synaptic delay that keeps it aligned. The tree uses
/// `2n - 1` virtual neurons and `ceil(log2 n)` adder levels.
pub fn build_sum_tree(n: usize, p: PrecisionVector) -> Result<FunctionCircuit> {
    require_nonempty(&p)?;
    if n < 2 {
        return Err(Error::argument(format!("sum tree needs at least 2 inputs, got {n}")));
    }
    let mut g = CompositionGraph::new();
    let mut level: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let name = format!("x{i}");
        let leaf = g.add_virtual_neuron(name.clone(), p, 0)?;
        g.expose_input(&name, leaf, InputPort::X)?;
        level.push(leaf);
    }
    let leaves = level.clone();

    let mut precision = p;
    let mut levels = 0;
    while level.len() > 1 {
        precision = precision.widened();
        levels += 1;
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for (j, pair) in level.chunks(2).enumerate() {
            match *pair {
                [a, b] => {
                    let start = g.handle(a).ready_step.max(g.handle(b).ready_step) + 1;
                    let node = g.add_virtual_neuron(format!("s{levels}.{j}"), precision, start)?;
                    g.connect_weighted(a, node, InputPort::X, 1, ConnectOptions::default())?;
                    g.connect_weighted(b, node, InputPort::Y, 1, ConnectOptions::default())?;
                    next.push(node);
                }
                [single] => next.push(single),
                _ => unreachable!(),
            }
        }
        level = next;
    }
    let out = level[0];
    g.expose_output("z", out)?;
    let (network, handles, edges) = g.finish()?;
    let operands = leaves
        .iter()
        .enumerate()
        .map(|(i, &leaf)| Operand {
            name: format!("x{i}"),
            vn: handles[leaf].clone(),
            port: InputPort::X,
        })
        .collect();
    Ok(FunctionCircuit {
        kind: FunctionKind::SumTree,
        network,
        operands,
        output: handles[out].clone(),
        handles,
        edges,
        bias: Stimulus::new(),
        constant: None,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    fn v(s: &str) -> DyadicValue {
        s.parse().unwrap()
    }

    const NAT16: PrecisionVector = PrecisionVector::new(16, 0, 0, 0);

    #[test]
    fn constant_ignores_input() {
        let c = build_constant(v("7"), NAT16).unwrap();
        assert_eq!(c.evaluate(&[v("3")]).unwrap(), v("7"));
        assert_eq!(c.virtual_neuron_count(), 3);
        let c = build_constant(v("0"), NAT16).unwrap();
        assert_eq!(c.evaluate(&[v("65535")]).unwrap(), v("0"));
        let c = build_constant(v("5.25"), PrecisionVector::new(4, 4, 4, 4)).unwrap();
        assert_eq!(c.evaluate(&[v("-2.5")]).unwrap().value(), d("5.25"));
        assert!(build_constant(v("0.125"), PrecisionVector::new(4, 2, 0, 0)).is_err());
    }

    #[test]
    fn successor_examples() {
        let s = build_successor(NAT16).unwrap();
        assert_eq!(s.evaluate(&[v("3")]).unwrap().value(), d("4"));
        assert_eq!(s.evaluate(&[v("0")]).unwrap().value(), d("1"));
        assert_eq!(s.evaluate(&[v("65535")]).unwrap().value(), d("65536"));
        let s = build_successor(PrecisionVector::new(4, 4, 0, 0)).unwrap();
        assert_eq!(s.evaluate(&[v("2.5")]).unwrap().value(), d("3.5"));
        assert!(build_successor(PrecisionVector::new(0, 4, 0, 0)).is_err());
        assert!(s.evaluate(&[v("16")]).is_err());
    }

    #[test]
    fn predecessor_examples() {
        let p = build_predecessor(PrecisionVector::new(16, 0, 16, 0)).unwrap();
        let r = p.evaluate(&[v("5")]).unwrap();
        assert_eq!((r.pos(), r.neg(), r.value()), (d("5"), d("-1"), d("4")));
        let r = p.evaluate(&[v("1")]).unwrap();
        assert_eq!((r.pos(), r.neg(), r.value()), (d("1"), d("-1"), Dyadic::ZERO));
        assert_eq!(p.evaluate(&[v("0")]).unwrap().value(), d("-1"));
        assert!(build_predecessor(NAT16).is_err());
    }

    #[test]
    fn negate_examples() {
        let n = build_negate(PrecisionVector::new(4, 4, 4, 4)).unwrap();
        assert_eq!(n.evaluate(&[v("3.5,0")]).unwrap(), v("0,-3.5"));
        assert_eq!(n.evaluate(&[v("0,0")]).unwrap(), v("0,0"));
        let r = n.evaluate(&[v("2.25,-1")]).unwrap();
        assert_eq!(r, v("1,-2.25"));
        assert_eq!(r.value(), d("-1.25"));
        assert!(build_negate(PrecisionVector::new(4, 4, 4, 3)).is_err());
        assert_eq!(n.virtual_neuron_count(), 2);
    }

    #[test]
    fn sum_tree_shapes() {
        let t = build_sum_tree(2, NAT16).unwrap();
        assert_eq!((t.levels, t.virtual_neuron_count()), (1, 3));
        let t = build_sum_tree(3, NAT16).unwrap();
        assert_eq!((t.levels, t.virtual_neuron_count()), (2, 5));
        assert_eq!(t.evaluate(&[v("1"), v("2"), v("4")]).unwrap().value(), d("7"));
        let t = build_sum_tree(16, NAT16).unwrap();
        assert_eq!((t.levels, t.virtual_neuron_count()), (4, 31));
        assert!(build_sum_tree(1, NAT16).is_err());
        assert!(t.evaluate(&[v("1")]).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            FunctionKind::Constant,
            FunctionKind::Successor,
            FunctionKind::Predecessor,
            FunctionKind::Negate,
            FunctionKind::SumTree,
        ] {
            assert_eq!(k.to_string().parse::<FunctionKind>().unwrap(), k);
        }
    }
}
