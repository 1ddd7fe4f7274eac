//! Line-oriented netlist and spike-trace files.
//!
//! ```text
//! VN-NETLIST 1
//! NEURON <id> <threshold> <reset> 0
//! SYNAPSE <pre> <post> <m>*2^<e> <delay>
//! PORT <IN|OUT> <name> <id> <id> ...
//! ```
//!
//! The trailing `0` of a `NEURON` line is a reserved leak column. Port neuron
//! lists are most significant bit first. Operand ports are named
//! `<operand><+|->:<fraction bits>`; the `bias` input port lists neurons that
//! receive one unit of charge on every run. `#` starts a comment.
//!
//! Traces are a `HORIZON <step>` line followed by `SPIKE <step> <neuron>`
//! lines sorted by step, then neuron.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::circuit::{RailPorts, BIAS_PORT};
use crate::codec::{decode_port, encode_rail, DyadicValue, Rail, RailFormat};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{
    simulate, Network, NeuronId, NeuronSpec, Port, PortDirection, SpikeEvent, SpikeTrace, Step,
    Stimulus, SynapseSpec,
};

pub const NETLIST_HEADER: &str = "VN-NETLIST 1";

pub fn emit_netlist(net: &Network) -> String {
    let mut out = String::new();
    out.push_str(NETLIST_HEADER);
    out.push('\n');
    for n in net.neurons() {
        let _ = writeln!(out, "NEURON {} {} {} 0", n.id, n.threshold, n.reset_state);
    }
    for s in net.synapses() {
        let _ = writeln!(
            out,
            "SYNAPSE {} {} {} {}",
            s.pre,
            s.post,
            s.weight.to_pow2_string(),
            s.delay
        );
    }
    for direction in [PortDirection::In, PortDirection::Out] {
        for (name, port) in net.ports().iter().filter(|(_, p)| p.direction == direction) {
            let dir = match direction {
                PortDirection::In => "IN",
                PortDirection::Out => "OUT",
            };
            let _ = write!(out, "PORT {dir} {name}");
            for id in &port.neurons {
                let _ = write!(out, " {id}");
            }
            out.push('\n');
        }
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let body = line.split('#').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        (!fields.is_empty()).then_some((i + 1, fields))
    })
}

fn field<T: std::str::FromStr>(fields: &[&str], k: usize, line: usize, what: &str) -> Result<T> {
    fields
        .get(k)
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Format {
            line,
            message: format!("expected {what} in field {}", k + 1),
        })
}

pub fn parse_netlist(text: &str) -> Result<Network> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, f)) if f.join(" ") == NETLIST_HEADER => {}
        Some((line, _)) => {
            return Err(Error::Format {
                line,
                message: format!("expected header {NETLIST_HEADER:?}"),
            })
        }
        None => {
            return Err(Error::Format {
                line: 1,
                message: "empty netlist".into(),
            })
        }
    }
    let mut neurons = Vec::new();
    let mut synapses = Vec::new();
    let mut ports = BTreeMap::new();
    for (line, f) in lines {
        let arity_error = |n: usize| Error::Format {
            line,
            message: format!("{} takes {n} fields", f[0]),
        };
        match f[0] {
            "NEURON" => {
                if f.len() != 5 {
                    return Err(arity_error(5));
                }
                let leak: i64 = field(&f, 4, line, "leak")?;
                if leak != 0 {
                    return Err(Error::Format {
                        line,
                        message: "only zero leak is supported".into(),
                    });
                }
                neurons.push(NeuronSpec {
                    id: field(&f, 1, line, "neuron id")?,
                    threshold: field(&f, 2, line, "threshold")?,
                    reset_state: field(&f, 3, line, "reset state")?,
                });
            }
            "SYNAPSE" => {
                if f.len() != 5 {
                    return Err(arity_error(5));
                }
                let weight = Dyadic::parse_pow2(f[3]).map_err(|e| Error::Format {
                    line,
                    message: e.to_string(),
                })?;
                synapses.push(SynapseSpec {
                    pre: field(&f, 1, line, "pre id")?,
                    post: field(&f, 2, line, "post id")?,
                    weight,
                    delay: field(&f, 4, line, "delay")?,
                });
            }
            "PORT" => {
                if f.len() < 3 {
                    return Err(arity_error(3));
                }
                let direction = match f[1] {
                    "IN" => PortDirection::In,
                    "OUT" => PortDirection::Out,
                    other => {
                        return Err(Error::Format {
                            line,
                            message: format!("port direction {other:?} is not IN or OUT"),
                        })
                    }
                };
                let ids = (3..f.len())
                    .map(|k| field(&f, k, line, "neuron id"))
                    .collect::<Result<Vec<NeuronId>>>()?;
                if ports
                    .insert(
                        f[2].to_string(),
                        Port {
                            direction,
                            neurons: ids,
                        },
                    )
                    .is_some()
                {
                    return Err(Error::Format {
                        line,
                        message: format!("duplicate port {}", f[2]),
                    });
                }
            }
            other => {
                return Err(Error::Format {
                    line,
                    message: format!("unknown record {other:?}"),
                })
            }
        }
    }
    Network::new(neurons, synapses, ports)
}

pub fn emit_trace(trace: &SpikeTrace) -> String {
    let mut out = format!("HORIZON {}\n", trace.horizon);
    for e in &trace.events {
        let _ = writeln!(out, "SPIKE {} {}", e.step, e.neuron);
    }
    out
}

pub fn parse_trace(text: &str) -> Result<SpikeTrace> {
    let mut horizon: Option<Step> = None;
    let mut events = Vec::new();
    for (line, f) in content_lines(text) {
        match (f[0], f.len()) {
            ("HORIZON", 2) => horizon = Some(field(&f, 1, line, "horizon")?),
            ("SPIKE", 3) => events.push(SpikeEvent {
                step: field(&f, 1, line, "step")?,
                neuron: field(&f, 2, line, "neuron id")?,
            }),
            _ => {
                return Err(Error::Format {
                    line,
                    message: format!("unexpected record {:?}", f.join(" ")),
                })
            }
        }
    }
    let horizon = horizon.unwrap_or_else(|| events.iter().map(|e| e.step).max().unwrap_or(0));
    SpikeTrace::new(events, horizon)
}

/// One rail of a named operand port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RailPort {
    pub neurons: Vec<NeuronId>,
    pub format: RailFormat,
}

/// Both rails of an operand, as recovered from port names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OperandPorts {
    pub pos: Option<RailPort>,
    pub neg: Option<RailPort>,
}

impl OperandPorts {
    pub fn rail(&self, rail: Rail) -> Option<&RailPort> {
        match rail {
            Rail::Pos => self.pos.as_ref(),
            Rail::Neg => self.neg.as_ref(),
        }
    }
}

/// Splits `x+:2` into `("x", Pos, 2)`.
pub fn parse_port_name(name: &str) -> Option<(String, Rail, u32)> {
    let (head, frac) = name.rsplit_once(':')?;
    let frac: u32 = frac.parse().ok()?;
    let rail = match head.chars().last()? {
        '+' => Rail::Pos,
        '-' => Rail::Neg,
        _ => return None,
    };
    let operand = &head[..head.len() - 1];
    (!operand.is_empty()).then(|| (operand.to_string(), rail, frac))
}

/// A parsed netlist viewed through its operand ports.
#[derive(Debug, Clone)]
pub struct NetlistProgram {
    pub network: Network,
    pub inputs: BTreeMap<String, OperandPorts>,
    pub outputs: BTreeMap<String, OperandPorts>,
    pub bias: Vec<NeuronId>,
    /// Step at which every output neuron's inputs arrive.
    pub ready_step: Step,
}

impl NetlistProgram {
    pub fn new(network: Network) -> Result<Self> {
        let mut inputs: BTreeMap<String, OperandPorts> = BTreeMap::new();
        let mut outputs: BTreeMap<String, OperandPorts> = BTreeMap::new();
        let mut bias = Vec::new();
        for (name, port) in network.ports() {
            if name == BIAS_PORT && port.direction == PortDirection::In {
                bias = port.neurons.clone();
                continue;
            }
            let (operand, rail, frac) = parse_port_name(name).ok_or_else(|| {
                Error::structural(format!(
                    "port name {name:?} is not of the form <operand><+|->:<fraction bits>"
                ))
            })?;
            let width = port.neurons.len() as u32;
            if frac > width {
                return Err(Error::structural(format!(
                    "port {name} has {width} neurons but {frac} fraction bits"
                )));
            }
            let rp = RailPort {
                neurons: port.neurons.clone(),
                format: RailFormat::new(width - frac, frac),
            };
            let map = match port.direction {
                PortDirection::In => &mut inputs,
                PortDirection::Out => &mut outputs,
            };
            let entry = map.entry(operand).or_default();
            match rail {
                Rail::Pos => entry.pos = Some(rp),
                Rail::Neg => entry.neg = Some(rp),
            }
        }

        let arrival = network.arrival_steps();
        let mut ready: Option<Step> = None;
        for ports in outputs.values() {
            for rp in [&ports.pos, &ports.neg].into_iter().flatten() {
                for &n in &rp.neurons {
                    match ready {
                        None => ready = Some(arrival[n]),
                        Some(r) if r != arrival[n] => {
                            return Err(Error::structural(format!(
                                "output neuron {n} settles at step {} but others at step {r}",
                                arrival[n]
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(NetlistProgram {
            network,
            inputs,
            outputs,
            bias,
            ready_step: ready.unwrap_or(0),
        })
    }

    /// Step-0 stimulus for the given operand values plus the bias.
    pub fn stimulus(&self, values: &BTreeMap<String, DyadicValue>) -> Result<Stimulus> {
        for name in values.keys() {
            if !self.inputs.contains_key(name) {
                return Err(Error::argument(format!("netlist has no input operand {name:?}")));
            }
        }
        let mut stim = Stimulus::new();
        for &n in &self.bias {
            stim.inject(0, n, Dyadic::ONE);
        }
        for (name, ports) in &self.inputs {
            let Some(v) = values.get(name) else { continue };
            for rail in Rail::BOTH {
                let magnitude = v.magnitude(rail);
                let Some(rp) = ports.rail(rail) else {
                    if !magnitude.is_zero() {
                        return Err(Error::NotRepresentable {
                            value: format!("{name} {rail:?} rail {}", v.rail(rail)),
                            int_bits: 0,
                            frac_bits: 0,
                        });
                    }
                    continue;
                };
                let bits = encode_rail(magnitude, rp.format.int_bits, rp.format.frac_bits)
                    .map_err(|_| Error::NotRepresentable {
                        value: format!("{name} {rail:?} rail {}", v.rail(rail)),
                        int_bits: rp.format.int_bits,
                        frac_bits: rp.format.frac_bits,
                    })?;
                for (&bit, &n) in bits.bits.iter().zip(&rp.neurons) {
                    if bit {
                        stim.inject(0, n, Dyadic::ONE);
                    }
                }
            }
        }
        Ok(stim)
    }

    pub fn decode(&self, operand: &str, trace: &SpikeTrace) -> Result<DyadicValue> {
        let ports = self
            .outputs
            .get(operand)
            .ok_or_else(|| Error::argument(format!("netlist has no output operand {operand:?}")))?;
        let rails = RailPorts {
            pos: ports.pos.as_ref().map(|p| p.neurons.clone()).unwrap_or_default(),
            neg: ports.neg.as_ref().map(|p| p.neurons.clone()).unwrap_or_default(),
        };
        let formats = [
            ports.pos.as_ref().map(|p| p.format).unwrap_or_default(),
            ports.neg.as_ref().map(|p| p.format).unwrap_or_default(),
        ];
        decode_port(&rails, formats, self.ready_step, trace)
    }

    /// Simulates through the ready step and decodes every output operand.
    pub fn run(
        &self,
        values: &BTreeMap<String, DyadicValue>,
    ) -> Result<(BTreeMap<String, DyadicValue>, SpikeTrace)> {
        let stim = self.stimulus(values)?;
        let trace = simulate(&self.network, &stim, self.ready_step as i64)?;
        let decoded = self
            .outputs
            .keys()
            .map(|name| Ok((name.clone(), self.decode(name, &trace)?)))
            .collect::<Result<_>>()?;
        Ok((decoded, trace))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::build_adder;
    use crate::codec::PrecisionVector;

    #[test]
    fn adder_netlist_shape() {
        let (net, _) = build_adder(PrecisionVector::new(1, 0, 0, 0)).unwrap();
        let text = emit_netlist(&net);
        assert!(text.starts_with("VN-NETLIST 1\nNEURON 0 0 -1 0\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("NEURON ")).count(), 9);
        assert_eq!(text.lines().filter(|l| l.starts_with("SYNAPSE ")).count(), 12);
        assert!(text.contains("SYNAPSE 3 4 1*2^0 1\n"));
        assert!(text.contains("-1*2^0"));
        assert!(text.contains("PORT IN x+:0 0\n"));
        assert!(text.contains("PORT OUT z+:0 7 8\n"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(parse_netlist("").is_err());
        assert!(parse_netlist("VN-NETLIST 2\n").is_err());
        assert!(parse_netlist("VN-NETLIST 1\nNEURON 0 0 -1 5\n").is_err());
        assert!(parse_netlist("VN-NETLIST 1\nNEURON 0 0 -1\n").is_err());
        assert!(parse_netlist("VN-NETLIST 1\nNEURON 0 0 -1 0\nSYNAPSE 0 0 1.0 1\n").is_err());
        assert!(parse_netlist("VN-NETLIST 1\nNEURON 0 0 -1 0\nWIRE 0\n").is_err());
        assert!(matches!(
            parse_netlist("VN-NETLIST 1\nNEURON 0 0 -1 0\nSYNAPSE 0 1 1*2^0 1\n"),
            Err(Error::Structural(_))
        ));
        let ok = parse_netlist("# comment\nVN-NETLIST 1\n\nNEURON 0 0 -1 0 # trailing\n").unwrap();
        assert_eq!(ok.neurons().len(), 1);
    }

    #[test]
    fn trace_round_trip() {
        let trace = SpikeTrace::new(
            vec![
                SpikeEvent { step: 1, neuron: 4 },
                SpikeEvent { step: 0, neuron: 2 },
            ],
            6,
        )
        .unwrap();
        let text = emit_trace(&trace);
        assert_eq!(text, "HORIZON 6\nSPIKE 0 2\nSPIKE 1 4\n");
        assert_eq!(parse_trace(&text).unwrap(), trace);
        assert!(parse_trace("SPIKE 1\n").is_err());
    }

    #[test]
    fn port_names() {
        assert_eq!(parse_port_name("x+:2"), Some(("x".into(), Rail::Pos, 2)));
        assert_eq!(parse_port_name("x12-:0"), Some(("x12".into(), Rail::Neg, 0)));
        assert_eq!(parse_port_name("bias"), None);
        assert_eq!(parse_port_name("+:1"), None);
    }

    #[test]
    fn program_runs_an_adder() {
        let (net, vn) = build_adder(PrecisionVector::new(2, 2, 2, 2)).unwrap();
        let prog = NetlistProgram::new(parse_netlist(&emit_netlist(&net)).unwrap()).unwrap();
        assert_eq!(prog.ready_step, vn.ready_step);
        let mut inputs = BTreeMap::new();
        inputs.insert("x".to_string(), "0.75,-2.75".parse().unwrap());
        inputs.insert("y".to_string(), "1.0,-2.5".parse().unwrap());
        let (out, _) = prog.run(&inputs).unwrap();
        assert_eq!(out["z"].to_string(), "1.75,-5.25");

        inputs.insert("w".to_string(), DyadicValue::ZERO);
        assert!(prog.run(&inputs).is_err());
        inputs.remove("w");
        inputs.insert("x".to_string(), "4,0".parse().unwrap());
        assert!(matches!(prog.run(&inputs), Err(Error::NotRepresentable { .. })));
    }
}
