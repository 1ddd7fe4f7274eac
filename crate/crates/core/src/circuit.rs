//! Virtual-neuron adder synthesis and composition.
//!
//! Each nonempty rail of `P` bits becomes a ripple-carry adder built from
//! integrate-and-fire neurons:
//!
//! * `P` X inputs and `P` Y inputs (threshold 0),
//! * `P + 1` bit groups, group 0 with thresholds `{0, 1}` and the others with
//!   `{0, 1, 2}`,
//! * `P + 1` outputs (threshold 0).
//!
//! Input bit `i` reaches group `i` with delay `i + 1`. The threshold-1 neuron
//! of group `i` is the carry and reaches every neuron of group `i + 1` with
//! delay 1. Group `i` drives output `i` with weights `+1, -1, +1` (by
//! threshold) and delay `max(P+, P-) - i + 1`, so every output fires at
//! `max(P+, P-) + 2` steps after injection. That gives `6P + 3` neurons and
//! `12P` synapses per rail.
//!
//! Neuron ids are allocated per rail (positive first) in the order: X inputs
//! MSB to LSB, Y inputs MSB to LSB, bit groups from the LSB group up with
//! neurons in threshold order, outputs MSB to LSB.

use std::collections::{BTreeMap, HashSet};

use crate::codec::{DyadicValue, PrecisionVector, Rail, RailFormat};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{
    Network, NeuronId, NeuronSpec, Port, PortDirection, Step, Stimulus, SynapseSpec,
};

/// Name of the input port whose neurons always receive one unit of charge.
pub const BIAS_PORT: &str = "bias";

const RESET_STATE: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputPort {
    X,
    Y,
}

/// Per-rail neuron lists, most significant bit first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RailPorts {
    pub pos: Vec<NeuronId>,
    pub neg: Vec<NeuronId>,
}

impl RailPorts {
    pub fn rail(&self, rail: Rail) -> &[NeuronId] {
        match rail {
            Rail::Pos => &self.pos,
            Rail::Neg => &self.neg,
        }
    }

    fn rail_mut(&mut self, rail: Rail) -> &mut Vec<NeuronId> {
        match rail {
            Rail::Pos => &mut self.pos,
            Rail::Neg => &mut self.neg,
        }
    }
}

/// Bit-neuron groups of each rail, least significant group first. Each group
/// lists its neurons in threshold order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BitGroups {
    pub pos: Vec<Vec<NeuronId>>,
    pub neg: Vec<Vec<NeuronId>>,
}

impl BitGroups {
    pub fn rail(&self, rail: Rail) -> &[Vec<NeuronId>] {
        match rail {
            Rail::Pos => &self.pos,
            Rail::Neg => &self.neg,
        }
    }
}

/// A compiled virtual neuron inside a network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualNeuronHandle {
    pub index: usize,
    pub label: String,
    pub precision: PrecisionVector,
    pub x: RailPorts,
    pub y: RailPorts,
    pub z: RailPorts,
    pub bit_groups: BitGroups,
    /// Step at which input spikes must arrive.
    pub inject_step: Step,
    /// Step at which every output neuron fires.
    pub ready_step: Step,
}

impl VirtualNeuronHandle {
    pub fn input(&self, port: InputPort) -> &RailPorts {
        match port {
            InputPort::X => &self.x,
            InputPort::Y => &self.y,
        }
    }

    pub fn output_format(&self, rail: Rail) -> RailFormat {
        self.precision.output_rail(rail)
    }

    pub fn output_formats(&self) -> [RailFormat; 2] {
        [self.output_format(Rail::Pos), self.output_format(Rail::Neg)]
    }
}

/// Options for wiring a producer's output into a consumer port.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConnectOptions {
    /// Drop producer bits above the consumer's integer width instead of failing.
    pub truncate: bool,
    /// Feed the producer's positive rail into the consumer's negative rail and
    /// vice versa.
    pub swap_rails: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionEdge {
    pub producer: usize,
    pub consumer: usize,
    pub port: InputPort,
    pub weight: u8,
    pub options: ConnectOptions,
    pub delay: Step,
}

/// A network under construction together with the virtual neurons placed in
/// it and the edges between them.
#[derive(Debug, Clone, Default)]
pub struct CompositionGraph {
    neurons: Vec<NeuronSpec>,
    synapses: Vec<SynapseSpec>,
    ports: BTreeMap<String, Port>,
    vns: Vec<VirtualNeuronHandle>,
    edges: Vec<CompositionEdge>,
    fed: HashSet<(usize, InputPort, Rail)>,
}

/// Port name for one rail of an operand, e.g. `x+:2` for a positive rail with
/// two fraction bits.
pub fn port_name(operand: &str, rail: Rail, frac_bits: u32) -> String {
    format!("{operand}{}:{frac_bits}", rail.symbol())
}

impl CompositionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn handles(&self) -> &[VirtualNeuronHandle] {
        &self.vns
    }

    pub fn handle(&self, index: usize) -> &VirtualNeuronHandle {
        &self.vns[index]
    }

    pub fn edges(&self) -> &[CompositionEdge] {
        &self.edges
    }

    fn add_neuron(&mut self, threshold: i64) -> NeuronId {
        let id = self.neurons.len();
        self.neurons.push(NeuronSpec {
            id,
            threshold,
            reset_state: RESET_STATE,
        });
        id
    }

    fn add_synapse(&mut self, pre: NeuronId, post: NeuronId, weight: i64, delay: Step) {
        self.synapses.push(SynapseSpec {
            pre,
            post,
            weight: Dyadic::from_int(weight),
            delay,
        });
    }

    /// Emits a virtual-neuron adder whose inputs arrive at `inject_step`.
    pub fn add_virtual_neuron(
        &mut self,
        label: impl Into<String>,
        precision: PrecisionVector,
        inject_step: Step,
    ) -> Result<usize> {
        if precision.is_empty() {
            return Err(Error::argument("precision has no bits on either rail"));
        }
        let span = precision.max_bits();
        let mut handle = VirtualNeuronHandle {
            index: self.vns.len(),
            label: label.into(),
            precision,
            x: RailPorts::default(),
            y: RailPorts::default(),
            z: RailPorts::default(),
            bit_groups: BitGroups::default(),
            inject_step,
            ready_step: inject_step + span + 2,
        };

        for rail in Rail::BOTH {
            let width = precision.rail(rail).width();
            if width == 0 {
                continue;
            }
            let xs: Vec<_> = (0..width).map(|_| self.add_neuron(0)).collect();
            let ys: Vec<_> = (0..width).map(|_| self.add_neuron(0)).collect();
            let groups: Vec<Vec<_>> = (0..=width)
                .map(|i| {
                    let size = if i == 0 { 2 } else { 3 };
                    (0..size).map(|t| self.add_neuron(t)).collect()
                })
                .collect();
            let zs: Vec<_> = (0..=width).map(|_| self.add_neuron(0)).collect();

            for i in 0..width {
                let bit = (width - 1 - i) as usize;
                for source in [xs[bit], ys[bit]] {
                    for &g in &groups[i as usize] {
                        self.add_synapse(source, g, 1, i + 1);
                    }
                }
            }
            for i in 0..width as usize {
                let carry = groups[i][1];
                for &g in &groups[i + 1] {
                    self.add_synapse(carry, g, 1, 1);
                }
            }
            for i in 0..=width {
                let out = zs[(width - i) as usize];
                for (t, &g) in groups[i as usize].iter().enumerate() {
                    let weight = if t == 1 { -1 } else { 1 };
                    self.add_synapse(g, out, weight, span - i + 1);
                }
            }

            *handle.x.rail_mut(rail) = xs;
            *handle.y.rail_mut(rail) = ys;
            *handle.z.rail_mut(rail) = zs;
            match rail {
                Rail::Pos => handle.bit_groups.pos = groups,
                Rail::Neg => handle.bit_groups.neg = groups,
            }
        }

        self.vns.push(handle);
        Ok(self.vns.len() - 1)
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.vns.len() {
            return Err(Error::composition(format!("no virtual neuron {index}")));
        }
        Ok(())
    }

    /// Feeds `a` into `c`'s X port and `b` into its Y port with unit weights.
    ///
    /// `c` must start exactly one step after both producers are ready.
    pub fn connect(&mut self, a: usize, b: usize, c: usize, truncate: bool) -> Result<()> {
        self.check_index(a)?;
        self.check_index(b)?;
        self.check_index(c)?;
        let start = self.vns[c].inject_step;
        for p in [a, b] {
            if self.vns[p].ready_step + 1 != start {
                return Err(Error::composition(format!(
                    "{} starts at step {start} but producer {} is ready at step {}",
                    self.vns[c].label, self.vns[p].label, self.vns[p].ready_step
                )));
            }
        }
        let options = ConnectOptions {
            truncate,
            swap_rails: false,
        };
        self.connect_weighted(a, c, InputPort::X, 1, options)?;
        self.connect_weighted(b, c, InputPort::Y, 1, options)
    }

    /// Bitwise synapses from `producer`'s output onto `consumer`'s `port`.
    ///
    /// Bits are aligned on the binary point. Weight 1 passes the value through;
    /// weight 0 keeps the synapses but delivers no charge. The delay is chosen
    /// so the bits arrive exactly at the consumer's inject step.
    pub fn connect_weighted(
        &mut self,
        producer: usize,
        consumer: usize,
        port: InputPort,
        weight: u8,
        options: ConnectOptions,
    ) -> Result<()> {
        self.check_index(producer)?;
        self.check_index(consumer)?;
        if weight > 1 {
            return Err(Error::composition(format!(
                "edge weight {weight} is not 0 or 1"
            )));
        }
        let (prod, cons) = (&self.vns[producer], &self.vns[consumer]);
        if producer == consumer || cons.inject_step <= prod.ready_step {
            return Err(Error::composition(format!(
                "{} (inject step {}) cannot consume {} (ready step {}): edge would run backwards in time",
                cons.label, cons.inject_step, prod.label, prod.ready_step
            )));
        }
        let delay = cons.inject_step - prod.ready_step;

        let mut planned = Vec::new();
        let mut fed = Vec::new();
        for rail in Rail::BOTH {
            let src = prod.output_format(rail);
            if src.is_empty() {
                continue;
            }
            let dst_rail = if options.swap_rails {
                rail.opposite()
            } else {
                rail
            };
            let dst = cons.precision.rail(dst_rail);
            if dst.frac_bits < src.frac_bits {
                return Err(Error::composition(format!(
                    "{}'s {dst_rail:?} rail has {} fraction bits, {} produces {}",
                    cons.label, dst.frac_bits, prod.label, src.frac_bits
                )));
            }
            if dst.int_bits < src.int_bits && !options.truncate {
                return Err(Error::composition(format!(
                    "{}'s {dst_rail:?} rail has {} integer bits, {} produces {} (set truncate to drop the carry)",
                    cons.label, dst.int_bits, prod.label, src.int_bits
                )));
            }
            if self.fed.contains(&(consumer, port, dst_rail)) {
                return Err(Error::composition(format!(
                    "{}'s {port:?} {dst_rail:?} rail is already fed",
                    cons.label
                )));
            }
            let sources = prod.z.rail(rail);
            let targets = cons.input(port).rail(dst_rail);
            for (j, &s) in sources.iter().enumerate() {
                // Bit weight exponent relative to the binary point.
                let exp = src.int_bits as i64 - 1 - j as i64;
                let t = dst.int_bits as i64 - 1 - exp;
                if t >= 0 {
                    planned.push((s, targets[t as usize]));
                }
            }
            fed.push((consumer, port, dst_rail));
        }

        for (s, t) in planned {
            self.add_synapse(s, t, weight as i64, delay);
        }
        self.fed.extend(fed);
        self.edges.push(CompositionEdge {
            producer,
            consumer,
            port,
            weight,
            options,
            delay,
        });
        Ok(())
    }

    fn check_external_input(&self, vn: usize, port: InputPort) -> Result<()> {
        self.check_index(vn)?;
        let h = &self.vns[vn];
        if h.inject_step != 0 {
            return Err(Error::composition(format!(
                "{} starts at step {}; external inputs arrive at step 0",
                h.label, h.inject_step
            )));
        }
        for rail in Rail::BOTH {
            if self.fed.contains(&(vn, port, rail)) {
                return Err(Error::composition(format!(
                    "{}'s {port:?} port is already fed",
                    h.label
                )));
            }
        }
        Ok(())
    }

    /// Publishes `vn`'s input `port` as network input ports named after `operand`.
    pub fn expose_input(&mut self, operand: &str, vn: usize, port: InputPort) -> Result<()> {
        self.check_external_input(vn, port)?;
        let h = &self.vns[vn];
        let mut new_ports = Vec::new();
        for rail in Rail::BOTH {
            let format = h.precision.rail(rail);
            if format.is_empty() {
                continue;
            }
            new_ports.push((
                port_name(operand, rail, format.frac_bits),
                h.input(port).rail(rail).to_vec(),
            ));
        }
        for (name, neurons) in new_ports {
            if self.ports.contains_key(&name) {
                return Err(Error::composition(format!("port {name} already exists")));
            }
            self.ports.insert(
                name,
                Port {
                    direction: PortDirection::In,
                    neurons,
                },
            );
        }
        for rail in Rail::BOTH {
            self.fed.insert((vn, port, rail));
        }
        Ok(())
    }

    /// Publishes `vn`'s output as network output ports named after `operand`.
    pub fn expose_output(&mut self, operand: &str, vn: usize) -> Result<()> {
        self.check_index(vn)?;
        let h = &self.vns[vn];
        let mut new_ports = Vec::new();
        for rail in Rail::BOTH {
            let format = h.output_format(rail);
            if format.is_empty() {
                continue;
            }
            new_ports.push((
                port_name(operand, rail, format.frac_bits),
                h.z.rail(rail).to_vec(),
            ));
        }
        for (name, neurons) in new_ports {
            if self.ports.contains_key(&name) {
                return Err(Error::composition(format!("port {name} already exists")));
            }
            self.ports.insert(
                name,
                Port {
                    direction: PortDirection::Out,
                    neurons,
                },
            );
        }
        Ok(())
    }

    /// Hard-wires `value` onto `vn`'s input `port`: the neurons of its set bits
    /// join the [`BIAS_PORT`], which receives one unit of charge every run.
    /// Returns the stimulus that realizes the bias.
    pub fn expose_bias(
        &mut self,
        vn: usize,
        port: InputPort,
        value: &DyadicValue,
    ) -> Result<Stimulus> {
        self.check_external_input(vn, port)?;
        let stim = crate::codec::stimulus_for(&self.vns[vn], port, value)?;
        let entry = self
            .ports
            .entry(BIAS_PORT.to_string())
            .or_insert_with(|| Port {
                direction: PortDirection::In,
                neurons: Vec::new(),
            });
        entry.neurons.extend(stim.injections.iter().map(|i| i.neuron));
        for rail in Rail::BOTH {
            self.fed.insert((vn, port, rail));
        }
        Ok(stim)
    }

    /// Freezes the netlist.
    pub fn finish(self) -> Result<(Network, Vec<VirtualNeuronHandle>, Vec<CompositionEdge>)> {
        let net = Network::new(self.neurons, self.synapses, self.ports)?;
        Ok((net, self.vns, self.edges))
    }
}

/// A standalone adder with input operands `x`, `y` and output operand `z`.
pub fn build_adder(p: PrecisionVector) -> Result<(Network, VirtualNeuronHandle)> {
    let mut g = CompositionGraph::new();
    let vn = g.add_virtual_neuron("adder", p, 0)?;
    g.expose_input("x", vn, InputPort::X)?;
    g.expose_input("y", vn, InputPort::Y)?;
    g.expose_output("z", vn)?;
    let (net, mut vns, _) = g.finish()?;
    Ok((net, vns.swap_remove(vn)))
}

/// `(neurons, synapses)`.
pub fn structural_counts(net: &Network) -> (usize, usize) {
    (net.neurons().len(), net.synapses().len())
}
