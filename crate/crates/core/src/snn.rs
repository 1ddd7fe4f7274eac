//! Discrete-time simulation of zero-leak integrate-and-fire networks.
//!
//! A neuron's state at step `t` is its reset state plus every charge arriving
//! at `t` (synaptic or injected). It spikes iff that state reaches its
//! threshold. Nothing carries over to the next step, whether or not it spiked.

use std::collections::{BTreeMap, HashSet};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};

pub type NeuronId = usize;
pub type Step = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronSpec {
    pub id: NeuronId,
    pub threshold: i64,
    pub reset_state: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynapseSpec {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: Dyadic,
    pub delay: Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortDirection {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub direction: PortDirection,
    /// Most significant bit first.
    pub neurons: Vec<NeuronId>,
}

/// An immutable, validated feed-forward netlist.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    neurons: Vec<NeuronSpec>,
    synapses: Vec<SynapseSpec>,
    ports: BTreeMap<String, Port>,
    fanout: Vec<Vec<usize>>,
}

impl Network {
    /// Validates and freezes a netlist.
    ///
    /// Neuron ids must be dense (`neurons[i].id == i`), every synapse must
    /// reference existing neurons with a delay of at least one step, the
    /// synapse graph must be acyclic and input ports must not share neurons.
    pub fn new(
        neurons: Vec<NeuronSpec>,
        synapses: Vec<SynapseSpec>,
        ports: BTreeMap<String, Port>,
    ) -> Result<Self> {
        for (i, n) in neurons.iter().enumerate() {
            if n.id != i {
                return Err(Error::structural(format!(
                    "neuron ids must be dense: found id {} at position {i}",
                    n.id
                )));
            }
        }
        let count = neurons.len();
        let mut fanout = vec![Vec::new(); count];
        for (k, s) in synapses.iter().enumerate() {
            if s.pre >= count || s.post >= count {
                return Err(Error::structural(format!(
                    "synapse {} -> {} references a missing neuron",
                    s.pre, s.post
                )));
            }
            if s.delay == 0 {
                return Err(Error::structural(format!(
                    "synapse {} -> {} has zero delay",
                    s.pre, s.post
                )));
            }
            fanout[s.pre].push(k);
        }
        let mut seen_inputs = HashSet::new();
        for (name, port) in &ports {
            for &n in &port.neurons {
                if n >= count {
                    return Err(Error::structural(format!(
                        "port {name} references missing neuron {n}"
                    )));
                }
                if port.direction == PortDirection::In && !seen_inputs.insert(n) {
                    return Err(Error::structural(format!(
                        "neuron {n} appears in more than one input port"
                    )));
                }
            }
        }
        let net = Network {
            neurons,
            synapses,
            ports,
            fanout,
        };
        if net.topological_order().is_none() {
            return Err(Error::structural("synapse graph contains a cycle"));
        }
        Ok(net)
    }

    pub fn empty() -> Self {
        Network {
            neurons: Vec::new(),
            synapses: Vec::new(),
            ports: BTreeMap::new(),
            fanout: Vec::new(),
        }
    }

    pub fn neurons(&self) -> &[NeuronSpec] {
        &self.neurons
    }

    pub fn synapses(&self) -> &[SynapseSpec] {
        &self.synapses
    }

    pub fn ports(&self) -> &BTreeMap<String, Port> {
        &self.ports
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.get(name)
    }

    /// Outgoing synapses of `neuron`.
    pub fn outgoing(&self, neuron: NeuronId) -> impl Iterator<Item = &SynapseSpec> {
        self.fanout[neuron].iter().map(move |&k| &self.synapses[k])
    }

    fn topological_order(&self) -> Option<Vec<NeuronId>> {
        let mut indegree = vec![0usize; self.neurons.len()];
        for s in &self.synapses {
            indegree[s.post] += 1;
        }
        let mut ready: Vec<NeuronId> = (0..self.neurons.len())
            .filter(|&n| indegree[n] == 0)
            .collect();
        let mut order = Vec::with_capacity(self.neurons.len());
        while let Some(n) = ready.pop() {
            order.push(n);
            for s in self.outgoing(n) {
                indegree[s.post] -= 1;
                if indegree[s.post] == 0 {
                    ready.push(s.post);
                }
            }
        }
        (order.len() == self.neurons.len()).then_some(order)
    }

    /// Longest delay-weighted path from any source neuron to each neuron.
    ///
    /// For a circuit whose inputs all arrive at step 0 this is the step at
    /// which each neuron's latest input can arrive.
    pub fn arrival_steps(&self) -> Vec<Step> {
        let order = self
            .topological_order()
            .expect("validated networks are acyclic");
        let mut arrival = vec![0 as Step; self.neurons.len()];
        for n in order {
            for s in self.outgoing(n) {
                arrival[s.post] = arrival[s.post].max(arrival[n] + s.delay);
            }
        }
        arrival
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    pub step: Step,
    pub neuron: NeuronId,
    pub charge: Dyadic,
}

/// External charge delivered to neurons at given steps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stimulus {
    pub injections: Vec<Injection>,
}

impl Stimulus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn inject(&mut self, step: Step, neuron: NeuronId, charge: Dyadic) {
        self.injections.push(Injection {
            step,
            neuron,
            charge,
        });
    }

    pub fn extend(&mut self, other: Stimulus) {
        self.injections.extend(other.injections);
    }

    pub fn len(&self) -> usize {
        self.injections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }

    pub fn max_step(&self) -> Option<Step> {
        self.injections.iter().map(|i| i.step).max()
    }

    /// The same stimulus delayed by `k` steps.
    pub fn shifted(&self, k: Step) -> Stimulus {
        Stimulus {
            injections: self
                .injections
                .iter()
                .map(|i| Injection {
                    step: i.step + k,
                    ..*i
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub step: Step,
    pub neuron: NeuronId,
}

/// Every spike of one run, sorted by `(step, neuron)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrace {
    pub events: Vec<SpikeEvent>,
    pub horizon: Step,
}

impl SpikeTrace {
    pub fn new(mut events: Vec<SpikeEvent>, horizon: Step) -> Result<Self> {
        events.sort_unstable();
        events.dedup();
        if let Some(last) = events.last() {
            if last.step > horizon {
                return Err(Error::argument(format!(
                    "spike at step {} lies beyond horizon {horizon}",
                    last.step
                )));
            }
        }
        Ok(SpikeTrace { events, horizon })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn spikes_at(&self, step: Step) -> impl Iterator<Item = NeuronId> + '_ {
        let start = self.events.partition_point(|e| e.step < step);
        self.events[start..]
            .iter()
            .take_while(move |e| e.step == step)
            .map(|e| e.neuron)
    }

    pub fn spiked(&self, step: Step, neuron: NeuronId) -> bool {
        self.events
            .binary_search(&SpikeEvent { step, neuron })
            .is_ok()
    }
}

/// Runs `net` from step 0 through `horizon` inclusive.
pub fn simulate(net: &Network, stim: &Stimulus, horizon: i64) -> Result<SpikeTrace> {
    if horizon < 0 {
        return Err(Error::argument(format!("negative horizon {horizon}")));
    }
    let horizon = Step::try_from(horizon)
        .map_err(|_| Error::argument(format!("horizon {horizon} too large")))?;
    let count = net.neurons.len();

    // Pending charge, bucketed by arrival step.
    let mut pending: Vec<Vec<(NeuronId, Dyadic)>> = vec![Vec::new(); horizon as usize + 1];
    for inj in &stim.injections {
        if inj.neuron >= count {
            return Err(Error::structural(format!(
                "stimulus targets missing neuron {}",
                inj.neuron
            )));
        }
        if inj.step > horizon {
            return Err(Error::argument(format!(
                "injection at step {} lies beyond horizon {horizon}",
                inj.step
            )));
        }
        pending[inj.step as usize].push((inj.neuron, inj.charge));
    }

    // Neurons whose resting state already reaches threshold fire every step.
    let spontaneous: Vec<NeuronId> = net
        .neurons
        .iter()
        .filter(|n| n.reset_state >= n.threshold)
        .map(|n| n.id)
        .collect();

    let mut charge = vec![Dyadic::ZERO; count];
    let mut touched_mark = vec![false; count];
    let mut touched: Vec<NeuronId> = Vec::new();
    let mut fired: Vec<NeuronId> = Vec::new();
    let mut events = Vec::new();

    for t in 0..=horizon {
        for (n, c) in std::mem::take(&mut pending[t as usize]) {
            if !touched_mark[n] {
                touched_mark[n] = true;
                touched.push(n);
            }
            charge[n] = charge[n] + c;
        }

        fired.clear();
        for &n in touched.iter().chain(spontaneous.iter()) {
            let spec = &net.neurons[n];
            let state = Dyadic::from_int(spec.reset_state) + charge[n];
            if state >= Dyadic::from_int(spec.threshold) {
                fired.push(n);
            }
        }
        fired.sort_unstable();
        fired.dedup();

        for &n in &fired {
            events.push(SpikeEvent { step: t, neuron: n });
            for s in net.outgoing(n) {
                let arrival = t as u64 + s.delay as u64;
                if arrival <= horizon as u64 {
                    pending[arrival as usize].push((s.post, s.weight));
                }
            }
        }

        for n in touched.drain(..) {
            touched_mark[n] = false;
            charge[n] = Dyadic::ZERO;
        }
    }

    Ok(SpikeTrace { events, horizon })
}

/// Reference truth table of one bit-neuron group whose inputs sum to `s`:
/// `(s mod 2, s >= 2)`.
pub fn bit_group_response(s: u8) -> Result<(u8, u8)> {
    if s > 3 {
        return Err(Error::argument(format!(
            "bit group input sum {s} outside 0..=3"
        )));
    }
    Ok((s % 2, u8::from(s >= 2)))
}
