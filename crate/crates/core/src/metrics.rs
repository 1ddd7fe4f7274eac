//! Spike accounting, structural tables and energy estimates.
//!
//! Energy follows the usual neuromorphic ASIC model: a fixed cost per spike
//! event plus idle power for every neuron and synapse over the run. Spike
//! events are the network's own spikes plus one event per spike crossing the
//! host boundary (each input bit delivered, each output bit read back), which
//! is how an event-driven processor sees the traffic of a run.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{build_adder, structural_counts, InputPort};
use crate::codec::{encode_rail, stimulus_for, PrecisionVector, RailFormat};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{simulate, Network, NeuronId, SpikeTrace, Step};
use crate::verify::random_value;

/// Reference aggregate for the average 16-bit addition on a memristive
/// mixed-signal processor.
pub const REFERENCE_ENERGY_PER_ADDITION: f64 = 23e-9;
/// Reference mean spike count for the same workload.
pub const REFERENCE_SPIKES_PER_ADDITION: f64 = 73.0;
/// 20 MHz clock.
pub const DEFAULT_STEP_PERIOD: f64 = 50e-9;
/// One addition per 1 µs execution slot at 20 MHz.
pub const DEFAULT_EXECUTION_WINDOW: Step = 20;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpikeCounts {
    pub total: u64,
    pub per_neuron: BTreeMap<NeuronId, u64>,
}

pub fn count_spikes(trace: &SpikeTrace) -> SpikeCounts {
    let mut per_neuron = BTreeMap::new();
    for e in &trace.events {
        *per_neuron.entry(e.neuron).or_insert(0) += 1;
    }
    SpikeCounts {
        total: trace.events.len() as u64,
        per_neuron,
    }
}

/// Spikes of neurons that sit on a network port, i.e. that exchange a spike
/// with the host.
pub fn boundary_events(trace: &SpikeTrace, net: &Network) -> u64 {
    let boundary: HashSet<NeuronId> = net
        .ports()
        .values()
        .flat_map(|p| p.neurons.iter().copied())
        .collect();
    trace
        .events
        .iter()
        .filter(|e| boundary.contains(&e.neuron))
        .count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    /// Joules per spike event.
    pub e_spike: f64,
    /// Idle watts per neuron.
    pub p_idle_neuron: f64,
    /// Idle watts per synapse.
    pub p_idle_synapse: f64,
    /// Seconds per time step.
    pub step_period: f64,
}

impl EnergyModel {
    pub fn new(e_spike: f64, p_idle_neuron: f64, p_idle_synapse: f64, step_period: f64) -> Result<Self> {
        for (name, v) in [
            ("e_spike", e_spike),
            ("p_idle_neuron", p_idle_neuron),
            ("p_idle_synapse", p_idle_synapse),
            ("step_period", step_period),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::argument(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(EnergyModel {
            e_spike,
            p_idle_neuron,
            p_idle_synapse,
            step_period,
        })
    }
}

/// Spike energy calibrated so that the reference mean spike count costs the
/// reference energy; no idle power.
impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            e_spike: REFERENCE_ENERGY_PER_ADDITION / REFERENCE_SPIKES_PER_ADDITION,
            p_idle_neuron: 0.0,
            p_idle_synapse: 0.0,
            step_period: DEFAULT_STEP_PERIOD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub network_spikes: u64,
    pub boundary_events: u64,
    /// `network_spikes + boundary_events`; the count energy is charged on.
    pub total_spikes: u64,
    pub spikes_per_neuron: BTreeMap<NeuronId, u64>,
    pub steps: u64,
    pub energy_joules: f64,
    pub power_watts: f64,
}

impl RunMetrics {
    pub fn to_kv(&self) -> String {
        format!(
            "network_spikes={}\nboundary_events={}\ntotal_spikes={}\nactive_neurons={}\nsteps={}\nenergy_j={:.6e}\npower_w={:.6e}\n",
            self.network_spikes,
            self.boundary_events,
            self.total_spikes,
            self.spikes_per_neuron.len(),
            self.steps,
            self.energy_joules,
            self.power_watts
        )
    }
}

fn energy_for(total_spikes: f64, steps: u64, net: &Network, model: &EnergyModel) -> (f64, f64) {
    let (neurons, synapses) = structural_counts(net);
    let duration = steps as f64 * model.step_period;
    let idle = neurons as f64 * model.p_idle_neuron + synapses as f64 * model.p_idle_synapse;
    let energy = total_spikes * model.e_spike + duration * idle;
    let power = if duration > 0.0 { energy / duration } else { 0.0 };
    (energy, power)
}

/// Energy and power of one run; the run lasts `trace.horizon + 1` steps.
pub fn estimate_energy(trace: &SpikeTrace, net: &Network, model: &EnergyModel) -> RunMetrics {
    let counts = count_spikes(trace);
    let boundary = boundary_events(trace, net);
    let total = counts.total + boundary;
    let steps = trace.horizon as u64 + 1;
    let (energy_joules, power_watts) = energy_for(total as f64, steps, net, model);
    RunMetrics {
        network_spikes: counts.total,
        boundary_events: boundary,
        total_spikes: total,
        spikes_per_neuron: counts.per_neuron,
        steps,
        energy_joules,
        power_watts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityRow {
    pub precision: u32,
    pub neurons: usize,
    pub synapses: usize,
    pub steps: Step,
}

/// Measured sizes of positive-only adders for `P = 1, 2, 4, ... <= max_p`.
pub fn complexity_table(max_p: u32) -> Result<Vec<ComplexityRow>> {
    if max_p == 0 {
        return Err(Error::argument("max precision must be at least 1"));
    }
    let mut rows = Vec::new();
    let mut p = 1u32;
    while p <= max_p {
        let (net, vn) = build_adder(PrecisionVector::new(p, 0, 0, 0))?;
        let (neurons, synapses) = structural_counts(&net);
        rows.push(ComplexityRow {
            precision: p,
            neurons,
            synapses,
            steps: vn.ready_step - vn.inject_step,
        });
        match p.checked_mul(2) {
            Some(next) => p = next,
            None => break,
        }
    }
    Ok(rows)
}

pub fn format_complexity_table(rows: &[ComplexityRow]) -> String {
    let mut out = format!("{:>5}  {:>8}  {:>8}  {:>5}\n", "P+", "neurons", "synapses", "steps");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>5}  {:>8}  {:>8}  {:>5}",
            r.precision, r.neurons, r.synapses, r.steps
        );
    }
    out
}

pub fn complexity_kv(rows: &[ComplexityRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "p{p}.neurons={}\np{p}.synapses={}\np{p}.steps={}",
            r.neurons,
            r.synapses,
            r.steps,
            p = r.precision
        );
    }
    out
}

/// Averages over many random additions on one adder.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditionStats {
    pub precision: PrecisionVector,
    pub samples: u64,
    pub seed: u64,
    pub steps: u64,
    pub mean_network_spikes: f64,
    pub mean_boundary_events: f64,
    pub mean_total_spikes: f64,
    pub mean_energy_joules: f64,
    pub mean_power_watts: f64,
}

impl AdditionStats {
    pub fn to_kv(&self) -> String {
        format!(
            "precision={}\nsamples={}\nseed={}\nsteps={}\nmean_network_spikes={:.3}\nmean_boundary_events={:.3}\nmean_total_spikes={:.3}\nmean_energy_j={:.6e}\nmean_power_w={:.6e}\n",
            self.precision,
            self.samples,
            self.seed,
            self.steps,
            self.mean_network_spikes,
            self.mean_boundary_events,
            self.mean_total_spikes,
            self.mean_energy_joules,
            self.mean_power_watts
        )
    }
}

/// Runs `samples` seeded uniform additions, each over `window` steps (at
/// least long enough for the adder to finish), and averages their metrics.
pub fn average_addition(
    p: PrecisionVector,
    samples: u64,
    seed: u64,
    model: &EnergyModel,
    window: Step,
) -> Result<AdditionStats> {
    if samples == 0 {
        return Err(Error::argument("need at least one sample"));
    }
    let (net, vn) = build_adder(p)?;
    let horizon = vn.ready_step.max(window.saturating_sub(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<_> = (0..samples)
        .map(|_| (random_value(&mut rng, &p), random_value(&mut rng, &p)))
        .collect();
    let (network, boundary) = cases
        .into_par_iter()
        .map(|(x, y)| -> Result<(u64, u64)> {
            let mut stim = stimulus_for(&vn, InputPort::X, &x)?;
            stim.extend(stimulus_for(&vn, InputPort::Y, &y)?);
            let trace = simulate(&net, &stim, horizon as i64)?;
            Ok((trace.len() as u64, boundary_events(&trace, &net)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let n = samples as f64;
    let mean_total = (network + boundary) as f64 / n;
    let steps = horizon as u64 + 1;
    let (energy, power) = energy_for(mean_total, steps, &net, model);
    Ok(AdditionStats {
        precision: p,
        samples,
        seed,
        steps,
        mean_network_spikes: network as f64 / n,
        mean_boundary_events: boundary as f64 / n,
        mean_total_spikes: mean_total,
        mean_energy_joules: energy,
        mean_power_watts: power,
    })
}

/// Mean number of set bits (spikes) when encoding uniform random values of
/// one rail format.
pub fn mean_encoding_spikes(format: RailFormat, samples: u64, seed: u64) -> Result<f64> {
    use rand::Rng;
    if format.is_empty() || samples == 0 {
        return Err(Error::argument("need a nonempty format and at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ones = 0u64;
    for _ in 0..samples {
        let scaled = rng.gen_range(0..(1u128 << format.width()));
        let x = Dyadic::from_scaled(scaled as i128, format.frac_bits);
        ones += encode_rail(x, format.int_bits, format.frac_bits)?.count_ones() as u64;
    }
    Ok(ones as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::{SpikeEvent, Stimulus};

    #[test]
    fn empty_trace_counts_nothing() {
        let trace = SpikeTrace::new(vec![], 5).unwrap();
        assert_eq!(count_spikes(&trace).total, 0);
        let zero = EnergyModel::new(0.0, 0.0, 0.0, 50e-9).unwrap();
        let m = estimate_energy(&trace, &Network::empty(), &zero);
        assert_eq!(m.energy_joules, 0.0);
        assert_eq!(m.steps, 6);
    }

    #[test]
    fn two_bit_walk_through_counts() {
        let (net, vn) = build_adder(PrecisionVector::new(2, 0, 0, 0)).unwrap();
        let mut stim = Stimulus::new();
        for n in [0, 1, 3] {
            stim.inject(0, n, Dyadic::ONE);
        }
        let trace = simulate(&net, &stim, vn.ready_step as i64).unwrap();
        let counts = count_spikes(&trace);
        // 3 input, 2 + 2 + 1 bit-group, 1 output.
        assert_eq!(counts.total, 9);
        assert_eq!(counts.per_neuron.get(&12), Some(&1));
        // Boundary: the 3 input bits delivered and the 1 output bit read back.
        assert_eq!(boundary_events(&trace, &net), 4);
    }

    #[test]
    fn energy_is_linear_in_spike_energy() {
        let (net, _) = build_adder(PrecisionVector::new(2, 0, 0, 0)).unwrap();
        let trace = SpikeTrace::new(
            vec![SpikeEvent { step: 0, neuron: 0 }, SpikeEvent { step: 1, neuron: 4 }],
            4,
        )
        .unwrap();
        let a = EnergyModel::new(1e-9, 1e-6, 2e-6, 1e-7).unwrap();
        let b = EnergyModel { e_spike: 2e-9, ..a };
        let ma = estimate_energy(&trace, &net, &a);
        let mb = estimate_energy(&trace, &net, &b);
        let idle = 5.0 * 1e-7 * (15.0 * 1e-6 + 24.0 * 2e-6);
        let spike_a = ma.energy_joules - idle;
        let spike_b = mb.energy_joules - idle;
        assert!((spike_b - 2.0 * spike_a).abs() < 1e-18);
        assert!((ma.power_watts - ma.energy_joules / 5e-7).abs() < 1e-12);
    }

    #[test]
    fn model_rejects_negative_parameters() {
        assert!(EnergyModel::new(-1.0, 0.0, 0.0, 1.0).is_err());
        assert!(EnergyModel::new(1.0, 0.0, f64::NAN, 1.0).is_err());
        let d = EnergyModel::default();
        assert!((d.e_spike - 0.315e-9).abs() < 0.001e-9);
    }

    #[test]
    fn complexity_rows() {
        assert_eq!(
            complexity_table(1).unwrap(),
            vec![ComplexityRow {
                precision: 1,
                neurons: 9,
                synapses: 12,
                steps: 3
            }]
        );
        let rows = complexity_table(128).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert_eq!(r.neurons, 6 * r.precision as usize + 3);
            assert_eq!(r.synapses, 12 * r.precision as usize);
            assert_eq!(r.steps, r.precision + 2);
        }
        assert!(complexity_table(0).is_err());
        let text = format_complexity_table(&rows);
        assert!(text.contains("  128       771      1536    130"));
    }
}
