//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vneuron::circuit::{build_adder, InputPort, VirtualNeuronHandle};
use vneuron::codec::{encode_value, stimulus_for, DyadicValue, PrecisionVector, Rail, RailFormat};
use vneuron::metrics::{
    average_addition, complexity_table, mean_encoding_spikes, EnergyModel, DEFAULT_EXECUTION_WINDOW,
};
use vneuron::mu::{build_constant, build_negate, build_predecessor, build_successor, build_sum_tree};
use vneuron::snn::{bit_group_response, simulate, Network, NeuronSpec, Stimulus, SynapseSpec};
use vneuron::verify::{random_value, verify_bits, VerifyMode};
use vneuron::Dyadic;

const EXHAUSTIVE_TIME_LIMIT: Duration = Duration::from_secs(120);
const RANDOMIZED_TIME_LIMIT: Duration = Duration::from_secs(600);
const RANDOMIZED_SAMPLES: u64 = 100_000;
const SPIKE_TARGET: f64 = 73.0;
const SPIKE_TOLERANCE: f64 = 0.20;
const SPIKE_SAMPLES: u64 = 1_000;
const SET_BIT_TOLERANCE: f64 = 0.05;
const SET_BIT_SAMPLES: u64 = 10_000;
const ENERGY_TARGET_J: f64 = 23e-9;
const ENERGY_TOLERANCE_J: f64 = 1e-9;
const POWER_TARGET_W: f64 = 23e-3;
const POWER_TOLERANCE_W: f64 = 1e-3;
const ENERGY_SAMPLES: u64 = 10_000;
const FUNCTION_CASES: usize = 1_000;
const SEED: u64 = 20_221_110;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v(s: &str) -> DyadicValue {
    s.parse().unwrap()
}

fn d(s: &str) -> Dyadic {
    s.parse().unwrap()
}

fn exhaustive_8bit() -> Outcome {
    let report = verify_bits(8, VerifyMode::Exhaustive, 0).map_err(|e| e.to_string())?;
    ensure(report.cases == 65_536, || format!("{} cases", report.cases))?;
    ensure(report.passed(), || format!("{} failures", report.failures.len()))?;
    ensure(report.elapsed < EXHAUSTIVE_TIME_LIMIT, || {
        format!("took {:?}", report.elapsed)
    })?;
    Ok(format!("65536 cases, 0 failures, {:.2?}", report.elapsed))
}

/// One reference row: decimals and (where given) MSB-first magnitudes.
struct Row {
    x: [&'static str; 2],
    y: [&'static str; 2],
    z: [&'static str; 2],
    bits: Option<[&'static str; 6]>,
}

const fn row(x: [&'static str; 2], y: [&'static str; 2], z: [&'static str; 2], bits: Option<[&'static str; 6]>) -> Row {
    Row { x, y, z, bits }
}

fn table_rows() -> Vec<(PrecisionVector, Vec<Row>)> {
    vec![
        (
            PrecisionVector::new(2, 2, 2, 2),
            vec![
                row(["0.75", "-2.75"], ["1.0", "-2.5"], ["1.75", "-5.25"], Some(["0011", "1011", "0100", "1010", "00111", "10101"])),
                row(["2.5", "-3.75"], ["1.75", "-0.25"], ["4.25", "-4.0"], Some(["1010", "1111", "0111", "0001", "10001", "10000"])),
                row(["0.25", "-2.75"], ["2.75", "0.0"], ["3.0", "-2.75"], Some(["0001", "1011", "1011", "0000", "01100", "01011"])),
                row(["3.5", "-2.5"], ["3.5", "-0.25"], ["7.0", "-2.75"], Some(["1110", "1010", "1110", "0001", "11100", "01011"])),
                row(["3.0", "0.0"], ["3.25", "-1.0"], ["6.25", "-1.0"], Some(["1100", "0000", "1101", "0100", "11001", "00100"])),
            ],
        ),
        (
            PrecisionVector::new(4, 4, 4, 4),
            vec![
                row(["2.5625", "-11.375"], ["13.3125", "-6.75"], ["15.875", "-18.125"], Some(["00101001", "10110110", "11010101", "01101100", "011111110", "100100010"])),
                row(["2.3125", "-13.9375"], ["11.375", "-9.3125"], ["13.6875", "-23.25"], Some(["00100101", "11011111", "10110110", "10010101", "011011011", "101110100"])),
                row(["15.875", "-2.9375"], ["1.5625", "-4.6875"], ["17.4375", "-7.625"], Some(["11111110", "00101111", "00011001", "01001011", "100010111", "001111010"])),
                row(["8.625", "-10.1875"], ["8.9375", "-1.625"], ["17.5625", "-11.8125"], Some(["10001010", "10100011", "10001111", "00011010", "100011001", "010111101"])),
                row(["14.6875", "-10.625"], ["11.625", "-11.875"], ["26.3125", "-22.5"], Some(["11101011", "10101010", "10111010", "10111110", "110100101", "101101000"])),
            ],
        ),
        (
            PrecisionVector::new(8, 8, 8, 8),
            vec![
                row(["212.56640625", "-203.421875"], ["218.7265625", "-98.91796875"], ["431.29296875", "-302.33984375"], None),
                row(["1.375", "-4.36328125"], ["184.94921875", "-92.73046875"], ["186.32421875", "-97.09375"], None),
                row(["254.3359375", "-134.390625"], ["48.87109375", "-211.43359375"], ["303.20703125", "-345.82421875"], None),
                row(["44.203125", "-231.0703125"], ["177.1171875", "-207.06640625"], ["221.3203125", "-438.13671875"], None),
                row(["143.6171875", "-8.1171875"], ["214.41796875", "-224.01953125"], ["358.03515625", "-232.13671875"], None),
            ],
        ),
    ]
}

fn spike_bits(vn: &VirtualNeuronHandle, trace: &vneuron::SpikeTrace, rail: Rail) -> String {
    vn.z.rail(rail)
        .iter()
        .map(|&n| if trace.spiked(vn.ready_step, n) { '1' } else { '0' })
        .collect()
}

fn reference_rows() -> Outcome {
    let mut checked = 0;
    for (p, rows) in table_rows() {
        let (net, vn) = build_adder(p).map_err(|e| e.to_string())?;
        for r in rows {
            let x = DyadicValue::new(d(r.x[0]), d(r.x[1])).map_err(|e| e.to_string())?;
            let y = DyadicValue::new(d(r.y[0]), d(r.y[1])).map_err(|e| e.to_string())?;
            let mut stim = stimulus_for(&vn, InputPort::X, &x).map_err(|e| e.to_string())?;
            stim.extend(stimulus_for(&vn, InputPort::Y, &y).map_err(|e| e.to_string())?);
            let trace = simulate(&net, &stim, vn.ready_step as i64).map_err(|e| e.to_string())?;
            let z = vneuron::codec::decode_output(&vn, &trace).map_err(|e| e.to_string())?;
            ensure(z.pos() == d(r.z[0]) && z.neg() == d(r.z[1]), || {
                format!("{p}: {x} + {y} gave {z}, expected {},{}", r.z[0], r.z[1])
            })?;
            if let Some(bits) = r.bits {
                let (xp, xn) = encode_value(&x, &p).map_err(|e| e.to_string())?;
                let (yp, yn) = encode_value(&y, &p).map_err(|e| e.to_string())?;
                let inputs = [xp.to_string(), xn.to_string(), yp.to_string(), yn.to_string()];
                let outputs = [spike_bits(&vn, &trace, Rail::Pos), spike_bits(&vn, &trace, Rail::Neg)];
                let got: Vec<&str> = inputs.iter().chain(&outputs).map(|s| s.as_str()).collect();
                ensure(got == bits, || format!("{p}: bits {got:?}, expected {bits:?}"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} rows across 8/16/32-bit tables, values and bit strings exact"))
}

fn complexity() -> Outcome {
    let reference = [
        (1, 9, 12, 3),
        (2, 15, 24, 4),
        (4, 27, 48, 6),
        (8, 51, 96, 10),
        (16, 99, 192, 18),
        (32, 195, 384, 34),
        (64, 387, 768, 66),
        (128, 771, 1536, 130),
    ];
    let rows = complexity_table(128).map_err(|e| e.to_string())?;
    let measured: Vec<_> = rows
        .iter()
        .map(|r| (r.precision, r.neurons, r.synapses, r.steps))
        .collect();
    ensure(measured == reference, || format!("measured {measured:?}"))?;
    for &(p, n, s, t) in &reference {
        ensure(
            n == 6 * p as usize + 3 && s == 12 * p as usize && t == p + 2,
            || format!("formula mismatch at P = {p}"),
        )?;
    }
    Ok("8 rows equal the reference table and 6P+3 / 12P / P+2".into())
}

fn randomized() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for bits in [16, 32] {
        let report = verify_bits(bits, VerifyMode::Samples(RANDOMIZED_SAMPLES), SEED)
            .map_err(|e| e.to_string())?;
        ensure(report.passed(), || {
            format!("{bits}-bit: {} failures", report.failures.len())
        })?;
        parts.push(format!("{bits}-bit {} cases", report.cases));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < RANDOMIZED_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("{}, 0 failures, seed {SEED}, {elapsed:.2?}", parts.join(" + ")))
}

fn output_synchrony() -> Outcome {
    let p = PrecisionVector::new(2, 2, 2, 2);
    let (net, vn) = build_adder(p).map_err(|e| e.to_string())?;
    let expected = vn.inject_step + p.max_bits() + 2;
    ensure(vn.ready_step == expected, || format!("ready step {}", vn.ready_step))?;
    let outputs: BTreeSet<usize> = Rail::BOTH
        .iter()
        .flat_map(|&r| vn.z.rail(r).iter().copied())
        .collect();
    // Simulate past the ready step so late spikes would show up.
    let horizon = vn.ready_step as i64 + 4;
    let value = |code: u64| {
        DyadicValue::new(
            Dyadic::from_scaled((code & 0xf) as i128, 2),
            -Dyadic::from_scaled((code >> 4) as i128, 2),
        )
        .unwrap()
    };
    let stray: Vec<(u64, u32)> = (0..1u64 << 16)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (x, y) = (value(i & 0xff), value(i >> 8));
            let mut stim = stimulus_for(&vn, InputPort::X, &x).unwrap();
            stim.extend(stimulus_for(&vn, InputPort::Y, &y).unwrap());
            let trace = simulate(&net, &stim, horizon).unwrap();
            trace
                .events
                .into_iter()
                .filter(|e| outputs.contains(&e.neuron) && e.step != expected)
                .map(move |e| (i, e.step))
                .collect::<Vec<_>>()
        })
        .collect();
    ensure(stray.is_empty(), || {
        format!("{} off-step output spikes, first {:?}", stray.len(), stray[0])
    })?;
    Ok(format!("all output spikes of 65536 runs at step {expected}"))
}

fn spike_statistics() -> Outcome {
    let stats = average_addition(
        PrecisionVector::new(4, 4, 4, 4),
        SPIKE_SAMPLES,
        SEED,
        &EnergyModel::default(),
        DEFAULT_EXECUTION_WINDOW,
    )
    .map_err(|e| e.to_string())?;
    let mean = stats.mean_total_spikes;
    ensure((mean - SPIKE_TARGET).abs() <= SPIKE_TOLERANCE * SPIKE_TARGET, || {
        format!("mean total spikes {mean:.3}")
    })?;
    let mut bits = Vec::new();
    for n in [8u32, 16, 32] {
        let mean = mean_encoding_spikes(RailFormat::new(n / 2, n / 2), SET_BIT_SAMPLES, SEED)
            .map_err(|e| e.to_string())?;
        let half = n as f64 / 2.0;
        ensure((mean - half).abs() <= SET_BIT_TOLERANCE * half, || {
            format!("{n}-bit rail: mean set bits {mean:.3}")
        })?;
        bits.push(format!("{n}-bit {mean:.3}"));
    }
    Ok(format!(
        "mean spikes {mean:.3} (network {:.3} + boundary {:.3}); set bits {}",
        stats.mean_network_spikes,
        stats.mean_boundary_events,
        bits.join(", ")
    ))
}

fn energy_calibration() -> Outcome {
    let stats = average_addition(
        PrecisionVector::new(4, 4, 4, 4),
        ENERGY_SAMPLES,
        SEED,
        &EnergyModel::default(),
        DEFAULT_EXECUTION_WINDOW,
    )
    .map_err(|e| e.to_string())?;
    let (e, w) = (stats.mean_energy_joules, stats.mean_power_watts);
    ensure((e - ENERGY_TARGET_J).abs() <= ENERGY_TOLERANCE_J, || {
        format!("energy {:.3} nJ", e * 1e9)
    })?;
    ensure((w - POWER_TARGET_W).abs() <= POWER_TOLERANCE_W, || {
        format!("power {:.3} mW", w * 1e3)
    })?;
    Ok(format!(
        "{:.3} nJ, {:.3} mW over {} steps",
        e * 1e9,
        w * 1e3,
        stats.steps
    ))
}

fn natural(rng: &mut ChaCha8Rng) -> i64 {
    rng.gen_range(0..1 << 16)
}

fn mu_functions() -> Outcome {
    let nat16 = PrecisionVector::new(16, 0, 0, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    for _ in 0..FUNCTION_CASES {
        let (k, x) = (natural(&mut rng), natural(&mut rng));
        let c = build_constant(v(&k.to_string()), nat16).map_err(|e| e.to_string())?;
        let got = c.evaluate(&[v(&x.to_string())]).map_err(|e| e.to_string())?;
        ensure(got.value() == Dyadic::from(k), || format!("C_{k}({x}) = {got}"))?;
    }

    let succ = build_successor(nat16).map_err(|e| e.to_string())?;
    for _ in 0..FUNCTION_CASES {
        let x = natural(&mut rng);
        let got = succ.evaluate(&[v(&x.to_string())]).map_err(|e| e.to_string())?;
        ensure(got.value() == Dyadic::from(x + 1), || format!("S({x}) = {got}"))?;
    }

    let pred = build_predecessor(PrecisionVector::new(16, 0, 16, 0)).map_err(|e| e.to_string())?;
    for _ in 0..FUNCTION_CASES {
        let x = natural(&mut rng);
        let got = pred.evaluate(&[v(&x.to_string())]).map_err(|e| e.to_string())?;
        ensure(got.value() == Dyadic::from(x - 1), || format!("pred({x}) = {got}"))?;
    }

    let p = PrecisionVector::new(4, 4, 4, 4);
    let neg = build_negate(p).map_err(|e| e.to_string())?;
    let neg_wide = build_negate(p.widened()).map_err(|e| e.to_string())?;
    for _ in 0..FUNCTION_CASES {
        let x = random_value(&mut rng, &p);
        let once = neg.evaluate(&[x]).map_err(|e| e.to_string())?;
        ensure(once.value() == -x.value() && once == x.swapped(), || {
            format!("-({x}) = {once}")
        })?;
        let twice = neg_wide.evaluate(&[once]).map_err(|e| e.to_string())?;
        ensure(twice == x, || format!("-(-({x})) = {twice}"))?;
    }

    let tree = build_sum_tree(16, p).map_err(|e| e.to_string())?;
    ensure(tree.levels == 4, || format!("depth {}", tree.levels))?;
    ensure(tree.virtual_neuron_count() <= 31, || {
        format!("{} virtual neurons", tree.virtual_neuron_count())
    })?;
    for _ in 0..100 {
        let xs: Vec<DyadicValue> = (0..16).map(|_| random_value(&mut rng, &p)).collect();
        let want = xs.iter().fold(Dyadic::ZERO, |acc, x| acc + x.value());
        let got = tree.evaluate(&xs).map_err(|e| e.to_string())?;
        ensure(got.value() == want, || format!("sum {got}, expected {want}"))?;
    }

    Ok(format!(
        "constant/successor/predecessor/negate {FUNCTION_CASES} cases each; sum tree N=16 depth 4 with {} VNs",
        tree.virtual_neuron_count()
    ))
}

/// Runs one bit group in isolation: the group, its output neuron and a probe
/// on its threshold-1 (carry) neuron, all with the adder's own parameters.
fn group_response(net: &Network, group: &[usize], output: usize, s: u8) -> Result<(u8, u8), String> {
    let mut ids: Vec<usize> = group.to_vec();
    ids.push(output);
    let local = |id: usize| ids.iter().position(|&n| n == id);
    let probe = ids.len();
    let mut neurons: Vec<NeuronSpec> = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| NeuronSpec { id: i, ..net.neurons()[id] })
        .collect();
    neurons.push(NeuronSpec { id: probe, threshold: 0, reset_state: -1 });
    let mut synapses: Vec<SynapseSpec> = net
        .synapses()
        .iter()
        .filter(|syn| group.contains(&syn.pre) && syn.post == output)
        .map(|syn| SynapseSpec { pre: local(syn.pre).unwrap(), post: local(syn.post).unwrap(), ..*syn })
        .collect();
    let out_delay = synapses.first().map(|syn| syn.delay).ok_or("group has no output synapses")?;
    let carry = group[1];
    synapses.push(SynapseSpec { pre: local(carry).unwrap(), post: probe, weight: Dyadic::ONE, delay: 1 });
    let sub = Network::new(neurons, synapses, Default::default()).map_err(|e| e.to_string())?;

    let mut stim = Stimulus::new();
    for &n in group {
        for _ in 0..s {
            stim.inject(0, local(n).unwrap(), Dyadic::ONE);
        }
    }
    let trace = simulate(&sub, &stim, out_delay as i64 + 1).map_err(|e| e.to_string())?;
    let sum = trace.spiked(out_delay, local(output).unwrap()) as u8;
    let carry = trace.spiked(1, probe) as u8;
    Ok((sum, carry))
}

fn bit_groups() -> Outcome {
    let mut checked = 0;
    for p in [PrecisionVector::new(2, 2, 2, 2), PrecisionVector::new(8, 8, 8, 8), PrecisionVector::new(5, 0, 0, 3)] {
        let (net, vn) = build_adder(p).map_err(|e| e.to_string())?;
        for rail in Rail::BOTH {
            let groups = vn.bit_groups.rail(rail);
            let outputs = vn.z.rail(rail);
            for (i, group) in groups.iter().enumerate() {
                let thresholds: Vec<i64> = group.iter().map(|&n| net.neurons()[n].threshold).collect();
                let want_thresholds: &[i64] = if i == 0 { &[0, 1] } else { &[0, 1, 2] };
                ensure(thresholds == want_thresholds, || {
                    format!("{p} {rail:?} group {i} thresholds {thresholds:?}")
                })?;
                // Carry wiring: threshold-1 neuron to every neuron of the next group.
                if let Some(next) = groups.get(i + 1) {
                    for &t in next {
                        ensure(
                            net.synapses().iter().any(|syn| {
                                syn.pre == group[1] && syn.post == t && syn.weight == Dyadic::ONE && syn.delay == 1
                            }),
                            || format!("{p} {rail:?} group {i} lacks carry into neuron {t}"),
                        )?;
                    }
                }
                // Group 0 is fed by two input bits, so its inputs sum to at most 2.
                let max_s = if i == 0 { 2 } else { 3 };
                let output = outputs[outputs.len() - 1 - i];
                for s in 0..=max_s {
                    let got = group_response(&net, group, output, s)?;
                    let want = bit_group_response(s).map_err(|e| e.to_string())?;
                    ensure(got == want, || {
                        format!("{p} {rail:?} group {i}, s = {s}: got {got:?}, want {want:?}")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} (group, s) cases across [2,2,2,2], [8,8,8,8], [5,0,0,3]"))
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("exhaustive 8-bit correctness", exhaustive_8bit),
        ("reference table rows", reference_rows),
        ("complexity table", complexity),
        ("randomized 16/32-bit correctness", randomized),
        ("output synchrony", output_synchrony),
        ("spike statistics", spike_statistics),
        ("energy calibration", energy_calibration),
        ("mu-functions", mu_functions),
        ("bit-group oracle", bit_groups),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
