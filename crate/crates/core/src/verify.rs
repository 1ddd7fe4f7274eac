//! Adder verification against native integer arithmetic.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{build_adder, InputPort, VirtualNeuronHandle};
use crate::codec::{decode_output, stimulus_for, DyadicValue, PrecisionVector, Rail};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{simulate, Network};

/// Largest `P+ + P-` for which exhaustive verification is allowed.
pub const EXHAUSTIVE_MAX_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Samples(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseFailure {
    pub x: DyadicValue,
    pub y: DyadicValue,
    pub expected: DyadicValue,
    pub decoded: std::result::Result<DyadicValue, String>,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub precision: PrecisionVector,
    pub mode: VerifyMode,
    pub cases: u64,
    pub failures: Vec<CaseFailure>,
    pub seed: Option<u64>,
    pub elapsed: Duration,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `key=value` lines; leaves out the elapsed time so output is reproducible.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "precision={}", self.precision);
        match self.mode {
            VerifyMode::Exhaustive => out.push_str("mode=exhaustive\n"),
            VerifyMode::Samples(n) => {
                let _ = writeln!(out, "mode=samples\nsamples={n}");
            }
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed={seed}");
        }
        let _ = writeln!(out, "cases={}", self.cases);
        let _ = writeln!(out, "failures={}", self.failures.len());
        for f in self.failures.iter().take(20) {
            let decoded = match &f.decoded {
                Ok(v) => v.to_string(),
                Err(e) => format!("error: {e}"),
            };
            let _ = writeln!(
                out,
                "failure=x {} y {} expected {} decoded {decoded}",
                f.x, f.y, f.expected
            );
        }
        let _ = writeln!(out, "result={}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Precision of the 8/16/32-bit rational adders: `[n/4; 4]`.
pub fn precision_for_bits(bits: u32) -> Result<PrecisionVector> {
    match bits {
        8 | 16 | 32 => PrecisionVector::symmetric_rational(bits),
        _ => Err(Error::argument(format!(
            "unsupported width {bits}; expected 8, 16 or 32"
        ))),
    }
}

/// A value whose rails are drawn uniformly from every representable magnitude.
pub fn random_value<R: Rng + ?Sized>(rng: &mut R, p: &PrecisionVector) -> DyadicValue {
    let pos = random_rail(rng, p, Rail::Pos);
    let neg = random_rail(rng, p, Rail::Neg);
    DyadicValue::new(pos, -neg).expect("rails drawn with the right signs")
}

fn random_rail<R: Rng + ?Sized>(rng: &mut R, p: &PrecisionVector, rail: Rail) -> Dyadic {
    let f = p.rail(rail);
    if f.is_empty() {
        return Dyadic::ZERO;
    }
    let scaled = rng.gen_range(0..(1u128 << f.width()));
    Dyadic::from_scaled(scaled as i128, f.frac_bits)
}

fn rail_from_scaled(p: &PrecisionVector, rail: Rail, scaled: u128) -> Dyadic {
    let m = Dyadic::from_scaled(scaled as i128, p.rail(rail).frac_bits);
    match rail {
        Rail::Pos => m,
        Rail::Neg => -m,
    }
}

/// Rail-wise sum computed on the fixed-point integers.
fn expected_sum(x: &DyadicValue, y: &DyadicValue, p: &PrecisionVector) -> DyadicValue {
    let mut rails = [Dyadic::ZERO; 2];
    for (slot, rail) in rails.iter_mut().zip(Rail::BOTH) {
        let frac = p.rail(rail).frac_bits;
        let a = x.rail(rail).to_scaled(frac).expect("representable input");
        let b = y.rail(rail).to_scaled(frac).expect("representable input");
        *slot = Dyadic::from_scaled(a + b, frac);
    }
    DyadicValue::new(rails[0], rails[1]).expect("rail signs preserved by addition")
}

/// Simulates one addition on a prebuilt adder.
pub fn run_addition(
    net: &Network,
    vn: &VirtualNeuronHandle,
    x: &DyadicValue,
    y: &DyadicValue,
) -> Result<DyadicValue> {
    let mut stim = stimulus_for(vn, InputPort::X, x)?;
    stim.extend(stimulus_for(vn, InputPort::Y, y)?);
    let trace = simulate(net, &stim, vn.ready_step as i64)?;
    decode_output(vn, &trace)
}

fn check_case(
    net: &Network,
    vn: &VirtualNeuronHandle,
    x: DyadicValue,
    y: DyadicValue,
) -> Option<CaseFailure> {
    let expected = expected_sum(&x, &y, &vn.precision);
    let decoded = run_addition(net, vn, &x, &y).map_err(|e| e.to_string());
    (decoded.as_ref() != Ok(&expected)).then_some(CaseFailure {
        x,
        y,
        expected,
        decoded,
    })
}

/// Verifies the adder for precision `p`. Exhaustive mode enumerates every
/// `(X, Y)` pair and needs `P+ + P- <= 8`; sample mode draws seeded uniform
/// inputs.
pub fn verify_adder(p: PrecisionVector, mode: VerifyMode, seed: u64) -> Result<VerificationReport> {
    let start = Instant::now();
    let (net, vn) = build_adder(p)?;
    let (cases, failures, seed) = match mode {
        VerifyMode::Exhaustive => {
            let (pb, nb) = (p.pos_bits(), p.neg_bits());
            if pb + nb > EXHAUSTIVE_MAX_BITS {
                return Err(Error::argument(format!(
                    "exhaustive verification needs at most {EXHAUSTIVE_MAX_BITS} bits per operand, precision {p} has {}",
                    pb + nb
                )));
            }
            let operand_bits = pb + nb;
            let total = 1u64 << (2 * operand_bits);
            let value = |code: u64| {
                let pos = code & ((1 << pb) - 1);
                let neg = code >> pb;
                DyadicValue::new(
                    rail_from_scaled(&p, Rail::Pos, pos as u128),
                    rail_from_scaled(&p, Rail::Neg, neg as u128),
                )
                .expect("enumerated rails have the right signs")
            };
            let failures: Vec<_> = (0..total)
                .into_par_iter()
                .filter_map(|i| {
                    let x = value(i & ((1 << operand_bits) - 1));
                    let y = value(i >> operand_bits);
                    check_case(&net, &vn, x, y)
                })
                .collect();
            (total, failures, None)
        }
        VerifyMode::Samples(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inputs: Vec<_> = (0..n)
                .map(|_| (random_value(&mut rng, &p), random_value(&mut rng, &p)))
                .collect();
            let failures: Vec<_> = inputs
                .into_par_iter()
                .filter_map(|(x, y)| check_case(&net, &vn, x, y))
                .collect();
            (n, failures, Some(seed))
        }
    };
    Ok(VerificationReport {
        precision: p,
        mode,
        cases,
        failures,
        seed,
        elapsed: start.elapsed(),
    })
}

/// [`verify_adder`] for the 8/16/32-bit rational adders.
pub fn verify_bits(bits: u32, mode: VerifyMode, seed: u64) -> Result<VerificationReport> {
    if mode == VerifyMode::Exhaustive && bits != 8 {
        return Err(Error::argument(format!(
            "exhaustive verification is only available at 8 bits, not {bits}"
        )));
    }
    verify_adder(precision_for_bits(bits)?, mode, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exhaustive_passes() {
        let report = verify_adder(PrecisionVector::new(1, 1, 1, 0), VerifyMode::Exhaustive, 0).unwrap();
        assert_eq!(report.cases, 1 << 6);
        assert!(report.passed());
        assert!(report.to_kv().ends_with("result=PASS\n"));
    }

    #[test]
    fn exhaustive_is_limited() {
        assert!(verify_bits(16, VerifyMode::Exhaustive, 0).is_err());
        assert!(verify_bits(12, VerifyMode::Samples(1), 0).is_err());
        assert!(verify_adder(PrecisionVector::new(3, 3, 3, 0), VerifyMode::Exhaustive, 0).is_err());
    }

    #[test]
    fn seeded_samples_are_reproducible() {
        let a = verify_bits(16, VerifyMode::Samples(200), 7).unwrap();
        let b = verify_bits(16, VerifyMode::Samples(200), 7).unwrap();
        assert!(a.passed());
        assert_eq!(a.to_kv(), b.to_kv());
        assert!(a.to_kv().contains("seed=7\n"));
    }

    #[test]
    fn random_values_fit_the_precision() {
        let p = PrecisionVector::new(3, 2, 0, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let v = random_value(&mut rng, &p);
            assert!(crate::codec::encode_value(&v, &p).is_ok());
            assert!(v.neg().is_zero() || v.neg().is_negative());
        }
    }
}
