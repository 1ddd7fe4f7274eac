//! Dual-rail fixed-point encoding of dyadic values onto neuron ports.
//!
//! A value is carried as a non-negative positive rail and a non-positive
//! negative rail. Each rail is a plain binary fixed-point magnitude, most
//! significant bit first, with the rail's sign applied by the reader.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::circuit::{InputPort, RailPorts, VirtualNeuronHandle};
use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::snn::{SpikeTrace, Step, Stimulus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rail {
    Pos,
    Neg,
}

impl Rail {
    pub const BOTH: [Rail; 2] = [Rail::Pos, Rail::Neg];

    pub fn opposite(self) -> Rail {
        match self {
            Rail::Pos => Rail::Neg,
            Rail::Neg => Rail::Pos,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Rail::Pos => '+',
            Rail::Neg => '-',
        }
    }
}

/// Integer/fraction bit split of one rail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RailFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
}

impl RailFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Self {
        RailFormat {
            int_bits,
            frac_bits,
        }
    }

    pub fn width(self) -> u32 {
        self.int_bits + self.frac_bits
    }

    pub fn is_empty(self) -> bool {
        self.width() == 0
    }
}

/// Bit counts `[positive int, positive frac, negative int, negative frac]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PrecisionVector {
    pub pos_int: u32,
    pub pos_frac: u32,
    pub neg_int: u32,
    pub neg_frac: u32,
}

impl PrecisionVector {
    pub const fn new(pos_int: u32, pos_frac: u32, neg_int: u32, neg_frac: u32) -> Self {
        PrecisionVector {
            pos_int,
            pos_frac,
            neg_int,
            neg_frac,
        }
    }

    /// Precision used by the 8/16/32-bit rational tests: `[n/4; 4]`.
    pub fn symmetric_rational(total_bits: u32) -> Result<Self> {
        if total_bits == 0 || !total_bits.is_multiple_of(4) {
            return Err(Error::argument(format!(
                "total bits {total_bits} is not a positive multiple of 4"
            )));
        }
        let q = total_bits / 4;
        Ok(Self::new(q, q, q, q))
    }

    pub fn rail(&self, rail: Rail) -> RailFormat {
        match rail {
            Rail::Pos => RailFormat::new(self.pos_int, self.pos_frac),
            Rail::Neg => RailFormat::new(self.neg_int, self.neg_frac),
        }
    }

    /// P+.
    pub fn pos_bits(&self) -> u32 {
        self.pos_int + self.pos_frac
    }

    /// P-.
    pub fn neg_bits(&self) -> u32 {
        self.neg_int + self.neg_frac
    }

    pub fn max_bits(&self) -> u32 {
        self.pos_bits().max(self.neg_bits())
    }

    pub fn is_empty(&self) -> bool {
        self.pos_bits() == 0 && self.neg_bits() == 0
    }

    pub fn is_symmetric(&self) -> bool {
        self.pos_int == self.neg_int && self.pos_frac == self.neg_frac
    }

    /// Format of an adder output rail: one extra integer bit for the carry.
    pub fn output_rail(&self, rail: Rail) -> RailFormat {
        let f = self.rail(rail);
        if f.is_empty() {
            f
        } else {
            RailFormat::new(f.int_bits + 1, f.frac_bits)
        }
    }

    /// The precision whose input ports exactly hold this precision's outputs.
    pub fn widened(&self) -> Self {
        let pos = self.output_rail(Rail::Pos);
        let neg = self.output_rail(Rail::Neg);
        Self::new(pos.int_bits, pos.frac_bits, neg.int_bits, neg.frac_bits)
    }
}

impl FromStr for PrecisionVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::argument(format!("precision {s:?} is not four comma-separated bit counts"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut v = [0u32; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| bad())?;
        }
        Ok(Self::new(v[0], v[1], v[2], v[3]))
    }
}

impl fmt::Display for PrecisionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.pos_int, self.pos_frac, self.neg_int, self.neg_frac
        )
    }
}

/// A signed dyadic value held as `pos + neg` with `pos >= 0 >= neg`.
///
/// The split is not canonical: `(1, -1)` is a valid encoding of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DyadicValue {
    pos: Dyadic,
    neg: Dyadic,
}

impl DyadicValue {
    pub const ZERO: DyadicValue = DyadicValue {
        pos: Dyadic::ZERO,
        neg: Dyadic::ZERO,
    };

    pub fn new(pos: Dyadic, neg: Dyadic) -> Result<Self> {
        if pos.is_negative() {
            return Err(Error::argument(format!("positive rail {pos} is negative")));
        }
        if neg > Dyadic::ZERO {
            return Err(Error::argument(format!("negative rail {neg} is positive")));
        }
        Ok(DyadicValue { pos, neg })
    }

    /// Puts a non-negative value entirely on the positive rail and a negative
    /// one entirely on the negative rail.
    pub fn from_value(v: Dyadic) -> Self {
        if v.is_negative() {
            DyadicValue {
                pos: Dyadic::ZERO,
                neg: v,
            }
        } else {
            DyadicValue {
                pos: v,
                neg: Dyadic::ZERO,
            }
        }
    }

    pub fn pos(&self) -> Dyadic {
        self.pos
    }

    pub fn neg(&self) -> Dyadic {
        self.neg
    }

    pub fn rail(&self, rail: Rail) -> Dyadic {
        match rail {
            Rail::Pos => self.pos,
            Rail::Neg => self.neg,
        }
    }

    /// Magnitude carried by `rail`.
    pub fn magnitude(&self, rail: Rail) -> Dyadic {
        self.rail(rail).abs()
    }

    pub fn value(&self) -> Dyadic {
        self.pos + self.neg
    }

    /// Rail-wise sum.
    pub fn rail_sum(&self, other: &DyadicValue) -> DyadicValue {
        DyadicValue {
            pos: self.pos + other.pos,
            neg: self.neg + other.neg,
        }
    }

    /// Swaps the rails, negating the value.
    pub fn swapped(&self) -> DyadicValue {
        DyadicValue {
            pos: -self.neg,
            neg: -self.pos,
        }
    }
}

/// `"pos,neg"` selects both rails explicitly; a single decimal uses
/// [`DyadicValue::from_value`].
impl FromStr for DyadicValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(',') {
            Some((p, n)) => DyadicValue::new(p.parse()?, n.parse()?),
            None => Ok(DyadicValue::from_value(s.parse()?)),
        }
    }
}

impl fmt::Display for DyadicValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.pos, self.neg)
    }
}

/// Fixed-point bits, most significant first; `split` bits are integer bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    pub bits: Vec<bool>,
    pub split: usize,
}

impl BitVector {
    pub fn zeros(format: RailFormat) -> Self {
        BitVector {
            bits: vec![false; format.width() as usize],
            split: format.int_bits as usize,
        }
    }

    /// Parses a `0`/`1` string such as `"10101"` with `int_bits` integer bits.
    pub fn parse(s: &str, int_bits: usize) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse {
                    input: s.to_string(),
                    reason: "expected only 0 and 1".into(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        if int_bits > bits.len() {
            return Err(Error::argument(format!(
                "split {int_bits} beyond {} bits",
                bits.len()
            )));
        }
        Ok(BitVector {
            bits,
            split: int_bits,
        })
    }

    pub fn format(&self) -> RailFormat {
        RailFormat::new(self.split as u32, (self.bits.len() - self.split) as u32)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Unsigned integer `value * 2^frac_bits`.
    fn scaled(&self) -> u128 {
        self.bits
            .iter()
            .fold(0u128, |acc, &b| (acc << 1) | u128::from(b))
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Widest rail the value codec accepts (mantissas live in an `i128`).
pub const MAX_RAIL_BITS: u32 = 126;

fn not_representable(x: Dyadic, format: RailFormat) -> Error {
    Error::NotRepresentable {
        value: x.to_string(),
        int_bits: format.int_bits,
        frac_bits: format.frac_bits,
    }
}

/// Binary fixed-point encoding of a non-negative dyadic.
pub fn encode_rail(x: Dyadic, int_bits: u32, frac_bits: u32) -> Result<BitVector> {
    let format = RailFormat::new(int_bits, frac_bits);
    let width = format.width();
    if width > MAX_RAIL_BITS || x.is_negative() {
        return Err(not_representable(x, format));
    }
    let scaled = x
        .to_scaled(frac_bits)
        .filter(|&s| s < 1i128 << width)
        .ok_or_else(|| not_representable(x, format))?;
    let bits = (0..width)
        .rev()
        .map(|k| (scaled >> k) & 1 == 1)
        .collect();
    Ok(BitVector {
        bits,
        split: int_bits as usize,
    })
}

/// `±Σ bit·2^position`; the exact inverse of [`encode_rail`].
pub fn decode_rail(bits: &BitVector, sign: Rail) -> Dyadic {
    let frac = bits.format().frac_bits;
    let magnitude = Dyadic::from_scaled(bits.scaled() as i128, frac);
    match sign {
        Rail::Pos => magnitude,
        Rail::Neg => -magnitude,
    }
}

/// Rail-wise encoding under `p`: `(positive bits, |negative| bits)`.
pub fn encode_value(v: &DyadicValue, p: &PrecisionVector) -> Result<(BitVector, BitVector)> {
    let pos = p.rail(Rail::Pos);
    let neg = p.rail(Rail::Neg);
    Ok((
        encode_rail(v.pos(), pos.int_bits, pos.frac_bits)?,
        encode_rail(v.magnitude(Rail::Neg), neg.int_bits, neg.frac_bits)?,
    ))
}

/// Charge-1 injections, at the neuron's inject step, into each port neuron
/// whose bit is set.
pub fn stimulus_for(
    vn: &VirtualNeuronHandle,
    port: InputPort,
    v: &DyadicValue,
) -> Result<Stimulus> {
    let (pos_bits, neg_bits) = encode_value(v, &vn.precision)?;
    let ports = vn.input(port);
    let mut stim = Stimulus::new();
    for (bits, neurons) in [(&pos_bits, &ports.pos), (&neg_bits, &ports.neg)] {
        for (&bit, &neuron) in bits.bits.iter().zip(neurons) {
            if bit {
                stim.inject(vn.inject_step, neuron, Dyadic::ONE);
            }
        }
    }
    Ok(stim)
}

/// Reads the output port of `vn` at its ready step.
pub fn decode_output(vn: &VirtualNeuronHandle, trace: &SpikeTrace) -> Result<DyadicValue> {
    let formats = [
        vn.precision.output_rail(Rail::Pos),
        vn.precision.output_rail(Rail::Neg),
    ];
    decode_port(&vn.z, formats, vn.ready_step, trace)
}

/// Decodes a dual-rail output port whose neurons must spike only at `ready`.
pub fn decode_port(
    port: &RailPorts,
    formats: [RailFormat; 2],
    ready: Step,
    trace: &SpikeTrace,
) -> Result<DyadicValue> {
    let mut index: HashMap<usize, (usize, usize)> = HashMap::new();
    for (r, neurons) in [&port.pos, &port.neg].into_iter().enumerate() {
        for (i, &n) in neurons.iter().enumerate() {
            index.insert(n, (r, i));
        }
    }
    let mut bits = [
        BitVector::zeros(formats[0]),
        BitVector::zeros(formats[1]),
    ];
    for e in &trace.events {
        if let Some(&(r, i)) = index.get(&e.neuron) {
            if e.step != ready {
                return Err(Error::TimingViolation {
                    neuron: e.neuron,
                    step: e.step,
                    expected: ready,
                });
            }
            bits[r].bits[i] = true;
        }
    }
    DyadicValue::new(
        decode_rail(&bits[0], Rail::Pos),
        decode_rail(&bits[1], Rail::Neg),
    )
}
