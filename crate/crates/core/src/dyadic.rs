//! Exact dyadic rationals `m * 2^e`.
//!
//! Every synaptic weight, injected charge and number carried by a virtual
//! neuron is a dyadic rational, so the whole simulation path stays exact.
//! Values are kept normalized: the mantissa is odd, or the value is `0 * 2^0`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: i128,
    exponent: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic {
        mantissa: 0,
        exponent: 0,
    };
    pub const ONE: Dyadic = Dyadic {
        mantissa: 1,
        exponent: 0,
    };

    pub fn new(mantissa: i128, exponent: i32) -> Self {
        if mantissa == 0 {
            return Self::ZERO;
        }
        let tz = mantissa.trailing_zeros();
        Dyadic {
            mantissa: mantissa >> tz,
            exponent: exponent + tz as i32,
        }
    }

    pub fn from_int(value: i64) -> Self {
        Self::new(value as i128, 0)
    }

    /// `2^exponent`.
    pub fn pow2(exponent: i32) -> Self {
        Self::new(1, exponent)
    }

    pub fn mantissa(self) -> i128 {
        self.mantissa
    }

    pub fn exponent(self) -> i32 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0
    }

    pub fn is_negative(self) -> bool {
        self.mantissa < 0
    }

    pub fn abs(self) -> Self {
        Dyadic {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    pub fn checked_add(self, other: Self) -> Option<Self> {
        if self.is_zero() {
            return Some(other);
        }
        if other.is_zero() {
            return Some(self);
        }
        let exponent = self.exponent.min(other.exponent);
        let a = shl_checked(self.mantissa, (self.exponent - exponent) as u32)?;
        let b = shl_checked(other.mantissa, (other.exponent - exponent) as u32)?;
        Some(Self::new(a.checked_add(b)?, exponent))
    }

    /// `self * 2^shift`.
    pub fn scale(self, shift: i32) -> Self {
        if self.is_zero() {
            self
        } else {
            Dyadic {
                mantissa: self.mantissa,
                exponent: self.exponent + shift,
            }
        }
    }

    /// The integer `self * 2^frac_bits`, if that product is an integer that fits.
    pub fn to_scaled(self, frac_bits: u32) -> Option<i128> {
        if self.is_zero() {
            return Some(0);
        }
        let shift = self.exponent as i64 + frac_bits as i64;
        if (0..=127).contains(&shift) {
            shl_checked(self.mantissa, shift as u32)
        } else {
            None
        }
    }

    /// `scaled / 2^frac_bits`.
    pub fn from_scaled(scaled: i128, frac_bits: u32) -> Self {
        Self::new(scaled, -(frac_bits as i32))
    }

    pub fn to_f64(self) -> f64 {
        self.mantissa as f64 * (self.exponent as f64).exp2()
    }

    /// Parses the netlist weight syntax `<m>*2^<e>`.
    pub fn parse_pow2(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (m, e) = s.split_once("*2^").ok_or_else(|| err("expected <m>*2^<e>"))?;
        let m: i128 = m.parse().map_err(|_| err("bad mantissa"))?;
        let e: i32 = e.parse().map_err(|_| err("bad exponent"))?;
        Ok(Self::new(m, e))
    }

    /// Formats as `<m>*2^<e>`; the inverse of [`Dyadic::parse_pow2`].
    pub fn to_pow2_string(self) -> String {
        format!("{}*2^{}", self.mantissa, self.exponent)
    }

    /// Position of the most significant set bit of `|self|`, i.e. the `k` with
    /// `2^k <= |self| < 2^(k+1)`.
    fn magnitude_exponent(self) -> i64 {
        let bits = 128 - self.mantissa.unsigned_abs().leading_zeros() as i64;
        bits - 1 + self.exponent as i64
    }
}

fn shl_checked(m: i128, shift: u32) -> Option<i128> {
    if m == 0 {
        return Some(0);
    }
    // Leave room for the sign bit.
    if shift >= 127 || m.unsigned_abs().leading_zeros() <= shift {
        return None;
    }
    Some(m << shift)
}

impl Default for Dyadic {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.signum(), other.mantissa.signum());
        if sa != sb || sa == 0 {
            return sa.cmp(&sb);
        }
        let magnitude = match self.magnitude_exponent().cmp(&other.magnitude_exponent()) {
            Ordering::Equal => {
                // Same leading bit position, so aligning cannot overflow a u128.
                let e = self.exponent.min(other.exponent);
                let a = self.mantissa.unsigned_abs() << (self.exponent - e) as u32;
                let b = other.mantissa.unsigned_abs() << (other.exponent - e) as u32;
                a.cmp(&b)
            }
            ord => ord,
        };
        if sa > 0 {
            magnitude
        } else {
            magnitude.reverse()
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Self) -> Self {
        self.checked_add(rhs).expect("dyadic addition overflowed i128")
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;

    fn neg(self) -> Self {
        Dyadic {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Self::from_int(v)
    }
}

/// Decimal syntax: optional sign, digits, optional `.digits`. Decimals that
/// are not exactly dyadic (e.g. `0.1`) are rejected, never rounded.
impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let t = s.trim();
        let (negative, body) = if let Some(rest) = t.strip_prefix('-') {
            (true, rest)
        } else if let Some(rest) = t.strip_prefix('\u{2212}') {
            (true, rest)
        } else if let Some(rest) = t.strip_prefix('+') {
            (false, rest)
        } else {
            (false, t)
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("no digits"));
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(err("unexpected character"));
        }
        let frac_part = frac_part.trim_end_matches('0');
        let digits = frac_part.len() as u32;
        if digits > 54 {
            return Err(err("too many fraction digits"));
        }
        let mut n: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            n = n
                .checked_mul(10)
                .and_then(|n| n.checked_add((b - b'0') as i128))
                .ok_or_else(|| err("magnitude too large"))?;
        }
        // n / 10^k = (n / 5^k) * 2^-k is dyadic iff 5^k divides n.
        let five_k = 5i128.pow(digits);
        if n % five_k != 0 {
            return Err(err("not a dyadic rational (denominator is not a power of two)"));
        }
        let m = n / five_k;
        Ok(Self::new(if negative { -m } else { m }, -(digits as i32)))
    }
}

/// Exact decimal expansion (every dyadic has a finite one).
impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_negative() { "-" } else { "" };
        let mag = self.mantissa.unsigned_abs();
        if self.exponent >= 0 {
            return match mag.checked_shl(self.exponent as u32) {
                Some(v) if v >> self.exponent as u32 == mag => write!(f, "{sign}{v}"),
                _ => write!(f, "{}", self.to_pow2_string()),
            };
        }
        let k = (-self.exponent) as u32;
        if k > 124 {
            return write!(f, "{}", self.to_pow2_string());
        }
        let int = mag >> k;
        let mut rem = mag & ((1u128 << k) - 1);
        let mut digits = String::new();
        while rem != 0 {
            rem *= 10;
            digits.push(char::from(b'0' + (rem >> k) as u8));
            rem &= (1u128 << k) - 1;
        }
        if digits.is_empty() {
            write!(f, "{sign}{int}")
        } else {
            write!(f, "{sign}{int}.{digits}")
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dyadic({self})")
    }
}
