//! Exact rational speed gain.
//!
//! The ratio of the two component decoders' per-frame latencies drives
//! both the Markov model's state space and the buffer sizing formulas.
//! Floors and state counts must be exact, so the ratio is kept as a
//! reduced integer pair and never as a float.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A positive rational `num/den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeedGain {
    num: u64,
    den: u64,
}

impl SpeedGain {
    /// Reduces `num/den` to lowest terms. Both parts must be positive.
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidParameter(
                "speed gain numerator and denominator must be positive".into(),
            ));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    /// Exact ratio of two cycle counts.
    pub fn from_cycles(c_l: u64, c_s: u64) -> Result<Self> {
        Self::new(c_l, c_s)
    }

    /// Smallest rational `>= c_l/c_s` with denominator at most
    /// `max_denominator`. Exact when the reduced ratio already fits;
    /// otherwise rounds up so that any overflow bound computed from the
    /// result stays an upper bound.
    pub fn from_cycles_bounded(c_l: u64, c_s: u64, max_denominator: u64) -> Result<Self> {
        let exact = Self::from_cycles(c_l, c_s)?;
        if max_denominator == 0 {
            return Err(Error::InvalidParameter(
                "max_denominator must be positive".into(),
            ));
        }
        if exact.den <= max_denominator {
            return Ok(exact);
        }
        let mut best: Option<(u64, u64)> = None;
        for den in 1..=max_denominator {
            // ceil(c_l * den / c_s)
            let num = (c_l as u128 * den as u128).div_ceil(c_s as u128) as u64;
            let better = match best {
                None => true,
                // num/den < b_num/b_den  <=>  num*b_den < b_num*den
                Some((b_num, b_den)) => {
                    (num as u128) * (b_den as u128) < (b_num as u128) * (den as u128)
                }
            };
            if better {
                best = Some((num, den));
            }
        }
        let (num, den) = best.expect("max_denominator >= 1");
        Self::new(num, den)
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True iff `self >= other`, compared exactly.
    pub fn ge(&self, other: &SpeedGain) -> bool {
        (self.num as u128) * (other.den as u128) >= (other.num as u128) * (self.den as u128)
    }

    /// `floor(self * k)` computed exactly.
    pub fn mul_int_floor(&self, k: u64) -> u64 {
        ((self.num as u128 * k as u128) / self.den as u128) as u64
    }

    /// `ceil(self * k)` computed exactly.
    pub fn mul_int_ceil(&self, k: u64) -> u64 {
        (self.num as u128 * k as u128).div_ceil(self.den as u128) as u64
    }
}

impl fmt::Display for SpeedGain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl std::str::FromStr for SpeedGain {
    type Err = Error;

    /// Parses `"3"`, `"13/4"` or a decimal such as `"3.25"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let num: u64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
            let den: u64 = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
            return Self::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let scale = 10u64
                .checked_pow(frac.len() as u32)
                .ok_or_else(|| Error::Parse(format!("too many decimals in {s:?}")))?;
            let int: u64 = int
                .parse()
                .map_err(|_| Error::Parse(format!("bad integer part in {s:?}")))?;
            let frac: u64 = frac
                .parse()
                .map_err(|_| Error::Parse(format!("bad fraction part in {s:?}")))?;
            return Self::new(int * scale + frac, scale);
        }
        let num: u64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
        Self::new(num, 1)
    }
}
