//! BPSK over AWGN and fixed-point quantization.
//!
//! `transmit` maps a codeword to channel LLRs with noise variance
//! `sigma^2 = 1 / (2 * R * 10^(EbN0/10))` and `LLR_i = 2 * y_i / sigma^2`.
//! Noise is drawn from a per-frame substream keyed by `(seed,
//! frame_index)`, so frames are IID and results do not depend on the
//! order frames are simulated in.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codec::Bit;
use crate::rng::substream;
use crate::{Error, Result};

/// One frame's channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Eb/N0 in dB.
    pub ebn0_db: f64,
    /// Code rate used in the noise-variance mapping.
    pub rate: f64,
    pub seed: u64,
    /// Frame counter; selects the noise substream.
    pub frame_index: u64,
}

impl ChannelConfig {
    pub fn noise_sigma_sq(&self) -> f64 {
        1.0 / (2.0 * self.rate * 10f64.powf(self.ebn0_db / 10.0))
    }
}

/// Transmits `x` over BPSK/AWGN and returns the channel LLRs.
/// Bit 0 maps to +1, bit 1 to -1.
pub fn transmit(x: &[Bit], cfg: &ChannelConfig) -> Result<Vec<f64>> {
    if !cfg.ebn0_db.is_finite() || cfg.rate <= 0.0 || cfg.rate > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "bad channel config: ebn0={} rate={}",
            cfg.ebn0_db, cfg.rate
        )));
    }
    let sigma_sq = cfg.noise_sigma_sq();
    let sigma = sigma_sq.sqrt();
    let scale = 2.0 / sigma_sq;
    let mut rng = substream(cfg.seed, cfg.frame_index);
    Ok(x.iter()
        .map(|&b| {
            let s = if b == 0 { 1.0 } else { -1.0 };
            let noise: f64 = rng.sample(StandardNormal);
            scale * (s + sigma * noise)
        })
        .collect())
}

/// Two's-complement fixed-point format: `total_bits` overall with
/// `fraction_bits` after the binary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantSpec {
    total_bits: u32,
    fraction_bits: u32,
    saturating: bool,
}

impl QuantSpec {
    pub fn new(total_bits: u32, fraction_bits: u32, saturating: bool) -> Result<Self> {
        if total_bits == 0 || total_bits > 52 || fraction_bits >= total_bits {
            return Err(Error::InvalidParameter(format!(
                "bad quantizer: total_bits={total_bits} fraction_bits={fraction_bits}"
            )));
        }
        Ok(Self {
            total_bits,
            fraction_bits,
            saturating,
        })
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn fraction_bits(&self) -> u32 {
        self.fraction_bits
    }

    /// Largest representable magnitude. Symmetric: the most negative
    /// two's-complement code is not used.
    pub fn max_value(&self) -> f64 {
        let max_int = (1i64 << (self.total_bits - 1)) - 1;
        max_int as f64 / (1u64 << self.fraction_bits) as f64
    }

    /// Symmetric saturating rounding of one value. Rounds half away from
    /// zero, so `quantize(-v) == -quantize(v)`.
    pub fn quantize(&self, v: f64) -> f64 {
        let scale = (1u64 << self.fraction_bits) as f64;
        let max_int = ((1i64 << (self.total_bits - 1)) - 1) as f64;
        let mut q = (v * scale).round();
        if self.saturating {
            q = q.clamp(-max_int, max_int);
        } else if q > max_int || q < -max_int {
            // Non-saturating mode still cannot represent the value;
            // wrap like the hardware register would.
            let modulus = 2.0 * (max_int + 1.0);
            q = q.rem_euclid(modulus);
            if q > max_int {
                q -= modulus;
            }
        }
        q / scale
    }

    /// Unsigned saturating rounding (for non-negative path metrics).
    /// Returns the value and whether it saturated.
    pub fn quantize_unsigned(&self, v: f64) -> (f64, bool) {
        let scale = (1u64 << self.fraction_bits) as f64;
        let max_int = ((1u64 << self.total_bits) - 1) as f64;
        let q = (v * scale).round().max(0.0);
        if q > max_int {
            (max_int / scale, true)
        } else {
            (q / scale, false)
        }
    }

    pub fn quantize_all(&self, values: &mut [f64]) {
        for v in values {
            *v = self.quantize(*v);
        }
    }
}
