//! Parameter design: pick buffer size (and idle padding if needed) so
//! the modeled performance loss stays under a target at a target block
//! error rate.
//!
//! The error-rate inputs are waterfall curves measured beforehand, so
//! the slow Monte Carlo is decoupled from the fast model search.

use tascl_core::latency::speed_gain;
use tascl_core::markov::{build_model, stationary, TasclParams};
use tascl_core::rational::SpeedGain;
use tascl_core::{Error, Result};

use crate::bler::BlerPoint;

/// A positive waterfall curve over SNR, interpolated log-linearly.
#[derive(Debug, Clone)]
pub struct Curve {
    points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "a curve needs at least two points".into(),
            ));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite SNR"));
        if points.iter().any(|&(s, v)| !s.is_finite() || v <= 0.0) {
            return Err(Error::InvalidParameter(
                "curve values must be positive and finite".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Curve from measured points; zero-error points are dropped since
    /// they carry no level information.
    pub fn from_bler_points(points: &[BlerPoint], use_crc_fail_rate: bool) -> Result<Self> {
        Self::new(
            points
                .iter()
                .map(|p| {
                    (
                        p.snr_db,
                        if use_crc_fail_rate {
                            p.crc_fail_rate
                        } else {
                            p.bler
                        },
                    )
                })
                .filter(|&(_, v)| v > 0.0)
                .collect(),
        )
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_snr(&self) -> f64 {
        self.points.first().unwrap().0
    }

    pub fn max_snr(&self) -> f64 {
        self.points.last().unwrap().0
    }

    /// Value at `snr`, log-linear between grid points.
    pub fn value_at(&self, snr: f64) -> Result<f64> {
        if snr < self.min_snr() || snr > self.max_snr() {
            return Err(Error::Infeasible(format!(
                "SNR {snr} dB outside the measured range [{}, {}]",
                self.min_snr(),
                self.max_snr()
            )));
        }
        let i = self
            .points
            .windows(2)
            .position(|w| snr <= w[1].0)
            .expect("snr within range");
        let (s0, v0) = self.points[i];
        let (s1, v1) = self.points[i + 1];
        if s1 == s0 {
            return Ok(v0);
        }
        let t = (snr - s0) / (s1 - s0);
        Ok(10f64.powf(v0.log10() + t * (v1.log10() - v0.log10())))
    }

    /// SNR at which the curve first falls to `level`.
    pub fn snr_at(&self, level: f64) -> Result<f64> {
        if level <= 0.0 {
            return Err(Error::InvalidParameter("level must be positive".into()));
        }
        for w in self.points.windows(2) {
            let (s0, v0) = w[0];
            let (s1, v1) = w[1];
            let (lo, hi) = (v0.min(v1), v0.max(v1));
            if level <= hi && level >= lo {
                if v0 == v1 {
                    return Ok(s0);
                }
                let t = (level.log10() - v0.log10()) / (v1.log10() - v0.log10());
                return Ok(s0 + t * (s1 - s0));
            }
        }
        Err(Error::Infeasible(format!(
            "level {level:.3e} never reached on the measured curve"
        )))
    }
}

/// Design goal: maximum relative loss at a target error rate, under a
/// buffer budget.
#[derive(Debug, Clone, Copy)]
pub struct DesignTarget {
    pub delta_max: f64,
    pub target_bler: f64,
    pub zeta_max: u64,
}

/// Chosen operating point.
#[derive(Debug, Clone, Copy)]
pub struct DesignOutcome {
    pub beta: SpeedGain,
    pub zeta: u64,
    pub idle_padding_cycles: u64,
    /// Fast-decoder period after padding.
    pub c_s_padded: u64,
    pub snr_at_target: f64,
    pub eps_s_at_target: f64,
    /// Modeled loss at the operating point.
    pub delta_achieved: f64,
}

/// Searches the smallest buffer (then the smallest idle padding) whose
/// modeled loss meets the target at the SNR where the slow decoder
/// reaches `target_bler`.
pub fn design_search(
    c_l: u64,
    c_s: u64,
    es_curve: &Curve,
    el_curve: &Curve,
    target: &DesignTarget,
    max_denominator: u64,
) -> Result<DesignOutcome> {
    if target.delta_max <= 0.0 || target.zeta_max == 0 {
        return Err(Error::InvalidParameter(
            "delta_max and zeta_max must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&target.target_bler) || target.target_bler == 0.0 {
        return Err(Error::InvalidParameter("target_bler must be in (0,1)".into()));
    }
    let snr = el_curve.snr_at(target.target_bler)?;
    let eps_s = es_curve.value_at(snr)?.min(1.0);
    let eps_l = target.target_bler;

    for padding in 0..=c_l {
        let c_s_padded = c_s + padding;
        let beta = speed_gain(c_l, c_s_padded, max_denominator)?;
        if beta.num() <= beta.den() {
            // The slow decoder now keeps up with the input; nothing can
            // ever queue past one frame, so the loss is zero.
            return Ok(DesignOutcome {
                beta,
                zeta: 1,
                idle_padding_cycles: padding,
                c_s_padded,
                snr_at_target: snr,
                eps_s_at_target: eps_s,
                delta_achieved: 0.0,
            });
        }
        for zeta in 1..=target.zeta_max {
            let params = TasclParams::from_speed_gain(beta, zeta, eps_s, eps_l)?;
            let model = build_model(&params)?;
            let res = stationary(&model, 1e-12)?;
            if res.delta_loss <= target.delta_max {
                return Ok(DesignOutcome {
                    beta,
                    zeta,
                    idle_padding_cycles: padding,
                    c_s_padded,
                    snr_at_target: snr,
                    eps_s_at_target: eps_s,
                    delta_achieved: res.delta_loss,
                });
            }
        }
    }
    Err(Error::Infeasible(
        "no padding up to beta <= 1 met the loss target; this should be unreachable".into(),
    ))
}
