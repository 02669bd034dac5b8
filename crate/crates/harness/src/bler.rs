//! Monte Carlo block-error-rate runs.
//!
//! Frames are keyed by `(seed, frame_index)` substreams and processed
//! in fixed-size batches; the stopping rule is evaluated only at batch
//! boundaries. Results are therefore byte-identical for any worker
//! count.

use rand::Rng;
use rayon::prelude::*;

use tascl_core::channel::{transmit, ChannelConfig};
use tascl_core::codec::{Bit, PolarCode};
use tascl_core::decoders::{ascl_decode, sc_decode, scl_decode, AsclVariant, DecoderQuant};
use tascl_core::rng::{substream, MESSAGE_TAG};
use tascl_core::{Error, Result};

/// Which decoder a run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderSpec {
    Sc,
    Scl { list: usize },
    Ascl { l_max: usize, variant: AsclVariant },
}

impl std::str::FromStr for DecoderSpec {
    type Err = Error;

    /// Accepts `sc`, `scl:<L>`, `ascl:<Lmax>:original` or
    /// `ascl:<Lmax>:simplified`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["sc"] => Ok(DecoderSpec::Sc),
            ["scl", l] => Ok(DecoderSpec::Scl {
                list: l
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad list size in {s:?}")))?,
            }),
            ["ascl", l, variant] => {
                let l_max = l
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad list size in {s:?}")))?;
                let variant = match *variant {
                    "original" => AsclVariant::Original,
                    "simplified" => AsclVariant::Simplified,
                    other => {
                        return Err(Error::Parse(format!("unknown adaptive variant {other:?}")))
                    }
                };
                Ok(DecoderSpec::Ascl { l_max, variant })
            }
            _ => Err(Error::Parse(format!(
                "decoder spec {s:?}; expected sc, scl:<L> or ascl:<L>:<variant>"
            ))),
        }
    }
}

impl std::fmt::Display for DecoderSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecoderSpec::Sc => write!(f, "sc"),
            DecoderSpec::Scl { list } => write!(f, "scl:{list}"),
            DecoderSpec::Ascl { l_max, variant } => {
                let v = match variant {
                    AsclVariant::Original => "original",
                    AsclVariant::Simplified => "simplified",
                };
                write!(f, "ascl:{l_max}:{v}")
            }
        }
    }
}

/// When to stop simulating one SNR point.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub min_frames: u64,
    pub min_errors: u64,
    /// Truncation cap when the error target is unreachable.
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_frames: 10_000,
            min_errors: 100,
            max_frames: 10_000_000,
        }
    }
}

/// Accumulated results for one SNR point.
#[derive(Debug, Clone)]
pub struct BlerPoint {
    pub snr_db: f64,
    pub frames: u64,
    /// Frames whose selected output differed from the transmitted word.
    pub errors: u64,
    /// Frames where no candidate passed CRC.
    pub crc_fails: u64,
    pub bler: f64,
    pub crc_fail_rate: f64,
    /// 95% confidence half-width on `bler` (normal approximation).
    pub ci95: f64,
    pub truncated: bool,
    /// Mean terminal and mean summed list size (adaptive runs only).
    pub avg_list_terminal: Option<f64>,
    pub avg_list_sum: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameTally {
    frames: u64,
    errors: u64,
    crc_fails: u64,
    list_terminal_sum: u64,
    list_summed_sum: u64,
}

impl FrameTally {
    fn add(&mut self, other: &FrameTally) {
        self.frames += other.frames;
        self.errors += other.errors;
        self.crc_fails += other.crc_fails;
        self.list_terminal_sum += other.list_terminal_sum;
        self.list_summed_sum += other.list_summed_sum;
    }
}

fn simulate_frame(
    code: &PolarCode,
    decoder: DecoderSpec,
    quant: Option<DecoderQuant>,
    snr_db: f64,
    seed: u64,
    frame: u64,
) -> Result<FrameTally> {
    let payload = code.num_info() - code.crc_len();
    let mut msg_rng = substream(seed ^ MESSAGE_TAG, frame);
    let message: Vec<Bit> = (0..payload).map(|_| msg_rng.gen_range(0..2u8)).collect();
    let u = code.attach_crc(&message)?;
    let x = code.encode(&u)?;
    let llr = transmit(
        &x,
        &ChannelConfig {
            ebn0_db: snr_db,
            rate: code.rate(),
            seed,
            frame_index: frame,
        },
    )?;

    let (wrong, crc_fail, terminal, summed) = match decoder {
        DecoderSpec::Sc => {
            if quant.is_some() {
                // Quantized SC is the single-path list decoder.
                let res = scl_decode(&llr, code, 1, quant)?;
                (res.selected_u() != u, !res.passed_crc, 1, 1)
            } else {
                let decoded = sc_decode(&llr, code)?;
                let pass = code.check_crc(&code.extract_info(&decoded));
                (decoded != u, !pass, 1, 1)
            }
        }
        DecoderSpec::Scl { list } => {
            let res = scl_decode(&llr, code, list, quant)?;
            (
                res.selected_u() != u,
                !res.passed_crc,
                list as u64,
                list as u64,
            )
        }
        DecoderSpec::Ascl { l_max, variant } => {
            let (res, attempted) = ascl_decode(&llr, code, l_max, variant)?;
            let terminal = *attempted.last().unwrap() as u64;
            let summed: u64 = attempted.iter().map(|&l| l as u64).sum();
            (res.selected_u() != u, !res.passed_crc, terminal, summed)
        }
    };
    Ok(FrameTally {
        frames: 1,
        errors: wrong as u64,
        crc_fails: crc_fail as u64,
        list_terminal_sum: terminal,
        list_summed_sum: summed,
    })
}

const BATCH: u64 = 1024;

/// Simulates one SNR point until the stopping rule is satisfied.
pub fn run_point(
    code: &PolarCode,
    decoder: DecoderSpec,
    quant: Option<DecoderQuant>,
    snr_db: f64,
    stop: &StopRule,
    seed: u64,
) -> Result<BlerPoint> {
    let mut tally = FrameTally::default();
    let mut truncated = false;
    loop {
        let start = tally.frames;
        let end = (start + BATCH).min(stop.max_frames);
        let batch: Vec<FrameTally> = (start..end)
            .into_par_iter()
            .map(|f| simulate_frame(code, decoder, quant, snr_db, seed, f))
            .collect::<Result<_>>()?;
        for t in &batch {
            tally.add(t);
        }
        let done = tally.frames >= stop.min_frames && tally.errors >= stop.min_errors;
        if done {
            break;
        }
        if tally.frames >= stop.max_frames {
            truncated = true;
            break;
        }
    }
    let n = tally.frames as f64;
    let bler = tally.errors as f64 / n;
    let ci95 = 1.96 * (bler * (1.0 - bler) / n).sqrt();
    let adaptive = matches!(decoder, DecoderSpec::Ascl { .. });
    Ok(BlerPoint {
        snr_db,
        frames: tally.frames,
        errors: tally.errors,
        crc_fails: tally.crc_fails,
        bler,
        crc_fail_rate: tally.crc_fails as f64 / n,
        ci95,
        truncated,
        avg_list_terminal: adaptive.then(|| tally.list_terminal_sum as f64 / n),
        avg_list_sum: adaptive.then(|| tally.list_summed_sum as f64 / n),
    })
}

/// Simulates a whole SNR grid.
pub fn run_bler(
    code: &PolarCode,
    decoder: DecoderSpec,
    quant: Option<DecoderQuant>,
    snr_grid: &[f64],
    stop: &StopRule,
    seed: u64,
) -> Result<Vec<BlerPoint>> {
    let mut grid = snr_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite SNR"));
    grid.iter()
        .map(|&snr| run_point(code, decoder, quant, snr, stop, seed))
        .collect()
}
