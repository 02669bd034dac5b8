//! SC, SCL and adaptive SCL decoding.
//!
//! All decoders use the hardware-friendly min-sum node functions and
//! path-metric update: keeping the sign-indicated decision costs
//! nothing, contradicting it costs the LLR magnitude. Under these rules
//! the final metric of a full path equals the correlation discrepancy
//! between its codeword and the channel hard decisions, which the tests
//! exploit as an independent oracle.

use crate::channel::QuantSpec;
use crate::codec::{polar_transform, Bit, PolarCode};
use crate::{Error, Result};

/// Sign indicator: 0 for a positive LLR, 1 otherwise.
#[inline]
pub fn theta(llr: f64) -> Bit {
    if llr > 0.0 {
        0
    } else {
        1
    }
}

/// Min-sum F-function.
#[inline]
pub fn f_node(la: f64, lb: f64) -> f64 {
    let sign = if theta(la) ^ theta(lb) == 1 { -1.0 } else { 1.0 };
    sign * la.abs().min(lb.abs())
}

/// G-function: adds or subtracts `la` according to the partial sum.
#[inline]
pub fn g_node(la: f64, lb: f64, ps: Bit) -> f64 {
    if ps == 1 {
        lb - la
    } else {
        la + lb
    }
}

/// Hard decision for bit `i`: frozen bits are always 0.
#[inline]
pub fn hard_decision(llr: f64, i: usize, code: &PolarCode) -> Bit {
    if code.is_frozen(i) {
        0
    } else {
        theta(llr)
    }
}

/// Partial sums consumed by a stage-`s` G-node after bit `j` was
/// decoded: the last `2^s` decoded bits re-encoded by the stage-`s`
/// transform.
pub fn update_partial_sums(decoded: &[Bit], j: usize, s: u32) -> Result<Vec<Bit>> {
    let len = 1usize << s;
    if j + 1 < len || j >= decoded.len() {
        return Err(Error::InvalidParameter(format!(
            "need {len} decoded bits ending at index {j}"
        )));
    }
    let mut ps = decoded[j + 1 - len..=j].to_vec();
    polar_transform(&mut ps);
    Ok(ps)
}

/// Quantizers for a fixed-point decoder: one for LLR values, one for
/// path metrics.
#[derive(Debug, Clone, Copy)]
pub struct DecoderQuant {
    pub llr: QuantSpec,
    pub pm: QuantSpec,
}

/// One surviving decode hypothesis.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// Full source word (frozen positions zero).
    pub u: Vec<Bit>,
    pub metric: f64,
    pub crc_pass: bool,
}

/// Outcome of a list decode, candidates sorted by ascending metric.
#[derive(Debug, Clone)]
pub struct SclDecodeResult {
    pub candidates: Vec<Candidate>,
    /// Index of the output candidate: the best CRC-passing path if any,
    /// the best path otherwise.
    pub selected: usize,
    pub passed_crc: bool,
    /// Path-metric saturation events (fixed-point mode only).
    pub pm_saturations: u64,
}

impl SclDecodeResult {
    pub fn selected_u(&self) -> &[Bit] {
        &self.candidates[self.selected].u
    }

    pub fn selected_info(&self, code: &PolarCode) -> Vec<Bit> {
        code.extract_info(self.selected_u())
    }

    pub fn best_metric(&self) -> f64 {
        self.candidates[0].metric
    }
}

/// Successive cancellation. Equivalent to a list size of one, but
/// implemented as a plain depth-first recursion with no path machinery.
pub fn sc_decode(llr: &[f64], code: &PolarCode) -> Result<Vec<Bit>> {
    if llr.len() != code.block_len() {
        return Err(Error::InvalidParameter(format!(
            "LLR length {} != N={}",
            llr.len(),
            code.block_len()
        )));
    }
    fn rec(llr: &[f64], base: usize, code: &PolarCode) -> Vec<Bit> {
        if llr.len() == 1 {
            return vec![hard_decision(llr[0], base, code)];
        }
        let half = llr.len() / 2;
        let f: Vec<f64> = (0..half).map(|i| f_node(llr[i], llr[i + half])).collect();
        let left = rec(&f, base, code);
        let mut ps = left.clone();
        polar_transform(&mut ps);
        let g: Vec<f64> = (0..half)
            .map(|i| g_node(llr[i], llr[i + half], ps[i]))
            .collect();
        let right = rec(&g, base + half, code);
        let mut u = left;
        u.extend(right);
        u
    }
    Ok(rec(llr, 0, code))
}

/// Per-path decoder state. Stage buffers use a heap layout: the LLRs of
/// the current stage-`s` node sit at `buf[2^s .. 2^(s+1)]` for `s < n`;
/// stage `n` is the shared channel vector held by the engine.
#[derive(Clone)]
struct Path {
    buf: Vec<f64>,
    u: Vec<Bit>,
    metric: f64,
    saturations: u64,
}

impl Path {
    fn new(block_len: usize) -> Self {
        Self {
            buf: vec![0.0; block_len],
            u: vec![0; block_len],
            metric: 0.0,
            saturations: 0,
        }
    }
}

/// A branch produced by expanding one path at an information bit.
#[derive(Debug, Clone, Copy)]
struct BranchChoice {
    parent: usize,
    flip: bool,
    metric: f64,
    saturated: bool,
}

/// Indices of the branches kept by list pruning: exactly the `keep`
/// smallest metrics, ties broken by (parent path index, natural before
/// flipped). Deterministic for reproducible traces.
fn prune_order(branches: &[BranchChoice], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..branches.len()).collect();
    order.sort_by(|&a, &b| {
        let ba = &branches[a];
        let bb = &branches[b];
        ba.metric
            .partial_cmp(&bb.metric)
            .expect("metrics are never NaN")
            .then(ba.parent.cmp(&bb.parent))
            .then(ba.flip.cmp(&bb.flip))
    });
    order.truncate(keep);
    order
}

struct Engine<'a> {
    code: &'a PolarCode,
    channel: Vec<f64>,
    list_size: usize,
    quant: Option<DecoderQuant>,
    paths: Vec<Path>,
}

/// Metric update with optional unsigned fixed-point saturation.
fn add_penalty(quant: Option<&DecoderQuant>, metric: f64, penalty: f64) -> (f64, bool) {
    let m = metric + penalty;
    match quant {
        Some(q) => q.pm.quantize_unsigned(m),
        None => (m, false),
    }
}

impl Engine<'_> {
    /// Decodes the sub-tree whose leaves are bits `[base, base + 2^stage)`.
    fn node(&mut self, stage: u32, base: usize) {
        if stage == 0 {
            self.leaf(base);
            return;
        }
        let half = 1usize << (stage - 1);
        let is_root = stage == self.code.exponent();

        // F step feeds the left child.
        let quant = self.quant;
        for p in &mut self.paths {
            let (lo, hi) = p.buf.split_at_mut(2 * half);
            let input: &[f64] = if is_root { &self.channel } else { &hi[..2 * half] };
            for i in 0..half {
                let mut v = f_node(input[i], input[i + half]);
                if let Some(q) = &quant {
                    v = q.llr.quantize(v);
                }
                lo[half + i] = v;
            }
        }
        self.node(stage - 1, base);

        // G step feeds the right child using the partial sums of the
        // decoded left half.
        for p in &mut self.paths {
            let mut ps = p.u[base..base + half].to_vec();
            polar_transform(&mut ps);
            let (lo, hi) = p.buf.split_at_mut(2 * half);
            let input: &[f64] = if is_root { &self.channel } else { &hi[..2 * half] };
            for i in 0..half {
                let mut v = g_node(input[i], input[i + half], ps[i]);
                if let Some(q) = &quant {
                    v = q.llr.quantize(v);
                }
                lo[half + i] = v;
            }
        }
        self.node(stage - 1, base + half);
    }

    /// Stage-0 decision for bit `i`. The leaf LLR lives at `buf[1]`.
    fn leaf(&mut self, i: usize) {
        let quant = self.quant;
        if self.code.is_frozen(i) {
            for p in &mut self.paths {
                let lambda = p.buf[1];
                if theta(lambda) == 1 {
                    let (m, sat) = add_penalty(quant.as_ref(), p.metric, lambda.abs());
                    p.metric = m;
                    if sat {
                        p.saturations += 1;
                    }
                }
                p.u[i] = 0;
            }
            return;
        }

        let mut branches = Vec::with_capacity(2 * self.paths.len());
        for (idx, p) in self.paths.iter().enumerate() {
            let lambda = p.buf[1];
            branches.push(BranchChoice {
                parent: idx,
                flip: false,
                metric: p.metric,
                saturated: false,
            });
            let (metric, saturated) = add_penalty(quant.as_ref(), p.metric, lambda.abs());
            branches.push(BranchChoice {
                parent: idx,
                flip: true,
                metric,
                saturated,
            });
        }

        let kept = prune_order(&branches, self.list_size);
        let mut next = Vec::with_capacity(kept.len());
        for &b in &kept {
            let br = branches[b];
            let parent = &self.paths[br.parent];
            let mut child = parent.clone();
            let natural = theta(parent.buf[1]);
            child.u[i] = if br.flip { 1 - natural } else { natural };
            child.metric = br.metric;
            if br.saturated {
                child.saturations += 1;
            }
            next.push(child);
        }
        self.paths = next;
    }
}

/// CRC-aided successive cancellation list decoding.
pub fn scl_decode(
    llr: &[f64],
    code: &PolarCode,
    list_size: usize,
    quant: Option<DecoderQuant>,
) -> Result<SclDecodeResult> {
    if llr.len() != code.block_len() {
        return Err(Error::InvalidParameter(format!(
            "LLR length {} != N={}",
            llr.len(),
            code.block_len()
        )));
    }
    if list_size == 0 {
        return Err(Error::InvalidParameter("list size must be >= 1".into()));
    }
    let channel: Vec<f64> = match &quant {
        Some(q) => llr.iter().map(|&v| q.llr.quantize(v)).collect(),
        None => llr.to_vec(),
    };
    let mut engine = Engine {
        code,
        channel,
        list_size,
        quant,
        paths: vec![Path::new(code.block_len())],
    };
    engine.run_checked()?;

    let mut order: Vec<usize> = (0..engine.paths.len()).collect();
    order.sort_by(|&a, &b| {
        engine.paths[a]
            .metric
            .partial_cmp(&engine.paths[b].metric)
            .expect("metrics are never NaN")
            .then(a.cmp(&b))
    });
    let mut pm_saturations = 0;
    let mut candidates = Vec::with_capacity(order.len());
    for &idx in &order {
        let p = &engine.paths[idx];
        pm_saturations += p.saturations;
        let crc_pass = code.check_crc(&code.extract_info(&p.u));
        candidates.push(Candidate {
            u: p.u.clone(),
            metric: p.metric,
            crc_pass,
        });
    }
    let selected = candidates.iter().position(|c| c.crc_pass).unwrap_or(0);
    let passed_crc = candidates[selected].crc_pass;
    Ok(SclDecodeResult {
        candidates,
        selected,
        passed_crc,
        pm_saturations,
    })
}

impl Engine<'_> {
    fn run_checked(&mut self) -> Result<()> {
        if self.code.block_len() == 1 {
            // Degenerate N=1 code: single hard decision.
            let lambda = self.channel[0];
            let p = &mut self.paths[0];
            p.buf = vec![0.0, lambda];
            self.leaf(0);
            return Ok(());
        }
        self.node(self.code.exponent(), 0);
        Ok(())
    }
}

/// Which adaptive retry ladder to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsclVariant {
    /// Doubles the list size after each CRC failure: 1, 2, 4, ..., max.
    Original,
    /// One single-path attempt, then the maximum list size.
    Simplified,
}

/// Adaptive SCL: retries with growing list sizes until a candidate
/// passes CRC or the cap is reached. Returns the final decode and the
/// list sizes attempted.
pub fn ascl_decode(
    llr: &[f64],
    code: &PolarCode,
    l_max: usize,
    variant: AsclVariant,
) -> Result<(SclDecodeResult, Vec<usize>)> {
    if l_max == 0 {
        return Err(Error::InvalidParameter("list size cap must be >= 1".into()));
    }
    if variant == AsclVariant::Original && !l_max.is_power_of_two() {
        return Err(Error::InvalidParameter(
            "original adaptive SCL needs a power-of-two cap".into(),
        ));
    }
    let mut attempted = Vec::new();
    let mut l = 1;
    loop {
        attempted.push(l);
        let result = scl_decode(llr, code, l, None)?;
        if result.passed_crc || l == l_max {
            return Ok((result, attempted));
        }
        l = match variant {
            AsclVariant::Original => (2 * l).min(l_max),
            AsclVariant::Simplified => l_max,
        };
    }
}
