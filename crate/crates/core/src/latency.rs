//! Cycle and memory arithmetic for the two component decoders.
//!
//! The fast decoder processes 16-bit sub-codes with special-node
//! shortcuts; its latency is the per-sub-code cycle sum plus the
//! tree-traversal and LLR-loading terms. The slow decoder's cycle
//! components are configuration inputs carried by the presets. The
//! speed gain of the pair is kept as an exact rational.

use serde::{Deserialize, Serialize};

use crate::codec::PolarCode;
use crate::rational::SpeedGain;
use crate::{Error, Result};

/// Merge length of the fast decoder's multi-bit stage. The special-node
/// cycle table is only defined for this value.
pub const MERGE_LEN: usize = 16;

/// Special sub-code patterns decodable in one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialNode {
    /// All frozen.
    Rate0,
    /// All information.
    Rate1,
    /// One information bit.
    Rep,
    /// One frozen bit (single parity check).
    Spc,
    /// Two information bits.
    Rep2,
    /// Two frozen bits.
    Spc2,
}

impl SpecialNode {
    /// Frozen-bit count of the pattern at length `t`.
    pub fn frozen_bits(&self, t: usize) -> usize {
        match self {
            SpecialNode::Rate0 => t,
            SpecialNode::Rate1 => 0,
            SpecialNode::Rep => t - 1,
            SpecialNode::Spc => 1,
            SpecialNode::Rep2 => t - 2,
            SpecialNode::Spc2 => 2,
        }
    }

    pub fn info_bits(&self, t: usize) -> usize {
        t - self.frozen_bits(t)
    }
}

/// Latency group of a 16-bit sub-code (total decode cycles with a
/// two-path list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatencyGroup {
    OneCycle,
    TwoCycle,
    ThreeCycle,
    FourCycle,
}

/// Decomposition of one 16-bit sub-code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcodePattern {
    pub merge_len: usize,
    pub frozen_count: usize,
    pub group: LatencyGroup,
    /// Special nodes (with their lengths) covering the sub-code.
    pub special_nodes: Vec<(SpecialNode, usize)>,
}

impl SubcodePattern {
    /// Canonical pattern for a 16-bit sub-code with `frozen_count`
    /// frozen bits, treating the frozen bits as the leading positions.
    pub fn from_frozen_count(frozen_count: usize) -> Result<Self> {
        if frozen_count > MERGE_LEN {
            return Err(Error::InvalidParameter(format!(
                "frozen count {frozen_count} exceeds sub-code length"
            )));
        }
        let mut nodes = Vec::new();
        decompose(MERGE_LEN, frozen_count, &mut nodes);
        let cycles = m_sn(frozen_count, MERGE_LEN)? + c_sort(frozen_count, 2, MERGE_LEN)?;
        let group = match cycles {
            1 => LatencyGroup::OneCycle,
            2 => LatencyGroup::TwoCycle,
            3 => LatencyGroup::ThreeCycle,
            4 => LatencyGroup::FourCycle,
            _ => unreachable!("cycle count is 1..=4"),
        };
        Ok(Self {
            merge_len: MERGE_LEN,
            frozen_count,
            group,
            special_nodes: nodes,
        })
    }
}

/// Splits a length-`t` block with `f` leading frozen bits into special
/// nodes. Rep2/SPC2 match only at t = 16 and t = 4.
fn decompose(t: usize, f: usize, out: &mut Vec<(SpecialNode, usize)>) {
    let two_bit_ok = t == MERGE_LEN || t == 4;
    let node = if f == t {
        Some(SpecialNode::Rate0)
    } else if f == 0 {
        Some(SpecialNode::Rate1)
    } else if f == t - 1 {
        Some(SpecialNode::Rep)
    } else if f == 1 {
        Some(SpecialNode::Spc)
    } else if f == t - 2 && two_bit_ok {
        Some(SpecialNode::Rep2)
    } else if f == 2 && two_bit_ok {
        Some(SpecialNode::Spc2)
    } else {
        None
    };
    match node {
        Some(n) => out.push((n, t)),
        None => {
            let half = t / 2;
            let f_left = f.min(half);
            decompose(half, f_left, out);
            decompose(half, f - f_left, out);
        }
    }
}

/// Special-node count of a 16-bit sub-code with `f` frozen bits; equals
/// its multi-bit decode cycles before sorting.
pub fn m_sn(f: usize, merge_len: usize) -> Result<u64> {
    if merge_len != MERGE_LEN {
        return Err(Error::Unsupported(format!(
            "special-node cycle table is defined for merge length {MERGE_LEN}, not {merge_len}"
        )));
    }
    if f > merge_len {
        return Err(Error::InvalidParameter(format!(
            "frozen count {f} exceeds sub-code length"
        )));
    }
    Ok(match f {
        0 | 1 | 2 | 14 | 15 | 16 => 1,
        7 | 8 | 9 => 2,
        _ => 3,
    })
}

/// Sorting cycles after a sub-code: with a two-path list, one cycle
/// unless the sub-code is all-frozen or all-information; a single path
/// never sorts.
pub fn c_sort(f: usize, list_size: usize, merge_len: usize) -> Result<u64> {
    if f > merge_len {
        return Err(Error::InvalidParameter(format!(
            "frozen count {f} exceeds sub-code length"
        )));
    }
    match list_size {
        1 => Ok(0),
        2 => Ok(if f == 0 || f == merge_len { 0 } else { 1 }),
        other => Err(Error::Unsupported(format!(
            "fast-decoder latency is defined for list sizes 1 and 2, not {other}"
        ))),
    }
}

/// Sub-code counts per latency group (16-bit sub-codes; group = total
/// decode cycles with a two-path list).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub one_cycle: u64,
    pub two_cycle: u64,
    pub three_cycle: u64,
    pub four_cycle: u64,
}

impl GroupCounts {
    pub fn total(&self) -> u64 {
        self.one_cycle + self.two_cycle + self.three_cycle + self.four_cycle
    }

    /// Multi-bit decode cycles for the given list size.
    fn mbd_cycles(&self, list_size: usize) -> Result<u64> {
        match list_size {
            2 => Ok(self.one_cycle + 2 * self.two_cycle + 3 * self.three_cycle
                + 4 * self.four_cycle),
            // Without sorting every group loses its sort cycle except
            // the first, which never had one.
            1 => Ok(self.one_cycle + self.two_cycle + 2 * self.three_cycle
                + 3 * self.four_cycle),
            other => Err(Error::Unsupported(format!(
                "fast-decoder latency is defined for list sizes 1 and 2, not {other}"
            ))),
        }
    }
}

/// Cycle breakdown of the fast decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsLatency {
    /// Multi-bit decoding of the 16-bit sub-codes.
    pub c_mbd: u64,
    /// Tree traversal above the merge stage: N/16 - 1.
    pub c_scd: u64,
    /// LLR loading: N / (2P).
    pub c_rw: u64,
    /// Total: c_mbd + c_scd + c_rw.
    pub c_s: u64,
}

fn ds_latency_common(c_mbd: u64, n: usize, parallelism: usize) -> Result<DsLatency> {
    if n % MERGE_LEN != 0 {
        return Err(Error::InvalidParameter(format!(
            "N={n} not divisible by merge length {MERGE_LEN}"
        )));
    }
    if parallelism == 0 || n % (2 * parallelism) != 0 {
        return Err(Error::InvalidParameter(format!(
            "N={n} not divisible by 2P={}",
            2 * parallelism
        )));
    }
    let c_scd = (n / MERGE_LEN - 1) as u64;
    let c_rw = (n / (2 * parallelism)) as u64;
    Ok(DsLatency {
        c_mbd,
        c_scd,
        c_rw,
        c_s: c_mbd + c_scd + c_rw,
    })
}

/// Fast-decoder latency from explicit group counts.
pub fn ds_latency_from_groups(
    groups: &GroupCounts,
    n: usize,
    parallelism: usize,
    list_size: usize,
) -> Result<DsLatency> {
    if groups.total() as usize != n / MERGE_LEN {
        return Err(Error::InvalidParameter(format!(
            "group counts sum to {} but N/16 = {}",
            groups.total(),
            n / MERGE_LEN
        )));
    }
    ds_latency_common(groups.mbd_cycles(list_size)?, n, parallelism)
}

/// Fast-decoder latency derived from a code's frozen set.
pub fn ds_latency_from_code(
    code: &PolarCode,
    merge_len: usize,
    parallelism: usize,
    list_size: usize,
) -> Result<DsLatency> {
    if merge_len != MERGE_LEN {
        return Err(Error::Unsupported(format!(
            "special-node cycle table is defined for merge length {MERGE_LEN}, not {merge_len}"
        )));
    }
    let n = code.block_len();
    let mut c_mbd = 0u64;
    for f in code.frozen_counts(MERGE_LEN)? {
        c_mbd += m_sn(f, MERGE_LEN)? + c_sort(f, list_size, MERGE_LEN)?;
    }
    ds_latency_common(c_mbd, n, parallelism)
}

/// Latency groups of a code's 16-bit sub-codes.
pub fn group_counts_from_code(code: &PolarCode) -> Result<GroupCounts> {
    let mut g = GroupCounts {
        one_cycle: 0,
        two_cycle: 0,
        three_cycle: 0,
        four_cycle: 0,
    };
    for f in code.frozen_counts(MERGE_LEN)? {
        match SubcodePattern::from_frozen_count(f)?.group {
            LatencyGroup::OneCycle => g.one_cycle += 1,
            LatencyGroup::TwoCycle => g.two_cycle += 1,
            LatencyGroup::ThreeCycle => g.three_cycle += 1,
            LatencyGroup::FourCycle => g.four_cycle += 1,
        }
    }
    Ok(g)
}

/// Cycle components of the slow decoder. These come from its pipeline
/// configuration and are treated as inputs here; the fine-grained and
/// all-zero terms are credits, hence signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DlParts {
    pub c_lm: i64,
    pub c_scd: i64,
    pub c_fine: i64,
    pub c_zero: i64,
}

/// Total latency of the slow decoder.
pub fn dl_latency(parts: &DlParts) -> Result<u64> {
    let total = parts.c_lm + parts.c_scd + parts.c_fine + parts.c_zero;
    u64::try_from(total).map_err(|_| {
        Error::InvalidParameter(format!("slow-decoder cycle components sum to {total}"))
    })
}

/// Speed gain as a reduced rational, exact when the denominator fits
/// within `max_denominator` and conservatively rounded up otherwise.
pub fn speed_gain(c_l: u64, c_s: u64, max_denominator: u64) -> Result<SpeedGain> {
    SpeedGain::from_cycles_bounded(c_l, c_s, max_denominator)
}

/// Memory footprint split into the slow decoder and everything added
/// around it (fast decoder, LLR buffer, output buffer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryEstimate {
    pub dl_bits: u64,
    pub other_bits: u64,
    /// other / dl.
    pub overhead_ratio: f64,
}

/// Evaluates the two memory formulas.
///
/// Slow decoder: `[(L_l + 1)N + 3 L_l P] Q + L_l 3N/2`.
/// Everything else: `(zeta + L_s + 5/2) N Q + (floor(beta(zeta+1)) + 1 + 3 L_s / 2) N`.
#[allow(clippy::too_many_arguments)]
pub fn memory_estimate(
    n: usize,
    q: u32,
    l_s: usize,
    l_l: usize,
    parallelism: usize,
    beta: SpeedGain,
    zeta: u64,
) -> Result<MemoryEstimate> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter("N must be even".into()));
    }
    let (n, q, l_s, l_l, p) = (n as u64, q as u64, l_s as u64, l_l as u64, parallelism as u64);
    let dl_bits = ((l_l + 1) * n + 3 * l_l * p) * q + l_l * 3 * n / 2;
    let out_frames = output_buffer_frames(beta, zeta);
    let other_bits = ((2 * (zeta + l_s) + 5) * n * q + (2 * out_frames + 3 * l_s) * n) / 2;
    Ok(MemoryEstimate {
        dl_bits,
        other_bits,
        overhead_ratio: other_bits as f64 / dl_bits as f64,
    })
}

/// Frames the output buffer must hold: `floor(beta*zeta + beta + 1)`.
pub fn output_buffer_frames(beta: SpeedGain, zeta: u64) -> u64 {
    beta.mul_int_floor(zeta + 1) + 1
}

/// Constant system latency in cycles: `C_s + C_s (beta zeta + beta) + C_rw`,
/// rounded up to whole cycles when the product is fractional.
pub fn system_latency(c_s: u64, c_rw: u64, beta: SpeedGain, zeta: u64) -> u64 {
    c_s + beta.mul_int_ceil(c_s * (zeta + 1)) + c_rw
}

/// Reference configurations for the three published code settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub n_exponent: u32,
    pub block_len: usize,
    pub k: usize,
    pub r: u32,
    /// Reliable-bit budget of the slow decoder's sorter.
    pub reliable_set_size: usize,
    pub groups: GroupCounts,
    pub dl: DlParts,
    pub m_l: usize,
    pub parallelism: usize,
    pub l_s: usize,
    pub l_l: usize,
    pub q_llr: u32,
    pub q_pm: u32,
    /// Published totals, used to cross-check the arithmetic.
    pub cs_published: u64,
    pub cl_published: u64,
    /// Published fast-decoder total for a single-path list, where given.
    pub cs_l1_published: Option<u64>,
}

impl Preset {
    pub fn by_name(name: &str) -> Result<Preset> {
        match name.to_ascii_lowercase().as_str() {
            "p1" => Ok(Preset {
                name: "p1".into(),
                n_exponent: 10,
                block_len: 1024,
                k: 512,
                r: 24,
                reliable_set_size: 360,
                groups: GroupCounts {
                    one_cycle: 32,
                    two_cycle: 13,
                    three_cycle: 2,
                    four_cycle: 17,
                },
                dl: DlParts {
                    c_lm: 520,
                    c_scd: 296,
                    c_fine: -128,
                    c_zero: -41,
                },
                m_l: 4,
                parallelism: 64,
                l_s: 2,
                l_l: 32,
                q_llr: 6,
                q_pm: 8,
                cs_published: 203,
                cl_published: 647,
                cs_l1_published: Some(170),
            }),
            "p2" => Ok(Preset {
                name: "p2".into(),
                n_exponent: 10,
                block_len: 1024,
                k: 768,
                r: 24,
                reliable_set_size: 622,
                groups: GroupCounts {
                    one_cycle: 38,
                    two_cycle: 12,
                    three_cycle: 2,
                    four_cycle: 12,
                },
                dl: DlParts {
                    c_lm: 501,
                    c_scd: 296,
                    c_fine: -128,
                    c_zero: -18,
                },
                m_l: 4,
                parallelism: 64,
                l_s: 2,
                l_l: 32,
                q_llr: 6,
                q_pm: 8,
                cs_published: 187,
                cl_published: 651,
                cs_l1_published: None,
            }),
            "p3" => Ok(Preset {
                name: "p3".into(),
                n_exponent: 8,
                block_len: 256,
                k: 128,
                r: 8,
                reliable_set_size: 78,
                groups: GroupCounts {
                    one_cycle: 6,
                    two_cycle: 4,
                    three_cycle: 2,
                    four_cycle: 4,
                },
                dl: DlParts {
                    c_lm: 152,
                    c_scd: 66,
                    c_fine: -32,
                    c_zero: -18,
                },
                m_l: 4,
                parallelism: 64,
                l_s: 2,
                l_l: 32,
                q_llr: 6,
                q_pm: 8,
                cs_published: 53,
                cl_published: 168,
                cs_l1_published: None,
            }),
            other => Err(Error::InvalidParameter(format!("unknown preset {other:?}"))),
        }
    }

    pub fn names() -> [&'static str; 3] {
        ["p1", "p2", "p3"]
    }

    pub fn ds_latency(&self, list_size: usize) -> Result<DsLatency> {
        ds_latency_from_groups(&self.groups, self.block_len, self.parallelism, list_size)
    }

    pub fn dl_latency(&self) -> Result<u64> {
        dl_latency(&self.dl)
    }

    /// Exact speed gain of the pair at the preset's list size.
    pub fn speed_gain(&self) -> Result<SpeedGain> {
        let ds = self.ds_latency(self.l_s)?;
        speed_gain(self.dl_latency()?, ds.c_s, u64::MAX)
    }
}
