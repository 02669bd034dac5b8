//! Exact Markov-chain model of the two-staged scheduler.
//!
//! The state is the total time (in fast-decoder periods) needed to clear
//! the LLR buffer and the slow decoder's current frame. With speed gain
//! `beta = beta_n/beta_d` (coprime) and buffer size `zeta`, the state
//! lattice has spacing `1/beta_d` and `S = beta_n*zeta + beta_n + 1`
//! points. States are indexed by `k` with value `X = k/beta_d`.
//!
//! Classes and one-period transitions:
//!
//! * idle (`X <= 1`): the slow decoder drains during the period; a
//!   failure restarts it at `X = beta`, success lands at 0;
//! * safe (`1 < X <= beta*zeta + 1`): failure moves to `X + beta - 1`,
//!   success to `X - 1`;
//! * hazard (`X > beta*zeta + 1`): the buffer cannot take another
//!   frame; a failure overflows and the state moves to `X - 1` either way.

use serde::{Deserialize, Serialize};

use crate::rational::{gcd, SpeedGain};
use crate::{Error, Result};

/// Design parameters of a two-staged decoder pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TasclParams {
    beta_num: u64,
    beta_den: u64,
    zeta: u64,
    eps_s: f64,
    eps_l: f64,
}

impl TasclParams {
    /// `beta_num/beta_den` must already be in lowest terms; non-coprime
    /// pairs describe a chain with unreachable states and are rejected.
    pub fn new(beta_num: u64, beta_den: u64, zeta: u64, eps_s: f64, eps_l: f64) -> Result<Self> {
        if beta_num == 0 || beta_den == 0 {
            return Err(Error::InvalidParameter(
                "speed gain parts must be positive".into(),
            ));
        }
        if gcd(beta_num, beta_den) != 1 {
            return Err(Error::InvalidParameter(format!(
                "speed gain {beta_num}/{beta_den} is not in lowest terms; call reduce_states first"
            )));
        }
        if beta_num < beta_den {
            return Err(Error::InvalidParameter(
                "speed gain below 1 never overflows; the chain model needs beta >= 1".into(),
            ));
        }
        if zeta == 0 {
            return Err(Error::InvalidParameter("buffer size must be >= 1".into()));
        }
        for (name, p) in [("eps_s", eps_s), ("eps_l", eps_l)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name}={p} is not a probability"
                )));
            }
        }
        Ok(Self {
            beta_num,
            beta_den,
            zeta,
            eps_s,
            eps_l,
        })
    }

    pub fn from_speed_gain(beta: SpeedGain, zeta: u64, eps_s: f64, eps_l: f64) -> Result<Self> {
        Self::new(beta.num(), beta.den(), zeta, eps_s, eps_l)
    }

    pub fn beta(&self) -> SpeedGain {
        SpeedGain::new(self.beta_num, self.beta_den).expect("validated")
    }

    pub fn beta_num(&self) -> u64 {
        self.beta_num
    }

    pub fn beta_den(&self) -> u64 {
        self.beta_den
    }

    pub fn zeta(&self) -> u64 {
        self.zeta
    }

    pub fn eps_s(&self) -> f64 {
        self.eps_s
    }

    pub fn eps_l(&self) -> f64 {
        self.eps_l
    }

    pub fn with_eps(&self, eps_s: f64, eps_l: f64) -> Result<Self> {
        Self::new(self.beta_num, self.beta_den, self.zeta, eps_s, eps_l)
    }

    /// State count `S = beta_n * zeta + beta_n + 1`.
    pub fn state_count(&self) -> usize {
        (self.beta_num * self.zeta + self.beta_num + 1) as usize
    }
}

/// Reduces a raw speed-gain pair to lowest terms.
pub fn reduce_states(
    beta_num: u64,
    beta_den: u64,
    zeta: u64,
    eps_s: f64,
    eps_l: f64,
) -> Result<TasclParams> {
    if beta_num == 0 || beta_den == 0 {
        return Err(Error::InvalidParameter(
            "speed gain parts must be positive".into(),
        ));
    }
    let g = gcd(beta_num, beta_den);
    TasclParams::new(beta_num / g, beta_den / g, zeta, eps_s, eps_l)
}

/// Whether a state can absorb one more fast-decoder failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateClass {
    Idle,
    Safe,
    Hazard,
}

/// The enumerated chain: classes and a dense row-stochastic matrix.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    params: TasclParams,
    size: usize,
    classes: Vec<StateClass>,
    p: Vec<f64>,
}

impl MarkovModel {
    pub fn params(&self) -> &TasclParams {
        &self.params
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Value `X = k / beta_d` of state `k`.
    pub fn state_value(&self, k: usize) -> f64 {
        k as f64 / self.params.beta_den as f64
    }

    pub fn class(&self, k: usize) -> StateClass {
        self.classes[k]
    }

    pub fn classes(&self) -> &[StateClass] {
        &self.classes
    }

    /// (idle, safe, hazard) state counts.
    pub fn class_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for class in &self.classes {
            match class {
                StateClass::Idle => c.0 += 1,
                StateClass::Safe => c.1 += 1,
                StateClass::Hazard => c.2 += 1,
            }
        }
        c
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.p[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.p[from * self.size..(from + 1) * self.size]
    }

    /// Successor state for one period: `k` after draining `beta_d`
    /// sub-periods of work, plus `beta_n` if a failed frame was queued.
    fn successors(&self, k: usize) -> ((usize, f64), (usize, f64)) {
        successors(&self.params, self.classes[k], k)
    }
}

pub(crate) fn class_of(params: &TasclParams, k: usize) -> StateClass {
    let k = k as u64;
    if k <= params.beta_den {
        StateClass::Idle
    } else if k > params.beta_num * params.zeta + params.beta_den {
        StateClass::Hazard
    } else {
        StateClass::Safe
    }
}

/// ((success target, prob), (failure target, prob)) for one state.
pub(crate) fn successors(
    params: &TasclParams,
    class: StateClass,
    k: usize,
) -> ((usize, f64), (usize, f64)) {
    let eps = params.eps_s;
    let bn = params.beta_num as usize;
    let bd = params.beta_den as usize;
    match class {
        StateClass::Idle => ((0, 1.0 - eps), (bn, eps)),
        StateClass::Safe => ((k - bd, 1.0 - eps), (k + bn - bd, eps)),
        StateClass::Hazard => ((k - bd, 1.0 - eps), (k - bd, eps)),
    }
}

fn build_unchecked(params: TasclParams) -> MarkovModel {
    let size = params.state_count();
    let classes: Vec<StateClass> = (0..size).map(|k| class_of(&params, k)).collect();
    let mut p = vec![0.0; size * size];
    for k in 0..size {
        let ((ok, p_ok), (fail, p_fail)) = successors(&params, classes[k], k);
        p[k * size + ok] += p_ok;
        p[k * size + fail] += p_fail;
    }
    MarkovModel {
        params,
        size,
        classes,
        p,
    }
}

/// Enumerates the states and builds the transition matrix.
pub fn build_model(params: &TasclParams) -> Result<MarkovModel> {
    Ok(build_unchecked(*params))
}

/// Raw construction that skips the lowest-terms requirement; the
/// resulting chain contains unreachable states. Test-only.
#[cfg(test)]
pub(crate) fn build_model_raw(
    beta_num: u64,
    beta_den: u64,
    zeta: u64,
    eps_s: f64,
    eps_l: f64,
) -> MarkovModel {
    build_unchecked(TasclParams {
        beta_num,
        beta_den,
        zeta,
        eps_s,
        eps_l,
    })
}

/// Stationary distribution and the quantities derived from it.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub pi: Vec<f64>,
    pub pr_hazard: f64,
    /// `eps_s * Pr(hazard)`.
    pub pr_overflow: f64,
    /// `eps_l + Pr(overflow)`.
    pub bler_upper: f64,
    /// `(bler_upper - eps_l) / eps_l`.
    pub delta_loss: f64,
}

fn mat_mul(a: &[f64], b: &[f64], size: usize) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    for i in 0..size {
        let row = &a[i * size..(i + 1) * size];
        let out_row = &mut out[i * size..(i + 1) * size];
        for (k, &aik) in row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let b_row = &b[k * size..(k + 1) * size];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// Largest disagreement between any row and row 0.
fn row_spread(p: &[f64], size: usize) -> f64 {
    let first = &p[..size];
    let mut spread: f64 = 0.0;
    for i in 1..size {
        for (a, b) in p[i * size..(i + 1) * size].iter().zip(first) {
            spread = spread.max((a - b).abs());
        }
    }
    spread
}

/// Above this size the dense limit-matrix squaring gives way to sparse
/// power iteration; each row has at most two nonzero entries.
const DENSE_SQUARING_LIMIT: usize = 600;

/// Limit matrix `P_inf` by repeated squaring, to row agreement below
/// `tol`.
fn limit_matrix(model: &MarkovModel, tol: f64) -> Result<Vec<f64>> {
    let size = model.size;
    let mut m = model.p.clone();
    for _ in 0..64 {
        if row_spread(&m, size) < tol {
            return Ok(m);
        }
        m = mat_mul(&m, &m, size);
    }
    Err(Error::NoConvergence(format!(
        "chain did not reach a rank-one limit (spread {:.3e}); eps_s={} may be degenerate",
        row_spread(&m, size),
        model.params.eps_s
    )))
}

/// Sparse power iteration using the two-successor row structure;
/// converges when the per-step change stays below `tol` for a stretch
/// of iterations.
fn iterate_sparse(model: &MarkovModel, start: &[f64], tol: f64) -> Result<Vec<f64>> {
    let size = model.size;
    let succ: Vec<((usize, f64), (usize, f64))> =
        (0..size).map(|k| model.successors(k)).collect();
    let mut cur = start.to_vec();
    let mut next = vec![0.0f64; size];
    let mut quiet = 0u32;
    for _ in 0..20_000_000u64 {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (k, ((ok, p_ok), (fail, p_fail))) in succ.iter().enumerate() {
            let mass = cur[k];
            if mass == 0.0 {
                continue;
            }
            next[*ok] += mass * p_ok;
            next[*fail] += mass * p_fail;
        }
        let change = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut cur, &mut next);
        if change < tol {
            quiet += 1;
            if quiet >= 256 {
                let total: f64 = cur.iter().sum();
                cur.iter_mut().for_each(|v| *v /= total);
                return Ok(cur);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NoConvergence(
        "sparse power iteration hit its step cap".into(),
    ))
}

/// Solves for the stationary distribution starting from state 0.
pub fn stationary(model: &MarkovModel, tol: f64) -> Result<StationaryResult> {
    let pi = if model.size <= DENSE_SQUARING_LIMIT {
        limit_matrix(model, tol)?[..model.size].to_vec()
    } else {
        let mut e0 = vec![0.0; model.size];
        e0[0] = 1.0;
        iterate_sparse(model, &e0, tol)?
    };
    Ok(finish(model, pi))
}

/// Stationary distribution reached from an arbitrary start `lambda0`.
/// Converges to the same result as [`stationary`] for any distribution.
pub fn stationary_from(model: &MarkovModel, lambda0: &[f64], tol: f64) -> Result<Vec<f64>> {
    if lambda0.len() != model.size {
        return Err(Error::InvalidParameter(format!(
            "start distribution has {} entries, model has {}",
            lambda0.len(),
            model.size
        )));
    }
    if model.size > DENSE_SQUARING_LIMIT {
        return iterate_sparse(model, lambda0, tol);
    }
    let p_inf = limit_matrix(model, tol)?;
    let size = model.size;
    let mut pi = vec![0.0; size];
    for (i, &w) in lambda0.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, &v) in pi.iter_mut().zip(&p_inf[i * size..(i + 1) * size]) {
            *o += w * v;
        }
    }
    Ok(pi)
}

fn finish(model: &MarkovModel, pi: Vec<f64>) -> StationaryResult {
    let pr_hazard = hazard_mass(model, &pi);
    let pr_overflow = model.params.eps_s * pr_hazard;
    let eps_l = model.params.eps_l;
    let bound = bler_bound(eps_l, pr_overflow);
    StationaryResult {
        pi,
        pr_hazard,
        pr_overflow,
        bler_upper: bound.upper,
        delta_loss: bound.delta,
    }
}

/// Stationary mass on hazard states.
pub fn hazard_mass(model: &MarkovModel, pi: &[f64]) -> f64 {
    pi.iter()
        .zip(&model.classes)
        .filter(|(_, c)| **c == StateClass::Hazard)
        .map(|(p, _)| p)
        .sum()
}

/// Per-period overflow probability: failures arriving in hazard states.
pub fn pr_overflow(model: &MarkovModel, pi: &[f64]) -> f64 {
    model.params.eps_s * hazard_mass(model, pi)
}

/// Block-error-rate bounds of the composite decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerBound {
    pub lower: f64,
    pub upper: f64,
    /// Relative loss `(upper - lower) / lower`.
    pub delta: f64,
}

pub fn bler_bound(eps_l: f64, pr_overflow: f64) -> BlerBound {
    let delta = if pr_overflow == 0.0 {
        0.0
    } else {
        pr_overflow / eps_l
    };
    BlerBound {
        lower: eps_l,
        upper: eps_l + pr_overflow,
        delta,
    }
}

/// Structural checks behind the chain's convergence guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureCheck {
    pub irreducible: bool,
    pub aperiodic: bool,
}

/// Verifies irreducibility (strong connectivity of the nonzero
/// transitions) and aperiodicity (unit gcd of cycle lengths through
/// state 0).
pub fn check_irreducible_aperiodic(model: &MarkovModel) -> StructureCheck {
    let size = model.size;
    let mut fwd = vec![Vec::new(); size];
    let mut rev = vec![Vec::new(); size];
    for k in 0..size {
        let ((ok, p_ok), (fail, p_fail)) = model.successors(k);
        if p_ok > 0.0 {
            fwd[k].push(ok);
            rev[ok].push(k);
        }
        if p_fail > 0.0 && (p_ok == 0.0 || fail != ok) {
            fwd[k].push(fail);
            rev[fail].push(k);
        }
    }

    let reach = |adj: &[Vec<usize>]| -> Vec<Option<usize>> {
        let mut depth = vec![None; size];
        depth[0] = Some(0usize);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            let d = depth[u].unwrap();
            for &v in &adj[u] {
                if depth[v].is_none() {
                    depth[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        depth
    };

    let depth = reach(&fwd);
    let back = reach(&rev);
    let irreducible = depth.iter().all(|d| d.is_some()) && back.iter().all(|d| d.is_some());

    // gcd of (d[u] + 1 - d[v]) over edges within the reachable part.
    let mut period = 0u64;
    for (u, du) in depth.iter().enumerate() {
        let Some(du) = du else { continue };
        for &v in &fwd[u] {
            if let Some(dv) = depth[v] {
                let diff = (*du as i64 + 1 - dv as i64).unsigned_abs();
                period = gcd(period, diff);
            }
        }
    }
    StructureCheck {
        irreducible,
        aperiodic: period == 1,
    }
}
