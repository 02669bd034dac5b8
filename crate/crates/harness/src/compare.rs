//! Model-versus-simulation comparison for the abstract scheduler.

use tascl_core::markov::{build_model, stationary, TasclParams};
use tascl_core::sched::{simulate_bernoulli, SchedulerConfig};
use tascl_core::Result;

/// Agreement report between the chain's stationary distribution and a
/// long scheduler run.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub params: TasclParams,
    pub slots: u64,
    pub counted_slots: u64,
    /// Largest per-state gap between empirical occupancy and the
    /// stationary distribution.
    pub linf_gap: f64,
    pub model_overflow: f64,
    pub sim_overflow: f64,
    /// Binomial z-score of the observed overflow count.
    pub z_score: f64,
}

pub fn compare_model_vs_sim(
    params: &TasclParams,
    n_slots: u64,
    seed: u64,
) -> Result<CompareReport> {
    let model = build_model(params)?;
    let solution = stationary(&model, 1e-12)?;
    let cfg = SchedulerConfig {
        params: *params,
        // Cycle constants are irrelevant here; pick ones that keep the
        // emission latency integral.
        c_s: params.beta_den(),
        c_rw: 0,
    };
    let stats = simulate_bernoulli(&cfg, n_slots, seed, None)?;
    let freq = stats.occupancy_freq();
    let linf_gap = freq
        .iter()
        .zip(&solution.pi)
        .map(|(f, p)| (f - p).abs())
        .fold(0.0f64, f64::max);
    let p = solution.pr_overflow;
    let n = stats.counted_slots as f64;
    let sim_overflow = stats.overflow_rate();
    let z_score = if p > 0.0 && p < 1.0 {
        (sim_overflow - p) / (p * (1.0 - p) / n).sqrt()
    } else if sim_overflow == p {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(CompareReport {
        params: *params,
        slots: stats.slots,
        counted_slots: stats.counted_slots,
        linf_gap,
        model_overflow: p,
        sim_overflow,
        z_score,
    })
}
