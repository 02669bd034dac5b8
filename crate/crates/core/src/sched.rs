//! Discrete-time simulation of the two-staged scheduler.
//!
//! One slot is one fast-decoder period: a new frame's LLRs load and its
//! fast decode finishes within the slot. Time below slot granularity is
//! tracked in sub-slots of `1/beta_d` periods; a slow decode costs
//! `beta_n` sub-slots and one slot advances it by `beta_d`. At every
//! slot boundary the operational state (buffered frames, remaining
//! slow-decoder work) is asserted against the Markov model's state
//! lattice and transition rule.
//!
//! Two drivers share the scheduler core: [`simulate_bernoulli`] draws
//! abstract pass/fail outcomes and validates the analytic model, while
//! [`simulate_full`] pushes real codewords through the channel and the
//! list decoders.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{transmit, ChannelConfig};
use crate::codec::{Bit, PolarCode};
use crate::decoders::{scl_decode, DecoderQuant};
use crate::latency::output_buffer_frames;
use crate::markov::{class_of, successors, StateClass, TasclParams};
use crate::rng::{substream, MESSAGE_TAG};
use crate::{Error, Result};

/// Scheduler parameters plus the cycle constants used for latency
/// bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct SchedulerConfig {
    pub params: TasclParams,
    /// Fast-decoder cycles per frame (one slot).
    pub c_s: u64,
    /// LLR loading cycles.
    pub c_rw: u64,
}

/// Fast-decoder verdict for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsOutcome {
    Pass,
    Fail,
}

/// How a frame's final output was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disposition {
    /// Fast decode passed CRC; its output stands.
    Pass,
    /// Waiting for the slow decoder (never visible at emission).
    Queued,
    /// Slow decode finished and overwrote the fast result.
    DlDone,
    /// Dropped on a full buffer; the failed fast output stands.
    Overflowed,
}

#[derive(Debug, Clone, Copy)]
pub struct DlCompletion {
    pub frame: u64,
    pub at_subslot: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct EmittedFrame {
    pub frame: u64,
    pub at_subslot: u64,
    pub disposition: Disposition,
}

/// Everything that happened during one slot.
#[derive(Debug, Clone)]
pub struct SlotEvents {
    pub slot: u64,
    /// The frame processed by the fast decoder this slot (== slot).
    pub frame: u64,
    pub outcome: DsOutcome,
    /// Markov state index at the slot boundary.
    pub state_before: usize,
    pub enqueued: bool,
    pub overflow: bool,
    pub dl_completion: Option<DlCompletion>,
    pub emitted: Option<EmittedFrame>,
}

/// Counters collected over a run.
#[derive(Debug, Clone)]
pub struct SchedulerStats {
    pub slots: u64,
    pub frames: u64,
    pub ds_failures: u64,
    pub overflows: u64,
    pub dl_completions: u64,
    pub emitted: u64,
    pub frame_errors: u64,
    /// Slots excluded from occupancy statistics.
    pub warmup_slots: u64,
    pub counted_slots: u64,
    pub overflows_counted: u64,
    /// Slot-boundary state histogram over the model lattice (post
    /// warm-up).
    pub state_occupancy: Vec<u64>,
    pub max_llr_buffer_occupancy: u64,
    pub max_output_buffer_occupancy: u64,
}

impl SchedulerStats {
    /// Empirical state distribution (post warm-up).
    pub fn occupancy_freq(&self) -> Vec<f64> {
        let total = self.counted_slots.max(1) as f64;
        self.state_occupancy
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    /// Overflows per slot (post warm-up).
    pub fn overflow_rate(&self) -> f64 {
        self.overflows_counted as f64 / self.counted_slots.max(1) as f64
    }

    /// Errors per emitted frame.
    pub fn error_rate(&self) -> f64 {
        self.frame_errors as f64 / self.emitted.max(1) as f64
    }
}

/// One row of the per-slot trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub slot: u64,
    pub state: f64,
    pub buffer_occupancy: usize,
    pub dl_remaining_subslots: u64,
    pub event: String,
}

struct DlJob {
    frame: u64,
    remaining_subslots: u64,
}

/// The scheduler core: buffer, slow-decoder progress, output-buffer
/// occupancy and constant-latency emission.
pub struct Scheduler {
    cfg: SchedulerConfig,
    slot: u64,
    buffer: VecDeque<u64>,
    dl: Option<DlJob>,
    /// Dispositions of frames not yet emitted, front == `emit_next`.
    dispositions: VecDeque<Disposition>,
    emit_next: u64,
    emitted_total: u64,
    stats: SchedulerStats,
}

impl Scheduler {
    pub fn new(cfg: SchedulerConfig) -> Result<Self> {
        if cfg.c_s == 0 {
            return Err(Error::InvalidParameter("c_s must be positive".into()));
        }
        let p = &cfg.params;
        let warmup = p.beta().mul_int_ceil(p.zeta() + 1) + 1;
        Ok(Self {
            cfg,
            slot: 0,
            buffer: VecDeque::new(),
            dl: None,
            dispositions: VecDeque::new(),
            emit_next: 0,
            emitted_total: 0,
            stats: SchedulerStats {
                slots: 0,
                frames: 0,
                ds_failures: 0,
                overflows: 0,
                dl_completions: 0,
                emitted: 0,
                frame_errors: 0,
                warmup_slots: warmup,
                counted_slots: 0,
                overflows_counted: 0,
                state_occupancy: vec![0; p.state_count()],
                max_llr_buffer_occupancy: 0,
                max_output_buffer_occupancy: 0,
            },
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn stats(&self) -> &SchedulerStats {
        &self.stats
    }

    pub fn into_stats(self) -> SchedulerStats {
        self.stats
    }

    /// Markov state index `k = beta_n * |buffer| + remaining sub-slots`.
    pub fn state_index(&self) -> usize {
        let rem = self.dl.as_ref().map_or(0, |j| j.remaining_subslots);
        (self.cfg.params.beta_num() * self.buffer.len() as u64 + rem) as usize
    }

    /// Emission delay from a frame's input start, in sub-slots:
    /// `beta_d + beta_n * (zeta + 1)`.
    pub fn emission_latency_subslots(&self) -> u64 {
        let p = &self.cfg.params;
        p.beta_den() + p.beta_num() * (p.zeta() + 1)
    }

    /// Emission delay in cycles when it is a whole number of cycles;
    /// equals the closed-form system latency.
    pub fn emission_latency_cycles(&self) -> Option<u64> {
        let p = &self.cfg.params;
        let sub = self.emission_latency_subslots() * self.cfg.c_s;
        if sub % p.beta_den() == 0 {
            Some(sub / p.beta_den() + self.cfg.c_rw)
        } else {
            None
        }
    }

    /// Advances one slot: the slow decoder drains `beta_d` sub-slots,
    /// the fast decoder's verdict for the arriving frame is applied,
    /// and the due frame (if any) is emitted from the output buffer.
    pub fn step(&mut self, outcome: DsOutcome) -> SlotEvents {
        let p = self.cfg.params;
        let beta_n = p.beta_num();
        let beta_d = p.beta_den();
        let slot = self.slot;
        let frame = slot;
        let slot_start_subslot = slot * beta_d;

        let state_before = self.state_index();
        let class_before = class_of(&p, state_before);
        debug_assert!(state_before < p.state_count());

        self.stats.slots += 1;
        self.stats.frames += 1;
        let counted = slot >= self.stats.warmup_slots;
        if counted {
            self.stats.counted_slots += 1;
            self.stats.state_occupancy[state_before] += 1;
        }

        // Output-buffer peak: frames 0..slot have been written (frame u
        // during slot u+1), minus those already read out. The write at
        // the boundary precedes any read in the slot.
        let out_occupancy = slot - self.emitted_total;
        self.stats.max_output_buffer_occupancy =
            self.stats.max_output_buffer_occupancy.max(out_occupancy);
        let bound = output_buffer_frames(p.beta(), p.zeta());
        assert!(
            out_occupancy <= bound,
            "output buffer exceeded {bound} frames at slot {slot}"
        );

        // Slow decoder drains beta_d sub-slots, popping buffered frames
        // as it goes. At most one frame can finish per slot.
        let mut dl_completion = None;
        let mut budget = beta_d;
        while budget > 0 {
            let job = match self.dl.as_mut() {
                Some(job) => job,
                None => match self.buffer.pop_front() {
                    Some(f) => self.dl.insert(DlJob {
                        frame: f,
                        remaining_subslots: beta_n,
                    }),
                    None => break,
                },
            };
            let used = budget.min(job.remaining_subslots);
            job.remaining_subslots -= used;
            budget -= used;
            if job.remaining_subslots == 0 {
                let done = DlCompletion {
                    frame: job.frame,
                    at_subslot: slot_start_subslot + (beta_d - budget),
                };
                assert!(dl_completion.is_none(), "two slow decodes in one slot");
                self.set_disposition(done.frame, Disposition::DlDone);
                self.stats.dl_completions += 1;
                dl_completion = Some(done);
                self.dl = None;
            }
        }
        // A completion that lands exactly at budget exhaustion leaves
        // the decoder free for the next buffered frame at the boundary.
        if self.dl.is_none() {
            if let Some(f) = self.buffer.pop_front() {
                self.dl = Some(DlJob {
                    frame: f,
                    remaining_subslots: beta_n,
                });
            }
        }

        // Fast-decoder verdict for the frame that arrived this slot.
        let mut enqueued = false;
        let mut overflow = false;
        match outcome {
            DsOutcome::Pass => self.dispositions.push_back(Disposition::Pass),
            DsOutcome::Fail => {
                self.stats.ds_failures += 1;
                if class_before == StateClass::Hazard {
                    overflow = true;
                    self.stats.overflows += 1;
                    if counted {
                        self.stats.overflows_counted += 1;
                    }
                    self.dispositions.push_back(Disposition::Overflowed);
                } else {
                    enqueued = true;
                    self.buffer.push_back(frame);
                    self.dispositions.push_back(Disposition::Queued);
                }
            }
        }
        assert!(
            self.buffer.len() as u64 <= p.zeta(),
            "LLR buffer exceeded zeta at slot {slot}"
        );
        self.stats.max_llr_buffer_occupancy = self
            .stats
            .max_llr_buffer_occupancy
            .max(self.buffer.len() as u64);

        // The slot boundary state must follow the model's transition.
        let state_after = self.state_index();
        let ((ok_target, _), (fail_target, _)) = successors(&p, class_before, state_before);
        let expected = match outcome {
            DsOutcome::Pass => ok_target,
            DsOutcome::Fail => fail_target,
        };
        assert_eq!(
            state_after, expected,
            "slot {slot}: scheduler state diverged from the chain"
        );

        // Constant-latency emission: frame u leaves the output buffer at
        // sub-slot u*beta_d + emission_latency, inside this slot's span.
        let mut emitted = None;
        let latency = self.emission_latency_subslots();
        let emit_subslot = self.emit_next * beta_d + latency;
        if emit_subslot < (slot + 1) * beta_d {
            let disposition = self.dispositions.pop_front().expect("disposition recorded");
            assert_ne!(
                disposition,
                Disposition::Queued,
                "frame {} emitted before its slow decode finished",
                self.emit_next
            );
            emitted = Some(EmittedFrame {
                frame: self.emit_next,
                at_subslot: emit_subslot,
                disposition,
            });
            self.emit_next += 1;
            self.emitted_total += 1;
            self.stats.emitted += 1;
        }

        self.slot += 1;
        SlotEvents {
            slot,
            frame,
            outcome,
            state_before,
            enqueued,
            overflow,
            dl_completion,
            emitted,
        }
    }

    fn set_disposition(&mut self, frame: u64, disposition: Disposition) {
        assert!(frame >= self.emit_next, "frame {frame} already emitted");
        let idx = (frame - self.emit_next) as usize;
        let slot = self.slot;
        let d = self
            .dispositions
            .get_mut(idx)
            .unwrap_or_else(|| panic!("no disposition slot for frame {frame} at slot {slot}"));
        assert_eq!(*d, Disposition::Queued, "frame {frame} decoded twice");
        *d = disposition;
    }

    /// Record an emitted frame's final correctness.
    pub fn record_error(&mut self, wrong: bool) {
        if wrong {
            self.stats.frame_errors += 1;
        }
    }
}

fn trace_event(ev: &SlotEvents) -> String {
    let mut s = String::from(match (ev.outcome, ev.overflow, ev.enqueued) {
        (DsOutcome::Pass, _, _) => "pass",
        (DsOutcome::Fail, true, _) => "fail+overflow",
        (DsOutcome::Fail, _, true) => "fail+queued",
        (DsOutcome::Fail, _, _) => "fail",
    });
    if let Some(c) = &ev.dl_completion {
        s.push_str(&format!("+dl_done({})", c.frame));
    }
    if let Some(e) = &ev.emitted {
        s.push_str(&format!("+emit({})", e.frame));
    }
    s
}

fn emit_trace(
    trace: &mut Option<&mut dyn FnMut(TraceRow)>,
    sched: &Scheduler,
    ev: &SlotEvents,
) {
    if let Some(f) = trace {
        let beta_d = sched.cfg.params.beta_den() as f64;
        f(TraceRow {
            slot: ev.slot,
            state: ev.state_before as f64 / beta_d,
            buffer_occupancy: sched.buffer.len(),
            dl_remaining_subslots: sched.dl.as_ref().map_or(0, |j| j.remaining_subslots),
            event: trace_event(ev),
        });
    }
}

/// Abstract-mode simulation: fast-decoder failures are IID with
/// probability `eps_s`, and a slow-decoded frame is independently wrong
/// with probability `eps_l`. Deterministic per seed.
pub fn simulate_bernoulli(
    cfg: &SchedulerConfig,
    n_slots: u64,
    seed: u64,
    mut trace: Option<&mut dyn FnMut(TraceRow)>,
) -> Result<SchedulerStats> {
    let mut sched = Scheduler::new(*cfg)?;
    let eps_s = cfg.params.eps_s();
    let eps_l = cfg.params.eps_l();
    let mut rng_ds = substream(seed, 0);
    let mut rng_dl = substream(seed, 1);
    let mut dl_wrong: HashMap<u64, bool> = HashMap::new();

    for _ in 0..n_slots {
        let outcome = if rng_ds.gen_bool(eps_s) {
            DsOutcome::Fail
        } else {
            DsOutcome::Pass
        };
        let ev = sched.step(outcome);
        if let Some(c) = &ev.dl_completion {
            dl_wrong.insert(c.frame, rng_dl.gen_bool(eps_l));
        }
        if let Some(e) = &ev.emitted {
            let wrong = match e.disposition {
                Disposition::Pass => false,
                Disposition::Overflowed => true,
                Disposition::DlDone => dl_wrong.remove(&e.frame).expect("wrongness drawn"),
                Disposition::Queued => unreachable!("asserted in step"),
            };
            sched.record_error(wrong);
        }
        emit_trace(&mut trace, &sched, &ev);
    }
    Ok(sched.into_stats())
}

/// Full-decoder mode configuration.
#[derive(Debug, Clone)]
pub struct FullModeConfig {
    pub code: PolarCode,
    pub ebn0_db: f64,
    pub list_size_fast: usize,
    pub list_size_slow: usize,
    pub quant: Option<DecoderQuant>,
    pub seed: u64,
}

/// Result of a full-decoder scheduler run.
#[derive(Debug, Clone)]
pub struct FullSimResult {
    pub stats: SchedulerStats,
    /// Frames whose fast decode passed CRC but was wrong.
    pub ds_false_accepts: u64,
    /// Slow-decoded frames and how many of them were wrong.
    pub dl_frames: u64,
    pub dl_errors: u64,
}

impl FullSimResult {
    /// Composite block error rate.
    pub fn eps_ta(&self) -> f64 {
        self.stats.error_rate()
    }

    /// Fast-decoder CRC failure rate.
    pub fn eps_s_hat(&self) -> f64 {
        self.stats.ds_failures as f64 / self.stats.frames.max(1) as f64
    }
}

struct PreparedFrame {
    u: Vec<Bit>,
    llr: Vec<f64>,
    ds_pass: bool,
    ds_wrong: bool,
}

fn prepare_frame(cfg: &FullModeConfig, frame: u64) -> Result<PreparedFrame> {
    let code = &cfg.code;
    let payload = code.num_info() - code.crc_len();
    let mut msg_rng = substream(cfg.seed ^ MESSAGE_TAG, frame);
    let message: Vec<Bit> = (0..payload).map(|_| msg_rng.gen_range(0..2u8)).collect();
    let u = code.attach_crc(&message)?;
    let x = code.encode(&u)?;
    let llr = transmit(
        &x,
        &ChannelConfig {
            ebn0_db: cfg.ebn0_db,
            rate: code.rate(),
            seed: cfg.seed,
            frame_index: frame,
        },
    )?;
    let ds = scl_decode(&llr, code, cfg.list_size_fast, cfg.quant)?;
    Ok(PreparedFrame {
        ds_pass: ds.passed_crc,
        ds_wrong: ds.selected_u() != u,
        u,
        llr,
    })
}

/// Full-decoder simulation: every slot transmits a fresh random
/// codeword, the fast decoder filters it, and CRC failures are
/// re-decoded by the slow decoder as the schedule permits. Frames are
/// prepared in parallel batches; the schedule itself is sequential.
/// Deterministic per seed regardless of worker count.
pub fn simulate_full(
    sched_cfg: &SchedulerConfig,
    full_cfg: &FullModeConfig,
    n_frames: u64,
    mut trace: Option<&mut dyn FnMut(TraceRow)>,
) -> Result<FullSimResult> {
    let mut sched = Scheduler::new(*sched_cfg)?;
    let mut ds_wrong: HashMap<u64, bool> = HashMap::new();
    let mut queued_llr: HashMap<u64, (Vec<f64>, Vec<Bit>)> = HashMap::new();
    let mut dl_wrong: HashMap<u64, bool> = HashMap::new();
    let mut ds_false_accepts = 0u64;
    let mut dl_frames = 0u64;
    let mut dl_errors = 0u64;

    let batch = 2048u64;
    let mut start = 0u64;
    while start < n_frames {
        let end = (start + batch).min(n_frames);
        let prepared: Vec<PreparedFrame> = (start..end)
            .into_par_iter()
            .map(|f| prepare_frame(full_cfg, f))
            .collect::<Result<_>>()?;

        // Sequential schedule pass over the batch.
        let mut events = Vec::with_capacity(prepared.len());
        for (offset, frame) in prepared.iter().enumerate() {
            let id = start + offset as u64;
            if frame.ds_pass && frame.ds_wrong {
                ds_false_accepts += 1;
            }
            ds_wrong.insert(id, frame.ds_wrong);
            let outcome = if frame.ds_pass {
                DsOutcome::Pass
            } else {
                DsOutcome::Fail
            };
            let ev = sched.step(outcome);
            if ev.enqueued {
                queued_llr.insert(id, (frame.llr.clone(), frame.u.clone()));
            }
            emit_trace(&mut trace, &sched, &ev);
            events.push(ev);
        }

        // Slow decodes triggered by this batch, in parallel. Their
        // results cannot influence the schedule, only correctness.
        let jobs: Vec<(u64, (Vec<f64>, Vec<Bit>))> = events
            .iter()
            .filter_map(|ev| ev.dl_completion.as_ref())
            .map(|c| {
                let data = queued_llr.remove(&c.frame).expect("queued LLRs kept");
                (c.frame, data)
            })
            .collect();
        let decoded: Vec<(u64, bool)> = jobs
            .into_par_iter()
            .map(|(id, (llr, u))| {
                let res = scl_decode(&llr, &full_cfg.code, full_cfg.list_size_slow, full_cfg.quant)?;
                Ok((id, res.selected_u() != u))
            })
            .collect::<Result<_>>()?;
        for (id, wrong) in decoded {
            dl_frames += 1;
            if wrong {
                dl_errors += 1;
            }
            dl_wrong.insert(id, wrong);
        }

        // Emissions observed during this batch.
        for ev in &events {
            if let Some(e) = &ev.emitted {
                let wrong = match e.disposition {
                    Disposition::Pass | Disposition::Overflowed => {
                        ds_wrong.remove(&e.frame).expect("fast verdict kept")
                    }
                    Disposition::DlDone => {
                        ds_wrong.remove(&e.frame);
                        dl_wrong.remove(&e.frame).expect("slow verdict kept")
                    }
                    Disposition::Queued => unreachable!("asserted in step"),
                };
                sched.record_error(wrong);
            }
        }
        start = end;
    }
    Ok(FullSimResult {
        stats: sched.into_stats(),
        ds_false_accepts,
        dl_frames,
        dl_errors,
    })
}
