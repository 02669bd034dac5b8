//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers (visible with `--nocapture`).
//!
//! Statistical criteria use fixed seeds, so every run is identical.

use rand::Rng;

use tascl_core::codec::{polar_transform, Bit, PolarCode};
use tascl_core::latency::{memory_estimate, output_buffer_frames, system_latency, Preset};
use tascl_core::markov::{
    build_model, check_irreducible_aperiodic, reduce_states, stationary, TasclParams,
};
use tascl_core::rational::{gcd, SpeedGain};
use tascl_core::sched::{
    simulate_bernoulli, simulate_full, DsOutcome, FullModeConfig, Scheduler, SchedulerConfig,
};
use tascl_core::rng::substream;

use tascl_harness::bler::{run_point, DecoderSpec, StopRule};
use tascl_harness::config::build_preset_code;

#[test]
fn criterion_01_latency_tables_exact() {
    let expect = [
        ("p1", 132u64, 63u64, 203u64, 647u64),
        ("p2", 116, 63, 187, 651),
        ("p3", 36, 15, 53, 168),
    ];
    for (name, c_mbd, c_scd, c_s, c_l) in expect {
        let p = Preset::by_name(name).unwrap();
        let ds = p.ds_latency(2).unwrap();
        assert_eq!((ds.c_mbd, ds.c_scd, ds.c_s), (c_mbd, c_scd, c_s), "{name}");
        assert_eq!(p.dl_latency().unwrap(), c_l, "{name}");
    }
    println!("ACCEPTANCE C01 PASS: fast-decoder cycles (132,63,203)/(116,63,187)/(36,15,53), slow-decoder 647/651/168");
}

#[test]
fn criterion_02_transition_matrix_exact() {
    for eps in [0.1f64, 0.5, 0.9] {
        let params = TasclParams::new(3, 1, 1, eps, 1e-2).unwrap();
        let model = build_model(&params).unwrap();
        assert_eq!(model.size(), 7);
        let e = eps;
        let c = 1.0 - eps;
        let expect: [[f64; 7]; 7] = [
            [c, 0.0, 0.0, e, 0.0, 0.0, 0.0],
            [c, 0.0, 0.0, e, 0.0, 0.0, 0.0],
            [0.0, c, 0.0, 0.0, e, 0.0, 0.0],
            [0.0, 0.0, c, 0.0, 0.0, e, 0.0],
            [0.0, 0.0, 0.0, c, 0.0, 0.0, e],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        ];
        for x in 0..7 {
            for y in 0..7 {
                assert_eq!(model.entry(x, y), expect[x][y], "eps={eps} entry ({x},{y})");
            }
        }
    }
    println!("ACCEPTANCE C02 PASS: 7x7 transition matrix exact for eps_s in {{0.1, 0.5, 0.9}}");
}

#[test]
fn criterion_03_memory_table_exact() {
    let beta = SpeedGain::new(3, 1).unwrap();
    let two = memory_estimate(1024, 6, 2, 32, 64, beta, 3).unwrap();
    let one = memory_estimate(1024, 6, 1, 32, 64, beta, 3).unwrap();
    assert_eq!(two.dl_bits, 288_768);
    assert_eq!(two.other_bits, 62_464);
    assert_eq!(one.other_bits, 54_784);
    // The ratios are exact rationals of the bit counts; the published
    // integer percentages (21 and 19) must be within one point.
    assert_eq!(two.overhead_ratio, 62_464.0 / 288_768.0);
    assert_eq!(one.overhead_ratio, 54_784.0 / 288_768.0);
    assert!((two.overhead_ratio * 100.0 - 21.0).abs() < 1.0);
    assert!((one.overhead_ratio * 100.0 - 19.0).abs() < 1.0);
    println!(
        "ACCEPTANCE C03 PASS: memory 288768/62464/54784 bits, overhead {:.2}%/{:.2}%",
        two.overhead_ratio * 100.0,
        one.overhead_ratio * 100.0
    );
}

/// Two-sided exact Poisson test at the 3-sigma significance level
/// (0.27%), for overflow counts too small for the normal approximation.
fn poisson_consistent(lambda: f64, observed: u64) -> bool {
    let alpha_half = 0.00135;
    let pmf = |k: u64| -> f64 {
        let mut p = (-lambda).exp();
        for i in 1..=k {
            p *= lambda / i as f64;
        }
        p
    };
    if (observed as f64) >= lambda {
        // P(X >= observed) = 1 - P(X < observed)
        let below: f64 = (0..observed).map(pmf).sum();
        (1.0 - below) >= alpha_half
    } else {
        let upto: f64 = (0..=observed).map(pmf).sum();
        upto >= alpha_half
    }
}

#[test]
fn criterion_04_model_matches_chain_simulation() {
    let combos: Vec<(u64, u64, u64, f64)> = [(3u64, 1u64), (5, 2), (13, 4)]
        .iter()
        .flat_map(|&(bn, bd)| {
            (1..=3u64).flat_map(move |zeta| {
                [0.05f64, 0.2, 0.5].iter().map(move |&e| (bn, bd, zeta, e))
            })
        })
        .collect();
    use rayon::prelude::*;
    let worst: Vec<(String, f64, f64)> = combos
        .par_iter()
        .map(|&(bn, bd, zeta, eps)| {
            let params = TasclParams::new(bn, bd, zeta, eps, 1e-2).unwrap();
            let model = build_model(&params).unwrap();
            let sol = stationary(&model, 1e-12).unwrap();
            let cfg = SchedulerConfig {
                params,
                c_s: bd,
                c_rw: 0,
            };
            let stats = simulate_bernoulli(&cfg, 10_000_000, 0x5eed_2025, None).unwrap();
            let linf = stats
                .occupancy_freq()
                .iter()
                .zip(&sol.pi)
                .map(|(f, p)| (f - p).abs())
                .fold(0.0f64, f64::max);
            let n = stats.counted_slots as f64;
            let p = sol.pr_overflow;
            let sigma = (p * (1.0 - p) / n).sqrt();
            let dev = (stats.overflow_rate() - p).abs();
            let z = if sigma > 0.0 { dev / sigma } else { 0.0 };
            let label = format!("{bn}/{bd} zeta={zeta} eps={eps}");
            assert!(linf <= 1e-3, "{label}: Linf {linf}");
            // Normal 3-sigma test when enough overflows are expected,
            // exact Poisson tail at the same significance otherwise.
            if p * n >= 25.0 {
                assert!(z <= 3.0, "{label}: overflow z-score {z:.2}");
            } else {
                assert!(
                    poisson_consistent(p * n, stats.overflows_counted),
                    "{label}: {} overflows vs {:.3} expected",
                    stats.overflows_counted,
                    p * n
                );
            }
            (label, linf, z)
        })
        .collect();
    let max_linf = worst.iter().map(|w| w.1).fold(0.0f64, f64::max);
    let max_z = worst.iter().map(|w| w.2).fold(0.0f64, f64::max);
    println!(
        "ACCEPTANCE C04 PASS: 27 combos x 1e7 slots, max Linf {max_linf:.2e} (<= 1e-3), max overflow z {max_z:.2} (<= 3)"
    );
}

#[test]
fn criterion_05_structural_propositions() {
    let mut checked = 0;
    for bn in 2..=12u64 {
        for bd in 1..=5u64 {
            if gcd(bn, bd) != 1 || bn <= bd {
                continue;
            }
            for zeta in 1..=6u64 {
                for eps in [0.01, 0.5, 0.99] {
                    let params = TasclParams::new(bn, bd, zeta, eps, 1e-2).unwrap();
                    let check = check_irreducible_aperiodic(&build_model(&params).unwrap());
                    assert!(
                        check.irreducible && check.aperiodic,
                        "{bn}/{bd} zeta={zeta} eps={eps}"
                    );
                    checked += 1;
                }
            }
        }
    }
    // Reduction: 6/2 collapses to the 3/1 chain with an identical
    // stationary distribution, bit for bit.
    let reduced = reduce_states(6, 2, 2, 0.3, 1e-2).unwrap();
    assert_eq!((reduced.beta_num(), reduced.beta_den()), (3, 1));
    let direct = TasclParams::new(3, 1, 2, 0.3, 1e-2).unwrap();
    let m_red = build_model(&reduced).unwrap();
    let m_dir = build_model(&direct).unwrap();
    assert_eq!(m_red.size(), m_dir.size());
    for x in 0..m_red.size() {
        assert_eq!(m_red.row(x), m_dir.row(x));
    }
    let pi_red = stationary(&m_red, 1e-13).unwrap().pi;
    let pi_dir = stationary(&m_dir, 1e-13).unwrap().pi;
    assert_eq!(pi_red, pi_dir);
    println!(
        "ACCEPTANCE C05 PASS: {checked} chains irreducible+aperiodic; reduce(6/2) == 3/1 exactly"
    );
}

/// One SNR point of the bound-sandwich experiment.
struct SandwichPoint {
    snr: f64,
    zeta: u64,
    frames: u64,
}

#[test]
fn criterion_06_bound_sandwich_full_scheduler() {
    let seed = 2025;
    let preset = Preset::by_name("p3").unwrap();
    let code = build_preset_code(&preset).unwrap();
    let c_s = preset.ds_latency(2).unwrap().c_s;
    let c_rw = preset.ds_latency(2).unwrap().c_rw;
    let beta = preset.speed_gain().unwrap();
    assert_eq!((beta.num(), beta.den()), (168, 53));

    let grid = [
        SandwichPoint { snr: 1.0, zeta: 1, frames: 4_000 },
        SandwichPoint { snr: 1.25, zeta: 1, frames: 6_000 },
        SandwichPoint { snr: 1.5, zeta: 1, frames: 15_000 },
        SandwichPoint { snr: 1.0, zeta: 2, frames: 4_000 },
        SandwichPoint { snr: 1.25, zeta: 2, frames: 6_000 },
    ];

    // Paired slow-decoder reference runs (same seed => same frames).
    let mut eps_l_at = std::collections::HashMap::new();
    for point in &grid {
        let key = (point.snr * 100.0) as i64;
        if eps_l_at.contains_key(&key) {
            continue;
        }
        let stop = StopRule {
            min_frames: point.frames,
            min_errors: 0,
            max_frames: point.frames,
        };
        let r = run_point(&code, DecoderSpec::Scl { list: 32 }, None, point.snr, &stop, seed)
            .unwrap();
        eps_l_at.insert(key, r);
    }

    let mut dominated_points = 0;
    for point in &grid {
        let params = TasclParams::from_speed_gain(beta, point.zeta, 0.5, 0.5).unwrap();
        let sched_cfg = SchedulerConfig {
            params,
            c_s,
            c_rw,
        };
        let full_cfg = FullModeConfig {
            code: code.clone(),
            ebn0_db: point.snr,
            list_size_fast: 2,
            list_size_slow: 32,
            quant: None,
            seed,
        };
        let res = simulate_full(&sched_cfg, &full_cfg, point.frames, None).unwrap();
        assert!(
            res.stats.frame_errors >= 300,
            "{} dB zeta={} has only {} errors",
            point.snr,
            point.zeta,
            res.stats.frame_errors
        );
        let eps_ta = res.eps_ta();
        let n_ta = res.stats.emitted as f64;
        let sigma_ta = (eps_ta * (1.0 - eps_ta) / n_ta).sqrt();

        let el_point = &eps_l_at[&((point.snr * 100.0) as i64)];
        let eps_l = el_point.bler;
        let sigma_l = (eps_l * (1.0 - eps_l) / el_point.frames as f64).sqrt();

        // Overflow probability from the model at the measured failure rate.
        let model_params = TasclParams::from_speed_gain(beta, point.zeta, res.eps_s_hat(), eps_l)
            .unwrap();
        let sol = stationary(&build_model(&model_params).unwrap(), 1e-12).unwrap();
        let upper = eps_l + sol.pr_overflow;
        let slack = 1.96 * (sigma_ta + sigma_l);

        assert!(
            eps_ta + slack >= eps_l,
            "{} dB zeta={}: eps_ta {eps_ta:.4} below lower bound {eps_l:.4}",
            point.snr,
            point.zeta
        );
        assert!(
            eps_ta - slack <= upper,
            "{} dB zeta={}: eps_ta {eps_ta:.4} above upper bound {upper:.4}",
            point.snr,
            point.zeta
        );
        let ratio = eps_ta / upper;
        let overflow_dominated = sol.pr_overflow >= eps_l / 2.0;
        if overflow_dominated {
            dominated_points += 1;
            assert!(
                (0.7..=1.0).contains(&ratio),
                "{} dB zeta={}: tightness ratio {ratio:.3} outside [0.7, 1.0]",
                point.snr,
                point.zeta
            );
        }
        println!(
            "  C06 point snr={} zeta={}: eps_ta={eps_ta:.4} in [{eps_l:.4}, {upper:.4}], ratio {ratio:.3}{}",
            point.snr,
            point.zeta,
            if overflow_dominated { " (overflow-dominated)" } else { "" }
        );
    }
    assert!(dominated_points >= 3, "grid must cover the overflow-dominated regime");
    println!(
        "ACCEPTANCE C06 PASS: eps_ta inside [eps_l, eps_l + Pr(overflow)] at 5 points, tightness within [0.7, 1.0] on {dominated_points} overflow-dominated points"
    );
}

#[test]
fn criterion_07_parameter_trends() {
    let eps_l = 1e-2;
    // Upper bound non-increasing in buffer size.
    let mut last = f64::INFINITY;
    for zeta in [1u64, 2, 3] {
        let params = TasclParams::new(3, 1, zeta, 0.2, eps_l).unwrap();
        let up = stationary(&build_model(&params).unwrap(), 1e-12).unwrap().bler_upper;
        assert!(up <= last + 1e-15, "zeta={zeta}");
        last = up;
    }
    // Upper bound non-decreasing in speed gain.
    let betas = [(2u64, 1u64), (5, 2), (3, 1), (7, 2), (4, 1)];
    let mut last = 0.0;
    for (bn, bd) in betas {
        let params = TasclParams::new(bn, bd, 2, 0.2, eps_l).unwrap();
        let up = stationary(&build_model(&params).unwrap(), 1e-12).unwrap().bler_upper;
        assert!(up >= last - 1e-15, "beta={bn}/{bd}");
        last = up;
    }
    // Small failure rates: every curve collapses onto eps_l.
    for eps_s in [1e-3, 1e-4] {
        for (bn, bd) in betas {
            for zeta in [1u64, 2, 3] {
                let params = TasclParams::new(bn, bd, zeta, eps_s, eps_l).unwrap();
                let up = stationary(&build_model(&params).unwrap(), 1e-12).unwrap().bler_upper;
                assert!(
                    up / eps_l <= 1.05,
                    "beta={bn}/{bd} zeta={zeta} eps_s={eps_s}: {up}"
                );
            }
        }
    }
    println!("ACCEPTANCE C07 PASS: bound monotone in zeta and beta; within 5% of eps_l at eps_s <= 1e-3");
}

#[test]
fn criterion_08_ml_oracle_equivalence() {
    let code = PolarCode::construct(
        3,
        4,
        0,
        0.0,
        tascl_core::codec::ConstructionMethod::Bhattacharyya,
        None,
    )
    .unwrap();
    let codebook: Vec<(Vec<Bit>, Vec<Bit>)> = (0..16u8)
        .map(|m| {
            let bits: Vec<Bit> = (0..4).map(|b| (m >> b) & 1).collect();
            let u = code.attach_crc(&bits).unwrap();
            let x = code.encode(&u).unwrap();
            (u, x)
        })
        .collect();
    let mut agreements = 0u64;
    for frame in 0..10_000u64 {
        let mut rng = substream(1088, frame);
        let msg: Vec<Bit> = (0..4).map(|_| rng.gen_range(0..2u8)).collect();
        let u = code.attach_crc(&msg).unwrap();
        let x = code.encode(&u).unwrap();
        let llr = tascl_core::channel::transmit(
            &x,
            &tascl_core::channel::ChannelConfig {
                ebn0_db: 1.0,
                rate: 0.5,
                seed: 88,
                frame_index: frame,
            },
        )
        .unwrap();
        // Exhaustive maximum-likelihood decision: the codeword with the
        // smallest correlation discrepancy against the received LLRs.
        let mut best: (f64, &[Bit]) = (f64::INFINITY, &[]);
        for (cand_u, cand_x) in &codebook {
            let metric: f64 = cand_x
                .iter()
                .zip(&llr)
                .filter(|&(&xi, &l)| (xi == 1) != (l <= 0.0))
                .map(|(_, &l)| l.abs())
                .sum();
            if metric < best.0 {
                best = (metric, cand_u);
            }
        }
        let res = tascl_core::decoders::scl_decode(&llr, &code, 16, None).unwrap();
        assert_eq!(res.selected_u(), best.1, "frame {frame}");
        agreements += 1;
    }
    assert_eq!(agreements, 10_000);
    println!("ACCEPTANCE C08 PASS: list-16 decode equals exhaustive ML on 10000/10000 frames");
}

#[test]
fn criterion_09_adaptive_list_size_statistics() {
    use tascl_core::decoders::AsclVariant;
    let code = build_preset_code(&Preset::by_name("p3").unwrap()).unwrap();
    let snrs = [1.2, 1.4, 1.6, 1.8, 2.0];
    let stop = StopRule {
        min_frames: 3_000,
        min_errors: 0,
        max_frames: 3_000,
    };
    let mut stats = Vec::new();
    for variant in [AsclVariant::Original, AsclVariant::Simplified] {
        let mut per_snr = Vec::new();
        for &snr in &snrs {
            let r = run_point(
                &code,
                DecoderSpec::Ascl { l_max: 32, variant },
                None,
                snr,
                &stop,
                0xa5c1,
            )
            .unwrap();
            per_snr.push((r.avg_list_terminal.unwrap(), r.avg_list_sum.unwrap()));
        }
        // Both statistics fall as the channel improves.
        for w in per_snr.windows(2) {
            assert!(w[1].0 < w[0].0, "{variant:?} terminal stat not decreasing");
            assert!(w[1].1 < w[0].1, "{variant:?} summed stat not decreasing");
        }
        stats.push(per_snr);
    }
    let (orig_term, orig_sum) = stats[0].last().copied().unwrap();
    let (simp_term, simp_sum) = stats[1].last().copied().unwrap();
    let ratio_term = simp_term / orig_term;
    let ratio_sum = simp_sum / orig_sum;
    // Terminal list size is the reported statistic; the sum-over-
    // attempts reading is computed alongside.
    assert!(
        ratio_term >= 2.5,
        "terminal-list ratio {ratio_term:.2} below 2.5"
    );
    println!(
        "ACCEPTANCE C09 PASS: adaptive list stats decrease over 1.2..2.0 dB; simplified/original at 2.0 dB = {ratio_term:.2} (terminal, >= 2.5) and {ratio_sum:.2} (summed)"
    );
}

#[test]
fn criterion_10_scheduler_sizing_claims() {
    let preset = Preset::by_name("p1").unwrap();
    let ds = preset.ds_latency(2).unwrap();
    let beta = preset.speed_gain().unwrap();
    let zeta = 2;
    let params = TasclParams::from_speed_gain(beta, zeta, 0.5, 0.0).unwrap();
    let cfg = SchedulerConfig {
        params,
        c_s: ds.c_s,
        c_rw: ds.c_rw,
    };
    let mut sched = Scheduler::new(cfg).unwrap();
    let expected_cycles = system_latency(ds.c_s, ds.c_rw, beta, zeta);
    assert_eq!(sched.emission_latency_cycles(), Some(expected_cycles));

    let mut rng = substream(0xad5a, 0);
    let latency_subslots = sched.emission_latency_subslots();
    let mut emitted = 0u64;
    for _ in 0..1_000_000u64 {
        let outcome = if rng.gen_bool(0.5) {
            DsOutcome::Fail
        } else {
            DsOutcome::Pass
        };
        let ev = sched.step(outcome);
        if let Some(e) = ev.emitted {
            // Constant latency for every frame, exactly.
            assert_eq!(e.at_subslot - e.frame * beta.den(), latency_subslots);
            emitted += 1;
        }
    }
    let bound = output_buffer_frames(beta, zeta);
    let max_occ = sched.stats().max_output_buffer_occupancy;
    assert!(max_occ <= bound);
    assert!(emitted > 990_000);
    assert!(sched.stats().overflows > 0, "adversarial run must overflow");
    println!(
        "ACCEPTANCE C10 PASS: 1e6 slots at eps_s=0.5; output buffer peaked at {max_occ} <= {bound} frames; every emission at {expected_cycles} cycles"
    );
}

#[test]
fn criterion_11_single_path_latency_delta() {
    let preset = Preset::by_name("p1").unwrap();
    let two = preset.ds_latency(2).unwrap().c_s;
    let one = preset.ds_latency(1).unwrap().c_s;
    assert_eq!(two, 203);
    assert_eq!(one, 171); // 203 - 32 sort cycles
    let published = preset.cs_l1_published.unwrap();
    assert_eq!(published, 170);
    assert!(one.abs_diff(published) <= 1);
    // The one-cycle discrepancy is recorded in the reproduction notes.
    let readme = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../README.md"
    ))
    .expect("README present");
    assert!(
        readme.contains("171") && readme.contains("170"),
        "README must document the 171-vs-170 cycle note"
    );
    println!("ACCEPTANCE C11 PASS: single-path latency 171 computed vs 170 published (within 1 cycle, documented)");
}
