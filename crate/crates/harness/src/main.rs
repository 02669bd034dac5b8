//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tascl_core::codec::{Bit, CodeFile, ConstructionMethod, PolarCode};
use tascl_core::latency::{
    memory_estimate, output_buffer_frames, speed_gain, system_latency, Preset,
};
use tascl_core::markov::{build_model, stationary, TasclParams};
use tascl_core::rational::SpeedGain;
use tascl_core::sched::{
    simulate_bernoulli, simulate_full, FullModeConfig, SchedulerConfig, TraceRow,
};
use tascl_core::{Error, Result};

use tascl_harness::bler::{run_bler, DecoderSpec, StopRule};
use tascl_harness::compare::compare_model_vs_sim;
use tascl_harness::config::{build_preset_code, FileConfig, PRESET_DESIGN_SNR_DB};
use tascl_harness::csvout;
use tascl_harness::design::{design_search, Curve, DesignTarget};

#[derive(Parser)]
#[command(
    name = "tascl",
    about = "CRC-aided polar decoding experiments: error-rate curves, \
             scheduler simulation and the buffer-overflow model"
)]
struct Cli {
    /// TOML config file supplying defaults (seed, workers, [code], [quant]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a code and write its definition.
    Construct {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        r: u32,
        #[arg(long, default_value_t = PRESET_DESIGN_SNR_DB)]
        design_snr: f64,
        #[arg(long, default_value = "bhattacharyya")]
        method: String,
    },
    /// Attach CRC and encode a message.
    Encode {
        /// Code file written by `construct`.
        #[arg(long)]
        code: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Message bits as a 0/1 string of length K - r (default: random).
        #[arg(long)]
        message: Option<String>,
    },
    /// Monte Carlo block-error-rate curve.
    Bler {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        code: Option<PathBuf>,
        /// sc, scl:<L>, or ascl:<L>:<original|simplified>.
        #[arg(long, default_value = "scl:8")]
        decoder: String,
        /// SNR grid in dB.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        snr: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        min_frames: u64,
        #[arg(long, default_value_t = 100)]
        min_errors: u64,
        #[arg(long, default_value_t = 10_000_000)]
        max_frames: u64,
        /// Enable the [quant] section from the config file.
        #[arg(long)]
        quantized: bool,
    },
    /// Stationary-model sweep: one CSV row per (eps_s, zeta).
    Markov {
        /// Speed gain, e.g. 3, 13/4 or 3.25.
        #[arg(long)]
        beta: String,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        zeta: Vec<u64>,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        eps_s: Vec<f64>,
        #[arg(long, default_value_t = 1e-2)]
        eps_l: f64,
    },
    /// Cycle counts of the two component decoders.
    Latency {
        #[arg(long)]
        preset: String,
        /// Fast-decoder list size (1 or 2).
        #[arg(long, default_value_t = 2)]
        ls: usize,
    },
    /// Memory usage of a configuration.
    Memory {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value_t = 3)]
        zeta: u64,
        #[arg(long, default_value_t = 6)]
        q: u32,
        #[arg(long)]
        ls: Option<usize>,
    },
    /// Scheduler simulation (abstract or full-decoder mode).
    Sched {
        /// bernoulli or full.
        #[arg(long, default_value = "bernoulli")]
        mode: String,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value_t = 2)]
        zeta: u64,
        #[arg(long, default_value_t = 0.1)]
        eps_s: f64,
        #[arg(long, default_value_t = 0.01)]
        eps_l: f64,
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Full mode: preset supplying the code and cycle counts.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 2)]
        ls: usize,
        #[arg(long, default_value_t = 32)]
        ll: usize,
        /// Write a per-slot trace CSV to this path.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        quantized: bool,
    },
    /// Pick buffer size (and padding) for a loss target.
    Design {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        c_l: Option<u64>,
        #[arg(long)]
        c_s: Option<u64>,
        /// BLER CSV of the fast decoder (crc_fail_rate column is used).
        #[arg(long)]
        es_csv: PathBuf,
        /// BLER CSV of the slow decoder (bler column is used).
        #[arg(long)]
        el_csv: PathBuf,
        #[arg(long, default_value_t = 0.30)]
        delta_max: f64,
        #[arg(long, default_value_t = 1e-2)]
        target_bler: f64,
        #[arg(long, default_value_t = 8)]
        zeta_max: u64,
        /// Cap on the speed-gain denominator (default: exact).
        #[arg(long)]
        max_den: Option<u64>,
    },
    /// Stationary model vs. long scheduler run.
    Compare {
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 1)]
        zeta: u64,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        eps_s: Vec<f64>,
        #[arg(long, default_value_t = 0.01)]
        eps_l: f64,
        #[arg(long, default_value_t = 10_000_000)]
        slots: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn out_writer(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p)
                .map_err(|e| Error::Parse(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn bits_to_string(bits: &[Bit]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

fn parse_bits(s: &str) -> Result<Vec<Bit>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse(format!("bad bit {other:?}"))),
        })
        .collect()
}

fn resolve_code(
    preset: &Option<String>,
    code_path: &Option<PathBuf>,
    file_cfg: &FileConfig,
) -> Result<PolarCode> {
    if let Some(name) = preset {
        return build_preset_code(&Preset::by_name(name)?);
    }
    if let Some(path) = code_path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        return CodeFile::from_toml(&text)?.build();
    }
    match &file_cfg.code {
        Some(section) => section.build(),
        None => Err(Error::InvalidParameter(
            "no code given: use --preset, --code, or a [code] config section".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<()> {
    let file_cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file_cfg.seed).unwrap_or(1);
    if let Some(workers) = cli.workers.or(file_cfg.workers) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    }
    let mut out = out_writer(&cli.out)?;

    match cli.cmd {
        Cmd::Construct {
            n,
            k,
            r,
            design_snr,
            method,
        } => {
            let method: ConstructionMethod = method.parse()?;
            let code = PolarCode::construct(n, k, r, design_snr, method, None)?;
            let file = CodeFile::describe(&code, design_snr, method);
            write!(out, "{}", file.to_toml()).map_err(write_err)?;
        }
        Cmd::Encode {
            code,
            preset,
            message,
        } => {
            let code = resolve_code(&preset, &code, &file_cfg)?;
            let payload = code.num_info() - code.crc_len();
            let message = match message {
                Some(s) => parse_bits(&s)?,
                None => {
                    use rand::Rng;
                    let mut rng = tascl_core::rng::substream(seed, 0);
                    (0..payload).map(|_| rng.gen_range(0..2u8)).collect()
                }
            };
            let u = code.attach_crc(&message)?;
            let x = code.encode(&u)?;
            writeln!(out, "message={}", bits_to_string(&message)).map_err(write_err)?;
            writeln!(out, "source_word={}", bits_to_string(&u)).map_err(write_err)?;
            writeln!(out, "codeword={}", bits_to_string(&x)).map_err(write_err)?;
        }
        Cmd::Bler {
            preset,
            code,
            decoder,
            snr,
            min_frames,
            min_errors,
            max_frames,
            quantized,
        } => {
            let code = resolve_code(&preset, &code, &file_cfg)?;
            let decoder: DecoderSpec = decoder.parse()?;
            let quant = if quantized {
                file_cfg
                    .quant
                    .ok_or_else(|| {
                        Error::InvalidParameter("--quantized needs a [quant] config section".into())
                    })?
                    .to_decoder_quant()?
            } else {
                None
            };
            let stop = StopRule {
                min_frames,
                min_errors,
                max_frames,
            };
            let points = run_bler(&code, decoder, quant, &snr, &stop, seed)?;
            csvout::write_bler_csv(&mut out, &points)?;
        }
        Cmd::Markov {
            beta,
            zeta,
            eps_s,
            eps_l,
        } => {
            let beta: SpeedGain = beta.parse()?;
            csvout::write_header(&mut out, csvout::MARKOV_HEADER)?;
            for &z in &zeta {
                for &e in &eps_s {
                    let params = TasclParams::from_speed_gain(beta, z, e, eps_l)?;
                    let model = build_model(&params)?;
                    let res = stationary(&model, 1e-12)?;
                    csvout::write_markov_row(&mut out, e, z, beta, &res)?;
                }
            }
        }
        Cmd::Latency { preset, ls } => {
            let p = Preset::by_name(&preset)?;
            let ds = p.ds_latency(ls)?;
            let cl = p.dl_latency()?;
            let beta = speed_gain(cl, ds.c_s, u64::MAX)?;
            writeln!(out, "preset={} list_size={}", p.name, ls).map_err(write_err)?;
            writeln!(
                out,
                "c_mbd={} c_scd={} c_rw={} c_s={}",
                ds.c_mbd, ds.c_scd, ds.c_rw, ds.c_s
            )
            .map_err(write_err)?;
            writeln!(
                out,
                "c_lm={} c_scd_l={} c_fine={} c_zero={} c_l={}",
                p.dl.c_lm, p.dl.c_scd, p.dl.c_fine, p.dl.c_zero, cl
            )
            .map_err(write_err)?;
            writeln!(out, "beta={} ({:.4})", beta, beta.as_f64()).map_err(write_err)?;
        }
        Cmd::Memory {
            preset,
            beta,
            zeta,
            q,
            ls,
        } => {
            let p = Preset::by_name(preset.as_deref().unwrap_or("p1"))?;
            let beta = match beta {
                Some(s) => s.parse()?,
                None => p.speed_gain()?,
            };
            let ls = ls.unwrap_or(p.l_s);
            let m = memory_estimate(p.block_len, q, ls, p.l_l, p.parallelism, beta, zeta)?;
            let ds = p.ds_latency(ls)?;
            writeln!(out, "preset={} beta={} zeta={}", p.name, beta, zeta).map_err(write_err)?;
            writeln!(out, "dl_bits={}", m.dl_bits).map_err(write_err)?;
            writeln!(out, "other_bits={}", m.other_bits).map_err(write_err)?;
            writeln!(out, "overhead_ratio={:.4}", m.overhead_ratio).map_err(write_err)?;
            writeln!(
                out,
                "output_buffer_frames={}",
                output_buffer_frames(beta, zeta)
            )
            .map_err(write_err)?;
            writeln!(
                out,
                "system_latency_cycles={}",
                system_latency(ds.c_s, ds.c_rw, beta, zeta)
            )
            .map_err(write_err)?;
        }
        Cmd::Sched {
            mode,
            beta,
            zeta,
            eps_s,
            eps_l,
            slots,
            preset,
            snr,
            ls,
            ll,
            trace,
            quantized,
        } => {
            let preset_cfg = match &preset {
                Some(name) => Some(Preset::by_name(name)?),
                None => None,
            };
            let (beta, c_s, c_rw) = match (&beta, &preset_cfg) {
                (Some(s), _) => (s.parse::<SpeedGain>()?, 100, 8),
                (None, Some(p)) => {
                    let ds = p.ds_latency(ls.min(2))?;
                    (speed_gain(p.dl_latency()?, ds.c_s, u64::MAX)?, ds.c_s, ds.c_rw)
                }
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "sched needs --beta or --preset".into(),
                    ))
                }
            };
            let params = TasclParams::from_speed_gain(beta, zeta, eps_s, eps_l)?;
            let cfg = SchedulerConfig {
                params,
                c_s,
                c_rw,
            };
            let mut trace_file = match &trace {
                Some(p) => {
                    let mut w = out_writer(&Some(p.clone()))?;
                    csvout::write_header(&mut w, csvout::TRACE_HEADER)?;
                    Some(w)
                }
                None => None,
            };
            let mut trace_cb = trace_file.as_mut().map(|w| {
                move |row: TraceRow| {
                    // Errors surface when the file is flushed on drop.
                    let _ = csvout::write_trace_row(&mut **w, &row);
                }
            });
            let trace_dyn: Option<&mut dyn FnMut(TraceRow)> =
                trace_cb.as_mut().map(|f| f as &mut dyn FnMut(TraceRow));

            match mode.as_str() {
                "bernoulli" => {
                    let stats = simulate_bernoulli(&cfg, slots, seed, trace_dyn)?;
                    write_sched_summary(&mut out, &stats, None)?;
                }
                "full" => {
                    let p = preset_cfg.ok_or_else(|| {
                        Error::InvalidParameter("full mode needs --preset".into())
                    })?;
                    let code = build_preset_code(&p)?;
                    let quant = if quantized {
                        file_cfg
                            .quant
                            .ok_or_else(|| {
                                Error::InvalidParameter(
                                    "--quantized needs a [quant] config section".into(),
                                )
                            })?
                            .to_decoder_quant()?
                    } else {
                        None
                    };
                    let full_cfg = FullModeConfig {
                        code,
                        ebn0_db: snr.ok_or_else(|| {
                            Error::InvalidParameter("full mode needs --snr".into())
                        })?,
                        list_size_fast: ls,
                        list_size_slow: ll,
                        quant,
                        seed,
                    };
                    let res = simulate_full(&cfg, &full_cfg, slots, trace_dyn)?;
                    write_sched_summary(&mut out, &res.stats, Some(&res))?;
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown mode {other:?} (bernoulli or full)"
                    )))
                }
            }
        }
        Cmd::Design {
            preset,
            c_l,
            c_s,
            es_csv,
            el_csv,
            delta_max,
            target_bler,
            zeta_max,
            max_den,
        } => {
            let (c_l, c_s) = match (&preset, c_l, c_s) {
                (Some(name), None, None) => {
                    let p = Preset::by_name(name)?;
                    (p.dl_latency()?, p.ds_latency(p.l_s)?.c_s)
                }
                (None, Some(l), Some(s)) => (l, s),
                _ => {
                    return Err(Error::InvalidParameter(
                        "design needs --preset or both --c-l and --c-s".into(),
                    ))
                }
            };
            let read = |path: &PathBuf, crc: bool| -> Result<Curve> {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
                Curve::new(csvout::read_curve_csv(&text, crc)?)
            };
            let es = read(&es_csv, true)?;
            let el = read(&el_csv, false)?;
            let target = DesignTarget {
                delta_max,
                target_bler,
                zeta_max,
            };
            let outcome = design_search(c_l, c_s, &es, &el, &target, max_den.unwrap_or(u64::MAX))?;
            writeln!(out, "beta={} ({:.4})", outcome.beta, outcome.beta.as_f64())
                .map_err(write_err)?;
            writeln!(out, "zeta={}", outcome.zeta).map_err(write_err)?;
            writeln!(out, "idle_padding_cycles={}", outcome.idle_padding_cycles)
                .map_err(write_err)?;
            writeln!(out, "c_s_padded={}", outcome.c_s_padded).map_err(write_err)?;
            writeln!(out, "snr_at_target_db={}", outcome.snr_at_target).map_err(write_err)?;
            writeln!(out, "eps_s_at_target={}", outcome.eps_s_at_target).map_err(write_err)?;
            writeln!(out, "delta_achieved={}", outcome.delta_achieved).map_err(write_err)?;
        }
        Cmd::Compare {
            beta,
            zeta,
            eps_s,
            eps_l,
            slots,
        } => {
            let beta: SpeedGain = beta.parse()?;
            writeln!(
                out,
                "beta,zeta,eps_s,slots_counted,linf_gap,model_overflow,sim_overflow,z_score"
            )
            .map_err(write_err)?;
            for &e in &eps_s {
                let params = TasclParams::from_speed_gain(beta, zeta, e, eps_l)?;
                let report = compare_model_vs_sim(&params, slots, seed)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    beta,
                    zeta,
                    e,
                    report.counted_slots,
                    report.linf_gap,
                    report.model_overflow,
                    report.sim_overflow,
                    report.z_score
                )
                .map_err(write_err)?;
            }
        }
    }
    Ok(())
}

fn write_err(e: std::io::Error) -> Error {
    Error::Parse(format!("write failed: {e}"))
}

fn write_sched_summary(
    out: &mut impl Write,
    stats: &tascl_core::sched::SchedulerStats,
    full: Option<&tascl_core::sched::FullSimResult>,
) -> Result<()> {
    writeln!(out, "slots={}", stats.slots).map_err(write_err)?;
    writeln!(out, "frames={}", stats.frames).map_err(write_err)?;
    writeln!(out, "ds_failures={}", stats.ds_failures).map_err(write_err)?;
    writeln!(out, "overflows={}", stats.overflows).map_err(write_err)?;
    writeln!(out, "dl_completions={}", stats.dl_completions).map_err(write_err)?;
    writeln!(out, "emitted={}", stats.emitted).map_err(write_err)?;
    writeln!(out, "frame_errors={}", stats.frame_errors).map_err(write_err)?;
    writeln!(out, "error_rate={}", stats.error_rate()).map_err(write_err)?;
    writeln!(out, "overflow_rate={}", stats.overflow_rate()).map_err(write_err)?;
    writeln!(
        out,
        "max_llr_buffer_occupancy={}",
        stats.max_llr_buffer_occupancy
    )
    .map_err(write_err)?;
    writeln!(
        out,
        "max_output_buffer_occupancy={}",
        stats.max_output_buffer_occupancy
    )
    .map_err(write_err)?;
    if let Some(res) = full {
        writeln!(out, "eps_ta={}", res.eps_ta()).map_err(write_err)?;
        writeln!(out, "eps_s_hat={}", res.eps_s_hat()).map_err(write_err)?;
        writeln!(out, "dl_frames={}", res.dl_frames).map_err(write_err)?;
        writeln!(out, "dl_errors={}", res.dl_errors).map_err(write_err)?;
        writeln!(out, "ds_false_accepts={}", res.ds_false_accepts).map_err(write_err)?;
    }
    Ok(())
}
