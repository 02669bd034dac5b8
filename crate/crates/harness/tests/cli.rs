//! End-to-end runs of the `tascl` binary.

use std::path::PathBuf;
use std::process::Command;

fn tascl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tascl"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("tascl-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn construct_then_encode_round_trip() {
    let code_file = tmp("code.toml");
    let status = tascl()
        .args(["construct", "--n", "5", "--k", "16", "--r", "8"])
        .arg("--out")
        .arg(&code_file)
        .status()
        .unwrap();
    assert!(status.success());

    let out = tascl()
        .arg("encode")
        .arg("--code")
        .arg(&code_file)
        .args(["--message", "10110100"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("message=10110100"));
    let codeword = text
        .lines()
        .find_map(|l| l.strip_prefix("codeword="))
        .unwrap();
    assert_eq!(codeword.len(), 32);
    std::fs::remove_file(&code_file).ok();
}

#[test]
fn bler_markov_latency_memory_smoke() {
    let out = tascl()
        .args([
            "bler", "--preset", "p3", "--decoder", "scl:2", "--snr", "2.0", "--min-frames",
            "1024", "--min-errors", "0", "--max-frames", "1024", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("snr_db,"));
    assert_eq!(text.lines().count(), 2);

    let out = tascl()
        .args([
            "markov", "--beta", "3", "--zeta", "1,2", "--eps-s", "0.1,0.3", "--eps-l", "0.01",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);

    let out = tascl().args(["latency", "--preset", "p1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("c_s=203"));
    assert!(text.contains("c_l=647"));

    let out = tascl()
        .args(["memory", "--preset", "p1", "--beta", "3", "--zeta", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("dl_bits=288768"));
    assert!(text.contains("other_bits=62464"));
}

#[test]
fn sched_writes_trace_rows() {
    let trace = tmp("trace.csv");
    let out = tascl()
        .args([
            "sched", "--mode", "bernoulli", "--beta", "5/2", "--zeta", "1", "--eps-s", "0.4",
            "--slots", "200", "--seed", "9",
        ])
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("slot,state,buffer_occ,dl_remaining,event"));
    assert_eq!(text.lines().count(), 201);
    std::fs::remove_file(&trace).ok();
}

#[test]
fn design_exit_codes() {
    let es = tmp("es.csv");
    let el = tmp("el.csv");
    std::fs::write(
        &es,
        "snr_db,frames,errors,crc_fails,bler,crc_fail_rate,ci95,avg_list_terminal,avg_list_sum,truncated\n\
         1.4,1000,420,420,0.42,0.42,0.0,,,false\n\
         3.0,1000,22,22,0.022,0.022,0.0,,,false\n",
    )
    .unwrap();
    std::fs::write(
        &el,
        "snr_db,frames,errors,crc_fails,bler,crc_fail_rate,ci95,avg_list_terminal,avg_list_sum,truncated\n\
         1.4,1000,200,150,0.2,0.15,0.0,,,false\n\
         3.0,1000,1,1,0.0002,0.0002,0.0,,,false\n",
    )
    .unwrap();

    let out = tascl()
        .args(["design", "--preset", "p1"])
        .arg("--es-csv")
        .arg(&es)
        .arg("--el-csv")
        .arg(&el)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("beta=647/203"));
    assert!(text.contains("zeta=2"));

    // A target level the slow-decoder curve never reaches: infeasible.
    let out = tascl()
        .args(["design", "--preset", "p1", "--target-bler", "1e-9"])
        .arg("--es-csv")
        .arg(&es)
        .arg("--el-csv")
        .arg(&el)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // A broken flag value is a plain error.
    let out = tascl()
        .args(["design", "--preset", "nope"])
        .arg("--es-csv")
        .arg(&es)
        .arg("--el-csv")
        .arg(&el)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    std::fs::remove_file(&es).ok();
    std::fs::remove_file(&el).ok();
}

#[test]
fn config_file_supplies_code_and_seed() {
    let cfg = tmp("cfg.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n[code]\nn = 5\nk = 16\nr = 8\n",
    )
    .unwrap();
    let out = tascl()
        .arg("--config")
        .arg(&cfg)
        .args([
            "bler", "--decoder", "sc", "--snr", "3.0", "--min-frames", "512", "--min-errors",
            "0", "--max-frames", "512",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_file(&cfg).ok();
}
