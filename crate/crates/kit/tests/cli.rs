use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qrng_kit::formats::{parse_kv, read_csv};

fn qrng(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrng")).args(args).output().expect("binary runs")
}

fn kv(path: &Path) -> std::collections::BTreeMap<String, String> {
    parse_kv(&fs::read_to_string(path).unwrap())
}

/// Short-block configuration whose worst case is not degenerate.
fn write_demo_config(dir: &Path, m_out: usize) -> String {
    let path = dir.join("demo.conf");
    fs::write(
        &path,
        format!("welch.block_len = 256\ncalib.step = 4\nsim.samples = 4194304\nextractor.m_out = {m_out}\n"),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn write_seed(dir: &Path, n_in: usize, m_out: usize) -> String {
    let bits = n_in + m_out - 1;
    let mut bytes: Vec<u8> = (0..bits.div_ceil(8)).map(|i| (i as u8).wrapping_mul(151).wrapping_add(7)).collect();
    if !bits.is_multiple_of(8) {
        *bytes.last_mut().unwrap() &= (1u8 << (bits % 8)) - 1;
    }
    let path = dir.join("seed.bin");
    fs::write(&path, bytes).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn figure_and_tightness_tables_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(qrng(&["figure2", "--out", out]).status.success());
    assert!(qrng(&["appendix-a", "--out", out]).status.success());
    let fig = read_csv(&dir.path().join("figure2.csv"), &qrng_kit::figures::FIGURE2_HEADER).unwrap();
    assert_eq!(fig.len(), 3 * 2 * 40);
    let tight = read_csv(&dir.path().join("appendix_a.csv"), &qrng_kit::figures::TIGHTNESS_HEADER).unwrap();
    assert!(tight.iter().all(|r| r[3] > 0.0 && r[3] < 1.0));
}

#[test]
fn default_run_is_degenerate_but_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = qrng(&["pipeline", "--out", out, "--samples", "1048576"]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let report = kv(&dir.path().join("report.txt"));
    assert!(report["status"].contains("degenerate"));
    assert_eq!(report["secure_len_bits"], "0");
    assert!(report["failure_probability"].ends_with("unbounded"));
    let ratio: f64 = report["temporal_correlation"].parse().unwrap();
    assert!((0.78..0.88).contains(&ratio), "{ratio}");
}

#[test]
fn pipeline_extracts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_demo_config(dir.path(), 128);
    let seed = write_seed(dir.path(), 1280, 128);
    fs::write(format!("{seed}.provenance"), "eps_seed = 1e-20\n").unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let res = qrng(&["pipeline", "--config", &config, "--seed-file", &seed, "--out", out.to_str().unwrap()]);
            assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
            out
        })
        .collect();
    let report = fs::read(runs[0].join("report.txt")).unwrap();
    assert_eq!(report, fs::read(runs[1].join("report.txt")).unwrap());
    assert_eq!(fs::read(runs[0].join("output.bin")).unwrap(), fs::read(runs[1].join("output.bin")).unwrap());

    let kv = kv(&runs[0].join("report.txt"));
    let secure: u64 = kv["secure_len_bits"].parse().unwrap();
    let h: f64 = kv["h_min_bits"].parse().unwrap();
    assert!(secure >= 128 && (secure as f64) <= 80.0 * h - 2.0 * 1e33f64.log2());
    let runs_done: u64 = kv["hash_runs"].parse().unwrap();
    assert_eq!(runs_done, 4194304 / 80);
    assert_eq!(kv["extracted_len_bits"].parse::<u64>().unwrap(), runs_done * 128);
    assert_eq!(fs::metadata(runs[0].join("output.bin")).unwrap().len(), runs_done * 16);
    assert!(kv["failure_probability"].ends_with("+ 1e-10 + 1e-20"), "{}", kv["failure_probability"]);
    let header = String::from_utf8(report).unwrap();
    assert!(header.contains("# sim.seed = 1") && header.contains("# eps_hash = 1e-33"));
}

#[test]
fn stages_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_demo_config(dir.path(), 128);
    let seed = write_seed(dir.path(), 1280, 128);
    let staged = dir.path().join("staged");
    let whole = dir.path().join("whole");
    for stage in ["simulate", "calibrate", "estimate", "bound", "extract", "report"] {
        let res = qrng(&[stage, "--config", &config, "--seed-file", &seed, "--out", staged.to_str().unwrap()]);
        assert!(res.status.success(), "{stage}: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert!(qrng(&["pipeline", "--config", &config, "--seed-file", &seed, "--out", whole.to_str().unwrap()])
        .status
        .success());
    for file in ["estimates.txt", "transfer_function.csv", "output.bin"] {
        assert_eq!(fs::read(staged.join(file)).unwrap(), fs::read(whole.join(file)).unwrap(), "{file}");
    }
    for file in ["psd_signal.csv", "psd_vacuum.csv", "psd_excess.csv", "autocorr.csv", "qq.csv"] {
        assert!(staged.join(file).exists(), "{file}");
    }
    // vacuum + excess reproduces the signal spectrum
    let spectrum = |name: &str| read_csv(&staged.join(name), &qrng_kit::commands::SPECTRUM_HEADER).unwrap();
    let (sig, vac, exc) = (spectrum("psd_signal.csv"), spectrum("psd_vacuum.csv"), spectrum("psd_excess.csv"));
    assert_eq!(sig.len(), 128);
    assert!(sig.iter().all(|r| (0.0..0.5).contains(&r[0])));
    for ((s, v), e) in sig.iter().zip(&vac).zip(&exc) {
        assert!((v[1] + e[1] - s[1]).abs() <= 1e-9 * s[1], "{s:?} {v:?} {e:?}");
    }
}

#[test]
fn ingest_mode_matches_simulated_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_demo_config(dir.path(), 128);
    let sim = dir.path().join("sim");
    assert!(qrng(&["simulate", "--config", &config, "--out", sim.to_str().unwrap()]).status.success());
    assert!(qrng(&["calibrate", "--config", &config, "--out", sim.to_str().unwrap()]).status.success());
    assert!(qrng(&["estimate", "--config", &config, "--out", sim.to_str().unwrap()]).status.success());

    let ingest = dir.path().join("ingest.conf");
    let mut text = fs::read_to_string(&config).unwrap();
    text.push_str("mode = ingest\ninput.samples = sim/samples.i16\ninput.sweep = sim/sweep.csv\n");
    fs::write(&ingest, text).unwrap();
    let out = dir.path().join("ing");
    let res = qrng(&["pipeline", "--config", ingest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(out.join("estimates.txt")).unwrap(), fs::read(sim.join("estimates.txt")).unwrap());
}

#[test]
fn output_longer_than_secure_length_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_demo_config(dir.path(), 1280);
    let seed = write_seed(dir.path(), 1280, 1280);
    let out = dir.path().join("o");
    let res = qrng(&["pipeline", "--config", &config, "--seed-file", &seed, "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let report = kv(&out.join("report.txt"));
    assert!(report["extraction"].contains("exceeds the secure length"));
    assert_eq!(report["extracted_len_bits"], "0");
    assert!(!out.join("output.bin").exists());

    assert!(qrng(&["bound", "--config", &config, "--out", out.to_str().unwrap()]).status.success());
    let res = qrng(&["extract", "--config", &config, "--seed-file", &seed, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(qrng(&["bound", "--out", out]).status.code(), Some(4));
    assert_eq!(qrng(&["report", "--out", out]).status.code(), Some(4));
    assert_eq!(qrng(&["estimate", "--out", out, "--eps-pe", "2"]).status.code(), Some(1));
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "no.such.key = 1\n").unwrap();
    let res = qrng(&["simulate", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 1"));
    let res = qrng(&["pipeline", "--out", out, "--samples", "1000"]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn benchmark_reports_rates() {
    let res = qrng(&["extract", "--bench", "--bench-blocks", "1000"]);
    assert!(res.status.success());
    let kv = parse_kv(&String::from_utf8(res.stdout).unwrap());
    let out: f64 = kv["output_mbit_per_s"].parse().unwrap();
    let inp: f64 = kv["input_mbit_per_s"].parse().unwrap();
    assert!(out > 0.0 && (inp / out - 2.0).abs() < 0.02);
}
