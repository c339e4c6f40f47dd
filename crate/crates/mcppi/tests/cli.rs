use std::path::Path;
use std::process::Command;

use mcppi::config::{parse_config, ExperimentConfig, Mode};
use mcppi::experiment::{summary_path, trace_path};
use mcppi::{par_batch_rollouts, read_trace, run_seed, write_trace, ConfigError};
use mcppi_core::envs::{batch_rollouts, ControlTask};
use mcppi_core::DMatrix;
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;

fn mcppi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mcppi")).args(args).output().unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn default_configs_round_trip() {
    for mode in Mode::ALL {
        let cfg = ExperimentConfig::default_for(mode);
        assert_eq!(parse_config(&cfg.write(), mode).unwrap(), cfg, "{}", mode.name());
    }
}

#[test]
fn edited_config_round_trips() {
    let text = "[optimizer]\nstrategy = \"essps\"\nn_star = 12.5\n\n[prior]\nkind = \"qrff\"\norder = 7\n\n[mpc]\ngamma = 0.25\n";
    let cfg = parse_config(text, Mode::Mpc).unwrap();
    assert_eq!(cfg.mpc.gamma, 0.25);
    assert_eq!(cfg.prior.order, 7);
    assert_eq!(parse_config(&cfg.write(), Mode::Mpc).unwrap(), cfg);
}

#[test]
fn unknown_keys_are_all_reported() {
    let text = "[optimizer]\nstrategy = \"lbps\"\nalfa = 1.0\n\n[task]\nstep = 10\n";
    let Err(ConfigError::Schema(errors)) = parse_config(text, Mode::Episodic) else { panic!("expected schema error") };
    let joined = errors.join("\n");
    assert!(joined.contains("alfa") && joined.contains("line 3"), "{joined}");
    assert!(joined.contains("step") && joined.contains("line 6"), "{joined}");
}

#[test]
fn malformed_number_names_key_and_line() {
    let text = "[optimizer]\nn_samples = 32\ndelta = 0.5.1\n";
    let err = parse_config(text, Mode::Bbo).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 3") && msg.contains("delta"), "{msg}");

    let text = "[mpc]\nhorizon = 30\ngamma = \"high\"\n";
    let msg = parse_config(text, Mode::Mpc).unwrap_err().to_string();
    assert!(msg.contains("line 3") && msg.contains("gamma"), "{msg}");
}

#[test]
fn out_of_range_values_are_rejected() {
    let msg = parse_config("[optimizer]\ndelta = 1.5\n", Mode::Bbo).unwrap_err().to_string();
    assert!(msg.contains("delta"), "{msg}");
    let msg = parse_config("[optimizer]\nstrategy = \"essps\"\nn_star = 100.0\n", Mode::Bbo).unwrap_err().to_string();
    assert!(msg.contains("n_star") || msg.contains("N*") || msg.contains("ESS"), "{msg}");
}

#[test]
fn trace_rows_match_iterations() {
    let mut cfg = ExperimentConfig::default_for(Mode::Bbo);
    cfg.optimizer.n_iter = 7;
    let out = run_seed(&cfg, 3, false);
    assert_eq!(out.rows.len(), 7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trace(&out.rows, &path).unwrap();
    let back = read_trace(&path).unwrap();
    assert_eq!(back.len(), 7);
    assert_eq!(format!("{back:?}"), format!("{:?}", out.rows));
    let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "step,iter,alpha,ess,return_min,return_median,return_max,smoothness,wall_ms");
}

#[test]
fn mpc_trace_has_warm_start_and_step_rows() {
    let text = "[task]\nsteps = 6\n[mpc]\nhorizon = 5\nwarmstart_iters = 3\niters_per_step = 2\n[optimizer]\nn_samples = 8\n";
    let cfg = parse_config(text, Mode::Mpc).unwrap();
    let out = run_seed(&cfg, 0, false);
    assert_eq!(out.summary.status, "ok");
    assert_eq!(out.rows.iter().filter(|r| r.step == -1).count(), 3);
    assert_eq!(out.rows.iter().filter(|r| r.step >= 0).count(), 12);
}

#[test]
fn bbo_defaults_write_25_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bbo");
    let o = mcppi(&["bbo", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for seed in 0..25 {
        assert!(trace_path(&out, seed).exists(), "seed {seed}");
    }
    let summary = std::fs::read_to_string(summary_path(&out)).unwrap();
    assert_eq!(summary.lines().count(), 26);
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(1) == Some("ok")));
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[task]\nsteps = 20\n[mpc]\nhorizon = 8\nwarmstart_iters = 4\n[optimizer]\nn_samples = 16\n")
        .unwrap();
    for mode in ["bbo", "episodic", "mpc"] {
        let a = dir.path().join(format!("{mode}_a"));
        let b = dir.path().join(format!("{mode}_b"));
        for out in [&a, &b] {
            let mut args = vec![mode, "--out", out.to_str().unwrap(), "--seeds", "0-3"];
            if mode != "bbo" {
                args.extend(["--config", cfg.to_str().unwrap()]);
            }
            let o = mcppi(&args);
            assert!(o.status.success(), "{mode}: {}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(read_dir_sorted(&a), read_dir_sorted(&b), "{mode}");
    }
}

#[test]
fn unknown_strategy_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[optimizer]\nstrategy = \"annealing\"\n").unwrap();
    let out = dir.path().join("never");
    let o = mcppi(&["bbo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strategy"));
    assert!(!out.exists());
}

#[test]
fn help_lists_every_key_with_default() {
    let o = mcppi(&["mpc", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    let table = ExperimentConfig::default_for(Mode::Mpc).to_table();
    for (section, body) in &table {
        assert!(text.contains(&format!("[{section}]")), "{section}");
        for key in body.as_table().unwrap().keys() {
            assert!(text.contains(&format!("    {key} = ")), "{section}.{key}");
        }
    }
}

#[test]
fn parallel_rollouts_match_sequential() {
    let mut rng = mcppi_core::Rng::seed_from_u64(12);
    let task = ControlTask::pendulum();
    let seqs: Vec<DMatrix<f64>> =
        (0..64).map(|_| DMatrix::from_fn(250, 1, |_, _| 10.0 * rng.sample::<f64, _>(StandardNormal))).collect();
    let s0 = task.initial_state();
    let a: Vec<u64> = batch_rollouts(&task, &seqs, &s0).into_iter().map(|r| r.unwrap().to_bits()).collect();
    let b: Vec<u64> = par_batch_rollouts(&task, &seqs, &s0).into_iter().map(|r| r.unwrap().to_bits()).collect();
    assert_eq!(a, b);
}
