use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mvlatent::cli::{CHECKPOINT_DIR, EVAL_REPORT_FILE, EXIT_CONFIG, EXIT_IO, METRICS_FILE, RESOLVED_CONFIG_FILE, SWEEP_FILE};

fn mvlatent(args: &[&str]) -> Output {
    mvlatent_env(args, &[])
}

fn mvlatent_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mvlatent"));
    cmd.args(args).env_remove("MVLATENT_THREADS").env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "status {:?}, stderr:\n{}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, kind: &str, data: &str) -> String {
    let text = format!(
        r#"{{
  "data": {data},
  "model": {{ "kind": "{kind}", "d_z": 3, "d_hx": 2, "d_hy": 2, "encoder_widths": [16], "decoder_widths": [16] }},
  "train": {{ "epochs": 2, "batch_size": 50, "seed": 1 }},
  "eval": {{ "include_raw": false, "c_grid": [1.0] }}
}}"#
    );
    let path = dir.join(format!("{kind}.json"));
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL_DATA: &str = r#"{ "source": "synthetic", "train": 150, "tune": 50, "test": 50, "seed": 2 }"#;

#[test]
fn help_and_usage_errors() {
    let help = mvlatent(&["--help"]);
    let text = ok(&help);
    for sub in ["gen-data", "train", "eval", "reconstruct", "traverse", "sweep-mu"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    assert_eq!(mvlatent(&["frobnicate"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(mvlatent(&["train", "--seed", "x"]).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn config_and_io_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{ "trian": {} }"#).unwrap();
    let out = mvlatent(&["train", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let missing = dir.path().join("missing.json");
    let out = mvlatent(&["train", "--config", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_IO));

    assert_eq!(mvlatent(&["eval"]).status.code(), Some(EXIT_CONFIG));
    let nowhere = dir.path().join("nowhere");
    assert_eq!(mvlatent(&["eval", "--checkpoint", nowhere.to_str().unwrap()]).status.code(), Some(EXIT_IO));
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "VCCA", SMALL_DATA);
    let data = dir.path().join("data");
    let args = ["gen-data", "--config", &cfg, "--out", data.to_str().unwrap()];
    assert_eq!(mvlatent_env(&args, &[("MVLATENT_THREADS", "zero")]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(mvlatent_env(&args, &[("MVLATENT_THREADS", "0")]).status.code(), Some(EXIT_CONFIG));
    ok(&mvlatent_env(&args, &[("MVLATENT_THREADS", "1")]));
}

#[test]
fn pipeline_from_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let gen_cfg = write_config(root, "VCCA_PRIVATE", SMALL_DATA);
    let data = root.join("data");
    ok(&mvlatent(&["gen-data", "--config", &gen_cfg, "--out", data.to_str().unwrap(), "--seed", "7"]));

    let from_dir = format!(r#"{{ "source": "directory", "path": {:?} }}"#, data.to_str().unwrap());
    let cfg = write_config(root, "VCCA_PRIVATE", &from_dir);
    let run = root.join("run");
    ok(&mvlatent(&["train", "--config", &cfg, "--out", run.to_str().unwrap(), "--seed", "3"]));
    assert!(run.join(RESOLVED_CONFIG_FILE).is_file());
    let metrics = fs::read_to_string(run.join(METRICS_FILE)).unwrap();
    assert!(metrics.starts_with("epoch,step,"));
    assert!(metrics.lines().last().unwrap().starts_with("1,"), "two epochs logged:\n{metrics}");

    // The resolved config next to the checkpoint is picked up without --config.
    let ck = run.join(CHECKPOINT_DIR);
    let ck = ck.to_str().unwrap();
    let eval_dir = root.join("eval");
    let stdout = ok(&mvlatent(&["eval", "--checkpoint", ck, "--out", eval_dir.to_str().unwrap()]));
    let printed: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let stored: serde_json::Value = serde_json::from_str(&fs::read_to_string(eval_dir.join(EVAL_REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(printed, stored);

    for (cmd, file) in [("reconstruct", "recon.pgm"), ("traverse", "traverse.pgm")] {
        let path = root.join(file);
        ok(&mvlatent(&[cmd, "--checkpoint", ck, "--out", path.to_str().unwrap(), "--rows", "3"]));
        assert!(fs::read(&path).unwrap().starts_with(b"P5"), "{cmd} wrote a binary PGM");
    }

    let more = root.join("more");
    ok(&mvlatent(&["train", "--config", &cfg, "--out", more.to_str().unwrap(), "--seed", "3", "--checkpoint", ck]));
}

#[test]
fn sweep_mu_writes_one_row_per_weight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "BI_VCCA", SMALL_DATA);
    let out = dir.path().join("sweep");
    let stdout = ok(&mvlatent(&["sweep-mu", "--config", &cfg, "--out", out.to_str().unwrap(), "--mu", "1,0.5"]));
    let file = fs::read_to_string(out.join(SWEEP_FILE)).unwrap();
    assert_eq!(stdout, file);
    assert_eq!(file.lines().count(), 3);
    assert!(file.lines().nth(2).unwrap().starts_with("0.5,"));

    let single = write_config(dir.path(), "VCCA", SMALL_DATA);
    let out = mvlatent(&["sweep-mu", "--config", &single, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}
