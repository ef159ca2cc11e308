use std::path::Path;
use std::process::{Command, Output};

use ris_inr::config::ExperimentConfig;
use ris_inr::dataset::Dataset;
use ris_inr::inr::InrModel;

const TINY: &str = r#"
seed = 3

[scenario]
rows = 3
cols = 4

[grid]
counts = [4, 3, 3]

[model]
levels = 3
hidden_layers = 1
hidden_width = 8

[train]
learning_rate = 0.05
batch_size = 8
epochs = 3

[ablate]
activations = ["tanh"]

[sweep]
fractions = [0.5, 1.0]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-inr"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_line(out: &Output) -> String {
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {stderr}");
    lines[0].to_string()
}

fn setup(dir: &Path) -> (String, String) {
    let cfg = dir.join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let data = dir.join("data.txt");
    ok(&["gen-dataset", "--config", s(&cfg), "--out", s(&data)]);
    (s(&cfg).to_string(), s(&data).to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn print_config_round_trips() {
    let text = ok(&["print-config"]);
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), ExperimentConfig::default());
}

#[test]
fn gen_dataset_writes_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data) = setup(dir.path());
    let d = Dataset::load(Path::new(&data)).unwrap();
    assert_eq!(d.samples.len(), 36);
    assert_eq!(d.meta.seed, 3);
    assert_eq!(d.meta.label_len(), 6);

    let other = dir.path().join("other.txt");
    ok(&["gen-dataset", "--config", &cfg, "--seed", "11", "--out", s(&other)]);
    let e = Dataset::load(&other).unwrap();
    assert_eq!(e.meta.seed, 11);
    assert_eq!(e.samples, d.samples);
}

#[test]
fn sequential_and_parallel_outputs_match() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data) = setup(dir.path());
    let seq = dir.path().join("seq.txt");
    ok(&["gen-dataset", "--config", &cfg, "--sequential", "--out", s(&seq)]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&seq).unwrap());
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data) = setup(dir.path());
    let ckpt = dir.path().join("model.txt");
    let hist = dir.path().join("hist.csv");
    ok(&["train", "--config", &cfg, "--dataset", &data, "--out", s(&ckpt), "--history", s(&hist)]);
    let model = InrModel::load(&ckpt).unwrap();
    assert_eq!(model.net.config().output_dim, 6);
    assert_eq!(model.net.config().input_dim, 18);

    let hist = std::fs::read_to_string(&hist).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next(), Some("epoch,train_loss,val_bit_accuracy"));
    assert_eq!(lines.count(), 3);

    let report = ok(&["eval", "--config", &cfg, "--dataset", &data, "--model", s(&ckpt)]);
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..4], ["fingerprint", "sample_count", "bit_accuracy", "element_accuracy"]);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), header.len());
    assert!(lines.next().is_none());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!(col("sample_count").parse::<usize>().unwrap() > 0);
    let acc: f64 = col("bit_accuracy").parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let label: f64 = col("mean_power_label_dbm").parse().unwrap();
    let initial: f64 = col("mean_power_initial_dbm").parse().unwrap();
    assert!(label >= initial);

    let all = ok(&["eval", "--config", &cfg, "--dataset", &data, "--model", s(&ckpt), "--split", "all"]);
    assert!(all.lines().nth(1).unwrap().contains(",36,"));
}

#[test]
fn ablate_and_sweep_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data) = setup(dir.path());
    let table = ok(&["ablate", "--config", &cfg, "--dataset", &data]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "activation,pe,enc_bit_accuracy,wo_enc_bit_accuracy,enc_element_accuracy,wo_enc_element_accuracy"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("tanh,false,"));
    assert!(lines[2].starts_with("tanh,true,"));

    let out = dir.path().join("sweep.csv");
    ok(&["sweep", "--config", &cfg, "--dataset", &data, "--out", s(&out)]);
    let sweep = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "variant,fraction,train_count,bit_accuracy,element_accuracy");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("relu+pe+enc,0.5,"));
    assert!(lines[4].starts_with("relu,1.0,"));
}

#[test]
fn oracle_methods() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, data) = setup(dir.path());
    let greedy = ok(&["oracle", "--config", &cfg]);
    let lines: Vec<&str> = greedy.lines().collect();
    assert_eq!(lines[0], "index,x,y,z,power_dbm,rank1,passes,evaluations,bits");
    assert_eq!(lines.len(), 37);
    // Grid order and labels agree with the dataset file.
    let d = Dataset::load(Path::new(&data)).unwrap();
    for (line, sample) in lines[1..].iter().zip(&d.samples) {
        assert!(line.ends_with(&format!(",{}", sample.label)), "{line}");
    }

    let full = ok(&["oracle", "--config", &cfg, "--method", "full", "--random", "5", "--seed", "1"]);
    assert_eq!(full.lines().count(), 6);
    assert!(full.lines().skip(1).all(|l| l.split(',').nth(7) == Some("4096")));
    let rank1 = ok(&["oracle", "--config", &cfg, "--method", "rank1", "--random", "5", "--seed", "1"]);
    assert!(rank1.lines().skip(1).all(|l| l.split(',').nth(7) == Some("64")));

    let err = error_line(&run(&["oracle", "--config", &cfg, "--method", "full", "--budget", "8"]));
    assert!(err.starts_with("error: BudgetExceeded: "), "{err}");
}

#[test]
fn errors_are_single_machine_readable_lines() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let err = error_line(&run(&["train", "--dataset", s(&missing), "--out", "x"]));
    assert!(err.starts_with("error: Io: "), "{err}");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nwidth = 3\n").unwrap();
    let err = error_line(&run(&["gen-dataset", "--config", s(&bad), "--out", "x"]));
    assert!(err.starts_with("error: InvalidConfig: "), "{err}");

    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "not a dataset\n").unwrap();
    let err = error_line(&run(&["ablate", "--dataset", s(&junk)]));
    assert!(err.starts_with("error: VersionMismatch: "), "{err}");

    let err = error_line(&run(&["train", "--bogus"]));
    assert!(err.starts_with("error: Usage: "), "{err}");
    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(2));
}
