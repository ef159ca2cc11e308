use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ris_inr::config::ExperimentConfig;
use ris_inr::dataset::{self, Dataset};
use ris_inr::eval;
use ris_inr::inr::train::{train, EpochStats};
use ris_inr::inr::InrModel;
use ris_inr::oracle::{self, OracleResult};
use ris_inr::{Error, Execution, Point3, Result};

#[derive(Parser)]
#[command(name = "ris-inr", version, about = "1-bit RIS codebook prediction from receiver position")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML). Defaults are used for anything missing.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed this subcommand uses.
    #[arg(long)]
    seed: Option<u64>,
    /// Run every loop on the current thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Label a grid of receiver points with the greedy traversal.
    GenDataset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on the training split of a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-epoch CSV log.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Accuracy and received-power report for a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Part::Test)]
        split: Part,
        /// CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train every activation x PE x encoding cell and tabulate test accuracy.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test accuracy as a function of the fraction of training data used.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a labeling oracle on grid points or on random points in the box.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Method::Greedy)]
        method: Method,
        /// Sample this many uniform points in the grid box instead of the grid.
        #[arg(long)]
        random: Option<usize>,
        /// Largest search size, in bits, the exhaustive methods accept.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective config as TOML.
    PrintConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Train,
    Val,
    Test,
    All,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Greedy,
    Rank1,
    Full,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error: Usage: {msg}: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            Some(path) => ExperimentConfig::load(path),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenDataset { common, out } => {
            let mut cfg = common.load()?;
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let data = dataset::generate(&cfg.dataset_meta(), common.exec())?;
            data.save(&out)
        }
        Command::Train { common, dataset, out, history } => {
            let mut cfg = common.load()?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            let data = Dataset::load(&dataset)?;
            let splits = dataset::split(&data)?;
            let g = &data.meta.geometry;
            let arch = cfg.model.architecture(g.rows, g.cols)?;
            let (model, hist) = train(&splits.train, &splits.val, &arch, &cfg.train)?;
            model.save(&out)?;
            if let Some(path) = history {
                write_history(&hist, create(&path)?)?;
            }
            Ok(())
        }
        Command::Eval { common, dataset, model, split, out } => {
            let mut cfg = common.load()?;
            if let Some(s) = common.seed {
                cfg.eval.random_seed = s;
            }
            let data = Dataset::load(&dataset)?;
            let model = InrModel::load(&model)?;
            let samples = match split {
                Part::All => data.samples.clone(),
                part => {
                    let s = dataset::split(&data)?;
                    match part {
                        Part::Train => s.train,
                        Part::Val => s.val,
                        _ => s.test,
                    }
                }
            };
            let report = eval::evaluate(&model, &data, &samples, cfg.eval.random_seed, common.exec())?;
            report.write_csv(output(out.as_deref())?)
        }
        Command::Ablate { common, dataset, out } => {
            let mut cfg = common.load()?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            let data = Dataset::load(&dataset)?;
            let cells = eval::ablate(&data, &cfg.model, &cfg.ablate, &cfg.train, common.exec())?;
            eval::write_ablation_csv(&cells, output(out.as_deref())?)
        }
        Command::Sweep { common, dataset, out } => {
            let mut cfg = common.load()?;
            if let Some(s) = common.seed {
                cfg.train.seed = s;
            }
            let data = Dataset::load(&dataset)?;
            let mut variants = vec![cfg.model.clone()];
            if cfg.sweep.include_plain {
                let plain = ris_inr::config::ModelConfig {
                    positional_encoding: false,
                    encoding: false,
                    ..cfg.model.clone()
                };
                if plain != cfg.model {
                    variants.push(plain);
                }
            }
            let points = eval::sweep_data_fraction(&data, &cfg.sweep.fractions, &variants, &cfg.train, common.exec())?;
            eval::write_sweep_csv(&points, output(out.as_deref())?)
        }
        Command::Oracle { common, method, random, budget, out } => {
            let cfg = common.load()?;
            let meta = cfg.dataset_meta();
            let geom = meta.validate()?;
            let points: Vec<Point3> = match random {
                None => meta.grid.points(),
                Some(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(cfg.seed));
                    let (lo, hi) = (meta.grid.box_min, meta.grid.box_max);
                    (0..n)
                        .map(|_| std::array::from_fn(|k| rng.gen_range(lo[k]..=hi[k])))
                        .collect()
                }
            };
            let exec = common.exec();
            // Exhaustive searches parallelize internally; the greedy pass
            // parallelizes over points.
            let results: Vec<OracleResult> = match method {
                Method::Greedy => exec.try_map(points.len(), |i| oracle::greedy_traversal(&geom, points[i]))?,
                Method::Rank1 => {
                    let b = budget.unwrap_or(oracle::DEFAULT_RANK1_BUDGET);
                    points
                        .iter()
                        .map(|&v| oracle::exhaustive_rank1(&geom, v, b, exec))
                        .collect::<Result<_>>()?
                }
                Method::Full => {
                    let b = budget.unwrap_or(oracle::DEFAULT_FULL_BUDGET);
                    points
                        .iter()
                        .map(|&v| oracle::exhaustive_full(&geom, v, b, exec))
                        .collect::<Result<_>>()?
                }
            };
            write_oracle(&points, &results, output(out.as_deref())?)
        }
        Command::PrintConfig { config } => {
            let cfg = Common { config, seed: None, sequential: false }.load()?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct HistoryRow {
    epoch: usize,
    train_loss: f64,
    val_bit_accuracy: Option<f64>,
}

fn write_history<W: Write>(hist: &[EpochStats], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for h in hist {
        out.serialize(HistoryRow {
            epoch: h.epoch,
            train_loss: h.train_loss,
            val_bit_accuracy: h.val_bit_accuracy,
        })?;
    }
    out.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })
}

#[derive(Serialize)]
struct OracleRow {
    index: usize,
    x: f64,
    y: f64,
    z: f64,
    power_dbm: f64,
    rank1: bool,
    passes: usize,
    evaluations: u64,
    /// Encoded label bits for rank-1 results, else the row-major codebook bits.
    bits: String,
}

fn write_oracle<W: Write>(points: &[Point3], results: &[OracleResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (index, (v, r)) in points.iter().zip(results).enumerate() {
        let bits = match r.codebook.encode() {
            Ok(label) => label.to_string(),
            Err(_) => r.codebook.to_bits().iter().map(|b| char::from(b'0' + b)).collect(),
        };
        out.serialize(OracleRow {
            index,
            x: v[0],
            y: v[1],
            z: v[2],
            power_dbm: r.power.dbm,
            rank1: r.rank1,
            passes: r.passes,
            evaluations: r.evaluations,
            bits,
        })?;
    }
    out.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })
}
