use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rids_core::attack::{presets, ScenarioConfig};
use rids_core::classifier::{
    deserialize_model, evaluate, format_table, serialize_model, write_table_csv, ModelKind, TableRow, TrainParams,
};
use rids_core::controller::write_alarm_log;
use rids_core::dataset::label_counts;
use rids_core::frame::{AttackLabel, FrameKind};
use rids_core::runner::{load_config, prepare_split, replay, train_on, Dataset};

/// WLAN intrusion detection lab: simulate traffic, train classifiers and
/// replay scenarios through the flood detector and controller.
#[derive(Parser)]
#[command(name = "rids", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write frames.bin, frames.csv, manifest.txt and scenario.cfg.
    Generate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a dataset directory and report held-out metrics.
    Train {
        /// Dataset directory written by `generate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelArg::Tree)]
        model: ModelArg,
        /// Output directory for model files and reports.
        #[arg(long)]
        out: PathBuf,
        /// Seed for balancing, splitting and forest sampling.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Evaluate a saved model on a dataset's held-out split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "model-file")]
        model_file: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Run a scenario through per-AP flood detection and the controller.
    Replay {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long = "model-file")]
        model_file: PathBuf,
        /// Directory for report.txt, attacks.csv and alarms.log.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit non-zero unless every configured attack is detected as expected.
        #[arg(long = "assert")]
        assert: bool,
    },
    /// Summarize a dataset directory.
    Inspect {
        #[arg(long)]
        data: PathBuf,
        /// Frames to print.
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: training, composite, baseline, or an attack name
    /// (Deauth, RogueAp, EvilTwin, Krack, BeaconFlood).
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => preset(name, self.seed.unwrap_or(7))?,
            (None, None) => bail!("pass --config <file> or --preset <name>"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn preset(name: &str, seed: u64) -> Result<ScenarioConfig> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "training" => presets::training_corpus(seed),
        "composite" => presets::composite(seed),
        "baseline" => presets::baseline_only(seed, 60.0),
        other => match presets::ATTACKS.iter().find(|l| l.name().eq_ignore_ascii_case(other)) {
            Some(&label) => presets::single_attack(label, seed),
            None => bail!("unknown preset '{name}'"),
        },
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Logreg,
    Tree,
    Forest,
    /// Train all three and print the comparison table.
    All,
}

impl ModelArg {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelArg::Logreg => vec![ModelKind::LogReg],
            ModelArg::Tree => vec![ModelKind::Tree],
            ModelArg::Forest => vec![ModelKind::Forest],
            ModelArg::All => ModelKind::ALL.to_vec(),
        }
    }
}

fn main() -> ExitCode {
    // exit quietly when piped into a reader that closes early
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIDS_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Generate { scenario, out } => {
            let cfg = scenario.load()?;
            let t = Instant::now();
            let ds = Dataset::generate(cfg);
            ds.write_dir(&out)?;
            let m = ds.manifest();
            println!("wrote {} frames to {} in {:.1?}", m.frames, out.display(), t.elapsed());
            print_counts(&m.counts);
        }
        Command::Train { data, model, out, seed } => {
            let ds = Dataset::read_dir(&data)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let mut rows = Vec::new();
            for kind in model.kinds() {
                let o = train_on(&ds, kind, &TrainParams::default(), seed)?;
                let path = out.join(format!("{kind}.model"));
                fs::write(&path, serialize_model(&o.model)).with_context(|| format!("writing {}", path.display()))?;
                println!(
                    "{}: {} train / {} test vectors, trained in {:.1?}, {} bytes -> {}",
                    kind.title(),
                    o.train_samples,
                    o.test_samples,
                    o.train_time,
                    o.model_bytes,
                    path.display()
                );
                println!("{}", o.report.confusion_table());
                rows.push(TableRow { classifier: kind.title().to_string(), report: o.report, model_bytes: o.model_bytes });
            }
            let table = format_table(&rows);
            print!("{table}");
            fs::write(out.join("report.txt"), &table)?;
            write_table_csv(fs::File::create(out.join("report.csv"))?, &rows)?;
        }
        Command::Eval { data, model_file, seed } => {
            let model = read_model(&model_file)?;
            let ds = Dataset::read_dir(&data)?;
            let (_, test) = prepare_split(&ds, seed);
            let report = evaluate(&model, &test);
            let bytes = fs::metadata(&model_file)?.len() as usize;
            print!(
                "{}",
                format_table(&[TableRow { classifier: model.kind().title().to_string(), report: report.clone(), model_bytes: bytes }])
            );
            println!("{}", report.confusion_table());
        }
        Command::Replay { scenario, model_file, out, assert } => {
            let cfg = scenario.load()?;
            let model = read_model(&model_file)?;
            let ds = Dataset::generate(cfg);
            let report = replay(&ds.config, &ds.frames, model)?;
            let text = report.to_text();
            print!("{text}");
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                fs::write(dir.join("report.txt"), &text)?;
                fs::write(dir.join("attacks.csv"), report.attacks_csv())?;
                write_alarm_log(fs::File::create(dir.join("alarms.log"))?, &report.alarms)?;
            }
            if assert {
                let failures = report.check();
                if !failures.is_empty() {
                    for f in &failures {
                        eprintln!("FAIL {f}");
                    }
                    return Ok(ExitCode::from(1));
                }
                println!("all scenario assertions passed");
            }
        }
        Command::Inspect { data, limit } => {
            let ds = Dataset::read_dir(&data)?;
            let cfg = &ds.config;
            println!("seed {}  duration {} s  {} frames", cfg.seed, cfg.duration_s, ds.frames.len());
            for ap in &cfg.aps {
                println!("ap {} '{}' {} ({} stations)", ap.bssid, ap.ssid, ap.suite, cfg.users(ap.bssid));
            }
            for a in &cfg.attacks {
                println!("attack {a}");
            }
            print_counts(&rids_core::runner::Manifest::of(cfg.seed, &ds.frames).counts);
            let mut kinds = [0usize; 10];
            for f in &ds.frames {
                kinds[f.kind.code() as usize] += 1;
            }
            for k in FrameKind::ALL {
                println!("  {:<22}{:>9}", k.name(), kinds[k.code() as usize]);
            }
            let features = rids_core::dataset::scenario_features(cfg, &ds.frames);
            println!("feature vectors {} (per label {:?})", features.len(), label_counts(&features));
            for f in ds.frames.iter().take(limit) {
                println!("  {}", rids_core::frame::frame_to_csv_row(f));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_model(path: &Path) -> Result<rids_core::classifier::Model> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_model(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn print_counts(counts: &[usize; AttackLabel::COUNT]) {
    for l in AttackLabel::ALL {
        println!("  {:<12}{:>9}", l.name(), counts[l.index()]);
    }
}
