//! Pipeline drivers behind the command-line tool: dataset files, training,
//! evaluation and end-to-end replay.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use crate::attack::{gen_scenario, AttackSpec, ScenarioConfig};
use crate::classifier::{evaluate, serialize_model, train, EvalReport, Model, ModelKind, TrainParams};
use crate::controller::{Alarm, Controller};
use crate::dataset::{balance, scenario_features, stratified_split, TRAIN_FRACTION};
use crate::fds::{ApMonitor, CaptureBatch, TriggerDecision, QUANTUM_US};
use crate::features::extract_window;
use crate::frame::{decode_stream, encode_stream, read_csv, write_csv, AttackLabel, Frame};
use crate::wire::{frame_message, parse_message, WireMessage};

pub const FRAMES_BIN: &str = "frames.bin";
pub const FRAMES_CSV: &str = "frames.csv";
pub const MANIFEST: &str = "manifest.txt";
pub const SCENARIO_CFG: &str = "scenario.cfg";

/// Alarms are expected within this many quanta of attack onset.
pub const MAX_TRIGGER_LATENCY_QUANTA: u64 = 2;

/// Dataset summary written next to the frame files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub seed: u64,
    pub frames: usize,
    pub counts: [usize; AttackLabel::COUNT],
}

impl Manifest {
    pub fn of(seed: u64, frames: &[Frame]) -> Self {
        let mut counts = [0; AttackLabel::COUNT];
        for f in frames {
            counts[f.label.index()] += 1;
        }
        Manifest { seed, frames: frames.len(), counts }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("seed = {}\nframes = {}\n", self.seed, self.frames);
        for l in AttackLabel::ALL {
            let _ = writeln!(s, "count.{} = {}", l.name(), self.counts[l.index()]);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest { seed: 0, frames: 0, counts: [0; AttackLabel::COUNT] };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("manifest line {}: expected key = value", n + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<u64>().with_context(|| format!("manifest line {}: bad number '{v}'", n + 1));
            match k {
                "seed" => m.seed = num()?,
                "frames" => m.frames = num()? as usize,
                _ => {
                    let label = k
                        .strip_prefix("count.")
                        .and_then(|l| l.parse::<AttackLabel>().ok())
                        .ok_or_else(|| anyhow!("manifest line {}: unknown key '{k}'", n + 1))?;
                    m.counts[label.index()] = num()? as usize;
                }
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: ScenarioConfig,
    pub frames: Vec<Frame>,
}

impl Dataset {
    pub fn generate(config: ScenarioConfig) -> Self {
        let frames = gen_scenario(&config);
        Dataset { config, frames }
    }

    pub fn manifest(&self) -> Manifest {
        Manifest::of(self.config.seed, &self.frames)
    }

    /// Writes the binary stream, CSV, manifest and scenario config into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(FRAMES_BIN), encode_stream(&self.frames)?)?;
        let csv = fs::File::create(dir.join(FRAMES_CSV))?;
        write_csv(BufWriter::new(csv), &self.frames)?;
        fs::write(dir.join(MANIFEST), self.manifest().to_text())?;
        fs::write(dir.join(SCENARIO_CFG), self.config.to_text())?;
        Ok(())
    }

    /// Reads a dataset directory. Frames come from the binary stream when
    /// present, else from the CSV.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let cfg_path = dir.join(SCENARIO_CFG);
        let text = fs::read_to_string(&cfg_path).with_context(|| format!("reading {}", cfg_path.display()))?;
        let config = ScenarioConfig::parse(&text).with_context(|| format!("in {}", cfg_path.display()))?;
        let bin = dir.join(FRAMES_BIN);
        let frames = if bin.exists() {
            decode_stream(&fs::read(&bin)?).with_context(|| format!("decoding {}", bin.display()))?
        } else {
            let csv = dir.join(FRAMES_CSV);
            read_csv(fs::File::open(&csv).with_context(|| format!("opening {}", csv.display()))?)
                .with_context(|| format!("in {}", csv.display()))?
        };
        Ok(Dataset { config, frames })
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub report: EvalReport,
    pub train_samples: usize,
    pub test_samples: usize,
    pub model_bytes: usize,
    pub train_time: Duration,
}

/// Balanced, stratified 70/30 split of a dataset's feature vectors.
pub fn prepare_split(
    ds: &Dataset,
    seed: u64,
) -> (Vec<crate::features::LabeledVector>, Vec<crate::features::LabeledVector>) {
    let data = scenario_features(&ds.config, &ds.frames);
    let balanced = balance(&data, seed);
    stratified_split(&balanced, TRAIN_FRACTION, seed)
}

pub fn train_on(ds: &Dataset, kind: ModelKind, params: &TrainParams, seed: u64) -> Result<TrainOutcome> {
    let (train_set, test_set) = prepare_split(ds, seed);
    log::info!("training {kind} on {} vectors, testing on {}", train_set.len(), test_set.len());
    let t = Instant::now();
    let model = train(kind, &train_set, params, seed)?;
    let train_time = t.elapsed();
    let report = evaluate(&model, &test_set);
    let model_bytes = serialize_model(&model).len();
    Ok(TrainOutcome {
        model,
        report,
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        model_bytes,
        train_time,
    })
}

/// What happened to one configured attack during replay.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub spec: AttackSpec,
    /// Quanta from onset to the first capture on the target AP.
    pub trigger_latency_quanta: Option<u64>,
    /// Distinct alarm classes raised on the target AP during the attack.
    pub alarm_classes: Vec<AttackLabel>,
}

impl AttackOutcome {
    pub fn detected(&self) -> bool {
        self.alarm_classes.contains(&self.spec.label)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub fds_ms: f64,
    pub classify_total_ms: f64,
    pub classify_max_batch_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub frames: usize,
    pub quanta: usize,
    pub triggers: usize,
    pub alarms: Vec<Alarm>,
    pub attacks: Vec<AttackOutcome>,
    pub notifications: usize,
    /// Per-frame classification quality over every captured frame.
    pub eval: EvalReport,
    pub timings: Timings,
}

impl RunReport {
    pub fn alarm_classes(&self) -> BTreeSet<AttackLabel> {
        self.alarms.iter().map(|a| a.attack).collect()
    }

    /// Failed expectations; empty when the run behaved as configured.
    pub fn check(&self) -> Vec<String> {
        let mut failures = Vec::new();
        for a in &self.attacks {
            let what = format!("{} at {}s on {}", a.spec.label, a.spec.start_s, a.spec.target_ap);
            match a.trigger_latency_quanta {
                None => failures.push(format!("{what}: never triggered a capture")),
                Some(q) if q > MAX_TRIGGER_LATENCY_QUANTA => {
                    failures.push(format!("{what}: first capture after {q} quanta"))
                }
                _ => {}
            }
            if !a.detected() {
                failures.push(format!("{what}: no {} alarm (saw {:?})", a.spec.label, a.alarm_classes));
            }
        }
        let classes = self.alarm_classes();
        match self.attacks.as_slice() {
            [] if !self.alarms.is_empty() => failures.push(format!("{} alarms on attack-free traffic", self.alarms.len())),
            [only] if classes.len() != 1 || !classes.contains(&only.spec.label) => {
                failures.push(format!("expected only {} alarms, saw {:?}", only.spec.label, classes))
            }
            _ => {}
        }
        failures
    }

    /// Deterministic part of the report, without timings.
    pub fn without_timings(&self) -> RunReport {
        RunReport { timings: Timings::default(), ..self.clone() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "frames {}  quanta {}  captures {}  alarms {}  block notices {}",
            self.frames,
            self.quanta,
            self.triggers,
            self.alarms.len(),
            self.notifications
        );
        let _ = writeln!(
            s,
            "classification: {:.3} ms total, {:.3} ms worst batch; fds {:.3} ms",
            self.timings.classify_total_ms, self.timings.classify_max_batch_ms, self.timings.fds_ms
        );
        let _ = writeln!(s, "\n{:<12}{:>9}{:>20}{:>12}  alarms", "attack", "start_s", "target", "latency_q");
        for a in &self.attacks {
            let latency = a.trigger_latency_quanta.map_or("-".to_string(), |q| q.to_string());
            let classes: Vec<&str> = a.alarm_classes.iter().map(|c| c.name()).collect();
            let _ = writeln!(
                s,
                "{:<12}{:>9}{:>20}{:>12}  {}",
                a.spec.label.name(),
                a.spec.start_s,
                a.spec.target_ap.to_string(),
                latency,
                if classes.is_empty() { "-".to_string() } else { classes.join(" ") }
            );
        }
        let _ = writeln!(s, "\nalarms (raised_at_us,ap,class,confidence,attacker):");
        for a in &self.alarms {
            let _ = writeln!(s, "  {}", a.log_line());
        }
        let _ = writeln!(
            s,
            "\ncaptured-frame accuracy {:.5}  fpr {:.5}  tpr {:.5}\n{}",
            self.eval.accuracy,
            self.eval.fpr,
            self.eval.tpr,
            self.eval.confusion_table()
        );
        s
    }

    /// One CSV row per attack.
    pub fn attacks_csv(&self) -> String {
        let mut s = String::from("label,start_s,end_s,target_ap,trigger_latency_quanta,alarm_classes,detected\n");
        for a in &self.attacks {
            let classes: Vec<&str> = a.alarm_classes.iter().map(|c| c.name()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                a.spec.label,
                a.spec.start_s,
                a.spec.end_s,
                a.spec.target_ap,
                a.trigger_latency_quanta.map_or(String::new(), |q| q.to_string()),
                classes.join(" "),
                a.detected()
            );
        }
        s
    }
}

/// Trigger instants, capture batches and closed quanta for one AP.
type ApRun = (Vec<u64>, Vec<CaptureBatch>, usize);

/// Per-AP flood detection over a whole scenario, in config order.
fn run_fds(cfg: &ScenarioConfig, frames: &[Frame]) -> Result<Vec<ApRun>> {
    let end_us = (cfg.duration_s * 1e6).round() as u64;
    cfg.aps
        .par_iter()
        .map(|ap| {
            let mut m = ApMonitor::new(ap.bssid, cfg.users(ap.bssid));
            for f in frames.iter().filter(|f| ap.hears(f)) {
                m.push(f)?;
            }
            m.finish(end_us);
            let triggers = m
                .outcomes()
                .iter()
                .filter(|o| o.decision == TriggerDecision::Capture)
                .map(|o| (o.stats.quantum_index + 1) * QUANTUM_US)
                .collect();
            let quanta = m.outcomes().len();
            Ok((triggers, m.drain_batches(), quanta))
        })
        .collect()
}

/// Streams a scenario through per-AP flood detectors, ships every capture
/// over the wire format to a controller and collects the alarms.
pub fn replay(cfg: &ScenarioConfig, frames: &[Frame], model: Model) -> Result<RunReport> {
    let t = Instant::now();
    let per_ap = run_fds(cfg, frames)?;
    let fds_ms = t.elapsed().as_secs_f64() * 1e3;

    let controller = Controller::new(model, &cfg.aps, cfg.known_macs());
    let mut batches: Vec<CaptureBatch> = per_ap.iter().flat_map(|(_, b, _)| b.iter().cloned()).collect();
    batches.sort_by_key(|b| (b.start_us, b.ap_id));

    let mut timings = Timings { fds_ms, ..Timings::default() };
    let mut alarms = Vec::new();
    let mut notifications = 0;
    let mut confusion = [[0u64; AttackLabel::COUNT]; AttackLabel::COUNT];
    for batch in &batches {
        let bytes = frame_message(&WireMessage::CaptureBatch(batch.clone()))?;
        let (msg, _) = parse_message(&bytes)?;
        let WireMessage::CaptureBatch(received) = msg else {
            bail!("controller received a non-batch message");
        };
        let t = Instant::now();
        let outcome = controller.process(&received);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        timings.classify_total_ms += ms;
        timings.classify_max_batch_ms = timings.classify_max_batch_ms.max(ms);
        for n in &outcome.notifications {
            parse_message(&frame_message(&WireMessage::BlockNotify(*n))?)?;
            notifications += 1;
        }
        if let Some(a) = outcome.verdict.alarm() {
            alarms.push(a.clone());
        }
        if let Some(ap) = cfg.ap(received.ap_id) {
            for lv in extract_window(&received.frames, ap) {
                confusion[lv.label.index()][controller.model().predict(&lv.features).index()] += 1;
            }
        }
    }

    let attacks = cfg
        .attacks
        .iter()
        .map(|spec| {
            let start = (spec.start_s * 1e6).round() as u64;
            let end = (spec.end_s * 1e6).round() as u64;
            let triggers = cfg.aps.iter().position(|a| a.bssid == spec.target_ap).map(|i| &per_ap[i].0);
            let trigger_latency_quanta = triggers
                .and_then(|ts| ts.iter().find(|&&t| t > start && t <= end + QUANTUM_US))
                .map(|&t| (t - start).div_ceil(QUANTUM_US));
            let alarm_classes: BTreeSet<AttackLabel> = alarms
                .iter()
                .filter(|a| a.ap_id == spec.target_ap && a.raised_at_us > start && a.raised_at_us <= end + QUANTUM_US)
                .map(|a| a.attack)
                .collect();
            AttackOutcome { spec: spec.clone(), trigger_latency_quanta, alarm_classes: alarm_classes.into_iter().collect() }
        })
        .collect();

    Ok(RunReport {
        frames: frames.len(),
        quanta: per_ap.iter().map(|p| p.2).sum(),
        triggers: per_ap.iter().map(|p| p.0.len()).sum(),
        alarms,
        attacks,
        notifications,
        eval: EvalReport::from_confusion(confusion),
        timings,
    })
}

/// Output file paths for a command, creating the directory.
pub fn out_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::presets;

    #[test]
    fn manifest_round_trip() {
        let ds = Dataset::generate(presets::single_attack(AttackLabel::BeaconFlood, 2));
        let m = ds.manifest();
        assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
        assert_eq!(m.counts.iter().sum::<usize>(), m.frames);
        assert!(Manifest::parse("bogus = 1").is_err());
    }

    #[test]
    fn dataset_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::generate(presets::single_attack(AttackLabel::Krack, 5));
        ds.write_dir(dir.path()).unwrap();
        assert_eq!(Dataset::read_dir(dir.path()).unwrap(), ds);
        fs::remove_file(dir.path().join(FRAMES_BIN)).unwrap();
        assert_eq!(Dataset::read_dir(dir.path()).unwrap(), ds);
    }
}
