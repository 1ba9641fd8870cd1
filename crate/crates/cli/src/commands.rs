use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use posecast_core::data::{
    apply_norm, compute_norm_stats, load_frames, make_windows_all, save_frames, split_dataset, synth_generate,
    NormStats, SequenceDataset, SplitName, SplitRatios, WindowConfig, WindowSample,
};
use posecast_core::eval::{evaluate, gate_report, sensitivity_csv, sensitivity_sweep, EvalSummary, GateReport};
use posecast_core::eval::{PerturbationConfig, SensitivityResult};
use posecast_core::model::{Checkpoint, ModelConfig, ModelKind, SplitSpec};
use posecast_core::train::{fit_with, gate_csv, read_metrics, write_metrics, EpochLog, TrainConfig};
use posecast_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::{EvalArgs, PerturbArgs, ReportArgs, SynthArgs, TrainArgs};

pub const CHECKPOINT: &str = "model.json";
pub const BEST_VAL_CHECKPOINT: &str = "model_best_val.json";
pub const NORM_STATS: &str = "norm_stats.json";
pub const METRICS: &str = "metrics.jsonl";
pub const GATE_CSV: &str = "gate.csv";
pub const MANIFEST: &str = "manifest.jsonl";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Resolved flags for one invocation, written before any work starts.
#[derive(Serialize)]
struct Snapshot<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    args: &'a T,
}

fn snapshot<T: Serialize>(dir: &Path, command: &str, args: &T) -> Result<()> {
    let s = Snapshot {
        command,
        version: env!("CARGO_PKG_VERSION"),
        args,
    };
    write_json(&dir.join(format!("{command}_config.json")), &s)
}

/// Appends one line per invocation. This is the only file that carries a
/// wall-clock timestamp.
fn append_manifest(dir: &Path, command: &str, outputs: &[&str]) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'a> {
        command: &'a str,
        unix_time: u64,
        outputs: &'a [&'a str],
    }
    let unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let path = dir.join(MANIFEST);
    let mut line = serde_json::to_string(&Line {
        command,
        unix_time,
        outputs,
    })?;
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(io_err(&path))?;
    f.write_all(line.as_bytes()).map_err(io_err(&path))
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let d = synth_generate(a.mode, a.frames, a.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_frames(&a.out, &d)?;
    log::info!("wrote {} frames to {}", d.len(), a.out.display());
    Ok(())
}

/// Normalized windows of every split, built exactly as training saw them.
struct Prepared {
    stats: NormStats,
    train: Vec<WindowSample>,
    val: Vec<WindowSample>,
    test: Vec<WindowSample>,
}

fn prepare(
    data: &[SequenceDataset],
    split: SplitSpec,
    window: WindowConfig,
    stats: Option<NormStats>,
) -> Result<Prepared> {
    let splits = split_dataset(data, split.ratios, split.gap, window.span())?;
    let stats = match stats {
        Some(s) => s,
        None => compute_norm_stats(&splits.train)?,
    };
    let windows = |name: SplitName| {
        let normed: Vec<SequenceDataset> = splits.get(name).iter().map(|d| apply_norm(d, &stats)).collect();
        make_windows_all(&normed, &window)
    };
    Ok(Prepared {
        train: windows(SplitName::Train),
        val: windows(SplitName::Val),
        test: windows(SplitName::Test),
        stats,
    })
}

fn load_data(path: &Path) -> Result<Vec<SequenceDataset>> {
    Ok(vec![load_frames(path)?])
}

pub fn train(a: &TrainArgs) -> Result<()> {
    create_dir(&a.out)?;
    snapshot(&a.out, "train", a)?;

    let window = WindowConfig::new(a.obs_len, a.horizon)?;
    let model_config = ModelConfig {
        window,
        hidden: a.hidden,
    };
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        lr: a.lr,
        seed: a.seed,
        shuffle: true,
        clip_norm: a.clip,
    };
    cfg.validate()?;
    model_config.validate()?;
    let split = SplitSpec {
        ratios: SplitRatios::default(),
        gap: a.gap,
    };

    let data = load_data(&a.data)?;
    let p = prepare(&data, split, window, None)?;
    log::info!(
        "{} windows: {} train, {} val, {} test",
        a.model,
        p.train.len(),
        p.val.len(),
        p.test.len()
    );
    p.stats.save(a.out.join(NORM_STATS))?;

    let result = fit_with(a.model, model_config, &p.train, &p.val, &p.test, &cfg, |l| {
        log::info!(
            "epoch {:>3}  train {:.6}  val {}  test {}{}",
            l.epoch,
            l.train_loss,
            fmt_opt(l.val_loss),
            fmt_opt(l.test_loss),
            l.lambda_emo.map(|v| format!("  lambda {v:.5}")).unwrap_or_default()
        )
    })?;

    let mut outputs = vec![NORM_STATS, CHECKPOINT, METRICS];
    Checkpoint::new(&result.params, p.stats.clone(), split).save(a.out.join(CHECKPOINT))?;
    if let Some(best) = &result.best_val_params {
        Checkpoint::new(best, p.stats.clone(), split).save(a.out.join(BEST_VAL_CHECKPOINT))?;
        outputs.push(BEST_VAL_CHECKPOINT);
    }
    write_metrics(a.out.join(METRICS), &result.logs)?;
    if a.model.uses_emotion() {
        write_text(&a.out.join(GATE_CSV), &gate_csv(&result.logs))?;
        outputs.push(GATE_CSV);
    }
    append_manifest(&a.out, "train", &outputs)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

/// Output directory: the flag if given, else the checkpoint's directory.
fn out_dir(out: &Option<PathBuf>, ckpt: &Path) -> PathBuf {
    match out {
        Some(d) => d.clone(),
        None => ckpt
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    }
}

fn split_windows(ck: &Checkpoint, data: &Path, split: SplitName) -> Result<Vec<WindowSample>> {
    let data = load_data(data)?;
    let p = prepare(&data, ck.split, ck.config.window, Some(ck.norm_stats.clone()))?;
    Ok(match split {
        SplitName::Train => p.train,
        SplitName::Val => p.val,
        SplitName::Test => p.test,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub split: SplitName,
    #[serde(flatten)]
    pub summary: EvalSummary,
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let dir = out_dir(&a.out, &a.ckpt);
    create_dir(&dir)?;
    snapshot(&dir, "eval", a)?;
    let ck = Checkpoint::load(&a.ckpt)?;
    let params = ck.model()?;
    let windows = split_windows(&ck, &a.data, a.split)?;
    let summary = evaluate(&params, &windows, &ck.norm_stats)?;
    log::info!(
        "{} on {}: {} windows, loss {}, mpjpe {}",
        ck.kind,
        a.split.as_str(),
        summary.windows,
        fmt_opt(summary.loss),
        fmt_opt(summary.mpjpe)
    );
    let name = format!("eval_{}.json", a.split.as_str());
    write_json(
        &dir.join(&name),
        &EvalReport {
            model: ck.kind,
            split: a.split,
            summary,
        },
    )?;
    append_manifest(&dir, "eval", &[&name])
}

pub fn perturb(a: &PerturbArgs) -> Result<()> {
    let dir = out_dir(&a.out, &a.ckpt);
    create_dir(&dir)?;
    snapshot(&dir, "perturb", a)?;
    let ck = Checkpoint::load(&a.ckpt)?;
    let params = ck.model()?;
    let windows = split_windows(&ck, &a.data, a.split)?;
    let cfg = PerturbationConfig {
        sigma: a.sigma.first().copied().unwrap_or(0.0),
        trials: a.trials,
        seed: a.seed,
    };
    for &sigma in &a.sigma {
        PerturbationConfig { sigma, ..cfg }.validate()?;
    }
    let results = sensitivity_sweep(&params, &windows, &a.sigma, &cfg)?;
    for r in &results {
        log::info!("{} sigma {}: mean delta {:.6} (std {:.6})", r.model_kind, r.sigma, r.mean_delta, r.std_delta);
    }
    let json = format!("sensitivity_{}.json", a.split.as_str());
    let csv = format!("sensitivity_{}.csv", a.split.as_str());
    write_json(&dir.join(&json), &results)?;
    write_text(&dir.join(&csv), &sensitivity_csv(&results))?;
    append_manifest(&dir, "perturb", &[&json, &csv])
}

#[derive(Debug, Serialize)]
struct RunReport {
    model: ModelKind,
    epochs: usize,
    final_epoch: EpochLog,
    gate: Option<GateReport>,
    evaluations: Vec<EvalReport>,
    sensitivity: Vec<SensitivityResult>,
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let run_dir = out_dir(&None, &a.ckpt);
    let dir = out_dir(&a.out, &a.ckpt);
    create_dir(&dir)?;
    snapshot(&dir, "report", a)?;
    let ck = Checkpoint::load(&a.ckpt)?;
    let logs = read_metrics(run_dir.join(METRICS))?;
    let final_epoch = logs
        .last()
        .cloned()
        .ok_or_else(|| Error::Contract("metrics log is empty".into()))?;
    let gate = if ck.kind.uses_emotion() {
        Some(gate_report(&logs)?)
    } else {
        None
    };

    let mut evaluations = Vec::new();
    let mut sensitivity = Vec::new();
    for split in [SplitName::Train, SplitName::Val, SplitName::Test] {
        let path = run_dir.join(format!("eval_{}.json", split.as_str()));
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            evaluations.push(serde_json::from_str(&text)?);
        }
        let path = run_dir.join(format!("sensitivity_{}.json", split.as_str()));
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            sensitivity.extend(serde_json::from_str::<Vec<SensitivityResult>>(&text)?);
        }
    }

    let report = RunReport {
        model: ck.kind,
        epochs: logs.len(),
        final_epoch,
        gate,
        evaluations,
        sensitivity,
    };
    let f = &report.final_epoch;
    println!("model        {}", report.model);
    println!("epochs       {}", report.epochs);
    println!("train loss   {:.6}", f.train_loss);
    println!("val loss     {}", fmt_opt(f.val_loss));
    println!("test loss    {}", fmt_opt(f.test_loss));
    if let Some(g) = &report.gate {
        println!(
            "lambda       {:.5} (last epochs {:.5}..{:.5}, {})",
            g.final_lambda,
            g.tail_min,
            g.tail_max,
            if g.active { "active" } else { "inactive" }
        );
    }
    for e in &report.evaluations {
        println!("mpjpe/{:<6} {}", e.split.as_str(), fmt_opt(e.summary.mpjpe));
    }
    for s in &report.sensitivity {
        println!("delta σ={:<6} {:.6}", s.sigma, s.mean_delta);
    }
    write_json(&dir.join("report.json"), &report)?;
    append_manifest(&dir, "report", &["report.json"])
}
