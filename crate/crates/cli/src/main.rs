mod args;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use edgejudge_core::classifier::{self, Hyperparams};
use edgejudge_core::eval::{AccuracyFormula, LosoOptions, TrajectoryMode, TrajectoryOptions};
use edgejudge_core::ingest::{load_dataset, Dataset, LoadOptions, Source, DEFAULT_MAX_GAP};
use edgejudge_core::par::Parallelism;
use edgejudge_core::pipeline::{self, write_atomic, EvaluateOptions, SegmentOptions};
use edgejudge_core::preprocess::{build_matrix, FeatureConfig, GroundMode, PreprocessOptions};
use edgejudge_core::skeleton::Joint;
use edgejudge_core::synth::{self, SynthConfig};
use edgejudge_core::Error;
use serde_json::json;

use args::{AnalyzeArgs, Cli, Command, EvaluateArgs, Formula, Ground, JudgeArgs, ModelArgs, Mode, SegmentArgs, SynthArgs};
use settings::Settings;

/// Exit status classes: 1 usage, 2 input data, 3 evaluation.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Eval(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Eval(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Eval(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Synth(_) => Failure::Usage(e.to_string()),
            e if e.is_data_error() => Failure::Data(e.to_string()),
            e => Failure::Eval(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

struct Ctx {
    out: PathBuf,
    settings: Settings,
    parallelism: Parallelism,
    stamp: bool,
}

impl Ctx {
    fn write(&self, rel: &str, bytes: &[u8]) -> Outcome {
        let path = self.out.join(rel);
        write_atomic(&path, bytes).map_err(Failure::from)?;
        println!("wrote {}", path.display());
        Ok(())
    }

    /// Settings and provenance for a subcommand; never timestamped unless
    /// `--stamp` is given.
    fn write_run(&self, dir: &str, command: &str, resolved: serde_json::Value) -> Outcome {
        let mut run = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "settings": resolved,
        });
        if self.stamp {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            run["unix_time"] = json!(secs);
        }
        let mut bytes = serde_json::to_vec_pretty(&run).expect("run record serializes");
        bytes.push(b'\n');
        self.write(&format!("{dir}/run.json"), &bytes)
    }

    fn manifest(&self, given: &Option<PathBuf>) -> PathBuf {
        given
            .clone()
            .unwrap_or_else(|| self.out.join("dataset").join("manifest.csv"))
    }

    fn load(&self, manifest: &Path, max_gap: Option<usize>) -> Result<Dataset, Failure> {
        let opts = LoadOptions {
            max_gap: max_gap.or(self.settings.max_gap).unwrap_or(DEFAULT_MAX_GAP),
            parallelism: self.parallelism,
        };
        let ds = load_dataset(manifest, &opts).map_err(|e| Failure::Data(e.to_string()))?;
        for r in ds.rejected() {
            eprintln!("rejected {}: {}", r.sample_id, r.reason);
        }
        Ok(ds)
    }

    /// Tracker and crop settings sized for the first raw camera recording.
    fn segment_options(&self, ds: &Dataset, takeoff_offset: Option<f64>) -> SegmentOptions {
        let fps = ds
            .samples()
            .iter()
            .find(|s| s.source == Source::Camera)
            .map(|s| s.pose.fps)
            .unwrap_or(240.0);
        SegmentOptions {
            tracker: Some(self.settings.tracker(fps)),
            crop: Some(self.settings.crop(fps, takeoff_offset)),
            parallelism: self.parallelism,
        }
    }

    /// Loads a manifest and crops raw camera recordings if there are any.
    fn load_prepared(&self, manifest: &Path, max_gap: Option<usize>) -> Result<Dataset, Failure> {
        let ds = self.load(manifest, max_gap)?;
        let opts = self.segment_options(&ds, None);
        let (ds, report) = pipeline::prepare(ds, &opts)?;
        if let Some(r) = report {
            println!("segmented {} raw camera recordings", r.windows.len());
            for f in &r.failures {
                eprintln!("dropped {}: {}", f.sample_id, f.reason);
            }
        }
        Ok(ds)
    }

    fn hyper(&self, m: &ModelArgs) -> Hyperparams {
        let mut h = self.settings.hyperparams();
        h.lambda = m.lambda.unwrap_or(h.lambda);
        h.learning_rate = m.learning_rate.unwrap_or(h.learning_rate);
        h.max_iters = m.max_iters.unwrap_or(h.max_iters);
        h.tolerance = m.tolerance.unwrap_or(h.tolerance);
        if m.raw {
            h.standardize = false;
        }
        h
    }

    fn preprocess(&self, m: &ModelArgs) -> PreprocessOptions {
        let ground = match m.ground {
            Some(Ground::PerSequence) => GroundMode::PerSequence,
            Some(Ground::PerFrame) => GroundMode::PerFrame,
            None => self.settings.ground.unwrap_or_default(),
        };
        PreprocessOptions { ground }
    }

    fn evaluate_options(&self, m: &ModelArgs, formula: Option<Formula>) -> EvaluateOptions {
        let accuracy = match formula {
            Some(Formula::Standard) => AccuracyFormula::Standard,
            Some(Formula::AsPrinted) => AccuracyFormula::AsPrinted,
            None => self.settings.accuracy_formula.unwrap_or_default(),
        };
        EvaluateOptions {
            hyper: self.hyper(m),
            loso: LosoOptions {
                preprocess: self.preprocess(m),
                accuracy,
                parallelism: self.parallelism,
            },
        }
    }
}

fn synth_config(ctx: &Ctx, a: &SynthArgs) -> SynthConfig {
    let mut c = ctx.settings.synth.clone().unwrap_or_default();
    if let Some(seed) = ctx.settings.seed {
        c.seed = seed;
    }
    c.n_skaters = a.skaters.unwrap_or(c.n_skaters);
    c.jumps_per_skater = a.jumps.unwrap_or(c.jumps_per_skater);
    c.seed = a.seed.unwrap_or(c.seed);
    c.error_fraction = a.error_fraction.unwrap_or(c.error_fraction);
    if let Some(f) = &a.skater_error_fractions {
        c.skater_error_fractions = f.clone();
    }
    c.lean_error_deg = a.lean_error.unwrap_or(c.lean_error_deg);
    c.lean_correct_deg = a.lean_correct.unwrap_or(c.lean_correct_deg);
    c.noise_sigma = a.noise.unwrap_or(c.noise_sigma);
    c.fps = a.fps.unwrap_or(c.fps);
    c
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> Outcome {
    let cfg = synth_config(ctx, a);
    cfg.check().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.describe {
        let text = serde_json::to_string_pretty(&synth::describe(&cfg)).expect("description serializes");
        println!("{text}");
        return Ok(());
    }
    let ds = synth::generate_dataset(&cfg, ctx.parallelism).map_err(|e| Failure::from(Error::from(e)))?;
    let manifest = synth::write_dataset(&ds, &ctx.out.join("dataset"))?;
    ctx.write_run("dataset", "synth", json!({ "synth": cfg }))?;
    let (e, c) = ds.class_counts();
    println!(
        "{} samples, {e} edge errors / {c} correct attempts, manifest {}",
        ds.samples().len(),
        manifest.display()
    );
    Ok(())
}

fn cmd_segment(ctx: &Ctx, a: &SegmentArgs) -> Outcome {
    let ds = ctx.load(&ctx.manifest(&a.data.manifest), a.data.max_gap)?;
    let opts = ctx.segment_options(&ds, a.takeoff_offset);
    let report = pipeline::segment_dataset(&ds, &opts)?;
    let dir = ctx.out.join("segment");
    pipeline::write_dataset(&report.dataset, &dir)?;
    ctx.write("segment/windows.jsonl", &report.windows_jsonl())?;
    ctx.write("segment/rejected.csv", &pipeline::rejections_csv(&report.failures))?;
    ctx.write_run(
        "segment",
        "segment",
        json!({ "tracker": opts.tracker, "crop": opts.crop }),
    )?;
    println!(
        "{} jumps cropped, {} samples dropped",
        report.windows.len(),
        report.failures.len()
    );
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Outcome {
    let ds = ctx.load_prepared(&ctx.manifest(&a.data.manifest), a.data.max_gap)?;
    let opts = ctx.evaluate_options(&a.model, a.accuracy_formula);
    let configs: Vec<FeatureConfig> = if a.all_configs {
        FeatureConfig::ALL.to_vec()
    } else {
        a.config.into_iter().collect()
    };
    let mut reports = Vec::new();
    let mut failed_folds = 0;
    for config in configs {
        let ev = match pipeline::evaluate(&ds, config, &opts) {
            Ok(ev) => ev,
            Err(e) if a.all_configs => {
                eprintln!("skipped {config}: {e}");
                continue;
            }
            Err(e) => return Err(Failure::from(e)),
        };
        let dir = format!("evaluate/{}", config.name());
        ctx.write(&format!("{dir}/cv.csv"), &ev.cv_csv())?;
        ctx.write(&format!("{dir}/cv.json"), &ev.cv_json())?;
        ctx.write(&format!("{dir}/importance.csv"), &ev.importance_csv())?;
        if let Some(m) = &ev.full_model {
            ctx.write(&format!("{dir}/model.json"), &pipeline::model_json(m)?)?;
        }
        for f in ev.report.failed_folds() {
            eprintln!("{config}: fold {} failed", f.skater_id);
        }
        failed_folds += ev.report.failed_folds().len();
        println!(
            "{:<20} accuracy {}  F {}",
            config.name(),
            ev.report.accuracy_cell(),
            ev.report.f_measure_cell()
        );
        reports.push(ev.report);
    }
    if reports.is_empty() {
        return Err(Failure::Eval("no configuration could be evaluated".into()));
    }
    if a.all_configs {
        let refs: Vec<_> = reports.iter().collect();
        ctx.write("evaluate/summary.csv", &pipeline::summary_csv(&refs))?;
    }
    ctx.write_run(
        "evaluate",
        "evaluate",
        json!({
            "configs": reports.iter().map(|r| r.config.name()).collect::<Vec<_>>(),
            "hyperparams": opts.hyper,
            "preprocess": opts.loso.preprocess,
            "accuracy_formula": opts.loso.accuracy,
        }),
    )?;
    if failed_folds > 0 {
        return Err(Failure::Eval(format!("{failed_folds} folds failed")));
    }
    Ok(())
}

fn cmd_analyze(ctx: &Ctx, a: &AnalyzeArgs) -> Outcome {
    let joints: Vec<Joint> = a
        .joints
        .iter()
        .map(|s| s.parse::<Joint>().map_err(|e| Failure::Usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let ds = ctx.load_prepared(&ctx.manifest(&a.data.manifest), a.data.max_gap)?;
    let opts = ctx.evaluate_options(&a.model, None);
    let ev = pipeline::evaluate(&ds, a.config, &opts)?;
    ctx.write("analyze/importance.csv", &ev.importance_csv())?;
    let traj = TrajectoryOptions {
        mode: match a.mode {
            Mode::ClassMeans => TrajectoryMode::ClassMeans,
            Mode::AllPairs => TrajectoryMode::AllPairs,
        },
        ground: opts.loso.preprocess.ground,
        target_fps: a.target_fps,
    };
    ctx.write(
        "analyze/trajectory_distance.csv",
        &pipeline::trajectory_distance_csv(&ds, &joints, &traj),
    )?;
    ctx.write("analyze/trajectories.csv", &pipeline::trajectories_csv(&ds, &joints, &traj))?;
    ctx.write("analyze/angle_curves.csv", &pipeline::angle_curves_csv(&ds))?;
    ctx.write_run(
        "analyze",
        "analyze",
        json!({
            "config": a.config.name(),
            "joints": joints.iter().map(|j| j.name()).collect::<Vec<_>>(),
            "mode": traj.mode,
            "target_fps": traj.target_fps,
            "hyperparams": opts.hyper,
        }),
    )?;
    if let Some(imp) = ev.full_model.as_ref().map(edgejudge_core::eval::feature_importance) {
        let top: Vec<String> = imp.entries.iter().take(3).map(|e| e.group.to_string()).collect();
        println!("most important: {}", top.join(", "));
    }
    Ok(())
}

fn cmd_judge(ctx: &Ctx, a: &JudgeArgs) -> Outcome {
    let train = ctx.load_prepared(&ctx.manifest(&a.train), a.max_gap)?;
    let hyper = ctx.hyper(&a.model);
    let pre = ctx.preprocess(&a.model);
    let matrix = build_matrix(train.samples(), a.config, &pre, ctx.parallelism)
        .map_err(|e| Failure::from(Error::from(e)))?;
    let model = classifier::train(&matrix, &hyper).map_err(|e| Failure::Eval(e.to_string()))?;
    let targets = ctx.load_prepared(&a.samples, a.max_gap)?;
    let judgments = pipeline::judge_samples(&model, targets.samples(), &pre, ctx.parallelism)?;
    ctx.write("judge/model.json", &pipeline::model_json(&model)?)?;
    ctx.write("judge/judgments.csv", &pipeline::judgments_csv(&judgments))?;
    ctx.write_run(
        "judge",
        "judge",
        json!({ "config": a.config.name(), "hyperparams": hyper, "preprocess": pre }),
    )?;
    let errors = judgments.iter().filter(|j| j.label == 1).count();
    println!("{} samples judged, {errors} edge errors", judgments.len());
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let settings = match &cli.settings {
        Some(p) => Settings::load(p).map_err(Failure::Usage)?,
        None => Settings::default(),
    };
    let jobs = cli.jobs.or(settings.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Ctx {
        out: cli.out.clone(),
        settings,
        parallelism: if jobs == Some(1) {
            Parallelism::Sequential
        } else {
            Parallelism::Parallel
        },
        stamp: cli.stamp,
    };
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Segment(a) => cmd_segment(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Analyze(a) => cmd_analyze(&ctx, a),
        Command::Judge(a) => cmd_judge(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
