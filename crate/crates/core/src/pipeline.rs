//! End-to-end flows shared by the command-line tool and the tests: jump
//! segmentation over a dataset, cross-validation reports, analytics tables
//! and judging. Every table is rendered to a string first so identical
//! inputs give byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{self, Hyperparams, ModelWeights};
use crate::eval::{
    class_mean_trajectories, feature_importance, importance_from_weights, loso_cv_with_models,
    trajectory_distance, CVReport, Logistic, LosoOptions, TrajectoryOptions,
};
use crate::ingest::{
    write_angle_sequence, write_detections, write_manifest, write_pose_sequence, Dataset,
    EdgeLabel, JumpSample, ManifestRow, Rejection, Source,
};
use crate::par::{self, Parallelism};
use crate::preprocess::{build_features_with, build_matrix, FeatureConfig, PreprocessOptions};
use crate::skeleton::Joint;
use crate::tracker::{segment_jump, ApexEstimate, CropConfig, JumpWindow, TrackerConfig};
use crate::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn render(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn csv_bytes(f: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut wr = csv::Writer::from_writer(&mut buf);
        f(&mut wr).expect("writing to memory");
        wr.flush().expect("writing to memory");
    }
    buf
}

/// Output location of each file kind relative to a dataset directory.
pub fn sample_paths(sample: &JumpSample) -> (String, Option<String>, Option<String>) {
    let id = &sample.sample_id;
    (
        format!("pose/{id}.txt"),
        sample.angles.as_ref().map(|_| format!("angles/{id}.txt")),
        sample.detections.as_ref().map(|_| format!("detections/{id}.jsonl")),
    )
}

/// Manifest rows matching [`sample_paths`].
pub fn manifest_rows(dataset: &Dataset) -> Vec<ManifestRow> {
    dataset
        .samples()
        .iter()
        .map(|s| {
            let (pose, angles, detections) = sample_paths(s);
            ManifestRow {
                sample_id: s.sample_id.clone(),
                attempt_id: Some(s.attempt_id.clone()),
                skater_id: s.skater_id.clone(),
                source: s.source,
                pose,
                angles,
                detections,
                label: s.label.as_u8(),
            }
        })
        .collect()
}

/// Writes every sample file plus `manifest.csv` under `dir` and returns
/// the manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    let rows = manifest_rows(dataset);
    for (s, row) in dataset.samples().iter().zip(&rows) {
        write_atomic(&dir.join(&row.pose), &render(|w| write_pose_sequence(w, &s.pose)))?;
        if let (Some(a), Some(p)) = (&s.angles, &row.angles) {
            write_atomic(&dir.join(p), &render(|w| write_angle_sequence(w, a)))?;
        }
        if let (Some(d), Some(p)) = (&s.detections, &row.detections) {
            write_atomic(&dir.join(p), &render(|w| write_detections(w, d)))?;
        }
    }
    let manifest = dir.join("manifest.csv");
    let bytes = {
        let mut buf = Vec::new();
        write_manifest(&mut buf, &rows).expect("writing to memory");
        buf
    };
    write_atomic(&manifest, &bytes)?;
    Ok(manifest)
}

/// Tracker and crop settings. `None` picks the defaults for each sample's
/// frame rate.
#[derive(Debug, Clone, Copy, Default)]
pub struct SegmentOptions {
    pub tracker: Option<TrackerConfig>,
    pub crop: Option<CropConfig>,
    pub parallelism: Parallelism,
}

impl SegmentOptions {
    fn crop_for(&self, fps: f64) -> CropConfig {
        self.crop.unwrap_or_else(|| CropConfig::for_fps(fps))
    }

    fn tracker_for(&self, fps: f64) -> TrackerConfig {
        self.tracker.unwrap_or_else(|| TrackerConfig::for_fps(fps))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub sample_id: String,
    #[serde(flatten)]
    pub window: JumpWindow,
    pub apex_refined: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentReport {
    /// Input samples with raw camera recordings replaced by their crops.
    pub dataset: Dataset,
    pub windows: Vec<SegmentRecord>,
    /// Samples dropped because no jump could be segmented.
    pub failures: Vec<Rejection>,
}

impl SegmentReport {
    pub fn windows_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for w in &self.windows {
            serde_json::to_writer(&mut out, w).expect("window serializes");
            out.push(b'\n');
        }
        out
    }
}

/// A camera sample with detections and a pose longer than the crop window
/// is a raw recording.
pub fn needs_segmentation(sample: &JumpSample, opts: &SegmentOptions) -> bool {
    sample.source == Source::Camera
        && sample.detections.is_some()
        && sample.pose.len() != opts.crop_for(sample.pose.fps).window_len
}

pub fn dataset_needs_segmentation(dataset: &Dataset, opts: &SegmentOptions) -> bool {
    dataset.samples().iter().any(|s| needs_segmentation(s, opts))
}

/// Crops every raw camera recording around its detected jump. Samples whose
/// jump cannot be found are dropped and reported.
pub fn segment_dataset(dataset: &Dataset, opts: &SegmentOptions) -> Result<SegmentReport> {
    let results = par::map(opts.parallelism, dataset.samples(), |s| {
        if !needs_segmentation(s, opts) {
            return Ok((s.clone(), None));
        }
        let dets = s.detections.as_deref().unwrap_or(&[]);
        let fps = s.pose.fps;
        segment_jump(dets, &s.pose, &opts.tracker_for(fps), &opts.crop_for(fps)).map(|r| {
            let cropped = JumpSample {
                pose: r.pose,
                detections: None,
                ..s.clone()
            };
            (cropped, Some((r.window, r.apex)))
        })
    });
    let mut samples = Vec::new();
    let mut windows = Vec::new();
    let mut failures: Vec<Rejection> = dataset.rejected().to_vec();
    for (s, r) in dataset.samples().iter().zip(results) {
        match r {
            Ok((cropped, found)) => {
                if let Some((window, apex)) = found {
                    windows.push(record(&s.sample_id, window, apex));
                }
                samples.push(cropped);
            }
            Err(e) => failures.push(Rejection {
                sample_id: s.sample_id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(SegmentReport {
        dataset: Dataset::with_rejections(samples, failures.clone())?,
        windows,
        failures,
    })
}

fn record(id: &str, window: JumpWindow, apex: ApexEstimate) -> SegmentRecord {
    SegmentRecord {
        sample_id: id.to_string(),
        window,
        apex_refined: apex.refined,
    }
}

/// Segments the dataset only when it holds raw camera recordings.
pub fn prepare(dataset: Dataset, opts: &SegmentOptions) -> Result<(Dataset, Option<SegmentReport>)> {
    if dataset_needs_segmentation(&dataset, opts) {
        let report = segment_dataset(&dataset, opts)?;
        Ok((report.dataset.clone(), Some(report)))
    } else {
        Ok((dataset, None))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvaluateOptions {
    pub hyper: Hyperparams,
    pub loso: LosoOptions,
}

/// Cross-validation for one configuration, with the fold models and a model
/// trained on all skaters.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: CVReport,
    pub fold_models: Vec<(String, ModelWeights)>,
    /// `None` when the full training set has a single class.
    pub full_model: Option<ModelWeights>,
}

pub fn evaluate(dataset: &Dataset, config: FeatureConfig, opts: &EvaluateOptions) -> Result<Evaluation> {
    let learner = Logistic(opts.hyper);
    let (report, fold_models) = loso_cv_with_models(dataset, config, &learner, &opts.loso)?;
    let matrix = build_matrix(
        dataset.samples(),
        config,
        &opts.loso.preprocess,
        opts.loso.parallelism,
    )?;
    let full_model = classifier::train(&matrix, &opts.hyper).ok();
    Ok(Evaluation {
        report,
        fold_models,
        full_model,
    })
}

impl Evaluation {
    pub fn cv_csv(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.report.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    pub fn cv_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(&self.report).expect("report serializes");
        v.push(b'\n');
        v
    }

    /// Group importance of every fold model, then of the full model.
    pub fn importance_csv(&self) -> Vec<u8> {
        csv_bytes(|wr| {
            wr.write_record(["model", "config", "rank", "group", "importance"])?;
            for (skater, m) in &self.fold_models {
                feature_importance(m).write_csv_rows(wr, &format!("fold-{skater}"))?;
            }
            if let Some(m) = &self.full_model {
                feature_importance(m).write_csv_rows(wr, "all")?;
            }
            Ok(())
        })
    }

    /// Importance averaged over fold models.
    pub fn mean_fold_importance(&self) -> Option<crate::eval::ImportanceReport> {
        let (_, first) = self.fold_models.first()?;
        let n = self.fold_models.len() as f64;
        let mut w = vec![0.0; first.weights.len()];
        for (_, m) in &self.fold_models {
            for (acc, v) in w.iter_mut().zip(&m.weights) {
                *acc += v.abs() / n;
            }
        }
        Some(importance_from_weights(first.config, &first.layout, &w))
    }
}

/// One line per configuration: the accuracy and F-measure cells.
pub fn summary_csv(reports: &[&CVReport]) -> Vec<u8> {
    csv_bytes(|wr| {
        wr.write_record([
            "config",
            "features",
            "accuracy",
            "f_measure",
            "accuracy_mean",
            "accuracy_std",
            "f_measure_mean",
            "f_measure_std",
            "failed_folds",
        ])?;
        for r in reports {
            let (am, asd, fm, fsd) = r
                .aggregate
                .map(|a| {
                    (
                        format!("{:.6}", a.accuracy_mean),
                        format!("{:.6}", a.accuracy_std),
                        format!("{:.6}", a.f_measure_mean),
                        format!("{:.6}", a.f_measure_std),
                    )
                })
                .unwrap_or_default();
            wr.write_record([
                r.config.name().to_string(),
                r.config.label().to_string(),
                r.accuracy_cell(),
                r.f_measure_cell(),
                am,
                asd,
                fm,
                fsd,
                r.failed_folds().len().to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn model_json(model: &ModelWeights) -> Result<Vec<u8>> {
    let mut s = model.to_json()?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn class_name(label: EdgeLabel) -> &'static str {
    match label {
        EdgeLabel::Error => "error",
        EdgeLabel::Correct => "correct",
    }
}

fn sources_of(dataset: &Dataset) -> Vec<Source> {
    let mut v: Vec<Source> = dataset.samples().iter().map(|s| s.source).collect();
    v.sort();
    v.dedup();
    v
}

/// Error-vs-correct trajectory distance of each joint for every skater and
/// source. Skaters with a single class get a row with the reason.
pub fn trajectory_distance_csv(dataset: &Dataset, joints: &[Joint], opts: &TrajectoryOptions) -> Vec<u8> {
    csv_bytes(|wr| {
        wr.write_record([
            "source", "skater", "joint", "mode", "mean", "std", "n_error", "n_correct", "frames",
            "status",
        ])?;
        for source in sources_of(dataset) {
            for skater in dataset.skaters() {
                for &joint in joints {
                    match trajectory_distance(dataset, skater, joint, source, opts) {
                        Ok(d) => wr.write_record([
                            source.to_string(),
                            skater.to_string(),
                            joint.to_string(),
                            serde_json::to_value(d.mode).expect("mode").as_str().unwrap_or("").to_string(),
                            format!("{:.6}", d.mean),
                            format!("{:.6}", d.std),
                            d.n_error.to_string(),
                            d.n_correct.to_string(),
                            d.frames.to_string(),
                            "ok".into(),
                        ])?,
                        Err(e) => wr.write_record([
                            source.to_string(),
                            skater.to_string(),
                            joint.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("undefined: {e}"),
                        ])?,
                    }
                }
            }
        }
        Ok(())
    })
}

/// Class-mean trajectories per skater, source, joint and class.
pub fn trajectories_csv(dataset: &Dataset, joints: &[Joint], opts: &TrajectoryOptions) -> Vec<u8> {
    csv_bytes(|wr| {
        wr.write_record(["source", "skater", "joint", "class", "frame", "x", "y", "z"])?;
        for source in sources_of(dataset) {
            for (skater, &joint) in dataset
                .skaters()
                .into_iter()
                .flat_map(|sk| joints.iter().map(move |j| (sk, j)))
            {
                let Ok((err, ok)) = class_mean_trajectories(dataset, skater, joint, source, opts) else {
                    continue;
                };
                for (label, track) in [(EdgeLabel::Error, err), (EdgeLabel::Correct, ok)] {
                    for (t, p) in track.iter().enumerate() {
                        wr.write_record([
                            source.to_string(),
                            skater.to_string(),
                            joint.to_string(),
                            class_name(label).to_string(),
                            t.to_string(),
                            format!("{:.6}", p[0]),
                            format!("{:.6}", p[1]),
                            format!("{:.6}", p[2]),
                        ])?;
                    }
                }
            }
        }
        Ok(())
    })
}

/// Per-frame class means of the skate angles for each skater. Samples of
/// different lengths are averaged over their common prefix.
pub fn angle_curves_csv(dataset: &Dataset) -> Vec<u8> {
    let mut groups: BTreeMap<(String, u8), Vec<&Vec<[f64; 3]>>> = BTreeMap::new();
    for s in dataset.samples() {
        if let Some(a) = &s.angles {
            groups
                .entry((s.skater_id.clone(), s.label.as_u8()))
                .or_default()
                .push(&a.frames);
        }
    }
    csv_bytes(|wr| {
        wr.write_record(["skater", "class", "frame", "roll", "pitch", "yaw", "n"])?;
        for ((skater, label), seqs) in &groups {
            let len = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
            let n = seqs.len() as f64;
            for t in 0..len {
                let mut m = [0.0; 3];
                for s in seqs {
                    for k in 0..3 {
                        m[k] += s[t][k] / n;
                    }
                }
                let label = EdgeLabel::from_u8(*label).expect("stored label");
                wr.write_record([
                    skater.clone(),
                    class_name(label).to_string(),
                    t.to_string(),
                    format!("{:.6}", m[0]),
                    format!("{:.6}", m[1]),
                    format!("{:.6}", m[2]),
                    seqs.len().to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgment {
    pub sample_id: String,
    pub probability: f64,
    pub label: u8,
}

/// Scores every sample whose source matches the model's configuration.
pub fn judge_samples(
    model: &ModelWeights,
    samples: &[JumpSample],
    preprocess: &PreprocessOptions,
    mode: Parallelism,
) -> Result<Vec<Judgment>> {
    let picked: Vec<&JumpSample> = samples
        .iter()
        .filter(|s| s.source == model.config.source())
        .collect();
    par::map(mode, &picked, |s| {
        let x = build_features_with(s, model.config, preprocess)?;
        let p = classifier::predict(model, &x)?;
        Ok(Judgment {
            sample_id: s.sample_id.clone(),
            probability: p.probability,
            label: p.label.as_u8(),
        })
    })
    .into_iter()
    .collect()
}

pub fn judgments_csv(judgments: &[Judgment]) -> Vec<u8> {
    csv_bytes(|wr| {
        wr.write_record(["sample_id", "probability", "label"])?;
        for j in judgments {
            wr.write_record([j.sample_id.clone(), format!("{:.6}", j.probability), j.label.to_string()])?;
        }
        Ok(())
    })
}

/// Rejections as CSV.
pub fn rejections_csv(rejected: &[Rejection]) -> Vec<u8> {
    csv_bytes(|wr| {
        wr.write_record(["sample_id", "reason"])?;
        for r in rejected {
            wr.write_record([&r.sample_id, &r.reason])?;
        }
        Ok(())
    })
}
