use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_with, confusion, f_measure, AccuracyFormula, ConfusionMatrix};
use super::EvalError;
use crate::classifier::{self, ClassifierError, Hyperparams, ModelWeights, Prediction};
use crate::ingest::{Dataset, EdgeLabel};
use crate::par::{self, Parallelism};
use crate::preprocess::{build_matrix, FeatureConfig, FeatureMatrix, PreprocessOptions};

/// Anything that scores a raw feature row.
pub trait Judge {
    fn judge(&self, row: &[f64]) -> Prediction;
}

impl Judge for ModelWeights {
    fn judge(&self, row: &[f64]) -> Prediction {
        self.predict_row(row)
    }
}

/// Fits a [`Judge`] on a training partition.
pub trait Learner: Sync {
    type Model: Judge + Send;

    fn fit(&self, train: &FeatureMatrix) -> Result<Self::Model, ClassifierError>;

    /// Settings embedded in reports.
    fn describe(&self) -> serde_json::Value;
}

/// The logistic-regression learner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Logistic(pub Hyperparams);

impl Learner for Logistic {
    type Model = ModelWeights;

    fn fit(&self, train: &FeatureMatrix) -> Result<ModelWeights, ClassifierError> {
        classifier::train(train, &self.0)
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::to_value(self.0).expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LosoOptions {
    pub preprocess: PreprocessOptions,
    pub accuracy: AccuracyFormula,
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub sample_id: String,
    pub probability: f64,
    pub predicted: u8,
    pub truth: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FoldOutcome {
    Ok {
        accuracy: f64,
        f_measure: f64,
        confusion: ConfusionMatrix,
        predictions: Vec<SamplePrediction>,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// Held-out skater.
    pub skater_id: String,
    pub n_train: usize,
    pub n_test: usize,
    /// Every sample id handed to the learner for this fold.
    pub training_ids: Vec<String>,
    pub outcome: FoldOutcome,
}

impl FoldResult {
    pub fn metrics(&self) -> Option<(f64, f64, &ConfusionMatrix)> {
        match &self.outcome {
            FoldOutcome::Ok {
                accuracy,
                f_measure,
                confusion,
                ..
            } => Some((*accuracy, *f_measure, confusion)),
            FoldOutcome::Failed { .. } => None,
        }
    }
}

/// Mean and sample standard deviation over successful folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n_folds: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub f_measure_mean: f64,
    pub f_measure_std: f64,
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldResult]) -> Option<Aggregate> {
        let acc: Vec<f64> = folds.iter().filter_map(|f| f.metrics().map(|m| m.0)).collect();
        let f1: Vec<f64> = folds.iter().filter_map(|f| f.metrics().map(|m| m.1)).collect();
        if acc.is_empty() {
            return None;
        }
        let (am, asd) = mean_std(&acc);
        let (fm, fsd) = mean_std(&f1);
        Some(Aggregate {
            n_folds: acc.len(),
            accuracy_mean: am,
            accuracy_std: asd,
            f_measure_mean: fm,
            f_measure_std: fsd,
        })
    }
}

/// Mean and sample (n - 1) standard deviation; the deviation is 0 for a
/// single value.
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// `"83.56±13.43%"` from fractions.
pub fn format_percent_pm(mean: f64, std: f64) -> String {
    format!("{:.2}±{:.2}%", mean * 100.0, std * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub config: FeatureConfig,
    pub learner: serde_json::Value,
    pub accuracy_formula: AccuracyFormula,
    pub folds: Vec<FoldResult>,
    pub aggregate: Option<Aggregate>,
}

impl CVReport {
    pub fn failed_folds(&self) -> Vec<&FoldResult> {
        self.folds
            .iter()
            .filter(|f| matches!(f.outcome, FoldOutcome::Failed { .. }))
            .collect()
    }

    pub fn accuracy_cell(&self) -> String {
        self.aggregate
            .map(|a| format_percent_pm(a.accuracy_mean, a.accuracy_std))
            .unwrap_or_else(|| "n/a".into())
    }

    pub fn f_measure_cell(&self) -> String {
        self.aggregate
            .map(|a| format_percent_pm(a.f_measure_mean, a.f_measure_std))
            .unwrap_or_else(|| "n/a".into())
    }

    /// Fold rows followed by one `aggregate` row (confusion counts summed,
    /// metric columns holding means and standard deviations).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "config",
            "fold",
            "n_test",
            "tp",
            "tn",
            "fp",
            "fn",
            "accuracy",
            "accuracy_std",
            "f_measure",
            "f_measure_std",
            "status",
        ])?;
        let mut total = ConfusionMatrix::default();
        for f in &self.folds {
            match &f.outcome {
                FoldOutcome::Ok {
                    accuracy,
                    f_measure,
                    confusion: cm,
                    ..
                } => {
                    total = total.merge(cm);
                    wr.write_record([
                        self.config.name().to_string(),
                        f.skater_id.clone(),
                        f.n_test.to_string(),
                        cm.tp.to_string(),
                        cm.tn.to_string(),
                        cm.fp.to_string(),
                        cm.fn_.to_string(),
                        format!("{accuracy:.6}"),
                        String::new(),
                        format!("{f_measure:.6}"),
                        String::new(),
                        "ok".into(),
                    ])?;
                }
                FoldOutcome::Failed { reason } => {
                    wr.write_record([
                        self.config.name().to_string(),
                        f.skater_id.clone(),
                        f.n_test.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("failed: {reason}"),
                    ])?;
                }
            }
        }
        if let Some(a) = self.aggregate {
            wr.write_record([
                self.config.name().to_string(),
                "aggregate".into(),
                total.total().to_string(),
                total.tp.to_string(),
                total.tn.to_string(),
                total.fp.to_string(),
                total.fn_.to_string(),
                format!("{:.6}", a.accuracy_mean),
                format!("{:.6}", a.accuracy_std),
                format!("{:.6}", a.f_measure_mean),
                format!("{:.6}", a.f_measure_std),
                format!("{} folds", a.n_folds),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Leave-one-skater-out cross-validation for one feature configuration.
pub fn loso_cv<L: Learner>(
    dataset: &Dataset,
    config: FeatureConfig,
    learner: &L,
    opts: &LosoOptions,
) -> Result<CVReport, EvalError> {
    loso_cv_with_models(dataset, config, learner, opts).map(|(r, _)| r)
}

/// As [`loso_cv`], also returning each fold's fitted model keyed by the
/// held-out skater.
pub fn loso_cv_with_models<L: Learner>(
    dataset: &Dataset,
    config: FeatureConfig,
    learner: &L,
    opts: &LosoOptions,
) -> Result<(CVReport, Vec<(String, L::Model)>), EvalError> {
    let matrix = build_matrix(dataset.samples(), config, &opts.preprocess, opts.parallelism)?;
    let skaters: Vec<String> = matrix
        .skater_ids
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if skaters.len() < 2 {
        return Err(EvalError::TooFewSkaters {
            config: config.name().to_string(),
            found: skaters.len(),
        });
    }

    let runs = par::map(opts.parallelism, &skaters, |held_out| {
        run_fold(&matrix, held_out, learner, opts.accuracy)
    });
    let mut folds = Vec::with_capacity(runs.len());
    let mut models = Vec::new();
    for (fold, model) in runs {
        if let Some(m) = model {
            models.push((fold.skater_id.clone(), m));
        }
        folds.push(fold);
    }
    let aggregate = Aggregate::from_folds(&folds);
    Ok((
        CVReport {
            config,
            learner: learner.describe(),
            accuracy_formula: opts.accuracy,
            folds,
            aggregate,
        },
        models,
    ))
}

fn run_fold<L: Learner>(
    matrix: &FeatureMatrix,
    held_out: &str,
    learner: &L,
    formula: AccuracyFormula,
) -> (FoldResult, Option<L::Model>) {
    let train = matrix.select(|i| matrix.skater_ids[i] != held_out);
    let test = matrix.select(|i| matrix.skater_ids[i] == held_out);
    let mut fold = FoldResult {
        skater_id: held_out.to_string(),
        n_train: train.len(),
        n_test: test.len(),
        training_ids: train.sample_ids.clone(),
        outcome: FoldOutcome::Failed {
            reason: String::new(),
        },
    };
    let model = match learner.fit(&train) {
        Ok(m) => m,
        Err(e) => {
            fold.outcome = FoldOutcome::Failed {
                reason: e.to_string(),
            };
            return (fold, None);
        }
    };
    let preds: Vec<Prediction> = test.rows.iter().map(|r| model.judge(r)).collect();
    let labels: Vec<EdgeLabel> = preds.iter().map(|p| p.label).collect();
    let metrics = confusion(&labels, &test.labels).and_then(|cm| {
        Ok((accuracy_with(&cm, formula)?, f_measure(&cm)?, cm))
    });
    fold.outcome = match metrics {
        Ok((accuracy, f_measure, confusion)) => FoldOutcome::Ok {
            accuracy,
            f_measure,
            confusion,
            predictions: test
                .sample_ids
                .iter()
                .zip(&preds)
                .zip(&test.labels)
                .map(|((id, p), t)| SamplePrediction {
                    sample_id: id.clone(),
                    probability: p.probability,
                    predicted: p.label.as_u8(),
                    truth: t.as_u8(),
                })
                .collect(),
        },
        Err(e) => FoldOutcome::Failed {
            reason: e.to_string(),
        },
    };
    (fold, Some(model))
}
