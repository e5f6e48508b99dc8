//! L2-regularised logistic regression trained by full-batch gradient descent.
//!
//! Objective: `mean_i [softplus(z_i) - y_i z_i] + (lambda / 2) |w|^2` with
//! `z_i = w . standardize(x_i) + b`. The bias is not regularised. Training
//! starts from zero and uses backtracking so every accepted step lowers the
//! objective, which makes the result a deterministic function of the inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EdgeLabel;
use crate::preprocess::{FeatureConfig, FeatureLayout, FeatureMatrix, FeatureVector};

/// Columns with a training standard deviation below this are not rescaled.
pub const CONSTANT_FEATURE_EPS: f64 = 1e-12;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("degenerate training labels: {0}")]
    DegenerateLabels(String),
    #[error("empty training set")]
    Empty,
    #[error("layout mismatch: model expects {expected}, got {found}")]
    LayoutMismatch { expected: String, found: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    /// L2 penalty on the weights.
    pub lambda: f64,
    /// Initial (and maximum) step size.
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub tolerance: f64,
    /// Recorded for provenance; training itself is deterministic.
    pub seed: u64,
    /// Standardise features with training-set statistics.
    pub standardize: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 1.0,
            learning_rate: 0.1,
            max_iters: 5000,
            tolerance: 1e-6,
            seed: 0,
            standardize: true,
        }
    }
}

/// Per-column mean and standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        StandardizationStats { mean, std }
    }

    pub fn identity(d: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    fn scale(&self, k: usize) -> f64 {
        let s = self.std[k];
        if s < CONSTANT_FEATURE_EPS {
            1.0
        } else {
            s
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(k, v)| (v - self.mean[k]) / self.scale(k))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub config: FeatureConfig,
    pub layout: FeatureLayout,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub stats: StandardizationStats,
    pub hyper: Hyperparams,
    pub iterations: usize,
    pub converged: bool,
    pub final_loss: f64,
    /// Sample ids the model was fitted on.
    pub training_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: EdgeLabel,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `p >= 0.5` is judged an edge error.
pub fn threshold(p: f64) -> EdgeLabel {
    if p >= 0.5 {
        EdgeLabel::Error
    } else {
        EdgeLabel::Correct
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Objective value and its analytic gradient.
pub fn loss_and_gradient(
    w: &[f64],
    b: f64,
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
) -> (f64, Gradient) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let z = dot(w, row) + b;
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        gb += r;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    loss /= n;
    gb /= n;
    for (g, wk) in gw.iter_mut().zip(w) {
        *g = *g / n + lambda * wk;
    }
    loss += 0.5 * lambda * dot(w, w);
    (
        loss,
        Gradient {
            weights: gw,
            bias: gb,
        },
    )
}

/// Trains on a feature matrix.
pub fn train(data: &FeatureMatrix, hyper: &Hyperparams) -> Result<ModelWeights, ClassifierError> {
    train_with_trace(data, hyper).map(|(m, _)| m)
}

/// Like [`train`], also returning the objective after every accepted step
/// (the first entry is the objective at the zero start).
pub fn train_with_trace(
    data: &FeatureMatrix,
    hyper: &Hyperparams,
) -> Result<(ModelWeights, Vec<f64>), ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::Empty);
    }
    let n_err = data.labels.iter().filter(|l| l.is_error()).count();
    if n_err == 0 || n_err == data.len() {
        return Err(ClassifierError::DegenerateLabels(format!(
            "all {} training samples are {}",
            data.len(),
            if n_err == 0 { "correct edges" } else { "edge errors" }
        )));
    }
    let d = data.layout.len();
    if let Some(bad) = data.rows.iter().position(|r| r.len() != d) {
        return Err(ClassifierError::LayoutMismatch {
            expected: format!("{d} features"),
            found: format!("{} in row {bad}", data.rows[bad].len()),
        });
    }

    let stats = if hyper.standardize {
        StandardizationStats::fit(&data.rows)
    } else {
        StandardizationStats::identity(d)
    };
    let x: Vec<Vec<f64>> = data.rows.iter().map(|r| stats.apply(r)).collect();
    let y: Vec<f64> = data.labels.iter().map(|l| f64::from(l.as_u8())).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let (mut loss, mut grad) = loss_and_gradient(&w, b, &x, &y, hyper.lambda);
    let mut trace = vec![loss];
    let mut step = hyper.learning_rate;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < hyper.max_iters {
        let gmax = grad
            .weights
            .iter()
            .fold(grad.bias.abs(), |m, g| m.max(g.abs()));
        if gmax < hyper.tolerance {
            converged = true;
            break;
        }
        let gsq = dot(&grad.weights, &grad.weights) + grad.bias * grad.bias;
        step = (step * 2.0).min(hyper.learning_rate);
        loop {
            let cand_w: Vec<f64> = w
                .iter()
                .zip(&grad.weights)
                .map(|(wk, gk)| wk - step * gk)
                .collect();
            let cand_b = b - step * grad.bias;
            let (cand_loss, cand_grad) = loss_and_gradient(&cand_w, cand_b, &x, &y, hyper.lambda);
            if cand_loss <= loss - ARMIJO_C * step * gsq {
                w = cand_w;
                b = cand_b;
                loss = cand_loss;
                grad = cand_grad;
                trace.push(loss);
                iterations += 1;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                break 'outer;
            }
        }
    }

    Ok((
        ModelWeights {
            config: data.config,
            layout: data.layout,
            weights: w,
            bias: b,
            stats,
            hyper: *hyper,
            iterations,
            converged,
            final_loss: loss,
            training_ids: data.sample_ids.clone(),
        },
        trace,
    ))
}

impl ModelWeights {
    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, &self.stats.apply(row)) + self.bias
    }

    /// Scores a raw (unstandardised) feature row of the model's layout.
    pub fn predict_row(&self, row: &[f64]) -> Prediction {
        let probability = sigmoid(self.decision(row));
        Prediction {
            probability,
            label: threshold(probability),
        }
    }

    pub fn check(&self) -> Result<(), ClassifierError> {
        let d = self.layout.len();
        if self.weights.len() != d || self.stats.mean.len() != d || self.stats.std.len() != d {
            return Err(ClassifierError::InvalidModel(format!(
                "weight/stat lengths do not match layout length {d}"
            )));
        }
        let finite = self
            .weights
            .iter()
            .chain(&self.stats.mean)
            .chain(&self.stats.std)
            .chain(std::iter::once(&self.bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(ClassifierError::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ClassifierError> {
        let m: ModelWeights = serde_json::from_str(s)?;
        m.check()?;
        Ok(m)
    }
}

pub fn predict(model: &ModelWeights, x: &FeatureVector) -> Result<Prediction, ClassifierError> {
    if x.config != model.config || x.layout != model.layout {
        return Err(ClassifierError::LayoutMismatch {
            expected: format!("{} with {:?}", model.config, model.layout),
            found: format!("{} with {:?}", x.config, x.layout),
        });
    }
    Ok(model.predict_row(&x.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EdgeLabel::{Correct, Error};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<EdgeLabel>) -> FeatureMatrix {
        let d = rows[0].len();
        FeatureMatrix {
            config: FeatureConfig::ImuAng12,
            // one angle frame per 3 columns
            layout: FeatureLayout {
                pose_frames: 0,
                angle_frames: d / 3,
            },
            sample_ids: (0..rows.len()).map(|i| format!("s{i}")).collect(),
            skater_ids: vec!["A".into(); rows.len()],
            labels,
            rows,
        }
    }

    fn one_d(copies: usize) -> FeatureMatrix {
        // feature in column 0, two constant columns pad the layout to width 3
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..copies {
            rows.push(vec![-1.0, 0.0, 0.0]);
            labels.push(Correct);
            rows.push(vec![1.0, 0.0, 0.0]);
            labels.push(Error);
        }
        matrix(rows, labels)
    }

    /// Objective in (w, b) for the 1-D problem, by direct summation.
    fn one_d_objective(w: f64, b: f64, lambda: f64) -> f64 {
        let l0 = softplus(-w + b);
        let l1 = softplus(w + b) - (w + b);
        (l0 + l1) / 2.0 + 0.5 * lambda * w * w
    }

    #[test]
    fn one_d_separable_matches_grid_search() {
        let lambda = 0.01;
        let hyper = Hyperparams {
            lambda,
            standardize: false,
            ..Default::default()
        };
        let m = train(&one_d(10), &hyper).unwrap();
        assert!(m.converged);
        assert!(m.predict_row(&[1.0, 0.0, 0.0]).probability > 0.9);
        assert!(m.predict_row(&[-1.0, 0.0, 0.0]).probability < 0.1);

        // oracle: grid over (w, b)
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=2000 {
            let w = i as f64 * 0.005;
            for j in -20..=20 {
                let b = j as f64 * 0.005;
                let f = one_d_objective(w, b, lambda);
                if f < best.0 {
                    best = (f, w, b);
                }
            }
        }
        assert!(best.1 > 0.0);
        assert!((m.weights[0] - best.1).abs() < 0.01, "{} vs {}", m.weights[0], best.1);
        assert!(m.bias.abs() < 0.01);
        assert!(m.final_loss <= best.0 + 1e-9);
    }

    #[test]
    fn degenerate_labels() {
        let m = matrix(vec![vec![1.0, 2.0, 3.0]; 4], vec![Error; 4]);
        let e = train(&m, &Hyperparams::default()).unwrap_err();
        assert!(e.to_string().starts_with("degenerate training labels"));
    }

    #[test]
    fn duplicating_rows_keeps_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<EdgeLabel> = rows
            .iter()
            .map(|r| if r[0] + 0.3 * r[1] > 0.0 { Error } else { Correct })
            .collect();
        let base = matrix(rows.clone(), labels.clone());
        let doubled = matrix(
            rows.iter().chain(&rows).cloned().collect(),
            labels.iter().chain(&labels).copied().collect(),
        );
        let h = Hyperparams::default();
        let a = train(&base, &h).unwrap();
        let b = train(&doubled, &h).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        assert!((a.bias - b.bias).abs() < 1e-9);
    }

    #[test]
    fn zero_model_and_saturation() {
        let mut m = train(&one_d(2), &Hyperparams::default()).unwrap();
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        m.bias = 0.0;
        let p = m.predict_row(&[0.3, 0.0, 0.0]);
        assert_eq!(p.probability, 0.5);
        assert_eq!(p.label, Error);
        m.bias = 50.0;
        assert!(m.predict_row(&[0.3, 0.0, 0.0]).probability > 0.999);
    }

    #[test]
    fn predict_checks_layout() {
        let m = train(&one_d(2), &Hyperparams::default()).unwrap();
        let ok = FeatureVector {
            config: FeatureConfig::ImuAng12,
            values: vec![1.0, 0.0, 0.0],
            layout: m.layout,
        };
        assert_eq!(predict(&m, &ok).unwrap().label, Error);
        let wrong = FeatureVector {
            config: FeatureConfig::ImuAng60,
            ..ok
        };
        assert!(matches!(
            predict(&m, &wrong),
            Err(ClassifierError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn balanced_zero_start_is_ln2() {
        let x = vec![vec![1.0, -2.0], vec![0.5, 3.0]];
        let (l, _) = loss_and_gradient(&[0.0, 0.0], 0.0, &x, &[1.0, 0.0], 0.7);
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let (_, g) = loss_and_gradient(&[0.4, -0.2], 0.1, &vec![vec![0.0, 0.0]; 3], &[1.0, 0.0, 1.0], 0.0);
        assert_eq!(g.weights, vec![0.0, 0.0]);
    }

    #[test]
    fn objective_is_monotone_and_training_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..9).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let labels = (0..40).map(|i| if i % 3 == 0 { Error } else { Correct }).collect();
        let m = matrix(rows, labels);
        let h = Hyperparams {
            lambda: 0.01,
            learning_rate: 5.0,
            ..Default::default()
        };
        let (a, trace) = train_with_trace(&m, &h).unwrap();
        assert!(trace.windows(2).all(|w| w[1] < w[0]));
        let (b, _) = train_with_trace(&m, &h).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn standardization_guard_and_train_only_stats() {
        let rows = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 2.0]];
        let s = StandardizationStats::fit(&rows);
        assert_eq!(s.mean, vec![2.0, 5.0, 2.0]);
        assert_eq!(s.std, vec![1.0, 0.0, 0.0]);
        assert_eq!(s.apply(&[4.0, 6.0, 2.0]), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn label_invariant_under_column_rescaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<EdgeLabel> = rows
            .iter()
            .map(|r| if r[1] - r[2] > 0.1 { Error } else { Correct })
            .collect();
        let h = Hyperparams::default();
        let a = train(&matrix(rows.clone(), labels.clone()), &h).unwrap();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], r[1] * 37.5, r[2]]).collect();
        let b = train(&matrix(scaled.clone(), labels), &h).unwrap();
        for (r, s) in rows.iter().zip(&scaled) {
            assert_eq!(a.predict_row(r).label, b.predict_row(s).label);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels = (0..20).map(|i| if i % 2 == 0 { Error } else { Correct }).collect();
        let m = train(&matrix(rows, labels), &Hyperparams::default()).unwrap();
        let back = ModelWeights::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), m.to_json().unwrap());
    }
}
