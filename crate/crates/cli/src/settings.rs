//! Optional TOML defaults. Precedence: command-line flag, then settings
//! file, then built-in default.

use std::path::Path;

use edgejudge_core::classifier::Hyperparams;
use edgejudge_core::eval::AccuracyFormula;
use edgejudge_core::preprocess::GroundMode;
use edgejudge_core::synth::SynthConfig;
use edgejudge_core::tracker::{CropConfig, TrackerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub jobs: Option<usize>,
    /// Overrides `synth.seed` and the classifier seed.
    pub seed: Option<u64>,
    pub max_gap: Option<usize>,
    pub accuracy_formula: Option<AccuracyFormula>,
    pub ground: Option<GroundMode>,
    pub synth: Option<SynthConfig>,
    pub classifier: Option<ClassifierSettings>,
    pub tracker: Option<TrackerSettings>,
    pub crop: Option<CropSettings>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSettings {
    pub lambda: Option<f64>,
    pub learning_rate: Option<f64>,
    pub max_iters: Option<usize>,
    pub tolerance: Option<f64>,
    pub standardize: Option<bool>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerSettings {
    pub iou_min: Option<f64>,
    pub max_age: Option<u32>,
    pub min_hits: Option<u32>,
    pub smoothing_window: Option<usize>,
    pub v_change_min: Option<f64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropSettings {
    pub window_len: Option<usize>,
    pub aligned_index: Option<usize>,
    /// Seconds from take-off to apex.
    pub takeoff_offset: Option<f64>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read settings {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid settings {}: {e}", path.display()))
    }

    pub fn hyperparams(&self) -> Hyperparams {
        let mut h = Hyperparams::default();
        if let Some(c) = &self.classifier {
            h.lambda = c.lambda.unwrap_or(h.lambda);
            h.learning_rate = c.learning_rate.unwrap_or(h.learning_rate);
            h.max_iters = c.max_iters.unwrap_or(h.max_iters);
            h.tolerance = c.tolerance.unwrap_or(h.tolerance);
            h.standardize = c.standardize.unwrap_or(h.standardize);
        }
        h.seed = self.seed.unwrap_or(h.seed);
        h
    }

    /// Tracker settings for footage at `fps`.
    pub fn tracker(&self, fps: f64) -> TrackerConfig {
        let mut t = TrackerConfig::for_fps(fps);
        if let Some(s) = &self.tracker {
            t.iou_min = s.iou_min.unwrap_or(t.iou_min);
            t.max_age = s.max_age.unwrap_or(t.max_age);
            t.min_hits = s.min_hits.unwrap_or(t.min_hits);
            t.smoothing_window = s.smoothing_window.unwrap_or(t.smoothing_window);
            t.v_change_min = s.v_change_min.unwrap_or(t.v_change_min);
        }
        t
    }

    /// Crop settings for footage at `fps`; `takeoff_offset` in seconds takes
    /// precedence over the file.
    pub fn crop(&self, fps: f64, takeoff_offset: Option<f64>) -> CropConfig {
        let mut c = CropConfig::for_fps(fps);
        let s = self.crop.clone().unwrap_or_default();
        c.window_len = s.window_len.unwrap_or(c.window_len);
        c.aligned_index = s.aligned_index.unwrap_or(c.aligned_index);
        if let Some(secs) = takeoff_offset.or(s.takeoff_offset) {
            c.takeoff_offset = (secs * fps).round() as usize;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let s: Settings = toml::from_str(
            "seed = 3\n[classifier]\nlambda = 0.5\n[synth]\nn_skaters = 4\n[crop]\ntakeoff_offset = 0.2\n",
        )
        .unwrap();
        let h = s.hyperparams();
        assert_eq!(h.lambda, 0.5);
        assert_eq!(h.max_iters, Hyperparams::default().max_iters);
        assert_eq!(h.seed, 3);
        let synth = s.synth.clone().unwrap();
        assert_eq!(synth.n_skaters, 4);
        assert_eq!(synth.jumps_per_skater, SynthConfig::default().jumps_per_skater);
        assert_eq!(s.crop(240.0, None).takeoff_offset, 48);
        assert_eq!(s.crop(240.0, Some(0.25)).takeoff_offset, 60);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("colour = 1").is_err());
        assert!(toml::from_str::<Settings>("[classifier]\nlamda = 1.0").is_err());
    }
}
