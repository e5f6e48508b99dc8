use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::{Dataset, EdgeLabel, JumpSample, Source};
use crate::preprocess::{downsample, normalize_pose_with, GroundMode};
use crate::skeleton::Joint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryMode {
    /// Frame-wise distance between the two class-mean trajectories; mean and
    /// standard deviation over frames.
    #[default]
    ClassMeans,
    /// Mean frame-wise distance of every (error, correct) pair; mean and
    /// standard deviation over pairs.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectoryOptions {
    pub mode: TrajectoryMode,
    pub ground: GroundMode,
    /// Decimate before comparing. `None` keeps the recorded rate.
    pub target_fps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDistance {
    pub skater_id: String,
    pub source: Source,
    pub joint: Joint,
    pub mode: TrajectoryMode,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n_error: usize,
    pub n_correct: usize,
    pub frames: usize,
}

impl TrajectoryDistance {
    /// e.g. `skater B  2.360 ± 0.308`
    pub fn table_row(&self) -> String {
        format!("skater {}  {:.3} ± {:.3}", self.skater_id, self.mean, self.std)
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn mean_pop_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn mean_track(tracks: &[Vec<[f64; 3]>]) -> Vec<[f64; 3]> {
    let n = tracks.len() as f64;
    (0..tracks[0].len())
        .map(|t| {
            let mut acc = [0.0; 3];
            for tr in tracks {
                for k in 0..3 {
                    acc[k] += tr[t][k];
                }
            }
            acc.map(|v| v / n)
        })
        .collect()
}

fn joint_tracks(
    samples: &[&JumpSample],
    joint: Joint,
    opts: &TrajectoryOptions,
) -> Result<Vec<Vec<[f64; 3]>>, EvalError> {
    samples
        .iter()
        .map(|s| {
            let mut pose = normalize_pose_with(&s.pose, opts.ground);
            if let Some(fps) = opts.target_fps {
                pose = downsample(&pose, fps)?;
            }
            Ok(pose.track(joint))
        })
        .collect()
}

/// Class-mean trajectories `(error, correct)` of one joint for one skater
/// and source.
pub fn class_mean_trajectories(
    dataset: &Dataset,
    skater_id: &str,
    joint: Joint,
    source: Source,
    opts: &TrajectoryOptions,
) -> Result<(Vec<[f64; 3]>, Vec<[f64; 3]>), EvalError> {
    let (err, ok) = class_tracks(dataset, skater_id, joint, source, opts)?;
    Ok((mean_track(&err), mean_track(&ok)))
}

type Tracks = Vec<Vec<[f64; 3]>>;

fn class_tracks(
    dataset: &Dataset,
    skater_id: &str,
    joint: Joint,
    source: Source,
    opts: &TrajectoryOptions,
) -> Result<(Tracks, Tracks), EvalError> {
    let undefined = |reason: String| EvalError::Undefined {
        skater: skater_id.to_string(),
        reason,
    };
    let of_class = |label: EdgeLabel| -> Vec<&JumpSample> {
        dataset
            .samples()
            .iter()
            .filter(|s| s.skater_id == skater_id && s.source == source && s.label == label)
            .collect()
    };
    let (err, ok) = (of_class(EdgeLabel::Error), of_class(EdgeLabel::Correct));
    if err.is_empty() || ok.is_empty() {
        return Err(undefined(format!(
            "needs both classes, found {} edge errors and {} correct edges from {source} (single-class skaters such as A and E)",
            err.len(),
            ok.len()
        )));
    }
    let err = joint_tracks(&err, joint, opts)?;
    let ok = joint_tracks(&ok, joint, opts)?;
    let len = err[0].len();
    if err.iter().chain(&ok).any(|t| t.len() != len) {
        return Err(undefined(
            "samples differ in length; crop them to a common window first".into(),
        ));
    }
    Ok((err, ok))
}

/// Euclidean distance between error and correct trajectories of one joint.
pub fn trajectory_distance(
    dataset: &Dataset,
    skater_id: &str,
    joint: Joint,
    source: Source,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryDistance, EvalError> {
    let (err, ok) = class_tracks(dataset, skater_id, joint, source, opts)?;
    let frames = err[0].len();
    let values: Vec<f64> = match opts.mode {
        TrajectoryMode::ClassMeans => {
            let (me, mc) = (mean_track(&err), mean_track(&ok));
            me.iter().zip(&mc).map(|(a, b)| dist(*a, *b)).collect()
        }
        TrajectoryMode::AllPairs => err
            .iter()
            .flat_map(|e| ok.iter().map(move |c| (e, c)))
            .map(|(e, c)| {
                e.iter().zip(c).map(|(a, b)| dist(*a, *b)).sum::<f64>() / frames as f64
            })
            .collect(),
    };
    let (mean, std) = mean_pop_std(&values);
    Ok(TrajectoryDistance {
        skater_id: skater_id.to_string(),
        source,
        joint,
        mode: opts.mode,
        mean,
        std,
        n_error: err.len(),
        n_correct: ok.len(),
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::PoseSequence;
    use crate::skeleton::JOINT_COUNT;

    fn sample(id: &str, skater: &str, label: EdgeLabel, foot: impl Fn(usize) -> [f64; 3]) -> JumpSample {
        let frames = (0..6)
            .map(|t| {
                let mut f = [[0.0; 3]; JOINT_COUNT];
                f[Joint::LFoot.index()] = foot(t);
                f
            })
            .collect();
        JumpSample {
            sample_id: id.into(),
            attempt_id: id.into(),
            skater_id: skater.into(),
            source: Source::Camera,
            pose: PoseSequence { fps: 60.0, frames },
            angles: None,
            detections: None,
            label,
        }
    }

    fn shifted(d: f64) -> Dataset {
        Dataset::new(vec![
            sample("e1", "B", EdgeLabel::Error, |t| [t as f64 + d, 1.0, 0.5]),
            sample("c1", "B", EdgeLabel::Correct, |t| [t as f64, 1.0, 0.5]),
            sample("c2", "B", EdgeLabel::Correct, |t| [t as f64, 1.0, 0.5]),
            sample("a1", "A", EdgeLabel::Error, |_| [0.0; 3]),
        ])
        .unwrap()
    }

    #[test]
    fn identical_classes_zero() {
        let d = trajectory_distance(&shifted(0.0), "B", Joint::LFoot, Source::Camera, &Default::default()).unwrap();
        assert_eq!((d.mean, d.std), (0.0, 0.0));
    }

    #[test]
    fn constant_offset() {
        let d = trajectory_distance(&shifted(0.75), "B", Joint::LFoot, Source::Camera, &Default::default()).unwrap();
        assert_eq!(d.mean, 0.75);
        assert_eq!(d.std, 0.0);
        assert_eq!((d.n_error, d.n_correct, d.frames), (1, 2, 6));
        let pairs = trajectory_distance(
            &shifted(0.75),
            "B",
            Joint::LFoot,
            Source::Camera,
            &TrajectoryOptions { mode: TrajectoryMode::AllPairs, ..Default::default() },
        )
        .unwrap();
        assert_eq!((pairs.mean, pairs.std), (0.75, 0.0));
    }

    #[test]
    fn single_class_skater_is_undefined() {
        let e = trajectory_distance(&shifted(1.0), "A", Joint::LFoot, Source::Camera, &Default::default()).unwrap_err();
        assert!(matches!(e, EvalError::Undefined { .. }));
    }

    #[test]
    fn table_row_format() {
        let d = TrajectoryDistance {
            skater_id: "B".into(),
            source: Source::Camera,
            joint: Joint::LFoot,
            mode: TrajectoryMode::ClassMeans,
            mean: 2.36,
            std: 0.308,
            n_error: 1,
            n_correct: 1,
            frames: 1,
        };
        assert_eq!(d.table_row(), "skater B  2.360 ± 0.308");
    }
}
