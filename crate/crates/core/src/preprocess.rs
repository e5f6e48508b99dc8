//! Pose normalisation, decimation and feature assembly.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{EdgeLabel, JumpSample, PoseSequence, SkateAngleSequence, Source};
use crate::par::{self, Parallelism};
use crate::skeleton::{Joint, AXES, JOINT_COUNT};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("cannot downsample {from} fps to {to} fps: rates are not integer multiples")]
    NonDivisibleRate { from: f64, to: f64 },
    #[error("source unavailable: {config} needs {needs} data but sample {sample_id} has none")]
    SourceUnavailable {
        config: FeatureConfig,
        needs: &'static str,
        sample_id: String,
    },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("unknown feature configuration {0:?}")]
    UnknownConfig(String),
}

/// The ten input-feature recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureConfig {
    CamPos12,
    CamPos60,
    ImuPos12,
    ImuPos60,
    ImuAng12,
    ImuAng60,
    ImuPos12Ang12,
    ImuPos12Ang60,
    ImuPos60Ang12,
    ImuPos60Ang60,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 10] = [
        FeatureConfig::CamPos12,
        FeatureConfig::CamPos60,
        FeatureConfig::ImuPos12,
        FeatureConfig::ImuPos60,
        FeatureConfig::ImuAng12,
        FeatureConfig::ImuAng60,
        FeatureConfig::ImuPos12Ang12,
        FeatureConfig::ImuPos12Ang60,
        FeatureConfig::ImuPos60Ang12,
        FeatureConfig::ImuPos60Ang60,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureConfig::CamPos12 => "cam-pos-12",
            FeatureConfig::CamPos60 => "cam-pos-60",
            FeatureConfig::ImuPos12 => "imu-pos-12",
            FeatureConfig::ImuPos60 => "imu-pos-60",
            FeatureConfig::ImuAng12 => "imu-ang-12",
            FeatureConfig::ImuAng60 => "imu-ang-60",
            FeatureConfig::ImuPos12Ang12 => "imu-pos-12-ang-12",
            FeatureConfig::ImuPos12Ang60 => "imu-pos-12-ang-60",
            FeatureConfig::ImuPos60Ang12 => "imu-pos-60-ang-12",
            FeatureConfig::ImuPos60Ang60 => "imu-pos-60-ang-60",
        }
    }

    /// Row label for summary tables.
    pub fn label(self) -> &'static str {
        match self {
            FeatureConfig::CamPos12 => "Joint pos. 12fps (camera)",
            FeatureConfig::CamPos60 => "Joint pos. 60fps (camera)",
            FeatureConfig::ImuPos12 => "Joint pos. 12fps (IMU)",
            FeatureConfig::ImuPos60 => "Joint pos. 60fps (IMU)",
            FeatureConfig::ImuAng12 => "Lfoot ang. 12fps (IMU)",
            FeatureConfig::ImuAng60 => "Lfoot ang. 60fps (IMU)",
            FeatureConfig::ImuPos12Ang12 => "Joint pos. 12fps + Lfoot ang. 12fps (IMU)",
            FeatureConfig::ImuPos12Ang60 => "Joint pos. 12fps + Lfoot ang. 60fps (IMU)",
            FeatureConfig::ImuPos60Ang12 => "Joint pos. 60fps + Lfoot ang. 12fps (IMU)",
            FeatureConfig::ImuPos60Ang60 => "Joint pos. 60fps + Lfoot ang. 60fps (IMU)",
        }
    }

    pub fn source(self) -> Source {
        match self {
            FeatureConfig::CamPos12 | FeatureConfig::CamPos60 => Source::Camera,
            _ => Source::Imu,
        }
    }

    /// Target rate of the pose part, if the config uses joint positions.
    pub fn pose_fps(self) -> Option<f64> {
        use FeatureConfig::*;
        match self {
            CamPos12 | ImuPos12 | ImuPos12Ang12 | ImuPos12Ang60 => Some(12.0),
            CamPos60 | ImuPos60 | ImuPos60Ang12 | ImuPos60Ang60 => Some(60.0),
            ImuAng12 | ImuAng60 => None,
        }
    }

    /// Target rate of the skate-angle part, if the config uses angles.
    pub fn angle_fps(self) -> Option<f64> {
        use FeatureConfig::*;
        match self {
            ImuAng12 | ImuPos12Ang12 | ImuPos60Ang12 => Some(12.0),
            ImuAng60 | ImuPos12Ang60 | ImuPos60Ang60 => Some(60.0),
            _ => None,
        }
    }

    pub fn uses_angles_only(self) -> bool {
        self.pose_fps().is_none()
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureConfig {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureConfig::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| PreprocessError::UnknownConfig(s.to_string()))
    }
}

impl From<FeatureConfig> for String {
    fn from(c: FeatureConfig) -> String {
        c.name().to_string()
    }
}

impl TryFrom<String> for FeatureConfig {
    type Error = PreprocessError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// How the vertical offset is chosen when normalising a pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundMode {
    /// One offset per sequence: the lowest foot height over all frames.
    /// Flight height survives.
    #[default]
    PerSequence,
    /// Lower foot zeroed in every frame.
    PerFrame,
}

/// Hip-centres x/y in every frame and puts the ground at z = 0.
pub fn normalize_pose(seq: &PoseSequence) -> PoseSequence {
    normalize_pose_with(seq, GroundMode::PerSequence)
}

pub fn normalize_pose_with(seq: &PoseSequence, mode: GroundMode) -> PoseSequence {
    let (lf, rf, hip) = (Joint::LFoot.index(), Joint::RFoot.index(), Joint::Hip.index());
    let lower_foot = |f: &[[f64; 3]; JOINT_COUNT]| f[lf][2].min(f[rf][2]);
    let global = seq
        .frames
        .iter()
        .map(lower_foot)
        .fold(f64::INFINITY, f64::min);
    let frames = seq
        .frames
        .iter()
        .map(|f| {
            let (hx, hy) = (f[hip][0], f[hip][1]);
            let dz = match mode {
                GroundMode::PerSequence => global,
                GroundMode::PerFrame => lower_foot(f),
            };
            let mut out = *f;
            for p in out.iter_mut() {
                p[0] -= hx;
                p[1] -= hy;
                p[2] -= dz;
            }
            out
        })
        .collect();
    PoseSequence {
        fps: seq.fps,
        frames,
    }
}

/// Integer decimation stride from `fps` to `target`.
pub fn decimation_stride(fps: f64, target: f64) -> Result<usize, PreprocessError> {
    let err = PreprocessError::NonDivisibleRate {
        from: fps,
        to: target,
    };
    if !(target > 0.0 && fps >= target) {
        return Err(err);
    }
    let k = fps / target;
    let r = k.round();
    if (k - r).abs() > 1e-9 {
        return Err(err);
    }
    Ok(r as usize)
}

/// Keeps frames `0, k, 2k, ...` with `k = fps / target_fps`. No filtering.
pub fn downsample(seq: &PoseSequence, target_fps: f64) -> Result<PoseSequence, PreprocessError> {
    let k = decimation_stride(seq.fps, target_fps)?;
    Ok(PoseSequence {
        fps: target_fps,
        frames: seq.frames.iter().step_by(k).copied().collect(),
    })
}

pub fn downsample_angles(
    seq: &SkateAngleSequence,
    target_fps: f64,
) -> Result<SkateAngleSequence, PreprocessError> {
    let k = decimation_stride(seq.fps, target_fps)?;
    Ok(SkateAngleSequence {
        fps: target_fps,
        frames: seq.frames.iter().step_by(k).copied().collect(),
    })
}

pub const ANGLE_AXES: [&str; 3] = ["roll", "pitch", "yaw"];

/// Meaning of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureIndex {
    Pose {
        frame: usize,
        joint: Joint,
        axis: usize,
    },
    Angle {
        frame: usize,
        axis: usize,
    },
}

/// Group used for importance aggregation: a joint, or a skate-angle axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    Joint(Joint),
    Angle(usize),
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureGroup::Joint(j) => write!(f, "{j}"),
            FeatureGroup::Angle(a) => write!(f, "angle_{}", ANGLE_AXES[*a]),
        }
    }
}

impl FeatureIndex {
    pub fn group(self) -> FeatureGroup {
        match self {
            FeatureIndex::Pose { joint, .. } => FeatureGroup::Joint(joint),
            FeatureIndex::Angle { axis, .. } => FeatureGroup::Angle(axis),
        }
    }

    pub fn column_name(self) -> String {
        match self {
            FeatureIndex::Pose { frame, joint, axis } => {
                format!("pose.f{frame}.{joint}.{}", AXES[axis])
            }
            FeatureIndex::Angle { frame, axis } => {
                format!("angle.f{frame}.{}", ANGLE_AXES[axis])
            }
        }
    }
}

/// Column layout: pose block (frame-major, then joint, then axis) followed
/// by the angle block (frame-major, then axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub pose_frames: usize,
    pub angle_frames: usize,
}

impl FeatureLayout {
    pub fn pose_len(&self) -> usize {
        self.pose_frames * JOINT_COUNT * 3
    }

    pub fn len(&self) -> usize {
        self.pose_len() + self.angle_frames * 3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize) -> FeatureIndex {
        if i < self.pose_len() {
            let frame = i / (JOINT_COUNT * 3);
            let rem = i % (JOINT_COUNT * 3);
            FeatureIndex::Pose {
                frame,
                joint: Joint::ALL[rem / 3],
                axis: rem % 3,
            }
        } else {
            let k = i - self.pose_len();
            FeatureIndex::Angle {
                frame: k / 3,
                axis: k % 3,
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureIndex> + '_ {
        (0..self.len()).map(|i| self.index(i))
    }

    /// Groups present in this layout, in column order of first appearance.
    pub fn groups(&self) -> Vec<FeatureGroup> {
        let mut g = Vec::new();
        if self.pose_frames > 0 {
            g.extend(Joint::ALL.iter().map(|&j| FeatureGroup::Joint(j)));
        }
        if self.angle_frames > 0 {
            g.extend((0..3).map(FeatureGroup::Angle));
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub config: FeatureConfig,
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    pub ground: GroundMode,
}

pub fn build_features(
    sample: &JumpSample,
    config: FeatureConfig,
) -> Result<FeatureVector, PreprocessError> {
    build_features_with(sample, config, &PreprocessOptions::default())
}

pub fn build_features_with(
    sample: &JumpSample,
    config: FeatureConfig,
    opts: &PreprocessOptions,
) -> Result<FeatureVector, PreprocessError> {
    let unavailable = |needs| PreprocessError::SourceUnavailable {
        config,
        needs,
        sample_id: sample.sample_id.clone(),
    };
    if sample.source != config.source() {
        return Err(unavailable(match config.source() {
            Source::Camera => "camera",
            Source::Imu => "IMU",
        }));
    }
    let mut values = Vec::new();
    let mut layout = FeatureLayout {
        pose_frames: 0,
        angle_frames: 0,
    };
    if let Some(fps) = config.pose_fps() {
        let pose = downsample(&normalize_pose_with(&sample.pose, opts.ground), fps)?;
        layout.pose_frames = pose.len();
        values.reserve(layout.pose_len());
        values.extend(pose.frames.iter().flatten().flatten().copied());
    }
    if let Some(fps) = config.angle_fps() {
        let angles = sample
            .angles
            .as_ref()
            .ok_or_else(|| unavailable("skate angle"))?;
        let angles = downsample_angles(angles, fps)?;
        layout.angle_frames = angles.len();
        values.extend(angles.frames.iter().flatten().copied());
    }
    Ok(FeatureVector {
        config,
        values,
        layout,
    })
}

/// Feature rows for a set of samples sharing one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub config: FeatureConfig,
    pub layout: FeatureLayout,
    pub sample_ids: Vec<String>,
    pub skater_ids: Vec<String>,
    pub labels: Vec<EdgeLabel>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows whose index satisfies `keep`, in original order.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> FeatureMatrix {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(i)).collect();
        FeatureMatrix {
            config: self.config,
            layout: self.layout,
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            skater_ids: idx.iter().map(|&i| self.skater_ids[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec![
            "sample_id".to_string(),
            "skater_id".to_string(),
            "label".to_string(),
        ];
        header.extend(self.layout.iter().map(FeatureIndex::column_name));
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![
                self.sample_ids[i].clone(),
                self.skater_ids[i].clone(),
                self.labels[i].as_u8().to_string(),
            ];
            rec.extend(self.rows[i].iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Builds features for every sample whose source matches `config`.
pub fn build_matrix<'a>(
    samples: impl IntoIterator<Item = &'a JumpSample>,
    config: FeatureConfig,
    opts: &PreprocessOptions,
    mode: Parallelism,
) -> Result<FeatureMatrix, PreprocessError> {
    let picked: Vec<&JumpSample> = samples
        .into_iter()
        .filter(|s| s.source == config.source())
        .collect();
    let vectors = par::map(mode, &picked, |s| build_features_with(s, config, opts));
    let mut rows = Vec::with_capacity(picked.len());
    let mut layout = None;
    for (s, v) in picked.iter().zip(vectors) {
        let v = v?;
        match layout {
            None => layout = Some(v.layout),
            Some(l) if l != v.layout => {
                return Err(PreprocessError::LayoutMismatch(format!(
                    "sample {} has {} pose / {} angle frames, expected {} / {}; crop samples to a common window first",
                    s.sample_id, v.layout.pose_frames, v.layout.angle_frames, l.pose_frames, l.angle_frames
                )))
            }
            Some(_) => {}
        }
        rows.push(v.values);
    }
    Ok(FeatureMatrix {
        config,
        layout: layout.unwrap_or(FeatureLayout {
            pose_frames: 0,
            angle_frames: 0,
        }),
        sample_ids: picked.iter().map(|s| s.sample_id.clone()).collect(),
        skater_ids: picked.iter().map(|s| s.skater_id.clone()).collect(),
        labels: picked.iter().map(|s| s.label).collect(),
        rows,
    })
}
