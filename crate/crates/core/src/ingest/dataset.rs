use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    parse_angle_sequence, parse_detections, parse_pose_sequence_with_gaps, validate_sample,
    DetectionRecord, IngestError, PoseSequence, SkateAngleSequence, DEFAULT_MAX_GAP,
};
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Camera,
    Imu,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Camera => "camera",
            Source::Imu => "imu",
        })
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "camera" => Ok(Source::Camera),
            "imu" => Ok(Source::Imu),
            _ => Err(format!("unknown source {s:?}")),
        }
    }
}

/// Referee judgment of the take-off edge. Edge errors are the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Correct = 0,
    Error = 1,
}

impl EdgeLabel {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(EdgeLabel::Correct),
            1 => Some(EdgeLabel::Error),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_error(self) -> bool {
        self == EdgeLabel::Error
    }
}

/// One labelled jump recording from a single source.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpSample {
    pub sample_id: String,
    /// Jump attempt this recording belongs to. Camera and IMU recordings of
    /// the same jump share an attempt id.
    pub attempt_id: String,
    pub skater_id: String,
    pub source: Source,
    pub pose: PoseSequence,
    pub angles: Option<SkateAngleSequence>,
    /// Raw detection stream used to segment an uncropped camera recording.
    pub detections: Option<Vec<DetectionRecord>>,
    pub label: EdgeLabel,
}

impl JumpSample {
    pub fn check(&self) -> Result<(), IngestError> {
        let ctx = |e: IngestError| match e {
            IngestError::Validation(m) => {
                IngestError::Validation(format!("sample {}: {m}", self.sample_id))
            }
            other => other,
        };
        self.pose.check_shape().map_err(ctx)?;
        self.pose.check_finite().map_err(ctx)?;
        if let Some(a) = &self.angles {
            if self.source == Source::Camera {
                return Err(IngestError::Validation(format!(
                    "sample {}: camera samples cannot carry skate angles",
                    self.sample_id
                )));
            }
            a.check_shape().map_err(ctx)?;
            a.check_values().map_err(ctx)?;
            let slack = 1.0 / a.fps.min(self.pose.fps);
            if (a.duration() - self.pose.duration()).abs() > slack + 1e-9 {
                return Err(IngestError::Validation(format!(
                    "sample {}: angle duration {:.4}s differs from pose duration {:.4}s by more than one frame",
                    self.sample_id,
                    a.duration(),
                    self.pose.duration()
                )));
            }
        }
        Ok(())
    }
}

/// A sample dropped during loading, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub sample_id: String,
    pub reason: String,
}

/// Validated, immutable collection of jump samples.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<JumpSample>,
    rejected: Vec<Rejection>,
    class_counts: (usize, usize),
    skater_index: BTreeMap<String, Vec<String>>,
}

impl Dataset {
    pub fn new(samples: Vec<JumpSample>) -> Result<Self, IngestError> {
        Self::with_rejections(samples, Vec::new())
    }

    pub fn with_rejections(
        samples: Vec<JumpSample>,
        rejected: Vec<Rejection>,
    ) -> Result<Self, IngestError> {
        let mut ids = BTreeSet::new();
        let mut attempts: BTreeMap<&str, (&str, EdgeLabel)> = BTreeMap::new();
        let mut skater_index: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in &samples {
            if !ids.insert(s.sample_id.as_str()) {
                return Err(IngestError::Manifest(format!(
                    "duplicate sample_id {}",
                    s.sample_id
                )));
            }
            s.check()?;
            match attempts.get(s.attempt_id.as_str()) {
                Some(&(skater, label)) if skater != s.skater_id || label != s.label => {
                    return Err(IngestError::Manifest(format!(
                        "attempt {} has inconsistent skater or label across recordings",
                        s.attempt_id
                    )));
                }
                Some(_) => {}
                None => {
                    attempts.insert(&s.attempt_id, (&s.skater_id, s.label));
                }
            }
            skater_index
                .entry(s.skater_id.clone())
                .or_default()
                .push(s.sample_id.clone());
        }
        let n_error = attempts.values().filter(|(_, l)| l.is_error()).count();
        let class_counts = (n_error, attempts.len() - n_error);
        Ok(Dataset {
            samples,
            rejected,
            class_counts,
            skater_index,
        })
    }

    pub fn samples(&self) -> &[JumpSample] {
        &self.samples
    }

    pub fn rejected(&self) -> &[Rejection] {
        &self.rejected
    }

    /// `(n_error, n_correct)` counted over jump attempts.
    pub fn class_counts(&self) -> (usize, usize) {
        self.class_counts
    }

    pub fn skater_index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.skater_index
    }

    /// Skater ids in sorted order.
    pub fn skaters(&self) -> Vec<&str> {
        self.skater_index.keys().map(String::as_str).collect()
    }

    pub fn get(&self, sample_id: &str) -> Option<&JumpSample> {
        self.samples.iter().find(|s| s.sample_id == sample_id)
    }

    /// Per-skater `(n_error, n_correct)` over jump attempts.
    pub fn composition(&self) -> BTreeMap<String, (usize, usize)> {
        let mut seen = BTreeSet::new();
        let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for s in &self.samples {
            if !seen.insert(s.attempt_id.as_str()) {
                continue;
            }
            let e = out.entry(s.skater_id.clone()).or_default();
            if s.label.is_error() {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        out
    }
}

/// Per-skater `(skater, edge errors, correct edges)` of the reference Lutz
/// dataset.
pub const TABLE_ONE: [(&str, usize, usize); 6] = [
    ("A", 29, 0),
    ("B", 19, 18),
    ("C", 22, 14),
    ("D", 12, 38),
    ("E", 30, 0),
    ("F", 20, 30),
];

/// `(n_error, n_correct)` summed over [`TABLE_ONE`].
pub const TABLE_ONE_TOTALS: (usize, usize) = (132, 100);

/// `(n_error, n_correct)` as stated in the reference prose. It disagrees with
/// the table sums; both are reported side by side.
pub const TEXT_CLAIMED_TOTALS: (usize, usize) = (100, 132);

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub sample_id: String,
    #[serde(default)]
    pub attempt_id: Option<String>,
    pub skater_id: String,
    pub source: Source,
    pub pose: String,
    #[serde(default)]
    pub angles: Option<String>,
    #[serde(default)]
    pub detections: Option<String>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub max_gap: usize,
    pub parallelism: Parallelism,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            max_gap: DEFAULT_MAX_GAP,
            parallelism: Parallelism::default(),
        }
    }
}

fn non_empty(s: &Option<String>) -> Option<&str> {
    s.as_deref().map(str::trim).filter(|s| !s.is_empty())
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|e| IngestError::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn with_path(path: &Path, e: IngestError) -> IngestError {
    IngestError::Load {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn load_row(row: &ManifestRow, base: &Path) -> Result<JumpSample, IngestError> {
    let label = EdgeLabel::from_u8(row.label).ok_or_else(|| {
        IngestError::Manifest(format!(
            "sample {}: label must be 0 or 1, got {}",
            row.sample_id, row.label
        ))
    })?;
    let pose_path = base.join(&row.pose);
    let pose = parse_pose_sequence_with_gaps(open(&pose_path)?)
        .map_err(|e| with_path(&pose_path, e))?;
    let angles = match non_empty(&row.angles) {
        Some(p) => {
            let p = base.join(p);
            Some(parse_angle_sequence(open(&p)?).map_err(|e| with_path(&p, e))?)
        }
        None => None,
    };
    let detections = match non_empty(&row.detections) {
        Some(p) => {
            let p = base.join(p);
            Some(parse_detections(open(&p)?).map_err(|e| with_path(&p, e))?)
        }
        None => None,
    };
    Ok(JumpSample {
        sample_id: row.sample_id.clone(),
        attempt_id: non_empty(&row.attempt_id)
            .unwrap_or(&row.sample_id)
            .to_string(),
        skater_id: row.skater_id.clone(),
        source: row.source,
        pose,
        angles,
        detections,
        label,
    })
}

/// Loads a CSV manifest and every file it references.
///
/// Samples whose occlusion gaps cannot be repaired are left out and listed in
/// [`Dataset::rejected`]. Parse failures and missing files abort the load.
pub fn load_dataset(manifest: &Path, opts: &LoadOptions) -> Result<Dataset, IngestError> {
    let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(manifest)?);
    let mut rows = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        let row = rec.map_err(|e| IngestError::Manifest(format!("row {}: {e}", i + 1)))?;
        if !ids.insert(row.sample_id.clone()) {
            return Err(IngestError::Manifest(format!(
                "duplicate sample_id {}",
                row.sample_id
            )));
        }
        rows.push(row);
    }

    let loaded = par::map(opts.parallelism, &rows, |row| {
        load_row(row, &base).map(|s| validate_sample(&s, opts.max_gap))
    });
    let mut samples = Vec::new();
    let mut rejected = Vec::new();
    for r in loaded {
        match r? {
            Ok(s) => samples.push(s),
            Err(rej) => rejected.push(rej),
        }
    }
    Dataset::with_rejections(samples, rejected)
}

/// Writes a manifest CSV. Paths in `rows` should be relative to the manifest.
pub fn write_manifest<W: Write>(w: W, rows: &[ManifestRow]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
