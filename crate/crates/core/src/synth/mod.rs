//! Closed-form synthetic jumps.
//!
//! A minimal rig travels along `+x` with `z` up and the skater's left side
//! at `+y`. The hip follows a ballistic arc during flight; the left foot is
//! the rig's hip-to-foot vector rotated about the travel axis by the edge
//! lean, so a positive (inside) lean pushes it outward by
//! `foot_length * sin(lean)`. Nothing else depends on the label.

mod scene;

pub use scene::{generate_detections, Actor, ActorRole, Projection, SynthScene};

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    Dataset, EdgeLabel, Frame, IngestError, JumpSample, PoseSequence, SkateAngleSequence, Source,
};
use crate::par::{self, Parallelism};
use crate::skeleton::{Joint, JOINT_COUNT};
use crate::tracker::{velocity_change, CropConfig, TrackerConfig, DEFAULT_V_CHANGE_MIN_240};

/// Hip-to-foot length of the nominal rig.
pub const FOOT_LENGTH: f64 = 0.9;
/// Flight time of a Lutz, seconds.
pub const FLIGHT_TIME: f64 = 0.5;
/// Length of a raw camera recording, seconds.
pub const RECORDING_SECONDS: f64 = 2.0;
/// Nominal take-off time within a raw camera recording, seconds.
pub const TAKEOFF_SECONDS: f64 = 1.25;
/// Time over which the lean builds up before take-off, seconds.
pub const LEAN_RAMP: f64 = 0.3;
/// Sampling rate of IMU samples.
pub const IMU_FPS: f64 = 60.0;

/// Gravity (units/s²) that gives a flight of `FLIGHT_TIME` at `height`.
pub fn gravity(height: f64) -> f64 {
    8.0 * height / (FLIGHT_TIME * FLIGHT_TIME)
}

/// Vertical launch speed (units/s) reaching `height`.
pub fn launch_speed(height: f64) -> f64 {
    4.0 * height / FLIGHT_TIME
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_skaters: usize,
    pub jumps_per_skater: usize,
    pub error_fraction: f64,
    /// Per-skater error fractions; overrides `error_fraction` when non-empty.
    pub skater_error_fractions: Vec<f64>,
    /// Inside lean of edge errors, degrees.
    pub lean_error_deg: f64,
    /// Outside lean of correct take-offs, degrees.
    pub lean_correct_deg: f64,
    /// Units per second.
    pub approach_speed: f64,
    pub flight_height: f64,
    /// Gaussian noise on every pose coordinate, units.
    pub noise_sigma: f64,
    /// Camera frame rate. IMU samples are always at 60 fps.
    pub fps: f64,
    pub seed: u64,
    /// Relative spread of per-skater limb lengths.
    pub style_spread: f64,
    /// Maximum take-off jitter in a raw camera recording, seconds.
    pub takeoff_jitter: f64,
    pub bystanders: usize,
    pub bbox_noise_px: f64,
    pub projection: Projection,
    pub sources: Vec<Source>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_skaters: 6,
            jumps_per_skater: 40,
            error_fraction: 0.5,
            skater_error_fractions: Vec::new(),
            lean_error_deg: 10.0,
            lean_correct_deg: -10.0,
            approach_speed: 6.0,
            flight_height: 0.3,
            noise_sigma: 0.05 * FOOT_LENGTH,
            fps: 240.0,
            seed: 7,
            style_spread: 0.05,
            takeoff_jitter: 0.08,
            bystanders: 2,
            bbox_noise_px: 1.0,
            projection: Projection::default(),
            sources: vec![Source::Camera, Source::Imu],
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid synth config: {0}")]
pub struct SynthConfigError(pub String);

impl SynthConfig {
    /// Zero lean on both classes is accepted as a no-signal control.
    pub fn check(&self) -> Result<(), SynthConfigError> {
        let bad = |m: String| Err(SynthConfigError(m));
        let control = self.lean_error_deg == 0.0 && self.lean_correct_deg == 0.0;
        if !control && !(self.lean_error_deg > 0.0 && self.lean_correct_deg < 0.0) {
            return bad(format!(
                "need lean_error_deg > 0 > lean_correct_deg (or both 0), got {} and {}",
                self.lean_error_deg, self.lean_correct_deg
            ));
        }
        if self.lean_error_deg.abs() >= 90.0 || self.lean_correct_deg.abs() >= 90.0 {
            return bad("lean angles must be within ±90°".into());
        }
        if self.fps != 240.0 && self.fps != 60.0 {
            return bad(format!("fps must be 240 or 60, got {}", self.fps));
        }
        if !(self.noise_sigma >= 0.0 && self.bbox_noise_px >= 0.0) {
            return bad("noise must be non-negative".into());
        }
        if self.n_skaters == 0 || self.jumps_per_skater == 0 {
            return bad("need at least one skater and one jump".into());
        }
        let fracs = std::iter::once(self.error_fraction).chain(self.skater_error_fractions.iter().copied());
        for f in fracs {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("error fraction {f} outside [0, 1]"));
            }
        }
        if !self.skater_error_fractions.is_empty() && self.skater_error_fractions.len() != self.n_skaters {
            return bad(format!(
                "{} per-skater error fractions for {} skaters",
                self.skater_error_fractions.len(),
                self.n_skaters
            ));
        }
        if !(self.flight_height > 0.0) || !(self.approach_speed >= 0.0) {
            return bad("flight_height must be > 0 and approach_speed >= 0".into());
        }
        if !(0.0..0.5).contains(&self.style_spread) || !(0.0..=0.2).contains(&self.takeoff_jitter) {
            return bad("style_spread must be in [0, 0.5) and takeoff_jitter in [0, 0.2]".into());
        }
        if self.sources.is_empty() {
            return bad("no sources selected".into());
        }
        Ok(())
    }

    pub fn error_fraction_of(&self, skater: usize) -> f64 {
        self.skater_error_fractions
            .get(skater)
            .copied()
            .unwrap_or(self.error_fraction)
    }

    /// Number of edge errors among a skater's jumps.
    pub fn n_errors(&self, skater: usize) -> usize {
        (self.jumps_per_skater as f64 * self.error_fraction_of(skater)).round() as usize
    }

    pub fn lean_deg(&self, label: EdgeLabel) -> f64 {
        match label {
            EdgeLabel::Error => self.lean_error_deg,
            EdgeLabel::Correct => self.lean_correct_deg,
        }
    }

    pub fn camera_frames(&self) -> usize {
        (RECORDING_SECONDS * self.fps).round() as usize
    }
}

/// Per-skater rig variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkaterStyle {
    pub limb_scale: f64,
    /// Lateral hip-joint offset, units.
    pub hip_half_width: f64,
    /// Approach path `y = curvature * x²` before take-off; the skater leaves
    /// along the tangent, which is the `x` axis.
    pub curvature: f64,
    /// Forward trunk pitch reported by the skate IMU, degrees.
    pub pitch_deg: f64,
}

impl SkaterStyle {
    pub const NOMINAL: SkaterStyle = SkaterStyle {
        limb_scale: 1.0,
        hip_half_width: 0.1,
        curvature: 0.0,
        pitch_deg: 0.0,
    };

    pub fn foot_length(&self) -> f64 {
        FOOT_LENGTH * self.limb_scale
    }

    pub fn hip_height(&self) -> f64 {
        self.foot_length()
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const STREAM_STYLE: u64 = 1;
const STREAM_PLAN: u64 = 2;
const STREAM_CAMERA: u64 = 3;
const STREAM_IMU: u64 = 4;
const STREAM_SCENE: u64 = 5;

/// Independent generator for one (seed, skater, jump, stream) tuple.
pub fn stream_rng(seed: u64, skater: usize, jump: usize, stream: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for v in [skater as u64, jump as u64, stream] {
        h = splitmix(h ^ v);
    }
    ChaCha8Rng::seed_from_u64(h)
}

pub fn skater_style(config: &SynthConfig, skater: usize) -> SkaterStyle {
    let mut rng = stream_rng(config.seed, skater, 0, STREAM_STYLE);
    let s = config.style_spread;
    let mut u = || rng.random_range(-1.0..=1.0);
    SkaterStyle {
        limb_scale: 1.0 + s * u(),
        hip_half_width: 0.1 * (1.0 + s * u()),
        curvature: 0.02 * u(),
        pitch_deg: 5.0 + 3.0 * u(),
    }
}

pub fn skater_id(skater: usize) -> String {
    if skater < 26 {
        char::from(b'A' + skater as u8).to_string()
    } else {
        format!("S{skater:02}")
    }
}

/// One jump attempt before rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPlan {
    pub skater: usize,
    pub jump: usize,
    pub label: EdgeLabel,
    /// Take-off frame within the raw camera recording.
    pub takeoff_frame: usize,
}

impl JumpPlan {
    pub fn attempt_id(&self) -> String {
        format!("{}-{:03}", skater_id(self.skater), self.jump)
    }

    pub fn sample_id(&self, source: Source) -> String {
        let tag = match source {
            Source::Camera => "cam",
            Source::Imu => "imu",
        };
        format!("{}-{tag}", self.attempt_id())
    }

    /// Analytic apex frame in the raw camera recording.
    pub fn apex_frame(&self, fps: f64) -> usize {
        self.takeoff_frame + (0.5 * FLIGHT_TIME * fps).round() as usize
    }
}

/// The first `n_errors` jumps of each skater are edge errors.
pub fn plan_jump(config: &SynthConfig, skater: usize, jump: usize) -> JumpPlan {
    let label = if jump < config.n_errors(skater) {
        EdgeLabel::Error
    } else {
        EdgeLabel::Correct
    };
    let jitter = (config.takeoff_jitter * config.fps).round() as i64;
    let mut rng = stream_rng(config.seed, skater, jump, STREAM_PLAN);
    let offset = if jitter > 0 {
        rng.random_range(-jitter..=jitter)
    } else {
        0
    };
    let nominal = (TAKEOFF_SECONDS * config.fps).round() as i64;
    JumpPlan {
        skater,
        jump,
        label,
        takeoff_frame: (nominal + offset) as usize,
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Fraction of the full lean applied `s` seconds after take-off: ramps in
/// over `LEAN_RAMP` before take-off, holds through flight and relaxes after
/// landing.
pub fn lean_profile(s: f64) -> f64 {
    let release = FLIGHT_TIME + 0.1;
    if s < 0.0 {
        smoothstep((s + LEAN_RAMP) / LEAN_RAMP)
    } else if s <= release {
        1.0
    } else {
        1.0 - smoothstep((s - release) / 0.2)
    }
}

/// Hip-relative joints for a given left-foot lean (radians).
pub fn rig_offsets(style: &SkaterStyle, lean: f64) -> Frame {
    let k = style.limb_scale;
    let w = style.hip_half_width;
    let l = style.foot_length();
    let mut f = [[0.0; 3]; JOINT_COUNT];
    let mut put = |j: Joint, p: [f64; 3]| f[j.index()] = p;
    put(Joint::Hip, [0.0, 0.0, 0.0]);
    put(Joint::RHip, [0.0, -w, 0.0]);
    put(Joint::RKnee, [0.05 * k, -w, -0.5 * l]);
    put(Joint::RFoot, [0.0, -w, -l]);
    put(Joint::LHip, [0.0, w, 0.0]);
    put(Joint::LKnee, [0.05 * k, w, -0.5 * l]);
    put(Joint::LFoot, [0.0, w + l * lean.sin(), -l * lean.cos()]);
    put(Joint::Spine, [0.0, 0.0, 0.25 * k]);
    put(Joint::Thorax, [0.0, 0.0, 0.5 * k]);
    put(Joint::Neck, [0.0, 0.0, 0.6 * k]);
    put(Joint::Head, [0.02 * k, 0.0, 0.75 * k]);
    put(Joint::LShoulder, [0.0, 0.18 * k, 0.5 * k]);
    put(Joint::LElbow, [0.05 * k, 0.22 * k, 0.25 * k]);
    put(Joint::LWrist, [0.15 * k, 0.2 * k, 0.1 * k]);
    put(Joint::RShoulder, [0.0, -0.18 * k, 0.5 * k]);
    put(Joint::RElbow, [0.05 * k, -0.22 * k, 0.25 * k]);
    put(Joint::RWrist, [0.15 * k, -0.2 * k, 0.1 * k]);
    f
}

/// Hip position `s` seconds after take-off.
pub fn hip_position(style: &SkaterStyle, config: &SynthConfig, s: f64) -> [f64; 3] {
    let x = config.approach_speed * s;
    let y = style.curvature * x.min(0.0).powi(2);
    let mut z = style.hip_height();
    if (0.0..=FLIGHT_TIME).contains(&s) {
        let h = config.flight_height;
        z += launch_speed(h) * s - 0.5 * gravity(h) * s * s;
    }
    [x, y, z]
}

/// Noise-free world-space pose `s` seconds after take-off.
pub fn body_frame(style: &SkaterStyle, config: &SynthConfig, lean_deg: f64, s: f64) -> Frame {
    let hip = hip_position(style, config, s);
    let mut f = rig_offsets(style, (lean_deg * lean_profile(s)).to_radians());
    for p in f.iter_mut() {
        for a in 0..3 {
            p[a] += hip[a];
        }
    }
    f
}

fn add_noise(frames: &mut [Frame], sigma: f64, rng: &mut impl Rng) {
    if sigma == 0.0 {
        return;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    for f in frames {
        for p in f.iter_mut() {
            for v in p.iter_mut() {
                *v += n.sample(rng);
            }
        }
    }
}

/// Times (seconds after take-off) of a raw camera recording.
fn camera_times(config: &SynthConfig, plan: &JumpPlan) -> Vec<f64> {
    (0..config.camera_frames())
        .map(|t| (t as f64 - plan.takeoff_frame as f64) / config.fps)
        .collect()
}

/// Times of a pre-cropped IMU sample: 51 frames with take-off at index 25.
fn imu_times() -> Vec<f64> {
    let crop = CropConfig::for_fps(IMU_FPS);
    (0..crop.window_len)
        .map(|k| (k as f64 - crop.aligned_index as f64) / IMU_FPS)
        .collect()
}

/// Camera scene for a jump: the jumper plus bystanders gliding at constant
/// speed further from the camera.
pub fn jump_scene(style: &SkaterStyle, plan: &JumpPlan, config: &SynthConfig) -> SynthScene {
    let lean = config.lean_deg(plan.label);
    let times = camera_times(config, plan);
    let mut actors = vec![Actor {
        role: ActorRole::Jumper,
        frames: times.iter().map(|&s| body_frame(style, config, lean, s)).collect(),
    }];
    for b in 0..config.bystanders {
        let depth = 4.0 * (b + 1) as f64;
        let speed = if b % 2 == 0 { 3.0 } else { -4.0 };
        let x0 = if b % 2 == 0 { -3.0 } else { 8.0 };
        let rig = rig_offsets(&SkaterStyle::NOMINAL, 0.0);
        let frames = (0..times.len())
            .map(|t| {
                let hip = [x0 + speed * t as f64 / config.fps, depth, FOOT_LENGTH];
                let mut f = rig;
                for p in f.iter_mut() {
                    for a in 0..3 {
                        p[a] += hip[a];
                    }
                }
                f
            })
            .collect();
        actors.push(Actor {
            role: ActorRole::Bystander,
            frames,
        });
    }
    let rng_seed = stream_rng(config.seed, plan.skater, plan.jump, STREAM_SCENE).random();
    SynthScene {
        actors,
        projection: config.projection,
        noise_px: config.bbox_noise_px,
        seed: rng_seed,
    }
}

/// Renders one sample. Camera samples are raw recordings with detections;
/// IMU samples are pre-cropped and carry skate angles whose roll is the lean.
pub fn generate_jump(
    style: &SkaterStyle,
    plan: &JumpPlan,
    source: Source,
    config: &SynthConfig,
    rng: &mut impl Rng,
) -> JumpSample {
    let lean = config.lean_deg(plan.label);
    let (fps, times) = match source {
        Source::Camera => (config.fps, camera_times(config, plan)),
        Source::Imu => (IMU_FPS, imu_times()),
    };
    let mut frames: Vec<Frame> = times
        .iter()
        .map(|&s| body_frame(style, config, lean, s))
        .collect();
    add_noise(&mut frames, config.noise_sigma, rng);
    let (angles, detections) = match source {
        Source::Camera => {
            let scene = jump_scene(style, plan, config);
            (None, Some(generate_detections(&scene)))
        }
        Source::Imu => {
            let sigma_deg = (config.noise_sigma / FOOT_LENGTH).to_degrees();
            let noise = Normal::new(0.0, sigma_deg).expect("finite sigma");
            let jitter = |rng: &mut dyn rand::RngCore| {
                if sigma_deg > 0.0 {
                    noise.sample(rng)
                } else {
                    0.0
                }
            };
            let rows = times
                .iter()
                .map(|&s| {
                    let x = config.approach_speed * s;
                    let yaw = (2.0 * style.curvature * x.min(0.0)).atan() * 180.0 / PI;
                    [
                        lean * lean_profile(s) + jitter(rng),
                        style.pitch_deg + jitter(rng),
                        yaw + jitter(rng),
                    ]
                })
                .collect();
            (
                Some(SkateAngleSequence {
                    fps: IMU_FPS,
                    frames: rows,
                }),
                None,
            )
        }
    };
    JumpSample {
        sample_id: plan.sample_id(source),
        attempt_id: plan.attempt_id(),
        skater_id: skater_id(plan.skater),
        source,
        pose: PoseSequence { fps, frames },
        angles,
        detections,
        label: plan.label,
    }
}

/// Deterministic sample for (config.seed, skater, jump, source).
pub fn generate_sample(config: &SynthConfig, skater: usize, jump: usize, source: Source) -> JumpSample {
    let style = skater_style(config, skater);
    let plan = plan_jump(config, skater, jump);
    let stream = match source {
        Source::Camera => STREAM_CAMERA,
        Source::Imu => STREAM_IMU,
    };
    let mut rng = stream_rng(config.seed, skater, jump, stream);
    generate_jump(&style, &plan, source, config, &mut rng)
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error(transparent)]
    Config(#[from] SynthConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Every sample of every skater, in (skater, jump, source) order.
pub fn generate_dataset(config: &SynthConfig, mode: Parallelism) -> Result<Dataset, SynthError> {
    config.check()?;
    let per_jump = config.sources.len();
    let n = config.n_skaters * config.jumps_per_skater * per_jump;
    let samples = par::map_range(mode, n, |i| {
        let source = config.sources[i % per_jump];
        let jump = (i / per_jump) % config.jumps_per_skater;
        let skater = i / (per_jump * config.jumps_per_skater);
        generate_sample(config, skater, jump, source)
    });
    Ok(Dataset::new(samples)?)
}

/// Half the smoothed vertical-velocity change of the weakest noise-free
/// jump over all skaters, expressed per frame at 240 fps.
pub fn calibrate_v_change_min(config: &SynthConfig) -> f64 {
    let tracker = TrackerConfig::for_fps(config.fps);
    let quiet = SynthConfig {
        bbox_noise_px: 0.0,
        takeoff_jitter: 0.0,
        ..config.clone()
    };
    let weakest = (0..config.n_skaters)
        .flat_map(|sk| [EdgeLabel::Error, EdgeLabel::Correct].map(|label| (sk, label)))
        .map(|(sk, label)| {
            let style = skater_style(&quiet, sk);
            let plan = JumpPlan {
                label,
                ..plan_jump(&quiet, sk, 0)
            };
            let scene = jump_scene(&style, &plan, &quiet);
            let jumper = scene.jumper().expect("scene has a jumper");
            let ys: Vec<f64> = jumper
                .frames
                .iter()
                .map(|f| quiet.projection.bbox(f).center().1)
                .collect();
            velocity_change(&ys, tracker.smoothing_window)
        })
        .fold(f64::INFINITY, f64::min);
    0.5 * weakest * config.fps / 240.0
}

/// Closed-form parameters behind a configuration.
pub fn describe(config: &SynthConfig) -> serde_json::Value {
    let h = config.flight_height;
    let g = gravity(h);
    let styles: Vec<_> = (0..config.n_skaters)
        .map(|sk| {
            let st = skater_style(config, sk);
            serde_json::json!({
                "skater_id": skater_id(sk),
                "style": st,
                "foot_length": st.foot_length(),
                "n_error": config.n_errors(sk),
                "n_correct": config.jumps_per_skater - config.n_errors(sk),
                "lateral_offset_error": st.foot_length() * config.lean_error_deg.to_radians().sin(),
                "lateral_offset_correct": st.foot_length() * config.lean_correct_deg.to_radians().sin(),
            })
        })
        .collect();
    serde_json::json!({
        "config": config,
        "gravity": g,
        "launch_speed": launch_speed(h),
        "flight_time": FLIGHT_TIME,
        "apex_after_takeoff_s": (2.0 * h / g).sqrt(),
        "apex_after_takeoff_frames": 0.5 * FLIGHT_TIME * config.fps,
        "gravity_px_per_frame2": g * config.projection.scale / (config.fps * config.fps),
        "launch_speed_px_per_frame": launch_speed(h) * config.projection.scale / config.fps,
        "nominal_foot_length": FOOT_LENGTH,
        "camera_frames": config.camera_frames(),
        "nominal_takeoff_frame": (TAKEOFF_SECONDS * config.fps).round(),
        "imu_fps": IMU_FPS,
        "lean_ramp_s": LEAN_RAMP,
        "v_change_min_240": DEFAULT_V_CHANGE_MIN_240,
        "skaters": styles,
    })
}

/// Writes the dataset in ingest formats under `dir` and returns the
/// manifest path.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<std::path::PathBuf, crate::Error> {
    crate::pipeline::write_dataset(dataset, dir)
}

#[cfg(test)]
mod tests;
