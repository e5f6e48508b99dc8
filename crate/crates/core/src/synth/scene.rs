use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{BBox, DetectionRecord, Frame};

/// Side-on orthographic camera. Image `x` follows travel, image `y` points
/// down; depth (`+y` in the world) lifts a point by half its value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Projection {
    /// Pixels per world unit.
    pub scale: f64,
    pub image_height: f64,
    /// Padding added around the projected joint extremes, in pixels.
    pub pad: f64,
}

impl Default for Projection {
    fn default() -> Self {
        Projection {
            scale: 200.0,
            image_height: 1080.0,
            pad: 10.0,
        }
    }
}

impl Projection {
    pub fn project(&self, p: [f64; 3]) -> (f64, f64) {
        (
            self.scale * p[0],
            self.image_height - self.scale * (p[2] + 0.5 * p[1]),
        )
    }

    /// Padded box around the projected joints.
    pub fn bbox(&self, frame: &Frame) -> BBox {
        let (mut x1, mut y1) = (f64::INFINITY, f64::INFINITY);
        let (mut x2, mut y2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &p in frame {
            let (u, v) = self.project(p);
            x1 = x1.min(u);
            x2 = x2.max(u);
            y1 = y1.min(v);
            y2 = y2.max(v);
        }
        BBox::new(x1 - self.pad, y1 - self.pad, x2 + self.pad, y2 + self.pad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorRole {
    Jumper,
    Bystander,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub role: ActorRole,
    /// World-space joints per frame.
    pub frames: Vec<Frame>,
}

/// Actors sharing one camera. Detection noise shifts each box centre by
/// independent Gaussian pixel offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub actors: Vec<Actor>,
    pub projection: Projection,
    pub noise_px: f64,
    pub seed: u64,
}

impl SynthScene {
    pub fn n_frames(&self) -> usize {
        self.actors.iter().map(|a| a.frames.len()).max().unwrap_or(0)
    }

    pub fn jumper(&self) -> Option<&Actor> {
        self.actors.iter().find(|a| a.role == ActorRole::Jumper)
    }

    pub fn check(&self) -> Result<(), String> {
        let jumpers = self
            .actors
            .iter()
            .filter(|a| a.role == ActorRole::Jumper)
            .count();
        if jumpers != 1 {
            return Err(format!("scene has {jumpers} jumpers, expected exactly 1"));
        }
        if !(self.noise_px >= 0.0) {
            return Err(format!("noise_px must be >= 0, got {}", self.noise_px));
        }
        Ok(())
    }
}

/// One detection per actor per frame, actors in scene order.
pub fn generate_detections(scene: &SynthScene) -> Vec<DetectionRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = Normal::new(0.0, scene.noise_px.max(0.0)).expect("finite sigma");
    let mut out = Vec::with_capacity(scene.n_frames() * scene.actors.len());
    for t in 0..scene.n_frames() {
        for actor in &scene.actors {
            let Some(frame) = actor.frames.get(t) else {
                continue;
            };
            let mut b = scene.projection.bbox(frame);
            if scene.noise_px > 0.0 {
                let (dx, dy) = (noise.sample(&mut rng), noise.sample(&mut rng));
                b = BBox::new(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy);
            }
            out.push(DetectionRecord {
                frame_idx: t as u64,
                bbox: b,
                confidence: 0.9,
            });
        }
    }
    out
}
