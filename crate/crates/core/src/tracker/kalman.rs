use nalgebra::{SMatrix, SVector};

use crate::ingest::BBox;

type Vec7 = SVector<f64, 7>;
type Mat7 = SMatrix<f64, 7, 7>;
type Mat4 = SMatrix<f64, 4, 4>;
type Mat47 = SMatrix<f64, 4, 7>;

/// Kalman state of one track: `[cx, cy, area, aspect, vcx, vcy, varea]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub track_id: u64,
    pub state: Vec7,
    pub covariance: Mat7,
    pub age: u32,
    pub hits: u32,
    pub hit_streak: u32,
    pub time_since_update: u32,
}

impl TrackState {
    pub fn bbox(&self) -> BBox {
        state_to_bbox(&self.state)
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.state[4], self.state[5])
    }
}

fn bbox_to_z(b: &BBox) -> SVector<f64, 4> {
    let (cx, cy) = b.center();
    SVector::<f64, 4>::new(cx, cy, b.width() * b.height(), b.width() / b.height())
}

fn state_to_bbox(x: &Vec7) -> BBox {
    let w = (x[2] * x[3]).max(0.0).sqrt();
    let h = if w > 0.0 { x[2] / w } else { 0.0 };
    BBox::new(x[0] - w / 2.0, x[1] - h / 2.0, x[0] + w / 2.0, x[1] + h / 2.0)
}

/// Constant-velocity filter on centre and area, constant aspect, with the
/// usual SORT noise settings.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanBoxTracker {
    pub track: TrackState,
}

impl KalmanBoxTracker {
    fn transition() -> Mat7 {
        let mut f = Mat7::identity();
        f[(0, 4)] = 1.0;
        f[(1, 5)] = 1.0;
        f[(2, 6)] = 1.0;
        f
    }

    fn observation() -> Mat47 {
        let mut h = Mat47::zeros();
        for i in 0..4 {
            h[(i, i)] = 1.0;
        }
        h
    }

    fn process_noise() -> Mat7 {
        Mat7::from_diagonal(&Vec7::from_column_slice(&[1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4]))
    }

    fn measurement_noise() -> Mat4 {
        Mat4::from_diagonal(&SVector::<f64, 4>::new(1.0, 1.0, 10.0, 10.0))
    }

    pub fn new(track_id: u64, bbox: &BBox) -> Self {
        let z = bbox_to_z(bbox);
        let mut state = Vec7::zeros();
        state.fixed_rows_mut::<4>(0).copy_from(&z);
        let covariance = Mat7::from_diagonal(&Vec7::from_column_slice(&[
            10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4,
        ]));
        KalmanBoxTracker {
            track: TrackState {
                track_id,
                state,
                covariance,
                age: 0,
                hits: 1,
                hit_streak: 1,
                time_since_update: 0,
            },
        }
    }

    /// Advances one frame and returns the predicted box.
    pub fn predict(&mut self) -> BBox {
        let t = &mut self.track;
        if t.state[6] + t.state[2] <= 0.0 {
            t.state[6] = 0.0;
        }
        let f = Self::transition();
        t.state = f * t.state;
        t.covariance = f * t.covariance * f.transpose() + Self::process_noise();
        t.age += 1;
        if t.time_since_update > 0 {
            t.hit_streak = 0;
        }
        t.time_since_update += 1;
        t.bbox()
    }

    pub fn update(&mut self, bbox: &BBox) {
        let t = &mut self.track;
        t.time_since_update = 0;
        t.hits += 1;
        t.hit_streak += 1;
        let h = Self::observation();
        let y = bbox_to_z(bbox) - h * t.state;
        let s = h * t.covariance * h.transpose() + Self::measurement_noise();
        let s_inv = s
            .try_inverse()
            .expect("innovation covariance is positive definite");
        let k = t.covariance * h.transpose() * s_inv;
        t.state += k * y;
        // Joseph form keeps the covariance symmetric positive semi-definite
        let ikh = Mat7::identity() - k * h;
        let p = ikh * t.covariance * ikh.transpose()
            + k * Self::measurement_noise() * k.transpose();
        t.covariance = (p + p.transpose()) * 0.5;
    }
}
