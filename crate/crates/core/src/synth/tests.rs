use super::*;
use crate::ingest::{parse_pose_sequence, write_pose_sequence};
use crate::preprocess::normalize_pose;
use crate::tracker::{detect_apex, run_tracker, select_skater};

fn quiet() -> SynthConfig {
    SynthConfig {
        noise_sigma: 0.0,
        bbox_noise_px: 0.0,
        ..SynthConfig::default()
    }
}

fn plan(label: EdgeLabel) -> JumpPlan {
    JumpPlan {
        skater: 0,
        jump: 0,
        label,
        takeoff_frame: 300,
    }
}

#[test]
fn zero_lean_keeps_nominal_foot_path() {
    let cfg = SynthConfig {
        lean_error_deg: 0.0,
        lean_correct_deg: 0.0,
        ..quiet()
    };
    let style = skater_style(&cfg, 2);
    let mut rng = stream_rng(0, 0, 0, 0);
    let s = generate_jump(&style, &plan(EdgeLabel::Error), Source::Camera, &cfg, &mut rng);
    let norm = normalize_pose(&s.pose);
    for t in 0..norm.len() {
        let p = norm.joint(t, Joint::LFoot);
        assert!(p[0].abs() < 1e-12);
        assert!((p[1] - style.hip_half_width).abs() < 1e-12);
    }
}

#[test]
fn lateral_deviation_is_foot_length_sine() {
    let cfg = SynthConfig {
        lean_error_deg: 15.0,
        ..quiet()
    };
    let style = skater_style(&cfg, 1);
    let mut rng = stream_rng(0, 0, 0, 0);
    let s = generate_jump(&style, &plan(EdgeLabel::Error), Source::Camera, &cfg, &mut rng);
    let norm = normalize_pose(&s.pose);
    let max_dev = (0..norm.len())
        .map(|t| norm.joint(t, Joint::LFoot)[1] - style.hip_half_width)
        .fold(f64::MIN, f64::max);
    let expected = style.foot_length() * 15f64.to_radians().sin();
    assert!((max_dev - expected).abs() < 1e-12, "{max_dev} vs {expected}");
}

#[test]
fn same_indices_same_sample() {
    let cfg = SynthConfig::default();
    for source in [Source::Camera, Source::Imu] {
        let a = generate_sample(&cfg, 3, 17, source);
        let b = generate_sample(&cfg, 3, 17, source);
        assert_eq!(a, b);
    }
    assert_ne!(
        generate_sample(&cfg, 3, 17, Source::Camera).pose,
        generate_sample(&cfg, 3, 18, Source::Camera).pose
    );
}

#[test]
fn pose_file_round_trip_is_exact() {
    let s = generate_sample(&SynthConfig::default(), 0, 0, Source::Camera);
    assert_eq!(s.pose.len(), 480);
    let mut buf = Vec::new();
    write_pose_sequence(&mut buf, &s.pose).unwrap();
    let back = parse_pose_sequence(buf.as_slice()).unwrap();
    assert_eq!(back, s.pose);
}

#[test]
fn class_counts_follow_error_fraction() {
    let cfg = SynthConfig {
        skater_error_fractions: vec![1.0, 0.5, 0.5, 0.5, 0.5, 0.0],
        ..SynthConfig::default()
    };
    let ds = generate_dataset(&cfg, Parallelism::Parallel).unwrap();
    assert_eq!(ds.class_counts(), (40 + 80, 80 + 40));
    assert_eq!(ds.skater_index().len(), 6);
    let comp = ds.composition();
    assert_eq!(comp["A"], (40, 0));
    assert_eq!(comp["F"], (0, 40));

    let even = generate_dataset(&SynthConfig::default(), Parallelism::Sequential).unwrap();
    assert_eq!(even.class_counts(), (120, 120));
}

#[test]
fn label_matches_lean_sign() {
    let cfg = SynthConfig::default();
    for jump in [0, 19, 20, 39] {
        let s = generate_sample(&cfg, 0, jump, Source::Imu);
        let roll_mid = s.angles.unwrap().frames[30][0];
        assert_eq!(s.label.is_error(), cfg.lean_deg(s.label) > 0.0);
        assert_eq!(s.label.is_error(), roll_mid > 0.0);
    }
}

#[test]
fn imu_samples_are_cropped_at_take_off() {
    let s = generate_sample(&quiet(), 0, 0, Source::Imu);
    assert_eq!(s.pose.len(), 51);
    assert_eq!(s.pose.fps, 60.0);
    let angles = s.angles.unwrap();
    assert_eq!(angles.frames.len(), 51);
    // full lean is reached exactly at take-off
    assert_eq!(angles.frames[25][0], 10.0);
    assert!(angles.frames[24][0] < 10.0);
    let hip_z: Vec<f64> = (0..51).map(|t| s.pose.joint(t, Joint::Hip)[2]).collect();
    assert_eq!(hip_z[24], hip_z[25]);
    assert!(hip_z[26] > hip_z[25]);
}

#[test]
fn config_validation() {
    assert!(SynthConfig::default().check().is_ok());
    let control = SynthConfig {
        lean_error_deg: 0.0,
        lean_correct_deg: 0.0,
        ..SynthConfig::default()
    };
    assert!(control.check().is_ok());
    let flipped = SynthConfig {
        lean_error_deg: -5.0,
        lean_correct_deg: 5.0,
        ..SynthConfig::default()
    };
    assert!(flipped.check().is_err());
    assert!(SynthConfig { fps: 100.0, ..SynthConfig::default() }.check().is_err());
    assert!(SynthConfig { noise_sigma: -1.0, ..SynthConfig::default() }.check().is_err());
    assert!(SynthConfig { error_fraction: 1.5, ..SynthConfig::default() }.check().is_err());
}

#[test]
fn static_actor_has_constant_box() {
    let rig = rig_offsets(&SkaterStyle::NOMINAL, 0.0);
    let scene = SynthScene {
        actors: vec![Actor {
            role: ActorRole::Jumper,
            frames: vec![rig; 20],
        }],
        projection: Projection::default(),
        noise_px: 0.0,
        seed: 1,
    };
    let d = generate_detections(&scene);
    assert_eq!(d.len(), 20);
    assert!(d.iter().all(|r| r.bbox == d[0].bbox));
}

#[test]
fn bbox_apex_is_half_flight_after_launch() {
    let cfg = quiet();
    let style = skater_style(&cfg, 0);
    let p = plan(EdgeLabel::Correct);
    let scene = jump_scene(&style, &p, &cfg);
    assert!(scene.check().is_ok());
    let d = generate_detections(&scene);
    assert_eq!(d.len(), 480 * 3);
    for f in 0..480u64 {
        assert_eq!(d.iter().filter(|r| r.frame_idx == f).count(), 3);
    }
    let ys: Vec<f64> = d.iter().step_by(3).map(|r| r.bbox.center().1).collect();
    let g = gravity(cfg.flight_height);
    let after = (2.0 * cfg.flight_height / g).sqrt() * cfg.fps;
    assert_eq!(after, 60.0);
    let window = TrackerConfig::default().smoothing_window;
    assert_eq!(detect_apex(&ys, window).unwrap().frame, 360);
    // the highest box is the apex as well
    let top = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(top, 360);
}

#[test]
fn jumper_is_selected_among_bystanders() {
    let cfg = SynthConfig::default();
    let style = skater_style(&cfg, 0);
    let scene = jump_scene(&style, &plan(EdgeLabel::Error), &cfg);
    let tracks = run_tracker(&generate_detections(&scene), &TrackerConfig::default());
    assert_eq!(tracks.len(), 3);
    // the jumper is the first actor, so its track is created first
    assert_eq!(select_skater(&tracks, &TrackerConfig::default()).unwrap(), 1);
    let jumper_change =
        velocity_change(&tracks[0].center_y_series().1, TrackerConfig::default().smoothing_window);
    assert!(jumper_change >= 2.0 * DEFAULT_V_CHANGE_MIN_240 * 0.99);
}

#[test]
fn threshold_constant_matches_calibration() {
    let c = calibrate_v_change_min(&SynthConfig::default());
    assert!((c - DEFAULT_V_CHANGE_MIN_240).abs() < 1e-3, "calibrated {c}");
}

#[test]
fn describe_reports_closed_form() {
    let d = describe(&SynthConfig::default());
    assert_eq!(d["gravity"], 9.6);
    assert_eq!(d["apex_after_takeoff_frames"], 60.0);
    assert_eq!(d["skaters"].as_array().unwrap().len(), 6);
}
