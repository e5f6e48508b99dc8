//! The 17-joint skeleton shared by every pose source.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const JOINT_COUNT: usize = 17;

/// Joints in Human3.6M order: hip root, right leg, left leg, spine and head,
/// left arm, right arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Hip,
    RHip,
    RKnee,
    RFoot,
    LHip,
    LKnee,
    LFoot,
    Spine,
    Thorax,
    Neck,
    Head,
    LShoulder,
    LElbow,
    LWrist,
    RShoulder,
    RElbow,
    RWrist,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Hip,
        Joint::RHip,
        Joint::RKnee,
        Joint::RFoot,
        Joint::LHip,
        Joint::LKnee,
        Joint::LFoot,
        Joint::Spine,
        Joint::Thorax,
        Joint::Neck,
        Joint::Head,
        Joint::LShoulder,
        Joint::LElbow,
        Joint::LWrist,
        Joint::RShoulder,
        Joint::RElbow,
        Joint::RWrist,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Hip => "hip",
            Joint::RHip => "r_hip",
            Joint::RKnee => "r_knee",
            Joint::RFoot => "r_foot",
            Joint::LHip => "l_hip",
            Joint::LKnee => "l_knee",
            Joint::LFoot => "l_foot",
            Joint::Spine => "spine",
            Joint::Thorax => "thorax",
            Joint::Neck => "neck",
            Joint::Head => "head",
            Joint::LShoulder => "l_shoulder",
            Joint::LElbow => "l_elbow",
            Joint::LWrist => "l_wrist",
            Joint::RShoulder => "r_shoulder",
            Joint::RElbow => "r_elbow",
            Joint::RWrist => "r_wrist",
        }
    }
}

impl fmt::Display for Joint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Joint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Joint::ALL
            .iter()
            .copied()
            .find(|j| j.name() == s)
            .ok_or_else(|| format!("unknown joint name {s:?}"))
    }
}

pub const AXES: [&str; 3] = ["x", "y", "z"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_indices_are_dense() {
        for (i, j) in Joint::ALL.iter().enumerate() {
            assert_eq!(j.index(), i);
            assert_eq!(j.name().parse::<Joint>().unwrap(), *j);
        }
        assert!("pelvis".parse::<Joint>().is_err());
    }
}
