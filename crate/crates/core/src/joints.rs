//! Canonical 15-joint layout shared by every trajectory in the toolkit.
//!
//! Columns of a trajectory matrix are `3 * joint + axis`, with axes
//! X = medio-lateral, Y = anterior-posterior, Z = vertical.

use serde::{Deserialize, Serialize};

pub const N_JOINTS: usize = 15;
pub const N_COLS: usize = 3 * N_JOINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    LeftAnkle,
    RightAnkle,
    LeftKnee,
    RightKnee,
    LeftHip,
    RightHip,
    LeftWrist,
    RightWrist,
    LeftElbow,
    RightElbow,
    LeftShoulder,
    RightShoulder,
    Pelvis,
    Sternum,
    Head,
}

pub const CANONICAL_ORDER: [Joint; N_JOINTS] = [
    Joint::LeftAnkle,
    Joint::RightAnkle,
    Joint::LeftKnee,
    Joint::RightKnee,
    Joint::LeftHip,
    Joint::RightHip,
    Joint::LeftWrist,
    Joint::RightWrist,
    Joint::LeftElbow,
    Joint::RightElbow,
    Joint::LeftShoulder,
    Joint::RightShoulder,
    Joint::Pelvis,
    Joint::Sternum,
    Joint::Head,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Medio-lateral.
    X = 0,
    /// Anterior-posterior.
    Y = 1,
    /// Vertical.
    Z = 2,
}

impl Joint {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn column(self, axis: Axis) -> usize {
        3 * self.index() + axis as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::LeftAnkle => "left_ankle",
            Joint::RightAnkle => "right_ankle",
            Joint::LeftKnee => "left_knee",
            Joint::RightKnee => "right_knee",
            Joint::LeftHip => "left_hip",
            Joint::RightHip => "right_hip",
            Joint::LeftWrist => "left_wrist",
            Joint::RightWrist => "right_wrist",
            Joint::LeftElbow => "left_elbow",
            Joint::RightElbow => "right_elbow",
            Joint::LeftShoulder => "left_shoulder",
            Joint::RightShoulder => "right_shoulder",
            Joint::Pelvis => "pelvis",
            Joint::Sternum => "sternum",
            Joint::Head => "head",
        }
    }

    /// Mirror partner across the sagittal plane; midline joints map to themselves.
    pub fn mirrored(self) -> Joint {
        use Joint::*;
        match self {
            LeftAnkle => RightAnkle,
            RightAnkle => LeftAnkle,
            LeftKnee => RightKnee,
            RightKnee => LeftKnee,
            LeftHip => RightHip,
            RightHip => LeftHip,
            LeftWrist => RightWrist,
            RightWrist => LeftWrist,
            LeftElbow => RightElbow,
            RightElbow => LeftElbow,
            LeftShoulder => RightShoulder,
            RightShoulder => LeftShoulder,
            other => other,
        }
    }
}

/// Which anatomical side carries the robotic limb.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limb {
    Left,
    #[default]
    Right,
}

impl Limb {
    pub fn ankle(self) -> Joint {
        match self {
            Limb::Left => Joint::LeftAnkle,
            Limb::Right => Joint::RightAnkle,
        }
    }

    pub fn other(self) -> Limb {
        match self {
            Limb::Left => Limb::Right,
            Limb::Right => Limb::Left,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_matches_discriminants() {
        for (i, j) in CANONICAL_ORDER.iter().enumerate() {
            assert_eq!(j.index(), i);
        }
        assert_eq!(Joint::Head.column(Axis::Z), 44);
    }

    #[test]
    fn mirroring_is_an_involution() {
        for j in CANONICAL_ORDER {
            assert_eq!(j.mirrored().mirrored(), j);
        }
    }
}
