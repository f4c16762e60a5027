use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SynthesizedGait;
use crate::error::{Error, Result};
use crate::joints::{CANONICAL_ORDER, N_JOINTS};

/// Blank border kept on each side of the normalized screen.
pub const SCREEN_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewingAngle {
    Frontal,
    Robotic45,
    Contralateral45,
}

impl ViewingAngle {
    pub const ALL: [ViewingAngle; 3] = [ViewingAngle::Frontal, ViewingAngle::Robotic45, ViewingAngle::Contralateral45];

    pub fn yaw_deg(self) -> f64 {
        match self {
            ViewingAngle::Frontal => 0.0,
            ViewingAngle::Robotic45 => 45.0,
            ViewingAngle::Contralateral45 => -45.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewingAngle::Frontal => "frontal",
            ViewingAngle::Robotic45 => "robotic_45",
            ViewingAngle::Contralateral45 => "contralateral_45",
        }
    }
}

impl std::str::FromStr for ViewingAngle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewingAngle::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown view {s:?}")))
    }
}

/// Screen-plane coordinates of a 3-D point after yawing the scene about the
/// vertical axis: (horizontal, vertical). The rotated anterior-posterior axis
/// is the depth axis and is dropped.
pub fn rotate_and_drop(x: f64, y: f64, z: f64, yaw_deg: f64) -> (f64, f64) {
    let (s, c) = yaw_deg.to_radians().sin_cos();
    (x * c - y * s, z)
}

/// One orthographic point-light frame, coordinates in [0,1]^2 with `v` up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLightFrame {
    pub frame_index: usize,
    pub points: Vec<[f64; 2]>,
}

/// Affine map from screen-plane meters to the unit square, fixed per walker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenMapping {
    pub center: [f64; 2],
    pub scale: f64,
    pub yaw_deg: f64,
}

impl ScreenMapping {
    /// Fits the bounding box of every joint of every frame of every gait, so
    /// one mapping can serve a family of blends without rescaling.
    pub fn fit<'a>(gaits: impl IntoIterator<Item = &'a SynthesizedGait>, view: ViewingAngle) -> Result<Self> {
        let yaw = view.yaw_deg();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for g in gaits {
            let s = &g.samples;
            for r in 0..s.nrows() {
                for j in 0..N_JOINTS {
                    let (h, v) = rotate_and_drop(s[(r, 3 * j)], s[(r, 3 * j + 1)], s[(r, 3 * j + 2)], yaw);
                    lo = [lo[0].min(h), lo[1].min(v)];
                    hi = [hi[0].max(h), hi[1].max(v)];
                }
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if !(extent > 1e-12) || !extent.is_finite() {
            return Err(Error::DegenerateBoundingBox);
        }
        Ok(ScreenMapping {
            center: [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
            scale: (1.0 - 2.0 * SCREEN_MARGIN) / extent,
            yaw_deg: yaw,
        })
    }

    pub fn map(&self, x: f64, y: f64, z: f64) -> [f64; 2] {
        let (h, v) = rotate_and_drop(x, y, z, self.yaw_deg);
        [
            0.5 + (h - self.center[0]) * self.scale,
            0.5 + (v - self.center[1]) * self.scale,
        ]
    }
}

/// Projects with a mapping fitted to this gait alone.
pub fn project(gait: &SynthesizedGait, view: ViewingAngle) -> Result<Vec<PointLightFrame>> {
    let mapping = ScreenMapping::fit([gait], view)?;
    Ok(project_with(gait, &mapping))
}

pub fn project_with(gait: &SynthesizedGait, mapping: &ScreenMapping) -> Vec<PointLightFrame> {
    let s = &gait.samples;
    (0..s.nrows())
        .map(|r| PointLightFrame {
            frame_index: r,
            points: (0..N_JOINTS)
                .map(|j| mapping.map(s[(r, 3 * j)], s[(r, 3 * j + 1)], s[(r, 3 * j + 2)]))
                .collect(),
        })
        .collect()
}

pub fn write_frames_jsonl(path: impl AsRef<Path>, frames: &[PointLightFrame]) -> Result<()> {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serde_json::to_string(f)?);
        out.push('\n');
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Animation preview as `frame,joint,u,v` rows.
pub fn write_frames_csv(path: impl AsRef<Path>, frames: &[PointLightFrame]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "joint", "u", "v"])?;
    for f in frames {
        for (joint, p) in CANONICAL_ORDER.iter().zip(&f.points) {
            w.write_record([
                f.frame_index.to_string(),
                joint.name().to_string(),
                format!("{:.6}", p[0]),
                format!("{:.6}", p[1]),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
