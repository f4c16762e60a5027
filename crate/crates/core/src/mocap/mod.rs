//! Motion-capture ingestion: loading, low-pass filtering, gait event
//! detection from vertical ground reaction force, and cycle segmentation.

mod events;
mod filter;
mod io;
mod segment;

pub use events::{detect_gait_events, EventDetection, EventConfig, SideEvents};
pub use filter::{lowpass_filter, Biquad, FilterDesign};
pub use io::{
    load_force_plate, load_trajectory, parse_force_plate, parse_trajectory, write_force_plate,
    write_trajectory, Units, MAX_NAN_GAP,
};
pub use segment::segment_cycles;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joints::{Axis, Joint, CANONICAL_ORDER, N_COLS, N_JOINTS};

/// Time-indexed positions of the 15 canonical joints, `t x 45`, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    samples: DMatrix<f64>,
    rate_hz: f64,
}

impl JointTrajectory {
    pub fn new(samples: DMatrix<f64>, rate_hz: f64) -> Result<Self> {
        if samples.ncols() != N_COLS {
            return Err(Error::ColumnCount {
                expected: N_COLS,
                found: samples.ncols(),
                line: 0,
            });
        }
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidTrajectory(format!("rate_hz must be positive, got {rate_hz}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrajectory("non-finite sample".into()));
        }
        Ok(JointTrajectory { samples, rate_hz })
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> DMatrix<f64> {
        self.samples
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn joint_order(&self) -> &'static [Joint; N_JOINTS] {
        &CANONICAL_ORDER
    }

    pub fn coord(&self, frame: usize, joint: Joint, axis: Axis) -> f64 {
        self.samples[(frame, joint.column(axis))]
    }

    pub fn column(&self, joint: Joint, axis: Axis) -> Vec<f64> {
        self.samples.column(joint.column(axis)).iter().copied().collect()
    }

    /// Rows `start..end` as a new trajectory.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        Ok(JointTrajectory {
            samples: self.samples.rows(start, end - start).into_owned(),
            rate_hz: self.rate_hz,
        })
    }
}

/// Which belt of the split-belt treadmill a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Robotic,
    Contralateral,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Robotic => Side::Contralateral,
            Side::Contralateral => Side::Robotic,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Robotic => "robotic",
            Side::Contralateral => "contralateral",
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "robotic" => Ok(Side::Robotic),
            "contralateral" => Ok(Side::Contralateral),
            other => Err(Error::InvalidArgument(format!("unknown side {other:?}"))),
        }
    }
}

/// Vertical ground reaction force from one belt, zero offset already removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcePlateRecord {
    pub vertical_grf: Vec<f64>,
    pub rate_hz: f64,
    pub side: Side,
}

impl ForcePlateRecord {
    pub fn new(vertical_grf: Vec<f64>, rate_hz: f64, side: Side) -> Result<Self> {
        if !(rate_hz > 0.0 && rate_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!("GRF rate must be positive, got {rate_hz}")));
        }
        if vertical_grf.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite GRF sample".into()));
        }
        Ok(ForcePlateRecord {
            vertical_grf,
            rate_hz,
            side,
        })
    }

    /// Subtract `offset` and clip small negative residue to zero.
    pub fn remove_offset(mut self, offset: f64) -> Self {
        for v in &mut self.vertical_grf {
            *v = (*v - offset).max(0.0);
        }
        self
    }
}

/// Heel strikes and toe-offs for both sides, in kinematic sample indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaitEvents {
    pub robotic: SideEvents,
    pub contralateral: SideEvents,
}

impl GaitEvents {
    pub fn new(robotic: SideEvents, contralateral: SideEvents) -> Self {
        GaitEvents {
            robotic,
            contralateral,
        }
    }

    pub fn side(&self, side: Side) -> &SideEvents {
        match side {
            Side::Robotic => &self.robotic,
            Side::Contralateral => &self.contralateral,
        }
    }

    /// Every event moved by `offset` samples (negative shifts saturate at zero).
    pub fn shifted(&self, offset: i64) -> Self {
        GaitEvents {
            robotic: self.robotic.shifted(offset),
            contralateral: self.contralateral.shifted(offset),
        }
    }
}

/// `n_cycles` consecutive heel-strike-to-heel-strike cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitCycleSet {
    pub trajectory: JointTrajectory,
    /// Half-open `(start, end)` per cycle, relative to `trajectory`.
    pub cycle_bounds: Vec<(usize, usize)>,
    /// Sample index of the first retained row in the source trajectory.
    pub source_offset: usize,
    pub side: Side,
}

impl GaitCycleSet {
    pub fn n_cycles(&self) -> usize {
        self.cycle_bounds.len()
    }

    pub fn mean_cycle_samples(&self) -> f64 {
        let (first, last) = (self.cycle_bounds[0].0, self.cycle_bounds[self.n_cycles() - 1].1);
        (last - first) as f64 / self.n_cycles() as f64
    }
}
