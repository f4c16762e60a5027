//! Blending participant and normative motion into a synthesized walker and
//! turning it into point-light frames.

mod animate;
mod projection;

pub use animate::{animate, loop_indices, FrameStream, TimedFrame, DEFAULT_FPS};
pub use projection::{
    project, project_with, write_frames_csv, write_frames_jsonl, PointLightFrame, ScreenMapping, ViewingAngle,
    SCREEN_MARGIN,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reconstruct_normative, reconstruct_participant, NormativeModel, ParticipantModel};

pub const ALPHA_LIMIT: f64 = 5.0;

/// Slider coefficient `alpha1` in [-5, 5]; the normative weight uses its
/// non-negative part.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CoefficientOfMotion(f64);

impl CoefficientOfMotion {
    pub fn new(alpha1: f64) -> Result<Self> {
        if !(-ALPHA_LIMIT..=ALPHA_LIMIT).contains(&alpha1) {
            return Err(Error::AlphaOutOfRange(alpha1));
        }
        Ok(CoefficientOfMotion(alpha1))
    }

    pub fn alpha1(self) -> f64 {
        self.0
    }

    /// `alpha1` clamped below at zero.
    pub fn alpha(self) -> f64 {
        self.0.max(0.0)
    }

    pub fn participant_weight(self) -> f64 {
        (ALPHA_LIMIT - self.0) / ALPHA_LIMIT
    }

    pub fn normative_weight(self) -> f64 {
        self.alpha() / ALPHA_LIMIT
    }
}

impl TryFrom<f64> for CoefficientOfMotion {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        CoefficientOfMotion::new(v)
    }
}

impl From<CoefficientOfMotion> for f64 {
    fn from(c: CoefficientOfMotion) -> f64 {
        c.0
    }
}

/// Mean posture `C` with the participant (`P`) and normative (`N`) motion
/// components on a common time base.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionComponents {
    pub mean_posture: DVector<f64>,
    pub participant: DMatrix<f64>,
    pub normative: DMatrix<f64>,
}

impl MotionComponents {
    /// `N` is evaluated over the participant's `t` after retiming the
    /// normative frequencies to the participant's cycle length, so both
    /// components span the same number of gait cycles.
    pub fn new(pm: &ParticipantModel, nm: &NormativeModel) -> Result<Self> {
        if nm.loadings.ncols() != pm.mean_posture.len() {
            return Err(Error::DimensionMismatch(nm.loadings.ncols(), pm.mean_posture.len()));
        }
        let t = pm.t_length();
        let retimed = nm.retimed(pm.cycle_samples);
        Ok(MotionComponents {
            mean_posture: pm.mean_posture.clone(),
            participant: reconstruct_participant(pm),
            normative: reconstruct_normative(&retimed, t),
        })
    }

    pub fn t_length(&self) -> usize {
        self.participant.nrows()
    }

    /// `S = C + (5 - alpha1)/5 * P + alpha/5 * N`.
    pub fn blend(&self, coef: CoefficientOfMotion) -> SynthesizedGait {
        let wp = coef.participant_weight();
        let wn = coef.normative_weight();
        let mut s = &self.participant * wp;
        if wn != 0.0 {
            s += &self.normative * wn;
        }
        for mut row in s.row_iter_mut() {
            row += self.mean_posture.transpose();
        }
        SynthesizedGait { samples: s, coef }
    }
}

/// Blended `t x 45` joint positions for one slider value.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedGait {
    pub samples: DMatrix<f64>,
    pub coef: CoefficientOfMotion,
}

impl SynthesizedGait {
    pub fn t_length(&self) -> usize {
        self.samples.nrows()
    }
}

pub fn blend(pm: &ParticipantModel, nm: &NormativeModel, coef: CoefficientOfMotion) -> Result<SynthesizedGait> {
    Ok(MotionComponents::new(pm, nm)?.blend(coef))
}
