//! The multi-day training and evaluation protocol.
//!
//! State is event-sourced: every mutation appends an [`Event`] to a
//! per-participant JSON-lines log and the in-memory state is a fold over
//! that log, so replaying the log reproduces it exactly.

mod events;
mod http;
pub mod report;
mod service;

pub use events::{Event, EventLog, EventRecord};
pub use http::{router, serve, AppState, SelectionAck, SessionStatus};
pub use report::{MixedModelSection, ReportBundle, ScomoRow, SessionRow};
pub use service::{draw_slider, replay, DisplayPayload, ProtocolState, SessionService, SlotView, SpeedDecision, Stimulus};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::GaitParameterSet;
use crate::similarity::DeviationMode;
use crate::stats::SelectionSummary;
use crate::synthesis::ViewingAngle;

pub const DAYS: u8 = 4;
pub const SESSIONS_PER_DAY: u8 = 3;
pub const TRIALS_PER_SESSION: usize = 6;
pub const TRIALS_PER_BLOCK: usize = 3;
pub const REPEATS_PER_VIEW: usize = 6;
pub const SLOTS_PER_EVALUATION: usize = REPEATS_PER_VIEW * 3;
pub const SPEED_STEP_M_S: f64 = 0.05;
const STEPS_PER_M_S: f64 = 20.0;
/// Day-1 starting speed, in 0.05 m/s steps (0.30 m/s).
pub const START_SPEED_STEPS: u32 = 6;
/// Day-1 automatic schedule stops here (0.50 m/s).
pub const DAY1_TARGET_STEPS: u32 = 10;
pub const CONFIDENCE_SCALE: (u8, u8) = (1, 10);
pub const SLIDER_MIN_RANGE: (f64, f64) = (-5.0, -4.5);
pub const SLIDER_MAX_RANGE: (f64, f64) = (4.5, 5.0);

/// Treadmill speed as an integer count of 0.05 m/s steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Speed(u32);

impl Speed {
    pub fn from_steps(steps: u32) -> Self {
        Speed(steps)
    }

    pub fn steps(self) -> u32 {
        self.0
    }

    pub fn m_s(self) -> f64 {
        self.0 as f64 / STEPS_PER_M_S
    }

    pub fn up(self) -> Self {
        Speed(self.0 + 1)
    }

    pub fn down(self) -> Self {
        Speed(self.0.saturating_sub(1))
    }
}

impl TryFrom<f64> for Speed {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        let steps = (v * STEPS_PER_M_S).round();
        if !(steps >= 0.0) || (steps / STEPS_PER_M_S - v).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("speed {v} is not a non-negative multiple of 0.05 m/s")));
        }
        Ok(Speed(steps as u32))
    }
}

impl From<Speed> for f64 {
    fn from(s: Speed) -> f64 {
        s.m_s()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SessionKey {
    pub participant_id: String,
    pub day: u8,
    pub session_index: u8,
}

impl SessionKey {
    pub fn new(participant_id: impl Into<String>, day: u8, session_index: u8) -> Result<Self> {
        let participant_id = participant_id.into();
        if participant_id.is_empty() || !participant_id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::InvalidArgument(format!(
                "participant id {participant_id:?} must be non-empty ASCII alphanumerics or '_'"
            )));
        }
        if !(1..=DAYS).contains(&day) {
            return Err(Error::InvalidArgument(format!("day {day} outside 1..={DAYS}")));
        }
        if !(1..=SESSIONS_PER_DAY).contains(&session_index) {
            return Err(Error::InvalidArgument(format!("session {session_index} outside 1..={SESSIONS_PER_DAY}")));
        }
        Ok(SessionKey {
            participant_id,
            day,
            session_index,
        })
    }

    /// 1-based position in the whole protocol (1..=12).
    pub fn ordinal(&self) -> u32 {
        (self.day as u32 - 1) * SESSIONS_PER_DAY as u32 + self.session_index as u32
    }

    pub fn id(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-d{}-s{}", self.participant_id, self.day, self.session_index)
    }
}

impl FromStr for SessionKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed session id {s:?}"));
        let mut parts = s.rsplitn(3, '-');
        let sess = parts.next().and_then(|p| p.strip_prefix('s')).ok_or_else(bad)?;
        let day = parts.next().and_then(|p| p.strip_prefix('d')).ok_or_else(bad)?;
        let pid = parts.next().ok_or_else(bad)?;
        SessionKey::new(pid, day.parse().map_err(|_| bad())?, sess.parse().map_err(|_| bad())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Evaluation,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub speed: Speed,
    pub handrail_free: bool,
    pub duration_s: f64,
}

/// Operator input for one walking trial; speed comes from the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewTrial {
    pub index: usize,
    pub handrail_free: bool,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
}

fn default_duration() -> f64 {
    120.0
}

/// Randomized slider geometry for one selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliderConfig {
    pub min_alpha: f64,
    pub max_alpha: f64,
    pub initial_alpha: f64,
    pub seed: u64,
}

impl SliderConfig {
    /// Coefficient at normalized handle position `pos` in [0, 1].
    pub fn alpha_at(&self, pos: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&pos) {
            return Err(Error::InvalidArgument(format!("slider position {pos} outside [0, 1]")));
        }
        Ok(self.min_alpha + pos * (self.max_alpha - self.min_alpha))
    }

    pub fn position_of(&self, alpha: f64) -> f64 {
        (alpha - self.min_alpha) / (self.max_alpha - self.min_alpha)
    }

    pub fn contains(&self, alpha: f64) -> bool {
        (self.min_alpha..=self.max_alpha).contains(&alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub slot_id: String,
    pub view: ViewingAngle,
    pub repeat_index: usize,
    pub slider: SliderConfig,
}

/// One recorded selection; `alpha1` is the selected coefficient of motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScomoSelection {
    pub slot_id: String,
    pub alpha1: f64,
    pub view: ViewingAngle,
    pub repeat_index: usize,
    pub slider: SliderConfig,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    #[serde(default)]
    pub participant_id: String,
    pub day: u8,
    pub rating: u8,
    #[serde(default)]
    pub free_text_cues: Vec<String>,
}

/// Gait measurements attached to a session by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitAnalysis {
    pub deviation_mode: DeviationMode,
    pub deviation: f64,
    /// Number of principal angles summed.
    pub m: usize,
    pub params: Option<GaitParameterSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub seed: u64,
    pub slots: Vec<Slot>,
    pub selections: Vec<ScomoSelection>,
}

impl Evaluation {
    pub fn next_open_slot(&self) -> Option<&Slot> {
        self.slots.get(self.selections.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSession {
    pub key: SessionKey,
    pub phase: Phase,
    pub treadmill_speed: Speed,
    pub trials: Vec<Trial>,
    pub speed_decisions: Vec<SpeedDecision>,
    pub evaluation: Option<Evaluation>,
    pub summaries: Vec<SelectionSummary>,
    pub analysis: Option<GaitAnalysis>,
}

impl ExperimentSession {
    pub fn id(&self) -> String {
        self.key.id()
    }

    /// Number of completed three-trial blocks.
    pub fn blocks_completed(&self) -> usize {
        self.trials.len() / TRIALS_PER_BLOCK
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_ids_round_trip() {
        let k = SessionKey::new("P07", 3, 2).unwrap();
        assert_eq!(k.id(), "P07-d3-s2");
        assert_eq!(k.ordinal(), 8);
        assert_eq!(k.id().parse::<SessionKey>().unwrap(), k);
        assert!("P07-d5-s1".parse::<SessionKey>().is_err());
        assert!(SessionKey::new("a-b", 1, 1).is_err());
    }

    #[test]
    fn speed_is_quantized() {
        assert_eq!(Speed::try_from(0.35).unwrap().steps(), 7);
        assert!(Speed::try_from(0.33).is_err());
        assert!(Speed::try_from(-0.05).is_err());
        assert_eq!(Speed::from_steps(0).down().steps(), 0);
    }

    #[test]
    fn slider_mapping() {
        let s = SliderConfig {
            min_alpha: -4.8,
            max_alpha: 4.6,
            initial_alpha: 0.0,
            seed: 1,
        };
        assert_eq!(s.alpha_at(0.0).unwrap(), -4.8);
        assert!((s.alpha_at(1.0).unwrap() - 4.6).abs() < 1e-12);
        assert!((s.position_of(s.alpha_at(0.37).unwrap()) - 0.37).abs() < 1e-12);
        assert!(s.alpha_at(1.2).is_err());
    }
}
