use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::{Event, EventLog, EventRecord};
use super::report::{build_report, ReportBundle};
use super::{
    ConfidenceReport, Evaluation, ExperimentSession, GaitAnalysis, NewTrial, Phase, ScomoSelection, SessionKey,
    SliderConfig, Slot, Speed, CONFIDENCE_SCALE, DAY1_TARGET_STEPS, REPEATS_PER_VIEW, SLIDER_MAX_RANGE,
    SLIDER_MIN_RANGE, SLOTS_PER_EVALUATION, START_SPEED_STEPS, TRIALS_PER_BLOCK, TRIALS_PER_SESSION,
};
use crate::error::{Error, Result};
use crate::model::{read_normative, read_participant, write_normative, write_participant, NormativeModel, ParticipantModel};
use crate::stats::summarize_selections;
use crate::synthesis::{
    project_with, CoefficientOfMotion, MotionComponents, PointLightFrame, ScreenMapping, ViewingAngle, ALPHA_LIMIT,
};

/// Outcome of an operator speed request at the end of a three-trial block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedDecision {
    pub direction: i8,
    pub granted: bool,
    pub before: Speed,
    pub after: Speed,
    /// 1-based block the request follows.
    pub block: usize,
    pub handrail_free_trials: usize,
}

/// What the display may learn about a slot: never the coefficient itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotView {
    pub slot_id: String,
    pub view: ViewingAngle,
    pub repeat_index: usize,
    /// Initial handle position in [0, 1].
    pub initial_pos: f64,
    pub open: bool,
}

/// Frames for one slider position, as sent to the display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayPayload {
    pub slot_id: String,
    pub view: ViewingAngle,
    pub pos: f64,
    pub source_rate_hz: f64,
    pub frames: Vec<PointLightFrame>,
}

/// Blend components and fixed screen mappings for one evaluation.
#[derive(Debug, Clone)]
pub struct Stimulus {
    pub components: MotionComponents,
    pub mappings: BTreeMap<ViewingAngle, ScreenMapping>,
    pub source_rate_hz: f64,
}

impl Stimulus {
    /// Mappings cover the walker at both slider extremes and at zero, so no
    /// slider value rescales or clips the display.
    pub fn new(pm: &ParticipantModel, nm: &NormativeModel) -> Result<Self> {
        let components = MotionComponents::new(pm, nm)?;
        let anchors: Vec<_> = [-ALPHA_LIMIT, 0.0, ALPHA_LIMIT]
            .into_iter()
            .map(|a| components.blend(CoefficientOfMotion::new(a).expect("anchor in range")))
            .collect();
        let mut mappings = BTreeMap::new();
        for view in ViewingAngle::ALL {
            mappings.insert(view, ScreenMapping::fit(&anchors, view)?);
        }
        Ok(Stimulus {
            components,
            mappings,
            source_rate_hz: pm.rate_hz,
        })
    }

    pub fn frames(&self, alpha1: f64, view: ViewingAngle) -> Result<Vec<PointLightFrame>> {
        let gait = self.components.blend(CoefficientOfMotion::new(alpha1)?);
        Ok(project_with(&gait, &self.mappings[&view]))
    }
}

/// Folded protocol state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProtocolState {
    pub sessions: BTreeMap<SessionKey, ExperimentSession>,
    pub confidence: Vec<ConfidenceReport>,
}

impl ProtocolState {
    /// Applies an already validated event.
    pub fn apply(&mut self, event: &Event) {
        match event {
            Event::SessionCreated { key, speed } => {
                self.sessions.insert(
                    key.clone(),
                    ExperimentSession {
                        key: key.clone(),
                        phase: Phase::Training,
                        treadmill_speed: *speed,
                        trials: vec![],
                        speed_decisions: vec![],
                        evaluation: None,
                        summaries: vec![],
                        analysis: None,
                    },
                );
            }
            Event::TrialRecorded { key, trial } => {
                let s = self.sessions.get_mut(key).expect("validated");
                s.trials.push(super::Trial {
                    index: trial.index,
                    speed: s.treadmill_speed,
                    handrail_free: trial.handrail_free,
                    duration_s: trial.duration_s,
                });
                if key.day == 1 && s.trials.len() % TRIALS_PER_BLOCK == 0 && s.treadmill_speed.steps() < DAY1_TARGET_STEPS {
                    s.treadmill_speed = s.treadmill_speed.up();
                }
                if s.trials.len() == TRIALS_PER_SESSION {
                    s.phase = Phase::Evaluation;
                }
            }
            Event::SpeedRequested { key, decision } => {
                let s = self.sessions.get_mut(key).expect("validated");
                s.treadmill_speed = decision.after;
                s.speed_decisions.push(decision.clone());
            }
            Event::EvaluationBegun { key, seed, slots } => {
                let s = self.sessions.get_mut(key).expect("validated");
                s.evaluation = Some(Evaluation {
                    seed: *seed,
                    slots: slots.clone(),
                    selections: vec![],
                });
            }
            Event::SelectionRecorded { key, selection } => {
                let s = self.sessions.get_mut(key).expect("validated");
                let eval = s.evaluation.as_mut().expect("validated");
                eval.selections.push(selection.clone());
                if eval.selections.len() == SLOTS_PER_EVALUATION {
                    s.phase = Phase::Complete;
                    s.summaries = ViewingAngle::ALL
                        .iter()
                        .map(|&view| {
                            let values: Vec<f64> =
                                eval.selections.iter().filter(|x| x.view == view).map(|x| x.alpha1).collect();
                            summarize_selections(&values, view).expect("six repeats per view")
                        })
                        .collect();
                }
            }
            Event::ConfidenceRecorded { report } => self.confidence.push(report.clone()),
            Event::AnalysisRecorded { key, analysis } => {
                self.sessions.get_mut(key).expect("validated").analysis = Some(analysis.clone());
            }
        }
    }

    pub fn participant_sessions<'a>(&'a self, participant: &'a str) -> impl Iterator<Item = &'a ExperimentSession> + 'a {
        self.sessions.values().filter(move |s| s.key.participant_id == participant)
    }
}

/// The protocol service: validates commands, appends events, folds state.
#[derive(Debug)]
pub struct SessionService {
    log: EventLog,
    state: ProtocolState,
    stimuli: HashMap<SessionKey, Arc<Stimulus>>,
}

fn derive_seed(key: &SessionKey) -> u64 {
    // FNV-1a over the session id
    key.id().bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

fn slot_seed(seed: u64, ordinal: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(ordinal.wrapping_add(1).wrapping_mul(0x9E3779B97F4A7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Randomized slider bounds and handle position for one slot.
pub fn draw_slider(seed: u64) -> SliderConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_alpha = rng.random_range(SLIDER_MIN_RANGE.0..=SLIDER_MIN_RANGE.1);
    let max_alpha = rng.random_range(SLIDER_MAX_RANGE.0..=SLIDER_MAX_RANGE.1);
    let initial_alpha = rng.random_range(min_alpha..=max_alpha);
    SliderConfig {
        min_alpha,
        max_alpha,
        initial_alpha,
        seed,
    }
}

impl SessionService {
    pub fn in_memory() -> Self {
        SessionService::from_log(EventLog::in_memory())
    }

    /// Opens a directory store and rebuilds state by replaying its logs.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let mut svc = SessionService::from_log(EventLog::open(dir.into())?);
        svc.reload_stimuli()?;
        Ok(svc)
    }

    pub fn from_log(log: EventLog) -> Self {
        let state = replay(log.all());
        SessionService {
            log,
            state,
            stimuli: HashMap::new(),
        }
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn commit(&mut self, event: Event) -> Result<()> {
        self.log.append(event.clone())?;
        self.state.apply(&event);
        Ok(())
    }

    pub fn session(&self, key: &SessionKey) -> Result<&ExperimentSession> {
        self.state
            .sessions
            .get(key)
            .ok_or_else(|| Error::NotFound(format!("session {key}")))
    }

    pub fn create_session(&mut self, participant_id: &str, day: u8, session_index: u8) -> Result<&ExperimentSession> {
        let key = SessionKey::new(participant_id, day, session_index)?;
        if self.state.sessions.contains_key(&key) {
            return Err(Error::protocol(format!("duplicate session key {key}")));
        }
        if session_index > 1 {
            let prev = SessionKey::new(participant_id, day, session_index - 1)?;
            if let Some(p) = self.state.sessions.get(&prev) {
                if p.phase != Phase::Complete {
                    return Err(Error::protocol(format!("previous session incomplete: {prev}")));
                }
            }
        }
        let speed = self
            .state
            .participant_sessions(participant_id)
            .filter(|s| s.key.ordinal() < key.ordinal())
            .max_by_key(|s| s.key.ordinal())
            .map(|s| s.treadmill_speed)
            .unwrap_or(Speed::from_steps(START_SPEED_STEPS));
        self.commit(Event::SessionCreated { key: key.clone(), speed })?;
        self.session(&key)
    }

    pub fn record_trial(&mut self, key: &SessionKey, trial: NewTrial) -> Result<&ExperimentSession> {
        let s = self.session(key)?;
        if s.trials.len() >= TRIALS_PER_SESSION {
            return Err(Error::protocol(format!("session full: {key} already has {TRIALS_PER_SESSION} trials")));
        }
        if s.phase != Phase::Training {
            return Err(Error::protocol(format!("wrong phase: {key} is not in training")));
        }
        let expected = s.trials.len() + 1;
        if trial.index != expected {
            return Err(Error::protocol(format!("out-of-order trial index {}, expected {expected}", trial.index)));
        }
        if !(trial.duration_s > 0.0) {
            return Err(Error::InvalidArgument(format!("trial duration {} must be positive", trial.duration_s)));
        }
        self.commit(Event::TrialRecorded { key: key.clone(), trial })?;
        self.session(key)
    }

    /// Speed change at a block boundary from day 2 on. Increases need at
    /// least two handrail-free trials in the block; other requests are granted.
    pub fn request_speed_change(&mut self, key: &SessionKey, direction: i8) -> Result<SpeedDecision> {
        let s = self.session(key)?;
        if key.day == 1 {
            return Err(Error::protocol("speed requests are not taken on day 1"));
        }
        if !(-1..=1).contains(&direction) {
            return Err(Error::InvalidArgument(format!("direction {direction} must be -1, 0 or +1")));
        }
        if s.trials.is_empty() || s.trials.len() % TRIALS_PER_BLOCK != 0 {
            return Err(Error::protocol("speed requests need a complete block of three trials"));
        }
        let block = s.blocks_completed();
        if s.speed_decisions.iter().any(|d| d.block == block) {
            return Err(Error::protocol(format!("block {block} already has a speed decision")));
        }
        let last = &s.trials[s.trials.len() - TRIALS_PER_BLOCK..];
        let decision = decide_speed(s.treadmill_speed, direction, last, block);
        self.commit(Event::SpeedRequested {
            key: key.clone(),
            decision: decision.clone(),
        })?;
        Ok(decision)
    }

    /// Creates the 18 selection slots (3 views x 6 repeats) and the display
    /// stimulus. `seed` defaults to a hash of the session id.
    pub fn begin_evaluation(
        &mut self,
        key: &SessionKey,
        pm: &ParticipantModel,
        nm: &NormativeModel,
        seed: Option<u64>,
    ) -> Result<Vec<SlotView>> {
        let s = self.session(key)?;
        if s.phase != Phase::Evaluation {
            return Err(Error::protocol(format!("wrong phase: {key} is not ready for evaluation")));
        }
        if s.evaluation.is_some() {
            return Err(Error::protocol(format!("evaluation already begun for {key}")));
        }
        let stimulus = Stimulus::new(pm, nm)?;
        let seed = seed.unwrap_or_else(|| derive_seed(key));
        let mut slots = Vec::with_capacity(SLOTS_PER_EVALUATION);
        for view in ViewingAngle::ALL {
            for repeat in 1..=REPEATS_PER_VIEW {
                let ordinal = slots.len() as u64;
                slots.push(Slot {
                    slot_id: format!("{key}.{}.{repeat}", view.as_str()),
                    view,
                    repeat_index: repeat,
                    slider: draw_slider(slot_seed(seed, ordinal)),
                });
            }
        }
        if let Some(dir) = self.log.dir() {
            let models = dir.join("models");
            std::fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;
            write_participant(models.join(format!("{key}.participant.json")), pm)?;
            write_normative(models.join(format!("{key}.normative.json")), nm)?;
        }
        self.commit(Event::EvaluationBegun {
            key: key.clone(),
            seed,
            slots,
        })?;
        self.stimuli.insert(key.clone(), Arc::new(stimulus));
        self.slots(key)
    }

    fn reload_stimuli(&mut self) -> Result<()> {
        let Some(dir) = self.log.dir().map(|d| d.join("models")) else {
            return Ok(());
        };
        for (key, s) in &self.state.sessions {
            if s.evaluation.is_none() {
                continue;
            }
            let p = dir.join(format!("{key}.participant.json"));
            let n = dir.join(format!("{key}.normative.json"));
            if p.exists() && n.exists() {
                let stim = Stimulus::new(&read_participant(&p)?, &read_normative(&n)?)?;
                self.stimuli.insert(key.clone(), Arc::new(stim));
            }
        }
        Ok(())
    }

    fn evaluation(&self, key: &SessionKey) -> Result<&Evaluation> {
        self.session(key)?
            .evaluation
            .as_ref()
            .ok_or_else(|| Error::protocol(format!("models missing: evaluation not begun for {key}")))
    }

    pub fn slots(&self, key: &SessionKey) -> Result<Vec<SlotView>> {
        let eval = self.evaluation(key)?;
        Ok(eval
            .slots
            .iter()
            .enumerate()
            .map(|(i, slot)| SlotView {
                slot_id: slot.slot_id.clone(),
                view: slot.view,
                repeat_index: slot.repeat_index,
                initial_pos: slot.slider.position_of(slot.slider.initial_alpha),
                open: i >= eval.selections.len(),
            })
            .collect())
    }

    fn find_slot(&self, slot_id: &str) -> Result<(SessionKey, &Slot)> {
        let session_part = slot_id.split('.').next().unwrap_or_default();
        let key: SessionKey = session_part
            .parse()
            .map_err(|_| Error::NotFound(format!("slot {slot_id}")))?;
        let eval = self.evaluation(&key)?;
        let slot = eval
            .slots
            .iter()
            .find(|s| s.slot_id == slot_id)
            .ok_or_else(|| Error::NotFound(format!("slot {slot_id}")))?;
        Ok((key, slot))
    }

    pub fn stimulus(&self, key: &SessionKey) -> Result<Arc<Stimulus>> {
        self.stimuli
            .get(key)
            .cloned()
            .ok_or_else(|| Error::protocol(format!("models missing for {key}")))
    }

    /// Point-light frames for a slot at normalized slider position `pos`.
    pub fn frames(&self, slot_id: &str, pos: f64, view: Option<ViewingAngle>) -> Result<DisplayPayload> {
        let (key, slot) = self.find_slot(slot_id)?;
        let view = view.unwrap_or(slot.view);
        if view != slot.view {
            return Err(Error::protocol(format!("slot {slot_id} is scheduled for the {} view", slot.view.as_str())));
        }
        let alpha1 = slot.slider.alpha_at(pos)?;
        let stim = self.stimulus(&key)?;
        Ok(DisplayPayload {
            slot_id: slot_id.to_string(),
            view,
            pos,
            source_rate_hz: stim.source_rate_hz,
            frames: stim.frames(alpha1, view)?,
        })
    }

    /// Records the selected coefficient for the next open slot.
    pub fn record_selection(&mut self, slot_id: &str, alpha1: f64, timestamp_ms: u64) -> Result<&ExperimentSession> {
        let (key, slot) = self.find_slot(slot_id)?;
        let slot = slot.clone();
        let eval = self.evaluation(&key)?;
        if eval.selections.iter().any(|s| s.slot_id == slot_id) {
            return Err(Error::protocol(format!("duplicate slot: {slot_id} already has a selection")));
        }
        let next = eval.next_open_slot().map(|s| s.slot_id.clone());
        if next.as_deref() != Some(slot_id) {
            return Err(Error::protocol(format!("slot {slot_id} is not the next open slot")));
        }
        if !slot.slider.contains(alpha1) {
            return Err(Error::protocol(format!(
                "selection {alpha1} out of slider range [{:.4}, {:.4}]",
                slot.slider.min_alpha, slot.slider.max_alpha
            )));
        }
        let selection = ScomoSelection {
            slot_id: slot_id.to_string(),
            alpha1,
            view: slot.view,
            repeat_index: slot.repeat_index,
            slider: slot.slider,
            timestamp_ms,
        };
        self.commit(Event::SelectionRecorded {
            key: key.clone(),
            selection,
        })?;
        self.session(&key)
    }

    /// Selection from a normalized handle position; the coefficient is resolved here.
    pub fn record_selection_at(&mut self, slot_id: &str, pos: f64, timestamp_ms: u64) -> Result<&ExperimentSession> {
        let (_, slot) = self.find_slot(slot_id)?;
        let alpha1 = slot.slider.alpha_at(pos)?;
        self.record_selection(slot_id, alpha1, timestamp_ms)
    }

    pub fn record_confidence(&mut self, report: ConfidenceReport) -> Result<()> {
        SessionKey::new(&report.participant_id, report.day, 1)?;
        let (lo, hi) = CONFIDENCE_SCALE;
        if !(lo..=hi).contains(&report.rating) {
            return Err(Error::InvalidArgument(format!("rating {} outside {lo}..={hi}", report.rating)));
        }
        self.commit(Event::ConfidenceRecorded { report })
    }

    pub fn record_analysis(&mut self, key: &SessionKey, analysis: GaitAnalysis) -> Result<()> {
        self.session(key)?;
        self.commit(Event::AnalysisRecorded {
            key: key.clone(),
            analysis,
        })
    }

    pub fn export_report(&self, participant_id: &str) -> Result<ReportBundle> {
        build_report(&self.state, participant_id)
    }
}

pub(crate) fn decide_speed(current: Speed, direction: i8, block: &[super::Trial], block_index: usize) -> SpeedDecision {
    let free = block.iter().filter(|t| t.handrail_free).count();
    let (granted, after) = match direction {
        1 if free >= 2 => (true, current.up()),
        1 => (false, current),
        -1 => (true, current.down()),
        _ => (true, current),
    };
    SpeedDecision {
        direction,
        granted,
        before: current,
        after,
        block: block_index,
        handrail_free_trials: free,
    }
}

/// Folds records into protocol state.
pub fn replay<'a>(records: impl IntoIterator<Item = &'a EventRecord>) -> ProtocolState {
    let mut state = ProtocolState::default();
    for r in records {
        state.apply(&r.event);
    }
    state
}
