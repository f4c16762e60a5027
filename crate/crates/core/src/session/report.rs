use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::service::ProtocolState;
use super::{ExperimentSession, Phase, CONFIDENCE_SCALE};
use crate::error::{Error, Result};
use crate::params::{correlate_with_scomo, CorrelationReport, GaitParameterSet, SI_FORMULA};
use crate::stats::{fit_random_intercept, MixedModelFit};
use crate::synthesis::ViewingAngle;

/// Minimum completed sessions per participant before a trend model is fitted.
pub const MIN_TREND_SESSIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub session_id: String,
    pub day: u8,
    pub session_index: u8,
    pub ordinal: u32,
    pub phase: Phase,
    pub speed_m_s: f64,
    pub trials: usize,
    pub handrail_free_trials: usize,
    pub deviation: Option<f64>,
    pub deviation_mode: Option<String>,
    pub params: Option<GaitParameterSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScomoRow {
    pub session_id: String,
    pub ordinal: u32,
    pub mean_scomo: f64,
    pub sd_scomo: f64,
    pub n_repeats: usize,
}

/// A trend fit over the cohort, or the reason it was not fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MixedModelSection {
    Fitted {
        response: String,
        participants: Vec<String>,
        fit: MixedModelFit,
    },
    InsufficientSessions {
        response: String,
        completed: usize,
        needed: usize,
    },
    Failed {
        response: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub participant_id: String,
    pub sessions: Vec<SessionRow>,
    pub scomo: BTreeMap<ViewingAngle, Vec<ScomoRow>>,
    pub correlations: BTreeMap<ViewingAngle, Option<CorrelationReport>>,
    pub mixed_models: BTreeMap<String, MixedModelSection>,
    pub confidence: Vec<super::ConfidenceReport>,
    pub metadata: BTreeMap<String, String>,
}

impl ReportBundle {
    /// Pretty JSON; map ordering makes the bytes a function of the store state.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One CSV per view: session_id, ordinal, mean, sd, n.
    pub fn scomo_csv(&self, view: ViewingAngle) -> String {
        let mut out = String::from("session_id,ordinal,view,mean_scomo,sd_scomo,n_repeats\n");
        for r in self.scomo.get(&view).into_iter().flatten() {
            out.push_str(&format!(
                "{},{},{},{:.9},{:.9},{}\n",
                r.session_id,
                r.ordinal,
                view.as_str(),
                r.mean_scomo,
                r.sd_scomo,
                r.n_repeats
            ));
        }
        out
    }
}

fn mean_for(s: &ExperimentSession, view: ViewingAngle) -> Option<f64> {
    s.summaries.iter().find(|x| x.view == view).map(|x| x.mean_scomo)
}

fn completed<'a>(state: &'a ProtocolState, participant: &'a str) -> Vec<&'a ExperimentSession> {
    state
        .participant_sessions(participant)
        .filter(|s| s.phase == Phase::Complete)
        .collect()
}

fn trend_section(
    state: &ProtocolState,
    participant: &str,
    response: String,
    value: impl Fn(&ExperimentSession) -> Option<f64>,
) -> MixedModelSection {
    let own = completed(state, participant).into_iter().filter(|s| value(s).is_some()).count();
    if own < MIN_TREND_SESSIONS {
        return MixedModelSection::InsufficientSessions {
            response,
            completed: own,
            needed: MIN_TREND_SESSIONS,
        };
    }
    let mut participants: Vec<&str> = state.sessions.keys().map(|k| k.participant_id.as_str()).collect();
    participants.dedup();
    let (mut y, mut x, mut g, mut used) = (vec![], vec![], vec![], vec![]);
    for p in participants {
        let rows: Vec<(f64, f64)> = completed(state, p)
            .into_iter()
            .filter_map(|s| value(s).map(|v| (s.key.ordinal() as f64, v)))
            .collect();
        if rows.len() < MIN_TREND_SESSIONS {
            continue;
        }
        used.push(p.to_string());
        for (o, v) in rows {
            x.push(o);
            y.push(v);
            g.push(p.to_string());
        }
    }
    match fit_random_intercept(&y, &x, &g) {
        Ok(fit) => MixedModelSection::Fitted {
            response,
            participants: used,
            fit,
        },
        Err(e) => MixedModelSection::Failed {
            response,
            reason: e.to_string(),
        },
    }
}

/// Analysis bundle for one participant. Trend models pool every participant
/// in the store with enough completed sessions.
pub fn build_report(state: &ProtocolState, participant: &str) -> Result<ReportBundle> {
    let all: Vec<&ExperimentSession> = state.participant_sessions(participant).collect();
    if all.is_empty() {
        return Err(Error::NotFound(format!("no data for participant {participant}")));
    }
    let done = completed(state, participant);
    if done.is_empty() {
        return Err(Error::NotFound(format!("no completed session for participant {participant}")));
    }

    let sessions = all
        .iter()
        .map(|s| SessionRow {
            session_id: s.id(),
            day: s.key.day,
            session_index: s.key.session_index,
            ordinal: s.key.ordinal(),
            phase: s.phase,
            speed_m_s: s.treadmill_speed.m_s(),
            trials: s.trials.len(),
            handrail_free_trials: s.trials.iter().filter(|t| t.handrail_free).count(),
            deviation: s.analysis.as_ref().map(|a| a.deviation),
            deviation_mode: s.analysis.as_ref().map(|a| a.deviation_mode.as_str().to_string()),
            params: s.analysis.as_ref().and_then(|a| a.params.clone()),
        })
        .collect();

    let mut scomo = BTreeMap::new();
    let mut correlations = BTreeMap::new();
    let mut mixed_models = BTreeMap::new();
    for view in ViewingAngle::ALL {
        let rows: Vec<ScomoRow> = done
            .iter()
            .filter_map(|s| {
                s.summaries.iter().find(|x| x.view == view).map(|x| ScomoRow {
                    session_id: s.id(),
                    ordinal: s.key.ordinal(),
                    mean_scomo: x.mean_scomo,
                    sd_scomo: x.sd_scomo,
                    n_repeats: x.n_repeats,
                })
            })
            .collect();
        scomo.insert(view, rows);

        let paired: Vec<(GaitParameterSet, f64)> = done
            .iter()
            .filter_map(|s| {
                let p = s.analysis.as_ref()?.params.clone()?;
                Some((p, mean_for(s, view)?))
            })
            .collect();
        let (params, values): (Vec<_>, Vec<_>) = paired.into_iter().unzip();
        correlations.insert(view, correlate_with_scomo(&params, &values, view).ok());

        mixed_models.insert(
            format!("scomo_{}", view.as_str()),
            trend_section(state, participant, format!("mean SCoMo ({})", view.as_str()), |s| mean_for(s, view)),
        );
    }
    mixed_models.insert(
        "gait_deviation".to_string(),
        trend_section(state, participant, "gait deviation".to_string(), |s| {
            s.analysis.as_ref().map(|a| a.deviation)
        }),
    );

    let confidence = state
        .confidence
        .iter()
        .filter(|c| c.participant_id == participant)
        .cloned()
        .collect();

    let mut metadata = BTreeMap::new();
    metadata.insert("format_version".into(), "1".into());
    metadata.insert("symmetry_index".into(), SI_FORMULA.into());
    metadata.insert("step_time".into(), "time from the preceding opposite-side heel strike".into());
    metadata.insert("mixed_model".into(), "Gaussian random intercept, ML, session ordinal 1..12 as fixed effect".into());
    metadata.insert(
        "p_value".into(),
        "two-sided Student t with N - 2 - (groups - 1) degrees of freedom".into(),
    );
    metadata.insert(
        "confidence_scale".into(),
        format!("{}..={}", CONFIDENCE_SCALE.0, CONFIDENCE_SCALE.1),
    );

    Ok(ReportBundle {
        participant_id: participant.to_string(),
        sessions,
        scomo,
        correlations,
        mixed_models,
        confidence,
        metadata,
    })
}
