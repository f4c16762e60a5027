use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ConfidenceReport, GaitAnalysis, NewTrial, ScomoSelection, SessionKey, Slot, Speed};
use super::service::SpeedDecision;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    SessionCreated { key: SessionKey, speed: Speed },
    TrialRecorded { key: SessionKey, trial: NewTrial },
    SpeedRequested { key: SessionKey, decision: SpeedDecision },
    EvaluationBegun { key: SessionKey, seed: u64, slots: Vec<Slot> },
    SelectionRecorded { key: SessionKey, selection: ScomoSelection },
    ConfidenceRecorded { report: ConfidenceReport },
    AnalysisRecorded { key: SessionKey, analysis: GaitAnalysis },
}

impl Event {
    pub fn participant_id(&self) -> &str {
        match self {
            Event::SessionCreated { key, .. }
            | Event::TrialRecorded { key, .. }
            | Event::SpeedRequested { key, .. }
            | Event::EvaluationBegun { key, .. }
            | Event::SelectionRecorded { key, .. }
            | Event::AnalysisRecorded { key, .. } => &key.participant_id,
            Event::ConfidenceRecorded { report } => &report.participant_id,
        }
    }
}

/// One line of the log: a per-participant sequence number and the event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub event: Event,
}

/// Append-only event storage, one JSON-lines file per participant when
/// backed by a directory, otherwise held in memory.
#[derive(Debug, Default)]
pub struct EventLog {
    dir: Option<PathBuf>,
    records: BTreeMap<String, Vec<EventRecord>>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        EventLog::default()
    }

    /// Opens (creating if needed) a directory-backed log and loads every file in it.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut records = BTreeMap::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".events.jsonl"))
            .collect();
        entries.sort();
        for path in entries {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut list = Vec::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                list.push(serde_json::from_str::<EventRecord>(line)?);
            }
            if let Some(first) = list.first() {
                records.insert(first.event.participant_id().to_string(), list);
            }
        }
        Ok(EventLog {
            dir: Some(dir),
            records,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path_for(dir: &Path, participant: &str) -> PathBuf {
        dir.join(format!("{participant}.events.jsonl"))
    }

    pub fn append(&mut self, event: Event) -> Result<EventRecord> {
        let participant = event.participant_id().to_string();
        let list = self.records.entry(participant.clone()).or_default();
        let record = EventRecord {
            seq: list.len() as u64 + 1,
            event,
        };
        if let Some(dir) = &self.dir {
            let path = Self::path_for(dir, &participant);
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            let line = serde_json::to_string(&record)?;
            writeln!(f, "{line}").map_err(|e| Error::io(&path, e))?;
        }
        list.push(record.clone());
        Ok(record)
    }

    pub fn participants(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn records(&self, participant: &str) -> &[EventRecord] {
        self.records.get(participant).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every record, participants in sorted order.
    pub fn all(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.values().flatten()
    }
}
