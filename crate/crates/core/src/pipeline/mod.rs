//! Batch pipeline: ingest, fit, synth, deviation, params, correlate, report.
//!
//! Every stage writes its files under `output_dir/<stage>/`. Outputs are a
//! function of the inputs and the seed only, so two runs are byte-identical.

pub mod demo;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joints::Limb;
use crate::mocap::{
    detect_gait_events, load_force_plate, load_trajectory, lowpass_filter, segment_cycles, EventConfig, GaitCycleSet,
    GaitEvents, JointTrajectory, Side,
};
use crate::model::{fit_normative_model_with, fit_participant_model, NormativeOptions, SinusoidOptions, write_normative, write_participant, NormativeModel, ParticipantModel};
use crate::params::{compute_gait_params, correlate_with_scomo, correlation_csv, params_csv, GaitParameterSet, ParamOptions};
use crate::session::{replay, Event, EventLog, GaitAnalysis, Phase, ProtocolState, SessionKey};
use crate::similarity::{loading_deviation, DeviationMode};
use crate::synthesis::{project_with, write_frames_csv, CoefficientOfMotion, ViewingAngle};
use crate::session::Stimulus;

pub const CONFIG_VERSION: u32 = 1;

fn default_cutoff() -> f64 {
    6.0
}
fn default_threshold() -> f64 {
    20.0
}
fn default_cycles() -> usize {
    10
}
fn default_true() -> bool {
    true
}

fn default_alphas() -> Vec<f64> {
    vec![-5.0, 0.0, 5.0]
}

/// Pipeline settings, read from a TOML key = value file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub config_version: u32,
    /// `<session_id>.csv` kinematics, one file per session.
    pub trajectory_dir: PathBuf,
    /// `<session_id>.robotic.csv` and `<session_id>.contralateral.csv`.
    pub grf_dir: PathBuf,
    /// `<walker>.csv` plus `<walker>.robotic.csv` force plate per walker.
    pub normative_dir: PathBuf,
    /// Session event logs; SCoMo data for correlate and report.
    #[serde(default)]
    pub store_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
    #[serde(default = "default_threshold")]
    pub threshold_n: f64,
    #[serde(default = "default_cycles")]
    pub n_cycles: usize,
    #[serde(default)]
    pub deviation_mode: DeviationMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub robotic_limb: Limb,
    /// Coefficients rendered by the synth stage.
    #[serde(default = "default_alphas")]
    pub synth_alphas: Vec<f64>,
    /// `false` fits normative score sinusoids without a phase term.
    #[serde(default = "default_true")]
    pub sinusoid_phase: bool,
}

impl PipelineConfig {
    pub fn new(trajectory_dir: PathBuf, grf_dir: PathBuf, normative_dir: PathBuf, output_dir: PathBuf) -> Self {
        PipelineConfig {
            config_version: CONFIG_VERSION,
            trajectory_dir,
            grf_dir,
            normative_dir,
            store_dir: None,
            output_dir,
            cutoff_hz: default_cutoff(),
            threshold_n: default_threshold(),
            n_cycles: default_cycles(),
            deviation_mode: DeviationMode::default(),
            seed: 0,
            robotic_limb: Limb::default(),
            synth_alphas: default_alphas(),
            sinusoid_phase: true,
        }
    }

    /// Parses a config; relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {}", e.message())))?;
        if cfg.config_version != CONFIG_VERSION {
            return Err(Error::InvalidArgument(format!(
                "config_version {} unsupported, expected {CONFIG_VERSION}",
                cfg.config_version
            )));
        }
        for p in [&mut cfg.trajectory_dir, &mut cfg.grf_dir, &mut cfg.normative_dir, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = cfg.store_dir.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_hz > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff_hz {} must be positive", self.cutoff_hz)));
        }
        if !(self.threshold_n > 0.0) {
            return Err(Error::InvalidArgument(format!("threshold_n {} must be positive", self.threshold_n)));
        }
        if self.n_cycles < 2 {
            return Err(Error::InvalidArgument(format!("n_cycles {} must be at least 2", self.n_cycles)));
        }
        for a in &self.synth_alphas {
            CoefficientOfMotion::new(*a)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Fit,
    Synth,
    Deviation,
    Params,
    Correlate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Fit,
        Stage::Synth,
        Stage::Deviation,
        Stage::Params,
        Stage::Correlate,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Fit => "fit",
            Stage::Synth => "synth",
            Stage::Deviation => "deviation",
            Stage::Params => "params",
            Stage::Correlate => "correlate",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

/// A stage failure: the error plus the stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub error: Error,
}

impl StageError {
    /// Machine-readable form printed by the command line tool.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "status": "error",
            "stage": self.stage.as_str(),
            "message": self.error.to_string(),
        })
        .to_string()
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

/// One ingested session.
#[derive(Debug, Clone)]
pub struct SessionInput {
    pub key: SessionKey,
    pub trajectory: JointTrajectory,
    pub events: GaitEvents,
    pub warnings: Vec<String>,
}

/// Results accumulated across stages.
#[derive(Debug)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub sessions: Vec<SessionInput>,
    pub walkers: Vec<(String, GaitCycleSet)>,
    pub participant_models: BTreeMap<SessionKey, ParticipantModel>,
    pub normative: Option<NormativeModel>,
    pub deviations: BTreeMap<SessionKey, (f64, usize)>,
    pub params: BTreeMap<SessionKey, GaitParameterSet>,
    pub written: Vec<PathBuf>,
    completed: Vec<Stage>,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sorted_csvs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_stem().is_some_and(|s| !s.to_string_lossy().contains('.'))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        Pipeline {
            config,
            sessions: vec![],
            walkers: vec![],
            participant_models: BTreeMap::new(),
            normative: None,
            deviations: BTreeMap::new(),
            params: BTreeMap::new(),
            written: vec![],
            completed: vec![],
        }
    }

    fn out(&self, stage: Stage, name: &str) -> PathBuf {
        self.config.output_dir.join(stage.as_str()).join(name)
    }

    fn emit(&mut self, stage: Stage, name: &str, text: &str) -> Result<()> {
        let path = self.out(stage, name);
        write_text(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn event_config(&self) -> EventConfig {
        EventConfig {
            threshold_n: self.config.threshold_n,
            ..EventConfig::default()
        }
    }

    fn load_events(&self, grf_base: &Path, name: &str, rate_hz: f64) -> Result<(GaitEvents, Vec<String>)> {
        let cfg = EventConfig {
            kinematics_rate_hz: rate_hz,
            ..self.event_config()
        };
        let mut warnings = vec![];
        let mut sides = vec![];
        for side in [Side::Robotic, Side::Contralateral] {
            let grf = load_force_plate(grf_base.join(format!("{name}.{}.csv", side.as_str())))?;
            let det = detect_gait_events(&grf, &cfg)?;
            warnings.extend(det.warnings);
            sides.push(det.events);
        }
        let contralateral = sides.pop().expect("two sides");
        let robotic = sides.pop().expect("two sides");
        Ok((GaitEvents::new(robotic, contralateral), warnings))
    }

    /// Loads, filters and detects events for every session and walker.
    pub fn ingest(&mut self) -> Result<()> {
        let mut summary = String::from("source,id,samples,rate_hz,robotic_heel_strikes,contralateral_heel_strikes,warnings\n");
        let mut sessions = vec![];
        for path in sorted_csvs(&self.config.trajectory_dir)? {
            let Ok(key) = stem(&path).parse::<SessionKey>() else {
                continue;
            };
            let raw = load_trajectory(&path)?;
            let trajectory = lowpass_filter(&raw, self.config.cutoff_hz)?;
            let (events, warnings) = self.load_events(&self.config.grf_dir, &key.id(), trajectory.rate_hz())?;
            summary.push_str(&format!(
                "session,{},{},{},{},{},{}\n",
                key,
                trajectory.len(),
                trajectory.rate_hz(),
                events.robotic.heel_strikes.len(),
                events.contralateral.heel_strikes.len(),
                warnings.len()
            ));
            let doc = serde_json::json!({
                "session_id": key.id(),
                "robotic": events.robotic,
                "contralateral": events.contralateral,
                "warnings": warnings,
            });
            self.emit(Stage::Ingest, &format!("events/{key}.json"), &serde_json::to_string_pretty(&doc)?)?;
            sessions.push(SessionInput {
                key,
                trajectory,
                events,
                warnings,
            });
        }
        if sessions.is_empty() {
            return Err(Error::NotFound(format!(
                "no session trajectories in {}",
                self.config.trajectory_dir.display()
            )));
        }
        let mut walkers = vec![];
        for path in sorted_csvs(&self.config.normative_dir)? {
            let name = stem(&path);
            let trajectory = lowpass_filter(&load_trajectory(&path)?, self.config.cutoff_hz)?;
            let (events, warnings) = self.load_events(&self.config.normative_dir, &name, trajectory.rate_hz())?;
            summary.push_str(&format!(
                "normative,{},{},{},{},{},{}\n",
                name,
                trajectory.len(),
                trajectory.rate_hz(),
                events.robotic.heel_strikes.len(),
                events.contralateral.heel_strikes.len(),
                warnings.len()
            ));
            walkers.push((name, segment_cycles(&trajectory, &events, self.config.n_cycles, Side::Robotic)?));
        }
        self.emit(Stage::Ingest, "summary.csv", &summary)?;
        self.sessions = sessions;
        self.walkers = walkers;
        Ok(())
    }

    /// Participant model per session from the last `n_cycles` cycles, and the normative model.
    pub fn fit(&mut self) -> Result<()> {
        let mut summary = String::from("session_id,cycles,cycle_samples,n_components,cumulative_explained\n");
        let mut models = BTreeMap::new();
        for s in &self.sessions {
            let cycles = segment_cycles(&s.trajectory, &s.events, self.config.n_cycles, Side::Robotic)?;
            let pm = fit_participant_model(&cycles)?;
            summary.push_str(&format!(
                "{},{},{:.6},{},{:.9}\n",
                s.key,
                cycles.n_cycles(),
                pm.cycle_samples,
                pm.n_components(),
                pm.cumulative_explained()
            ));
            models.insert(s.key.clone(), pm);
        }
        let dir = self.config.output_dir.join("fit");
        fs::create_dir_all(dir.join("models")).map_err(|e| Error::io(&dir, e))?;
        for (k, pm) in &models {
            let path = dir.join("models").join(format!("{k}.participant.json"));
            write_participant(&path, pm)?;
            self.written.push(path);
        }
        if self.walkers.is_empty() {
            return Err(Error::NotFound(format!("no normative walkers in {}", self.config.normative_dir.display())));
        }
        let cycle_sets: Vec<GaitCycleSet> = self.walkers.iter().map(|(_, c)| c.clone()).collect();
        let opts = NormativeOptions {
            sinusoid: SinusoidOptions {
                fit_phase: self.config.sinusoid_phase,
                ..SinusoidOptions::default()
            },
            ..NormativeOptions::default()
        };
        let nm = fit_normative_model_with(&cycle_sets, &opts)?;
        let path = dir.join("models").join("normative.json");
        write_normative(&path, &nm)?;
        self.written.push(path);
        let mut norm = String::from("component,explained_variance_ratio,amplitude,omega_rad_per_sample,phase_rad,r2\n");
        for (i, (s, ev)) in nm.sinusoids.iter().zip(&nm.explained_variance_ratio).enumerate() {
            norm.push_str(&format!(
                "{},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
                i + 1,
                ev,
                s.amplitude,
                s.omega,
                s.phase,
                s.r2
            ));
        }
        self.emit(Stage::Fit, "participants.csv", &summary)?;
        self.emit(Stage::Fit, "normative.csv", &norm)?;
        self.participant_models = models;
        self.normative = Some(nm);
        Ok(())
    }

    fn normative(&self) -> Result<&NormativeModel> {
        self.normative.as_ref().ok_or_else(|| Error::NotFound("normative model".into()))
    }

    /// One gait cycle of point-light frames per view and configured
    /// coefficient, for each participant's latest session.
    pub fn synth(&mut self) -> Result<()> {
        let nm = self.normative()?.clone();
        let mut latest: BTreeMap<&str, &SessionKey> = BTreeMap::new();
        for k in self.participant_models.keys() {
            latest.insert(&k.participant_id, k);
        }
        let mut outputs = vec![];
        for key in latest.into_values() {
            let pm = &self.participant_models[key];
            let stim = Stimulus::new(pm, &nm)?;
            let cycle = (pm.cycle_samples.round() as usize).clamp(1, pm.t_length());
            for view in ViewingAngle::ALL {
                for &a in &self.config.synth_alphas {
                    let gait = stim.components.blend(CoefficientOfMotion::new(a)?);
                    let mut frames = project_with(&gait, &stim.mappings[&view]);
                    frames.truncate(cycle);
                    outputs.push((format!("{key}.{}.alpha{a:+.2}.csv", view.as_str()), frames));
                }
            }
        }
        let dir = self.config.output_dir.join("synth");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (name, frames) in outputs {
            let path = dir.join(name);
            write_frames_csv(&path, &frames)?;
            self.written.push(path);
        }
        Ok(())
    }

    pub fn deviation(&mut self) -> Result<()> {
        let nm = self.normative()?;
        let mode = self.config.deviation_mode;
        let mut out = BTreeMap::new();
        let mut csv = String::from("session_id,mode,value,m\n");
        for (k, pm) in &self.participant_models {
            let (value, m) = loading_deviation(&pm.loadings, &nm.loadings, mode)?;
            csv.push_str(&format!("{k},{mode},{value:.9},{m}\n"));
            out.insert(k.clone(), (value, m));
        }
        self.emit(Stage::Deviation, "deviations.csv", &csv)?;
        self.deviations = out;
        Ok(())
    }

    pub fn params(&mut self) -> Result<()> {
        let opts = ParamOptions {
            robotic_limb: self.config.robotic_limb,
            ..ParamOptions::default()
        };
        let mut out = BTreeMap::new();
        for s in &self.sessions {
            out.insert(s.key.clone(), compute_gait_params(&s.trajectory, &s.events, &opts)?);
        }
        let rows: Vec<(String, GaitParameterSet)> = out.iter().map(|(k, p)| (k.id(), *p)).collect();
        self.emit(Stage::Params, "params.csv", &params_csv(&rows))?;
        self.params = out;
        Ok(())
    }

    /// Protocol state from the store with this run's analyses folded in.
    pub fn protocol_state(&self) -> Result<ProtocolState> {
        let mut state = match &self.config.store_dir {
            Some(dir) if dir.exists() => replay(EventLog::open(dir)?.all()),
            _ => ProtocolState::default(),
        };
        let keys: Vec<SessionKey> = state.sessions.keys().cloned().collect();
        for key in keys {
            let Some(&(deviation, m)) = self.deviations.get(&key) else {
                continue;
            };
            let analysis = GaitAnalysis {
                deviation_mode: self.config.deviation_mode,
                deviation,
                m,
                params: self.params.get(&key).copied(),
            };
            state.apply(&Event::AnalysisRecorded { key, analysis });
        }
        Ok(state)
    }

    pub fn correlate(&mut self) -> Result<()> {
        let state = self.protocol_state()?;
        let mut participants: Vec<String> = state.sessions.keys().map(|k| k.participant_id.clone()).collect();
        participants.dedup();
        let mut skipped = BTreeMap::new();
        for p in participants {
            for view in ViewingAngle::ALL {
                let (params, scomo): (Vec<GaitParameterSet>, Vec<f64>) = state
                    .participant_sessions(&p)
                    .filter(|s| s.phase == Phase::Complete)
                    .filter_map(|s| {
                        let params = self.params.get(&s.key)?;
                        let summary = s.summaries.iter().find(|x| x.view == view)?;
                        Some((*params, summary.mean_scomo))
                    })
                    .unzip();
                match correlate_with_scomo(&params, &scomo, view) {
                    Ok(report) => self.emit(Stage::Correlate, &format!("{p}.{}.csv", view.as_str()), &correlation_csv(&report))?,
                    Err(e) => {
                        skipped.insert(format!("{p}.{}", view.as_str()), e.to_string());
                    }
                }
            }
        }
        self.emit(Stage::Correlate, "skipped.json", &serde_json::to_string_pretty(&skipped)?)?;
        Ok(())
    }

    pub fn report(&mut self) -> Result<()> {
        let state = self.protocol_state()?;
        let mut participants: Vec<String> = state.sessions.keys().map(|k| k.participant_id.clone()).collect();
        participants.dedup();
        let mut index = BTreeMap::new();
        for p in participants {
            match crate::session::report::build_report(&state, &p) {
                Ok(bundle) => {
                    self.emit(Stage::Report, &format!("{p}.json"), &bundle.to_json()?)?;
                    for view in ViewingAngle::ALL {
                        self.emit(Stage::Report, &format!("{p}.scomo.{}.csv", view.as_str()), &bundle.scomo_csv(view))?;
                    }
                    index.insert(p, "ok".to_string());
                }
                Err(e) => {
                    index.insert(p, e.to_string());
                }
            }
        }
        self.emit(Stage::Report, "index.json", &serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }

    pub fn run_stage(&mut self, stage: Stage) -> std::result::Result<(), StageError> {
        let r = match stage {
            Stage::Ingest => self.ingest(),
            Stage::Fit => self.fit(),
            Stage::Synth => self.synth(),
            Stage::Deviation => self.deviation(),
            Stage::Params => self.params(),
            Stage::Correlate => self.correlate(),
            Stage::Report => self.report(),
        };
        r.map_err(|error| StageError { stage, error })?;
        self.completed.push(stage);
        Ok(())
    }

    /// Runs every stage up to and including `last` that has not run yet.
    /// Stages after `fit` only depend on what they need, so `params`
    /// skips `synth` and `deviation`.
    pub fn run_until(&mut self, last: Stage) -> std::result::Result<(), StageError> {
        for stage in Stage::ALL.into_iter().filter(|s| *s <= last) {
            if self.completed.contains(&stage) || !needed(stage, last) {
                continue;
            }
            self.run_stage(stage)?;
        }
        Ok(())
    }

    /// Writes `manifest.json`: completed stages and every file produced.
    pub fn write_manifest(&self) -> Result<()> {
        let root = &self.config.output_dir;
        let mut files: Vec<String> = self
            .written
            .iter()
            .map(|p| p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect();
        files.sort();
        files.dedup();
        let doc = serde_json::json!({
            "status": "ok",
            "config_version": CONFIG_VERSION,
            "seed": self.config.seed,
            "stages": self.completed,
            "files": files,
        });
        write_text(&root.join("manifest.json"), &serde_json::to_string_pretty(&doc)?)
    }
}

fn needed(stage: Stage, last: Stage) -> bool {
    use Stage::*;
    match last {
        Synth => matches!(stage, Ingest | Fit | Synth),
        Deviation => matches!(stage, Ingest | Fit | Deviation),
        Params => matches!(stage, Ingest | Params),
        Correlate => matches!(stage, Ingest | Params | Correlate),
        _ => true,
    }
}

/// Runs the pipeline through `last` and writes the manifest.
pub fn run_pipeline(config: PipelineConfig, last: Stage) -> std::result::Result<Pipeline, StageError> {
    let mut p = Pipeline::new(config);
    p.run_until(last)?;
    p.write_manifest().map_err(|error| StageError { stage: last, error })?;
    Ok(p)
}
