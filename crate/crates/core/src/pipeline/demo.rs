//! Synthetic cohort generator: parameterized walkers with adjustable
//! asymmetry, trunk lean and noise, plus a simulated run of the protocol.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::joints::{Axis, Joint, Limb, N_COLS};
use crate::mocap::{write_force_plate, write_trajectory, ForcePlateRecord, JointTrajectory, Side};
use super::{Pipeline, PipelineConfig, Stage, StageError};
use crate::model::{NormativeModel, ParticipantModel};
use crate::session::{NewTrial, SessionKey, SessionService, DAYS, SESSIONS_PER_DAY, TRIALS_PER_BLOCK, TRIALS_PER_SESSION};

pub const DEMO_RATE_HZ: f64 = 100.0;
pub const DEMO_GRF_RATE_HZ: f64 = 1000.0;
/// Fraction of the cycle spent in stance.
const STANCE: f64 = 0.62;
const BODY_WEIGHT_N: f64 = 750.0;

/// Shape of one synthetic walker.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkerSpec {
    /// Stride length in kinematic samples.
    pub cycle_samples: usize,
    /// Anterior-posterior ankle excursion amplitude, m.
    pub step_amplitude_m: f64,
    /// Fractional reduction of the robotic-side ankle excursion.
    pub asymmetry: f64,
    /// Shift of the contralateral heel strike away from mid-cycle, fraction of a cycle.
    pub timing_asymmetry: f64,
    pub trunk_lean_deg: f64,
    pub trunk_sway_m: f64,
    pub height_scale: f64,
    pub noise_m: f64,
    pub grf_noise_n: f64,
    pub robotic_limb: Limb,
}

impl Default for WalkerSpec {
    fn default() -> Self {
        WalkerSpec {
            cycle_samples: 110,
            step_amplitude_m: 0.3,
            asymmetry: 0.0,
            timing_asymmetry: 0.0,
            trunk_lean_deg: 0.0,
            trunk_sway_m: 0.02,
            height_scale: 1.0,
            noise_m: 0.0,
            grf_noise_n: 0.0,
            robotic_limb: Limb::Right,
        }
    }
}

/// One recorded trial: kinematics at 100 Hz and both force plates at 1000 Hz.
#[derive(Debug, Clone)]
pub struct SyntheticTrial {
    pub trajectory: JointTrajectory,
    pub robotic: ForcePlateRecord,
    pub contralateral: ForcePlateRecord,
}

fn phase(t: usize, offset: usize, period: usize) -> f64 {
    (t as i64 - offset as i64).rem_euclid(period as i64) as f64 / period as f64
}

fn swing_lift(u: f64) -> f64 {
    if u < STANCE {
        0.0
    } else {
        (PI * (u - STANCE) / (1.0 - STANCE)).sin().powi(2)
    }
}

fn set(row: &mut [f64], joint: Joint, p: [f64; 3]) {
    for (k, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
        row[joint.column(axis)] = p[k];
    }
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Generates `cycles` strides with `margin` quiet samples at each end where
/// no foot contact is recorded.
pub fn synthesize_trial(spec: &WalkerSpec, cycles: usize, margin: usize, rng: &mut impl Rng) -> Result<SyntheticTrial> {
    let period = spec.cycle_samples;
    if period < 20 {
        return Err(Error::InvalidArgument(format!("cycle of {period} samples is too short")));
    }
    let len = 2 * margin + cycles * period;
    let h = spec.height_scale;
    let ctl_offset = margin + ((0.5 + spec.timing_asymmetry) * period as f64).round() as usize;
    let robotic_sign = if spec.robotic_limb == Limb::Right { 1.0 } else { -1.0 };
    let lean = spec.trunk_lean_deg.to_radians();

    let mut samples = DMatrix::zeros(len, N_COLS);
    let mut row = vec![0.0; N_COLS];
    for t in 0..len {
        let ur = phase(t, margin, period);
        let uc = phase(t, ctl_offset, period);
        let pr = 2.0 * PI * ur;
        let pelvis = [
            robotic_sign * spec.trunk_sway_m * 0.5 * pr.sin(),
            0.0,
            0.95 * h + 0.015 * (2.0 * pr).cos(),
        ];
        let theta = lean + 1.5f64.to_radians() * (2.0 * pr).cos();
        let sternum = add(
            pelvis,
            [spec.trunk_sway_m * pr.sin() * robotic_sign, 0.45 * h * theta.sin(), 0.45 * h * theta.cos()],
        );
        let head = add(sternum, [0.0, 0.25 * h * theta.sin(), 0.25 * h * theta.cos()]);
        set(&mut row, Joint::Pelvis, pelvis);
        set(&mut row, Joint::Sternum, sternum);
        set(&mut row, Joint::Head, head);

        for (limb, u, other_u, amp) in [
            (spec.robotic_limb, ur, uc, spec.step_amplitude_m * (1.0 - spec.asymmetry)),
            (spec.robotic_limb.other(), uc, ur, spec.step_amplitude_m),
        ] {
            let sign = if limb == Limb::Right { 1.0 } else { -1.0 };
            let (ankle_j, knee_j, hip_j, wrist_j, elbow_j, shoulder_j) = match limb {
                Limb::Right => (Joint::RightAnkle, Joint::RightKnee, Joint::RightHip, Joint::RightWrist, Joint::RightElbow, Joint::RightShoulder),
                Limb::Left => (Joint::LeftAnkle, Joint::LeftKnee, Joint::LeftHip, Joint::LeftWrist, Joint::LeftElbow, Joint::LeftShoulder),
            };
            let p = 2.0 * PI * u;
            let lift = swing_lift(u);
            let hip = add(pelvis, [sign * 0.09 * h, 0.0, 0.0]);
            let ankle = [sign * 0.09 * h, amp * p.cos(), 0.07 + 0.1 * lift];
            let knee = [
                0.5 * (hip[0] + ankle[0]),
                0.5 * (hip[1] + ankle[1]) + 0.04 + 0.05 * lift,
                0.5 * (hip[2] + ankle[2]),
            ];
            let po = 2.0 * PI * other_u;
            let shoulder = add(sternum, [sign * 0.18 * h, 0.0, -0.03 * h]);
            let elbow = add(shoulder, [0.0, 0.06 * po.cos(), -0.28 * h]);
            let wrist = add(shoulder, [0.0, 0.15 * po.cos(), -0.52 * h]);
            set(&mut row, ankle_j, ankle);
            set(&mut row, knee_j, knee);
            set(&mut row, hip_j, hip);
            set(&mut row, shoulder_j, shoulder);
            set(&mut row, elbow_j, elbow);
            set(&mut row, wrist_j, wrist);
        }
        for (c, v) in row.iter().enumerate() {
            samples[(t, c)] = *v;
        }
    }
    if spec.noise_m > 0.0 {
        let noise = Normal::new(0.0, spec.noise_m).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        samples.iter_mut().for_each(|v| *v += rng.sample(noise));
    }
    let trajectory = JointTrajectory::new(samples, DEMO_RATE_HZ)?;

    let robotic = contact_plate(spec, len, margin, margin, Side::Robotic, rng)?;
    let contralateral = contact_plate(spec, len, margin, ctl_offset, Side::Contralateral, rng)?;
    Ok(SyntheticTrial {
        trajectory,
        robotic,
        contralateral,
    })
}

/// Vertical GRF with one half-sine contact per stance that lies fully
/// inside the recorded window.
fn contact_plate(
    spec: &WalkerSpec,
    len: usize,
    margin: usize,
    offset: usize,
    side: Side,
    rng: &mut impl Rng,
) -> Result<ForcePlateRecord> {
    let period = spec.cycle_samples;
    let scale = (DEMO_GRF_RATE_HZ / DEMO_RATE_HZ) as usize;
    let stance = STANCE * (period * scale) as f64;
    let mut grf = vec![0.0; len * scale];
    let mut start = margin + (offset - margin) % period;
    while start as f64 + STANCE * period as f64 <= (len - margin) as f64 {
        let s = start * scale;
        for (i, g) in grf.iter_mut().enumerate().skip(s) {
            let w = (i - s) as f64 / stance;
            if w >= 1.0 {
                break;
            }
            *g = BODY_WEIGHT_N * (PI * w).sin();
        }
        start += period;
    }
    if spec.grf_noise_n > 0.0 {
        let noise = Normal::new(0.0, spec.grf_noise_n).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        grf.iter_mut().for_each(|v| *v += rng.sample(noise));
    }
    ForcePlateRecord::new(grf, DEMO_GRF_RATE_HZ, side)
}

fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    pub seed: u64,
    pub participants: usize,
    pub walkers: usize,
    pub cycles_per_trial: usize,
    /// Samples without foot contacts at either end of every trial.
    pub margin: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            seed: 20240601,
            participants: 9,
            walkers: 25,
            cycles_per_trial: 12,
            margin: 150,
        }
    }
}

/// A pseudo-participant whose asymmetry and trunk lean shrink over sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoParticipant {
    pub id: String,
    pub base: WalkerSpec,
    pub initial_asymmetry: f64,
    pub initial_timing_asymmetry: f64,
    pub initial_lean_deg: f64,
    pub alpha_bias: f64,
    pub learning_rate: f64,
}

impl DemoParticipant {
    fn progress(&self, ordinal: u32) -> f64 {
        (-(ordinal as f64 - 1.0) * self.learning_rate).exp()
    }

    /// Walker for session `ordinal` (1..=12).
    pub fn session_spec(&self, ordinal: u32) -> WalkerSpec {
        let g = self.progress(ordinal);
        WalkerSpec {
            asymmetry: self.initial_asymmetry * g,
            timing_asymmetry: self.initial_timing_asymmetry * g,
            trunk_lean_deg: self.initial_lean_deg * (0.4 + 0.6 * g),
            ..self.base.clone()
        }
    }

    /// Coefficient the simulated participant would pick in session `ordinal`.
    pub fn perceived_alpha(&self, ordinal: u32) -> f64 {
        let spec = self.session_spec(ordinal);
        (4.0 - 10.0 * spec.asymmetry - 0.08 * spec.trunk_lean_deg + self.alpha_bias).clamp(-4.4, 4.4)
    }

    /// Chance of completing a trial without the handrails.
    pub fn handrail_free_probability(&self, ordinal: u32) -> f64 {
        (0.25 + 0.07 * ordinal as f64).min(0.95)
    }
}

/// The cohort; the first participant walks perfectly symmetrically with no noise.
pub fn demo_cohort(cfg: &DemoConfig) -> Vec<DemoParticipant> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 1));
    (0..cfg.participants)
        .map(|i| {
            let id = format!("P{:02}", i + 1);
            if i == 0 {
                return DemoParticipant {
                    id,
                    base: WalkerSpec::default(),
                    initial_asymmetry: 0.0,
                    initial_timing_asymmetry: 0.0,
                    initial_lean_deg: 0.0,
                    alpha_bias: 0.0,
                    learning_rate: 0.0,
                };
            }
            DemoParticipant {
                id,
                base: WalkerSpec {
                    cycle_samples: rng.random_range(105..=130),
                    step_amplitude_m: rng.random_range(0.24..0.32),
                    trunk_sway_m: rng.random_range(0.015..0.04),
                    height_scale: rng.random_range(0.9..1.1),
                    noise_m: 0.002,
                    grf_noise_n: 4.0,
                    ..WalkerSpec::default()
                },
                initial_asymmetry: rng.random_range(0.15..0.35),
                initial_timing_asymmetry: rng.random_range(0.02..0.07),
                initial_lean_deg: rng.random_range(5.0..15.0),
                alpha_bias: rng.random_range(-0.8..0.8),
                learning_rate: rng.random_range(0.1..0.3),
            }
        })
        .collect()
}

/// Able-bodied reference walkers.
pub fn normative_walkers(cfg: &DemoConfig) -> Vec<(String, WalkerSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 2));
    (0..cfg.walkers)
        .map(|i| {
            let spec = WalkerSpec {
                cycle_samples: rng.random_range(95..=125),
                step_amplitude_m: rng.random_range(0.28..0.38),
                trunk_sway_m: rng.random_range(0.01..0.03),
                height_scale: rng.random_range(0.88..1.12),
                noise_m: 0.002,
                grf_noise_n: 4.0,
                ..WalkerSpec::default()
            };
            (format!("W{:02}", i + 1), spec)
        })
        .collect()
}

/// Where a generated cohort lives.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoLayout {
    pub root: PathBuf,
    pub trajectory_dir: PathBuf,
    pub grf_dir: PathBuf,
    pub normative_dir: PathBuf,
    pub store_dir: PathBuf,
}

impl DemoLayout {
    pub fn under(root: impl AsRef<Path>) -> Self {
        let root = root.as_ref().to_path_buf();
        DemoLayout {
            trajectory_dir: root.join("trajectories"),
            grf_dir: root.join("grf"),
            normative_dir: root.join("normative"),
            store_dir: root.join("store"),
            root,
        }
    }
}

fn write_trial(dir: &Path, grf_dir: &Path, name: &str, trial: &SyntheticTrial) -> Result<()> {
    write_trajectory(dir.join(format!("{name}.csv")), &trial.trajectory)?;
    write_force_plate(grf_dir.join(format!("{name}.robotic.csv")), &trial.robotic)?;
    write_force_plate(grf_dir.join(format!("{name}.contralateral.csv")), &trial.contralateral)
}

fn all_keys(participant: &str) -> impl Iterator<Item = SessionKey> + '_ {
    (1..=DAYS).flat_map(move |d| (1..=SESSIONS_PER_DAY).map(move |s| SessionKey::new(participant, d, s).expect("valid key")))
}

/// Writes every participant session and every normative walker as CSV.
pub fn write_cohort(root: impl AsRef<Path>, cfg: &DemoConfig) -> Result<DemoLayout> {
    let layout = DemoLayout::under(root);
    for d in [&layout.trajectory_dir, &layout.grf_dir, &layout.normative_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    for (i, p) in demo_cohort(cfg).iter().enumerate() {
        for key in all_keys(&p.id) {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 1000 + 100 * i as u64 + key.ordinal() as u64));
            let trial = synthesize_trial(&p.session_spec(key.ordinal()), cfg.cycles_per_trial, cfg.margin, &mut rng)?;
            write_trial(&layout.trajectory_dir, &layout.grf_dir, &key.id(), &trial)?;
        }
    }
    for (i, (name, spec)) in normative_walkers(cfg).iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 100_000 + i as u64));
        let trial = synthesize_trial(spec, cfg.cycles_per_trial, cfg.margin, &mut rng)?;
        write_trial(&layout.normative_dir, &layout.normative_dir, name, &trial)?;
    }
    Ok(layout)
}

/// Drives the full 12-session protocol for every participant through the
/// service: trials, speed requests, evaluations and confidence ratings.
pub fn simulate_protocol(
    service: &mut SessionService,
    cohort: &[DemoParticipant],
    models: &dyn Fn(&SessionKey) -> Option<ParticipantModel>,
    normative: &NormativeModel,
    seed: u64,
) -> Result<()> {
    for (i, p) in cohort.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 10_000 + i as u64));
        let noise = Normal::new(0.0, 0.35).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for key in all_keys(&p.id) {
            let ordinal = key.ordinal();
            service.create_session(&p.id, key.day, key.session_index)?;
            for index in 1..=TRIALS_PER_SESSION {
                let handrail_free = rng.random_bool(p.handrail_free_probability(ordinal));
                service.record_trial(
                    &key,
                    NewTrial {
                        index,
                        handrail_free,
                        duration_s: 120.0,
                    },
                )?;
                if key.day > 1 && index % TRIALS_PER_BLOCK == 0 {
                    service.request_speed_change(&key, 1)?;
                }
            }
            let pm = models(&key).ok_or_else(|| Error::NotFound(format!("participant model for {key}")))?;
            let slots = service.begin_evaluation(&key, &pm, normative, Some(sub_seed(seed, 20_000 + 100 * i as u64 + ordinal as u64)))?;
            let target = p.perceived_alpha(ordinal);
            for (n, slot) in slots.iter().enumerate() {
                let slider = service
                    .session(&key)?
                    .evaluation
                    .as_ref()
                    .map(|e| e.slots[n].slider)
                    .expect("evaluation begun");
                let alpha = (target + rng.sample(noise)).clamp(slider.min_alpha, slider.max_alpha);
                let ts = 1_700_000_000_000 + ordinal as u64 * 86_400_000 + n as u64 * 20_000;
                service.record_selection(&slot.slot_id, alpha, ts)?;
            }
            if key.session_index == SESSIONS_PER_DAY {
                let rating = (3 + ordinal / 2).min(10) as u8;
                service.record_confidence(crate::session::ConfidenceReport {
                    participant_id: p.id.clone(),
                    day: key.day,
                    rating,
                    free_text_cues: vec!["step length".into(), "trunk lean".into()],
                })?;
            }
        }
    }
    Ok(())
}

/// Generates the cohort under `output_dir/data`, writes `output_dir/demo.toml`,
/// simulates the protocol into the store and runs every stage.
pub fn run_demo(output_dir: impl AsRef<Path>, cfg: &DemoConfig) -> std::result::Result<Pipeline, StageError> {
    let root = output_dir.as_ref();
    let at = |stage: Stage| move |error: Error| StageError { stage, error };
    let layout = write_cohort(root.join("data"), cfg).map_err(at(Stage::Ingest))?;
    if layout.store_dir.exists() {
        fs::remove_dir_all(&layout.store_dir).map_err(|e| at(Stage::Ingest)(Error::io(&layout.store_dir, e)))?;
    }
    let config = PipelineConfig {
        store_dir: Some("data/store".into()),
        seed: cfg.seed,
        ..PipelineConfig::new(
            "data/trajectories".into(),
            "data/grf".into(),
            "data/normative".into(),
            "out".into(),
        )
    };
    let config_path = root.join("demo.toml");
    let text = config.to_toml().map_err(at(Stage::Ingest))?;
    fs::write(&config_path, text).map_err(|e| at(Stage::Ingest)(Error::io(&config_path, e)))?;
    let config = PipelineConfig::load(&config_path).map_err(at(Stage::Ingest))?;

    let mut pipeline = Pipeline::new(config);
    pipeline.run_until(Stage::Fit)?;
    let mut service = SessionService::open(&layout.store_dir).map_err(at(Stage::Fit))?;
    let nm = pipeline.normative.clone().expect("fit stage ran");
    let models = |k: &SessionKey| pipeline.participant_models.get(k).cloned();
    simulate_protocol(&mut service, &demo_cohort(cfg), &models, &nm, cfg.seed).map_err(at(Stage::Fit))?;
    pipeline.run_until(Stage::Report)?;
    pipeline.write_manifest().map_err(at(Stage::Report))?;
    Ok(pipeline)
}
