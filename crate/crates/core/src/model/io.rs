use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normative::{NormativeModel, Pooling};
use super::participant::ParticipantModel;
use super::sinusoid::SinusoidFit;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Row-major matrix with an explicit shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixJson {
    shape: [usize; 2],
    data: Vec<f64>,
}

impl MatrixJson {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let data = (0..m.nrows()).flat_map(|r| m.row(r).iter().copied().collect::<Vec<_>>()).collect();
        MatrixJson {
            shape: [m.nrows(), m.ncols()],
            data,
        }
    }

    fn to_matrix(&self, name: &str) -> Result<DMatrix<f64>> {
        let [r, c] = self.shape;
        if r * c != self.data.len() {
            return Err(Error::InvalidArgument(format!(
                "{name}: shape {r}x{c} does not match {} values",
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r, c, &self.data))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VectorJson {
    shape: [usize; 1],
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParticipantFile {
    format_version: u32,
    kind: String,
    units: String,
    rate_hz: f64,
    cycle_samples: f64,
    n_components: usize,
    t_length: usize,
    mean_posture: VectorJson,
    loadings: MatrixJson,
    scores: MatrixJson,
    explained_variance_ratio: Vec<f64>,
    eigenvalues: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SinusoidJson {
    amplitude: f64,
    omega_rad_per_sample: f64,
    phase_rad: f64,
    r2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NormativeFile {
    format_version: u32,
    kind: String,
    cycle_samples: f64,
    pooling: Pooling,
    n_walkers: usize,
    loadings: MatrixJson,
    sinusoids: Vec<SinusoidJson>,
    explained_variance_ratio: Vec<f64>,
}

fn check_version(found: u32, kind: &str, expected_kind: &str) -> Result<()> {
    if found != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!("unsupported model format_version {found}")));
    }
    if kind != expected_kind {
        return Err(Error::InvalidArgument(format!("expected a {expected_kind} model, found {kind}")));
    }
    Ok(())
}

pub fn write_participant(path: impl AsRef<Path>, m: &ParticipantModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, participant_to_json(m)?).map_err(|e| Error::io(path, e))
}

pub fn participant_to_json(m: &ParticipantModel) -> Result<String> {
    let file = ParticipantFile {
        format_version: MODEL_FORMAT_VERSION,
        kind: "participant".into(),
        units: "m".into(),
        rate_hz: m.rate_hz,
        cycle_samples: m.cycle_samples,
        n_components: m.n_components(),
        t_length: m.t_length(),
        mean_posture: VectorJson {
            shape: [m.mean_posture.len()],
            data: m.mean_posture.iter().copied().collect(),
        },
        loadings: MatrixJson::from_matrix(&m.loadings),
        scores: MatrixJson::from_matrix(&m.scores),
        explained_variance_ratio: m.explained_variance_ratio.clone(),
        eigenvalues: m.eigenvalues.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_participant(path: impl AsRef<Path>) -> Result<ParticipantModel> {
    let path = path.as_ref();
    participant_from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn participant_from_json(text: &str) -> Result<ParticipantModel> {
    let f: ParticipantFile = serde_json::from_str(text)?;
    check_version(f.format_version, &f.kind, "participant")?;
    let loadings = f.loadings.to_matrix("loadings")?;
    let scores = f.scores.to_matrix("scores")?;
    if loadings.nrows() != f.n_components || scores.shape() != (f.t_length, f.n_components) {
        return Err(Error::InvalidArgument("participant model shapes are inconsistent".into()));
    }
    Ok(ParticipantModel {
        mean_posture: DVector::from_vec(f.mean_posture.data),
        loadings,
        scores,
        explained_variance_ratio: f.explained_variance_ratio,
        eigenvalues: f.eigenvalues,
        rate_hz: f.rate_hz,
        cycle_samples: f.cycle_samples,
    })
}

pub fn write_normative(path: impl AsRef<Path>, m: &NormativeModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, normative_to_json(m)?).map_err(|e| Error::io(path, e))
}

pub fn normative_to_json(m: &NormativeModel) -> Result<String> {
    let file = NormativeFile {
        format_version: MODEL_FORMAT_VERSION,
        kind: "normative".into(),
        cycle_samples: m.cycle_samples,
        pooling: m.pooling,
        n_walkers: m.n_walkers,
        loadings: MatrixJson::from_matrix(&m.loadings),
        sinusoids: m
            .sinusoids
            .iter()
            .map(|s| SinusoidJson {
                amplitude: s.amplitude,
                omega_rad_per_sample: s.omega,
                phase_rad: s.phase,
                r2: s.r2,
            })
            .collect(),
        explained_variance_ratio: m.explained_variance_ratio.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn read_normative(path: impl AsRef<Path>) -> Result<NormativeModel> {
    let path = path.as_ref();
    normative_from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn normative_from_json(text: &str) -> Result<NormativeModel> {
    let f: NormativeFile = serde_json::from_str(text)?;
    check_version(f.format_version, &f.kind, "normative")?;
    Ok(NormativeModel {
        loadings: f.loadings.to_matrix("loadings")?,
        sinusoids: f
            .sinusoids
            .into_iter()
            .map(|s| SinusoidFit {
                amplitude: s.amplitude,
                omega: s.omega_rad_per_sample,
                phase: s.phase_rad,
                r2: s.r2,
            })
            .collect(),
        explained_variance_ratio: f.explained_variance_ratio,
        cycle_samples: f.cycle_samples,
        pooling: f.pooling,
        n_walkers: f.n_walkers,
    })
}
