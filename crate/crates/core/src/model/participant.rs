use nalgebra::{DMatrix, DVector};

use super::pca::{center, Pca};
use crate::error::{Error, Result};
use crate::joints::N_COLS;
use crate::mocap::{GaitCycleSet, JointTrajectory};

/// Variance share the participant model must explain.
pub const PARTICIPANT_VARIANCE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentSelection {
    /// Smallest count reaching this cumulative explained-variance share.
    Variance(f64),
    /// Exactly this many components (clamped to 45).
    Count(usize),
}

impl Default for ComponentSelection {
    fn default() -> Self {
        ComponentSelection::Variance(PARTICIPANT_VARIANCE_THRESHOLD)
    }
}

/// PCA factorization of one participant's trajectory: mean posture, loadings
/// and scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantModel {
    /// Time-mean of each of the 45 coordinates, meters.
    pub mean_posture: DVector<f64>,
    /// `n x 45`, orthonormal rows.
    pub loadings: DMatrix<f64>,
    /// `t x n`.
    pub scores: DMatrix<f64>,
    /// Share of total variance per retained component.
    pub explained_variance_ratio: Vec<f64>,
    /// Covariance eigenvalues for all 45 components, descending.
    pub eigenvalues: Vec<f64>,
    pub rate_hz: f64,
    /// Mean gait-cycle length in samples, used to retime normative motion.
    pub cycle_samples: f64,
}

impl ParticipantModel {
    pub fn n_components(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn t_length(&self) -> usize {
        self.scores.nrows()
    }

    pub fn cumulative_explained(&self) -> f64 {
        self.explained_variance_ratio.iter().sum()
    }
}

pub fn fit_participant_model(cycles: &GaitCycleSet) -> Result<ParticipantModel> {
    fit_participant_model_with(cycles, ComponentSelection::default())
}

pub fn fit_participant_model_with(cycles: &GaitCycleSet, selection: ComponentSelection) -> Result<ParticipantModel> {
    fit_trajectory(&cycles.trajectory, cycles.mean_cycle_samples(), selection)
}

/// Fits directly on a trajectory whose mean cycle length is already known.
pub fn fit_trajectory(traj: &JointTrajectory, cycle_samples: f64, selection: ComponentSelection) -> Result<ParticipantModel> {
    let data = traj.samples();
    let t = data.nrows();
    if t < N_COLS + 1 {
        return Err(Error::TooFew {
            what: "samples (more rows than columns) for the participant model",
            needed: N_COLS + 1,
            got: t,
        });
    }
    let pca = Pca::fit(data)?;
    let n = match selection {
        ComponentSelection::Variance(v) => pca.components_for_variance(v),
        ComponentSelection::Count(k) => k.min(N_COLS),
    };
    let loadings = pca.loadings.rows(0, n).into_owned();
    let centered = center(data, &pca.mean);
    let scores = &centered * loadings.transpose();
    let ratio = pca.explained_variance_ratio();
    Ok(ParticipantModel {
        mean_posture: pca.mean.clone(),
        loadings,
        scores,
        explained_variance_ratio: ratio[..n].to_vec(),
        eigenvalues: pca.eigenvalues,
        rate_hz: traj.rate_hz(),
        cycle_samples,
    })
}

/// Participant motion component `P = H_p W_p` (`t x 45`), without the mean posture.
pub fn reconstruct_participant(model: &ParticipantModel) -> DMatrix<f64> {
    if model.n_components() == 0 {
        return DMatrix::zeros(model.t_length(), N_COLS);
    }
    &model.scores * &model.loadings
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_data(t: usize) -> JointTrajectory {
        let u: Vec<f64> = (0..N_COLS).map(|c| ((c as f64) * 0.3).sin()).collect();
        let v: Vec<f64> = (0..N_COLS).map(|c| ((c as f64) * 0.7 + 1.0).cos()).collect();
        let m = DMatrix::from_fn(t, N_COLS, |r, c| {
            let a = (r as f64 * 0.05).sin() * 2.0;
            let b = (r as f64 * 0.11).cos();
            0.5 + 0.01 * c as f64 + a * u[c] + b * v[c]
        });
        JointTrajectory::new(m, 100.0).unwrap()
    }

    #[test]
    fn planar_data_needs_two_components() {
        let traj = plane_data(300);
        let m = fit_trajectory(&traj, 100.0, ComponentSelection::default()).unwrap();
        assert_eq!(m.n_components(), 2);
        let p = reconstruct_participant(&m);
        let c = center(traj.samples(), &m.mean_posture);
        assert!((p - c).abs().max() < 1e-9);
    }

    #[test]
    fn zero_components_reconstruct_to_zero() {
        let m = fit_trajectory(&plane_data(100), 100.0, ComponentSelection::Count(0)).unwrap();
        let p = reconstruct_participant(&m);
        assert_eq!(p.shape(), (100, N_COLS));
        assert!(p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn too_short_input() {
        let err = fit_trajectory(&plane_data(40), 100.0, ComponentSelection::default()).unwrap_err();
        assert!(matches!(err, Error::TooFew { .. }));
    }

    #[test]
    fn scores_are_zero_mean() {
        let m = fit_trajectory(&plane_data(250), 100.0, ComponentSelection::Count(5)).unwrap();
        for c in m.scores.column_iter() {
            assert!(c.mean().abs() < 1e-9);
        }
    }
}
