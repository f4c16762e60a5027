use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::pca::{center, Pca};
use super::sinusoid::{fit_sinusoid_with, SinusoidFit, SinusoidOptions};
use crate::error::{Error, Result};
use crate::joints::N_COLS;
use crate::mocap::GaitCycleSet;

pub const NORMATIVE_COMPONENTS: usize = 4;
pub const NORMALIZED_CYCLE_SAMPLES: usize = 101;

/// How walkers are combined before the normative PCA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum Pooling {
    /// Every cycle resampled to `samples_per_cycle`, each walker centered on
    /// its own mean, then concatenated.
    TimeNormalized { samples_per_cycle: usize },
    /// Walkers centered and concatenated at their native sampling.
    RawConcatenated,
}

impl Default for Pooling {
    fn default() -> Self {
        Pooling::TimeNormalized {
            samples_per_cycle: NORMALIZED_CYCLE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormativeOptions {
    pub pooling: Pooling,
    pub sinusoid: SinusoidOptions,
}

/// Four-component normative walking model with sinusoidal scores.
#[derive(Debug, Clone, PartialEq)]
pub struct NormativeModel {
    /// `4 x 45`, orthonormal rows.
    pub loadings: DMatrix<f64>,
    pub sinusoids: Vec<SinusoidFit>,
    pub explained_variance_ratio: Vec<f64>,
    /// Cycle length (samples) of the time base the frequencies refer to.
    pub cycle_samples: f64,
    pub pooling: Pooling,
    pub n_walkers: usize,
}

impl NormativeModel {
    pub fn fit_r2(&self) -> Vec<f64> {
        self.sinusoids.iter().map(|s| s.r2).collect()
    }

    /// Same model with frequencies rescaled to a cycle of `cycle_samples`.
    pub fn retimed(&self, cycle_samples: f64) -> NormativeModel {
        let factor = self.cycle_samples / cycle_samples;
        NormativeModel {
            sinusoids: self
                .sinusoids
                .iter()
                .map(|s| SinusoidFit {
                    omega: s.omega * factor,
                    ..*s
                })
                .collect(),
            cycle_samples,
            ..self.clone()
        }
    }
}

/// Resamples one cycle `[start, end)` to `m` periodic samples by linear interpolation.
fn resample_cycle(data: &DMatrix<f64>, start: usize, end: usize, m: usize) -> DMatrix<f64> {
    let len = (end - start) as f64;
    let last = data.nrows() - 1;
    DMatrix::from_fn(m, data.ncols(), |k, c| {
        let pos = start as f64 + len * k as f64 / m as f64;
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        let i1 = (i0 + 1).min(last);
        data[(i0.min(last), c)] * (1.0 - frac) + data[(i1, c)] * frac
    })
}

fn pool(dataset: &[GaitCycleSet], pooling: Pooling) -> (DMatrix<f64>, f64) {
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(dataset.len());
    let mut cycle_total = 0.0;
    for walker in dataset {
        let raw = walker.trajectory.samples();
        let block = match pooling {
            Pooling::TimeNormalized { samples_per_cycle } => {
                let parts: Vec<DMatrix<f64>> = walker
                    .cycle_bounds
                    .iter()
                    .map(|&(a, b)| resample_cycle(raw, a, b, samples_per_cycle))
                    .collect();
                stack(&parts)
            }
            Pooling::RawConcatenated => {
                cycle_total += walker.mean_cycle_samples();
                raw.clone()
            }
        };
        let mean = block.row_mean().transpose();
        blocks.push(center(&block, &mean));
    }
    let cycle_samples = match pooling {
        Pooling::TimeNormalized { samples_per_cycle } => samples_per_cycle as f64,
        Pooling::RawConcatenated => cycle_total / dataset.len() as f64,
    };
    (stack(&blocks), cycle_samples)
}

fn stack(parts: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(rows, N_COLS);
    let mut r = 0;
    for p in parts {
        out.rows_mut(r, p.nrows()).copy_from(p);
        r += p.nrows();
    }
    out
}

pub fn fit_normative_model(dataset: &[GaitCycleSet]) -> Result<NormativeModel> {
    fit_normative_model_with(dataset, &NormativeOptions::default())
}

pub fn fit_normative_model_with(dataset: &[GaitCycleSet], opts: &NormativeOptions) -> Result<NormativeModel> {
    if dataset.is_empty() {
        return Err(Error::TooFew {
            what: "walkers in the normative dataset",
            needed: 1,
            got: 0,
        });
    }
    let (pooled, cycle_samples) = pool(dataset, opts.pooling);
    let pca = Pca::fit(&pooled)?;
    let rank = pca.effective_rank(1e-10);
    if rank < NORMATIVE_COMPONENTS {
        return Err(Error::FewerThanFourComponents(rank));
    }
    let loadings = pca.loadings.rows(0, NORMATIVE_COMPONENTS).into_owned();
    // pooled blocks are already centered per walker
    let scores = &pooled * loadings.transpose();
    let sinusoids = scores
        .column_iter()
        .map(|col| {
            let series: Vec<f64> = col.iter().copied().collect();
            fit_sinusoid_with(&series, &opts.sinusoid)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NormativeModel {
        loadings,
        sinusoids,
        explained_variance_ratio: pca.explained_variance_ratio()[..NORMATIVE_COMPONENTS].to_vec(),
        cycle_samples,
        pooling: opts.pooling,
        n_walkers: dataset.len(),
    })
}

/// Sinusoidal scores `H_s` (`t_length x 4`) evaluated at `t = 1..=t_length`.
pub fn normative_scores(model: &NormativeModel, t_length: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t_length, model.sinusoids.len(), |r, i| model.sinusoids[i].eval((r + 1) as f64))
}

/// Normative motion component `N = H_s W_n` (`t_length x 45`).
pub fn reconstruct_normative(model: &NormativeModel, t_length: usize) -> DMatrix<f64> {
    normative_scores(model, t_length) * &model.loadings
}
