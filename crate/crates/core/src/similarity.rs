//! Principal angles between PCA loading subspaces and the gait-deviation
//! metrics derived from them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality tolerance for subspace bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Row-basis `k x d` with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector `Q^T Q` onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        self.basis.transpose() * &self.basis
    }
}

/// Orthonormal basis for the row space of `w`, via Householder QR of `w^T`.
pub fn orthonormal_basis(w: &DMatrix<f64>) -> Result<Subspace> {
    let (k, d) = w.shape();
    if k == 0 || k > d {
        return Err(Error::RankDeficient(format!("{k} rows in ambient dimension {d}")));
    }
    let qr = w.transpose().qr();
    let r = qr.r();
    let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..k {
        if r[(i, i)].abs() <= ORTHONORMAL_TOL * scale.max(1.0) {
            return Err(Error::RankDeficient(format!("row {i} is linearly dependent on the previous rows")));
        }
    }
    let q = qr.q();
    let mut basis = q.transpose();
    // second pass of Gram-Schmidt bounds drift for nearly dependent input
    for i in 0..k {
        for j in 0..i {
            let dot = basis.row(i).dot(&basis.row(j));
            let rj = basis.row(j).into_owned();
            let mut ri = basis.row_mut(i);
            ri -= rj * dot;
        }
        let norm = basis.row(i).norm();
        basis.row_mut(i).unscale_mut(norm);
    }
    Ok(Subspace { basis })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngleResult {
    /// Cosines, descending, in [0, 1].
    pub sigmas: Vec<f64>,
    /// Radians, ascending, in [0, pi/2].
    pub thetas: Vec<f64>,
    /// Principal vectors in the first subspace, one per row (`m x d`).
    pub left_vectors: DMatrix<f64>,
    /// Principal vectors in the second subspace, one per row (`m x d`).
    pub right_vectors: DMatrix<f64>,
}

impl PrincipalAngleResult {
    pub fn m(&self) -> usize {
        self.sigmas.len()
    }

    pub fn thetas_deg(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| t.to_degrees()).collect()
    }
}

/// Singular values of `M` (rows x cols), descending, with the thin factors.
fn sorted_svd(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    (s, u_sorted, v_sorted)
}

/// Principal angles from the SVD of `Q_a Q_b^T`.
///
/// Cosines come straight from the singular values. Angles below 45 degrees
/// are taken from the sines (singular values of the smaller basis with its
/// component in the larger subspace removed), where arccos loses accuracy.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<PrincipalAngleResult> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch(a.ambient_dim(), b.ambient_dim()));
    }
    let m = a.dim().min(b.dim());
    let cross = &a.basis * b.basis.transpose();
    let (s, u, v) = sorted_svd(cross);
    let sigmas: Vec<f64> = s[..m].iter().map(|v| v.clamp(0.0, 1.0)).collect();

    let (small, large) = if a.dim() <= b.dim() { (a, b) } else { (b, a) };
    let residual = &small.basis - (&small.basis * large.basis.transpose()) * &large.basis;
    let mut sines: Vec<f64> = residual.singular_values().iter().map(|v| v.clamp(0.0, 1.0)).collect();
    sines.sort_by(f64::total_cmp);

    let mut thetas: Vec<f64> = sigmas
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| if c * c >= 0.5 { s.asin() } else { c.acos() })
        .collect();
    for i in 1..thetas.len() {
        if thetas[i] < thetas[i - 1] {
            thetas[i] = thetas[i - 1];
        }
    }

    let left_vectors = (a.basis.transpose() * u.columns(0, m)).transpose();
    let right_vectors = (b.basis.transpose() * v.columns(0, m)).transpose();
    Ok(PrincipalAngleResult {
        sigmas,
        thetas,
        left_vectors,
        right_vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMode {
    /// Sum of principal angles in degrees; 0 means identical subspaces.
    #[default]
    SumAngles,
    /// Sum of cosines; equals `m` for identical subspaces.
    SumCosines,
}

impl DeviationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviationMode::SumAngles => "sum_angles",
            DeviationMode::SumCosines => "sum_cosines",
        }
    }
}

impl fmt::Display for DeviationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_angles" => Ok(DeviationMode::SumAngles),
            "sum_cosines" => Ok(DeviationMode::SumCosines),
            other => Err(Error::InvalidArgument(format!("unknown deviation mode {other:?}"))),
        }
    }
}

pub fn gait_deviation(r: &PrincipalAngleResult, mode: DeviationMode) -> f64 {
    match mode {
        DeviationMode::SumAngles => r.thetas.iter().map(|t| t.to_degrees()).sum(),
        DeviationMode::SumCosines => r.sigmas.iter().sum(),
    }
}

/// One row of the deviation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub session_id: String,
    pub mode: DeviationMode,
    pub value: f64,
    pub m: usize,
}

/// Deviation between participant loadings and normative loadings.
pub fn loading_deviation(participant: &DMatrix<f64>, normative: &DMatrix<f64>, mode: DeviationMode) -> Result<(f64, usize)> {
    let a = orthonormal_basis(participant)?;
    let b = orthonormal_basis(normative)?;
    let r = principal_angles(&a, &b)?;
    Ok((gait_deviation(&r, mode), r.m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// Deterministic pseudo-random entries in [-1, 1).
    fn noise(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        DMatrix::from_fn(rows, cols, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
    }

    fn axes(d: usize, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), d, |r, c| if c == idx[r] { 1.0 } else { 0.0 })
    }

    #[test]
    fn identity_rows_are_unchanged() {
        let w = axes(6, &[0, 1, 2]);
        let q = orthonormal_basis(&w).unwrap();
        assert!((q.basis() - &w).abs().max() < 1e-15);
    }

    #[test]
    fn scaled_rows_span_the_same_subspace() {
        let w = noise(3, 8, 1);
        let a = orthonormal_basis(&w).unwrap();
        let b = orthonormal_basis(&(&w * 3.0)).unwrap();
        let r = principal_angles(&a, &b).unwrap();
        assert!(r.thetas.iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn dependent_rows_are_rejected() {
        let mut w = DMatrix::from_fn(3, 5, |r, c| (r + c) as f64);
        let r0 = w.row(0).into_owned();
        w.row_mut(2).copy_from(&(r0 * 2.0));
        assert!(matches!(orthonormal_basis(&w), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn identical_and_orthogonal_subspaces() {
        let a = orthonormal_basis(&axes(10, &[0, 1, 2, 3])).unwrap();
        let b = orthonormal_basis(&axes(10, &[4, 5, 6, 7])).unwrap();
        let same = principal_angles(&a, &a).unwrap();
        assert!(gait_deviation(&same, DeviationMode::SumAngles).abs() < 1e-9);
        assert!((gait_deviation(&same, DeviationMode::SumCosines) - 4.0).abs() < 1e-9);
        let orth = principal_angles(&a, &b).unwrap();
        assert!((gait_deviation(&orth, DeviationMode::SumAngles) - 360.0).abs() < 1e-9);
        assert!(gait_deviation(&orth, DeviationMode::SumCosines).abs() < 1e-9);
    }

    #[test]
    fn zero_and_forty_five_degrees() {
        let a = orthonormal_basis(&axes(3, &[0, 1])).unwrap();
        let b = orthonormal_basis(&DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2])).unwrap();
        let r = principal_angles(&a, &b).unwrap();
        let deg = r.thetas_deg();
        assert!(deg[0].abs() < 1e-12 && (deg[1] - 45.0).abs() < 1e-12, "{deg:?}");
        assert!((gait_deviation(&r, DeviationMode::SumAngles) - 45.0).abs() < 1e-12);
        assert!((gait_deviation(&r, DeviationMode::SumCosines) - (1.0 + FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn principal_vectors_realize_the_cosines() {
        let a = orthonormal_basis(&noise(3, 7, 2)).unwrap();
        let b = orthonormal_basis(&noise(2, 7, 3)).unwrap();
        let r = principal_angles(&a, &b).unwrap();
        for k in 0..r.m() {
            let dot = r.left_vectors.row(k).dot(&r.right_vectors.row(k));
            assert!((dot - r.sigmas[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn ambient_mismatch() {
        let a = orthonormal_basis(&axes(4, &[0])).unwrap();
        let b = orthonormal_basis(&axes(5, &[0])).unwrap();
        assert!(matches!(principal_angles(&a, &b), Err(Error::DimensionMismatch(4, 5))));
    }
}
