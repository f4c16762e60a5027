use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Covariance-eigendecomposition PCA of a `t x d` data matrix.
#[derive(Debug, Clone)]
pub struct Pca {
    pub mean: DVector<f64>,
    /// `d x d`, one component per row, sorted by descending eigenvalue.
    pub loadings: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(data: &DMatrix<f64>) -> Result<Self> {
        let (t, d) = data.shape();
        if t < 2 {
            return Err(Error::TooFew {
                what: "samples for PCA",
                needed: 2,
                got: t,
            });
        }
        let mean = data.row_mean().transpose();
        let centered = center(data, &mean);
        let cov = (centered.transpose() * &centered) / (t as f64 - 1.0);
        let total: f64 = cov.diagonal().iter().sum();
        if !(total > 0.0) {
            return Err(Error::RankDeficient("zero total variance".into()));
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

        let mut loadings = DMatrix::zeros(d, d);
        let mut eigenvalues = Vec::with_capacity(d);
        for (row, &k) in order.iter().enumerate() {
            let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
            apply_sign_convention(v.as_mut_slice());
            loadings.row_mut(row).copy_from(&v.transpose());
            eigenvalues.push(eig.eigenvalues[k].max(0.0));
        }
        Ok(Pca {
            mean,
            loadings,
            eigenvalues,
        })
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total = self.total_variance();
        self.eigenvalues.iter().map(|e| e / total).collect()
    }

    /// Smallest component count whose cumulative explained variance reaches `threshold`.
    pub fn components_for_variance(&self, threshold: f64) -> usize {
        let mut cum = 0.0;
        for (i, r) in self.explained_variance_ratio().iter().enumerate() {
            cum += r;
            // tolerance absorbs round-off when the threshold is hit exactly
            if cum >= threshold - 1e-12 {
                return i + 1;
            }
        }
        self.eigenvalues.len()
    }

    /// Components with variance above `rel_tol` of the total.
    pub fn effective_rank(&self, rel_tol: f64) -> usize {
        let total = self.total_variance();
        self.eigenvalues.iter().filter(|&&e| e > rel_tol * total).count()
    }
}

pub(crate) fn center(data: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = data.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    out
}

/// Flip so the largest-magnitude entry is positive (first such entry on ties).
pub(crate) fn apply_sign_convention(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}
