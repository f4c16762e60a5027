//! Session-trend statistics: a Gaussian random-intercept mixed model fitted
//! by maximum likelihood, and per-view selection summaries.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::synthesis::ViewingAngle;

/// Grid resolution of the variance-ratio pre-scan.
pub const GRID_POINTS: usize = 64;
const RHO_MAX: f64 = 1.0 - 1e-10;
const GOLDEN_TOL: f64 = 1e-12;
const MAX_GOLDEN_ITERS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationMeta {
    pub method: String,
    pub optimizer: String,
    pub iterations: usize,
    pub converged: bool,
    pub df: f64,
    pub p_value_note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModelFit {
    pub fixed_intercept: f64,
    pub fixed_slope: f64,
    /// Predicted per-group deviations, keyed by group label.
    pub random_intercepts: BTreeMap<String, f64>,
    /// Standard deviation of the random intercept.
    pub sigma_between: f64,
    /// Residual standard deviation.
    pub sigma_within: f64,
    pub slope_se: f64,
    pub t_stat: f64,
    pub p_value: Option<f64>,
    /// Variance ratio `sigma_between^2 / sigma_within^2` at the optimum.
    pub variance_ratio: f64,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub n_groups: usize,
    pub meta: EstimationMeta,
}

struct Group {
    x: Vec<f64>,
    y: Vec<f64>,
}

struct Profile {
    beta: Vector2<f64>,
    /// Information for the slope after profiling out the intercept.
    slope_info: f64,
    sigma2: f64,
    loglik: f64,
}

/// Data organized by group with the profiled ML objective over the variance ratio.
struct Problem {
    groups: Vec<(String, Group)>,
    n: usize,
}

impl Problem {
    /// GLS at variance ratio `lambda`, written as within-group scatter plus
    /// shrunken between-group terms around the shrinkage-weighted centroid.
    /// Solving in centered form keeps the intercept accurate when the
    /// between-group weights are tiny (large `lambda`).
    fn profile(&self, lambda: f64) -> Option<Profile> {
        let mut stats = Vec::with_capacity(self.groups.len());
        let (mut wsum, mut wxsum, mut wysum) = (0.0, 0.0, 0.0);
        let (mut wxx, mut wxy) = (0.0, 0.0);
        let mut logdet = 0.0;
        for (_, g) in &self.groups {
            let ng = g.x.len() as f64;
            let shrink = ng / (1.0 + ng * lambda);
            let mx = g.x.iter().sum::<f64>() / ng;
            let my = g.y.iter().sum::<f64>() / ng;
            for (&x, &y) in g.x.iter().zip(&g.y) {
                wxx += (x - mx) * (x - mx);
                wxy += (x - mx) * (y - my);
            }
            wsum += shrink;
            wxsum += shrink * mx;
            wysum += shrink * my;
            logdet += (1.0 + ng * lambda).ln();
            stats.push((shrink, mx, my));
        }
        let (xc, yc) = (wxsum / wsum, wysum / wsum);
        let (mut bxx, mut bxy) = (0.0, 0.0);
        for &(shrink, mx, my) in &stats {
            bxx += shrink * (mx - xc) * (mx - xc);
            bxy += shrink * (mx - xc) * (my - yc);
        }
        let slope_info = wxx + bxx;
        if !(slope_info > 0.0) || !(wsum > 0.0) {
            return None;
        }
        let b1 = (wxy + bxy) / slope_info;
        let beta = Vector2::new(yc - b1 * xc, b1);
        let q = self.quadratic(lambda, &beta).max(f64::MIN_POSITIVE);
        let n = self.n as f64;
        let sigma2 = q / n;
        let loglik = -0.5 * (n * (std::f64::consts::TAU * sigma2).ln() + logdet + n);
        Some(Profile {
            beta,
            slope_info,
            sigma2,
            loglik,
        })
    }

    fn quadratic(&self, lambda: f64, beta: &Vector2<f64>) -> f64 {
        self.groups
            .iter()
            .map(|(_, g)| {
                let ng = g.x.len() as f64;
                let resid: Vec<f64> = g.x.iter().zip(&g.y).map(|(&x, &y)| y - beta[0] - beta[1] * x).collect();
                let mean = resid.iter().sum::<f64>() / ng;
                let within: f64 = resid.iter().map(|r| (r - mean).powi(2)).sum();
                within + ng * mean * mean / (1.0 + ng * lambda)
            })
            .sum()
    }

    fn loglik_rho(&self, rho: f64) -> f64 {
        self.profile(rho_to_lambda(rho)).map_or(f64::NEG_INFINITY, |p| p.loglik)
    }
}

fn rho_to_lambda(rho: f64) -> f64 {
    rho / (1.0 - rho)
}

/// Grid points over the ratio search interval, as `rho = lambda / (1 + lambda)`.
pub fn search_grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|i| RHO_MAX * i as f64 / (GRID_POINTS - 1) as f64).collect()
}

/// Profiled log-likelihood at variance ratio `lambda` for the same data,
/// exposed for optimizer checks.
pub fn profile_log_likelihood(y: &[f64], session: &[f64], participant: &[String], lambda: f64) -> Result<f64> {
    let problem = build_problem(y, session, participant)?;
    problem
        .profile(lambda)
        .map(|p| p.loglik)
        .ok_or_else(|| Error::SingularDesign("normal equations are singular".into()))
}

fn build_problem(y: &[f64], session: &[f64], participant: &[String]) -> Result<Problem> {
    if y.len() != session.len() {
        return Err(Error::LengthMismatch(y.len(), session.len()));
    }
    if y.len() != participant.len() {
        return Err(Error::LengthMismatch(y.len(), participant.len()));
    }
    let mut map: BTreeMap<String, Group> = BTreeMap::new();
    for ((&yi, &xi), g) in y.iter().zip(session).zip(participant) {
        let e = map.entry(g.clone()).or_insert(Group { x: vec![], y: vec![] });
        e.x.push(xi);
        e.y.push(yi);
    }
    if map.len() < 2 {
        return Err(Error::TooFew {
            what: "groups",
            needed: 2,
            got: map.len(),
        });
    }
    if let Some((name, g)) = map.iter().find(|(_, g)| g.x.len() < 3) {
        return Err(Error::InvalidArgument(format!(
            "group {name} has {} observation(s), need at least 3",
            g.x.len()
        )));
    }
    let first = session[0];
    if session.iter().all(|&s| s == first) {
        return Err(Error::SingularDesign("session covariate is constant".into()));
    }
    Ok(Problem {
        groups: map.into_iter().collect(),
        n: y.len(),
    })
}

/// ML fit of `y = b0 + b1 * session + u_group + e` with Gaussian random
/// intercepts. The variance ratio is profiled out: a 64-point grid locates
/// the best bracket, then golden-section search refines it.
pub fn fit_random_intercept(y: &[f64], session: &[f64], participant: &[String]) -> Result<MixedModelFit> {
    let problem = build_problem(y, session, participant)?;
    let grid = search_grid();
    let values: Vec<f64> = grid.iter().map(|&r| problem.loglik_rho(r)).collect();
    let best = (0..grid.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (problem.loglik_rho(c), problem.loglik_rho(d));
    let mut iterations = 0;
    while hi - lo > GOLDEN_TOL && iterations < MAX_GOLDEN_ITERS {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = problem.loglik_rho(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = problem.loglik_rho(d);
        }
        iterations += 1;
    }
    let converged = hi - lo <= GOLDEN_TOL;
    if !converged {
        return Err(Error::NonConvergence {
            what: "variance-ratio golden-section search".into(),
            iterations,
        });
    }
    let mut rho = 0.5 * (lo + hi);
    if values[best] > problem.loglik_rho(rho) {
        rho = grid[best];
    }
    let lambda = rho_to_lambda(rho);
    let prof = problem
        .profile(lambda)
        .ok_or_else(|| Error::SingularDesign("normal equations are singular".into()))?;

    let slope_se = (prof.sigma2 / prof.slope_info).sqrt();
    let (b0, b1) = (prof.beta[0], prof.beta[1]);
    let random_intercepts = problem
        .groups
        .iter()
        .map(|(name, g)| {
            let ng = g.x.len() as f64;
            let mean_resid = g.x.iter().zip(&g.y).map(|(&x, &y)| y - b0 - b1 * x).sum::<f64>() / ng;
            (name.clone(), ng * lambda / (1.0 + ng * lambda) * mean_resid)
        })
        .collect();

    let n_groups = problem.groups.len();
    let df = problem.n as f64 - 2.0 - (n_groups as f64 - 1.0);
    let t_stat = if slope_se > 0.0 { b1 / slope_se } else { f64::INFINITY * b1.signum() };
    let p_value = if df > 0.0 && t_stat.is_finite() {
        StudentsT::new(0.0, 1.0, df).ok().map(|d| 2.0 * (1.0 - d.cdf(t_stat.abs())))
    } else {
        None
    };

    Ok(MixedModelFit {
        fixed_intercept: b0,
        fixed_slope: b1,
        random_intercepts,
        sigma_between: (lambda * prof.sigma2).sqrt(),
        sigma_within: prof.sigma2.sqrt(),
        slope_se,
        t_stat,
        p_value,
        variance_ratio: lambda,
        log_likelihood: prof.loglik,
        n_obs: problem.n,
        n_groups,
        meta: EstimationMeta {
            method: "ML (maximum likelihood, not REML)".into(),
            optimizer: format!("{GRID_POINTS}-point grid + golden-section over lambda/(1+lambda)"),
            iterations,
            converged,
            df,
            p_value_note: "two-sided, Student t with df = N - 2 - (groups - 1)".into(),
        },
    })
}

/// Ordinary least-squares slope and intercept, ignoring groups.
pub fn ols(y: &[f64], x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub mean_scomo: f64,
    pub sd_scomo: f64,
    pub n_repeats: usize,
    pub view: ViewingAngle,
}

/// Mean and sample (n-1) standard deviation of repeated selections.
pub fn summarize_selections(selections: &[f64], view: ViewingAngle) -> Result<SelectionSummary> {
    let n = selections.len();
    if n < 2 {
        return Err(Error::InsufficientRepeats(n));
    }
    let mean = selections.iter().sum::<f64>() / n as f64;
    let var = selections.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    Ok(SelectionSummary {
        mean_scomo: mean,
        sd_scomo: var.sqrt(),
        n_repeats: n,
        view,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(groups: usize, per: usize) -> Vec<String> {
        (0..groups).flat_map(|g| std::iter::repeat_n(format!("p{g}"), per)).collect()
    }

    #[test]
    fn selection_summaries() {
        let s = summarize_selections(&[1.2; 6], ViewingAngle::Frontal).unwrap();
        assert_eq!((s.mean_scomo, s.sd_scomo, s.n_repeats), (1.2, 0.0, 6));
        let s = summarize_selections(&[-1.0, 1.0], ViewingAngle::Frontal).unwrap();
        assert_eq!(s.mean_scomo, 0.0);
        assert!((s.sd_scomo - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(summarize_selections(&[0.3], ViewingAngle::Frontal), Err(Error::InsufficientRepeats(1))));
    }

    #[test]
    fn two_offset_groups_without_noise() {
        let sessions: Vec<f64> = (1..=6).map(f64::from).collect();
        let offset = 0.8;
        let mut y = Vec::new();
        let mut x = Vec::new();
        for sign in [-1.0, 1.0] {
            for &s in &sessions {
                x.push(s);
                y.push(1.0 + 0.5 * s + sign * offset / 2.0);
            }
        }
        let fit = fit_random_intercept(&y, &x, &labels(2, 6)).unwrap();
        assert!((fit.fixed_slope - 0.5).abs() < 1e-9);
        assert!((fit.random_intercepts["p0"] + offset / 2.0).abs() < 1e-6);
        assert!((fit.random_intercepts["p1"] - offset / 2.0).abs() < 1e-6);
        assert!(fit.sigma_within.powi(2) < 1e-10);
    }

    #[test]
    fn constant_session_is_singular() {
        let err = fit_random_intercept(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[2.0; 6], &labels(2, 3)).unwrap_err();
        assert!(matches!(err, Error::SingularDesign(_)));
    }

    #[test]
    fn needs_two_groups_with_three_observations() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!(fit_random_intercept(&[1.0, 2.0, 3.0, 4.0], &x, &labels(1, 4)).is_err());
        assert!(fit_random_intercept(&[1.0, 2.0, 3.0, 4.0], &x, &labels(2, 2)).is_err());
    }
}
