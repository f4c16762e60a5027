use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `amplitude * sin(omega * t + phase)` with `t` the sample index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    /// Angular frequency, rad/sample.
    pub omega: f64,
    /// Phase, rad, in (-pi, pi].
    pub phase: f64,
    pub r2: f64,
}

impl SinusoidFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).sin()
    }

    pub fn frequency_hz(&self, rate_hz: f64) -> f64 {
        self.omega * rate_hz / TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidOptions {
    /// Fit the phase term; `false` fits `c * sin(omega * t)` literally, with a
    /// negative `c` reported as phase pi.
    pub fit_phase: bool,
    pub max_iterations: usize,
}

impl Default for SinusoidOptions {
    fn default() -> Self {
        SinusoidOptions {
            fit_phase: true,
            max_iterations: 200,
        }
    }
}

pub fn fit_sinusoid(scores: &[f64]) -> Result<SinusoidFit> {
    fit_sinusoid_with(scores, &SinusoidOptions::default())
}

/// DFT-seeded Levenberg-Marquardt fit of a single sinusoid.
pub fn fit_sinusoid_with(y: &[f64], opts: &SinusoidOptions) -> Result<SinusoidFit> {
    let n = y.len();
    if n < 8 {
        return Err(Error::TooFew {
            what: "samples for a sinusoid fit",
            needed: 8,
            got: n,
        });
    }
    let bin = dominant_bin(y)?;
    let bin_width = TAU / n as f64;
    let omega0 = bin as f64 * bin_width;

    // refine the seed inside +-1 bin with a closed-form amplitude/phase solve
    let mut best = (f64::INFINITY, omega0, 0.0, 0.0);
    for k in -40..=40 {
        let w = omega0 + k as f64 * bin_width / 40.0;
        if w <= 0.0 || w >= PI {
            continue;
        }
        let (c, phi, sse) = linear_solve(y, w, opts.fit_phase);
        if sse < best.0 {
            best = (sse, w, c, phi);
        }
    }
    let (_, w, c, phi) = best;
    let mut params = Vector3::new(c, w, phi);
    params = levenberg_marquardt(y, params, opts)?;

    let (mut c, mut w, mut phi) = (params[0], params[1], params[2]);
    if w < 0.0 {
        w = -w;
        phi = PI - phi;
    }
    if c < 0.0 {
        c = -c;
        phi += PI;
    }
    if !opts.fit_phase {
        phi = if phi.rem_euclid(TAU) < 1e-12 || phi.rem_euclid(TAU) > TAU - 1e-12 { 0.0 } else { PI };
    }
    let phase = wrap_phase(phi);
    let fit = SinusoidFit {
        amplitude: c,
        omega: w,
        phase,
        r2: 0.0,
    };
    let mean = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let sse: f64 = y.iter().enumerate().map(|(t, v)| (v - fit.eval(t as f64)).powi(2)).sum();
    let r2 = if sst > 0.0 { (1.0 - sse / sst).clamp(0.0, 1.0) } else { 0.0 };
    Ok(SinusoidFit { r2, ..fit })
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Strongest non-DC bin of the real DFT.
fn dominant_bin(y: &[f64]) -> Result<usize> {
    let n = y.len();
    let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let power: Vec<f64> = buf[1..=half].iter().map(|z| z.norm_sqr()).collect();
    let mean = power.iter().sum::<f64>() / power.len() as f64;
    let (idx, peak) = power
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    if !(peak > 0.0) || peak < 2.0 * mean {
        return Err(Error::FlatSpectrum);
    }
    Ok(idx + 1)
}

/// Least-squares `a sin(wt) + b cos(wt)` for fixed `w`, returned as (c, phase, sse).
fn linear_solve(y: &[f64], w: f64, fit_phase: bool) -> (f64, f64, f64) {
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, &v) in y.iter().enumerate() {
        let (s, c) = (w * t as f64).sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += v * s;
        yc += v * c;
    }
    let (a, b) = if fit_phase {
        let det = ss * cc - sc * sc;
        if det.abs() < 1e-300 {
            (ys / ss, 0.0)
        } else {
            ((ys * cc - yc * sc) / det, (yc * ss - ys * sc) / det)
        }
    } else {
        (ys / ss, 0.0)
    };
    let amp = (a * a + b * b).sqrt();
    let phi = b.atan2(a);
    let sse = y
        .iter()
        .enumerate()
        .map(|(t, v)| (v - amp * (w * t as f64 + phi).sin()).powi(2))
        .sum();
    (amp, phi, sse)
}

fn sse_at(y: &[f64], p: &Vector3<f64>) -> f64 {
    y.iter()
        .enumerate()
        .map(|(t, v)| (v - p[0] * (p[1] * t as f64 + p[2]).sin()).powi(2))
        .sum()
}

fn levenberg_marquardt(y: &[f64], mut p: Vector3<f64>, opts: &SinusoidOptions) -> Result<Vector3<f64>> {
    let n_free = if opts.fit_phase { 3 } else { 2 };
    let mut lambda = 1e-3;
    let mut sse = sse_at(y, &p);
    let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    for _ in 0..opts.max_iterations {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (t, &v) in y.iter().enumerate() {
            let t = t as f64;
            let arg = p[1] * t + p[2];
            let (s, c) = arg.sin_cos();
            let r = v - p[0] * s;
            let mut j = Vector3::new(s, p[0] * t * c, p[0] * c);
            if n_free == 2 {
                j[2] = 0.0;
            }
            jtj += j * j.transpose();
            jtr += j * r;
        }
        if n_free == 2 {
            jtj[(2, 2)] = 1.0;
        }
        loop {
            let mut damped = jtj;
            for i in 0..3 {
                damped[(i, i)] *= 1.0 + lambda;
            }
            let Some(step) = damped.lu().solve(&jtr) else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    return Ok(p);
                }
                continue;
            };
            let trial = p + step;
            let trial_sse = sse_at(y, &trial);
            if trial_sse <= sse {
                let small_step = step[1].abs() <= 1e-15 * p[1].abs().max(1e-12)
                    && step[0].abs() <= 1e-13 * p[0].abs().max(1e-12)
                    && step[2].abs() <= 1e-13;
                let small_gain = (sse - trial_sse) <= 1e-15 * scale;
                p = trial;
                sse = trial_sse;
                lambda = (lambda / 10.0).max(1e-12);
                if small_step || small_gain {
                    return Ok(p);
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // no descent direction left: at a minimum to machine precision
                return Ok(p);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "sinusoid least squares".into(),
        iterations: opts.max_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(c: f64, w: f64, phi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|t| c * (w * t as f64 + phi).sin()).collect()
    }

    #[test]
    fn exact_model_is_recovered() {
        let y = series(2.0, 0.1, 0.5, 2001);
        let fit = fit_sinusoid(&y).unwrap();
        assert!((fit.amplitude - 2.0).abs() / 2.0 < 1e-6, "{fit:?}");
        assert!((fit.omega - 0.1).abs() / 0.1 < 1e-6);
        assert!((fit.phase - 0.5).abs() / 0.5 < 1e-6);
        assert!(fit.r2 > 0.999999);
    }

    #[test]
    fn zeros_have_a_flat_spectrum() {
        assert!(matches!(fit_sinusoid(&[0.0; 500]), Err(Error::FlatSpectrum)));
    }

    #[test]
    fn strict_mode_pins_phase() {
        let y = series(1.5, 2.0 * PI / 101.0, 0.0, 808);
        let fit = fit_sinusoid_with(
            &y,
            &SinusoidOptions {
                fit_phase: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fit.phase, 0.0);
        assert!((fit.amplitude - 1.5).abs() < 1e-9);
        assert!(fit.r2 > 0.999999);
    }

    #[test]
    fn amplitude_equivariance() {
        let y = series(0.7, 0.23, -1.1, 600);
        let base = fit_sinusoid(&y).unwrap();
        for k in [3.0, -2.5, 1e-3] {
            let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
            let f = fit_sinusoid(&scaled).unwrap();
            assert!((f.amplitude - base.amplitude * f64::abs(k)).abs() < 1e-9 * f64::abs(k).max(1.0));
            assert!((f.omega - base.omega).abs() < 1e-9);
            assert!((f.r2 - base.r2).abs() < 1e-9);
        }
    }
}
