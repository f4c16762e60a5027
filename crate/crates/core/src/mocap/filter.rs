use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

use super::JointTrajectory;
use crate::error::{Error, Result};

/// Second-order section in transposed direct form II, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Second-order Butterworth low-pass via the bilinear transform with
    /// frequency pre-warping.
    pub fn butterworth_lowpass(cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        let nyquist_hz = rate_hz / 2.0;
        if !(cutoff_hz > 0.0) || cutoff_hz >= nyquist_hz {
            return Err(Error::CutoffAboveNyquist { cutoff_hz, nyquist_hz });
        }
        let k = (PI * cutoff_hz / rate_hz).tan();
        let k2 = k * k;
        let norm = 1.0 / (1.0 + SQRT_2 * k + k2);
        let b0 = k2 * norm;
        Ok(Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [1.0, 2.0 * (k2 - 1.0) * norm, (1.0 - SQRT_2 * k + k2) * norm],
        })
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// |H(e^{jw})| of one pass at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, rate_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / rate_hz;
        let eval = |c: &[f64; 3]| {
            let re = c[0] + c[1] * w.cos() + c[2] * (2.0 * w).cos();
            let im = -(c[1] * w.sin() + c[2] * (2.0 * w).sin());
            (re * re + im * im).sqrt()
        };
        eval(&self.b) / eval(&self.a)
    }

    /// Steady-state internal state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        [g - self.b[0], self.b[2] - self.a[2] * g]
    }

    fn run(&self, x: &mut [f64], init: f64) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let zi = self.step_state();
        let (mut z1, mut z2) = (zi[0] * init, zi[1] * init);
        for v in x.iter_mut() {
            let xn = *v;
            let y = b0 * xn + z1;
            z1 = b1 * xn - a1 * y + z2;
            z2 = b2 * xn - a2 * y;
            *v = y;
        }
    }
}

/// Zero-phase low-pass design: one Butterworth biquad run forward and backward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterDesign {
    pub section: Biquad,
    pub cutoff_hz: f64,
    pub rate_hz: f64,
}

impl FilterDesign {
    /// Effective order of the forward-backward cascade.
    pub const ORDER: usize = 4;
    /// Odd-extension length at each edge.
    pub const PAD: usize = 9;

    pub fn new(cutoff_hz: f64, rate_hz: f64) -> Result<Self> {
        Ok(FilterDesign {
            section: Biquad::butterworth_lowpass(cutoff_hz, rate_hz)?,
            cutoff_hz,
            rate_hz,
        })
    }

    pub fn min_len() -> usize {
        (3 * Self::ORDER).max(Self::PAD + 1)
    }

    /// Magnitude of the zero-phase response, `|H|^2` of the single section.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.section.magnitude(freq_hz, self.rate_hz).powi(2)
    }

    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let n = signal.len();
        if n < Self::min_len() {
            return Err(Error::TooShort {
                len: n,
                min: Self::min_len(),
            });
        }
        let pad = Self::PAD;
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let (first, last) = (signal[0], signal[n - 1]);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
        ext.extend_from_slice(signal);
        ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

        let init = ext[0];
        self.section.run(&mut ext, init);
        ext.reverse();
        let init = ext[0];
        self.section.run(&mut ext, init);
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// Zero-phase low-pass applied independently to each of the 45 columns.
pub fn lowpass_filter(traj: &JointTrajectory, cutoff_hz: f64) -> Result<JointTrajectory> {
    let design = FilterDesign::new(cutoff_hz, traj.rate_hz())?;
    let s = traj.samples();
    let mut out = DMatrix::zeros(s.nrows(), s.ncols());
    for c in 0..s.ncols() {
        let col: Vec<f64> = s.column(c).iter().copied().collect();
        let filtered = design.apply(&col)?;
        out.column_mut(c).copy_from_slice(&filtered);
    }
    JointTrajectory::new(out, traj.rate_hz())
}
