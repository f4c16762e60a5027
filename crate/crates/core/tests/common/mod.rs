#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, lowpass_filter, segment_cycles, EventConfig, GaitCycleSet, GaitEvents, Side};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};

pub type Mat = Vec<Vec<f64>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
pub fn jacobi_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Modified Gram-Schmidt (twice) on the rows of `w`.
pub fn gram_schmidt(w: &Mat) -> Mat {
    let mut q: Mat = Vec::new();
    for row in w {
        let mut v = row.clone();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|x| x / n).collect());
    }
    q
}

/// Principal angles (radians, ascending) via symmetric eigenproblems:
/// cosines from `Q_s Q_l^T Q_l Q_s^T`, sines from the residual Gram matrix.
pub fn oracle_angles(a: &Mat, b: &Mat) -> Vec<f64> {
    let (qa, qb) = (gram_schmidt(a), gram_schmidt(b));
    let (s, l) = if qa.len() <= qb.len() { (qa, qb) } else { (qb, qa) };
    let c = matmul(&s, &transpose(&l));
    let cos2 = jacobi_eigenvalues(&matmul(&c, &transpose(&c)));
    let proj = matmul(&c, &l);
    let resid: Mat = s.iter().zip(&proj).map(|(x, p)| x.iter().zip(p).map(|(u, v)| u - v).collect()).collect();
    let sin2 = jacobi_eigenvalues(&matmul(&resid, &transpose(&resid)));
    // ascending angles: descending cosines pair with ascending sines
    let m = s.len();
    (0..m)
        .map(|k| {
            let c2 = cos2[m - 1 - k].clamp(0.0, 1.0);
            let s2 = sin2[k].clamp(0.0, 1.0);
            if c2 >= 0.5 {
                s2.sqrt().asin()
            } else {
                c2.sqrt().acos()
            }
        })
        .collect()
}

/// Deterministic uniform(-1, 1) matrix.
pub fn noise(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
                })
                .collect()
        })
        .collect()
}

pub fn to_dmatrix(m: &Mat) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

/// Last ten robotic-side cycles of a generated walker, filtered at 6 Hz.
pub fn walker_cycles(spec: &WalkerSpec, seed: u64) -> GaitCycleSet {
    let t = synthesize_trial(spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let traj = lowpass_filter(&t.trajectory, 6.0).unwrap();
    let cfg = EventConfig::default();
    let ev = GaitEvents::new(
        detect_gait_events(&t.robotic, &cfg).unwrap().events,
        detect_gait_events(&t.contralateral, &cfg).unwrap().events,
    );
    segment_cycles(&traj, &ev, 10, Side::Robotic).unwrap()
}

pub fn reference_walkers(n: usize) -> Vec<GaitCycleSet> {
    (0..n)
        .map(|i| {
            let spec = WalkerSpec {
                cycle_samples: 96 + (i * 7) % 28,
                step_amplitude_m: 0.28 + 0.01 * (i % 9) as f64,
                height_scale: 0.9 + 0.02 * (i % 10) as f64,
                noise_m: 0.002,
                ..WalkerSpec::default()
            };
            walker_cycles(&spec, 500 + i as u64)
        })
        .collect()
}
