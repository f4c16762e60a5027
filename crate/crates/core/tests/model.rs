mod common;

use nalgebra::DMatrix;

use common::{jacobi_eigenvalues, matmul, noise, reference_walkers, transpose, walker_cycles};
use scomo::model::{
    fit_normative_model, fit_participant_model, normative_from_json, normative_to_json, participant_from_json,
    participant_to_json, reconstruct_participant, Pca,
};
use scomo::pipeline::demo::WalkerSpec;
use scomo::synthesis::{project, CoefficientOfMotion, MotionComponents, ViewingAngle};

fn covariance_oracle(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (t, d) = (rows.len(), rows[0].len());
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / t as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect();
    matmul(&transpose(&centered), &centered)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v / (t as f64 - 1.0)).collect())
        .collect()
}

#[test]
fn pca_eigenvalues_match_jacobi_oracle() {
    let latent = noise(400, 3, 11);
    let mixing = noise(3, 9, 12);
    let mut data = matmul(&latent, &mixing);
    let iso = noise(400, 9, 13);
    for (r, e) in data.iter_mut().zip(&iso) {
        for (v, n) in r.iter_mut().zip(e) {
            *v += 0.01 * n;
        }
    }
    let pca = Pca::fit(&common::to_dmatrix(&data)).unwrap();
    let mut oracle = jacobi_eigenvalues(&covariance_oracle(&data));
    oracle.reverse();
    for (a, b) in pca.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10 * oracle[0], "{a} vs {b}");
    }
    assert_eq!(pca.effective_rank(1e-3), 3);
    assert!(pca.components_for_variance(0.95) <= 3);
}

#[test]
fn isotropic_noise_spreads_variance_evenly() {
    let pca = Pca::fit(&common::to_dmatrix(&noise(20000, 6, 4))).unwrap();
    let ratios = pca.explained_variance_ratio();
    assert!(ratios.iter().all(|r| (r - 1.0 / 6.0).abs() < 0.02), "{ratios:?}");
}

#[test]
fn participant_model_reconstructs_within_retained_variance() {
    let cycles = walker_cycles(&WalkerSpec { asymmetry: 0.3, noise_m: 0.003, ..WalkerSpec::default() }, 8);
    let pm = fit_participant_model(&cycles).unwrap();
    assert!(pm.cumulative_explained() >= 0.95);
    let mut recon = reconstruct_participant(&pm);
    for mut row in recon.row_iter_mut() {
        row += pm.mean_posture.transpose();
    }
    let x = cycles.trajectory.samples();
    let total: f64 = x.column_iter().map(|c| c.variance() * c.len() as f64).sum();
    let residual = (&recon - x).norm_squared();
    assert!(residual / total <= 1.0 - pm.cumulative_explained() + 1e-9, "{} {}", residual / total, pm.cumulative_explained());
}

#[test]
fn models_survive_json() {
    let pm = fit_participant_model(&walker_cycles(&WalkerSpec::default(), 2)).unwrap();
    let back = participant_from_json(&participant_to_json(&pm).unwrap()).unwrap();
    assert_eq!(back.loadings, pm.loadings);
    assert_eq!(back.scores, pm.scores);
    assert_eq!(back.mean_posture, pm.mean_posture);
    let nm = fit_normative_model(&reference_walkers(4)).unwrap();
    let back = normative_from_json(&normative_to_json(&nm).unwrap()).unwrap();
    assert_eq!(back.loadings, nm.loadings);
    assert_eq!(back.sinusoids, nm.sinusoids);
    assert!(normative_from_json(&participant_to_json(&pm).unwrap()).is_err());
}

#[test]
fn normative_components_are_sinusoidal() {
    let nm = fit_normative_model(&reference_walkers(25)).unwrap();
    assert_eq!(nm.loadings.nrows(), 4);
    let r2 = nm.fit_r2();
    assert!(r2.iter().all(|v| *v >= 0.9), "{r2:?}");
    let gram = &nm.loadings * nm.loadings.transpose();
    assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-10);
}

#[test]
fn midway_blend_is_the_average_of_the_endpoints() {
    let pm = fit_participant_model(&walker_cycles(&WalkerSpec { asymmetry: 0.2, ..WalkerSpec::default() }, 6)).unwrap();
    let nm = fit_normative_model(&reference_walkers(4)).unwrap();
    let comps = MotionComponents::new(&pm, &nm).unwrap();
    let s = |a: f64| comps.blend(CoefficientOfMotion::new(a).unwrap()).samples;
    let mid = (s(0.0) + s(5.0)) / 2.0;
    assert!((s(2.5) - mid).amax() < 1e-12);
    assert!(CoefficientOfMotion::new(5.5).is_err());
}

#[test]
fn projected_frames_fit_the_screen() {
    let pm = fit_participant_model(&walker_cycles(&WalkerSpec::default(), 6)).unwrap();
    let nm = fit_normative_model(&reference_walkers(4)).unwrap();
    let gait = scomo::synthesis::blend(&pm, &nm, CoefficientOfMotion::new(-2.0).unwrap()).unwrap();
    for view in ViewingAngle::ALL {
        let frames = project(&gait, view).unwrap();
        assert_eq!(frames.len(), gait.t_length());
        assert!(frames.iter().all(|f| f.points.len() == 15));
        assert!(frames.iter().flat_map(|f| &f.points).all(|p| (0.0..=1.0).contains(&p[0]) && (0.0..=1.0).contains(&p[1])));
    }
}
