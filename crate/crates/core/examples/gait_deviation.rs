//! Principal angles between a participant's loading subspace and the
//! normative one, reported as a sum of angles and a sum of cosines.
//!
//! cargo run --example gait_deviation

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, segment_cycles, EventConfig, GaitEvents, Side};
use scomo::model::{fit_normative_model, fit_participant_model};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};
use scomo::similarity::{gait_deviation, loading_deviation, orthonormal_basis, principal_angles, DeviationMode};

fn main() -> scomo::Result<()> {
    // two planes in R^3 meeting along the x axis at 30 degrees
    let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 30f64.to_radians().cos(), 30f64.to_radians().sin()]);
    let r = principal_angles(&orthonormal_basis(&a)?, &orthonormal_basis(&b)?)?;
    println!("toy planes: angles {:?} deg", r.thetas_deg());
    println!(
        "  sum of angles {:.3}, sum of cosines {:.4}",
        gait_deviation(&r, DeviationMode::SumAngles),
        gait_deviation(&r, DeviationMode::SumCosines)
    );

    let cycles = |spec: &WalkerSpec, seed| -> scomo::Result<_> {
        let t = synthesize_trial(spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let cfg = EventConfig::default();
        let ev = GaitEvents::new(
            detect_gait_events(&t.robotic, &cfg)?.events,
            detect_gait_events(&t.contralateral, &cfg)?.events,
        );
        segment_cycles(&t.trajectory, &ev, 10, Side::Robotic)
    };
    let walkers: Vec<_> = (0..8)
        .map(|i| {
            let spec = WalkerSpec {
                cycle_samples: 100 + 3 * i,
                noise_m: 0.002,
                ..WalkerSpec::default()
            };
            cycles(&spec, 50 + i as u64)
        })
        .collect::<Result<_, _>>()?;
    let nm = fit_normative_model(&walkers)?;

    for asym in [0.0, 0.15, 0.3, 0.45] {
        let spec = WalkerSpec {
            asymmetry: asym,
            timing_asymmetry: asym / 5.0,
            trunk_lean_deg: 30.0 * asym,
            noise_m: 0.002,
            ..WalkerSpec::default()
        };
        let pm = fit_participant_model(&cycles(&spec, 1)?)?;
        let (deg, m) = loading_deviation(&pm.loadings, &nm.loadings, DeviationMode::SumAngles)?;
        let (cos, _) = loading_deviation(&pm.loadings, &nm.loadings, DeviationMode::SumCosines)?;
        println!("asymmetry {asym:.2}: m={m}, sum of angles {deg:7.3} deg, sum of cosines {cos:.4}");
    }
    Ok(())
}
