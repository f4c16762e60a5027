//! Fit a participant PCA model from one trial and the four-component
//! sinusoidal normative model from a set of reference walkers.
//!
//! cargo run --example fit_models

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, lowpass_filter, segment_cycles, EventConfig, GaitCycleSet, GaitEvents, Side};
use scomo::model::{fit_normative_model, fit_participant_model};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};

fn cycles(spec: &WalkerSpec, seed: u64) -> scomo::Result<GaitCycleSet> {
    let trial = synthesize_trial(spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let traj = lowpass_filter(&trial.trajectory, 6.0)?;
    let cfg = EventConfig::default();
    let events = GaitEvents::new(
        detect_gait_events(&trial.robotic, &cfg)?.events,
        detect_gait_events(&trial.contralateral, &cfg)?.events,
    );
    segment_cycles(&traj, &events, 10, Side::Robotic)
}

fn main() -> scomo::Result<()> {
    let participant = WalkerSpec {
        asymmetry: 0.25,
        timing_asymmetry: 0.05,
        trunk_lean_deg: 10.0,
        noise_m: 0.002,
        ..WalkerSpec::default()
    };
    let pm = fit_participant_model(&cycles(&participant, 1)?)?;
    println!(
        "participant: {} components explain {:.2}% (cycle {:.0} samples)",
        pm.n_components(),
        100.0 * pm.cumulative_explained(),
        pm.cycle_samples
    );

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut walkers = Vec::new();
    for i in 0..25 {
        let spec = WalkerSpec {
            cycle_samples: rng.random_range(95..=125),
            step_amplitude_m: rng.random_range(0.28..0.38),
            height_scale: rng.random_range(0.9..1.1),
            noise_m: 0.002,
            ..WalkerSpec::default()
        };
        walkers.push(cycles(&spec, 100 + i)?);
    }
    let nm = fit_normative_model(&walkers)?;
    for (k, (s, ev)) in nm.sinusoids.iter().zip(&nm.explained_variance_ratio).enumerate() {
        println!(
            "normative PC{}: {:5.2}% variance, c={:.3} w={:.4} rad/sample phi={:+.2} r2={:.3}",
            k + 1,
            100.0 * ev,
            s.amplitude,
            s.omega,
            s.phase,
            s.r2
        );
    }
    Ok(())
}
