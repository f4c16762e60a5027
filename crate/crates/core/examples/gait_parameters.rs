//! The eight gait parameters and symmetry indices over a simulated course
//! of practice, and their correlation with a selection series.
//!
//! cargo run --example gait_parameters

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, lowpass_filter, EventConfig, GaitEvents};
use scomo::params::{compute_gait_params, correlate_with_scomo, correlation_csv, params_csv, ParamOptions};
use scomo::pipeline::demo::{demo_cohort, synthesize_trial, DemoConfig};
use scomo::synthesis::ViewingAngle;

fn main() -> scomo::Result<()> {
    let participant = &demo_cohort(&DemoConfig::default())[3];
    let mut rows = Vec::new();
    let mut scomo = Vec::new();
    for session in 1..=12u32 {
        let spec = participant.session_spec(session);
        let trial = synthesize_trial(&spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(session as u64))?;
        let cfg = EventConfig::default();
        let events = GaitEvents::new(
            detect_gait_events(&trial.robotic, &cfg)?.events,
            detect_gait_events(&trial.contralateral, &cfg)?.events,
        );
        let traj = lowpass_filter(&trial.trajectory, 6.0)?;
        let p = compute_gait_params(&traj, &events, &ParamOptions::default())?;
        rows.push((format!("{}-s{session:02}", participant.id), p));
        scomo.push(participant.perceived_alpha(session));
    }
    print!("{}", params_csv(&rows));

    let params: Vec<_> = rows.iter().map(|(_, p)| *p).collect();
    let report = correlate_with_scomo(&params, &scomo, ViewingAngle::Frontal)?;
    print!("\n{}", correlation_csv(&report));
    Ok(())
}
