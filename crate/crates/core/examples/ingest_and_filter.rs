//! Write a synthetic trial to disk, read it back, low-pass filter it, detect
//! heel strikes from both force plates and cut out the last ten cycles.
//!
//! cargo run --example ingest_and_filter

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::joints::{Axis, Joint};
use scomo::mocap::{
    detect_gait_events, load_force_plate, load_trajectory, lowpass_filter, segment_cycles, write_force_plate,
    write_trajectory, EventConfig, FilterDesign, GaitEvents, Side,
};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};

fn main() -> scomo::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = WalkerSpec {
        asymmetry: 0.2,
        noise_m: 0.003,
        grf_noise_n: 5.0,
        ..WalkerSpec::default()
    };
    let trial = synthesize_trial(&spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(3))?;
    write_trajectory(dir.path().join("trial.csv"), &trial.trajectory)?;
    write_force_plate(dir.path().join("trial.robotic.csv"), &trial.robotic)?;
    write_force_plate(dir.path().join("trial.contralateral.csv"), &trial.contralateral)?;

    let raw = load_trajectory(dir.path().join("trial.csv"))?;
    let filtered = lowpass_filter(&raw, 6.0)?;
    let design = FilterDesign::new(6.0, raw.rate_hz())?;
    println!("loaded {} frames at {} Hz", raw.len(), raw.rate_hz());
    println!(
        "filter |H|^2: 1 Hz {:.4}, 6 Hz {:.4}, 30 Hz {:.2e}",
        design.magnitude(1.0),
        design.magnitude(6.0),
        design.magnitude(30.0)
    );
    let col = |t: &scomo::mocap::JointTrajectory| t.column(Joint::Sternum, Axis::X);
    let rms = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    println!("sternum ML change from filtering: {:.2} mm rms", 1e3 * rms(&col(&raw), &col(&filtered)));

    let cfg = EventConfig::default();
    let r = detect_gait_events(&load_force_plate(dir.path().join("trial.robotic.csv"))?, &cfg)?;
    let c = detect_gait_events(&load_force_plate(dir.path().join("trial.contralateral.csv"))?, &cfg)?;
    println!("robotic heel strikes: {:?}", r.events.heel_strikes);
    println!("contralateral heel strikes: {:?}", c.events.heel_strikes);
    let events = GaitEvents::new(r.events, c.events);

    let cycles = segment_cycles(&filtered, &events, 10, Side::Robotic)?;
    println!(
        "{} cycles, mean length {:.1} samples, starting at frame {}",
        cycles.n_cycles(),
        cycles.mean_cycle_samples(),
        cycles.source_offset
    );
    Ok(())
}
