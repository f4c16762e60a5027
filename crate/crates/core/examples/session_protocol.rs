//! One participant's first two days of the protocol against an in-memory
//! store: the day-1 speed schedule, handrail-gated speed requests, an
//! evaluation with hidden slider bounds, and log replay.
//!
//! cargo run --example session_protocol

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, segment_cycles, EventConfig, GaitEvents, Side};
use scomo::model::{fit_normative_model, fit_participant_model};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};
use scomo::session::{replay, NewTrial, SessionKey, SessionService};

fn main() -> scomo::Result<()> {
    let cycles = |spec: &WalkerSpec, seed| -> scomo::Result<_> {
        let t = synthesize_trial(spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let cfg = EventConfig::default();
        let ev = GaitEvents::new(
            detect_gait_events(&t.robotic, &cfg)?.events,
            detect_gait_events(&t.contralateral, &cfg)?.events,
        );
        segment_cycles(&t.trajectory, &ev, 10, Side::Robotic)
    };
    let pm = fit_participant_model(&cycles(
        &WalkerSpec {
            asymmetry: 0.2,
            ..WalkerSpec::default()
        },
        1,
    )?)?;
    let walkers: Vec<_> = (0..5)
        .map(|i| cycles(&WalkerSpec { cycle_samples: 100 + 5 * i, noise_m: 0.001, ..WalkerSpec::default() }, 9 + i as u64))
        .collect::<Result<_, _>>()?;
    let nm = fit_normative_model(&walkers)?;

    let mut svc = SessionService::in_memory();
    for (day, flags) in [(1u8, [true; 6]), (2, [true, true, false, true, false, false])] {
        for s in 1..=3u8 {
            let key = SessionKey::new("P01", day, s)?;
            let start = svc.create_session("P01", day, s)?.treadmill_speed;
            for (i, &handrail_free) in flags.iter().enumerate() {
                svc.record_trial(&key, NewTrial { index: i + 1, handrail_free, duration_s: 120.0 })?;
                if day > 1 && (i + 1) % 3 == 0 {
                    let d = svc.request_speed_change(&key, 1)?;
                    println!(
                        "  {key} block {}: {} of 3 handrail-free, increase {}",
                        d.block,
                        d.handrail_free_trials,
                        if d.granted { "granted" } else { "denied" }
                    );
                }
            }
            let speeds: Vec<f64> = svc.session(&key)?.trials.iter().map(|t| t.speed.m_s()).collect();
            println!("{key}: started at {:.2} m/s, trial speeds {speeds:?}", start.m_s());

            let slots = svc.begin_evaluation(&key, &pm, &nm, Some(42 + s as u64))?;
            if day == 1 && s == 1 {
                let first = &slots[0];
                let payload = svc.frames(&first.slot_id, 0.5, None)?;
                println!(
                    "  {} slots; first is {} repeat {} with the handle at {:.3}; {} frames at mid-slider",
                    slots.len(),
                    first.view.as_str(),
                    first.repeat_index,
                    first.initial_pos,
                    payload.frames.len()
                );
                println!("  display payload keys: {}", serde_json::to_value(&slots[0])?.as_object().map(|o| o.keys().cloned().collect::<Vec<_>>().join(", ")).unwrap_or_default());
            }
            for slot in &slots {
                svc.record_selection_at(&slot.slot_id, 0.6, 0)?;
            }
            for sum in &svc.session(&key)?.summaries {
                if s == 3 {
                    println!("  {:>16}: mean {:+.3}, sd {:.3}", sum.view.as_str(), sum.mean_scomo, sum.sd_scomo);
                }
            }
        }
    }
    let rebuilt = replay(svc.log().all());
    println!("replayed {} events; state identical: {}", svc.log().all().count(), &rebuilt == svc.state());
    Ok(())
}
