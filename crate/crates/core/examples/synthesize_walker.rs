//! Blend participant and normative motion at a few coefficients, project
//! the result for each viewing angle and play it back at 50 fps.
//!
//! cargo run --example synthesize_walker

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, segment_cycles, EventConfig, GaitEvents, Side};
use scomo::model::{fit_normative_model, fit_participant_model};
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};
use scomo::synthesis::{animate, CoefficientOfMotion, MotionComponents, ScreenMapping, ViewingAngle, DEFAULT_FPS};

fn main() -> scomo::Result<()> {
    let fit = |spec: &WalkerSpec, seed| -> scomo::Result<_> {
        let t = synthesize_trial(spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let cfg = EventConfig::default();
        let ev = GaitEvents::new(
            detect_gait_events(&t.robotic, &cfg)?.events,
            detect_gait_events(&t.contralateral, &cfg)?.events,
        );
        segment_cycles(&t.trajectory, &ev, 10, Side::Robotic)
    };
    let participant = WalkerSpec {
        asymmetry: 0.3,
        trunk_lean_deg: 12.0,
        ..WalkerSpec::default()
    };
    let pm = fit_participant_model(&fit(&participant, 1)?)?;
    let walkers: Vec<_> = (0..6)
        .map(|i| {
            fit(
                &WalkerSpec {
                    cycle_samples: 100 + 4 * i,
                    noise_m: 0.001,
                    ..WalkerSpec::default()
                },
                10 + i as u64,
            )
        })
        .collect::<Result<_, _>>()?;
    let nm = fit_normative_model(&walkers)?;

    let components = MotionComponents::new(&pm, &nm)?;
    let gaits: Vec<_> = [-5.0, 0.0, 5.0]
        .into_iter()
        .map(|a| components.blend(CoefficientOfMotion::new(a).expect("in range")))
        .collect();
    for view in ViewingAngle::ALL {
        let mapping = ScreenMapping::fit(&gaits, view)?;
        for g in &gaits {
            let frames = scomo::synthesis::project_with(g, &mapping);
            let head = frames[0].points[14];
            println!(
                "{:>16} alpha {:+.0}: {} frames, head at ({:.3}, {:.3})",
                view.as_str(),
                g.coef.alpha1(),
                frames.len(),
                head[0],
                head[1]
            );
        }
    }

    let frames = scomo::synthesis::project(&gaits[1], ViewingAngle::Frontal)?;
    let shown: Vec<usize> = animate(&frames, pm.rate_hz, DEFAULT_FPS)?.take(8).map(|f| f.frame.frame_index).collect();
    println!("first display ticks at {DEFAULT_FPS} fps show source frames {shown:?}");
    Ok(())
}
