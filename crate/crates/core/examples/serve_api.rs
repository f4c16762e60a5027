//! Run the session HTTP API over a fresh directory store with a small
//! normative model preloaded.
//!
//! cargo run --example serve_api -- [store_dir] [addr]
//!
//! Then, for example:
//!   curl -XPOST localhost:8080/sessions -H 'content-type: application/json' \
//!        -d '{"participant_id":"P01","day":1,"session_index":1}'
//!   curl -XPOST localhost:8080/sessions/P01-d1-s1/trials -H 'content-type: application/json' \
//!        -d '{"index":1,"handrail_free":true}'

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scomo::mocap::{detect_gait_events, segment_cycles, EventConfig, GaitEvents, Side};
use scomo::model::fit_normative_model;
use scomo::pipeline::demo::{synthesize_trial, WalkerSpec};
use scomo::session::{serve, AppState, SessionService};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let store = std::env::args().nth(1).unwrap_or_else(|| "scomo-store".into());
    let addr = std::env::args().nth(2).unwrap_or_else(|| "127.0.0.1:8080".into()).parse()?;
    let mut walkers = Vec::new();
    for i in 0..6u64 {
        let spec = WalkerSpec {
            cycle_samples: 100 + 4 * i as usize,
            noise_m: 0.001,
            ..WalkerSpec::default()
        };
        let t = synthesize_trial(&spec, 12, 150, &mut ChaCha8Rng::seed_from_u64(i))?;
        let cfg = EventConfig::default();
        let ev = GaitEvents::new(
            detect_gait_events(&t.robotic, &cfg)?.events,
            detect_gait_events(&t.contralateral, &cfg)?.events,
        );
        walkers.push(segment_cycles(&t.trajectory, &ev, 10, Side::Robotic)?);
    }
    let state = AppState::new(SessionService::open(&store)?).with_normative(fit_normative_model(&walkers)?);
    println!("store {store}, listening on http://{addr}");
    serve(addr, state).await?;
    Ok(())
}
