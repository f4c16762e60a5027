use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scomo::model::read_normative;
use scomo::pipeline::demo::{run_demo, DemoConfig};
use scomo::pipeline::{run_pipeline, PipelineConfig, Stage, StageError};
use scomo::session::{serve, AppState, SessionService};

/// Gait body-image toolkit: batch pipeline stages and the session server.
#[derive(Parser)]
#[command(name = "scomo", version)]
struct Cli {
    /// Pipeline config (TOML key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fit normative sinusoids without a phase term.
    #[arg(long, global = true)]
    no_phase: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, filter and detect gait events.
    Ingest,
    /// Fit participant and normative models.
    Fit,
    /// Render point-light frames of blended walkers.
    Synth,
    /// Principal-angle gait deviation per session.
    Deviation,
    /// Gait parameters and symmetry indices per session.
    Params,
    /// Correlate gait parameters with selections.
    Correlate,
    /// Full run through the analysis bundle.
    Report,
    /// Serve the session HTTP API over the configured store.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Normative model used when an evaluation request names none.
        #[arg(long)]
        normative: Option<PathBuf>,
    },
    /// Generate the synthetic cohort and run every stage on it.
    Demo {
        #[arg(long, default_value = "scomo-demo")]
        out: PathBuf,
    },
}

fn fail(e: &StageError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(2)
}

fn config(cli: &Cli, stage: Stage) -> Result<PipelineConfig, StageError> {
    let path = cli.config.clone().unwrap_or_else(|| PathBuf::from("scomo.toml"));
    let mut cfg = PipelineConfig::load(&path).map_err(|error| StageError { stage, error })?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.no_phase {
        cfg.sinusoid_phase = false;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stage = match &cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Fit => Stage::Fit,
        Command::Synth => Stage::Synth,
        Command::Deviation => Stage::Deviation,
        Command::Params => Stage::Params,
        Command::Correlate => Stage::Correlate,
        Command::Report => Stage::Report,
        Command::Demo { out } => {
            let cfg = DemoConfig {
                seed: cli.seed.unwrap_or(DemoConfig::default().seed),
                ..DemoConfig::default()
            };
            return match run_demo(out, &cfg) {
                Ok(p) => {
                    println!("{{\"status\":\"ok\",\"output_dir\":{:?},\"files\":{}}}", p.config.output_dir, p.written.len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
        Command::Serve { addr, normative } => {
            let cfg = match config(&cli, Stage::Report) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            return match serve_store(cfg, *addr, normative.clone()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{}", serde_json::json!({"status": "error", "stage": "serve", "message": e.to_string()}));
                    ExitCode::from(2)
                }
            };
        }
    };
    let cfg = match config(&cli, stage) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run_pipeline(cfg, stage) {
        Ok(p) => {
            println!("{{\"status\":\"ok\",\"stage\":\"{stage}\",\"files\":{}}}", p.written.len());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn serve_store(cfg: PipelineConfig, addr: SocketAddr, normative: Option<PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let store = cfg.store_dir.clone().ok_or("config has no store_dir")?;
    let mut state = AppState::new(SessionService::open(store)?);
    let default_nm = normative.unwrap_or_else(|| cfg.output_dir.join("fit/models/normative.json"));
    if default_nm.exists() {
        state = state.with_normative(read_normative(default_nm)?);
    }
    let rt = tokio::runtime::Runtime::new()?;
    eprintln!("listening on http://{addr}");
    rt.block_on(serve(addr, state))?;
    Ok(())
}
