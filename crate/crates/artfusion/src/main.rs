use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use artfusion::config::PipelineConfig;
use artfusion::error::{Error, Result};
use artfusion::metrics::{metrics_command, report_text};
use artfusion::run_pipeline;
use artfusion::scene_io::make_scene;
use artfusion_core::scenes::{build_scene, Preset};

#[derive(Parser)]
#[command(name = "artfusion", version, about = "Articulated non-rigid reconstruction from depth sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a sequence. Settings come from the config file, then from
    /// `--section.key=value` overrides.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides such as `--solver.omega_reg=5` or `--output.dir=out`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Score a finished run against ground truth.
    Metrics {
        /// Run output directory.
        #[arg(long)]
        run: PathBuf,
        /// Directory with gt_vertices.csv and gt_markers.csv.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Render a synthetic scene to a raw sequence with ground truth.
    MakeScene {
        #[arg(long, default_value = "two-box-hinge")]
        preset: String,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = match config {
                Some(path) => PipelineConfig::load(&path)?,
                None => PipelineConfig::default(),
            };
            cfg.apply_overrides(&overrides)?;
            cfg.validate()?;
            let out = run_pipeline(&cfg, |_| {})?;
            let last = out.records.last();
            println!(
                "processed {} frames: {} nodes, {} clusters",
                out.records.len(),
                out.state.graph.len(),
                last.map_or(0, |r| r.cluster_count())
            );
            Ok(())
        }
        Command::Metrics { run, truth } => {
            let (report, timing) = metrics_command(&run, &truth)?;
            print!("{}", report_text(&report, &timing));
            Ok(())
        }
        Command::MakeScene {
            preset,
            frames,
            noise_sigma,
            seed,
            out,
        } => {
            let preset = Preset::from_name(&preset).ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!("unknown preset `{preset}` (choose from {})", names.join(", ")))
            })?;
            if frames == 0 {
                return Err(Error::Config("--frames must be positive".into()));
            }
            let mut scene = build_scene(preset, frames);
            scene.noise_sigma = noise_sigma;
            make_scene(&out, &scene, seed)?;
            println!("wrote {frames} frames of {} to {}", preset.name(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
