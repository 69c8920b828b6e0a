//! Experiment runner CLI: config-driven runs and the canned presets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use memgrid::config::{Preset, RawConfig};
use memgrid::error::{Error, Result};
use memgrid::experiment::{
    run_fig2, run_fig3a, run_fig3b, run_fig4, run_fig5, run_generic, RunArtifacts,
};
use memgrid::output::{emit_heal_outputs, emit_outputs, emit_sweep_outputs};

#[derive(Parser)]
#[command(
    name = "memgrid",
    version,
    about = "Memristive lattice network simulator: shortest paths from pulse-driven switching dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// TOML experiment config; preset defaults fill anything unspecified.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `outputs`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one config field, e.g. --override pulse.amplitude=6.75
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generic config-driven run (damage applied up front, all series emitted)
    Run(CommonArgs),
    /// Shortest-path preset: all-OFF grid, one pulse, path readout
    Fig2(CommonArgs),
    /// Fig2 plus switching-rate and entropy series along the source row
    Fig3a(CommonArgs),
    /// Entropy-decay sweep over memory contents 20, 10, 4, 1.25
    Fig3b(CommonArgs),
    /// Low-memory-content preset (r_on = 160 ohm, V = 15.25 V)
    Fig4(CommonArgs),
    /// Damage-and-heal preset: find a path, remove nodes, re-pulse
    Fig5(CommonArgs),
}

impl Command {
    fn preset(&self) -> Preset {
        match self {
            Command::Run(_) => Preset::Run,
            Command::Fig2(_) => Preset::Fig2,
            Command::Fig3a(_) => Preset::Fig3a,
            Command::Fig3b(_) => Preset::Fig3b,
            Command::Fig4(_) => Preset::Fig4,
            Command::Fig5(_) => Preset::Fig5,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Run(a)
            | Command::Fig2(a)
            | Command::Fig3a(a)
            | Command::Fig3b(a)
            | Command::Fig4(a)
            | Command::Fig5(a) => a,
        }
    }
}

fn resolve_config(cmd: &Command) -> Result<memgrid::config::ExperimentConfig> {
    let args = cmd.args();
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            RawConfig::parse(&text)?
        }
        None => {
            if matches!(cmd, Command::Run(_)) {
                return Err(Error::Config("run: --config is required".into()));
            }
            RawConfig::default()
        }
    };
    for o in &args.overrides {
        raw.apply_override(o)?;
    }
    let mut cfg = raw.resolve(cmd.preset())?;
    if let Some(out) = &args.out {
        cfg.outputs = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Print a console line, ignoring a closed stdout (e.g. piping into `head`).
fn say(line: String) {
    use std::io::Write as _;
    let _ = writeln!(std::io::stdout(), "{}", line);
}

fn summarize(label: &str, art: &RunArtifacts) {
    let steady = if art.meta.steady {
        "steady"
    } else {
        "hit max_time"
    };
    say(format!(
        "{}: {} after {} steps ({:.6} s simulated, {:.2} s wall)",
        label, steady, art.meta.steps, art.meta.sim_seconds, art.wall_seconds
    ));
    match &art.path_report.path {
        Some(_) => say(format!(
            "{}: path of {} units, {} extra ON units",
            label, art.path_report.path_length, art.path_report.extra_on_count
        )),
        None => say(format!(
            "{}: no source->sink path ({} ON units)",
            label,
            art.path_report.on_units.len()
        )),
    }
}

fn real_main(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.command)?;
    let out_dir = cfg.outputs.clone();
    match &cli.command {
        Command::Run(_) => {
            let art = run_generic(&cfg)?;
            summarize("run", &art);
            let m = emit_outputs(&art, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m.entries.len() + 1,
                out_dir.display()
            ));
        }
        Command::Fig2(_) => {
            let art = run_fig2(&cfg)?;
            summarize("fig2", &art);
            let m = emit_outputs(&art, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m.entries.len() + 1,
                out_dir.display()
            ));
        }
        Command::Fig3a(_) => {
            let art = run_fig3a(&cfg)?;
            summarize("fig3a", &art);
            let m = emit_outputs(&art, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m.entries.len() + 1,
                out_dir.display()
            ));
        }
        Command::Fig3b(_) => {
            let sweep = run_fig3b(&cfg);
            for (pair, result) in sweep.pairs.iter().zip(&sweep.series) {
                let ratio = cfg.device.r_off / pair.0;
                match result {
                    Ok(series) => say(format!(
                        "fig3b ratio {}: sigma {} -> {}",
                        ratio,
                        series.initial_sigma(),
                        series.final_sigma()
                    )),
                    Err(e) => say(format!("fig3b ratio {}: failed: {}", ratio, e)),
                }
            }
            let m = emit_sweep_outputs(&sweep, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m.entries.len() + 1,
                out_dir.display()
            ));
        }
        Command::Fig4(_) => {
            let art = run_fig4(&cfg)?;
            summarize("fig4", &art);
            let m = emit_outputs(&art, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m.entries.len() + 1,
                out_dir.display()
            ));
        }
        Command::Fig5(_) => {
            let (phase1, phase2) = run_fig5(&cfg)?;
            summarize("fig5 initial", &phase1);
            summarize("fig5 healed", &phase2);
            let (m1, m2) = emit_heal_outputs(&phase1, &phase2, &out_dir)?;
            say(format!(
                "wrote {} files to {}",
                m1.entries.len() + m2.entries.len() + 2,
                out_dir.display()
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            // argument misuse is a configuration error
            eprintln!("{}", e);
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            say(format!("{}", e));
            return ExitCode::SUCCESS;
        }
    };
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
