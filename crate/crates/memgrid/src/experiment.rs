//! Experiment presets: assemble a lattice from a config, run the pulse,
//! collect maps, path report and series into emit-ready artifacts.

use std::time::Instant;

use crate::analysis::{extract_path, switching_rate_series, EntropySeries, PathReport, RateSeries};
use crate::config::ExperimentConfig;
use crate::engine::{read_state, run_pulse, TraceSpec};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::solver::{solve_potentials, SolveResult};

/// Per-unit scalar field split into the two unit orientations:
/// `horizontal[r][c]` is unit (r,c)-(r,c+1), `vertical[r][c]` is
/// (r,c)-(r+1,c). Removed units hold the fill value.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMaps {
    pub horizontal: Vec<Vec<f64>>,
    pub vertical: Vec<Vec<f64>>,
}

impl UnitMaps {
    fn build(l: &Lattice, fill: f64, mut value: impl FnMut(usize) -> f64) -> Self {
        let horizontal = (0..l.rows())
            .map(|r| {
                (0..l.cols() - 1)
                    .map(|c| l.horizontal_unit(r, c).map_or(fill, &mut value))
                    .collect()
            })
            .collect();
        let vertical = (0..l.rows() - 1)
            .map(|r| {
                (0..l.cols())
                    .map(|c| {
                        l.unit_between(
                            crate::lattice::Node::new(r, c),
                            crate::lattice::Node::new(r + 1, c),
                        )
                        .map_or(fill, &mut value)
                    })
                    .collect()
            })
            .collect();
        UnitMaps {
            horizontal,
            vertical,
        }
    }

    /// Unit resistances; removed units read as infinite.
    pub fn resistances(l: &Lattice) -> Self {
        Self::build(l, f64::INFINITY, |k| l.units()[k].resistance())
    }

    /// Signed unit currents (a->b); removed units carry none.
    pub fn currents(l: &Lattice, sr: &SolveResult) -> Self {
        Self::build(l, 0.0, |k| sr.unit_current(k))
    }
}

/// Deterministic run metadata (wall time is reported separately so emitted
/// files stay byte-identical across reruns).
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub steady: bool,
    pub steps: u64,
    pub sim_seconds: f64,
}

/// Everything one pulse run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub resistance_initial: UnitMaps,
    pub resistance_final: UnitMaps,
    pub current_initial: UnitMaps,
    pub current_final: UnitMaps,
    pub path_report: PathReport,
    pub entropy: Option<EntropySeries>,
    pub switching: Option<Vec<RateSeries>>,
    pub meta: RunMeta,
    pub wall_seconds: f64,
    pub final_lattice: Lattice,
}

#[derive(Debug, Clone, Copy, Default)]
struct Observe {
    entropy: bool,
    switching: bool,
}

fn run_core(cfg: &ExperimentConfig, lattice: Lattice, observe: Observe) -> Result<RunArtifacts> {
    let started = Instant::now();
    let spec = TraceSpec {
        cut: cfg.entropy_cut,
        ..TraceSpec::source_row_defaults(&lattice)
    };
    let resistance_initial = UnitMaps::resistances(&lattice);
    let sr0 = solve_potentials(&lattice, cfg.pulse.amplitude)?;
    let current_initial = UnitMaps::currents(&lattice, &sr0);

    let out = run_pulse(&lattice, &cfg.pulse, &spec)?;

    let resistance_final = UnitMaps::resistances(&out.lattice);
    let sr1 = solve_potentials(&out.lattice, cfg.pulse.amplitude)?;
    let current_final = UnitMaps::currents(&out.lattice, &sr1);
    let path_report = extract_path(&out.lattice, &read_state(&out.lattice));

    let entropy = observe
        .entropy
        .then(|| EntropySeries::from_trace(&out.trace, cfg.device.memory_content(), spec.cut));
    let switching = if observe.switching {
        Some(switching_rate_series(&out.trace, &spec.watch)?)
    } else {
        None
    };

    Ok(RunArtifacts {
        config: cfg.clone(),
        resistance_initial,
        resistance_final,
        current_initial,
        current_final,
        path_report,
        entropy,
        switching,
        meta: RunMeta {
            steady: out.steady,
            steps: out.steps,
            sim_seconds: out.steps as f64 * cfg.pulse.dt,
        },
        wall_seconds: started.elapsed().as_secs_f64(),
        final_lattice: out.lattice,
    })
}

/// Shortest-path run: all-OFF lattice, one pulse, read the ON sub-network.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_core(cfg, cfg.build_lattice()?, Observe::default())
}

/// Fig2 run that also records the entropy trajectory and the switching-rate
/// series of the source-row units.
pub fn run_fig3a(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_core(
        cfg,
        cfg.build_lattice()?,
        Observe {
            entropy: true,
            switching: true,
        },
    )
}

/// Memory-content sweep: the reference (r_on, amplitude) pairs for ratios
/// 20, 10, 4 and 1.25 at r_off = 200.
pub fn default_sweep_pairs(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    [(20.0, 6.0), (10.0, 6.75), (4.0, 10.0), (1.25, 15.25)]
        .iter()
        .map(|&(ratio, v)| (cfg.device.r_off / ratio, v))
        .collect()
}

/// Entropy trajectories for a list of (r_on, amplitude) runs.
#[derive(Debug)]
pub struct SweepArtifacts {
    pub config: ExperimentConfig,
    pub pairs: Vec<(f64, f64)>,
    pub series: Vec<Result<EntropySeries>>,
}

pub fn run_fig3b(cfg: &ExperimentConfig) -> SweepArtifacts {
    let pairs = default_sweep_pairs(cfg);
    let series = crate::analysis::sweep_memory_content(cfg, &pairs);
    SweepArtifacts {
        config: cfg.clone(),
        pairs,
        series,
    }
}

/// Low-memory-content run; identical pipeline to fig2, the preset defaults
/// (r_on = 160, V = 15.25) come from config resolution.
pub fn run_fig4(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_fig2(cfg)
}

/// Damage-and-heal: find a path, remove the config's damage nodes from the
/// evolved network (device states kept), re-pulse, read again.
pub fn run_fig5(cfg: &ExperimentConfig) -> Result<(RunArtifacts, RunArtifacts)> {
    let phase1 = run_core(cfg, cfg.build_lattice_intact()?, Observe::default())?;
    let damaged = phase1.final_lattice.remove_nodes(&cfg.damage)?;
    let phase2 = run_core(cfg, damaged, Observe::default())?;
    Ok((phase1, phase2))
}

/// Generic config-driven run: damage applied up front, all observables on.
pub fn run_generic(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    run_core(
        cfg,
        cfg.build_lattice()?,
        Observe {
            entropy: true,
            switching: true,
        },
    )
}

/// Convenience used by tests and the acceptance suite: artifacts must have
/// reached steady state.
pub fn require_steady(artifacts: &RunArtifacts) -> Result<()> {
    if artifacts.meta.steady {
        Ok(())
    } else {
        Err(Error::Simulation(format!(
            "run hit max_time {} s before steady state ({} steps)",
            artifacts.config.pulse.max_time, artifacts.meta.steps
        )))
    }
}
