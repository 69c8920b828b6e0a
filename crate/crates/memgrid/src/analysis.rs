//! Observables and readout: network entropy over a cut, ON/OFF unit
//! classification, solution-path extraction, switching-rate series and
//! memory-content sweeps.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::config::ExperimentConfig;
use crate::device::DeviceParams;
use crate::engine::{self, TraceRecord, TraceSpec};
use crate::error::{Error, Result};
use crate::lattice::Node;

/// Readout class of a basic unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitClass {
    On,
    Off,
}

/// Shannon-type entropy of magnitude-normalized currents:
/// `sigma = -sum p_k ln p_k` with `p_k = |I_k| / sum |I_k|`; terms with
/// `p_k = 0` contribute nothing.
pub fn entropy(cut_currents: &[f64]) -> Result<f64> {
    let total: f64 = cut_currents.iter().map(|i| i.abs()).sum();
    if total == 0.0 {
        return Err(Error::Simulation(
            "entropy undefined: all cut currents are zero".into(),
        ));
    }
    let mut sigma = 0.0;
    for i in cut_currents {
        let p = i.abs() / total;
        if p > 0.0 {
            sigma -= p * p.ln();
        }
    }
    Ok(sigma)
}

/// Attainable unit-resistance extremes: one-ON-one-OFF and both-OFF.
pub fn unit_resistance_range(p: &DeviceParams) -> (f64, f64) {
    (p.r_on * p.r_off / (p.r_on + p.r_off), p.r_off / 2.0)
}

/// ON/OFF boundary: geometric mean of the attainable extremes. Scale-free,
/// so it separates the classes for both strong and weak memory content.
pub fn classify_threshold(p: &DeviceParams) -> f64 {
    let (lo, hi) = unit_resistance_range(p);
    (lo * hi).sqrt()
}

/// Classify a unit resistance; rejects values outside the attainable range.
pub fn classify_unit(r_unit: f64, p: &DeviceParams) -> Result<UnitClass> {
    let (lo, hi) = unit_resistance_range(p);
    // tiny relative slack for rounding at the extremes
    if !(r_unit >= lo * (1.0 - 1e-9) && r_unit <= hi * (1.0 + 1e-9)) {
        return Err(Error::InvalidInput(format!(
            "unit resistance {} outside attainable range [{}, {}]",
            r_unit, lo, hi
        )));
    }
    Ok(if r_unit < classify_threshold(p) {
        UnitClass::On
    } else {
        UnitClass::Off
    })
}

/// Outcome of path extraction over the ON sub-network.
#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    /// Every unit classified ON, by endpoints.
    pub on_units: BTreeSet<(Node, Node)>,
    /// A shortest source->sink path over ON units, as a node list; `None`
    /// when the terminals are not connected by ON units.
    pub path: Option<Vec<Node>>,
    /// Number of units on the path (0 when there is no path).
    pub path_length: usize,
    /// ON units not used by the returned path.
    pub extra_on_count: usize,
}

/// Breadth-first search over ON units from source to sink.
///
/// Neighbor exploration order is fixed (right, left, down, up), so results
/// are deterministic even with equal-length alternatives.
pub fn extract_path(
    l: &crate::lattice::Lattice,
    classes: &BTreeMap<(Node, Node), (f64, UnitClass)>,
) -> PathReport {
    let on_units: BTreeSet<(Node, Node)> = classes
        .iter()
        .filter(|(_, &(_, class))| class == UnitClass::On)
        .map(|(&k, _)| k)
        .collect();
    let is_on = |a: Node, b: Node| {
        let key = if a < b { (a, b) } else { (b, a) };
        on_units.contains(&key)
    };
    let neighbors = |n: Node| {
        let mut out = Vec::with_capacity(4);
        out.push(Node::new(n.row, n.col + 1));
        if n.col > 0 {
            out.push(Node::new(n.row, n.col - 1));
        }
        out.push(Node::new(n.row + 1, n.col));
        if n.row > 0 {
            out.push(Node::new(n.row - 1, n.col));
        }
        out
    };

    let mut prev: BTreeMap<Node, Node> = BTreeMap::new();
    let mut seen: BTreeSet<Node> = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(l.source());
    queue.push_back(l.source());
    while let Some(n) = queue.pop_front() {
        if n == l.sink() {
            break;
        }
        for m in neighbors(n) {
            if l.is_live(m) && !seen.contains(&m) && is_on(n, m) {
                seen.insert(m);
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }

    if !seen.contains(&l.sink()) {
        let extra = on_units.len();
        return PathReport {
            on_units,
            path: None,
            path_length: 0,
            extra_on_count: extra,
        };
    }
    let mut path = vec![l.sink()];
    while *path.last().unwrap() != l.source() {
        path.push(prev[path.last().unwrap()]);
    }
    path.reverse();
    let path_length = path.len() - 1;
    let extra_on_count = on_units.len() - path_length;
    PathReport {
        on_units,
        path: Some(path),
        path_length,
        extra_on_count,
    }
}

/// One entropy sample along a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub t_seconds: f64,
    /// Time normalized by the run length.
    pub t_normalized: f64,
    pub sigma: f64,
}

/// Entropy trajectory of one run at a fixed cut.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    /// Memory content `r_off / r_on` of the run.
    pub ratio: f64,
    /// Column boundary of the cut.
    pub cut: usize,
    pub samples: Vec<EntropySample>,
}

impl EntropySeries {
    pub fn from_trace(trace: &[TraceRecord], ratio: f64, cut: usize) -> Self {
        let t_final = trace.last().map_or(0.0, |r| r.t);
        let samples = trace
            .iter()
            .map(|r| EntropySample {
                t_seconds: r.t,
                t_normalized: if t_final > 0.0 { r.t / t_final } else { 0.0 },
                sigma: r.entropy,
            })
            .collect();
        EntropySeries {
            ratio,
            cut,
            samples,
        }
    }

    pub fn initial_sigma(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.sigma)
    }

    pub fn final_sigma(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.sigma)
    }
}

/// Absolute unit-resistance switching rate of one watched unit.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub unit: (Node, Node),
    /// (interval midpoint time, |dR/dt|) per sampled interval.
    pub samples: Vec<(f64, f64)>,
}

impl RateSeries {
    /// Midpoint time of the interval with the largest rate (earliest on ties).
    pub fn peak_time(&self) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for &(t, rate) in &self.samples {
            if best.map_or(true, |(_, br)| rate > br) {
                best = Some((t, rate));
            }
        }
        best.map(|(t, _)| t)
    }
}

/// Finite-difference `|dR/dt|` per sampled interval for every watched unit.
pub fn switching_rate_series(
    trace: &[TraceRecord],
    watch: &[(Node, Node)],
) -> Result<Vec<RateSeries>> {
    if trace.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "switching rates need at least 2 trace samples, got {}",
            trace.len()
        )));
    }
    Ok(watch
        .iter()
        .enumerate()
        .map(|(w, &unit)| {
            let samples = trace
                .windows(2)
                .map(|pair| {
                    let dt = pair[1].t - pair[0].t;
                    let (r0, r1) = (pair[0].watch_resistances[w], pair[1].watch_resistances[w]);
                    // an unchanged unit (including a removed one pinned at
                    // infinity) has zero rate
                    let rate = if r0 == r1 {
                        0.0
                    } else {
                        ((r1 - r0) / dt).abs()
                    };
                    ((pair[0].t + pair[1].t) / 2.0, rate)
                })
                .collect();
            RateSeries { unit, samples }
        })
        .collect())
}

/// Run one fresh pulse per `(r_on, amplitude)` pair on the base
/// configuration and collect the entropy trajectory of each. Entries run
/// concurrently (each on its own lattice); per-entry failures are reported
/// in place without aborting the sweep.
pub fn sweep_memory_content(
    base: &ExperimentConfig,
    pairs: &[(f64, f64)],
) -> Vec<Result<EntropySeries>> {
    use rayon::prelude::*;
    pairs
        .par_iter()
        .map(|&(r_on, amplitude)| {
            let mut cfg = base.clone();
            cfg.device.r_on = r_on;
            cfg.pulse.amplitude = amplitude;
            cfg.validate()?;
            let lattice = cfg.build_lattice()?;
            let spec = TraceSpec {
                cut: cfg.entropy_cut,
                watch: Vec::new(),
                record_full: false,
            };
            let out = engine::run_pulse(&lattice, &cfg.pulse, &spec)?;
            if !out.steady {
                return Err(Error::Simulation(format!(
                    "sweep entry r_on={} V={} hit max_time before steady state",
                    r_on, amplitude
                )));
            }
            Ok(EntropySeries::from_trace(
                &out.trace,
                cfg.device.memory_content(),
                cfg.entropy_cut,
            ))
        })
        .collect()
}
