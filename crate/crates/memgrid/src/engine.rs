//! Time evolution: apply a constant-amplitude voltage pulse, alternate
//! solve / device-step until no device state changes, sample observables
//! along the way.
//!
//! The update is synchronous: one solve freezes all unit currents, then every
//! device steps from that snapshot, so results are independent of unit order.
//! Each device is driven by its unit's total current in the unit reference
//! frame; its orientation maps that to the own-frame current of the threshold
//! law. Steady state is exact `dx = 0` for every device — attainable in
//! finite time because each device is either sub-threshold or clamped at a
//! bound with outward drive.

use std::collections::BTreeMap;

use crate::analysis::{self, UnitClass};
use crate::device::device_step;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Node};
use crate::solver::{cross_section_currents, SolveResult, Workspace};

/// Constant-amplitude voltage pulse and integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    /// Applied voltage, volt. Either sign; never zero.
    pub amplitude: f64,
    /// Euler time step, second.
    pub dt: f64,
    /// Hard cap on simulated time, second.
    pub max_time: f64,
    /// Trace sampling interval in steps.
    pub record_every: usize,
}

impl PulseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude == 0.0 || !self.amplitude.is_finite() {
            return Err(Error::Config(format!(
                "pulse.amplitude: must be finite and nonzero, got {}",
                self.amplitude
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!(
                "pulse.dt: must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.max_time >= self.dt) {
            return Err(Error::Config(format!(
                "pulse.max_time: must be >= dt, got {} < {}",
                self.max_time, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("pulse.record_every: must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for PulseSpec {
    fn default() -> Self {
        PulseSpec {
            amplitude: 6.0,
            dt: 1e-6,
            max_time: 1.0,
            record_every: 200,
        }
    }
}

/// One trace sample.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// Simulated time, second.
    pub t: f64,
    /// Network entropy of the cut currents at this instant.
    pub entropy: f64,
    /// Source current, ampere.
    pub total_current: f64,
    /// Unit resistances of the watch list, ohm, in watch-list order.
    pub watch_resistances: Vec<f64>,
    /// Full per-unit resistance snapshot (lattice unit order), if requested.
    pub unit_resistances: Option<Vec<f64>>,
}

/// What to observe while a pulse runs.
#[derive(Debug, Clone)]
pub struct TraceSpec {
    /// Column boundary for the entropy cut.
    pub cut: usize,
    /// Units to track individually, by endpoints.
    pub watch: Vec<(Node, Node)>,
    /// Record the full unit-resistance snapshot at every sample.
    pub record_full: bool,
}

impl TraceSpec {
    /// Watch the horizontal units along the source row, central entropy cut.
    pub fn source_row_defaults(l: &Lattice) -> Self {
        let row = l.source().row;
        let watch = (0..l.cols() - 1)
            .map(|c| (Node::new(row, c), Node::new(row, c + 1)))
            .collect();
        TraceSpec {
            cut: (l.cols() - 1) / 2,
            watch,
            record_full: false,
        }
    }
}

/// Result of one pulse run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub lattice: Lattice,
    pub trace: Vec<TraceRecord>,
    /// True iff the steady-state predicate stopped the run (not the time cap).
    pub steady: bool,
    pub steps: u64,
}

fn make_record(
    t: f64,
    l: &Lattice,
    sr: &SolveResult,
    spec: &TraceSpec,
    watch_idx: &[Option<usize>],
) -> Result<TraceRecord> {
    let cut = cross_section_currents(sr, l, spec.cut)?;
    let entropy = analysis::entropy(&cut)?;
    let watch_resistances = watch_idx
        .iter()
        .map(|k| k.map_or(f64::INFINITY, |k| l.units()[k].resistance()))
        .collect();
    let unit_resistances = spec
        .record_full
        .then(|| l.units().iter().map(|u| u.resistance()).collect());
    Ok(TraceRecord {
        t,
        entropy,
        total_current: sr.total_current(),
        watch_resistances,
        unit_resistances,
    })
}

/// Apply the pulse until steady state or the time cap.
///
/// Returns the evolved lattice, the trace (sampled every `record_every`
/// steps plus one final sample), and whether steady state was reached.
pub fn run_pulse(l: &Lattice, pulse: &PulseSpec, spec: &TraceSpec) -> Result<RunOutcome> {
    pulse.validate()?;
    let mut lat = l.clone();
    let mut ws = Workspace::new(&lat)?;
    let watch_idx: Vec<Option<usize>> = spec
        .watch
        .iter()
        .map(|&(a, b)| lat.unit_between(a, b))
        .collect();

    // the time cap as a whole number of steps; the slack absorbs float dust
    // in the division so an exact multiple stays exact
    let max_steps = (((pulse.max_time / pulse.dt) * (1.0 - 1e-12)).ceil() as u64).max(1);

    let mut trace = Vec::new();
    let mut steps: u64 = 0;
    let steady;
    loop {
        let sr = ws.solve(&lat, pulse.amplitude)?;
        if steps % pulse.record_every as u64 == 0 {
            trace.push(make_record(
                steps as f64 * pulse.dt,
                &lat,
                &sr,
                spec,
                &watch_idx,
            )?);
        }
        let changed = step_devices(&mut lat, &sr, pulse.dt);
        steps += 1;
        if !changed {
            steady = true;
            break;
        }
        if steps >= max_steps {
            steady = false;
            break;
        }
    }
    // final sample of the settled (or capped) state
    let sr = ws.solve(&lat, pulse.amplitude)?;
    trace.push(make_record(
        steps as f64 * pulse.dt,
        &lat,
        &sr,
        spec,
        &watch_idx,
    )?);

    Ok(RunOutcome {
        lattice: lat,
        trace,
        steady,
        steps,
    })
}

/// Step every device from one frozen solve; true iff any state moved.
fn step_devices(l: &mut Lattice, sr: &SolveResult, dt: f64) -> bool {
    let p = *l.params();
    let mut changed = false;
    for (k, u) in l.units_mut().iter_mut().enumerate() {
        let i_unit = sr.unit_current(k);
        if u.switch_plus {
            let next = device_step(&u.dev_plus, i_unit, dt, &p);
            changed |= next.x != u.dev_plus.x;
            u.dev_plus = next;
        }
        if u.switch_minus {
            let next = device_step(&u.dev_minus, i_unit, dt, &p);
            changed |= next.x != u.dev_minus.x;
            u.dev_minus = next;
        }
    }
    changed
}

/// True iff one synchronous step changed nothing: `next` equals `prev` in
/// every device state. Both lattices must share a topology.
pub fn steady_state(prev: &Lattice, next: &Lattice) -> Result<bool> {
    if !prev.same_topology(next) {
        return Err(Error::InvalidInput(
            "steady_state: topology mismatch".into(),
        ));
    }
    Ok(prev
        .units()
        .iter()
        .zip(next.units())
        .all(|(a, b)| a.dev_plus.x == b.dev_plus.x && a.dev_minus.x == b.dev_minus.x))
}

/// Non-destructive readout: per-unit parallel resistance and ON/OFF class,
/// keyed by unit endpoints. Classification uses the geometric-mean threshold
/// directly so the readout is total even for out-of-range resistances.
pub fn read_state(l: &Lattice) -> BTreeMap<(Node, Node), (f64, UnitClass)> {
    let thr = analysis::classify_threshold(l.params());
    l.units()
        .iter()
        .map(|u| {
            let r = u.resistance();
            let class = if r < thr {
                UnitClass::On
            } else {
                UnitClass::Off
            };
            (u.endpoints(), (r, class))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceParams;
    use crate::lattice::LimitState;

    fn single_unit_lattice() -> Lattice {
        let mut l = Lattice::build_grid(2, 2, DeviceParams::default(), 200.0).unwrap();
        l.set_terminals(Node::new(0, 0), Node::new(0, 1)).unwrap();
        l.remove_nodes(&[Node::new(1, 0), Node::new(1, 1)]).unwrap()
    }

    fn quick_spec(l: &Lattice) -> TraceSpec {
        TraceSpec {
            cut: 0,
            watch: vec![(l.source(), l.sink())],
            record_full: false,
        }
    }

    #[test]
    fn single_unit_switches_on() {
        let l = single_unit_lattice();
        let pulse = PulseSpec {
            amplitude: 6.0,
            ..Default::default()
        };
        let out = run_pulse(&l, &pulse, &quick_spec(&l)).unwrap();
        assert!(out.steady);
        let u = &out.lattice.units()[0];
        // positive drive clamps dev_plus OFF, switches dev_minus fully ON
        assert_eq!(u.dev_plus.x, 200.0);
        assert_eq!(u.dev_minus.x, 10.0);
        // trace resistances never overshoot the attainable range
        for rec in &out.trace {
            let r = rec.watch_resistances[0];
            assert!(r >= 200.0 * 10.0 / 210.0 - 1e-12 && r <= 100.0 + 1e-12);
        }
    }

    #[test]
    fn sub_threshold_pulse_freezes_immediately() {
        let l = single_unit_lattice();
        // 0.5 V across 100 ohm: 5 mA unit current, below the 10 mA threshold
        let pulse = PulseSpec {
            amplitude: 0.5,
            ..Default::default()
        };
        let out = run_pulse(&l, &pulse, &quick_spec(&l)).unwrap();
        assert!(out.steady);
        assert_eq!(out.steps, 1);
        assert!(steady_state(&l, &out.lattice).unwrap());
    }

    #[test]
    fn sign_flip_gives_identical_unit_resistances() {
        let mut l = Lattice::build_grid(5, 5, DeviceParams::default(), 200.0).unwrap();
        l.initialize(LimitState::Off);
        let spec = TraceSpec::source_row_defaults(&l);
        let pos = run_pulse(
            &l,
            &PulseSpec {
                amplitude: 6.0,
                ..Default::default()
            },
            &spec,
        )
        .unwrap();
        let neg = run_pulse(
            &l,
            &PulseSpec {
                amplitude: -6.0,
                ..Default::default()
            },
            &spec,
        )
        .unwrap();
        assert_eq!(pos.steps, neg.steps);
        for (a, b) in pos.lattice.units().iter().zip(neg.lattice.units()) {
            // device roles swap exactly; the unit resistance map is bit-identical
            assert_eq!(a.dev_plus.x, b.dev_minus.x);
            assert_eq!(a.dev_minus.x, b.dev_plus.x);
            assert_eq!(a.resistance().to_bits(), b.resistance().to_bits());
        }
    }

    #[test]
    fn steady_state_predicate() {
        let l = single_unit_lattice();
        assert!(steady_state(&l, &l).unwrap());
        let mut moved = l.clone();
        moved.units_mut()[0].dev_minus.x = 150.0;
        assert!(!steady_state(&l, &moved).unwrap());
        let other = Lattice::build_grid(2, 2, DeviceParams::default(), 200.0).unwrap();
        assert!(steady_state(&l, &other).is_err());
    }

    #[test]
    fn trace_time_is_nondecreasing_and_ends_at_final_step() {
        let l = single_unit_lattice();
        let pulse = PulseSpec {
            amplitude: 6.0,
            record_every: 1000,
            ..Default::default()
        };
        let out = run_pulse(&l, &pulse, &quick_spec(&l)).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[0].t <= w[1].t);
        }
        let last = out.trace.last().unwrap();
        assert_eq!(last.t, out.steps as f64 * pulse.dt);
    }

    #[test]
    fn max_time_caps_run() {
        let l = single_unit_lattice();
        let pulse = PulseSpec {
            amplitude: 6.0,
            dt: 1e-6,
            max_time: 1e-4,
            record_every: 10,
        };
        let out = run_pulse(&l, &pulse, &quick_spec(&l)).unwrap();
        assert!(!out.steady);
        assert_eq!(out.steps, 100);
    }

    #[test]
    fn dynamics_initiate_at_terminal_adjacent_units() {
        // all-OFF reference grid: the horizontal units at the terminals carry
        // the largest unit currents and sit just above threshold, so the
        // solution grows inward from both ends
        let mut l = Lattice::build_grid(11, 11, DeviceParams::default(), 200.0).unwrap();
        l.initialize(LimitState::Off);
        let sr = crate::solver::solve_potentials(&l, 6.0).unwrap();
        let at_source = l.horizontal_unit(5, 0).unwrap();
        let at_sink = l.horizontal_unit(5, 9).unwrap();
        let i_max = sr
            .unit_currents()
            .iter()
            .fold(0.0f64, |m, i| m.max(i.abs()));
        assert!(sr.unit_current(at_source).abs() > l.params().i_threshold);
        assert!((sr.unit_current(at_source).abs() - i_max).abs() < 1e-12);
        assert!((sr.unit_current(at_sink).abs() - i_max).abs() < 1e-12);

        // one step moves exactly those units above threshold and no other
        let pulse = PulseSpec::default();
        let before = l.clone();
        let mut ws = Workspace::new(&l).unwrap();
        let sr = ws.solve(&l, pulse.amplitude).unwrap();
        step_devices(&mut l, &sr, pulse.dt);
        for (k, (u0, u1)) in before.units().iter().zip(l.units()).enumerate() {
            let moved = u0.dev_minus.x != u1.dev_minus.x || u0.dev_plus.x != u1.dev_plus.x;
            assert_eq!(moved, sr.unit_current(k).abs() >= l.params().i_threshold);
        }
    }

    #[test]
    fn pulse_validation_edges() {
        let ok = PulseSpec::default();
        assert!(ok.validate().is_ok());
        assert!(PulseSpec {
            amplitude: 0.0,
            ..ok
        }
        .validate()
        .is_err());
        assert!(PulseSpec {
            amplitude: f64::NAN,
            ..ok
        }
        .validate()
        .is_err());
        assert!(PulseSpec { dt: 0.0, ..ok }.validate().is_err());
        assert!(PulseSpec {
            max_time: 1e-7,
            ..ok
        }
        .validate()
        .is_err());
        assert!(PulseSpec {
            record_every: 0,
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn full_snapshots_recorded_on_request() {
        let l = single_unit_lattice();
        let spec = TraceSpec {
            record_full: true,
            ..quick_spec(&l)
        };
        let pulse = PulseSpec {
            record_every: 500,
            ..Default::default()
        };
        let out = run_pulse(&l, &pulse, &spec).unwrap();
        for rec in &out.trace {
            let snap = rec.unit_resistances.as_ref().expect("snapshot present");
            assert_eq!(snap.len(), l.unit_count());
        }
        // snapshots follow the state: first is all-OFF, last fully switched
        assert_eq!(
            out.trace
                .first()
                .unwrap()
                .unit_resistances
                .as_ref()
                .unwrap()[0],
            100.0
        );
        let last = out.trace.last().unwrap().unit_resistances.as_ref().unwrap()[0];
        assert!((last - 2000.0 / 210.0).abs() < 1e-9);
    }

    #[test]
    fn read_state_classifies_and_is_pure() {
        let mut l = single_unit_lattice();
        let map = read_state(&l);
        let (r, class) = map[&(Node::new(0, 0), Node::new(0, 1))];
        assert!((r - 100.0).abs() < 1e-12);
        assert_eq!(class, UnitClass::Off);

        l.units_mut()[0].dev_minus.x = 10.0;
        let snapshot = l.clone();
        let map = read_state(&l);
        let (r, class) = map[&(Node::new(0, 0), Node::new(0, 1))];
        assert!((r - 2000.0 / 210.0).abs() < 1e-9);
        assert_eq!(class, UnitClass::On);
        assert_eq!(l, snapshot);
        assert_eq!(read_state(&l), read_state(&l));
    }
}
