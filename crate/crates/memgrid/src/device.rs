//! Device-level model: threshold current-controlled bipolar memristive devices,
//! plus the generic memory-element interface they are an instance of.
//!
//! A device is an ohmic resistor whose resistance `x` (the memristance) drifts
//! at rate `gamma * (|i| - i_threshold)` in the direction of the driving
//! current whenever the current magnitude meets the threshold, and is frozen
//! otherwise. `x` is hard-clamped to `[r_on, r_off]`.

use crate::error::{Error, Result};

/// Physical constants of one memristive device. Strict SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Low (ON) memristance limit, ohm.
    pub r_on: f64,
    /// High (OFF) memristance limit, ohm.
    pub r_off: f64,
    /// Rate of memristance change above threshold, ohm / (s * A).
    pub gamma: f64,
    /// Current magnitude below which the state is frozen, ampere.
    pub i_threshold: f64,
}

impl DeviceParams {
    pub fn new(r_on: f64, r_off: f64, gamma: f64, i_threshold: f64) -> Result<Self> {
        let p = DeviceParams {
            r_on,
            r_off,
            gamma,
            i_threshold,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_on > 0.0 && self.r_on < self.r_off) {
            return Err(Error::Config(format!(
                "device.r_on/device.r_off: need 0 < r_on < r_off, got r_on={} r_off={}",
                self.r_on, self.r_off
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Config(format!(
                "device.gamma: must be > 0, got {}",
                self.gamma
            )));
        }
        if !(self.i_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "device.i_threshold: must be >= 0, got {}",
                self.i_threshold
            )));
        }
        Ok(())
    }

    /// Memory content of the device: `r_off / r_on`.
    pub fn memory_content(&self) -> f64 {
        self.r_off / self.r_on
    }
}

impl Default for DeviceParams {
    /// Reference parameter set: 10 / 200 ohm limits, 1e6 ohm/(s*A), 10 mA threshold.
    fn default() -> Self {
        DeviceParams {
            r_on: 10.0,
            r_off: 200.0,
            gamma: 1e6,
            i_threshold: 0.01,
        }
    }
}

/// Polarity of a device relative to its unit's a->b reference direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Own frame aligned with the unit frame (+1).
    Forward,
    /// Own frame opposed to the unit frame (-1).
    Reverse,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Reverse => -1.0,
        }
    }
}

/// Evolving state of one device: its memristance and fixed polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceState {
    /// Memristance, ohm. The response is `v = x * i_own`.
    pub x: f64,
    pub orientation: Orientation,
}

impl DeviceState {
    pub fn new(x: f64, orientation: Orientation) -> Self {
        DeviceState { x, orientation }
    }
}

/// Voltage across the device for a current given in the unit reference frame.
pub fn device_voltage(state: &DeviceState, i: f64) -> f64 {
    state.x * (state.orientation.sign() * i)
}

/// One explicit-Euler state update.
///
/// `i` is the current in the unit's reference direction; the device's
/// orientation is applied internally. Positive own-frame current drives `x`
/// toward `r_off`, negative toward `r_on`. Below threshold the state is
/// unchanged; the boundary `|i_own| == i_threshold` belongs to the active
/// branch (its contribution is zero).
pub fn device_step(state: &DeviceState, i: f64, dt: f64, p: &DeviceParams) -> DeviceState {
    debug_assert!(dt > 0.0);
    let i_own = state.orientation.sign() * i;
    let mag = i_own.abs();
    if mag < p.i_threshold {
        return *state;
    }
    let x =
        (state.x + i_own.signum() * p.gamma * (mag - p.i_threshold) * dt).clamp(p.r_on, p.r_off);
    DeviceState {
        x,
        orientation: state.orientation,
    }
}

type ResponseFn = Box<dyn Fn(&[f64], f64, f64) -> f64>;
type EvolutionFn = Box<dyn Fn(&[f64], f64, f64) -> Vec<f64>>;

/// Generic n-th order current-controlled memory element: output
/// `y = g(x, u, t) * u` and state flow `dx/dt = f(x, u, t)`.
///
/// Evaluation never mutates state; integrating `dx` is the caller's job.
pub struct Memelement {
    order: usize,
    response: ResponseFn,
    evolution: EvolutionFn,
}

impl Memelement {
    pub fn new(order: usize, response: ResponseFn, evolution: EvolutionFn) -> Self {
        Memelement {
            order,
            response,
            evolution,
        }
    }

    /// State dimension n.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Evaluate output and state derivative at `(x, u, t)`.
    pub fn eval(&self, x: &[f64], u: f64, t: f64) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.order {
            return Err(Error::InvalidInput(format!(
                "memelement state dimension {} != order {}",
                x.len(),
                self.order
            )));
        }
        let y = (self.response)(x, u, t) * u;
        let dx = (self.evolution)(x, u, t);
        if dx.len() != self.order {
            return Err(Error::InvalidInput(format!(
                "memelement evolution returned dimension {} != order {}",
                dx.len(),
                self.order
            )));
        }
        Ok((y, dx))
    }

    /// The threshold memristive device as a first-order instance:
    /// `g = x[0]`, `f` the threshold drift law (unclamped derivative).
    pub fn threshold_memristor(p: DeviceParams) -> Self {
        Memelement::new(
            1,
            Box::new(|x, _u, _t| x[0]),
            Box::new(move |_x, u, _t| {
                let mag = u.abs();
                if mag < p.i_threshold {
                    vec![0.0]
                } else {
                    vec![u.signum() * p.gamma * (mag - p.i_threshold)]
                }
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DeviceParams {
        DeviceParams::default()
    }

    fn fwd(x: f64) -> DeviceState {
        DeviceState::new(x, Orientation::Forward)
    }

    #[test]
    fn voltage_zero_current() {
        assert_eq!(device_voltage(&fwd(200.0), 0.0), 0.0);
    }

    #[test]
    fn voltage_ohms_law_both_limits() {
        assert!((device_voltage(&fwd(200.0), 0.03) - 6.0).abs() < 1e-12);
        assert!((device_voltage(&fwd(10.0), 0.6) - 6.0).abs() < 1e-12);
        // own-frame: a reverse device sees the negated current
        let rev = DeviceState::new(200.0, Orientation::Reverse);
        assert!((device_voltage(&rev, -0.03) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn step_below_threshold_is_identity() {
        let s = fwd(150.0);
        let s2 = device_step(&s, 0.005, 1e-6, &params());
        assert_eq!(s2.x, 150.0);
    }

    #[test]
    fn step_hand_computed_value() {
        // x=200, i_own=-0.03 A, dt=1e-6 s: x' = 200 - 1e6*(0.02)*1e-6 = 199.98
        let s = fwd(200.0);
        let s2 = device_step(&s, -0.03, 1e-6, &params());
        assert!((s2.x - 199.98).abs() <= 1e-12, "got {}", s2.x);
    }

    #[test]
    fn step_clamps_at_upper_bound() {
        let s = fwd(200.0);
        let s2 = device_step(&s, 0.03, 1e-6, &params());
        assert_eq!(s2.x, 200.0);
    }

    #[test]
    fn step_clamps_at_lower_bound() {
        let s = fwd(10.0);
        let s2 = device_step(&s, -0.5, 1e-3, &params());
        assert_eq!(s2.x, 10.0);
    }

    #[test]
    fn boundary_current_in_active_branch() {
        // |i_own| == i_threshold: active branch, zero contribution
        let s = fwd(150.0);
        let s2 = device_step(&s, 0.01, 1e-6, &params());
        assert_eq!(s2.x, 150.0);
    }

    #[test]
    fn orientation_antisymmetry() {
        let p = params();
        let a = device_step(&fwd(120.0), 0.04, 1e-6, &p);
        let b = device_step(
            &DeviceState::new(120.0, Orientation::Reverse),
            -0.04,
            1e-6,
            &p,
        );
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn memelement_zero_input() {
        let m = Memelement::threshold_memristor(params());
        let (y, dx) = m.eval(&[200.0], 0.0, 0.0).unwrap();
        assert_eq!(y, 0.0);
        assert_eq!(dx, vec![0.0]);
    }

    #[test]
    fn memelement_matches_device_model() {
        let p = params();
        let m = Memelement::threshold_memristor(p);
        let (y, dx) = m.eval(&[200.0], 0.03, 0.0).unwrap();
        assert!((y - 6.0).abs() < 1e-12);
        assert!((dx[0] - p.gamma * (0.03 - p.i_threshold)).abs() < 1e-9);
        // and agrees with device_voltage / device_step on the same point
        assert_eq!(y, device_voltage(&fwd(200.0), 0.03));
        let stepped = device_step(&fwd(200.0), 0.03, 1e-6, &p);
        // stepped toward r_off and clamped there
        assert_eq!(stepped.x, 200.0);
    }

    #[test]
    fn memelement_memoryless_limit() {
        let m = Memelement::new(1, Box::new(|x, _, _| x[0]), Box::new(|_, _, _| vec![0.0]));
        for u in [-1.0, 0.0, 0.5, 3.0] {
            let (_, dx) = m.eval(&[42.0], u, 0.0).unwrap();
            assert_eq!(dx, vec![0.0]);
        }
    }

    #[test]
    fn memelement_dimension_mismatch_rejected() {
        let m = Memelement::threshold_memristor(params());
        assert!(m.eval(&[1.0, 2.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DeviceParams::new(10.0, 200.0, 1e6, 0.01).is_ok());
        assert!(DeviceParams::new(200.0, 10.0, 1e6, 0.01).is_err());
        assert!(DeviceParams::new(0.0, 10.0, 1e6, 0.01).is_err());
        assert!(DeviceParams::new(10.0, 200.0, 0.0, 0.01).is_err());
        assert!(DeviceParams::new(10.0, 200.0, 1e6, -1.0).is_err());
    }
}
