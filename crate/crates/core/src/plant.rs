//! Coupled motor / gearbox / human-limb model of the knee actuator.
//!
//! Four configurations of the same plant are exposed, each as a transfer
//! function (where one exists) and as time-domain derivatives of the motor
//! mechanical state `[θ_m, θ̇_m]`:
//!
//! * closed-loop torque control (proportional voltage command on torque error),
//! * locked output, driven at full voltage (maximum torque),
//! * free output, driven at full voltage (maximum speed),
//! * unpowered and back-driven by a prescribed knee angle (backdrive torque).
//!
//! Winding inductance is neglected everywhere, so the current is algebraic in
//! the voltage and motor speed. The gear is ideal: `θ_2 = θ_m / n` and
//! `τ_2 = n·τ_1`. Human-side dynamics never integrate because the knee angle
//! is always prescribed (zero, free or a trajectory); `J_h` and `τ_h` are
//! carried for completeness only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::KneeTrajectory;
use crate::motor::MotorParams;
use crate::tf::RationalTF;

/// Coupling stiffness used when none is configured (N·m/rad).
///
/// Not an identified value: it places the closed-loop natural frequency of
/// the 36:1 prototype near its measured torque bandwidth. Feasible regions,
/// natural frequencies and backdrive torques all move with it.
pub const DEFAULT_COUPLING_STIFFNESS: f64 = 100.0;
pub const DEFAULT_SUPPLY_VOLTAGE: f64 = 42.0;
/// Shank inertia placeholder (kg·m²); unused by every implemented scenario.
pub const DEFAULT_HUMAN_INERTIA: f64 = 0.05;

/// Mechanical state of the rotor: `[angle (rad), velocity (rad/s)]`.
pub type MotorState = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivetrainConfig {
    pub gear_ratio: f64,
    pub coupling_stiffness: f64,
    pub coupling_damping: f64,
    pub supply_voltage: f64,
    pub human_inertia: f64,
}

impl DrivetrainConfig {
    pub fn with_gear_ratio(gear_ratio: f64) -> Self {
        DrivetrainConfig {
            gear_ratio,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gear_ratio >= 1.0) || !self.gear_ratio.is_finite() {
            return Err(Error::Domain {
                quantity: "gear ratio",
                value: self.gear_ratio,
                bound: ">= 1".into(),
            });
        }
        if !(self.coupling_stiffness > 0.0) || !self.coupling_stiffness.is_finite() {
            return Err(Error::validation("coupling_stiffness", "must be positive"));
        }
        if !(self.coupling_damping >= 0.0) || !self.coupling_damping.is_finite() {
            return Err(Error::validation("coupling_damping", "must be non-negative"));
        }
        if !(self.supply_voltage > 0.0) || !self.supply_voltage.is_finite() {
            return Err(Error::validation("supply_voltage", "must be positive"));
        }
        if !(self.human_inertia > 0.0) {
            return Err(Error::validation("human_inertia", "must be positive"));
        }
        Ok(())
    }
}

impl Default for DrivetrainConfig {
    fn default() -> Self {
        DrivetrainConfig {
            gear_ratio: 1.0,
            coupling_stiffness: DEFAULT_COUPLING_STIFFNESS,
            coupling_damping: 0.0,
            supply_voltage: DEFAULT_SUPPLY_VOLTAGE,
            human_inertia: DEFAULT_HUMAN_INERTIA,
        }
    }
}

/// PI gains of the torque loop. Only `ki = 0` has a closed-form model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlGains {
    pub kp: f64,
    pub ki: f64,
}

impl ControlGains {
    pub fn proportional(kp: f64) -> Self {
        ControlGains { kp, ki: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp > 0.0) || !self.kp.is_finite() {
            return Err(Error::validation("kp", "must be positive"));
        }
        if !(self.ki >= 0.0) || !self.ki.is_finite() {
            return Err(Error::validation("ki", "must be non-negative"));
        }
        Ok(())
    }

    fn require_proportional(&self) -> Result<()> {
        self.validate()?;
        if self.ki != 0.0 {
            return Err(Error::Unsupported(format!(
                "integral gain ki = {} (only ki = 0 is modelled)",
                self.ki
            )));
        }
        Ok(())
    }
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains::proportional(1.0)
    }
}

/// Every plant signal at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PlantState {
    pub motor_angle: f64,
    pub motor_velocity: f64,
    pub current: f64,
    pub gear_output_angle: f64,
    pub gear_input_torque: f64,
    pub gear_output_torque: f64,
    pub output_torque: f64,
    pub human_angle: f64,
    /// Exogenous; no implemented scenario drives it.
    pub human_torque: f64,
}

impl PlantState {
    pub fn output_speed(&self, gear_ratio: f64) -> f64 {
        self.motor_velocity / gear_ratio
    }
}

fn require_no_coupling_damping(d: &DrivetrainConfig) -> Result<()> {
    if d.coupling_damping != 0.0 {
        return Err(Error::Unsupported(format!(
            "coupling damping b_c = {} (the transfer-function model assumes b_c = 0)",
            d.coupling_damping
        )));
    }
    Ok(())
}

/// Closed-loop torque response `τ_a(s)/τ_r(s)` with the knee held still.
pub fn closed_loop_torque_tf(
    m: &MotorParams,
    d: &DrivetrainConfig,
    g: &ControlGains,
) -> Result<RationalTF> {
    d.validate()?;
    g.require_proportional()?;
    require_no_coupling_damping(d)?;
    let n = d.gear_ratio;
    let kc = d.coupling_stiffness;
    let (r, kt, kb, jm, bm) = (
        m.resistance,
        m.torque_constant,
        m.backemf_constant,
        m.rotor_inertia,
        m.damping,
    );
    let num = vec![0.0, 0.0, g.kp * kc * kt * n];
    let den = vec![
        n * n * r * jm,
        n * n * (r * bm + kb * kt),
        kc * (r + g.kp * kt * n),
    ];
    RationalTF::new(num, den)
}

/// Undamped natural frequency of the closed torque loop (rad/s).
pub fn natural_frequency(m: &MotorParams, d: &DrivetrainConfig, g: &ControlGains) -> Result<f64> {
    d.validate()?;
    g.validate()?;
    let n = d.gear_ratio;
    let stiffness = d.coupling_stiffness * (m.resistance + g.kp * m.torque_constant * n);
    let inertia = n * n * m.resistance * m.rotor_inertia;
    Ok((stiffness / inertia).sqrt())
}

/// Unpowered backdrive response `τ_a(s)/θ_h(s)`.
pub fn backdrive_tf(m: &MotorParams, d: &DrivetrainConfig) -> Result<RationalTF> {
    d.validate()?;
    require_no_coupling_damping(d)?;
    let n2 = d.gear_ratio * d.gear_ratio;
    let kc = d.coupling_stiffness;
    let jr = m.rotor_inertia * m.resistance;
    let c = m.electromechanical_damping();
    // -kc n² s (J R s + c) / (n² s (J R s + c) + R kc)
    let num = vec![-kc * n2 * jr, -kc * n2 * c, 0.0];
    let den = vec![n2 * jr, n2 * c, m.resistance * kc];
    RationalTF::new(num, den)
}

/// Winding current with `L = 0`, optionally clamped to `±I_max`.
pub fn winding_current(m: &MotorParams, voltage: f64, motor_velocity: f64, saturate: bool) -> f64 {
    let i = (voltage - m.backemf_constant * motor_velocity) / m.resistance;
    if saturate {
        i.clamp(-m.max_current, m.max_current)
    } else {
        i
    }
}

/// Output fixed at zero; the coupling spring loads the motor.
pub fn locked_output_derivatives(
    x: &MotorState,
    m: &MotorParams,
    d: &DrivetrainConfig,
    voltage: f64,
) -> MotorState {
    let [angle, velocity] = *x;
    let n = d.gear_ratio;
    let current = winding_current(m, voltage, velocity, true);
    let load = d.coupling_stiffness * angle / (n * n) + d.coupling_damping * velocity / (n * n);
    let accel = (m.torque_constant * current - m.damping * velocity - load) / m.rotor_inertia;
    [velocity, accel]
}

/// Output spins freely; no coupling load.
pub fn free_output_derivatives(
    x: &MotorState,
    m: &MotorParams,
    _d: &DrivetrainConfig,
    voltage: f64,
) -> MotorState {
    let [_, velocity] = *x;
    let current = winding_current(m, voltage, velocity, true);
    let accel = (m.torque_constant * current - m.damping * velocity) / m.rotor_inertia;
    [velocity, accel]
}

/// Unpowered motor (`V = 0`, windings shorted through `R`) dragged by the
/// knee through the coupling.
pub fn backdriven_derivatives(
    x: &MotorState,
    m: &MotorParams,
    d: &DrivetrainConfig,
    human_angle: f64,
    human_velocity: f64,
) -> MotorState {
    let [angle, velocity] = *x;
    let n = d.gear_ratio;
    let current = -m.backemf_constant * velocity / m.resistance;
    let output_torque = coupling_torque(d, angle, velocity, human_angle, human_velocity);
    let gear_input_torque = output_torque / n;
    let accel =
        (m.torque_constant * current - m.damping * velocity - gear_input_torque) / m.rotor_inertia;
    [velocity, accel]
}

/// Torque-loop derivatives: the voltage command is `kp·(τ_r − τ_a)`, unsaturated,
/// so the trajectory is exactly the system of [`closed_loop_torque_tf`].
pub fn closed_loop_derivatives(
    x: &MotorState,
    m: &MotorParams,
    d: &DrivetrainConfig,
    g: &ControlGains,
    torque_reference: f64,
) -> MotorState {
    let [angle, velocity] = *x;
    let n = d.gear_ratio;
    let output_torque = coupling_torque(d, angle, velocity, 0.0, 0.0);
    let voltage = g.kp * (torque_reference - output_torque);
    let current = winding_current(m, voltage, velocity, false);
    let accel = (m.torque_constant * current - m.damping * velocity - output_torque / n)
        / m.rotor_inertia;
    [velocity, accel]
}

/// Torque transmitted through the coupling to the human, `k_c(θ_2 − θ_h) + b_c(θ̇_2 − θ̇_h)`.
fn coupling_torque(
    d: &DrivetrainConfig,
    motor_angle: f64,
    motor_velocity: f64,
    human_angle: f64,
    human_velocity: f64,
) -> f64 {
    let n = d.gear_ratio;
    d.coupling_stiffness * (motor_angle / n - human_angle)
        + d.coupling_damping * (motor_velocity / n - human_velocity)
}

/// A plant configuration that can be integrated in time.
pub trait Scenario {
    fn derivatives(&self, t: f64, x: &MotorState) -> MotorState;

    /// All plant signals implied by the state at time `t`.
    fn observe(&self, t: f64, x: &MotorState) -> PlantState;

    fn gear_ratio(&self) -> f64;

    /// Upper bound on the magnitude of the linearised eigenvalues (1/s);
    /// sets the largest stable explicit step.
    fn stiffness_bound(&self) -> f64;
}

fn spring_damper_bound(m: &MotorParams, d: &DrivetrainConfig, extra_stiffness: f64) -> f64 {
    let n2 = d.gear_ratio * d.gear_ratio;
    let damping = m.damping
        + m.torque_constant * m.backemf_constant / m.resistance
        + d.coupling_damping / n2;
    let stiffness = d.coupling_stiffness / n2 + extra_stiffness;
    damping / m.rotor_inertia + (stiffness / m.rotor_inertia).sqrt()
}

fn build_state(
    x: &MotorState,
    d: &DrivetrainConfig,
    current: f64,
    output_torque: f64,
    human_angle: f64,
) -> PlantState {
    let n = d.gear_ratio;
    let gear_input_torque = output_torque / n;
    PlantState {
        motor_angle: x[0],
        motor_velocity: x[1],
        current,
        gear_output_angle: x[0] / n,
        gear_input_torque,
        gear_output_torque: n * gear_input_torque,
        output_torque,
        human_angle,
        human_torque: 0.0,
    }
}

/// Maximum-torque configuration.
#[derive(Debug, Clone, Copy)]
pub struct LockedOutput<'a> {
    pub motor: &'a MotorParams,
    pub drive: &'a DrivetrainConfig,
    pub voltage: f64,
}

impl Scenario for LockedOutput<'_> {
    fn derivatives(&self, _t: f64, x: &MotorState) -> MotorState {
        locked_output_derivatives(x, self.motor, self.drive, self.voltage)
    }

    fn observe(&self, _t: f64, x: &MotorState) -> PlantState {
        let current = winding_current(self.motor, self.voltage, x[1], true);
        let torque = coupling_torque(self.drive, x[0], x[1], 0.0, 0.0);
        build_state(x, self.drive, current, torque, 0.0)
    }

    fn gear_ratio(&self) -> f64 {
        self.drive.gear_ratio
    }

    fn stiffness_bound(&self) -> f64 {
        spring_damper_bound(self.motor, self.drive, 0.0)
    }
}

/// Maximum-speed configuration.
#[derive(Debug, Clone, Copy)]
pub struct FreeOutput<'a> {
    pub motor: &'a MotorParams,
    pub drive: &'a DrivetrainConfig,
    pub voltage: f64,
}

impl Scenario for FreeOutput<'_> {
    fn derivatives(&self, _t: f64, x: &MotorState) -> MotorState {
        free_output_derivatives(x, self.motor, self.drive, self.voltage)
    }

    fn observe(&self, _t: f64, x: &MotorState) -> PlantState {
        let current = winding_current(self.motor, self.voltage, x[1], true);
        build_state(x, self.drive, current, 0.0, 0.0)
    }

    fn gear_ratio(&self) -> f64 {
        self.drive.gear_ratio
    }

    fn stiffness_bound(&self) -> f64 {
        let m = self.motor;
        (m.damping + m.torque_constant * m.backemf_constant / m.resistance) / m.rotor_inertia
    }
}

/// Unpowered actuator dragged along a knee trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Backdriven<'a, K: ?Sized> {
    pub motor: &'a MotorParams,
    pub drive: &'a DrivetrainConfig,
    pub knee: &'a K,
}

impl<K: KneeTrajectory + ?Sized> Scenario for Backdriven<'_, K> {
    fn derivatives(&self, t: f64, x: &MotorState) -> MotorState {
        backdriven_derivatives(
            x,
            self.motor,
            self.drive,
            self.knee.angle(t),
            self.knee.velocity(t),
        )
    }

    fn observe(&self, t: f64, x: &MotorState) -> PlantState {
        let human_angle = self.knee.angle(t);
        let current = -self.motor.backemf_constant * x[1] / self.motor.resistance;
        let torque = coupling_torque(self.drive, x[0], x[1], human_angle, self.knee.velocity(t));
        build_state(x, self.drive, current, torque, human_angle)
    }

    fn gear_ratio(&self) -> f64 {
        self.drive.gear_ratio
    }

    fn stiffness_bound(&self) -> f64 {
        spring_damper_bound(self.motor, self.drive, 0.0)
    }
}

/// Proportional torque loop tracking `reference(t)`.
pub struct ClosedLoop<'a, F> {
    pub motor: &'a MotorParams,
    pub drive: &'a DrivetrainConfig,
    pub gains: &'a ControlGains,
    pub reference: F,
}

impl<F: Fn(f64) -> f64> Scenario for ClosedLoop<'_, F> {
    fn derivatives(&self, t: f64, x: &MotorState) -> MotorState {
        closed_loop_derivatives(x, self.motor, self.drive, self.gains, (self.reference)(t))
    }

    fn observe(&self, t: f64, x: &MotorState) -> PlantState {
        let torque = coupling_torque(self.drive, x[0], x[1], 0.0, 0.0);
        let voltage = self.gains.kp * ((self.reference)(t) - torque);
        let current = winding_current(self.motor, voltage, x[1], false);
        build_state(x, self.drive, current, torque, 0.0)
    }

    fn gear_ratio(&self) -> f64 {
        self.drive.gear_ratio
    }

    fn stiffness_bound(&self) -> f64 {
        let m = self.motor;
        let extra = self.gains.kp * m.torque_constant * self.drive.coupling_stiffness
            / (self.drive.gear_ratio * m.resistance);
        spring_damper_bound(m, self.drive, extra)
    }
}
