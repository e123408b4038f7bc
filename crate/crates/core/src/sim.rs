//! Fixed-step time integration of the plant scenarios and the metrics read
//! off them: peak locked-output torque, peak free-output speed, backdrive
//! torque along a knee trajectory, and analytic frequency response.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{GaitTrace, KneeTrajectory};
use crate::motor::MotorParams;
use crate::plant::{Backdriven, DrivetrainConfig, FreeOutput, LockedOutput, MotorState, Scenario};
use crate::tf::RationalTF;

pub const DEFAULT_DT: f64 = 5e-5;

/// Knobs for the metric simulations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    /// Sample step (s). Stiff design points are integrated with an integer
    /// number of sub-steps per sample.
    pub dt: f64,
    /// Rate below which a response counts as settled (output units per s).
    pub steady_rate: f64,
    /// The rate must stay below `steady_rate` this long (s).
    pub settle_window: f64,
    /// Hard stop for the settling simulations (s).
    pub max_duration: f64,
    /// Largest `|λ|·dt` allowed for the explicit step.
    pub stability_limit: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: DEFAULT_DT,
            steady_rate: 1e-3,
            settle_window: 0.25,
            max_duration: 60.0,
            stability_limit: 0.5,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("steady_rate", self.steady_rate),
            ("settle_window", self.settle_window),
            ("max_duration", self.max_duration),
            ("stability_limit", self.stability_limit),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Number of integration sub-steps per sample for a system whose
    /// eigenvalues are bounded by `stiffness`.
    pub fn substeps(&self, stiffness: f64) -> usize {
        ((stiffness * self.dt / self.stability_limit).ceil() as usize).max(1)
    }
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    x: &[f64; N],
    dt: f64,
) -> [f64; N] {
    let offset = |x: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| x[i] + h * k[i])
    };
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * dt, &offset(x, &k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, &offset(x, &k2, 0.5 * dt));
    let k4 = f(t + dt, &offset(x, &k3, dt));
    std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Integrate `ẋ = f(t, x)` from `x0` with `substeps` RK4 steps per sample of
/// width `dt`, handing every sample (including the initial one) to `observe`
/// until it breaks or `max_samples` is reached.
pub fn integrate_with<const N: usize, B>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: [f64; N],
    dt: f64,
    substeps: usize,
    max_samples: usize,
    mut observe: impl FnMut(usize, f64, &[f64; N]) -> ControlFlow<B>,
) -> Result<Option<B>> {
    let h = dt / substeps as f64;
    let mut x = x0;
    for k in 0..max_samples {
        let t = k as f64 * dt;
        if let ControlFlow::Break(b) = observe(k, t, &x) {
            return Ok(Some(b));
        }
        for j in 0..substeps {
            x = rk4_step(&f, t + j as f64 * h, &x, h);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k + 1,
                time: (k + 1) as f64 * dt,
            });
        }
    }
    Ok(None)
}

/// Samples `x(k·dt)` for `k = 0..=round(duration/dt)`.
pub fn integrate_ode<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: [f64; N],
    duration: f64,
    dt: f64,
) -> Result<Vec<[f64; N]>> {
    check_step(duration, dt)?;
    let samples = (duration / dt).round() as usize + 1;
    let mut out = Vec::with_capacity(samples);
    integrate_with(f, x0, dt, 1, samples, |_, _, x| {
        out.push(*x);
        ControlFlow::<()>::Continue(())
    })?;
    Ok(out)
}

fn check_step(duration: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::validation("dt", "must be positive"));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::validation("duration", "must be non-negative"));
    }
    Ok(())
}

/// Uniformly sampled record of a scenario simulation.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimTrace {
    pub dt: f64,
    pub time: Vec<f64>,
    pub motor_angle: Vec<f64>,
    pub motor_velocity: Vec<f64>,
    pub current: Vec<f64>,
    pub output_torque: Vec<f64>,
    pub output_speed: Vec<f64>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "time_s",
            "theta_m_rad",
            "theta_m_dot_rad_s",
            "current_a",
            "tau_a_nm",
            "output_speed_rad_s",
        ])?;
        for k in 0..self.len() {
            w.write_record(
                [
                    self.time[k],
                    self.motor_angle[k],
                    self.motor_velocity[k],
                    self.current[k],
                    self.output_torque[k],
                    self.output_speed[k],
                ]
                .map(|v| v.to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrate a plant scenario with a plain fixed step `dt` and record every step.
pub fn integrate<S: Scenario>(
    scenario: &S,
    x0: MotorState,
    duration: f64,
    dt: f64,
) -> Result<SimTrace> {
    check_step(duration, dt)?;
    record(scenario, x0, duration, dt, 1)
}

/// Like [`integrate`], sub-stepping stiff systems as `opts` requires.
pub fn simulate<S: Scenario>(
    scenario: &S,
    x0: MotorState,
    duration: f64,
    opts: &SimOptions,
) -> Result<SimTrace> {
    opts.validate()?;
    check_step(duration, opts.dt)?;
    record(scenario, x0, duration, opts.dt, opts.substeps(scenario.stiffness_bound()))
}

fn record<S: Scenario>(
    scenario: &S,
    x0: MotorState,
    duration: f64,
    dt: f64,
    substeps: usize,
) -> Result<SimTrace> {
    let samples = (duration / dt).round() as usize + 1;
    let n = scenario.gear_ratio();
    let mut trace = SimTrace {
        dt,
        ..Default::default()
    };
    integrate_with(
        |t, x| scenario.derivatives(t, x),
        x0,
        dt,
        substeps,
        samples,
        |_, t, x| {
            let s = scenario.observe(t, x);
            trace.time.push(t);
            trace.motor_angle.push(s.motor_angle);
            trace.motor_velocity.push(s.motor_velocity);
            trace.current.push(s.current);
            trace.output_torque.push(s.output_torque);
            trace.output_speed.push(s.output_speed(n));
            ControlFlow::<()>::Continue(())
        },
    )?;
    Ok(trace)
}

/// Peak output-side reading of a settling simulation.
fn settle_peak<S: Scenario>(
    scenario: &S,
    opts: &SimOptions,
    value: impl Fn(f64, &MotorState) -> f64,
    rate: impl Fn(f64, &MotorState) -> f64,
) -> Result<f64> {
    opts.validate()?;
    let substeps = opts.substeps(scenario.stiffness_bound());
    let max_samples = (opts.max_duration / opts.dt).ceil() as usize + 1;
    let window = (opts.settle_window / opts.dt).ceil() as usize;
    let mut peak = 0.0f64;
    let mut calm = 0usize;
    integrate_with(
        |t, x| scenario.derivatives(t, x),
        [0.0, 0.0],
        opts.dt,
        substeps,
        max_samples,
        |_, t, x| {
            peak = peak.max(value(t, x).abs());
            if rate(t, x).abs() < opts.steady_rate {
                calm += 1;
            } else {
                calm = 0;
            }
            if t > 0.0 && calm > window {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    )?;
    Ok(peak)
}

/// Peak output torque (N·m) with the output locked and the full supply
/// voltage applied from rest, current limited to `I_max`.
pub fn simulate_max_torque(m: &MotorParams, d: &DrivetrainConfig, opts: &SimOptions) -> Result<f64> {
    d.validate()?;
    let sc = LockedOutput {
        motor: m,
        drive: d,
        voltage: d.supply_voltage,
    };
    let n = d.gear_ratio;
    let kc = d.coupling_stiffness;
    settle_peak(&sc, opts, |t, x| sc.observe(t, x).output_torque, |_, x| kc * x[1] / n)
}

/// Peak output speed (rad/s) with a free output and the full supply voltage
/// applied from rest, current limited to `I_max`.
pub fn simulate_max_speed(m: &MotorParams, d: &DrivetrainConfig, opts: &SimOptions) -> Result<f64> {
    d.validate()?;
    let sc = FreeOutput {
        motor: m,
        drive: d,
        voltage: d.supply_voltage,
    };
    let n = d.gear_ratio;
    settle_peak(&sc, opts, |_, x| x[1] / n, |t, x| sc.derivatives(t, x)[1] / n)
}

/// Steady-state free-output speed in closed form (rad/s at the output): the
/// unsaturated equilibrium, or the current-limited one when the former would
/// draw more than `I_max`.
pub fn steady_free_speed(m: &MotorParams, d: &DrivetrainConfig) -> f64 {
    let unsaturated = d.supply_voltage * m.torque_constant / m.electromechanical_damping();
    let limited = m.torque_constant * m.max_current / m.damping;
    unsaturated.min(limited) / d.gear_ratio
}

/// Backdrive torque over the steady part of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackdriveTorque {
    /// Root mean square of the output torque (N·m).
    pub average: f64,
    /// Largest absolute output torque (N·m).
    pub peak: f64,
}

/// Drive the unpowered actuator along `knee` for `cycles` periods from rest,
/// discard the first period and summarise the rest.
pub fn simulate_backdrive_with<K: KneeTrajectory + ?Sized>(
    m: &MotorParams,
    d: &DrivetrainConfig,
    knee: &K,
    period: f64,
    cycles: usize,
    opts: &SimOptions,
) -> Result<BackdriveTorque> {
    d.validate()?;
    opts.validate()?;
    if cycles < 2 {
        return Err(Error::validation("cycles", "need at least two (the first is discarded)"));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::validation("period", "must be positive"));
    }
    let sc = Backdriven {
        motor: m,
        drive: d,
        knee,
    };
    let per_cycle = (period / opts.dt).round() as usize;
    let samples = per_cycle * cycles;
    let substeps = opts.substeps(sc.stiffness_bound());
    let mut sum_sq = 0.0;
    let mut peak = 0.0f64;
    let mut count = 0usize;
    integrate_with(
        |t, x| sc.derivatives(t, x),
        [0.0, 0.0],
        opts.dt,
        substeps,
        samples,
        |k, t, x| {
            if k >= per_cycle {
                let torque = sc.observe(t, x).output_torque;
                sum_sq += torque * torque;
                peak = peak.max(torque.abs());
                count += 1;
            }
            ControlFlow::<()>::Continue(())
        },
    )?;
    Ok(BackdriveTorque {
        average: (sum_sq / count as f64).sqrt(),
        peak,
    })
}

/// Backdrive torque along a recorded or synthetic single-knee trace. The trace
/// must span at least three gait cycles; cycle length defaults to 1 s when the
/// trace does not carry one.
pub fn simulate_backdrive(
    m: &MotorParams,
    d: &DrivetrainConfig,
    gait: &GaitTrace,
    opts: &SimOptions,
) -> Result<BackdriveTorque> {
    let period = gait.cycle_period.unwrap_or(1.0);
    let cycles = ((gait.duration() + 1e-9) / period).floor() as usize;
    if cycles < 3 {
        return Err(Error::validation(
            "gait trace",
            format!("covers {cycles} cycle(s) of {period} s; at least 3 are required"),
        ));
    }
    let knee = gait.knee_interpolant()?;
    let shifted = Shifted {
        inner: &knee,
        offset: gait.start_time(),
    };
    simulate_backdrive_with(m, d, &shifted, period, cycles, opts)
}

struct Shifted<'a, K> {
    inner: &'a K,
    offset: f64,
}

impl<K: KneeTrajectory> KneeTrajectory for Shifted<'_, K> {
    fn angle(&self, t: f64) -> f64 {
        self.inner.angle(t + self.offset)
    }
    fn velocity(&self, t: f64) -> f64 {
        self.inner.velocity(t + self.offset)
    }
}

/// Amplitude of the `freq` component of a uniformly sampled signal, by
/// projection onto sine and cosine over the whole number of periods that
/// ends at the last sample.
pub fn tone_amplitude(signal: &[f64], dt: f64, freq: f64) -> f64 {
    let per = 1.0 / (freq * dt);
    let available = signal.len() as f64 / per;
    let periods = available.floor().max(1.0);
    let count = ((periods * per).round() as usize).min(signal.len());
    let start = signal.len() - count;
    let (mut a, mut b) = (0.0, 0.0);
    for (k, &v) in signal[start..].iter().enumerate() {
        let phase = 2.0 * PI * freq * (start + k) as f64 * dt;
        a += v * phase.sin();
        b += v * phase.cos();
    }
    2.0 * (a * a + b * b).sqrt() / count as f64
}

/// Magnitude and phase of a transfer function over log-spaced frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyResponse {
    pub frequencies: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
}

impl FrequencyResponse {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["frequency_hz", "magnitude_db", "phase_deg"])?;
        for k in 0..self.frequencies.len() {
            w.write_record(
                [self.frequencies[k], self.magnitude_db[k], self.phase_deg[k]].map(|v| v.to_string()),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

fn magnitude_db(tf: &RationalTF, f: f64) -> f64 {
    20.0 * tf.eval_hz(f).norm().log10()
}

pub fn frequency_response(tf: &RationalTF, f_lo: f64, f_hi: f64, points: usize) -> Result<FrequencyResponse> {
    tf.validate()?;
    if !(f_lo > 0.0) || !(f_lo < f_hi) || !f_hi.is_finite() {
        return Err(Error::validation("frequency range", "need 0 < f_lo < f_hi"));
    }
    if points < 2 {
        return Err(Error::validation("points", "need at least 2"));
    }
    let ratio = (f_hi / f_lo).ln();
    let frequencies: Vec<f64> = (0..points)
        .map(|k| f_lo * (ratio * k as f64 / (points - 1) as f64).exp())
        .collect();
    let mut phase_deg = Vec::with_capacity(points);
    let mut previous: Option<f64> = None;
    for &f in &frequencies {
        let mut p = tf.eval_hz(f).arg().to_degrees();
        if let Some(prev) = previous {
            p -= 360.0 * ((p - prev) / 360.0).round();
        }
        phase_deg.push(p);
        previous = Some(p);
    }
    Ok(FrequencyResponse {
        magnitude_db: frequencies.iter().map(|&f| magnitude_db(tf, f)).collect(),
        frequencies,
        phase_deg,
    })
}

pub const BANDWIDTH_SEARCH_LO: f64 = 1e-3;
pub const BANDWIDTH_SEARCH_HI: f64 = 1e4;

/// Lowest frequency (Hz) at which the magnitude is 3 dB below its DC value.
pub fn bandwidth_neg3db(tf: &RationalTF) -> Result<f64> {
    tf.validate()?;
    let dc = tf
        .dc_gain()
        .filter(|g| *g != 0.0 && g.is_finite())
        .ok_or_else(|| Error::validation("transfer function", "needs a finite nonzero DC gain"))?;
    let threshold = 20.0 * dc.abs().log10() - 3.0;
    let below = |f: f64| magnitude_db(tf, f) <= threshold;

    // Log scan for the first sample below the threshold, then bisect.
    let scan = 4000;
    let step = (BANDWIDTH_SEARCH_HI / BANDWIDTH_SEARCH_LO).ln() / scan as f64;
    let mut lo = BANDWIDTH_SEARCH_LO;
    if below(lo) {
        return Ok(lo);
    }
    for k in 1..=scan {
        let hi = BANDWIDTH_SEARCH_LO * (step * k as f64).exp();
        if below(hi) {
            let mut hi = hi;
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                if below(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        lo = hi;
    }
    Err(Error::NotFound(format!(
        "magnitude never falls 3 dB below DC within [{BANDWIDTH_SEARCH_LO}, {BANDWIDTH_SEARCH_HI}] Hz"
    )))
}
