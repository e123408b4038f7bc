//! Gait-phase-free assistance from the inter-leg knee angle asymmetry.
//!
//! Per sample: `y_raw = sin q_r − sin q_l`, smoothed by the one-pole
//! recurrence `y ← (1−α)·y + α·y_raw`, scaled by `κ` and delayed by `Δt`.
//! The right knee gets `κ·y(t−Δt)`, the left its exact negative.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::GaitTrace;

/// Relative tolerance between a trace step and the controller sample period.
pub const SAMPLE_PERIOD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Smoothing factor in (0, 1).
    pub alpha: f64,
    /// Sample period ΔT (s).
    pub sample_period: f64,
    /// Torque per unit asymmetry κ (N·m). Negative values resist motion.
    pub gain: f64,
    /// Time shift Δt (s), rounded to whole samples.
    pub shift: f64,
    /// Optional symmetric torque limit (N·m) for safety studies.
    pub torque_cap: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            alpha: 0.04,
            sample_period: 0.001,
            gain: 10.0,
            shift: 0.25,
            torque_cap: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("alpha", format!("{} is not in (0, 1)", self.alpha)));
        }
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(Error::validation("sample_period", "must be positive"));
        }
        if !self.gain.is_finite() {
            return Err(Error::validation("gain", "must be finite"));
        }
        if !(self.shift >= 0.0) || !self.shift.is_finite() {
            return Err(Error::validation("shift", "must be non-negative"));
        }
        if let Some(cap) = self.torque_cap {
            if !(cap > 0.0) {
                return Err(Error::validation("torque_cap", "must be positive"));
            }
        }
        Ok(())
    }

    /// Time shift in whole samples.
    pub fn delay_samples(&self) -> usize {
        (self.shift / self.sample_period).round() as usize
    }
}

/// Asymmetry between the two knees, in [−2, 2].
pub fn raw_asymmetry(q_r: f64, q_l: f64) -> Result<f64> {
    if !q_r.is_finite() || !q_l.is_finite() {
        return Err(Error::validation("knee angle", "must be finite"));
    }
    Ok(q_r.sin() - q_l.sin())
}

/// Cutoff frequency (Hz) associated with smoothing factor `alpha` at sample
/// period `sample_period`: `α / ((1−α)·2π·ΔT)`.
pub fn cutoff_frequency(alpha: f64, sample_period: f64) -> f64 {
    alpha / ((1.0 - alpha) * 2.0 * PI * sample_period)
}

/// Magnitude of the smoothing recurrence's frequency response at `freq` Hz.
pub fn smoothing_gain(alpha: f64, sample_period: f64, freq: f64) -> f64 {
    let w = 2.0 * PI * freq * sample_period;
    let pole = 1.0 - alpha;
    let re = 1.0 - pole * w.cos();
    let im = pole * w.sin();
    alpha / (re * re + im * im).sqrt()
}

/// Streaming controller state.
#[derive(Debug, Clone)]
pub struct ControllerState {
    y: f64,
    delay_line: VecDeque<f64>,
    peak_raw: f64,
}

impl ControllerState {
    /// Filter at rest, delay line zero-filled.
    pub fn new(config: &ControllerConfig) -> Self {
        ControllerState {
            y: 0.0,
            delay_line: std::iter::repeat(0.0).take(config.delay_samples()).collect(),
            peak_raw: 0.0,
        }
    }

    pub fn smoothed(&self) -> f64 {
        self.y
    }

    /// Largest `|y_raw|` fed so far; `|y|` never exceeds it.
    pub fn peak_raw(&self) -> f64 {
        self.peak_raw
    }

    pub fn delay_len(&self) -> usize {
        self.delay_line.len()
    }

    /// One step of the smoothing recurrence; returns the new `y`.
    pub fn lowpass_step(&mut self, alpha: f64, y_raw: f64) -> f64 {
        self.peak_raw = self.peak_raw.max(y_raw.abs());
        self.y = (1.0 - alpha) * self.y + alpha * y_raw;
        self.y
    }

    /// Push the current `y` through the delay line and return
    /// `(τ_r, τ_l) = (κ·y(t−Δt), −κ·y(t−Δt))`.
    pub fn assist_torques(&mut self, config: &ControllerConfig) -> (f64, f64) {
        let delayed = if self.delay_line.is_empty() {
            self.y
        } else {
            self.delay_line.push_back(self.y);
            self.delay_line.pop_front().unwrap_or(0.0)
        };
        let mut right = config.gain * delayed;
        if let Some(cap) = config.torque_cap {
            right = right.clamp(-cap, cap);
        }
        (right, -right)
    }

    /// Full controller step from the two knee angles.
    pub fn step(&mut self, config: &ControllerConfig, q_r: f64, q_l: f64) -> Result<ControllerSample> {
        let y_raw = raw_asymmetry(q_r, q_l)?;
        let y = self.lowpass_step(config.alpha, y_raw);
        let (tau_r, tau_l) = self.assist_torques(config);
        Ok(ControllerSample {
            q_r,
            q_l,
            y_raw,
            y,
            tau_r,
            tau_l,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerSample {
    pub q_r: f64,
    pub q_l: f64,
    pub y_raw: f64,
    pub y: f64,
    pub tau_r: f64,
    pub tau_l: f64,
}

/// Controller output aligned with the input timestamps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorqueTrace {
    pub time: Vec<f64>,
    pub samples: Vec<ControllerSample>,
}

impl TorqueTrace {
    pub fn right(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.tau_r)
    }

    pub fn left(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.tau_l)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "q_r_rad", "q_l_rad", "y_raw", "y", "tau_r_nm", "tau_l_nm"])?;
        for (t, s) in self.time.iter().zip(&self.samples) {
            w.write_record([*t, s.q_r, s.q_l, s.y_raw, s.y, s.tau_r, s.tau_l].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stream a two-leg trace through the controller. Traces sampled at another
/// rate are resampled to the controller period first.
pub fn run_controller(trace: &GaitTrace, config: &ControllerConfig) -> Result<TorqueTrace> {
    config.validate()?;
    let resampled;
    let trace = if (trace.dt() - config.sample_period).abs()
        <= SAMPLE_PERIOD_TOLERANCE * config.sample_period
    {
        trace
    } else {
        resampled = trace.resample(config.sample_period)?;
        &resampled
    };
    if (trace.dt() - config.sample_period).abs() > SAMPLE_PERIOD_TOLERANCE * config.sample_period {
        return Err(Error::validation(
            "trace",
            format!(
                "sampled at {} s after resampling, controller expects {} s",
                trace.dt(),
                config.sample_period
            ),
        ));
    }
    let (right, left) = trace.legs()?;
    let mut state = ControllerState::new(config);
    let samples = right
        .iter()
        .zip(left)
        .map(|(&q_r, &q_l)| state.step(config, q_r, q_l))
        .collect::<Result<Vec<_>>>()?;
    Ok(TorqueTrace {
        time: trace.times(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{two_leg_synthetic, GaitAngles};
    use approx::assert_relative_eq;

    #[test]
    fn asymmetry_examples() {
        assert_eq!(raw_asymmetry(0.7, 0.7).unwrap(), 0.0);
        let y = raw_asymmetry(30f64.to_radians(), 10f64.to_radians()).unwrap();
        assert!((y - 0.32635).abs() < 1e-5, "{y}");
        assert_eq!(raw_asymmetry(0.3, -1.2).unwrap(), -raw_asymmetry(-1.2, 0.3).unwrap());
        assert!(raw_asymmetry(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn step_response_is_geometric() {
        let cfg = ControllerConfig::default();
        let mut st = ControllerState::new(&cfg);
        let c = 0.8;
        for _ in 0..100 {
            st.lowpass_step(cfg.alpha, c);
        }
        let closed = c * (1.0 - (1.0 - cfg.alpha).powi(100));
        assert!((st.smoothed() - closed).abs() < 1e-12);
        assert!((closed / c - 0.98313).abs() < 1e-5);
    }

    #[test]
    fn alpha_near_one_passes_input_through() {
        let mut st = ControllerState::new(&ControllerConfig::default());
        let y = st.lowpass_step(1.0 - 1e-15, 0.37);
        assert!((y - 0.37).abs() < 1e-14);
    }

    #[test]
    fn zero_input_stays_zero() {
        let cfg = ControllerConfig::default();
        let mut st = ControllerState::new(&cfg);
        for _ in 0..500 {
            assert_eq!(st.step(&cfg, 0.4, 0.4).unwrap().tau_r, 0.0);
        }
    }

    #[test]
    fn cutoff_examples() {
        assert!((cutoff_frequency(0.04, 0.001) - 6.6315).abs() < 1e-4);
        assert_relative_eq!(cutoff_frequency(0.5, 1.0 / (2.0 * PI)), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            cutoff_frequency(0.04, 0.002),
            cutoff_frequency(0.04, 0.001) / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn recurrence_gain_at_cutoff_is_near_half_power() {
        // The cutoff formula is the continuous-time RC equivalent; the exact
        // discrete response at that frequency sits within 5% of 1/√2.
        for (alpha, dt) in [(0.04, 0.001), (0.01, 0.001), (0.1, 0.002)] {
            let fc = cutoff_frequency(alpha, dt);
            let g = smoothing_gain(alpha, dt, fc);
            assert!((g - 0.5f64.sqrt()).abs() < 0.05 * 0.5f64.sqrt(), "{alpha}: {g}");
        }
        // Dense recurrence simulation as an oracle for the analytic gain.
        let (alpha, dt) = (0.04, 0.001);
        let fc = cutoff_frequency(alpha, dt);
        let mut y = 0.0;
        let mut peak = 0.0f64;
        for k in 0..20_000 {
            let x = (2.0 * PI * fc * k as f64 * dt).sin();
            y = (1.0 - alpha) * y + alpha * x;
            if k > 10_000 {
                peak = peak.max(y.abs());
            }
        }
        assert!((peak - smoothing_gain(alpha, dt, fc)).abs() < 2e-3);
    }

    #[test]
    fn torque_from_steady_asymmetry() {
        let cfg = ControllerConfig { shift: 0.0, ..Default::default() };
        let mut st = ControllerState::new(&cfg);
        st.y = 0.32635;
        let (r, l) = st.assist_torques(&cfg);
        assert!((r - 3.2635).abs() < 1e-12);
        assert_eq!(l, -r);

        let zero = ControllerConfig { gain: 0.0, ..cfg };
        assert_eq!(st.assist_torques(&zero).0, 0.0);
        let resist = ControllerConfig { gain: -10.0, ..cfg };
        assert!(st.assist_torques(&resist).0 < 0.0);
    }

    #[test]
    fn delay_line_emits_zeros_until_warm() {
        let cfg = ControllerConfig { shift: 0.005, ..Default::default() };
        let mut st = ControllerState::new(&cfg);
        assert_eq!(st.delay_len(), 5);
        let mut out = Vec::new();
        for _ in 0..8 {
            out.push(st.step(&cfg, 0.5, 0.0).unwrap());
        }
        assert!(out[..5].iter().all(|s| s.tau_r == 0.0));
        assert_eq!(out[5].tau_r, cfg.gain * out[0].y);
        assert_eq!(out[7].tau_r, cfg.gain * out[2].y);
    }

    #[test]
    fn torque_cap() {
        let cfg = ControllerConfig { shift: 0.0, torque_cap: Some(1.0), ..Default::default() };
        let mut st = ControllerState::new(&cfg);
        st.y = 0.5;
        assert_eq!(st.assist_torques(&cfg), (1.0, -1.0));
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { shift: -0.1, ..Default::default() }.validate().is_err());
        assert_eq!(ControllerConfig::default().delay_samples(), 250);
    }

    #[test]
    fn resamples_mismatched_traces() {
        let tr = two_leg_synthetic(1.0, 2.0, 0.004, 0.5).unwrap();
        let out = run_controller(&tr, &ControllerConfig::default()).unwrap();
        assert_eq!(out.samples.len(), 2001);
        assert!((out.time[1] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn rejects_single_knee_trace() {
        let tr = GaitTrace::new(
            0.001,
            0.0,
            GaitAngles::Knee { angle: vec![0.0; 10], velocity: None },
            vec![],
        )
        .unwrap();
        assert!(run_controller(&tr, &ControllerConfig::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn smoothed_bounded_by_raw(xs in proptest::collection::vec(-2.0f64..2.0, 1..300), alpha in 0.001f64..0.999) {
                let cfg = ControllerConfig { alpha, ..Default::default() };
                let mut st = ControllerState::new(&cfg);
                for x in xs {
                    let y = st.lowpass_step(alpha, x);
                    prop_assert!(y.abs() <= st.peak_raw() * (1.0 + 1e-12));
                }
            }
        }
    }
}
