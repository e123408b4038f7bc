//! Knee-angle trajectories: the analytic walking waveform, uniformly sampled
//! gait traces, and their CSV representation.
//!
//! CSV files carry a header row; the first column is `time_s`. Recognised
//! angle columns are `theta_h_rad` (optionally with `theta_h_vel_rad_s`) for
//! a single knee, or `q_r_rad` and `q_l_rad` for both legs. A `_deg` /
//! `_deg_s` suffix marks degree units, converted to radians on load. Other
//! columns are kept verbatim and written back on save. Lines starting with
//! `#` are comments.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on timestamp uniformity when reading traces (s).
pub const TIMESTAMP_TOLERANCE: f64 = 1e-6;
/// Physiological knee range with margin (rad).
pub const MIN_KNEE_ANGLE: f64 = -PI / 2.0;
pub const MAX_KNEE_ANGLE: f64 = PI;

/// A knee angle signal that can be evaluated at any time.
pub trait KneeTrajectory {
    fn angle(&self, t: f64) -> f64;
    fn velocity(&self, t: f64) -> f64;
}

impl<K: KneeTrajectory + ?Sized> KneeTrajectory for &K {
    fn angle(&self, t: f64) -> f64 {
        (**self).angle(t)
    }
    fn velocity(&self, t: f64) -> f64 {
        (**self).velocity(t)
    }
}

/// Two-harmonic approximation of normative knee flexion during walking:
///
/// `θ(t) = a·[0.35 − 0.28·cos(2πft) − 0.17·cos(4πft − 0.6)]` rad.
///
/// It is a stand-in for dataset trajectories. Over one cycle it spans about
/// −5° to 37° of flexion with a peak speed of 3.73 rad/s at 1 Hz, and the
/// backdrive torque it produces scales with `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneeWaveform {
    pub cycle_freq: f64,
    pub amplitude_scale: f64,
}

impl KneeWaveform {
    pub const MEAN: f64 = 0.35;
    pub const FIRST_HARMONIC: f64 = 0.28;
    pub const SECOND_HARMONIC: f64 = 0.17;
    pub const SECOND_PHASE: f64 = 0.6;

    pub fn new(cycle_freq: f64, amplitude_scale: f64) -> Result<Self> {
        if !(cycle_freq > 0.0) || !cycle_freq.is_finite() {
            return Err(Error::validation("cycle_freq", "must be positive"));
        }
        if !amplitude_scale.is_finite() {
            return Err(Error::validation("amplitude_scale", "must be finite"));
        }
        Ok(KneeWaveform {
            cycle_freq,
            amplitude_scale,
        })
    }

    pub fn period(&self) -> f64 {
        1.0 / self.cycle_freq
    }
}

impl KneeTrajectory for KneeWaveform {
    fn angle(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.cycle_freq * t;
        self.amplitude_scale
            * (Self::MEAN
                - Self::FIRST_HARMONIC * w.cos()
                - Self::SECOND_HARMONIC * (2.0 * w - Self::SECOND_PHASE).cos())
    }

    fn velocity(&self, t: f64) -> f64 {
        let omega = 2.0 * PI * self.cycle_freq;
        let w = omega * t;
        self.amplitude_scale
            * (Self::FIRST_HARMONIC * omega * w.sin()
                + Self::SECOND_HARMONIC * 2.0 * omega * (2.0 * w - Self::SECOND_PHASE).sin())
    }
}

/// Single tone `amplitude·sin(2πft + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl KneeTrajectory for Sinusoid {
    fn angle(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    fn velocity(&self, t: f64) -> f64 {
        let omega = 2.0 * PI * self.frequency;
        self.amplitude * omega * (omega * t + self.phase).cos()
    }
}

/// Angle content of a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum GaitAngles {
    /// One knee, the human-side input of the backdrive model.
    Knee {
        angle: Vec<f64>,
        velocity: Option<Vec<f64>>,
    },
    /// Right and left knee, the controller input.
    TwoLeg { right: Vec<f64>, left: Vec<f64> },
}

/// Column carried through load/save without interpretation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Uniformly sampled knee-angle time series, radians throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrace {
    dt: f64,
    start_time: f64,
    angles: GaitAngles,
    extra: Vec<ExtraColumn>,
    /// Gait cycle length when known (synthetic traces); loaded files leave it unset.
    pub cycle_period: Option<f64>,
}

impl GaitTrace {
    pub fn new(dt: f64, start_time: f64, angles: GaitAngles, extra: Vec<ExtraColumn>) -> Result<Self> {
        let trace = GaitTrace {
            dt,
            start_time,
            angles,
            extra,
            cycle_period: None,
        };
        trace.validate()?;
        Ok(trace)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::validation("dt", "must be positive"));
        }
        let len = self.len();
        if len < 2 {
            return Err(Error::validation("trace", "needs at least two samples"));
        }
        let check_angles = |name: &str, values: &[f64]| -> Result<()> {
            if values.len() != len {
                return Err(Error::validation(name, "column length differs from the trace"));
            }
            if let Some((k, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(MIN_KNEE_ANGLE..=MAX_KNEE_ANGLE).contains(*v))
            {
                return Err(Error::validation(
                    name,
                    format!("sample {k} = {v} rad is outside [-pi/2, pi]"),
                ));
            }
            Ok(())
        };
        match &self.angles {
            GaitAngles::Knee { angle, velocity } => {
                check_angles("theta_h", angle)?;
                if let Some(v) = velocity {
                    if v.len() != len || v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::validation("theta_h_vel", "bad length or non-finite value"));
                    }
                }
            }
            GaitAngles::TwoLeg { right, left } => {
                check_angles("q_r", right)?;
                check_angles("q_l", left)?;
            }
        }
        for col in &self.extra {
            if col.values.len() != len {
                return Err(Error::validation(&col.name, "column length differs from the trace"));
            }
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn angles(&self) -> &GaitAngles {
        &self.angles
    }

    pub fn extra(&self) -> &[ExtraColumn] {
        &self.extra
    }

    pub fn len(&self) -> usize {
        match &self.angles {
            GaitAngles::Knee { angle, .. } => angle.len(),
            GaitAngles::TwoLeg { right, .. } => right.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn knee_angle(&self) -> Result<&[f64]> {
        match &self.angles {
            GaitAngles::Knee { angle, .. } => Ok(angle),
            GaitAngles::TwoLeg { .. } => Err(Error::validation(
                "trace",
                "expected a single-knee trace (theta_h), found right/left legs",
            )),
        }
    }

    /// Knee velocity: the stored series, or central differences of the angle.
    pub fn knee_velocity(&self) -> Result<Vec<f64>> {
        match &self.angles {
            GaitAngles::Knee {
                velocity: Some(v), ..
            } => Ok(v.clone()),
            GaitAngles::Knee { angle, velocity: None } => Ok(differentiate(angle, self.dt)),
            GaitAngles::TwoLeg { .. } => Err(Error::validation(
                "trace",
                "expected a single-knee trace (theta_h), found right/left legs",
            )),
        }
    }

    pub fn legs(&self) -> Result<(&[f64], &[f64])> {
        match &self.angles {
            GaitAngles::TwoLeg { right, left } => Ok((right, left)),
            GaitAngles::Knee { .. } => Err(Error::validation(
                "trace",
                "expected right/left knee columns (q_r, q_l), found a single knee",
            )),
        }
    }

    /// Resample onto a new uniform step covering the same time span, using
    /// cubic Hermite interpolation for angles and linear interpolation for
    /// extra columns.
    pub fn resample(&self, dt: f64) -> Result<GaitTrace> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::validation("dt", "must be positive"));
        }
        let count = (self.duration() / dt + 1e-9).floor() as usize + 1;
        let times: Vec<f64> = (0..count).map(|k| k as f64 * dt).collect();
        let hermite = |values: &[f64], slopes: &[f64]| -> Vec<f64> {
            times
                .iter()
                .map(|&t| hermite_at(values, slopes, self.dt, t))
                .collect()
        };
        let angles = match &self.angles {
            GaitAngles::Knee { angle, velocity } => {
                let slopes = velocity.clone().unwrap_or_else(|| differentiate(angle, self.dt));
                GaitAngles::Knee {
                    angle: hermite(angle, &slopes),
                    velocity: velocity.as_ref().map(|v| {
                        let accel = differentiate(v, self.dt);
                        hermite(v, &accel)
                    }),
                }
            }
            GaitAngles::TwoLeg { right, left } => GaitAngles::TwoLeg {
                right: hermite(right, &differentiate(right, self.dt)),
                left: hermite(left, &differentiate(left, self.dt)),
            },
        };
        let extra = self
            .extra
            .iter()
            .map(|c| ExtraColumn {
                name: c.name.clone(),
                values: times.iter().map(|&t| linear_at(&c.values, self.dt, t)).collect(),
            })
            .collect();
        let mut out = GaitTrace::new(dt, self.start_time, angles, extra)?;
        out.cycle_period = self.cycle_period;
        Ok(out)
    }

    /// Interpolating view of a single-knee trace, usable as a simulation input.
    pub fn knee_interpolant(&self) -> Result<SampledKnee> {
        let angle = self.knee_angle()?.to_vec();
        let velocity = self.knee_velocity()?;
        let accel = differentiate(&velocity, self.dt);
        Ok(SampledKnee {
            start_time: self.start_time,
            dt: self.dt,
            angle,
            velocity,
            accel,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["time_s".to_string()];
        let mut columns: Vec<&[f64]> = Vec::new();
        match &self.angles {
            GaitAngles::Knee { angle, velocity } => {
                header.push("theta_h_rad".into());
                columns.push(angle);
                if let Some(v) = velocity {
                    header.push("theta_h_vel_rad_s".into());
                    columns.push(v);
                }
            }
            GaitAngles::TwoLeg { right, left } => {
                header.push("q_r_rad".into());
                header.push("q_l_rad".into());
                columns.push(right);
                columns.push(left);
            }
        }
        for c in &self.extra {
            header.push(c.name.clone());
            columns.push(&c.values);
        }
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.time(k).to_string()];
            row.extend(columns.iter().map(|c| c[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<GaitTrace> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers()?.clone();
        let header_line = reader.position().line().max(1) as usize;
        if header.get(0) != Some("time_s") {
            return Err(Error::Parse {
                line: header_line,
                reason: "first column must be `time_s`".into(),
            });
        }

        let mut time = Vec::new();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
        let mut lines = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != header.len() {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let mut values = record.iter().map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    reason: format!("`{field}` is not a number"),
                })
            });
            time.push(values.next().unwrap()?);
            for (col, v) in columns.iter_mut().zip(values) {
                col.push(v?);
            }
            lines.push(line);
        }
        if time.len() < 2 {
            return Err(Error::Parse {
                line: header_line,
                reason: "a trace needs at least two samples".into(),
            });
        }

        let dt = (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64;
        for (k, (&t, &line)) in time.iter().zip(&lines).enumerate() {
            let expected = time[0] + k as f64 * dt;
            if !((t - expected).abs() <= TIMESTAMP_TOLERANCE) || !(dt > 0.0) {
                return Err(Error::Parse {
                    line,
                    reason: format!("non-uniform timestamp {t} (expected {expected})"),
                });
            }
        }

        let mut theta = None;
        let mut theta_vel = None;
        let mut right = None;
        let mut left = None;
        let mut extra = Vec::new();
        for (name, values) in header.iter().skip(1).zip(columns) {
            let slot = match name {
                "theta_h_rad" | "theta_h_deg" => &mut theta,
                "theta_h_vel_rad_s" | "theta_h_vel_deg_s" => &mut theta_vel,
                "q_r_rad" | "q_r_deg" => &mut right,
                "q_l_rad" | "q_l_deg" => &mut left,
                _ => {
                    extra.push(ExtraColumn {
                        name: name.to_string(),
                        values,
                    });
                    continue;
                }
            };
            if slot.is_some() {
                return Err(Error::Parse {
                    line: header_line,
                    reason: format!("duplicate column for `{name}`"),
                });
            }
            let values = if name.contains("_deg") {
                values.into_iter().map(f64::to_radians).collect()
            } else {
                values
            };
            *slot = Some(values);
        }

        let angles = match (theta, theta_vel, right, left) {
            (Some(angle), velocity, None, None) => GaitAngles::Knee { angle, velocity },
            (None, None, Some(right), Some(left)) => GaitAngles::TwoLeg { right, left },
            (None, None, None, None) => {
                return Err(Error::Parse {
                    line: header_line,
                    reason: "missing angle columns: need `theta_h_rad` or `q_r_rad` and `q_l_rad`"
                        .into(),
                })
            }
            (None, None, r, l) => {
                let missing = if r.is_none() { "q_r_rad" } else { "q_l_rad" };
                debug_assert!(r.is_none() || l.is_none());
                return Err(Error::Parse {
                    line: header_line,
                    reason: format!("missing required column `{missing}`"),
                });
            }
            (None, Some(_), _, _) => {
                return Err(Error::Parse {
                    line: header_line,
                    reason: "`theta_h_vel_rad_s` given without `theta_h_rad`".into(),
                })
            }
            _ => {
                return Err(Error::Parse {
                    line: header_line,
                    reason: "a trace holds either `theta_h` or `q_r`/`q_l`, not both".into(),
                })
            }
        };
        GaitTrace::new(dt, time[0], angles, extra)
    }
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<GaitTrace> {
    GaitTrace::read_csv(File::open(path)?)
}

pub fn save_trace(trace: &GaitTrace, path: impl AsRef<Path>) -> Result<()> {
    trace.write_csv(File::create(path)?)
}

fn sample_count(duration: f64, dt: f64) -> usize {
    (duration / dt + 1e-9).floor() as usize + 1
}

fn check_synthetic(cycle_freq: f64, duration: f64, dt: f64) -> Result<()> {
    if !(cycle_freq > 0.0) || !cycle_freq.is_finite() {
        return Err(Error::validation("cycle_freq", "must be positive"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::validation("dt", "must be positive"));
    }
    if !(duration >= 1.0 / cycle_freq - 1e-12) {
        return Err(Error::validation("duration", "must cover at least one gait cycle"));
    }
    Ok(())
}

/// Sampled [`KneeWaveform`] with its analytic velocity.
pub fn synthetic_knee_trace(
    cycle_freq: f64,
    duration: f64,
    dt: f64,
    amplitude_scale: f64,
) -> Result<GaitTrace> {
    check_synthetic(cycle_freq, duration, dt)?;
    let wave = KneeWaveform::new(cycle_freq, amplitude_scale)?;
    let times: Vec<f64> = (0..sample_count(duration, dt)).map(|k| k as f64 * dt).collect();
    let angles = GaitAngles::Knee {
        angle: times.iter().map(|&t| wave.angle(t)).collect(),
        velocity: Some(times.iter().map(|&t| wave.velocity(t)).collect()),
    };
    let mut trace = GaitTrace::new(dt, 0.0, angles, Vec::new())?;
    trace.cycle_period = Some(wave.period());
    Ok(trace)
}

/// Both knees following [`KneeWaveform`]; the right leg lags the left by
/// `phase_offset` of a cycle.
pub fn two_leg_synthetic(
    cycle_freq: f64,
    duration: f64,
    dt: f64,
    phase_offset: f64,
) -> Result<GaitTrace> {
    check_synthetic(cycle_freq, duration, dt)?;
    if !(0.0..1.0).contains(&phase_offset) {
        return Err(Error::validation("phase_offset", "must lie in [0, 1)"));
    }
    let wave = KneeWaveform::new(cycle_freq, 1.0)?;
    let lag = phase_offset / cycle_freq;
    let times: Vec<f64> = (0..sample_count(duration, dt)).map(|k| k as f64 * dt).collect();
    let angles = GaitAngles::TwoLeg {
        right: times.iter().map(|&t| wave.angle(t - lag)).collect(),
        left: times.iter().map(|&t| wave.angle(t)).collect(),
    };
    let mut trace = GaitTrace::new(dt, 0.0, angles, Vec::new())?;
    trace.cycle_period = Some(wave.period());
    Ok(trace)
}

/// Cubic Hermite interpolant over a single-knee trace.
#[derive(Debug, Clone)]
pub struct SampledKnee {
    start_time: f64,
    dt: f64,
    angle: Vec<f64>,
    velocity: Vec<f64>,
    accel: Vec<f64>,
}

impl KneeTrajectory for SampledKnee {
    fn angle(&self, t: f64) -> f64 {
        hermite_at(&self.angle, &self.velocity, self.dt, t - self.start_time)
    }

    fn velocity(&self, t: f64) -> f64 {
        hermite_at(&self.velocity, &self.accel, self.dt, t - self.start_time)
    }
}

/// Second-order central differences, one-sided at the ends.
fn differentiate(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => vec![(values[1] - values[0]) / dt; 2],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
                } else if k == n - 1 {
                    (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt)
                } else {
                    (values[k + 1] - values[k - 1]) / (2.0 * dt)
                }
            })
            .collect(),
    }
}

/// Locate `t` (relative to the first sample) on a uniform grid; clamps to the ends.
fn locate(len: usize, dt: f64, t: f64) -> (usize, f64) {
    let pos = (t / dt).clamp(0.0, (len - 1) as f64);
    let k = (pos.floor() as usize).min(len - 2);
    (k, pos - k as f64)
}

fn hermite_at(values: &[f64], slopes: &[f64], dt: f64, t: f64) -> f64 {
    let (k, u) = locate(values.len(), dt, t);
    if u == 0.0 {
        return values[k];
    }
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * values[k] + h10 * dt * slopes[k] + h01 * values[k + 1] + h11 * dt * slopes[k + 1]
}

fn linear_at(values: &[f64], dt: f64, t: f64) -> f64 {
    let (k, u) = locate(values.len(), dt, t);
    if u == 0.0 {
        return values[k];
    }
    values[k] + u * (values[k + 1] - values[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn flat_when_amplitude_is_zero() {
        let tr = synthetic_knee_trace(1.0, 2.0, 1e-3, 0.0).unwrap();
        assert!(tr.knee_angle().unwrap().iter().all(|&a| a == 0.0));
        assert!(tr.knee_velocity().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn waveform_range_and_speed() {
        // Dense evaluation of the closed form over one cycle.
        let wave = KneeWaveform::new(1.0, 1.0).unwrap();
        let (mut lo, mut hi, mut vmax) = (f64::MAX, f64::MIN, 0.0f64);
        for k in 0..=200_000 {
            let t = k as f64 / 200_000.0;
            lo = lo.min(wave.angle(t));
            hi = hi.max(wave.angle(t));
            vmax = vmax.max(wave.velocity(t).abs());
        }
        assert!((lo - -0.09111).abs() < 1e-4, "{lo}");
        assert!((hi - 0.64949).abs() < 1e-4, "{hi}");
        assert!((vmax - 3.7257).abs() < 1e-3, "{vmax}");
        assert!(hi <= 1.1);
    }

    #[test]
    fn exactly_periodic() {
        let tr = synthetic_knee_trace(1.0, 3.0, 1e-3, 1.0).unwrap();
        let a = tr.knee_angle().unwrap();
        for k in 0..1000 {
            assert!((a[k] - a[k + 1000]).abs() < 1e-12);
            assert!((a[k] - a[k + 2000]).abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_is_the_analytic_derivative() {
        let wave = KneeWaveform::new(1.3, 0.8).unwrap();
        for k in 0..50 {
            let t = 0.0173 * k as f64;
            let h = 1e-5;
            let fd = (wave.angle(t + h) - wave.angle(t - h)) / (2.0 * h);
            assert!((fd - wave.velocity(t)).abs() < 1e-6, "{fd} vs {}", wave.velocity(t));
        }
    }

    #[test]
    fn four_cycles() {
        let tr = two_leg_synthetic(2.0, 2.0, 1e-3, 0.5).unwrap();
        assert_relative_eq!(tr.duration() / tr.cycle_period.unwrap(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn in_phase_legs_are_identical() {
        let tr = two_leg_synthetic(1.0, 2.0, 1e-3, 0.0).unwrap();
        let (r, l) = tr.legs().unwrap();
        assert_eq!(r, l);
    }

    #[test]
    fn anti_phase_asymmetry_has_zero_mean() {
        let tr = two_leg_synthetic(1.0, 1.0, 1e-4, 0.5).unwrap();
        let (r, l) = tr.legs().unwrap();
        // One full period, trapezoid-free rectangle rule on a periodic signal.
        let n = 10_000;
        let mean: f64 = (0..n).map(|k| r[k].sin() - l[k].sin()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-9, "{mean}");
    }

    #[test]
    fn csv_round_trip() {
        let tr = synthetic_knee_trace(1.0, 1.0, 1e-2, 1.0).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = GaitTrace::read_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), tr.len());
        assert_relative_eq!(back.dt(), tr.dt(), max_relative = 1e-9);
        for (a, b) in back.knee_angle().unwrap().iter().zip(tr.knee_angle().unwrap()) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn unknown_columns_survive() {
        let src = "time_s,q_r_rad,q_l_rad,emg_mv\n0,0.1,0.2,5\n0.01,0.2,0.1,6\n0.02,0.3,0.0,7\n";
        let tr = GaitTrace::read_csv(src.as_bytes()).unwrap();
        assert_eq!(tr.extra()[0].name, "emg_mv");
        let mut out = Vec::new();
        tr.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("time_s,q_r_rad,q_l_rad,emg_mv\n"));
        assert!(text.contains(",7\n"));
    }

    #[test]
    fn shuffled_rows_are_rejected_with_line_number() {
        let src = "time_s,theta_h_rad\n0,0.1\n0.02,0.2\n0.01,0.3\n0.03,0.3\n";
        let err = GaitTrace::read_csv(src.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 3, "{reason}");
                assert!(reason.contains("non-uniform"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn degrees_are_converted() {
        let src = "time_s,theta_h_deg\n0,57.2958\n0.01,0\n";
        let tr = GaitTrace::read_csv(src.as_bytes()).unwrap();
        assert!((tr.knee_angle().unwrap()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn missing_columns() {
        let err = GaitTrace::read_csv("time_s,q_r_rad\n0,0\n1,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("q_l_rad"), "{err}");
        let err = GaitTrace::read_csv("t,theta_h_rad\n0,0\n1,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("time_s"), "{err}");
    }

    #[test]
    fn comments_are_skipped() {
        let src = "# recorded 2020\ntime_s,theta_h_rad\n0,0.1\n# mid comment\n0.5,0.2\n";
        let tr = GaitTrace::read_csv(src.as_bytes()).unwrap();
        assert_eq!(tr.len(), 2);
    }

    #[test]
    fn out_of_range_angles_are_rejected() {
        let src = "time_s,theta_h_rad\n0,0.1\n0.5,4.0\n";
        assert!(GaitTrace::read_csv(src.as_bytes()).is_err());
        assert!(synthetic_knee_trace(1.0, 1.0, 1e-3, 10.0).is_err());
    }

    #[test]
    fn resample_fine_then_back() {
        let tr = synthetic_knee_trace(1.0, 2.0, 1e-2, 1.0).unwrap();
        let fine = tr.resample(1e-2 / 8.0).unwrap();
        let back = fine.resample(1e-2).unwrap();
        assert_eq!(back.len(), tr.len());
        for (a, b) in back.knee_angle().unwrap().iter().zip(tr.knee_angle().unwrap()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn hermite_interpolant_tracks_the_waveform() {
        let wave = KneeWaveform::new(1.0, 1.0).unwrap();
        let tr = synthetic_knee_trace(1.0, 2.0, 1e-3, 1.0).unwrap();
        let knee = tr.knee_interpolant().unwrap();
        for k in 0..300 {
            let t = 0.00637 * k as f64 + 0.00021;
            assert!((knee.angle(t) - wave.angle(t)).abs() < 1e-10);
            assert!((knee.velocity(t) - wave.velocity(t)).abs() < 1e-6);
        }
    }
}
