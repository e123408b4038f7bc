//! Search for the lightest feasible actuator over gap radius and gear ratio.
//!
//! Motor mass grows with gap radius alone, so the optimum is the smallest
//! radius at which some gear ratio satisfies every constraint. At a fixed
//! radius the torque constraint holds above a threshold ratio and the speed,
//! natural-frequency and backdrive constraints hold below one, which makes the
//! feasible ratios an interval found by two bisections.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::gait::{GaitTrace, KneeTrajectory, KneeWaveform, SampledKnee};
use crate::motor::{scale_motor, MotorParams};
use crate::plant::natural_frequency;
use crate::requirements::{requirements_for_age, RequirementOverrides, Requirements};
use crate::sim::{simulate_backdrive_with, simulate_max_speed, simulate_max_torque, BackdriveTorque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    RequiredTorque,
    MaxSpeed,
    NaturalFrequency,
    Backdrive,
}

impl Constraint {
    pub const ALL: [Constraint; 4] = [
        Constraint::RequiredTorque,
        Constraint::MaxSpeed,
        Constraint::NaturalFrequency,
        Constraint::Backdrive,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Constraint::RequiredTorque => "required_torque",
            Constraint::MaxSpeed => "max_speed",
            Constraint::NaturalFrequency => "natural_frequency",
            Constraint::Backdrive => "backdrive",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Simulated and analytic performance of one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    /// N·m at the output.
    pub max_torque: f64,
    /// rad/s at the output.
    pub max_speed: f64,
    /// Hz, proportional gain from the model configuration.
    pub natural_frequency_hz: f64,
    /// RMS output torque while backdriven (N·m).
    pub backdrive_avg: f64,
    pub backdrive_peak: f64,
    /// Motor plus structure (kg).
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintStatus {
    pub constraint: Constraint,
    pub value: f64,
    pub threshold: f64,
    /// Positive when satisfied, in the units of `value`.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub gap_radius: f64,
    pub gear_ratio: f64,
    pub metrics: DesignMetrics,
    pub constraints: Vec<ConstraintStatus>,
    pub feasible: bool,
}

impl ConstraintReport {
    pub fn status(&self, c: Constraint) -> &ConstraintStatus {
        self.constraints
            .iter()
            .find(|s| s.constraint == c)
            .expect("every report lists all constraints")
    }

    pub fn violated(&self) -> Vec<Constraint> {
        self.constraints
            .iter()
            .filter(|s| !s.satisfied)
            .map(|s| s.constraint)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearInterval {
    pub lo: f64,
    pub hi: f64,
}

impl GearInterval {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub requirements: Requirements,
    pub gap_radius: f64,
    pub gear_ratio: f64,
    pub feasible_ratios: GearInterval,
    pub motor_mass: f64,
    pub actuator_mass: f64,
    pub active_constraints: Vec<Constraint>,
    pub report: ConstraintReport,
}

/// Quantity tabulated by [`Optimizer::constraint_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMetric {
    MaxTorque,
    MaxSpeed,
    NaturalFrequency,
    BackdriveAvg,
    Mass,
}

impl GridMetric {
    pub fn label(self) -> &'static str {
        match self {
            GridMetric::MaxTorque => "max_torque",
            GridMetric::MaxSpeed => "max_speed",
            GridMetric::NaturalFrequency => "natural_frequency",
            GridMetric::BackdriveAvg => "backdrive_avg",
            GridMetric::Mass => "mass",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            GridMetric::MaxTorque | GridMetric::BackdriveAvg => "N*m",
            GridMetric::MaxSpeed => "rad/s",
            GridMetric::NaturalFrequency => "Hz",
            GridMetric::Mass => "kg",
        }
    }
}

impl FromStr for GridMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "max_torque" | "torque" => GridMetric::MaxTorque,
            "max_speed" | "speed" => GridMetric::MaxSpeed,
            "natural_frequency" | "omega_n" => GridMetric::NaturalFrequency,
            "backdrive_avg" | "backdrive" => GridMetric::BackdriveAvg,
            "mass" => GridMetric::Mass,
            other => {
                return Err(Error::validation(
                    "metric",
                    format!("unknown metric '{other}' (max_torque, max_speed, natural_frequency, backdrive_avg, mass)"),
                ))
            }
        })
    }
}

impl fmt::Display for GridMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let axis = GridAxis { lo, hi, count };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::validation("grid axis", "needs at least one point"));
        }
        if !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::validation("grid axis", "bounds must be finite with lo <= hi"));
        }
        if self.count == 1 && self.lo != self.hi {
            return Err(Error::validation("grid axis", "a single point needs lo == hi"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| if k + 1 == self.count { self.hi } else { self.lo + k as f64 * step })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub gap_radius: f64,
    pub gear_ratio: f64,
    /// NaN where the simulation diverged.
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOptimum {
    pub gap_radius: f64,
    pub gear_ratio: f64,
    pub feasible_ratios: GearInterval,
}

/// Gear ratio built from at most two stages, each 1 or 3 to 10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedRatio {
    pub stages: Vec<u32>,
    pub ratio: f64,
}

/// Stage ratios a single planetary or spur stage can reasonably provide.
pub const STAGE_RATIOS: [u32; 8] = [3, 4, 5, 6, 7, 8, 9, 10];

/// The one- or two-stage ratio closest to `target` on a log scale.
pub fn realizable_ratio(target: f64) -> Result<RealizedRatio> {
    if !(target >= 1.0) || !target.is_finite() {
        return Err(Error::validation("gear_ratio", "must be at least 1"));
    }
    let mut options = vec![Vec::new()];
    for &a in &STAGE_RATIOS {
        options.push(vec![a]);
        for &b in STAGE_RATIOS.iter().filter(|&&b| b <= a) {
            options.push(vec![a, b]);
        }
    }
    let best = options
        .into_iter()
        .map(|stages| {
            let ratio: f64 = stages.iter().map(|&s| s as f64).product();
            let err = (ratio / target).ln().abs();
            (err, RealizedRatio { stages, ratio })
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.stages.len().cmp(&b.1.stages.len())))
        .expect("option set is not empty");
    Ok(best.1)
}

enum Knee {
    Synthetic(KneeWaveform),
    Sampled { knee: SampledKnee, offset: f64 },
}

impl KneeTrajectory for Knee {
    fn angle(&self, t: f64) -> f64 {
        match self {
            Knee::Synthetic(w) => w.angle(t),
            Knee::Sampled { knee, offset } => knee.angle(t + offset),
        }
    }

    fn velocity(&self, t: f64) -> f64 {
        match self {
            Knee::Synthetic(w) => w.velocity(t),
            Knee::Sampled { knee, offset } => knee.velocity(t + offset),
        }
    }
}

/// Design evaluator and optimizer over a fixed model configuration.
pub struct Optimizer {
    config: ModelConfig,
    knee: Knee,
    period: f64,
    cycles: usize,
}

impl Optimizer {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let wave = KneeWaveform::new(config.gait.cycle_freq, config.gait.amplitude_scale)?;
        Ok(Optimizer {
            period: wave.period(),
            cycles: config.gait.cycles,
            knee: Knee::Synthetic(wave),
            config,
        })
    }

    /// Use a recorded single-knee trace for the backdrive constraint instead
    /// of the synthetic waveform. Cycle length defaults to 1 s.
    pub fn with_gait_trace(mut self, trace: &GaitTrace) -> Result<Self> {
        let period = trace.cycle_period.unwrap_or(1.0);
        let cycles = ((trace.duration() + 1e-9) / period).floor() as usize;
        if cycles < 3 {
            return Err(Error::validation(
                "gait trace",
                format!("covers {cycles} cycle(s) of {period} s; at least 3 are required"),
            ));
        }
        self.knee = Knee::Sampled {
            knee: trace.knee_interpolant()?,
            offset: trace.start_time(),
        };
        self.period = period;
        self.cycles = cycles;
        Ok(self)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn motor(&self, gap_radius: f64) -> Result<MotorParams> {
        scale_motor(gap_radius)
    }

    pub fn actuator_mass(&self, gap_radius: f64) -> Result<f64> {
        Ok(scale_motor(gap_radius)?.mass + self.config.structure_mass)
    }

    fn check_ratio(&self, n: f64) -> Result<()> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::Domain {
                quantity: "gear_ratio",
                value: n,
                bound: ">= 1".into(),
            });
        }
        Ok(())
    }

    pub fn max_torque(&self, r: f64, n: f64) -> Result<f64> {
        self.check_ratio(n)?;
        let m = scale_motor(r)?;
        simulate_max_torque(&m, &self.config.drivetrain(n), &self.config.sim).map_err(|e| e.at_design(r, n))
    }

    pub fn max_speed(&self, r: f64, n: f64) -> Result<f64> {
        self.check_ratio(n)?;
        let m = scale_motor(r)?;
        simulate_max_speed(&m, &self.config.drivetrain(n), &self.config.sim).map_err(|e| e.at_design(r, n))
    }

    pub fn natural_frequency_hz(&self, r: f64, n: f64) -> Result<f64> {
        self.check_ratio(n)?;
        let m = scale_motor(r)?;
        let w = natural_frequency(&m, &self.config.drivetrain(n), &self.config.gains())?;
        Ok(w / (2.0 * std::f64::consts::PI))
    }

    pub fn backdrive(&self, r: f64, n: f64) -> Result<BackdriveTorque> {
        self.check_ratio(n)?;
        let m = scale_motor(r)?;
        simulate_backdrive_with(
            &m,
            &self.config.drivetrain(n),
            &self.knee,
            self.period,
            self.cycles,
            &self.config.sim,
        )
        .map_err(|e| e.at_design(r, n))
    }

    pub fn metrics(&self, r: f64, n: f64) -> Result<DesignMetrics> {
        let bd = self.backdrive(r, n)?;
        Ok(DesignMetrics {
            max_torque: self.max_torque(r, n)?,
            max_speed: self.max_speed(r, n)?,
            natural_frequency_hz: self.natural_frequency_hz(r, n)?,
            backdrive_avg: bd.average,
            backdrive_peak: bd.peak,
            mass: self.actuator_mass(r)?,
        })
    }

    pub fn grid_value(&self, metric: GridMetric, r: f64, n: f64) -> Result<f64> {
        match metric {
            GridMetric::MaxTorque => self.max_torque(r, n),
            GridMetric::MaxSpeed => self.max_speed(r, n),
            GridMetric::NaturalFrequency => self.natural_frequency_hz(r, n),
            GridMetric::BackdriveAvg => Ok(self.backdrive(r, n)?.average),
            GridMetric::Mass => self.actuator_mass(r),
        }
    }

    /// All four constraints at one design. Inequalities are strict.
    pub fn evaluate_design(&self, r: f64, n: f64, req: &Requirements) -> Result<ConstraintReport> {
        let metrics = self.metrics(r, n)?;
        let constraints: Vec<ConstraintStatus> = Constraint::ALL
            .iter()
            .map(|&c| {
                let (value, threshold, margin) = match c {
                    Constraint::RequiredTorque => {
                        (metrics.max_torque, req.required_torque, metrics.max_torque - req.required_torque)
                    }
                    Constraint::MaxSpeed => (metrics.max_speed, req.required_speed, metrics.max_speed - req.required_speed),
                    Constraint::NaturalFrequency => (
                        metrics.natural_frequency_hz,
                        req.required_natural_frequency_hz,
                        metrics.natural_frequency_hz - req.required_natural_frequency_hz,
                    ),
                    Constraint::Backdrive => (
                        metrics.backdrive_avg,
                        req.max_backdrive_torque,
                        req.max_backdrive_torque - metrics.backdrive_avg,
                    ),
                };
                ConstraintStatus {
                    constraint: c,
                    value,
                    threshold,
                    margin,
                    satisfied: margin > 0.0,
                }
            })
            .collect();
        let feasible = constraints.iter().all(|s| s.satisfied);
        Ok(ConstraintReport {
            gap_radius: r,
            gear_ratio: n,
            metrics,
            constraints,
            feasible,
        })
    }

    fn torque_ok(&self, r: f64, n: f64, req: &Requirements) -> Result<bool> {
        Ok(self.max_torque(r, n)? > req.required_torque)
    }

    /// Constraints that tighten with gear ratio, cheapest first.
    fn upper_ok(&self, r: f64, n: f64, req: &Requirements) -> Result<bool> {
        Ok(self.natural_frequency_hz(r, n)? > req.required_natural_frequency_hz
            && self.max_speed(r, n)? > req.required_speed
            && self.backdrive(r, n)?.average < req.max_backdrive_torque)
    }

    /// Bisect between a failing and a passing ratio; returns the passing end.
    fn bisect_ratio(
        &self,
        mut fail: f64,
        mut pass: f64,
        mut ok: impl FnMut(f64) -> Result<bool>,
    ) -> Result<f64> {
        let tol = self.config.ratio_tolerance;
        while (fail - pass).abs() > tol * fail.abs().max(pass.abs()) {
            let mid = 0.5 * (fail + pass);
            if ok(mid)? {
                pass = mid;
            } else {
                fail = mid;
            }
        }
        Ok(pass)
    }

    fn lowest_torque_ratio(&self, r: f64, req: &Requirements) -> Result<Option<f64>> {
        let [n_min, n_max] = self.config.bounds.gear_ratio;
        if self.torque_ok(r, n_min, req)? {
            return Ok(Some(n_min));
        }
        if !self.torque_ok(r, n_max, req)? {
            return Ok(None);
        }
        self.bisect_ratio(n_min, n_max, |n| self.torque_ok(r, n, req)).map(Some)
    }

    /// Feasible gear ratios at gap radius `r`, or `None` when there are none.
    pub fn feasible_gear_interval(&self, r: f64, req: &Requirements) -> Result<Option<GearInterval>> {
        let n_max = self.config.bounds.gear_ratio[1];
        let Some(lo) = self.lowest_torque_ratio(r, req)? else {
            return Ok(None);
        };
        if !self.upper_ok(r, lo, req)? {
            return Ok(None);
        }
        let hi = if self.upper_ok(r, n_max, req)? {
            n_max
        } else {
            self.bisect_ratio(n_max, lo, |n| self.upper_ok(r, n, req))?
        };
        Ok(Some(GearInterval { lo, hi }))
    }

    fn radius_feasible(&self, r: f64, req: &Requirements) -> Result<bool> {
        Ok(match self.lowest_torque_ratio(r, req)? {
            Some(lo) => self.upper_ok(r, lo, req)?,
            None => false,
        })
    }

    /// Constraints that cannot be met at the largest radius in the search box.
    fn binding_at_limit(&self, req: &Requirements) -> Result<String> {
        let r = self.config.bounds.gap_radius[1];
        let [n_min, n_max] = self.config.bounds.gear_ratio;
        let Some(lo) = self.lowest_torque_ratio(r, req)? else {
            return Ok(format!("{} (even at gear ratio {n_max})", Constraint::RequiredTorque));
        };
        let report = self.evaluate_design(r, lo, req)?;
        let mut failing: Vec<&str> = report.violated().iter().map(|c| c.label()).collect();
        if failing.is_empty() {
            failing.push(Constraint::RequiredTorque.label());
        }
        Ok(format!(
            "{} at gap radius {r} m, gear ratio {lo:.3} (ratio range {n_min}..{n_max})",
            failing.join(", ")
        ))
    }

    /// Lightest feasible design: smallest gap radius with a nonempty set of
    /// gear ratios, taking the middle of that set.
    pub fn optimize(&self, req: &Requirements) -> Result<OptimizationResult> {
        let [r_min, r_max] = self.config.bounds.gap_radius;
        let step = self.config.radius_scan_step;
        let mut prev: Option<f64> = None;
        let mut found = None;
        let mut k = 0usize;
        loop {
            let r = (r_min + k as f64 * step).min(r_max);
            if self.radius_feasible(r, req)? {
                found = Some(r);
                break;
            }
            if r >= r_max {
                break;
            }
            prev = Some(r);
            k += 1;
        }
        let Some(mut pass) = found else {
            return Err(Error::Infeasible {
                age: req.age,
                binding: self.binding_at_limit(req)?,
            });
        };
        if let Some(mut fail) = prev {
            while pass - fail > self.config.radius_tolerance {
                let mid = 0.5 * (fail + pass);
                if self.radius_feasible(mid, req)? {
                    pass = mid;
                } else {
                    fail = mid;
                }
            }
        }
        let r = pass;
        let interval = self
            .feasible_gear_interval(r, req)?
            .expect("radius was just found feasible");
        let n = interval.midpoint();
        let report = self.evaluate_design(r, n, req)?;
        let tol = self.config.active_tolerance;
        let active_constraints = report
            .constraints
            .iter()
            .filter(|s| s.margin.abs() < tol * s.threshold.abs())
            .map(|s| s.constraint)
            .collect();
        log::debug!("age {}: r_g = {r:.5} m, n = {n:.3}", req.age);
        Ok(OptimizationResult {
            requirements: *req,
            gap_radius: r,
            gear_ratio: n,
            feasible_ratios: interval,
            motor_mass: scale_motor(r)?.mass,
            actuator_mass: report.metrics.mass,
            active_constraints,
            report,
        })
    }

    /// Optimize each age independently, in parallel. Results keep the input order.
    pub fn sweep_ages(
        &self,
        ages: &[f64],
        overrides: &RequirementOverrides,
    ) -> Vec<(f64, Result<OptimizationResult>)> {
        ages.par_iter()
            .map(|&age| {
                let res = requirements_for_age(age, overrides).and_then(|req| self.optimize(&req));
                (age, res)
            })
            .collect()
    }

    /// Tabulate one metric over a gap-radius by gear-ratio grid, radius-major.
    /// Cells whose simulation diverges are NaN.
    pub fn constraint_grid(&self, metric: GridMetric, radii: &GridAxis, ratios: &GridAxis) -> Result<Vec<GridCell>> {
        radii.validate()?;
        ratios.validate()?;
        let rs = radii.points();
        let ns = ratios.points();
        let cells: Vec<(f64, f64)> = rs.iter().flat_map(|&r| ns.iter().map(move |&n| (r, n))).collect();
        cells
            .par_iter()
            .map(|&(r, n)| {
                let value = match self.grid_value(metric, r, n) {
                    Ok(v) => v,
                    Err(e) if e.is_divergence() => {
                        log::warn!("{metric} diverged at r_g = {r}, n = {n}: {e}");
                        f64::NAN
                    }
                    Err(e) => return Err(e),
                };
                Ok(GridCell {
                    gap_radius: r,
                    gear_ratio: n,
                    value,
                })
            })
            .collect()
    }

    /// Exhaustive grid search over the configured bounds with `resolution`
    /// points per axis, one answer per requirement set. Metrics are computed
    /// lazily and shared between requirement sets.
    pub fn brute_force_optimum(&self, reqs: &[Requirements], resolution: usize) -> Result<Vec<Option<BruteForceOptimum>>> {
        if resolution < 2 {
            return Err(Error::validation("resolution", "need at least 2 points per axis"));
        }
        let [r_lo, r_hi] = self.config.bounds.gap_radius;
        let [n_lo, n_hi] = self.config.bounds.gear_ratio;
        let rs = GridAxis::new(r_lo, r_hi, resolution)?.points();
        let ns = GridAxis::new(n_lo, n_hi, resolution)?.points();
        let mut cache: Vec<[Option<f64>; 4]> = vec![[None; 4]; resolution * resolution];
        let mut out = Vec::with_capacity(reqs.len());
        for req in reqs {
            let mut answer = None;
            for (i, &r) in rs.iter().enumerate() {
                let row = &mut cache[i * resolution..(i + 1) * resolution];
                // Fill the metrics this row needs in parallel.
                row.par_iter_mut().zip(ns.par_iter()).try_for_each(|(slot, &n)| -> Result<()> {
                    let wn = *slot_get(slot, 0, || self.natural_frequency_hz(r, n))?;
                    if wn <= req.required_natural_frequency_hz {
                        return Ok(());
                    }
                    let speed = *slot_get(slot, 1, || self.max_speed(r, n))?;
                    if speed <= req.required_speed {
                        return Ok(());
                    }
                    let torque = *slot_get(slot, 2, || self.max_torque(r, n))?;
                    if torque <= req.required_torque {
                        return Ok(());
                    }
                    slot_get(slot, 3, || Ok(self.backdrive(r, n)?.average))?;
                    Ok(())
                })?;
                let feasible: Vec<f64> = row
                    .iter()
                    .zip(&ns)
                    .filter(|(s, _)| match *s {
                        [Some(wn), Some(speed), Some(torque), Some(bd)] => {
                            *wn > req.required_natural_frequency_hz
                                && *speed > req.required_speed
                                && *torque > req.required_torque
                                && *bd < req.max_backdrive_torque
                        }
                        _ => false,
                    })
                    .map(|(_, &n)| n)
                    .collect();
                if let (Some(&lo), Some(&hi)) = (feasible.first(), feasible.last()) {
                    let interval = GearInterval { lo, hi };
                    answer = Some(BruteForceOptimum {
                        gap_radius: r,
                        gear_ratio: interval.midpoint(),
                        feasible_ratios: interval,
                    });
                    break;
                }
            }
            out.push(answer);
        }
        Ok(out)
    }
}

fn slot_get(slot: &mut [Option<f64>; 4], k: usize, f: impl FnOnce() -> Result<f64>) -> Result<&f64> {
    if slot[k].is_none() {
        slot[k] = Some(f()?);
    }
    Ok(slot[k].as_ref().expect("just filled"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::requirements::requirements_for_age;

    fn opt() -> Optimizer {
        Optimizer::new(ModelConfig::default()).unwrap()
    }

    #[test]
    fn report_lists_four_constraints_in_order() {
        let req = requirements_for_age(10.0, &Default::default()).unwrap();
        let rep = opt().evaluate_design(0.021, 8.0, &req).unwrap();
        let order: Vec<_> = rep.constraints.iter().map(|c| c.constraint).collect();
        assert_eq!(order, Constraint::ALL);
        assert_eq!(rep.feasible, rep.constraints.iter().all(|c| c.satisfied));
        let bd = rep.status(Constraint::Backdrive);
        assert!((bd.margin - (bd.threshold - bd.value)).abs() < 1e-12);
    }

    #[test]
    fn realizable_ratio_picks_nearest() {
        assert_eq!(realizable_ratio(1.0).unwrap().stages, Vec::<u32>::new());
        assert_eq!(realizable_ratio(6.2).unwrap().ratio, 6.0);
        assert_eq!(realizable_ratio(11.9).unwrap().ratio, 12.0);
        assert_eq!(realizable_ratio(100.0).unwrap().ratio, 100.0);
        assert_eq!(realizable_ratio(500.0).unwrap().ratio, 100.0);
        assert!(realizable_ratio(0.5).is_err());
    }

    #[test]
    fn grid_axis_points() {
        let a = GridAxis::new(0.01, 0.03, 3).unwrap();
        for (p, want) in a.points().iter().zip([0.01, 0.02, 0.03]) {
            assert!((p - want).abs() < 1e-15);
        }
        assert_eq!(GridAxis::new(10.0, 10.0, 1).unwrap().points(), vec![10.0]);
        assert!(GridAxis::new(1.0, 2.0, 1).is_err());
        assert!(GridAxis::new(2.0, 1.0, 4).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [
            GridMetric::MaxTorque,
            GridMetric::MaxSpeed,
            GridMetric::NaturalFrequency,
            GridMetric::BackdriveAvg,
            GridMetric::Mass,
        ] {
            assert_eq!(m.label().parse::<GridMetric>().unwrap(), m);
        }
        assert!("volume".parse::<GridMetric>().is_err());
    }

    #[test]
    fn rejects_ratio_below_one() {
        assert!(matches!(opt().max_torque(0.021, 0.5), Err(Error::Domain { .. })));
    }
}
