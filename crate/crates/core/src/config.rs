use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{
    ControlGains, DrivetrainConfig, DEFAULT_COUPLING_STIFFNESS, DEFAULT_HUMAN_INERTIA,
    DEFAULT_SUPPLY_VOLTAGE,
};
use crate::sim::SimOptions;

/// Gearbox and structure mass of the prototype actuator (0.530 kg) less its
/// 0.112 kg motor. Taken as independent of gear ratio.
pub const DEFAULT_STRUCTURE_MASS: f64 = 0.418;

/// Knee trajectory used for the backdrive constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitSpec {
    pub cycle_freq: f64,
    pub amplitude_scale: f64,
    /// Simulated cycles; the first is discarded.
    pub cycles: usize,
}

impl Default for GaitSpec {
    fn default() -> Self {
        GaitSpec {
            cycle_freq: 1.0,
            amplitude_scale: 1.0,
            cycles: 3,
        }
    }
}

/// Closed search box over gap radius (m) and gear ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBounds {
    pub gap_radius: [f64; 2],
    pub gear_ratio: [f64; 2],
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            gap_radius: [0.005, 0.05],
            gear_ratio: [1.0, 60.0],
        }
    }
}

/// Everything that fixes the model and the search, apart from requirements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub coupling_stiffness: f64,
    pub coupling_damping: f64,
    pub supply_voltage: f64,
    pub human_inertia: f64,
    pub kp: f64,
    pub sim: SimOptions,
    pub gait: GaitSpec,
    pub bounds: SearchBounds,
    pub structure_mass: f64,
    /// Coarse gap-radius step used to bracket the smallest feasible radius (m).
    pub radius_scan_step: f64,
    /// Bisection tolerance on gap radius (m).
    pub radius_tolerance: f64,
    /// Relative bisection tolerance on gear ratio.
    pub ratio_tolerance: f64,
    /// A constraint is active when its slack is below this fraction of its threshold.
    pub active_tolerance: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            coupling_stiffness: DEFAULT_COUPLING_STIFFNESS,
            coupling_damping: 0.0,
            supply_voltage: DEFAULT_SUPPLY_VOLTAGE,
            human_inertia: DEFAULT_HUMAN_INERTIA,
            kp: 1.0,
            sim: SimOptions::default(),
            gait: GaitSpec::default(),
            bounds: SearchBounds::default(),
            structure_mass: DEFAULT_STRUCTURE_MASS,
            radius_scan_step: 1e-3,
            radius_tolerance: 1e-4,
            ratio_tolerance: 1e-3,
            active_tolerance: 0.01,
        }
    }
}

impl ModelConfig {
    pub fn drivetrain(&self, gear_ratio: f64) -> DrivetrainConfig {
        DrivetrainConfig {
            gear_ratio,
            coupling_stiffness: self.coupling_stiffness,
            coupling_damping: self.coupling_damping,
            supply_voltage: self.supply_voltage,
            human_inertia: self.human_inertia,
        }
    }

    pub fn gains(&self) -> ControlGains {
        ControlGains::proportional(self.kp)
    }

    pub fn validate(&self) -> Result<()> {
        self.drivetrain(1.0).validate()?;
        self.gains().validate()?;
        self.sim.validate()?;
        let [r_lo, r_hi] = self.bounds.gap_radius;
        let [n_lo, n_hi] = self.bounds.gear_ratio;
        if !(r_lo < r_hi) || !(n_lo < n_hi) {
            return Err(Error::validation("bounds", "lower bound must be below upper bound"));
        }
        if !(n_lo >= 1.0) {
            return Err(Error::validation("bounds.gear_ratio", "must start at 1 or above"));
        }
        crate::motor::scale_motor(r_lo)?;
        crate::motor::scale_motor(r_hi)?;
        if !(self.gait.cycle_freq > 0.0) || self.gait.cycles < 3 {
            return Err(Error::validation("gait", "need a positive frequency and at least 3 cycles"));
        }
        for (name, v) in [
            ("structure_mass", self.structure_mass),
            ("radius_scan_step", self.radius_scan_step),
            ("radius_tolerance", self.radius_tolerance),
            ("ratio_tolerance", self.ratio_tolerance),
            ("active_tolerance", self.active_tolerance),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(name, "must be a non-negative number"));
            }
        }
        if !(self.radius_scan_step > 0.0 && self.radius_tolerance > 0.0 && self.ratio_tolerance > 0.0) {
            return Err(Error::validation("tolerances", "search steps must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: ModelConfig = serde_json::from_str(r#"{"coupling_stiffness": 250.0, "sim": {"dt": 1e-4}}"#).unwrap();
        assert_eq!(cfg.coupling_stiffness, 250.0);
        assert_eq!(cfg.sim.dt, 1e-4);
        assert_eq!(cfg.sim.steady_rate, SimOptions::default().steady_rate);
        assert_eq!(cfg.bounds, SearchBounds::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_inverted_bounds() {
        let cfg = ModelConfig {
            bounds: SearchBounds { gap_radius: [0.03, 0.02], ..Default::default() },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
