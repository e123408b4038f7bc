//! Age-specific actuator requirements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_AGE: f64 = 3.0;
/// Adults are pinned to this age in the knee-moment fit.
pub const MAX_AGE: f64 = 18.0;

/// Fraction of the peak knee extension moment the actuator supplies.
pub const ASSISTANCE_FRACTION: f64 = 0.3;
pub const SAFETY_FACTOR: f64 = 2.0;

/// Peak knee speed of a 1 Hz walking cycle (rad/s).
pub const DEFAULT_REQUIRED_SPEED: f64 = 2.0 * PI;
pub const DEFAULT_REQUIRED_NATURAL_FREQUENCY_HZ: f64 = 20.0;
pub const DEFAULT_MAX_BACKDRIVE_TORQUE: f64 = 5.0;

/// Thresholds a design must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Requirements {
    pub age: f64,
    /// Output torque the actuator must exceed (N·m).
    pub required_torque: f64,
    /// Output speed the actuator must exceed (rad/s).
    pub required_speed: f64,
    /// Closed-loop natural frequency the torque loop must exceed (Hz).
    pub required_natural_frequency_hz: f64,
    /// Unpowered backdrive torque the actuator must stay below (N·m).
    pub max_backdrive_torque: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RequirementOverrides {
    pub required_torque: Option<f64>,
    pub required_speed: Option<f64>,
    pub required_natural_frequency_hz: Option<f64>,
    pub max_backdrive_torque: Option<f64>,
}

impl RequirementOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

fn check_age(age: f64) -> Result<()> {
    if !(age >= MIN_AGE) {
        return Err(Error::Domain {
            quantity: "age",
            value: age,
            bound: format!(">= {MIN_AGE} years"),
        });
    }
    if !(age <= MAX_AGE) {
        return Err(Error::Domain {
            quantity: "age",
            value: age,
            bound: format!("<= {MAX_AGE} years"),
        });
    }
    Ok(())
}

/// Peak knee extension moment during walking (N·m), quadratic fit over age.
pub fn peak_knee_moment(age: f64) -> Result<f64> {
    check_age(age)?;
    Ok(0.08277 * age * age + 0.4427 * age - 0.4424)
}

/// Torque the actuator must deliver at `age` (N·m).
pub fn required_torque(age: f64) -> Result<f64> {
    Ok(ASSISTANCE_FRACTION * peak_knee_moment(age)? * SAFETY_FACTOR)
}

pub fn requirements_for_age(age: f64, overrides: &RequirementOverrides) -> Result<Requirements> {
    let mut req = Requirements {
        age,
        required_torque: required_torque(age)?,
        required_speed: DEFAULT_REQUIRED_SPEED,
        required_natural_frequency_hz: DEFAULT_REQUIRED_NATURAL_FREQUENCY_HZ,
        max_backdrive_torque: DEFAULT_MAX_BACKDRIVE_TORQUE,
    };
    let fields = [
        ("required_torque", overrides.required_torque, &mut req.required_torque),
        ("required_speed", overrides.required_speed, &mut req.required_speed),
        (
            "required_natural_frequency_hz",
            overrides.required_natural_frequency_hz,
            &mut req.required_natural_frequency_hz,
        ),
        ("max_backdrive_torque", overrides.max_backdrive_torque, &mut req.max_backdrive_torque),
    ];
    for (name, value, slot) in fields {
        if let Some(v) = value {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::validation(name, format!("override {v} must be positive")));
            }
            *slot = v;
        }
    }
    Ok(req)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn knee_moment_fit() {
        assert_relative_eq!(peak_knee_moment(3.0).unwrap(), 1.63063, max_relative = 1e-5);
        assert_relative_eq!(peak_knee_moment(18.0).unwrap(), 34.34368, max_relative = 1e-6);
    }

    #[test]
    fn required_torque_examples() {
        assert_relative_eq!(required_torque(3.0).unwrap(), 0.97838, max_relative = 1e-4);
        assert_relative_eq!(required_torque(18.0).unwrap(), 20.606, max_relative = 1e-4);
        for a in [3.0, 4.5, 9.0, 13.3, 18.0] {
            let ratio = required_torque(a).unwrap() / peak_knee_moment(a).unwrap();
            assert_relative_eq!(ratio, 0.6, max_relative = 1e-15);
        }
    }

    #[test]
    fn strictly_increasing() {
        let mut last = 0.0;
        for k in 0..=150 {
            let t = required_torque(3.0 + 0.1 * k as f64).unwrap();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn age_ten_defaults() {
        let r = requirements_for_age(10.0, &RequirementOverrides::default()).unwrap();
        assert_relative_eq!(r.required_torque, 0.6 * (8.277 + 4.427 - 0.4424), max_relative = 1e-12);
        assert_relative_eq!(r.required_torque, 7.357, max_relative = 1e-4);
        assert_relative_eq!(r.required_speed, 6.2832, max_relative = 1e-5);
        assert_eq!(r.required_natural_frequency_hz, 20.0);
        assert_eq!(r.max_backdrive_torque, 5.0);
    }

    #[test]
    fn override_replaces_one_field() {
        let base = requirements_for_age(10.0, &RequirementOverrides::default()).unwrap();
        let o = RequirementOverrides {
            max_backdrive_torque: Some(3.0),
            ..Default::default()
        };
        let r = requirements_for_age(10.0, &o).unwrap();
        assert_eq!(r.max_backdrive_torque, 3.0);
        assert_eq!(Requirements { max_backdrive_torque: 5.0, ..r }, base);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(requirements_for_age(2.0, &Default::default()), Err(Error::Domain { .. })));
        assert!(peak_knee_moment(18.5).is_err());
        let o = RequirementOverrides {
            required_speed: Some(0.0),
            ..Default::default()
        };
        assert!(matches!(requirements_for_age(10.0, &o), Err(Error::Validation { .. })));
    }

    #[test]
    fn fractional_ages_are_allowed() {
        assert!(requirements_for_age(7.25, &Default::default()).is_ok());
    }
}
