//! Gap-radius scaling of a high torque density brushless motor.
//!
//! Every parameter of a motor with fixed rotor and stator radial thickness is
//! a power law of its air-gap radius. [`REFERENCE_MOTOR`] anchors those laws
//! at the prototype motor (r_g = 21 mm); [`scale_motor`] moves along them.
//!
//! Motor damping `b_m` and the voltage limit have no scaling relationship and
//! are carried over unchanged. Everything downstream that depends on viscous
//! loss (free-running speed, backdrive torque) is therefore sensitive to the
//! reference `b_m = 0.01 N·m·s/rad`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest gap radius the scaling laws are applied to (m).
pub const MIN_GAP_RADIUS: f64 = 0.005;
/// Largest gap radius the scaling laws are applied to (m).
pub const MAX_GAP_RADIUS: f64 = 0.08;

/// Full electromechanical parameter set of a motor, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    pub gap_radius: f64,
    pub motor_radius: f64,
    pub mass: f64,
    pub rotor_inertia: f64,
    pub damping: f64,
    pub torque_constant: f64,
    pub backemf_constant: f64,
    pub resistance: f64,
    pub inductance: f64,
    pub max_voltage: f64,
    pub max_current: f64,
    pub max_motor_torque: f64,
}

/// The prototype pediatric knee actuator motor.
pub const REFERENCE_MOTOR: MotorParams = MotorParams {
    gap_radius: 0.021,
    motor_radius: 0.026,
    mass: 0.112,
    rotor_inertia: 9.9e-6,
    damping: 0.01,
    torque_constant: 0.04,
    backemf_constant: 0.04,
    resistance: 0.74,
    inductance: 2.98e-4,
    max_voltage: 42.0,
    max_current: 16.5,
    max_motor_torque: 0.66,
};

/// Power-law exponents of each parameter with respect to gap radius.
pub mod exponent {
    pub const MOTOR_RADIUS: i32 = 1;
    pub const MASS: i32 = 2;
    pub const ROTOR_INERTIA: i32 = 3;
    pub const DAMPING: i32 = 0;
    pub const TORQUE_CONSTANT: i32 = 1;
    pub const BACKEMF_CONSTANT: i32 = 1;
    pub const RESISTANCE: i32 = -1;
    pub const INDUCTANCE: i32 = -1;
    pub const MAX_VOLTAGE: i32 = 0;
    pub const MAX_CURRENT: i32 = 1;
    pub const MAX_MOTOR_TORQUE: i32 = 2;
}

fn check_gap_radius(gap_radius: f64) -> Result<()> {
    if !gap_radius.is_finite() || gap_radius < MIN_GAP_RADIUS {
        return Err(Error::Domain {
            quantity: "gap radius",
            value: gap_radius,
            bound: format!(">= {MIN_GAP_RADIUS} m"),
        });
    }
    if gap_radius > MAX_GAP_RADIUS {
        return Err(Error::Domain {
            quantity: "gap radius",
            value: gap_radius,
            bound: format!("<= {MAX_GAP_RADIUS} m"),
        });
    }
    Ok(())
}

/// Motor parameters at `gap_radius` (m), obtained by scaling the reference
/// motor along the gap-radius power laws.
pub fn scale_motor(gap_radius: f64) -> Result<MotorParams> {
    check_gap_radius(gap_radius)?;
    let r = &REFERENCE_MOTOR;
    let ratio = gap_radius / r.gap_radius;
    let scaled = |value: f64, exp: i32| value * ratio.powi(exp);
    Ok(MotorParams {
        gap_radius,
        motor_radius: scaled(r.motor_radius, exponent::MOTOR_RADIUS),
        mass: scaled(r.mass, exponent::MASS),
        rotor_inertia: scaled(r.rotor_inertia, exponent::ROTOR_INERTIA),
        damping: scaled(r.damping, exponent::DAMPING),
        torque_constant: scaled(r.torque_constant, exponent::TORQUE_CONSTANT),
        backemf_constant: scaled(r.backemf_constant, exponent::BACKEMF_CONSTANT),
        resistance: scaled(r.resistance, exponent::RESISTANCE),
        inductance: scaled(r.inductance, exponent::INDUCTANCE),
        max_voltage: scaled(r.max_voltage, exponent::MAX_VOLTAGE),
        max_current: scaled(r.max_current, exponent::MAX_CURRENT),
        max_motor_torque: scaled(r.max_motor_torque, exponent::MAX_MOTOR_TORQUE),
    })
}

/// Motor mass (kg), proportional to the square of the gap radius.
pub fn motor_mass(gap_radius: f64) -> Result<f64> {
    check_gap_radius(gap_radius)?;
    let ratio = gap_radius / REFERENCE_MOTOR.gap_radius;
    Ok(REFERENCE_MOTOR.mass * ratio * ratio)
}

impl MotorParams {
    /// Fields paired with their gap-radius exponents, in declaration order.
    pub fn scaled_fields(&self) -> [(&'static str, f64, i32); 11] {
        [
            ("motor_radius", self.motor_radius, exponent::MOTOR_RADIUS),
            ("mass", self.mass, exponent::MASS),
            ("rotor_inertia", self.rotor_inertia, exponent::ROTOR_INERTIA),
            ("damping", self.damping, exponent::DAMPING),
            ("torque_constant", self.torque_constant, exponent::TORQUE_CONSTANT),
            ("backemf_constant", self.backemf_constant, exponent::BACKEMF_CONSTANT),
            ("resistance", self.resistance, exponent::RESISTANCE),
            ("inductance", self.inductance, exponent::INDUCTANCE),
            ("max_voltage", self.max_voltage, exponent::MAX_VOLTAGE),
            ("max_current", self.max_current, exponent::MAX_CURRENT),
            ("max_motor_torque", self.max_motor_torque, exponent::MAX_MOTOR_TORQUE),
        ]
    }

    /// Lumped viscous term `R·b_m + k_b·k_t` that appears in every L = 0
    /// model of the motor.
    pub fn electromechanical_damping(&self) -> f64 {
        self.resistance * self.damping + self.backemf_constant * self.torque_constant
    }

    pub fn stall_current(&self, voltage: f64) -> f64 {
        voltage / self.resistance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_radius_reproduces_reference_motor() {
        let m = scale_motor(0.021).unwrap();
        assert_eq!(m, REFERENCE_MOTOR);
    }

    #[test]
    fn doubled_radius() {
        let m = scale_motor(0.042).unwrap();
        assert_relative_eq!(m.mass, 0.448, max_relative = 1e-12);
        assert_relative_eq!(m.rotor_inertia, 7.92e-5, max_relative = 1e-12);
        assert_relative_eq!(m.torque_constant, 0.08, max_relative = 1e-12);
        assert_relative_eq!(m.resistance, 0.37, max_relative = 1e-12);
        assert_relative_eq!(m.max_current, 33.0, max_relative = 1e-12);
        assert_eq!(m.damping, 0.01);
        assert_eq!(m.max_voltage, 42.0);
    }

    #[test]
    fn halved_radius() {
        let m = scale_motor(0.0105).unwrap();
        assert_relative_eq!(m.torque_constant, 0.02, max_relative = 1e-12);
        assert_relative_eq!(m.rotor_inertia, 1.2375e-6, max_relative = 1e-12);
    }

    #[test]
    fn reference_invariants() {
        let r = REFERENCE_MOTOR;
        assert_eq!(r.torque_constant, r.backemf_constant);
        assert!(r.max_motor_torque <= r.torque_constant * r.max_current * 1.01);
        for (_, v, _) in r.scaled_fields() {
            assert!(v > 0.0);
        }
    }

    #[test]
    fn mass_law() {
        assert_relative_eq!(motor_mass(0.021).unwrap(), 0.112, max_relative = 1e-15);
        assert_relative_eq!(motor_mass(0.042).unwrap(), 0.448, max_relative = 1e-12);
        assert_relative_eq!(motor_mass(0.033).unwrap(), 0.2766, epsilon = 5e-5);
    }

    #[test]
    fn out_of_range_names_the_bound() {
        let low = scale_motor(0.001).unwrap_err().to_string();
        assert!(low.contains(">= 0.005"), "{low}");
        let high = motor_mass(0.2).unwrap_err().to_string();
        assert!(high.contains("<= 0.08"), "{high}");
        assert!(scale_motor(f64::NAN).is_err());
    }

    #[test]
    fn resistance_times_torque_constant_is_scale_free() {
        let reference = REFERENCE_MOTOR.resistance * REFERENCE_MOTOR.torque_constant;
        for r in [0.006, 0.015, 0.021, 0.037, 0.075] {
            let m = scale_motor(r).unwrap();
            assert_relative_eq!(m.resistance * m.torque_constant, reference, max_relative = 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let a = scale_motor(0.0317).unwrap();
        let b = scale_motor(0.0317).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scaling_composes(r in 0.01f64..0.04, a in 0.5f64..2.0) {
                let base = scale_motor(r).unwrap();
                let scaled = scale_motor(a * r).unwrap();
                for ((name, v0, exp), (_, v1, _)) in base.scaled_fields().into_iter().zip(scaled.scaled_fields()) {
                    let expected = v0 * a.powi(exp);
                    prop_assert!(((v1 - expected) / expected).abs() < 1e-12, "{name}: {v1} vs {expected}");
                }
            }
        }
    }
}
