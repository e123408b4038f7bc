//! Scaling, simulation and design optimization for quasi-direct-drive knee
//! exoskeleton actuators.

pub mod config;
pub mod controller;
pub mod error;
pub mod gait;
pub mod motor;
pub mod optimizer;
pub mod plant;
pub mod requirements;
pub mod sim;
pub mod tf;

pub use config::{GaitSpec, ModelConfig, SearchBounds};
pub use controller::{run_controller, ControllerConfig, ControllerState, TorqueTrace};
pub use error::{Error, Result};
pub use gait::{load_trace, save_trace, synthetic_knee_trace, two_leg_synthetic, GaitTrace, KneeTrajectory};
pub use motor::{motor_mass, scale_motor, MotorParams, REFERENCE_MOTOR};
pub use optimizer::{
    realizable_ratio, Constraint, ConstraintReport, GridAxis, GridMetric, OptimizationResult, Optimizer,
};
pub use plant::{backdrive_tf, closed_loop_torque_tf, natural_frequency, ControlGains, DrivetrainConfig};
pub use requirements::{requirements_for_age, RequirementOverrides, Requirements};
pub use sim::{
    bandwidth_neg3db, frequency_response, simulate_backdrive, simulate_max_speed, simulate_max_torque, SimOptions,
};
pub use tf::RationalTF;
