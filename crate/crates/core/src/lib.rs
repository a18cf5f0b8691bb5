//! Simulation core for an analog infrared audio link whose emitter rides on
//! a PD-stabilized pendulum.
//!
//! The crate is split along the physical signal path:
//!
//! * [`dynamics`]: the pendulum plant, RK4 integration and linearization.
//! * [`controller`]: the discrete PD law plus closed-loop analysis.
//! * [`actuator`]: PWM duty / H-bridge voltage model with saturation.
//! * [`signal_chain`]: preamp, LED bias, optical channel, band-pass filter,
//!   power amplifier and distortion metrics.
//! * [`scenario`]: couples base vibration, pendulum and link; classifies
//!   experiment outcomes.
//! * [`config`]: the flat `section.key = value` experiment description.

pub mod actuator;
pub mod config;

pub mod controller;
pub mod dynamics;
pub mod error;
pub mod scenario;

pub mod signal_chain;
pub mod tf;

pub use actuator::MotorParams;
pub use config::ExperimentConfig;

pub use controller::{ControlLaw, ControllerState, PdGains};
pub use dynamics::{GravityModel, PendulumParams, PendulumState};
pub use error::{Error, Result};
pub use scenario::{
    AudioClass, AudioReport, ScenarioConfig, ScenarioResult, StabilityClass, StabilityReport,
    VibrationKind, VibrationProfile,
};
pub use signal_chain::{
    AmplifierSpec, ChannelSpec, DigitalFilter, FilterDesign, NoiseSpec, Signal, TransistorModel,
};
pub use tf::TransferFunction;

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
