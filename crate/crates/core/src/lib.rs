//! Access point placement on a cell grid.
//!
//! The environment is a rectangular grid of square cells holding obstacles,
//! candidate AP sites, an equipment catalog and receiving cells. On top of it:
//!
//! - [`propagation`]: received power and bitrate through a discretized
//!   Fresnel-zone obstacle model,
//! - [`optimize`]: the cost versus weighted-coverage Pareto front, exactly
//!   for small instances and by variant-probability search otherwise,
//! - [`calibration`]: fitting obstacle absorption to measured levels.
//!
//! Model code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

pub mod calibration;
pub mod error;
pub mod geometry;
pub mod optimize;
pub mod propagation;
pub mod scalar;
pub mod scenario;
pub mod scheme;

pub use error::{CalibrationError, DecisionError, OptimizeError, ScenarioError};
pub use scalar::Scalar;
pub use scheme::{
    validate_scheme, AntennaPattern, BitrateStep, BitrateTable, CandidateSite, Cell, EquipmentType, GridScheme,
    Obstacle, PlacementDecision, ReceiverCell, Violation, ViolationCode,
};

pub type Scheme = GridScheme<f64>;
pub type SchemeF32 = GridScheme<f32>;
pub type Site = CandidateSite<f64>;
pub type Equipment = EquipmentType<f64>;
pub type Receiver = ReceiverCell<f64>;
pub type Wall = Obstacle<f64>;
pub type Pattern = AntennaPattern<f64>;
pub type Link = propagation::LinkBudget<f64>;
pub type Profile = propagation::PathProfile<f64>;
pub type Coverage = propagation::CoverageMap<f64>;
pub type Objectives = optimize::ObjectiveVector<f64>;
pub type Front = optimize::ParetoResult<f64>;
pub type FrontPoint = optimize::ParetoPoint<f64>;
pub type CalibrationSettings = calibration::CalibrationConfig<f64>;
pub type Calibration = calibration::CalibrationResult<f64>;
