//! Occupancy-state machinery for finite-horizon partially observable stochastic games.
//!
//! The crate covers model ingestion, exact occupancy and private-occupancy dynamics,
//! joint-policy evaluation, exact solvers for small games and a numerical verification harness.

pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod format;
pub mod model;
pub mod occupancy;
pub mod parse;
pub mod policies;
pub mod scalar;
pub mod solve;
pub mod verify;

pub use error::{Error, ParseErrorKind, Result};
pub use model::{horizon_for_epsilon, Criterion, ModelTables, PosgModel};
pub use parse::parse_posg;
pub use scalar::Scalar;

pub type Model = model::PosgModel<f64>;
pub type Occupancy = occupancy::OccupancyState<f64>;
pub type PrivateOccupancy = occupancy::PrivateOccupancyState<f64>;
pub type Policy = policies::PolicyTree<f64>;
pub type Joint = policies::JointPolicy<f64>;
pub type Table = evaluate::ValueTable<f64>;
pub type Solution = solve::Equilibrium<f64>;
