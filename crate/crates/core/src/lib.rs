//! Regularized planar circular restricted three-body problem.

pub mod dual;
pub mod dynamics;
pub mod error;
pub mod floer;
pub mod orbit;
pub mod reeb;
pub mod regularization;
pub mod scalar;

pub use dual::Dual;
pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub type PhaseState64 = dynamics::PhaseState<f64>;
pub type PhaseState32 = dynamics::PhaseState<f32>;
pub type RegState64 = regularization::RegState<f64>;
pub type RegState32 = regularization::RegState<f32>;
pub type KParams64 = regularization::KParams<f64>;
pub type KParams32 = regularization::KParams<f32>;
pub type LagrangeData64 = dynamics::LagrangeData<f64>;
pub type S1S2State64 = reeb::S1S2State<f64>;
pub type Chord64 = reeb::Chord<f64>;
pub type Trajectory64 = orbit::Trajectory<f64>;
pub type Trajectory32 = orbit::Trajectory<f32>;
pub type SymmetricOrbit64 = orbit::SymmetricOrbit<f64>;
pub type SymmetricOrbit32 = orbit::SymmetricOrbit<f32>;
