//! Shortcuts to adiabaticity: inverse-engineered protocols for expansions,
//! transport, two-level control, counterdiabatic driving and fast-forward
//! splitting, with the solvers that verify them.
//!
//! Everything is generic over [`Real`]; the aliases below fix `f64`.

pub mod error;
pub mod grid;
pub mod interpolant;
pub mod linalg;
pub mod ode;
pub mod scalar;

pub mod cd_driving;
pub mod expansion;
pub mod fast_forward;
pub mod formats;
pub mod pipeline;
pub mod transport;
pub mod twolevel;
pub mod wave;

pub use error::{Result, StaError};
pub use scalar::Real;

pub type TimeGrid = grid::TimeGrid<f64>;
pub type SampledFunction = grid::SampledFunction<f64>;
pub type PolyFunction = interpolant::PolyFunction<f64>;
pub type BoundarySpec = interpolant::BoundarySpec<f64>;
pub type SpatialGrid = wave::SpatialGrid<f64>;
pub type WaveState = wave::WaveState<f64>;
pub type RunReport = wave::RunReport<f64>;
pub type ExpansionProtocol = expansion::ExpansionProtocol<f64>;
pub type TransportProtocol = transport::TransportProtocol<f64>;
pub type TwoLevelProtocol = twolevel::TwoLevelProtocol<f64>;
pub type AuxiliaryAngles = twolevel::AuxiliaryAngles<f64>;
pub type SampledHamiltonian = cd_driving::SampledHamiltonian<f64>;
pub type IsingModeSet = cd_driving::IsingModeSet<f64>;
pub type DensityDesign = fast_forward::DensityDesign<f64>;
pub type FFPotential = fast_forward::FFPotential<f64>;
