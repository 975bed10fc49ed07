//! Cell-problem homogenization for periodic composites with Hencky-plasticity
//! growth: densities, discrete cell problems, grid kernels and experiment
//! drivers.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common case.

pub mod analysis;
pub mod cell;
pub mod density;
pub mod error;
pub mod kernels;
pub mod lbfgs;
pub mod linalg;
pub mod sampling;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tensor::{area_integrand, dev_trace_split, sym_dyad, HenckyPair, SymTensor};

pub type SymTensor64 = SymTensor<f64>;
pub type SymTensor32 = SymTensor<f32>;
pub type MicroDensity64 = density::MicroDensity<f64>;
pub type MicroDensity32 = density::MicroDensity<f32>;
pub type GridField64 = cell::GridField<f64>;
pub type GridField32 = cell::GridField<f32>;
pub type HomResult64 = cell::HomResult<f64>;
pub type HomResult32 = cell::HomResult<f32>;
pub type SolverConfig64 = cell::SolverConfig<f64>;
pub type SweepTable64 = analysis::SweepTable<f64>;
