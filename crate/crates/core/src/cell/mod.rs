//! Discrete cell problems: grids, the centroid symmetric gradient, energy
//! quadrature, the multi-start minimizer and the dual cell problem.

mod dual;
mod energy;
mod grid;
mod solver;
mod strain;

pub use dual::{conjugate_pointwise, conjugate_search, dual_cell, hencky_basis, ConjugateConfig, ConjugateValue, DualResult};
pub use energy::{assemble_energy, average_stress};
pub use grid::{Boundary, CellSpec, DisplacementField, GridField};
pub use solver::{
    derive_seed, homogenize, minimize_cell, minimize_cell_from, smooth_noise, HomResult,
    Homogenized, SolverConfig,
};
pub use strain::{discrete_divergence, discrete_sym_gradient, StrainOperator};

pub(crate) use strain::check_same_spec;
