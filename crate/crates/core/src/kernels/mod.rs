//! Discrete kernels on Dirichlet grid fields: Helmholtz decomposition, a
//! Bogovskii-type right inverse of the divergence, rigid-motion projection and
//! the strict-convergence metrics.

mod bogovskii;
mod helmholtz;
mod metrics;
mod rigid;

pub use bogovskii::{bogovskii, BogovskiiResult};
pub use helmholtz::{central_divergence, central_gradient, helmholtz_decompose, Helmholtz};
pub use metrics::{area_strict_gap, strict_distance};
pub use rigid::{ball_moment, korn_ratio, rigid_project, RigidMotion};

use crate::cell::{Boundary, CellSpec};
use crate::error::{invalid, Result};

fn require_dirichlet(spec: &CellSpec) -> Result<()> {
    if spec.boundary == Boundary::Dirichlet {
        Ok(())
    } else {
        Err(invalid("boundary", "kernels operate on Dirichlet grids"))
    }
}
