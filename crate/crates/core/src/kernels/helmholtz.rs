//! `u = v + ∇phi` with `phi = 0` on the boundary and central-difference
//! `div v = 0` at interior nodes.

use super::require_dirichlet;
use crate::cell::{CellSpec, GridField};
use crate::error::{Error, Result};
use crate::linalg::{cg, CgInfo};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Helmholtz<T: Real> {
    pub v: GridField<T>,
    /// Nodal potential, zero on boundary nodes.
    pub phi: Vec<T>,
    /// `max |div v|` over interior nodes.
    pub div_residual: T,
    /// `|<v, ∇phi>|` in the discrete L² product.
    pub orthogonality: T,
    pub solve: CgInfo<T>,
}

fn neighbour(spec: &CellSpec, c: [usize; 3], d: usize, up: bool) -> Option<usize> {
    let n = spec.cells_per_axis();
    let mut cc = c;
    if up {
        if c[d] == n {
            return None;
        }
        cc[d] += 1;
    } else {
        if c[d] == 0 {
            return None;
        }
        cc[d] -= 1;
    }
    Some(spec.node_index(&cc))
}

/// Central-difference gradient of a nodal scalar, zero-extended outside the
/// grid. Boundary values of `phi` are ignored (treated as zero).
pub fn central_gradient<T: Real>(spec: &CellSpec, phi: &[T]) -> Vec<T> {
    let n = spec.dim;
    let inv2h = T::one() / (spec.h::<T>() + spec.h::<T>());
    let val = |i: Option<usize>| match i {
        Some(i) if !spec.is_boundary_node(i) => phi[i],
        _ => T::zero(),
    };
    let mut out = vec![T::zero(); spec.num_nodes() * n];
    for i in 0..spec.num_nodes() {
        let c = spec.node_coords(i);
        for d in 0..n {
            out[i * n + d] = (val(neighbour(spec, c, d, true)) - val(neighbour(spec, c, d, false))) * inv2h;
        }
    }
    out
}

/// Central-difference divergence at every node (the negative adjoint of
/// [`central_gradient`] on interior nodes); zero on boundary nodes.
pub fn central_divergence<T: Real>(spec: &CellSpec, u: &[T]) -> Vec<T> {
    let n = spec.dim;
    let inv2h = T::one() / (spec.h::<T>() + spec.h::<T>());
    let mut out = vec![T::zero(); spec.num_nodes()];
    for (i, o) in out.iter_mut().enumerate() {
        if spec.is_boundary_node(i) {
            continue;
        }
        let c = spec.node_coords(i);
        let mut acc = T::zero();
        for d in 0..n {
            if let Some(j) = neighbour(spec, c, d, true) {
                acc += u[j * n + d];
            }
            if let Some(j) = neighbour(spec, c, d, false) {
                acc -= u[j * n + d];
            }
        }
        *o = acc * inv2h;
    }
    out
}

/// Solves `div ∇phi = div u` (CG, zero Dirichlet data) and returns
/// `v = u - ∇phi`.
pub fn helmholtz_decompose<T: Real>(u: &GridField<T>) -> Result<Helmholtz<T>> {
    let spec = *u.spec();
    require_dirichlet(&spec)?;
    let rhs: Vec<T> = central_divergence(&spec, u.values()).iter().map(|&v| -v).collect();
    let apply = |p: &[T], out: &mut [T]| {
        let g = central_gradient(&spec, p);
        for (o, v) in out.iter_mut().zip(central_divergence(&spec, &g)) {
            *o = -v;
        }
    };
    let mut phi = vec![T::zero(); spec.num_nodes()];
    let tol = T::epsilon() * T::lit(16.0);
    let solve = match cg(apply, &rhs, &mut phi, tol, 10 * spec.num_nodes() + 100) {
        Ok(info) => info,
        // round-off floor: accept when the residual is already tiny
        Err(Error::SolverDivergence { residual, .. }) if residual < 1e-10 => CgInfo {
            iterations: 10 * spec.num_nodes() + 100,
            relative_residual: T::lit(residual),
        },
        Err(e) => return Err(e),
    };
    let grad = central_gradient(&spec, &phi);
    let v: Vec<T> = u.values().iter().zip(&grad).map(|(&a, &b)| a - b).collect();
    let div_residual = central_divergence(&spec, &v)
        .iter()
        .fold(T::zero(), |m, x| m.max(x.abs()));
    let vol = spec.cell_volume::<T>();
    let orthogonality = (v.iter().zip(&grad).fold(T::zero(), |a, (&x, &y)| a + x * y) * vol).abs();
    Ok(Helmholtz {
        v: GridField::from_values(spec, v)?,
        phi,
        div_residual,
        orthogonality,
        solve,
    })
}
