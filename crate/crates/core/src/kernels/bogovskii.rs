//! Minimum-gradient-norm right inverse of the cellwise divergence.

use super::require_dirichlet;
use crate::cell::{CellSpec, GridField, StrainOperator};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cg, BandCholesky};
use crate::scalar::Real;
use crate::tensor::SymTensor;

#[derive(Debug, Clone)]
pub struct BogovskiiResult<T: Real> {
    pub z: GridField<T>,
    /// `max_c |div z(c) - g(c)|`.
    pub residual: T,
    /// `|∇z|_q / |g|_q`.
    pub ratio: T,
    pub outer_iterations: usize,
}

/// Q1 stiffness `∫ ∇φ_a · ∇φ_b` on the reference unit cell.
fn unit_stiffness(dim: usize) -> Vec<f64> {
    let nc = 1 << dim;
    let mass = |a: usize, b: usize| if a == b { 1.0 / 3.0 } else { 1.0 / 6.0 };
    let stiff = |a: usize, b: usize| if a == b { 1.0 } else { -1.0 };
    let mut k = vec![0.0; nc * nc];
    for a in 0..nc {
        for b in 0..nc {
            let mut s = 0.0;
            for d in 0..dim {
                let mut p = stiff((a >> d) & 1, (b >> d) & 1);
                for e in 0..dim {
                    if e != d {
                        p *= mass((a >> e) & 1, (b >> e) & 1);
                    }
                }
                s += p;
            }
            k[a * nc + b] = s;
        }
    }
    k
}

struct Stiffness<T> {
    dof_of_node: Vec<usize>,
    ndof: usize,
    chol: BandCholesky<T>,
}

impl<T: Real> Stiffness<T> {
    fn assemble(spec: &CellSpec) -> Result<Self> {
        let n = spec.dim;
        let nc = 1 << n;
        let mut dof_of_node = vec![usize::MAX; spec.num_nodes()];
        let mut count = 0;
        for (i, d) in dof_of_node.iter_mut().enumerate() {
            if !spec.is_boundary_node(i) {
                *d = count;
                count += 1;
            }
        }
        let ndof = count * n;
        let inner = spec.cells_per_axis() - 1;
        let reach: usize = (0..n).map(|d| inner.pow(d as u32)).sum();
        let bw = n * reach + n - 1;
        let w = bw + 1;
        let mut band = vec![T::zero(); ndof * w];
        let ke = unit_stiffness(n);
        let scale = spec.h::<T>().powi(n as i32 - 2);
        for c in 0..spec.num_cells() {
            let corners = spec.cell_corners(c);
            for a in 0..nc {
                let da = dof_of_node[corners[a]];
                if da == usize::MAX {
                    continue;
                }
                for b in 0..nc {
                    let db = dof_of_node[corners[b]];
                    if db == usize::MAX || db > da {
                        continue;
                    }
                    let v = scale * T::lit(ke[a * nc + b]);
                    for comp in 0..n {
                        let (i, j) = (da * n + comp, db * n + comp);
                        band[i * w + (j + bw - i)] += v;
                    }
                }
            }
        }
        let chol = BandCholesky::factor(ndof, bw, |i, j| band[i * w + (j + bw - i)])?;
        Ok(Self {
            dof_of_node,
            ndof,
            chol,
        })
    }

    /// `A^{-1}` applied to a full nodal vector (boundary entries ignored).
    fn solve_nodal(&self, rhs: &[T], n: usize) -> Vec<T> {
        let mut b = vec![T::zero(); self.ndof];
        for (node, &d) in self.dof_of_node.iter().enumerate() {
            if d != usize::MAX {
                b[d * n..d * n + n].copy_from_slice(&rhs[node * n..node * n + n]);
            }
        }
        self.chol.solve_in_place(&mut b);
        let mut out = vec![T::zero(); rhs.len()];
        for (node, &d) in self.dof_of_node.iter().enumerate() {
            if d != usize::MAX {
                out[node * n..node * n + n].copy_from_slice(&b[d * n..d * n + n]);
            }
        }
        out
    }
}

fn lq_norm<T: Real>(vals: impl Iterator<Item = T>, q: T, vol: T) -> T {
    let s = vals.fold(T::zero(), |a, v| a + v.abs().powf(q));
    (s * vol).powf(q.recip())
}

/// Returns `z` with zero boundary values and `div z = g` cellwise, minimizing
/// `∫|∇z|^2` among all such fields. `g` holds one value per cell.
pub fn bogovskii<T: Real>(spec: &CellSpec, g: &[T], q: T) -> Result<BogovskiiResult<T>> {
    require_dirichlet(spec)?;
    if g.len() != spec.num_cells() {
        return Err(Error::DimensionMismatch {
            expected: spec.num_cells(),
            got: g.len(),
        });
    }
    if !(q > T::one()) || !q.is_finite() {
        return Err(invalid("q", "norm order must lie in (1, inf)"));
    }
    let gmax = g.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mean = g.iter().fold(T::zero(), |a, &v| a + v) / T::from_usize_lossy(g.len());
    if mean.abs() > T::lit(1e-12) * gmax.max(T::one()) {
        return Err(Error::Precondition(format!(
            "right-hand side must have zero mean (got {mean:e})"
        )));
    }
    let n = spec.dim;
    let op = StrainOperator::<T>::new(*spec);
    let stiff = Stiffness::assemble(spec)?;
    let id = SymTensor::identity(n)?;
    let div = |u: &[T]| -> Vec<T> { (0..spec.num_cells()).map(|c| op.cell_strain(u, c).trace()).collect() };
    let div_t = |lam: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); spec.num_nodes() * n];
        for (c, &l) in lam.iter().enumerate() {
            op.accumulate_adjoint(c, &id, l, &mut out);
        }
        out
    };
    let schur = |lam: &[T], out: &mut [T]| {
        let z = stiff.solve_nodal(&div_t(lam), n);
        out.copy_from_slice(&div(&z));
    };
    let mut lam = vec![T::zero(); g.len()];
    let tol = T::epsilon() * T::lit(64.0);
    let outer_iterations = match cg(schur, g, &mut lam, tol, 4 * g.len() + 100) {
        Ok(info) => info.iterations,
        // keep the last iterate; the residual below reports the outcome
        Err(Error::SolverDivergence { iterations, .. }) => iterations,
        Err(e) => return Err(e),
    };
    let z = stiff.solve_nodal(&div_t(&lam), n);
    let residual = div(&z)
        .iter()
        .zip(g)
        .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
    let vol = spec.cell_volume::<T>();
    let grad_norm = lq_norm(
        (0..spec.num_cells()).map(|c| {
            let gr = op.cell_gradient(&z, c);
            let mut s = T::zero();
            for row in gr.iter().take(n) {
                for v in row.iter().take(n) {
                    s += *v * *v;
                }
            }
            s.sqrt()
        }),
        q,
        vol,
    );
    let g_norm = lq_norm(g.iter().copied(), q, vol);
    let ratio = if g_norm > T::zero() { grad_norm / g_norm } else { T::zero() };
    Ok(BogovskiiResult {
        z: GridField::from_values(*spec, z)?,
        residual,
        ratio,
        outer_iterations,
    })
}
