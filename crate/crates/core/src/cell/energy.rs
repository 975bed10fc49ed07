//! Quadrature of the cell energy `k^-n ∫ f(x, X + E phi) dx`.

use super::grid::{CellSpec, GridField};
use super::strain::StrainOperator;
use crate::density::MicroDensity;
use crate::error::{Error, Result};
use crate::scalar::{Accumulator, Real};
use crate::tensor::SymTensor;

fn check_dims<T: Real>(f: &MicroDensity<T>, x: &SymTensor<T>, spec: &CellSpec) -> Result<()> {
    for got in [x.dim(), spec.dim] {
        if got != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got,
            });
        }
    }
    Ok(())
}

/// Centroid-quadrature average of `f(x_c, X + E phi(x_c))` with the exact
/// (unsmoothed) density.
pub fn assemble_energy<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    phi: &GridField<T>,
) -> Result<T> {
    let spec = *phi.spec();
    check_dims(f, x, &spec)?;
    let op = StrainOperator::new(spec);
    exact_energy(f, x, &op, phi.values())
}

pub(crate) fn exact_energy<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    op: &StrainOperator<T>,
    u: &[T],
) -> Result<T> {
    let spec = op.spec();
    let mut sum = Accumulator::default();
    for c in 0..spec.num_cells() {
        let p = spec.centroid::<T>(c);
        let v = f.eval(&p[..spec.dim], &(*x + op.cell_strain(u, c)));
        if !v.is_finite() {
            return Err(Error::NonFiniteEnergy { cell: c });
        }
        sum.add(v);
    }
    Ok(sum.total() / T::from_usize_lossy(spec.num_cells()))
}

/// Smoothed cell energy with its nodal gradient; the minimizer's objective.
pub(crate) struct CellEnergy<'a, T: Real> {
    f: &'a MicroDensity<T>,
    x: SymTensor<T>,
    op: StrainOperator<T>,
    centroids: Vec<[T; 3]>,
    mask: Vec<bool>,
    eps: T,
}

impl<'a, T: Real> CellEnergy<'a, T> {
    pub(crate) fn new(f: &'a MicroDensity<T>, x: SymTensor<T>, spec: CellSpec, eps: T) -> Result<Self> {
        check_dims(f, &x, &spec)?;
        let op = StrainOperator::new(spec);
        let centroids = (0..spec.num_cells()).map(|c| spec.centroid(c)).collect();
        let mask = (0..spec.num_nodes())
            .flat_map(|i| std::iter::repeat_n(spec.is_boundary_node(i), spec.dim))
            .collect();
        Ok(Self {
            f,
            x,
            op,
            centroids,
            mask,
            eps,
        })
    }

    #[cfg(test)]
    pub(crate) fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub(crate) fn value_grad(&self, u: &[T], grad: &mut [T]) -> Result<T> {
        let spec = self.op.spec();
        let nc = spec.num_cells();
        let w = T::one() / T::from_usize_lossy(nc);
        grad.fill(T::zero());
        let mut sum = T::zero();
        for c in 0..nc {
            let s = self.x + self.op.cell_strain(u, c);
            let (v, g) = self
                .f
                .eval_smoothed_gradient(&self.centroids[c][..spec.dim], &s, self.eps);
            if !v.is_finite() || !g.is_finite() {
                return Err(Error::NonFiniteEnergy { cell: c });
            }
            sum += v;
            self.op.accumulate_adjoint(c, &g, w, grad);
        }
        for (g, &m) in grad.iter_mut().zip(&self.mask) {
            if m {
                *g = T::zero();
            }
        }
        Ok(sum * w)
    }

    pub(crate) fn exact(&self, u: &[T]) -> Result<T> {
        exact_energy(self.f, &self.x, &self.op, u)
    }
}

/// Cell average of the (smoothed) stress `∂f(x, X + E phi)`.
pub fn average_stress<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    phi: &GridField<T>,
    eps: T,
) -> Result<SymTensor<T>> {
    let spec = *phi.spec();
    check_dims(f, x, &spec)?;
    let op = StrainOperator::new(spec);
    let mut acc = SymTensor::zeros_unchecked(spec.dim);
    for c in 0..spec.num_cells() {
        let p = spec.centroid::<T>(c);
        let (_, g) = f.eval_smoothed_gradient(&p[..spec.dim], &(*x + op.cell_strain(phi.values(), c)), eps);
        acc += g;
    }
    Ok(acc.scale(T::one() / T::from_usize_lossy(spec.num_cells())))
}
