//! Discrete symmetric gradient: Q1 interpolation, one centroid point per cell.

use super::grid::{CellSpec, GridField};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::SymTensor;

/// Precomputed corner tables for the centroid gradient
/// `∂_d u(c) = 1/(h 2^(n-1)) Σ_b (2 b_d - 1) u(c + b)`.
#[derive(Debug, Clone)]
pub struct StrainOperator<T> {
    spec: CellSpec,
    corners: Vec<u32>,
    scale: T,
}

impl<T: Real> StrainOperator<T> {
    pub fn new(spec: CellSpec) -> Self {
        let nc = 1 << spec.dim;
        let mut corners = Vec::with_capacity(spec.num_cells() * nc);
        for c in 0..spec.num_cells() {
            let cs = spec.cell_corners(c);
            corners.extend(cs[..nc].iter().map(|&i| i as u32));
        }
        let half_pow = T::from_usize_lossy(1 << (spec.dim - 1));
        Self {
            spec,
            corners,
            scale: T::one() / (spec.h::<T>() * half_pow),
        }
    }

    pub fn spec(&self) -> &CellSpec {
        &self.spec
    }

    /// `∇u` at the centroid of cell `c`, `g[i][d] = ∂_d u_i`.
    #[inline]
    pub fn cell_gradient(&self, u: &[T], c: usize) -> [[T; 3]; 3] {
        let n = self.spec.dim;
        let nc = 1 << n;
        let mut g = [[T::zero(); 3]; 3];
        for b in 0..nc {
            let node = self.corners[c * nc + b] as usize;
            let val = &u[node * n..node * n + n];
            for d in 0..n {
                let v = if (b >> d) & 1 == 1 { T::one() } else { -T::one() };
                for i in 0..n {
                    g[i][d] += v * val[i];
                }
            }
        }
        for row in g.iter_mut().take(n) {
            for v in row.iter_mut().take(n) {
                *v *= self.scale;
            }
        }
        g
    }

    /// `sym ∇u` at the centroid of cell `c`.
    #[inline]
    pub fn cell_strain(&self, u: &[T], c: usize) -> SymTensor<T> {
        let n = self.spec.dim;
        let g = self.cell_gradient(u, c);
        let half = T::lit(0.5);
        let mut s = SymTensor::zeros_unchecked(n);
        for i in 0..n {
            for j in i..n {
                s.set(i, j, half * (g[i][j] + g[j][i]));
            }
        }
        s
    }

    /// Adds `w · E_c^T G` to `out`, where `G` is a symmetric Frobenius
    /// gradient at cell `c`.
    #[inline]
    pub fn accumulate_adjoint(&self, c: usize, grad: &SymTensor<T>, w: T, out: &mut [T]) {
        let n = self.spec.dim;
        let nc = 1 << n;
        let ws = w * self.scale;
        for b in 0..nc {
            let node = self.corners[c * nc + b] as usize;
            for i in 0..n {
                let mut acc = T::zero();
                for d in 0..n {
                    let v = grad.get(i, d);
                    if (b >> d) & 1 == 1 {
                        acc += v;
                    } else {
                        acc -= v;
                    }
                }
                out[node * n + i] += ws * acc;
            }
        }
    }

    /// Strain at every cell centroid.
    pub fn apply(&self, u: &[T]) -> Vec<SymTensor<T>> {
        (0..self.spec.num_cells()).map(|c| self.cell_strain(u, c)).collect()
    }

    /// `E^T` applied to a cellwise symmetric field (Frobenius pairing).
    pub fn adjoint(&self, field: &[SymTensor<T>]) -> Vec<T> {
        let mut out = vec![T::zero(); self.spec.num_nodes() * self.spec.dim];
        for (c, g) in field.iter().enumerate() {
            self.accumulate_adjoint(c, g, T::one(), &mut out);
        }
        out
    }
}

/// Symmetric gradient of `phi` at each cell centroid.
pub fn discrete_sym_gradient<T: Real>(phi: &GridField<T>) -> Vec<SymTensor<T>> {
    StrainOperator::new(*phi.spec()).apply(phi.values())
}

/// Central divergence per cell (trace of the centroid strain).
pub fn discrete_divergence<T: Real>(phi: &GridField<T>) -> Vec<T> {
    discrete_sym_gradient(phi).iter().map(|s| s.trace()).collect()
}

pub(crate) fn check_same_spec(a: &CellSpec, b: &CellSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SpecMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::Boundary;
    use crate::sampling;
    use rand::Rng;

    fn random_field(spec: CellSpec, seed: u64) -> GridField<f64> {
        let mut rng = sampling::rng(seed);
        let mut f = GridField::from_fn(spec, |_| {
            (0..spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .unwrap();
        f.zero_boundary();
        f
    }

    #[test]
    fn zero_field_zero_strain() {
        let s = CellSpec::new(3, 1, 3).unwrap();
        let f = GridField::<f64>::zeros(s);
        assert!(discrete_sym_gradient(&f).iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn affine_reproduction() {
        for dim in [2, 3] {
            let s = CellSpec::new(dim, 1, 4).unwrap();
            let a: Vec<f64> = (0..dim * dim).map(|i| 0.3 * i as f64 - 0.7).collect();
            let f = GridField::<f64>::from_fn(s, |x| {
                (0..dim).map(|i| (0..dim).map(|j| a[i * dim + j] * x[j]).sum()).collect()
            })
            .unwrap();
            let strain = discrete_sym_gradient(&f);
            for e in strain {
                for i in 0..dim {
                    for j in 0..dim {
                        let want = 0.5 * (a[i * dim + j] + a[j * dim + i]);
                        assert!((e.get(i, j) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mean_strain_vanishes() {
        for (dim, b) in [(2, Boundary::Dirichlet), (3, Boundary::Dirichlet), (2, Boundary::Periodic)] {
            let s = CellSpec::with_boundary(dim, 2, 3, b).unwrap();
            let f = random_field(s, 7);
            let strain = discrete_sym_gradient(&f);
            let mut sum = SymTensor::zeros(dim).unwrap();
            for e in &strain {
                sum += *e;
            }
            assert!(sum.norm() < 1e-12 * strain.len() as f64, "{sum:?}");
        }
    }

    #[test]
    fn adjoint_identity() {
        let s = CellSpec::new(2, 1, 5).unwrap();
        let op = StrainOperator::<f64>::new(s);
        let u = random_field(s, 1);
        let mut rng = sampling::rng(2);
        let g: Vec<SymTensor<f64>> = (0..s.num_cells())
            .map(|_| sampling::gaussian_tensor(&mut rng, 2))
            .collect();
        let lhs: f64 = op.apply(u.values()).iter().zip(&g).map(|(a, b)| a.dot(b)).sum();
        let adj = op.adjoint(&g);
        let rhs: f64 = adj.iter().zip(u.values()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
