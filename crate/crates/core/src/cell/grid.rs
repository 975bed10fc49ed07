//! Uniform grids on the cell `(0, k)^n` and nodal vector fields on them.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// Fields vanish on `∂(0, k)^n`; nodes are stored on the closed cube.
    #[default]
    Dirichlet,
    /// Fields are `k`-periodic; node `N` is identified with node 0.
    Periodic,
}

/// Grid on `(0, k)^n` with `m` subdivisions per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellSpec {
    pub dim: usize,
    pub k: usize,
    pub m: usize,
    pub boundary: Boundary,
}

impl CellSpec {
    pub fn new(dim: usize, k: usize, m: usize) -> Result<Self> {
        Self::with_boundary(dim, k, m, Boundary::Dirichlet)
    }

    pub fn with_boundary(dim: usize, k: usize, m: usize, boundary: Boundary) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if k < 1 {
            return Err(invalid("k", "cell multiplicity must be at least 1"));
        }
        if m < 2 {
            return Err(invalid("m", "need at least 2 subdivisions per unit length"));
        }
        Ok(Self {
            dim,
            k,
            m,
            boundary,
        })
    }

    pub fn h<T: Real>(&self) -> T {
        T::one() / T::from_usize_lossy(self.m)
    }

    /// Cells per axis, `N = k m`.
    pub fn cells_per_axis(&self) -> usize {
        self.k * self.m
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    pub fn nodes_per_axis(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.cells_per_axis() + 1,
            Boundary::Periodic => self.cells_per_axis(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes_per_axis().pow(self.dim as u32)
    }

    /// Multi-index of cell `c` (first axis fastest).
    pub fn cell_coords(&self, c: usize) -> [usize; 3] {
        unravel(c, self.cells_per_axis(), self.dim)
    }

    pub fn node_coords(&self, i: usize) -> [usize; 3] {
        unravel(i, self.nodes_per_axis(), self.dim)
    }

    /// Node index of grid coordinates, wrapped for periodic grids.
    pub fn node_index(&self, coords: &[usize]) -> usize {
        let np = self.nodes_per_axis();
        let mut idx = 0;
        let mut stride = 1;
        for &c in coords.iter().take(self.dim) {
            let c = match self.boundary {
                Boundary::Periodic => c % np,
                Boundary::Dirichlet => c,
            };
            idx += c * stride;
            stride *= np;
        }
        idx
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        let n = self.cells_per_axis();
        self.node_coords(i)[..self.dim]
            .iter()
            .any(|&c| c == 0 || c == n)
    }

    pub fn centroid<T: Real>(&self, c: usize) -> [T; 3] {
        let h: T = self.h();
        let cc = self.cell_coords(c);
        let mut x = [T::zero(); 3];
        for d in 0..self.dim {
            x[d] = (T::from_usize_lossy(cc[d]) + T::lit(0.5)) * h;
        }
        x
    }

    pub fn node_position<T: Real>(&self, i: usize) -> [T; 3] {
        let h: T = self.h();
        let cc = self.node_coords(i);
        let mut x = [T::zero(); 3];
        for d in 0..self.dim {
            x[d] = T::from_usize_lossy(cc[d]) * h;
        }
        x
    }

    /// Node indices of the `2^n` corners of cell `c`; corner `b` has bit `d`
    /// set when it sits on the upper face in direction `d`.
    pub fn cell_corners(&self, c: usize) -> [usize; 8] {
        let cc = self.cell_coords(c);
        let mut out = [0; 8];
        for (b, o) in out.iter_mut().enumerate().take(1 << self.dim) {
            let mut coords = [0; 3];
            for d in 0..self.dim {
                coords[d] = cc[d] + ((b >> d) & 1);
            }
            *o = self.node_index(&coords);
        }
        out
    }

    /// Cell volume `h^n`.
    pub fn cell_volume<T: Real>(&self) -> T {
        self.h::<T>().powi(self.dim as i32)
    }
}

fn unravel(mut i: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut out = [0; 3];
    for o in out.iter_mut().take(dim) {
        *o = i % n;
        i /= n;
    }
    out
}

/// Vector field with one `R^n` value per grid node (node-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    spec: CellSpec,
    values: Vec<T>,
}

/// Cell-problem unknown: a [`GridField`] that vanishes on the boundary of a
/// Dirichlet cell.
pub type DisplacementField<T> = GridField<T>;

impl<T: Real> GridField<T> {
    pub fn zeros(spec: CellSpec) -> Self {
        Self {
            spec,
            values: vec![T::zero(); spec.num_nodes() * spec.dim],
        }
    }

    pub fn from_values(spec: CellSpec, values: Vec<T>) -> Result<Self> {
        let expected = spec.num_nodes() * spec.dim;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "field values must be finite"));
        }
        Ok(Self { spec, values })
    }

    /// Samples `u(x)` at every node (boundary included).
    pub fn from_fn<F: FnMut(&[T]) -> Vec<T>>(spec: CellSpec, mut u: F) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.num_nodes() * spec.dim);
        for i in 0..spec.num_nodes() {
            let x = spec.node_position::<T>(i);
            let v = u(&x[..spec.dim]);
            if v.len() != spec.dim {
                return Err(Error::DimensionMismatch {
                    expected: spec.dim,
                    got: v.len(),
                });
            }
            values.extend(v);
        }
        Self::from_values(spec, values)
    }

    pub fn spec(&self) -> &CellSpec {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn node(&self, i: usize) -> &[T] {
        let n = self.spec.dim;
        &self.values[i * n..(i + 1) * n]
    }

    /// Sets every boundary node to zero (no-op on periodic grids).
    pub fn zero_boundary(&mut self) {
        let n = self.spec.dim;
        for i in 0..self.spec.num_nodes() {
            if self.spec.is_boundary_node(i) {
                self.values[i * n..(i + 1) * n].fill(T::zero());
            }
        }
    }

    pub fn has_zero_boundary(&self) -> bool {
        (0..self.spec.num_nodes())
            .filter(|&i| self.spec.is_boundary_node(i))
            .all(|i| self.node(i).iter().all(|v| *v == T::zero()))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Q1 interpolant at the centroid of cell `c`.
    pub fn centroid_value(&self, c: usize) -> [T; 3] {
        let n = self.spec.dim;
        let corners = self.spec.cell_corners(c);
        let w = T::one() / T::from_usize_lossy(1 << n);
        let mut out = [T::zero(); 3];
        for &node in corners.iter().take(1 << n) {
            for d in 0..n {
                out[d] += w * self.values[node * n + d];
            }
        }
        out
    }
}
