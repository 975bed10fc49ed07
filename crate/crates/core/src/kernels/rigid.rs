//! Projection of a field onto infinitesimal rigid motions over a ball.

use super::require_dirichlet;
use crate::cell::{CellSpec, GridField, StrainOperator};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// `x ↦ a + W (x - x0)` with `W` skew.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion<T> {
    pub translation: Vec<T>,
    /// Row-major `n×n`.
    pub rotation: Vec<T>,
}

impl<T: Real> RigidMotion<T> {
    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x0: &[T], x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                self.translation[i]
                    + (0..n).fold(T::zero(), |a, j| a + self.rotation[i * n + j] * (x[j] - x0[j]))
            })
            .collect()
    }

    pub fn norm(&self) -> T {
        let t = self.translation.iter().fold(T::zero(), |a, &v| a + v * v);
        let r = self.rotation.iter().fold(T::zero(), |a, &v| a + v * v);
        (t + r).sqrt()
    }

    /// `max |W + W^T|`.
    pub fn skew_defect(&self) -> T {
        let n = self.dim();
        let mut m = T::zero();
        for i in 0..n {
            for j in 0..n {
                m = m.max((self.rotation[i * n + j] + self.rotation[j * n + i]).abs());
            }
        }
        m
    }

    /// Samples the motion at the nodes of `spec`.
    pub fn to_field(&self, spec: CellSpec, x0: &[T]) -> Result<GridField<T>> {
        GridField::from_fn(spec, |x| self.apply(x0, x))
    }
}

/// `J_r = ∫_{B_r} y_1^2 dy = π^{n/2} / ((n+2) Γ(n/2 + 1)) r^{n+2}`.
pub fn ball_moment<T: Real>(n: usize, r: T) -> Result<T> {
    let pi = T::lit(std::f64::consts::PI);
    let j1 = match n {
        // Γ(2) = 1
        2 => pi / T::lit(4.0),
        // π^{3/2} / (5 Γ(5/2)), Γ(5/2) = 3√π/4
        3 => T::lit(4.0) * pi / T::lit(15.0),
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    Ok(j1 * r.powi(n as i32 + 2))
}

fn ball_cells<T: Real>(spec: &CellSpec, x0: &[T], r: T) -> Result<Vec<usize>> {
    if x0.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: x0.len(),
        });
    }
    if !(r > T::zero()) {
        return Err(invalid("r", "radius must be positive"));
    }
    let k = T::from_usize_lossy(spec.k);
    if x0.iter().any(|&c| c - r < T::zero() || c + r > k) {
        return Err(Error::Precondition("ball leaves the grid domain".into()));
    }
    let cells: Vec<usize> = (0..spec.num_cells())
        .filter(|&c| {
            let y = spec.centroid::<T>(c);
            let d2 = (0..spec.dim).fold(T::zero(), |a, d| a + (y[d] - x0[d]) * (y[d] - x0[d]));
            d2 < r * r
        })
        .collect();
    if cells.is_empty() {
        return Err(Error::Precondition("ball contains no cell centroid".into()));
    }
    Ok(cells)
}

/// `R(u) = avg_B u + J_r^{-1} (∫_B u × (y - x0)) (x - x0)` with
/// `a × b = (a⊗b - b⊗a)/2`, by centroid quadrature over cells whose centroid
/// lies in the ball.
pub fn rigid_project<T: Real>(u: &GridField<T>, x0: &[T], r: T) -> Result<RigidMotion<T>> {
    let spec = *u.spec();
    require_dirichlet(&spec)?;
    let cells = ball_cells(&spec, x0, r)?;
    let n = spec.dim;
    let vol = spec.cell_volume::<T>();
    let mut mean = vec![T::zero(); n];
    let mut moment = vec![T::zero(); n * n];
    let half = T::lit(0.5);
    for &c in &cells {
        let y = spec.centroid::<T>(c);
        let v = u.centroid_value(c);
        for i in 0..n {
            mean[i] += v[i];
            for j in 0..n {
                moment[i * n + j] += half * vol * (v[i] * (y[j] - x0[j]) - (y[i] - x0[i]) * v[j]);
            }
        }
    }
    let cnt = T::from_usize_lossy(cells.len());
    mean.iter_mut().for_each(|m| *m /= cnt);
    let j = ball_moment(n, r)?;
    moment.iter_mut().for_each(|m| *m /= j);
    Ok(RigidMotion {
        translation: mean,
        rotation: moment,
    })
}

/// `|u - R(u)|_{L^{n/(n-1)}(B)} / |E u|_{L^1(B)}` by the same quadrature.
pub fn korn_ratio<T: Real>(u: &GridField<T>, x0: &[T], r: T) -> Result<T> {
    let spec = *u.spec();
    let rm = rigid_project(u, x0, r)?;
    let cells = ball_cells(&spec, x0, r)?;
    let n = spec.dim;
    let p = T::from_usize_lossy(n) / T::from_usize_lossy(n - 1);
    let vol = spec.cell_volume::<T>();
    let op = StrainOperator::new(spec);
    let (mut num, mut den) = (T::zero(), T::zero());
    for &c in &cells {
        let y = spec.centroid::<T>(c);
        let v = u.centroid_value(c);
        let w = rm.apply(x0, &y[..n]);
        let d = (0..n).fold(T::zero(), |a, i| a + (v[i] - w[i]) * (v[i] - w[i])).sqrt();
        num += d.powf(p) * vol;
        den += op.cell_strain(u.values(), c).norm() * vol;
    }
    Ok(num.powf(p.recip()) / den)
}
