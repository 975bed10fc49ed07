//! Numerical convex conjugate and the dual cell problem
//! `inf { avg c*(x, Y + Phi) : Phi ⊥ range(E), avg Phi = 0 }`.

use super::grid::CellSpec;
use super::solver::SolverConfig;
use super::strain::StrainOperator;
use crate::density::MicroDensity;
use crate::error::{invalid, Error, Result};
use crate::lbfgs::{self, Status};
use crate::linalg::cg;
use crate::scalar::Real;
use crate::tensor::{sym_len, SymTensor};

/// Frobenius-orthonormal basis `I/sqrt(n)`, then a deviatoric basis, so the
/// kink set `X_dev = 0` of Hencky densities is a coordinate subspace.
pub fn hencky_basis<T: Real>(dim: usize) -> Result<Vec<SymTensor<T>>> {
    let r2 = T::lit(2f64.sqrt()).recip();
    let id = SymTensor::identity(dim)?;
    let mut out = vec![id.scale(T::from_usize_lossy(dim).sqrt().recip())];
    let mut d = SymTensor::zeros(dim)?;
    d.set(0, 0, r2);
    d.set(1, 1, -r2);
    out.push(d);
    if dim == 3 {
        let r6 = T::lit(6f64.sqrt()).recip();
        out.push(SymTensor::diag(&[r6, r6, -(r6 + r6)])?);
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let mut o = SymTensor::zeros(dim)?;
            o.set(i, j, r2);
            out.push(o);
        }
    }
    Ok(out)
}

fn to_coords<T: Real>(basis: &[SymTensor<T>], x: &SymTensor<T>, out: &mut [T]) {
    for (o, b) in out.iter_mut().zip(basis) {
        *o = x.dot(b);
    }
}

fn from_coords<T: Real>(basis: &[SymTensor<T>], w: &[T]) -> SymTensor<T> {
    let mut x = SymTensor::zeros_unchecked(basis[0].dim());
    for (b, &c) in basis.iter().zip(w) {
        x += b.scale(c);
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateConfig<T> {
    /// Radius of the strain ball searched.
    pub radius: T,
    /// Grid points per coordinate at every zoom level (odd, at least 7).
    pub grid: usize,
    /// Stop once the grid spacing is below `resolution * max(radius, 1)`.
    pub resolution: T,
    /// `dual_cell` treats `Y + Phi` as feasible while the largest boundary
    /// slope stays below this.
    pub slope_tol: T,
}

impl<T: Real> Default for ConjugateConfig<T> {
    fn default() -> Self {
        Self {
            radius: T::lit(20.0),
            grid: 7,
            resolution: T::lit(1e-10),
            slope_tol: T::lit(1e-3),
        }
    }
}

impl<T: Real> ConjugateConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) {
            return Err(invalid("radius", "must be positive"));
        }
        if self.grid < 7 || self.grid % 2 == 0 {
            return Err(invalid("grid", "must be odd and at least 7"));
        }
        if !(self.resolution > T::zero()) {
            return Err(invalid("resolution", "must be positive"));
        }
        if !(self.slope_tol >= T::zero()) {
            return Err(invalid("slope_tol", "must be non-negative"));
        }
        Ok(())
    }
}

/// Result of the ball-restricted search for `sup_X Y·X - f(x, X)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateValue<T> {
    /// `+inf` when the maximand still increases at the ball boundary.
    pub value: T,
    /// Maximum over the ball.
    pub truncated: T,
    pub argmax: SymTensor<T>,
    pub unbounded: bool,
    /// Rate at which the maximand still grows at the ball boundary (0 when
    /// the maximizer is interior).
    pub boundary_slope: T,
}

struct Searcher<'a, T: Real> {
    f: &'a MicroDensity<T>,
    basis: Vec<SymTensor<T>>,
    cfg: ConjugateConfig<T>,
}

impl<'a, T: Real> Searcher<'a, T> {
    fn new(f: &'a MicroDensity<T>, cfg: ConjugateConfig<T>) -> Result<Self> {
        if !f.is_convex() {
            return Err(Error::Precondition(
                "conjugate requires a density declared convex in X".into(),
            ));
        }
        cfg.validate()?;
        Ok(Self {
            basis: hencky_basis(f.dim())?,
            f,
            cfg,
        })
    }

    /// Hencky basis rotated so that the second axis is `Y_dev / |Y_dev|`:
    /// ascent rays of densities that are isotropic at infinity in the
    /// deviator lie on a grid axis, and `X_dev = 0` stays a coordinate plane.
    fn frame(&self, y: &SymTensor<T>) -> Vec<SymTensor<T>> {
        let dev = y.dev();
        let dn = dev.norm();
        if !(dn > T::lit(1e-14) * y.norm().max(T::one())) {
            return self.basis.clone();
        }
        let mut out = vec![self.basis[0], dev.scale(dn.recip())];
        let mut rest: Vec<SymTensor<T>> = self.basis[1..].to_vec();
        while out.len() < self.basis.len() {
            // Gram-Schmidt the candidate with the largest remaining component
            let mut best = (0, -T::one(), SymTensor::zeros_unchecked(y.dim()));
            for (i, b) in rest.iter().enumerate() {
                let mut v = *b;
                for o in &out[1..] {
                    v = v - o.scale(v.dot(o));
                }
                let nv = v.norm();
                if nv > best.1 {
                    best = (i, nv, v);
                }
            }
            out.push(best.2.scale(best.1.recip()));
            rest.remove(best.0);
        }
        out
    }

    fn search(&self, x: &[T], y: &SymTensor<T>) -> ConjugateValue<T> {
        let basis = self.frame(y);
        let s = basis.len();
        let g = self.cfg.grid;
        let r = self.cfg.radius;
        let r2 = r * r * (T::one() + T::lit(1e-12));
        let mut yc = [T::zero(); 6];
        to_coords(&basis, y, &mut yc);
        let obj = |w: &[T]| {
            let xx = from_coords(&basis, w);
            let lin = yc.iter().zip(w).fold(T::zero(), |a, (&p, &q)| a + p * q);
            lin - self.f.eval(x, &xx)
        };

        let mut center = [T::zero(); 6];
        let mut best_val = obj(&center[..s]);
        let mut best = center;
        let mut half = r;
        let stop = self.cfg.resolution * r.max(T::one());
        let mid = (g - 1) / 2;
        let total = g.pow(s as u32);
        let mut idx = [0usize; 6];
        let mut w = [T::zero(); 6];
        for _level in 0..2000 {
            let spacing = (half + half) / T::from_usize_lossy(g - 1);
            let mut best_idx = [mid; 6];
            for flat in 0..total {
                let mut rem = flat;
                let mut nrm = T::zero();
                for d in 0..s {
                    idx[d] = rem % g;
                    rem /= g;
                    w[d] = center[d] + (T::from_usize_lossy(idx[d]) - T::from_usize_lossy(mid)) * spacing;
                    nrm += w[d] * w[d];
                }
                if nrm > r2 {
                    continue;
                }
                let v = obj(&w[..s]);
                if v > best_val {
                    best_val = v;
                    best = w;
                    best_idx = idx;
                }
            }
            center = best;
            let on_edge = best_idx[..s].iter().any(|&i| i == 0 || i == g - 1);
            if !on_edge {
                if spacing < stop {
                    break;
                }
                // a concave maximand peaks within one spacing of the best node
                half = spacing;
            }
        }
        let argmax = from_coords(&basis, &best[..s]);
        let nrm = argmax.norm();
        let near_boundary = nrm >= r * T::lit(0.99);
        let mut unbounded = false;
        let mut boundary_slope = T::zero();
        if near_boundary {
            let inner: Vec<T> = best[..s].iter().map(|&v| v * T::lit(0.99)).collect();
            let drop = best_val - obj(&inner);
            unbounded = drop > T::lit(1e-11) * (T::one() + best_val.abs());
            boundary_slope = (drop / (T::lit(0.01) * nrm)).max(T::zero());
        }
        ConjugateValue {
            value: if unbounded { T::infinity() } else { best_val },
            truncated: best_val,
            argmax,
            unbounded,
            boundary_slope,
        }
    }
}

/// `c*(x, Y) = sup_X (Y·X - f(x, X))` by nested grid search over the ball of
/// radius `search_radius`; `+inf` if the supremum is not attained inside.
pub fn conjugate_pointwise<T: Real>(
    f: &MicroDensity<T>,
    x: &[T],
    y: &SymTensor<T>,
    search_radius: T,
    grid: usize,
) -> Result<T> {
    let cfg = ConjugateConfig {
        radius: search_radius,
        grid,
        ..Default::default()
    };
    Ok(conjugate_search(f, x, y, &cfg)?.value)
}

pub fn conjugate_search<T: Real>(
    f: &MicroDensity<T>,
    x: &[T],
    y: &SymTensor<T>,
    cfg: &ConjugateConfig<T>,
) -> Result<ConjugateValue<T>> {
    if y.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: y.dim(),
        });
    }
    Ok(Searcher::new(f, *cfg)?.search(x, y))
}

#[derive(Debug, Clone)]
pub struct DualResult<T: Real> {
    pub y: SymTensor<T>,
    /// Estimate of `(c_hom)*(Y)`: the truncated value when feasible, else `+inf`.
    pub value: T,
    /// Average of the ball-truncated conjugate at the final field. This is
    /// the exact dual of the cell problem with strains restricted to the
    /// search ball.
    pub truncated_value: T,
    pub feasible: bool,
    /// Largest per-cell boundary slope of the conjugate search: how far
    /// `Y + Phi` sits outside the conjugate's domain.
    pub infeasibility: T,
    /// The div-free, mean-zero correction per cell.
    pub phi: Vec<SymTensor<T>>,
    pub status: Status,
    pub iterations: usize,
}

struct Projector<T: Real> {
    op: StrainOperator<T>,
    basis: Vec<SymTensor<T>>,
    mask: Vec<bool>,
}

impl<T: Real> Projector<T> {
    fn new(spec: CellSpec) -> Result<Self> {
        let mask = (0..spec.num_nodes())
            .flat_map(|i| std::iter::repeat_n(spec.is_boundary_node(i), spec.dim))
            .collect();
        Ok(Self {
            op: StrainOperator::new(spec),
            basis: hencky_basis(spec.dim)?,
            mask,
        })
    }

    fn tensors(&self, v: &[T]) -> Vec<SymTensor<T>> {
        v.chunks(self.basis.len()).map(|w| from_coords(&self.basis, w)).collect()
    }

    fn adjoint(&self, v: &[T]) -> Vec<T> {
        let mut out = self.op.adjoint(&self.tensors(v));
        for (o, &m) in out.iter_mut().zip(&self.mask) {
            if m {
                *o = T::zero();
            }
        }
        out
    }

    /// Removes the `range(E)` component and the mean.
    fn project(&self, v: &mut [T]) -> Result<()> {
        let s = self.basis.len();
        let rhs = self.adjoint(v);
        let normal = |p: &[T], out: &mut [T]| {
            let strain = self.op.apply(p);
            let mut coords = vec![T::zero(); strain.len() * s];
            for (c, e) in strain.iter().enumerate() {
                to_coords(&self.basis, e, &mut coords[c * s..(c + 1) * s]);
            }
            let r = self.adjoint(&coords);
            out.copy_from_slice(&r);
        };
        let mut z = vec![T::zero(); rhs.len()];
        // rounding in E^T v leaves a null-space part of size ~eps |v| / h,
        // which dominates when v is already nearly orthogonal to range(E)
        let bnorm = crate::scalar::dot(&rhs, &rhs).sqrt();
        let vnorm = crate::scalar::dot(v, v).sqrt();
        let h = self.op.spec().h::<T>();
        let base = T::epsilon().sqrt() * T::lit(1e-3);
        let tol = if bnorm > T::zero() {
            (base * (vnorm / (h * bnorm)).max(T::one())).min(T::lit(0.5))
        } else {
            base
        };
        cg(normal, &rhs, &mut z, tol, 20 * rhs.len() + 100)?;
        let strain = self.op.apply(&z);
        let mut c = [T::zero(); 6];
        let mut mean = [T::zero(); 6];
        for (cell, e) in strain.iter().enumerate() {
            to_coords(&self.basis, e, &mut c);
            for d in 0..s {
                v[cell * s + d] -= c[d];
                mean[d] += v[cell * s + d];
            }
        }
        let inv = T::one() / T::from_usize_lossy(strain.len());
        for chunk in v.chunks_mut(s) {
            for d in 0..s {
                chunk[d] -= mean[d] * inv;
            }
        }
        Ok(())
    }
}

/// Minimizes the quadrature average of the truncated conjugate over
/// discretely div-free, mean-zero `Phi`, starting from `Phi = 0`.
pub fn dual_cell<T: Real>(
    f: &MicroDensity<T>,
    y: &SymTensor<T>,
    spec: CellSpec,
    cfg: &SolverConfig<T>,
    conj: &ConjugateConfig<T>,
) -> Result<DualResult<T>> {
    cfg.validate()?;
    if spec.dim != f.dim() || y.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: spec.dim,
        });
    }
    let searcher = Searcher::new(f, *conj)?;
    let proj = Projector::new(spec)?;
    let s = sym_len(spec.dim);
    let nc = spec.num_cells();
    let centroids: Vec<[T; 3]> = (0..nc).map(|c| spec.centroid(c)).collect();
    let inv = T::one() / T::from_usize_lossy(nc);

    let evaluate = |v: &[T]| -> Vec<ConjugateValue<T>> {
        (0..nc)
            .map(|c| {
                let phi = from_coords(&proj.basis, &v[c * s..(c + 1) * s]);
                searcher.search(&centroids[c][..spec.dim], &(*y + phi))
            })
            .collect()
    };
    let fg = |v: &[T], g: &mut [T]| -> Result<T> {
        let vals = evaluate(v);
        let mut sum = T::zero();
        for (c, cv) in vals.iter().enumerate() {
            if !cv.truncated.is_finite() {
                return Err(Error::NonFiniteEnergy { cell: c });
            }
            sum += cv.truncated;
            to_coords(&proj.basis, &cv.argmax, &mut g[c * s..(c + 1) * s]);
            for gi in &mut g[c * s..(c + 1) * s] {
                *gi *= inv;
            }
        }
        proj.project(g)?;
        Ok(sum * inv)
    };
    let opts = lbfgs::Options::new(cfg.tolerance, cfg.max_iters)
        .with_grad_scale(T::from_usize_lossy(nc));
    let run = lbfgs::lbfgs(fg, vec![T::zero(); nc * s], &opts)?;
    let mut v = run.x;
    proj.project(&mut v)?;
    let vals = evaluate(&v);
    let truncated_value = vals.iter().fold(T::zero(), |a, c| a + c.truncated) * inv;
    let infeasibility = vals.iter().fold(T::zero(), |m, c| m.max(c.boundary_slope));
    let feasible = infeasibility <= conj.slope_tol;
    Ok(DualResult {
        y: *y,
        value: if feasible { truncated_value } else { T::infinity() },
        truncated_value,
        feasible,
        infeasibility,
        phi: proj.tensors(&v),
        status: run.status,
        iterations: run.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::Boundary;
    use crate::density::make_builtin;

    #[test]
    fn basis_is_orthonormal() {
        for dim in [2, 3] {
            let b = hencky_basis::<f64>(dim).unwrap();
            assert_eq!(b.len(), sym_len(dim));
            for i in 0..b.len() {
                for j in 0..b.len() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((b[i].dot(&b[j]) - want).abs() < 1e-15);
                }
                if i > 0 {
                    assert!(b[i].trace().abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn conjugate_examples() {
        let f = make_builtin::<f64>("isotropic-convex", &[1.0], 2).unwrap();
        let z = SymTensor::zeros(2).unwrap();
        assert_eq!(conjugate_pointwise(&f, &[0.0; 2], &z, 10.0, 7).unwrap(), 0.0);
        let dev = SymTensor::diag(&[0.8, -0.8]).unwrap();
        assert!(conjugate_pointwise(&f, &[0.0; 2], &dev, 10.0, 7).unwrap().is_infinite());
        for y in [0.5, 1.0, -3.0] {
            // Y = (y/n) I: sup_t t y/n - t^2 = y^2 / (4 n^2)
            let yy = SymTensor::identity(2).unwrap().scale(y / 2.0);
            let v = conjugate_pointwise(&f, &[0.0; 2], &yy, 10.0, 7).unwrap();
            assert!((v - y * y / 16.0).abs() < 1e-9, "{v}");
        }
        let w = make_builtin::<f64>("two-well-dev", &[1.0], 2).unwrap();
        assert!(conjugate_pointwise(&w, &[0.0; 2], &z, 10.0, 7).is_err());
    }

    #[test]
    fn zero_stress_dual() {
        let f = make_builtin::<f64>("laminate-two-phase", &[1.0, 4.0], 2).unwrap();
        let spec = CellSpec::with_boundary(2, 1, 4, Boundary::Periodic).unwrap();
        let r = dual_cell(&f, &SymTensor::zeros(2).unwrap(), spec, &SolverConfig::default(), &ConjugateConfig::default()).unwrap();
        assert!(r.feasible);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn homogeneous_dual_is_pointwise() {
        let f = make_builtin::<f64>("smooth-area-type", &[], 2).unwrap();
        let spec = CellSpec::new(2, 1, 4).unwrap();
        let y = SymTensor::from_upper(2, &[0.9, 0.2, 0.1]).unwrap();
        let cfg = ConjugateConfig::default();
        let r = dual_cell(&f, &y, spec, &SolverConfig::default(), &cfg).unwrap();
        let p = conjugate_search(&f, &[0.0; 2], &y, &cfg).unwrap().value;
        assert!(r.feasible);
        assert!((r.value - p).abs() < 1e-9, "{} vs {p}", r.value);
    }
}
