//! Built-in test densities.

use super::{DensityFlags, Energy, Growth, Layering, MicroDensity};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tensor::{sym_dyad, SymTensor};
use std::sync::Arc;

pub const BUILTIN_NAMES: [&str; 4] = [
    "isotropic-convex",
    "two-well-dev",
    "laminate-two-phase",
    "smooth-area-type",
];

#[inline]
fn smooth_abs<T: Real>(r: T, eps: T) -> T {
    (eps * eps + r * r).sqrt() - eps
}

/// `c (|X_dev| + (tr X)^2)`, optionally with `c` depending on the layer.
#[derive(Debug, Clone, Copy)]
struct Hencky<T> {
    a1: T,
    a2: T,
    theta: T,
}

impl<T: Real> Hencky<T> {
    fn coeff(&self, x: &[T]) -> T {
        if x.first().is_some_and(|&x1| x1 >= self.theta) {
            self.a2
        } else {
            self.a1
        }
    }
}

impl<T: Real> Energy<T> for Hencky<T> {
    fn value(&self, x: &[T], s: &SymTensor<T>) -> T {
        let p = s.hencky_pair();
        self.coeff(x) * p.growth_measure()
    }

    fn smoothed_value(&self, x: &[T], s: &SymTensor<T>, eps: T) -> T {
        let p = s.hencky_pair();
        self.coeff(x) * (smooth_abs(p.dev_norm, eps) + p.trace * p.trace)
    }

    fn smoothed_gradient(&self, x: &[T], s: &SymTensor<T>, eps: T) -> (T, SymTensor<T>) {
        let c = self.coeff(x);
        let (d, tr) = s.dev_trace_split();
        let r = (eps * eps + d.norm_sq()).sqrt();
        let v = c * (r - eps + tr * tr);
        let mut g = if r > T::zero() {
            d.scale(c / r)
        } else {
            SymTensor::zeros_unchecked(s.dim())
        };
        g = g.add_identity(c * T::lit(2.0) * tr);
        (v, g)
    }
}

/// `sqrt(1 + |X_dev|^2) + (tr X)^2`
#[derive(Debug, Clone, Copy)]
struct SmoothArea;

impl<T: Real> Energy<T> for SmoothArea {
    fn value(&self, _x: &[T], s: &SymTensor<T>) -> T {
        let p = s.hencky_pair();
        (T::one() + p.dev_norm * p.dev_norm).sqrt() + p.trace * p.trace
    }

    fn smoothed_gradient(&self, x: &[T], s: &SymTensor<T>, _eps: T) -> (T, SymTensor<T>) {
        let (d, tr) = s.dev_trace_split();
        let r = (T::one() + d.norm_sq()).sqrt();
        let g = d.scale(T::one() / r).add_identity(T::lit(2.0) * tr);
        (self.value(x, s), g)
    }
}

/// `min(|X_dev - A|, |X_dev + A|) + (tr X)^2 + |A|`
#[derive(Debug, Clone, Copy)]
struct TwoWell<T> {
    a: SymTensor<T>,
    d: T,
}

impl<T: Real> Energy<T> for TwoWell<T> {
    fn value(&self, _x: &[T], s: &SymTensor<T>) -> T {
        let (dv, tr) = s.dev_trace_split();
        let w = (dv - self.a).norm().min((dv + self.a).norm());
        w + tr * tr + self.d
    }

    fn smoothed_value(&self, _x: &[T], s: &SymTensor<T>, eps: T) -> T {
        let (dv, tr) = s.dev_trace_split();
        let w = smooth_abs((dv - self.a).norm(), eps).min(smooth_abs((dv + self.a).norm(), eps));
        w + tr * tr + self.d
    }

    fn smoothed_gradient(&self, _x: &[T], s: &SymTensor<T>, eps: T) -> (T, SymTensor<T>) {
        let (dv, tr) = s.dev_trace_split();
        let minus = dv - self.a;
        let plus = dv + self.a;
        let rm = (eps * eps + minus.norm_sq()).sqrt();
        let rp = (eps * eps + plus.norm_sq()).sqrt();
        let (r, arm) = if rm <= rp { (rm, minus) } else { (rp, plus) };
        let v = r - eps + tr * tr + self.d;
        let g = if r > T::zero() {
            arm.scale(T::one() / r)
        } else {
            SymTensor::zeros_unchecked(s.dim())
        };
        (v, g.add_identity(T::lit(2.0) * tr))
    }
}

/// Convex envelope of [`TwoWell`]: `dist(X_dev, [-A, A]) + (tr X)^2 + |A|`.
#[derive(Debug, Clone, Copy)]
struct TwoWellEnvelope<T> {
    a: SymTensor<T>,
    d: T,
}

impl<T: Real> TwoWellEnvelope<T> {
    fn offset(&self, dv: &SymTensor<T>) -> SymTensor<T> {
        let aa = self.a.norm_sq();
        if aa == T::zero() {
            return *dv;
        }
        let s = (dv.dot(&self.a) / aa).max(-T::one()).min(T::one());
        *dv - self.a.scale(s)
    }
}

impl<T: Real> Energy<T> for TwoWellEnvelope<T> {
    fn value(&self, _x: &[T], s: &SymTensor<T>) -> T {
        let (dv, tr) = s.dev_trace_split();
        self.offset(&dv).norm() + tr * tr + self.d
    }

    fn smoothed_value(&self, _x: &[T], s: &SymTensor<T>, eps: T) -> T {
        let (dv, tr) = s.dev_trace_split();
        smooth_abs(self.offset(&dv).norm(), eps) + tr * tr + self.d
    }

    fn smoothed_gradient(&self, _x: &[T], s: &SymTensor<T>, eps: T) -> (T, SymTensor<T>) {
        let (dv, tr) = s.dev_trace_split();
        let off = self.offset(&dv);
        let r = (eps * eps + off.norm_sq()).sqrt();
        let v = r - eps + tr * tr + self.d;
        let g = if r > T::zero() {
            off.scale(T::one() / r)
        } else {
            SymTensor::zeros_unchecked(s.dim())
        };
        (v, g.add_identity(T::lit(2.0) * tr))
    }
}

/// The traceless well `A = sqrt(2) d (e1 ⊙ e2)`, so `|A| = d` and
/// `2A` is a symmetric rank-one direction.
pub fn two_well_matrix<T: Real>(d: T, dim: usize) -> Result<SymTensor<T>> {
    let mut e1 = vec![T::zero(); dim];
    let mut e2 = vec![T::zero(); dim];
    e1[0] = T::one();
    e2[1] = T::one();
    Ok(sym_dyad(&e1, &e2)?.scale(T::lit(2f64.sqrt()) * d))
}

fn param<T: Real>(params: &[T], i: usize, name: &str) -> Result<T> {
    params
        .get(i)
        .copied()
        .ok_or_else(|| invalid(name, "missing parameter"))
}

fn expect_len<T>(params: &[T], range: std::ops::RangeInclusive<usize>, name: &str) -> Result<()> {
    if range.contains(&params.len()) {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!(
                "expected {}..={} parameters, got {}",
                range.start(),
                range.end(),
                params.len()
            ),
        ))
    }
}

/// Catalog lookup.
///
/// | name | params | density |
/// |---|---|---|
/// | `isotropic-convex` | `[c]` (default 1) | `c (|X_dev| + (tr X)^2)` |
/// | `smooth-area-type` | none | `sqrt(1 + |X_dev|^2) + (tr X)^2` |
/// | `two-well-dev` | `[d]` | `min(|X_dev - A|, |X_dev + A|) + (tr X)^2 + d`, `|A| = d` |
/// | `laminate-two-phase` | `[a1, a2, theta]` (theta default 0.5) | `a(x_1) (|X_dev| + (tr X)^2)` |
pub fn make_builtin<T: Real>(name: &str, params: &[T], dim: usize) -> Result<MicroDensity<T>> {
    if dim != 2 && dim != 3 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(invalid("params", "parameters must be finite"));
    }
    match name {
        "isotropic-convex" => {
            expect_len(params, 0..=1, "params")?;
            let c = params.first().copied().unwrap_or(T::one());
            let growth = Growth::new(c, c)?;
            MicroDensity::new(
                name,
                dim,
                Arc::new(Hencky {
                    a1: c,
                    a2: c,
                    theta: T::one(),
                }),
                growth,
                DensityFlags {
                    convex: true,
                    x_independent: true,
                },
            )
        }
        "smooth-area-type" => {
            expect_len(params, 0..=0, "params")?;
            MicroDensity::new(
                name,
                dim,
                Arc::new(SmoothArea),
                Growth::new(T::one(), T::one())?,
                DensityFlags {
                    convex: true,
                    x_independent: true,
                },
            )
        }
        "two-well-dev" => {
            expect_len(params, 1..=1, "params")?;
            let d = param(params, 0, "d")?;
            if d < T::zero() {
                return Err(invalid("d", "well distance must be non-negative"));
            }
            // min(|D-A|,|D+A|) + d >= |D| and <= |D| + 2d
            let growth = Growth::new(T::one(), T::one().max(d + d))?;
            MicroDensity::new(
                name,
                dim,
                Arc::new(TwoWell {
                    a: two_well_matrix(d, dim)?,
                    d,
                }),
                growth,
                DensityFlags {
                    convex: false,
                    x_independent: true,
                },
            )
        }
        "laminate-two-phase" => {
            expect_len(params, 2..=3, "params")?;
            let a1 = param(params, 0, "a1")?;
            let a2 = param(params, 1, "a2")?;
            let theta = params.get(2).copied().unwrap_or(T::lit(0.5));
            if !(theta > T::zero() && theta < T::one()) {
                return Err(invalid("theta", "volume fraction must lie in (0, 1)"));
            }
            let growth = Growth::new(a1.min(a2), a1.max(a2))?;
            Ok(MicroDensity::new(
                name,
                dim,
                Arc::new(Hencky { a1, a2, theta }),
                growth,
                DensityFlags {
                    convex: true,
                    x_independent: a1 == a2,
                },
            )?
            .with_layering(Some(Layering { theta })))
        }
        other => Err(Error::UnknownDensity(other.to_string())),
    }
}

/// Closed-form convex envelope of `two-well-dev` with parameter `d`.
pub fn two_well_convex_envelope<T: Real>(d: T, dim: usize) -> Result<MicroDensity<T>> {
    if d < T::zero() {
        return Err(invalid("d", "well distance must be non-negative"));
    }
    MicroDensity::new(
        "two-well-dev-envelope",
        dim,
        Arc::new(TwoWellEnvelope {
            a: two_well_matrix(d, dim)?,
            d,
        }),
        Growth::new(T::one(), T::one().max(d))?,
        DensityFlags {
            convex: true,
            x_independent: true,
        },
    )
}
