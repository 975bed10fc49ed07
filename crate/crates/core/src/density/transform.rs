//! Hardening regularization and the upper/lower truncations of a density.

use super::{DensityFlags, Energy, Growth, MicroDensity};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::tensor::SymTensor;
use std::sync::Arc;

struct Hardened<T: Real> {
    base: Arc<dyn Energy<T>>,
    delta: T,
}

impl<T: Real> Energy<T> for Hardened<T> {
    fn value(&self, x: &[T], s: &SymTensor<T>) -> T {
        let v = self.base.value(x, s);
        if self.delta == T::zero() {
            return v;
        }
        v + self.delta * s.dev().norm_sq()
    }

    fn smoothed_value(&self, x: &[T], s: &SymTensor<T>, eps: T) -> T {
        let v = self.base.smoothed_value(x, s, eps);
        if self.delta == T::zero() {
            return v;
        }
        v + self.delta * s.dev().norm_sq()
    }

    fn smoothed_gradient(&self, x: &[T], s: &SymTensor<T>, eps: T) -> (T, SymTensor<T>) {
        let (v, g) = self.base.smoothed_gradient(x, s, eps);
        if self.delta == T::zero() {
            return (v, g);
        }
        let d = s.dev();
        (
            v + self.delta * d.norm_sq(),
            g + d.scale(T::lit(2.0) * self.delta),
        )
    }
}

/// `f^(delta)(x, X) = f(x, X) + delta |X_dev|^2`.
pub fn harden<T: Real>(f: &MicroDensity<T>, delta: T) -> Result<MicroDensity<T>> {
    if !(delta >= T::zero()) || !delta.is_finite() {
        return Err(invalid("delta", "hardening must be finite and non-negative"));
    }
    let g = f.growth();
    // delta |X_dev|^2 breaks the linear upper bound; keep the parent constants
    // as the reference pair for the linear part.
    Ok(MicroDensity::new(
        format!("{}+harden({delta})", f.name()),
        f.dim(),
        Arc::new(Hardened {
            base: f.energy().clone(),
            delta,
        }),
        g,
        DensityFlags {
            convex: f.is_convex(),
            x_independent: f.is_x_independent(),
        },
    )?
    .with_layering(f.layering()))
}

/// Truncation levels for `C_{M,K} = { X : |X_dev| >= K ((tr X)^2 - M^2) }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec<T> {
    pub m: u32,
    pub k: u32,
    /// Growth constant used by the upper truncation.
    pub beta: T,
}

impl<T: Real> TruncationSpec<T> {
    pub fn new(m: u32, k: u32, beta: T) -> Result<Self> {
        if m < 1 {
            return Err(invalid("M", "must be at least 1"));
        }
        if k < 1 {
            return Err(invalid("K", "must be at least 1"));
        }
        if !(beta > T::zero()) {
            return Err(invalid("beta", "must be positive"));
        }
        Ok(Self { m, k, beta })
    }

    /// `s(X) = (tr X)^2 - |X_dev| / K`; `X ∈ C_{M,K}` iff `s(X) <= M^2`.
    pub fn level(&self, x: &SymTensor<T>) -> T {
        let p = x.hencky_pair();
        p.trace * p.trace - p.dev_norm / T::from_u32(self.k).unwrap()
    }

    pub fn contains(&self, x: &SymTensor<T>, m: u32) -> bool {
        let m = T::from_u32(m).unwrap();
        self.level(x) <= m * m
    }
}

/// Cutoff equal to 1 on `C_{M,K}`, 0 outside `C_{M+1,K}` and linear in the
/// level `s(X)` in between.
pub fn truncation_cutoff<T: Real>(spec: &TruncationSpec<T>, x: &SymTensor<T>) -> T {
    let m = T::from_u32(spec.m).unwrap();
    let m1 = m + T::one();
    let z = (m1 * m1 - spec.level(x)) / (m1 * m1 - m * m);
    z.max(T::zero()).min(T::one())
}

struct Hat<T: Real> {
    base: Arc<dyn Energy<T>>,
    spec: TruncationSpec<T>,
}

impl<T: Real> Energy<T> for Hat<T> {
    fn value(&self, x: &[T], s: &SymTensor<T>) -> T {
        let z = truncation_cutoff(&self.spec, s);
        if z == T::zero() {
            T::zero()
        } else {
            z * self.base.value(x, s)
        }
    }
}

struct Check<T: Real> {
    base: Arc<dyn Energy<T>>,
    spec: TruncationSpec<T>,
}

impl<T: Real> Energy<T> for Check<T> {
    fn value(&self, x: &[T], s: &SymTensor<T>) -> T {
        let m = T::from_u32(self.spec.m).unwrap();
        let k = T::from_u32(self.spec.k).unwrap();
        let excess = (self.spec.level(s) - m * m).max(T::zero());
        self.base.value(x, s) + self.spec.beta * k * k * excess
    }
}

/// Lower truncation `zeta_{M,K}(X) f(x, X)`.
///
/// Carries the parent's growth constants for reference only: the result has
/// linear growth and violates the Hencky lower bound for large traces.
pub fn truncate_hat<T: Real>(f: &MicroDensity<T>, spec: TruncationSpec<T>) -> Result<MicroDensity<T>> {
    MicroDensity::new(
        format!("{}^hat({},{})", f.name(), spec.m, spec.k),
        f.dim(),
        Arc::new(Hat {
            base: f.energy().clone(),
            spec,
        }),
        f.growth(),
        DensityFlags {
            convex: false,
            x_independent: f.is_x_independent(),
        },
    )
}

/// Upper truncation `f + beta K^2 max{(tr X)^2 - M^2 - |X_dev|/K, 0}`.
pub fn truncate_check<T: Real>(
    f: &MicroDensity<T>,
    spec: TruncationSpec<T>,
) -> Result<MicroDensity<T>> {
    let k = T::from_u32(spec.k).unwrap();
    let g = f.growth();
    let growth = Growth::new(g.alpha, g.beta.max(spec.beta) * (T::one() + k * k))?;
    MicroDensity::new(
        format!("{}^check({},{})", f.name(), spec.m, spec.k),
        f.dim(),
        Arc::new(Check {
            base: f.energy().clone(),
            spec,
        }),
        growth,
        DensityFlags {
            convex: false,
            x_independent: f.is_x_independent(),
        },
    )
}
