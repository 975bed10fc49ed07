//! Periodic energy densities `f(x, X)` with Hencky growth
//! `alpha (|X_dev| + (tr X)^2) <= f(x, X) <= beta (|X_dev| + (tr X)^2 + 1)`.

mod catalog;
mod checks;
mod transform;

pub use catalog::{make_builtin, two_well_convex_envelope, two_well_matrix, BUILTIN_NAMES};
pub use checks::{
    asymptotic_fn, check_certificate, check_growth, trace_lipschitz_check, AsymptoticEstimate,
    AsymptoticConvexityCertificate, CertificateReport, GrowthBound, GrowthReport,
    GrowthViolation, TraceLipschitzCheck,
};
pub(crate) use checks::{extrapolate_ray, validate_schedule};
pub use transform::{harden, truncate_check, truncate_hat, truncation_cutoff, TruncationSpec};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tensor::{sym_len, SymTensor};
use std::fmt;
use std::sync::Arc;

/// Pointwise energy evaluator. `x` is already reduced to the unit cell.
///
/// The `smoothed_*` methods are what minimizers see: implementors may replace
/// kinks such as `|X_dev|` at the origin by `sqrt(eps^2 + |X_dev|^2) - eps`.
/// Reported energies always go through [`Energy::value`].
pub trait Energy<T: Real>: Send + Sync {
    fn value(&self, x: &[T], strain: &SymTensor<T>) -> T;

    fn smoothed_value(&self, x: &[T], strain: &SymTensor<T>, _eps: T) -> T {
        self.value(x, strain)
    }

    /// Smoothed value and its Frobenius gradient with respect to the strain.
    fn smoothed_gradient(&self, x: &[T], strain: &SymTensor<T>, eps: T) -> (T, SymTensor<T>) {
        fd_gradient(|s| self.smoothed_value(x, s, eps), strain)
    }
}

/// Central-difference Frobenius gradient of `g` at `strain`.
pub(crate) fn fd_gradient<T: Real, G: Fn(&SymTensor<T>) -> T>(
    g: G,
    strain: &SymTensor<T>,
) -> (T, SymTensor<T>) {
    let v = g(strain);
    let n = strain.dim();
    let step = T::epsilon().cbrt() * (T::one() + strain.norm());
    let mut grad = SymTensor::zeros_unchecked(n);
    for s in 0..sym_len(n) {
        let mut p = *strain;
        let mut m = *strain;
        p.upper_mut()[s] += step;
        m.upper_mut()[s] -= step;
        let d = (g(&p) - g(&m)) / (step + step);
        // an off-diagonal slot moves two matrix entries at once
        grad.upper_mut()[s] = if SymTensor::<T>::is_off_diagonal_slot(n, s) {
            d * T::lit(0.5)
        } else {
            d
        };
    }
    (v, grad)
}

/// Declared Hencky growth constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> Growth<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(invalid("alpha", "must be positive"));
        }
        if !(beta >= alpha) {
            return Err(invalid("beta", "must be at least alpha"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn lower(&self, x: &SymTensor<T>) -> T {
        self.alpha * x.hencky_pair().growth_measure()
    }

    pub fn upper(&self, x: &SymTensor<T>) -> T {
        self.beta * (x.hencky_pair().growth_measure() + T::one())
    }
}

/// Phase geometry of a density that only varies with `x_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layering<T> {
    /// Volume fraction of the first phase, which occupies `x_1 mod 1 < theta`.
    pub theta: T,
}

/// A periodic Carathéodory density with its declared metadata.
#[derive(Clone)]
pub struct MicroDensity<T: Real> {
    name: String,
    dim: usize,
    energy: Arc<dyn Energy<T>>,
    growth: Growth<T>,
    convex: bool,
    x_independent: bool,
    layering: Option<Layering<T>>,
}

impl<T: Real> fmt::Debug for MicroDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MicroDensity")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("growth", &self.growth)
            .field("convex", &self.convex)
            .field("x_independent", &self.x_independent)
            .finish()
    }
}

struct FnEnergy<F>(F);

impl<T: Real, F> Energy<T> for FnEnergy<F>
where
    F: Fn(&[T], &SymTensor<T>) -> T + Send + Sync,
{
    fn value(&self, x: &[T], strain: &SymTensor<T>) -> T {
        (self.0)(x, strain)
    }
}

/// Builder-style flags for [`MicroDensity::new`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DensityFlags {
    pub convex: bool,
    pub x_independent: bool,
}

impl<T: Real> MicroDensity<T> {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        energy: Arc<dyn Energy<T>>,
        growth: Growth<T>,
        flags: DensityFlags,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self {
            name: name.into(),
            dim,
            energy,
            growth,
            convex: flags.convex,
            x_independent: flags.x_independent,
            layering: None,
        })
    }

    /// Wraps a plain closure; gradients fall back to finite differences.
    pub fn from_fn<F>(
        name: impl Into<String>,
        dim: usize,
        growth: Growth<T>,
        flags: DensityFlags,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[T], &SymTensor<T>) -> T + Send + Sync + 'static,
    {
        Self::new(name, dim, Arc::new(FnEnergy(f)), growth, flags)
    }

    pub(crate) fn with_layering(mut self, layering: Option<Layering<T>>) -> Self {
        self.layering = layering;
        self
    }

    /// Replaces the declared growth constants (used for user overrides).
    pub fn with_growth(mut self, growth: Growth<T>) -> Self {
        self.growth = growth;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn growth(&self) -> Growth<T> {
        self.growth
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn is_x_independent(&self) -> bool {
        self.x_independent
    }

    pub fn layering(&self) -> Option<Layering<T>> {
        self.layering
    }

    pub(crate) fn energy(&self) -> &Arc<dyn Energy<T>> {
        &self.energy
    }

    /// `f(x, X)` with `x` reduced modulo the unit cell.
    pub fn eval(&self, x: &[T], strain: &SymTensor<T>) -> T {
        let mut buf = [T::zero(); 3];
        let y = reduce(x, &mut buf);
        self.energy.value(y, strain)
    }

    pub fn eval_smoothed(&self, x: &[T], strain: &SymTensor<T>, eps: T) -> T {
        let mut buf = [T::zero(); 3];
        let y = reduce(x, &mut buf);
        self.energy.smoothed_value(y, strain, eps)
    }

    pub fn eval_smoothed_gradient(
        &self,
        x: &[T],
        strain: &SymTensor<T>,
        eps: T,
    ) -> (T, SymTensor<T>) {
        let mut buf = [T::zero(); 3];
        let y = reduce(x, &mut buf);
        self.energy.smoothed_gradient(y, strain, eps)
    }
}

fn reduce<'a, T: Real>(x: &[T], buf: &'a mut [T; 3]) -> &'a [T] {
    let n = x.len().min(3);
    for (b, &v) in buf.iter_mut().zip(x) {
        let r = v - v.floor();
        // floor can round up to exactly 1 for tiny negative inputs
        *b = if r >= T::one() { T::zero() } else { r };
    }
    &buf[..n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_reduction() {
        let f = make_builtin::<f64>("laminate-two-phase", &[1.0, 4.0], 2).unwrap();
        let x = SymTensor::identity(2).unwrap();
        for (a, b) in [([0.2, 0.7], [3.2, -4.3]), ([0.75, 0.1], [-0.25, 17.1])] {
            assert_eq!(f.eval(&a, &x), f.eval(&b, &x));
        }
    }

    #[test]
    fn growth_validation() {
        assert!(Growth::new(0.0, 1.0).is_err());
        assert!(Growth::new(2.0, 1.0).is_err());
        assert!(Growth::new(1.0, 1.0).is_ok());
    }

    #[test]
    fn fd_gradient_matches_analytic() {
        let f = make_builtin::<f64>("smooth-area-type", &[], 3).unwrap();
        let x = SymTensor::from_upper(3, &[0.3, -0.2, 0.5, 1.1, 0.05, -0.7]).unwrap();
        let (_, g) = f.eval_smoothed_gradient(&[0.0; 3], &x, 1e-8);
        let (_, gfd) = fd_gradient(|s| f.eval(&[0.0; 3], s), &x);
        assert!((g - gfd).norm() < 1e-8, "{g:?} vs {gfd:?}");
    }
}
