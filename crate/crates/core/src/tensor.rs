//! Small symmetric tensors (n = 2, 3) with the deviatoric/trace split.
//!
//! Only the upper triangle is stored (row-major), so symmetry holds by
//! construction. All inner products and norms are Frobenius.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

const MAX_ENTRIES: usize = 6;

/// Symmetric n×n matrix, n ∈ {2, 3}.
#[derive(Clone, Copy, PartialEq)]
pub struct SymTensor<T> {
    dim: usize,
    e: [T; MAX_ENTRIES],
}

/// Number of stored coefficients for dimension `n`.
pub const fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

#[inline]
fn slot(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle
    i * n - i * (i + 1) / 2 + j
}

impl<T: Real> SymTensor<T> {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::zeros_unchecked(dim))
    }

    pub(crate) fn zeros_unchecked(dim: usize) -> Self {
        Self {
            dim,
            e: [T::zero(); MAX_ENTRIES],
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diag(&vec![T::one(); dim])
    }

    /// Builds a tensor from upper-triangle coefficients in row-major order,
    /// e.g. `[x11, x12, x22]` for n = 2.
    pub fn from_upper(dim: usize, upper: &[T]) -> Result<Self> {
        check_dim(dim)?;
        if upper.len() != sym_len(dim) {
            return Err(Error::DimensionMismatch {
                expected: sym_len(dim),
                got: upper.len(),
            });
        }
        let mut t = Self::zeros_unchecked(dim);
        t.e[..upper.len()].copy_from_slice(upper);
        Ok(t)
    }

    /// Infers the dimension from the number of upper-triangle entries (3 or 6).
    pub fn from_upper_auto(upper: &[T]) -> Result<Self> {
        match upper.len() {
            3 => Self::from_upper(2, upper),
            6 => Self::from_upper(3, upper),
            l => Err(Error::InvalidParameter {
                name: "strain".into(),
                reason: format!("expected 3 or 6 upper-triangle entries, got {l}"),
            }),
        }
    }

    pub fn diag(d: &[T]) -> Result<Self> {
        let n = d.len();
        check_dim(n)?;
        let mut t = Self::zeros_unchecked(n);
        for (i, &v) in d.iter().enumerate() {
            t.set(i, i, v);
        }
        Ok(t)
    }

    /// Symmetrizes a full row-major n×n matrix.
    pub fn from_full_sym(dim: usize, full: &[T]) -> Result<Self> {
        check_dim(dim)?;
        if full.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: full.len(),
            });
        }
        let half = T::lit(0.5);
        let mut t = Self::zeros_unchecked(dim);
        for i in 0..dim {
            for j in i..dim {
                t.set(i, j, half * (full[i * dim + j] + full[j * dim + i]));
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn upper(&self) -> &[T] {
        &self.e[..sym_len(self.dim)]
    }

    #[inline]
    pub fn upper_mut(&mut self) -> &mut [T] {
        let l = sym_len(self.dim);
        &mut self.e[..l]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.e[slot(self.dim, i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = slot(self.dim, i, j);
        self.e[s] = v;
    }

    /// Whether storage slot `s` holds an off-diagonal coefficient.
    pub fn is_off_diagonal_slot(dim: usize, s: usize) -> bool {
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                if k == s {
                    return i != j;
                }
                k += 1;
            }
        }
        false
    }

    pub fn to_full(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Frobenius inner product `X : Y`.
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let two = T::lit(2.0);
        let mut acc = T::zero();
        for i in 0..n {
            acc += self.get(i, i) * other.get(i, i);
            for j in (i + 1)..n {
                acc += two * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// `X - (tr X / n) I`.
    pub fn dev(&self) -> Self {
        let mut d = *self;
        let m = self.trace() / T::from_usize_lossy(self.dim);
        for i in 0..self.dim {
            let v = d.get(i, i) - m;
            d.set(i, i, v);
        }
        d
    }

    /// Returns `(dev X, tr X)`.
    pub fn dev_trace_split(&self) -> (Self, T) {
        (self.dev(), self.trace())
    }

    pub fn hencky_pair(&self) -> HenckyPair<T> {
        HenckyPair {
            dev_norm: self.dev().norm(),
            trace: self.trace(),
        }
    }

    /// `X + s I`
    pub fn add_identity(&self, s: T) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            let v = out.get(i, i) + s;
            out.set(i, i, v);
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for v in out.upper_mut() {
            *v *= s;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.upper().iter().all(|v| v.is_finite())
    }

    /// Symmetric matrix-vector product.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|i| (0..n).fold(T::zero(), |acc, j| acc + self.get(i, j) * v[j]))
            .collect()
    }

    /// Converts between scalar types.
    pub fn cast<U: Real>(&self) -> SymTensor<U> {
        let mut out = SymTensor::<U>::zeros_unchecked(self.dim);
        for (o, v) in out.upper_mut().iter_mut().zip(self.upper()) {
            *o = U::lit(v.to_f64_lossy());
        }
        out
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for SymTensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let len = sym_len(self.dim);
        write!(f, "SymTensor{}{:?}", self.dim, &self.e[..len])
    }
}

impl<T: Real> Add for SymTensor<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Real> AddAssign for SymTensor<T> {
    fn add_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, &b) in self.e.iter_mut().zip(rhs.e.iter()) {
            *a += b;
        }
    }
}

impl<T: Real> Sub for SymTensor<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Real> SubAssign for SymTensor<T> {
    fn sub_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (a, &b) in self.e.iter_mut().zip(rhs.e.iter()) {
            *a -= b;
        }
    }
}

impl<T: Real> Neg for SymTensor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for SymTensor<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// The two quantities entering the Hencky growth bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenckyPair<T> {
    /// `|X_dev|`
    pub dev_norm: T,
    /// `tr X`
    pub trace: T,
}

impl<T: Real> HenckyPair<T> {
    /// `|X_dev| + (tr X)^2`
    pub fn growth_measure(&self) -> T {
        self.dev_norm + self.trace * self.trace
    }
}

/// `(dev X, tr X)`.
pub fn dev_trace_split<T: Real>(x: &SymTensor<T>) -> (SymTensor<T>, T) {
    x.dev_trace_split()
}

/// Symmetrized dyad `a ⊙ b = (a⊗b + b⊗a) / 2`.
pub fn sym_dyad<T: Real>(a: &[T], b: &[T]) -> Result<SymTensor<T>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    check_dim(n)?;
    let half = T::lit(0.5);
    let mut t = SymTensor::zeros_unchecked(n);
    for i in 0..n {
        for j in i..n {
            t.set(i, j, half * (a[i] * b[j] + b[i] * a[j]));
        }
    }
    Ok(t)
}

/// Area integrand `<X> = sqrt(1 + |X|^2)`.
pub fn area_integrand<T: Real>(x: &SymTensor<T>) -> T {
    (T::one() + x.norm_sq()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t2(u: [f64; 3]) -> SymTensor<f64> {
        SymTensor::from_upper(2, &u).unwrap()
    }

    #[test]
    fn split_examples() {
        let (d, tr) = SymTensor::<f64>::identity(2).unwrap().dev_trace_split();
        assert_eq!(d, SymTensor::zeros(2).unwrap());
        assert_eq!(tr, 2.0);

        let x = t2([1.0, 0.0, -1.0]);
        let (d, tr) = dev_trace_split(&x);
        assert_eq!(d, x);
        assert_eq!(tr, 0.0);

        let (d, tr) = t2([2.0, 1.0, 0.0]).dev_trace_split();
        assert_eq!(d, t2([1.0, 1.0, -1.0]));
        assert_eq!(tr, 2.0);
    }

    #[test]
    fn dyad_examples() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let d = sym_dyad(&e1, &e2).unwrap();
        assert_eq!(d, t2([0.0, 0.5, 0.0]));
        assert_eq!(d.trace(), 0.0);
        assert_eq!(sym_dyad(&e1, &e1).unwrap(), t2([1.0, 0.0, 0.0]));
        assert_eq!(sym_dyad(&e1, &[1.0, 1.0]).unwrap(), t2([1.0, 0.5, 0.0]));
        assert!(sym_dyad(&e1, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn area_examples() {
        assert_eq!(area_integrand(&SymTensor::<f64>::zeros(2).unwrap()), 1.0);
        assert!((area_integrand(&t2([1.0, 0.0, -1.0])) - 3f64.sqrt()).abs() < 1e-15);
        assert!((area_integrand(&SymTensor::<f64>::identity(2).unwrap()) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(SymTensor::<f64>::zeros(4).is_err());
        assert!(SymTensor::<f64>::from_upper(2, &[1.0, 2.0]).is_err());
        assert!(sym_dyad(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn hencky_pair_of_traceless() {
        let x = t2([0.3, -1.2, -0.3]);
        let p = x.hencky_pair();
        assert_eq!(p.trace, 0.0);
        assert!((p.dev_norm - x.norm()).abs() < 1e-15);
    }

    #[test]
    fn full_storage_is_symmetric() {
        let x = SymTensor::from_upper(3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let f = x.to_full();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f[i * 3 + j], f[j * 3 + i]);
            }
        }
        assert_eq!(x.get(2, 1), 5.0);
    }

    fn arb_tensor() -> impl Strategy<Value = SymTensor<f64>> {
        prop_oneof![
            prop::collection::vec(-10.0..10.0f64, 3)
                .prop_map(|v| SymTensor::from_upper(2, &v).unwrap()),
            prop::collection::vec(-10.0..10.0f64, 6)
                .prop_map(|v| SymTensor::from_upper(3, &v).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn split_is_orthogonal(x in arb_tensor()) {
            let n = x.dim() as f64;
            let (d, tr) = x.dev_trace_split();
            prop_assert!((x.norm_sq() - (d.norm_sq() + tr * tr / n)).abs() <= 1e-12 * (1.0 + x.norm_sq()));
            prop_assert!(d.trace().abs() <= 1e-12 * (1.0 + x.norm()));
            let back = d.add_identity(tr / n);
            prop_assert!((back - x).norm() <= 1e-12 * (1.0 + x.norm()));
        }

        #[test]
        fn dyad_symmetry_and_trace(a in prop::collection::vec(-5.0..5.0f64, 3), b in prop::collection::vec(-5.0..5.0f64, 3)) {
            let ab = sym_dyad(&a, &b).unwrap();
            let ba = sym_dyad(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            let ip: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            prop_assert!((ab.trace() - ip).abs() <= 1e-12 * (1.0 + ip.abs()));
        }

        #[test]
        fn area_is_midpoint_convex(x in prop::collection::vec(-10.0..10.0f64, 3), y in prop::collection::vec(-10.0..10.0f64, 3)) {
            let x = SymTensor::from_upper(2, &x).unwrap();
            let y = SymTensor::from_upper(2, &y).unwrap();
            let mid = (x + y).scale(0.5);
            prop_assert!(area_integrand(&mid) <= 0.5 * (area_integrand(&x) + area_integrand(&y)) + 1e-12);
            prop_assert!(area_integrand(&x) >= x.norm().max(1.0));
        }
    }
}
