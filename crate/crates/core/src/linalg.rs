//! Conjugate gradients on implicit operators and a small dense Cholesky.

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgInfo<T> {
    pub iterations: usize,
    /// `|b - A x| / |b|` (absolute when `b = 0`).
    pub relative_residual: T,
}

/// Solves `A x = b` for symmetric positive semi-definite `A` given as
/// `apply(v, out)`. Singular systems are fine as long as `b ∈ range(A)`;
/// starting from `x = 0` the iterates stay in `range(A)`.
pub fn cg<T: Real, F>(apply: F, b: &[T], x: &mut [T], tol: T, max_iter: usize) -> Result<CgInfo<T>>
where
    F: Fn(&[T], &mut [T]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let scale = if bnorm > T::zero() { bnorm } else { T::one() };
    let mut r = vec![T::zero(); n];
    let mut ap = vec![T::zero(); n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut best = rr.sqrt() / scale;
    for it in 0..max_iter {
        if rr.sqrt() <= tol * scale {
            return Ok(CgInfo {
                iterations: it,
                relative_residual: rr.sqrt() / scale,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            // p in the null space: the residual cannot be reduced further
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        best = best.min(rr_new.sqrt() / scale);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    let res = rr.sqrt() / scale;
    if res <= tol {
        return Ok(CgInfo {
            iterations: max_iter,
            relative_residual: res,
        });
    }
    Err(Error::SolverDivergence {
        iterations: max_iter,
        residual: best.to_f64_lossy(),
    })
}

/// Dense lower-triangular Cholesky factor of an SPD matrix (row-major).
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(a: &[T], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: a.len(),
            });
        }
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) {
                return Err(Error::Precondition(format!(
                    "matrix not positive definite at pivot {j}"
                )));
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }
}

/// Cholesky factor of a symmetric positive definite band matrix with
/// half-bandwidth `bw`; row `i` of `L` holds columns `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    bw: usize,
    l: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    /// `entry(i, j)` is queried for `j <= i` within the band only.
    pub fn factor<F: Fn(usize, usize) -> T>(n: usize, bw: usize, entry: F) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![T::zero(); n * w];
        // l[i * w + (j + bw - i)] = L[i][j]
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::Precondition(format!(
                            "band matrix not positive definite at pivot {i}"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let l = if i > 0 { v[i - 1] } else { 0.0 };
            let r = if i + 1 < n { v[i + 1] } else { 0.0 };
            out[i] = 2.0 * v[i] - l - r;
        }
    }

    #[test]
    fn cg_solves_laplacian() {
        let n = 50;
        let b: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.3).sin()).collect();
        let mut x = vec![0.0; n];
        let info = cg(laplace_1d, &b, &mut x, 1e-13, 500).unwrap();
        let mut ax = vec![0.0; n];
        laplace_1d(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
        assert!(info.iterations <= n + 1);
    }

    #[test]
    fn cg_singular_consistent() {
        // periodic Laplacian: constants in the kernel, zero-mean right side
        let n = 16;
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                out[i] = 2.0 * v[i] - v[(i + n - 1) % n] - v[(i + 1) % n];
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).collect();
        let mut x = vec![0.0; n];
        cg(apply, &b, &mut x, 1e-12, 200).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let c = Cholesky::factor(&a, 3).unwrap();
        let mut b = [1.0, -2.0, 0.5];
        let orig = b;
        c.solve_in_place(&mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * b[j]).sum();
            assert!((r - orig[i]).abs() < 1e-14);
        }
        assert!(Cholesky::factor(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
    }

    #[test]
    fn band_cholesky_matches_dense() {
        let n = 12;
        let bw = 3;
        let entry = |i: usize, j: usize| -> f64 {
            let d = i.abs_diff(j);
            match d {
                0 => 6.0 + i as f64 * 0.1,
                1..=3 => -1.0 / d as f64,
                _ => 0.0,
            }
        };
        let band = BandCholesky::factor(n, bw, entry).unwrap();
        let full: Vec<f64> = (0..n * n).map(|k| entry(k / n, k % n)).collect();
        let dense = Cholesky::factor(&full, n).unwrap();
        let mut a: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut b = a.clone();
        band.solve_in_place(&mut a);
        dense.solve_in_place(&mut b);
        for i in 0..n {
            assert!((a[i] - b[i]).abs() < 1e-13);
        }
    }
}
