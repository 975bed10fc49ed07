//! Quasi-Newton minimizers with a strong-Wolfe line search.
//!
//! [`lbfgs`] is the workhorse for cell problems; [`bfgs_dense`] keeps a full
//! inverse-Hessian approximation and is used where the unknown count is small.

use crate::error::Result;
use crate::scalar::{axpy, dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
    /// Line search could not make progress (typically at a kink or at the
    /// round-off floor).
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub struct Options<T> {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop once `scale * max_i |g_i| <= grad_tol`.
    pub grad_tol: T,
    pub grad_scale: T,
    pub c1: T,
    pub c2: T,
    pub max_line_evals: usize,
}

impl<T: Real> Options<T> {
    pub fn new(grad_tol: T, max_iters: usize) -> Self {
        Self {
            memory: 12,
            max_iters,
            grad_tol,
            grad_scale: T::one(),
            c1: T::lit(1e-4),
            c2: T::lit(0.9),
            max_line_evals: 40,
        }
    }

    pub fn with_grad_scale(mut self, s: T) -> Self {
        self.grad_scale = s;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    /// Scaled max-norm of the final gradient.
    pub grad_norm: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
    /// Objective after each accepted step, starting with the initial value.
    pub history: Vec<T>,
}

struct Point<T> {
    x: Vec<T>,
    f: T,
    g: Vec<T>,
}

struct Problem<'a, T, F> {
    fg: &'a mut F,
    evals: usize,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, F: FnMut(&[T], &mut [T]) -> Result<T>> Problem<'_, T, F> {
    fn eval(&mut self, x: Vec<T>) -> Result<Point<T>> {
        let mut g = vec![T::zero(); x.len()];
        let f = (self.fg)(&x, &mut g)?;
        self.evals += 1;
        Ok(Point { x, f, g })
    }

    fn trial(&mut self, base: &Point<T>, dir: &[T], alpha: T) -> Result<(Point<T>, T)> {
        let mut x = base.x.clone();
        axpy(alpha, dir, &mut x);
        let p = self.eval(x)?;
        let d = dot(&p.g, dir);
        Ok((p, d))
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Minimizer of the cubic interpolating two points with slopes, safeguarded
/// to the middle of `[lo, hi]`.
fn interpolate<T: Real>(a: T, fa: T, da: T, b: T, fb: T, db: T) -> T {
    let d1 = da + db - T::lit(3.0) * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let width = hi - lo;
    let mid = lo + width * T::lit(0.5);
    if !(disc >= T::zero()) {
        return mid;
    }
    let d2 = disc.sqrt() * (b - a).signum();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + d2 + d2);
    let margin = width * T::lit(0.1);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Strong-Wolfe line search. Returns the accepted point, or the best
/// sufficient-decrease point seen, or `None`.
fn line_search<T: Real, F: FnMut(&[T], &mut [T]) -> Result<T>>(
    prob: &mut Problem<'_, T, F>,
    base: &Point<T>,
    dir: &[T],
    alpha0: T,
    opts: &Options<T>,
) -> Result<Option<Point<T>>> {
    let d0 = dot(&base.g, dir);
    if !(d0 < T::zero()) {
        return Ok(None);
    }
    let f0 = base.f;
    let armijo = |a: T, f: T| f <= f0 + opts.c1 * a * d0;
    let curv = |d: T| d.abs() <= -opts.c2 * d0;
    let mut best: Option<Point<T>> = None;
    let keep = |p: Point<T>, best: &mut Option<Point<T>>| {
        if p.f < f0 && best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(p);
        }
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (T::zero(), f0, d0);
    let mut a = alpha0;
    let mut evals = 0;
    let (mut lo, mut hi);
    let (mut f_lo, mut d_lo, mut f_hi, mut d_hi);
    loop {
        let (p, d) = prob.trial(base, dir, a)?;
        evals += 1;
        let f = p.f;
        if !f.is_finite() || !armijo(a, f) || (evals > 1 && f >= f_prev) {
            keep(p, &mut best);
            (lo, f_lo, d_lo, hi, f_hi, d_hi) = (a_prev, f_prev, d_prev, a, f, d);
            break;
        }
        if curv(d) {
            return Ok(Some(p));
        }
        if d >= T::zero() {
            keep(p, &mut best);
            (lo, f_lo, d_lo, hi, f_hi, d_hi) = (a, f, d, a_prev, f_prev, d_prev);
            break;
        }
        keep(p, &mut best);
        if evals >= opts.max_line_evals {
            return Ok(best);
        }
        (a_prev, f_prev, d_prev) = (a, f, d);
        a = a * T::lit(4.0);
    }

    while evals < opts.max_line_evals {
        let a = if f_hi.is_finite() {
            interpolate(lo, f_lo, d_lo, hi, f_hi, d_hi)
        } else {
            lo + (hi - lo) * T::lit(0.25)
        };
        if (hi - lo).abs() <= T::epsilon() * a.abs().max(T::min_positive_value()) {
            break;
        }
        let (p, d) = prob.trial(base, dir, a)?;
        evals += 1;
        let f = p.f;
        if !f.is_finite() || !armijo(a, f) || f >= f_lo {
            keep(p, &mut best);
            (hi, f_hi, d_hi) = (a, f, d);
        } else {
            if curv(d) {
                return Ok(Some(p));
            }
            if d * (hi - lo) >= T::zero() {
                (hi, f_hi, d_hi) = (lo, f_lo, d_lo);
            }
            keep(p, &mut best);
            (lo, f_lo, d_lo) = (a, f, d);
        }
    }
    Ok(best)
}

/// Limited-memory BFGS. `fg(x, grad)` writes the gradient and returns the
/// objective; errors abort the run.
pub fn lbfgs<T, F>(mut fg: F, x0: Vec<T>, opts: &Options<T>) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> Result<T>,
{
    let mut prob = Problem {
        fg: &mut fg,
        evals: 0,
        _t: std::marker::PhantomData,
    };
    let mut cur = prob.eval(x0)?;
    let mut history = vec![cur.f];
    let mut s_hist: Vec<Vec<T>> = Vec::new();
    let mut y_hist: Vec<Vec<T>> = Vec::new();
    let mut rho_hist: Vec<T> = Vec::new();
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut failures = 0;

    for it in 0..opts.max_iters {
        if max_abs(&cur.g) * opts.grad_scale <= opts.grad_tol {
            status = Status::Converged;
            break;
        }
        iterations = it + 1;

        // two-loop recursion
        let mut q: Vec<T> = cur.g.clone();
        let m = s_hist.len();
        let mut alphas = vec![T::zero(); m];
        for i in (0..m).rev() {
            let a = rho_hist[i] * dot(&s_hist[i], &q);
            alphas[i] = a;
            axpy(-a, &y_hist[i], &mut q);
        }
        let gamma = if m > 0 {
            dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1])
        } else {
            T::one() / max_abs(&cur.g).max(T::one())
        };
        for v in q.iter_mut() {
            *v *= gamma;
        }
        for i in 0..m {
            let b = rho_hist[i] * dot(&y_hist[i], &q);
            axpy(alphas[i] - b, &s_hist[i], &mut q);
        }
        let mut dir: Vec<T> = q.into_iter().map(|v| -v).collect();
        if !(dot(&dir, &cur.g) < T::zero()) {
            dir = cur.g.iter().map(|&v| -v).collect();
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        let next = line_search(&mut prob, &cur, &dir, T::one(), opts)?;
        let Some(next) = next else {
            failures += 1;
            if failures >= 2 || s_hist.is_empty() {
                status = Status::Stalled;
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            continue;
        };
        failures = 0;
        let s: Vec<T> = next.x.iter().zip(&cur.x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = next.g.iter().zip(&cur.g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho_hist.push(T::one() / sy);
        }
        cur = next;
        history.push(cur.f);
    }
    let grad_norm = max_abs(&cur.g) * opts.grad_scale;
    if status == Status::MaxIterations && grad_norm <= opts.grad_tol {
        status = Status::Converged;
    }
    Ok(Minimum {
        grad_norm,
        x: cur.x,
        value: cur.f,
        iterations,
        evaluations: prob.evals,
        status,
        history,
    })
}

/// Full-memory BFGS on the inverse Hessian, for small problems.
pub fn bfgs_dense<T, F>(mut fg: F, x0: Vec<T>, opts: &Options<T>) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T], &mut [T]) -> Result<T>,
{
    let n = x0.len();
    let mut prob = Problem {
        fg: &mut fg,
        evals: 0,
        _t: std::marker::PhantomData,
    };
    let mut cur = prob.eval(x0)?;
    let mut history = vec![cur.f];
    let mut h = vec![T::zero(); n * n];
    let reset = |h: &mut Vec<T>, scale: T| {
        h.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    reset(&mut h, T::one() / max_abs(&cur.g).max(T::one()));
    let mut fresh = true;
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        if max_abs(&cur.g) * opts.grad_scale <= opts.grad_tol {
            status = Status::Converged;
            break;
        }
        iterations = it + 1;
        let mut dir = vec![T::zero(); n];
        for i in 0..n {
            dir[i] = -dot(&h[i * n..(i + 1) * n], &cur.g);
        }
        if !(dot(&dir, &cur.g) < T::zero()) {
            reset(&mut h, T::one());
            fresh = true;
            dir = cur.g.iter().map(|&v| -v).collect();
        }
        let Some(next) = line_search(&mut prob, &cur, &dir, T::one(), opts)? else {
            if fresh {
                status = Status::Stalled;
                break;
            }
            reset(&mut h, T::one() / max_abs(&cur.g).max(T::one()));
            fresh = true;
            continue;
        };
        let s: Vec<T> = next.x.iter().zip(&cur.x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = next.g.iter().zip(&cur.g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                reset(&mut h, sy / dot(&y, &y));
            }
            let rho = T::one() / sy;
            let mut hy = vec![T::zero(); n];
            for i in 0..n {
                hy[i] = dot(&h[i * n..(i + 1) * n], &y);
            }
            let yhy = dot(&y, &hy);
            // H+ = H - rho (s hy^T + hy s^T) + (rho^2 yHy + rho) s s^T
            let c = rho * rho * yhy + rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += c * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
            }
            fresh = false;
        }
        cur = next;
        history.push(cur.f);
    }
    let grad_norm = max_abs(&cur.g) * opts.grad_scale;
    if status == Status::MaxIterations && grad_norm <= opts.grad_tol {
        status = Status::Converged;
    }
    Ok(Minimum {
        grad_norm,
        x: cur.x,
        value: cur.f,
        iterations,
        evaluations: prob.evals,
        status,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> Result<f64> {
        let mut f = 0.0;
        g.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..x.len() - 1 {
            let a = x[i + 1] - x[i] * x[i];
            let b = 1.0 - x[i];
            f += 100.0 * a * a + b * b;
            g[i] += -400.0 * a * x[i] - 2.0 * b;
            g[i + 1] += 200.0 * a;
        }
        Ok(f)
    }

    #[test]
    fn lbfgs_rosenbrock() {
        let opts = Options::new(1e-9, 2000);
        let m = lbfgs(rosenbrock, vec![-1.2, 1.0, -0.5, 0.8], &opts).unwrap();
        assert_eq!(m.status, Status::Converged);
        for v in &m.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", m.x);
        }
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn dense_bfgs_rosenbrock() {
        let opts = Options::new(1e-9, 2000);
        let m = bfgs_dense(rosenbrock, vec![-1.2, 1.0], &opts).unwrap();
        assert_eq!(m.status, Status::Converged);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_exact_in_few_steps() {
        let d = [1.0, 10.0, 100.0];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..3 {
                g[i] = d[i] * (x[i] - 1.0);
                v += 0.5 * d[i] * (x[i] - 1.0) * (x[i] - 1.0);
            }
            Ok(v)
        };
        let m = lbfgs(f, vec![0.0; 3], &Options::new(1e-12, 100)).unwrap();
        assert_eq!(m.status, Status::Converged);
        assert!(m.iterations < 30);
    }

    #[test]
    fn kink_reports_without_panicking() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = x[0].signum();
            Ok(x[0].abs())
        };
        let m = lbfgs(f, vec![1.0], &Options::new(1e-12, 200)).unwrap();
        assert!(m.value < 1e-6);
    }

    #[test]
    fn errors_propagate() {
        let f = |_: &[f64], _: &mut [f64]| Err(crate::Error::NonFiniteEnergy { cell: 3 });
        assert!(lbfgs(f, vec![0.0], &Options::new(1e-8, 10)).is_err());
    }
}
