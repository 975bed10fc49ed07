use crate::density::MicroDensity;
use crate::error::{invalid, Result};
use crate::sampling::{self, SampleRng};
use crate::scalar::Real;
use crate::tensor::{sym_dyad, SymTensor};
use rand::Rng;
use rand_distr::StandardNormal;

/// A failed midpoint test `f(X) <= (f(X + t a⊙b) + f(X - t a⊙b)) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneViolation<T: Real> {
    pub point: Vec<T>,
    pub x: SymTensor<T>,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub t: T,
    /// `f(X) - midpoint average`, positive.
    pub margin: T,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions<T> {
    pub samples: usize,
    pub seed: u64,
    /// Base points have `|X| <= radius`, steps `t <= radius`.
    pub radius: T,
}

fn unit_vector<T: Real>(rng: &mut SampleRng, n: usize) -> Vec<T> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.iter().map(|x| T::lit(x / norm)).collect();
        }
    }
}

/// Midpoint scan of `g(point, X)` along random symmetric rank-one lines.
pub fn rank_one_scan_fn<T, G>(g: G, dim: usize, opts: &ScanOptions<T>) -> Result<Vec<RankOneViolation<T>>>
where
    T: Real,
    G: Fn(&[T], &SymTensor<T>) -> T,
{
    if opts.samples < 1 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if !(opts.radius > T::zero()) {
        return Err(invalid("radius", "must be positive"));
    }
    let mut rng = sampling::rng(opts.seed);
    let mut out = Vec::new();
    for _ in 0..opts.samples {
        let point = sampling::point::<T>(&mut rng, dim);
        let x = sampling::unit_tensor::<T>(&mut rng, dim).scale(opts.radius * T::lit(rng.random::<f64>()));
        let a = unit_vector::<T>(&mut rng, dim);
        let b = unit_vector::<T>(&mut rng, dim);
        let t = opts.radius * T::lit(rng.random::<f64>());
        let d = sym_dyad(&a, &b)?.scale(t);
        let mid = g(&point, &x);
        let avg = (g(&point, &(x + d)) + g(&point, &(x - d))) * T::lit(0.5);
        let margin = mid - avg;
        let tol = T::lit(64.0) * T::epsilon() * (T::one() + mid.abs() + avg.abs());
        if margin > tol {
            out.push(RankOneViolation { point, x, a, b, t, margin });
        }
    }
    Ok(out)
}

/// [`rank_one_scan_fn`] on a density with `|X|, t <= 2`.
pub fn rank_one_scan<T: Real>(f: &MicroDensity<T>, samples: usize, seed: u64) -> Result<Vec<RankOneViolation<T>>> {
    let opts = ScanOptions {
        samples,
        seed,
        radius: T::lit(2.0),
    };
    rank_one_scan_fn(|p, x| f.eval(p, x), f.dim(), &opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BkkCheck<T> {
    pub lip_est: T,
    pub bound: T,
    pub ok: bool,
}

fn ball_point<T: Real>(rng: &mut SampleRng, center: &[T], r: T) -> Vec<T> {
    let d = center.len();
    let dir = unit_vector::<T>(rng, d);
    let rad = r * T::lit(rng.random::<f64>().powf(1.0 / d as f64));
    center.iter().zip(&dir).map(|(&c, &v)| c + rad * v).collect()
}

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y)).sqrt()
}

/// Compares the observed Lipschitz constant of `f` on `B_r(X0)` with
/// `sqrt(mn) osc(f, B_2r(X0)) / r` for a separately convex `f` on `m×n`
/// matrices (row-major `x0`).
pub fn bkk_check<T, F>(f: F, rows: usize, cols: usize, x0: &[T], r: T, probes: usize, seed: u64) -> Result<BkkCheck<T>>
where
    T: Real,
    F: Fn(&[T]) -> T,
{
    let dim = rows * cols;
    if dim == 0 || x0.len() != dim {
        return Err(invalid("X0", format!("expected {dim} entries")));
    }
    if !(r > T::zero()) || probes < 2 {
        return Err(invalid("probes", "need r > 0 and at least two probes"));
    }
    let mut rng = sampling::rng(seed);
    // inner probes, each paired with a close neighbour along the
    // finite-difference gradient for a local slope
    let h = r * T::lit(1e-4);
    let mut inner: Vec<Vec<T>> = Vec::with_capacity(2 * probes);
    for _ in 0..probes {
        let p = ball_point(&mut rng, x0, r * T::lit(0.999));
        let mut grad = vec![T::zero(); dim];
        for (i, gi) in grad.iter_mut().enumerate() {
            let mut a = p.clone();
            let mut b = p.clone();
            a[i] += h;
            b[i] -= h;
            *gi = (f(&a) - f(&b)) / (h + h);
        }
        let gn = grad.iter().fold(T::zero(), |s, &v| s + v * v).sqrt();
        let step = if gn > T::zero() {
            grad.iter().map(|&v| v / gn).collect()
        } else {
            unit_vector::<T>(&mut rng, dim)
        };
        let q: Vec<T> = p.iter().zip(&step).map(|(&a, &s)| a + s * h).collect();
        inner.push(p);
        inner.push(q);
    }
    let vals: Vec<T> = inner.iter().map(|p| f(p)).collect();
    let mut lip = T::zero();
    for i in 0..inner.len() {
        for j in i + 1..inner.len() {
            let d = dist(&inner[i], &inner[j]);
            if d > T::zero() {
                lip = lip.max((vals[i] - vals[j]).abs() / d);
            }
        }
    }
    let (mut lo, mut hi) = (f(x0), f(x0));
    let mut outer = vec![];
    for _ in 0..probes {
        outer.push(ball_point(&mut rng, x0, r + r));
    }
    for i in 0..dim {
        for s in [T::one(), -T::one()] {
            let mut p = x0.to_vec();
            p[i] += s * (r + r);
            outer.push(p);
        }
    }
    for p in outer.iter().chain(&inner) {
        let v = f(p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let bound = T::from_usize_lossy(dim).sqrt() * (hi - lo) / r;
    Ok(BkkCheck {
        lip_est: lip,
        bound,
        ok: lip <= bound + T::lit(1e-9),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::make_builtin;

    #[test]
    fn convex_catalog_is_clean() {
        for name in ["isotropic-convex", "smooth-area-type"] {
            let f = make_builtin::<f64>(name, &[], 2).unwrap();
            assert!(rank_one_scan(&f, 20_000, 1).unwrap().is_empty(), "{name}");
        }
        let lam = make_builtin::<f64>("laminate-two-phase", &[1.0, 5.0], 3).unwrap();
        assert!(rank_one_scan(&lam, 5_000, 2).unwrap().is_empty());
    }

    #[test]
    fn two_well_has_witness() {
        let f = make_builtin::<f64>("two-well-dev", &[1.0], 2).unwrap();
        let v = rank_one_scan(&f, 5_000, 7).unwrap();
        assert!(!v.is_empty());
        let w = &v[0];
        let d = sym_dyad(&w.a, &w.b).unwrap().scale(w.t);
        let direct = f.eval(&w.point, &w.x) - 0.5 * (f.eval(&w.point, &(w.x + d)) + f.eval(&w.point, &(w.x - d)));
        assert!((direct - w.margin).abs() < 1e-12 && direct > 0.0);
    }

    #[test]
    fn bkk_linear_and_norm() {
        let slope = [3.0, -4.0, 0.0, 0.0];
        let lin = |x: &[f64]| x.iter().zip(&slope).map(|(a, b)| a * b).sum::<f64>();
        let c = bkk_check(lin, 2, 2, &[0.1, 0.2, 0.3, 0.4], 0.5, 32, 1).unwrap();
        assert!((c.lip_est - 5.0).abs() < 1e-6, "{c:?}");
        assert!(c.ok);
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = bkk_check(norm, 2, 2, &[0.0; 4], 1.0, 32, 2).unwrap();
        assert!(c.lip_est <= 1.0 + 1e-9 && c.ok);
        assert!(c.bound >= 2.0 * 2.0 - 1e-12);
    }

    #[test]
    fn bkk_random_quadratics() {
        let mut rng = sampling::rng(9);
        for i in 0..1000 {
            let l: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = move |x: &[f64]| {
                let y0 = l[0] * x[0] + l[1] * x[1] + l[2] * x[2];
                let y1 = l[3] * x[3] + l[4] * x[4] + l[5] * x[5];
                y0 * y0 + y1 * y1 + x[0] - x[5]
            };
            let x0: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c = bkk_check(q, 2, 3, &x0, 0.3, 16, i).unwrap();
            assert!(c.ok, "{i}: {c:?}");
        }
    }
}
