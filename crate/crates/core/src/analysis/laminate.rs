use crate::density::MicroDensity;
use crate::error::{invalid, Error, Result};
use crate::lbfgs::{bfgs_dense, Options};
use crate::sampling;
use crate::scalar::Real;
use crate::tensor::{sym_dyad, SymTensor};
use rand::Rng;
use rand_distr::StandardNormal;

const RESTARTS: usize = 32;
const SEED: u64 = 0x1a3_1a7e;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T: Real> {
    pub x: SymTensor<T>,
    pub value: T,
    pub profile_resolution: usize,
}

/// One-dimensional cell problem for a layered density: profiles `u(x_1)`
/// with `u(0) = u(1) = 0`, piecewise linear on `resolution` intervals.
struct Profile<'a, T: Real> {
    f: &'a MicroDensity<T>,
    x: SymTensor<T>,
    res: usize,
    e: Vec<Vec<T>>,
    e1: Vec<T>,
    mids: Vec<Vec<T>>,
}

impl<'a, T: Real> Profile<'a, T> {
    fn new(f: &'a MicroDensity<T>, x: SymTensor<T>, res: usize) -> Self {
        let n = f.dim();
        let unit = |i: usize| -> Vec<T> { (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect() };
        let mids = (0..res)
            .map(|i| {
                let mut p = vec![T::zero(); n];
                p[0] = (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(res);
                p
            })
            .collect();
        Self {
            f,
            x,
            res,
            e: (0..n).map(unit).collect(),
            e1: unit(0),
            mids,
        }
    }

    fn slope(&self, u: &[T], i: usize) -> Vec<T> {
        let n = self.e.len();
        let r = T::from_usize_lossy(self.res);
        (0..n)
            .map(|c| {
                let hi = if i + 1 < self.res { u[i * n + c] } else { T::zero() };
                let lo = if i > 0 { u[(i - 1) * n + c] } else { T::zero() };
                (hi - lo) * r
            })
            .collect()
    }

    fn strain(&self, u: &[T], i: usize) -> SymTensor<T> {
        let du = self.slope(u, i);
        self.x + sym_dyad(&du, &self.e1).expect("matching dims")
    }

    fn exact(&self, u: &[T]) -> T {
        let s = (0..self.res).fold(T::zero(), |a, i| a + self.f.eval(&self.mids[i], &self.strain(u, i)));
        s / T::from_usize_lossy(self.res)
    }

    fn value_grad(&self, u: &[T], g: &mut [T], eps: T) -> T {
        let n = self.e.len();
        g.fill(T::zero());
        let mut sum = T::zero();
        for i in 0..self.res {
            let (v, gs) = self.f.eval_smoothed_gradient(&self.mids[i], &self.strain(u, i), eps);
            sum += v;
            // d/du' of <G, u' ⊙ e1> is the first column of G
            for c in 0..n {
                let col = gs.get(c, 0);
                if i + 1 < self.res {
                    g[i * n + c] += col;
                }
                if i > 0 {
                    g[(i - 1) * n + c] -= col;
                }
            }
        }
        sum / T::from_usize_lossy(self.res)
    }
}

/// Brute-force cell value of a layered density at `X` over 1D profiles,
/// with a fixed set of 32 starts (the zero profile first).
pub fn laminate_oracle<T: Real>(f: &MicroDensity<T>, x: &SymTensor<T>, resolution: usize) -> Result<OracleResult<T>> {
    if f.layering().is_none() {
        return Err(Error::Precondition(format!("density '{}' is not layered", f.name())));
    }
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.dim(),
        });
    }
    if resolution < 2 {
        return Err(invalid("resolution", "need at least two intervals"));
    }
    let prof = Profile::new(f, *x, resolution);
    let n = f.dim();
    let len = (resolution - 1) * n;
    let eps = T::lit(1e-8);
    let opts = Options::new(T::lit(1e-10), 2000);
    let amp = T::lit(0.2) * x.norm().max(T::one()) / T::from_usize_lossy(resolution).sqrt();
    let mut rng = sampling::rng(SEED);
    let mut best = prof.exact(&vec![T::zero(); len]);
    for r in 0..RESTARTS {
        let start: Vec<T> = if r == 0 {
            vec![T::zero(); len]
        } else {
            (0..len)
                .map(|_| amp * T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect()
        };
        let run = bfgs_dense(|u, g| Ok(prof.value_grad(u, g, eps)), start, &opts)?;
        best = best.min(prof.exact(&run.x));
    }
    Ok(OracleResult {
        x: *x,
        value: best,
        profile_resolution: resolution,
    })
}
