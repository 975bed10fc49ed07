//! Multi-start quasi-Newton minimization of the discrete cell problem.

use super::energy::CellEnergy;
use super::grid::{Boundary, CellSpec, GridField};
use crate::density::MicroDensity;
use crate::error::{invalid, Result};
use crate::lbfgs::{self, Status};
use crate::sampling;
use crate::scalar::Real;
use crate::tensor::SymTensor;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Stop when the scaled nodal gradient (a stress residual) drops below.
    pub tolerance: T,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Kink smoothing used inside the minimizer only.
    pub smoothing: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            tolerance: T::lit(1e-7),
            max_iters: 2000,
            restarts: 1,
            seed: 0,
            smoothing: T::lit(1e-8),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if self.restarts < 1 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        if !(self.smoothing >= T::zero()) {
            return Err(invalid("smoothing", "must be non-negative"));
        }
        Ok(())
    }

    pub fn with_restarts(mut self, r: usize) -> Self {
        self.restarts = r;
        self
    }

    pub fn with_seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }

    pub fn with_tolerance(mut self, t: T) -> Self {
        self.tolerance = t;
        self
    }
}

/// Outcome of one cell minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct HomResult<T: Real> {
    pub x: SymTensor<T>,
    pub spec: CellSpec,
    /// Exact-density energy average at the reported minimizer.
    pub value: T,
    /// Energy of the starting field (zero, or the warm start).
    pub start_value: T,
    pub restarts_used: usize,
    pub best_start: usize,
    pub gradient_norm: T,
    pub status: Status,
    pub iterations: usize,
    pub energy_history: Vec<T>,
    pub minimizer: GridField<T>,
}

impl<T: Real> HomResult<T> {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// splitmix64 step, used to derive independent per-start seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gaussian node noise of amplitude `0.1 max(|X|, 1) h`, one Jacobi
/// smoothing pass, boundary zeroed.
pub fn smooth_noise<T: Real>(spec: CellSpec, x: &SymTensor<T>, seed: u64) -> GridField<T> {
    let mut rng = sampling::rng(seed);
    let amp = T::lit(0.1) * x.norm().max(T::one()) * spec.h::<T>();
    let n = spec.dim;
    let raw: Vec<T> = (0..spec.num_nodes() * n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            amp * T::lit(z)
        })
        .collect();
    let np = spec.nodes_per_axis();
    let mut out = raw.clone();
    let half = T::lit(0.5);
    let inv = T::one() / T::from_usize_lossy(2 * n);
    for i in 0..spec.num_nodes() {
        let c = spec.node_coords(i);
        let mut acc = [T::zero(); 3];
        for d in 0..n {
            for step in [1, np - 1] {
                let mut cc = c;
                let v = cc[d] + step;
                cc[d] = match spec.boundary {
                    Boundary::Periodic => v % np,
                    // outside neighbours count as zero
                    Boundary::Dirichlet if step == 1 && c[d] + 1 >= np => continue,
                    Boundary::Dirichlet if step != 1 && c[d] == 0 => continue,
                    Boundary::Dirichlet => v % np,
                };
                let j = spec.node_index(&cc);
                for (a, r) in acc.iter_mut().zip(&raw[j * n..j * n + n]) {
                    *a += *r;
                }
            }
        }
        for comp in 0..n {
            out[i * n + comp] = half * raw[i * n + comp] + half * inv * acc[comp];
        }
    }
    let mut f = GridField::from_values(spec, out).expect("finite noise");
    f.zero_boundary();
    f
}

fn run_from<T: Real>(
    energy: &CellEnergy<'_, T>,
    start: Vec<T>,
    opts: &lbfgs::Options<T>,
) -> Result<(Vec<T>, T, T, lbfgs::Minimum<T>)> {
    let start_exact = energy.exact(&start)?;
    let run = lbfgs::lbfgs(|u, g| energy.value_grad(u, g), start.clone(), opts)?;
    let end_exact = energy.exact(&run.x)?;
    // never report worse than the start
    let (u, v) = if end_exact <= start_exact {
        (run.x.clone(), end_exact)
    } else {
        (start, start_exact)
    };
    Ok((u, v, start_exact, run))
}

/// Minimizes the cell energy from `phi = 0` plus `restarts - 1` noise starts.
pub fn minimize_cell<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    spec: CellSpec,
    cfg: &SolverConfig<T>,
) -> Result<HomResult<T>> {
    minimize_cell_from(f, x, spec, cfg, None)
}

/// As [`minimize_cell`], with the first start replaced by `warm` if given.
pub fn minimize_cell_from<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    spec: CellSpec,
    cfg: &SolverConfig<T>,
    warm: Option<&GridField<T>>,
) -> Result<HomResult<T>> {
    cfg.validate()?;
    if let Some(w) = warm {
        super::strain::check_same_spec(w.spec(), &spec)?;
    }
    let energy = CellEnergy::new(f, *x, spec, cfg.smoothing)?;
    let scale = T::from_usize_lossy(spec.num_cells()) * spec.h::<T>();
    let opts = lbfgs::Options::new(cfg.tolerance, cfg.max_iters).with_grad_scale(scale);

    let mut best: Option<(usize, Vec<T>, T, T, lbfgs::Minimum<T>)> = None;
    for r in 0..cfg.restarts {
        let start = match (r, warm) {
            (0, Some(w)) => {
                let mut w = w.clone();
                w.zero_boundary();
                w.into_values()
            }
            (0, None) => vec![T::zero(); spec.num_nodes() * spec.dim],
            _ => smooth_noise(spec, x, derive_seed(cfg.seed, r as u64)).into_values(),
        };
        let (u, v, s, run) = run_from(&energy, start, &opts)?;
        let s0 = best.as_ref().map_or(s, |b| b.3);
        if best.as_ref().is_none_or(|b| v < b.2) {
            best = Some((r, u, v, s0, run));
        }
    }
    let (best_start, u, value, start_value, run) = best.expect("at least one start");
    let mut g = vec![T::zero(); u.len()];
    energy.value_grad(&u, &mut g)?;
    let gradient_norm = g.iter().fold(T::zero(), |m, v| m.max(v.abs())) * scale;
    let status = if gradient_norm <= cfg.tolerance {
        Status::Converged
    } else {
        run.status
    };
    Ok(HomResult {
        x: *x,
        spec,
        value,
        start_value,
        restarts_used: cfg.restarts,
        best_start,
        gradient_norm,
        status,
        iterations: run.iterations,
        energy_history: run.history,
        minimizer: GridField::from_values(spec, u)?,
    })
}

/// `min_k` of cell minimizations at fixed resolution `m`.
#[derive(Debug, Clone)]
pub struct Homogenized<T: Real> {
    pub estimate: T,
    pub per_k: Vec<HomResult<T>>,
}

pub fn homogenize<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    k_list: &[usize],
    m: usize,
    boundary: Boundary,
    cfg: &SolverConfig<T>,
) -> Result<Homogenized<T>> {
    if k_list.is_empty() {
        return Err(invalid("k_list", "must be non-empty"));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("k_list", "must be strictly ascending"));
    }
    let mut per_k = Vec::with_capacity(k_list.len());
    let mut estimate = T::infinity();
    for &k in k_list {
        let spec = CellSpec::with_boundary(f.dim(), k, m, boundary)?;
        let r = minimize_cell(f, x, spec, cfg)?;
        estimate = estimate.min(r.value);
        per_k.push(r);
    }
    Ok(Homogenized { estimate, per_k })
}
