use super::require_traceless;
use crate::cell::{minimize_cell_from, CellSpec, GridField, SolverConfig};
use crate::density::{extrapolate_ray, validate_schedule, AsymptoticEstimate, MicroDensity};
use crate::error::{invalid, Error, Result};
use crate::sampling;
use crate::scalar::Real;
use crate::tensor::SymTensor;

/// `t_i = 2^i`, `i = 0..=20`.
pub fn default_t_schedule<T: Real>() -> Vec<T> {
    (0..=20).map(|i| T::lit(2f64.powi(i))).collect()
}

/// Recession value of the cell estimate along the ray `tP`.
///
/// Each `t` is warm-started from the previous minimizer rescaled by the
/// ratio of consecutive `t`.
pub fn recession_of_hom<T: Real>(
    f: &MicroDensity<T>,
    p: &SymTensor<T>,
    t_schedule: &[T],
    spec: CellSpec,
    cfg: &SolverConfig<T>,
) -> Result<AsymptoticEstimate<T>> {
    require_traceless(p, "P")?;
    validate_schedule(t_schedule)?;
    let mut samples = Vec::with_capacity(t_schedule.len());
    let mut prev: Option<(T, GridField<T>)> = None;
    for &t in t_schedule {
        let warm = prev.as_ref().map(|(tp, u)| u.scaled(t / *tp));
        let r = minimize_cell_from(f, &p.scale(t), spec, cfg, warm.as_ref())?;
        samples.push((t, r.value / t));
        prev = Some((t, r.minimizer));
    }
    Ok(extrapolate_ray(samples))
}

/// Window sizes `k`: `|P - P0| < 1/k`, `|ρ| < 1/k`, `t > k`.
pub const ENVELOPE_WINDOWS: [usize; 4] = [4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvelopeMode {
    /// Restriction to traceless strains (`ρ = 0`).
    #[default]
    Deviatoric,
    /// Also perturbs the trace by `ρ/n I`.
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeOptions {
    pub samples: usize,
    pub seed: u64,
    pub mode: EnvelopeMode,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            seed: 0,
            mode: EnvelopeMode::Deviatoric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeWindow<T> {
    pub k: usize,
    pub lower: T,
    pub upper: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes<T> {
    /// Inf over the finest window.
    pub lower: T,
    /// Sup over the finest window.
    pub upper: T,
    /// Estimate of `h_f(x0, P0)`: window infima extrapolated to `k -> inf`.
    pub limit_lower: T,
    /// Estimate of `-h_{-f}(x0, P0)`.
    pub limit_upper: T,
    /// Raw inf/sup over each window.
    pub windows: Vec<EnvelopeWindow<T>>,
}

impl<T: Real> Envelopes<T> {
    pub fn gap(&self) -> T {
        self.upper - self.lower
    }

    pub fn limit_gap(&self) -> T {
        self.limit_upper - self.limit_lower
    }

    pub fn finest(&self) -> &EnvelopeWindow<T> {
        self.windows.last().expect("windows are non-empty")
    }
}

fn require_rank_one<T: Real>(p0: &SymTensor<T>) -> Result<()> {
    require_traceless(p0, "P0")?;
    if p0.norm() == T::zero() {
        return Err(invalid("P0", "must be non-zero"));
    }
    if p0.dim() == 3 {
        let m = p0.to_full();
        let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6]);
        let scale = p0.norm().powi(3);
        if det.abs() > T::lit(1e-10) * scale {
            return Err(invalid("P0", "must be a symmetric rank-one direction a ⊙ b with a ⊥ b"));
        }
    }
    Ok(())
}

/// Inner and outer recession envelopes of an `x`-independent density at a
/// rank-one traceless `P0`.
///
/// For each window `k` the quotients `f(t(P + ρ/n I))/t` are sampled at
/// `P = P0 ± (1/k) P0/|P0|` and at `samples` random traceless directions on
/// the window boundary, for every schedule entry `t > k`. `lower`/`upper`
/// are the extrema over the finest window; the `limit_*` fields extrapolate
/// the window extrema linearly in `1/k` from the two finest windows, clamped
/// to the finest bracket.
pub fn directional_envelopes<T: Real>(
    f: &MicroDensity<T>,
    p0: &SymTensor<T>,
    t_schedule: &[T],
    opts: &EnvelopeOptions,
) -> Result<Envelopes<T>> {
    if !f.is_x_independent() {
        return Err(Error::Precondition("envelopes need an x-independent density".into()));
    }
    if p0.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: p0.dim(),
        });
    }
    require_rank_one(p0)?;
    validate_schedule(t_schedule)?;
    let n = f.dim();
    let x0 = vec![T::zero(); n];
    let id = SymTensor::identity(n)?;
    let p_unit = p0.scale(p0.norm().recip());
    let mut rng = sampling::rng(opts.seed);
    let mut windows = Vec::with_capacity(ENVELOPE_WINDOWS.len());
    for &k in &ENVELOPE_WINDOWS {
        let kk = T::from_usize_lossy(k);
        let radius = kk.recip() * (T::one() - T::lit(1e-12));
        let ts: Vec<T> = t_schedule.iter().copied().filter(|&t| t > kk).collect();
        if ts.is_empty() {
            return Err(invalid("t_schedule", format!("no entry exceeds window k = {k}")));
        }
        let mut dirs = vec![p_unit, -p_unit];
        dirs.extend((0..opts.samples).map(|_| sampling::unit_traceless::<T>(&mut rng, n)));
        let rhos: Vec<T> = match opts.mode {
            EnvelopeMode::Deviatoric => vec![T::zero()],
            EnvelopeMode::Full => vec![-radius, T::zero(), radius],
        };
        let (mut lo, mut hi, mut count) = (T::infinity(), -T::infinity(), 0);
        for d in &dirs {
            let p = *p0 + d.scale(radius);
            for &rho in &rhos {
                let s = p + id.scale(rho / T::from_usize_lossy(n));
                for &t in &ts {
                    let q = f.eval(&x0, &s.scale(t)) / t;
                    lo = lo.min(q);
                    hi = hi.max(q);
                    count += 1;
                }
            }
        }
        windows.push(EnvelopeWindow {
            k,
            lower: lo,
            upper: hi,
            evaluations: count,
        });
    }
    let a = windows[windows.len() - 2];
    let b = windows[windows.len() - 1];
    let ratio = T::from_usize_lossy(b.k) / T::from_usize_lossy(a.k);
    let extrap = |fine: T, coarse: T| (ratio * fine - coarse) / (ratio - T::one());
    let lo = extrap(b.lower, a.lower).max(b.lower);
    let hi = extrap(b.upper, a.upper).min(b.upper);
    // the extrapolants may cross when both brackets have already collapsed
    let (limit_lower, limit_upper) = if lo <= hi { (lo, hi) } else {
        let mid = (lo + hi) * T::lit(0.5);
        (mid, mid)
    };
    Ok(Envelopes {
        lower: b.lower,
        upper: b.upper,
        limit_lower,
        limit_upper,
        windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::make_builtin;
    use crate::tensor::sym_dyad;

    fn p0(n: usize) -> SymTensor<f64> {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = 1.0;
        b[1] = 1.0;
        sym_dyad(&a, &b).unwrap()
    }

    #[test]
    fn isotropic_envelopes_are_exact() {
        let f = make_builtin::<f64>("isotropic-convex", &[], 2).unwrap();
        let e = directional_envelopes(&f, &p0(2), &default_t_schedule(), &EnvelopeOptions::default()).unwrap();
        let want = 0.5f64.sqrt();
        assert!((e.limit_lower - want).abs() < 1e-3 && (e.limit_upper - want).abs() < 1e-3, "{e:?}");
        assert!(e.lower <= want && want <= e.upper);
        for w in &e.windows {
            assert!(w.upper - w.lower >= -1e-12);
            assert!(w.lower <= want && want <= w.upper);
        }
    }

    #[test]
    fn smooth_area_envelopes() {
        let f = make_builtin::<f64>("smooth-area-type", &[], 3).unwrap();
        let e = directional_envelopes(&f, &p0(3), &default_t_schedule(), &EnvelopeOptions::default()).unwrap();
        let want = 0.5f64.sqrt();
        assert!((e.limit_upper - want).abs() <= 0.01 * want && (e.limit_lower - want).abs() <= 0.01 * want);
        assert!(e.limit_gap() <= 0.01 * e.limit_upper);
        // the finest window itself spans |P0| +- 1/32
        let w = 1.0 / 32.0;
        assert!(e.lower >= want - w - 1e-9 && e.upper <= want + w + 1e-3);
    }

    #[test]
    fn rejects_bad_directions() {
        let f = make_builtin::<f64>("isotropic-convex", &[], 3).unwrap();
        let t = default_t_schedule();
        let o = EnvelopeOptions::default();
        let not_rank_one = SymTensor::from_upper(3, &[1.0, 0.0, 0.0, 1.0, 0.0, -2.0]).unwrap();
        assert!(directional_envelopes(&f, &not_rank_one, &t, &o).is_err());
        assert!(directional_envelopes(&f, &SymTensor::identity(3).unwrap(), &t, &o).is_err());
        let lam = make_builtin::<f64>("laminate-two-phase", &[1.0, 2.0], 3).unwrap();
        assert!(directional_envelopes(&lam, &p0(3), &t, &o).is_err());
    }

    #[test]
    fn recession_isotropic() {
        let f = make_builtin::<f64>("isotropic-convex", &[], 2).unwrap();
        let p = SymTensor::diag(&[1.0, -1.0]).unwrap();
        let spec = CellSpec::new(2, 1, 4).unwrap();
        let ts = [1.0, 10.0, 100.0, 1000.0];
        let cfg = SolverConfig::default();
        let a = recession_of_hom(&f, &p, &ts, spec, &cfg).unwrap();
        assert!((a.value - 2f64.sqrt()).abs() < 1e-3);
        let b = recession_of_hom(&f, &p.scale(2.0), &ts, spec, &cfg).unwrap();
        assert!((b.value - 2.0 * a.value).abs() <= 1e-3 * b.value);
        assert!(recession_of_hom(&f, &SymTensor::identity(2).unwrap(), &ts, spec, &cfg).is_err());
    }
}
