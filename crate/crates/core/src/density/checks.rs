//! Sampling-based checks on densities: growth bounds, asymptotic convexity
//! certificates, recession along rays and the trace-direction Lipschitz bound.

use super::{make_builtin, two_well_convex_envelope, MicroDensity};
use crate::error::{invalid, Error, Result};
use crate::sampling;
use crate::scalar::Real;
use crate::tensor::SymTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthBound {
    Lower,
    Upper,
}

#[derive(Debug, Clone)]
pub struct GrowthViolation<T: Real> {
    pub x: Vec<T>,
    pub strain: SymTensor<T>,
    pub bound: GrowthBound,
    /// Negative: how far the bound is missed.
    pub margin: T,
}

#[derive(Debug, Clone)]
pub struct GrowthReport<T: Real> {
    pub samples: usize,
    pub violations: Vec<GrowthViolation<T>>,
    /// Smallest `f - alpha (...)` seen, relative to `1 + |f|`.
    pub worst_lower_margin: T,
    /// Smallest `beta (... + 1) - f` seen, relative to `1 + |f|`.
    pub worst_upper_margin: T,
}

impl<T: Real> GrowthReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn round_off<T: Real>(scale: T) -> T {
    T::lit(64.0) * T::epsilon() * (T::one() + scale.abs())
}

/// Evaluates both Hencky growth inequalities on `samples` seeded pairs
/// `(x, X)` with `|X|` up to `1e3`.
pub fn check_growth<T: Real>(f: &MicroDensity<T>, samples: usize, seed: u64) -> GrowthReport<T> {
    let mut rng = sampling::rng(seed);
    let g = f.growth();
    let mut report = GrowthReport {
        samples,
        violations: Vec::new(),
        worst_lower_margin: T::infinity(),
        worst_upper_margin: T::infinity(),
    };
    for i in 0..samples {
        let x = sampling::point::<T>(&mut rng, f.dim());
        let strain = sampling::strain_sample::<T>(&mut rng, f.dim(), i, 1e3);
        let v = f.eval(&x, &strain);
        let lo = v - g.lower(&strain);
        let hi = g.upper(&strain) - v;
        let scale = T::one() + v.abs();
        report.worst_lower_margin = report.worst_lower_margin.min(lo / scale);
        report.worst_upper_margin = report.worst_upper_margin.min(hi / scale);
        for (margin, bound) in [(lo, GrowthBound::Lower), (hi, GrowthBound::Upper)] {
            if !(margin >= -round_off(v)) {
                report.violations.push(GrowthViolation {
                    x: x.clone(),
                    strain,
                    bound,
                    margin,
                });
            }
        }
    }
    report
}

/// Convex comparison density with `|f - c| <= eta (|X_dev| + (tr X)^2) + beta_eta`.
#[derive(Debug, Clone)]
pub struct AsymptoticConvexityCertificate<T: Real> {
    pub eta: T,
    pub beta_eta: T,
    pub comparison: MicroDensity<T>,
}

impl<T: Real> AsymptoticConvexityCertificate<T> {
    pub fn new(eta: T, beta_eta: T, comparison: MicroDensity<T>) -> Result<Self> {
        if !(eta > T::zero()) {
            return Err(invalid("eta", "must be positive"));
        }
        if !(beta_eta >= T::zero()) {
            return Err(invalid("beta_eta", "must be non-negative"));
        }
        if !comparison.is_convex() {
            return Err(Error::Precondition(
                "comparison density must be declared convex".into(),
            ));
        }
        Ok(Self {
            eta,
            beta_eta,
            comparison,
        })
    }

    /// Registered certificate for a catalog density. Convex entries compare
    /// with themselves; `two-well-dev` compares with its convex envelope,
    /// which differs from it by at most the well distance.
    pub fn for_builtin(name: &str, params: &[T], dim: usize, eta: T) -> Result<Self> {
        let f = make_builtin(name, params, dim)?;
        if f.is_convex() {
            return Self::new(eta, T::zero(), f);
        }
        match name {
            "two-well-dev" => {
                let d = params[0];
                Self::new(eta, d, two_well_convex_envelope(d, dim)?)
            }
            _ => Err(Error::UnknownDensity(name.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertificateReport<T: Real> {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `eta (...) + beta_eta - |f - c|`.
    pub worst_margin: T,
    pub witness: Option<(Vec<T>, SymTensor<T>)>,
}

pub fn check_certificate<T: Real>(
    f: &MicroDensity<T>,
    cert: &AsymptoticConvexityCertificate<T>,
    samples: usize,
    seed: u64,
) -> CertificateReport<T> {
    let mut rng = sampling::rng(seed);
    let mut report = CertificateReport {
        samples,
        violations: 0,
        worst_margin: T::infinity(),
        witness: None,
    };
    for i in 0..samples {
        let x = sampling::point::<T>(&mut rng, f.dim());
        let strain = sampling::strain_sample::<T>(&mut rng, f.dim(), i, 1e3);
        let a = f.eval(&x, &strain);
        let c = cert.comparison.eval(&x, &strain);
        let margin =
            cert.eta * strain.hencky_pair().growth_measure() + cert.beta_eta - (a - c).abs();
        if margin < report.worst_margin {
            report.worst_margin = margin;
            if margin < -round_off(a) {
                report.witness = Some((x.clone(), strain));
            }
        }
        if margin < -round_off(a) {
            report.violations += 1;
        }
    }
    report
}

/// Outcome of [`asymptotic_fn`].
#[derive(Debug, Clone)]
pub struct AsymptoticEstimate<T> {
    /// Estimate of `limsup f(x, tX)/t`; `+inf` for superlinear rays.
    pub value: T,
    /// `(t, f(x, tX)/t)` along the schedule.
    pub samples: Vec<(T, T)>,
    /// Aitken extrapolation of the last three quotients (NaN if unusable).
    pub extrapolated: T,
    /// `d log q / d log t` between the last two samples.
    pub tail_slope: T,
}

/// Growth factor per decade of `q` between `(t0, q0)` and `(t1, q1)`.
fn per_decade<T: Real>(t0: T, q0: T, t1: T, q1: T) -> T {
    let decades = (t1 / t0).log10();
    (q1 / q0).powf(T::one() / decades)
}

/// Estimates the recession value from quotients `q_i = g(t_i)/t_i`.
pub(crate) fn extrapolate_ray<T: Real>(samples: Vec<(T, T)>) -> AsymptoticEstimate<T> {
    let len = samples.len();
    let (t1, q1) = samples[len - 3];
    let (t2, q2) = samples[len - 2];
    let (t3, q3) = samples[len - 1];
    let tail_slope = if q2 > T::zero() && q3 > T::zero() {
        (q3 / q2).ln() / (t3 / t2).ln()
    } else {
        T::nan()
    };

    // superlinear: factor >= 2 per decade over both of the last two steps
    let two = T::lit(2.0);
    if q1 > T::zero()
        && q2 > T::zero()
        && per_decade(t1, q1, t2, q2) >= two
        && per_decade(t2, q2, t3, q3) >= two
    {
        return AsymptoticEstimate {
            value: T::infinity(),
            samples,
            extrapolated: T::infinity(),
            tail_slope,
        };
    }

    let d1 = q2 - q1;
    let d2 = q3 - q2;
    let denom = d2 - d1;
    let scale = q1.abs().max(q2.abs()).max(q3.abs());
    let extrapolated = if denom.abs() > T::lit(1e3) * T::epsilon() * (T::one() + scale)
        && (d1 * d2) > T::zero()
    {
        q3 - d2 * d2 / denom
    } else {
        T::nan()
    };
    // an extrapolation that moves further than the whole observed tail is noise
    let usable = extrapolated.is_finite() && (extrapolated - q3).abs() <= (q3 - q1).abs();
    let value = if usable { extrapolated.max(q3) } else { q3 };
    AsymptoticEstimate {
        value,
        samples,
        extrapolated,
        tail_slope,
    }
}

pub(crate) fn validate_schedule<T: Real>(t_schedule: &[T]) -> Result<()> {
    if t_schedule.len() < 3 {
        return Err(invalid("t_schedule", "need at least three points"));
    }
    if !(t_schedule[0] > T::zero()) || t_schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("t_schedule", "must be positive and strictly increasing"));
    }
    Ok(())
}

/// Recession value `limsup_{t -> inf} f(x, tX)/t` along the schedule.
pub fn asymptotic_fn<T: Real>(
    f: &MicroDensity<T>,
    x: &[T],
    strain: &SymTensor<T>,
    t_schedule: &[T],
) -> Result<AsymptoticEstimate<T>> {
    validate_schedule(t_schedule)?;
    let samples = t_schedule
        .iter()
        .map(|&t| (t, f.eval(x, &strain.scale(t)) / t))
        .collect();
    Ok(extrapolate_ray(samples))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceLipschitzCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub ok: bool,
}

/// `|f(P + rho/n I) - f(P)| <= 14 beta n sqrt(kappa) (sqrt|P| + M) |rho|`
/// for traceless `P` and `rho^2 <= kappa (|P| + M^2)`.
pub fn trace_lipschitz_check<T: Real>(
    f: &MicroDensity<T>,
    x: &[T],
    p: &SymTensor<T>,
    rho: T,
    kappa: T,
    m: T,
) -> Result<TraceLipschitzCheck<T>> {
    if !f.is_convex() {
        return Err(Error::Precondition(
            "density must be declared (symmetric rank-one) convex".into(),
        ));
    }
    if !(kappa >= T::one()) || !(m >= T::one()) {
        return Err(invalid("kappa/M", "both must be at least 1"));
    }
    let pn = p.norm();
    if p.trace().abs() > T::lit(1e-10) * (T::one() + pn) {
        return Err(Error::Precondition("P must be traceless".into()));
    }
    if rho * rho > kappa * (pn + m * m) {
        return Err(Error::Precondition(format!(
            "rho^2 = {:e} exceeds kappa (|P| + M^2) = {:e}",
            rho * rho,
            kappa * (pn + m * m)
        )));
    }
    let n = T::from_usize_lossy(p.dim());
    let lhs = (f.eval(x, &p.add_identity(rho / n)) - f.eval(x, p)).abs();
    let rhs = T::lit(14.0) * f.growth().beta * n * kappa.sqrt() * (pn.sqrt() + m) * rho.abs();
    Ok(TraceLipschitzCheck {
        lhs,
        rhs,
        ok: lhs <= rhs,
    })
}
