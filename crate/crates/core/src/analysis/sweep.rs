use crate::cell::{minimize_cell, minimize_cell_from, CellSpec, GridField, SolverConfig};
use crate::density::{harden, MicroDensity};
use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::tensor::SymTensor;

/// Cell values of the hardened densities `f + δ|X_dev|^2` over a δ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T: Real> {
    pub x: SymTensor<T>,
    /// Strictly descending, ending at 0.
    pub deltas: Vec<T>,
    pub values: Vec<T>,
    pub gradient_norms: Vec<T>,
    /// Values non-increasing in the sweep order within `2 * tolerance`.
    pub monotone_ok: bool,
    /// Value at the smallest positive δ minus the value at δ = 0.
    pub limit_gap: T,
}

impl<T: Real> SweepTable<T> {
    /// `limit_gap` relative to the δ = 0 value.
    pub fn relative_limit_gap(&self) -> T {
        let v0 = *self.values.last().expect("non-empty sweep");
        self.limit_gap / v0.abs().max(T::epsilon())
    }
}

/// `{1, 0.1, 0.01, 1e-3, 1e-4, 0}`.
pub fn default_deltas<T: Real>() -> Vec<T> {
    [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 0.0].iter().map(|&d| T::lit(d)).collect()
}

fn validate_deltas<T: Real>(deltas: &[T]) -> Result<()> {
    if deltas.is_empty() {
        return Err(invalid("deltas", "must be non-empty"));
    }
    if deltas.iter().any(|d| !d.is_finite() || *d < T::zero()) {
        return Err(invalid("deltas", "entries must be finite and non-negative"));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("deltas", "must be strictly descending"));
    }
    if *deltas.last().unwrap() != T::zero() {
        return Err(invalid("deltas", "last entry must be 0"));
    }
    Ok(())
}

/// Solves the cell problem for each hardened density with the shared seed.
///
/// From the second δ on, the previous minimizer is also tried as a start and
/// the better of the two runs is kept. Since hardening only adds energy, the
/// previous minimizer is never worse than the previous value, so the table is
/// non-increasing up to solver tolerance.
pub fn delta_sweep<T: Real>(
    f: &MicroDensity<T>,
    x: &SymTensor<T>,
    deltas: &[T],
    spec: CellSpec,
    cfg: &SolverConfig<T>,
) -> Result<SweepTable<T>> {
    validate_deltas(deltas)?;
    let mut values = Vec::with_capacity(deltas.len());
    let mut gradient_norms = Vec::with_capacity(deltas.len());
    let mut prev: Option<GridField<T>> = None;
    for &delta in deltas {
        let g = harden(f, delta)?;
        let mut best = minimize_cell(&g, x, spec, cfg)?;
        if let Some(w) = &prev {
            let warm = minimize_cell_from(&g, x, spec, &cfg.with_restarts(1), Some(w))?;
            if warm.value < best.value {
                best = warm;
            }
        }
        values.push(best.value);
        gradient_norms.push(best.gradient_norm);
        prev = Some(best.minimizer);
    }
    let slack = T::lit(2.0) * cfg.tolerance;
    let monotone_ok = values.windows(2).all(|w| w[1] <= w[0] + slack);
    let limit_gap = if values.len() >= 2 {
        values[values.len() - 2] - values[values.len() - 1]
    } else {
        T::zero()
    };
    Ok(SweepTable {
        x: *x,
        deltas: deltas.to_vec(),
        values,
        gradient_norms,
        monotone_ok,
        limit_gap,
    })
}
