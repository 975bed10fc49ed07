//! Experiment drivers built on the cell solver.

mod convexity;
mod laminate;
mod recession;
mod sweep;

pub use convexity::{bkk_check, rank_one_scan, rank_one_scan_fn, BkkCheck, RankOneViolation, ScanOptions};
pub use laminate::{laminate_oracle, OracleResult};
pub use recession::{
    default_t_schedule, directional_envelopes, recession_of_hom, EnvelopeMode, EnvelopeOptions,
    EnvelopeWindow, Envelopes, ENVELOPE_WINDOWS,
};
pub use sweep::{default_deltas, delta_sweep, SweepTable};

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::tensor::SymTensor;

fn require_traceless<T: Real>(p: &SymTensor<T>, name: &str) -> Result<()> {
    if p.trace().abs() > T::lit(1e-12) * p.norm().max(T::one()) {
        return Err(invalid(name, "must be traceless"));
    }
    Ok(())
}
