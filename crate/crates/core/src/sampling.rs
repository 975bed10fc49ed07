//! Seeded strain and point samplers shared by the property checks.

use crate::scalar::Real;
use crate::tensor::SymTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal coefficients in the Frobenius-orthonormal basis.
pub fn gaussian_tensor<T: Real>(rng: &mut SampleRng, dim: usize) -> SymTensor<T> {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = SymTensor::zeros_unchecked(dim);
    for i in 0..dim {
        for j in i..dim {
            let z: f64 = rng.sample(StandardNormal);
            let v = if i == j { z } else { z * inv_sqrt2 };
            t.set(i, j, T::lit(v));
        }
    }
    t
}

pub fn unit_tensor<T: Real>(rng: &mut SampleRng, dim: usize) -> SymTensor<T> {
    loop {
        let t = gaussian_tensor::<T>(rng, dim);
        let n = t.norm();
        if n > T::lit(1e-8) {
            return t.scale(T::one() / n);
        }
    }
}

pub fn unit_traceless<T: Real>(rng: &mut SampleRng, dim: usize) -> SymTensor<T> {
    loop {
        let t = gaussian_tensor::<T>(rng, dim).dev();
        let n = t.norm();
        if n > T::lit(1e-8) {
            return t.scale(T::one() / n);
        }
    }
}

pub fn point<T: Real>(rng: &mut SampleRng, dim: usize) -> Vec<T> {
    (0..dim).map(|_| T::lit(rng.random::<f64>())).collect()
}

/// Strain panel spanning `|X|` from 0 to `max_norm` on a log scale, mixing
/// generic, purely volumetric and purely deviatoric directions. The first
/// entries are the fixed probes `0`, `I`, `-I`.
pub fn strain_sample<T: Real>(rng: &mut SampleRng, dim: usize, index: usize, max_norm: f64) -> SymTensor<T> {
    let id = SymTensor::<T>::identity(dim).expect("dim validated");
    match index {
        0 => return SymTensor::zeros_unchecked(dim),
        1 => return id,
        2 => return -id,
        _ => {}
    }
    let lo = (1e-3f64).ln();
    let hi = max_norm.max(1e-3).ln();
    let mag = T::lit(rng.random_range(lo..=hi).exp());
    let dir = match index % 4 {
        0 => id.scale(T::one() / T::from_usize_lossy(dim).sqrt()),
        1 => unit_traceless(rng, dim),
        _ => unit_tensor(rng, dim),
    };
    let sign = if rng.random::<bool>() { T::one() } else { -T::one() };
    dir.scale(mag * sign)
}

