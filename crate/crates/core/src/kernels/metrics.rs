//! Strict and area-strict distances between grid fields.

use crate::cell::{check_same_spec, GridField, StrainOperator};
use crate::error::Result;
use crate::scalar::Real;
use crate::tensor::area_integrand;

/// `|u - v|_{L^1} + | |Eu|(Ω) - |Ev|(Ω) | + |div u - div v|_{L^2}`.
pub fn strict_distance<T: Real>(u: &GridField<T>, v: &GridField<T>) -> Result<T> {
    check_same_spec(u.spec(), v.spec())?;
    let spec = *u.spec();
    let n = spec.dim;
    let op = StrainOperator::new(spec);
    let vol = spec.cell_volume::<T>();
    let (mut l1, mut mu, mut mv, mut div2) = (T::zero(), T::zero(), T::zero(), T::zero());
    for c in 0..spec.num_cells() {
        let a = u.centroid_value(c);
        let b = v.centroid_value(c);
        l1 += (0..n).fold(T::zero(), |s, i| s + (a[i] - b[i]) * (a[i] - b[i])).sqrt();
        let eu = op.cell_strain(u.values(), c);
        let ev = op.cell_strain(v.values(), c);
        mu += eu.norm();
        mv += ev.norm();
        let dd = eu.trace() - ev.trace();
        div2 += dd * dd;
    }
    Ok(vol * l1 + (vol * (mu - mv)).abs() + (vol * div2).sqrt())
}

/// `|∫<Eu> - ∫<Ev>| + |∫<(Eu)_dev> - ∫<(Ev)_dev>|`.
pub fn area_strict_gap<T: Real>(u: &GridField<T>, v: &GridField<T>) -> Result<T> {
    check_same_spec(u.spec(), v.spec())?;
    let spec = *u.spec();
    let op = StrainOperator::new(spec);
    let vol = spec.cell_volume::<T>();
    let (mut full, mut dev) = (T::zero(), T::zero());
    for c in 0..spec.num_cells() {
        let eu = op.cell_strain(u.values(), c);
        let ev = op.cell_strain(v.values(), c);
        full += area_integrand(&eu) - area_integrand(&ev);
        dev += area_integrand(&eu.dev()) - area_integrand(&ev.dev());
    }
    Ok(vol * (full.abs() + dev.abs()))
}
