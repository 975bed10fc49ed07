use hencky_core::analysis::laminate_oracle;
use hencky_core::cell::{minimize_cell, Boundary, CellSpec, SolverConfig};
use hencky_core::density::make_builtin;
use hencky_core::{sym_dyad, MicroDensity64, SymTensor64};

/// Exact laminate value: piecewise constant strains `X + (1-θ) e1⊙c` and
/// `X - θ e1⊙c`, minimized over the jump `c` by compass search.
fn jump_oracle(a1: f64, a2: f64, theta: f64, x: &SymTensor64) -> f64 {
    let n = x.dim();
    let phase = |a: f64, s: &SymTensor64| {
        let dev = s.dev().norm();
        a * (dev + s.trace() * s.trace())
    };
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let energy = |c: &[f64]| {
        let d = sym_dyad(c, &e1).unwrap();
        theta * phase(a1, &(*x + d.scale(1.0 - theta))) + (1.0 - theta) * phase(a2, &(*x - d.scale(theta)))
    };
    let mut c = vec![0.0; n];
    let mut best = energy(&c);
    let mut step = 1.0;
    while step > 1e-12 {
        let mut moved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut t = c.clone();
                t[i] += s;
                let v = energy(&t);
                if v < best {
                    best = v;
                    c = t;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

fn laminate(dim: usize) -> MicroDensity64 {
    make_builtin("laminate-two-phase", &[1.0, 4.0], dim).unwrap()
}

fn panel(dim: usize) -> Vec<SymTensor64> {
    let mut v = vec![SymTensor64::identity(dim).unwrap()];
    if dim == 2 {
        v.push(SymTensor64::from_upper(2, &[0.5, 0.3, -0.2]).unwrap());
        v.push(SymTensor64::from_upper(2, &[1.0, 0.0, -1.0]).unwrap());
        v.push(SymTensor64::from_upper(2, &[0.2, -0.7, 0.4]).unwrap());
    }
    v
}

#[test]
fn oracle_matches_jump_minimization() {
    for dim in [2, 3] {
        let f = laminate(dim);
        for x in panel(dim) {
            let want = jump_oracle(1.0, 4.0, 0.5, &x);
            let got = laminate_oracle(&f, &x, 32).unwrap().value;
            assert!((got - want).abs() <= 1e-6 * (1.0 + want), "{x:?}: {got} vs {want}");
        }
    }
}

#[test]
fn oracle_brackets_at_identity() {
    let f = laminate(2);
    let x = SymTensor64::identity(2).unwrap();
    let v = laminate_oracle(&f, &x, 32).unwrap().value;
    let gm = x.dev().norm() + x.trace() * x.trace();
    let arithmetic = 2.5 * gm;
    let harmonic = 1.0 / (0.5 / 1.0 + 0.5 / 4.0) * gm;
    assert!(v < arithmetic && v > harmonic.min(gm), "{v}");
    // volumetric X = I relaxes by shearing the soft layer only
    assert!(v < arithmetic - 0.1);
}

#[test]
fn traceless_aligned_is_below_average() {
    let f = laminate(2);
    let x = SymTensor64::diag(&[0.6, -0.6]).unwrap();
    let v = laminate_oracle(&f, &x, 32).unwrap().value;
    let avg = 2.5 * x.norm();
    assert!(v <= avg + 1e-12);
}

#[test]
fn periodic_cell_matches_oracle() {
    let f = laminate(2);
    let spec = CellSpec::with_boundary(2, 1, 32, Boundary::Periodic).unwrap();
    let cfg = SolverConfig::default().with_restarts(2).with_seed(11);
    for x in panel(2) {
        let oracle = laminate_oracle(&f, &x, 32).unwrap().value;
        let cell = minimize_cell(&f, &x, spec, &cfg).unwrap().value;
        assert!((cell - oracle).abs() <= 0.02 * oracle, "{x:?}: {cell} vs {oracle}");
    }
}

#[test]
fn dirichlet_values_decrease_towards_oracle() {
    let f = laminate(2);
    let x = SymTensor64::identity(2).unwrap();
    let oracle = laminate_oracle(&f, &x, 32).unwrap().value;
    let cfg = SolverConfig::default();
    let vals: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&m| minimize_cell(&f, &x, CellSpec::new(2, 1, m).unwrap(), &cfg).unwrap().value)
        .collect();
    assert!(vals[0] >= vals[1] - 1e-9 && vals[1] >= vals[2] - 1e-9);
    assert!(vals[2] >= oracle - 1e-9);
}
