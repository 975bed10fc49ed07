use hencky_core::cell::{CellSpec, GridField};
use hencky_core::kernels::{
    area_strict_gap, ball_moment, bogovskii, central_gradient, helmholtz_decompose, korn_ratio,
    rigid_project, strict_distance, RigidMotion,
};
use hencky_core::sampling;
use hencky_core::Error;
use rand::Rng;
use std::f64::consts::PI;

fn random_field(spec: CellSpec, seed: u64) -> GridField<f64> {
    let mut rng = sampling::rng(seed);
    let mut f = GridField::from_values(
        spec,
        (0..spec.num_nodes() * spec.dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    f.zero_boundary();
    f
}

fn smooth_g(spec: &CellSpec, amp: f64) -> Vec<f64> {
    let len = spec.k as f64;
    (0..spec.num_cells())
        .map(|c| {
            let x = spec.centroid::<f64>(c);
            amp * (2.0 * PI * x[0] / len).sin() * (2.0 * PI * x[1] / len).sin()
        })
        .collect()
}

#[test]
fn j1_in_two_dimensions() {
    assert!((ball_moment::<f64>(2, 1.0).unwrap() - PI / 4.0).abs() <= 1e-12);
}

#[test]
fn bogovskii_ratio_is_scale_stable() {
    let base = CellSpec::new(2, 1, 16).unwrap();
    let r0 = bogovskii(&base, &smooth_g(&base, 1.0), 2.0).unwrap();
    assert!(r0.residual <= 1e-10);
    let amp = bogovskii(&base, &smooth_g(&base, 37.0), 2.0).unwrap();
    assert!((amp.ratio - r0.ratio).abs() <= 1e-8 * r0.ratio);
    // same physical grid on a domain twice as large
    let big = CellSpec::new(2, 2, 8).unwrap();
    let rb = bogovskii(&big, &smooth_g(&big, 1.0), 2.0).unwrap();
    assert!((rb.ratio - r0.ratio).abs() <= 1e-8 * r0.ratio, "{} {}", rb.ratio, r0.ratio);
    let fine = CellSpec::new(2, 1, 32).unwrap();
    let rf = bogovskii(&fine, &smooth_g(&fine, 1.0), 2.0).unwrap();
    assert!(rf.residual <= 1e-10);
    assert!((rf.ratio - r0.ratio).abs() <= 0.1 * r0.ratio, "{} {}", rf.ratio, r0.ratio);
}

#[test]
fn bogovskii_rejects_mean() {
    let spec = CellSpec::new(2, 1, 8).unwrap();
    let g = vec![1.0; spec.num_cells()];
    assert!(matches!(bogovskii(&spec, &g, 2.0), Err(Error::Precondition(_))));
}

#[test]
fn helmholtz_of_pure_gradient() {
    let spec = CellSpec::new(2, 1, 16).unwrap();
    let mut phi0 = vec![0.0; spec.num_nodes()];
    for (i, p) in phi0.iter_mut().enumerate() {
        if !spec.is_boundary_node(i) {
            let x = spec.node_position::<f64>(i);
            *p = (PI * x[0]).sin() * (2.0 * PI * x[1]).sin() + 0.3 * x[0] * x[1];
        }
    }
    let u = GridField::from_values(spec, central_gradient(&spec, &phi0)).unwrap();
    let h = helmholtz_decompose(&u).unwrap();
    assert!(h.v.max_abs() <= 1e-8, "{}", h.v.max_abs());
}

#[test]
fn helmholtz_random_fields() {
    for (dim, m) in [(2, 16), (3, 6)] {
        let spec = CellSpec::new(dim, 1, m).unwrap();
        for seed in 0..3 {
            let u = random_field(spec, seed);
            let h = helmholtz_decompose(&u).unwrap();
            let g = central_gradient(&spec, &h.phi);
            let rec = u
                .values()
                .iter()
                .zip(h.v.values().iter().zip(&g))
                .fold(0.0f64, |m, (a, (b, c))| m.max((a - b - c).abs()));
            assert!(rec <= 1e-12);
            assert!(h.orthogonality <= 1e-8 && h.div_residual <= 1e-8);
        }
    }
}

#[test]
fn rigid_projection_is_idempotent() {
    let spec = CellSpec::new(2, 1, 32).unwrap();
    let h = spec.h::<f64>();
    let x0 = [0.5, 0.5];
    for seed in 0..5 {
        let u = random_field(spec, seed);
        let rm = rigid_project(&u, &x0, 0.4).unwrap();
        let w = u.sub(&rm.to_field(spec, &x0).unwrap()).unwrap();
        let again = rigid_project(&w, &x0, 0.4).unwrap();
        assert!(again.norm() <= 10.0 * h, "{}", again.norm());
    }
}

#[test]
fn rigid_projection_three_dimensional() {
    let spec = CellSpec::new(3, 1, 16).unwrap();
    let x0 = [0.5, 0.5, 0.5];
    let w: Vec<f64> = vec![0.0, 0.3, -0.2, -0.3, 0.0, 0.5, 0.2, -0.5, 0.0];
    let rm0 = RigidMotion::<f64> { translation: vec![1.0, 0.0, -1.0], rotation: w.clone() };
    let u = rm0.to_field(spec, &x0).unwrap();
    let rm = rigid_project(&u, &x0, 0.375).unwrap();
    for (a, b) in rm.rotation.iter().zip(&w) {
        assert!((a - b).abs() <= 10.0 / 16.0);
    }
    for (a, b) in rm.translation.iter().zip(&rm0.translation) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn korn_ratio_is_bounded_and_refinement_stable() {
    let x0 = [0.5, 0.5];
    let field = |spec: CellSpec, seed: u64| {
        let mut rng = sampling::rng(seed);
        let c: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        GridField::from_fn(spec, |x: &[f64]| {
            let (a, b) = (PI * x[0], PI * x[1]);
            vec![
                c[0] * (a + b).sin() + c[1] * x[0] * x[1] + c[2] * (2.0 * b).cos() + c[3] * x[1],
                c[4] * (a - b).cos() + c[5] * x[0] * x[0] + c[6] * (2.0 * a).sin() - c[3] * x[0] + c[7],
            ]
        })
        .unwrap()
    };
    let coarse = CellSpec::new(2, 1, 32).unwrap();
    let fine = CellSpec::new(2, 1, 64).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let a = korn_ratio(&field(coarse, seed), &x0, 0.4).unwrap();
        let b = korn_ratio(&field(fine, seed), &x0, 0.4).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() <= 0.2 * b, "{seed}: {a} vs {b}");
        worst = worst.max(a);
    }
    assert!(worst < 10.0, "{worst}");
}

#[test]
fn strict_distance_axioms() {
    let spec = CellSpec::new(2, 1, 8).unwrap();
    let (u, v, w) = (random_field(spec, 1), random_field(spec, 2), random_field(spec, 3));
    assert_eq!(strict_distance(&u, &u).unwrap(), 0.0);
    let uv = strict_distance(&u, &v).unwrap();
    assert!((uv - strict_distance(&v, &u).unwrap()).abs() <= 1e-15);
    let uw = strict_distance(&u, &w).unwrap();
    assert!(uw <= uv + strict_distance(&v, &w).unwrap() + 1e-12);
    let other = random_field(CellSpec::new(2, 1, 6).unwrap(), 1);
    assert!(matches!(strict_distance(&u, &other), Err(Error::SpecMismatch { .. })));
    assert!(matches!(area_strict_gap(&u, &other), Err(Error::SpecMismatch { .. })));
}

#[test]
fn area_gap_for_affine_strain() {
    // A·x on every node: constant strain sym A in each cell
    let spec = CellSpec::new(2, 1, 8).unwrap();
    let u = GridField::<f64>::zeros(spec);
    assert_eq!(area_strict_gap(&u, &u).unwrap(), 0.0);
    let a = [[0.3, 0.1], [0.1, -0.2]];
    let v = GridField::from_fn(spec, |x: &[f64]| {
        vec![a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
    })
    .unwrap();
    let s = hencky_core::SymTensor64::from_upper(2, &[0.3, 0.1, -0.2]).unwrap();
    let want = (hencky_core::area_integrand(&s) - 1.0).abs()
        + (hencky_core::area_integrand(&s.dev()) - 1.0).abs();
    assert!((area_strict_gap(&u, &v).unwrap() - want).abs() <= 1e-12);
}

#[test]
fn area_gap_shrinks_under_mollification() {
    let spec = CellSpec::new(2, 1, 32).unwrap();
    let raw = GridField::from_fn(spec, |x: &[f64]| {
        let s = if x[0] < 0.5 { x[0] } else { 1.0 - x[0] };
        vec![s * (PI * x[1]).sin(), 0.0]
    })
    .unwrap();
    let blur = |f: &GridField<f64>, width: usize| {
        let np = spec.nodes_per_axis();
        let mut out = f.clone();
        for i in 0..spec.num_nodes() {
            let c = spec.node_coords(i);
            let mut acc = [0.0; 2];
            let mut cnt = 0.0;
            for dx in -(width as i64)..=(width as i64) {
                let x = c[0] as i64 + dx;
                if x < 0 || x >= np as i64 {
                    continue;
                }
                let j = spec.node_index(&[x as usize, c[1], 0]);
                acc[0] += f.node(j)[0];
                acc[1] += f.node(j)[1];
                cnt += 1.0;
            }
            out.values_mut()[2 * i] = acc[0] / cnt;
            out.values_mut()[2 * i + 1] = acc[1] / cnt;
        }
        out.zero_boundary();
        out
    };
    let gaps: Vec<f64> = [4, 2, 1]
        .iter()
        .map(|&w| area_strict_gap(&blur(&raw, w), &raw).unwrap())
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}
