use gradsq::continuum::{
    bump_profile, green_disk, green_disk_dd_matrix, green_square, l2_inner, ContinuumGreen,
    MobiusMap, TestFunction,
};
use gradsq::lattice::DomainSpec;
use proptest::prelude::*;

fn disk_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..0.85, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn mobius_param() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..0.6, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

/// Radial integral `2π r² ∫_0^1 profile(s²)² s ds` by composite Simpson.
fn bump_norm_sq(radius: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let g = |s: f64| bump_profile(s * s).powi(2) * s;
    let mut acc = g(0.0) + g(1.0);
    for i in 1..n {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    2.0 * std::f64::consts::PI * radius * radius * acc * h / 3.0
}

#[test]
fn bump_norm_matches_radial_oracle() {
    let spec = DomainSpec::unit_disk(2).unwrap();
    let f = TestFunction::bump(vec![0.0, 0.0], 0.5);
    let got = l2_inner(&f, &f, &spec).unwrap();
    assert!((got - bump_norm_sq(0.5)).abs() < 1e-8, "{got} {}", bump_norm_sq(0.5));
    let g = TestFunction::bump(vec![0.1, -0.2], 0.3);
    assert!((l2_inner(&g, &g, &spec).unwrap() - bump_norm_sq(0.3)).abs() < 1e-8);
}

#[test]
fn l2_inner_symmetric_and_disjoint() {
    let spec = DomainSpec::unit_square(2).unwrap();
    let f = TestFunction::bump(vec![0.5, 0.5], 0.25);
    let g = TestFunction::ProductBump {
        center: vec![0.55, 0.45],
        radii: vec![0.2, 0.3],
    };
    let h = TestFunction::bump(vec![0.15, 0.15], 0.1);
    assert!((l2_inner(&f, &g, &spec).unwrap() - l2_inner(&g, &f, &spec).unwrap()).abs() < 1e-12);
    assert!(l2_inner(&f, &g, &spec).unwrap() > 0.0);
    assert_eq!(l2_inner(&f, &h, &spec).unwrap(), 0.0);
}

#[test]
fn green_harmonic_away_from_pole() {
    let h = 1e-3;
    let y = [0.1, 0.2];
    let x = [0.4, 0.2];
    let lap = |g: &dyn Fn(&[f64]) -> f64| {
        (g(&[x[0] + h, x[1]]) + g(&[x[0] - h, x[1]]) + g(&[x[0], x[1] + h]) + g(&[x[0], x[1] - h])
            - 4.0 * g(&x))
            / (h * h)
    };
    assert!(lap(&|p| green_disk(p, &y).unwrap()).abs() < 1e-4);
    let ys = [0.4, 0.6];
    let xs = [0.6, 0.45];
    let lap_sq = (green_square(&[xs[0] + h, xs[1]], &ys).unwrap()
        + green_square(&[xs[0] - h, xs[1]], &ys).unwrap()
        + green_square(&[xs[0], xs[1] + h], &ys).unwrap()
        + green_square(&[xs[0], xs[1] - h], &ys).unwrap()
        - 4.0 * green_square(&xs, &ys).unwrap())
        / (h * h);
    assert!(lap_sq.abs() < 1e-3, "{lap_sq}");
}

#[test]
fn square_green_vanishes_on_boundary_and_is_symmetric() {
    let y = [0.3, 0.6];
    for t in [0.1, 0.5, 0.9] {
        assert!(green_square(&[t, 1e-9], &y).unwrap().abs() < 1e-6);
        assert!(green_square(&[1.0 - 1e-9, t], &y).unwrap().abs() < 1e-6);
    }
    let x = [0.7, 0.2];
    let a = green_square(&x, &y).unwrap();
    assert!((a - green_square(&y, &x).unwrap()).abs() < 1e-12);
    // same logarithmic singularity as the disk
    let near = [0.3 + 1e-3, 0.6];
    let sing = green_square(&near, &y).unwrap() + (1e-3f64).ln() / (2.0 * std::f64::consts::PI);
    assert!(sing.is_finite() && sing.abs() < 1.0);
}

#[test]
fn coincident_and_exterior_points_are_rejected() {
    assert!(green_disk(&[0.1, 0.1], &[0.1, 0.1]).is_err());
    assert!(green_disk(&[1.1, 0.0], &[0.1, 0.1]).is_err());
    assert!(ContinuumGreen::UnitDisk.dd_matrix(&[0.2, 0.0], &[0.2, 0.0]).is_err());
    assert!(MobiusMap::new([1.0, 0.0]).is_err());
    assert!(ContinuumGreen::for_domain(&DomainSpec::unit_square(3).unwrap()).is_err());
}

proptest! {
    #[test]
    fn green_symmetric_and_positive(x in disk_point(), y in disk_point()) {
        prop_assume!(dist(&x, &y) > 1e-3);
        let a = green_disk(&x, &y).unwrap();
        let b = green_disk(&y, &x).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-14 * a.max(1.0));
    }

    #[test]
    fn green_vanishes_towards_boundary(x in disk_point(), t in 0.0f64..std::f64::consts::TAU) {
        let y = [(1.0 - 1e-9) * t.cos(), (1.0 - 1e-9) * t.sin()];
        prop_assume!(dist(&x, &y) > 0.1);
        prop_assert!(green_disk(&x, &y).unwrap().abs() < 1e-8);
    }

    #[test]
    fn green_conformally_invariant(x in disk_point(), y in disk_point(), a in mobius_param()) {
        prop_assume!(dist(&x, &y) > 1e-3);
        let h = MobiusMap::new(a).unwrap();
        let lhs = green_disk(&x, &y).unwrap();
        let rhs = green_disk(&h.apply(&x).unwrap(), &h.apply(&y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn chain_rule_identity(x in disk_point(), y in disk_point(), a in mobius_param()) {
        prop_assume!(dist(&x, &y) > 1e-2);
        let h = MobiusMap::new(a).unwrap();
        let sq = |m: [f64; 4]| m.iter().map(|v| v * v).sum::<f64>();
        let lhs = sq(green_disk_dd_matrix(&x, &y).unwrap());
        let hx = h.apply(&x).unwrap();
        let hy = h.apply(&y).unwrap();
        let jac = h.derivative(&x).unwrap().norm_sqr() * h.derivative(&y).unwrap().norm_sqr();
        let rhs = sq(green_disk_dd_matrix(&hx, &hy).unwrap()) * jac;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs);
    }

    #[test]
    fn mobius_properties(a in mobius_param(), z in disk_point()) {
        let h = MobiusMap::new(a).unwrap();
        let w = h.apply(&a).unwrap();
        prop_assert!(w[0].hypot(w[1]) < 1e-14);
        let d0 = h.derivative(&[0.0, 0.0]).unwrap().norm();
        prop_assert!((d0 - (1.0 - a[0] * a[0] - a[1] * a[1])).abs() < 1e-14);
        let hz = h.apply(&z).unwrap();
        prop_assert!(hz[0].hypot(hz[1]) < 1.0);
        // complex derivative against a central difference
        let step = 1e-6;
        let p = h.apply(&[z[0] + step, z[1]]).unwrap();
        let m = h.apply(&[z[0] - step, z[1]]).unwrap();
        let fd = [(p[0] - m[0]) / (2.0 * step), (p[1] - m[1]) / (2.0 * step)];
        let dz = h.derivative(&z).unwrap();
        prop_assert!((fd[0] - dz.re).abs() < 1e-6 && (fd[1] - dz.im).abs() < 1e-6);
    }

    #[test]
    fn identity_map(z in disk_point()) {
        let h = MobiusMap::new([0.0, 0.0]).unwrap();
        prop_assert_eq!(h.apply(&z).unwrap(), z);
        prop_assert_eq!(h.derivative(&z).unwrap().norm(), 1.0);
    }

    #[test]
    fn bump_supported_in_ball(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let f = TestFunction::bump(vec![0.1, -0.1], 0.4);
        let r = (x - 0.1).hypot(y + 0.1);
        let v = f.eval(&[x, y]);
        if r >= 0.4 {
            prop_assert_eq!(v, 0.0);
        } else {
            prop_assert!(v > 0.0 && v <= (-1.0f64).exp());
        }
    }
}
