use proptest::prelude::*;

use varns_core::exponents::{conjugate_exponent, make_exponent, ExponentFamily, ExponentField};
use varns_core::grid::{GridSpec, ScalarField, Topology};
use varns_core::varlp::{
    classical_norm, conjugate_pairing_lower_bound, embedding_defect, luxemburg_norm, mixed_norm, modular,
    unit_function_norm,
};

const TOL: f64 = 1e-10;

fn line(a: f64, b: f64, n: usize) -> GridSpec {
    GridSpec::interval(a, b, n, Topology::Truncated).unwrap()
}

/// Independent bisection for `lambda` with `m(lambda) = 1`, `m` decreasing.
fn bisect_unit(m: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if m(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn mixed_norm_of_3d_gaussian_is_max_of_parts() {
    let g = GridSpec::centered_cube(4.0, 24, Topology::Truncated).unwrap();
    let f = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let p = make_exponent(ExponentFamily::RadialLog, &[2.0, 1.0], &g).unwrap();
    let m = mixed_norm(&f, &p, 3.0, TOL).unwrap().value;
    let a = luxemburg_norm(&f, &p, TOL).unwrap().value;
    let b = classical_norm(&f, 3.0).unwrap().value;
    assert!((m - a.max(b)).abs() <= 1e-12 * m);
}

#[test]
fn pairing_bracket_for_radial_log() {
    let g = line(-6.0, 6.0, 600);
    let p = make_exponent(ExponentFamily::RadialLog, &[2.0, 1.5], &g).unwrap();
    let f = g.sample(|x| (-x[0] * x[0] / 2.0).exp() * (1.0 + 0.5 * x[0]));
    let n = luxemburg_norm(&f, &p, TOL).unwrap().value;
    let v = conjugate_pairing_lower_bound(&f, &p, 6, 3, TOL).unwrap();
    assert!(v >= 0.5 * n && v <= 2.0 * n, "{v} vs {n}");
}

#[test]
fn unit_norm_of_linear_exponent_matches_closed_form_oracle() {
    // p(t) = 2 + t on [0, 2]: int_0^2 lam^{-(2+t)} dt = lam^{-2} (1 - lam^{-2}) / ln lam
    let g = line(0.0, 2.0, 20000);
    let p = ExponentField::from_fn(g, |x| 2.0 + x[0]).unwrap();
    let v = unit_function_norm(&p, 1e-12).unwrap().value;
    let oracle = bisect_unit(|l| l.powi(-2) * (1.0 - l.powi(-2)) / l.ln(), 1.0 + 1e-9, 4.0);
    assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    assert!(v >= 2f64.powf(0.25) && v <= 2f64.sqrt());
}

#[test]
fn embedding_on_interval_across_corpus() {
    // exponents as in the local-in-time estimate: r < p' with p(t) = 3 + sin^2 t
    let t = 2.0;
    let g = line(0.0, t, 256);
    let p = make_exponent(ExponentFamily::Sinusoidal, &[3.0, 1.0, 1.0, 2.0], &g).unwrap();
    let pc = conjugate_exponent(&p);
    let r = pc.map(|v| 1.0 + 0.8 * (v - 1.0)).unwrap();
    let mut worst = 0.0f64;
    for k in 0..500 {
        let a = 0.3 + 0.01 * k as f64;
        let c = (k % 17) as f64 / 8.5;
        let f = g.sample(|x| (-(x[0] - c).powi(2) * a).exp() * (1.0 + 0.3 * (a * x[0]).sin()));
        worst = worst.max(embedding_defect(&f, &r, &pc, TOL).unwrap());
    }
    assert!(worst <= 1.0 + t, "{worst}");
}

fn exponent_on(g: &GridSpec, which: u8, a: f64, b: f64) -> ExponentField {
    match which % 3 {
        0 => make_exponent(ExponentFamily::RadialLog, &[1.2 + a, b], g).unwrap(),
        1 => make_exponent(ExponentFamily::GaussianBump, &[1.2 + a, b], g).unwrap(),
        _ => make_exponent(ExponentFamily::Constant, &[1.2 + a], g).unwrap(),
    }
}

fn field_on(g: &GridSpec, c: [f64; 4]) -> ScalarField {
    g.sample(|x| c[0] * (-(x[0] - c[1]).powi(2) / (0.3 + c[2])).exp() + c[3] * (x[0]).cos() * (-x[0] * x[0] / 4.0).exp())
}

prop_compose! {
    fn coeffs()(a in -3.0..3.0f64, b in -2.0..2.0f64, c in 0.0..2.0f64, d in -1.0..1.0f64) -> [f64; 4] {
        [a, b, c, d]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn homogeneity(c in coeffs(), s in -20.0..20.0f64, which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64) {
        let g = line(-6.0, 6.0, 200);
        let f = field_on(&g, c);
        prop_assume!(!f.is_zero());
        let p = exponent_on(&g, which, a, b);
        let n = luxemburg_norm(&f, &p, TOL).unwrap().value;
        let ns = luxemburg_norm(&f.scaled(s), &p, TOL).unwrap().value;
        prop_assert!((ns - s.abs() * n).abs() <= TOL * (1.0 + s.abs()));
    }

    #[test]
    fn triangle(c1 in coeffs(), c2 in coeffs(), which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64) {
        let g = line(-6.0, 6.0, 200);
        let (f, h) = (field_on(&g, c1), field_on(&g, c2));
        let p = exponent_on(&g, which, a, b);
        let sum = f.zip_with(&h, |x, y| x + y).unwrap();
        let l = luxemburg_norm(&sum, &p, TOL).unwrap().value;
        let r = luxemburg_norm(&f, &p, TOL).unwrap().value + luxemburg_norm(&h, &p, TOL).unwrap().value;
        prop_assert!(l <= r + 3.0 * TOL);
    }

    #[test]
    fn unit_ball_matches_modular(c in coeffs(), which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64) {
        let g = line(-6.0, 6.0, 200);
        let f = field_on(&g, c);
        let p = exponent_on(&g, which, a, b);
        let n = luxemburg_norm(&f, &p, TOL).unwrap();
        let m = modular(&f, &p).unwrap();
        // away from the boundary of the unit ball the two tests must agree
        if n.value + n.tolerance < 1.0 {
            prop_assert!(m <= 1.0);
        }
        if m <= 1.0 {
            prop_assert!(n.value <= 1.0 + n.tolerance);
        }
    }

    #[test]
    fn modular_decreases_in_lambda(c in coeffs(), which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64, l1 in 0.1..5.0f64, dl in 0.0..5.0f64) {
        let g = line(-6.0, 6.0, 100);
        let f = field_on(&g, c);
        let p = exponent_on(&g, which, a, b);
        let m1 = modular(&f.scaled(1.0 / l1), &p).unwrap();
        let m2 = modular(&f.scaled(1.0 / (l1 + dl)), &p).unwrap();
        prop_assert!(m1 >= m2);
    }

    #[test]
    fn constant_exponent_is_classical(c in coeffs(), p0 in 1.1..8.0f64) {
        let g = line(-6.0, 6.0, 200);
        let f = field_on(&g, c);
        let p = make_exponent(ExponentFamily::Constant, &[p0], &g).unwrap();
        let lux = luxemburg_norm(&f, &p, TOL).unwrap().value;
        let cl = classical_norm(&f, p0).unwrap().value;
        prop_assert!((lux - cl).abs() <= TOL.max(1e-9) * (1.0 + cl));
    }

    #[test]
    fn conjugation_is_an_involution(which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64) {
        let g = line(-6.0, 6.0, 64);
        let p = exponent_on(&g, which, a, b);
        let back = conjugate_exponent(&conjugate_exponent(&p));
        for (x, y) in p.samples().iter().zip(back.samples()) {
            prop_assert!((x - y).abs() <= 1e-13 * x);
        }
    }

    #[test]
    fn holder_product_residual(w1 in 0u8..3, w2 in 0u8..3, a in 1.0..3.0f64, b in 0.0..1.5f64) {
        let g = line(-6.0, 6.0, 64);
        let q = exponent_on(&g, w1, a, b);
        let r = exponent_on(&g, w2, a + 0.5, b);
        let p = ExponentField::holder_product(&q, &r).unwrap();
        for i in 0..g.len() {
            let res = 1.0 / p.samples()[i] - 1.0 / q.samples()[i] - 1.0 / r.samples()[i];
            prop_assert!(res.abs() <= 1e-14);
        }
    }

    #[test]
    fn mixed_dominates_components(c in coeffs(), which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64, fp in 1.1..6.0f64) {
        let g = line(-6.0, 6.0, 100);
        let f = field_on(&g, c);
        let p = exponent_on(&g, which, a, b);
        let m = mixed_norm(&f, &p, fp, TOL).unwrap().value;
        prop_assert!(m >= luxemburg_norm(&f, &p, TOL).unwrap().value);
        prop_assert!(m >= classical_norm(&f, fp).unwrap().value);
    }

    #[test]
    fn pairing_sandwich(c in coeffs(), which in 0u8..3, a in 0.0..3.0f64, b in 0.0..1.5f64, seed in 0u64..1000) {
        let g = line(-6.0, 6.0, 100);
        let f = field_on(&g, c);
        prop_assume!(!f.is_zero());
        let p = exponent_on(&g, which, a, b);
        let n = luxemburg_norm(&f, &p, TOL).unwrap().value;
        let v = conjugate_pairing_lower_bound(&f, &p, 4, seed, TOL).unwrap();
        prop_assert!(v <= 2.0 * n * (1.0 + 1e-8));
        if p.is_constant() {
            prop_assert!(v >= 0.95 * n);
        }
    }
}
