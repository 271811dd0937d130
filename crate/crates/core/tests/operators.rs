use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use varns_core::grid::{GridSpec, ScalarField, Topology, VectorField};
use varns_core::mild_solver::SpaceTimeField;
use varns_core::operators::{
    duhamel_force, geometric_radii, grad_heat_sweep, heat_convolve, maximal_function, radial_majorant_defect,
    riesz_potential_1d, riesz_potential_direct, riesz_transform, SpectralWorkspace, TimeGrid,
};

fn random_field(g: &GridSpec, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    ScalarField::new(*g, values).unwrap()
}

/// Smooth periodic test function with a few low modes.
fn smooth(x: [f64; 3]) -> f64 {
    (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.5 * (x[2] - x[0]).sin() + 0.2 * (3.0 * x[1] + x[2]).cos()
}

#[test]
fn riesz_transform_converges_under_refinement() {
    // smooth data has exact low-mode content, so the coarse and fine
    // transforms agree on the common points
    let gc = GridSpec::torus(std::f64::consts::TAU, 16).unwrap();
    let gf = GridSpec::torus(std::f64::consts::TAU, 32).unwrap();
    let mut wc = SpectralWorkspace::new(&gc).unwrap();
    let mut wf = SpectralWorkspace::new(&gf).unwrap();
    for axis in 0..3 {
        let rc = riesz_transform(axis, &gc.sample(smooth), &mut wc).unwrap();
        let rf = riesz_transform(axis, &gf.sample(smooth), &mut wf).unwrap();
        let scale = rf.max_abs();
        // coarse centres sit halfway between fine centres: compare by
        // sampling the fine transform's trigonometric interpolant instead
        // through the shifted fine grid
        let shifted = gf.with_origin(&[-gf.spacing(0) / 2.0; 3]).unwrap();
        let mut ws = SpectralWorkspace::new(&shifted).unwrap();
        let rs = riesz_transform(axis, &shifted.sample(smooth), &mut ws).unwrap();
        for (idx, v) in rc.values.iter().enumerate() {
            let m = gc.multi_index(idx);
            let fine = shifted.flat_index([2 * m[0] + 1, 2 * m[1] + 1, 2 * m[2] + 1]);
            assert!((v - rs.values[fine]).abs() <= 1e-3 * scale);
        }
    }
}

#[test]
fn maximal_function_is_sublinear() {
    let g = GridSpec::interval(-4.0, 4.0, 256, Topology::Truncated).unwrap();
    let f = g.sample(|x| (3.0 * x[0]).sin() * (-x[0] * x[0]).exp());
    let h = g.sample(|x| (x[0] - 1.0).cos() * (-(x[0] - 1.0).powi(2)).exp());
    let radii = geometric_radii(&g, 12);
    let mf = maximal_function(&f, &radii).unwrap();
    let mh = maximal_function(&h, &radii).unwrap();
    let msum = maximal_function(&f.zip_with(&h, |a, b| a + b).unwrap(), &radii).unwrap();
    for i in 0..g.len() {
        assert!(msum.values[i] <= mf.values[i] + mh.values[i] + 1e-14);
    }
}

#[test]
fn riesz_potential_is_positively_homogeneous_and_monotone() {
    let g = GridSpec::centered_cube(2.0, 12, Topology::Truncated).unwrap();
    let f = g.sample(|x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp() * (x[0] - 0.2));
    let a = riesz_potential_direct(&f, 1.0).unwrap();
    let b = riesz_potential_direct(&f.scaled(-2.5), 1.0).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((2.5 * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        assert!(*x > 0.0);
    }
    let zero = riesz_potential_direct(&ScalarField::zeros(g), 1.0).unwrap();
    assert!(zero.is_zero());

    let line = GridSpec::interval(0.0, 4.0, 400, Topology::Truncated).unwrap();
    let small = line.sample(|x| (x[0] - 2.0).sin() * 0.5);
    let big = line.sample(|x| (x[0] - 2.0).sin().abs() + 0.1);
    let ps = riesz_potential_1d(&small, 0.5).unwrap();
    let pb = riesz_potential_1d(&big, 0.5).unwrap();
    assert!(ps.values.iter().zip(&pb.values).all(|(s, b)| s <= b));
}

#[test]
fn heat_examples() {
    let g = GridSpec::torus(std::f64::consts::TAU, 16).unwrap();
    let mut ws = SpectralWorkspace::new(&g).unwrap();
    let c = ScalarField::constant(g, 2.5);
    let out = heat_convolve(&c, 3.0, &mut ws).unwrap();
    assert!(out.values.iter().all(|v| (v - 2.5).abs() < 1e-13));
    assert!(heat_convolve(&c, -1.0, &mut ws).is_err());
    // |k|^2 = 4 for k = (2, 0, 0)
    let w = g.sample(|x| (2.0 * x[0]).cos());
    let out = heat_convolve(&w, 0.25, &mut ws).unwrap();
    for (a, b) in out.values.iter().zip(&w.values) {
        assert!((a - (-1f64).exp() * b).abs() < 1e-13);
    }
    let f = random_field(&g, 4);
    let two = heat_convolve(&heat_convolve(&f, 0.1, &mut ws).unwrap(), 0.2, &mut ws).unwrap();
    let one = heat_convolve(&f, 0.3, &mut ws).unwrap();
    let scale = one.max_abs();
    assert!(one.values.iter().zip(&two.values).all(|(a, b)| (a - b).abs() <= 1e-12 * scale));
}

#[test]
fn duhamel_of_steady_mode_matches_closed_form() {
    // f = cos(2x) e_y, constant in time: mode value (1 - e^{-t|k|^2}) / |k|^2
    let g = GridSpec::torus(std::f64::consts::TAU, 8).unwrap();
    let tg = TimeGrid::new(1.0, 256).unwrap();
    let mut ws = SpectralWorkspace::new(&g).unwrap();
    let w = VectorField::from_fn(g, |x| [0.0, (2.0 * x[0]).cos(), 0.0]);
    let force = SpaceTimeField::separable(tg, &w, |_| 1.0);
    let out = duhamel_force(&force, &tg, &mut ws).unwrap();
    assert!(out.frames()[0].max_abs() == 0.0);
    let mut worst = 0.0f64;
    for (i, frame) in out.frames().iter().enumerate() {
        let t = tg.node(i);
        let amp = (1.0 - (-4.0 * t).exp()) / 4.0;
        for (v, wv) in frame.components[1].iter().zip(&w.components[1]) {
            worst = worst.max((v - amp * wv).abs());
        }
    }
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn duhamel_is_linear() {
    let g = GridSpec::torus(std::f64::consts::TAU, 8).unwrap();
    let tg = TimeGrid::new(0.5, 16).unwrap();
    let mut ws = SpectralWorkspace::new(&g).unwrap();
    let a = VectorField::from_fn(g, |x| [x[1].sin(), (x[2] + x[0]).cos(), 0.3]);
    let b = VectorField::from_fn(g, |x| [0.0, (2.0 * x[2]).sin(), x[0].cos()]);
    let fa = SpaceTimeField::separable(tg, &a, |t| 1.0 + t);
    let fb = SpaceTimeField::separable(tg, &b, |t| (3.0 * t).cos());
    let sum = fa.add_scaled(&fb, 1.0).unwrap();
    let da = duhamel_force(&fa, &tg, &mut ws).unwrap();
    let db = duhamel_force(&fb, &tg, &mut ws).unwrap();
    let ds = duhamel_force(&sum, &tg, &mut ws).unwrap();
    let diff = ds.add_scaled(&da, -1.0).unwrap().add_scaled(&db, -1.0).unwrap();
    assert!(diff.max_abs() <= 1e-12 * ds.max_abs());
}

#[test]
fn grad_heat_sweep_is_refinement_stable() {
    let a = grad_heat_sweep([1e-3, 10.0], [1e-3, 10.0], 100).unwrap();
    let b = grad_heat_sweep([1e-3, 10.0], [1e-3, 10.0], 200).unwrap();
    assert!(a.is_finite() && b.is_finite());
    assert!((a - b).abs() <= 0.05 * b);
}

#[test]
fn radial_majorant_for_gaussian_kernel_at_three_resolutions() {
    for n in [64, 128, 256] {
        let g = GridSpec::interval(-6.0, 6.0, n, Topology::Truncated).unwrap();
        let half = (1.5 / g.spacing(0)).ceil() as usize;
        let phi = g.kernel_grid(half).unwrap().sample(|x| {
            if x[0].abs() <= 1.5 {
                (-x[0] * x[0] / 0.5).exp()
            } else {
                0.0
            }
        });
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            let f = g.sample(|x| c[0] * (-(x[0] - c[1]).powi(2)).exp() + 0.3 * (c[2] * x[0]).sin() * (-x[0] * x[0] / 8.0).exp());
            let r = radial_majorant_defect(&phi, &f).unwrap();
            assert!(r <= 1.05, "n {n}: {r}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_round_trip(seed in 0u64..10_000) {
        let g = GridSpec::torus(std::f64::consts::TAU, 12).unwrap();
        let mut ws = SpectralWorkspace::new(&g).unwrap();
        let f = random_field(&g, seed);
        let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        ws.forward(&mut data);
        ws.inverse(&mut data);
        for (a, b) in data.iter().zip(&f.values) {
            prop_assert!((a.re - b).abs() <= 1e-12 && a.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn riesz_output_is_real_and_bounded(seed in 0u64..10_000, axis in 0usize..3) {
        // |R_j f|_2 <= |f|_2 (symbol modulus at most one)
        let g = GridSpec::torus(std::f64::consts::TAU, 8).unwrap();
        let mut ws = SpectralWorkspace::new(&g).unwrap();
        let f = random_field(&g, seed);
        let r = riesz_transform(axis, &f, &mut ws).unwrap();
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(l2(&r.values) <= l2(&f.values) * (1.0 + 1e-12));
        prop_assert!(r.is_finite());
    }

    #[test]
    fn maximal_dominates_and_scales(seed in 0u64..10_000, s in -5.0..5.0f64) {
        let g = GridSpec::interval(-2.0, 2.0, 64, Topology::Truncated).unwrap();
        let f = random_field(&g, seed);
        let radii = geometric_radii(&g, 8);
        let m = maximal_function(&f, &radii).unwrap();
        let ms = maximal_function(&f.scaled(s), &radii).unwrap();
        for i in 0..g.len() {
            prop_assert!(m.values[i] >= f.values[i].abs() - 1e-15);
            prop_assert!((ms.values[i] - s.abs() * m.values[i]).abs() <= 1e-12 * (1.0 + m.values[i]));
        }
    }
}
