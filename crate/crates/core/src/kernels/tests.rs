use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN2: f64 = std::f64::consts::LN_2;

fn p1(x: f64) -> Point {
    [x, 0.0]
}

fn all_families() -> Vec<KernelSpec> {
    vec![
        KernelSpec::exact_1d(1.0).unwrap(),
        KernelSpec::exact_2d(1.0).unwrap(),
        KernelSpec::star(1, 1.0, SeedKernel::Gaussian).unwrap(),
        KernelSpec::star(2, 1.0, SeedKernel::Exponential).unwrap(),
        KernelSpec::gff_square().unwrap(),
    ]
}

fn random_point(rng: &mut ChaCha8Rng, spec: &KernelSpec) -> Point {
    let mut p = [0.0; 2];
    for k in 0..spec.dim() {
        p[k] = rng.random_range(0.001..0.999);
    }
    p
}

#[test]
fn exact_1d_partial_kernel_table() {
    let k = KernelSpec::exact_1d(1.0).unwrap();
    assert_eq!(k.eval_partial_kernel(4, &p1(0.0), &p1(1.0)).unwrap(), 0.0);
    assert!((k.eval_partial_kernel(4, &p1(0.25), &p1(0.75)).unwrap() - LN2).abs() < 1e-15);
    let diag = k.eval_partial_kernel(4, &p1(0.3), &p1(0.3)).unwrap();
    assert!((diag - (4f64.ln() + 1.0)).abs() < 1e-15);
}

#[test]
fn exact_2d_partial_kernel_diagonal() {
    let k = KernelSpec::exact_2d(1.0).unwrap();
    let x = [0.2, 0.7];
    assert!((k.eval_partial_kernel(4, &x, &x).unwrap() - (4f64.ln() + 2.0)).abs() < 1e-15);
}

#[test]
fn level_zero_is_rejected() {
    let k = KernelSpec::exact_1d(1.0).unwrap();
    assert!(matches!(k.eval_partial_kernel(0, &p1(0.0), &p1(0.0)), Err(Error::ZeroLevel)));
    assert!(matches!(k.eval_level_increment(0, &p1(0.0), &p1(0.0)), Err(Error::ZeroLevel)));
}

#[test]
fn family_dimension_mismatch() {
    assert!(KernelSpec::new(Family::ExactScale1D, 2, 1.0).is_err());
    assert!(KernelSpec::new(Family::ExactScale2D, 1, 1.0).is_err());
    assert!(KernelSpec::new(Family::GffSquare, 1, 1.0).is_err());
    assert!(KernelSpec::new(Family::StarScale, 1, 0.0).is_err());
    assert!(Family::from_tag("whatever").is_err());
    for f in [Family::ExactScale1D, Family::ExactScale2D, Family::StarScale, Family::GffSquare] {
        assert_eq!(Family::from_tag(f.tag()).unwrap(), f);
        assert_eq!(Family::from_code(f.code()).unwrap(), f);
    }
}

#[test]
fn first_increment_is_first_partial_sum() {
    for spec in all_families() {
        let x = [0.4, 0.6];
        let q = spec.eval_level_increment(1, &x, &x).unwrap();
        let k = spec.eval_partial_kernel(1, &x, &x).unwrap();
        assert!((q - k).abs() < 1e-12, "{:?}", spec.family());
    }
}

#[test]
fn exact_1d_second_increment() {
    let k = KernelSpec::exact_1d(1.0).unwrap();
    let q = k.eval_level_increment(2, &p1(0.5), &p1(0.5)).unwrap();
    assert!((q - LN2).abs() < 1e-15);
}

#[test]
fn star_first_increment_at_zero_lag() {
    let k = KernelSpec::star(1, 1.0, SeedKernel::Gaussian).unwrap();
    let q = k.eval_level_increment(1, &p1(0.5), &p1(0.5)).unwrap();
    assert!((q - LN2).abs() < 1e-14);
}

#[test]
fn star_increments_match_high_precision_quadrature() {
    // mpmath quad of int_{2^n}^{2^{n+1}} exp(-(r u)^2)/u du, 30 digits.
    let cases = [
        (1, 0.1, 0.636_038_495_167_892_8),
        (2, 0.3, 0.054_467_192_422_035_945),
        (3, 0.05, 0.494_767_558_913_080_55),
        (1, 0.5, 0.107_802_290_992_835_68),
    ];
    let k = KernelSpec::star(1, 1.0, SeedKernel::Gaussian).unwrap();
    for (n, r, golden) in cases {
        let q = k.eval_level_increment(n, &p1(0.0), &p1(r)).unwrap();
        assert!((q - golden).abs() < 1e-10 * golden.max(1.0), "n={n} r={r}: {q} vs {golden}");
    }
}

#[test]
fn gff_boundary_points_are_rejected() {
    let k = KernelSpec::gff_square().unwrap();
    assert!(matches!(k.gff_square_level(1, &[0.0, 0.5], &[0.5, 0.5]), Err(Error::OutsideDomain(_))));
    assert!(matches!(k.gff_square_level(1, &[0.5, 0.5], &[0.5, 1.0]), Err(Error::OutsideDomain(_))));
    assert!(k.gff_square_level(1, &[0.5, 0.5], &[1.2, 0.5]).is_err());
}

#[test]
fn gff_levels_match_brute_force_quadrature() {
    // mpmath tanh-sinh integration of the image series (|k| <= 8) in t, with
    // level 1 = [1/4, inf) and level n = [4^-n, 4^-(n-1)].
    let cases: [(u32, Point, Point, f64); 4] = [
        (1, [0.5, 0.5], [0.5, 0.5], 0.107_979_278_539_210_04),
        (2, [0.5, 0.5], [0.5, 0.5], 0.603_038_897_364_622_7),
        (3, [0.3, 0.6], [0.35, 0.62], 0.654_664_611_119_909),
        (1, [0.2, 0.7], [0.6, 0.4], 0.045_655_458_576_151_59),
    ];
    let k = KernelSpec::gff_square().unwrap();
    for (n, x, y, golden) in cases {
        let v = k.gff_square_level(n, &x, &y).unwrap();
        assert!(v > 0.0);
        assert!((v - golden).abs() < 1e-9, "n={n}: {v} vs {golden}");
    }
}

#[test]
fn gff_symmetry() {
    let k = KernelSpec::gff_square().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let x = random_point(&mut rng, &k);
        let y = random_point(&mut rng, &k);
        let n = rng.random_range(1..6);
        let a = k.gff_square_level(n, &x, &y).unwrap();
        let b = k.gff_square_level(n, &y, &x).unwrap();
        assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
    }
}

#[test]
fn gff_matches_green_function_far_from_diagonal() {
    // G(x,y) ~ ln(1/|x-y|) + bounded; check against the eigen series of the
    // Green function of -Delta/2 times pi: G = sum 4 pi sin sin sin sin / lambda.
    let k = KernelSpec::gff_square().unwrap();
    let (x, y) = ([0.3, 0.4], [0.7, 0.55]);
    let mut series = 0.0;
    for m1 in 1..400 {
        for m2 in 1..400 {
            let (a, b) = (m1 as f64 * std::f64::consts::PI, m2 as f64 * std::f64::consts::PI);
            let lam = (a * a + b * b) / 2.0;
            series += 4.0 * (a * x[0]).sin() * (a * y[0]).sin() * (b * x[1]).sin() * (b * y[1]).sin() / lam;
        }
    }
    series *= std::f64::consts::PI;
    let g = k.limit_kernel(&x, &y).unwrap();
    assert!((g - series).abs() < 1e-4, "{g} vs {series}");
}

#[test]
fn increments_are_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in all_families() {
        let pairs = if spec.family() == Family::GffSquare { 200 } else { 1000 };
        for _ in 0..pairs {
            let x = random_point(&mut rng, &spec);
            let y = random_point(&mut rng, &spec);
            for n in 1..=12 {
                let q = spec.eval_level_increment(n, &x, &y).unwrap();
                assert!(q >= -1e-10, "{:?} n={n} q={q}", spec.family());
            }
        }
    }
}

#[test]
fn partial_sums_are_nondecreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for spec in all_families() {
        for _ in 0..100 {
            let x = random_point(&mut rng, &spec);
            let y = random_point(&mut rng, &spec);
            let mut prev = 0.0;
            for n in 1..=10 {
                let k = spec.eval_partial_kernel(n, &x, &y).unwrap();
                assert!(k >= prev - 1e-12);
                prev = k;
            }
        }
    }
}

#[test]
fn exact_kernels_reach_the_limit_beyond_cutoff() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for spec in [KernelSpec::exact_1d(1.0).unwrap(), KernelSpec::exact_2d(1.0).unwrap()] {
        for _ in 0..500 {
            let x = random_point(&mut rng, &spec);
            let y = random_point(&mut rng, &spec);
            let r = spec.distance(&x, &y);
            let n = (1.0 / r).ceil() as u32 + rng.random_range(0..4);
            let kn = spec.eval_partial_kernel(n, &x, &y).unwrap();
            let lim = spec.limit_kernel(&x, &y).unwrap();
            assert!((kn - lim).abs() < 1e-13, "r={r} n={n}");
        }
    }
}

#[test]
fn gram_matrices_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for spec in all_families() {
        let lattice = if spec.dim() == 1 {
            crate::lattice::Lattice::unit(1, 256).unwrap()
        } else {
            crate::lattice::Lattice::unit(2, 32).unwrap()
        };
        let idx: Vec<usize> = (0..64).map(|_| rng.random_range(0..lattice.sites())).collect();
        let pts: Vec<Point> = idx.iter().map(|&i| lattice.site_center(i)).collect();
        for n in 1..=8 {
            let (min, trace) = gram_floor(&spec, n, &pts).unwrap();
            assert!(min >= -1e-8 * trace, "{:?} n={n} min={min}", spec.family());
        }
    }
}

#[test]
fn scaling_identity_of_exact_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for spec in [KernelSpec::exact_1d(1.0).unwrap(), KernelSpec::exact_2d(1.0).unwrap()] {
        for n in 1..=16u32 {
            let l = 1.0 / n as f64;
            for _ in 0..50 {
                let r: f64 = rng.random_range(0.0..1.0);
                let lambda: f64 = rng.random_range(0.01..1.0);
                let lhs = spec.scale_kernel(lambda * l, lambda * r).unwrap();
                let rhs = spec.scale_kernel(l, r).unwrap() + (1.0 / lambda).ln();
                assert!((lhs - rhs).abs() < 1e-12);
            }
            // l = 1/n reproduces the level-n partial sum.
            let r = 0.37 / n as f64;
            let a = spec.scale_kernel(l, r).unwrap();
            let b = spec.radial(LevelRange::upto(n).unwrap(), r).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn support_radius_bounds_the_kernel() {
    for spec in all_families().into_iter().filter(|s| s.is_stationary()) {
        for n in [1u32, 3, 6] {
            let range = LevelRange::new(n, n + 2).unwrap();
            let r = spec.support_radius(range).unwrap();
            let v = spec.radial(range, r * 1.0001).unwrap();
            assert!(v.abs() < 1e-15, "{:?}", spec.family());
        }
    }
}

proptest! {
    #[test]
    fn increments_are_differences_of_partial_sums(n in 1u32..40, r in 0.0f64..1.2, two_d in any::<bool>()) {
        let spec = if two_d { KernelSpec::exact_2d(1.0).unwrap() } else { KernelSpec::exact_1d(1.0).unwrap() };
        let q = spec.radial(LevelRange::single(n).unwrap(), r).unwrap();
        let kn = spec.radial(LevelRange::upto(n).unwrap(), r).unwrap();
        let km = if n > 1 { spec.radial(LevelRange::upto(n - 1).unwrap(), r).unwrap() } else { 0.0 };
        prop_assert!((q - (kn - km)).abs() < 1e-12);
    }

    #[test]
    fn star_ranges_are_additive(m in 1u32..6, extra in 0u32..4, r in 0.0f64..0.8) {
        let spec = KernelSpec::star(1, 1.0, SeedKernel::Gaussian).unwrap();
        let whole = spec.radial(LevelRange::new(m, m + extra).unwrap(), r).unwrap();
        let parts: f64 = (m..=m + extra).map(|j| spec.radial(LevelRange::single(j).unwrap(), r).unwrap()).sum();
        prop_assert!((whole - parts).abs() < 1e-9 * whole.max(1e-3));
    }
}
