//! Monte Carlo checks of the field and measure invariants. Seeds are fixed, so
//! every run sees the same draws.

use gmclab_core::analysis::stats::{jarque_bera, ks_two_sample, mean, pearson, variance};
use gmclab_core::atomic::{build_atomic_direct, log_sum_exp, sample_stable_atoms, ZMin};
use gmclab_core::chaos::build_chaos;
use gmclab_core::field::{Backend, FieldSampler, LayerStack};
use gmclab_core::kernels::{KernelSpec, LevelRange, SeedKernel};
use gmclab_core::lattice::{Lattice, Region};
use gmclab_core::par::map_indexed;
use gmclab_core::rng::{Purpose, RngStream};
use rand::Rng;

fn se(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

fn chaos_sampler(spec: &KernelSpec, n_sites: usize, levels: u32) -> FieldSampler {
    let lattice = Lattice::unit(spec.dim(), n_sites).unwrap();
    FieldSampler::new(spec, &lattice, LevelRange::upto(levels).unwrap(), Backend::Auto).unwrap()
}

#[test]
fn covariance_matches_kernel_at_random_pairs() {
    let spec = KernelSpec::exact_1d(1.0).unwrap();
    let levels = LevelRange::upto(6).unwrap();
    let s = chaos_sampler(&spec, 256, 6);
    let lattice = s.lattice().clone();
    let mut rng = RngStream::new(11, 0, 0, Purpose::Synthetic).rng();
    let pairs: Vec<(usize, usize)> = (0..20).map(|_| (rng.random_range(0..256), rng.random_range(0..256))).collect();
    let fields = map_indexed(10_000, |r| s.sample_field(11, r as u64).values().to_vec());
    let inside = pairs
        .iter()
        .filter(|&&(i, j)| {
            let prods: Vec<f64> = fields.iter().map(|v| v[i] * v[j]).collect();
            let target = spec.eval_range(levels, &lattice.site_center(i), &lattice.site_center(j)).unwrap();
            (mean(&prods) - target).abs() <= 3.0 * se(&prods)
        })
        .count();
    assert!(inside >= 19, "{inside} of 20 pairs within 3 SE");
}

#[test]
fn layers_are_uncorrelated() {
    let spec = KernelSpec::exact_1d(1.0).unwrap();
    let stack = LayerStack::new(&spec, &Lattice::unit(1, 256).unwrap(), 3, Backend::Auto).unwrap();
    let draws = map_indexed(10_000, |r| stack.sample_layers(5, r as u64));
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        for (x, y) in [(0, 0), (10, 12), (100, 140)] {
            let prods: Vec<f64> = draws.iter().map(|l| l[j].values[x] * l[k].values[y]).collect();
            assert!(mean(&prods).abs() <= 3.0 * se(&prods), "levels {j},{k} sites {x},{y}: {}", mean(&prods));
        }
    }
}

#[test]
fn field_is_gaussian() {
    let s = chaos_sampler(&KernelSpec::exact_1d(1.0).unwrap(), 256, 6);
    let sd = s.variance().at(0).sqrt();
    let xs: Vec<f64> = (0..10_000).map(|r| s.sample_field(7, r).values()[0] / sd).collect();
    let jb = jarque_bera(&xs).unwrap();
    assert!(jb.p_value > 0.01, "{jb:?}");
}

#[test]
fn box_masses_have_lebesgue_expectation() {
    let s = chaos_sampler(&KernelSpec::exact_1d(1.0).unwrap(), 256, 64);
    let boxes = [Region::interval(0.0, 1.0).unwrap(), Region::interval(0.25, 0.5).unwrap(), Region::interval(0.5, 0.625).unwrap()];
    let masses = map_indexed(10_000, |r| {
        let m = build_chaos(&s.sample_field(3, r as u64), 0.5).unwrap();
        boxes.iter().map(|b| m.measure_box(b).unwrap()).collect::<Vec<_>>()
    });
    for (i, b) in boxes.iter().enumerate() {
        let col: Vec<f64> = masses.iter().map(|m| m[i]).collect();
        assert!((mean(&col) - b.volume()).abs() <= 3.0 * se(&col), "box {i}: {}", mean(&col));
    }
}

#[test]
fn largest_cell_share_shrinks_with_resolution() {
    let spec = KernelSpec::exact_1d(1.0).unwrap();
    let shares: Vec<f64> = [64, 256, 1024]
        .into_iter()
        .map(|n| {
            let s = chaos_sampler(&spec, n, n as u32);
            let v = map_indexed(200, |r| build_chaos(&s.sample_field(9, r as u64), 1.0).unwrap().max_cell_share());
            mean(&v)
        })
        .collect();
    assert!(shares.windows(2).all(|w| w[1] < w[0]), "{shares:?}");
}

/// Approximate, finite-level comparison. With seed `exp(-r^2)` the star kernel
/// is `E1(4 r^2 / T^2) / 2 = ln(1/r) + ln(T/2) - gamma_E/2 + O(r^2)`, so
/// `T = 2 exp(gamma_E/2)` lines its log singularity up with the exact kernel's.
#[test]
fn decomposition_does_not_change_the_law() {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let half = Region::interval(0.0, 0.5).unwrap();
    let masses = |spec: &KernelSpec, levels: u32, gamma2: f64, seed: u64| {
        let s = chaos_sampler(spec, 256, levels);
        map_indexed(2000, |r| build_chaos(&s.sample_field(seed, r as u64), gamma2).unwrap().measure_box(&half).unwrap())
    };
    let exact = KernelSpec::exact_1d(1.0).unwrap();
    let star = KernelSpec::star(1, 2.0 * (EULER_GAMMA / 2.0).exp(), SeedKernel::Gaussian).unwrap();
    let a = masses(&exact, 256, 0.3, 1);
    let b = masses(&star, 9, 0.3, 2);
    let same = ks_two_sample(&a, &b).unwrap();
    assert!(same.p_value > 0.01, "{same:?}");

    // The same test does notice a doubled coupling.
    let c = masses(&exact, 256, 0.6, 3);
    let other = ks_two_sample(&a, &c).unwrap();
    assert!(other.p_value < 1e-3, "{other:?}");
}

#[test]
fn disjoint_boxes_are_independent_without_coupling() {
    let s = chaos_sampler(&KernelSpec::exact_1d(1.0).unwrap(), 256, 64);
    let unit = Region::interval(0.0, 1.0).unwrap();
    let (left, right) = (Region::interval(0.0, 0.5).unwrap(), Region::interval(0.5, 1.0).unwrap());
    let alpha = 0.5;
    let z_min = ZMin::for_expected_count(1.0, alpha, 200.0).unwrap();
    let run = |gamma2: f64| {
        let pairs = map_indexed(4000, |r| {
            let field = s.sample_field(21, r as u64);
            let mut rng = RngStream::new(21, r as u64, 0, Purpose::StableAtoms).rng();
            let atoms = sample_stable_atoms(&unit, alpha, z_min, &mut rng).unwrap();
            let m = build_atomic_direct(&field, gamma2, alpha, &atoms).unwrap();
            (m.ln_measure_box(&left), m.ln_measure_box(&right))
        });
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        pearson(&a, &b)
    };
    // Log masses have all moments, so the null correlation has SE 1/sqrt(n).
    let se0 = 1.0 / (4000f64 - 1.0).sqrt();
    let r = run(1e-4);
    assert!(r.abs() <= 3.0 * se0, "correlation {r}");
    // A shared field at real coupling does correlate the two halves.
    assert!(run(0.5) > 3.0 * se0);
}

/// Atoms drawn down to `z_min / 2` contain, as a subset, an exact draw with
/// threshold `z_min`, so both Laplace transforms come from the same replicas.
#[test]
fn halving_z_min_moves_laplace_within_truncation_bound() {
    let s = chaos_sampler(&KernelSpec::exact_1d(1.0).unwrap(), 256, 64);
    let unit = Region::interval(0.0, 1.0).unwrap();
    let alpha = 0.5;
    let z_min = ZMin::for_expected_count(1.0, alpha, 500.0).unwrap();
    let finer = ZMin::from_ln(z_min.ln() - std::f64::consts::LN_2).unwrap();
    let diffs = map_indexed(10_000, |r| {
        let field = s.sample_field(33, r as u64);
        let mut rng = RngStream::new(33, r as u64, 0, Purpose::StableAtoms).rng();
        let atoms = sample_stable_atoms(&unit, alpha, finer, &mut rng).unwrap();
        let m = build_atomic_direct(&field, 0.5, alpha, &atoms).unwrap();
        let coarse: Vec<f64> =
            m.ln_sizes().iter().zip(m.ln_masses()).filter(|(z, _)| **z >= z_min.ln()).map(|(_, w)| *w).collect();
        (-log_sum_exp(&coarse).exp()).exp() - (-m.total_mass()).exp()
    });
    let bound = z_min.truncation_bound(1.0, alpha);
    assert!(diffs.iter().all(|d| *d >= 0.0));
    assert!(mean(&diffs) < bound, "shift {} vs bound {bound}", mean(&diffs));
}
