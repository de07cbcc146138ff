use gmclab_core::analysis::covering::ln_power_sum;
use gmclab_core::analysis::kpz::{kpz_solve, kpz_solve_dual};
use gmclab_core::analysis::spectrum::{estimate_spectrum, MassSamples};
use gmclab_core::analysis::stats::BootstrapSpec;
use gmclab_core::analysis::tail::{hill_from_logs, hill_tail_index};
use gmclab_core::atomic::{alpha_from_gamma, log_sum_exp, xi_bar};
use gmclab_core::chaos::xi;
use gmclab_core::kernels::{KernelSpec, LevelRange};
use gmclab_core::par::tree_sum;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kpz_inverts_xi(x in 0.0f64..=1.0, gamma2 in 0.01f64..1.99, d in 1usize..=2) {
        let g2 = gamma2 * d as f64;
        let dim = xi(g2, d, x) / d as f64;
        prop_assume!(dim <= 1.0);
        let back = kpz_solve(dim, g2, d).unwrap();
        prop_assert!((back - x).abs() <= 1e-12, "x = {x}, back = {back}");
    }

    #[test]
    fn dual_root_is_alpha_times_root(dim in 0.0f64..=1.0, gamma2 in 0.01f64..1.99, d in 1usize..=2) {
        let g2 = gamma2 * d as f64;
        let a = alpha_from_gamma(g2, d).unwrap();
        let k = kpz_solve(dim, g2, d).unwrap();
        let kd = kpz_solve_dual(dim, g2, d).unwrap();
        prop_assert!((kd - a * k).abs() <= 1e-12);
        prop_assert!((xi_bar(g2, a, d, kd) / d as f64 - dim).abs() <= 1e-12);
    }

    #[test]
    fn hill_is_scale_invariant(seed in 0u64..1000, scale in 1e-6f64..1e6, k in 30usize..200) {
        let xs: Vec<f64> = (0..500).map(|i| 1.0 + ((i as u64 * 7919 + seed * 104729) % 100_003) as f64 / 7.0).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let a = hill_tail_index(&xs, k).unwrap().alpha;
        let b = hill_tail_index(&scaled, k).unwrap().alpha;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        prop_assert_eq!(hill_from_logs(&logs, k).unwrap().alpha, a);
    }

    /// `M(lambda) = lambda^s Y` has every moment exactly `C_q lambda^{s q}`.
    #[test]
    fn regression_recovers_exact_power_laws(s in 0.2f64..3.0, spread in 0.0f64..2.0, q in 0.1f64..2.5) {
        let lambdas = vec![0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let mut m = MassSamples::new(lambdas.clone());
        for r in 0..64 {
            let y = spread * ((r as f64) * 0.618).fract();
            m.push_ln_masses(lambdas.iter().map(|l: &f64| s * l.ln() + y).collect());
        }
        let fit = estimate_spectrum(&m, &[q], BootstrapSpec::new(10, 3)).unwrap();
        prop_assert!((fit.slopes[0] - s * q).abs() <= 1e-9);
    }

    #[test]
    fn exact_scaling_identity(l_inv in 1u32..32, r in 0.0f64..1.0, lambda in 0.01f64..1.0) {
        let spec = KernelSpec::exact_1d(1.0).unwrap();
        let l = 1.0 / l_inv as f64;
        let lhs = spec.scale_kernel(lambda * l, lambda * r).unwrap();
        let rhs = spec.scale_kernel(l, r).unwrap() + (1.0 / lambda).ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
        let direct = spec.radial(LevelRange::upto(l_inv).unwrap(), r).unwrap();
        prop_assert!((spec.scale_kernel(l, r).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn tree_sum_is_exact_on_integers(xs in proptest::collection::vec(-1_000_000i64..1_000_000, 0..300)) {
        let f: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        prop_assert_eq!(tree_sum(&f), xs.iter().sum::<i64>() as f64);
    }

    #[test]
    fn power_sums_match_direct_sums(ms in proptest::collection::vec(1e-6f64..1.0, 1..50), s in 0.0f64..2.0) {
        let ln: Vec<f64> = ms.iter().map(|m| m.ln()).collect();
        let direct: f64 = ms.iter().map(|m| m.powf(s)).sum();
        prop_assert!((ln_power_sum(&ln, s) - direct.ln()).abs() <= 1e-10);
        prop_assert!((log_sum_exp(&ln) - ms.iter().sum::<f64>().ln()).abs() <= 1e-12);
    }
}
