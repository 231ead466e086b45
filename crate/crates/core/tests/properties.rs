use anderson_core::disorder::{decompose, isotonic_nondecreasing, sample_field, site_value, DisorderSpec, FieldSample, Law, Region};
use anderson_core::ensemble::{clopper_pearson, correlator, ProbabilityEstimate};
use anderson_core::geometry::{classify_pi_fi, next_scale, sym_distance, Cube, Dims, Interactivity, Site, DEFAULT_SITE_CAP};
use anderson_core::model::{assemble_hamiltonian, InteractionSpec};
use anderson_core::msa::{core_radius, gamma, is_ns, max_separated_family, GammaExponent, MsaParams};
use anderson_core::spectral::{diagonalize, dist_to_spectrum, Resolvent};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Dims> {
    (1usize..=2, 1usize..=3).prop_flat_map(|(d, n)| (Just(d), Just(n), n..=3)).prop_map(|(d, n, nm)| Dims::new(d, n, nm).unwrap())
}

fn site(width: usize) -> impl Strategy<Value = Site> {
    prop::collection::vec(-20i64..20, width).prop_map(Site::new)
}

/// Small random Hamiltonian (dimension at most 125).
fn small_hamiltonian() -> impl Strategy<Value = (Cube, anderson_core::model::HamiltonianMatrix)> {
    (1usize..=2, 1usize..=2, 0u64..=2, any::<u64>(), 0.1f64..20.0, 0.0f64..3.0).prop_map(|(d, n, l, seed, b, u)| {
        let cube = Cube::at_origin(Dims::new(d, n, n).unwrap(), l);
        let spec = DisorderSpec::new(Law::Uniform { low: 0.0, high: b }, seed).unwrap();
        let region = Region::covering(&[&cube], DEFAULT_SITE_CAP).unwrap();
        let field = sample_field(&spec, &region, 0);
        let h = assemble_hamiltonian(&cube, &field, &InteractionSpec::on_site(u).unwrap(), DEFAULT_SITE_CAP).unwrap();
        (cube, h)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_map_is_a_bijection(dims in dims_strategy(), l in 0u64..3) {
        let cube = Cube::at_origin(dims, l);
        let volume = cube.volume().unwrap() as usize;
        for i in (0..volume).step_by(7) {
            prop_assert_eq!(cube.index_of(&cube.site_at(i)), Some(i));
        }
    }

    #[test]
    fn sym_distance_is_a_symmetric_lower_bound(n in 1usize..=3, d in 1usize..=2, seed in any::<u64>()) {
        let spec = DisorderSpec::new(Law::Uniform { low: -20.0, high: 20.0 }, seed).unwrap();
        let x = Site::new((0..n * d).map(|k| site_value(&spec, 0, &[k as i64]) as i64).collect());
        let y = Site::new((0..n * d).map(|k| site_value(&spec, 1, &[k as i64]) as i64).collect());
        let ds = sym_distance(&x, &y, d);
        prop_assert_eq!(ds, sym_distance(&y, &x, d));
        prop_assert!(ds <= x.max_dist(&y));
        let reversed: Vec<usize> = (0..n).rev().collect();
        prop_assert_eq!(ds, sym_distance(&x.permuted(&reversed, d), &y, d));
    }

    #[test]
    fn scales_grow(l in 3u64..1_000_000) {
        let next = next_scale(l).unwrap();
        prop_assert!(next > l);
        let root = (l as f64).powf(1.5);
        prop_assert!((next as f64 - 1.0 - root).abs() <= 1.0 + root * 1e-12);
    }

    #[test]
    fn pi_witness_is_separated(center in site(3), l in 0u64..4, r0 in 0u64..3) {
        let cube = Cube::new(Dims::new(1, 3, 3).unwrap(), center, l).unwrap();
        if let Interactivity::Partial { group, rest } = classify_pi_fi(&cube, r0) {
            prop_assert!(group.contains(&0));
            for &i in &group {
                for &j in &rest {
                    let gap = cube.center().particle(i, 1)[0].abs_diff(cube.center().particle(j, 1)[0]);
                    prop_assert!(gap >= 4 * l + r0);
                }
            }
        }
    }

    #[test]
    fn sampling_depends_only_on_seed_realization_and_site(seed in any::<u64>(), r in 0u64..1000, x in -1000i64..1000) {
        let spec = DisorderSpec::new(Law::Gaussian { mean: 0.0, stdev: 1.0 }, seed).unwrap();
        let region = Region::from_sites(vec![Site::new(vec![x]), Site::new(vec![x + 5])]).unwrap();
        let field = sample_field(&spec, &region, r);
        prop_assert_eq!(field.value_at(&[x]), Some(site_value(&spec, r, &[x])));
    }

    #[test]
    fn mean_fluctuation_reconstructs(values in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let sites = (0..values.len() as i64).map(|i| Site::new(vec![i])).collect();
        let field = FieldSample::from_values(Region::from_sites(sites).unwrap(), values.clone()).unwrap();
        let parts = decompose(&field);
        let fluct_sum: f64 = parts.fluct.iter().sum();
        prop_assert!(fluct_sum.abs() <= 1e-9 * values.len() as f64 * 1e3);
        for (a, b) in parts.reconstruct().iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn isotonic_fit_is_monotone_and_mass_preserving(ys in prop::collection::vec(0.0f64..1.0, 1..30)) {
        let fit = isotonic_nondecreasing(&ys);
        prop_assert!(fit.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        let (a, b): (f64, f64) = (ys.iter().sum(), fit.iter().sum());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_is_symmetric_with_gershgorin_spectrum((_cube, h) in small_hamiltonian()) {
        for i in 0..h.dim() {
            for j in 0..h.dim() {
                prop_assert_eq!(h.entry(i, j), h.entry(j, i));
            }
        }
        let decomp = diagonalize(&h).unwrap();
        let (lo, hi) = h.gershgorin();
        prop_assert!(decomp.eigenvalues().iter().all(|&e| e >= lo - 1e-9 && e <= hi + 1e-9));
        let trace: f64 = decomp.eigenvalues().iter().sum();
        prop_assert!((trace - h.trace()).abs() <= 1e-9 * (1.0 + h.trace().abs()));
    }

    #[test]
    fn resolvent_columns_solve_the_system((_cube, h) in small_hamiltonian(), shift in -3.0f64..3.0) {
        let decomp = diagonalize(&h).unwrap();
        let energy = decomp.eigenvalues()[0] + shift;
        prop_assume!(dist_to_spectrum(&decomp, energy) > 1e-4);
        let resolvent = Resolvent::new(&h, energy).unwrap();
        let column = resolvent.column(0).unwrap();
        prop_assert!(resolvent.residual(&column, 0) <= 1e-9);
        for (x, g) in column.iter().enumerate() {
            prop_assert!((g - decomp.green(x, 0, energy)).abs() <= 1e-7 * (1.0 + g.abs()));
        }
    }

    #[test]
    fn correlator_is_symmetric_and_bounded_by_trace((_cube, h) in small_hamiltonian(), lo in -1.0f64..10.0, width in 0.0f64..10.0) {
        let decomp = diagonalize(&h).unwrap();
        let interval = (lo, lo + width);
        let count = decomp.count_in(interval.0, interval.1) as f64;
        for x in 0..h.dim().min(10) {
            for y in 0..h.dim().min(10) {
                let q = correlator(&decomp, interval, x, y);
                prop_assert!(q >= 0.0);
                prop_assert!((q - correlator(&decomp, interval, y, x)).abs() < 1e-15);
            }
            prop_assert!(correlator(&decomp, interval, x, x) <= count + 1e-12);
        }
    }

    #[test]
    fn gamma_decreases_in_l_and_is_bounded(m in 0.01f64..10.0, l in 1u64..10_000, n_max in 1usize..=4, n_off in 0usize..4) {
        let n = n_max - n_off.min(n_max - 1);
        for exponent in [GammaExponent::Quarter, GammaExponent::Eighth] {
            let g = gamma(m, l, n, n_max, exponent);
            prop_assert!(g > gamma(m, l + 1, n, n_max, exponent));
            prop_assert!(g > m && g <= m * 2f64.powi((n_max - n + 1) as i32) * (1.0 + 1e-15));
            if n > 1 {
                prop_assert!(gamma(m, l, n - 1, n_max, exponent) > g);
            }
        }
    }

    #[test]
    fn core_radius_is_the_integer_cube_root(l in 0u64..2_000_000) {
        let r = core_radius(l) as u128;
        let target = (l as u128).pow(2);
        prop_assert!(r.pow(3) <= target && (r + 1).pow(3) > target);
    }

    #[test]
    fn ns_is_monotone_in_mass((_cube, h) in small_hamiltonian(), m in 0.0f64..3.0, frac in 0.0f64..1.0, e in -2.0f64..15.0) {
        prop_assume!(h.cube().radius() >= 1);
        let decomp = diagonalize(&h).unwrap();
        let strong = MsaParams::new(10.0, m, 3, 10.0).unwrap();
        let a = is_ns(&h, &decomp, e, &strong);
        let b = is_ns(&h, &decomp, e, &strong.with_m(m * frac));
        prop_assert!(!a.is_ns || b.is_ns);
        prop_assert_eq!(a.is_ns, a.observed_max.is_some_and(|o| o <= a.threshold));
        if a.resonant {
            prop_assert!(!a.is_ns);
        }
    }

    #[test]
    fn separated_family_shrinks_with_separation(points in prop::collection::vec(site(2), 0..8), sep in 0u64..10) {
        let a = max_separated_family(&points, 1, sep).len();
        let b = max_separated_family(&points, 1, sep + 3).len();
        prop_assert!(b <= a || a >= 5);
    }

    #[test]
    fn clopper_pearson_contains_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let e = ProbabilityEstimate::new("p", k.min(n), n);
        prop_assert!(0.0 <= e.lower() && e.lower() <= e.p_hat && e.p_hat <= e.upper() && e.upper() <= 1.0);
        let (lo, hi) = clopper_pearson(k.min(n), n, 0.05);
        prop_assert!(lo <= hi);
    }
}
