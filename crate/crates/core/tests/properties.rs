use critband::{
    count_modes, count_profile, critical_bandwidth, critical_bandwidth_value, log_grid, CountMethod, DensityEstimate,
    KernelSpec, Sample,
};
use proptest::prelude::*;

fn fine_grid() -> CountMethod {
    CountMethod::grid(4096, 1e-10).unwrap()
}

fn count(s: &Sample, k: &KernelSpec, h: f64, m: &CountMethod) -> usize {
    count_modes(&DensityEstimate::new(s, k, h).unwrap(), m).unwrap().count()
}

/// Distinct points in `[-5, 5]` with spacings at least `1e-3`.
fn spread_sample(max_len: usize) -> impl Strategy<Value = Sample> {
    prop::collection::vec(-5.0f64..5.0, 2..=max_len).prop_filter_map("points too close", |v| {
        let s = Sample::new(v).ok()?;
        (s.min_spacing()? >= 1e-3).then_some(s)
    })
}

fn poly_kernel() -> impl Strategy<Value = KernelSpec> {
    (1u32..=6).prop_map(|t| KernelSpec::multiweight(t as f64).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separated_bumps_give_one_mode_each(s in spread_sample(12), k in poly_kernel(), frac in 0.05f64..0.49) {
        let h = frac * s.min_spacing().unwrap();
        prop_assert_eq!(count(&s, &k, h, &CountMethod::Exact), s.len());
    }

    #[test]
    fn large_bandwidth_is_unimodal(s in spread_sample(10), k in poly_kernel()) {
        // the estimate is concave on the hull once h exceeds the range
        let h = 1.01 * s.range() + 1e-9;
        prop_assert_eq!(count(&s, &k, h * 3.0, &CountMethod::Exact), 1);
    }

    #[test]
    fn counts_are_affine_invariant(
        s in spread_sample(8),
        k in poly_kernel(),
        hf in 0.3f64..2.0,
        scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        shift in -50.0f64..50.0,
    ) {
        let h = hf * s.min_spacing().unwrap().max(0.05 * s.range());
        let t = s.affine(scale, shift).unwrap();
        let a = count(&s, &k, h, &CountMethod::Exact);
        let b = count(&t, &k, h * scale.abs(), &CountMethod::Exact);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_agrees_with_fine_grid(s in spread_sample(8), theta in 1u32..=12, hf in 0.2f64..1.5) {
        let k = KernelSpec::multiweight(theta as f64).unwrap();
        let h = hf * s.range();
        let a = count(&s, &k, h, &CountMethod::Exact);
        let b = count(&s, &k, h, &fine_grid());
        prop_assert_eq!(a, b, "theta {} h {}", theta, h);
    }

    #[test]
    fn epanechnikov_pair_law(a in -10.0f64..10.0, d in 0.01f64..10.0) {
        let s = Sample::new(vec![a, a + d]).unwrap();
        let k = KernelSpec::epanechnikov();
        prop_assert_eq!(count(&s, &k, 0.49 * d, &CountMethod::Exact), 2);
        prop_assert_eq!(count(&s, &k, 0.75 * d, &CountMethod::Exact), 3);
        prop_assert_eq!(count(&s, &k, 1.5 * d, &CountMethod::Exact), 1);
    }

    #[test]
    fn pair_profiles_by_kernel(a in -10.0f64..10.0, d in 0.01f64..10.0) {
        let s = Sample::new(vec![a, a + d]).unwrap();
        let grid = log_grid(0.2 * d, 3.0 * d, 120);
        let bi = count_profile(&s, &KernelSpec::biweight(), &grid, &CountMethod::Exact).unwrap();
        prop_assert!(!bi.is_nonincreasing(), "{:?}", bi.compressed());
        let tri = count_profile(&s, &KernelSpec::triweight(), &grid, &CountMethod::Exact).unwrap();
        prop_assert!(tri.is_nonincreasing(), "{:?}", tri.compressed());
    }

    #[test]
    fn gaussian_count_never_rises(s in spread_sample(10)) {
        let k = KernelSpec::gaussian(1.0).unwrap();
        let m = CountMethod::default();
        let grid = log_grid(0.02 * s.range(), 2.0 * s.range(), 40);
        let p = count_profile(&s, &k, &grid, &m).unwrap();
        prop_assert!(p.is_nonincreasing(), "{:?}", p.compressed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn critical_bandwidth_scales(s in spread_sample(8), k in poly_kernel(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let a = critical_bandwidth_value(&s, &k, &CountMethod::Exact, 64).unwrap();
        let t = s.affine(scale, shift).unwrap();
        let b = critical_bandwidth_value(&t, &k, &CountMethod::Exact, 64).unwrap();
        prop_assert!((b / (a * scale) - 1.0).abs() < 1e-5, "{} vs {}", b, a * scale);
    }

    #[test]
    fn critical_bandwidth_ignores_search_density(s in spread_sample(8), k in poly_kernel()) {
        let base = critical_bandwidth_value(&s, &k, &CountMethod::Exact, 64).unwrap();
        for d in [256, 1024] {
            let h = critical_bandwidth_value(&s, &k, &CountMethod::Exact, d).unwrap();
            prop_assert!((h / base - 1.0).abs() < 1e-5, "density {}: {} vs {}", d, h, base);
        }
    }

    #[test]
    fn critical_bandwidth_is_the_last_drop_to_one(s in spread_sample(8), k in poly_kernel()) {
        let r = critical_bandwidth(&s, &k, &CountMethod::Exact, 64).unwrap();
        let h = r.h_crit;
        prop_assert!(count(&s, &k, h * (1.0 + 1e-5), &CountMethod::Exact) == 1);
        prop_assert!(count(&s, &k, h * (1.0 - 1e-5), &CountMethod::Exact) >= 2);
        if let Some(hn) = r.h_nonm {
            prop_assert!(hn <= h);
        }
    }
}
