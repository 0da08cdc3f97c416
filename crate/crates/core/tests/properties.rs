use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sublinear::axioms::{random_family, random_function};
use sublinear::envelope::{rolling_local_variance, variance_envelope, EnvelopeConfig, TimeSeries};
use sublinear::lln_sim::{rate_check, simulate_path, MeanPolicy, NoiseSpec, SimConfig};
use sublinear::mle::{likelihood, mle_estimate, SampleSet};
use sublinear::{
    indicator_approx, BoundedLipschitzFn, GridSpec, JointSpec, MaximalDist, MultiLipschitzFn,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn interval() -> impl Strategy<Value = MaximalDist> {
    (-10.0..10.0f64, 0.0..5.0f64).prop_map(|(lo, w)| MaximalDist::new(lo, lo + w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn monotone_and_constant_preserving(seed in any::<u64>(), c in -1e6..1e6f64) {
        let mut r = rng(seed);
        let fam = random_family(&mut r).unwrap();
        let f = random_function(&mut r);
        // g >= f everywhere
        let bump = BoundedLipschitzFn::abs_dev(r.random_range(-5.0..5.0)).scaled(r.random_range(0.0..2.0));
        let g = f.plus(&bump);
        prop_assert!(fam.sublinear_expect(&f).unwrap().value <= fam.sublinear_expect(&g).unwrap().value);
        prop_assert_eq!(fam.sublinear_expect(&BoundedLipschitzFn::constant(c)).unwrap().value, c);
    }

    #[test]
    fn subadditive_and_homogeneous(seed in any::<u64>(), lambda in 0.0..100.0f64) {
        let mut r = rng(seed);
        let fam = random_family(&mut r).unwrap();
        let (f, g) = (random_function(&mut r), random_function(&mut r));
        let e = |h: &BoundedLipschitzFn| fam.sublinear_expect(h).unwrap().value;
        let (ef, eg) = (e(&f), e(&g));
        prop_assert!(e(&f.plus(&g)) <= ef + eg + 1e-12 * (ef.abs() + eg.abs()).max(1.0));
        let scaled = e(&f.scaled(lambda));
        prop_assert!((scaled - lambda * ef).abs() <= 1e-12 * (lambda * ef).abs().max(1.0));
    }

    #[test]
    fn capacity_is_the_indicator_limit(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fam = random_family(&mut r).unwrap();
        let pts: Vec<f64> = fam.support().collect();
        let x_star = pts[r.random_range(0..pts.len())];
        let cap = fam.capacity(|x| x == x_star);
        let gap = pts.iter().map(|p| (p - x_star).abs()).filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
        let k = 1_000_000u32;
        let approx = fam.sublinear_expect(&indicator_approx(x_star, k).unwrap()).unwrap().value;
        // approximation is above the capacity, and off by at most the tail at the nearest other atom
        prop_assert!(approx >= cap - 1e-15);
        if gap.is_finite() {
            prop_assert!(approx - cap <= 1.0 / (1.0 + f64::from(k) * gap) + 1e-12);
        } else {
            prop_assert!((approx - cap).abs() <= 1e-12);
        }
    }

    #[test]
    fn grid_halving_is_monotone_and_certified(d in interval(), seed in any::<u64>(), step in 0.01..1.0f64) {
        let f = random_function(&mut rng(seed));
        let coarse = d.eval_maximal(&f, &GridSpec::new(step).unwrap()).unwrap();
        let fine = d.eval_maximal(&f, &GridSpec::new(step / 2.0).unwrap()).unwrap();
        prop_assert!(fine.value >= coarse.value);
        prop_assert!(fine.value - coarse.value <= coarse.error_bound + 1e-12);
        prop_assert!(fine.error_bound <= coarse.error_bound);
    }

    #[test]
    fn refinement_never_lowers_the_grid_value(d in interval(), seed in any::<u64>()) {
        let f = random_function(&mut rng(seed));
        let g = GridSpec::new(0.05).unwrap();
        let plain = d.eval_maximal(&f, &g).unwrap();
        let refined = d.eval_maximal(&f, &g.refined()).unwrap();
        prop_assert!(refined.value >= plain.value);
        prop_assert!(refined.error_bound <= plain.error_bound);
        prop_assert!(d.contains(refined.argmax));
    }

    #[test]
    fn interval_distance_is_1_lipschitz(d in interval(), x in -30.0..30.0f64, y in -30.0..30.0f64) {
        let (dx, dy) = (d.interval_distance(x), d.interval_distance(y));
        prop_assert!((dx - dy).abs() <= (x - y).abs() + 1e-12);
        prop_assert_eq!(dx == 0.0, d.contains(x));
        prop_assert!(dx >= 0.0);
    }

    #[test]
    fn box_maximum_ignores_nesting_order(
        dists in prop::collection::vec(interval(), 2..=3),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let n = dists.len();
        let ws: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let shift = r.random_range(-3.0..3.0);
        let lip: Vec<f64> = ws.iter().map(|w| w.abs() + 1.0).collect();
        let ws2 = ws.clone();
        let f = MultiLipschitzFn::new(
            move |x: &[f64]| {
                let s: f64 = x.iter().zip(&ws2).map(|(x, w)| w * x).sum();
                (s - shift).sin() + x[0].abs()
            },
            lip,
            f64::INFINITY,
        )
        .unwrap();
        let g = GridSpec::new(0.25).unwrap();
        let forward = JointSpec::maximal(dists.clone()).unwrap().compose_independent(&f, &g).unwrap();
        let order: Vec<usize> = (0..n).rev().collect();
        let reversed_dists: Vec<MaximalDist> = order.iter().map(|&i| dists[i]).collect();
        let backward = JointSpec::maximal(reversed_dists)
            .unwrap()
            .compose_independent(&f.permuted(&order).unwrap(), &g)
            .unwrap();
        prop_assert!((forward.value - backward.value).abs() <= forward.error_bound + backward.error_bound + 1e-12);
    }

    #[test]
    fn indicator_approx_shape(x_star in -5.0..5.0f64, k in 1u32..200, x in -10.0..10.0f64, h in 1e-6..1e-2f64) {
        let a = indicator_approx(x_star, k).unwrap();
        let b = indicator_approx(x_star, k + 1).unwrap();
        prop_assert_eq!(a.eval(x_star), 1.0);
        prop_assert!(b.eval(x) <= a.eval(x));
        let slope = (a.eval(x + h) - a.eval(x)).abs() / h;
        prop_assert!(slope <= f64::from(k) * (1.0 + 1e-6));
    }

    #[test]
    fn point_capacity_trace_decreases_to_limit(
        dists in prop::collection::vec(interval(), 1..=3),
        offsets in prop::collection::vec(-3.0..3.0f64, 3),
    ) {
        let points: Vec<f64> = dists.iter().zip(&offsets).map(|(d, o)| d.mu_lo() + o).collect();
        let pc = JointSpec::maximal(dists.clone()).unwrap().point_capacity(&points, 200).unwrap();
        prop_assert!(pc.trace.windows(2).all(|w| w[1] <= w[0]));
        let inside = dists.iter().zip(&points).all(|(d, &x)| d.contains(x));
        prop_assert_eq!(pc.value, if inside { 1.0 } else { 0.0 });
        if inside {
            prop_assert!(pc.trace.iter().all(|&v| v == 1.0));
        } else {
            let dist = dists.iter().zip(&points).map(|(d, &x)| d.interval_distance(x)).fold(0.0, f64::max);
            prop_assert!(pc.trace[199] <= 1.0 / (1.0 + 200.0 * dist) + 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn paths_are_deterministic_and_stay_in_interval(d in interval(), seed in any::<u64>(), n in 1usize..300) {
        let policies = [
            MeanPolicy::Random(vec![d.mu_lo(), d.mu_hi()]),
            MeanPolicy::oscillating(&d),
            MeanPolicy::Constant(d.mu_lo()),
            MeanPolicy::Constant(d.mu_hi()),
        ];
        let cfg = SimConfig::new(n, 3, seed).unwrap();
        let a = simulate_path(&d, &policies[0], &NoiseSpec::None, &cfg).unwrap();
        prop_assert_eq!(&a, &simulate_path(&d, &policies[0], &NoiseSpec::None, &cfg).unwrap());
        for path in &a {
            let mean = path.iter().sum::<f64>() / path.len() as f64;
            prop_assert!(mean >= d.mu_lo() - 1e-9 && mean <= d.mu_hi() + 1e-9);
        }
        let r = rate_check(&d, &policies, &NoiseSpec::None, &cfg, &[n]).unwrap();
        prop_assert!(r.rows.iter().all(|row| row.estimate == 0.0));
    }

    #[test]
    fn repeated_endpoint_average_has_zero_distance(tenths in 1u32..100, n in 1usize..2000) {
        // 0.1-style means overshoot under naive summation
        let hi = f64::from(tenths) / 10.0;
        let d = MaximalDist::new(-1.0, hi).unwrap();
        let cfg = SimConfig::new(n, 1, 0).unwrap();
        let r = rate_check(&d, &[MeanPolicy::Constant(hi)], &NoiseSpec::None, &cfg, &[n]).unwrap();
        prop_assert_eq!(r.rows[0].estimate, 0.0);
    }

    #[test]
    fn rate_check_reports_no_violations(
        seed in any::<u64>(),
        means in prop::collection::vec(-1.0..1.0f64, 1..5),
        a in 0.0..1.0f64,
        two_point in any::<bool>(),
    ) {
        let d = MaximalDist::new(-1.0, 1.0).unwrap();
        let noise = if two_point { NoiseSpec::two_point(a).unwrap() } else { NoiseSpec::uniform(a).unwrap() };
        let policies = [
            MeanPolicy::Periodic(means.clone()),
            MeanPolicy::Random(means.clone()),
            MeanPolicy::Constant(means[0]),
        ];
        let cfg = SimConfig::new(200, 100, seed).unwrap();
        let r = rate_check(&d, &policies, &noise, &cfg, &[10, 50, 200]).unwrap();
        prop_assert_eq!(r.violations.as_deref(), Some(&[][..]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mle_ignores_order_and_duplicates(
        mut xs in prop::collection::vec(-1e3..1e3f64, 1..60),
        seed in any::<u64>(),
    ) {
        let base = mle_estimate(&SampleSet::new(xs.clone()).unwrap());
        let mut r = rng(seed);
        for i in (1..xs.len()).rev() {
            xs.swap(i, r.random_range(0..=i));
        }
        prop_assert_eq!(mle_estimate(&SampleSet::new(xs.clone()).unwrap()), base);
        let mut doubled = xs.clone();
        doubled.extend_from_slice(&xs);
        let twice = mle_estimate(&SampleSet::new(doubled).unwrap());
        prop_assert_eq!((twice.mu_lo_hat, twice.mu_hi_hat, twice.delta), (base.mu_lo_hat, base.mu_hi_hat, base.delta));
    }

    #[test]
    fn likelihood_monotone_and_tight(
        xs in prop::collection::vec(-100.0..100.0f64, 1..40),
        lo in -150.0..150.0f64,
        w in 0.0..300.0f64,
        grow in 0.0..50.0f64,
    ) {
        let s = SampleSet::new(xs).unwrap();
        let v = likelihood(&s, lo, lo + w).unwrap();
        prop_assert!(likelihood(&s, lo - grow, lo + w + grow).unwrap() >= v);
        let m = mle_estimate(&s);
        prop_assert_eq!(likelihood(&s, m.mu_lo_hat, m.mu_hi_hat).unwrap(), 1);
        if w < s.max() - s.min() {
            prop_assert_eq!(v, 0);
        }
    }

    // dyadic data keep every intermediate exact, so equivariance holds bit for bit
    #[test]
    fn envelope_shift_and_scale_exact(
        raw in prop::collection::vec(-512i32..512, 40..80),
        shift in -512i32..512,
        log_l in 1u32..5,
        k in 1usize..10,
        pow in -3i32..4,
    ) {
        let z: Vec<f64> = raw.iter().map(|&v| f64::from(v) / 8.0).collect();
        let l = 1usize << log_l;
        let cfg = EnvelopeConfig::new(l, k, true).unwrap();
        let base = rolling_local_variance(&TimeSeries::new(z.clone(), None).unwrap(), &cfg, None).unwrap();
        let c = f64::from(shift) / 8.0;
        let shifted: Vec<f64> = z.iter().map(|x| x + c).collect();
        prop_assert_eq!(
            &rolling_local_variance(&TimeSeries::new(shifted, None).unwrap(), &cfg, None).unwrap(),
            &base
        );
        let s = 2f64.powi(pow);
        let scaled: Vec<f64> = z.iter().map(|x| x * s).collect();
        let expect: Vec<f64> = base.iter().map(|v| v * s * s).collect();
        prop_assert_eq!(rolling_local_variance(&TimeSeries::new(scaled, None).unwrap(), &cfg, None).unwrap(), expect);
    }

    #[test]
    fn envelope_orders_and_raw_relation(
        z in prop::collection::vec(-10.0..10.0f64, 30..120),
        l in 2usize..12,
        k in 1usize..12,
        shift in -5.0..5.0f64,
        scale in 0.1..10.0f64,
    ) {
        let ts = TimeSeries::new(z.clone(), None).unwrap();
        let demeaned = rolling_local_variance(&ts, &EnvelopeConfig::new(l, k, true).unwrap(), None).unwrap();
        let raw = rolling_local_variance(&ts, &EnvelopeConfig::new(l, k, false).unwrap(), None).unwrap();
        let env = variance_envelope(&demeaned).unwrap();
        prop_assert!(demeaned.iter().all(|&v| env.sigma_lo_sq <= v && v <= env.sigma_hi_sq));
        prop_assert!(demeaned.contains(&env.sigma_lo_sq) && demeaned.contains(&env.sigma_hi_sq));
        let t = z.len();
        for (j, (&d, &r)) in demeaned.iter().zip(&raw).enumerate() {
            let w = &z[t - (j + 1) + 1 - l..=t - (j + 1)];
            let mu = w.iter().sum::<f64>() / l as f64;
            let expect = d + l as f64 * mu * mu / (l - 1) as f64;
            prop_assert!((r - expect).abs() <= 1e-10 * r.max(1.0));
        }
        // general (non-dyadic) data: equivariance up to rounding
        let moved: Vec<f64> = z.iter().map(|x| scale * x + shift).collect();
        let moved = rolling_local_variance(
            &TimeSeries::new(moved, None).unwrap(),
            &EnvelopeConfig::new(l, k, true).unwrap(),
            None,
        )
        .unwrap();
        for (&a, &b) in demeaned.iter().zip(&moved) {
            prop_assert!((b - scale * scale * a).abs() <= 1e-9 * (scale * scale * a).max(1.0));
        }
    }
}
