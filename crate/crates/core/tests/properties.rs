use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, Signed, Zero};
use proptest::prelude::*;

use paircorr_core::diophantine::{
    count_condition_a, count_condition_b, CountMode, CountParams, Threshold,
};
use paircorr_core::exact::parse_rational;
use paircorr_core::experiments::{decay_fit, series_from_values, subsequence_grid};
use paircorr_core::paircorr::{
    count_pairs_direct, count_pairs_sorted, r2_smooth, r2_window, Algorithm, WindowFunction,
};
use paircorr_core::precision::{frac_dilate, Alpha, CirclePoint, PhaseTable, SequenceTable, DEFAULT_GUARD};
use paircorr_core::sequences::LacunarySequence;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn points(v: &[f64]) -> Vec<CirclePoint> {
    v.iter().map(|&t| CirclePoint::wrap(t)).collect()
}

/// Geometric terms `r^x` as exact rationals, `x = 1..=n`.
fn geometric_terms(r: &BigRational, n: usize) -> Vec<BigRational> {
    (1..=n as u64).map(|x| Pow::pow(r, x)).collect()
}

/// Triple loop over exact rationals, independent of the library's deciders.
fn brute_a(terms: &[BigRational], m: u64, k: &BigRational) -> u64 {
    let mut c = 0;
    for (i, a) in terms.iter().enumerate() {
        for (j, b) in terms.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = (a - b).abs();
            for n in 1..=m {
                if BigRational::from_integer(n.into()) * &d < *k {
                    c += 1;
                }
            }
        }
    }
    c
}

/// Six loops over exact rationals.
fn brute_b(terms: &[BigRational], m: i64, k: &BigRational) -> u64 {
    let mut diffs = Vec::new();
    for (i, a) in terms.iter().enumerate() {
        for (j, b) in terms.iter().enumerate() {
            if i != j {
                diffs.push(a - b);
            }
        }
    }
    let signed: Vec<i64> = (1..=m).flat_map(|v| [-v, v]).collect();
    let mut c = 0;
    for &n1 in &signed {
        for d1 in &diffs {
            let u = BigRational::from_integer(n1.into()) * d1;
            for &n2 in &signed {
                for d2 in &diffs {
                    let v = &u - BigRational::from_integer(n2.into()) * d2;
                    if v.abs() < *k {
                        c += 1;
                    }
                }
            }
        }
    }
    c
}

fn ratio_strategy() -> impl Strategy<Value = BigRational> {
    prop_oneof![Just(rat(2, 1)), Just(rat(3, 2)), Just(rat(5, 3)), Just(rat(3, 1))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sorted_pair_count_equals_direct(
        raw in prop::collection::vec(0.0f64..1.0, 2..300),
        s in 0.01f64..6.0,
    ) {
        let pts = points(&raw);
        let h = (s / (2.0 * pts.len() as f64)).min(0.5);
        prop_assert_eq!(count_pairs_direct(&pts, h), count_pairs_sorted(&pts, h));
    }

    #[test]
    fn lattice_points_hit_boundaries_consistently(
        idx in prop::collection::vec(0u32..32, 2..200),
        den in 1u32..32,
        s in 1u32..16,
    ) {
        let pts: Vec<CirclePoint> = idx.iter().map(|&i| CirclePoint::wrap(i as f64 / den as f64)).collect();
        let h = (s as f64 / 32.0).min(0.5);
        prop_assert_eq!(count_pairs_direct(&pts, h), count_pairs_sorted(&pts, h));
    }

    #[test]
    fn window_statistic_grows_with_width(
        raw in prop::collection::vec(0.0f64..1.0, 2..200),
        s1 in 0.01f64..1.0,
        grow in 0.0f64..1.0,
    ) {
        let pts = points(&raw);
        let a = r2_window(&pts, s1, Algorithm::Sorted).unwrap().pairs.unwrap();
        let b = r2_window(&pts, s1 + grow, Algorithm::Sorted).unwrap().pairs.unwrap();
        prop_assert!(a <= b);
        prop_assert_eq!(a % 2, 0);
    }

    #[test]
    fn smooth_statistic_is_rotation_invariant(
        raw in prop::collection::vec(0.0f64..1.0, 2..120),
        shift in 0.0f64..1.0,
    ) {
        let w = WindowFunction::triangle(1.0).unwrap();
        let a = r2_smooth(&points(&raw), &w).unwrap().value;
        let moved: Vec<f64> = raw.iter().map(|t| t + shift).collect();
        let b = r2_smooth(&points(&moved), &w).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn integer_part_of_alpha_is_invisible_for_integer_sequences(
        x in 1u64..400,
        int in 1i64..50,
        p in 1i64..1000,
    ) {
        let two = LacunarySequence::geometric(rat(2, 1)).unwrap();
        let frac = rat(p, 1001);
        let a = frac_dilate(&Alpha::new(frac.clone()).unwrap(), &two, x).unwrap().theta();
        let b = frac_dilate(&Alpha::new(frac + rat(int, 1)).unwrap(), &two, x).unwrap().theta();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rational_phases_are_exact(x in 1u64..300, q in 2i64..40) {
        // {2^x / q} = (2^x mod q) / q
        let two = LacunarySequence::geometric(rat(2, 1)).unwrap();
        let got = frac_dilate(&Alpha::new(rat(1, q)).unwrap(), &two, x).unwrap().theta();
        let r = BigInt::from(2).modpow(&BigInt::from(x), &BigInt::from(q));
        let want = r.to_string().parse::<f64>().unwrap() / q as f64;
        prop_assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn condition_a_matches_exact_brute_force(
        r in ratio_strategy(),
        n in 2usize..9,
        m in 1u64..40,
        kn in 0i64..60,
        kd in 1i64..7,
    ) {
        let seq = LacunarySequence::geometric(r.clone()).unwrap();
        let k = rat(kn, kd);
        let want = brute_a(&geometric_terms(&r, n), m, &k);
        let p = CountParams::explicit(n, m, k).unwrap();
        for mode in [CountMode::Oracle, CountMode::Fast] {
            prop_assert_eq!(count_condition_a(&seq, &p, mode).unwrap().count, want);
        }
    }

    #[test]
    fn condition_b_matches_exact_brute_force(
        r in ratio_strategy(),
        n in 2usize..5,
        m in 1u64..5,
        kn in 0i64..40,
        kd in 1i64..5,
    ) {
        let seq = LacunarySequence::geometric(r.clone()).unwrap();
        let k = rat(kn, kd);
        let want = brute_b(&geometric_terms(&r, n), m as i64, &k);
        let p = CountParams::explicit(n, m, k).unwrap();
        for mode in [CountMode::Oracle, CountMode::Fast, CountMode::Windowed] {
            prop_assert_eq!(count_condition_b(&seq, &p, mode).unwrap().count, want, "{}", mode);
        }
    }

    #[test]
    fn counts_are_monotone_in_k(
        n in 2usize..7,
        m in 1u64..6,
        k1 in 0i64..30,
        dk in 0i64..30,
    ) {
        let seq = LacunarySequence::geometric(rat(3, 2)).unwrap();
        let lo = CountParams::explicit(n, m, rat(k1, 2)).unwrap();
        let hi = CountParams::explicit(n, m, rat(k1 + dk, 2)).unwrap();
        let a = |p: &CountParams| count_condition_a(&seq, p, CountMode::Fast).unwrap().count;
        let b = |p: &CountParams| count_condition_b(&seq, p, CountMode::Fast).unwrap().count;
        prop_assert!(a(&lo) <= a(&hi));
        prop_assert!(b(&lo) <= b(&hi));
        // Ordered pairs and the four sign patterns give these factors.
        prop_assert_eq!(a(&hi) % 2, 0);
        prop_assert_eq!(b(&hi) % 8, 0);
    }

    #[test]
    fn power_threshold_compares_exactly(base in 2u64..2000, p in 1u32..5, q in 2u32..6, v in 1u64..100) {
        let t = Threshold::power(base, &rat(p as i64, q as i64)).unwrap();
        // v < base^(p/q)  <=>  v^q < base^p
        let want = BigInt::from(v).pow(q).cmp(&BigInt::from(base).pow(p));
        let got = t.cmp_rational(&BigRational::from_integer(v.into()));
        prop_assert_eq!(got, want);
    }

    #[test]
    fn decimal_and_fraction_spellings_agree(num in 0i64..100_000, scale in 0u32..6) {
        let den = 10i64.pow(scale);
        let text = format!("{}.{:0width$}", num / den, num % den, width = scale as usize);
        let text = if scale == 0 { format!("{num}") } else { text };
        prop_assert_eq!(parse_rational(&text).unwrap(), rat(num, den));
        prop_assert_eq!(parse_rational(&format!("{num}/{den}")).unwrap(), rat(num, den));
    }

    #[test]
    fn subsequence_grid_is_increasing(delta in 0.05f64..4.0, m_max in 1u64..60) {
        let g = match subsequence_grid(delta, m_max) {
            Ok(g) => g,
            Err(e) => {
                prop_assert!(e.is_budget());
                return Ok(());
            }
        };
        prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(g.iter().all(|&n| n >= 1));
    }

    #[test]
    fn decay_fit_recovers_power_laws(c in 0.1f64..10.0, slope in -3.0f64..-0.1) {
        let pts: Vec<(usize, f64)> = [64usize, 128, 256, 512, 1024]
            .iter()
            .map(|&n| (n, c * (n as f64).powf(slope)))
            .collect();
        let fit = decay_fit(&series_from_values(&pts), 200, 1).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!(fit.decays());
    }
}

#[test]
fn phase_prefixes_agree_with_fresh_tables() {
    let seq = LacunarySequence::geometric(rat(3, 2)).unwrap();
    let alpha = Alpha::parse("1.2345").unwrap();
    let big = PhaseTable::new(&SequenceTable::new(&seq, 400, DEFAULT_GUARD).unwrap(), &alpha).unwrap();
    for n in [2, 17, 100, 399] {
        let fresh = PhaseTable::new(&SequenceTable::new(&seq, n, DEFAULT_GUARD).unwrap(), &alpha).unwrap();
        let pre = big.prefix(n).unwrap();
        let (a, b) = (pre.points(), fresh.points());
        assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            assert!((p.theta() - q.theta()).abs() < 1e-15);
        }
    }
}

#[test]
fn non_positive_thresholds_give_no_solutions() {
    let seq = LacunarySequence::geometric(rat(2, 1)).unwrap();
    for k in [rat(0, 1), rat(-3, 2)] {
        let p = CountParams::explicit(5, 10, k.clone()).unwrap();
        assert!(k.is_zero() || k.is_negative());
        assert_eq!(count_condition_a(&seq, &p, CountMode::Fast).unwrap().count, 0);
        assert_eq!(count_condition_b(&seq, &p, CountMode::Fast).unwrap().count, 0);
    }
}
