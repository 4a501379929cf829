use proptest::prelude::*;

use super::*;
use crate::numerics::{rat, rational_pow};
use crate::qfactorial::poch_infinite;

fn q(n: i64, d: i64) -> QBase {
    QBase::new(rat(n, d)).unwrap()
}

fn ctx() -> PrecisionContext {
    PrecisionContext::default()
}

/// Direct product `prod_{j<k} (1 - a q^j)` for k >= 0.
fn naive_poch(a: &Rational, k: i64, q: &Rational) -> Rational {
    (0..k).fold(Rational::one(), |acc, j| acc * (Rational::one() - a * rational_pow(q, j).unwrap()))
}

fn product_of(params: &[Rational], base: &QBase, c: &PrecisionContext) -> ApproxValue {
    params
        .iter()
        .fold(ApproxValue::one(c.bits), |acc, p| acc.mul(&poch_infinite(p, base, c)))
}

#[test]
fn unilateral_term_example() {
    // q-binomial with q^{-2} and argument z q^2: k = 1 term is (1-4)/(1-1/2) * 1/12
    let base = q(1, 2);
    let spec = SeriesSpec::unilateral(vec![int(4)], vec![], rat(1, 12), base).unwrap();
    assert_eq!(term(&spec, 1).unwrap().value, rat(-1, 2));
    assert!(term(&spec, -1).is_err());
}

#[test]
fn bilateral_term_zero_and_annihilation() {
    let base = q(1, 2);
    let spec = SeriesSpec::bilateral(vec![int(3)], vec![rat(1, 2)], rat(1, 4), base).unwrap();
    assert_eq!(term(&spec, 0).unwrap(), TermValue { value: int(1), annihilated: false });
    // lower parameter q: (q;q)_{-1} has a pole, so every negative index vanishes
    let t = term(&spec, -1).unwrap();
    assert!(t.annihilated);
    assert!(t.value.is_zero());
}

#[test]
fn indeterminate_and_domain_terms() {
    let base = q(1, 2);
    // a lower parameter q^{-1} is rejected up front
    assert!(SeriesSpec::bilateral(vec![int(2)], vec![int(2)], rat(1, 4), base.clone()).is_err());
    // upper q^2 has a pole at k = -2, unmatched
    let spec = SeriesSpec::bilateral(vec![rat(1, 4)], vec![rat(3, 7)], rat(1, 4), base.clone()).unwrap();
    assert!(matches!(term(&spec, -2), Err(Error::Domain(_))));
    // upper q^2 with lower q: both poles at k = -2
    let spec = SeriesSpec::bilateral(vec![rat(1, 4)], vec![rat(1, 2)], rat(1, 4), base).unwrap();
    assert!(matches!(term(&spec, -2), Err(Error::Indeterminate(_))));
    // ... while k = -1 is annihilated by the denominator pole alone
    assert!(term(&spec, -1).unwrap().annihilated);
}

#[test]
fn vwp_term_example() {
    let base = q(1, 2);
    let a = rat(1, 5);
    let spec = VWPSpec::new(a.clone(), vec![rat(1, 2)], rat(1, 4), base).unwrap();
    let qq = rat(1, 2);
    let oracle = (Rational::one() - &a * &qq * &qq) / (Rational::one() - &a) * naive_poch(&rat(1, 2), 1, &qq)
        / naive_poch(&(&a * &qq / rat(1, 2)), 1, &qq)
        * rat(1, 4);
    assert_eq!(oracle, rat(95, 512));
    assert_eq!(vwp_term(&spec, 1).unwrap().value, oracle);
    assert_eq!(vwp_term(&spec, 0).unwrap().value, int(1));
}

#[test]
fn vwp_rejects_degenerate_prefactor() {
    let base = q(1, 10);
    assert!(VWPSpec::new(int(1), vec![int(2)], rat(1, 4), base.clone()).is_err());
    assert!(VWPSpec::new(rat(1, 100), vec![int(2)], rat(1, 4), base.clone()).is_err());
    assert!(VWPSpec::new(rat(1, 10), vec![int(2)], rat(1, 4), base).is_ok());
}

#[test]
fn unit_limit_matches_nearby_closed_form() {
    // Jackson's 8phi7 at a = 1 is the limit of the a != 1 sums; compare its
    // terms with the explicit limit (1 + q^k) (b,c)_k / (q/b, q/c)_k z^k
    let base = q(1, 2);
    let qq = rat(1, 2);
    let (b, c) = (int(3), int(5));
    let z = rat(1, 7);
    let spec = VWPSpec::new(int(1), vec![int(1), b.clone(), c.clone()], z.clone(), base.clone()).unwrap();
    for k in 1..5 {
        let expect = (Rational::one() + rational_pow(&qq, k).unwrap()) * naive_poch(&b, k, &qq) * naive_poch(&c, k, &qq)
            / (naive_poch(&(&qq / &b), k, &qq) * naive_poch(&(&qq / &c), k, &qq))
            * rational_pow(&z, k).unwrap();
        assert_eq!(vwp_term(&spec, k).unwrap().value, expect);
    }
    assert!(vwp_term(&spec, -1).unwrap().annihilated);
    let direct = (0..60).fold(Rational::zero(), |s, k| s + vwp_term(&spec, k).unwrap().value);
    let v = eval_vwp_bilateral(&spec, &TruncationPolicy::default(), &ctx()).unwrap();
    let tail_room = rat(1, 1_000_000_000_000_000);
    assert!(
        (v.value().to_rational() - &direct).abs() <= v.err().to_rational() + tail_room,
        "{v} vs {}",
        ApproxValue::from_rational(&direct, 128)
    );
    assert!(VWPSpec::new(int(1), vec![b, c], z, base).is_err());
}

#[test]
fn convergence_examples() {
    let base = q(1, 2);
    let s = |upper: Vec<Rational>, lower: Vec<Rational>, z: Rational| {
        convergence_domain(&SeriesSpec::bilateral(upper, lower, z, base.clone()).unwrap())
    };
    assert_eq!(s(vec![int(3)], vec![rat(3, 5)], rat(1, 2)), ConvergenceDomain::Converges);
    assert_eq!(s(vec![int(3)], vec![rat(3, 5)], int(2)), ConvergenceDomain::DivergesAbove);
    assert_eq!(s(vec![int(3)], vec![rat(3, 5)], rat(1, 8)), ConvergenceDomain::DivergesBelow);
    // every upper equals its lower: the term is z^k, which cannot converge both ways
    assert_eq!(s(vec![int(3)], vec![int(3)], rat(1, 2)), ConvergenceDomain::DivergesBelow);
    let term_q = SeriesSpec::unilateral(vec![int(4), int(3)], vec![int(5)], int(7), base).unwrap();
    assert_eq!(convergence_domain(&term_q), ConvergenceDomain::Terminating);
}

#[test]
fn terminating_sums() {
    let base = q(1, 2);
    let empty = SeriesSpec::unilateral(vec![int(1)], vec![], rat(1, 3), base.clone()).unwrap();
    assert_eq!(eval_terminating(&empty).unwrap(), int(1));
    let binomial = SeriesSpec::unilateral(vec![int(4)], vec![], rat(1, 12), base.clone()).unwrap();
    // (z;q)_2 at z = 1/3 = (1 - 1/3)(1 - 1/6)
    assert_eq!(eval_terminating(&binomial).unwrap(), rat(5, 9));
    // Pfaff-Saalschutz at n = 1, a = 2, b = 3, c = 5: (c/a, c/b)_1 / (c, c/ab)_1
    let pfaff = SeriesSpec::unilateral(
        vec![int(2), int(3), int(2)],
        vec![int(5), rat(6, 5)],
        rat(1, 2),
        base.clone(),
    )
    .unwrap();
    let rhs = (Rational::one() - rat(5, 2)) * (Rational::one() - rat(5, 3))
        / ((Rational::one() - int(5)) * (Rational::one() - rat(5, 6)));
    assert_eq!(rhs, rat(-3, 2));
    assert_eq!(eval_terminating(&pfaff).unwrap(), rhs);
    let open = SeriesSpec::unilateral(vec![int(3)], vec![], rat(1, 3), base).unwrap();
    assert!(eval_terminating(&open).is_err());
}

#[test]
fn ramanujan_sum_matches_product() {
    let base = q(1, 10);
    let c = ctx();
    let (a, b, z) = (int(2), rat(1, 4), rat(1, 2));
    let spec = SeriesSpec::bilateral(vec![a.clone()], vec![b.clone()], z.clone(), base.clone()).unwrap();
    let lhs = eval_bilateral(&spec, &TruncationPolicy::default(), &c).unwrap();
    let qq = base.q().clone();
    let num = product_of(&[qq.clone(), &b / &a, &a * &z, &qq / (&a * &z)], &base, &c);
    let den = product_of(&[b.clone(), &qq / &a, z.clone(), &b / (&a * &z)], &base, &c);
    let rhs = num.div(&den).unwrap();
    assert!(lhs.agrees_with(&rhs, &rat(1, 1_000_000_000_000)), "{lhs} vs {rhs}");
    assert!(lhs.err().to_rational() <= PrecisionContext::default().target_eps);
}

#[test]
fn bailey_sum_matches_product() {
    // a = 4 so that the explicit square-root columns exist as well
    let base = q(1, 10);
    let c = ctx();
    let a = int(4);
    let t = int(2);
    let tail = vec![t.clone(); 4];
    let arg = base.q() * &a * &a / int(16);
    let spec = VWPSpec::new(a.clone(), tail, arg, base.clone()).unwrap();
    let lhs = eval_vwp_bilateral(&spec, &TruncationPolicy::default(), &c).unwrap();
    let qq = base.q().clone();
    let aq = &a * &qq;
    let num = product_of(
        &[
            aq.clone(),
            qq.clone(),
            &qq / &a,
            &aq / int(4),
            &aq / int(4),
            &aq / int(4),
            &aq / int(4),
            &aq / int(4),
            &aq / int(4),
        ],
        &base,
        &c,
    );
    let den = product_of(
        &[
            &aq / &t,
            &aq / &t,
            &aq / &t,
            &aq / &t,
            &qq / &t,
            &qq / &t,
            &qq / &t,
            &qq / &t,
            &qq * &a * &a / int(16),
        ],
        &base,
        &c,
    );
    let rhs = num.div(&den).unwrap();
    assert!(lhs.agrees_with(&rhs, &rat(1, 1_000_000_000_000)), "{lhs} vs {rhs}");
    let expanded = spec.expand().unwrap().unwrap();
    let lhs2 = eval_bilateral(&expanded, &TruncationPolicy::default(), &c).unwrap();
    assert!(lhs.agrees_with(&lhs2, &Rational::zero()), "{lhs} vs {lhs2}");
}

#[test]
fn specialised_bailey_is_exactly_one() {
    // tail parameter 1 kills k >= 1; tail parameter a gives lower q, killing k <= -1
    let base = q(1, 10);
    let a = int(3);
    let tail = vec![int(1), a.clone(), int(5), int(7)];
    let spec = VWPSpec::new(a, tail, rat(1, 1000), base).unwrap();
    let v = eval_vwp_bilateral(&spec, &TruncationPolicy::default(), &ctx()).unwrap();
    assert_eq!(v.value().to_rational(), int(1));
    assert!(v.err().is_zero());
    assert_eq!(eval_vwp_terminating(&spec).unwrap(), int(1));
}

#[test]
fn bailey_with_large_argument_diverges_below() {
    let base = q(1, 10);
    let a = int(4);
    let tail = vec![rat(1, 3), rat(1, 5), rat(1, 7), rat(1, 9)];
    let arg = base.q() * &a * &a * int(945);
    let spec = VWPSpec::new(a, tail, arg, base).unwrap();
    assert_eq!(vwp_convergence_domain(&spec), ConvergenceDomain::DivergesBelow);
    let expanded = spec.expand().unwrap().unwrap();
    assert_eq!(convergence_domain(&expanded), ConvergenceDomain::DivergesBelow);
    // the terms really grow going down
    let t30 = vwp_term(&spec, -30).unwrap().value.abs();
    let t31 = vwp_term(&spec, -31).unwrap().value.abs();
    assert!(t31 >= t30);
    assert!(eval_vwp_bilateral(&spec, &TruncationPolicy::default(), &ctx()).is_err());
}

#[test]
fn max_terms_is_reported() {
    let base = q(99, 100);
    let spec = SeriesSpec::bilateral(vec![int(3)], vec![rat(3, 5)], rat(9, 10), base).unwrap();
    let policy = TruncationPolicy::new(5, rat(1, 1_000_000), None).unwrap();
    assert!(matches!(
        eval_bilateral(&spec, &policy, &ctx()),
        Err(Error::MaxTermsExceeded { .. })
    ));
}

#[test]
fn theta_sum_matches_triple_product() {
    let base = q(1, 3);
    let c = ctx();
    let z = rat(-2, 5);
    let lhs = eval_theta_sum(&z, &base, &TruncationPolicy::default(), &c).unwrap();
    let rhs = product_of(&[base.q().clone(), z.clone(), base.q() / &z], &base, &c);
    assert!(lhs.agrees_with(&rhs, &rat(1, 1_000_000_000_000)), "{lhs} vs {rhs}");
    assert_eq!(theta_term(&z, 2, &base).unwrap(), rat(4, 75));
}

#[test]
fn partial_sums_approach_the_limit_geometrically() {
    let base = q(1, 10);
    let c = ctx();
    let (a, b, z) = (int(2), rat(1, 4), rat(1, 2));
    let spec = SeriesSpec::bilateral(vec![a.clone()], vec![b.clone()], z.clone(), base).unwrap();
    let limit = eval_bilateral(&spec, &TruncationPolicy::default(), &c).unwrap().value().to_rational();
    // expected ratio: max(|z|, |b/(az)|) = 1/2
    let rho = rat(1, 2);
    let partial = |n: i64| (-n..=n).fold(Rational::zero(), |s, k| s + term(&spec, k).unwrap().value);
    let dev: Vec<Rational> = [10, 20, 40].iter().map(|&n| (partial(n) - &limit).abs()).collect();
    assert!(dev[1] <= &dev[0] * rat(3, 2) * rational_pow(&rho, 10).unwrap());
    assert!(dev[2] <= &dev[1] * rat(3, 2) * rational_pow(&rho, 20).unwrap());
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (1i64..=30, 1i64..=30, any::<bool>()).prop_map(|(n, d, neg)| if neg { rat(-n, d) } else { rat(n, d) })
}

fn base_strategy() -> impl Strategy<Value = QBase> {
    prop_oneof![Just(q(1, 2)), Just(q(1, 3)), Just(q(-1, 3)), Just(q(1, 10)), Just(q(2, 7))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn term_recurrence(
        upper in proptest::collection::vec(small_rational(), 1..4),
        lower_seed in proptest::collection::vec(small_rational(), 3),
        z in small_rational(),
        base in base_strategy(),
        k in -6i64..6,
    ) {
        let lower: Vec<Rational> = lower_seed.into_iter().take(upper.len()).collect();
        let Ok(spec) = SeriesSpec::bilateral(upper.clone(), lower.clone(), z.clone(), base.clone()) else {
            return Ok(());
        };
        let (Ok(t0), Ok(t1)) = (term(&spec, k), term(&spec, k + 1)) else { return Ok(()); };
        prop_assume!(!t0.annihilated && !t1.annihilated);
        let qk = base.pow(k);
        let num = upper.iter().fold(Rational::one(), |p, u| p * (Rational::one() - u * &qk));
        let den = lower.iter().fold(Rational::one(), |p, l| p * (Rational::one() - l * &qk));
        prop_assert_eq!(t1.value * den, t0.value * num * z);
    }

    #[test]
    fn vwp_prefactor_recurrence(
        a in small_rational(),
        tail in proptest::collection::vec(small_rational(), 1..4),
        z in small_rational(),
        base in base_strategy(),
        k in -6i64..6,
    ) {
        let Ok(spec) = VWPSpec::new(a.clone(), tail.clone(), z.clone(), base.clone()) else {
            return Ok(());
        };
        let (Ok(t0), Ok(t1)) = (vwp_term(&spec, k), vwp_term(&spec, k + 1)) else { return Ok(()); };
        prop_assume!(!t0.annihilated && !t1.annihilated);
        let qk = base.pow(k);
        let num = tail.iter().fold(Rational::one(), |p, u| p * (Rational::one() - u * &qk));
        let den = spec.lower().iter().fold(Rational::one(), |p, l| p * (Rational::one() - l * &qk));
        let pre0 = Rational::one() - &a * base.pow(2 * k);
        let pre1 = Rational::one() - &a * base.pow(2 * k + 2);
        prop_assert_eq!(t1.value * den * pre0, t0.value * num * z * pre1);
    }

    #[test]
    fn vwp_and_expanded_agree(
        root in 1i64..6,
        tail in proptest::collection::vec(small_rational(), 2..4),
        base in base_strategy(),
        k in -5i64..5,
    ) {
        let a = rat(root, 1) * rat(root, 1) / int(9);
        let z = rat(1, 20);
        let Ok(spec) = VWPSpec::new(a, tail, z, base) else { return Ok(()); };
        let Some(Ok(expanded)) = spec.expand() else { return Ok(()); };
        if let (Ok(x), Ok(y)) = (vwp_term(&spec, k), term(&expanded, k)) { prop_assert_eq!(x.value, y.value) }
    }

    #[test]
    fn certified_bound_is_sound(
        a in small_rational(),
        b in small_rational(),
        zn in 1i64..9,
        base in prop_oneof![Just(q(1, 2)), Just(q(1, 3)), Just(q(-1, 3)), Just(q(1, 10))],
    ) {
        let z = rat(zn, 10);
        let Ok(spec) = SeriesSpec::bilateral(vec![a], vec![b], z, base) else { return Ok(()); };
        prop_assume!(convergence_domain(&spec) == ConvergenceDomain::Converges);
        let c = PrecisionContext::new(192, rat(1, 1_000_000_000_000)).unwrap();
        let p1 = TruncationPolicy::new(4000, rat(1, 1_000_000_000_000), None).unwrap();
        let p2 = TruncationPolicy::new(8000, rat(1, 100_000_000_000_000), None).unwrap();
        let Ok(v1) = eval_bilateral(&spec, &p1, &c) else { return Ok(()); };
        let Ok(v2) = eval_bilateral(&spec, &p2, &c.with_eps(rat(1, 100_000_000_000_000))) else {
            return Ok(());
        };
        prop_assert!(v1.distance(&v2) <= v1.err().to_rational(), "{} vs {}", v1, v2);
    }
}
