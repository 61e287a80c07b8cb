use mkp_core::charge::{antisymmetry_check, epsilon, lemma1_holds, ChargeVector};
use mkp_core::fay;
use mkp_core::psdo::MatrixPsdo;
use mkp_core::series::{Aux, FormalSeries, Monomial, Var, Q};
use mkp_core::solutions::{build, SolutionKind, SolutionSpec};
use mkp_core::tau::TauFunction;
use proptest::prelude::*;

const D: i32 = 4;

fn same(a: &FormalSeries, b: &FormalSeries) -> bool {
    (a - b).trusted_terms().is_empty()
}

fn rat() -> impl Strategy<Value = Q> {
    (-4i64..=4, 1i64..=3).prop_map(|(n, d)| Q::new(n.into(), d.into()))
}

fn monomial(n: usize) -> impl Strategy<Value = Monomial> {
    prop::collection::vec((0..n, 1u32..=3, 1i32..=2), 0..3)
        .prop_map(|vs| Monomial::from_vars(vs.into_iter().map(|(c, j, e)| (Var::t(c, j), e))))
}

fn series(n: usize) -> impl Strategy<Value = FormalSeries> {
    prop::collection::vec((monomial(n), rat()), 0..6)
        .prop_map(|ts| FormalSeries::from_terms(ts, D, D))
}

/// Series with constant term 1.
fn unit_series(n: usize) -> impl Strategy<Value = FormalSeries> {
    series(n).prop_map(|f| {
        let c = f.constant_term();
        f + FormalSeries::constant(Q::from_integer(1.into()) - c, D)
    })
}

fn charge(n: usize) -> impl Strategy<Value = ChargeVector> {
    prop::collection::vec(-3i32..=3, n - 1).prop_map(|mut v| {
        let last = -v.iter().sum::<i32>();
        v.push(last);
        ChargeVector(v)
    })
}

fn scalar_psdo() -> impl Strategy<Value = MatrixPsdo> {
    prop::collection::vec((-2i32..=1, series(1)), 1..4).prop_map(|parts| {
        let mut e = FormalSeries::zero(D);
        for (p, f) in parts {
            e = e + f.mul_aux(Aux::D, p);
        }
        MatrixPsdo::from_entries(1, 4, vec![e]).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(a in series(2), b in series(2), c in series(2)) {
        prop_assert!(same(&(&a * &b), &(&b * &a)));
        prop_assert!(same(&(&(&a * &b) * &c), &(&a * &(&b * &c))));
        prop_assert!(same(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c))));
        prop_assert!(same(&(&a - &a), &FormalSeries::zero(D)));
    }

    #[test]
    fn inverse_multiplies_back(a in unit_series(2)) {
        let inv = a.inverse().unwrap();
        prop_assert!(same(&(&a * &inv), &FormalSeries::one(D)));
    }

    #[test]
    fn log_inverts_exp(f in series(2)) {
        let f = &f - &FormalSeries::constant(f.constant_term(), D);
        prop_assert!(same(&f.exp_jet().unwrap().log_jet().unwrap(), &f));
    }

    #[test]
    fn miwa_shift_is_a_ring_homomorphism(a in series(2), b in series(2), g in 0usize..2, sign in prop::sample::select(vec![-1, 1])) {
        let lhs = (&a * &b).miwa_shifted(g, Aux::Mu, sign);
        let rhs = &a.miwa_shifted(g, Aux::Mu, sign) * &b.miwa_shifted(g, Aux::Mu, sign);
        prop_assert!(same(&lhs, &rhs));
        let back = a.miwa_shifted(g, Aux::Mu, sign).miwa_shifted(g, Aux::Mu, -sign);
        prop_assert!(same(&back, &a));
    }

    #[test]
    fn derivatives_commute_and_obey_leibniz(a in series(2), b in series(2), c1 in 0usize..2, j1 in 1u32..=3, c2 in 0usize..2, j2 in 1u32..=3) {
        let (v, w) = (Var::t(c1, j1), Var::t(c2, j2));
        prop_assert!(same(&a.derive(v).derive(w), &a.derive(w).derive(v)));
        let lhs = (&a * &b).derive(v);
        let rhs = &a.derive(v) * &b + &a * &b.derive(v);
        prop_assert!(same(&lhs, &rhs));
        prop_assert_eq!(a.derive(v).trusted_order(), a.trusted_order() - j1 as i32);
    }

    #[test]
    fn trust_never_increases_under_arithmetic(a in series(2), b in series(2), ta in 0i32..=D, tb in 0i32..=D) {
        let (a, b) = (a.cap_trust(ta), b.cap_trust(tb));
        prop_assert!((&a + &b).trusted_order() <= ta.min(tb));
        prop_assert!((&a * &b).trusted_order() <= D);
        prop_assert!((&a * &b).trusted_order() >= ta.min(tb));
    }

    #[test]
    fn composition_is_associative(a in scalar_psdo(), b in scalar_psdo(), c in scalar_psdo()) {
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(left.sub(&right).trusted_discrepancies().is_empty());
    }

    #[test]
    fn projections_split_and_are_idempotent(a in scalar_psdo()) {
        let plus = a.plus_part();
        prop_assert_eq!(plus.plus_part(), plus.clone());
        prop_assert!(plus.add(&a.minus_part()).sub(&a).trusted_discrepancies().is_empty());
        prop_assert!(a.minus_part().plus_part().trusted_discrepancies().is_empty());
    }

    #[test]
    fn sign_rules(s in charge(4), a in 0usize..4, b in 0usize..4, g in 0usize..4) {
        prop_assume!(a != b);
        prop_assert!(antisymmetry_check(&s, a, b).unwrap());
        prop_assert_eq!(epsilon(&s, a, a).unwrap(), 1);
        let (first, second) = lemma1_holds(&s, a, b, (g != a && g != b).then_some(g)).unwrap();
        prop_assert!(first);
        prop_assert!(second.unwrap_or(true));
    }
}

fn soliton(p: i64, q: i64, a: i64, d: i32) -> TauFunction {
    let spec = SolutionSpec {
        kind: SolutionKind::SolitonN1 {
            p: Q::from_integer(p.into()),
            q: Q::from_integer(q.into()),
            a: Q::from_integer(a.into()),
        },
        n: 1,
        max_time_index: d as u32,
        cutoff: d,
        radius: 0,
    };
    build(&spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fay_verdict_survives_truncation(p in -3i64..=3, q in -3i64..=3, a in 1i64..=3, d in 2i32..=6) {
        prop_assume!(p != q);
        let tau = soliton(p, q, a, 6);
        let s = ChargeVector::zero(1);
        prop_assert_eq!(fay::check_dfi(&tau, &s, 0).status, mkp_core::report::Status::Pass);
        prop_assert_eq!(fay::check_dfi(&tau.truncated(d), &s, 0).status, mkp_core::report::Status::Pass);
    }

    #[test]
    fn fay_verdict_is_scale_invariant(p in -3i64..=3, q in -3i64..=3, a in 1i64..=3, c in prop::sample::select(vec![-3i64, -1, 2, 5])) {
        prop_assume!(p != q);
        let tau = soliton(p, q, a, 5);
        let s = ChargeVector::zero(1);
        let f = tau.tau_at(&s).unwrap().scale(&Q::from_integer(c.into()));
        let scaled = tau.with_series(&s, f).unwrap();
        let base = fay::dfi_expr(&tau, &s, 0).unwrap();
        let other = fay::dfi_expr(&scaled, &s, 0).unwrap();
        prop_assert!(same(&other, &base.scale(&Q::from_integer((c * c).into()))));
        prop_assert_eq!(fay::check_dfi(&scaled, &s, 0).status, fay::check_dfi(&tau, &s, 0).status);
    }

    #[test]
    fn text_format_round_trips(p in -3i64..=3, q in -3i64..=3, a in 1i64..=3) {
        prop_assume!(p != q);
        let tau = soliton(p, q, a, 5);
        prop_assert_eq!(TauFunction::parse(&tau.to_text()).unwrap(), tau);
    }
}
