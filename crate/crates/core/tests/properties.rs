use num_complex::Complex64;
use proptest::prelude::*;

use tracelab::classifier::{classify, is_normal, PredictionKind, SheafProfile};
use tracelab::evaluator::sum_of_products;
use tracelab::field::{build_context, mult_dft, mult_idft, pow_mod, MultCharacter};
use tracelab::hyp_classifier::{is_belyi_induced, is_kummer_induced, predict};
use tracelab::pgl2::{act, Action, Conj, Pgl2Element, SumPattern};
use tracelab::poly::Poly;
use tracelab::rep_theory::{trivial_multiplicity, GroupLabel};
use tracelab::trace::{kloosterman_batch, CharTuplePair};

const PRIMES: [u64; 6] = [5, 7, 11, 13, 31, 61];
const P: u64 = 61;

fn matrix() -> impl Strategy<Value = Pgl2Element> {
    (0..P, 0..P, 0..P, 0..P)
        .prop_filter("invertible", |&(a, b, c, d)| (a * d + P * P - b * c) % P != 0)
        .prop_map(|(a, b, c, d)| Pgl2Element::new(P, a, b, c, d).unwrap())
}

// gammas drawn from a small pool so that repeats occur
fn pattern(max_len: usize) -> impl Strategy<Value = (Vec<Pgl2Element>, Vec<Conj>, u64)> {
    let pool = prop::collection::vec(matrix(), 3);
    (pool, 1..=max_len).prop_flat_map(|(pool, k)| {
        (
            prop::collection::vec(prop::sample::select(pool), k),
            prop::collection::vec(prop::bool::ANY.prop_map(|c| if c { Conj::Conj } else { Conj::Id }), k),
            prop_oneof![Just(0u64), 1..P],
        )
    })
}

// g(infinity) = a / c
fn at_infinity(g: &Pgl2Element) -> Action {
    let [[a, _], [c, _]] = g.entries();
    if c == 0 {
        Action::Pole
    } else {
        Action::Value(a * pow_mod(c, P - 2, P) % P)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mult_dft_roundtrip_and_parseval(idx in 0..PRIMES.len(), seed in prop::collection::vec(-1.0f64..1.0, 120)) {
        let p = PRIMES[idx];
        let ctx = build_context(p).unwrap();
        let n = (p - 1) as usize;
        let f: Vec<Complex64> = (0..n).map(|i| Complex64::new(seed[2 * i], seed[2 * i + 1])).collect();
        let spec = mult_dft(&ctx, &f).unwrap();
        let back = mult_idft(&ctx, &spec).unwrap();
        for (a, b) in f.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-9);
        }
        let lhs: f64 = f.iter().map(|v| v.norm_sqr()).sum::<f64>() * n as f64;
        let rhs: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
    }

    #[test]
    fn characters_are_multiplicative(idx in 0..PRIMES.len(), e in 0i64..200, x in 1u64..1000, y in 1u64..1000) {
        let p = PRIMES[idx];
        let ctx = build_context(p).unwrap();
        let (x, y) = (x % p, y % p);
        prop_assume!(x != 0 && y != 0);
        let chi = MultCharacter::new(&ctx, e);
        let lhs = chi.eval(&ctx, ctx.mul(x, y));
        prop_assert!((lhs - chi.eval(&ctx, x) * chi.eval(&ctx, y)).norm() < 1e-9);
    }

    #[test]
    fn pgl2_normalization_is_canonical(g in matrix(), s in 1..P) {
        prop_assert_eq!(g.normalize(), g);
        let [[a, b], [c, d]] = g.entries();
        let scaled = Pgl2Element::new(P, a * s, b * s, c * s, d * s).unwrap();
        prop_assert_eq!(scaled, g);
        prop_assert!(g.mul(&g.inverse()).is_identity());
    }

    #[test]
    fn pgl2_action_is_compatible_with_product(g in matrix(), h in matrix(), x in 0..P) {
        let composed = match act(&h, x) {
            Action::Value(y) => act(&g, y),
            Action::Pole => at_infinity(&g),
        };
        prop_assert_eq!(act(&g.mul(&h), x), composed);
    }

    #[test]
    fn sum_scales_with_table((gammas, sigmas, h) in pattern(4), re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let ctx = build_context(P).unwrap();
        let k = kloosterman_batch(&ctx, 3).unwrap();
        let alpha = Complex64::new(re, im);
        let n_id = sigmas.iter().filter(|&&s| s == Conj::Id).count() as i32;
        let n_conj = sigmas.len() as i32 - n_id;
        let pat = SumPattern::new(gammas, sigmas, h).unwrap();
        let base = sum_of_products(&k, &pat).unwrap();
        let scaled = sum_of_products(&k.scaled(alpha), &pat).unwrap();
        let expect = base * alpha.powi(n_id) * alpha.conj().powi(n_conj);
        prop_assert!((scaled - expect).norm() <= 1e-9 * (1.0 + expect.norm()));
    }

    #[test]
    fn classification_ignores_order((gammas, sigmas, h) in pattern(6), perm_seed in any::<u64>()) {
        let sl3 = SheafProfile::parse("sl:3:neg", P).unwrap();
        let sp2 = SheafProfile::parse("sp:2", P).unwrap();
        let mut idx: Vec<usize> = (0..gammas.len()).collect();
        let mut s = perm_seed;
        for i in (1..idx.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            idx.swap(i, (s >> 33) as usize % (i + 1));
        }
        let g2: Vec<_> = idx.iter().map(|&i| gammas[i]).collect();
        let s2: Vec<_> = idx.iter().map(|&i| sigmas[i]).collect();
        let a = SumPattern::new(gammas.clone(), sigmas.clone(), h).unwrap();
        let b = SumPattern::new(g2, s2, h).unwrap();
        prop_assert_eq!(classify(&a, &sl3, P).unwrap(), classify(&b, &sl3, P).unwrap());
        let a = SumPattern::plain(gammas, h).unwrap();
        let b = SumPattern::plain(b.gammas.clone(), h).unwrap();
        prop_assert_eq!(classify(&a, &sp2, P).unwrap(), classify(&b, &sp2, P).unwrap());
    }

    #[test]
    fn symplectic_rule((gammas, _s, h) in pattern(6)) {
        let sp2 = SheafProfile::parse("sp:2", P).unwrap();
        let pred = classify(&SumPattern::plain(gammas.clone(), h).unwrap(), &sp2, P).unwrap();
        if h != 0 || is_normal(&gammas) {
            prop_assert_eq!(pred.kind, PredictionKind::Cancellation);
        } else {
            let mut counts = std::collections::BTreeMap::new();
            for g in &gammas {
                *counts.entry(*g).or_insert(0u32) += 1;
            }
            let g = GroupLabel::sp(2).unwrap();
            let m: u64 = counts.values().map(|&n| trivial_multiplicity(g, n, 0).unwrap()).product();
            prop_assert_eq!(pred.kind, PredictionKind::MainTerm);
            prop_assert_eq!(pred.m, Some(m));
        }
    }

    #[test]
    fn sl_multiplicity_symmetric_and_periodic(r in 2u32..=5, m in 0u32..=6, n in 0u32..=6) {
        let g = GroupLabel::sl(r).unwrap();
        let a = trivial_multiplicity(g, m, n).unwrap();
        prop_assert_eq!(a, trivial_multiplicity(g, n, m).unwrap());
        prop_assert_eq!(a > 0, (m as i64 - n as i64) % r as i64 == 0);
    }

    #[test]
    fn induction_predicates_ignore_order(chi in prop::collection::vec(0i64..30, 2..=4), rho in prop::collection::vec(0i64..30, 0..=4), rot in 0usize..4) {
        let ctx = build_context(31).unwrap();
        prop_assume!(chi.iter().all(|c| !rho.contains(c)));
        let mut chi2 = chi.clone();
        let r = rot % chi2.len();
        chi2.rotate_left(r);
        let mut rho2 = rho.clone();
        rho2.reverse();
        let a = CharTuplePair::from_exponents(&ctx, &chi, &rho).unwrap();
        let b = CharTuplePair::from_exponents(&ctx, &chi2, &rho2).unwrap();
        for d in 2..=4 {
            prop_assert_eq!(is_kummer_induced(&ctx, &a, d), is_kummer_induced(&ctx, &b, d));
        }
        if a.n() == a.m() {
            for k in 1..a.n() as u64 {
                let l = a.n() as u64 - k;
                prop_assert_eq!(is_belyi_induced(&ctx, &a, k, l), is_belyi_induced(&ctx, &b, k, l));
            }
        }
        if a.n() != a.m() && 31 > 2 * a.n().max(a.m()) as u64 + 1 {
            prop_assert_eq!(predict(&ctx, &a).unwrap(), predict(&ctx, &b).unwrap());
        }
    }

    // all square roots of a tuple of characters form a Kummer-induced tuple
    #[test]
    fn square_roots_are_kummer_induced(base in prop::collection::vec(0i64..15, 1..=2)) {
        let ctx = build_context(31).unwrap();
        let chi: Vec<i64> = base.iter().flat_map(|&e| [e, e + 15]).collect();
        let a = CharTuplePair::from_exponents(&ctx, &chi, &[]).unwrap();
        prop_assert!(is_kummer_induced(&ctx, &a, 2));
    }

    #[test]
    fn poly_division_identity(f in prop::collection::vec(-20i64..20, 1..8), g in prop::collection::vec(-20i64..20, 1..5)) {
        let p = 31;
        let f = Poly::new(p, &f);
        let g = Poly::new(p, &g);
        prop_assume!(!g.is_zero());
        let (q, r) = f.div_rem(&g);
        for x in 0..p {
            prop_assert_eq!((q.eval(x) * g.eval(x) + r.eval(x)) % p, f.eval(x));
        }
        prop_assert!(r.is_zero() || r.degree() < g.degree());
    }
}
