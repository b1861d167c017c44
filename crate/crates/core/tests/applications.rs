use num_complex::Complex64;

use tracelab::evaluator::{
    bombieri_bourgain, dilation_sum, exceptional_scan, exceptional_tuples, trivial_weight, BombieriBourgain, ScanMode,
};
use tracelab::field::{build_context, MultCharacter};
use tracelab::hyp_classifier::{predict, Autt};
use tracelab::poly::Poly;
use tracelab::trace::{hyp_batch, kloosterman_batch, CharTuplePair, TraceTable};

// Sum over nonzero x of Kl_3(ax) conj(Kl_3(bx)) is large exactly on the
// diagonal b = a.
#[test]
fn kl3_one_one_exceptional_set_is_diagonal() {
    for p in [101u64, 211] {
        let ctx = build_context(p).unwrap();
        let k = kloosterman_batch(&ctx, 3).unwrap();
        let one = trivial_weight(&ctx).unwrap();
        let found = exceptional_tuples(&k, 1, 1, &one, 4.0).unwrap();
        assert_eq!(found.len() as u64, p - 1);
        assert!(found.iter().all(|w| w.a == w.b));
        assert!((found.len() as f64) <= 3.0 * p as f64);
        // the anti-diagonal cancels
        let s = dilation_sum(&k, &[1], &[p - 1], &one);
        assert!(s.norm() <= 4.0 * (p as f64).sqrt());
    }
}

#[test]
fn kl3_unconjugated_pair_exceptional_set_is_antidiagonal() {
    let p = 101;
    let ctx = build_context(p).unwrap();
    let k = kloosterman_batch(&ctx, 3).unwrap();
    let one = trivial_weight(&ctx).unwrap();
    let found = exceptional_tuples(&k, 2, 0, &one, 4.0).unwrap();
    assert_eq!(found.len() as u64, p - 1);
    assert!(found.iter().all(|w| w.a[1] == ctx.neg(w.a[0])));
}

#[test]
fn kl2_pair_exceptional_set_is_diagonal() {
    let p = 101;
    let ctx = build_context(p).unwrap();
    let k = kloosterman_batch(&ctx, 2).unwrap();
    let one = trivial_weight(&ctx).unwrap();
    let found = exceptional_tuples(&k, 2, 0, &one, 4.0).unwrap();
    assert_eq!(found.len() as u64, p - 1);
    assert!(found.iter().all(|w| w.a[0] == w.a[1]));
}

#[test]
fn sampled_interval_covers_exhaustive_count() {
    let p = 101;
    let ctx = build_context(p).unwrap();
    let k = kloosterman_batch(&ctx, 3).unwrap();
    let one = trivial_weight(&ctx).unwrap();
    let exact = exceptional_scan(&k, 1, 1, &one, 4.0, ScanMode::Exhaustive).unwrap();
    let est = exceptional_scan(&k, 1, 1, &one, 4.0, ScanMode::Sampled { samples: 20_000, seed: 7 }).unwrap();
    let (lo, hi) = est.interval.unwrap();
    assert!(lo <= exact.count && exact.count <= hi, "{lo} {} {hi}", exact.count);
    assert!(!est.exhaustive && exact.exhaustive);
}

#[test]
fn bombieri_bourgain_quadratic_example() {
    for p in [101u64, 499] {
        let ctx = build_context(p).unwrap();
        let chi = MultCharacter::new(&ctx, ((p - 1) / 2) as i64);
        let fs = vec![Poly::new(p, &[1, 0, 1]), Poly::new(p, &[2, 0, 1]), Poly::new(p, &[5, 0, 1])];
        // g = X^2 - 3, simple roots or irreducible; deg 2
        let g = Poly::new(p, &[-3, 0, 1]);
        let spec = BombieriBourgain::single_character(1, vec![0, 1, 3], chi, fs, g);
        let s = bombieri_bourgain(&ctx, &spec).unwrap();
        assert!(s.norm() <= 20.0 * (p as f64).sqrt(), "p={p} |S|={}", s.norm());
    }
}

#[test]
fn hyp_deligne_bound() {
    for p in [31u64, 61] {
        let ctx = build_context(p).unwrap();
        let q = (p - 1) as i64;
        for (chi, rho) in
            [(vec![1, q / 3], vec![]), (vec![1, q / 3], vec![q / 2]), (vec![1, q / 3], vec![q / 2, q / 5])]
        {
            let pair = CharTuplePair::from_exponents(&ctx, &chi, &rho).unwrap();
            let t = hyp_batch(&ctx, &pair).unwrap();
            for x in 1..p {
                if !t.is_singular(x) {
                    assert!(t.value(x).norm() <= t.rank() as f64 + 1e-9, "p={p} x={x}");
                }
            }
        }
    }
}

// conj H(t) / H(-t) over nonzero, nonsingular t, if it is constant.
fn negation_ratio(t: &TraceTable) -> Option<Complex64> {
    let ctx = t.ctx();
    let mut ratio = None;
    for x in 1..t.p() {
        let y = ctx.neg(x);
        if t.is_singular(x) || t.is_singular(y) {
            continue;
        }
        let (a, b) = (t.value(x).conj(), t.value(y));
        if b.norm() < 1e-6 {
            if a.norm() < 1e-6 {
                continue;
            }
            return None;
        }
        let r = a / b;
        match ratio {
            None => ratio = Some(r),
            Some(r0) if (r - r0).norm() > 1e-6 => return None,
            _ => {}
        }
    }
    ratio
}

#[test]
fn hyp_negation_automorphism_corroborated() {
    let p = 31;
    let ctx = build_context(p).unwrap();
    for (chi, rho) in [(vec![0i64, 10, 20], vec![]), (vec![5, 25, 10, 20], vec![0]), (vec![15, 10, 20, 7, 23], vec![])]
    {
        let pair = CharTuplePair::from_exponents(&ctx, &chi, &rho).unwrap();
        assert_eq!(predict(&ctx, &pair).unwrap().autt, Autt::SpecialInvolutionNegation, "{chi:?} {rho:?}");
        let r = negation_ratio(&hyp_batch(&ctx, &pair).unwrap()).expect("conj H(t) proportional to H(-t)");
        assert!((r.norm() - 1.0).abs() < 1e-6);
    }
    // predicted empty: not inversion-closed
    let pair = CharTuplePair::from_exponents(&ctx, &[1, 2, 3], &[]).unwrap();
    assert_eq!(predict(&ctx, &pair).unwrap().autt, Autt::Empty);
    assert!(negation_ratio(&hyp_batch(&ctx, &pair).unwrap()).is_none());
}
