//! Induction predicates and monodromy / automorphism predictions for
//! hypergeometric character-tuple pairs.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{gcd, FieldContext, MultCharacter};
use crate::trace::CharTuplePair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum G0Label {
    #[serde(rename = "trivial")]
    Trivial,
    SL,
    SO,
    Sp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Autt {
    Empty,
    SpecialInvolutionNegation,
    SubsetOfGamma,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypClassification {
    pub disjoint: bool,
    pub kummer_d: BTreeSet<u64>,
    pub belyi: BTreeSet<(u64, u64)>,
    pub inverse_belyi: BTreeSet<(u64, u64)>,
    /// Exponent of `prod chi_i conj(rho_i)` when `n = m`.
    pub lambda: Option<u64>,
    pub g0_candidates: BTreeSet<G0Label>,
    pub autt: Autt,
    pub warnings: Vec<String>,
}

fn sorted(v: &[u64]) -> Vec<u64> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Multiset invariant under `e -> e + shift (mod n)`.
fn translation_invariant(exps: &[u64], shift: u64, n: u64) -> bool {
    let moved: Vec<u64> = exps.iter().map(|&e| (e + shift) % n).collect();
    sorted(&moved) == sorted(exps)
}

/// `chi` is the multiset of all `d`-th roots of an `n/d`-tuple (and likewise
/// `rho`): equivalently, both exponent multisets are unions of cosets of the
/// order-`d` subgroup, i.e. invariant under translation by `(p-1)/d`.
pub fn is_kummer_induced(ctx: &FieldContext, pair: &CharTuplePair, d: u64) -> bool {
    let (n, m) = (pair.n() as u64, pair.m() as u64);
    let q = ctx.order();
    if d < 2 || gcd(n, m) % d != 0 || q % d != 0 {
        return false;
    }
    let shift = q / d;
    translation_invariant(&pair.chi_exponents(), shift, q) && translation_invariant(&pair.rho_exponents(), shift, q)
}

/// Exponents `e` with `k e = target (mod q)`.
fn roots_of(k: u64, target: u64, q: u64) -> Vec<u64> {
    let g = gcd(k % q, q);
    let g = if g == 0 { q } else { g };
    if target % g != 0 {
        return vec![];
    }
    let step = q / g;
    let base = (0..step).find(|&e| (k % q) * e % q == target % q);
    match base {
        Some(e0) => (0..g).map(|j| e0 + j * step).collect(),
        None => vec![],
    }
}

pub fn is_belyi_induced(ctx: &FieldContext, pair: &CharTuplePair, a: u64, b: u64) -> bool {
    let n = pair.n() as u64;
    if pair.n() != pair.m() || a < 1 || b < 1 || a + b != n {
        return false;
    }
    let q = ctx.order();
    let chi = sorted(&pair.chi_exponents());
    let rho = sorted(&pair.rho_exponents());
    let alphas: BTreeSet<u64> = chi.iter().map(|&e| a * e % q).collect();
    let betas: BTreeSet<u64> = chi.iter().map(|&e| b * e % q).filter(|&x| x != 0).collect();
    for &alpha in &alphas {
        for &beta in &betas {
            let mut want = roots_of(a, alpha, q);
            want.extend(roots_of(b, beta, q));
            if sorted(&want) != chi {
                continue;
            }
            if sorted(&roots_of(n, (alpha + beta) % q, q)) == rho {
                return true;
            }
        }
    }
    false
}

fn conj_swap(ctx: &FieldContext, pair: &CharTuplePair) -> CharTuplePair {
    CharTuplePair {
        chi: pair.rho.iter().map(|c| c.conj(ctx)).collect(),
        rho: pair.chi.iter().map(|c| c.conj(ctx)).collect(),
    }
}

pub fn is_inverse_belyi_induced(ctx: &FieldContext, pair: &CharTuplePair, a: u64, b: u64) -> bool {
    is_belyi_induced(ctx, &conj_swap(ctx, pair), a, b)
}

fn negation_closed(exps: &[u64], q: u64) -> bool {
    let neg: Vec<u64> = exps.iter().map(|&e| (q - e) % q).collect();
    sorted(&neg) == sorted(exps)
}

/// Face-value inversion invariance: both exponent multisets equal their negation.
pub fn is_inversion_invariant(ctx: &FieldContext, pair: &CharTuplePair) -> bool {
    let q = ctx.order();
    negation_closed(&pair.chi_exponents(), q) && negation_closed(&pair.rho_exponents(), q)
}

/// Twisted reading: some `Lambda` with `Lambda conj(chi) ~ chi` and
/// `Lambda conj(rho) ~ rho`. Returns the exponent of the first such `Lambda`.
pub fn inversion_invariant_up_to_twist(ctx: &FieldContext, pair: &CharTuplePair) -> Option<u64> {
    let q = ctx.order();
    let chi = sorted(&pair.chi_exponents());
    let rho = sorted(&pair.rho_exponents());
    let first = chi.first().or(rho.first()).copied()?;
    // Lambda - e_first must be a component, so Lambda = e_first + e_j
    let pool: BTreeSet<u64> = chi.iter().chain(&rho).map(|&e| (e + first) % q).collect();
    pool.into_iter().find(|&lam| {
        let tw = |v: &[u64]| sorted(&v.iter().map(|&e| (lam + q - e) % q).collect::<Vec<_>>());
        tw(&chi) == chi && tw(&rho) == rho
    })
}

fn lambda(ctx: &FieldContext, pair: &CharTuplePair) -> MultCharacter {
    let mut l = MultCharacter::trivial();
    for c in &pair.chi {
        l = l.mul(*c, ctx);
    }
    for r in &pair.rho {
        l = l.mul(r.conj(ctx), ctx);
    }
    l
}

pub fn predict(ctx: &FieldContext, pair: &CharTuplePair) -> Result<HypClassification> {
    if let Some(c) = pair.shared_character() {
        return Err(Error::NotDisjoint(c.exponent()));
    }
    let (n, m) = (pair.n() as u64, pair.m() as u64);
    let p = ctx.p();
    let mut warnings = vec![];
    let g = gcd(n, m);
    let kummer_d: BTreeSet<u64> = (2..=g).filter(|&d| is_kummer_induced(ctx, pair, d)).collect();
    let mut belyi = BTreeSet::new();
    let mut inverse_belyi = BTreeSet::new();
    let mut g0 = BTreeSet::new();
    let mut lam = None;
    let autt;
    if n == m {
        for a in 1..n {
            if is_belyi_induced(ctx, pair, a, n - a) {
                belyi.insert((a, n - a));
            }
            if is_inverse_belyi_induced(ctx, pair, a, n - a) {
                inverse_belyi.insert((a, n - a));
            }
        }
        let l = lambda(ctx, pair);
        lam = Some(l.exponent());
        if kummer_d.is_empty() && belyi.is_empty() && inverse_belyi.is_empty() {
            if l.is_trivial() {
                g0.extend([G0Label::SL, G0Label::Sp]);
            } else if l.pow(2, ctx).is_trivial() {
                g0.extend([G0Label::Trivial, G0Label::SO, G0Label::SL]);
            } else {
                g0.extend([G0Label::Trivial, G0Label::SL]);
            }
        } else {
            warnings.push("pair is induced; no candidate list applies".into());
        }
        autt = Autt::SubsetOfGamma;
    } else {
        let r = n.max(m);
        if p <= 2 * r + 1 {
            return Err(Error::PrimeTooSmall { p, min: 2 * r + 1 });
        }
        warnings.push("assumes p does not divide the unstated exceptional integer".into());
        let diff = n.abs_diff(m);
        if !kummer_d.is_empty() {
            warnings.push("pair is Kummer-induced; no candidate list applies".into());
        } else if diff % 2 == 1 {
            g0.insert(G0Label::SL);
            if diff == 1 {
                warnings.push("G differs from G0".into());
            }
        } else if diff == 6 && (7..=9).contains(&r) {
            warnings.push("|n - m| = 6 with r in {7, 8, 9}: exceptional groups possible".into());
        } else {
            g0.extend([G0Label::SO, G0Label::Sp]);
            if !is_inversion_invariant(ctx, pair) {
                g0.insert(G0Label::SL);
            }
        }
        autt = if diff % 2 == 1 && is_inversion_invariant(ctx, pair) {
            Autt::SpecialInvolutionNegation
        } else {
            Autt::Empty
        };
    }
    Ok(HypClassification {
        disjoint: true,
        kummer_d,
        belyi,
        inverse_belyi,
        lambda: lam,
        g0_candidates: g0,
        autt,
        warnings,
    })
}
