//! Tabulated trace functions on `F_p`.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::classifier::SheafProfile;
use crate::error::{Error, Result};
use crate::field::{gauss_sums, mult_idft, FieldContext, MultCharacter};
use crate::pgl2::Pgl2Element;
use crate::poly::Poly;
use crate::rep_theory::GroupLabel;

/// Default cost cap for brute-force oracles (number of inner terms).
pub const ORACLE_COST_CAP: u128 = 400_000_000;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct TraceTable {
    ctx: Arc<FieldContext>,
    values: Vec<Complex64>,
    singular: Vec<bool>,
    rank: usize,
    profile: Option<SheafProfile>,
    monodromy: String,
    label: String,
}

impl TraceTable {
    /// Wrap raw values. `singular` lists excluded points.
    pub fn from_values(
        ctx: Arc<FieldContext>,
        values: Vec<Complex64>,
        singular: &[u64],
        rank: usize,
        label: impl Into<String>,
    ) -> Result<Self> {
        let p = ctx.p() as usize;
        if values.len() != p {
            return Err(Error::LengthMismatch { expected: p, got: values.len() });
        }
        let mut mask = vec![false; p];
        for &s in singular {
            mask[(s % ctx.p()) as usize] = true;
        }
        if let Some(x) = (0..p).find(|&x| !mask[x] && !(values[x].re.is_finite() && values[x].im.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite value at nonsingular point {x}")));
        }
        Ok(TraceTable {
            ctx,
            values,
            singular: mask,
            rank,
            profile: None,
            monodromy: String::new(),
            label: label.into(),
        })
    }

    pub fn with_profile(mut self, profile: SheafProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn with_monodromy(mut self, label: impl Into<String>) -> Self {
        self.monodromy = label.into();
        self
    }

    pub fn ctx(&self) -> &Arc<FieldContext> {
        &self.ctx
    }

    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn value(&self, x: u64) -> Complex64 {
        self.values[(x % self.ctx.p()) as usize]
    }

    pub fn is_singular(&self, x: u64) -> bool {
        self.singular[(x % self.ctx.p()) as usize]
    }

    pub fn singular_points(&self) -> Vec<u64> {
        (0..self.ctx.p()).filter(|&x| self.singular[x as usize]).collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn profile(&self) -> Option<&SheafProfile> {
        self.profile.as_ref()
    }

    pub fn monodromy(&self) -> &str {
        &self.monodromy
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Pointwise product by a constant, keeping the singular set and profile.
    pub fn scaled(&self, alpha: Complex64) -> TraceTable {
        let mut t = self.clone();
        for v in t.values.iter_mut() {
            *v *= alpha;
        }
        t.label = format!("{}*({})", self.label, alpha);
        t
    }

    /// Pointwise complex conjugate.
    pub fn conjugated(&self) -> TraceTable {
        let mut t = self.clone();
        for v in t.values.iter_mut() {
            *v = v.conj();
        }
        t.label = format!("conj({})", self.label);
        t
    }

    /// Largest `|value|` over nonsingular points.
    pub fn sup_norm(&self) -> f64 {
        (0..self.values.len()).filter(|&x| !self.singular[x]).map(|x| self.values[x].norm()).fold(0.0, f64::max)
    }

    /// CSV with columns `x,re,im,singular`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,re,im,singular")?;
        for (x, v) in self.values.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                x,
                crate::report::fmt_f64(v.re),
                crate::report::fmt_f64(v.im),
                self.singular[x] as u8
            )?;
        }
        Ok(())
    }
}

fn sign_pow(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Brute-force `Kl_r(x)`: the full `(r-1)`-fold sum.
pub fn kloosterman_direct(ctx: &FieldContext, r: usize, x: u64) -> Result<Complex64> {
    kloosterman_direct_with_cap(ctx, r, x, ORACLE_COST_CAP)
}

pub fn kloosterman_direct_with_cap(ctx: &FieldContext, r: usize, x: u64, cap: u128) -> Result<Complex64> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    let p = ctx.p();
    if x % p == 0 {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    let cost = r as u128 * (p as u128 - 1).pow(r as u32 - 1);
    if cost > cap {
        return Err(Error::CostCapExceeded { what: "kloosterman_direct", cost, cap });
    }
    // t_1 ... t_{r-1} free, t_r = x / (t_1 ... t_{r-1}); quot[s] = x / s
    let x = x % p;
    let quot: Vec<u64> = (0..p).map(|s| if s == 0 { 0 } else { ctx.mul(x, ctx.inv(s).unwrap()) }).collect();
    fn rec(ctx: &FieldContext, quot: &[u64], depth: usize, prod: u64, sum: u64) -> Complex64 {
        let p = ctx.p();
        let psi = ctx.psi_table();
        let mut acc = ZERO;
        if depth == 1 {
            // innermost t: running product s = prod * t and running sum u = sum + t
            let (mut s, mut u) = (prod, ctx.add(sum, 1));
            for _ in 1..p {
                let mut arg = u + quot[s as usize];
                if arg >= p {
                    arg -= p;
                }
                acc += psi[arg as usize];
                s += prod;
                if s >= p {
                    s -= p;
                }
                u += 1;
                if u == p {
                    u = 0;
                }
            }
            return acc;
        }
        for t in 1..p {
            acc += rec(ctx, quot, depth - 1, ctx.mul(prod, t), ctx.add(sum, t));
        }
        acc
    }
    if r == 1 {
        return Ok(ctx.psi(x));
    }
    let s = rec(ctx, &quot, r - 1, 1, 0);
    Ok(s * sign_pow(r - 1) / (p as f64).powf((r as f64 - 1.0) / 2.0))
}

/// Independent all-`x` reference for `Kl_r` by iterated multiplicative
/// convolution, `S_k(x) = sum_t psi(t) S_{k-1}(x/t)`. Cost `O(r p^2)`.
pub fn kloosterman_convolution_oracle(ctx: &FieldContext, r: usize) -> Vec<Complex64> {
    let p = ctx.p();
    let mut s: Vec<Complex64> = (0..p).map(|x| if x == 0 { ZERO } else { ctx.psi(x) }).collect();
    for _ in 1..r {
        let prev = s.clone();
        s = (0..p)
            .into_par_iter()
            .map(|x| {
                if x == 0 {
                    return ZERO;
                }
                (1..p).map(|t| ctx.psi(t) * prev[ctx.mul(x, ctx.inv(t).unwrap()) as usize]).sum()
            })
            .collect();
    }
    let norm = sign_pow(r - 1) / (p as f64).powf((r as f64 - 1.0) / 2.0);
    s.into_iter().map(|v| v * norm).collect()
}

/// Unnormalized `Kl_r` on `F_p^*` (indexed by `x - 1`) via the Mellin side:
/// the multiplicative transform of `S_r` is the `r`-th power of that of `psi`.
fn kloosterman_unnormalized(ctx: &FieldContext, r: usize) -> Vec<Complex64> {
    let n = ctx.order() as usize;
    let g = gauss_sums(ctx);
    // spectrum index a holds sum_x S_r(x) conj(chi_a(x)) = g(chi_{-a})^r
    let spec: Vec<Complex64> = (0..n).map(|a| g[(n - a) % n].powu(r as u32)).collect();
    mult_idft(ctx, &spec).expect("length p-1")
}

/// Profile carried by the `Kl_r` table.
pub fn kloosterman_profile(p: u64, r: usize) -> Result<SheafProfile> {
    if r % 2 == 0 {
        SheafProfile::new(GroupLabel::sp(r as u32)?, None, r as u32)
    } else {
        let mut prof = SheafProfile::new(GroupLabel::sl(r as u32)?, Some(Pgl2Element::negation(p)), r as u32)?;
        prof.involution_untwisted = true;
        Ok(prof)
    }
}

/// `Kl_r` on all of `F_p`, with 0 singular.
pub fn kloosterman_batch(ctx: &Arc<FieldContext>, r: usize) -> Result<TraceTable> {
    if r < 2 {
        return Err(Error::InvalidArgument("kloosterman_batch needs r >= 2".into()));
    }
    let p = ctx.p();
    let raw = kloosterman_unnormalized(ctx, r);
    let norm = sign_pow(r - 1) / (p as f64).powf((r as f64 - 1.0) / 2.0);
    let mut values = vec![ZERO; p as usize];
    for x in 1..p as usize {
        values[x] = raw[x - 1] * norm;
    }
    let label = format!("Kl_{r}");
    let table = TraceTable::from_values(ctx.clone(), values, &[0], r, label)?;
    let monodromy = if r % 2 == 0 { format!("Sp({r})") } else { format!("SL({r})") };
    let table = table.with_monodromy(monodromy);
    // SL profiles start at rank 3; Kl_2 is Sp(2)
    Ok(table.with_profile(kloosterman_profile(p, r)?))
}

/// Sum of `|S_r(x)|^2` over `x != 0` for the unnormalized sum, in closed form.
pub fn kloosterman_parseval_closed_form(p: u64, r: usize) -> f64 {
    let pf = p as f64;
    ((pf - 2.0) * pf.powi(r as i32) + 1.0) / (pf - 1.0)
}

/// Unnormalized Parseval sum computed from a normalized table.
pub fn kloosterman_parseval_from_table(t: &TraceTable, r: usize) -> f64 {
    let p = t.p() as f64;
    let scale = p.powf(r as f64 - 1.0);
    (1..t.p()).map(|x| t.value(x).norm_sqr()).sum::<f64>() * scale
}

/// Tuples `(chi_1..chi_n; rho_1..rho_m)` of multiplicative characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharTuplePair {
    pub chi: Vec<MultCharacter>,
    pub rho: Vec<MultCharacter>,
}

impl CharTuplePair {
    pub fn new(chi: Vec<MultCharacter>, rho: Vec<MultCharacter>) -> Result<Self> {
        if chi.is_empty() && rho.is_empty() {
            return Err(Error::InvalidArgument("n + m must be at least 1".into()));
        }
        Ok(CharTuplePair { chi, rho })
    }

    pub fn from_exponents(ctx: &FieldContext, chi: &[i64], rho: &[i64]) -> Result<Self> {
        Self::new(
            chi.iter().map(|&a| MultCharacter::new(ctx, a)).collect(),
            rho.iter().map(|&a| MultCharacter::new(ctx, a)).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.chi.len()
    }

    pub fn m(&self) -> usize {
        self.rho.len()
    }

    /// First shared exponent, if any.
    pub fn shared_character(&self) -> Option<MultCharacter> {
        self.chi.iter().find(|c| self.rho.contains(c)).copied()
    }

    pub fn is_disjoint(&self) -> bool {
        self.shared_character().is_none()
    }

    pub fn chi_exponents(&self) -> Vec<u64> {
        self.chi.iter().map(|c| c.exponent()).collect()
    }

    pub fn rho_exponents(&self) -> Vec<u64> {
        self.rho.iter().map(|c| c.exponent()).collect()
    }
}

fn hyp_normalization(p: u64, n: usize, m: usize) -> f64 {
    sign_pow(n + m - 1) / (p as f64).powf((n + m) as f64 / 2.0 - 0.5)
}

/// Brute-force hypergeometric sum at `t != 0`.
///
/// Sums over units only: every character, including the trivial one, is 0 at 0.
pub fn hyp_direct(ctx: &FieldContext, pair: &CharTuplePair, t: u64) -> Result<Complex64> {
    hyp_direct_with_cap(ctx, pair, t, ORACLE_COST_CAP)
}

pub fn hyp_direct_with_cap(ctx: &FieldContext, pair: &CharTuplePair, t: u64, cap: u128) -> Result<Complex64> {
    let p = ctx.p();
    if t % p == 0 {
        return Err(Error::InvalidArgument("t must be nonzero".into()));
    }
    let (n, m) = (pair.n(), pair.m());
    let free = n + m - 1;
    let cost = (p as u128 - 1).pow(free as u32);
    if cost > cap {
        return Err(Error::CostCapExceeded { what: "hyp_direct", cost, cap });
    }
    // per-variable weights: x_i -> chi_i(x) psi(x), y_j -> conj(rho_j(y)) psi(-y)
    let mut weights: Vec<Vec<Complex64>> = vec![];
    for c in &pair.chi {
        weights.push((0..p).map(|x| c.eval(ctx, x) * ctx.psi(x)).collect());
    }
    for r in &pair.rho {
        weights.push((0..p).map(|y| r.eval(ctx, y).conj() * ctx.psi(ctx.neg(y))).collect());
    }
    // constraint: prod x = t prod y. Track q = prod x / prod y; the last
    // variable is determined by it.
    fn rec(
        ctx: &FieldContext,
        w: &[Vec<Complex64>],
        n: usize,
        idx: usize,
        q: u64,
        t: u64,
        acc: Complex64,
    ) -> Complex64 {
        let total = w.len();
        if idx == total - 1 {
            // last variable v: if it is an x, q * v = t; if a y, q / v = t
            let v = if idx < n { ctx.mul(t, ctx.inv(q).unwrap()) } else { ctx.mul(q, ctx.inv(t).unwrap()) };
            return acc * w[idx][v as usize];
        }
        let mut s = ZERO;
        for v in 1..ctx.p() {
            let nq = if idx < n { ctx.mul(q, v) } else { ctx.mul(q, ctx.inv(v).unwrap()) };
            s += rec(ctx, w, n, idx + 1, nq, t, acc * w[idx][v as usize]);
        }
        s
    }
    let s = rec(ctx, &weights, n, 0, 1, t % p, Complex64::new(1.0, 0.0));
    Ok(s * hyp_normalization(p, n, m))
}

/// Mellin coefficients `M(a) = sum_t H(t) conj(chi_a(t))` of the unnormalized sum.
pub fn hyp_mellin(ctx: &FieldContext, pair: &CharTuplePair) -> Vec<Complex64> {
    let n = ctx.order();
    let g = gauss_sums(ctx);
    let gs = |b: u64| g[(b % n) as usize];
    (0..n)
        .map(|a| {
            let mut v = Complex64::new(1.0, 0.0);
            for c in &pair.chi {
                v *= gs(c.exponent() + n - a);
            }
            for r in &pair.rho {
                let b = (a + n - r.exponent()) % n;
                // chi_b(-1) = (-1)^b
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                v *= gs(b) * sign;
            }
            v
        })
        .collect()
}

/// Hypergeometric trace table via Mellin inversion.
pub fn hyp_batch(ctx: &Arc<FieldContext>, pair: &CharTuplePair) -> Result<TraceTable> {
    if let Some(c) = pair.shared_character() {
        return Err(Error::NotDisjoint(c.exponent()));
    }
    let (n, m) = (pair.n(), pair.m());
    let p = ctx.p();
    let raw = mult_idft(ctx, &hyp_mellin(ctx, pair))?;
    let norm = hyp_normalization(p, n, m);
    let mut values = vec![ZERO; p as usize];
    for x in 1..p as usize {
        values[x] = raw[x - 1] * norm;
    }
    let singular: &[u64] = if n == m { &[0, 1] } else { &[0] };
    let label = format!("Hyp(chi={:?}; rho={:?})", pair.chi_exponents(), pair.rho_exponents());
    TraceTable::from_values(ctx.clone(), values, singular, n.max(m), label)
}

/// Right side of the Gauss-sum identity for `sum_t |H(t)|^2` (unnormalized `H`).
pub fn hyp_energy_gauss_side(ctx: &FieldContext, pair: &CharTuplePair) -> f64 {
    let n = ctx.order();
    let mut total = 0.0;
    for lam in 0..n {
        let lam_c = MultCharacter::new(ctx, lam as i64);
        let mut prod = 1.0;
        for c in pair.chi.iter().chain(&pair.rho) {
            prod *= crate::field::gauss_sum(ctx, lam_c.mul(*c, ctx)).norm_sqr();
        }
        total += prod;
    }
    total / n as f64
}

/// Fourier transform of `chi(f(y)) psi(phase(y))`:
/// `K(x) = -p^{-1/2} sum_y chi(f(y)) psi(phase(y)) psi(xy)`.
pub fn ft_kummer_phase(
    ctx: &Arc<FieldContext>,
    chi: MultCharacter,
    f: &Poly,
    phase: Option<&Poly>,
) -> Result<TraceTable> {
    if chi.is_trivial() {
        return Err(Error::InvalidArgument("character must be nontrivial".into()));
    }
    if f.is_zero() {
        return Err(Error::InvalidArgument("polynomial must be nonzero".into()));
    }
    let p = ctx.p();
    if f.p() != p || phase.is_some_and(|g| g.p() != p) {
        return Err(Error::ContextMismatch(f.p(), p));
    }
    let order = chi.order(ctx);
    let roots = f.rational_roots();
    if let Some(&(root, mult)) = roots.iter().find(|&&(_, mult)| mult as u64 % order == 0) {
        return Err(Error::OrderViolation { root, multiplicity: mult, order });
    }
    let h: Vec<Complex64> = (0..p)
        .map(|y| {
            let ph = phase.map_or(0, |g| g.eval(y));
            chi.eval(ctx, f.eval(y)) * ctx.psi(ph)
        })
        .collect();
    let transformed = ctx.additive_transform(&h)?;
    let scale = -1.0 / ctx.sqrt_p();
    let values: Vec<Complex64> = transformed.into_iter().map(|v| v * scale).collect();
    let rank = f.distinct_root_count();
    let all_rational = roots.len() == rank;
    let monodromy = if !all_rational {
        "unverified (roots outside F_p)".to_string()
    } else if root_energy_trivial(&roots.iter().map(|&(x, _)| x).collect::<Vec<_>>(), p) && rank >= 2 {
        format!("contains SL({rank})")
    } else {
        "root-energy condition fails".to_string()
    };
    let label = match phase {
        Some(g) => format!("FT[chi^{} (f={:?}) psi(g={:?})]", chi.exponent(), f.coeffs(), g.coeffs()),
        None => format!("FT[chi^{} (f={:?})]", chi.exponent(), f.coeffs()),
    };
    Ok(TraceTable::from_values(ctx.clone(), values, &[0], rank, label)?.with_monodromy(monodromy))
}

pub fn ft_mult_char(ctx: &Arc<FieldContext>, chi: MultCharacter, g: &Poly) -> Result<TraceTable> {
    ft_kummer_phase(ctx, chi, g, None)
}

/// Only trivial solutions of `x1 - x2 = x3 - x4` among the roots.
pub fn root_energy_trivial(roots: &[u64], p: u64) -> bool {
    for &x1 in roots {
        for &x2 in roots {
            for &x3 in roots {
                for &x4 in roots {
                    let lhs = (x1 + p - x2) % p;
                    let rhs = (x3 + p - x4) % p;
                    let trivial = (x3 == x1 && x4 == x2) || (x2 == x1 && x4 == x3);
                    if lhs == rhs && !trivial {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `x -> e((bx + G(x))/p) chi(g(x))`, the phase/Kummer factor.
pub fn phase_kummer(
    ctx: &Arc<FieldContext>,
    b: u64,
    big_g: Option<&Poly>,
    chi: Option<MultCharacter>,
    g: Option<&Poly>,
) -> Result<TraceTable> {
    let p = ctx.p();
    let values = (0..p)
        .map(|x| {
            let ph = ctx.add(ctx.mul(b, x), big_g.map_or(0, |q| q.eval(x)));
            let mut v = ctx.psi(ph);
            if let (Some(c), Some(g)) = (chi, g) {
                v *= c.eval(ctx, g.eval(x));
            }
            v
        })
        .collect();
    TraceTable::from_values(ctx.clone(), values, &[], 1, "M")
}

/// Pointwise `|A(x)| = |B(x)|` on common nonsingular points, with neither
/// table identically (near) zero there.
pub fn detect_proportionality(a: &TraceTable, b: &TraceTable) -> Result<bool> {
    if a.p() != b.p() {
        return Err(Error::ContextMismatch(a.p(), b.p()));
    }
    let tol = 1e-6;
    let mut nonzero_a = false;
    let mut nonzero_b = false;
    for x in 0..a.p() {
        if a.is_singular(x) || b.is_singular(x) {
            continue;
        }
        let (va, vb) = (a.value(x).norm(), b.value(x).norm());
        if (va - vb).abs() > tol {
            return Ok(false);
        }
        nonzero_a |= va > tol;
        nonzero_b |= vb > tol;
    }
    Ok(nonzero_a && nonzero_b)
}
