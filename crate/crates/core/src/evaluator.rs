//! Sums of products, application sums, prime-range verification and the
//! exceptional-tuple scan.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_with_notes, PredictionKind, SheafProfile};
use crate::error::{Error, Result};
use crate::field::{build_context, FieldContext, MultCharacter};
use crate::pgl2::{Action, Conj, Pgl2Element, SumPattern};
use crate::poly::Poly;
use crate::trace::{ft_kummer_phase, kloosterman_batch, phase_kummer, TraceTable};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Default exceptional threshold multiplier.
pub const DEFAULT_THRESHOLD: f64 = 4.0;
pub const EXHAUSTIVE_MAX_ARITY: usize = 3;
pub const EXHAUSTIVE_MAX_PRIME: u64 = 512;
pub const MAX_WITNESSES: usize = 100;

fn apply(v: Complex64, s: Conj) -> Complex64 {
    match s {
        Conj::Id => v,
        Conj::Conj => v.conj(),
    }
}

/// `sum*_x prod_i K(gamma_i x)^{sigma_i} psi(hx)`, skipping poles and
/// singular points of `K`.
pub fn sum_of_products(k: &TraceTable, pattern: &SumPattern) -> Result<Complex64> {
    let p = k.p();
    if pattern.p() != p {
        return Err(Error::ContextMismatch(pattern.p(), p));
    }
    let ctx = k.ctx();
    let mut acc = ZERO;
    'x: for x in 0..p {
        let mut prod = ctx.psi(ctx.mul(pattern.h, x));
        for (g, &s) in pattern.gammas.iter().zip(&pattern.sigmas) {
            match g.act(x) {
                Action::Pole => continue 'x,
                Action::Value(y) => {
                    if k.is_singular(y) {
                        continue 'x;
                    }
                    prod *= apply(k.value(y), s);
                }
            }
        }
        acc += prod;
    }
    Ok(acc)
}

/// One factor of a general restricted sum: a table evaluated at `map(x)`.
pub struct Factor<'a> {
    pub table: &'a TraceTable,
    pub map: Box<dyn Fn(u64) -> Option<u64> + Sync + 'a>,
    pub sigma: Conj,
}

/// `sum_x prod_i T_i(map_i(x))^{sigma_i} psi(hx)` over `x` where every map is
/// defined and lands outside the singular set.
pub fn sum_with_arguments(ctx: &FieldContext, factors: &[Factor<'_>], h: u64) -> Result<Complex64> {
    for f in factors {
        if f.table.p() != ctx.p() {
            return Err(Error::ContextMismatch(f.table.p(), ctx.p()));
        }
    }
    let mut acc = ZERO;
    'x: for x in 0..ctx.p() {
        let mut prod = ctx.psi(ctx.mul(h, x));
        for f in factors {
            let Some(y) = (f.map)(x) else { continue 'x };
            if f.table.is_singular(y) {
                continue 'x;
            }
            prod *= apply(f.table.value(y), f.sigma);
        }
        acc += prod;
    }
    Ok(acc)
}

/// The four-factor `Kl_2` sum over `t` in `F_p^* - {1, beta/alpha}`:
/// `Kl2(a(t-1)^2) Kl2((t-1)(at-b)) Kl2(b(1/t-1)^2) Kl2((1/t-1)(b/t-a))`.
pub fn fouvry_iwaniec_with_table(kl2: &TraceTable, alpha: u64, beta: u64) -> Result<Complex64> {
    let ctx = kl2.ctx();
    let p = ctx.p();
    let (alpha, beta) = (alpha % p, beta % p);
    if alpha == 0 || beta == 0 {
        return Err(Error::InvalidArgument("alpha and beta must be nonzero".into()));
    }
    let excluded = ctx.mul(beta, ctx.inv(alpha).unwrap());
    let mut acc = ZERO;
    for t in 1..p {
        if t == 1 || t == excluded {
            continue;
        }
        let tm1 = ctx.sub(t, 1);
        let ti = ctx.inv(t).unwrap();
        let tim1 = ctx.sub(ti, 1);
        let args = [
            ctx.mul(alpha, ctx.mul(tm1, tm1)),
            ctx.mul(tm1, ctx.sub(ctx.mul(alpha, t), beta)),
            ctx.mul(beta, ctx.mul(tim1, tim1)),
            ctx.mul(tim1, ctx.sub(ctx.mul(beta, ti), alpha)),
        ];
        acc += args.iter().map(|&a| kl2.value(a)).product::<Complex64>();
    }
    Ok(acc)
}

pub fn fouvry_iwaniec(ctx: &Arc<FieldContext>, alpha: u64, beta: u64) -> Result<Complex64> {
    fouvry_iwaniec_with_table(&kloosterman_batch(ctx, 2)?, alpha, beta)
}

/// Parameters of a Bombieri-Bourgain sum
/// `sum_x prod_i K_i(x + a_i) M(x)` with
/// `K_i = FT[chi_i(f_i) psi(g_i)]` and `M(x) = e((bx + G(x))/p) chi(g(x))`.
#[derive(Clone, Debug)]
pub struct BombieriBourgain {
    pub b: u64,
    pub shifts: Vec<u64>,
    pub chis: Vec<MultCharacter>,
    pub fs: Vec<Poly>,
    pub phases: Vec<Option<Poly>>,
    pub chi: MultCharacter,
    pub g: Poly,
    pub big_g: Option<Poly>,
}

impl BombieriBourgain {
    /// Single-character specialization: every `chi_i = chi`, no phases.
    pub fn single_character(b: u64, shifts: Vec<u64>, chi: MultCharacter, fs: Vec<Poly>, g: Poly) -> Self {
        let k = fs.len();
        BombieriBourgain { b, shifts, chis: vec![chi; k], fs, phases: vec![None; k], chi, g, big_g: None }
    }

    /// The `K_i` tables.
    pub fn factor_tables(&self, ctx: &Arc<FieldContext>) -> Result<Vec<TraceTable>> {
        self.fs
            .iter()
            .zip(&self.chis)
            .zip(&self.phases)
            .map(|((f, &c), ph)| ft_kummer_phase(ctx, c, f, ph.as_ref()))
            .collect()
    }
}

pub fn bombieri_bourgain(ctx: &Arc<FieldContext>, s: &BombieriBourgain) -> Result<Complex64> {
    let k = s.fs.len();
    if s.shifts.len() != k || s.chis.len() != k || s.phases.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: s.shifts.len().min(s.chis.len()).min(s.phases.len()) });
    }
    if s.chi.is_trivial() || s.chis.iter().any(|c| c.is_trivial()) {
        return Err(Error::InvalidArgument("all characters must be nontrivial".into()));
    }
    if s.g.is_zero() {
        return Err(Error::InvalidArgument("g must be nonzero".into()));
    }
    let tables = s.factor_tables(ctx)?;
    let m = phase_kummer(ctx, s.b, s.big_g.as_ref(), Some(s.chi), Some(&s.g))?;
    let p = ctx.p();
    let mut acc = ZERO;
    for x in 0..p {
        let mut v = m.value(x);
        for (t, &a) in tables.iter().zip(&s.shifts) {
            v *= t.value(ctx.add(x, a));
        }
        acc += v;
    }
    Ok(acc)
}

/// Text description of a table builder, e.g. `kl:2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceSpec {
    Kloosterman(usize),
}

impl TraceSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown trace builder `{s}`"));
        match s.split_once(':') {
            Some(("kl", r)) => {
                let r: usize = r.parse().map_err(|_| bad())?;
                if !(2..=8).contains(&r) {
                    return Err(bad());
                }
                Ok(TraceSpec::Kloosterman(r))
            }
            _ => Err(bad()),
        }
    }

    pub fn build(&self, ctx: &Arc<FieldContext>) -> Result<TraceTable> {
        match *self {
            TraceSpec::Kloosterman(r) => kloosterman_batch(ctx, r),
        }
    }
}

impl std::fmt::Display for TraceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceSpec::Kloosterman(r) => write!(f, "kl:{r}"),
        }
    }
}

/// A pattern in prime-independent form: integer matrices reduced at each `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub id: String,
    pub trace: String,
    pub gammas: Vec<[[i64; 2]; 2]>,
    #[serde(default)]
    pub sigmas: Option<Vec<Conj>>,
    #[serde(default)]
    pub h: i64,
    #[serde(default)]
    pub profile: Option<String>,
}

impl PatternSpec {
    pub fn instantiate(&self, p: u64) -> Result<SumPattern> {
        let gammas = self.gammas.iter().map(|&m| Pgl2Element::from_ints(p, m)).collect::<Result<Vec<_>>>()?;
        let sigmas = self.sigmas.clone().unwrap_or_else(|| vec![Conj::Id; gammas.len()]);
        SumPattern::new(gammas, sigmas, crate::field::reduce(self.h, p))
    }

    pub fn trace_spec(&self) -> Result<TraceSpec> {
        TraceSpec::parse(&self.trace)
    }

    pub fn profile_at(&self, p: u64, table: &TraceTable) -> Result<SheafProfile> {
        match &self.profile {
            Some(s) => SheafProfile::parse(s, p),
            None => table
                .profile()
                .cloned()
                .ok_or_else(|| Error::InvalidProfile(format!("table {} has no profile", table.label()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationRow {
    pub p: u64,
    pub pattern_id: String,
    pub s: Complex64,
    pub kind: PredictionKind,
    pub m: Option<u64>,
    pub residual: f64,
}

/// `|S|/sqrt(p)` for cancellation, `|S - m p|/sqrt(p)` for a main term.
pub fn normalized_residual(s: Complex64, m: Option<u64>, p: u64) -> f64 {
    let expected = m.map_or(0.0, |m| (m * p) as f64);
    (s - expected).norm() / (p as f64).sqrt()
}

pub fn evaluate_row(table: &TraceTable, spec: &PatternSpec) -> Result<VerificationRow> {
    let p = table.p();
    let pattern = spec.instantiate(p)?;
    let profile = spec.profile_at(p, table)?;
    let pred = classify_with_notes(&pattern, &profile, p)?.prediction;
    let s = sum_of_products(table, &pattern)?;
    Ok(VerificationRow {
        p,
        pattern_id: spec.id.clone(),
        s,
        kind: pred.kind,
        m: pred.m,
        residual: normalized_residual(s, pred.m, p),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternReport {
    pub id: String,
    pub rows: Vec<VerificationRow>,
    pub max_residual: f64,
    pub growth: f64,
}

/// Root-mean-square residual over the upper half of the primes divided by
/// that over the lower half. A bounded ratio means no drift with `p`.
pub fn growth_indicator(rows: &[VerificationRow]) -> f64 {
    let mut sorted: Vec<&VerificationRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.p);
    if sorted.len() < 2 {
        return 1.0;
    }
    let half = sorted.len() / 2;
    let rms =
        |rs: &[&VerificationRow]| (rs.iter().map(|r| r.residual * r.residual).sum::<f64>() / rs.len() as f64).sqrt();
    let lo = rms(&sorted[..half]);
    let hi = rms(&sorted[sorted.len() - half..]);
    if lo == 0.0 {
        if hi == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        hi / lo
    }
}

fn report(id: &str, mut rows: Vec<VerificationRow>) -> PatternReport {
    rows.sort_by_key(|r| r.p);
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let growth = growth_indicator(&rows);
    PatternReport { id: id.to_string(), rows, max_residual, growth }
}

pub type Builder = dyn Fn(&Arc<FieldContext>) -> Result<TraceTable> + Sync;

/// One row per prime for a single pattern.
pub fn verify_pattern(builder: &Builder, spec: &PatternSpec, primes: &[u64]) -> Result<PatternReport> {
    let rows = primes
        .par_iter()
        .map(|&p| {
            let ctx = build_context(p)?;
            evaluate_row(&builder(&ctx)?, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report(&spec.id, rows))
}

/// Every pattern at every prime; tables are built once per `(p, builder)`.
/// Output order is by pattern id, rows by `p`.
pub fn verify_suite(specs: &[PatternSpec], primes: &[u64]) -> Result<Vec<PatternReport>> {
    let traces: Vec<TraceSpec> = specs.iter().map(|s| s.trace_spec()).collect::<Result<_>>()?;
    let per_prime = primes
        .par_iter()
        .map(|&p| {
            let ctx = build_context(p)?;
            let mut tables: BTreeMap<TraceSpec, TraceTable> = BTreeMap::new();
            let mut rows = Vec::with_capacity(specs.len());
            for (spec, ts) in specs.iter().zip(&traces) {
                if !tables.contains_key(ts) {
                    tables.insert(*ts, ts.build(&ctx)?);
                }
                rows.push(evaluate_row(&tables[ts], spec)?);
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_id: BTreeMap<String, Vec<VerificationRow>> = BTreeMap::new();
    for row in per_prime.into_iter().flatten() {
        by_id.entry(row.pattern_id.clone()).or_default().push(row);
    }
    Ok(by_id.into_iter().map(|(id, rows)| report(&id, rows)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanWitness {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    /// Exact count (exhaustive) or extrapolated estimate (sampled).
    pub count: f64,
    pub total_tuples: f64,
    /// 95% interval for the sampled estimate.
    pub interval: Option<(f64, f64)>,
    pub witnesses: Vec<ScanWitness>,
    pub exhaustive: bool,
}

fn check_scan_inputs(k: &TraceTable, kk: usize, l: usize, m: &TraceTable) -> Result<()> {
    if k.p() != m.p() {
        return Err(Error::ContextMismatch(k.p(), m.p()));
    }
    if kk + l == 0 {
        return Err(Error::InvalidArgument("k + l must be at least 1".into()));
    }
    Ok(())
}

/// `sum_x prod K(a_i x) prod conj K(b_j x) M(x)` directly.
pub fn dilation_sum(k: &TraceTable, a: &[u64], b: &[u64], m: &TraceTable) -> Complex64 {
    let ctx = k.ctx();
    let mut acc = ZERO;
    'x: for x in 0..ctx.p() {
        if m.is_singular(x) {
            continue;
        }
        let mut v = m.value(x);
        for &ai in a {
            let y = ctx.mul(ai, x);
            if k.is_singular(y) {
                continue 'x;
            }
            v *= k.value(y);
        }
        for &bj in b {
            let y = ctx.mul(bj, x);
            if k.is_singular(y) {
                continue 'x;
            }
            v *= k.value(y).conj();
        }
        acc += v;
    }
    acc
}

/// Every exceptional tuple, by the dilation reduction. Sorted by `(a, b)`.
///
/// For a ratio vector relative to the first coordinate, the sum at anchor
/// value `a_1 = 1/u` is `C(u) = sum_y F(y) M(uy)`, a multiplicative
/// correlation computed for all `u` at once in the log-order spectrum.
pub fn exceptional_tuples(k: &TraceTable, kk: usize, l: usize, m: &TraceTable, c: f64) -> Result<Vec<ScanWitness>> {
    check_scan_inputs(k, kk, l, m)?;
    let ctx = k.ctx().clone();
    let p = ctx.p();
    let arity = kk + l;
    let cost = (p as u128 - 1).pow(arity as u32);
    let cap = (EXHAUSTIVE_MAX_PRIME as u128 - 1).pow(EXHAUSTIVE_MAX_ARITY as u32);
    if arity > EXHAUSTIVE_MAX_ARITY || p > EXHAUSTIVE_MAX_PRIME {
        return Err(Error::CostCapExceeded { what: "exceptional_scan (exhaustive)", cost, cap });
    }
    let n = ctx.order() as usize;
    let threshold = c * ctx.sqrt_p();
    // M on units in log order; M singular points contribute nothing
    let m_log: Vec<Complex64> =
        (0..n as u64).map(|s| ctx.exp(s)).map(|x| if m.is_singular(x) { ZERO } else { m.value(x) }).collect();
    let m_constant = m_log.iter().all(|&v| v == m_log[0]);
    let m_hat = ctx.log_dft(&m_log);
    let anchor_conj = kk == 0;
    let slices = (n as u128).pow(arity as u32 - 1) as usize;
    let kval = |y: u64, conj: bool| -> Option<Complex64> {
        if k.is_singular(y) {
            None
        } else if conj {
            Some(k.value(y).conj())
        } else {
            Some(k.value(y))
        }
    };
    let mut found: Vec<ScanWitness> = (0..slices)
        .into_par_iter()
        .flat_map_iter(|slice| {
            // decode ratios r_2..r_arity (units)
            let mut ratios = Vec::with_capacity(arity - 1);
            let mut idx = slice;
            for _ in 1..arity {
                ratios.push((idx % n) as u64 + 1);
                idx /= n;
            }
            let mut f_log = vec![ZERO; n];
            for (s, fv) in f_log.iter_mut().enumerate() {
                let y = ctx.exp(s as u64);
                let Some(mut v) = kval(y, anchor_conj) else { continue };
                let mut ok = true;
                for (pos, &r) in ratios.iter().enumerate() {
                    let coord = pos + 1;
                    match kval(ctx.mul(r, y), coord >= kk) {
                        Some(w) => v *= w,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    *fv = v;
                }
            }
            let corr: Vec<Complex64> = if m_constant {
                vec![f_log.iter().sum::<Complex64>() * m_log[0]; n]
            } else {
                // C[t] = sum_s F[s] M[s + t]
                let f_bwd: Vec<Complex64> = ctx.log_idft(&f_log).into_iter().map(|v| v * n as f64).collect();
                let prod: Vec<Complex64> = f_bwd.iter().zip(&m_hat).map(|(a, b)| a * b).collect();
                ctx.log_idft(&prod)
            };
            let mut out = vec![];
            for (t, &val) in corr.iter().enumerate() {
                if val.norm() > threshold {
                    let u = ctx.exp(t as u64);
                    let a1 = ctx.inv(u).unwrap();
                    let mut coords = vec![a1];
                    coords.extend(ratios.iter().map(|&r| ctx.mul(r, a1)));
                    let b = coords.split_off(kk);
                    out.push(ScanWitness { a: coords, b, value: val });
                }
            }
            out
        })
        .collect();
    found.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    Ok(found)
}

/// Count tuples `(a, b)` in `(F_p^*)^{k+l}` whose sum exceeds `c sqrt(p)`.
pub fn exceptional_scan(
    k: &TraceTable,
    kk: usize,
    l: usize,
    m: &TraceTable,
    c: f64,
    mode: ScanMode,
) -> Result<ScanResult> {
    check_scan_inputs(k, kk, l, m)?;
    let p = k.p();
    let total = ((p - 1) as f64).powi((kk + l) as i32);
    match mode {
        ScanMode::Exhaustive => {
            let all = exceptional_tuples(k, kk, l, m, c)?;
            let count = all.len() as f64;
            let witnesses = all.into_iter().take(MAX_WITNESSES).collect();
            Ok(ScanResult { count, total_tuples: total, interval: None, witnesses, exhaustive: true })
        }
        ScanMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<(Vec<u64>, Vec<u64>)> = (0..samples)
                .map(|_| {
                    let a = (0..kk).map(|_| rng.gen_range(1..p)).collect();
                    let b = (0..l).map(|_| rng.gen_range(1..p)).collect();
                    (a, b)
                })
                .collect();
            let threshold = c * k.ctx().sqrt_p();
            let hits: Vec<ScanWitness> = draws
                .par_iter()
                .filter_map(|(a, b)| {
                    let v = dilation_sum(k, a, b, m);
                    (v.norm() > threshold).then(|| ScanWitness { a: a.clone(), b: b.clone(), value: v })
                })
                .collect();
            let nf = samples as f64;
            let phat = hits.len() as f64 / nf;
            // Wilson score interval
            let z = 1.96f64;
            let denom = 1.0 + z * z / nf;
            let centre = (phat + z * z / (2.0 * nf)) / denom;
            let half = z * (phat * (1.0 - phat) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
            let interval = ((centre - half).max(0.0) * total, (centre + half).min(1.0) * total);
            Ok(ScanResult {
                count: phat * total,
                total_tuples: total,
                interval: Some(interval),
                witnesses: hits.into_iter().take(MAX_WITNESSES).collect(),
                exhaustive: false,
            })
        }
    }
}

/// The constant function 1 on `F_p` (no singular points).
pub fn trivial_weight(ctx: &Arc<FieldContext>) -> Result<TraceTable> {
    TraceTable::from_values(ctx.clone(), vec![Complex64::new(1.0, 0.0); ctx.p() as usize], &[], 1, "1")
}

/// `x -> psi(hx)`.
pub fn additive_weight(ctx: &Arc<FieldContext>, h: u64) -> Result<TraceTable> {
    phase_kummer(ctx, h, None, None, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgl2::Pgl2Element;

    #[test]
    fn single_kl2_sum() {
        let ctx = build_context(101).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let pat = SumPattern::plain(vec![Pgl2Element::identity(101)], 0).unwrap();
        let s = sum_of_products(&k, &pat).unwrap();
        assert!((s - Complex64::new(-1.0 / 101f64.sqrt(), 0.0)).norm() < 1e-9);
    }

    #[test]
    fn kl3_negation_pair() {
        for p in [101u64, 499] {
            let ctx = build_context(p).unwrap();
            let k = kloosterman_batch(&ctx, 3).unwrap();
            let pat = SumPattern::plain(vec![Pgl2Element::identity(p), Pgl2Element::negation(p)], 0).unwrap();
            let s = sum_of_products(&k, &pat).unwrap();
            assert!((s - p as f64).norm() <= 8.0 * (p as f64).sqrt());
        }
    }

    #[test]
    fn context_mismatch() {
        let ctx = build_context(101).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let pat = SumPattern::plain(vec![Pgl2Element::identity(103)], 0).unwrap();
        assert_eq!(sum_of_products(&k, &pat).unwrap_err(), Error::ContextMismatch(103, 101));
    }

    #[test]
    fn fouvry_iwaniec_matches_generic_resummation() {
        let p = 13;
        let ctx = build_context(p).unwrap();
        let kl2 = kloosterman_batch(&ctx, 2).unwrap();
        for alpha in 1..p {
            for beta in 1..p {
                let c = ctx.clone();
                let inv = move |t: u64| c.inv(t);
                let c1 = ctx.clone();
                let c2 = ctx.clone();
                let c3 = ctx.clone();
                let c4 = ctx.clone();
                let i2 = inv.clone();
                let i3 = inv.clone();
                let factors = vec![
                    Factor {
                        table: &kl2,
                        map: Box::new(move |t| inv(t).map(|_| c1.mul(alpha, c1.mul(c1.sub(t, 1), c1.sub(t, 1))))),
                        sigma: Conj::Id,
                    },
                    Factor {
                        table: &kl2,
                        map: Box::new(move |t| (t != 0).then(|| c2.mul(c2.sub(t, 1), c2.sub(c2.mul(alpha, t), beta)))),
                        sigma: Conj::Id,
                    },
                    Factor {
                        table: &kl2,
                        map: Box::new(move |t| i2(t).map(|ti| c3.mul(beta, c3.mul(c3.sub(ti, 1), c3.sub(ti, 1))))),
                        sigma: Conj::Id,
                    },
                    Factor {
                        table: &kl2,
                        map: Box::new(move |t| i3(t).map(|ti| c4.mul(c4.sub(ti, 1), c4.sub(c4.mul(beta, ti), alpha)))),
                        sigma: Conj::Id,
                    },
                ];
                let generic = sum_with_arguments(&ctx, &factors, 0).unwrap();
                let fi = fouvry_iwaniec_with_table(&kl2, alpha, beta).unwrap();
                assert!((generic - fi).norm() < 1e-9, "alpha={alpha} beta={beta}");
            }
        }
    }

    #[test]
    fn bb_without_factors_is_weil_sum() {
        let p = 101;
        let ctx = build_context(p).unwrap();
        let chi = MultCharacter::new(&ctx, 50);
        let g = Poly::new(p, &[3, 0, 0, 1]); // X^3 + 3
        let bb = BombieriBourgain::single_character(7, vec![], chi, vec![], g.clone());
        let s = bombieri_bourgain(&ctx, &bb).unwrap();
        let direct: Complex64 = (0..p).map(|x| chi.eval(&ctx, g.eval(x)) * ctx.psi(7 * x)).sum();
        assert!((s - direct).norm() < 1e-9);
        assert!(s.norm() <= 3.0 * 101f64.sqrt());
    }

    #[test]
    fn dilation_reduction_matches_direct() {
        let p = 101;
        let ctx = build_context(p).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let m = additive_weight(&ctx, 5).unwrap();
        // threshold 0: every tuple is listed with its value
        let all = exceptional_tuples(&k, 2, 0, &m, 0.0).unwrap();
        assert_eq!(all.len(), 100 * 100);
        for w in all.iter().step_by(37) {
            let d = dilation_sum(&k, &w.a, &w.b, &m);
            assert!((d - w.value).norm() < 1e-6);
        }
        let triv = trivial_weight(&ctx).unwrap();
        let all = exceptional_tuples(&k, 1, 1, &triv, 0.0).unwrap();
        for w in all.iter().step_by(53) {
            assert!((dilation_sum(&k, &w.a, &w.b, &triv) - w.value).norm() < 1e-6);
        }
    }

    #[test]
    fn exhaustive_caps() {
        let ctx = build_context(521).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let m = trivial_weight(&ctx).unwrap();
        assert!(matches!(
            exceptional_scan(&k, 2, 0, &m, 4.0, ScanMode::Exhaustive),
            Err(Error::CostCapExceeded { .. })
        ));
        let ctx = build_context(31).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let m = trivial_weight(&ctx).unwrap();
        assert!(matches!(
            exceptional_scan(&k, 2, 2, &m, 4.0, ScanMode::Exhaustive),
            Err(Error::CostCapExceeded { .. })
        ));
    }

    #[test]
    fn sampled_is_seeded() {
        let ctx = build_context(101).unwrap();
        let k = kloosterman_batch(&ctx, 2).unwrap();
        let m = trivial_weight(&ctx).unwrap();
        let mode = ScanMode::Sampled { samples: 2000, seed: 7 };
        let a = exceptional_scan(&k, 2, 0, &m, 4.0, mode).unwrap();
        let b = exceptional_scan(&k, 2, 0, &m, 4.0, mode).unwrap();
        assert_eq!(a, b);
        let (lo, hi) = a.interval.unwrap();
        assert!(lo <= a.count && a.count <= hi);
        let exact = exceptional_scan(&k, 2, 0, &m, 4.0, ScanMode::Exhaustive).unwrap();
        assert!(exact.count >= 100.0);
    }

    #[test]
    fn verify_pattern_rows() {
        let spec = PatternSpec {
            id: "pair".into(),
            trace: "kl:2".into(),
            gammas: vec![[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
            sigmas: None,
            h: 0,
            profile: None,
        };
        let builder = |ctx: &Arc<FieldContext>| kloosterman_batch(ctx, 2);
        let rep = verify_pattern(&builder, &spec, &[101, 103, 107]).unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.rows.iter().all(|r| r.kind == PredictionKind::MainTerm && r.m == Some(1)));
        assert!(rep.max_residual < 8.0);
    }
}
