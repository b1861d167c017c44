//! Prime-field substrate: the context every other module works over.
//!
//! A [`FieldContext`] fixes `p`, its smallest primitive root `g`, a full
//! discrete-log table, and tables of `e(x/p)` and `e(k/(p-1))`. Multiplicative
//! characters are stored only by their exponent `a` modulo `p - 1`, with
//! `chi_a(g^k) = e(ak/(p-1))` and `chi_a(0) = 0`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dft::{ChirpDft, Direction};
use crate::error::{Error, Result};

pub const DEFAULT_PRIME_CAP: u64 = 1_000_000;

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Reduce a signed integer into `0..p`.
#[inline]
pub fn reduce(x: i64, p: u64) -> u64 {
    x.rem_euclid(p as i64) as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `e(z) = exp(2 pi i z)`
#[inline]
pub fn e(z: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * z)
}

/// A multiplicative character, identified by its exponent modulo `p - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultCharacter {
    exponent: u64,
}

impl MultCharacter {
    pub fn new(ctx: &FieldContext, exponent: i64) -> Self {
        MultCharacter { exponent: reduce(exponent, ctx.order()) }
    }

    pub fn trivial() -> Self {
        MultCharacter { exponent: 0 }
    }

    pub fn exponent(self) -> u64 {
        self.exponent
    }

    pub fn is_trivial(self) -> bool {
        self.exponent == 0
    }

    /// Order of the character in the character group.
    pub fn order(self, ctx: &FieldContext) -> u64 {
        let n = ctx.order();
        n / gcd(self.exponent, n)
    }

    pub fn conj(self, ctx: &FieldContext) -> Self {
        MultCharacter::new(ctx, -(self.exponent as i64))
    }

    pub fn mul(self, other: Self, ctx: &FieldContext) -> Self {
        MultCharacter { exponent: (self.exponent + other.exponent) % ctx.order() }
    }

    pub fn pow(self, k: i64, ctx: &FieldContext) -> Self {
        let n = ctx.order() as i128;
        let e = (self.exponent as i128 * k as i128).rem_euclid(n);
        MultCharacter { exponent: e as u64 }
    }

    pub fn eval(self, ctx: &FieldContext, x: u64) -> Complex64 {
        ctx.chi(self.exponent, x)
    }
}

struct Plans {
    mult_fwd: ChirpDft,
    mult_bwd: ChirpDft,
    add_bwd: ChirpDft,
}

/// Immutable prime-field tables. Share it behind an [`Arc`].
pub struct FieldContext {
    p: u64,
    g: u64,
    dlog: Vec<u32>,
    exp: Vec<u32>,
    psi: Vec<Complex64>,
    unit_roots: Vec<Complex64>,
    plans: OnceLock<Plans>,
}

impl std::fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldContext").field("p", &self.p).field("g", &self.g).finish()
    }
}

/// Build the context for `p` with the default cap of 10^6.
pub fn build_context(p: u64) -> Result<Arc<FieldContext>> {
    build_context_with_cap(p, DEFAULT_PRIME_CAP)
}

pub fn build_context_with_cap(p: u64, cap: u64) -> Result<Arc<FieldContext>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p < 3 {
        return Err(Error::PrimeTooSmall { p, min: 2 });
    }
    if p > cap {
        return Err(Error::TooLarge { p, cap });
    }
    let n = p - 1;
    let factors = distinct_prime_factors(n);
    let g =
        (2..p).find(|&c| factors.iter().all(|&q| pow_mod(c, n / q, p) != 1)).expect("every prime has a primitive root");

    let mut dlog = vec![u32::MAX; p as usize];
    let mut exp = vec![0u32; n as usize];
    let mut x = 1u64;
    for k in 0..n {
        exp[k as usize] = x as u32;
        dlog[x as usize] = k as u32;
        x = mul_mod(x, g, p);
    }
    let psi = (0..p).map(|x| e(x as f64 / p as f64)).collect();
    let unit_roots = (0..n).map(|k| e(k as f64 / n as f64)).collect();
    Ok(Arc::new(FieldContext { p, g, dlog, exp, psi, unit_roots, plans: OnceLock::new() }))
}

impl FieldContext {
    pub fn p(&self) -> u64 {
        self.p
    }

    /// The smallest primitive root.
    pub fn g(&self) -> u64 {
        self.g
    }

    /// `p - 1`, the order of the multiplicative group.
    pub fn order(&self) -> u64 {
        self.p - 1
    }

    pub fn sqrt_p(&self) -> f64 {
        (self.p as f64).sqrt()
    }

    /// Discrete log of a nonzero element.
    pub fn dlog(&self, x: u64) -> u64 {
        debug_assert!(x % self.p != 0);
        self.dlog[(x % self.p) as usize] as u64
    }

    /// `g^k`
    pub fn exp(&self, k: u64) -> u64 {
        self.exp[(k % self.order()) as usize] as u64
    }

    /// `e(x/p)`
    pub fn psi(&self, x: u64) -> Complex64 {
        self.psi[(x % self.p) as usize]
    }

    pub fn psi_table(&self) -> &[Complex64] {
        &self.psi
    }

    /// `e(k/(p-1))`
    pub fn unit_root(&self, k: u64) -> Complex64 {
        self.unit_roots[(k % self.order()) as usize]
    }

    /// `chi_a(x)`, zero at `x = 0`.
    pub fn chi(&self, a: u64, x: u64) -> Complex64 {
        let x = x % self.p;
        if x == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.order();
        let k = self.dlog[x as usize] as u64;
        self.unit_roots[((a % n) * k % n) as usize]
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b % self.p) % self.p
    }

    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a % self.p) % self.p
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    /// Inverse of a nonzero element, via the log table.
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = a % self.p;
        if a == 0 {
            return None;
        }
        let k = self.dlog[a as usize] as u64;
        Some(self.exp((self.order() - k) % self.order()))
    }

    fn plans(&self) -> &Plans {
        self.plans.get_or_init(|| {
            let n = self.order() as usize;
            Plans {
                mult_fwd: ChirpDft::new(n, Direction::Forward),
                mult_bwd: ChirpDft::new(n, Direction::Backward),
                add_bwd: ChirpDft::new(self.p as usize, Direction::Backward),
            }
        })
    }

    /// Reorder a function on `F_p^*` (indexed by `x - 1`) into log order `k -> f(g^k)`.
    pub fn to_log_order(&self, f: &[Complex64]) -> Vec<Complex64> {
        (0..self.order()).map(|k| f[(self.exp(k) - 1) as usize]).collect()
    }

    /// Inverse of [`Self::to_log_order`].
    pub fn from_log_order(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.order() as usize];
        for (k, &v) in f.iter().enumerate() {
            out[(self.exp(k as u64) - 1) as usize] = v;
        }
        out
    }

    /// Forward transform of a sequence already in log order.
    pub fn log_dft(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.plans().mult_fwd.process(f)
    }

    /// Inverse of [`Self::log_dft`], including the `1/(p-1)` factor.
    pub fn log_idft(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let scale = 1.0 / self.order() as f64;
        self.plans().mult_bwd.process(spectrum).into_iter().map(|v| v * scale).collect()
    }

    /// `out[x] = sum_y h(y) e(xy/p)` for all `x` in `F_p`.
    pub fn additive_transform(&self, h: &[Complex64]) -> Result<Vec<Complex64>> {
        if h.len() != self.p as usize {
            return Err(Error::LengthMismatch { expected: self.p as usize, got: h.len() });
        }
        Ok(self.plans().add_bwd.process(h))
    }
}

/// `g(psi, chi) = sum_{x != 0} chi(x) psi(x)`, by direct summation.
pub fn gauss_sum(ctx: &FieldContext, chi: MultCharacter) -> Complex64 {
    (1..ctx.p()).map(|x| chi.eval(ctx, x) * ctx.psi(x)).sum()
}

/// Multiplicative-group DFT: `out[a] = sum_{x != 0} f(x) conj(chi_a(x))`.
///
/// `f[x - 1]` holds `f(x)`.
pub fn mult_dft(ctx: &FieldContext, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = ctx.order() as usize;
    if f.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: f.len() });
    }
    Ok(ctx.log_dft(&ctx.to_log_order(f)))
}

/// Inverse of [`mult_dft`]: `f(x) = (1/(p-1)) sum_a out[a] chi_a(x)`.
pub fn mult_idft(ctx: &FieldContext, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = ctx.order() as usize;
    if spectrum.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: spectrum.len() });
    }
    Ok(ctx.from_log_order(&ctx.log_idft(spectrum)))
}

/// All Gauss sums at once: `out[a] = g(psi, chi_a)`.
pub fn gauss_sums(ctx: &FieldContext) -> Vec<Complex64> {
    let n = ctx.order() as usize;
    let psi_units: Vec<Complex64> = (1..ctx.p()).map(|x| ctx.psi(x)).collect();
    let spec = mult_dft(ctx, &psi_units).expect("length p-1");
    // spec[a] = g(conj chi_a) = g(chi_{-a})
    (0..n).map(|a| spec[(n - a) % n]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_primitive_roots() {
        let c5 = build_context(5).unwrap();
        assert_eq!(c5.g(), 2);
        assert_eq!(c5.dlog(4), 2);
        assert_eq!(build_context(7).unwrap().g(), 3);
        // exhaustive: g generates F_p^* and nothing smaller does
        for p in [11u64, 13, 101, 499, 1009] {
            let ctx = build_context(p).unwrap();
            let g = ctx.g();
            let mut seen = vec![false; p as usize];
            let mut x = 1;
            for _ in 0..p - 1 {
                seen[x as usize] = true;
                x = x * g % p;
            }
            assert!(seen[1..].iter().all(|&s| s));
            for c in 2..g {
                let ord = (1..p).find(|&k| pow_mod(c, k, p) == 1).unwrap();
                assert!(ord < p - 1);
            }
        }
    }

    #[test]
    fn rejects_composites_and_oversize() {
        assert_eq!(build_context(4).unwrap_err(), Error::NotPrime(4));
        assert_eq!(build_context(91).unwrap_err(), Error::NotPrime(91));
        assert!(matches!(build_context(1_000_003), Err(Error::TooLarge { .. })));
        assert!(matches!(build_context(2), Err(Error::PrimeTooSmall { .. })));
    }

    #[test]
    fn psi_table_is_a_character() {
        let ctx = build_context(101).unwrap();
        let total: Complex64 = ctx.psi_table().iter().sum();
        assert!(total.norm() < 1e-10);
        assert!((ctx.psi(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(ctx.psi_table().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn character_basics() {
        let ctx = build_context(13).unwrap();
        let chi = MultCharacter::new(&ctx, 4);
        assert_eq!(chi.order(&ctx), 3);
        assert!(MultCharacter::trivial().is_trivial());
        assert_eq!(chi.eval(&ctx, 0), Complex64::new(0.0, 0.0));
        for x in 1..13 {
            for y in 1..13 {
                let lhs = chi.eval(&ctx, x * y % 13);
                let rhs = chi.eval(&ctx, x) * chi.eval(&ctx, y);
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_sum_examples() {
        let ctx = build_context(5).unwrap();
        let triv = gauss_sum(&ctx, MultCharacter::trivial());
        assert!((triv - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        let quad = gauss_sum(&ctx, MultCharacter::new(&ctx, 2));
        assert!((quad - Complex64::new(5f64.sqrt(), 0.0)).norm() < 1e-12);

        let ctx = build_context(7).unwrap();
        for a in 1..6 {
            let g = gauss_sum(&ctx, MultCharacter::new(&ctx, a));
            assert!((g.norm() - 7f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn gauss_sum_reflection() {
        for p in [31u64, 101] {
            let ctx = build_context(p).unwrap();
            for a in 1..p as i64 - 1 {
                let chi = MultCharacter::new(&ctx, a);
                let lhs = gauss_sum(&ctx, chi) * gauss_sum(&ctx, chi.conj(&ctx));
                let rhs = chi.eval(&ctx, p - 1) * p as f64;
                assert!((lhs - rhs).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn mult_dft_examples() {
        let ctx = build_context(101).unwrap();
        let n = 100;
        let mut delta = vec![Complex64::new(0.0, 0.0); n];
        delta[0] = Complex64::new(1.0, 0.0);
        let out = mult_dft(&ctx, &delta).unwrap();
        assert!(out.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));

        let ones = vec![Complex64::new(1.0, 0.0); n];
        let out = mult_dft(&ctx, &ones).unwrap();
        assert!((out[0] - Complex64::new(100.0, 0.0)).norm() < 1e-9);
        assert!(out[1..].iter().all(|z| z.norm() < 1e-9));

        let psi: Vec<Complex64> = (1..101).map(|x| ctx.psi(x)).collect();
        let out = mult_dft(&ctx, &psi).unwrap();
        for a in 0..n as i64 {
            let want = gauss_sum(&ctx, MultCharacter::new(&ctx, a).conj(&ctx));
            assert!((out[a as usize] - want).norm() < 1e-8);
        }
        assert_eq!(mult_dft(&ctx, &ones[..10]).unwrap_err(), Error::LengthMismatch { expected: 100, got: 10 });
    }

    #[test]
    fn batch_gauss_sums_match_direct() {
        let ctx = build_context(61).unwrap();
        let all = gauss_sums(&ctx);
        for a in 0..60 {
            let want = gauss_sum(&ctx, MultCharacter::new(&ctx, a));
            assert!((all[a as usize] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_via_log_table() {
        let ctx = build_context(499).unwrap();
        for a in 1..499 {
            assert_eq!(ctx.mul(a, ctx.inv(a).unwrap()), 1);
        }
        assert_eq!(ctx.inv(0), None);
    }
}
