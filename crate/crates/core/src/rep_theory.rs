//! Multiplicity of the trivial representation in `std^{m} (x) dual(std)^{n}`
//! for `Sp(2g)` and `SL(r)`.
//!
//! Two independent routes:
//! - [`trivial_multiplicity`]: iterated tensoring by the standard
//!   representation over dominant weights (Brauer-Klimyk).
//! - [`weyl_constant_term_oracle`]: constant term of
//!   `char(std)^m char(std*)^n prod_alpha (1 - e^alpha) / |W|` as an exact
//!   Laurent polynomial.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TENSOR_CAP: u32 = 12;
pub const MAX_PARAMETER: u32 = 8;
/// Bound on `(m + n) * parameter` for the dense Laurent oracle.
pub const ORACLE_DEGREE_CAP: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Sp,
    SL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupLabel {
    pub family: Family,
    /// `2g` for `Sp(2g)`, `r` for `SL(r)`: the dimension of the standard representation.
    pub parameter: u32,
}

impl GroupLabel {
    pub fn sp(dim: u32) -> Result<Self> {
        Self::new(Family::Sp, dim)
    }

    pub fn sl(r: u32) -> Result<Self> {
        Self::new(Family::SL, r)
    }

    pub fn new(family: Family, parameter: u32) -> Result<Self> {
        if parameter < 2 {
            return Err(Error::InvalidArgument(format!("group parameter {parameter} < 2")));
        }
        if family == Family::Sp && parameter % 2 != 0 {
            return Err(Error::InvalidArgument(format!("Sp parameter {parameter} must be even")));
        }
        Ok(GroupLabel { family, parameter })
    }

    pub fn dim(&self) -> u32 {
        self.parameter
    }

    fn lie_rank(&self) -> usize {
        match self.family {
            Family::Sp => (self.parameter / 2) as usize,
            Family::SL => self.parameter as usize - 1,
        }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Sp => write!(f, "Sp({})", self.parameter),
            Family::SL => write!(f, "SL({})", self.parameter),
        }
    }
}

/// Dominant weights with multiplicities.
///
/// For `Sp(2g)` keys are `g` weakly decreasing nonnegative integers. For
/// `SL(r)` keys are the first `r - 1` coordinates of a `GL(r)` weight
/// normalized to last coordinate 0.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DominantWeightMultiset {
    pub weights: HashMap<Vec<i32>, u64>,
}

impl DominantWeightMultiset {
    fn trivial(group: GroupLabel) -> Self {
        let mut weights = HashMap::new();
        weights.insert(vec![0; group.lie_rank()], 1);
        DominantWeightMultiset { weights }
    }

    pub fn multiplicity(&self, w: &[i32]) -> u64 {
        self.weights.get(w).copied().unwrap_or(0)
    }

    pub fn total_dim_count(&self) -> u64 {
        self.weights.values().sum()
    }
}

fn permutation_sign_sort_desc(v: &mut [i32]) -> i64 {
    let mut sign = 1;
    // bubble sort; vectors have length <= 8
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] < v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    sign
}

/// Move `lambda + rho` into the dominant chamber; `None` on a wall.
fn reflect_sp(lambda: &[i32]) -> Option<(Vec<i32>, i64)> {
    let g = lambda.len();
    let mut sign = 1i64;
    let mut v: Vec<i32> = lambda.iter().enumerate().map(|(i, &l)| l + (g - i) as i32).collect();
    for x in v.iter_mut() {
        if *x == 0 {
            return None;
        }
        if *x < 0 {
            *x = -*x;
            sign = -sign;
        }
    }
    sign *= permutation_sign_sort_desc(&mut v);
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v.iter().enumerate().map(|(i, &x)| x - (g - i) as i32).collect(), sign))
}

fn reflect_sl(lambda_gl: &[i32]) -> Option<(Vec<i32>, i64)> {
    let r = lambda_gl.len();
    let mut v: Vec<i32> = lambda_gl.iter().enumerate().map(|(i, &l)| l + (r - 1 - i) as i32).collect();
    let sign = permutation_sign_sort_desc(&mut v);
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let shifted: Vec<i32> = v.iter().enumerate().map(|(i, &x)| x - (r - 1 - i) as i32).collect();
    let last = shifted[r - 1];
    Some((shifted[..r - 1].iter().map(|x| x - last).collect(), sign))
}

/// One tensor step: `current (x) std` (or `std*` when `dual`).
fn tensor_step(group: GroupLabel, current: &DominantWeightMultiset, dual: bool) -> DominantWeightMultiset {
    let mut acc: HashMap<Vec<i32>, i64> = HashMap::new();
    for (mu, &c) in &current.weights {
        match group.family {
            Family::Sp => {
                let g = mu.len();
                for i in 0..g {
                    for s in [1, -1] {
                        let mut lam = mu.clone();
                        lam[i] += s;
                        if let Some((dom, sign)) = reflect_sp(&lam) {
                            *acc.entry(dom).or_insert(0) += sign * c as i64;
                        }
                    }
                }
            }
            Family::SL => {
                let r = group.parameter as usize;
                for i in 0..r {
                    let mut lam: Vec<i32> = mu.clone();
                    lam.push(0);
                    lam[i] += if dual { -1 } else { 1 };
                    if let Some((dom, sign)) = reflect_sl(&lam) {
                        *acc.entry(dom).or_insert(0) += sign * c as i64;
                    }
                }
            }
        }
    }
    let weights = acc
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|(w, c)| {
            assert!(c > 0, "negative multiplicity after Klimyk step");
            (w, c as u64)
        })
        .collect();
    DominantWeightMultiset { weights }
}

/// Full decomposition of `std^{m} (x) dual(std)^{n}` into irreducibles.
pub fn decompose(group: GroupLabel, m: u32, n: u32) -> DominantWeightMultiset {
    let (m, n) = match group.family {
        Family::Sp => (m + n, 0),
        Family::SL => (m, n),
    };
    let mut cur = DominantWeightMultiset::trivial(group);
    for _ in 0..m {
        cur = tensor_step(group, &cur, false);
    }
    for _ in 0..n {
        cur = tensor_step(group, &cur, true);
    }
    cur
}

fn cache() -> &'static Mutex<HashMap<(GroupLabel, u32, u32), u64>> {
    static CACHE: OnceLock<Mutex<HashMap<(GroupLabel, u32, u32), u64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn trivial_multiplicity(group: GroupLabel, m: u32, n: u32) -> Result<u64> {
    trivial_multiplicity_with_cap(group, m, n, DEFAULT_TENSOR_CAP)
}

pub fn trivial_multiplicity_with_cap(group: GroupLabel, m: u32, n: u32, cap: u32) -> Result<u64> {
    if m + n > cap {
        return Err(Error::CapExceeded(format!("m + n = {} > {cap}", m + n)));
    }
    if group.parameter > MAX_PARAMETER {
        return Err(Error::CapExceeded(format!("parameter {} > {MAX_PARAMETER}", group.parameter)));
    }
    let key = match group.family {
        Family::Sp => (group, m + n, 0),
        Family::SL => (group, m, n),
    };
    if let Some(&v) = cache().lock().unwrap().get(&key) {
        return Ok(v);
    }
    let dec = decompose(group, key.1, key.2);
    let v = dec.multiplicity(&vec![0; group.lie_rank()]);
    cache().lock().unwrap().insert(key, v);
    Ok(v)
}

type Laurent = HashMap<Vec<i32>, i64>;

fn laurent_mul(a: &Laurent, b: &Laurent) -> Laurent {
    let mut out: Laurent = HashMap::with_capacity(a.len() * 2);
    for (ea, &ca) in a {
        for (eb, &cb) in b {
            let e: Vec<i32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0) += ca * cb;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

fn monomial(vars: usize, entries: &[(usize, i32)]) -> Vec<i32> {
    let mut e = vec![0; vars];
    for &(i, k) in entries {
        e[i] += k;
    }
    e
}

fn one_minus(vars: usize, entries: &[(usize, i32)]) -> Laurent {
    let mut l = HashMap::new();
    l.insert(vec![0; vars], 1);
    *l.entry(monomial(vars, entries)).or_insert(0) -= 1;
    l
}

fn factorial(n: u64) -> i64 {
    (1..=n as i64).product()
}

/// Independent check of [`trivial_multiplicity`] via Weyl integration.
pub fn weyl_constant_term_oracle(group: GroupLabel, m: u32, n: u32) -> Result<u64> {
    if (m + n) * group.parameter > ORACLE_DEGREE_CAP {
        return Err(Error::CapExceeded(format!(
            "(m + n) * parameter = {} > {ORACLE_DEGREE_CAP}",
            (m + n) * group.parameter
        )));
    }
    let (vars, std_char, density, weyl_order) = match group.family {
        Family::Sp => {
            let g = (group.parameter / 2) as usize;
            let mut chi: Laurent = HashMap::new();
            for i in 0..g {
                *chi.entry(monomial(g, &[(i, 1)])).or_insert(0) += 1;
                *chi.entry(monomial(g, &[(i, -1)])).or_insert(0) += 1;
            }
            let mut d: Laurent = HashMap::from([(vec![0; g], 1)]);
            for i in 0..g {
                for s in [2, -2] {
                    d = laurent_mul(&d, &one_minus(g, &[(i, s)]));
                }
                for j in i + 1..g {
                    for (si, sj) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                        d = laurent_mul(&d, &one_minus(g, &[(i, si), (j, sj)]));
                    }
                }
            }
            (g, chi, d, (1i64 << g) * factorial(g as u64))
        }
        Family::SL => {
            let r = group.parameter as usize;
            let chi: Laurent = (0..r).map(|i| (monomial(r, &[(i, 1)]), 1)).collect();
            let mut d: Laurent = HashMap::from([(vec![0; r], 1)]);
            for i in 0..r {
                for j in 0..r {
                    if i != j {
                        d = laurent_mul(&d, &one_minus(r, &[(i, 1), (j, -1)]));
                    }
                }
            }
            (r, chi, d, factorial(r as u64))
        }
    };
    let dual_char: Laurent = std_char.iter().map(|(e, &c)| (e.iter().map(|x| -x).collect(), c)).collect();
    let mut f: Laurent = HashMap::from([(vec![0; vars], 1)]);
    for _ in 0..m {
        f = laurent_mul(&f, &std_char);
    }
    for _ in 0..n {
        f = laurent_mul(&f, &dual_char);
    }
    // On the SL torus x_1...x_r = 1, so exponent c(1,...,1) counts as constant.
    let shift = match group.family {
        Family::Sp => 0,
        Family::SL => {
            let diff = m as i32 - n as i32;
            let r = group.parameter as i32;
            if diff.rem_euclid(r) != 0 {
                return Ok(0);
            }
            diff / r
        }
    };
    let mut ct: i64 = 0;
    for (nu, &dc) in &density {
        let want: Vec<i32> = nu.iter().map(|x| shift - x).collect();
        if let Some(&fc) = f.get(&want) {
            ct += dc * fc;
        }
    }
    assert!(ct % weyl_order == 0, "constant term {ct} not divisible by |W| = {weyl_order}");
    let v = ct / weyl_order;
    assert!(v >= 0);
    Ok(v as u64)
}
