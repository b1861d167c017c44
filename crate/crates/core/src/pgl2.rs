//! `PGL_2(F_p)` acting on `F_p` by fractional linear transformations.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{mul_mod, pow_mod, reduce};

/// Image of a point under a fractional linear map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Value(u64),
    Pole,
}

impl Action {
    pub fn value(self) -> Option<u64> {
        match self {
            Action::Value(x) => Some(x),
            Action::Pole => None,
        }
    }
}

/// A matrix `[[a, b], [c, d]]` modulo scalars, scaled so the first nonzero
/// entry in reading order is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pgl2Element {
    p: u64,
    a: u64,
    b: u64,
    c: u64,
    d: u64,
}

fn inv_mod(x: u64, p: u64) -> u64 {
    pow_mod(x, p - 2, p)
}

impl Pgl2Element {
    pub fn new(p: u64, a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        let (a, b, c, d) = (a % p, b % p, c % p, d % p);
        let det = (mul_mod(a, d, p) + p - mul_mod(b, c, p)) % p;
        if det == 0 {
            return Err(Error::InvalidArgument(format!("singular matrix [[{a},{b}],[{c},{d}]] mod {p}")));
        }
        Ok(Self::normalize_raw(p, a, b, c, d))
    }

    /// From signed integer entries, reduced mod `p`.
    pub fn from_ints(p: u64, m: [[i64; 2]; 2]) -> Result<Self> {
        Self::new(p, reduce(m[0][0], p), reduce(m[0][1], p), reduce(m[1][0], p), reduce(m[1][1], p))
    }

    pub fn identity(p: u64) -> Self {
        Pgl2Element { p, a: 1, b: 0, c: 0, d: 1 }
    }

    /// `x -> a x + b`
    pub fn affine(p: u64, a: u64, b: u64) -> Result<Self> {
        Self::new(p, a, b, 0, 1)
    }

    /// `x -> -x`
    pub fn negation(p: u64) -> Self {
        Self::normalize_raw(p, p - 1, 0, 0, 1)
    }

    fn normalize_raw(p: u64, a: u64, b: u64, c: u64, d: u64) -> Self {
        let lead = [a, b, c, d].into_iter().find(|&v| v != 0).expect("nonzero matrix");
        let s = inv_mod(lead, p);
        Pgl2Element { p, a: mul_mod(a, s, p), b: mul_mod(b, s, p), c: mul_mod(c, s, p), d: mul_mod(d, s, p) }
    }

    /// Re-apply the canonical scaling (idempotent).
    pub fn normalize(self) -> Self {
        Self::normalize_raw(self.p, self.a, self.b, self.c, self.d)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn entries(&self) -> [[u64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.p)
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.p, o.p, "PGL2 elements over different primes");
        let p = self.p;
        let m = |x: u64, y: u64, z: u64, w: u64| (mul_mod(x, y, p) + mul_mod(z, w, p)) % p;
        Self::normalize_raw(
            p,
            m(self.a, o.a, self.b, o.c),
            m(self.a, o.b, self.b, o.d),
            m(self.c, o.a, self.d, o.c),
            m(self.c, o.b, self.d, o.d),
        )
    }

    pub fn inverse(&self) -> Self {
        let p = self.p;
        Self::normalize_raw(p, self.d, (p - self.b) % p, (p - self.c) % p, self.a)
    }

    pub fn act(&self, x: u64) -> Action {
        let p = self.p;
        let x = x % p;
        let den = (mul_mod(self.c, x, p) + self.d) % p;
        if den == 0 {
            return Action::Pole;
        }
        let num = (mul_mod(self.a, x, p) + self.b) % p;
        Action::Value(mul_mod(num, inv_mod(den, p), p))
    }

    pub fn is_involution(&self) -> bool {
        self.mul(self).is_identity()
    }

    /// The unique pole in `F_p`, if any.
    pub fn pole(&self) -> Option<u64> {
        if self.c == 0 {
            return None;
        }
        let p = self.p;
        Some(mul_mod((p - self.d) % p, inv_mod(self.c, p), p))
    }
}

impl fmt::Display for Pgl2Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

pub fn act(gamma: &Pgl2Element, x: u64) -> Action {
    gamma.act(x)
}

pub fn is_involution(gamma: &Pgl2Element) -> bool {
    gamma.is_involution()
}

/// Parse `"[[a,b],[c,d]]"` (signed integers) into integer entries.
pub fn parse_matrix(s: &str) -> Result<[[i64; 2]; 2]> {
    let list = parse_matrix_list(s)?;
    match list.as_slice() {
        [m] => Ok(*m),
        _ => Err(Error::InvalidArgument(format!("expected one matrix, got {}", list.len()))),
    }
}

/// Parse a comma-separated list `"[[a,b],[c,d]],[[...]]"`.
pub fn parse_matrix_list(s: &str) -> Result<Vec<[[i64; 2]; 2]>> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("bad matrix notation `{s}`"));
    let wrapped = format!("[{cleaned}]");
    let parsed: Vec<[[i64; 2]; 2]> = serde_json::from_str(&wrapped).map_err(|_| bad())?;
    if parsed.is_empty() {
        return Err(bad());
    }
    Ok(parsed)
}

/// Per-factor flag: the factor or its complex conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conj {
    Id,
    Conj,
}

impl Conj {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "id" | "1" => Ok(Conj::Id),
            "conj" | "c" => Ok(Conj::Conj),
            other => Err(Error::InvalidArgument(format!("unknown flag `{other}`"))),
        }
    }
}

/// Fractional-linear pattern data: the object the classifier inspects.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumPattern {
    pub gammas: Vec<Pgl2Element>,
    pub sigmas: Vec<Conj>,
    pub h: u64,
}

impl SumPattern {
    pub fn new(gammas: Vec<Pgl2Element>, sigmas: Vec<Conj>, h: u64) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidArgument("a pattern needs at least one element".into()));
        }
        if gammas.len() != sigmas.len() {
            return Err(Error::LengthMismatch { expected: gammas.len(), got: sigmas.len() });
        }
        let p = gammas[0].p();
        if gammas.iter().any(|g| g.p() != p) {
            return Err(Error::InvalidArgument("pattern mixes primes".into()));
        }
        Ok(SumPattern { gammas, sigmas, h: h % p })
    }

    /// All flags `id`.
    pub fn plain(gammas: Vec<Pgl2Element>, h: u64) -> Result<Self> {
        let k = gammas.len();
        Self::new(gammas, vec![Conj::Id; k], h)
    }

    pub fn p(&self) -> u64 {
        self.gammas[0].p()
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    fn sorted_pairs(&self) -> Vec<(Pgl2Element, Conj)> {
        let mut v: Vec<_> = self.gammas.iter().copied().zip(self.sigmas.iter().copied()).collect();
        v.sort();
        v
    }
}

impl PartialEq for SumPattern {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h && self.sorted_pairs() == other.sorted_pairs()
    }
}

impl Eq for SumPattern {}

fn check_subgroup(h: &BTreeSet<Pgl2Element>) -> Result<()> {
    let Some(first) = h.iter().next() else {
        return Err(Error::NotASubgroup("empty set".into()));
    };
    if !h.contains(&Pgl2Element::identity(first.p())) {
        return Err(Error::NotASubgroup("identity missing".into()));
    }
    for x in h {
        for y in h {
            if !h.contains(&x.mul(y)) {
                return Err(Error::NotASubgroup(format!("{x} * {y} not in set")));
            }
        }
    }
    Ok(())
}

/// True iff `t` is empty or `t = xi h` with `xi h xi^-1 = h` and `xi^2` in `h`.
pub fn coset_structure_check(h: &BTreeSet<Pgl2Element>, t: &BTreeSet<Pgl2Element>) -> Result<bool> {
    check_subgroup(h)?;
    if t.is_empty() {
        return Ok(true);
    }
    let xi_inv_ok = |xi: &Pgl2Element| {
        let coset: BTreeSet<_> = h.iter().map(|g| xi.mul(g)).collect();
        if coset != *t {
            return false;
        }
        let xi_inv = xi.inverse();
        let conj: BTreeSet<_> = h.iter().map(|g| xi.mul(g).mul(&xi_inv)).collect();
        conj == *h && h.contains(&xi.mul(xi))
    };
    Ok(t.iter().any(xi_inv_ok))
}

/// The six permutations of `{0, 1, infinity}`.
pub fn gamma_group(p: u64) -> Result<BTreeSet<Pgl2Element>> {
    if p <= 3 {
        return Err(Error::PrimeTooSmall { p, min: 3 });
    }
    let mats: [[[i64; 2]; 2]; 6] = [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[-1, 1], [0, 1]],
        [[0, 1], [-1, 1]],
        [[1, 0], [1, -1]],
        [[1, -1], [1, 0]],
    ];
    mats.iter().map(|m| Pgl2Element::from_ints(p, *m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(p: u64, m: [[i64; 2]; 2]) -> Pgl2Element {
        Pgl2Element::from_ints(p, m).unwrap()
    }

    #[test]
    fn action_examples() {
        let p = 13;
        let id = Pgl2Element::identity(p);
        for x in 0..p {
            assert_eq!(id.act(x), Action::Value(x));
        }
        let aff = el(p, [[3, 5], [0, 1]]);
        for x in 0..p {
            assert_eq!(aff.act(x), Action::Value((3 * x + 5) % p));
        }
        assert_eq!(el(p, [[0, 1], [1, 0]]).act(0), Action::Pole);
    }

    #[test]
    fn involution_examples() {
        let p = 101;
        assert!(el(p, [[-1, 0], [0, 1]]).is_involution());
        assert!(Pgl2Element::identity(p).is_involution());
        assert!(!el(p, [[1, 1], [0, 1]]).is_involution());
    }

    #[test]
    fn composition_is_action_exhaustive() {
        let p = 13;
        let all: Vec<Pgl2Element> = (0..p)
            .flat_map(|a| (0..p).flat_map(move |b| (0..p).flat_map(move |c| (0..p).map(move |d| (a, b, c, d)))))
            .filter_map(|(a, b, c, d)| Pgl2Element::new(p, a, b, c, d).ok())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        assert_eq!(all.len() as u64, p * (p * p - 1));
        let sample: Vec<_> = all.iter().step_by(37).copied().collect();
        for g1 in &sample {
            let poles: Vec<u64> = (0..p).filter(|&x| g1.act(x) == Action::Pole).collect();
            assert!(poles.len() <= 1);
            assert_eq!(poles.first().copied(), g1.pole());
            for g2 in &sample {
                let prod = g1.mul(g2);
                for x in 0..p {
                    if let Action::Value(y) = g2.act(x) {
                        if let Action::Value(z) = g1.act(y) {
                            assert_eq!(prod.act(x), Action::Value(z));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn normalize_idempotent() {
        let g = Pgl2Element::new(101, 0, 7, 3, 5).unwrap();
        assert_eq!(g.normalize(), g);
        assert_eq!(g.normalize().normalize(), g.normalize());
        assert_eq!(g.entries()[0][1], 1);
    }

    #[test]
    fn coset_examples() {
        let p = 101;
        let h: BTreeSet<_> = [Pgl2Element::identity(p), el(p, [[-1, 0], [0, 1]])].into();
        assert!(coset_structure_check(&h, &h).unwrap());
        assert!(coset_structure_check(&h, &BTreeSet::new()).unwrap());
        let trivial: BTreeSet<_> = [Pgl2Element::identity(p)].into();
        let t: BTreeSet<_> = [el(p, [[1, 1], [0, 1]])].into();
        assert!(!coset_structure_check(&trivial, &t).unwrap());
        let t: BTreeSet<_> = [el(p, [[0, 1], [1, 0]])].into();
        assert!(coset_structure_check(&trivial, &t).unwrap());
        let not_group: BTreeSet<_> = [el(p, [[2, 0], [0, 1]])].into();
        assert!(matches!(coset_structure_check(&not_group, &t), Err(Error::NotASubgroup(_))));
    }

    #[test]
    fn gamma_group_is_closed() {
        let g = gamma_group(101).unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.contains(&el(101, [[0, 1], [1, 0]])));
        let prod = el(101, [[0, 1], [1, 0]]).mul(&el(101, [[-1, 1], [0, 1]]));
        assert!(g.contains(&prod));
        assert!(check_subgroup(&g).is_ok());
        assert!(gamma_group(3).is_err());
    }

    #[test]
    fn permutation_invariant_pattern_identity() {
        let p = 31;
        let a = el(p, [[1, 1], [0, 1]]);
        let b = el(p, [[2, 0], [0, 1]]);
        let x = SumPattern::new(vec![a, b], vec![Conj::Id, Conj::Conj], 0).unwrap();
        let y = SumPattern::new(vec![b, a], vec![Conj::Conj, Conj::Id], 0).unwrap();
        let z = SumPattern::new(vec![b, a], vec![Conj::Id, Conj::Conj], 0).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn matrix_notation() {
        let list = parse_matrix_list("[[1,0],[0,1]], [[-1,2],[3,4]]").unwrap();
        assert_eq!(list, vec![[[1, 0], [0, 1]], [[-1, 2], [3, 4]]]);
        assert!(parse_matrix("[[1,0],[0]]").is_err());
        assert!(Pgl2Element::from_ints(7, [[1, 2], [2, 4]]).is_err());
    }
}
