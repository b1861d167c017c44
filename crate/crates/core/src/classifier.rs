//! Normality tests on patterns and the resulting cancellation / main-term
//! prediction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgl2::{Conj, Pgl2Element, SumPattern};
use crate::rep_theory::{trivial_multiplicity, Family, GroupLabel};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SheafProfile {
    pub symmetry: GroupLabel,
    pub special_involution: Option<Pgl2Element>,
    pub rank: u32,
    pub arithmetic_equals_geometric: bool,
    /// `xi^* F` is the dual of `F` with no twist.
    pub involution_untwisted: bool,
    pub conductor_bound: Option<u64>,
}

impl SheafProfile {
    pub fn new(symmetry: GroupLabel, special_involution: Option<Pgl2Element>, rank: u32) -> Result<Self> {
        if rank != symmetry.dim() {
            return Err(Error::InvalidProfile(format!("rank {rank} does not match {symmetry}")));
        }
        if symmetry.family == Family::SL && symmetry.parameter < 3 {
            return Err(Error::InvalidProfile("SL profiles need r >= 3; use Sp(2)".into()));
        }
        if let Some(xi) = special_involution {
            if !xi.is_involution() || xi.is_identity() {
                return Err(Error::InvalidProfile(format!("{xi} is not a nontrivial involution")));
            }
            if symmetry.family == Family::Sp {
                return Err(Error::ProfileMismatch("Sp profiles carry no special involution".into()));
            }
        }
        Ok(SheafProfile {
            symmetry,
            special_involution,
            rank,
            arithmetic_equals_geometric: true,
            involution_untwisted: false,
            conductor_bound: None,
        })
    }

    /// Parse `sp:<2g>`, `sl:<r>` or `sl:<r>:neg` at the prime `p`.
    pub fn parse(s: &str, p: u64) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidProfile(format!("cannot parse profile `{s}`"));
        let param: u32 = parts.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        match (parts[0], parts.len()) {
            ("sp", 2) => Self::new(GroupLabel::sp(param)?, None, param),
            ("sl", 2) => Self::new(GroupLabel::sl(param)?, None, param),
            ("sl", 3) if parts[2] == "neg" => {
                let mut prof = Self::new(GroupLabel::sl(param)?, Some(Pgl2Element::negation(p)), param)?;
                prof.involution_untwisted = true;
                Ok(prof)
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionKind {
    Cancellation,
    MainTerm,
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionKind::Cancellation => write!(f, "Cancellation"),
            PredictionKind::MainTerm => write!(f, "MainTerm"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: PredictionKind,
    pub m: Option<u64>,
    pub reason: String,
}

impl Prediction {
    fn cancellation(reason: &str) -> Self {
        Prediction { kind: PredictionKind::Cancellation, m: None, reason: reason.into() }
    }

    fn main_term(m: u64, reason: &str) -> Self {
        assert!(m >= 1);
        Prediction { kind: PredictionKind::MainTerm, m: Some(m), reason: reason.into() }
    }

    /// Expected value of the sum: `m p` for a main term, 0 otherwise.
    pub fn expected(&self, p: u64) -> f64 {
        self.m.map_or(0.0, |m| (m * p) as f64)
    }
}

/// A prediction plus advisory notes (normalized flags, possible twists).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classified {
    pub prediction: Prediction,
    pub notes: Vec<String>,
}

fn multiplicities(gammas: &[Pgl2Element]) -> BTreeMap<Pgl2Element, usize> {
    let mut out = BTreeMap::new();
    for g in gammas {
        *out.entry(*g).or_insert(0) += 1;
    }
    out
}

/// Counts `(#id, #conj)` per element.
fn flag_counts(gammas: &[Pgl2Element], sigmas: &[Conj]) -> BTreeMap<Pgl2Element, (i64, i64)> {
    let mut out = BTreeMap::new();
    for (g, s) in gammas.iter().zip(sigmas) {
        let e = out.entry(*g).or_insert((0, 0));
        match s {
            Conj::Id => e.0 += 1,
            Conj::Conj => e.1 += 1,
        }
    }
    out
}

fn check_lengths(gammas: &[Pgl2Element], sigmas: &[Conj]) -> Result<()> {
    if gammas.len() != sigmas.len() {
        return Err(Error::LengthMismatch { expected: gammas.len(), got: sigmas.len() });
    }
    Ok(())
}

/// Some element occurs an odd number of times.
pub fn is_normal(gammas: &[Pgl2Element]) -> bool {
    multiplicities(gammas).values().any(|&n| n % 2 == 1)
}

/// Some element has `#id - #conj` not divisible by `r`.
pub fn is_r_normal(gammas: &[Pgl2Element], sigmas: &[Conj], r: u32) -> Result<bool> {
    check_lengths(gammas, sigmas)?;
    Ok(flag_counts(gammas, sigmas).values().any(|&(i, c)| (i - c).rem_euclid(r as i64) != 0))
}

/// Folded counts `(n1, nc)` at `gamma`: `n1 = #(g,id) + #(xi g,conj)`,
/// `nc = #(g,conj) + #(xi g,id)`.
fn folded(counts: &BTreeMap<Pgl2Element, (i64, i64)>, g: &Pgl2Element, xi: &Pgl2Element) -> (i64, i64) {
    let (gi, gc) = counts.get(g).copied().unwrap_or((0, 0));
    let (xi_i, xi_c) = counts.get(&xi.mul(g)).copied().unwrap_or((0, 0));
    (gi + xi_c, gc + xi_i)
}

pub fn is_r_normal_wrt(gammas: &[Pgl2Element], sigmas: &[Conj], r: u32, xi: &Pgl2Element) -> Result<bool> {
    check_lengths(gammas, sigmas)?;
    if !xi.is_involution() {
        return Err(Error::NotInvolution);
    }
    let counts = flag_counts(gammas, sigmas);
    Ok(counts.keys().any(|g| {
        let (n1, nc) = folded(&counts, g, xi);
        (n1 - nc).rem_euclid(r as i64) != 0
    }))
}

pub fn classify(pattern: &SumPattern, profile: &SheafProfile, p: u64) -> Result<Prediction> {
    classify_with_notes(pattern, profile, p).map(|c| c.prediction)
}

pub fn classify_with_notes(pattern: &SumPattern, profile: &SheafProfile, p: u64) -> Result<Classified> {
    if pattern.p() != p {
        return Err(Error::ProfileMismatch(format!("pattern lives over F_{} but p = {p}", pattern.p())));
    }
    if let Some(xi) = profile.special_involution {
        if xi.p() != p {
            return Err(Error::ProfileMismatch(format!("special involution lives over F_{}", xi.p())));
        }
    }
    let mut notes = vec![];
    let group = profile.symmetry;
    let prediction = match group.family {
        Family::Sp => {
            if profile.special_involution.is_some() {
                return Err(Error::ProfileMismatch("Sp profiles carry no special involution".into()));
            }
            if pattern.sigmas.contains(&Conj::Conj) {
                notes.push("conj flags normalized to id under a self-dual (Sp) profile".to_string());
            }
            if pattern.h != 0 {
                Prediction::cancellation("h != 0")
            } else if is_normal(&pattern.gammas) {
                Prediction::cancellation("normal: some element has odd multiplicity")
            } else {
                let mut m = 1;
                for &n in multiplicities(&pattern.gammas).values() {
                    m *= trivial_multiplicity(group, n as u32, 0)?;
                }
                Prediction::main_term(m, "not normal: product of Sp trivial multiplicities")
            }
        }
        Family::SL => {
            let r = group.parameter;
            if profile.special_involution.is_some() && !profile.involution_untwisted && p <= r as u64 {
                return Err(Error::PrimeTooSmall { p, min: r as u64 });
            }
            if pattern.h != 0 {
                Prediction::cancellation("h != 0")
            } else {
                match profile.special_involution {
                    None => {
                        if is_r_normal(&pattern.gammas, &pattern.sigmas, r)? {
                            Prediction::cancellation("r-normal")
                        } else {
                            let mut m = 1;
                            for &(i, c) in flag_counts(&pattern.gammas, &pattern.sigmas).values() {
                                m *= trivial_multiplicity(group, i as u32, c as u32)?;
                            }
                            Prediction::main_term(m, "not r-normal: product of SL trivial multiplicities")
                        }
                    }
                    Some(xi) => {
                        if is_r_normal_wrt(&pattern.gammas, &pattern.sigmas, r, &xi)? {
                            Prediction::cancellation("r-normal with respect to the special involution")
                        } else {
                            let counts = flag_counts(&pattern.gammas, &pattern.sigmas);
                            let mut seen = std::collections::BTreeSet::new();
                            let mut m = 1;
                            for g in counts.keys() {
                                if seen.contains(g) {
                                    continue;
                                }
                                seen.insert(*g);
                                seen.insert(xi.mul(g));
                                let (n1, nc) = folded(&counts, g, &xi);
                                m *= trivial_multiplicity(group, n1 as u32, nc as u32)?;
                            }
                            notes.push("main term is the product over xi-classes, per the folding argument".into());
                            Prediction::main_term(
                                m,
                                "not r-normal with respect to the special involution: product over classes",
                            )
                        }
                    }
                }
            }
        }
    };
    if prediction.kind == PredictionKind::MainTerm && !profile.arithmetic_equals_geometric {
        notes.push("character-twist possible".into());
    }
    Ok(Classified { prediction, notes })
}
