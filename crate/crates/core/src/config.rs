//! Suite configuration files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::classifier::SheafProfile;
use crate::error::{Error, Result};
use crate::evaluator::PatternSpec;
use crate::field::{is_prime, DEFAULT_PRIME_CAP};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum PrimeSpec {
    List(Vec<u64>),
    Range(PrimeRange),
}

/// Each point `start, start + step, ... <= stop` contributes the next prime at or above it.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimeRange {
    pub start: u64,
    pub stop: u64,
    pub step: u64,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    primes: PrimeSpec,
    patterns: Vec<PatternSpec>,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    frozen: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteConfig {
    pub primes: Vec<u64>,
    pub patterns: Vec<PatternSpec>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub frozen: Option<PathBuf>,
}

fn validation(field: &str, msg: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), msg: msg.into() }
}

fn next_prime(mut n: u64) -> u64 {
    while !is_prime(n) {
        n += 1;
    }
    n
}

fn expand_primes(spec: &PrimeSpec) -> Result<Vec<u64>> {
    let primes = match spec {
        PrimeSpec::List(v) => v.clone(),
        PrimeSpec::Range(r) => {
            if r.step == 0 || r.start > r.stop {
                return Err(validation("primes", "range needs start <= stop and step > 0"));
            }
            let mut out: Vec<u64> = (r.start..=r.stop).step_by(r.step as usize).map(next_prime).collect();
            out.dedup();
            out
        }
    };
    if primes.is_empty() {
        return Err(validation("primes", "no primes given"));
    }
    for &p in &primes {
        if !is_prime(p) {
            return Err(validation("primes", format!("{p} is not prime")));
        }
        if p < 5 {
            return Err(validation("primes", format!("{p} is too small (need p >= 5)")));
        }
        if p > DEFAULT_PRIME_CAP {
            return Err(validation("primes", format!("{p} exceeds the cap {DEFAULT_PRIME_CAP}")));
        }
    }
    let unique: BTreeSet<u64> = primes.iter().copied().collect();
    if unique.len() != primes.len() {
        return Err(validation("primes", "duplicate primes"));
    }
    Ok(unique.into_iter().collect())
}

fn validate_pattern(idx: usize, spec: &PatternSpec, primes: &[u64]) -> Result<()> {
    let field = |name: &str| format!("patterns[{idx}].{name}");
    if spec.id.is_empty() || spec.id.contains([',', '"', '\n']) {
        return Err(validation(&field("id"), format!("invalid id `{}`", spec.id)));
    }
    spec.trace_spec().map_err(|e| validation(&field("trace"), e.to_string()))?;
    if spec.gammas.is_empty() {
        return Err(validation(&field("gammas"), "at least one matrix required"));
    }
    if let Some(s) = &spec.sigmas {
        if s.len() != spec.gammas.len() {
            return Err(validation(&field("sigmas"), format!("expected {} flags, got {}", spec.gammas.len(), s.len())));
        }
    }
    for &p in primes {
        spec.instantiate(p).map_err(|e| validation(&field("gammas"), format!("at p = {p}: {e}")))?;
        if let Some(prof) = &spec.profile {
            SheafProfile::parse(prof, p).map_err(|e| validation(&field("profile"), e.to_string()))?;
        }
    }
    Ok(())
}

/// Parse and validate configuration text. Relative paths resolve against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<SuiteConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    let primes = expand_primes(&raw.primes)?;
    if raw.patterns.is_empty() {
        return Err(validation("patterns", "no patterns given"));
    }
    let mut ids = BTreeSet::new();
    for (i, spec) in raw.patterns.iter().enumerate() {
        if !ids.insert(spec.id.clone()) {
            return Err(validation(&format!("patterns[{i}].id"), format!("duplicate pattern id `{}`", spec.id)));
        }
        validate_pattern(i, spec, &primes)?;
    }
    if raw.threads == Some(0) {
        return Err(validation("threads", "must be positive"));
    }
    let resolve = |p: Option<PathBuf>| match (p, base) {
        (Some(p), Some(b)) if p.is_relative() => Some(b.join(p)),
        (p, _) => p,
    };
    Ok(SuiteConfig {
        primes,
        patterns: raw.patterns,
        output: resolve(raw.output),
        threads: raw.threads,
        frozen: resolve(raw.frozen),
    })
}

pub fn load_config(path: &Path) -> Result<SuiteConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}
