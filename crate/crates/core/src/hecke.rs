//! Hecke operators on integral-weight `q`-expansions and the single-prime
//! elimination test for `F_{a,b,c}`.

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{Pow, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{divisors, gcd, is_admissible_prime, radical, ArithError};
use crate::modular_meta::{CharacterSpec, EtaTriple, MetaError};
use crate::qseries::{f_coefficients, triple_r, QSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeckeError {
    #[error("weight {0} is not an integer")]
    NonIntegralWeight(Rational64),
    #[error("weight {0} is below 2")]
    WeightTooSmall(i64),
    #[error("character modulus {modulus} does not divide 4·{level}")]
    CharacterLevel { modulus: u64, level: u64 },
    #[error("truncation {trunc} is smaller than s = {s}")]
    TruncationTooSmall { trunc: i64, s: u64 },
    #[error("precondition failed: {0}")]
    PreconditionFail(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Meta(#[from] MetaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeckeContext {
    weight: i64,
    character: CharacterSpec,
    level: u64,
}

impl HeckeContext {
    pub fn new(weight: Rational64, character: CharacterSpec, level: u64) -> Result<Self, HeckeError> {
        if !weight.is_integer() {
            return Err(HeckeError::NonIntegralWeight(weight));
        }
        let k = weight.to_integer();
        if k < 2 {
            return Err(HeckeError::WeightTooSmall(k));
        }
        if level == 0 || (4 * level) % character.modulus != 0 {
            return Err(HeckeError::CharacterLevel { modulus: character.modulus, level });
        }
        Ok(HeckeContext { weight: k, character, level })
    }

    pub fn for_triple(t: &EtaTriple) -> Result<Self, HeckeError> {
        HeckeContext::new(t.weight(), t.character(), t.level())
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn character(&self) -> CharacterSpec {
        self.character
    }

    pub fn level(&self) -> u64 {
        self.level
    }
}

/// `f | T_s`: the coefficient at `q^m` is
/// `Σ_{d | gcd(s,m)} χ(d) d^(k-1) a(sm/d²)`.
///
/// The result is truncated at `ceil(T/s)`, the largest bound for which every
/// `a(sm)` is known.
pub fn hecke_apply(f: &QSeries, s: u64, ctx: &HeckeContext) -> Result<QSeries, HeckeError> {
    assert!(s >= 1, "Hecke index must be positive");
    let t = f.trunc();
    let si = s as i64;
    if t < si {
        return Err(HeckeError::TruncationTooSmall { trunc: t, s });
    }
    let out_trunc = (t + si - 1).div_euclid(si);
    if s == 1 {
        return Ok(f.clone());
    }
    let weights: Vec<(i64, BigInt)> = divisors(s)?
        .into_iter()
        .filter_map(|d| {
            let chi = ctx.character.eval(d as i64);
            (chi != 0).then(|| (d as i64, BigInt::from(chi) * BigInt::from(d).pow((ctx.weight - 1) as u32)))
        })
        .collect();
    let start = si * f.valuation().unwrap_or(0).min(0);
    let mut terms = Vec::new();
    for m in start..out_trunc {
        let mut acc = BigInt::zero();
        for (d, w) in &weights {
            if m % d != 0 {
                continue;
            }
            let num = si * m;
            let dd = d * d;
            if num % dd != 0 {
                continue;
            }
            if let Some(a) = f.get(num / dd) {
                acc += w * a;
            }
        }
        if !acc.is_zero() {
            terms.push((m, acc));
        }
    }
    Ok(QSeries::from_terms(terms, out_trunc))
}

/// Minimal `m >= 0` with `24m + r ≡ 0 (mod p)`.
pub fn m0(p: u64, r: i64) -> u64 {
    assert!(gcd(p, 24) == 1, "m0 needs p coprime to 24, got {p}");
    if p == 1 {
        return 0;
    }
    let p_i = p as i128;
    let inv24 = (1..p_i).find(|&x| (24 * x) % p_i == 1).expect("24 is invertible mod p");
    ((-(r as i128)).rem_euclid(p_i) * inv24 % p_i) as u64
}

/// True when the exponent `(24m₀ + r)/p` of `F | T_p` receives no
/// contribution from the pulled-up sum `Σ A(m) q^(p(24m + r))`.
pub fn no_collision_check(a: u64, b: u64, c: u64, p: u64) -> bool {
    let r = triple_r(a, b, c);
    if r > 0 && (p as i64 + 1) * r > 24 {
        return true;
    }
    let p_i = p as i64;
    let x = (24 * m0(p, r) as i64 + r) / p_i;
    if x.rem_euclid(p_i) != 0 {
        return true;
    }
    let z = x.div_euclid(p_i);
    !((z - r).rem_euclid(24) == 0 && z >= r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationOutcome {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub p: u64,
    pub m0: u64,
    #[serde(with = "crate::serde_str::bigint")]
    pub witness: BigInt,
    pub eliminated: bool,
    /// Truncation of `F_{a,b,c}` in its natural grading that the witness
    /// was read from.
    pub trunc: i64,
}

fn check_elimination_preconditions(a: u64, b: u64, c: u64, p: u64) -> Result<(), HeckeError> {
    EtaTriple::new(a, b, c)?;
    if b < 5 {
        return Err(HeckeError::PreconditionFail(format!("b = {b} gives weight below 2")));
    }
    let a_prime = radical(576 * a * c)?;
    if !is_admissible_prime(a_prime, p)? {
        return Err(HeckeError::PreconditionFail(format!("{p} is not admissible for (a, c) = ({a}, {c})")));
    }
    if !no_collision_check(a, b, c, p) {
        return Err(HeckeError::PreconditionFail(format!("exponent collision at p = {p}")));
    }
    Ok(())
}

/// `A_{a,b,c}(m₀)` at an admissible prime `p`; a nonzero value shows
/// `F_{a,b,c} | T_p ≠ 0`.
pub fn elimination_test(a: u64, b: u64, c: u64, p: u64) -> Result<EliminationOutcome, HeckeError> {
    check_elimination_preconditions(a, b, c, p)?;
    let r = triple_r(a, b, c);
    let m = m0(p, r);
    let series = f_coefficients(a, b, c, p as i64 + 1);
    let witness = series.coeff(m as i64);
    Ok(EliminationOutcome {
        a,
        b,
        c,
        p,
        m0: m,
        eliminated: !witness.is_zero(),
        witness,
        trunc: 24 * p as i64 + r + 1,
    })
}
