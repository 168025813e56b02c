//! Modularity data of eta-quotients: the weakly-holomorphic conditions,
//! weight and Nebentypus, orders of vanishing at cusps, and the level data
//! of the triples `F_{a,b,c}`.

use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{divisors, gcd, kronecker, lcm, prime_divisors};
use crate::qseries::{eta_product, triple_r, QSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaError {
    #[error("{delta} does not divide the level {level}")]
    NotADivisor { delta: u64, level: u64 },
    #[error("repeated factor eta({0}z)")]
    RepeatedFactor(u64),
    #[error("b must be odd, got {0}")]
    EvenB(u64),
    #[error("a, b, c must be positive")]
    NonPositive,
    #[error("weakly holomorphic conditions fail: {0:?}")]
    ConditionsFail(Vec<Condition>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// `Σ δ r_δ ≡ 0 (mod 24)`
    DeltaSum,
    /// `Σ (N/δ) r_δ ≡ 0 (mod 24)`
    CoDeltaSum,
}

/// Real character `d ↦ (D / d)` on integers coprime to `modulus`, zero
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSpec {
    pub numerator: i64,
    pub modulus: u64,
}

impl CharacterSpec {
    pub fn eval(&self, d: i64) -> i8 {
        if gcd(d.unsigned_abs(), self.modulus) != 1 {
            return 0;
        }
        kronecker(self.numerator, d)
    }
}

impl fmt::Display for CharacterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}/·) mod {}", self.numerator, self.modulus)
    }
}

/// Weight and character of an eta-quotient that satisfies the
/// weakly-holomorphic conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModularData {
    #[serde(with = "crate::serde_str::rational64")]
    pub weight: Rational64,
    pub character: CharacterSpec,
}

/// `∏_{δ | N} η(δz)^(r_δ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaQuotient {
    level: u64,
    factors: Vec<(u64, i64)>,
}

impl EtaQuotient {
    pub fn new(level: u64, factors: Vec<(u64, i64)>) -> Result<Self, MetaError> {
        let mut seen = Vec::new();
        for &(delta, _) in &factors {
            if delta == 0 || level % delta != 0 {
                return Err(MetaError::NotADivisor { delta, level });
            }
            if seen.contains(&delta) {
                return Err(MetaError::RepeatedFactor(delta));
            }
            seen.push(delta);
        }
        Ok(EtaQuotient { level, factors })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn factors(&self) -> &[(u64, i64)] {
        &self.factors
    }

    pub fn weight(&self) -> Rational64 {
        Rational64::new(self.factors.iter().map(|&(_, r)| r).sum(), 2)
    }

    /// `Σ δ r_δ / 24`, the exponent of the leading `q`.
    pub fn leading_exponent(&self) -> Rational64 {
        Rational64::new(self.factors.iter().map(|&(d, r)| d as i64 * r).sum(), 24)
    }

    /// Checks the two congruences and returns the weight and character
    /// `((-1)^k s / d)`, `s = ∏ δ^(r_δ)`.
    ///
    /// Only the parity of each `r_δ` matters for `d` coprime to the level, so
    /// `s` is carried as `∏_{r_δ odd} δ`. For half-integral `k` the character
    /// is given relative to the theta multiplier: splitting off `η(24z)`
    /// (character `(12/·)`) from an integral-weight quotient turns the
    /// integral-weight rule into `(2s / d)`.
    pub fn check_weakly_holomorphic(&self) -> Result<ModularData, MetaError> {
        let n = self.level as i128;
        let delta_sum: i128 = self.factors.iter().map(|&(d, r)| d as i128 * r as i128).sum();
        let codelta_sum: i128 = self.factors.iter().map(|&(d, r)| (n / d as i128) * r as i128).sum();
        let mut failed = Vec::new();
        if delta_sum % 24 != 0 {
            failed.push(Condition::DeltaSum);
        }
        if codelta_sum % 24 != 0 {
            failed.push(Condition::CoDeltaSum);
        }
        if !failed.is_empty() {
            return Err(MetaError::ConditionsFail(failed));
        }
        let weight = self.weight();
        let s = self.odd_exponent_product();
        let numerator = if weight.is_integer() {
            if weight.to_integer().rem_euclid(2) == 0 {
                s
            } else {
                -s
            }
        } else {
            2 * s
        };
        Ok(ModularData { weight, character: CharacterSpec { numerator, modulus: self.level } })
    }

    fn odd_exponent_product(&self) -> i64 {
        let odd: Vec<u64> = self.factors.iter().filter(|&&(_, r)| r % 2 != 0).map(|&(d, _)| d).collect();
        let direct = odd.iter().try_fold(1i64, |acc, &d| acc.checked_mul(d as i64));
        match direct {
            Some(s) => s,
            // same square class, reduced prime by prime
            None => {
                let primes = prime_divisors(self.level).expect("level factors within budget");
                primes
                    .into_iter()
                    .filter(|&p| {
                        odd.iter().map(|&d| crate::arith::factorize(d).unwrap())
                            .map(|f| f.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e))
                            .sum::<u32>()
                            % 2
                            == 1
                    })
                    .product::<u64>() as i64
            }
        }
    }

    /// Order of vanishing at the cusp `x/y`, `y | N`:
    /// `N/24 Σ gcd(y,δ)² r_δ / (gcd(y, N/y) y δ)`. The formula does not
    /// depend on `x`.
    pub fn cusp_order(&self, _x: i64, y: u64) -> Rational64 {
        assert!(y >= 1 && self.level % y == 0, "cusp denominator {y} must divide {}", self.level);
        let n = self.level as i128;
        let yy = y as i128;
        let g = gcd(y, self.level / y) as i128;
        // common denominator 24 * g * y * lcm(δ)
        let l = self.factors.iter().fold(1u64, |acc, &(d, _)| lcm(acc, d)) as i128;
        let num: i128 = self
            .factors
            .iter()
            .map(|&(d, r)| {
                let gd = gcd(y, d) as i128;
                gd * gd * r as i128 * (l / d as i128)
            })
            .sum::<i128>()
            * n;
        let den = 24 * g * yy * l;
        let common = gcd_i128(num.abs(), den);
        Rational64::new((num / common) as i64, (den / common) as i64)
    }

    /// `(y, order)` for every positive divisor `y` of the level.
    pub fn cusp_orders(&self) -> Vec<(u64, Rational64)> {
        divisors(self.level)
            .expect("level factors within budget")
            .into_iter()
            .map(|y| (y, self.cusp_order(1, y)))
            .collect()
    }

    /// `q`-expansion truncated at `trunc`, for quotients whose leading exponent
    /// is an integer.
    pub fn q_expansion(&self, trunc: i64) -> Option<QSeries> {
        let lead = self.leading_exponent();
        if !lead.is_integer() {
            return None;
        }
        let lead = lead.to_integer();
        let terms = (trunc - lead).max(0);
        Some(eta_product(&self.factors, terms).shift(lead).truncate(trunc))
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs().max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Holomorphy {
    WeaklyHolomorphic,
    Holomorphic,
    Cuspidal,
}

impl fmt::Display for Holomorphy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Holomorphy::WeaklyHolomorphic => "weakly_holomorphic",
            Holomorphy::Holomorphic => "holomorphic",
            Holomorphy::Cuspidal => "cuspidal",
        })
    }
}

/// The parameters `(a, b, c)` of `F_{a,b,c} = η(24az)^a η(24acz)^(b-a) / η(24z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EtaTriple {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

impl EtaTriple {
    pub fn new(a: u64, b: u64, c: u64) -> Result<Self, MetaError> {
        if a == 0 || b == 0 || c == 0 {
            return Err(MetaError::NonPositive);
        }
        if b % 2 == 0 {
            return Err(MetaError::EvenB(b));
        }
        Ok(EtaTriple { a, b, c })
    }

    pub fn r(&self) -> i64 {
        triple_r(self.a, self.b, self.c)
    }

    pub fn weight(&self) -> Rational64 {
        Rational64::new(self.b as i64 - 1, 2)
    }

    /// `(b - 1) / 2`; integral because `b` is odd.
    pub fn k(&self) -> i64 {
        (self.b as i64 - 1) / 2
    }

    pub fn level(&self) -> u64 {
        576 * self.a * self.c
    }

    pub fn eta_quotient(&self) -> EtaQuotient {
        let (a, b, c) = (self.a, self.b as i64, self.c);
        let factors = if c == 1 {
            // η(24az) appears twice; merge the exponents
            vec![(24 * a, b), (24, -1)]
        } else {
            vec![(24 * a, a as i64), (24 * a * c, b - a as i64), (24, -1)]
        };
        let factors = if a == 1 {
            // δ = 24 coincides with 24a
            let mut merged: Vec<(u64, i64)> = Vec::new();
            for (d, r) in factors {
                match merged.iter_mut().find(|(e, _)| *e == d) {
                    Some(entry) => entry.1 += r,
                    None => merged.push((d, r)),
                }
            }
            merged
        } else {
            factors
        };
        EtaQuotient::new(self.level(), factors.into_iter().filter(|&(_, r)| r != 0).collect())
            .expect("triple factors divide 576ac")
    }

    /// Nebentypus in closed form: `((-1)^k ac / d)` for even `a`,
    /// `((-1)^k a / d)` for odd `a`.
    pub fn character(&self) -> CharacterSpec {
        let sign = if self.k() % 2 == 0 { 1 } else { -1 };
        let base = if self.a % 2 == 0 { self.a * self.c } else { self.a };
        CharacterSpec { numerator: sign * base as i64, modulus: self.level() }
    }

    pub fn cusp_orders(&self) -> Vec<(u64, Rational64)> {
        self.eta_quotient().cusp_orders()
    }

    /// Cuspidal iff every cusp order is positive, holomorphic iff every order
    /// is nonnegative.
    pub fn classify_holomorphy(&self) -> Holomorphy {
        let orders = self.cusp_orders();
        if orders.iter().all(|(_, o)| o.is_positive()) {
            Holomorphy::Cuspidal
        } else if orders.iter().all(|(_, o)| !o.is_negative()) {
            Holomorphy::Holomorphic
        } else {
            Holomorphy::WeaklyHolomorphic
        }
    }

    /// `lcm(a,c)·n·m` with `m` minimal such that `m r ≡ 0 (mod 24)` and `n`
    /// minimal such that `(lcm(a,c)/(ac))·n(b-a) ≡ 0 (mod 24)` and `ac | lcm(a,c)·n`.
    pub fn optimal_level(&self) -> u64 {
        let m = self.optimal_scale();
        let l = lcm(self.a, self.c);
        let g = gcd(self.a, self.c);
        let diff = self.b as i64 - self.a as i64;
        // n(b-a)/g ∈ 24Z  ⇔  24g | n(b-a)
        let n = (1..)
            .find(|&n: &u64| n % g == 0 && (n as i64 * diff).rem_euclid(24 * g as i64) == 0)
            .unwrap();
        l * n * m
    }

    /// Smallest `m >= 1` with `m r ≡ 0 (mod 24)`.
    pub fn optimal_scale(&self) -> u64 {
        24 / gcd(self.r().unsigned_abs(), 24)
    }

    /// The quotient with the factor 24 replaced by `optimal_scale()`, at the
    /// optimal level.
    pub fn rescaled_quotient(&self) -> Result<EtaQuotient, MetaError> {
        let m = self.optimal_scale();
        let (a, b, c) = (self.a, self.b as i64, self.c);
        let mut merged: Vec<(u64, i64)> = Vec::new();
        for (d, r) in [(m * a, a as i64), (m * a * c, b - a as i64), (m, -1)] {
            match merged.iter_mut().find(|(e, _)| *e == d) {
                Some(entry) => entry.1 += r,
                None => merged.push((d, r)),
            }
        }
        merged.retain(|&(_, r)| r != 0);
        EtaQuotient::new(self.optimal_level(), merged)
    }
}

impl fmt::Display for EtaTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Convenience wrapper returning the closed-form character of `F_{a,b,c}`.
pub fn character_f(a: u64, b: u64, c: u64) -> Result<CharacterSpec, MetaError> {
    Ok(EtaTriple::new(a, b, c)?.character())
}

pub fn classify_holomorphy(a: u64, b: u64, c: u64) -> Result<Holomorphy, MetaError> {
    Ok(EtaTriple::new(a, b, c)?.classify_holomorphy())
}

pub fn optimal_level(a: u64, b: u64, c: u64) -> Result<u64, MetaError> {
    Ok(EtaTriple::new(a, b, c)?.optimal_level())
}

/// Sign of the smallest cusp order, as an independent summary of
/// [`EtaTriple::classify_holomorphy`].
pub fn min_cusp_order(orders: &[(u64, Rational64)]) -> Rational64 {
    orders.iter().map(|&(_, o)| o).min().unwrap_or_else(Rational64::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::expand_f;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eta_24z() {
        let eta = EtaQuotient::new(576, vec![(24, 1)]).unwrap();
        let data = eta.check_weakly_holomorphic().unwrap();
        assert_eq!(data.weight, Rational64::new(1, 2));
        let twelve = CharacterSpec { numerator: 12, modulus: 576 };
        for d in 1..2000 {
            assert_eq!(data.character.eval(d), twelve.eval(d), "d = {d}");
        }
        assert_eq!(eta.cusp_order(1, 576), Rational64::from_integer(1));
        assert_eq!(eta.cusp_order(1, 1), Rational64::from_integer(1));
    }

    #[test]
    fn conditions_fail() {
        let eta = EtaQuotient::new(1, vec![(1, 1)]).unwrap();
        assert_eq!(
            eta.check_weakly_holomorphic(),
            Err(MetaError::ConditionsFail(vec![Condition::DeltaSum, Condition::CoDeltaSum]))
        );
        assert!(EtaQuotient::new(10, vec![(3, 1)]).is_err());
        assert!(EtaQuotient::new(10, vec![(5, 1), (5, 2)]).is_err());
    }

    #[test]
    fn triples_are_weakly_holomorphic() {
        for a in 1..=8 {
            for c in 1..=8 {
                for b in (1..=15).step_by(2) {
                    let t = EtaTriple::new(a, b, c).unwrap();
                    let data = t.eta_quotient().check_weakly_holomorphic().unwrap();
                    assert_eq!(data.weight, t.weight());
                    assert_eq!(t.eta_quotient().leading_exponent(), Rational64::from_integer(t.r()));
                }
            }
        }
    }

    #[test]
    fn closed_form_characters() {
        let t = EtaTriple::new(4, 5, 3).unwrap();
        assert_eq!(t.character().numerator, 12);
        let t = EtaTriple::new(1, 5, 7).unwrap();
        for d in 1..500 {
            let v = t.character().eval(d);
            assert_eq!(v, i8::from(gcd(d as u64, t.level()) == 1));
        }
    }

    #[test]
    fn raw_and_closed_form_characters_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = rng.gen_range(1..=12);
            let c = rng.gen_range(1..=12);
            let b = 2 * rng.gen_range(0..=12) + 1;
            let t = EtaTriple::new(a, b, c).unwrap();
            let raw = t.eta_quotient().check_weakly_holomorphic().unwrap().character;
            let closed = t.character();
            for d in 1..=10_000 {
                assert_eq!(raw.eval(d), closed.eval(d), "{t} at d = {d}");
            }
        }
    }

    #[test]
    fn character_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chi = EtaTriple::new(4, 5, 3).unwrap().character();
        for _ in 0..1000 {
            let d1 = rng.gen_range(1..5000i64);
            let d2 = rng.gen_range(1..5000i64);
            assert_eq!(chi.eval(d1 * d2), chi.eval(d1) * chi.eval(d2));
        }
    }

    #[test]
    fn cusp_24_sign_follows_b_minus_a() {
        for (a, b, c) in [(4, 5, 3), (4, 3, 2), (3, 3, 5), (5, 11, 2)] {
            let t = EtaTriple::new(a, b, c).unwrap();
            let order = t.eta_quotient().cusp_order(1, 24);
            assert_eq!(order.signum(), Rational64::from_integer((b as i64 - a as i64).signum()));
        }
    }

    #[test]
    fn cusp_order_is_linear_in_exponents() {
        let f = EtaQuotient::new(48, vec![(2, 3), (6, -1), (24, 2)]).unwrap();
        let g = EtaQuotient::new(48, vec![(2, 6), (6, -2), (24, 4)]).unwrap();
        for y in divisors(48).unwrap() {
            assert_eq!(g.cusp_order(1, y), f.cusp_order(1, y) * 2);
        }
    }

    #[test]
    fn holomorphy_examples() {
        assert_eq!(classify_holomorphy(4, 5, 3).unwrap(), Holomorphy::Cuspidal);
        assert_eq!(classify_holomorphy(4, 3, 2).unwrap(), Holomorphy::WeaklyHolomorphic);
        assert_eq!(classify_holomorphy(3, 3, 5).unwrap(), Holomorphy::Holomorphic);
        assert!(classify_holomorphy(3, 4, 5).is_err());
    }

    #[test]
    fn holomorphy_agrees_with_min_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t = EtaTriple::new(rng.gen_range(1..=6), 2 * rng.gen_range(0..8) + 1, rng.gen_range(1..=6)).unwrap();
            let min = min_cusp_order(&t.cusp_orders());
            let expected = if min.is_positive() {
                Holomorphy::Cuspidal
            } else if min.is_zero() {
                Holomorphy::Holomorphic
            } else {
                Holomorphy::WeaklyHolomorphic
            };
            assert_eq!(t.classify_holomorphy(), expected, "{t}");
        }
    }

    #[test]
    fn optimal_levels_of_the_exceptions() {
        assert_eq!(optimal_level(4, 5, 3).unwrap(), 2304);
        assert_eq!(optimal_level(4, 5, 5).unwrap(), 576 * 4 * 5);
        assert_eq!(optimal_level(4, 5, 11).unwrap(), 576 * 4 * 11);
    }

    #[test]
    fn optimal_level_divides_full_level() {
        for a in 1..=12 {
            for c in 1..=12 {
                for b in (1..=25).step_by(2) {
                    let t = EtaTriple::new(a, b, c).unwrap();
                    assert_eq!(t.level() % t.optimal_level(), 0, "{t}");
                    let q = t.rescaled_quotient().unwrap();
                    q.check_weakly_holomorphic().unwrap_or_else(|e| panic!("{t}: {e}"));
                }
            }
        }
    }

    #[test]
    fn rescaled_quotient_has_same_expansion_up_to_substitution() {
        let t = EtaTriple::new(4, 5, 3).unwrap();
        let m = t.optimal_scale() as i64;
        assert_eq!(m, 8);
        let small = t.rescaled_quotient().unwrap();
        // leading exponent m·r/24
        assert_eq!(small.leading_exponent(), Rational64::from_integer(m * t.r() / 24));
        let big = expand_f(4, 5, 3, 600);
        let small_series = small.q_expansion(200).unwrap();
        for (e, c) in small_series.terms() {
            assert_eq!(big.coeff(e * 24 / m), *c);
        }
    }

    #[test]
    fn integral_weight_triples() {
        for b in (1..30).step_by(2) {
            let t = EtaTriple::new(2, b, 3).unwrap();
            assert!(t.weight().is_integer());
            assert_eq!(t.weight(), Rational64::from_integer(t.k()));
        }
        assert_eq!(EtaTriple::new(2, 4, 3), Err(MetaError::EvenB(4)));
    }
}
