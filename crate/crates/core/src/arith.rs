//! Elementary number theory used by the classification pipeline: Kronecker
//! symbols, factorization by trial division, Möbius sums over the characters
//! `(-p / s)`, the search for an integer `s` that no CM form survives, and the
//! Pólya–Vinogradov bookkeeping behind the finiteness argument.

use serde::Serialize;
use thiserror::Error;

/// Trial divisors tried before giving up on a factorization.
pub const DEFAULT_TRIAL_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("factorization of {n} needs trial divisors beyond {limit}")]
    FactorizationBudgetExceeded { n: u64, limit: u64 },
    #[error("precondition failed: {0}")]
    PreconditionFail(String),
    #[error("the principal character mod {0} is excluded from the Pólya–Vinogradov check")]
    TrivialCharacter(u64),
    #[error("values do not define a character mod {0}")]
    NotACharacter(u64),
}

const KRONECKER_TWO: [i8; 8] = [0, 1, 0, -1, 0, -1, 0, 1];

/// Kronecker symbol `(a / n)` over all integer pairs.
pub fn kronecker(a: i64, n: i64) -> i8 {
    let mut a = a as i128;
    let mut b = n as i128;
    if b == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let mut v = 0u32;
    while b % 2 == 0 {
        b /= 2;
        v += 1;
    }
    let mut k: i8 = if v % 2 == 0 { 1 } else { KRONECKER_TWO[(a & 7) as usize] };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // b is odd and positive from here on
    loop {
        if a == 0 {
            return if b > 1 { 0 } else { k };
        }
        v = 0;
        while a % 2 == 0 {
            a /= 2;
            v += 1;
        }
        if v % 2 == 1 {
            k *= KRONECKER_TWO[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

/// Prime factorization by trial division, divisors up to `limit`.
pub fn factorize_with(mut n: u64, limit: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    let original = n;
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if d > limit {
            return Err(ArithError::FactorizationBudgetExceeded { n: original, limit });
        }
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    Ok(out)
}

pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    factorize_with(n, DEFAULT_TRIAL_LIMIT)
}

pub fn prime_divisors(n: u64) -> Result<Vec<u64>, ArithError> {
    Ok(factorize(n)?.into_iter().map(|(p, _)| p).collect())
}

pub fn divisors(n: u64) -> Result<Vec<u64>, ArithError> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n)? {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn mobius(n: u64) -> Result<i8, ArithError> {
    let mut mu = 1i8;
    for (_, e) in factorize(n)? {
        if e > 1 {
            return Ok(0);
        }
        mu = -mu;
    }
    Ok(mu)
}

/// Product of the primes dividing `n` to odd multiplicity.
pub fn squarefree_part(n: u64) -> Result<u64, ArithError> {
    if n == 0 {
        return Err(ArithError::PreconditionFail("squarefree part of 0".into()));
    }
    Ok(factorize(n)?
        .into_iter()
        .filter(|&(_, e)| e % 2 == 1)
        .map(|(p, _)| p)
        .product())
}

/// Product of the distinct primes dividing `n`.
pub fn radical(n: u64) -> Result<u64, ArithError> {
    if n == 0 {
        return Err(ArithError::PreconditionFail("radical of 0".into()));
    }
    Ok(prime_divisors(n)?.into_iter().product())
}

fn is_squarefree(n: u64) -> Result<bool, ArithError> {
    Ok(factorize(n)?.iter().all(|&(_, e)| e == 1))
}

/// `g_ac(s)`: 1 when `(-p / s) = -1` for every prime `p | ac`, else 0.
///
/// Evaluated as the normalized Möbius sum `2^-m Σ_{d | ac} μ(d) ψ_d(s)` and
/// checked against the direct per-prime test.
pub fn g_indicator(ac: u64, s: u64) -> Result<u8, ArithError> {
    if ac == 0 || ac % 2 == 0 || ac % 3 == 0 || !is_squarefree(ac)? {
        return Err(ArithError::PreconditionFail(format!(
            "g_indicator needs a squarefree modulus coprime to 6, got {ac}"
        )));
    }
    if gcd(ac, s) != 1 {
        return Err(ArithError::PreconditionFail(format!("gcd({ac}, {s}) != 1")));
    }
    let primes = prime_divisors(ac)?;
    let symbols: Vec<i64> = primes
        .iter()
        .map(|&p| kronecker(-(p as i64), s as i64) as i64)
        .collect();

    // divisors of a squarefree ac are subsets of its primes
    let m = primes.len();
    let mut total: i64 = 0;
    for mask in 0u64..(1u64 << m) {
        let mut psi = 1i64;
        let mut mu = 1i64;
        for (i, chi) in symbols.iter().enumerate() {
            if mask >> i & 1 == 1 {
                psi *= chi;
                mu = -mu;
            }
        }
        total += mu * psi;
    }
    let scale = 1i64 << m;
    assert_eq!(total % scale, 0, "Möbius sum for g_{ac}({s}) is not a multiple of 2^{m}");
    let via_sum = (total / scale) as u8;
    let direct = u8::from(symbols.iter().all(|&chi| chi == -1));
    assert_eq!(via_sum, direct, "g_{ac}({s}): Möbius sum and direct test disagree");
    Ok(via_sum)
}

/// Primes `p >= 5` dividing `a_prime`; the part of the level that the
/// progression `s ≡ 23 (mod 24)` does not already handle.
pub fn odd_level_primes(a_prime: u64) -> Result<Vec<u64>, ArithError> {
    Ok(prime_divisors(a_prime)?.into_iter().filter(|&p| p >= 5).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SSearchResult {
    pub a_prime: u64,
    pub s: Option<u64>,
    /// `(p, (-p / s))` for 2, 3 and each prime `p >= 5` dividing `a_prime`.
    pub certificate: Vec<(u64, i8)>,
    pub limit_used: u64,
}

/// Smallest `s <= limit` with `s ≡ 23 (mod 24)`, `gcd(s, a_prime) = 1` and
/// `(-p / s) = -1` for every prime `p | a_prime`.
pub fn s_search(a_prime: u64, limit: u64) -> Result<SSearchResult, ArithError> {
    if a_prime == 0 {
        return Err(ArithError::PreconditionFail("a_prime must be positive".into()));
    }
    let primes = odd_level_primes(a_prime)?;
    let q: u64 = primes.iter().product();
    let mut s = 23u64;
    let mut found = None;
    while s <= limit {
        if gcd(s, q) == 1 && g_indicator(q, s)? == 1 {
            found = Some(s);
            break;
        }
        s += 24;
    }
    let certificate = match found {
        Some(s) => [2, 3]
            .into_iter()
            .chain(primes.iter().copied())
            .map(|p| (p, kronecker(-(p as i64), s as i64)))
            .collect(),
        None => Vec::new(),
    };
    Ok(SSearchResult { a_prime, s: found, certificate, limit_used: limit })
}

/// Whether `p` is a prime usable for Hecke elimination at a level whose
/// radical is `a_prime`.
pub fn is_admissible_prime(a_prime: u64, p: u64) -> Result<bool, ArithError> {
    if p % 24 != 23 || !is_prime(p) {
        return Ok(false);
    }
    let primes = odd_level_primes(a_prime)?;
    let q: u64 = primes.iter().product();
    if gcd(q, p) != 1 {
        return Ok(false);
    }
    Ok(g_indicator(q, p)? == 1)
}

/// The smallest admissible prime strictly greater than `after`.
pub fn next_admissible_prime(a_prime: u64, after: u64) -> Result<u64, ArithError> {
    let mut p = if after < 23 { 23 } else { after + 1 };
    p += (23 + 24 - p % 24) % 24;
    loop {
        if is_admissible_prime(a_prime, p)? {
            return Ok(p);
        }
        p += 24;
    }
}

fn is_square(n: u64) -> bool {
    let r = (n as f64).sqrt() as u64;
    (r.saturating_sub(1)..=r + 1).any(|x| x * x == n)
}

/// Whether the principal norm form of the maximal order of `Q(sqrt(-d))`
/// represents `s`, by exhaustive search.
pub fn norm_form_oracle(d: u64, s: u64) -> bool {
    assert!(d >= 1, "d must be positive");
    if d % 4 == 3 {
        // ((x^2 + d y^2) / 4 with x ≡ y (mod 2)
        let target = 4 * s;
        let mut y = 0u64;
        while d * y * y <= target {
            let rest = target - d * y * y;
            if is_square(rest) {
                let x = (rest as f64).sqrt().round() as u64;
                if (x + y) % 2 == 0 {
                    return true;
                }
            }
            y += 1;
        }
        false
    } else {
        let mut y = 0u64;
        while d * y * y <= s {
            if is_square(s - d * y * y) {
                return true;
            }
            y += 1;
        }
        false
    }
}

/// Pólya–Vinogradov bound `2 sqrt(m) log m`.
pub fn pv_bound(modulus: u64) -> f64 {
    let m = modulus as f64;
    2.0 * m.sqrt() * m.ln()
}

/// A real Dirichlet character given by one period of values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterTable {
    pub modulus: u64,
    values: Vec<i8>,
}

impl CharacterTable {
    /// `x ↦ (numerator / x)` restricted to units mod `modulus`.
    pub fn kronecker(numerator: i64, modulus: u64) -> Result<Self, ArithError> {
        let values = (0..modulus)
            .map(|x| {
                if gcd(x, modulus) != 1 {
                    0
                } else {
                    kronecker(numerator, x as i64)
                }
            })
            .collect();
        let table = CharacterTable { modulus, values };
        table.validate()?;
        Ok(table)
    }

    pub fn from_values(values: Vec<i8>) -> Result<Self, ArithError> {
        let table = CharacterTable { modulus: values.len() as u64, values };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), ArithError> {
        let m = self.modulus;
        if m == 0 || self.values.get(1 % m as usize) != Some(&1) && m > 1 {
            return Err(ArithError::NotACharacter(m));
        }
        for x in 0..m {
            for y in 0..m {
                let lhs = self.values[((x * y) % m) as usize];
                if lhs != self.values[x as usize] * self.values[y as usize] {
                    return Err(ArithError::NotACharacter(m));
                }
            }
            if (gcd(x, m) == 1) != (self.values[x as usize] != 0) {
                return Err(ArithError::NotACharacter(m));
            }
        }
        Ok(())
    }

    pub fn value(&self, x: u64) -> i8 {
        self.values[(x % self.modulus) as usize]
    }

    pub fn is_principal(&self) -> bool {
        self.values.iter().all(|&v| v == 0 || v == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvCheck {
    pub modulus: u64,
    pub max_partial_sum: i64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks `|Σ_{x<=h} χ(x)| <= 2 sqrt(m) log m` for every `h` by summing
/// directly. Partial sums of a nonprincipal character are periodic, so one
/// period suffices.
pub fn pv_check(chi: &CharacterTable) -> Result<PvCheck, ArithError> {
    if chi.is_principal() {
        return Err(ArithError::TrivialCharacter(chi.modulus));
    }
    let mut partial = 0i64;
    let mut max = 0i64;
    for x in 1..=chi.modulus {
        partial += chi.value(x) as i64;
        max = max.max(partial.abs());
    }
    let bound = pv_bound(chi.modulus);
    Ok(PvCheck { modulus: chi.modulus, max_partial_sum: max, bound, holds: (max as f64) <= bound })
}

/// Product of the primes from 5 through 43.
pub fn kappa() -> u64 {
    (5..=43u64).filter(|&p| is_prime(p)).product()
}

fn pv_margin(ac: f64, m_primes: u32) -> f64 {
    let level = 24.0 * ac;
    ac / 24.0 - 1.0 - 2f64.powi(m_primes as i32 + 1) * level.sqrt() * level.ln()
}

/// Whether `ac/24 - 1 - 2^(m+1) sqrt(24ac) log(24ac) > 0`, which forces an
/// admissible `s < ac` to exist.
pub fn pv_viability(ac: u64, m_primes: u32) -> bool {
    pv_margin(ac as f64, m_primes) > 0.0
}

/// The real `ac` past which the viability inequality holds for `m_primes`
/// distinct primes (the margin is increasing beyond its minimum).
pub fn pv_threshold(m_primes: u32) -> f64 {
    let mut hi = 2.0f64;
    while pv_margin(hi, m_primes) <= 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pv_margin(mid, m_primes) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
