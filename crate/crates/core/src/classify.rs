//! Coefficient polynomials `b ↦ A_{a,b,c}(m)`, their odd roots, the
//! classification pipeline over boxes of `(a, b, c)`, and a density
//! diagnostic for expansions.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize, next_admissible_prime, radical, s_search, ArithError};
use crate::hecke::{elimination_test, no_collision_check, EliminationOutcome, HeckeError};
use crate::qseries::{expand_f, f_coefficients, QSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("held-out sample at b = {b} disagrees with the degree-{degree} interpolant for (a, c, m) = ({a}, {c}, {m})")]
    DegreeOverflow { a: u64, c: u64, m: u64, b: u64, degree: u64 },
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("precondition failed: {0}")]
    PreconditionFail(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
}

/// `A_{a,b,c}(m)` as an exact polynomial in `b`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffPoly {
    pub a: u64,
    pub c: u64,
    pub m: u64,
    #[serde(with = "crate::serde_str::bigrational_vec")]
    pub coeffs: Vec<BigRational>,
    pub degree_bound: u64,
}

impl CoeffPoly {
    /// A polynomial with explicit integer coefficients, lowest degree first.
    pub fn from_integers(coeffs: &[i64]) -> Self {
        let coeffs = coeffs.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        let mut p = CoeffPoly { a: 0, c: 0, m: 0, coeffs, degree_bound: 0 };
        p.trim();
        p.degree_bound = p.degree().unwrap_or(0) as u64;
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, b: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * b + c)
    }

    /// Value at an integer `b`; panics if the value is not an integer, which
    /// would break the polynomial's defining property.
    pub fn eval_int(&self, b: i64) -> BigInt {
        let v = self.eval(&BigRational::from_integer(b.into()));
        assert!(v.is_integer(), "A_{{{},b,{}}}({}) at b = {b} is not an integer", self.a, self.c, self.m);
        v.to_integer()
    }

    /// Integer coefficients of a positive multiple of the polynomial.
    pub fn primitive_integer_coeffs(&self) -> Vec<BigInt> {
        let den = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * &den).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            ints
        } else {
            ints.into_iter().map(|c| c / &g).collect()
        }
    }
}

fn nodes(a: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|j| a + 2 * j).collect()
}

/// Exact Lagrange interpolation through `(x_i, y_i)`, via Newton divided
/// differences.
fn lagrange(xs: &[u64], ys: &[BigInt]) -> Vec<BigRational> {
    let n = xs.len();
    let x: Vec<BigRational> = xs.iter().map(|&v| BigRational::from_integer(v.into())).collect();
    let mut dd: Vec<BigRational> = ys.iter().map(|y| BigRational::from_integer(y.clone())).collect();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (&dd[i] - &dd[i - 1]) / (&x[i] - &x[i - j]);
        }
    }
    // Horner on the Newton form
    let mut poly = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        // poly = poly * (b - x_i) + dd[i]
        let mut next = vec![BigRational::zero(); n];
        for (k, c) in poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if k + 1 < n {
                next[k + 1] += c;
            }
            next[k] -= c * &x[i];
        }
        next[0] += &dd[i];
        poly = next;
    }
    poly
}

/// `A_{a,b,c}(m)` for `m` in `m_lo..=m_hi`, each interpolated from the
/// shared odd-step nodes `b = a, a+2, …` and checked on one extra node.
pub fn interpolate_range(a: u64, c: u64, m_lo: u64, m_hi: u64) -> Result<Vec<CoeffPoly>, ClassifyError> {
    if a == 0 || c == 0 {
        return Err(ClassifyError::PreconditionFail("a and c must be positive".into()));
    }
    if m_lo > m_hi {
        return Ok(Vec::new());
    }
    let max_degree = m_hi / (a * c);
    let xs = nodes(a, max_degree as usize + 2);
    let samples: Vec<QSeries> = xs
        .par_iter()
        .map(|&b| f_coefficients(a, b, c, m_hi as i64 + 1))
        .collect();
    (m_lo..=m_hi)
        .map(|m| {
            let degree = m / (a * c);
            let used = degree as usize + 1;
            let ys: Vec<BigInt> = samples[..used].iter().map(|s| s.coeff(m as i64)).collect();
            let mut poly = CoeffPoly { a, c, m, coeffs: lagrange(&xs[..used], &ys), degree_bound: degree };
            poly.trim();
            let held = xs[used];
            if poly.eval(&BigRational::from_integer(held.into())) != BigRational::from_integer(samples[used].coeff(m as i64)) {
                return Err(ClassifyError::DegreeOverflow { a, c, m, b: held, degree });
            }
            Ok(poly)
        })
        .collect()
}

pub fn interpolate_a(a: u64, c: u64, m: u64) -> Result<CoeffPoly, ClassifyError> {
    Ok(interpolate_range(a, c, m, m)?.pop().expect("one polynomial"))
}

fn eval_big(coeffs: &[BigInt], b: &BigInt) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, c| acc * b + c)
}

/// Bound on the absolute value of any root, `2 max |c_{n-i}/c_n|^(1/i)`,
/// padded for floating-point error.
fn root_bound(coeffs: &[BigInt]) -> f64 {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].abs().to_f64().unwrap_or(f64::MAX);
    let mut best = 0f64;
    for i in 1..=n {
        let ci = coeffs[n - i].abs().to_f64().unwrap_or(f64::MAX);
        let mut term = (ci / lead).powf(1.0 / i as f64);
        if i == n {
            term /= 2f64.powf(1.0 / n as f64);
        }
        best = best.max(term);
    }
    2.0 * best * 1.01 + 2.0
}

const SCAN_LIMIT: f64 = 1e7;

/// Odd positive integer roots, ascending.
pub fn odd_roots(poly: &CoeffPoly) -> Result<Vec<u64>, ClassifyError> {
    if poly.is_zero() {
        return Err(ClassifyError::ZeroPolynomial);
    }
    let mut coeffs = poly.primitive_integer_coeffs();
    // b = 0 roots are not odd; divide them out
    let lead_zeros = coeffs.iter().take_while(|c| c.is_zero()).count();
    coeffs.drain(..lead_zeros);
    if coeffs.len() == 1 {
        return Ok(Vec::new());
    }
    let c0 = coeffs[0].abs();
    let bound = root_bound(&coeffs);
    let candidates: Vec<u64> = if bound <= SCAN_LIMIT {
        (1..=bound as u64).step_by(2).filter(|&b| (&c0 % b).is_zero()).collect()
    } else {
        let c0 = c0.to_u64().ok_or_else(|| {
            ClassifyError::ResourceLimit(format!("constant term {c0} too large to enumerate divisors"))
        })?;
        let mut divs = vec![1u64];
        for (p, e) in factorize(c0)? {
            if p == 2 {
                continue;
            }
            let mut next = Vec::new();
            for d in &divs {
                let mut x = *d;
                for _ in 0..=e {
                    next.push(x);
                    x = x.saturating_mul(p);
                }
            }
            divs = next;
        }
        divs.sort_unstable();
        divs
    };
    Ok(candidates.into_iter().filter(|&b| eval_big(&coeffs, &BigInt::from(b)).is_zero()).collect())
}

/// Union of odd roots of `A_{a,b,c}(m)` for `m` in `[ac, s-1]`; empty when
/// `s <= ac`.
pub fn candidate_bs(a: u64, c: u64, s: u64) -> Result<BTreeSet<u64>, ClassifyError> {
    let mut out = BTreeSet::new();
    if s <= a * c {
        return Ok(out);
    }
    for poly in interpolate_range(a, c, a * c, s - 1)? {
        out.extend(odd_roots(&poly)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub a_min: u64,
    pub a_max: u64,
    pub c_min: u64,
    pub c_max: u64,
    pub b_max: u64,
    pub s_limit: u64,
    pub hecke_rounds: u32,
    /// Largest normalized expansion length a shard may request.
    pub max_terms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            a_min: 4,
            a_max: 6,
            c_min: 2,
            c_max: 12,
            b_max: 99,
            s_limit: 100_000,
            hecke_rounds: 3,
            max_terms: 20_000,
        }
    }
}

impl PipelineConfig {
    pub fn shards(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for a in self.a_min..=self.a_max {
            for c in self.c_min..=self.c_max {
                out.push((a, c));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    /// `b <= a`: the form is not cuspidal, so the Hecke test does not apply.
    NotCuspidal,
    Eliminated {
        p: u64,
        m0: u64,
        #[serde(with = "crate::serde_str::bigint")]
        witness: BigInt,
    },
    /// Not eliminated by any prime tried. This is not a lacunarity claim.
    Survivor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Provenance {
    CuspidalityFilter,
    HeckeRound { round: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivorReport {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub primes_tried: Vec<u64>,
    pub status: Status,
    pub provenance: Provenance,
}

impl SurvivorReport {
    pub fn triple(&self) -> (u64, u64, u64) {
        (self.a, self.b, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step1Branch {
    /// `s < a′/6`: every `b` is discarded.
    Discarded,
    Continued,
    /// No `s` below the search limit, or the expansion budget was exceeded.
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardAudit {
    pub a: u64,
    pub c: u64,
    pub a_prime: u64,
    pub s: Option<u64>,
    pub branch: Step1Branch,
    pub roots: Vec<u64>,
    pub roots_beyond_b_max: Vec<u64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardResult {
    pub audit: ShardAudit,
    pub reports: Vec<SurvivorReport>,
}

impl ShardResult {
    pub fn complete(&self) -> bool {
        self.audit.branch != Step1Branch::Incomplete
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub complete: bool,
    pub shards: Vec<ShardAudit>,
    pub reports: Vec<SurvivorReport>,
}

impl PipelineReport {
    pub fn from_shards(config: PipelineConfig, shards: Vec<ShardResult>) -> Self {
        let complete = shards.iter().all(ShardResult::complete);
        let mut audits = Vec::with_capacity(shards.len());
        let mut reports = Vec::new();
        for s in shards {
            audits.push(s.audit);
            reports.extend(s.reports);
        }
        PipelineReport { config, complete, shards: audits, reports }
    }

    pub fn survivors(&self) -> Vec<(u64, u64, u64)> {
        self.reports
            .iter()
            .filter(|r| r.status == Status::Survivor)
            .map(SurvivorReport::triple)
            .collect()
    }
}

/// Hecke rounds for one cuspidal candidate: the first nonzero witness
/// eliminates it.
fn hecke_rounds(a: u64, b: u64, c: u64, a_prime: u64, rounds: u32) -> Result<SurvivorReport, ClassifyError> {
    let mut primes_tried = Vec::new();
    let mut p = 0;
    let mut round = 0;
    while round < rounds {
        p = next_admissible_prime(a_prime, p)?;
        if !no_collision_check(a, b, c, p) {
            continue;
        }
        round += 1;
        primes_tried.push(p);
        let EliminationOutcome { m0, witness, eliminated, .. } = elimination_test(a, b, c, p)?;
        if eliminated {
            return Ok(SurvivorReport {
                a,
                b,
                c,
                primes_tried,
                status: Status::Eliminated { p, m0, witness },
                provenance: Provenance::HeckeRound { round },
            });
        }
    }
    Ok(SurvivorReport { a, b, c, primes_tried, status: Status::Survivor, provenance: Provenance::HeckeRound { round } })
}

/// All four steps for a single `(a, c)`.
pub fn run_shard(a: u64, c: u64, config: &PipelineConfig) -> Result<ShardResult, ClassifyError> {
    if a < 4 {
        return Err(ClassifyError::PreconditionFail(format!("the pipeline needs a >= 4, got {a}")));
    }
    let a_prime = radical(576 * a * c)?;
    let threshold = a_prime / 6;
    let search = s_search(a_prime, config.s_limit)?;
    let mut audit = ShardAudit {
        a,
        c,
        a_prime,
        s: search.s,
        branch: Step1Branch::Continued,
        roots: Vec::new(),
        roots_beyond_b_max: Vec::new(),
        note: None,
    };
    let Some(s) = search.s else {
        audit.branch = Step1Branch::Incomplete;
        audit.note = Some(format!("no admissible s up to {}", config.s_limit));
        return Ok(ShardResult { audit, reports: Vec::new() });
    };
    if s < threshold {
        audit.branch = Step1Branch::Discarded;
        audit.note = Some(format!("s = {s} < a'/6 = {threshold}"));
        return Ok(ShardResult { audit, reports: Vec::new() });
    }
    if s > config.max_terms {
        audit.branch = Step1Branch::Incomplete;
        audit.note = Some(format!("s = {s} needs more than {} terms", config.max_terms));
        return Ok(ShardResult { audit, reports: Vec::new() });
    }
    let roots = candidate_bs(a, c, s)?;
    audit.roots = roots.iter().copied().collect();
    audit.roots_beyond_b_max = roots.iter().copied().filter(|&b| b > config.b_max).collect();
    let mut reports = Vec::new();
    for &b in roots.iter().filter(|&&b| b <= config.b_max) {
        if b <= a {
            reports.push(SurvivorReport {
                a,
                b,
                c,
                primes_tried: Vec::new(),
                status: Status::NotCuspidal,
                provenance: Provenance::CuspidalityFilter,
            });
            continue;
        }
        reports.push(hecke_rounds(a, b, c, a_prime, config.hecke_rounds)?);
    }
    Ok(ShardResult { audit, reports })
}

/// Runs every shard of the box in parallel; the merge follows shard order,
/// so the report does not depend on scheduling.
pub fn pipeline(config: &PipelineConfig) -> Result<PipelineReport, ClassifyError> {
    let shards: Result<Vec<ShardResult>, ClassifyError> =
        config.shards().into_par_iter().map(|(a, c)| run_shard(a, c, config)).collect();
    Ok(PipelineReport::from_shards(config.clone(), shards?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub bound: u64,
    pub nonzero: u64,
    pub fraction: f64,
}

/// Fraction of `0 <= n < x` with a nonzero coefficient in `F_{a,b,c}`, for
/// `x = X/10^(decades-1), …, X/10, X`.
pub fn density(a: u64, b: u64, c: u64, x: u64, decades: u32, max_terms: u64) -> Result<Vec<DensityPoint>, ClassifyError> {
    if decades == 0 || x == 0 {
        return Err(ClassifyError::PreconditionFail("need X >= 1 and at least one decade".into()));
    }
    if x / 24 + 1 > max_terms {
        return Err(ClassifyError::ResourceLimit(format!("X = {x} needs more than {max_terms} terms")));
    }
    let f = expand_f(a, b, c, x as i64);
    let nonzero: Vec<u64> = f.terms().filter(|&(e, _)| e >= 0).map(|(e, _)| e as u64).collect();
    let mut out = Vec::new();
    for d in (0..decades).rev() {
        let bound = x / 10u64.pow(d);
        if bound == 0 {
            continue;
        }
        let count = nonzero.iter().take_while(|&&e| e < bound).count() as u64;
        out.push(DensityPoint { bound, nonzero: count, fraction: count as f64 / bound as f64 });
    }
    Ok(out)
}
