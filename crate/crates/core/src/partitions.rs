//! Integer partitions, hook lengths and `a`-cores, with brute-force sums over
//! partitions that serve as oracles for the Nekrasov–Okounkov and Han product
//! formulas.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::qseries::{eta_product, euler_product, QSeries};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("parts must be positive and weakly decreasing, got {0:?}")]
    InvalidParts(Vec<u32>),
    #[error("enumeration needs {needed} partitions, budget is {budget}")]
    ResourceLimit {
        needed: BigInt,
        budget: u64,
        /// The generating-function side of a dual computation, when one was
        /// available.
        generating_function_value: Option<BigInt>,
    },
}

/// Hard cap on the number of partitions a brute-force sum may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_partitions: u64,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget { max_partitions: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self, PartitionError> {
        if parts.contains(&0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(PartitionError::InvalidParts(parts));
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition::default()
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    pub fn conjugate(&self) -> Partition {
        let width = self.parts.first().copied().unwrap_or(0);
        let parts = (0..width)
            .map(|j| self.parts.iter().take_while(|&&p| p > j).count() as u32)
            .collect();
        Partition { parts }
    }

    /// The multiset of hook lengths, sorted ascending. The hook of the cell
    /// in row `i`, column `j` is `λ_i - j + λ'_j - i - 1` (0-based).
    pub fn hooks(&self) -> Vec<u64> {
        let conj = self.conjugate();
        let mut out = Vec::with_capacity(self.size() as usize);
        for (i, &row) in self.parts.iter().enumerate() {
            for j in 0..row as usize {
                out.push((row as usize - j + conj.parts[j] as usize - i - 1) as u64);
            }
        }
        out.sort_unstable();
        out
    }

    /// Hooks divisible by `a`.
    pub fn hooks_mod(&self, a: u64) -> Vec<u64> {
        assert!(a >= 1);
        self.hooks().into_iter().filter(|h| h % a == 0).collect()
    }

    pub fn is_core(&self, a: u64) -> bool {
        assert!(a >= 1);
        self.hooks().iter().all(|h| h % a != 0)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        let parts: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// All partitions of `n`, in colexicographic order (ascending compositions
/// in lexicographic order, reversed into weakly decreasing parts).
pub struct PartitionsOf {
    a: Vec<u32>,
    k: usize,
    done: bool,
    emit_empty: bool,
}

impl PartitionsOf {
    pub fn new(n: u32) -> Self {
        let mut a = vec![0u32; n as usize + 1];
        if n > 0 {
            a[1] = n;
        }
        PartitionsOf { a, k: 1, done: n == 0, emit_empty: n == 0 }
    }
}

impl Iterator for PartitionsOf {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.emit_empty {
            self.emit_empty = false;
            return Some(Partition::empty());
        }
        if self.done {
            return None;
        }
        // Kelleher's ascending-composition rule
        let a = &mut self.a;
        let mut k = self.k;
        let x0 = a[k - 1] + 1;
        let mut y = a[k] - 1;
        k -= 1;
        let x = x0;
        while x <= y {
            a[k] = x;
            y -= x;
            k += 1;
        }
        a[k] = x + y;
        let mut parts: Vec<u32> = a[..=k].to_vec();
        self.k = k;
        if k == 0 {
            self.done = true;
        }
        parts.reverse();
        // a[0] is the sentinel 0 when k > 0 on the first pass
        parts.retain(|&p| p > 0);
        Some(Partition { parts })
    }
}

/// `p(m)` for `m < terms`, from the pentagonal recurrence.
pub fn partition_counts(terms: i64) -> Vec<BigInt> {
    euler_product(terms, 1)
        .inv()
        .expect("Euler product has constant term 1")
        .to_dense(0)
}

fn check_budget(sizes: std::ops::Range<u32>, budget: EnumerationBudget) -> Result<(), PartitionError> {
    let counts = partition_counts(sizes.end as i64);
    let needed: BigInt = counts[sizes.start as usize..].iter().sum();
    if needed > BigInt::from(budget.max_partitions) {
        return Err(PartitionError::ResourceLimit { needed, budget: budget.max_partitions, generating_function_value: None });
    }
    Ok(())
}

/// `∏ (1 - q^(an))^a / (1 - q^n)`, whose coefficients count `a`-cores.
pub fn core_generating_function(a: u64, terms: i64) -> QSeries {
    eta_product(&[(a, a as i64), (1, -1)], terms)
}

/// Number of `a`-cores of size `m` for each `a` in `a_values`, by walking
/// every partition of `m` once.
pub fn core_counts_by_enumeration(
    m: u32,
    a_values: &[u64],
    budget: EnumerationBudget,
) -> Result<Vec<u64>, PartitionError> {
    check_budget(m..m + 1, budget)?;
    let mut counts = vec![0u64; a_values.len()];
    for p in PartitionsOf::new(m) {
        let hooks = p.hooks();
        for (count, &a) in counts.iter_mut().zip(a_values) {
            if hooks.iter().all(|h| h % a != 0) {
                *count += 1;
            }
        }
    }
    Ok(counts)
}

/// `#{λ : |λ| = m, λ an a-core}`, counted by enumeration and read off the
/// generating function; the two must agree.
pub fn count_cores(a: u64, m: u32, budget: EnumerationBudget) -> Result<BigInt, PartitionError> {
    assert!(a >= 1);
    let from_gf = core_generating_function(a, m as i64 + 1).coeff(m as i64);
    match core_counts_by_enumeration(m, &[a], budget) {
        Ok(counts) => {
            let enumerated = BigInt::from(counts[0]);
            assert_eq!(enumerated, from_gf, "a-core count mismatch at a = {a}, m = {m}");
            Ok(enumerated)
        }
        Err(PartitionError::ResourceLimit { needed, budget, .. }) => Err(PartitionError::ResourceLimit {
            needed,
            budget,
            generating_function_value: Some(from_gf),
        }),
        Err(e) => Err(e),
    }
}

fn hook_weight(hooks: &[u64], scale: &BigRational) -> BigRational {
    let mut w = BigRational::one();
    for &h in hooks {
        let h2 = BigRational::from_integer(BigInt::from(h) * BigInt::from(h));
        w *= BigRational::one() - scale / h2;
        if w.is_zero() {
            break;
        }
    }
    w
}

/// `Σ_{|λ| < trunc} q^|λ| ∏_{h ∈ H(λ)} (1 - b/h²)`.
pub fn no_sum(b: &BigRational, trunc: i64, budget: EnumerationBudget) -> Result<QSeries<BigRational>, PartitionError> {
    let top = trunc.max(0) as u32;
    check_budget(0..top, budget)?;
    let coeffs: Vec<BigRational> = (0..top)
        .into_par_iter()
        .map(|n| {
            PartitionsOf::new(n).fold(BigRational::zero(), |acc, p| acc + hook_weight(&p.hooks(), b))
        })
        .collect();
    Ok(QSeries::from_dense(0, coeffs, trunc))
}

/// Han's sum with `y = q^(a(c-1))`: each partition contributes
/// `q^(|λ| + a(c-1)|H_a(λ)|) ∏_{h ∈ H_a(λ)} (1 - ab/h²)`.
pub fn han_sum(
    a: u64,
    b: &BigRational,
    c: u64,
    trunc: i64,
    budget: EnumerationBudget,
) -> Result<QSeries<BigRational>, PartitionError> {
    assert!(a >= 1 && c >= 1);
    let top = trunc.max(0) as u32;
    check_budget(0..top, budget)?;
    let scale = b * BigRational::from_integer(BigInt::from(a));
    let shift = (a * (c - 1)) as i64;
    // one stratum per size, merged in size order
    let strata: Vec<Vec<(i64, BigRational)>> = (0..top)
        .into_par_iter()
        .map(|n| {
            let mut terms = Vec::new();
            for p in PartitionsOf::new(n) {
                let divisible = p.hooks_mod(a);
                let e = n as i64 + shift * divisible.len() as i64;
                if e < trunc {
                    terms.push((e, hook_weight(&divisible, &scale)));
                }
            }
            terms
        })
        .collect();
    Ok(QSeries::from_terms(strata.into_iter().flatten(), trunc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda_prime() -> Partition {
        Partition::new(vec![6, 4, 1]).unwrap()
    }

    /// Hooks by scanning the diagram cell by cell: arm to the right, leg below.
    fn hooks_by_scan(p: &Partition) -> Vec<u64> {
        let rows = p.parts();
        let mut out = Vec::new();
        for (i, &row) in rows.iter().enumerate() {
            for j in 0..row {
                let arm = row - j - 1;
                let leg = rows[i + 1..].iter().filter(|&&r| r > j).count() as u32;
                out.push((arm + leg + 1) as u64);
            }
        }
        out.sort_unstable();
        out
    }

    fn count_partitions(n: u32, max_part: u32) -> u64 {
        if n == 0 {
            return 1;
        }
        (1..=max_part.min(n)).map(|k| count_partitions(n - k, k)).sum()
    }

    #[test]
    fn figure_partition_hooks() {
        let p = lambda_prime();
        assert_eq!(p.hooks(), vec![1, 1, 1, 2, 2, 3, 4, 5, 5, 6, 8]);
        assert_eq!(p.hooks_mod(2), vec![2, 2, 4, 6, 8]);
        assert!(p.hooks_mod(7).is_empty());
        assert_eq!(p.hooks_mod(1), p.hooks());
        assert!(p.is_core(7));
        assert!(!p.is_core(8));
        assert!(!p.is_core(2));
        for a in 9..40 {
            assert!(p.is_core(a));
        }
    }

    #[test]
    fn degenerate_shapes() {
        assert!(Partition::empty().hooks().is_empty());
        for a in 1..5 {
            assert!(Partition::empty().is_core(a));
        }
        let row = Partition::new(vec![7]).unwrap();
        assert_eq!(row.hooks(), (1..=7).collect::<Vec<_>>());
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0]).is_err());
        assert_eq!(lambda_prime().to_string(), "6+4+1");
    }

    #[test]
    fn enumeration_counts_and_order() {
        let four: Vec<Vec<u32>> = PartitionsOf::new(4).map(|p| p.parts().to_vec()).collect();
        assert_eq!(four, vec![vec![1, 1, 1, 1], vec![2, 1, 1], vec![3, 1], vec![2, 2], vec![4]]);
        assert_eq!(PartitionsOf::new(0).count(), 1);
        for n in 0..30 {
            assert_eq!(PartitionsOf::new(n).count() as u64, count_partitions(n, n), "p({n})");
        }
        let p = partition_counts(40);
        for n in 0..40u32 {
            assert_eq!(p[n as usize], BigInt::from(count_partitions(n, n)));
        }
    }

    #[test]
    fn hook_invariants_exhaustive() {
        for n in 0..=25 {
            for p in PartitionsOf::new(n) {
                let hooks = p.hooks();
                assert_eq!(hooks.len() as u64, p.size());
                assert_eq!(hooks, hooks_by_scan(&p));
                if n <= 20 {
                    assert_eq!(hooks, p.conjugate().hooks());
                }
            }
        }
    }

    #[test]
    fn two_cores_are_staircases() {
        for m in 0..40u32 {
            let triangular = (0..10).any(|k| k * (k + 1) / 2 == m);
            let count = count_cores(2, m, EnumerationBudget::default()).unwrap();
            assert_eq!(count, BigInt::from(u8::from(triangular)), "m = {m}");
        }
    }

    #[test]
    fn core_count_examples() {
        assert!(count_cores(7, 11, EnumerationBudget::default()).unwrap() >= BigInt::one());
        assert!(PartitionsOf::new(11).any(|p| p == lambda_prime() && p.is_core(7)));
        for m in 1..20 {
            assert!(count_cores(1, m, EnumerationBudget::default()).unwrap().is_zero());
        }
        for a in 2..=10u64 {
            for m in 0..=40 {
                count_cores(a, m, EnumerationBudget::default()).unwrap();
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let tiny = EnumerationBudget { max_partitions: 100 };
        match count_cores(4, 30, tiny) {
            Err(PartitionError::ResourceLimit { generating_function_value: Some(v), needed, .. }) => {
                assert_eq!(v, core_generating_function(4, 31).coeff(30));
                assert_eq!(needed, BigInt::from(5604));
            }
            other => panic!("expected ResourceLimit, got {other:?}"),
        }
        assert!(no_sum(&BigRational::one(), 40, tiny).is_err());
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn nekrasov_okounkov_small() {
        let budget = EnumerationBudget::default();
        assert_eq!(no_sum(&rat(1), 20, budget).unwrap(), QSeries::one(20));
        let p = euler_product(20, 1).inv().unwrap().to_rational();
        assert_eq!(no_sum(&rat(0), 20, budget).unwrap(), p);
        for b in -1..=5 {
            let product = euler_product(20, 1).pow(b - 1).unwrap().to_rational();
            assert_eq!(no_sum(&rat(b), 20, budget).unwrap(), product, "b = {b}");
        }
        // non-integer b still matches the binomial-type expansion at low order:
        // coefficient of q is 1 - b, i.e. -(b - 1)
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(no_sum(&half, 3, budget).unwrap().coeff(1), half);
    }

    #[test]
    fn han_reduces_to_nekrasov_okounkov() {
        let budget = EnumerationBudget::default();
        for b in [-2, 0, 3, 7] {
            assert_eq!(han_sum(1, &rat(b), 1, 16, budget).unwrap(), no_sum(&rat(b), 16, budget).unwrap());
        }
    }

    #[test]
    fn han_at_b_equal_a_counts_cores() {
        let budget = EnumerationBudget::default();
        for a in 1..=3u64 {
            for c in 1..=3u64 {
                let s = han_sum(a, &rat(a as i64), c, 18, budget).unwrap();
                assert_eq!(s, core_generating_function(a, 18).to_rational());
            }
        }
    }

    #[test]
    fn han_against_product_side() {
        let budget = EnumerationBudget::default();
        let s = han_sum(2, &rat(5), 2, 30, budget).unwrap();
        let product = eta_product(&[(2, 2), (4, 3), (1, -1)], 30).to_rational();
        assert_eq!(s, product);
    }
}
