//! Truncated power series in `q` with exact coefficients.
//!
//! A [`QSeries`] knows every coefficient of `q^e` for `e < trunc`; stored
//! terms are nonzero. Exponents are signed so that eta-quotients with a
//! negative leading power can be represented, but every kernel here is tuned
//! for the power-series case.

mod eta;
mod io;

pub use eta::{
    euler_product, euler_product_direct, eta_product, expand_f, f_coefficients, jacobi_cube,
    triple_r,
};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("constant term is not a unit of the coefficient ring")]
    NonUnitConstantTerm,
    #[error("series has negative exponents; not invertible as a power series")]
    NegativeValuation,
    #[error("negative power of a series without a unit constant term")]
    NegativePower,
    #[error("series cache line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coefficient ring of a [`QSeries`].
pub trait Coeff: Clone + fmt::Debug + PartialEq + Zero + One + Neg<Output = Self> + Send + Sync {
    fn mul_ref(&self, other: &Self) -> Self;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn from_i64(v: i64) -> Self;
    /// Multiplicative inverse when `self` is a unit.
    fn unit_inverse(&self) -> Option<Self>;
    /// Division by an integer that is known to divide `self` exactly.
    fn div_exact(&self, n: i64) -> Self;
}

impl Coeff for BigInt {
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn unit_inverse(&self) -> Option<Self> {
        if self.abs().is_one() {
            Some(self.clone())
        } else {
            None
        }
    }
    fn div_exact(&self, n: i64) -> Self {
        let n = BigInt::from(n);
        debug_assert!((self % &n).is_zero(), "{self} is not divisible by {n}");
        self / n
    }
}

impl Coeff for BigRational {
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn unit_inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn div_exact(&self, n: i64) -> Self {
        self / BigRational::from_integer(BigInt::from(n))
    }
}

/// `Σ_{e < trunc} a_e q^e` with exact coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct QSeries<C: Coeff = BigInt> {
    coeffs: BTreeMap<i64, C>,
    trunc: i64,
}

/// Products whose operands are both at least this full use the dense kernel.
const DENSE_FILL: f64 = 0.25;

impl<C: Coeff> QSeries<C> {
    pub fn zero(trunc: i64) -> Self {
        QSeries { coeffs: BTreeMap::new(), trunc }
    }

    pub fn one(trunc: i64) -> Self {
        Self::monomial(0, C::one(), trunc)
    }

    pub fn monomial(exp: i64, coeff: C, trunc: i64) -> Self {
        Self::from_terms([(exp, coeff)], trunc)
    }

    /// Builds a series from `(exponent, coefficient)` pairs, summing repeated
    /// exponents and dropping zeros and anything at or past `trunc`.
    pub fn from_terms<I: IntoIterator<Item = (i64, C)>>(terms: I, trunc: i64) -> Self {
        let mut coeffs: BTreeMap<i64, C> = BTreeMap::new();
        for (e, c) in terms {
            if e >= trunc {
                continue;
            }
            coeffs.entry(e).or_insert_with(C::zero).add_assign_ref(&c);
        }
        coeffs.retain(|_, c| !c.is_zero());
        QSeries { coeffs, trunc }
    }

    /// Series whose coefficient of `q^(offset + i)` is `dense[i]`.
    pub fn from_dense(offset: i64, dense: Vec<C>, trunc: i64) -> Self {
        let coeffs = dense
            .into_iter()
            .enumerate()
            .map(|(i, c)| (offset + i as i64, c))
            .filter(|(e, c)| *e < trunc && !c.is_zero())
            .collect();
        QSeries { coeffs, trunc }
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    /// Coefficient of `q^exp`.
    ///
    /// Panics if `exp` is at or past the truncation bound, where the
    /// coefficient is unknown.
    pub fn coeff(&self, exp: i64) -> C {
        assert!(exp < self.trunc, "coefficient of q^{exp} is unknown (trunc {})", self.trunc);
        self.coeffs.get(&exp).cloned().unwrap_or_else(C::zero)
    }

    pub fn get(&self, exp: i64) -> Option<&C> {
        self.coeffs.get(&exp)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &C)> + '_ {
        self.coeffs.iter().map(|(&e, c)| (e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    /// Coefficients of `q^from, …, q^(trunc-1)`.
    pub fn to_dense(&self, from: i64) -> Vec<C> {
        let len = (self.trunc - from).max(0) as usize;
        let mut out = vec![C::zero(); len];
        for (&e, c) in self.coeffs.range(from..) {
            out[(e - from) as usize] = c.clone();
        }
        out
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> QSeries<D> {
        QSeries::from_terms(self.terms().map(|(e, c)| (e, f(c))), self.trunc)
    }

    pub fn truncate(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        QSeries { coeffs: self.coeffs.range(..trunc).map(|(&e, c)| (e, c.clone())).collect(), trunc }
    }

    /// Multiplication by `q^k`.
    pub fn shift(&self, k: i64) -> Self {
        QSeries {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e + k, c.clone())).collect(),
            trunc: self.trunc + k,
        }
    }

    /// The substitution `q -> q^k`.
    pub fn substitute(&self, k: u64) -> Self {
        assert!(k >= 1, "substitution q -> q^0 is not a series operation");
        let k = k as i64;
        QSeries {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e * k, c.clone())).collect(),
            trunc: self.trunc * k,
        }
    }

    pub fn scale(&self, factor: &C) -> Self {
        if factor.is_zero() {
            return Self::zero(self.trunc);
        }
        QSeries {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, c.mul_ref(factor))).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.truncate(trunc).coeffs;
        for (&e, c) in other.coeffs.range(..trunc) {
            out.entry(e).or_insert_with(C::zero).add_assign_ref(c);
        }
        out.retain(|_, c| !c.is_zero());
        QSeries { coeffs: out, trunc }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        QSeries {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, -c.clone())).collect(),
            trunc: self.trunc,
        }
    }

    fn fill(&self) -> f64 {
        match self.valuation() {
            None => 0.0,
            Some(v) => self.coeffs.len() as f64 / (self.trunc - v).max(1) as f64,
        }
    }

    /// Truncation of a product: the exact bound is
    /// `min(T_f + v_g, T_g + v_f)`; valuations are floored at 0 so that the
    /// power-series case is exactly `min(T_f, T_g)`.
    fn product_trunc(&self, other: &Self) -> i64 {
        let vf = self.valuation().unwrap_or(0).min(0);
        let vg = other.valuation().unwrap_or(0).min(0);
        (self.trunc + vg).min(other.trunc + vf)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let trunc = self.product_trunc(other);
        let (Some(vf), Some(vg)) = (self.valuation(), other.valuation()) else {
            return Self::zero(trunc);
        };
        let base = vf + vg;
        if base >= trunc {
            return Self::zero(trunc);
        }
        let len = (trunc - base) as usize;
        let mut acc = vec![C::zero(); len];

        if self.fill() > DENSE_FILL && other.fill() > DENSE_FILL {
            let f = self.to_dense(vf);
            let g = other.to_dense(vg);
            for (i, fi) in f.iter().enumerate().take(len) {
                if fi.is_zero() {
                    continue;
                }
                for (j, gj) in g.iter().enumerate().take(len - i) {
                    if !gj.is_zero() {
                        acc[i + j].add_assign_ref(&fi.mul_ref(gj));
                    }
                }
            }
        } else {
            // iterate the sparser operand on the outside
            let (outer, inner) =
                if self.num_terms() <= other.num_terms() { (self, other) } else { (other, self) };
            let inner_terms: Vec<(i64, &C)> = inner.terms().collect();
            for (ef, cf) in outer.terms() {
                for &(eg, cg) in &inner_terms {
                    let e = ef + eg;
                    if e >= trunc {
                        break;
                    }
                    acc[(e - base) as usize].add_assign_ref(&cf.mul_ref(cg));
                }
            }
        }
        Self::from_dense(base, acc, trunc)
    }

    /// Multiplicative inverse of a power series with unit constant term.
    pub fn inv(&self) -> Result<Self, SeriesError> {
        let unit = self.constant_unit_inverse()?;
        let trunc = self.trunc;
        if trunc <= 0 {
            return Ok(Self::zero(trunc));
        }
        let higher: Vec<(i64, &C)> = self.terms().filter(|&(e, _)| e > 0).collect();
        let mut h: Vec<C> = Vec::with_capacity(trunc as usize);
        h.push(unit.clone());
        for n in 1..trunc {
            let mut s = C::zero();
            for &(k, fk) in &higher {
                if k > n {
                    break;
                }
                s.add_assign_ref(&fk.mul_ref(&h[(n - k) as usize]));
            }
            h.push(-s.mul_ref(&unit));
        }
        Ok(Self::from_dense(0, h, trunc))
    }

    fn constant_unit_inverse(&self) -> Result<C, SeriesError> {
        if self.valuation().is_some_and(|v| v < 0) {
            return Err(SeriesError::NegativeValuation);
        }
        if self.trunc <= 0 {
            return Ok(C::one());
        }
        self.coeff(0).unit_inverse().ok_or(SeriesError::NonUnitConstantTerm)
    }

    /// `self^e`. Series with a unit constant term use the J. C. P. Miller
    /// recurrence `n f_0 h_n = Σ_k ((e+1)k - n) f_k h_{n-k}`, which costs one
    /// pass over the nonzero terms per output coefficient; anything else
    /// falls back to binary powering.
    pub fn pow(&self, e: i64) -> Result<Self, SeriesError> {
        if e == 0 {
            return Ok(Self::one(self.trunc));
        }
        match self.constant_unit_inverse() {
            Ok(unit) => Ok(self.pow_miller(e, &unit)),
            Err(err) => {
                if e < 0 {
                    return Err(err);
                }
                let mut result = Self::one(self.trunc);
                let mut base = self.clone();
                let mut k = e;
                while k > 0 {
                    if k & 1 == 1 {
                        result = result.mul(&base);
                    }
                    k >>= 1;
                    if k > 0 {
                        base = base.mul(&base);
                    }
                }
                Ok(result)
            }
        }
    }

    fn pow_miller(&self, e: i64, unit: &C) -> Self {
        let trunc = self.trunc;
        if trunc <= 0 {
            return Self::zero(trunc);
        }
        let f0 = self.coeff(0);
        let mut h0 = C::one();
        let base = if e >= 0 { f0 } else { unit.clone() };
        for _ in 0..e.unsigned_abs() {
            h0 = h0.mul_ref(&base);
        }
        let higher: Vec<(i64, &C)> = self.terms().filter(|&(k, _)| k > 0).collect();
        let mut h: Vec<C> = Vec::with_capacity(trunc as usize);
        h.push(h0);
        for n in 1..trunc {
            let mut s = C::zero();
            for &(k, fk) in &higher {
                if k > n {
                    break;
                }
                let hk = &h[(n - k) as usize];
                if hk.is_zero() {
                    continue;
                }
                let weight = (e + 1) * k - n;
                if weight != 0 {
                    s.add_assign_ref(&C::from_i64(weight).mul_ref(&fk.mul_ref(hk)));
                }
            }
            h.push(s.mul_ref(unit).div_exact(n));
        }
        Self::from_dense(0, h, trunc)
    }
}

impl QSeries<BigInt> {
    pub fn to_rational(&self) -> QSeries<BigRational> {
        self.map(|c| BigRational::from_integer(c.clone()))
    }
}

impl<C: Coeff> Add for &QSeries<C> {
    type Output = QSeries<C>;
    fn add(self, rhs: Self) -> QSeries<C> {
        QSeries::add(self, rhs)
    }
}

impl<C: Coeff> Sub for &QSeries<C> {
    type Output = QSeries<C>;
    fn sub(self, rhs: Self) -> QSeries<C> {
        QSeries::sub(self, rhs)
    }
}

impl<C: Coeff> Mul for &QSeries<C> {
    type Output = QSeries<C>;
    fn mul(self, rhs: Self) -> QSeries<C> {
        QSeries::mul(self, rhs)
    }
}

impl<C: Coeff> Neg for &QSeries<C> {
    type Output = QSeries<C>;
    fn neg(self) -> QSeries<C> {
        QSeries::neg(self)
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for QSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (e, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*q")?,
                _ => write!(f, "({c})*q^{e}")?,
            }
        }
        if self.is_zero() {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.trunc)
    }
}
