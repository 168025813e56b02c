//! Eta products: the Euler product, its cube, and the specializations
//! `F_{a,b,c}` of Han's product.

use num_bigint::BigInt;
use num_traits::Zero;

use super::QSeries;

/// `∏_{n>=1} (1 - q^(step·n))` truncated at `trunc`, from the pentagonal
/// number theorem. Debug builds recompute the literal product and compare.
pub fn euler_product(trunc: i64, step: u64) -> QSeries {
    assert!(step >= 1, "euler_product step must be positive");
    let step = step as i64;
    let mut terms = Vec::new();
    let mut m: i64 = 0;
    loop {
        // m and -m - 1 interleave exponents in increasing order
        let mut any = false;
        for k in [m, -m - 1] {
            let e = step * (3 * k * k + k) / 2;
            if e < trunc {
                any = true;
                let sign = if k.rem_euclid(2) == 0 { 1 } else { -1 };
                terms.push((e, BigInt::from(sign)));
            }
        }
        if !any {
            break;
        }
        m += 1;
    }
    let series = QSeries::from_terms(terms, trunc);
    if cfg!(debug_assertions) {
        assert_eq!(
            series,
            euler_product_direct(trunc, step as u64),
            "pentagonal and direct Euler products disagree (trunc {trunc}, step {step})"
        );
    }
    series
}

/// The Euler product by multiplying out `(1 - q^(step·n))` factor by factor.
pub fn euler_product_direct(trunc: i64, step: u64) -> QSeries {
    if trunc <= 0 {
        return QSeries::zero(trunc);
    }
    let len = trunc as usize;
    let step = step as usize;
    let mut c = vec![BigInt::zero(); len];
    c[0] = BigInt::from(1);
    let mut d = step;
    while d < len {
        for k in (d..len).rev() {
            let (lo, hi) = c.split_at_mut(k);
            if !lo[k - d].is_zero() {
                hi[0] -= &lo[k - d];
            }
        }
        d += step;
    }
    QSeries::from_dense(0, c, trunc)
}

/// `Σ_{m>=0} (-1)^m (2m+1) q^(m(m+1)/2)`, Jacobi's sparse form of the cube of
/// the Euler product.
pub fn jacobi_cube(trunc: i64) -> QSeries {
    let terms = (0i64..)
        .map(|m| (m * (m + 1) / 2, m))
        .take_while(|&(e, _)| e < trunc)
        .map(|(e, m)| {
            let sign = if m % 2 == 0 { 1 } else { -1 };
            (e, BigInt::from(sign * (2 * m + 1)))
        });
    QSeries::from_terms(terms, trunc)
}

/// `∏_δ ∏_n (1 - q^(δn))^(r_δ)` for `(δ, r_δ)` pairs; the `q^(Σδr/24)`
/// prefactor of the corresponding eta-quotient is not included.
pub fn eta_product(factors: &[(u64, i64)], trunc: i64) -> QSeries {
    let mut out = QSeries::one(trunc);
    for &(delta, exponent) in factors {
        if exponent == 0 {
            continue;
        }
        let power = euler_product(trunc, delta)
            .pow(exponent)
            .expect("Euler products have constant term 1");
        out = &out * &power;
    }
    out
}

/// `r = abc + a² - a²c - 1`, the exponent of the leading `q` in `F_{a,b,c}`.
pub fn triple_r(a: u64, b: u64, c: u64) -> i64 {
    let (a, b, c) = (a as i64, b as i64, c as i64);
    a * b * c + a * a - a * a * c - 1
}

/// The normalized expansion `Σ_m A_{a,b,c}(m) q^m` of
/// `∏ (1-q^(an))^a (1-q^(acn))^(b-a) / (1-q^n)`, for `m < terms`.
pub fn f_coefficients(a: u64, b: u64, c: u64, terms: i64) -> QSeries {
    assert!(a >= 1 && b >= 1 && c >= 1, "a, b, c must be positive");
    eta_product(&[(a, a as i64), (a * c, b as i64 - a as i64), (1, -1)], terms)
}

/// `F_{a,b,c} = η(24az)^a η(24acz)^(b-a) / η(24z) = Σ A(m) q^(24m + r)`,
/// truncated at `trunc`.
pub fn expand_f(a: u64, b: u64, c: u64, trunc: i64) -> QSeries {
    let r = triple_r(a, b, c);
    let terms = if trunc > r { (trunc - r + 23) / 24 } else { 0 };
    f_coefficients(a, b, c, terms).substitute(24).shift(r).truncate(trunc)
}
