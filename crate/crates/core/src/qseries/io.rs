//! Plain-text series cache: a `# T=<trunc>` header followed by one
//! `exponent<TAB>coefficient` line per stored term, in decimal.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{Coeff, QSeries, SeriesError};

impl<C: Coeff + Display> QSeries<C> {
    pub fn write_cache<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# T={}", self.trunc)?;
        for (e, c) in self.terms() {
            writeln!(w, "{e}\t{c}")?;
        }
        Ok(())
    }
}

impl<C: Coeff + FromStr> QSeries<C>
where
    C::Err: Display,
{
    pub fn read_cache<R: BufRead>(r: R) -> Result<Self, SeriesError> {
        let mut lines = r.lines().enumerate();
        let trunc = match lines.next() {
            Some((_, line)) => {
                let line = line?;
                line.strip_prefix("# T=")
                    .and_then(|t| t.trim().parse::<i64>().ok())
                    .ok_or_else(|| SeriesError::Parse { line: 1, msg: format!("bad header {line:?}") })?
            }
            None => return Err(SeriesError::Parse { line: 1, msg: "empty file".into() }),
        };
        let mut terms = Vec::new();
        let mut last = None;
        for (i, line) in lines {
            let line = line?;
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let (e, c) = line
                .split_once('\t')
                .ok_or_else(|| SeriesError::Parse { line: n, msg: "missing tab".into() })?;
            let e: i64 = e.parse().map_err(|err| SeriesError::Parse { line: n, msg: format!("{err}") })?;
            let c: C = c.parse().map_err(|err: C::Err| SeriesError::Parse { line: n, msg: err.to_string() })?;
            if e >= trunc {
                return Err(SeriesError::Parse { line: n, msg: format!("exponent {e} >= T={trunc}") });
            }
            if last.is_some_and(|l| e <= l) {
                return Err(SeriesError::Parse { line: n, msg: "exponents not increasing".into() });
            }
            if c.is_zero() {
                return Err(SeriesError::Parse { line: n, msg: "zero coefficient stored".into() });
            }
            last = Some(e);
            terms.push((e, c));
        }
        Ok(QSeries::from_terms(terms, trunc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    #[test]
    fn format_is_exact() {
        let f = QSeries::from_terms([(0, BigInt::from(1)), (5, BigInt::from(-12))], 9);
        let mut buf = Vec::new();
        f.write_cache(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "# T=9\n0\t1\n5\t-12\n");
        assert_eq!(QSeries::<BigInt>::read_cache(&buf[..]).unwrap(), f);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "T=3\n", "# T=3\n0 1\n", "# T=3\n4\t1\n", "# T=9\n2\t1\n1\t1\n", "# T=3\n0\t0\n"] {
            assert!(QSeries::<BigInt>::read_cache(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(terms in proptest::collection::vec((-5i64..60, any::<i64>(), 1i64..9), 0..20), t in 0i64..64) {
            let big = QSeries::from_terms(terms.iter().map(|&(e, c, _)| (e, BigInt::from(c) * BigInt::from(c))), t);
            let mut buf = Vec::new();
            big.write_cache(&mut buf).unwrap();
            prop_assert_eq!(QSeries::<BigInt>::read_cache(&buf[..]).unwrap(), big);

            let rat = QSeries::from_terms(terms.iter().map(|&(e, c, d)| (e, BigRational::new(c.into(), d.into()))), t);
            let mut buf = Vec::new();
            rat.write_cache(&mut buf).unwrap();
            prop_assert_eq!(QSeries::<BigRational>::read_cache(&buf[..]).unwrap(), rat);
        }
    }
}
