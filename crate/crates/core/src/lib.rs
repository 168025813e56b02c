//! Exact arithmetic for the eta-quotients
//! `F_{a,b,c}(z) = η(24az)^a η(24acz)^(b-a) / η(24z)`: expansions, partition
//! identities, modular data, Hecke operators and the lacunarity
//! classification pipeline.

pub mod arith;
pub mod classify;
pub mod hecke;
pub mod modular_meta;
pub mod partitions;
pub mod qseries;

pub use modular_meta::EtaTriple;
pub use qseries::QSeries;

/// Serde adapters that write big integers and rationals as decimal strings.
pub mod serde_str {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    fn ser<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    fn de<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }

    macro_rules! string_module {
        ($name:ident, $ty:ty) => {
            pub mod $name {
                pub fn serialize<S: serde::Serializer>(v: &$ty, s: S) -> Result<S::Ok, S::Error> {
                    super::ser(v, s)
                }

                pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<$ty, D::Error> {
                    super::de(d)
                }
            }
        };
    }

    string_module!(bigint, num_bigint::BigInt);
    string_module!(bigrational, num_rational::BigRational);
    string_module!(rational64, num_rational::Rational64);

    pub mod bigrational_vec {
        use num_rational::BigRational;
        use serde::{de::Error, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(|x| x.to_string()))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
            Vec::<String>::deserialize(d)?
                .into_iter()
                .map(|s| s.parse().map_err(D::Error::custom))
                .collect()
        }
    }
}
