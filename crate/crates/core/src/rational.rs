// SPDX-License-Identifier: Apache-2.0

//! Exact rational numbers and their `p/q` text form.

use crate::{Error, Result};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Parses `"p/q"` or an integer literal. Decimal notation is rejected so
/// that every value entering the system is exact.
pub fn parse(text: &str) -> Result<Rational> {
    let err = || Error::ParseRational(text.to_string());
    let trimmed = text.trim();
    let parse_int = |s: &str| -> Result<BigInt> {
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        s.parse::<BigInt>().map_err(|_| err())
    };
    match trimmed.split_once('/') {
        Some((numer, denom)) => {
            let numer = parse_int(numer)?;
            let denom = parse_int(denom)?;
            if denom.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(numer, denom))
        }
        None => Ok(Rational::from_integer(parse_int(trimmed)?)),
    }
}

/// Canonical `p/q` form in lowest terms; integers print without a denominator.
pub fn format(value: &Rational) -> String {
    value.to_string()
}

/// Lossy conversion, only for display and sampling keys.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn pow2(exponent: u64) -> Rational {
    let exponent = usize::try_from(exponent).expect("exponent fits in usize");
    Rational::from_integer(num::pow(BigInt::from(2u8), exponent))
}

pub fn min<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn in_unit_interval(value: &Rational) -> bool {
    !value.is_negative() && *value <= Rational::one()
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    use num::Integer;
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serde adapters that store rationals as `p/q` strings.
pub mod serde_text {
    use super::Rational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&super::format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(deserializer)?;
        super::parse(&text).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::super::Rational;
        use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
            let mut seq = serializer.serialize_seq(Some(values.len()))?;
            for value in values {
                seq.serialize_element(&super::super::format(value))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Vec<Rational>, D::Error> {
            Vec::<String>::deserialize(deserializer)?
                .iter()
                .map(|text| super::super::parse(text).map_err(D::Error::custom))
                .collect()
        }
    }
    pub mod map {
        use super::super::Rational;
        use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};
        use std::collections::BTreeMap;

        pub fn serialize<K, S>(values: &BTreeMap<K, Rational>, serializer: S) -> Result<S::Ok, S::Error>
        where
            K: Serialize,
            S: Serializer,
        {
            serializer.collect_map(values.iter().map(|(k, v)| (k, super::super::format(v))))
        }

        pub fn deserialize<'de, K, D>(deserializer: D) -> Result<BTreeMap<K, Rational>, D::Error>
        where
            K: Deserialize<'de> + Ord,
            D: Deserializer<'de>,
        {
            BTreeMap::<K, String>::deserialize(deserializer)?
                .into_iter()
                .map(|(k, text)| Ok((k, super::super::parse(&text).map_err(D::Error::custom)?)))
                .collect()
        }
    }
}
