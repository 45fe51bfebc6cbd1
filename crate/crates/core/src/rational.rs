//! Text forms for exact rationals.

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::abc::Rational;

/// `"3/8"`, `"1"`, `"0"`.
pub fn ratio_text(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_ratio_text(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse().ok()?, d.trim().parse().ok()?),
        None => (s.parse().ok()?, 1),
    };
    (d != 0).then(|| Rational::new(n, d))
}

/// Decimal rendering of an exact rational. Terminating expansions are exact
/// (`1/4` → `"0.25"`); others are rounded half-up to `max_places` digits
/// after the point with trailing zeros trimmed (`1/3` → `"0.333333333333"`).
pub fn decimal_text(r: &Rational, max_places: usize) -> String {
    let negative = r.is_negative();
    let r = r.abs();
    let (numer, denom) = (*r.numer() as i128, *r.denom() as i128);
    let (mut int_part, mut rem) = numer.div_rem(&denom);
    let mut digits: Vec<u8> = Vec::new();
    while !rem.is_zero() && digits.len() < max_places {
        rem *= 10;
        let (d, next) = rem.div_rem(&denom);
        digits.push(d as u8);
        rem = next;
    }
    if !rem.is_zero() && rem * 2 >= denom {
        // Round half up, carrying through the fractional digits.
        let mut i = digits.len();
        loop {
            if i == 0 {
                int_part += 1;
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    while digits.last() == Some(&0) {
        digits.pop();
    }
    let mut out = String::new();
    if negative && (int_part != 0 || !digits.is_empty()) {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if !digits.is_empty() {
        out.push('.');
        out.extend(digits.iter().map(|d| char::from(b'0' + d)));
    }
    out
}

/// `#[serde(with = "crate::rational::serde_text")]`
pub mod serde_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::{parse_ratio_text, ratio_text};
    use crate::abc::Rational;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_text(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_ratio_text(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}")))
    }
}

/// Same as [`serde_text`] for optional values.
pub mod serde_text_opt {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use super::{parse_ratio_text, ratio_text};
    use crate::abc::Rational;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&ratio_text(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_ratio_text(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        let r = |n, d| Rational::new(n, d);
        assert_eq!(decimal_text(&r(1, 2), 12), "0.5");
        assert_eq!(decimal_text(&r(1, 4), 12), "0.25");
        assert_eq!(decimal_text(&r(1, 5), 12), "0.2");
        assert_eq!(decimal_text(&r(1, 1), 12), "1");
        assert_eq!(decimal_text(&r(0, 1), 12), "0");
        assert_eq!(decimal_text(&r(1, 3), 6), "0.333333");
        assert_eq!(decimal_text(&r(2, 3), 6), "0.666667");
        assert_eq!(decimal_text(&r(999_999, 1_000_000), 3), "1");
        assert_eq!(decimal_text(&r(-3, 8), 12), "-0.375");
    }

    #[test]
    fn ratio_texts() {
        assert_eq!(ratio_text(&Rational::new(6, 8)), "3/4");
        assert_eq!(ratio_text(&Rational::new(4, 2)), "2");
        assert_eq!(parse_ratio_text("3/8"), Some(Rational::new(3, 8)));
        assert_eq!(parse_ratio_text("2"), Some(Rational::from_integer(2)));
        assert_eq!(parse_ratio_text("1/0"), None);
        assert_eq!(parse_ratio_text("x"), None);
    }
}
