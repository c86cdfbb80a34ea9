//! Exact rationals and their string form in reports (`"p/q"` or `"p"`).

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = Ratio<i64>;

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        Some(Ratio::new(n, d))
    } else {
        s.parse::<i64>().ok().map(Ratio::from_integer)
    }
}

/// Smallest integer `>= r`.
pub fn ceil(r: Rational) -> i64 {
    r.ceil().to_integer()
}

pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/4"), Some(Ratio::new(3, 4)));
        assert_eq!(parse(" 2 "), Some(Ratio::from_integer(2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x"), None);
        assert_eq!(Ratio::new(6, 8).to_string(), "3/4");
        assert_eq!(ceil(Ratio::new(9, 2)), 5);
        assert_eq!(ceil(Ratio::new(-1, 2)), 0);
    }
}
