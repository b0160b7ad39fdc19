use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Binding energy and activation energies, all exact rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(with = "rational_text")]
    pub u: Rational,
    #[serde(with = "rational_text")]
    pub delta1: Rational,
    #[serde(with = "rational_text")]
    pub delta2: Rational,
}

impl ModelParams {
    pub fn new(u: Rational, delta1: Rational, delta2: Rational) -> Result<Self> {
        let zero = Rational::from_integer(0);
        if u <= zero {
            return Err(Error::InvalidParams(format!("U must be positive, got {u}")));
        }
        if delta1 <= zero || delta2 <= zero {
            return Err(Error::InvalidParams("activation energies must be positive".into()));
        }
        if delta1 > delta2 {
            return Err(Error::InvalidParams(format!(
                "expected delta1 <= delta2, got {delta1} > {delta2}"
            )));
        }
        Ok(Self { u, delta1, delta2 })
    }

    /// Parses each value as an integer, a decimal or `p/q`.
    pub fn parse(u: &str, delta1: &str, delta2: &str) -> Result<Self> {
        Self::new(parse_rational(u)?, parse_rational(delta1)?, parse_rational(delta2)?)
    }

    /// The values used by both bundled presets: U=1, Δ1=9/10, Δ2=3/2.
    pub fn preset() -> Self {
        Self::new(
            Rational::from_integer(1),
            Rational::new(9, 10),
            Rational::new(3, 2),
        )
        .expect("preset parameters are valid")
    }

    /// Integer representation over the common denominator.
    pub fn scale(&self) -> EnergyScale {
        let denom = self
            .u
            .denom()
            .lcm(self.delta1.denom())
            .lcm(self.delta2.denom());
        let lift = |r: Rational| r.numer() * (denom / r.denom());
        EnergyScale {
            denom,
            u: lift(self.u),
            delta1: lift(self.delta1),
            delta2: lift(self.delta2),
        }
    }

    /// Δ1 + Δ2 < 4U.
    pub fn in_metastable_region(&self) -> bool {
        self.delta1 + self.delta2 < self.u * 4
    }

    /// Metastable region without the corner where both activation energies are below U.
    pub fn in_proper_region(&self) -> bool {
        self.in_metastable_region() && !(self.delta1 < self.u && self.delta2 < self.u)
    }
}

/// Energies as integers in units of `1/denom`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyScale {
    pub denom: i64,
    pub u: i64,
    pub delta1: i64,
    pub delta2: i64,
}

impl EnergyScale {
    pub fn to_f64(&self, level: i64) -> f64 {
        level as f64 / self.denom as f64
    }

    pub fn to_rational(&self, level: i64) -> Rational {
        Rational::new(level, self.denom)
    }

    /// Level of `n1·Δ1 + n2·Δ2 − bonds·U`.
    pub fn level(&self, n1: i64, n2: i64, bonds: i64) -> i64 {
        n1 * self.delta1 + n2 * self.delta2 - bonds * self.u
    }
}

/// Parses `"3"`, `"-0.25"`, `"9/10"` or `"1.5/2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::InvalidParams(format!("cannot read {text:?} as a rational"));
    if let Some((p, q)) = text.split_once('/') {
        let p = parse_decimal(p.trim()).ok_or_else(bad)?;
        let q = parse_decimal(q.trim()).ok_or_else(bad)?;
        if *q.numer() == 0 {
            return Err(bad());
        }
        return Ok(p / q);
    }
    parse_decimal(text).ok_or_else(bad)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 15 {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    let r = Rational::new(numer, denom);
    Some(if neg { -r } else { r })
}

/// Serde adapter: rationals as `"p/q"` text; numbers and decimal strings are accepted on input.
pub mod rational_text {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use super::{parse_rational, Rational};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Float(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(Rational::from_integer(i)),
            Raw::Float(f) => parse_rational(&format!("{f}")).map_err(de::Error::custom),
            Raw::Text(t) => parse_rational(&t).map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse_rational("9/10").unwrap(), Rational::new(9, 10));
        assert_eq!(parse_rational("0.9").unwrap(), Rational::new(9, 10));
        assert_eq!(parse_rational("1.5").unwrap(), Rational::new(3, 2));
        assert_eq!(parse_rational("2").unwrap(), Rational::from_integer(2));
        assert_eq!(parse_rational("-.25").unwrap(), Rational::new(-1, 4));
        assert_eq!(parse_rational("3/0.5").unwrap(), Rational::from_integer(6));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn preset_scale() {
        let s = ModelParams::preset().scale();
        assert_eq!((s.denom, s.u, s.delta1, s.delta2), (10, 10, 9, 15));
        assert_eq!(s.level(2, 1, 2), 18 + 15 - 20);
    }

    #[test]
    fn validation() {
        assert!(ModelParams::parse("0", "1", "1").is_err());
        assert!(ModelParams::parse("1", "2", "1").is_err());
        assert!(ModelParams::parse("1", "0", "1").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let p = ModelParams::preset();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"u":"1","delta1":"9/10","delta2":"3/2"}"#);
        assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
        let q: ModelParams = serde_json::from_str(r#"{"u":1,"delta1":0.9,"delta2":"1.5"}"#).unwrap();
        assert_eq!(q, p);
    }

    #[test]
    fn regions() {
        let p = ModelParams::parse("1", "0.9", "1.5").unwrap();
        assert!(p.in_metastable_region() && p.in_proper_region());
        let p = ModelParams::parse("1", "2.5", "2.5").unwrap();
        assert!(!p.in_metastable_region());
        let p = ModelParams::parse("1", "0.5", "0.8").unwrap();
        assert!(p.in_metastable_region() && !p.in_proper_region());
    }
}
