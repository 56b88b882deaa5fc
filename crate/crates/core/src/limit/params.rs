use crate::error::{domain, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Which of the limit processes a parameter pair selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `a + c = 0`: Brownian motion with drift.
    Drift,
    /// Both finite with `a + c > 0`.
    General,
    /// `a` finite, `c = inf`.
    AFiniteCInf,
    /// `a = inf`, `c` finite.
    AInfCFinite,
    /// Brownian excursion.
    BothInf,
}

/// Boundary parameters `(a, c)` of the limit, each a real or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    #[serde(with = "extreal")]
    pub a: f64,
    #[serde(with = "extreal")]
    pub c: f64,
}

impl LimitParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if a.is_nan() || c.is_nan() || a == f64::NEG_INFINITY || c == f64::NEG_INFINITY {
            return domain(format!("limit parameters must be real or +inf, got ({a}, {c})"));
        }
        if a.is_finite() && c.is_finite() && a + c < 0.0 {
            return domain(format!("a + c must be nonnegative, got {}", a + c));
        }
        Ok(LimitParams { a, c })
    }

    pub fn branch(&self) -> Branch {
        match (self.a.is_finite(), self.c.is_finite()) {
            (true, true) if self.a + self.c == 0.0 => Branch::Drift,
            (true, true) => Branch::General,
            (true, false) => Branch::AFiniteCInf,
            (false, true) => Branch::AInfCFinite,
            (false, false) => Branch::BothInf,
        }
    }

    /// The pair with roles exchanged, as in the time reversal of the limit.
    pub fn swapped(&self) -> Self {
        LimitParams { a: self.c, c: self.a }
    }
}

/// Serde helpers for extended reals: finite numbers as JSON numbers, `+inf`
/// as the string `"inf"`.
pub mod extreal {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            Err(serde::ser::Error::custom("only +inf is representable"))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if matches!(s.as_str(), "inf" | "+inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {s:?}"))),
        }
    }
}
