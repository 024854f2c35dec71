use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LmiError;

/// Upper curvature bound of a function class. `Unbounded` stands for a
/// nonsmooth function, for which `1/L` is taken to be zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lipschitz {
    Finite(f64),
    Unbounded,
}

impl Lipschitz {
    /// `1/L`, zero when unbounded.
    pub fn reciprocal(self) -> f64 {
        match self {
            Lipschitz::Finite(l) => 1.0 / l,
            Lipschitz::Unbounded => 0.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Lipschitz::Finite(l) => Some(l),
            Lipschitz::Unbounded => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Lipschitz::Finite(_))
    }
}

impl fmt::Display for Lipschitz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lipschitz::Finite(l) => write!(f, "{l}"),
            Lipschitz::Unbounded => f.write_str("inf"),
        }
    }
}

// JSON encodes the unbounded case as the string "inf".
impl Serialize for Lipschitz {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Lipschitz::Finite(l) => s.serialize_f64(*l),
            Lipschitz::Unbounded => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Lipschitz {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_infinite() && v > 0.0 => Ok(Lipschitz::Unbounded),
            Raw::Num(v) => Ok(Lipschitz::Finite(v)),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "Infinity" | "infinity") => {
                Ok(Lipschitz::Unbounded)
            }
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

/// The class `F(m, L)`: convex functions that are `m`-strongly convex with
/// `L`-Lipschitz gradient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityClass {
    m: f64,
    #[serde(rename = "L")]
    l: Lipschitz,
}

impl RegularityClass {
    pub fn new(m: f64, l: Lipschitz) -> Result<Self, LmiError> {
        if !m.is_finite() || m < 0.0 {
            return Err(LmiError::InvalidClass(format!(
                "m must be finite and >= 0, got {m}"
            )));
        }
        if let Lipschitz::Finite(lv) = l {
            if !lv.is_finite() || lv <= 0.0 {
                return Err(LmiError::InvalidClass(format!("L must be > 0, got {lv}")));
            }
            if m > lv {
                return Err(LmiError::InvalidClass(format!("m = {m} exceeds L = {lv}")));
            }
        }
        Ok(Self { m, l })
    }

    pub fn smooth(m: f64, l: f64) -> Result<Self, LmiError> {
        Self::new(m, Lipschitz::Finite(l))
    }

    pub fn nonsmooth(m: f64) -> Result<Self, LmiError> {
        Self::new(m, Lipschitz::Unbounded)
    }

    /// `F(0, inf)`: merely convex.
    pub fn convex() -> Self {
        Self {
            m: 0.0,
            l: Lipschitz::Unbounded,
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.l
    }

    pub fn is_smooth(&self) -> bool {
        self.l.is_finite()
    }

    pub fn inv_l(&self) -> f64 {
        self.l.reciprocal()
    }
}

impl<'de> Deserialize<'de> for RegularityClass {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(default)]
            m: f64,
            #[serde(rename = "L", alias = "l", default = "unbounded")]
            l: Lipschitz,
        }
        fn unbounded() -> Lipschitz {
            Lipschitz::Unbounded
        }
        let raw = Raw::deserialize(d)?;
        RegularityClass::new(raw.m, raw.l).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for RegularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({}, {})", self.m, self.l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_parameters() {
        assert!(RegularityClass::smooth(-1.0, 2.0).is_err());
        assert!(RegularityClass::smooth(0.0, 0.0).is_err());
        assert!(RegularityClass::smooth(3.0, 2.0).is_err());
        assert!(RegularityClass::smooth(f64::NAN, 2.0).is_err());
        assert!(RegularityClass::nonsmooth(5.0).is_ok());
        assert!(RegularityClass::smooth(2.0, 2.0).is_ok());
    }

    #[test]
    fn json_uses_inf_string() {
        let c = RegularityClass::nonsmooth(1.0).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"m":1.0,"L":"inf"}"#);
        let back: RegularityClass = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let d: RegularityClass = serde_json::from_str(r#"{"L": 3}"#).unwrap();
        assert_eq!(d, RegularityClass::smooth(0.0, 3.0).unwrap());
        let e: RegularityClass = serde_json::from_str(r#"{"m": 2}"#).unwrap();
        assert_eq!(e, RegularityClass::nonsmooth(2.0).unwrap());
        assert!(serde_json::from_str::<RegularityClass>(r#"{"m": 4, "L": 1}"#).is_err());
    }

    #[test]
    fn reciprocal_convention() {
        assert_eq!(Lipschitz::Unbounded.reciprocal(), 0.0);
        assert_eq!(Lipschitz::Finite(4.0).reciprocal(), 0.25);
    }
}
