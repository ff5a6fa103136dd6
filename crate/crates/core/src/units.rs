//! Decibel helpers and unit-tagged power/attenuation values.
//!
//! Configuration files and flags carry decibel quantities as strings with an
//! explicit unit (`"10 dBm"`, `"-88dBm"`, `"3 dB"`); bare numbers are rejected.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Amplitude factor for a power ratio given in dB.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{input}`: expected a number followed by the unit `{unit}`")]
pub struct UnitError {
    input: String,
    unit: &'static str,
}

fn parse_with_unit(s: &str, unit: &'static str) -> Result<f64, UnitError> {
    let err = || UnitError { input: s.to_string(), unit };
    let t = s.trim();
    let number = t.strip_suffix(unit).ok_or_else(err)?.trim_end();
    // "dB" is a suffix of nothing else we accept, but reject "10 dBm" when "dB" is wanted.
    if number.ends_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(err());
    }
    let v: f64 = number.parse().map_err(|_| err())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err())
    }
}

macro_rules! unit_value {
    ($name:ident, $unit:literal, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
        pub struct $name(pub f64);

        impl $name {
            pub const UNIT: &'static str = $unit;

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl FromStr for $name {
            type Err = UnitError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_with_unit(s, $unit).map($name)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                struct V;
                impl<'de> de::Visitor<'de> for V {
                    type Value = $name;
                    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                        write!(f, "a string like \"3 {}\"", $unit)
                    }
                    fn visit_str<E: de::Error>(self, v: &str) -> Result<$name, E> {
                        v.parse().map_err(E::custom)
                    }
                }
                d.deserialize_str(V)
            }
        }
    };
}

unit_value!(Db, "dB", "A power ratio in dB.");
unit_value!(Dbm, "dBm", "An absolute power in dBm.");

impl Dbm {
    /// Power in milliwatts.
    pub fn milliwatts(self) -> f64 {
        db_to_linear(self.0)
    }
}
