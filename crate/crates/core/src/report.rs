//! Measured constants with their achieving witnesses.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::graph::{Vertex, EPS};

/// A real that serializes `±inf` as the strings `"inf"` / `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v {
                    "inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    "nan" => Ok(Real(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() && self.0 > 0.0 {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// The configuration achieving (or violating) a reported bound.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub constant: String,
    pub value: Real,
    pub vertices: Vec<Vertex>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Running supremum with the first configuration attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Best {
    pub value: f64,
    pub vertices: Vec<Vertex>,
    pub members: Vec<usize>,
    pub note: String,
}

impl Default for Best {
    fn default() -> Self {
        Best {
            value: 0.0,
            vertices: Vec::new(),
            members: Vec::new(),
            note: "vacuous".to_string(),
        }
    }
}

impl Best {
    pub fn new(value: f64, vertices: Vec<Vertex>, members: Vec<usize>, note: impl Into<String>) -> Self {
        Best {
            value,
            vertices,
            members,
            note: note.into(),
        }
    }

    /// Replaces the current record when `value` is strictly larger.
    pub fn offer<F>(&mut self, value: f64, witness: F)
    where
        F: FnOnce() -> (Vec<Vertex>, Vec<usize>, String),
    {
        if value > self.value + EPS || (self.note == "vacuous" && self.vertices.is_empty() && value >= self.value) {
            let (vertices, members, note) = witness();
            *self = Best {
                value,
                vertices,
                members,
                note,
            };
        }
    }

    /// Order-stable merge: `other` wins only when strictly larger.
    pub fn merge(self, other: Best) -> Best {
        if other.value > self.value + EPS || (self.note == "vacuous" && other.note != "vacuous" && other.value >= self.value) {
            other
        } else {
            self
        }
    }

    pub fn fold<I: IntoIterator<Item = Best>>(items: I) -> Best {
        items.into_iter().fold(Best::default(), Best::merge)
    }

    pub fn witness(&self, constant: &str) -> Witness {
        Witness {
            constant: constant.to_string(),
            value: Real(self.value),
            vertices: self.vertices.clone(),
            members: self.members.clone(),
            note: self.note.clone(),
        }
    }
}

/// Outcome of one characterization audit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub check: String,
    pub mode: String,
    pub constants: BTreeMap<String, Real>,
    pub samples: BTreeMap<String, usize>,
    pub witnesses: Vec<Witness>,
    pub violation: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConstantsReport {
    pub fn new(check: &str, mode: impl Into<String>) -> Self {
        ConstantsReport {
            check: check.to_string(),
            mode: mode.into(),
            ..Default::default()
        }
    }

    /// Records `name` with value and witness from `best`.
    pub fn set(&mut self, name: &str, best: &Best) {
        self.constants.insert(name.to_string(), Real(best.value));
        self.witnesses.retain(|w| w.constant != name);
        self.witnesses.push(best.witness(name));
    }

    pub fn set_samples(&mut self, name: &str, count: usize) {
        self.samples.insert(name.to_string(), count);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.get(name).map(|r| r.0)
    }

    pub fn flag(&mut self, witness: Witness) {
        self.violation = true;
        self.violations.push(witness);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Every constant has a witness carrying exactly its value.
    pub fn witnesses_consistent(&self) -> bool {
        self.constants.iter().all(|(k, v)| {
            self.witnesses
                .iter()
                .any(|w| &w.constant == k && (w.value.0 == v.0 || (w.value.0 - v.0).abs() <= EPS))
        })
    }
}
