use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;

/// Where a best constant is attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Centre and radius of a ball.
    Ball {
        x: usize,
        r: f64,
    },
    /// Centre of the ball of radius `2^-k`.
    Level {
        x: usize,
        k: i32,
    },
    Pair {
        x: usize,
        y: usize,
    },
    /// Position in the tested corpus.
    Instance {
        index: usize,
        id: String,
    },
}

/// Outcome of one empirical inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub inequality: String,
    pub space: String,
    pub function: String,
    pub params: BTreeMap<String, f64>,
    /// Smallest `C` for which the inequality holds on every tested ball,
    /// pair or instance; `inf` when some right-hand side vanishes under a
    /// positive left-hand side.
    #[serde(with = "real")]
    pub best_constant: f64,
    pub witness: Option<Witness>,
    pub pass: bool,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(inequality: impl Into<String>, space: impl Into<String>, function: impl Into<String>) -> Self {
        Self {
            inequality: inequality.into(),
            space: space.into(),
            function: function.into(),
            params: BTreeMap::new(),
            best_constant: 0.0,
            witness: None,
            pass: true,
            notes: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Records a metric; non-finite values go to the notes instead, since
    /// JSON has no representation for them.
    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        } else {
            self.notes.push(format!("{name} = {value}"));
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn to_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

/// Running maximum of ratios with the first point attaining it.
#[derive(Clone, Debug)]
pub(crate) struct Supremum<W> {
    pub value: f64,
    pub witness: Option<W>,
}

impl<W> Supremum<W> {
    pub fn new() -> Self {
        Self {
            value: 0.0,
            witness: None,
        }
    }

    pub fn offer(&mut self, ratio: f64, witness: W) {
        if ratio > self.value {
            self.value = ratio;
            self.witness = Some(witness);
        }
    }

    /// Merge in index order: earlier candidates win ties.
    pub fn merge(mut self, other: Self) -> Self {
        if other.value > self.value {
            self.value = other.value;
            self.witness = other.witness;
        }
        self
    }
}

/// `lhs / rhs` with the conventions of the checks: `0/0` is skipped and
/// `positive/0` is infinite.
pub(crate) fn quotient(lhs: f64, rhs: f64) -> Option<f64> {
    if lhs <= 0.0 {
        None
    } else if rhs <= 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(lhs / rhs)
    }
}

/// Serialises non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub(crate) mod real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}
