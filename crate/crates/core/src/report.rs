//! Machine-readable check reports.

use serde::{Serialize, Serializer};
use serde_json::{json, Value};

use crate::codes::{Code, Family, Restriction};
use crate::exact::{fmt_q, Q};

/// Slack of an asserted inequality, or a note when nothing was asserted.
#[derive(Clone, Debug, PartialEq)]
pub enum Margin {
    Exact(Q),
    Float(f64),
    Note(String),
}

impl Serialize for Margin {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Margin::Exact(q) => s.serialize_str(&fmt_q(q)),
            Margin::Float(x) if x.is_finite() => s.serialize_f64(*x),
            Margin::Float(x) => s.serialize_str(&x.to_string()),
            Margin::Note(n) => s.serialize_str(n),
        }
    }
}

/// `{"check", "params", "pass", "margin", "witness"}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub params: Value,
    pub pass: bool,
    pub margin: Margin,
    pub witness: Option<Value>,
}

pub const HYPOTHESES_UNMET: &str = "hypotheses unmet";

impl Report {
    pub fn new(check: &str, params: Value, pass: bool, margin: Margin) -> Self {
        Report {
            check: check.to_string(),
            params,
            pass,
            margin,
            witness: None,
        }
    }

    /// A report that asserts nothing because the checked statement does not apply.
    pub fn unmet(check: &str, params: Value, reason: impl Into<String>) -> Self {
        Report {
            check: check.to_string(),
            params,
            pass: true,
            margin: Margin::Note(HYPOTHESES_UNMET.to_string()),
            witness: Some(json!({ "reason": reason.into() })),
        }
    }

    pub fn with_witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn hypotheses_met(&self) -> bool {
        self.margin != Margin::Note(HYPOTHESES_UNMET.to_string())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// 1-based JSON rendering of a code.
pub fn code_json(c: &Code) -> Value {
    json!(c.symbols())
}

/// `{"Z": [...], "x": [...]}` with 1-based coordinates.
pub fn restriction_json(r: &Restriction) -> Value {
    json!({ "Z": r.coords().iter().map(|c| c + 1).collect::<Vec<_>>(), "x": r.values() })
}

pub fn codes_json(f: &Family) -> Value {
    Value::Array(f.iter().map(|c| code_json(&c)).collect())
}

pub fn q_json(x: &Q) -> Value {
    Value::String(fmt_q(x))
}
