//! JSON report assembly. Every float passes through [`num`], which rounds to
//! 15 significant digits before serialization.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA: u32 = 1;

pub fn sig15(x: f64) -> f64 {
    if x.is_finite() && x != 0.0 {
        format!("{x:.14e}").parse().expect("formatted float parses")
    } else {
        x
    }
}

/// Non-finite values become `null`.
pub fn num(x: f64) -> Value {
    json!(sig15(x))
}

pub fn cplx(z: Complex64) -> Value {
    json!({ "re": num(z.re), "im": num(z.im) })
}

pub fn div_index(ac: (i8, u64)) -> Value {
    json!([ac.0, ac.1])
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
    pub threshold: Value,
}

impl Check {
    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Check { name: name.into(), pass, value: json!(pass), threshold: json!(true) }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), pass: value < threshold, value: num(value), threshold: num(threshold) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub form: Value,
    pub inputs: Value,
    pub config: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub assumptions: Vec<String>,
    pub pass: bool,
    pub wall_time_s: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
