//! Textual formats for matrices and operators.
//!
//! An operator file is a JSON object
//! `{"block": [[series, ...], ...], "tail": [[index, series], ...]}`
//! and a matrix file is `{"matrix": [[series, ...], ...]}` or a bare array
//! of rows. Series are JSON strings in the series grammar
//! (`1 + 1/2*t - 1/8*t^2 (prec 32)`); integers are accepted as constants.
//! The emitters are canonical, so emitted text reparses to an equal value
//! and re-emits byte for byte.

use serde_json::Value;
use thiserror::Error;

use crate::operators::{OperatorC0, OperatorError};
use crate::scalars::LaurentSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Shape(String),
    #[error("entry {at}: {message}")]
    Series { at: String, message: String },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn shape(m: impl Into<String>) -> ParseError {
    ParseError::Shape(m.into())
}

fn series(v: &Value, at: impl Fn() -> String) -> Result<LaurentSeries, ParseError> {
    match v {
        Value::String(s) => s.parse().map_err(|e: crate::scalars::ScalarError| ParseError::Series { at: at(), message: e.to_string() }),
        Value::Number(n) if n.is_i64() => Ok(LaurentSeries::from_int(n.as_i64().unwrap())),
        _ => Err(ParseError::Series { at: at(), message: "expected a series string or an integer".into() }),
    }
}

fn rows(v: &Value, what: &str) -> Result<Vec<Vec<LaurentSeries>>, ParseError> {
    let rows = v.as_array().ok_or_else(|| shape(format!("{what} must be an array of rows")))?;
    let n = rows.len();
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let row = row.as_array().ok_or_else(|| shape(format!("{what} row {} is not an array", i + 1)))?;
            if row.len() != n {
                return Err(shape(format!("{what} is not square: row {} has {} entries, expected {n}", i + 1, row.len())));
            }
            row.iter().enumerate().map(|(j, x)| series(x, || format!("({}, {})", i + 1, j + 1))).collect()
        })
        .collect()
}

fn parse_json(text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))
}

fn check_keys(obj: &serde_json::Map<String, Value>, allowed: &[&str]) -> Result<(), ParseError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(shape(format!("unexpected key `{k}`"))),
        None => Ok(()),
    }
}

/// Square matrix entries; symmetry is left to the caller.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<LaurentSeries>>, ParseError> {
    let v = parse_json(text)?;
    match &v {
        Value::Array(_) => rows(&v, "matrix"),
        Value::Object(obj) => {
            check_keys(obj, &["matrix"])?;
            rows(obj.get("matrix").ok_or_else(|| shape("missing key `matrix`"))?, "matrix")
        }
        _ => Err(shape("expected an object or an array of rows")),
    }
}

pub fn parse_operator(text: &str) -> Result<OperatorC0, ParseError> {
    let v = parse_json(text)?;
    let obj = v.as_object().ok_or_else(|| shape("expected an object with `block` and `tail`"))?;
    check_keys(obj, &["block", "tail"])?;
    let block = match obj.get("block") {
        Some(b) => rows(b, "block")?,
        None => Vec::new(),
    };
    let mut tail = Vec::new();
    if let Some(t) = obj.get("tail") {
        let items = t.as_array().ok_or_else(|| shape("tail must be an array"))?;
        for (k, item) in items.iter().enumerate() {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| shape(format!("tail item {} is not [index, series]", k + 1)))?;
            let index = pair[0].as_u64().filter(|&i| i > 0).ok_or_else(|| shape(format!("tail item {} has a bad index", k + 1)))?;
            let index = usize::try_from(index).map_err(|_| shape("tail index too large"))?;
            tail.push((index, series(&pair[1], || format!("tail {index}"))?));
        }
    }
    Ok(OperatorC0::new(block, tail)?)
}

fn quote(s: &LaurentSeries) -> String {
    Value::String(s.to_string()).to_string()
}

fn emit_rows(rows: &[Vec<LaurentSeries>]) -> String {
    let rows: Vec<String> = rows.iter().map(|r| format!("[{}]", r.iter().map(quote).collect::<Vec<_>>().join(", "))).collect();
    format!("[{}]", rows.join(", "))
}

pub fn emit_matrix(rows: &[Vec<LaurentSeries>]) -> String {
    format!("{{\"matrix\": {}}}\n", emit_rows(rows))
}

pub fn emit_operator(t: &OperatorC0) -> String {
    let tail: Vec<String> = t.tail().iter().map(|(i, s)| format!("[{i}, {}]", quote(s))).collect();
    format!("{{\"block\": {}, \"tail\": [{}]}}\n", emit_rows(t.block()), tail.join(", "))
}
