//! The JSON matrix format.
//!
//! ```json
//! {"m": 2, "n": 1, "theta": [["7/10", "11/17"]], "label": "example"}
//! ```
//!
//! `theta` has `n` rows of `m` entries. An entry is a `"p/q"` or integer
//! string, a JSON integer, or a decimal string. Decimals stand for
//! irrationals and need a precision in digits, given by a `{"precision": k}`
//! object right after the entry in its row, by an entry object
//! `{"value": "1.41", "precision": 2}`, or by a top-level `"precision"`.
//! The matrix records `ε = 10^{−k}` for the coarsest precision used.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde_json::Value;

use crate::arith::{parse_rational, RationalMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixFile {
    pub m: usize,
    pub n: usize,
    pub theta: RationalMatrix,
    pub label: Option<String>,
}

fn is_decimal(s: &str) -> bool {
    s.contains('.') && !s.contains('/')
}

fn precision_digits(v: &Value, context: &str) -> Result<u32> {
    v.as_u64()
        .filter(|k| (1..=10_000).contains(k))
        .map(|k| k as u32)
        .ok_or_else(|| Error::Parse(format!("{context}: precision must be an integer number of digits")))
}

struct Entry {
    value: BigRational,
    decimal: bool,
    precision: Option<u32>,
}

fn parse_entry(v: &Value, context: &str) -> Result<Entry> {
    match v {
        Value::String(s) => Ok(Entry {
            value: parse_rational(s).map_err(|e| Error::Parse(format!("{context}: {e}")))?,
            decimal: is_decimal(s),
            precision: None,
        }),
        Value::Number(num) if num.is_i64() => Ok(Entry {
            value: BigRational::from_integer(BigInt::from(num.as_i64().unwrap())),
            decimal: false,
            precision: None,
        }),
        Value::Number(_) => Err(Error::Parse(format!(
            "{context}: non-integer JSON numbers are ambiguous; write a string with a precision"
        ))),
        Value::Object(obj) => {
            let raw = obj
                .get("value")
                .ok_or_else(|| Error::Parse(format!("{context}: entry object needs \"value\"")))?;
            let mut entry = parse_entry(raw, context)?;
            if let Some(p) = obj.get("precision") {
                entry.precision = Some(precision_digits(p, context)?);
            }
            Ok(entry)
        }
        _ => Err(Error::Parse(format!("{context}: unsupported entry {v}"))),
    }
}

pub fn parse_matrix_json(text: &str) -> Result<MatrixFile> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| Error::Parse("matrix file must be a JSON object".into()))?;
    let dim = |key: &str| -> Result<usize> {
        obj.get(key)
            .and_then(Value::as_u64)
            .filter(|v| *v >= 1)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Parse(format!("\"{key}\" must be a positive integer")))
    };
    let (m, n) = (dim("m")?, dim("n")?);
    let global = obj
        .get("precision")
        .map(|p| precision_digits(p, "top level"))
        .transpose()?;
    let rows = obj
        .get("theta")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("\"theta\" must be an array of rows".into()))?;
    if rows.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "n = {n} but theta has {} rows",
            rows.len()
        )));
    }
    let mut entries = Vec::with_capacity(m * n);
    let mut coarsest: Option<u32> = None;
    for (i, row) in rows.iter().enumerate() {
        let items = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("row {i} is not an array")))?;
        let mut parsed: Vec<Entry> = Vec::with_capacity(m);
        for (j, item) in items.iter().enumerate() {
            let context = format!("theta[{i}][{j}]");
            let lone_precision = item
                .as_object()
                .filter(|o| o.len() == 1 && o.contains_key("precision"));
            if let Some(o) = lone_precision {
                let last = parsed
                    .last_mut()
                    .ok_or_else(|| Error::Parse(format!("{context}: precision before any entry")))?;
                last.precision = Some(precision_digits(&o["precision"], &context)?);
                continue;
            }
            parsed.push(parse_entry(item, &context)?);
        }
        if parsed.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "m = {m} but row {i} has {} entries",
                parsed.len()
            )));
        }
        for (j, e) in parsed.into_iter().enumerate() {
            if e.decimal {
                let k = e.precision.or(global).ok_or_else(|| {
                    Error::Parse(format!("theta[{i}][{j}]: decimal entry without a declared precision"))
                })?;
                coarsest = Some(coarsest.map_or(k, |c| c.min(k)));
            }
            entries.push(e.value);
        }
    }
    let precision = coarsest
        .map(|k| BigRational::one() / BigRational::from_integer(num_traits::pow(BigInt::from(10), k as usize)));
    let theta = RationalMatrix::new(n, m, entries)?.with_precision(precision);
    let label = obj.get("label").and_then(Value::as_str).map(str::to_string);
    Ok(MatrixFile { m, n, theta, label })
}

pub fn parse_matrix_file(path: impl AsRef<Path>) -> Result<MatrixFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    #[test]
    fn rational_entries() {
        let f = parse_matrix_json(r#"{"m":1,"n":1,"theta":[["3/2"]]}"#).unwrap();
        assert_eq!(f.theta.get(0, 0), &ratio(3, 2));
        assert_eq!(f.theta.precision(), None);
        let f = parse_matrix_json(r#"{"m":2,"n":1,"theta":[["7/10","11/17"]],"label":"row"}"#).unwrap();
        assert_eq!((f.theta.rows(), f.theta.cols()), (1, 2));
        assert_eq!(f.label.as_deref(), Some("row"));
    }

    #[test]
    fn decimals_need_precision() {
        let f = parse_matrix_json(
            r#"{"m":1,"n":2,"theta":[["1.41421356237309504880",{"precision":20}],[{"value":"1.7320508075688772935","precision":19}]]}"#,
        )
        .unwrap();
        assert_eq!(f.theta.get(0, 0), &parse_rational("1.41421356237309504880").unwrap());
        let eps = f.theta.precision().unwrap();
        assert_eq!(*eps, BigRational::one() / BigRational::from_integer(num_traits::pow(BigInt::from(10), 19)));
        let err = parse_matrix_json(r#"{"m":1,"n":1,"theta":[["1.5"]]}"#).unwrap_err();
        assert!(err.to_string().contains("precision"));
        assert!(parse_matrix_json(r#"{"m":1,"n":1,"precision":3,"theta":[["1.5"]]}"#).is_ok());
    }

    #[test]
    fn malformed_files() {
        assert!(parse_matrix_json("not json").is_err());
        assert!(parse_matrix_json(r#"{"m":2,"n":1,"theta":[["1/2"]]}"#).is_err());
        assert!(parse_matrix_json(r#"{"m":1,"n":2,"theta":[["1/2"]]}"#).is_err());
        assert!(parse_matrix_json(r#"{"m":1,"n":1,"theta":[[1.5]]}"#).is_err());
        assert!(parse_matrix_json(r#"{"m":1,"n":1,"theta":[[{"precision":2}]]}"#).is_err());
        assert!(parse_matrix_json(r#"{"m":0,"n":1,"theta":[]}"#).is_err());
        assert!(parse_matrix_json(r#"{"m":1,"n":1,"theta":[["1/0"]]}"#).is_err());
    }
}
