use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use serde_json::Value;
use toralconj_core::linalg::IntMatrix;

fn parse_int(tok: &str) -> Result<BigInt> {
    let digits = tok.strip_prefix(['-', '+']).unwrap_or(tok);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        bail!("not an integer: {tok:?}");
    }
    tok.parse().map_err(|_| anyhow!("not an integer: {tok:?}"))
}

fn square(rows: Vec<Vec<BigInt>>, n: Option<usize>) -> Result<IntMatrix> {
    let size = n.unwrap_or(rows.len());
    if size == 0 {
        bail!("empty matrix");
    }
    if rows.len() != size {
        bail!("expected {size} rows, found {}", rows.len());
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != size) {
        bail!("row {} has {} entries, expected {size}", i + 1, r.len());
    }
    Ok(IntMatrix::from_rows(rows)?)
}

fn from_json(text: &str) -> Result<IntMatrix> {
    let v: Value = serde_json::from_str(text).context("malformed JSON matrix")?;
    let obj = v.as_object().ok_or_else(|| anyhow!("JSON matrix must be an object"))?;
    let n = match obj.get("n") {
        Some(Value::Number(x)) => Some(
            x.to_string()
                .parse::<usize>()
                .map_err(|_| anyhow!("\"n\" must be a positive integer"))?,
        ),
        Some(_) => bail!("\"n\" must be a positive integer"),
        None => None,
    };
    let rows = obj
        .get("rows")
        .and_then(Value::as_array)
        .ok_or_else(|| anyhow!("JSON matrix needs a \"rows\" array"))?;
    let rows = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| anyhow!("each row must be an array"))?
                .iter()
                .map(|x| match x {
                    Value::Number(num) => parse_int(&num.to_string()),
                    other => bail!("entry {other} is not an integer"),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    square(rows, n)
}

fn from_grid(text: &str) -> Result<IntMatrix> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(parse_int).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    square(rows, None)
}

/// A structured `{"n", "rows"}` object or a whitespace grid, told apart by the
/// first non-blank character.
pub fn parse_matrix(text: &str) -> Result<IntMatrix> {
    if text.trim_start().starts_with('{') {
        from_json(text)
    } else {
        from_grid(text)
    }
}

pub fn read_matrix(path: &Path) -> Result<IntMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_matrix(&text).with_context(|| format!("in {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_formats() {
        let g = parse_matrix("0 1 0\n1 0 4\n6 -2 23\n").unwrap();
        let j = parse_matrix(r#"{"n": 3, "rows": [[0,1,0],[1,0,4],[6,-2,23]]}"#).unwrap();
        assert_eq!(g, j);
        assert_eq!(g, IntMatrix::from_i64(&[[0, 1, 0], [1, 0, 4], [6, -2, 23]]));
    }

    #[test]
    fn big_entries_are_exact() {
        let m = parse_matrix(r#"{"rows": [[123456789012345678901234567890, 1], [0, 1]]}"#).unwrap();
        assert_eq!(m[(0, 0)].to_string(), "123456789012345678901234567890");
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "1 2\n3",
            "1 2 3\n4 5 6",
            "1.5 0\n0 1",
            "1e3 0\n0 1",
            r#"{"n": 2, "rows": [[1,0],[0,1.0]]}"#,
            r#"{"n": 3, "rows": [[1,0],[0,1]]}"#,
            r#"{"rows": [[1,0],[0,"1"]]}"#,
            "",
        ] {
            assert!(parse_matrix(bad).is_err(), "{bad:?}");
        }
    }
}
