//! CSV series ingestion.
//!
//! The value is the last column. An optional leading ISO-8601 date column
//! orders the rows. Empty cells and "." mark missing observations, which are
//! dropped and counted.

use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesInfo {
    pub path: String,
    pub observations: usize,
    pub dropped_missing: usize,
    pub dated: bool,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub values: Vec<f64>,
    pub info: SeriesInfo,
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s == "." || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
}

fn looks_like_iso_date(s: &str) -> bool {
    let b = s.trim().as_bytes();
    b.len() >= 10
        && b[..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit)
}

pub fn read_series(path: &Path) -> Result<Series> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut s = parse_series(file)?;
    s.info.path = path.display().to_string();
    Ok(s)
}

pub fn parse_series<R: Read>(input: R) -> Result<Series> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);

    let mut rows: Vec<(Option<String>, f64)> = Vec::new();
    let mut dropped = 0;
    let mut dated = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("malformed CSV at record {}", i + 1))?;
        let Some(last) = rec.iter().next_back() else { continue };
        let value_missing = is_missing(last);
        let parsed = last.parse::<f64>();
        if i == 0 && !value_missing && parsed.is_err() {
            // Header row.
            continue;
        }
        let date = if rec.len() >= 2 && looks_like_iso_date(&rec[0]) {
            Some(rec[0].to_string())
        } else {
            None
        };
        match dated {
            None => dated = Some(date.is_some()),
            Some(d) if d != date.is_some() => bail!("record {}: date column present on some rows only", i + 1),
            _ => {}
        }
        if value_missing {
            dropped += 1;
            continue;
        }
        let v = parsed.with_context(|| format!("record {}: cannot parse `{last}` as a number", i + 1))?;
        if !v.is_finite() {
            bail!("record {}: non-finite value", i + 1);
        }
        rows.push((date, v));
    }
    let dated = dated.unwrap_or(false);
    if dated {
        // ISO-8601 dates sort lexicographically; the sort is stable.
        rows.sort_by(|a, b| a.0.cmp(&b.0));
    }
    if rows.is_empty() {
        bail!("no observations found");
    }
    Ok(Series {
        info: SeriesInfo {
            path: String::new(),
            observations: rows.len(),
            dropped_missing: dropped,
            dated,
        },
        values: rows.into_iter().map(|r| r.1).collect(),
    })
}
