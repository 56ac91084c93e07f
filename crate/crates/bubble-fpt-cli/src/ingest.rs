//! CSV ingestion: `date,price` files into a [`PriceSeries`].

use bubble_fpt::{Error, PriceSeries, Result};
use std::path::Path;

/// Reads a `date,price` CSV. Rows may arrive unsorted; duplicate dates are
/// rejected. Errors carry 1-based line numbers.
pub fn ingest_csv(path: &Path) -> Result<PriceSeries> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_csv(&raw)
}

pub fn parse_csv(raw: &str) -> Result<PriceSeries> {
    let mut lines = raw.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(Error::InvalidInput("no data rows".into())),
        }
    };
    if header.trim() != "date,price" {
        return Err(Error::InvalidInput(format!(
            "expected header 'date,price', got '{}'",
            header.trim()
        )));
    }
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut fields = line.split(',');
        let (date, price_str) = match (fields.next(), fields.next(), fields.next()) {
            (Some(d), Some(p), None) => (d.trim(), p.trim()),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "line {lineno}: expected 2 comma-separated fields, got '{line}'"
                )))
            }
        };
        if date.is_empty() {
            return Err(Error::InvalidInput(format!("line {lineno}: empty date")));
        }
        let price: f64 = price_str.parse().map_err(|_| {
            Error::InvalidInput(format!("line {lineno}: invalid price '{price_str}'"))
        })?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(Error::InvalidInput(format!(
                "line {lineno}: non-positive price {price}"
            )));
        }
        rows.push((date.to_string(), price));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("no data rows".into()));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::InvalidInput(format!("duplicate date {}", w[0].0)));
        }
    }
    let (timestamps, prices) = rows.into_iter().unzip();
    PriceSeries::new(timestamps, prices)
}
