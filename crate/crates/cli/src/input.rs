//! `period,value` CSV ingestion.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use demandid::{validate_series, DemandSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Period {
    Index(i64),
    Date(NaiveDate),
}

fn parse_period(raw: &str) -> Option<Period> {
    let raw = raw.trim();
    if let Ok(i) = raw.parse::<i64>() {
        return Some(Period::Index(i));
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(&format!("{raw}-01"), "%Y-%m-%d"))
        .ok()
        .map(Period::Date)
}

/// Reads a demand series. Row numbers in errors count data rows from 1.
pub fn read_series(path: &Path, period: Option<usize>) -> Result<DemandSeries> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let series = parse_series(file).with_context(|| format!("in {}", path.display()))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let series = series.with_label(label);
    match period {
        Some(p) => Ok(series.with_period(p)?),
        None => Ok(series),
    }
}

pub fn parse_series<R: std::io::Read>(reader: R) -> Result<DemandSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().context("missing header row")?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != ["period", "value"] {
        bail!("header must be 'period,value', found '{}'", headers.iter().collect::<Vec<_>>().join(","));
    }

    let mut values = Vec::new();
    let mut previous: Option<Period> = None;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.with_context(|| format!("row {row}: malformed record"))?;
        let period = parse_period(&record[0]).with_context(|| {
            format!("row {row}: period '{}' is neither an integer nor an ISO date", &record[0])
        })?;
        let value: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .with_context(|| format!("row {row}: value '{}' is not a number", &record[1]))?;
        if value < 0.0 {
            bail!("row {row}: negative value {value}");
        }
        match (previous, period) {
            (None, _) => {}
            (Some(Period::Index(a)), Period::Index(b)) => {
                if b <= a {
                    bail!("row {row}: period {b} does not follow {a}");
                }
                if b != a + 1 {
                    bail!("row {row}: gap in periods, expected {} but found {b}", a + 1);
                }
            }
            (Some(Period::Date(a)), Period::Date(b)) => {
                if b <= a {
                    bail!("row {row}: date {b} does not follow {a}");
                }
            }
            _ => bail!("row {row}: mixes integer and date periods"),
        }
        previous = Some(period);
        values.push(value);
    }
    if values.is_empty() {
        bail!("no data rows");
    }
    Ok(validate_series(&values)?)
}
