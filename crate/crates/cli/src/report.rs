//! Text rendering helpers shared by the commands.

use demandid::distfit::DistParams;
use serde::Serialize;

/// Left-aligned text table.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i + 1 == cells.len() {
                    s.push_str(cell);
                } else {
                    s.push_str(&format!("{cell:<w$}  "));
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(&self.header);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&line(&rule));
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

pub fn params_text(params: &DistParams) -> String {
    match *params {
        DistParams::Uniform { lower, upper } => format!("lower={lower}, upper={upper}"),
        DistParams::Normal { mean, sd } => format!("mean={mean}, sd={sd}"),
        DistParams::ExponentialShifted { location, scale } => {
            format!("location={location}, scale={scale}")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<Bin> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    if lo == hi {
        return vec![Bin {
            lower: lo,
            upper: hi,
            count: values.len(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| Bin {
            lower: lo + k as f64 * width,
            upper: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            count,
        })
        .collect()
}

pub fn histogram_text(bins: &[Bin]) -> String {
    let mut t = Table::new(["bin", "count"]);
    for b in bins {
        t.row([format!("[{}, {}]", b.lower, b.upper), b.count.to_string()]);
    }
    t.render()
}

pub fn percent(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let h = histogram(&v, 10);
        assert_eq!(h.len(), 10);
        assert!(h.iter().all(|b| b.count == 10));
        assert_eq!(h[9].upper, 99.0);
        assert_eq!(histogram(&[3.0, 3.0], 10).len(), 1);
    }

    #[test]
    fn table_aligns_columns() {
        let mut t = Table::new(["a", "bbb"]);
        t.row(["xxxx", "y"]);
        assert_eq!(t.render(), "a     bbb\n----  ---\nxxxx  y\n");
    }
}
