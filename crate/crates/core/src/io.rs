//! Universe CSV ingestion, weight-file ingestion and rebalance reports.
//!
//! Universe files carry one of two literal headers, `id,market_cap` or
//! `id,price,shares`. Reports are written either as CSV
//! (`id,weight_before,weight_after,delta` plus `# key=value` summary lines)
//! or as versioned JSON.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, TopKPair};
use crate::error::{Error, Result};
use crate::transforms::RebalanceRule;
use crate::weights::{normalize, Constituent, WeightVector, SUM_TOLERANCE};

pub const SCHEMA_VERSION: u32 = 1;

/// Sums further than this from 1 are rejected when reading weight files.
pub const WEIGHT_FILE_REJECT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UniverseSchema {
    MarketCap,
    PriceShares,
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn row_number(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_number(record: &csv::StringRecord, field: usize, name: &str) -> Result<f64> {
    let row = row_number(record);
    let raw = &record[field];
    let value: f64 = raw.parse().map_err(|_| Error::MalformedRow {
        row,
        reason: format!("{name} `{raw}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteNumber {
            context: format!("{name} on row {row}"),
        });
    }
    if value < 0.0 {
        return Err(Error::MalformedRow {
            row,
            reason: format!("{name} {value} is negative"),
        });
    }
    Ok(value)
}

fn read_header(records: &mut impl Iterator<Item = csv::Result<csv::StringRecord>>) -> Result<Vec<String>> {
    match records.next() {
        Some(rec) => Ok(rec?.iter().map(str::to_owned).collect()),
        None => Err(Error::MalformedHeader("input is empty".into())),
    }
}

/// Reads constituents in file order.
pub fn parse_universe<R: Read>(reader: R) -> Result<Vec<Constituent>> {
    let mut rdr = csv_reader(reader);
    let mut records = rdr.records();
    let header = read_header(&mut records)?;
    let schema = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["id", "market_cap"] => UniverseSchema::MarketCap,
        ["id", "price", "shares"] => UniverseSchema::PriceShares,
        _ => {
            return Err(Error::MalformedHeader(format!(
                "expected `id,market_cap` or `id,price,shares`, got `{}`",
                header.join(",")
            )))
        }
    };
    let width = header.len();

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let row = row_number(&record);
        if record.len() != width {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected {width} fields, found {}", record.len()),
            });
        }
        let id = record[0].to_owned();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty identifier".into(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateIdentifier(id));
        }
        let constituent = match schema {
            UniverseSchema::MarketCap => {
                Constituent::with_market_cap(id, parse_number(&record, 1, "market_cap")?)
            }
            UniverseSchema::PriceShares => {
                let price = parse_number(&record, 1, "price")?;
                let shares = parse_number(&record, 2, "shares")?;
                Constituent::from_price_shares(id, price, shares)
            }
        };
        out.push(constituent.map_err(|e| Error::MalformedRow {
            row,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_universe(path: impl AsRef<Path>) -> Result<Vec<Constituent>> {
    parse_universe(File::open(path)?)
}

/// Which weight column of a report file to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightColumn {
    Before,
    After,
}

/// Reads a weight file: a JSON or CSV rebalance report, or a bare
/// `id,weight` CSV. Sums within [`WEIGHT_FILE_REJECT`] of one are
/// renormalized; anything further off is rejected.
pub fn parse_weight_file(text: &str, column: WeightColumn) -> Result<WeightVector> {
    let (ids, weights) = if text.trim_start().starts_with('{') {
        let report: RebalanceReport = serde_json::from_str(text)?;
        report
            .rows
            .into_iter()
            .map(|r| match column {
                WeightColumn::Before => (r.id, r.weight_before),
                WeightColumn::After => (r.id, r.weight_after),
            })
            .unzip()
    } else {
        parse_weight_csv(text, column)?
    };
    weights_with_tolerance(ids, weights)
}

pub fn read_weight_file(path: impl AsRef<Path>, column: WeightColumn) -> Result<WeightVector> {
    parse_weight_file(&std::fs::read_to_string(path)?, column)
}

fn parse_weight_csv(text: &str, column: WeightColumn) -> Result<(Vec<String>, Vec<f64>)> {
    let mut rdr = csv_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = read_header(&mut records)?;
    let field = match (header.iter().map(String::as_str).collect::<Vec<_>>().as_slice(), column) {
        (["id", "weight"], _) => 1,
        (["id", "weight_before", "weight_after", "delta"], WeightColumn::Before) => 1,
        (["id", "weight_before", "weight_after", "delta"], WeightColumn::After) => 2,
        _ => {
            return Err(Error::MalformedHeader(format!(
                "expected `id,weight` or `id,weight_before,weight_after,delta`, got `{}`",
                header.join(",")
            )))
        }
    };
    let width = header.len();
    let mut ids = Vec::new();
    let mut weights = Vec::new();
    for record in records {
        let record = record?;
        if record.len() != width {
            return Err(Error::MalformedRow {
                row: row_number(&record),
                reason: format!("expected {width} fields, found {}", record.len()),
            });
        }
        ids.push(record[0].to_owned());
        weights.push(parse_number(&record, field, "weight")?);
    }
    Ok((ids, weights))
}

fn weights_with_tolerance(ids: Vec<String>, weights: Vec<f64>) -> Result<WeightVector> {
    if ids.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let sum: f64 = weights.iter().sum();
    let deviation = (sum - 1.0).abs();
    if deviation.is_nan() || deviation >= WEIGHT_FILE_REJECT {
        return Err(Error::WeightSumMismatch { sum });
    }
    if deviation <= SUM_TOLERANCE {
        WeightVector::new(ids, weights)
    } else {
        WeightVector::new(ids, normalize(&weights)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub weight_before: f64,
    pub weight_after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub knot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_aggregate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKSummary {
    pub k: usize,
    pub before: f64,
    pub after: f64,
}

impl From<TopKPair> for TopKSummary {
    fn from(t: TopKPair) -> Self {
        Self {
            k: t.k,
            before: t.before,
            after: t.after,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub turnover: f64,
    pub max_before: f64,
    pub max_after: f64,
    pub order_violation_count: usize,
    pub hhi_before: f64,
    pub hhi_after: f64,
    pub top_k: Vec<TopKSummary>,
    pub reporting_p: f64,
    pub diversity_before: f64,
    pub diversity_after: f64,
}

/// Per-constituent before/after weights plus a diagnostic summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceReport {
    pub schema_version: u32,
    pub method: String,
    pub params: ReportParams,
    pub summary: ReportSummary,
    pub rows: Vec<ReportRow>,
}

impl RebalanceReport {
    pub fn build(
        rule: &RebalanceRule,
        mu: &WeightVector,
        eta: &WeightVector,
        reporting_p: f64,
    ) -> Result<Self> {
        let diag = diagnose(mu, eta, reporting_p)?;
        let mut params = ReportParams::default();
        for (key, value) in rule.params() {
            let slot = match key {
                "p" => &mut params.p,
                "knot" => &mut params.knot,
                "threshold" => &mut params.threshold,
                _ => &mut params.target_aggregate,
            };
            *slot = Some(value);
        }
        let aligned: Option<&[f64]> = mu.same_ids(eta).then(|| eta.weights());
        let rows = mu
            .iter()
            .enumerate()
            .map(|(i, (id, before))| {
                let after = match aligned {
                    Some(w) => w[i],
                    None => eta.get(id).unwrap_or(0.0),
                };
                ReportRow {
                    id: id.to_owned(),
                    weight_before: before,
                    weight_after: after,
                    delta: after - before,
                }
            })
            .collect();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            method: rule.method().to_owned(),
            params,
            summary: ReportSummary {
                turnover: diag.turnover,
                max_before: diag.max_before,
                max_after: diag.max_after,
                order_violation_count: diag.order_violations.len(),
                hhi_before: diag.hhi_before,
                hhi_after: diag.hhi_after,
                top_k: diag.top_k_sums.into_iter().map(Into::into).collect(),
                reporting_p: diag.reporting_p,
                diversity_before: diag.diversity_before,
                diversity_after: diag.diversity_after,
            },
            rows,
        })
    }

    /// Pretty JSON with a trailing newline. Floats use the shortest
    /// representation that round-trips exactly.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id,weight_before,weight_after,delta")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.id, r.weight_before, r.weight_after, r.delta)?;
        }
        writeln!(out, "# schema_version={}", self.schema_version)?;
        writeln!(out, "# method={}", self.method)?;
        let p = &self.params;
        for (key, value) in [
            ("p", p.p),
            ("knot", p.knot),
            ("threshold", p.threshold),
            ("target_aggregate", p.target_aggregate),
        ] {
            if let Some(v) = value {
                writeln!(out, "# {key}={v}")?;
            }
        }
        let s = &self.summary;
        writeln!(out, "# turnover={}", s.turnover)?;
        writeln!(out, "# max_before={}", s.max_before)?;
        writeln!(out, "# max_after={}", s.max_after)?;
        writeln!(out, "# order_violation_count={}", s.order_violation_count)?;
        writeln!(out, "# hhi_before={}", s.hhi_before)?;
        writeln!(out, "# hhi_after={}", s.hhi_after)?;
        for t in &s.top_k {
            writeln!(out, "# top_{}_before={}", t.k, t.before)?;
            writeln!(out, "# top_{}_after={}", t.k, t.after)?;
        }
        writeln!(out, "# reporting_p={}", s.reporting_p)?;
        writeln!(out, "# diversity_before={}", s.diversity_before)?;
        writeln!(out, "# diversity_after={}", s.diversity_after)?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("report CSV is UTF-8"))
    }
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros
/// like C's `%g`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    let exp = x.abs().log10().floor() as i32;
    // Rounding may carry into the next decade (e.g. 9.999996 -> 10.0000).
    let rounded: f64 = format!("{:.*e}", digits - 1, x).parse().unwrap_or(x);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, x);
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{}", trim_zeros(mantissa), e)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
