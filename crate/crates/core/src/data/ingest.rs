//! Hourly meter CSV ingestion.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike};

use super::BuildingSeries;
use crate::error::{Error, Result};

/// Upper bound on one building's span in hours (about 22 years).
pub const MAX_SERIES_HOURS: i64 = 200_000;

/// Column names of the input CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSchema {
    pub building_col: String,
    pub timestamp_col: String,
    pub reading_col: String,
    /// When `None` (or when the column is absent), series carry no labels.
    pub label_col: Option<String>,
    /// Keep the first of two rows for the same building and hour instead of
    /// failing. Meant for local-time exports with daylight-saving repeats.
    pub keep_first_duplicate: bool,
}

impl Default for IngestSchema {
    fn default() -> Self {
        IngestSchema {
            building_col: "building_id".into(),
            timestamp_col: "timestamp".into(),
            reading_col: "meter_reading".into(),
            label_col: Some("anomaly".into()),
            keep_first_duplicate: false,
        }
    }
}

pub fn ingest_csv(path: &Path, schema: &IngestSchema) -> Result<Vec<BuildingSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(std::io::BufReader::new(file), schema, &path.display().to_string())
}

/// Parses `YYYY-MM-DD HH:MM:SS`, the `T`-separated form, an optional
/// fractional-free `HH:MM`, or RFC 3339 with an offset (converted to UTC).
/// Returns whole hours since the Unix epoch.
pub fn parse_hour(text: &str) -> std::result::Result<i64, String> {
    let text = text.trim();
    let naive = if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        dt.naive_utc()
    } else {
        let stripped = text.strip_suffix('Z').unwrap_or(text);
        ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(stripped, f).ok())
            .ok_or_else(|| format!("unparseable timestamp {text:?}"))?
    };
    if naive.minute() != 0 || naive.second() != 0 || naive.nanosecond() != 0 {
        return Err(format!("timestamp {text:?} is not on the hour"));
    }
    Ok(naive.and_utc().timestamp().div_euclid(3600))
}

pub fn format_hour(hour: i64) -> String {
    DateTime::from_timestamp(hour * 3600, 0)
        .map(|d| d.format("%Y-%m-%d %H:%M:%S").to_string())
        .unwrap_or_else(|| format!("hour {hour}"))
}

fn parse_reading(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return Ok(f64::NAN);
    }
    let v: f64 = t.parse().map_err(|_| format!("invalid meter reading {t:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite meter reading {t:?}"));
    }
    Ok(v)
}

fn parse_label(text: &str) -> std::result::Result<u8, String> {
    match text.trim() {
        "" | "0" | "0.0" => Ok(0),
        "1" | "1.0" => Ok(1),
        other => Err(format!("anomaly label must be 0 or 1, got {other:?}")),
    }
}

struct Row {
    hour: i64,
    reading: f64,
    label: u8,
    line: u64,
}

/// Reads a CSV with a header row into one gapless hourly series per
/// building, sorted by building id. Missing hours become `NaN` readings with
/// label 0.
pub fn ingest_reader<R: Read>(reader: R, schema: &IngestSchema, source: &str) -> Result<Vec<BuildingSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
    };
    let b_idx = col(&schema.building_col)?;
    let t_idx = col(&schema.timestamp_col)?;
    let r_idx = col(&schema.reading_col)?;
    let l_idx = schema
        .label_col
        .as_ref()
        .and_then(|name| headers.iter().position(|h| h.trim() == name));

    let mut per_building: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let building = field(b_idx).trim();
        if building.is_empty() {
            return Err(parse_err(line, "empty building id".into()));
        }
        let hour = parse_hour(field(t_idx)).map_err(|m| parse_err(line, m))?;
        let reading = parse_reading(field(r_idx)).map_err(|m| parse_err(line, m))?;
        let label = match l_idx {
            Some(i) => parse_label(field(i)).map_err(|m| parse_err(line, m))?,
            None => 0,
        };
        per_building.entry(building.to_string()).or_default().push(Row {
            hour,
            reading,
            label,
            line,
        });
    }

    let mut out = Vec::with_capacity(per_building.len());
    for (building_id, mut rows) in per_building {
        rows.sort_by_key(|r| (r.hour, r.line));
        let first = rows[0].hour;
        let last = rows[rows.len() - 1].hour;
        let span = last - first + 1;
        if span > MAX_SERIES_HOURS {
            return Err(parse_err(
                rows[rows.len() - 1].line,
                format!("building {building_id:?} spans {span} hours (limit {MAX_SERIES_HOURS})"),
            ));
        }
        let mut readings = vec![f64::NAN; span as usize];
        let mut labels = vec![0u8; span as usize];
        let mut seen = vec![false; span as usize];
        for row in &rows {
            let k = (row.hour - first) as usize;
            if seen[k] {
                if schema.keep_first_duplicate {
                    continue;
                }
                return Err(parse_err(
                    row.line,
                    format!("duplicate reading for building {building_id:?} at {}", format_hour(row.hour)),
                ));
            }
            seen[k] = true;
            readings[k] = row.reading;
            labels[k] = row.label;
        }
        out.push(BuildingSeries {
            building_id,
            start_hour: first,
            readings,
            labels: l_idx.map(|_| labels),
            stats: None,
        });
    }
    Ok(out)
}
