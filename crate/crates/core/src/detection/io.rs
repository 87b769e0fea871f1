//! Scores CSV and threshold file.

use std::path::Path;
use std::sync::Arc;

use super::{ScoredWindow, Threshold};
use crate::data::WindowLabel;
use crate::error::{Error, Result};

const SCORE_COLUMNS: [&str; 7] = ["building_id", "start_index", "R", "F", "S", "label", "verdict"];

/// One line of a scores file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub building_id: Arc<str>,
    pub start_index: usize,
    pub r: f64,
    pub f: f64,
    pub s: f64,
    pub label: WindowLabel,
    /// `None` when no threshold was applied.
    pub anomalous: Option<bool>,
}

impl ScoreRow {
    pub fn from_scored(w: &ScoredWindow, verdict: Option<bool>) -> Self {
        ScoreRow {
            building_id: w.building_id.clone(),
            start_index: w.start_index,
            r: w.r,
            f: w.f,
            s: w.s,
            label: w.label,
            anomalous: verdict,
        }
    }
}

fn verdict_str(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "anomalous",
        Some(false) => "normal",
        None => "",
    }
}

pub fn scores_to_csv(rows: &[ScoreRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Data(format!("writing scores: {e}"));
    w.write_record(SCORE_COLUMNS).map_err(to_err)?;
    for r in rows {
        w.write_record([
            r.building_id.to_string(),
            r.start_index.to_string(),
            r.r.to_string(),
            r.f.to_string(),
            r.s.to_string(),
            r.label.as_str().to_string(),
            verdict_str(r.anomalous).to_string(),
        ])
        .map_err(to_err)?;
    }
    w.into_inner().map_err(|e| Error::Data(format!("writing scores: {e}")))
}

pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    std::fs::write(path, scores_to_csv(rows)?).map_err(|e| Error::io(path, e))
}

pub fn parse_scores(bytes: &[u8], source: &str) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let err = |line: u64, message: String| Error::Parse {
        path: source.into(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?;
    if headers.iter().map(str::trim).ne(SCORE_COLUMNS) {
        return Err(err(1, format!("expected columns {}", SCORE_COLUMNS.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| err(line, format!("invalid {} value {:?}", SCORE_COLUMNS[i], &rec[i])))
        };
        let anomalous = match rec[6].trim() {
            "anomalous" => Some(true),
            "normal" => Some(false),
            "" => None,
            other => return Err(err(line, format!("invalid verdict {other:?}"))),
        };
        rows.push(ScoreRow {
            building_id: Arc::from(rec[0].trim()),
            start_index: rec[1]
                .trim()
                .parse()
                .map_err(|_| err(line, format!("invalid start_index {:?}", &rec[1])))?,
            r: num(2)?,
            f: num(3)?,
            s: num(4)?,
            label: WindowLabel::parse(&rec[5]).ok_or_else(|| err(line, format!("invalid label {:?}", &rec[5])))?,
            anomalous,
        });
    }
    Ok(rows)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&bytes, &path.display().to_string())
}

pub fn threshold_to_string(t: &Threshold, lambda: f64) -> String {
    format!(
        "tau={}\nvalidation_f1={}\ncandidates={}\ndegenerate={}\nlambda={}\n",
        t.tau, t.f1, t.candidates, t.degenerate, lambda
    )
}

pub fn write_threshold(path: &Path, t: &Threshold, lambda: f64) -> Result<()> {
    std::fs::write(path, threshold_to_string(t, lambda)).map_err(|e| Error::io(path, e))
}

/// Returns the threshold and the lambda it was calibrated with.
pub fn parse_threshold(text: &str, source: &str) -> Result<(Threshold, f64)> {
    let mut tau = None;
    let mut f1 = 0.0;
    let mut candidates = 0;
    let mut degenerate = false;
    let mut lambda = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::Parse {
            path: source.into(),
            line: i as u64 + 1,
            message: m,
        };
        let (k, v) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
        let v = v.trim();
        let bad = || err(format!("invalid value {v:?} for {}", k.trim()));
        match k.trim() {
            "tau" => tau = Some(v.parse::<f64>().map_err(|_| bad())?),
            "validation_f1" => f1 = v.parse().map_err(|_| bad())?,
            "candidates" => candidates = v.parse().map_err(|_| bad())?,
            "degenerate" => degenerate = v.parse().map_err(|_| bad())?,
            "lambda" => lambda = Some(v.parse::<f64>().map_err(|_| bad())?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    let tau = tau.filter(|t| !t.is_nan()).ok_or_else(|| Error::Parse {
        path: source.into(),
        line: 0,
        message: "missing tau".into(),
    })?;
    Ok((
        Threshold {
            tau,
            f1,
            candidates,
            degenerate,
        },
        lambda.unwrap_or(f64::NAN),
    ))
}

pub fn read_threshold(path: &Path) -> Result<(Threshold, f64)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_threshold(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_round_trip() {
        let rows = vec![
            ScoreRow {
                building_id: Arc::from("b,1"),
                start_index: 60,
                r: 1.25,
                f: 0.1 + 0.2,
                s: 1.1549999999999998,
                label: WindowLabel::Anomalous,
                anomalous: Some(true),
            },
            ScoreRow {
                building_id: Arc::from("x"),
                start_index: 0,
                r: 0.0,
                f: 1e-300,
                s: 3.0,
                label: WindowLabel::Unlabeled,
                anomalous: None,
            },
        ];
        let bytes = scores_to_csv(&rows).unwrap();
        assert!(bytes.starts_with(b"building_id,start_index,R,F,S,label,verdict\n"));
        assert_eq!(parse_scores(&bytes, "mem").unwrap(), rows);
        assert!(parse_scores(b"a,b\n", "mem").is_err());
    }

    #[test]
    fn threshold_round_trip_with_sentinels() {
        for tau in [0.55, f64::INFINITY, f64::NEG_INFINITY] {
            let t = Threshold {
                tau,
                f1: 0.75,
                candidates: 9,
                degenerate: false,
            };
            let (back, lambda) = parse_threshold(&threshold_to_string(&t, 0.1), "mem").unwrap();
            assert_eq!(back, t);
            assert_eq!(lambda, 0.1);
        }
        assert!(parse_threshold("tau=abc\n", "mem").is_err());
        assert!(parse_threshold("lambda=0.1\n", "mem").is_err());
    }
}
