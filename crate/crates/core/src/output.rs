//! CSV and JSON emission of series and reports.
//!
//! Numbers are rounded to 12 significant digits before they are written.
//! dB columns are derived from the powers and never read back.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{
    to_db, Axis, EnhancementReport, ParamsSnapshot, PointStatus, SpectrumPoint, SpectrumSeries,
    Stage,
};
use crate::config::Format;

pub const CSV_COLUMNS: &str = "axis_value,s_plus,s_minus,s_plus_db,s_minus_db,status";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed series document: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Rounds to 12 significant digits.
pub fn round_sig12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn fmt_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::OpenLoop => "open_loop",
        Stage::ClosedLoop => "closed_loop",
        Stage::Detected => "detected",
    }
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::FrequencyHz => "frequency_hz",
        Axis::TransmissivityT2 => "transmissivity_t2",
        Axis::PumpStrengthX => "pump_strength_x",
    }
}

/// Parameter snapshot as config-style `(key, value)` pairs.
pub fn snapshot_fields(p: &ParamsSnapshot) -> Vec<(&'static str, String)> {
    let mut out = vec![
        ("T1", p.opo.t1.to_string()),
        ("L1", p.opo.l1.to_string()),
        ("l", p.opo.length.to_string()),
        ("x", p.opo.x.to_string()),
        (
            "pump_sign",
            match p.opo.pump_sign {
                crate::opo::PumpSign::Positive => "positive",
                crate::opo::PumpSign::Negative => "negative",
            }
            .to_string(),
        ),
    ];
    if let Some(fb) = &p.feedback {
        out.extend([
            ("T2", fb.t2.to_string()),
            ("L2", fb.l2.to_string()),
            ("la", fb.la.to_string()),
            ("lb", fb.lb.to_string()),
        ]);
    }
    if let Some(d) = &p.detection {
        out.extend([
            ("xi", d.xi.to_string()),
            ("rho", d.rho.to_string()),
            ("eta", d.eta().to_string()),
        ]);
    }
    if let Some(f) = p.frequency_hz {
        out.push(("f", f.to_string()));
    }
    out
}

/// Header pairs: series identity, snapshot, then any `meta` keys not yet
/// present. Each key appears once.
fn header_fields(series: &SpectrumSeries, meta: &[(&str, String)]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("stage".into(), stage_name(series.stage).into()),
        ("axis".into(), axis_name(series.axis).into()),
    ];
    out.extend(
        snapshot_fields(&series.params)
            .into_iter()
            .map(|(k, v)| (k.to_string(), v)),
    );
    for (k, v) in meta {
        if !out.iter().any(|(have, _)| have == k) {
            out.push((k.to_string(), v.clone()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PointRecord {
    axis_value: f64,
    s_plus: Option<f64>,
    s_minus: Option<f64>,
    s_plus_db: Option<f64>,
    s_minus_db: Option<f64>,
    status: PointStatus,
}

impl PointRecord {
    fn new(p: &SpectrumPoint) -> Self {
        let db = |s: Option<f64>| s.and_then(|s| to_db(s).ok()).map(round_sig12);
        PointRecord {
            axis_value: round_sig12(p.axis_value),
            s_plus: p.s_plus.map(round_sig12),
            s_minus: p.s_minus.map(round_sig12),
            s_plus_db: db(p.s_plus),
            s_minus_db: db(p.s_minus),
            status: p.status,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SeriesDocument {
    meta: BTreeMap<String, String>,
    stage: Stage,
    axis: Axis,
    params: ParamsSnapshot,
    points: Vec<PointRecord>,
}

/// The series as it reads back from an emitted file: every value rounded to
/// 12 significant digits.
pub fn rounded(series: &SpectrumSeries) -> SpectrumSeries {
    SpectrumSeries {
        points: series
            .points
            .iter()
            .map(|p| SpectrumPoint {
                axis_value: round_sig12(p.axis_value),
                s_plus: p.s_plus.map(round_sig12),
                s_minus: p.s_minus.map(round_sig12),
                status: p.status,
            })
            .collect(),
        ..series.clone()
    }
}

pub fn render_series(series: &SpectrumSeries, meta: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Csv => render_series_csv(series, meta),
        Format::Json => render_series_json(series, meta),
    }
}

fn render_series_csv(series: &SpectrumSeries, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in header_fields(series, meta) {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    let cell = |v: Option<f64>| v.map(fmt_sig12).unwrap_or_default();
    for p in &series.points {
        let r = PointRecord::new(p);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig12(p.axis_value),
            cell(p.s_plus),
            cell(p.s_minus),
            cell(r.s_plus_db),
            cell(r.s_minus_db),
            p.status.as_str()
        ));
    }
    out
}

fn render_series_json(series: &SpectrumSeries, meta: &[(&str, String)]) -> String {
    let doc = SeriesDocument {
        meta: meta
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
        stage: series.stage,
        axis: series.axis,
        params: series.params,
        points: series.points.iter().map(PointRecord::new).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("series serializes");
    s.push('\n');
    s
}

/// Reads a JSON series document back, returning the series and its metadata.
pub fn parse_series_json(
    text: &str,
) -> Result<(SpectrumSeries, BTreeMap<String, String>), OutputError> {
    let doc: SeriesDocument = serde_json::from_str(text)?;
    let series = SpectrumSeries {
        stage: doc.stage,
        axis: doc.axis,
        params: doc.params,
        points: doc
            .points
            .into_iter()
            .map(|r| SpectrumPoint {
                axis_value: r.axis_value,
                s_plus: r.s_plus,
                s_minus: r.s_minus,
                status: r.status,
            })
            .collect(),
    };
    Ok((series, doc.meta))
}

/// Key-value record (reports, thresholds). CSV is a `key,value` table with the
/// `meta` pairs as `#` header lines.
pub fn render_record(
    kind: &str,
    values: &[(&str, Value)],
    meta: &[(&str, String)],
    format: Format,
) -> String {
    let rounded_value = |v: &Value| match v.as_f64() {
        Some(f) if v.is_f64() => Value::from(round_sig12(f)),
        _ => v.clone(),
    };
    match format {
        Format::Csv => {
            let mut out = format!("# record = {kind}\n");
            for (k, v) in meta {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            out.push_str("key,value\n");
            for (k, v) in values {
                let text = match v {
                    Value::Number(n) if n.is_f64() => fmt_sig12(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push_str(&format!("{k},{text}\n"));
            }
            out
        }
        Format::Json => {
            let mut record = serde_json::Map::new();
            record.insert("record".into(), Value::from(kind));
            let meta: serde_json::Map<String, Value> = meta
                .iter()
                .map(|(k, v)| (k.to_string(), Value::from(v.clone())))
                .collect();
            record.insert("meta".into(), Value::Object(meta));
            let values: serde_json::Map<String, Value> = values
                .iter()
                .map(|(k, v)| (k.to_string(), rounded_value(v)))
                .collect();
            record.insert("values".into(), Value::Object(values));
            let mut s =
                serde_json::to_string_pretty(&Value::Object(record)).expect("record serializes");
            s.push('\n');
            s
        }
    }
}

pub fn report_values(r: &EnhancementReport) -> Vec<(&'static str, Value)> {
    vec![
        ("t2_star", Value::from(r.t2_star)),
        ("s_minus_at_star", Value::from(r.s_minus_at_star)),
        (
            "s_minus_at_star_db",
            Value::from(to_db(r.s_minus_at_star).unwrap_or(f64::NAN)),
        ),
        ("baseline_s_minus", Value::from(r.baseline_s_minus)),
        (
            "baseline_s_minus_db",
            Value::from(to_db(r.baseline_s_minus).unwrap_or(f64::NAN)),
        ),
        ("improvement_db", Value::from(r.improvement_db)),
        ("improved", Value::from(r.improved)),
        (
            "baseline",
            Value::from(match r.baseline {
                crate::analysis::Baseline::Uncontrolled => "uncontrolled",
                crate::analysis::Baseline::SameLoss => "same_loss",
            }),
        ),
    ]
}

/// Writes `content` to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), OutputError> {
    match path {
        Some(path) => fs::write(path, content).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => io::stdout()
            .write_all(content.as_bytes())
            .map_err(|source| OutputError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

/// Renders and writes a series.
pub fn emit_series(
    series: &SpectrumSeries,
    meta: &[(&str, String)],
    format: Format,
    path: Option<&Path>,
) -> Result<(), OutputError> {
    write_output(path, &render_series(series, meta, format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{sweep_transmissivity, transmissivity_grid};
    use crate::feedback::FeedbackParams;
    use crate::opo::OpoParams;
    use proptest::prelude::*;

    fn flagged_series() -> SpectrumSeries {
        let op = OpoParams::new(0.12, 5e-3, 0.5, 0.6).unwrap();
        let fb = FeedbackParams::new(1.0, 0.05, 0.25, 0.25).unwrap();
        sweep_transmissivity(&op, &fb, 1e6, &transmissivity_grid(10), None).unwrap()
    }

    #[test]
    fn csv_layout() {
        let s = flagged_series();
        let csv = render_series(
            &s,
            &[("command", "sweep-t2".into()), ("T2", "0.3".into())],
            Format::Csv,
        );
        let lines: Vec<_> = csv.lines().collect();
        let header_end = lines.iter().position(|l| *l == CSV_COLUMNS).unwrap();
        assert!(lines[..header_end].iter().all(|l| l.starts_with("# ")));
        assert_eq!(lines.len() - header_end - 1, s.points.len());
        assert!(csv.contains(",above_threshold\n"));
        assert!(csv.contains("# command = sweep-t2\n"));
        // Snapshot keys win over duplicate meta keys.
        assert_eq!(csv.matches("# T2 = ").count(), 1);
        let last = lines.last().unwrap();
        assert!(
            last.starts_with("1.00000000000e0,") && last.ends_with(",ok"),
            "{last}"
        );
    }

    #[test]
    fn json_round_trip() {
        let s = flagged_series();
        let text = render_series(&s, &[("command", "sweep-t2".into())], Format::Json);
        let (back, meta) = parse_series_json(&text).unwrap();
        assert_eq!(back, rounded(&s));
        assert_eq!(meta.get("command").map(String::as_str), Some("sweep-t2"));
        assert!(text.contains("\"above_threshold\""));
    }

    #[test]
    fn record_rendering() {
        let vals = [
            ("x_threshold", Value::from(0.417_149_880_049_618_1)),
            ("flag", Value::from(true)),
        ];
        let csv = render_record("threshold", &vals, &[("T2", "0.8".into())], Format::Csv);
        assert!(csv.contains("x_threshold,4.17149880050e-1\n"));
        assert!(csv.contains("flag,true\n"));
        let json = render_record("threshold", &vals, &[], Format::Json);
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["values"]["x_threshold"].as_f64(), Some(0.417149880050));
    }

    #[test]
    fn write_failure_is_io_error() {
        let err = write_output(Some(Path::new("/nonexistent-dir/x.csv")), "a").unwrap_err();
        assert!(matches!(err, OutputError::Io { .. }));
    }

    proptest! {
        #[test]
        fn sig12_rounding_survives_json(v in prop::num::f64::NORMAL) {
            let r = round_sig12(v);
            let text = serde_json::to_string(&r).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), r.to_bits());
            prop_assert!(((r - v) / v).abs() <= 5e-12);
            prop_assert_eq!(round_sig12(r).to_bits(), r.to_bits());
        }
    }
}
