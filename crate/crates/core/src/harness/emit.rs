//! CSV, JSON and SVG writers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::sweep::{Axis, SweepOutcome, SweepRow, SweepTable};
use super::validate::ValidationReport;
use crate::error::{Error, Result};
use crate::solvers::Trajectory;

pub const SCHEMA_VERSION: u32 = 1;

/// Column order of every sweep table.
pub const SWEEP_COLUMNS: [&str; 7] =
    ["axis_value", "n_steps", "mean_error", "stderr", "estimator_tag", "replications", "seed"];

#[derive(Serialize)]
struct CsvRow<'a> {
    axis_value: f64,
    n_steps: u64,
    mean_error: f64,
    stderr: f64,
    estimator_tag: &'a str,
    replications: usize,
    seed: u64,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Serialization(e.to_string())
}

fn finish(wtr: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    wtr.into_inner().map_err(|e| Error::Serialization(e.to_string()))
}

/// Sweep table as CSV; a header-only document when there are no rows.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    wtr.write_record(SWEEP_COLUMNS).map_err(csv_error)?;
    for r in rows {
        wtr.serialize(CsvRow {
            axis_value: r.axis_value,
            n_steps: r.n_steps,
            mean_error: r.mean_error,
            stderr: r.stderr,
            estimator_tag: &r.estimator_tag,
            replications: r.replications,
            seed: r.seed,
        })
        .map_err(csv_error)?;
    }
    finish(wtr)
}

/// Sweep outcome as a JSON document.
pub fn sweep_json(outcome: &SweepOutcome) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "plan": outcome.plan,
        "statistic": outcome.primary().statistic,
        "results": outcome.primary().rows,
        "rate_fit": outcome.primary().fit,
        "tables": outcome.tables,
        "guide": outcome.guide,
        "diagnostics": outcome.diagnostics,
    })
}

/// Per-snapshot metrics of a run as CSV.
pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let first = &traj.snapshots[0].report;
    let mut header: Vec<String> = vec!["step_index".into(), "time".into()];
    header.extend(first.moments.iter().map(|(q, _)| format!("moment_{q}")));
    header.extend((0..first.mean_vector.len()).map(|k| format!("mean_{k}")));
    header.push("energy".into());
    header.extend(first.conserved_drift.iter().map(|(name, _)| format!("drift_{name}")));
    header.push("clamp_events".into());
    wtr.write_record(&header).map_err(csv_error)?;
    for s in &traj.snapshots {
        let r = &s.report;
        let mut rec: Vec<String> = vec![r.step_index.to_string(), r.time.to_string()];
        rec.extend(r.moments.iter().map(|(_, v)| v.to_string()));
        rec.extend(r.mean_vector.iter().map(f64::to_string));
        rec.push(r.energy.to_string());
        rec.extend(r.conserved_drift.iter().map(|(_, v)| v.to_string()));
        rec.push(r.clamp_events.to_string());
        wtr.write_record(&rec).map_err(csv_error)?;
    }
    finish(wtr)
}

/// Run as JSON; `config` is echoed as the plan.
pub fn trajectory_json(traj: &Trajectory, config: Value) -> Value {
    let reports: Vec<_> = traj.snapshots.iter().map(|s| &s.report).collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "plan": config,
        "results": reports,
        "rate_fit": Value::Null,
    })
}

pub fn validation_csv(report: &ValidationReport) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for e in &report.entries {
        wtr.serialize(e).map_err(csv_error)?;
    }
    if report.entries.is_empty() {
        return Ok(b"suite,model,passed,measured,bound,margin,violations,samples,detail\n".to_vec());
    }
    finish(wtr)
}

pub fn validation_json(report: &ValidationReport) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "validation",
        "plan": { "depth": report.depth },
        "passed": report.passed(),
        "results": report.entries,
        "rate_fit": Value::Null,
    })
}

pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, bytes).map_err(io)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;

/// Log-log plot of the primary table: error bars, the fitted line and the
/// theoretical guide slope anchored at the first point.
pub fn sweep_svg(outcome: &SweepOutcome) -> String {
    let table = outcome.primary();
    let pts: Vec<(f64, f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.axis_value > 0.0 && r.mean_error > 0.0)
        .map(|r| (r.axis_value.log10(), r.mean_error.log10(), r.stderr))
        .collect();
    let x_label = match outcome.axis {
        Axis::ParticleCount => "N",
        Axis::TimeStep => "dt",
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no positive errors to plot</text>"#, WIDTH / 2.0, HEIGHT / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }
    let (mut x0, mut x1) = bounds(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(pts.iter().flat_map(|p| {
        let lo = 10f64.powf(p.1) - p.2;
        [p.1, if lo > 0.0 { lo.log10() } else { p.1 }, (10f64.powf(p.1) + p.2).log10()]
    }));
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for k in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">1e{k}</text>"#, sx(k as f64), HEIGHT - MARGIN + 18.0);
    }
    for k in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">1e{k}</text>"#, MARGIN - 6.0, sy(k as f64) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 16.0);
    let _ = writeln!(svg, r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">mean error</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);

    let line = |svg: &mut String, slope: f64, anchor: (f64, f64), style: &str| {
        let y = |x: f64| anchor.1 + slope * (x - anchor.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" {style}/>"#,
            sx(x0),
            sy(y(x0)),
            sx(x1),
            sy(y(x1))
        );
    };
    let _ = writeln!(svg, r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath>"#, WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    svg.push_str("<g clip-path=\"url(#plot)\">\n");
    if let Some(fit) = &table.fit {
        // the fit is in natural logs; slopes are base independent
        let anchor = (0.0, fit.intercept / std::f64::consts::LN_10);
        line(&mut svg, fit.slope, anchor, r#"stroke="steelblue" stroke-width="2""#);
    }
    if let Some(guide) = outcome.guide {
        line(&mut svg, guide.slope, (pts[0].0, pts[0].1), r#"stroke="gray" stroke-dasharray="6 4""#);
    }
    for &(x, y, se) in &pts {
        let v = 10f64.powf(y);
        if se > 0.0 {
            let lo = if v - se > 0.0 { (v - se).log10() } else { y0 };
            let hi = (v + se).log10();
            let _ = writeln!(svg, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/>"#, sx(x), sy(lo), sy(hi));
        }
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="crimson"/>"#, sx(x), sy(y));
    }
    svg.push_str("</g>\n");
    let mut legend = Vec::new();
    if let Some(fit) = &table.fit {
        legend.push(format!("fit slope {:.3} (R^2 {:.3})", fit.slope, fit.r_squared));
    }
    if let Some(g) = outcome.guide {
        legend.push(format!("reference slope {:.3}", g.slope));
    }
    for (i, text) in legend.iter().enumerate() {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12">{text}</text>"#, MARGIN + 8.0, MARGIN + 16.0 + 16.0 * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn pad(lo: &mut f64, hi: &mut f64) {
    let span = (*hi - *lo).max(0.2);
    let mid = 0.5 * (*hi + *lo);
    *lo = mid - 0.55 * span;
    *hi = mid + 0.55 * span;
}

/// Tables other than the primary one, keyed by a file-name suffix.
pub fn secondary_tables(outcome: &SweepOutcome) -> impl Iterator<Item = (&'static str, &SweepTable)> {
    outcome.tables.iter().skip(1).map(|t| (t.statistic.name(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::{converge_in_dt, SweepPlan};
    use crate::models::{InitialCondition, ModelSpec};
    use crate::oracles::Quantity;
    use crate::SchemeParams;

    fn dt_outcome() -> SweepOutcome {
        let p = SweepPlan::time_step(
            ModelSpec::kac(),
            InitialCondition::PointMass { center: vec![1.0] },
            SchemeParams::nanbu(0.1, 1.0, 1, 4),
            vec![0.0125, 0.025, 0.05, 0.1],
            Quantity::Mean,
        );
        converge_in_dt(&p).unwrap()
    }

    #[test]
    fn empty_table_is_header_only() {
        let bytes = sweep_csv(&[]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "axis_value,n_steps,mean_error,stderr,estimator_tag,replications,seed\n"
        );
    }

    #[test]
    fn csv_rows_round_trip_floats() {
        let out = dt_outcome();
        let text = String::from_utf8(sweep_csv(out.rows()).unwrap()).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for (rec, row) in rdr.records().zip(out.rows()) {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<f64>().unwrap().to_bits(), row.axis_value.to_bits());
            assert_eq!(rec[2].parse::<f64>().unwrap().to_bits(), row.mean_error.to_bits());
            assert_eq!(&rec[4], "oracle_mean");
            assert_eq!(rec[6].parse::<u64>().unwrap(), row.seed);
        }
    }

    #[test]
    fn json_round_trip() {
        let v = sweep_json(&dt_outcome());
        assert_eq!(v["schema_version"], 1);
        assert!(v["rate_fit"]["slope"].is_f64());
        let parsed: Value = serde_json::from_slice(&json_bytes(&v)).unwrap();
        assert_eq!(parsed, v);
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = sweep_svg(&dt_outcome());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().filter(|n| n.has_tag_name("circle")).count() == 4);
    }

    #[test]
    fn write_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, b"x").unwrap();
        let err = write_file(&blocker.join("out.csv"), b"").unwrap_err();
        assert!(err.to_string().contains("out.csv"), "{err}");
    }
}
