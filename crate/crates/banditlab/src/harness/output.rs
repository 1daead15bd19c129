//! CSV and SVG emission. Floats are written in Rust's shortest round-trip
//! form, so parsing an emitted file recovers every value exactly.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{BanditError, Result};
use crate::trace::{RoundRecord, Trace};

pub const TRACE_HEADER: [&str; 7] = ["t", "arm", "y", "phase", "block_or_epoch", "pseudo_regret_cum", "adv_regret_cum"];
pub const SUMMARY_HEADER: [&str; 7] =
    ["algorithm", "env", "T", "seed_count", "regret_median", "regret_q10", "regret_q90"];

fn csv_err(e: csv::Error) -> BanditError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => BanditError::Io(io),
        other => BanditError::Config(format!("csv: {other:?}")),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| BanditError::Config(format!("bad {what} field '{s}'")))
}

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &trace.records {
        w.write_record([
            r.t.to_string(),
            r.arm.to_string(),
            r.y.to_string(),
            r.phase.to_string(),
            r.block_or_epoch.to_string(),
            r.pseudo_regret_cum.map_or(String::new(), |v| v.to_string()),
            r.adv_regret_cum.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_to_string(trace: &Trace) -> Result<String> {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_trace<R: Read>(input: R) -> Result<Trace> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(BanditError::Config(format!("unexpected trace header {header:?}")));
    }
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        let pseudo = &row[5];
        records.push(RoundRecord {
            t: parse_field(&row[0], "t")?,
            arm: parse_field(&row[1], "arm")?,
            y: parse_field(&row[2], "y")?,
            phase: parse_field(&row[3], "phase")?,
            block_or_epoch: parse_field(&row[4], "block_or_epoch")?,
            pseudo_regret_cum: if pseudo.is_empty() { None } else { Some(parse_field(pseudo, "pseudo_regret_cum")?) },
            adv_regret_cum: parse_field(&row[6], "adv_regret_cum")?,
        });
    }
    Ok(Trace { records })
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    write_atomic(path, trace_to_string(trace)?.as_bytes())
}

pub fn read_trace_file(path: &Path) -> Result<Trace> {
    read_trace(std::fs::File::open(path)?)
}

/// The regret a summary reports: pseudo-regret when θ is fixed, otherwise
/// adversarial regret.
pub fn headline_regret(trace: &Trace) -> f64 {
    trace.final_pseudo_regret().unwrap_or_else(|| trace.final_adv_regret())
}

/// Linear-interpolation quantile of sorted data (the R-7 rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub env: String,
    pub horizon: usize,
    pub seed_count: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

impl SummaryRow {
    pub fn from_regrets(algorithm: &str, env: &str, horizon: usize, regrets: &[f64]) -> Self {
        let mut v = regrets.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            algorithm: algorithm.into(),
            env: env.into(),
            horizon,
            seed_count: v.len(),
            median: quantile_sorted(&v, 0.5),
            q10: quantile_sorted(&v, 0.1),
            q90: quantile_sorted(&v, 0.9),
        }
    }
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.clone(),
            r.env.clone(),
            r.horizon.to_string(),
            r.seed_count.to_string(),
            r.median.to_string(),
            r.q10.to_string(),
            r.q90.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(BanditError::Config(format!("unexpected summary header {header:?}")));
    }
    rd.records()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            Ok(SummaryRow {
                algorithm: row[0].to_string(),
                env: row[1].to_string(),
                horizon: parse_field(&row[2], "T")?,
                seed_count: parse_field(&row[3], "seed_count")?,
                median: parse_field(&row[4], "regret_median")?,
                q10: parse_field(&row[5], "regret_q10")?,
                q90: parse_field(&row[6], "regret_q90")?,
            })
        })
        .collect()
}

/// Log-spaced rounds 1, ⌊1.25^k⌋, …, horizon at which curves are sampled.
pub fn curve_rounds(horizon: usize) -> Vec<usize> {
    let mut rounds = Vec::new();
    let mut t = 1.0f64;
    while (t as usize) < horizon {
        rounds.push(t as usize);
        t *= 1.25;
    }
    if horizon > 0 {
        rounds.push(horizon);
    }
    rounds.dedup();
    rounds
}

/// Headline regret of `trace` at each of [`curve_rounds`].
pub fn sample_curve(trace: &Trace) -> Vec<(usize, f64)> {
    curve_rounds(trace.len())
        .into_iter()
        .map(|t| {
            let r = &trace.records[t - 1];
            (t, r.pseudo_regret_cum.unwrap_or(r.adv_regret_cum))
        })
        .collect()
}

/// Per-seed regret curves of one (algorithm, environment, T) cell, reduced
/// to quantiles at log-spaced rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretBand {
    pub label: String,
    /// (t, q10, median, q90)
    pub points: Vec<(usize, f64, f64, f64)>,
}

impl RegretBand {
    /// `curves` come from [`sample_curve`] on traces of one horizon.
    pub fn from_curves(label: &str, curves: &[Vec<(usize, f64)>]) -> Self {
        let len = curves.iter().map(Vec::len).min().unwrap_or(0);
        let points = (0..len)
            .map(|i| {
                let mut v: Vec<f64> = curves.iter().map(|c| c[i].1).collect();
                v.sort_by(f64::total_cmp);
                (curves[0][i].0, quantile_sorted(&v, 0.1), quantile_sorted(&v, 0.5), quantile_sorted(&v, 0.9))
            })
            .collect();
        Self { label: label.into(), points }
    }

    pub fn from_traces(label: &str, traces: &[Trace]) -> Self {
        let curves: Vec<_> = traces.iter().map(sample_curve).collect();
        Self::from_curves(label, &curves)
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Static SVG: cumulative regret against log t, one median line and one
/// q10–q90 band per series.
pub fn render_svg(bands: &[RegretBand]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 180.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let t_max = bands.iter().flat_map(|b| b.points.iter().map(|p| p.0)).max().unwrap_or(1).max(2) as f64;
    let y_max = bands.iter().flat_map(|b| b.points.iter().map(|p| p.3)).fold(0.0f64, f64::max);
    let y_min = bands.iter().flat_map(|b| b.points.iter().map(|p| p.1)).fold(0.0f64, f64::min);
    let span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let sx = |t: usize| left + (t as f64).ln() / t_max.ln() * pw;
    let sy = |v: f64| top + ph - (v - y_min) / span * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444" stroke-width="1"/>"##
    );
    let mut decade = 1usize;
    while decade as f64 <= t_max {
        let x = sx(decade);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{decade}</text>"##,
            top,
            top + ph,
            top + ph + 16.0
        );
        decade *= 10;
    }
    for k in 0..=4 {
        let v = y_min + span * k as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.1}</text>"#,
            left - 6.0,
            y + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">round t (log scale)</text>"#,
        left + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">cumulative regret</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, b) in bands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if b.points.is_empty() {
            continue;
        }
        let upper: Vec<String> = b.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.3))).collect();
        let lower: Vec<String> = b.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let median: Vec<String> = b.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.2))).collect();
        let _ =
            writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, median.join(" "));
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 18.0,
            lx + 24.0,
            ly + 4.0,
            xml_escape(&b.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
