//! Record CSV: fixed leading columns, then `sinr_1..sinr_K` with `K` the
//! largest user count among the records (shorter rows leave trailing cells
//! empty). Reals carry 9 significant digits.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::experiment::{Scheme, TrialRecord, TrialStatus};

const FIXED: [&str; 12] =
    ["axis", "trial", "seed", "scheme", "status", "t", "balanced_level", "p_b", "p_r", "sum_power", "outer_iters", "inner_iters"];

/// `x` rounded to 9 significant digits, in the shortest plain or scientific
/// form.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let fixed = format!("{x:.*}", (8 - exp) as usize);
        return trim(&fixed).to_string();
    }
    format!("{}e{exp}", trim(mantissa))
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV row as written.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub axis: f64,
    pub trial: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub status: TrialStatus,
    pub t: f64,
    pub balanced_level: f64,
    pub p_b: f64,
    pub p_r: f64,
    pub sum_power: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub sinr: Vec<f64>,
}

impl From<&TrialRecord> for CsvRow {
    fn from(r: &TrialRecord) -> Self {
        Self {
            axis: r.axis,
            trial: r.trial,
            seed: r.seed,
            scheme: r.scheme,
            status: r.status,
            t: r.t,
            balanced_level: r.balanced_level,
            p_b: r.p_b,
            p_r: r.p_r,
            sum_power: r.sum_power,
            outer_iters: r.outer_iters(),
            inner_iters: r.inner_iters,
            sinr: r.sinr.clone(),
        }
    }
}

fn header(k: usize) -> Vec<String> {
    FIXED.iter().map(|s| s.to_string()).chain((1..=k).map(|i| format!("sinr_{i}"))).collect()
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let k = records.iter().map(|r| r.sinr.len()).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(false).terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header(k)).map_err(io)?;
    for r in records {
        let mut row = vec![
            format_sig(r.axis),
            r.trial.to_string(),
            r.seed.to_string(),
            r.scheme.to_string(),
            r.status.to_string(),
            format_sig(r.t),
            format_sig(r.balanced_level),
            format_sig(r.p_b),
            format_sig(r.p_r),
            format_sig(r.sum_power),
            r.outer_iters().to_string(),
            r.inner_iters.to_string(),
        ];
        row.extend(r.sinr.iter().map(|&s| format_sig(s)));
        row.resize(FIXED.len() + k, String::new());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let bad = |m: String| Error::Config(m);
    let head = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    let k = head.len().checked_sub(FIXED.len()).ok_or_else(|| bad("header is too short".into()))?;
    if head.iter().map(str::to_string).collect::<Vec<_>>() != header(k) {
        return Err(bad("unexpected header".into()));
    }
    let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(CsvRow {
            axis: real(f[0])?,
            trial: int(f[1])?,
            seed: f[2].parse().map_err(|e| bad(format!("{:?}: {e}", f[2])))?,
            scheme: f[3].parse()?,
            status: f[4].parse()?,
            t: real(f[5])?,
            balanced_level: real(f[6])?,
            p_b: real(f[7])?,
            p_r: real(f[8])?,
            sum_power: real(f[9])?,
            outer_iters: int(f[10])?,
            inner_iters: int(f[11])?,
            sinr: f[FIXED.len()..].iter().filter(|s| !s.is_empty()).map(|s| real(s)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_csv(&std::fs::read_to_string(path)?)
}
