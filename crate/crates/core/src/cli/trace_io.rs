//! Trace files: CSV with a versioned comment line, or JSON lines.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Trace, TraceRecord, TRACE_COLUMNS};

pub const CSV_VERSION_LINE: &str = "# bintrack trace v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn format_error(line: usize, message: impl Into<String>) -> TraceReadError {
    TraceReadError::Format {
        line,
        message: message.into(),
    }
}

/// Formats `x` like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    // The exponent after rounding to the requested precision.
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..PRECISION).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(mut w: W, trace: &Trace) -> io::Result<()> {
    writeln!(w, "{CSV_VERSION_LINE}")?;
    writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
    for r in &trace.records {
        let row: Vec<String> = r.values().iter().map(|&v| format_g12(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Trace, TraceReadError> {
    let mut lines = r.lines();
    let version = lines.next().transpose()?.unwrap_or_default();
    if version.trim_end() != CSV_VERSION_LINE {
        return Err(format_error(
            1,
            format!("expected `{CSV_VERSION_LINE}`, found `{version}`"),
        ));
    }
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != TRACE_COLUMNS.join(",") {
        return Err(format_error(2, format!("unexpected header `{header}`")));
    }
    let mut trace = Trace::default();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 3;
        if line.trim().is_empty() {
            continue;
        }
        let mut values = [0.0; 15];
        let mut n = 0;
        for field in line.trim_end().split(',') {
            if n == values.len() {
                return Err(format_error(lineno, "too many fields"));
            }
            values[n] = field
                .parse()
                .map_err(|_| format_error(lineno, format!("bad number `{field}`")))?;
            n += 1;
        }
        if n != values.len() {
            return Err(format_error(
                lineno,
                format!("expected 15 fields, found {n}"),
            ));
        }
        trace.records.push(TraceRecord::from_values(&values));
    }
    Ok(trace)
}

/// One JSON object per record, keyed by the CSV column names.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    t: f64,
    plx: f64,
    ply: f64,
    prx: f64,
    pry: f64,
    ptx: f64,
    pty: f64,
    e1: f64,
    e2: f64,
    e3: f64,
    #[serde(rename = "V")]
    v: f64,
    vc: f64,
    veta: f64,
    vxi: f64,
    c: f64,
}

impl From<&TraceRecord> for JsonRecord {
    fn from(r: &TraceRecord) -> Self {
        let [t, plx, ply, prx, pry, ptx, pty, e1, e2, e3, v, vc, veta, vxi, c] = r.values();
        Self {
            t,
            plx,
            ply,
            prx,
            pry,
            ptx,
            pty,
            e1,
            e2,
            e3,
            v,
            vc,
            veta,
            vxi,
            c,
        }
    }
}

impl From<JsonRecord> for TraceRecord {
    fn from(j: JsonRecord) -> Self {
        TraceRecord::from_values(&[
            j.t, j.plx, j.ply, j.prx, j.pry, j.ptx, j.pty, j.e1, j.e2, j.e3, j.v, j.vc, j.veta,
            j.vxi, j.c,
        ])
    }
}

pub fn write_jsonl<W: Write>(mut w: W, trace: &Trace) -> io::Result<()> {
    for r in &trace.records {
        serde_json::to_writer(&mut w, &JsonRecord::from(r))?;
        writeln!(w)?;
    }
    w.flush()
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace, TraceReadError> {
    let mut trace = Trace::default();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord =
            serde_json::from_str(&line).map_err(|e| format_error(i + 1, e.to_string()))?;
        trace.records.push(rec.into());
    }
    Ok(trace)
}

pub fn write_trace<W: Write>(w: W, trace: &Trace, format: TraceFormat) -> io::Result<()> {
    match format {
        TraceFormat::Csv => write_csv(w, trace),
        TraceFormat::Jsonl => write_jsonl(w, trace),
    }
}

pub fn read_trace<R: BufRead>(r: R, format: TraceFormat) -> Result<Trace, TraceReadError> {
    match format {
        TraceFormat::Csv => read_csv(r),
        TraceFormat::Jsonl => read_jsonl(r),
    }
}
