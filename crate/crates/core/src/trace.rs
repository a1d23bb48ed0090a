//! Digital signal traces and their CSV and VCD file formats.
//!
//! CSV has a header `time_s,level` (one net) or `net,time_s,level` (several
//! nets). The first row of every net gives its initial level; its time is
//! the trace start and carries no transition. VCD is read and written for
//! scalar wires only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("net {net}: {message}")]
    Malformed { net: String, message: String },
    #[error("unsupported trace format for {0} (expected .csv or .vcd)")]
    UnknownFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err(line: u64, message: impl Into<String>) -> TraceError {
    TraceError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub time: f64,
    pub level: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub net: String,
    pub initial_level: bool,
    pub transitions: Vec<Transition>,
}

impl Trace {
    pub fn constant(net: impl Into<String>, level: bool) -> Trace {
        Trace { net: net.into(), initial_level: level, transitions: Vec::new() }
    }

    /// Trace that toggles at each of `times`.
    pub fn from_toggle_times(net: impl Into<String>, initial_level: bool, times: &[f64]) -> Trace {
        let mut level = initial_level;
        let transitions = times
            .iter()
            .map(|&time| {
                level = !level;
                Transition { time, level }
            })
            .collect();
        Trace { net: net.into(), initial_level, transitions }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.transitions.iter().map(|t| t.time)
    }

    pub fn final_level(&self) -> bool {
        self.transitions.last().map_or(self.initial_level, |t| t.level)
    }

    /// Level at `t`; a transition at exactly `t` has already happened.
    pub fn level_at(&self, t: f64) -> bool {
        let n = self.transitions.partition_point(|tr| tr.time <= t);
        if n == 0 {
            self.initial_level
        } else {
            self.transitions[n - 1].level
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |message: String| TraceError::Malformed { net: self.net.clone(), message };
        let mut level = self.initial_level;
        let mut last = f64::NEG_INFINITY;
        for (k, tr) in self.transitions.iter().enumerate() {
            if !tr.time.is_finite() {
                return Err(bad(format!("transition {k} has non-finite time")));
            }
            if tr.time <= last {
                return Err(bad(format!("transition {k} at {:e} s is not after {:e} s", tr.time, last)));
            }
            if tr.level == level {
                return Err(bad(format!("transition {k} does not change the level")));
            }
            level = tr.level;
            last = tr.time;
        }
        Ok(())
    }

    /// Trace start used for the CSV initial row and the VCD dump.
    pub fn start_time(&self) -> f64 {
        self.transitions.first().map_or(0.0, |t| t.time.min(0.0))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NetRow {
    net: String,
    time_s: f64,
    level: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlainRow {
    time_s: f64,
    level: u8,
}

fn level_of(v: u8, line: u64) -> Result<bool, TraceError> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(parse_err(line, format!("level must be 0 or 1, got {other}"))),
    }
}

/// Parses CSV; `default_net` names the trace of a single-net file.
pub fn read_csv(text: &str, default_net: &str) -> Result<Vec<Trace>, TraceError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let multi = headers.iter().any(|h| h == "net");
    let mut order: Vec<String> = Vec::new();
    let mut builders: BTreeMap<String, Trace> = BTreeMap::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let (net, time, level) = if multi {
            let row: NetRow = record.deserialize(Some(&headers)).map_err(|e| parse_err(line, e.to_string()))?;
            (row.net, row.time_s, level_of(row.level, line)?)
        } else {
            let row: PlainRow = record.deserialize(Some(&headers)).map_err(|e| parse_err(line, e.to_string()))?;
            (default_net.to_string(), row.time_s, level_of(row.level, line)?)
        };
        if !time.is_finite() {
            return Err(parse_err(line, "time must be finite"));
        }
        match builders.get_mut(&net) {
            None => {
                order.push(net.clone());
                builders.insert(net.clone(), Trace::constant(net, level));
            }
            Some(trace) => {
                let last = trace.transitions.last().map(|t| t.time);
                if last.is_some_and(|l| time <= l) {
                    return Err(parse_err(line, format!("time {time:e} is not increasing")));
                }
                if level == trace.final_level() {
                    return Err(parse_err(line, "level does not change"));
                }
                trace.transitions.push(Transition { time, level });
            }
        }
    }
    Ok(order.into_iter().map(|n| builders.remove(&n).expect("net recorded")).collect())
}

pub fn write_csv(traces: &[Trace]) -> Result<String, TraceError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let u = |b: bool| b as u8;
    if let [trace] = traces {
        writer.serialize(PlainRow { time_s: trace.start_time(), level: u(trace.initial_level) })?;
        for tr in &trace.transitions {
            writer.serialize(PlainRow { time_s: tr.time, level: u(tr.level) })?;
        }
    } else {
        for trace in traces {
            let net = trace.net.clone();
            writer.serialize(NetRow { net: net.clone(), time_s: trace.start_time(), level: u(trace.initial_level) })?;
            for tr in &trace.transitions {
                writer.serialize(NetRow { net: net.clone(), time_s: tr.time, level: u(tr.level) })?;
            }
        }
    }
    let bytes = writer.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn timescale_seconds(spec: &str, line: u64) -> Result<f64, TraceError> {
    let spec = spec.trim();
    let split = spec.find(|c: char| !c.is_ascii_digit()).unwrap_or(spec.len());
    let (num, unit) = spec.split_at(split);
    let mult: f64 = num.parse().map_err(|_| parse_err(line, format!("bad timescale {spec:?}")))?;
    let unit = match unit.trim() {
        "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "fs" => 1e-15,
        other => return Err(parse_err(line, format!("bad timescale unit {other:?}"))),
    };
    Ok(mult * unit)
}

/// Reads the scalar wires of a VCD file. X and Z values are rejected.
pub fn read_vcd(text: &str) -> Result<Vec<Trace>, TraceError> {
    // (line, token) stream, so that errors can point to a line
    let tokens: Vec<(u64, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i as u64 + 1, t)))
        .collect();
    let mut idx = 0;
    let mut timescale = 1e-9;
    let mut ids: Vec<(String, String)> = Vec::new();
    let mut traces: BTreeMap<String, Option<Trace>> = BTreeMap::new();
    let mut now: Option<f64> = None;
    let mut in_header = true;

    let until_end = |idx: &mut usize| -> Result<Vec<&str>, TraceError> {
        let mut body = Vec::new();
        while *idx < tokens.len() {
            let (_, tok) = tokens[*idx];
            *idx += 1;
            if tok == "$end" {
                return Ok(body);
            }
            body.push(tok);
        }
        Err(parse_err(tokens.last().map_or(0, |t| t.0), "missing $end"))
    };

    while idx < tokens.len() {
        let (line, tok) = tokens[idx];
        idx += 1;
        match tok {
            "$timescale" => timescale = timescale_seconds(&until_end(&mut idx)?.concat(), line)?,
            "$var" => {
                let body = until_end(&mut idx)?;
                if body.len() < 4 {
                    return Err(parse_err(line, "incomplete $var"));
                }
                if body[1] != "1" {
                    return Err(parse_err(line, format!("only 1-bit wires are supported, got width {}", body[1])));
                }
                let name = body[3].to_string();
                ids.push((body[2].to_string(), name.clone()));
                traces.insert(body[2].to_string(), None);
            }
            "$enddefinitions" => {
                until_end(&mut idx)?;
                in_header = false;
            }
            "$dumpvars" | "$dumpall" | "$dumpon" | "$dumpoff" | "$end" => {}
            t if t.starts_with('$') => {
                until_end(&mut idx)?;
            }
            t if t.starts_with('#') => {
                let ticks: f64 = t[1..].parse().map_err(|_| parse_err(line, format!("bad time {t:?}")))?;
                now = Some(ticks * timescale);
            }
            t if !in_header => {
                let (value, id) = t.split_at(1);
                let level = match value {
                    "0" => false,
                    "1" => true,
                    "x" | "X" | "z" | "Z" => return Err(parse_err(line, format!("unsupported value {value:?}"))),
                    _ => return Err(parse_err(line, format!("unsupported value change {t:?}"))),
                };
                let slot = traces.get_mut(id).ok_or_else(|| parse_err(line, format!("unknown identifier {id:?}")))?;
                let time = now.ok_or_else(|| parse_err(line, "value change before the first timestamp"))?;
                match slot {
                    None => {
                        let name = &ids.iter().find(|(i, _)| i == id).expect("declared").1;
                        *slot = Some(Trace::constant(name.clone(), level));
                    }
                    Some(trace) if trace.final_level() != level => {
                        trace.transitions.push(Transition { time, level });
                    }
                    // repeated value, e.g. in $dumpall
                    Some(_) => {}
                }
            }
            other => return Err(parse_err(line, format!("unexpected token {other:?}"))),
        }
    }
    let mut out = Vec::with_capacity(ids.len());
    for (id, name) in ids {
        let trace = traces
            .remove(&id)
            .flatten()
            .ok_or_else(|| TraceError::Malformed { net: name.clone(), message: "no initial value".into() })?;
        trace.validate()?;
        out.push(trace);
    }
    Ok(out)
}

/// Writes a VCD with a 1 fs timescale.
pub fn write_vcd(traces: &[Trace]) -> String {
    const FS: f64 = 1e-15;
    let id = |k: usize| {
        // printable identifiers '!'..'~', base 94
        let mut k = k;
        let mut s = String::new();
        loop {
            s.push((b'!' + (k % 94) as u8) as char);
            k /= 94;
            if k == 0 {
                break s;
            }
        }
    };
    let mut out = String::new();
    out.push_str("$timescale 1fs $end\n$scope module top $end\n");
    for (k, trace) in traces.iter().enumerate() {
        let _ = writeln!(out, "$var wire 1 {} {} $end", id(k), trace.net);
    }
    out.push_str("$upscope $end\n$enddefinitions $end\n");
    let start = traces.iter().map(Trace::start_time).fold(0.0, f64::min);
    let _ = writeln!(out, "#{}", (start / FS).round() as i64);
    out.push_str("$dumpvars\n");
    for (k, trace) in traces.iter().enumerate() {
        let _ = writeln!(out, "{}{}", trace.initial_level as u8, id(k));
    }
    out.push_str("$end\n");
    let mut changes: Vec<(i64, usize, bool)> = traces
        .iter()
        .enumerate()
        .flat_map(|(k, t)| t.transitions.iter().map(move |tr| ((tr.time / FS).round() as i64, k, tr.level)))
        .collect();
    changes.sort_by_key(|&(t, k, _)| (t, k));
    let mut current = None;
    for (t, k, level) in changes {
        if current != Some(t) {
            let _ = writeln!(out, "#{t}");
            current = Some(t);
        }
        let _ = writeln!(out, "{}{}", level as u8, id(k));
    }
    out
}

fn format_of(path: &Path) -> Result<&'static str, TraceError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok("csv"),
        Some("vcd") => Ok("vcd"),
        _ => Err(TraceError::UnknownFormat(path.display().to_string())),
    }
}

/// Reads a `.csv` or `.vcd` file; a single-net CSV is named after the file
/// stem.
pub fn read_traces(path: &Path) -> Result<Vec<Trace>, TraceError> {
    let format = format_of(path)?;
    let text = std::fs::read_to_string(path)?;
    let traces = if format == "csv" {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        read_csv(&text, stem)?
    } else {
        read_vcd(&text)?
    };
    for t in &traces {
        t.validate()?;
    }
    Ok(traces)
}

pub fn write_traces(path: &Path, traces: &[Trace]) -> Result<(), TraceError> {
    let text = match format_of(path)? {
        "csv" => write_csv(traces)?,
        _ => write_vcd(traces),
    };
    std::fs::write(path, text)?;
    Ok(())
}
