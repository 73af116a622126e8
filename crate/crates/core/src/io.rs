//! Line-oriented text format for CIR recordings.
//!
//! ```text
//! # cirfuse-recording v1 n_bins=96 nominal_rate_hz=19.3 ground_truth_hz=0.3 channel=uwb-ch2-like
//! <t> <re_0> <im_0> <re_1> <im_1> ...
//! ```
//!
//! `ground_truth_hz` and `channel` may be `none`. Numbers are written with
//! 17 significant digits, which reproduces every finite `f64` exactly.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{CirRecording, CirSnapshot, RecordingMeta};

const MAGIC: &str = "# cirfuse-recording v1";

pub fn write_recording<W: Write>(rec: &CirRecording, mut out: W) -> Result<()> {
    let truth = rec
        .meta
        .ground_truth_hz
        .map_or_else(|| "none".to_string(), |f| format!("{f:.16e}"));
    writeln!(
        out,
        "{MAGIC} n_bins={} nominal_rate_hz={:.16e} ground_truth_hz={truth} channel={}",
        rec.meta.n_bins,
        rec.nominal_rate_hz,
        rec.meta.channel.as_deref().unwrap_or("none"),
    )?;
    let mut line = String::new();
    for s in &rec.snapshots {
        line.clear();
        line.push_str(&format!("{:.16e}", s.timestamp_s));
        for v in &s.bins {
            line.push_str(&format!(" {:.16e} {:.16e}", v.re, v.im));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn recording_to_string(rec: &CirRecording) -> String {
    let mut buf = Vec::new();
    write_recording(rec, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("recording text is ASCII")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(RecordingMeta, f64)> {
    let rest = line
        .strip_prefix(MAGIC)
        .ok_or_else(|| parse_err(1, format!("header must start with `{MAGIC}`")))?;
    let mut n_bins = None;
    let mut rate = None;
    let mut truth = None;
    let mut channel = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header field `{token}`")))?;
        let number = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| parse_err(1, format!("`{key}` is not a number: `{v}`")))
        };
        match key {
            "n_bins" => {
                n_bins = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| parse_err(1, format!("bad n_bins `{value}`")))?,
                )
            }
            "nominal_rate_hz" => rate = Some(number(value)?),
            "ground_truth_hz" => {
                truth = Some(if value == "none" {
                    None
                } else {
                    Some(number(value)?)
                })
            }
            "channel" => channel = Some((value != "none").then(|| value.to_string())),
            _ => return Err(parse_err(1, format!("unknown header field `{key}`"))),
        }
    }
    let n_bins = n_bins.ok_or_else(|| parse_err(1, "header is missing `n_bins`"))?;
    let rate = rate.ok_or_else(|| parse_err(1, "header is missing `nominal_rate_hz`"))?;
    Ok((
        RecordingMeta {
            n_bins,
            ground_truth_hz: truth.flatten(),
            channel: channel.flatten(),
        },
        rate,
    ))
}

pub fn read_recording<R: BufRead>(input: R) -> Result<CirRecording> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let (meta, nominal_rate_hz) = parse_header(&header)?;
    let mut snapshots = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(line_no, format!("`{t}` is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != 1 + 2 * meta.n_bins {
            return Err(parse_err(
                line_no,
                format!(
                    "expected {} numbers (timestamp + {} complex bins), found {}",
                    1 + 2 * meta.n_bins,
                    meta.n_bins,
                    values.len()
                ),
            ));
        }
        snapshots.push(CirSnapshot {
            timestamp_s: values[0],
            bins: values[1..]
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        });
    }
    let rec = CirRecording {
        snapshots,
        nominal_rate_hz,
        meta,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn recording_from_str(text: &str) -> Result<CirRecording> {
    read_recording(text.as_bytes())
}
