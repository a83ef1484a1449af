//! Capture CSV format.
//!
//! ```text
//! unit,mm
//! frame,t,x,y,z
//! 0,0.0,12.5,350.0,-4.25
//! ```
//!
//! Line 1 declares the length unit (`m` or `mm`), line 2 is the fixed column
//! header, every following line is an integer frame number, seconds, and
//! three coordinates in the declared unit. Written files use `\n` line ends
//! and the shortest plain decimal that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{CaptureFrame, CaptureSequence, PipelineError, SequenceMeta};
use crate::geometry::Vec3;

const COLUMNS: [&str; 5] = ["frame", "t", "x", "y", "z"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthUnit {
    Meters,
    Millimeters,
}

impl LengthUnit {
    pub fn to_meters(self, v: f64) -> f64 {
        match self {
            LengthUnit::Meters => v,
            LengthUnit::Millimeters => v / 1000.0,
        }
    }

    pub fn from_meters(self, v: f64) -> f64 {
        match self {
            LengthUnit::Meters => v,
            LengthUnit::Millimeters => v * 1000.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LengthUnit::Meters => "m",
            LengthUnit::Millimeters => "mm",
        }
    }
}

impl FromStr for LengthUnit {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "m" => Ok(LengthUnit::Meters),
            "mm" => Ok(LengthUnit::Millimeters),
            other => Err(PipelineError::UnknownUnit(other.to_string())),
        }
    }
}

fn malformed(row: usize, reason: impl Into<String>) -> PipelineError {
    PipelineError::MalformedRow {
        row,
        reason: reason.into(),
    }
}

fn parse_field<V: FromStr>(rec: &csv::StringRecord, idx: usize, row: usize) -> Result<V, PipelineError> {
    let raw = &rec[idx];
    raw.parse::<V>()
        .map_err(|_| malformed(row, format!("column `{}` is not a number: `{raw}`", COLUMNS[idx])))
}

/// Parses a capture CSV. Rows are numbered by file line, starting at 1.
pub fn import_capture_csv<R: Read>(
    reader: R,
    meta: SequenceMeta<f64>,
) -> Result<CaptureSequence<f64>, PipelineError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let mut next_record = |expected_line: usize| -> Result<Option<(usize, csv::StringRecord)>, PipelineError> {
        match records.next() {
            None => Ok(None),
            Some(Err(e)) => {
                let row = e.position().map(|p| p.line() as usize).unwrap_or(expected_line);
                Err(malformed(row, e.to_string()))
            }
            Some(Ok(rec)) => {
                let row = rec.position().map(|p| p.line() as usize).unwrap_or(expected_line);
                Ok(Some((row, rec)))
            }
        }
    };

    let unit = match next_record(1)? {
        Some((_, rec)) if rec.len() == 2 && &rec[0] == "unit" => rec[1].parse::<LengthUnit>()?,
        Some((row, _)) => return Err(malformed(row, "expected `unit,<m|mm>` header")),
        None => return Err(malformed(1, "missing unit header")),
    };
    match next_record(2)? {
        Some((_, rec)) if rec.iter().eq(COLUMNS.iter().copied()) => {}
        Some((row, _)) => return Err(malformed(row, "expected `frame,t,x,y,z` header")),
        None => return Err(malformed(2, "missing column header")),
    }

    let mut frames: Vec<CaptureFrame<f64>> = Vec::new();
    let mut line = 2;
    while let Some((row, rec)) = next_record(line + 1)? {
        line = row;
        if rec.len() != COLUMNS.len() {
            return Err(malformed(row, format!("expected 5 fields, found {}", rec.len())));
        }
        let _frame: i64 = parse_field(&rec, 0, row)?;
        let t: f64 = parse_field(&rec, 1, row)?;
        let x: f64 = parse_field(&rec, 2, row)?;
        let y: f64 = parse_field(&rec, 3, row)?;
        let z: f64 = parse_field(&rec, 4, row)?;
        let pos = Vec3::new(unit.to_meters(x), unit.to_meters(y), unit.to_meters(z));
        if !t.is_finite() || !pos.is_finite() {
            return Err(malformed(row, "non-finite value"));
        }
        if let Some(prev) = frames.last() {
            if !(t > prev.t) {
                return Err(PipelineError::NonMonotonicTimestamps { row });
            }
        }
        frames.push(CaptureFrame::new(t, pos));
    }
    CaptureSequence::new(frames, meta)
}

pub fn read_capture_csv(
    path: impl AsRef<Path>,
    meta: SequenceMeta<f64>,
) -> Result<CaptureSequence<f64>, PipelineError> {
    import_capture_csv(BufReader::new(File::open(path)?), meta)
}

/// Writes frames in the capture CSV format, numbering frames from 0.
pub fn write_capture_csv<W: Write>(
    mut out: W,
    frames: &[CaptureFrame<f64>],
    unit: LengthUnit,
) -> Result<(), PipelineError> {
    writeln!(out, "unit,{}", unit.as_str())?;
    writeln!(out, "{}", COLUMNS.join(","))?;
    for (i, f) in frames.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{}",
            f.t,
            unit.from_meters(f.pos.x),
            unit.from_meters(f.pos.y),
            unit.from_meters(f.pos.z)
        )?;
    }
    out.flush()?;
    Ok(())
}
