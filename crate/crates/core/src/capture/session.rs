//! Session files.
//!
//! ```text
//! baton-session 1
//! 412 {"kind":"header",...}
//! 88 {"kind":"imu",...}
//! ```
//!
//! After the version line, each line is the byte length of a JSON record, a
//! space, the record, and `\n`. The header record comes first; raw samples
//! follow in arrival order, interleaved with the poses and bar results they
//! produced.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::ClassificationResult;
use crate::geometry::ControlFrame;
use crate::pipeline::{AverageTrajectory, CaptureFrame, CaptureSequence, PipelineError, SequenceMeta};

use super::config::Config;
use super::live::LiveSnapshot;
use super::source::SourceEvent;
use super::stream::StreamMessage;

pub const SESSION_MAGIC: &str = "baton-session";
pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("session format version {found} is not supported (expected {SESSION_VERSION})")]
    SchemaVersionMismatch { found: String },
    #[error("session file damaged at byte {offset}: {reason}")]
    IoFailure { offset: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything needed to rerun a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub config: Config,
    pub control: ControlFrame<f64>,
    pub source: String,
    pub bar_anchor_t: Option<f64>,
    pub references: Vec<AverageTrajectory<f64>>,
    /// State of the loop when recording began mid-session; `None` for a
    /// recording that starts with the session.
    pub resume: Option<ResumeState>,
}

/// Live state captured when a recording starts part-way through a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumeState {
    pub live: LiveSnapshot,
    pub held_palm: Option<CaptureFrame<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header(SessionHeader),
    Imu(crate::fusion::ImuSample<f64>),
    Palm(CaptureFrame<f64>),
    Tip(CaptureFrame<f64>),
    Bar {
        bar_index: usize,
        result: ClassificationResult<f64>,
    },
}

/// A loaded session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub header: SessionHeader,
    /// Raw samples in arrival order.
    pub events: Vec<SourceEvent>,
    /// Smoothed tip positions as they were emitted.
    pub tip: Vec<CaptureFrame<f64>>,
    pub bars: Vec<(usize, ClassificationResult<f64>)>,
}

impl SessionRecord {
    /// Emitted tip path as a capture sequence timed by the session's tempo.
    pub fn tip_sequence(&self) -> Result<CaptureSequence<f64>, PipelineError> {
        let meta = SequenceMeta {
            tempo_bpm: self.header.config.tempo_bpm,
            beats_per_bar: self.header.config.beats_per_bar,
            label: None,
            start_anchor_t: self.header.bar_anchor_t,
        };
        CaptureSequence::new(self.tip.clone(), meta)
    }
}

/// Appends records to a session file as a session runs.
pub struct SessionWriter<W: Write> {
    out: W,
}

impl SessionWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, header: &SessionHeader) -> Result<Self, SessionError> {
        Self::new(BufWriter::new(File::create(path)?), header)
    }
}

impl<W: Write> SessionWriter<W> {
    pub fn new(mut out: W, header: &SessionHeader) -> Result<Self, SessionError> {
        writeln!(out, "{SESSION_MAGIC} {SESSION_VERSION}")?;
        let mut w = Self { out };
        w.put(&Record::Header(header.clone()))?;
        Ok(w)
    }

    fn put(&mut self, r: &Record) -> Result<(), SessionError> {
        let json = serde_json::to_string(r).expect("session records always serialize");
        writeln!(self.out, "{} {}", json.len(), json)?;
        Ok(())
    }

    pub fn event(&mut self, e: &SourceEvent) -> Result<(), SessionError> {
        self.put(&match *e {
            SourceEvent::Imu(s) => Record::Imu(s),
            SourceEvent::Palm(p) => Record::Palm(p),
        })
    }

    /// Records poses and bar results; status messages are not kept.
    pub fn message(&mut self, m: &StreamMessage) -> Result<(), SessionError> {
        match m {
            StreamMessage::Pose { t, tip, .. } => self.put(&Record::Tip(CaptureFrame::new(*t, *tip))),
            StreamMessage::BarAnalysis { bar_index, result } => self.put(&Record::Bar {
                bar_index: *bar_index,
                result: result.clone(),
            }),
            StreamMessage::Status { .. } => Ok(()),
        }
    }

    pub fn flush(&mut self) -> Result<(), SessionError> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(mut self) -> Result<W, SessionError> {
        self.flush()?;
        Ok(self.out)
    }
}

pub fn load_session(path: impl AsRef<Path>) -> Result<SessionRecord, SessionError> {
    read_session(File::open(path)?)
}

pub fn read_session(reader: impl Read) -> Result<SessionRecord, SessionError> {
    let mut reader = BufReader::new(reader);
    let mut offset: u64 = 0;
    let damaged = |offset: u64, reason: &str| SessionError::IoFailure {
        offset,
        reason: reason.to_owned(),
    };

    let mut line = Vec::new();
    let n = reader.read_until(b'\n', &mut line)?;
    let first = String::from_utf8_lossy(&line);
    let version = first.trim_end().strip_prefix(SESSION_MAGIC).map(str::trim);
    match version {
        Some(v) if v == SESSION_VERSION.to_string() => {}
        Some(v) => return Err(SessionError::SchemaVersionMismatch { found: v.to_owned() }),
        None => return Err(damaged(0, "not a session file")),
    }
    if !line.ends_with(b"\n") {
        return Err(damaged(n as u64, "truncated after version line"));
    }
    offset += n as u64;

    let mut header = None;
    let mut rec = SessionRecord {
        header: SessionHeader {
            config: Config::default(),
            control: ControlFrame::identity(),
            source: String::new(),
            bar_anchor_t: None,
            references: Vec::new(),
            resume: None,
        },
        events: Vec::new(),
        tip: Vec::new(),
        bars: Vec::new(),
    };
    loop {
        line.clear();
        let n = reader.read_until(b'\n', &mut line)?;
        if n == 0 {
            break;
        }
        if !line.ends_with(b"\n") {
            return Err(damaged(offset, "truncated record"));
        }
        let body = &line[..line.len() - 1];
        let space = body
            .iter()
            .position(|&c| c == b' ')
            .ok_or_else(|| damaged(offset, "missing length prefix"))?;
        let len: usize = std::str::from_utf8(&body[..space])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| damaged(offset, "bad length prefix"))?;
        let json = &body[space + 1..];
        if json.len() != len {
            return Err(damaged(offset, "record length does not match prefix"));
        }
        let record: Record =
            serde_json::from_slice(json).map_err(|e| damaged(offset + space as u64 + 1, &e.to_string()))?;
        match record {
            Record::Header(h) if header.is_none() => header = Some(h),
            Record::Header(_) => return Err(damaged(offset, "second header record")),
            _ if header.is_none() => return Err(damaged(offset, "record before header")),
            Record::Imu(s) => rec.events.push(SourceEvent::Imu(s)),
            Record::Palm(p) => rec.events.push(SourceEvent::Palm(p)),
            Record::Tip(f) => rec.tip.push(f),
            Record::Bar { bar_index, result } => rec.bars.push((bar_index, result)),
        }
        offset += n as u64;
    }
    rec.header = header.ok_or_else(|| damaged(offset, "missing header record"))?;
    Ok(rec)
}
