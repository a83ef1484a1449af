use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use crate::geometry::ControlFrame;
use crate::pipeline::AverageTrajectory;

use super::live::{LiveError, LiveLoop};
use super::pairing::Pairer;
use super::session::{ResumeState, SessionError, SessionHeader, SessionRecord, SessionWriter};
use super::source::{CaptureSource, EventListSource, SourceError, SourceEvent};
use super::stream::{Hub, StreamMessage};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Live(#[from] LiveError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("no control orientation: calibrate first or pass a control file")]
    CalibrationMissing,
}

/// Receives everything a running session produces.
pub trait SessionSink {
    fn event(&mut self, _e: &SourceEvent) -> Result<(), ServiceError> {
        Ok(())
    }
    fn message(&mut self, m: &StreamMessage) -> Result<(), ServiceError>;
}

impl SessionSink for Hub {
    fn message(&mut self, m: &StreamMessage) -> Result<(), ServiceError> {
        self.publish(m.clone());
        Ok(())
    }
}

impl SessionSink for Vec<StreamMessage> {
    fn message(&mut self, m: &StreamMessage) -> Result<(), ServiceError> {
        self.push(m.clone());
        Ok(())
    }
}

impl<W: Write> SessionSink for SessionWriter<W> {
    fn event(&mut self, e: &SourceEvent) -> Result<(), ServiceError> {
        Ok(SessionWriter::event(self, e)?)
    }
    fn message(&mut self, m: &StreamMessage) -> Result<(), ServiceError> {
        Ok(SessionWriter::message(self, m)?)
    }
}

/// Change to the recording state requested from outside the session thread.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordingRequest {
    Start(PathBuf),
    Stop,
}

/// Requests delivered to a running session from other threads. Each is
/// applied before the session's next event.
#[derive(Debug, Default)]
pub struct SessionControls {
    stop: AtomicBool,
    pending_references: Mutex<Option<Vec<AverageTrajectory<f64>>>>,
    pending_recording: Mutex<Option<RecordingRequest>>,
}

impl SessionControls {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn request_stop(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    pub fn stop_requested(&self) -> bool {
        self.stop.load(Ordering::SeqCst)
    }

    pub fn replace_references(&self, refs: Vec<AverageTrajectory<f64>>) {
        *self.pending_references.lock().expect("controls lock") = Some(refs);
    }

    pub fn request_recording(&self, req: RecordingRequest) {
        *self.pending_recording.lock().expect("controls lock") = Some(req);
    }
}

/// Picks the control orientation: an explicit one, else what the source
/// carries (mock and recorded sessions), else none.
pub fn resolve_control(
    explicit: Option<ControlFrame<f64>>,
    source: &dyn CaptureSource,
) -> Result<ControlFrame<f64>, ServiceError> {
    explicit
        .or_else(|| source.control_hint())
        .ok_or(ServiceError::CalibrationMissing)
}

/// A live loop bound to its input pairing and optional session recorder.
pub struct Runner {
    pub live: LiveLoop,
    pairer: Pairer,
    source_name: String,
    recorder: Option<(PathBuf, SessionWriter<BufWriter<File>>)>,
}

impl Runner {
    pub fn new(live: LiveLoop, source_name: impl Into<String>) -> Self {
        Self {
            live,
            pairer: Pairer::new(),
            source_name: source_name.into(),
            recorder: None,
        }
    }

    /// Runner in the exact state a recorded session started from.
    pub fn for_record(record: &SessionRecord) -> Result<Self, LiveError> {
        let h = &record.header;
        let (live, pairer) = match &h.resume {
            Some(r) => (
                LiveLoop::resume(h.config, h.control, &r.live)?,
                Pairer::with_held(r.held_palm),
            ),
            None => {
                let mut live = LiveLoop::new(h.config, h.control)?;
                if let Some(t) = h.bar_anchor_t {
                    live = live.with_bar_anchor(t);
                }
                (live, Pairer::new())
            }
        };
        let mut live = live;
        live.set_references(h.references.clone())?;
        Ok(Self {
            live,
            pairer,
            source_name: h.source.clone(),
            recorder: None,
        })
    }

    /// Header describing the current state, for a recording starting now.
    pub fn header(&self) -> SessionHeader {
        let fresh = self.live.processed() == 0 && self.pairer.held().is_none();
        SessionHeader {
            config: *self.live.config(),
            control: *self.live.control(),
            source: self.source_name.clone(),
            bar_anchor_t: self.live.bar_anchor(),
            references: self.live.references().to_vec(),
            resume: (!fresh).then(|| ResumeState {
                live: self.live.snapshot(),
                held_palm: self.pairer.held(),
            }),
        }
    }

    pub fn start_recording(&mut self, path: PathBuf) -> Result<(), ServiceError> {
        self.stop_recording()?;
        let writer = SessionWriter::create(&path, &self.header())?;
        self.recorder = Some((path, writer));
        Ok(())
    }

    pub fn stop_recording(&mut self) -> Result<Option<PathBuf>, ServiceError> {
        match self.recorder.take() {
            Some((path, w)) => {
                w.into_inner()?;
                Ok(Some(path))
            }
            None => Ok(None),
        }
    }

    pub fn recording(&self) -> Option<&PathBuf> {
        self.recorder.as_ref().map(|(p, _)| p)
    }

    fn broadcast(
        &mut self,
        sinks: &mut [&mut dyn SessionSink],
        m: &StreamMessage,
    ) -> Result<(), ServiceError> {
        if let Some((_, w)) = self.recorder.as_mut() {
            SessionSink::message(w, m)?;
        }
        for s in sinks.iter_mut() {
            s.message(m)?;
        }
        Ok(())
    }

    fn apply_controls(
        &mut self,
        controls: &SessionControls,
        sinks: &mut [&mut dyn SessionSink],
    ) -> Result<(), ServiceError> {
        let refs = controls.pending_references.lock().expect("controls lock").take();
        if let Some(refs) = refs {
            let msg = match self.live.set_references(refs) {
                Ok(()) => StreamMessage::status(format!("{} references loaded", self.live.references().len())),
                Err(e) => StreamMessage::status(format!("references rejected: {e}")),
            };
            self.broadcast(sinks, &msg)?;
        }
        let rec = controls.pending_recording.lock().expect("controls lock").take();
        if let Some(req) = rec {
            let msg = match req {
                RecordingRequest::Start(path) => match self.start_recording(path.clone()) {
                    Ok(()) => StreamMessage::status(format!("recording to {}", path.display())),
                    Err(e) => StreamMessage::status(format!("recording failed: {e}")),
                },
                RecordingRequest::Stop => match self.stop_recording()? {
                    Some(path) => StreamMessage::status(format!("recording saved to {}", path.display())),
                    None => StreamMessage::status("not recording"),
                },
            };
            self.broadcast(sinks, &msg)?;
        }
        Ok(())
    }

    /// Drains a source through the live loop, handing every raw event and
    /// output message to the recorder and each sink. Returns the number of
    /// paired samples processed.
    ///
    /// A source failure is reported to the sinks as a status message before
    /// the error is returned. Any recording is finished either way.
    pub fn run(
        &mut self,
        source: &mut dyn CaptureSource,
        sinks: &mut [&mut dyn SessionSink],
        controls: &SessionControls,
    ) -> Result<usize, ServiceError> {
        let outcome = self.pump(source, sinks, controls);
        let closed = self.stop_recording();
        let count = outcome?;
        closed?;
        Ok(count)
    }

    fn pump(
        &mut self,
        source: &mut dyn CaptureSource,
        sinks: &mut [&mut dyn SessionSink],
        controls: &SessionControls,
    ) -> Result<usize, ServiceError> {
        let mut count = 0;
        while !controls.stop_requested() {
            self.apply_controls(controls, sinks)?;
            let event = match source.next_event() {
                Ok(Some(e)) => e,
                Ok(None) => break,
                Err(e) => {
                    self.broadcast(sinks, &StreamMessage::status(format!("source disconnected: {e}")))?;
                    return Err(e.into());
                }
            };
            if let Some((_, w)) = self.recorder.as_mut() {
                SessionSink::event(w, &event)?;
            }
            for s in sinks.iter_mut() {
                s.event(&event)?;
            }
            let paired = match event {
                SourceEvent::Palm(p) => {
                    self.pairer.push_palm(p);
                    None
                }
                SourceEvent::Imu(i) => self.pairer.push_imu(i),
            };
            if let Some(p) = paired {
                for m in self.live.process(&p)? {
                    self.broadcast(sinks, &m)?;
                }
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Reruns a recorded session and returns the messages it produces.
pub fn replay_session(record: &SessionRecord) -> Result<Vec<StreamMessage>, ServiceError> {
    let mut runner = Runner::for_record(record)?;
    let mut source = EventListSource::new(record.events.clone(), record.header.bar_anchor_t, false);
    let mut out = Vec::new();
    runner.run(&mut source, &mut [&mut out], &SessionControls::new())?;
    Ok(out)
}
