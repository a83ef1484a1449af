//! Sample acquisition and session plumbing: synthetic corpora, stream
//! pairing, calibration, the live reconstruction loop, session files, and
//! the broadcast of results to display clients.

pub mod calibration;
pub mod config;
pub mod live;
pub mod pairing;
pub mod service;
pub mod session;
pub mod source;
pub mod stream;
pub mod synth;

pub use calibration::{calibrate_control, CalibrationError};
pub use config::{Config, ConfigError};
pub use live::{LiveError, LiveLoop, LiveSnapshot};
pub use pairing::{pair_streams, PairedSample, Pairer, PalmSample};
pub use service::{
    replay_session, resolve_control, RecordingRequest, Runner, ServiceError, SessionControls, SessionSink,
};
pub use session::{
    load_session, read_session, ResumeState, SessionError, SessionHeader, SessionRecord, SessionWriter,
};
pub use source::{CaptureSource, SourceDescriptor, SourceError, SourceEvent};
pub use stream::{Hub, Received, StreamMessage, Subscription};
pub use synth::{generate_paired, generate_synthetic, generate_with, Grip, PairedStreams, PerturbationSpec, SynthTiming};
