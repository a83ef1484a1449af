//! Where live samples come from.
//!
//! Descriptor syntax:
//!
//! ```text
//! mock[:<class>[:<bars>]]     synthetic paired streams (default control, 4 bars)
//! replay:<session file>       samples recorded in a session, in arrival order
//! serial:<device>[@<baud>]    ASCII IMU lines `t,ax,ay,az,gx,gy,gz`
//! ```
//!
//! A serial IMU needs a separate palm source: `mock` or a capture CSV file
//! (`replay:<csv>`). Serial samples are stamped on arrival with the
//! receiver's monotonic clock.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::fusion::ImuSample;
use crate::geometry::{ControlFrame, Vec3};
use crate::movement::MovementClass;
use crate::pipeline::{read_capture_csv, SequenceMeta};

use super::pairing::PalmSample;
use super::session::{load_session, SessionError};
use super::synth::{generate_paired, Grip, PerturbationSpec, SynthTiming};

pub const DEFAULT_MOCK_BARS: usize = 4;
pub const DEFAULT_MOCK_SEED: u64 = 1;
pub const DEFAULT_BAUD: u32 = 115_200;

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("invalid source `{0}`")]
    InvalidDescriptor(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("source disconnected: {0}")]
    Disconnected(String),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One raw reading from a source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceEvent {
    Imu(ImuSample<f64>),
    Palm(PalmSample<f64>),
}

impl SourceEvent {
    pub fn t(&self) -> f64 {
        match self {
            SourceEvent::Imu(s) => s.t,
            SourceEvent::Palm(p) => p.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImuSourceKind {
    Mock { class: MovementClass, bars: usize },
    Replay(PathBuf),
    Serial { device: PathBuf, baud: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PalmSourceKind {
    Mock,
    Replay(PathBuf),
}

/// Parsed source selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDescriptor {
    pub imu: ImuSourceKind,
    pub palm: Option<PalmSourceKind>,
    pub rate_hz: f64,
    /// Deliver samples at their recorded pace instead of as fast as possible.
    pub paced: bool,
}

impl FromStr for ImuSourceKind {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SourceError::InvalidDescriptor(s.to_owned());
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "mock" => {
                let mut parts = rest.split(':').filter(|p| !p.is_empty());
                let class = parts
                    .next()
                    .map(|c| c.parse().map_err(|_| bad()))
                    .transpose()?
                    .unwrap_or(MovementClass::Control);
                let bars = parts
                    .next()
                    .map(|b| b.parse::<usize>().map_err(|_| bad()))
                    .transpose()?
                    .unwrap_or(DEFAULT_MOCK_BARS);
                if bars == 0 || parts.next().is_some() {
                    return Err(bad());
                }
                Ok(ImuSourceKind::Mock { class, bars })
            }
            "replay" if !rest.is_empty() => Ok(ImuSourceKind::Replay(rest.into())),
            "serial" if !rest.is_empty() => {
                let (device, baud) = match rest.rsplit_once('@') {
                    Some((d, b)) => (d, b.parse().map_err(|_| bad())?),
                    None => (rest, DEFAULT_BAUD),
                };
                if device.is_empty() {
                    return Err(bad());
                }
                Ok(ImuSourceKind::Serial {
                    device: device.into(),
                    baud,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl FromStr for PalmSourceKind {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "mock" => Ok(PalmSourceKind::Mock),
            Some(("replay", path)) if !path.is_empty() => Ok(PalmSourceKind::Replay(path.into())),
            _ => Err(SourceError::InvalidDescriptor(s.to_owned())),
        }
    }
}

impl SourceDescriptor {
    pub fn parse(imu: &str, palm: Option<&str>, rate_hz: f64) -> Result<Self, SourceError> {
        let imu: ImuSourceKind = imu.parse()?;
        let palm = palm.map(str::parse).transpose()?;
        if matches!(imu, ImuSourceKind::Serial { .. }) && palm.is_none() {
            return Err(SourceError::InvalidDescriptor(
                "a serial IMU needs a palm source".to_owned(),
            ));
        }
        if !(super::config::MIN_RATE_HZ..=super::config::MAX_RATE_HZ).contains(&rate_hz) {
            return Err(SourceError::InvalidDescriptor(format!("rate {rate_hz} Hz")));
        }
        Ok(Self {
            imu,
            palm,
            rate_hz,
            paced: false,
        })
    }

    pub fn paced(mut self, paced: bool) -> Self {
        self.paced = paced;
        self
    }

    pub fn open(&self, tempo_bpm: f64, beats_per_bar: usize) -> Result<Box<dyn CaptureSource>, SourceError> {
        let pace = |events: Vec<SourceEvent>, anchor, control| -> Box<dyn CaptureSource> {
            Box::new(EventListSource::new(events, anchor, self.paced).with_control(control))
        };
        match &self.imu {
            ImuSourceKind::Mock { class, bars } => {
                let (events, anchor) = mock_events(*class, *bars, tempo_bpm, beats_per_bar, self.rate_hz)?;
                Ok(pace(events, Some(anchor), ControlFrame::identity()))
            }
            ImuSourceKind::Replay(path) => {
                let rec = load_session(path)?;
                let anchor = rec.header.bar_anchor_t;
                Ok(pace(rec.events, anchor, rec.header.control))
            }
            ImuSourceKind::Serial { device, baud } => {
                let palm = match self.palm.as_ref().expect("checked at parse") {
                    PalmSourceKind::Mock => {
                        let (events, _) = mock_events(MovementClass::Control, DEFAULT_MOCK_BARS, tempo_bpm, beats_per_bar, self.rate_hz)?;
                        events
                            .into_iter()
                            .filter_map(|e| match e {
                                SourceEvent::Palm(p) => Some(p),
                                _ => None,
                            })
                            .collect()
                    }
                    PalmSourceKind::Replay(path) => read_capture_csv(path, SequenceMeta::default())
                        .map_err(|e| SourceError::Setup(format!("palm file {}: {e}", path.display())))?
                        .into_frames(),
                };
                Ok(Box::new(SerialSource::open(device, *baud, palm)?))
            }
        }
    }
}

/// Pull interface over a live or recorded sample stream.
pub trait CaptureSource: Send {
    /// Next event, or `None` once the source is exhausted.
    fn next_event(&mut self) -> Result<Option<SourceEvent>, SourceError>;

    /// Time at which bar 0 starts, when the source knows it.
    fn bar_anchor_hint(&self) -> Option<f64> {
        None
    }

    /// Control orientation the source's samples were produced under, if known.
    fn control_hint(&self) -> Option<ControlFrame<f64>> {
        None
    }
}

/// Paired mock events, palm before IMU at equal times, and the downbeat time.
pub fn mock_events(
    class: MovementClass,
    bars: usize,
    tempo_bpm: f64,
    beats_per_bar: usize,
    rate_hz: f64,
) -> Result<(Vec<SourceEvent>, f64), SourceError> {
    let timing = SynthTiming {
        rate_hz,
        ..SynthTiming::new(tempo_bpm, beats_per_bar, bars)
    };
    let spec = PerturbationSpec::default_for(class, DEFAULT_MOCK_SEED, tempo_bpm, beats_per_bar);
    let streams =
        generate_paired(&timing, &spec, &Grip::default()).map_err(|e| SourceError::Setup(e.to_string()))?;
    let events = streams
        .palm
        .into_iter()
        .zip(streams.imu)
        .flat_map(|(p, i)| [SourceEvent::Palm(p), SourceEvent::Imu(i)])
        .collect();
    Ok((events, 0.0))
}

/// Replays a fixed list of events, optionally at their recorded pace.
pub struct EventListSource {
    events: VecDeque<SourceEvent>,
    anchor: Option<f64>,
    control: Option<ControlFrame<f64>>,
    paced: Option<(Instant, f64)>,
    pace: bool,
}

impl EventListSource {
    pub fn new(events: Vec<SourceEvent>, anchor: Option<f64>, pace: bool) -> Self {
        Self {
            events: events.into(),
            anchor,
            control: None,
            paced: None,
            pace,
        }
    }

    pub fn with_control(mut self, control: ControlFrame<f64>) -> Self {
        self.control = Some(control);
        self
    }
}

impl CaptureSource for EventListSource {
    fn next_event(&mut self) -> Result<Option<SourceEvent>, SourceError> {
        let Some(e) = self.events.pop_front() else {
            return Ok(None);
        };
        if self.pace {
            let (start, t0) = *self.paced.get_or_insert((Instant::now(), e.t()));
            let due = Duration::from_secs_f64((e.t() - t0).max(0.0));
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        Ok(Some(e))
    }

    fn bar_anchor_hint(&self) -> Option<f64> {
        self.anchor
    }

    fn control_hint(&self) -> Option<ControlFrame<f64>> {
        self.control
    }
}

/// Parses one ASCII IMU line `t,ax,ay,az,gx,gy,gz`.
pub fn parse_imu_line(line: &str) -> Result<ImuSample<f64>, String> {
    let v = parse_fields::<7>(line)?;
    Ok(ImuSample::new(
        v[0],
        Vec3::new(v[1], v[2], v[3]),
        Vec3::new(v[4], v[5], v[6]),
    ))
}

pub fn format_imu_line(s: &ImuSample<f64>) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.t, s.accel.x, s.accel.y, s.accel.z, s.gyro.x, s.gyro.y, s.gyro.z
    )
}

fn parse_fields<const N: usize>(line: &str) -> Result<[f64; N], String> {
    let mut out = [0.0; N];
    let mut fields = line.trim().split(',');
    for (i, slot) in out.iter_mut().enumerate() {
        let f = fields.next().ok_or_else(|| format!("expected {N} fields, got {i}"))?;
        *slot = f
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("field {} `{}` is not a finite number", i + 1, f.trim()))?;
    }
    if fields.next().is_some() {
        return Err(format!("expected {N} fields, got more"));
    }
    Ok(out)
}

/// IMU lines from a serial device (or any readable file), with a palm stream
/// merged in by time.
pub struct SerialSource {
    reader: Box<dyn BufRead + Send>,
    line_no: usize,
    start: Instant,
    last_t: f64,
    palm: VecDeque<PalmSample<f64>>,
    pending: Option<ImuSample<f64>>,
}

impl SerialSource {
    pub fn open(device: &Path, baud: u32, palm: Vec<PalmSample<f64>>) -> Result<Self, SourceError> {
        let file = File::open(device).map_err(|e| SourceError::Setup(format!("{}: {e}", device.display())))?;
        configure_port(&file, baud)?;
        Ok(Self::from_reader(Box::new(BufReader::new(file)), palm))
    }

    pub fn from_reader(reader: Box<dyn BufRead + Send>, palm: Vec<PalmSample<f64>>) -> Self {
        Self {
            reader,
            line_no: 0,
            start: Instant::now(),
            last_t: f64::NEG_INFINITY,
            palm: palm.into(),
            pending: None,
        }
    }

    fn read_imu(&mut self) -> Result<Option<ImuSample<f64>>, SourceError> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = self.reader.read_line(&mut line).map_err(|e| SourceError::Disconnected(e.to_string()))?;
            if n == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let mut s = parse_imu_line(text).map_err(|reason| SourceError::MalformedLine {
                line: self.line_no,
                reason,
            })?;
            // receive-side stamp, kept strictly increasing
            let now = self.start.elapsed().as_secs_f64();
            s.t = if now > self.last_t { now } else { self.last_t + 1e-6 };
            self.last_t = s.t;
            return Ok(Some(s));
        }
    }
}

impl CaptureSource for SerialSource {
    fn next_event(&mut self) -> Result<Option<SourceEvent>, SourceError> {
        if self.pending.is_none() {
            self.pending = self.read_imu()?;
        }
        let Some(imu) = self.pending else {
            return Ok(None);
        };
        if let Some(p) = self.palm.front() {
            if p.t <= imu.t {
                return Ok(self.palm.pop_front().map(SourceEvent::Palm));
            }
        }
        self.pending = None;
        Ok(Some(SourceEvent::Imu(imu)))
    }
}

#[cfg(unix)]
fn configure_port(file: &File, baud: u32) -> Result<(), SourceError> {
    use std::os::fd::AsRawFd;
    let fd = file.as_raw_fd();
    // SAFETY: `fd` is a valid open descriptor for the lifetime of `file`.
    if unsafe { libc::isatty(fd) } != 1 {
        return Ok(());
    }
    let speed = match baud {
        9600 => libc::B9600,
        19200 => libc::B19200,
        38400 => libc::B38400,
        57600 => libc::B57600,
        115200 => libc::B115200,
        230400 => libc::B230400,
        other => return Err(SourceError::Setup(format!("unsupported baud rate {other}"))),
    };
    // SAFETY: termios is plain data; the calls only read and write through the
    // valid pointer and descriptor.
    unsafe {
        let mut tio: libc::termios = std::mem::zeroed();
        if libc::tcgetattr(fd, &mut tio) != 0 {
            return Err(std::io::Error::last_os_error().into());
        }
        libc::cfmakeraw(&mut tio);
        tio.c_lflag |= libc::ICANON;
        if libc::cfsetspeed(&mut tio, speed) != 0 || libc::tcsetattr(fd, libc::TCSANOW, &tio) != 0 {
            return Err(std::io::Error::last_os_error().into());
        }
    }
    Ok(())
}

#[cfg(not(unix))]
fn configure_port(_file: &File, _baud: u32) -> Result<(), SourceError> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors() {
        assert_eq!(
            "mock".parse::<ImuSourceKind>().unwrap(),
            ImuSourceKind::Mock {
                class: MovementClass::Control,
                bars: 4
            }
        );
        assert_eq!(
            "mock:knee:2".parse::<ImuSourceKind>().unwrap(),
            ImuSourceKind::Mock {
                class: MovementClass::Knee,
                bars: 2
            }
        );
        assert_eq!(
            "serial:/dev/ttyUSB0@57600".parse::<ImuSourceKind>().unwrap(),
            ImuSourceKind::Serial {
                device: "/dev/ttyUSB0".into(),
                baud: 57600
            }
        );
        assert!("mock:elbow".parse::<ImuSourceKind>().is_err());
        assert!("mock:knee:0".parse::<ImuSourceKind>().is_err());
        assert!("tcp:1234".parse::<ImuSourceKind>().is_err());
        assert!("replay:".parse::<ImuSourceKind>().is_err());
        assert!(SourceDescriptor::parse("serial:/dev/x", None, 100.0).is_err());
        assert!(SourceDescriptor::parse("mock", None, 1000.0).is_err());
    }

    #[test]
    fn imu_line_round_trip() {
        let s = ImuSample::new(0.125, Vec3::new(0.1, 9.81, -0.2), Vec3::new(0.0, 0.5, 1e-7));
        assert_eq!(parse_imu_line(&format_imu_line(&s)).unwrap(), s);
        assert!(parse_imu_line("1,2,3").is_err());
        assert!(parse_imu_line("1,2,3,4,5,6,nan").is_err());
        assert!(parse_imu_line("1,2,3,4,5,6,7,8").is_err());
    }

    #[test]
    fn serial_reader_merges_palm_and_reports_bad_lines() {
        let text = "# header\n0,0,9.81,0,0,0,0\n\n0,0,9.81,0,0,0,0\nbad\n";
        let palm = vec![PalmSample::new(-1.0, Vec3::zero())];
        let mut src = SerialSource::from_reader(Box::new(std::io::Cursor::new(text.as_bytes().to_vec())), palm);
        assert!(matches!(src.next_event().unwrap(), Some(SourceEvent::Palm(_))));
        let a = src.next_event().unwrap().unwrap();
        let b = src.next_event().unwrap().unwrap();
        assert!(b.t() > a.t());
        match src.next_event() {
            Err(SourceError::MalformedLine { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mock_events_are_time_ordered() {
        let (events, anchor) = mock_events(MovementClass::Control, 1, 76.0, 4, 100.0).unwrap();
        assert_eq!(anchor, 0.0);
        assert!(events.windows(2).all(|w| w[0].t() <= w[1].t()));
        assert!(matches!(events[0], SourceEvent::Palm(_)));
    }
}
