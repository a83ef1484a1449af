//! Live service: one capture session broadcast to WebSocket subscribers,
//! with HTTP endpoints to adjust the session before and while it runs.
//!
//! ```text
//! GET  /stream               WebSocket; one JSON stream message per text frame
//! GET  /session              current session settings
//! POST /session/reference    body: {"label": "<class>"} selects a loaded reference;
//!                            a full reference trajectory adds or replaces one by label
//! POST /session/recording    body: {"path": "<file>"} starts, {"path": null} stops
//! POST /session/tempo        body: {"tempo_bpm": <f64>}; rejected while a session runs
//! ```

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use anyhow::{anyhow, Context};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use baton_core::capture::source::ImuSourceKind;
use baton_core::capture::{
    load_session, resolve_control, Config, Hub, LiveLoop, Received, RecordingRequest, Runner, ServiceError,
    SessionControls, SourceDescriptor, StreamMessage, Subscription,
};
use baton_core::geometry::ControlFrame;
use baton_core::pipeline::AverageTrajectory;
use baton_core::MovementClass;

use crate::commands::{load_control, load_reference_dir};
use crate::{CliResult, Failure};

/// Queue depth per subscriber; a client this far behind is disconnected.
const SUBSCRIBER_CAPACITY: usize = 4096;
const STATUS_INTERVAL: Duration = Duration::from_millis(500);

pub struct ServeOptions {
    pub config: Config,
    pub host: String,
    pub port: u16,
    pub source: Option<String>,
    pub palm: Option<String>,
    pub rate: Option<f64>,
    pub refs: Option<PathBuf>,
    pub control: Option<PathBuf>,
    pub record: Option<PathBuf>,
    pub autostart: bool,
    pub paced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
enum Phase {
    Idle,
    Running,
    Finished,
}

struct Session {
    phase: Phase,
    config: Config,
    references: Vec<AverageTrajectory<f64>>,
    selected: Option<MovementClass>,
    recording: Option<PathBuf>,
    controls: Option<Arc<SessionControls>>,
}

#[derive(Clone)]
struct App {
    hub: Hub,
    session: Arc<Mutex<Session>>,
    source: Option<SourceDescriptor>,
    source_text: String,
    control: Option<ControlFrame<f64>>,
}

pub fn serve(opts: ServeOptions) -> CliResult {
    let rate = opts.rate.unwrap_or(opts.config.rate_hz);
    let source = opts
        .source
        .as_deref()
        .map(|s| SourceDescriptor::parse(s, opts.palm.as_deref(), rate).map(|d| d.paced(opts.paced)))
        .transpose()?;
    let control = opts.control.as_deref().map(load_control).transpose()?;
    if control.is_none() && matches!(source.as_ref().map(|d| &d.imu), Some(ImuSourceKind::Serial { .. })) {
        return Err(Failure::validation(ServiceError::CalibrationMissing));
    }
    let references = match &opts.refs {
        Some(dir) => load_reference_dir(dir)?,
        None => Vec::new(),
    };
    check_references(&opts.config, &references).map_err(Failure::validation)?;

    let app = App {
        hub: Hub::new(SUBSCRIBER_CAPACITY),
        session: Arc::new(Mutex::new(Session {
            phase: Phase::Idle,
            config: opts.config,
            references,
            selected: None,
            recording: opts.record.clone(),
            controls: None,
        })),
        source,
        source_text: opts.source.clone().unwrap_or_default(),
        control,
    };

    let runtime = tokio::runtime::Runtime::new()
        .context("starting async runtime")
        .map_err(Failure::runtime)?;
    runtime.block_on(async move {
        let addr: SocketAddr = format!("{}:{}", opts.host, opts.port)
            .parse()
            .with_context(|| format!("bad listen address {}:{}", opts.host, opts.port))
            .map_err(Failure::validation)?;
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))
            .map_err(Failure::runtime)?;
        let local = listener.local_addr().map_err(Failure::runtime)?;
        println!("{}", json!({ "listening": local.to_string() }));

        tokio::spawn(status_ticker(app.clone()));
        if opts.autostart {
            app.start_session();
        }
        let router = Router::new()
            .route("/stream", get(stream_ws))
            .route("/session", get(session_info))
            .route("/session/reference", post(set_reference))
            .route("/session/recording", post(set_recording))
            .route("/session/tempo", post(set_tempo))
            .with_state(app.clone());
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("serving")
            .map_err(Failure::runtime)?;
        if let Some(c) = &app.session.lock().expect("session lock").controls {
            c.request_stop();
        }
        app.hub.close();
        Ok(())
    })
}

fn check_references(config: &Config, refs: &[AverageTrajectory<f64>]) -> anyhow::Result<()> {
    for r in refs {
        if r.n() != config.n_points || r.beats_per_bar() != config.beats_per_bar {
            return Err(anyhow!(
                "reference `{}` has {} points in {} beats; session uses {} in {}",
                r.label,
                r.n(),
                r.beats_per_bar(),
                config.n_points,
                config.beats_per_bar
            ));
        }
    }
    Ok(())
}

impl App {
    /// Starts the session thread once, if a source is configured.
    fn start_session(&self) {
        let Some(desc) = self.source.clone() else {
            return;
        };
        let controls = Arc::new(SessionControls::new());
        let (config, references, recording) = {
            let mut s = self.session.lock().expect("session lock");
            if s.phase != Phase::Idle {
                return;
            }
            s.phase = Phase::Running;
            s.controls = Some(controls.clone());
            (s.config, s.references.clone(), s.recording.clone())
        };
        let app = self.clone();
        std::thread::spawn(move || {
            let outcome = app.run_session(&desc, config, references, recording, &controls);
            let text = match outcome {
                Ok(n) => format!("source finished after {n} samples"),
                Err(e) => format!("session ended: {e:#}"),
            };
            app.hub.publish(StreamMessage::status(text));
            app.hub.set_source_attached(false);
            let mut s = app.session.lock().expect("session lock");
            s.phase = Phase::Finished;
            s.controls = None;
        });
    }

    fn run_session(
        &self,
        desc: &SourceDescriptor,
        config: Config,
        references: Vec<AverageTrajectory<f64>>,
        recording: Option<PathBuf>,
        controls: &SessionControls,
    ) -> anyhow::Result<usize> {
        let mut source = desc.open(config.tempo_bpm, config.beats_per_bar)?;
        let mut runner = match &desc.imu {
            // a recorded session reruns with its own settings
            ImuSourceKind::Replay(path) => Runner::for_record(&load_session(path)?)?,
            _ => {
                let control = resolve_control(self.control, source.as_ref())?;
                let mut live = LiveLoop::new(config, control)?.with_references(references)?;
                if let Some(t) = source.bar_anchor_hint() {
                    live = live.with_bar_anchor(t);
                }
                Runner::new(live, self.source_text.clone())
            }
        };
        if let Some(path) = recording {
            runner.start_recording(path)?;
        }
        self.hub.set_source_attached(true);
        self.hub.publish(StreamMessage::status("source attached"));
        let mut hub = self.hub.clone();
        Ok(runner.run(source.as_mut(), &mut [&mut hub], controls)?)
    }
}

async fn status_ticker(app: App) {
    let mut tick = tokio::time::interval(STATUS_INTERVAL);
    loop {
        tick.tick().await;
        let phase = app.session.lock().expect("session lock").phase;
        let text = match (phase, app.source.is_some()) {
            (Phase::Running, _) => continue,
            (Phase::Idle, false) | (Phase::Finished, _) => "waiting for source",
            (Phase::Idle, true) => "waiting for first subscriber",
        };
        app.hub.publish(StreamMessage::status(text));
    }
}

async fn stream_ws(ws: WebSocketUpgrade, State(app): State<App>) -> Response {
    let subscription = app.hub.subscribe();
    app.start_session();
    ws.on_upgrade(move |socket| forward(socket, subscription))
}

async fn forward(mut socket: WebSocket, mut subscription: Subscription) {
    let (tx, mut rx) = tokio::sync::mpsc::channel(256);
    std::thread::spawn(move || loop {
        match subscription.recv_timeout(Duration::from_millis(100)) {
            Received::Message(m) => {
                if tx.blocking_send(m).is_err() {
                    break;
                }
            }
            Received::Timeout if tx.is_closed() => break,
            Received::Timeout => {}
            Received::Closed => break,
        }
    });
    while let Some(m) = rx.recv().await {
        if socket.send(Message::Text(m.to_json().into())).await.is_err() {
            return;
        }
    }
    let _ = socket.send(Message::Close(None)).await;
}

fn error(status: StatusCode, msg: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": msg.to_string() }))).into_response()
}

async fn session_info(State(app): State<App>) -> Response {
    let s = app.session.lock().expect("session lock");
    Json(json!({
        "phase": s.phase,
        "tempo_bpm": s.config.tempo_bpm,
        "beats_per_bar": s.config.beats_per_bar,
        "n_points": s.config.n_points,
        "references": s.references.iter().map(|r| r.label).collect::<Vec<_>>(),
        "selected": s.selected,
        "recording": s.recording,
        "source": app.source_text,
    }))
    .into_response()
}

#[derive(Deserialize)]
struct SelectReference {
    label: MovementClass,
}

async fn set_reference(State(app): State<App>, body: String) -> Response {
    let mut s = app.session.lock().expect("session lock");
    let is_selection = serde_json::from_str::<serde_json::Value>(&body)
        .is_ok_and(|v| v.get("points").is_none());
    if is_selection {
        let label = match serde_json::from_str::<SelectReference>(&body) {
            Ok(r) => r.label,
            Err(e) => return error(StatusCode::BAD_REQUEST, e),
        };
        if !s.references.iter().any(|r| r.label == label) {
            return error(StatusCode::NOT_FOUND, format!("no `{label}` reference is loaded"));
        }
        s.selected = Some(label);
        return Json(json!({ "selected": label })).into_response();
    }
    let reference = match AverageTrajectory::from_json(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    if let Err(e) = check_references(&s.config, std::slice::from_ref(&reference)) {
        return error(StatusCode::BAD_REQUEST, e);
    }
    s.references.retain(|r| r.label != reference.label);
    s.references.push(reference);
    s.references.sort_by_key(|r| r.label);
    if let Some(c) = &s.controls {
        c.replace_references(s.references.clone());
    }
    Json(json!({ "references": s.references.iter().map(|r| r.label).collect::<Vec<_>>() })).into_response()
}

#[derive(Deserialize)]
struct RecordingBody {
    path: Option<PathBuf>,
}

async fn set_recording(State(app): State<App>, body: String) -> Response {
    let req: RecordingBody = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let mut s = app.session.lock().expect("session lock");
    s.recording = req.path.clone();
    if let Some(c) = &s.controls {
        c.request_recording(match req.path {
            Some(p) => RecordingRequest::Start(p),
            None => RecordingRequest::Stop,
        });
    }
    Json(json!({ "recording": s.recording })).into_response()
}

#[derive(Deserialize)]
struct TempoRequest {
    tempo_bpm: f64,
}

async fn set_tempo(State(app): State<App>, body: String) -> Response {
    let req: TempoRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let mut s = app.session.lock().expect("session lock");
    if s.phase == Phase::Running {
        return error(StatusCode::CONFLICT, "tempo cannot change during a live session");
    }
    let candidate = Config {
        tempo_bpm: req.tempo_bpm,
        ..s.config
    };
    if let Err(e) = candidate.validate() {
        return error(StatusCode::BAD_REQUEST, e);
    }
    s.config = candidate;
    Json(json!({ "tempo_bpm": s.config.tempo_bpm })).into_response()
}
