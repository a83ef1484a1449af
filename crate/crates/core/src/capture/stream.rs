//! Messages pushed to display clients and the fan-out hub that carries them.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, RecvTimeoutError, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::analysis::ClassificationResult;
use crate::geometry::Vec3;

/// Queue depth per subscriber before it is considered too slow.
pub const DEFAULT_SUBSCRIBER_CAPACITY: usize = 1024;

/// One message on the display stream, encoded as a JSON object tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamMessage {
    Pose {
        t: f64,
        palm: Vec3<f64>,
        tip: Vec3<f64>,
    },
    BarAnalysis {
        bar_index: usize,
        #[serde(flatten)]
        result: ClassificationResult<f64>,
    },
    Status {
        text: String,
    },
}

impl StreamMessage {
    pub fn status(text: impl Into<String>) -> Self {
        Self::Status { text: text.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("stream messages always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

struct Slot {
    tx: SyncSender<Arc<StreamMessage>>,
    dropped: Arc<AtomicBool>,
}

#[derive(Default)]
struct HubState {
    slots: Vec<Slot>,
    published: u64,
    source_attached: bool,
}

/// Broadcasts each message to every subscriber without blocking the producer.
///
/// Subscribers have bounded queues. One whose queue overflows is cut off and,
/// after draining what it already received, sees a final status message.
#[derive(Clone)]
pub struct Hub {
    state: Arc<Mutex<HubState>>,
    capacity: usize,
}

impl Default for Hub {
    fn default() -> Self {
        Self::new(DEFAULT_SUBSCRIBER_CAPACITY)
    }
}

impl Hub {
    pub fn new(capacity: usize) -> Self {
        Self {
            state: Arc::default(),
            capacity: capacity.max(1),
        }
    }

    /// New subscriber; its first message is a status describing the join point.
    pub fn subscribe(&self) -> Subscription {
        let (tx, rx) = sync_channel(self.capacity + 1);
        let dropped = Arc::new(AtomicBool::new(false));
        let mut st = self.state.lock().expect("hub lock");
        let hello = if st.source_attached {
            format!("joined at message {}", st.published)
        } else {
            "waiting for source".to_owned()
        };
        tx.try_send(Arc::new(StreamMessage::status(hello)))
            .expect("fresh queue has room");
        st.slots.push(Slot {
            tx,
            dropped: dropped.clone(),
        });
        Subscription {
            rx,
            dropped,
            finished: false,
        }
    }

    pub fn publish(&self, msg: StreamMessage) {
        let msg = Arc::new(msg);
        let mut st = self.state.lock().expect("hub lock");
        st.published += 1;
        st.slots.retain(|slot| match slot.tx.try_send(msg.clone()) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                slot.dropped.store(true, Ordering::SeqCst);
                false
            }
            Err(TrySendError::Disconnected(_)) => false,
        });
    }

    pub fn set_source_attached(&self, attached: bool) {
        self.state.lock().expect("hub lock").source_attached = attached;
    }

    pub fn source_attached(&self) -> bool {
        self.state.lock().expect("hub lock").source_attached
    }

    pub fn subscriber_count(&self) -> usize {
        self.state.lock().expect("hub lock").slots.len()
    }

    pub fn published(&self) -> u64 {
        self.state.lock().expect("hub lock").published
    }

    /// Disconnects every subscriber; their iterators end after draining.
    pub fn close(&self) {
        self.state.lock().expect("hub lock").slots.clear();
    }
}

/// Receiving end of a hub subscription.
pub struct Subscription {
    rx: Receiver<Arc<StreamMessage>>,
    dropped: Arc<AtomicBool>,
    finished: bool,
}

/// Outcome of a bounded wait on a subscription.
#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Message(Arc<StreamMessage>),
    Timeout,
    Closed,
}

impl Subscription {
    /// Waits up to `timeout` for the next message.
    pub fn recv_timeout(&mut self, timeout: Duration) -> Received {
        if self.finished {
            return Received::Closed;
        }
        match self.rx.recv_timeout(timeout) {
            Ok(m) => Received::Message(m),
            Err(RecvTimeoutError::Timeout) => Received::Timeout,
            Err(RecvTimeoutError::Disconnected) => self.finish(),
        }
    }

    pub fn was_dropped(&self) -> bool {
        self.dropped.load(Ordering::SeqCst)
    }

    fn finish(&mut self) -> Received {
        self.finished = true;
        if self.was_dropped() {
            Received::Message(Arc::new(StreamMessage::status(
                "disconnected: subscriber fell behind the stream",
            )))
        } else {
            Received::Closed
        }
    }
}

impl Iterator for Subscription {
    type Item = Arc<StreamMessage>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        match self.rx.recv() {
            Ok(m) => Some(m),
            Err(_) => match self.finish() {
                Received::Message(m) => Some(m),
                _ => None,
            },
        }
    }
}
