use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use tokio::sync::Notify;

/// State ticks a client may fall behind before the oldest are dropped.
pub const MAX_PENDING_TICKS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub droppable: bool,
    pub text: Arc<str>,
}

#[derive(Default)]
struct Inner {
    queue: VecDeque<Outgoing>,
    droppable: usize,
    dropped: u64,
    closed: bool,
}

/// Per-client send queue. Only state ticks are ever dropped; outcomes and
/// lifecycle messages are always delivered in order.
#[derive(Default)]
pub struct Outbox {
    inner: Mutex<Inner>,
    notify: Notify,
}

impl Outbox {
    pub fn new() -> Arc<Self> {
        Arc::new(Outbox::default())
    }

    pub fn push(&self, msg: Outgoing) {
        let mut inner = self.inner.lock().expect("outbox poisoned");
        if inner.closed {
            return;
        }
        if msg.droppable {
            if inner.droppable >= MAX_PENDING_TICKS {
                if let Some(i) = inner.queue.iter().position(|m| m.droppable) {
                    inner.queue.remove(i);
                    inner.droppable -= 1;
                    inner.dropped += 1;
                }
            }
            inner.droppable += 1;
        }
        inner.queue.push_back(msg);
        drop(inner);
        self.notify.notify_one();
    }

    /// No further messages will be accepted; queued ones still drain.
    pub fn close(&self) {
        self.inner.lock().expect("outbox poisoned").closed = true;
        self.notify.notify_one();
    }

    pub fn try_pop(&self) -> Option<Outgoing> {
        let mut inner = self.inner.lock().expect("outbox poisoned");
        let m = inner.queue.pop_front()?;
        if m.droppable {
            inner.droppable -= 1;
        }
        Some(m)
    }

    /// Next message, or `None` once closed and drained.
    pub async fn pop(&self) -> Option<Outgoing> {
        loop {
            let notified = self.notify.notified();
            if let Some(m) = self.try_pop() {
                return Some(m);
            }
            if self.inner.lock().expect("outbox poisoned").closed {
                return None;
            }
            notified.await;
        }
    }

    pub fn dropped(&self) -> u64 {
        self.inner.lock().expect("outbox poisoned").dropped
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("outbox poisoned").queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick(i: u64) -> Outgoing {
        Outgoing {
            droppable: true,
            text: format!("tick {i}").into(),
        }
    }

    #[test]
    fn lagging_client_loses_oldest_ticks_only() {
        let ob = Outbox::new();
        ob.push(Outgoing {
            droppable: false,
            text: "question_begin".into(),
        });
        for i in 0..100 {
            ob.push(tick(i));
        }
        ob.push(Outgoing {
            droppable: false,
            text: "outcome".into(),
        });
        assert_eq!(ob.dropped(), 36);
        let mut got = Vec::new();
        while let Some(m) = ob.try_pop() {
            got.push(m.text.to_string());
        }
        assert_eq!(got.first().unwrap(), "question_begin");
        assert_eq!(got[1], "tick 36");
        assert_eq!(got[64], "tick 99");
        assert_eq!(got.last().unwrap(), "outcome");
        assert_eq!(got.len(), 66);
    }

    #[tokio::test]
    async fn pop_waits_and_ends_on_close() {
        let ob = Outbox::new();
        let reader = {
            let ob = ob.clone();
            tokio::spawn(async move {
                let mut n = 0;
                while ob.pop().await.is_some() {
                    n += 1;
                }
                n
            })
        };
        for i in 0..5 {
            ob.push(tick(i));
            tokio::task::yield_now().await;
        }
        ob.close();
        ob.push(tick(99));
        assert_eq!(reader.await.unwrap(), 5);
    }
}
