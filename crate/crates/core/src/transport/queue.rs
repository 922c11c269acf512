//! Bounded FIFO handoff between pipeline stages.
//!
//! A small Mutex + Condvar queue rather than a channel wrapper so the
//! high-water mark is tracked exactly under the lock: back-pressure is
//! observable in stats and testable against the configured capacity.

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};

struct State<T> {
    buf: VecDeque<T>,
    capacity: usize,
    high: usize,
    sender_alive: bool,
    receiver_alive: bool,
}

struct Shared<T> {
    state: Mutex<State<T>>,
    not_full: Condvar,
    not_empty: Condvar,
}

pub struct BoundedSender<T> {
    shared: Arc<Shared<T>>,
}

pub struct BoundedReceiver<T> {
    shared: Arc<Shared<T>>,
}

pub fn bounded<T>(capacity: usize) -> (BoundedSender<T>, BoundedReceiver<T>) {
    assert!(capacity > 0, "a zero-capacity queue cannot buffer frames");
    let shared = Arc::new(Shared {
        state: Mutex::new(State {
            buf: VecDeque::with_capacity(capacity),
            capacity,
            high: 0,
            sender_alive: true,
            receiver_alive: true,
        }),
        not_full: Condvar::new(),
        not_empty: Condvar::new(),
    });
    (
        BoundedSender {
            shared: shared.clone(),
        },
        BoundedReceiver { shared },
    )
}

impl<T> BoundedSender<T> {
    /// Blocks while the queue is full. Returns false when the receiver
    /// is gone and the value will never be delivered.
    pub fn send(&self, value: T) -> bool {
        let mut st = self.shared.state.lock().expect("queue lock");
        while st.buf.len() == st.capacity && st.receiver_alive {
            st = self.shared.not_full.wait(st).expect("queue lock");
        }
        if !st.receiver_alive {
            return false;
        }
        st.buf.push_back(value);
        st.high = st.high.max(st.buf.len());
        self.shared.not_empty.notify_one();
        true
    }

    pub fn high_water(&self) -> usize {
        self.shared.state.lock().expect("queue lock").high
    }
}

impl<T> Drop for BoundedSender<T> {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().expect("queue lock");
        st.sender_alive = false;
        self.shared.not_empty.notify_all();
    }
}

impl<T> BoundedReceiver<T> {
    /// Blocks until a value arrives; None once the sender is gone and
    /// the queue drained.
    pub fn recv(&self) -> Option<T> {
        let mut st = self.shared.state.lock().expect("queue lock");
        loop {
            if let Some(v) = st.buf.pop_front() {
                self.shared.not_full.notify_one();
                return Some(v);
            }
            if !st.sender_alive {
                return None;
            }
            st = self.shared.not_empty.wait(st).expect("queue lock");
        }
    }

    pub fn high_water(&self) -> usize {
        self.shared.state.lock().expect("queue lock").high
    }
}

impl<T> Drop for BoundedReceiver<T> {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().expect("queue lock");
        st.receiver_alive = false;
        self.shared.not_full.notify_all();
    }
}
