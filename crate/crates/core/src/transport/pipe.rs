//! In-memory blocking byte pipe.
//!
//! Connects an edge session to a cloud session inside one process with
//! the same semantics as a socket: bounded buffering, blocking reads,
//! EOF when the writer closes, and a broken-pipe error when the reader
//! goes away first.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::{Arc, Condvar, Mutex};

struct State {
    buf: VecDeque<u8>,
    capacity: usize,
    writer_alive: bool,
    reader_alive: bool,
}

struct Shared {
    state: Mutex<State>,
    readable: Condvar,
    writable: Condvar,
}

pub struct PipeWriter {
    shared: Arc<Shared>,
}

pub struct PipeReader {
    shared: Arc<Shared>,
}

/// Creates a connected writer/reader pair buffering at most `capacity`
/// bytes.
pub fn pipe(capacity: usize) -> (PipeWriter, PipeReader) {
    assert!(capacity > 0, "a zero-capacity pipe cannot carry data");
    let shared = Arc::new(Shared {
        state: Mutex::new(State {
            buf: VecDeque::with_capacity(capacity.min(1 << 20)),
            capacity,
            writer_alive: true,
            reader_alive: true,
        }),
        readable: Condvar::new(),
        writable: Condvar::new(),
    });
    (
        PipeWriter {
            shared: shared.clone(),
        },
        PipeReader { shared },
    )
}

impl Write for PipeWriter {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        if data.is_empty() {
            return Ok(0);
        }
        let mut st = self.shared.state.lock().expect("pipe lock");
        loop {
            if !st.reader_alive {
                return Err(io::Error::new(
                    io::ErrorKind::BrokenPipe,
                    "pipe reader closed",
                ));
            }
            let room = st.capacity - st.buf.len();
            if room > 0 {
                let n = room.min(data.len());
                st.buf.extend(&data[..n]);
                self.shared.readable.notify_one();
                return Ok(n);
            }
            st = self.shared.writable.wait(st).expect("pipe lock");
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Drop for PipeWriter {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().expect("pipe lock");
        st.writer_alive = false;
        self.shared.readable.notify_all();
    }
}

impl Read for PipeReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if out.is_empty() {
            return Ok(0);
        }
        let mut st = self.shared.state.lock().expect("pipe lock");
        loop {
            if !st.buf.is_empty() {
                let n = out.len().min(st.buf.len());
                for slot in out.iter_mut().take(n) {
                    *slot = st.buf.pop_front().expect("checked non-empty");
                }
                self.shared.writable.notify_one();
                return Ok(n);
            }
            if !st.writer_alive {
                return Ok(0);
            }
            st = self.shared.readable.wait(st).expect("pipe lock");
        }
    }
}

impl Drop for PipeReader {
    fn drop(&mut self) {
        let mut st = self.shared.state.lock().expect("pipe lock");
        st.reader_alive = false;
        self.shared.writable.notify_all();
    }
}
