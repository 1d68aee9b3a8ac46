//! Shared state between the active-learning loop and a human annotator.
//!
//! The loop side holds a [`SessionOracle`], which publishes the point it
//! wants labelled and blocks until an answer arrives. The serving side reads
//! [`Session::pending`] and submits answers through [`Session::submit`].

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::harness::{ExperimentCurve, Oracle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub queried: usize,
    pub budget: usize,
    pub objective: f64,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitError {
    /// The class is outside `1..=k`.
    BadClass,
    /// The point is not the one currently awaiting an answer.
    Stale,
}

#[derive(Debug)]
struct State {
    pending: Option<usize>,
    answer: Option<(usize, usize)>,
    progress: Progress,
    closed: bool,
}

#[derive(Debug)]
pub struct Session {
    k: usize,
    state: Mutex<State>,
    changed: Condvar,
}

impl Session {
    pub fn new(k: usize, budget: usize) -> Arc<Self> {
        Arc::new(Session {
            k,
            state: Mutex::new(State {
                pending: None,
                answer: None,
                progress: Progress {
                    queried: 0,
                    budget,
                    objective: f64::NAN,
                    finished: false,
                },
                closed: false,
            }),
            changed: Condvar::new(),
        })
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The point awaiting a label, if any. A point whose answer has been
    /// submitted but not yet consumed is no longer pending.
    pub fn pending(&self) -> Option<usize> {
        let st = self.lock();
        st.pending.filter(|_| st.answer.is_none())
    }

    pub fn progress(&self) -> Progress {
        self.lock().progress
    }

    /// Record an answer with a 1-based class. The class is checked before
    /// the point id.
    pub fn submit(&self, point_id: usize, class: usize) -> std::result::Result<(), SubmitError> {
        if class == 0 || class > self.k {
            return Err(SubmitError::BadClass);
        }
        let mut st = self.lock();
        if st.pending != Some(point_id) || st.answer.is_some() {
            return Err(SubmitError::Stale);
        }
        st.answer = Some((point_id, class - 1));
        self.changed.notify_all();
        Ok(())
    }

    /// Update the progress counters from a curve.
    pub fn observe(&self, curve: &ExperimentCurve) {
        let mut st = self.lock();
        st.progress.queried = curve.labels.len();
        if let Some(r) = curve.records.last() {
            st.progress.objective = r.objective;
        }
    }

    pub fn finish(&self) {
        let mut st = self.lock();
        st.progress.finished = true;
        st.pending = None;
        self.changed.notify_all();
    }

    /// Wake any waiting oracle with an error.
    pub fn close(&self) {
        let mut st = self.lock();
        st.closed = true;
        self.changed.notify_all();
    }

    /// Block until the loop publishes a query or finishes. Returns the
    /// pending point id, or `None` once finished or after `timeout`.
    pub fn wait_for_query(&self, timeout: Duration) -> Option<usize> {
        let deadline = Instant::now() + timeout;
        let mut st = self.lock();
        loop {
            if st.progress.finished || st.closed {
                return None;
            }
            if let (Some(id), None) = (st.pending, st.answer) {
                return Some(id);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self.changed.wait_timeout(st, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
    }
}

/// Oracle that routes each query through a [`Session`].
#[derive(Debug, Clone)]
pub struct SessionOracle {
    session: Arc<Session>,
    timeout: Option<Duration>,
}

impl SessionOracle {
    pub fn new(session: Arc<Session>, timeout: Option<Duration>) -> Self {
        SessionOracle { session, timeout }
    }
}

impl Oracle for SessionOracle {
    fn answer(&mut self, id: usize) -> Result<usize> {
        let s = &self.session;
        let mut st = s.lock();
        st.pending = Some(id);
        st.answer = None;
        s.changed.notify_all();
        let deadline = self.timeout.map(|t| Instant::now() + t);
        loop {
            if st.closed {
                st.pending = None;
                return Err(Error::Oracle("session closed".into()));
            }
            if let Some((got, class)) = st.answer {
                if got == id {
                    st.pending = None;
                    st.answer = None;
                    s.changed.notify_all();
                    return Ok(class);
                }
            }
            st = match deadline {
                None => s.changed.wait(st).unwrap_or_else(|e| e.into_inner()),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        st.pending = None;
                        return Err(Error::Oracle(format!("no answer for point {id} before the timeout")));
                    }
                    s.changed.wait_timeout(st, d - now).unwrap_or_else(|e| e.into_inner()).0
                }
            };
        }
    }
}
