//! The global event queue: a priority queue ordered by (fire time, sequence
//! number). The sequence number both breaks ties first-scheduled-first and
//! makes execution order fully deterministic.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

pub type SimTime = f64;

/// Handle for cancelling a scheduled event.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct EventId(u64);

#[derive(Debug, PartialEq)]
pub enum ScheduleError {
    /// Fire time earlier than the current clock.
    InPast { now: SimTime, requested: SimTime },
    /// Fire time NaN or infinite.
    NotFinite,
}

impl std::fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleError::InPast { now, requested } => {
                write!(f, "cannot schedule at {requested} before current time {now}")
            }
            ScheduleError::NotFinite => write!(f, "fire time must be finite"),
        }
    }
}

impl std::error::Error for ScheduleError {}

struct Entry<T> {
    time: SimTime,
    seq: u64,
    payload: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl<T> Eq for Entry<T> {}

impl<T> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reverse: BinaryHeap is a max-heap, we want earliest first.
        // Times are guaranteed finite at insertion.
        other
            .time
            .partial_cmp(&self.time)
            .expect("finite times")
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Deterministic event queue.
pub struct EventQueue<T> {
    heap: BinaryHeap<Entry<T>>,
    /// Seqs still live in the heap; absence means fired or cancelled.
    pending: HashSet<u64>,
    clock: SimTime,
    next_seq: u64,
    fired: u64,
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            pending: HashSet::new(),
            clock: 0.0,
            next_seq: 0,
            fired: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Number of events popped so far; the engine enforces its explosion
    /// cap against this.
    pub fn fired(&self) -> u64 {
        self.fired
    }

    /// Pending (non-cancelled) event count.
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Schedule `payload` at absolute time `at`. Scheduling at the current
    /// time is allowed; the event fires after already-queued events with
    /// the same time.
    pub fn schedule(&mut self, at: SimTime, payload: T) -> Result<EventId, ScheduleError> {
        if !at.is_finite() {
            return Err(ScheduleError::NotFinite);
        }
        if at < self.clock {
            return Err(ScheduleError::InPast {
                now: self.clock,
                requested: at,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            time: at,
            seq,
            payload,
        });
        self.pending.insert(seq);
        Ok(EventId(seq))
    }

    /// Schedule relative to the current clock.
    pub fn schedule_in(&mut self, delay: SimTime, payload: T) -> Result<EventId, ScheduleError> {
        self.schedule(self.clock + delay, payload)
    }

    /// Cancel a pending event. Returns false when the event already fired
    /// or was cancelled before. The heap entry is dropped lazily at pop.
    pub fn cancel(&mut self, id: EventId) -> bool {
        self.pending.remove(&id.0)
    }

    /// Pop the next event, advancing the clock to its fire time.
    pub fn pop(&mut self) -> Option<(SimTime, T)> {
        while let Some(entry) = self.heap.pop() {
            if !self.pending.remove(&entry.seq) {
                continue; // cancelled
            }
            debug_assert!(entry.time >= self.clock, "time went backwards");
            self.clock = entry.time;
            self.fired += 1;
            return Some((entry.time, entry.payload));
        }
        None
    }
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(3.0, "c").unwrap();
        q.schedule(1.0, "a").unwrap();
        q.schedule(2.0, "b").unwrap();
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|(_, p)| p).collect();
        assert_eq!(order, ["a", "b", "c"]);
        assert_eq!(q.now(), 3.0);
    }

    #[test]
    fn ties_break_by_schedule_order() {
        let mut q = EventQueue::new();
        q.schedule(1.0, "first").unwrap();
        q.schedule(1.0, "second").unwrap();
        q.schedule(1.0, "third").unwrap();
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|(_, p)| p).collect();
        assert_eq!(order, ["first", "second", "third"]);
    }

    #[test]
    fn rejects_past_and_nonfinite() {
        let mut q = EventQueue::new();
        q.schedule(5.0, ()).unwrap();
        q.pop();
        assert_eq!(
            q.schedule(4.0, ()),
            Err(ScheduleError::InPast {
                now: 5.0,
                requested: 4.0
            })
        );
        assert_eq!(q.schedule(f64::NAN, ()), Err(ScheduleError::NotFinite));
        assert_eq!(q.schedule(f64::INFINITY, ()), Err(ScheduleError::NotFinite));
        // Scheduling exactly "now" is fine.
        assert!(q.schedule(5.0, ()).is_ok());
    }

    #[test]
    fn cancellation() {
        let mut q = EventQueue::new();
        let a = q.schedule(1.0, "a").unwrap();
        q.schedule(2.0, "b").unwrap();
        assert!(q.cancel(a));
        assert!(!q.cancel(a), "double cancel reports false");
        assert_eq!(q.len(), 1);
        let (_, p) = q.pop().unwrap();
        assert_eq!(p, "b");
        assert!(!q.cancel(a), "cancel after fire reports false");
    }

    #[test]
    fn interleaved_schedule_and_pop_deterministic() {
        let run = || {
            let mut q = EventQueue::new();
            let mut log = Vec::new();
            q.schedule(0.5, 0u32).unwrap();
            q.schedule(1.5, 1).unwrap();
            while let Some((t, v)) = q.pop() {
                log.push((t, v));
                if v < 8 {
                    // Same-time children fire after older same-time peers.
                    q.schedule(t, v + 10).unwrap();
                    q.schedule(t + 0.25, v + 1).unwrap();
                }
            }
            log
        };
        assert_eq!(run(), run());
        let log = run();
        for w in log.windows(2) {
            assert!(w[0].0 <= w[1].0, "time ordering violated: {:?}", w);
        }
    }

    #[test]
    fn fired_counter() {
        let mut q = EventQueue::new();
        for i in 0..10 {
            q.schedule(i as f64, i).unwrap();
        }
        while q.pop().is_some() {}
        assert_eq!(q.fired(), 10);
    }
}
