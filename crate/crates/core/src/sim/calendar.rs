use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalendarError {
    #[error("cannot schedule at {at} before current clock {now}")]
    PastTime { at: f64, now: f64 },
    #[error("event time must be finite")]
    NonFinite,
}

struct Entry<T, E> {
    time: T,
    seq: u64,
    event: E,
}

impl<T: Scalar, E> PartialEq for Entry<T, E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar, E> Eq for Entry<T, E> {}

impl<T: Scalar, E> PartialOrd for Entry<T, E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar, E> Ord for Entry<T, E> {
    // Reversed so the max-heap yields the earliest (time, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .partial_cmp(&self.time)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending-event set with a monotone clock. Events at equal times fire in
/// insertion order.
pub struct EventCalendar<T: Scalar, E> {
    now: T,
    next_seq: u64,
    heap: BinaryHeap<Entry<T, E>>,
    cancelled: HashSet<u64>,
    processed: u64,
}

impl<T: Scalar, E> Default for EventCalendar<T, E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar, E> EventCalendar<T, E> {
    pub fn new() -> Self {
        EventCalendar {
            now: T::zero(),
            next_seq: 0,
            heap: BinaryHeap::new(),
            cancelled: HashSet::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> T {
        self.now
    }

    /// Events popped so far.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending() == 0
    }

    pub fn schedule(&mut self, at: T, event: E) -> Result<EventHandle, CalendarError> {
        if !at.is_finite() {
            return Err(CalendarError::NonFinite);
        }
        if at < self.now {
            return Err(CalendarError::PastTime {
                at: at.as_f64(),
                now: self.now.as_f64(),
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { time: at, seq, event });
        Ok(EventHandle(seq))
    }

    pub fn schedule_in(&mut self, delay: T, event: E) -> Result<EventHandle, CalendarError> {
        self.schedule(self.now + delay, event)
    }

    /// Returns false if the event already fired or was cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.0 >= self.next_seq || !self.heap.iter().any(|e| e.seq == handle.0) {
            return false;
        }
        self.cancelled.insert(handle.0)
    }

    fn discard_cancelled_head(&mut self) {
        while let Some(head) = self.heap.peek() {
            if self.cancelled.remove(&head.seq) {
                self.heap.pop();
            } else {
                break;
            }
        }
    }

    pub fn peek_time(&mut self) -> Option<T> {
        self.discard_cancelled_head();
        self.heap.peek().map(|e| e.time)
    }

    /// Pops the next event if it is due at or before `t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: T) -> Option<(T, E)> {
        self.discard_cancelled_head();
        if self.heap.peek()?.time > t_end {
            return None;
        }
        let entry = self.heap.pop()?;
        debug_assert!(entry.time >= self.now);
        self.now = entry.time;
        self.processed += 1;
        Some((entry.time, entry.event))
    }

    /// Advances the clock to `t_end` without processing anything further.
    pub fn advance_to(&mut self, t_end: T) {
        if t_end > self.now {
            self.now = t_end;
        }
    }

    /// Processes every event due at or before `t_end`, then sets the clock to
    /// `t_end`. Returns the number of events processed by this call.
    pub fn run_until<F>(&mut self, t_end: T, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, T, E),
    {
        let mut count = 0;
        while let Some((t, ev)) = self.pop_until(t_end) {
            handler(self, t, ev);
            count += 1;
        }
        self.advance_to(t_end);
        count
    }
}
