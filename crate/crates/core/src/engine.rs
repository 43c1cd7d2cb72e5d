//! Deterministic discrete-event queue.
//!
//! Events are dispatched in `(fire_time, sequence_number)` order, where the
//! sequence number is a global insertion counter. Two events scheduled for
//! the same instant therefore fire in the order they were scheduled.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use thiserror::Error;

use crate::units::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot schedule at {requested} when the clock is at {now}")]
pub struct SchedulingInPast {
    pub requested: SimTime,
    pub now: SimTime,
}

/// Handle returned by [`EventQueue::schedule`]; used to cancel timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle {
    pub fire_time: SimTime,
    pub seq: u64,
}

impl EventHandle {
    fn key(&self) -> (SimTime, u64) {
        (self.fire_time, self.seq)
    }
}

struct Entry<E> {
    fire_time: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.fire_time, self.seq).cmp(&(other.fire_time, other.seq))
    }
}

/// Pending-event set with a monotone clock.
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    now: SimTime,
    next_seq: u64,
    // Key of the most recently dispatched event. Every event with a key at
    // or below it has fired or was cancelled.
    last_dispatched: Option<(SimTime, u64)>,
    cancelled: HashSet<u64>,
    dispatched: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            now: SimTime::ZERO,
            next_seq: 0,
            last_dispatched: None,
            cancelled: HashSet::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events handed out by [`pop_until`](Self::pop_until).
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Live pending events (excludes cancelled ones still in the heap).
    pub fn pending(&self) -> usize {
        self.heap.len() - self.cancelled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending() == 0
    }

    pub fn schedule(
        &mut self,
        fire_time: SimTime,
        payload: E,
    ) -> Result<EventHandle, SchedulingInPast> {
        if fire_time < self.now {
            return Err(SchedulingInPast {
                requested: fire_time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry {
            fire_time,
            seq,
            payload,
        }));
        Ok(EventHandle { fire_time, seq })
    }

    /// Schedules `delay` after the current time; never fails.
    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload)
            .expect("relative scheduling cannot be in the past")
    }

    /// Returns true iff the event was pending and is now removed.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        if handle.seq >= self.next_seq {
            return false;
        }
        if let Some(last) = self.last_dispatched {
            if handle.key() <= last {
                return false;
            }
        }
        self.cancelled.insert(handle.seq)
    }

    /// Pops the next live event with `fire_time <= t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        loop {
            let head = self.heap.peek()?;
            if head.0.fire_time > t_end {
                return None;
            }
            let Reverse(entry) = self.heap.pop().expect("peeked");
            self.last_dispatched = Some((entry.fire_time, entry.seq));
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            debug_assert!(entry.fire_time >= self.now);
            self.now = entry.fire_time;
            self.dispatched += 1;
            return Some((entry.fire_time, entry.payload));
        }
    }

    /// Moves the clock forward to `t` without dispatching anything. Used
    /// after a bounded run so that later scheduling is relative to `t`.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            debug_assert!(self
                .heap
                .peek()
                .is_none_or(|e| e.0.fire_time >= t || self.cancelled.contains(&e.0.seq)));
            self.now = t;
        }
    }

    /// Fire time of the next live event, if any.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        while let Some(head) = self.heap.peek() {
            if self.cancelled.contains(&head.0.seq) {
                let Reverse(entry) = self.heap.pop().expect("peeked");
                self.cancelled.remove(&entry.seq);
                self.last_dispatched = Some((entry.fire_time, entry.seq));
                continue;
            }
            return Some(head.0.fire_time);
        }
        None
    }
}
