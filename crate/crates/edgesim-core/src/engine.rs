//! Virtual clock and time-ordered event queue.
//!
//! The engine owns nothing but time: a monotone `f64` clock and a priority
//! queue of payload-carrying events. Events fire in ascending `(time, seq)`
//! order, where `seq` is the insertion sequence number — two events scheduled
//! for the same instant dispatch in the order they were scheduled, which is
//! what makes runs reproducible down to the byte.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;
use core::fmt;

/// An event popped from the queue, ready to be handled.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent<P> {
    /// Virtual time at which the event fires.
    pub time: f64,
    /// Insertion sequence number; ties on `time` dispatch in this order.
    pub seq: u64,
    /// What the event concerns (task id, device id, ...). Opaque to the engine.
    pub payload: P,
}

/// Why an event could not be scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleError {
    /// The requested fire time is earlier than the current clock.
    InPast,
    /// The requested fire time is NaN or infinite.
    NotFinite,
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::InPast => write!(f, "event fire time is before the current clock"),
            ScheduleError::NotFinite => write!(f, "event fire time must be finite"),
        }
    }
}

/// Min-heap entry ordered by `(time, seq)`.
///
/// `BinaryHeap` is a max-heap, so comparisons are reversed. `time` is never
/// NaN (checked at scheduling), which makes `total_cmp` a true total order
/// here.
struct HeapEntry<P> {
    time: f64,
    seq: u64,
    payload: P,
}

impl<P> PartialEq for HeapEntry<P> {
    fn eq(&self, other: &Self) -> bool {
        self.time.total_cmp(&other.time) == Ordering::Equal && self.seq == other.seq
    }
}

impl<P> Eq for HeapEntry<P> {}

impl<P> PartialOrd for HeapEntry<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for HeapEntry<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Virtual clock plus pending-event queue.
pub struct Engine<P> {
    now: f64,
    next_seq: u64,
    queue: BinaryHeap<HeapEntry<P>>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    /// A fresh engine with the clock at zero.
    pub fn new() -> Self {
        Engine {
            now: 0.0,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    /// Current virtual time. Never decreases.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Number of pending events.
    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Schedule `payload` to fire at absolute time `time`.
    ///
    /// `time == now()` is allowed (zero-delay events fire within the current
    /// run, after already-queued events of the same instant). Returns the
    /// event's sequence number.
    pub fn schedule(&mut self, time: f64, payload: P) -> Result<u64, ScheduleError> {
        if !time.is_finite() {
            return Err(ScheduleError::NotFinite);
        }
        if time < self.now {
            return Err(ScheduleError::InPast);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(HeapEntry {
            time,
            seq,
            payload,
        });
        Ok(seq)
    }

    /// Schedule `payload` to fire `delay` seconds from now.
    pub fn schedule_in(&mut self, delay: f64, payload: P) -> Result<u64, ScheduleError> {
        self.schedule(self.now + delay, payload)
    }

    /// Pop the next event if it fires at or before `t_end`, advancing the
    /// clock to its fire time. Returns `None` (clock untouched) when the
    /// queue is empty or the next event lies beyond `t_end`.
    pub fn pop_due(&mut self, t_end: f64) -> Option<SimEvent<P>> {
        let due = matches!(self.queue.peek(), Some(head) if head.time <= t_end);
        if !due {
            return None;
        }
        let entry = self.queue.pop().expect("peeked entry vanished");
        self.now = entry.time;
        Some(SimEvent {
            time: entry.time,
            seq: entry.seq,
            payload: entry.payload,
        })
    }

    /// Advance the clock to `t` if that is later than now.
    ///
    /// Used to close out a run at its horizon once no more events are due.
    pub fn advance_to(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Dispatch every event with fire time `<= t_end` in `(time, seq)` order,
    /// invoking `handler` for each. The handler may schedule further events,
    /// including zero-delay ones. Returns the number of events dispatched;
    /// afterwards the clock sits at `t_end` (or later if it already was).
    pub fn run_until(
        &mut self,
        t_end: f64,
        mut handler: impl FnMut(&mut Self, SimEvent<P>),
    ) -> usize {
        let mut dispatched = 0;
        while let Some(event) = self.pop_due(t_end) {
            handler(self, event);
            dispatched += 1;
        }
        self.advance_to(t_end);
        dispatched
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn dispatches_in_time_order_regardless_of_insertion() {
        let mut engine: Engine<&str> = Engine::new();
        engine.schedule(3.0, "c").unwrap();
        engine.schedule(1.0, "a").unwrap();
        engine.schedule(2.0, "b").unwrap();
        let mut seen = Vec::new();
        engine.run_until(10.0, |_, ev| seen.push((ev.time, ev.payload)));
        assert_eq!(seen, vec![(1.0, "a"), (2.0, "b"), (3.0, "c")]);
        assert_eq!(engine.now(), 10.0);
    }

    #[test]
    fn equal_fire_times_dispatch_in_insertion_order() {
        let mut engine: Engine<u32> = Engine::new();
        for id in 0..5 {
            engine.schedule(7.5, id).unwrap();
        }
        let mut seen = Vec::new();
        engine.run_until(7.5, |_, ev| seen.push(ev.payload));
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn zero_delay_event_fires_within_current_run() {
        let mut engine: Engine<&str> = Engine::new();
        engine.schedule(5.0, "outer").unwrap();
        let mut seen = Vec::new();
        engine.run_until(5.0, |eng, ev| {
            seen.push(ev.payload);
            if ev.payload == "outer" {
                eng.schedule_in(0.0, "inner").unwrap();
            }
        });
        assert_eq!(seen, vec!["outer", "inner"]);
        assert_eq!(engine.now(), 5.0);
    }

    #[test]
    fn scheduling_before_now_is_rejected() {
        let mut engine: Engine<()> = Engine::new();
        engine.schedule(2.0, ()).unwrap();
        engine.run_until(2.0, |_, _| {});
        assert_eq!(engine.schedule(1.0, ()), Err(ScheduleError::InPast));
    }

    #[test]
    fn non_finite_fire_times_are_rejected() {
        let mut engine: Engine<()> = Engine::new();
        assert_eq!(engine.schedule(f64::NAN, ()), Err(ScheduleError::NotFinite));
        assert_eq!(
            engine.schedule(f64::INFINITY, ()),
            Err(ScheduleError::NotFinite)
        );
    }

    #[test]
    fn run_until_on_empty_queue_just_advances_clock() {
        let mut engine: Engine<()> = Engine::new();
        let dispatched = engine.run_until(300.0, |_, _| {});
        assert_eq!(dispatched, 0);
        assert_eq!(engine.now(), 300.0);
    }

    #[test]
    fn events_beyond_horizon_stay_queued() {
        let mut engine: Engine<&str> = Engine::new();
        engine.schedule(1.0, "due").unwrap();
        engine.schedule(400.0, "late").unwrap();
        let dispatched = engine.run_until(300.0, |_, _| {});
        assert_eq!(dispatched, 1);
        assert_eq!(engine.pending(), 1);
        assert_eq!(engine.now(), 300.0);
    }

    proptest! {
        /// Dispatch order is exactly the (time, seq) sort of whatever was
        /// scheduled, and the clock never moves backwards while draining.
        #[test]
        fn dispatch_order_is_time_then_sequence(times in proptest::collection::vec(0.0f64..1000.0, 1..200)) {
            let mut engine: Engine<usize> = Engine::new();
            for (idx, &t) in times.iter().enumerate() {
                engine.schedule(t, idx).unwrap();
            }
            let mut expect: Vec<(f64, usize)> =
                times.iter().copied().enumerate().map(|(i, t)| (t, i)).collect();
            expect.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut seen = Vec::new();
            engine.run_until(1000.0, |eng, ev| {
                seen.push((ev.time, ev.payload, eng.now()));
            });
            let mut last_time = 0.0f64;
            for &(time, _, now_at_dispatch) in &seen {
                prop_assert!(time >= last_time, "clock moved backwards");
                prop_assert_eq!(now_at_dispatch, time, "now() must track the event");
                last_time = time;
            }
            let order: Vec<(f64, usize)> = seen.iter().map(|&(t, p, _)| (t, p)).collect();
            prop_assert_eq!(order, expect);
        }
    }
}
