//! Sparse spike trains over a discrete time window.
//!
//! A train stores one event per occupied timestep together with a
//! multiplicity, so burst-coded multi-spike steps need no duplicate
//! entries and empty windows cost nothing.

use crate::error::{CoreError, Result};

/// One occupied timestep of a spike train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SpikeEvent {
    /// Timestep in `[0, T)`.
    pub time: u32,
    /// Number of spikes emitted at this step, at least 1.
    pub count: u32,
}

/// Multiset of spike times for one neuron over a window `[0, T)`.
///
/// Events are sorted strictly ascending by time and every count is
/// positive. The empty train is valid.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct SpikeTrain {
    events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    /// An empty train.
    pub fn empty() -> Self {
        SpikeTrain { events: Vec::new() }
    }

    /// Build a train from `(time, count)` pairs, validating the invariants
    /// against the window length `window`.
    pub fn new(events: Vec<SpikeEvent>, window: u32) -> Result<Self> {
        for (i, ev) in events.iter().enumerate() {
            if ev.count == 0 {
                return Err(CoreError::invalid_input(format!(
                    "event {i} has zero count"
                )));
            }
            if ev.time >= window {
                return Err(CoreError::invalid_input(format!(
                    "event {i} at t={} outside window [0, {window})",
                    ev.time
                )));
            }
            if i > 0 && events[i - 1].time >= ev.time {
                return Err(CoreError::invalid_input(format!(
                    "events not strictly ascending at index {i}"
                )));
            }
        }
        Ok(SpikeTrain { events })
    }

    /// Build a train from unsorted unit-spike times, merging duplicates
    /// into multiplicities. Times must already lie inside the window.
    pub fn from_unit_times(mut times: Vec<u32>) -> Self {
        times.sort_unstable();
        let mut events: Vec<SpikeEvent> = Vec::new();
        for t in times {
            match events.last_mut() {
                Some(ev) if ev.time == t => ev.count += 1,
                _ => events.push(SpikeEvent { time: t, count: 1 }),
            }
        }
        SpikeTrain { events }
    }

    /// Sorted events, one per occupied timestep.
    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    /// Total spike count including multiplicities.
    pub fn total_count(&self) -> u64 {
        self.events.iter().map(|e| u64::from(e.count)).sum()
    }

    /// Time of the first spike, if any.
    pub fn first_time(&self) -> Option<u32> {
        self.events.first().map(|e| e.time)
    }

    /// Time of the last spike, if any.
    pub fn last_time(&self) -> Option<u32> {
        self.events.last().map(|e| e.time)
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Multiplicity at timestep `t` (0 when silent).
    pub fn count_at(&self, t: u32) -> u32 {
        self.events
            .binary_search_by_key(&t, |e| e.time)
            .map(|i| self.events[i].count)
            .unwrap_or(0)
    }

    /// Iterate each spike as a unit event, expanding multiplicities.
    pub fn iter_units(&self) -> impl Iterator<Item = u32> + '_ {
        self.events
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.time, e.count as usize))
    }

    /// Multiset union of two trains.
    pub fn merge(&self, other: &SpikeTrain) -> SpikeTrain {
        let mut events = Vec::with_capacity(self.events.len() + other.events.len());
        let (mut a, mut b) = (self.events.iter().peekable(), other.events.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) if x.time == y.time => {
                    events.push(SpikeEvent {
                        time: x.time,
                        count: x.count + y.count,
                    });
                    a.next();
                    b.next();
                }
                (Some(x), Some(y)) => {
                    if x.time < y.time {
                        events.push(**x);
                        a.next();
                    } else {
                        events.push(**y);
                        b.next();
                    }
                }
                (Some(x), None) => {
                    events.push(**x);
                    a.next();
                }
                (None, Some(y)) => {
                    events.push(**y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        SpikeTrain { events }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_train_is_valid() {
        let t = SpikeTrain::empty();
        assert!(t.is_empty());
        assert_eq!(t.total_count(), 0);
        assert_eq!(t.first_time(), None);
    }

    #[test]
    fn new_rejects_out_of_window_and_unsorted() {
        let bad = SpikeTrain::new(vec![SpikeEvent { time: 10, count: 1 }], 10);
        assert!(bad.is_err());
        let bad = SpikeTrain::new(
            vec![
                SpikeEvent { time: 5, count: 1 },
                SpikeEvent { time: 5, count: 2 },
            ],
            10,
        );
        assert!(bad.is_err());
        let bad = SpikeTrain::new(vec![SpikeEvent { time: 3, count: 0 }], 10);
        assert!(bad.is_err());
    }

    #[test]
    fn from_unit_times_merges_duplicates() {
        let t = SpikeTrain::from_unit_times(vec![7, 3, 7, 7, 3]);
        assert_eq!(
            t.events(),
            &[
                SpikeEvent { time: 3, count: 2 },
                SpikeEvent { time: 7, count: 3 }
            ]
        );
        assert_eq!(t.total_count(), 5);
    }

    #[test]
    fn merge_is_multiset_union() {
        let a = SpikeTrain::from_unit_times(vec![1, 4]);
        let b = SpikeTrain::from_unit_times(vec![4, 9]);
        let m = a.merge(&b);
        assert_eq!(m.total_count(), 4);
        assert_eq!(m.count_at(4), 2);
        assert_eq!(m.count_at(1), 1);
        assert_eq!(m.count_at(9), 1);
    }
}
