use std::collections::BTreeMap;

use crate::scenario::AgeGroup;

/// One broadcast channel per age group. Subscribers are woken in ascending
/// `(priority, subscription order)`; equal priorities are plain FIFO.
#[derive(Debug, Clone)]
pub struct SignalHub<S> {
    channels: [BTreeMap<(u64, u64), S>; 4],
    next_seq: u64,
}

impl<S> Default for SignalHub<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S> SignalHub<S> {
    pub fn new() -> Self {
        SignalHub {
            channels: Default::default(),
            next_seq: 0,
        }
    }

    pub fn subscribe(&mut self, group: AgeGroup, priority: u64, subscriber: S) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.channels[group.index()].insert((priority, seq), subscriber);
    }

    pub fn waiting(&self, group: AgeGroup) -> usize {
        self.channels[group.index()].len()
    }

    pub fn total_waiting(&self) -> usize {
        self.channels.iter().map(BTreeMap::len).sum()
    }

    /// Removes and returns the current subscribers of `group` in wake order,
    /// each with the priority it subscribed under.
    pub fn drain(&mut self, group: AgeGroup) -> Vec<(u64, S)> {
        std::mem::take(&mut self.channels[group.index()])
            .into_iter()
            .map(|((p, _), s)| (p, s))
            .collect()
    }

    /// Wakes every current subscriber of `group` one at a time. `wake`
    /// returns `Some` to re-subscribe (under the same priority). Subscribers
    /// added during the broadcast are not woken by it. Returns the number woken.
    pub fn broadcast<F>(&mut self, group: AgeGroup, mut wake: F) -> usize
    where
        F: FnMut(S) -> Option<S>,
    {
        let current = self.drain(group);
        let n = current.len();
        for (priority, s) in current {
            if let Some(s) = wake(s) {
                self.subscribe(group, priority, s);
            }
        }
        n
    }

    pub fn subscribers(&self, group: AgeGroup) -> impl Iterator<Item = &S> {
        self.channels[group.index()].values()
    }
}
