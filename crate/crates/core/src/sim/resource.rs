use std::collections::{BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReservationToken(u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ResourceError {
    #[error("no bed available")]
    Unavailable,
    #[error("unknown or already resolved reservation token")]
    UnknownToken,
    #[error("release on a resource with no bed in service")]
    ReleaseOnEmpty,
}

/// What happened to a bed that was given back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Freed<Q> {
    /// The head of the local queue seized it; nothing to broadcast.
    HandedToQueue(Q),
    /// The bed is idle; the caller forwards a free-bed signal.
    Idle,
}

/// Counting bed pool with in-transit reservations and a FIFO queue of local
/// (non-ED) admissions.
///
/// Invariants: `in_service + reserved <= capacity`, and a nonempty queue
/// implies no bed is available.
#[derive(Debug, Clone)]
pub struct BedResource<Q> {
    capacity: u32,
    in_service: u32,
    outstanding: BTreeSet<u64>,
    next_token: u64,
    queue: VecDeque<Q>,
    commits: u64,
    releases: u64,
}

impl<Q> BedResource<Q> {
    pub fn new(capacity: u32) -> Self {
        assert!(capacity >= 1, "bed capacity must be positive");
        BedResource {
            capacity,
            in_service: 0,
            outstanding: BTreeSet::new(),
            next_token: 0,
            queue: VecDeque::new(),
            commits: 0,
            releases: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn in_service(&self) -> u32 {
        self.in_service
    }

    pub fn reserved(&self) -> u32 {
        self.outstanding.len() as u32
    }

    pub fn available(&self) -> u32 {
        self.capacity - self.in_service - self.reserved()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Total beds taken into service (reservation commits and direct seizes).
    pub fn commits(&self) -> u64 {
        self.commits
    }

    pub fn releases(&self) -> u64 {
        self.releases
    }

    pub fn reserve(&mut self) -> Result<ReservationToken, ResourceError> {
        if self.available() == 0 {
            return Err(ResourceError::Unavailable);
        }
        let id = self.next_token;
        self.next_token += 1;
        self.outstanding.insert(id);
        Ok(ReservationToken(id))
    }

    /// Converts a reservation into an occupied bed.
    pub fn commit(&mut self, token: ReservationToken) -> Result<(), ResourceError> {
        if !self.outstanding.remove(&token.0) {
            return Err(ResourceError::UnknownToken);
        }
        self.in_service += 1;
        self.commits += 1;
        Ok(())
    }

    /// Abandons a reservation without occupying the bed.
    pub fn release_reservation(&mut self, token: ReservationToken) -> Result<Freed<Q>, ResourceError> {
        if !self.outstanding.remove(&token.0) {
            return Err(ResourceError::UnknownToken);
        }
        Ok(self.hand_off())
    }

    /// Occupies a free bed immediately, or queues `q` if none is free.
    /// Returns `Some(q)` when the bed was seized.
    pub fn seize_or_enqueue(&mut self, q: Q) -> Option<Q> {
        if self.available() > 0 {
            self.in_service += 1;
            self.commits += 1;
            Some(q)
        } else {
            self.queue.push_back(q);
            None
        }
    }

    /// Discharges one occupant. The bed goes to the queue head if anyone is
    /// waiting locally.
    pub fn release(&mut self) -> Result<Freed<Q>, ResourceError> {
        if self.in_service == 0 {
            return Err(ResourceError::ReleaseOnEmpty);
        }
        self.in_service -= 1;
        self.releases += 1;
        Ok(self.hand_off())
    }

    fn hand_off(&mut self) -> Freed<Q> {
        match self.queue.pop_front() {
            Some(q) => {
                self.in_service += 1;
                self.commits += 1;
                Freed::HandedToQueue(q)
            }
            None => Freed::Idle,
        }
    }

    /// Debug check of the capacity and queue invariants.
    pub fn invariants_hold(&self) -> bool {
        self.in_service + self.reserved() <= self.capacity
            && (self.queue.is_empty() || self.available() == 0)
    }
}
