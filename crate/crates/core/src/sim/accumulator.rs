use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("update at {at} precedes last update at {last}")]
pub struct OutOfOrderUpdate {
    pub at: f64,
    pub last: f64,
}

/// Integral of a piecewise-constant signal, counted only from `start` on.
#[derive(Debug, Clone)]
pub struct TimeWeighted<T: Scalar> {
    start: T,
    last_time: T,
    value: T,
    integral: T,
}

impl<T: Scalar> TimeWeighted<T> {
    /// Signal starts at `value` at time zero; integration begins at `start`.
    pub fn new(start: T, value: T) -> Self {
        TimeWeighted {
            start,
            last_time: T::zero(),
            value,
            integral: T::zero(),
        }
    }

    fn span_since_last(&self, t: T) -> T {
        let from = self.last_time.max(self.start);
        if t > from {
            t - from
        } else {
            T::zero()
        }
    }

    pub fn update(&mut self, time: T, value: T) -> Result<(), OutOfOrderUpdate> {
        if time < self.last_time {
            return Err(OutOfOrderUpdate {
                at: time.as_f64(),
                last: self.last_time.as_f64(),
            });
        }
        self.integral = self.integral + self.value * self.span_since_last(time);
        self.last_time = time;
        self.value = value;
        Ok(())
    }

    pub fn value(&self) -> T {
        self.value
    }

    /// Integral over `[start, t]`, `t` at or after the last update.
    pub fn integral_until(&self, t: T) -> T {
        self.integral + self.value * self.span_since_last(t)
    }

    /// Time average over `[start, t]`; `None` for an empty span.
    pub fn mean_until(&self, t: T) -> Option<T> {
        if t <= self.start {
            return None;
        }
        Some(self.integral_until(t) / (t - self.start))
    }
}
