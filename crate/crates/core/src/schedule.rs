//! Mode schedules: a sequence of modes and strictly increasing switching
//! times covering a horizon `[0, t_f]`.

use crate::error::{Error, Result};
use crate::system::ModeId;
use serde::{Deserialize, Serialize};

/// Intervals shorter than this are dropped during canonicalization. Sits far
/// below the shortest physically meaningful inter-switch gap (1e-8 s).
pub const ZERO_LENGTH_TOL: f64 = 1e-12;

/// A switched-control trajectory description: mode `modes[i]` is active on
/// `[T_{i-1}, T_i)` with `T_0 = 0` and `T_M = t_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    modes: Vec<ModeId>,
    switch_times: Vec<f64>,
    t_f: f64,
}

impl Schedule {
    /// Builds a schedule and checks its invariants (see [`Schedule::validate`]).
    pub fn new(modes: Vec<ModeId>, switch_times: Vec<f64>, t_f: f64) -> Result<Self> {
        let sched = Schedule {
            modes,
            switch_times,
            t_f,
        };
        sched.validate()?;
        Ok(sched)
    }

    /// The single-mode schedule `([mode], [])`.
    pub fn constant(mode: ModeId, t_f: f64) -> Result<Self> {
        Schedule::new(vec![mode], Vec::new(), t_f)
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn switch_times(&self) -> &[f64] {
        &self.switch_times
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    /// Number of modes M in the sequence.
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Checks: t_f > 0, |T| = M - 1, 0 < T_1 < ... < T_{M-1} < t_f, all finite.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_f.is_finite() && self.t_f > 0.0) {
            return Err(Error::validation(format!(
                "horizon t_f must be positive and finite, got {}",
                self.t_f
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::validation("schedule must contain at least one mode"));
        }
        if self.switch_times.len() + 1 != self.modes.len() {
            return Err(Error::validation(format!(
                "schedule has {} modes but {} switching times",
                self.modes.len(),
                self.switch_times.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &t) in self.switch_times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFinite("switching time"));
            }
            if t <= prev {
                return Err(Error::validation(format!(
                    "switching times must be strictly increasing within (0, t_f): T_{} = {} after {}",
                    i + 1,
                    t,
                    prev
                )));
            }
            prev = t;
        }
        if prev >= self.t_f {
            return Err(Error::validation(format!(
                "last switching time {} must lie strictly before t_f = {}",
                prev, self.t_f
            )));
        }
        Ok(())
    }

    /// Interval boundaries `[0, T_1, ..., T_{M-1}, t_f]`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.modes.len() + 1);
        b.push(0.0);
        b.extend_from_slice(&self.switch_times);
        b.push(self.t_f);
        b
    }

    /// Active mode at time `t`, right-continuous at switching instants.
    pub fn mode_at(&self, t: f64) -> ModeId {
        let i = self.switch_times.partition_point(|&s| s <= t);
        self.modes[i.min(self.modes.len() - 1)]
    }

    /// Merges adjacent equal modes and drops intervals shorter than
    /// [`ZERO_LENGTH_TOL`]. Idempotent.
    pub fn canonicalize(&self) -> Schedule {
        let bounds = self.boundaries();
        let mut modes: Vec<ModeId> = Vec::with_capacity(self.modes.len());
        let mut times: Vec<f64> = Vec::with_capacity(self.switch_times.len());
        for (i, &mode) in self.modes.iter().enumerate() {
            let len = bounds[i + 1] - bounds[i];
            if len < ZERO_LENGTH_TOL {
                continue;
            }
            if modes.last() == Some(&mode) {
                // same mode as the previous kept interval: extend it
                times.pop();
            } else {
                modes.push(mode);
            }
            times.push(bounds[i + 1]);
        }
        // the final pushed time is t_f, not a switch
        times.pop();
        if modes.is_empty() {
            // every interval was sub-tolerance; keep the first mode
            modes.push(self.modes[0]);
            times.clear();
        }
        Schedule {
            modes,
            switch_times: times,
            t_f: self.t_f,
        }
    }

    /// Inserts `mode` over an interval of duration `lambda` anchored at `tau`.
    ///
    /// The interval is centered at `tau` and slid (not truncated) to fit
    /// inside `[0, t_f]`, so the inserted duration is exactly `lambda`.
    /// The result is canonicalized.
    pub fn insert_mode(&self, mode: ModeId, tau: f64, lambda: f64) -> Result<Schedule> {
        if !(0.0..=self.t_f).contains(&tau) {
            return Err(Error::validation(format!(
                "insertion time {tau} outside [0, {}]",
                self.t_f
            )));
        }
        if lambda <= 0.0 {
            return Err(Error::validation("insertion duration must be positive"));
        }
        if lambda >= self.t_f {
            return Err(Error::validation(format!(
                "insertion duration {lambda} must be shorter than the horizon {}",
                self.t_f
            )));
        }
        let start = (tau - lambda / 2.0).clamp(0.0, self.t_f - lambda);
        let end = start + lambda;

        let bounds = self.boundaries();
        let mut modes = Vec::with_capacity(self.modes.len() + 2);
        let mut times = Vec::with_capacity(self.switch_times.len() + 2);
        let mut push = |m: ModeId, from: f64, to: f64, out_m: &mut Vec<ModeId>, out_t: &mut Vec<f64>| {
            if to > from {
                out_m.push(m);
                out_t.push(to);
            }
        };
        for (i, &m) in self.modes.iter().enumerate() {
            let (a, b) = (bounds[i], bounds[i + 1]);
            push(m, a, b.min(start), &mut modes, &mut times);
            push(m, a.max(end), b, &mut modes, &mut times);
        }
        // splice the inserted interval into position
        let pos = times.partition_point(|&t| t <= start);
        modes.insert(pos, mode);
        times.insert(pos, end);
        times.pop();
        let inserted = Schedule {
            modes,
            switch_times: times,
            t_f: self.t_f,
        };
        Ok(inserted.canonicalize())
    }

    /// Shifts the schedule left by `dt`, keeping the horizon length: the mode
    /// active at `dt` becomes the initial mode, and the final mode extends to
    /// cover the newly exposed tail.
    pub fn shift_left(&self, dt: f64) -> Result<Schedule> {
        if !(0.0..self.t_f).contains(&dt) {
            return Err(Error::validation(format!(
                "shift {dt} outside [0, t_f = {})",
                self.t_f
            )));
        }
        let first = self.mode_at(dt);
        let mut modes = vec![first];
        let mut times = Vec::new();
        for (i, &t) in self.switch_times.iter().enumerate() {
            if t > dt {
                times.push(t - dt);
                modes.push(self.modes[i + 1]);
            }
        }
        Ok(Schedule {
            modes,
            switch_times: times,
            t_f: self.t_f,
        }
        .canonicalize())
    }

    /// Restriction to `[0, head]`: switches at or beyond `head` are dropped.
    pub fn head(&self, head: f64) -> Result<Schedule> {
        if !(head > 0.0 && head <= self.t_f) {
            return Err(Error::validation(format!(
                "head length {head} outside (0, t_f = {}]",
                self.t_f
            )));
        }
        let mut modes = vec![self.modes[0]];
        let mut times = Vec::new();
        for (i, &t) in self.switch_times.iter().enumerate() {
            if t < head {
                times.push(t);
                modes.push(self.modes[i + 1]);
            }
        }
        Ok(Schedule {
            modes,
            switch_times: times,
            t_f: head,
        }
        .canonicalize())
    }

    /// Concatenates schedules laid end to end, merging equal modes across
    /// seams. Panics if `parts` is empty.
    pub fn concat(parts: &[Schedule]) -> Schedule {
        assert!(!parts.is_empty());
        let mut modes = Vec::new();
        let mut times = Vec::new();
        let mut offset = 0.0;
        for part in parts {
            for (i, &m) in part.modes.iter().enumerate() {
                if modes.last() == Some(&m) {
                    times.pop();
                } else {
                    modes.push(m);
                }
                let end = if i < part.switch_times.len() {
                    offset + part.switch_times[i]
                } else {
                    offset + part.t_f
                };
                times.push(end);
            }
            offset += part.t_f;
        }
        times.pop();
        Schedule {
            modes,
            switch_times: times,
            t_f: offset,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ScheduleDoc {
            t_f: self.t_f,
            sigma: self.modes.iter().map(|m| m.number()).collect(),
            tau: self.switch_times.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("schedule serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Schedule> {
        let doc: ScheduleDoc = serde_json::from_str(text)?;
        Schedule::new(
            doc.sigma.into_iter().map(ModeId::new).collect(),
            doc.tau,
            doc.t_f,
        )
    }
}

/// Serialized form: `{t_f, sigma: [...], tau: [...]}` with 1-based modes.
#[derive(Serialize, Deserialize)]
struct ScheduleDoc {
    t_f: f64,
    sigma: Vec<usize>,
    tau: Vec<f64>,
}
