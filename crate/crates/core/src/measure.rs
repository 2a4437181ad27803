//! Subintervals of [0,1] and finite disjoint unions of them.
//!
//! `MeasSet` is the representation used for level sets, masks and supports.
//! Intervals are kept sorted, pairwise disjoint and merged when adjacent, so
//! the measure is always the plain sum of lengths.

use crate::error::{Error, Result};

/// A subinterval of [0,1]. Endpoint inclusion is not tracked: all set
/// operations are up to measure zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval ({lo}, {hi}) not inside [0,1]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Pointwise membership; the right endpoint counts only at t = 1 so that
    /// covers of [0,1] classify every point.
    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && (t < self.hi || (t == 1.0 && self.hi == 1.0))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo < hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }
}

/// Finite disjoint union of subintervals of [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct MeasSet {
    intervals: Vec<Interval>,
}

impl MeasSet {
    pub fn empty() -> Self {
        MeasSet { intervals: vec![] }
    }

    pub fn full() -> Self {
        MeasSet {
            intervals: vec![Interval { lo: 0.0, hi: 1.0 }],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let iv = Interval::new(lo, hi)?;
        Ok(if iv.is_empty() {
            MeasSet::empty()
        } else {
            MeasSet { intervals: vec![iv] }
        })
    }

    /// Builds a set from raw endpoint pairs. Overlapping or adjacent pieces
    /// are merged, empty pieces dropped.
    pub fn from_endpoints(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut ivs = Vec::with_capacity(pairs.len());
        for &(lo, hi) in pairs {
            let iv = Interval::new(lo, hi)?;
            if !iv.is_empty() {
                ivs.push(iv);
            }
        }
        ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Ok(MeasSet { intervals: ivs }.normalized())
    }

    fn normalized(self) -> Self {
        let mut out: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals {
            if iv.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => out.push(iv),
            }
        }
        MeasSet { intervals: out }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(t))
    }

    /// Infimum of the set (1.0 for the empty set).
    pub fn inf(&self) -> f64 {
        self.intervals.first().map_or(1.0, |iv| iv.lo)
    }

    /// Supremum of the set (0.0 for the empty set).
    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.hi)
    }

    pub fn complement(&self) -> MeasSet {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = 0.0;
        for iv in &self.intervals {
            if iv.lo > cursor {
                out.push(Interval { lo: cursor, hi: iv.lo });
            }
            cursor = cursor.max(iv.hi);
        }
        if cursor < 1.0 {
            out.push(Interval { lo: cursor, hi: 1.0 });
        }
        MeasSet { intervals: out }
    }

    pub fn intersect(&self, other: &MeasSet) -> MeasSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = self.intervals[i];
            let b = other.intervals[j];
            if let Some(iv) = a.intersect(&b) {
                out.push(iv);
            }
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        MeasSet { intervals: out }.normalized()
    }

    pub fn union(&self, other: &MeasSet) -> MeasSet {
        let mut ivs: Vec<Interval> = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .copied()
            .collect();
        ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        MeasSet { intervals: ivs }.normalized()
    }
}
