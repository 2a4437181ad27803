//! Exponent functions p(·) on [0,1] and their transformations: dual
//! exponents, sublevel sets, decreasing rearrangements, measure-preserving
//! shuffles, and the spiked family used for the closed-subspace experiments.

use crate::error::{Error, Result};
use crate::measure::MeasSet;

/// Dual-exponent computations clip p down at 1 + this, so p' stays finite.
pub const DUAL_CLIP_EPS: f64 = 1e-6;

/// Hard cap on explicit spiked levels (piece count grows like 2^(J+1)).
pub const MAX_SPIKED_LEVELS: u32 = 20;

/// Default positivity threshold for the tail-ratio criterion.
pub const KOZV_THRESHOLD: f64 = 1e-3;

/// Tail maxima must retain this fraction of the half-depth maxima to count
/// as stabilized (bounded exponents decay like 1/k and fail it).
const KOZV_STABILITY: f64 = 0.75;

/// An exponent function p: [0,1] -> (1, inf).
///
/// Everything is closed-form or piecewise-constant; arbitrary measurable
/// exponents enter through dyadic discretization at a chosen depth.
#[derive(Debug, Clone, PartialEq)]
pub enum Exponent {
    /// p(t) = p0.
    Constant(f64),
    /// Step function: `values[i]` on `[breaks[i], breaks[i+1])`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// p(t) = ln(e/t) = 1 - ln t. Unbounded at 0, touches 1 at t = 1.
    LogFamily,
    /// Explicit spike construction, see [`SpikedExponent`].
    Spiked(SpikedExponent),
    /// Pointwise conjugate 1/p + 1/p' = 1 of the inner exponent.
    Dual(Box<Exponent>),
    /// Decreasing rearrangement of a spiked exponent (lazy evaluator).
    RearrangedSpiked(SpikedExponent),
}

/// One constant piece of an explicit exponent layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPiece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

/// The spiked exponent: in every dyadic interval of length 2^-j, j <= J,
/// a sub-cell of measure 2^-2j (fraction eta_j = 2^-j) carries the value
/// max(b, s*j); off the spikes the value is b. Levels j > J are carried by
/// a staircase on the reservoir [1 - 2^-J, 1): the piece
/// [1 - 2^(1-j), 1 - 2^-j) has measure 2^-j and value max(b, s*j), so the
/// level-j spike measure is exactly 2^-j for every j > J and the exponent
/// is unbounded near t = 1. Explicit cells are packed disjointly, deepest
/// level first, leftmost-free within each dyadic interval; reservoir
/// measure counts toward the quota of the rightmost intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedExponent {
    levels: u32,
    slope: f64,
    base: f64,
    /// Sorted, contiguous cover of [0, 1 - 2^-J).
    pieces: Vec<ExpPiece>,
}

impl SpikedExponent {
    fn build(levels: u32, slope: f64, base: f64) -> Result<Self> {
        if levels < 1 || levels > MAX_SPIKED_LEVELS {
            return Err(Error::InvalidParameter(format!(
                "spiked levels must be in 1..={MAX_SPIKED_LEVELS}, got {levels}"
            )));
        }
        if !slope.is_finite() || slope <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spiked slope must be positive, got {slope}"
            )));
        }
        if !base.is_finite() || base <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "spiked base must exceed 1, got {base}"
            )));
        }

        // Exact packing in units of 2^-2J.
        let scale_bits = 2 * levels;
        let total: u64 = 1 << scale_bits;
        let reservoir: u64 = 1 << levels;
        let explicit_end = total - reservoir;

        let mut free: Vec<(u64, u64)> = vec![(0, explicit_end)];
        let mut cells: Vec<(u64, u64, u32)> = Vec::new();

        for j in (1..=levels).rev() {
            let width: u64 = 1 << (scale_bits - j);
            let quota: u64 = 1 << (scale_bits - 2 * j);
            let count: u64 = 1 << j;
            let mut remaining: Vec<u64> = vec![quota; count as usize];
            // The reservoir sits inside the rightmost interval of every level
            // and already carries values >= s*(J+1) > s*j there.
            remaining[count as usize - 1] = quota.saturating_sub(reservoir);

            let mut new_free: Vec<(u64, u64)> = Vec::with_capacity(free.len() + 8);
            let push_free = |lo: u64, hi: u64, out: &mut Vec<(u64, u64)>| {
                if lo >= hi {
                    return;
                }
                match out.last_mut() {
                    Some(last) if last.1 == lo => last.1 = hi,
                    _ => out.push((lo, hi)),
                }
            };

            for &(flo, fhi) in &free {
                let mut pos = flo;
                while pos < fhi {
                    let k = (pos / width) as usize;
                    let seg_hi = fhi.min((k as u64 + 1) * width);
                    let take = remaining[k].min(seg_hi - pos);
                    if take > 0 {
                        cells.push((pos, pos + take, j));
                        remaining[k] -= take;
                    }
                    push_free(pos + take, seg_hi, &mut new_free);
                    pos = seg_hi;
                }
            }
            if remaining.iter().any(|&r| r > 0) {
                return Err(Error::InvalidParameter(format!(
                    "spiked packing infeasible at level {j}"
                )));
            }
            free = new_free;
        }

        let unit = 1.0 / total as f64;
        let mut pieces: Vec<ExpPiece> = cells
            .into_iter()
            .map(|(lo, hi, j)| ExpPiece {
                lo: lo as f64 * unit,
                hi: hi as f64 * unit,
                value: base.max(slope * j as f64),
            })
            .chain(free.into_iter().map(|(lo, hi)| ExpPiece {
                lo: lo as f64 * unit,
                hi: hi as f64 * unit,
                value: base,
            }))
            .collect();
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        // merge adjacent equal values
        let mut merged: Vec<ExpPiece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            match merged.last_mut() {
                Some(last) if last.hi == p.lo && last.value == p.value => last.hi = p.hi,
                _ => merged.push(p),
            }
        }

        Ok(SpikedExponent {
            levels,
            slope,
            base,
            pieces: merged,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    /// Explicit pieces covering [0, reservoir_start()).
    pub fn pieces(&self) -> &[ExpPiece] {
        &self.pieces
    }

    /// Left end of the staircase reservoir, 1 - 2^-J.
    pub fn reservoir_start(&self) -> f64 {
        1.0 - (-(self.levels as f64)).exp2()
    }

    /// Value on the reservoir staircase piece containing t.
    fn reservoir_value(&self, t: f64) -> f64 {
        debug_assert!(t >= self.reservoir_start() && t < 1.0);
        let u = 1.0 - t;
        // t in [1 - 2^(1-j), 1 - 2^-j)  <=>  j = floor(-log2 u) + 1
        let j = (-u.log2()).floor() + 1.0;
        self.base.max(self.slope * j)
    }

    fn eval(&self, t: f64) -> f64 {
        if t >= 1.0 {
            // measure-zero convention keeping the value finite
            return self.base;
        }
        if t >= self.reservoir_start() {
            return self.reservoir_value(t);
        }
        let idx = self
            .pieces
            .partition_point(|p| p.hi <= t)
            .min(self.pieces.len() - 1);
        self.pieces[idx].value
    }

    /// measure{ t : p(t) > y }, exact.
    fn distribution_above(&self, y: f64) -> f64 {
        let explicit: f64 = self
            .pieces
            .iter()
            .filter(|p| p.value > y)
            .map(|p| p.hi - p.lo)
            .sum();
        let tail = if self.base > y {
            (-(self.levels as f64)).exp2()
        } else {
            // tail level j contributes iff s*j > y, i.e. j >= j0
            let j0 = ((y / self.slope).floor() + 1.0).max(self.levels as f64 + 1.0);
            (1.0 - j0).exp2()
        };
        explicit + tail
    }

    fn level_set(&self, n: f64) -> Result<MeasSet> {
        let mut pairs: Vec<(f64, f64)> = self
            .pieces
            .iter()
            .filter(|p| p.value <= n)
            .map(|p| (p.lo, p.hi))
            .collect();
        if self.base <= n {
            let jmax = (n / self.slope).floor();
            if jmax >= self.levels as f64 + 1.0 {
                let hi = 1.0 - (-jmax).exp2();
                if hi >= 1.0 {
                    return Err(Error::UnsupportedVariant {
                        op: "level_set",
                        detail: format!("sublevel boundary 1 - 2^(-{jmax}) is within one ulp of 1"),
                    });
                }
                pairs.push((self.reservoir_start(), hi));
            }
        }
        Ok(MeasSet::from_endpoints(&pairs).expect("pieces lie in [0,1]"))
    }

    /// Decreasing rearrangement evaluated at t, via the exact distribution.
    fn rearranged_eval(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::UnboundedPoint(0.0));
        }
        if t >= 1.0 {
            return Ok(self.base);
        }
        let explicit_max = self
            .pieces
            .iter()
            .map(|p| p.value)
            .fold(self.base, f64::max);
        // Beyond j_e the only values above are pure tail levels.
        let j_e = ((explicit_max / self.slope).floor() + 1.0).max(self.levels as f64 + 1.0);
        let pure_tail_measure = (1.0 - j_e).exp2(); // measure{p >= s*j_e}
        if t < pure_tail_measure {
            // p* = s*j on [2^-j, 2^(1-j)), i.e. j = ceil(log2(1/t))
            let j = (-t.log2()).ceil().max(j_e);
            return Ok(self.slope * j);
        }
        // Finite zone: aggregate (value, measure) pairs and walk downward.
        let mut entries: Vec<(f64, f64)> = Vec::with_capacity(self.pieces.len() + 8);
        for p in &self.pieces {
            entries.push((p.value, p.hi - p.lo));
        }
        let mut j = self.levels as f64 + 1.0;
        while j < j_e {
            entries.push((self.base.max(self.slope * j), (-j).exp2()));
            j += 1.0;
        }
        entries.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut cum = pure_tail_measure;
        let mut i = 0;
        while i < entries.len() {
            let v = entries[i].0;
            let mut m = 0.0;
            while i < entries.len() && entries[i].0 == v {
                m += entries[i].1;
                i += 1;
            }
            cum += m;
            if t < cum {
                return Ok(v);
            }
        }
        Ok(self.base)
    }
}

/// Result of the tail-ratio criterion on p*(t)/ln(e/t).
#[derive(Debug, Clone, PartialEq)]
pub struct KozvReport {
    /// Ratios p*(2^-k)/ln(e 2^k) for k = 1..=grid_depth.
    pub ratios: Vec<f64>,
    /// Stabilized tail maximum of the ratios.
    pub tail_ratio: f64,
    pub verdict: bool,
}

impl Exponent {
    pub fn constant(p0: f64) -> Result<Self> {
        if !p0.is_finite() || p0 <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "constant exponent must lie in (1, inf), got {p0}"
            )));
        }
        Ok(Exponent::Constant(p0))
    }

    pub fn log_family() -> Self {
        Exponent::LogFamily
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || values.len() + 1 != breaks.len() {
            return Err(Error::InvalidParameter(
                "piecewise exponent needs breaks = values + 1".into(),
            ));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter(
                "piecewise breaks must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "piecewise breaks must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|&v| !v.is_finite() || v <= 1.0) {
            return Err(Error::InvalidParameter(
                "piecewise exponent values must lie in (1, inf)".into(),
            ));
        }
        Ok(Exponent::PiecewiseConstant { breaks, values })
    }

    /// Explicit spiked exponent with spike fractions eta_j = 2^-j.
    pub fn spiked(levels: u32, slope: f64, base: f64) -> Result<Self> {
        Ok(Exponent::Spiked(SpikedExponent::build(levels, slope, base)?))
    }

    /// Pointwise value of the exponent.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(t));
        }
        match self {
            Exponent::Constant(p0) => Ok(*p0),
            Exponent::PiecewiseConstant { breaks, values } => {
                let idx = breaks[1..breaks.len() - 1].partition_point(|&b| b <= t);
                Ok(values[idx])
            }
            Exponent::LogFamily => {
                if t == 0.0 {
                    Err(Error::UnboundedPoint(0.0))
                } else {
                    Ok(1.0 - t.ln())
                }
            }
            Exponent::Spiked(s) => Ok(s.eval(t)),
            Exponent::Dual(inner) => {
                let p = match inner.eval(t) {
                    Ok(p) => p,
                    Err(Error::UnboundedPoint(_)) => return Ok(1.0),
                    Err(e) => return Err(e),
                };
                let p = p.max(1.0 + DUAL_CLIP_EPS);
                Ok(p / (p - 1.0))
            }
            Exponent::RearrangedSpiked(s) => s.rearranged_eval(t),
        }
    }

    /// Pointwise conjugate exponent. Applying it twice returns the original
    /// exponent (structural involution).
    pub fn dual(&self) -> Exponent {
        match self {
            Exponent::Dual(inner) => (**inner).clone(),
            other => Exponent::Dual(Box::new(other.clone())),
        }
    }

    /// Sublevel set { t : p(t) <= n }, up to measure zero.
    pub fn level_set(&self, n: u32) -> Result<MeasSet> {
        if n < 1 {
            return Err(Error::InvalidParameter("level index must be >= 1".into()));
        }
        let n = n as f64;
        match self {
            Exponent::Constant(p0) => Ok(if *p0 <= n {
                MeasSet::full()
            } else {
                MeasSet::empty()
            }),
            Exponent::PiecewiseConstant { breaks, values } => {
                let pairs: Vec<(f64, f64)> = values
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v <= n)
                    .map(|(i, _)| (breaks[i], breaks[i + 1]))
                    .collect();
                MeasSet::from_endpoints(&pairs)
            }
            Exponent::LogFamily => {
                // 1 - ln t <= n  <=>  t >= e^(1-n)
                let u = (1.0 - n).exp();
                if n > 1.0 && u == 0.0 {
                    return Err(Error::UnsupportedVariant {
                        op: "level_set",
                        detail: format!("boundary e^(1-{n}) underflows f64"),
                    });
                }
                MeasSet::interval(u.min(1.0), 1.0)
            }
            Exponent::Spiked(s) => s.level_set(n),
            Exponent::Dual(_) | Exponent::RearrangedSpiked(_) => Err(Error::UnsupportedVariant {
                op: "level_set",
                detail: "only primal closed-form exponents have interval level sets".into(),
            }),
        }
    }

    /// measure{ t : p(t) > y }, exact for the supported variants.
    pub fn distribution_above(&self, y: f64) -> Result<f64> {
        match self {
            Exponent::Constant(p0) => Ok(if *p0 > y { 1.0 } else { 0.0 }),
            Exponent::PiecewiseConstant { breaks, values } => Ok(values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v > y)
                .map(|(i, _)| breaks[i + 1] - breaks[i])
                .sum()),
            Exponent::LogFamily => Ok((1.0 - y).exp().min(1.0)),
            Exponent::Spiked(s) | Exponent::RearrangedSpiked(s) => Ok(s.distribution_above(y)),
            Exponent::Dual(_) => Err(Error::UnsupportedVariant {
                op: "distribution_above",
                detail: "dual exponents are evaluators only".into(),
            }),
        }
    }

    /// The non-increasing rearrangement p*, equimeasurable with p.
    pub fn decreasing_rearrangement(&self) -> Result<Exponent> {
        match self {
            Exponent::Constant(p0) => Ok(Exponent::Constant(*p0)),
            Exponent::LogFamily => Ok(Exponent::LogFamily),
            Exponent::PiecewiseConstant { breaks, values } => {
                let mut pairs: Vec<(f64, f64)> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, breaks[i + 1] - breaks[i]))
                    .collect();
                pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
                let mut new_breaks = Vec::with_capacity(breaks.len());
                let mut new_values = Vec::with_capacity(values.len());
                let mut cursor = 0.0;
                new_breaks.push(0.0);
                for (v, len) in pairs {
                    cursor += len;
                    new_values.push(v);
                    new_breaks.push(cursor);
                }
                *new_breaks.last_mut().unwrap() = 1.0;
                Ok(Exponent::PiecewiseConstant {
                    breaks: new_breaks,
                    values: new_values,
                })
            }
            Exponent::Spiked(s) => Ok(Exponent::RearrangedSpiked(s.clone())),
            Exponent::RearrangedSpiked(s) => Ok(Exponent::RearrangedSpiked(s.clone())),
            Exponent::Dual(_) => Err(Error::UnsupportedVariant {
                op: "decreasing_rearrangement",
                detail: "rearrangement of a dual exponent is not representable".into(),
            }),
        }
    }

    /// Tail-ratio criterion: evaluates p*(t)/ln(e/t) on t = 2^-k,
    /// k = 1..=grid_depth. The verdict is true when the tail maxima sit
    /// above the threshold and have stopped decaying: the maximum over the
    /// last quarter of the grid must retain 75% of the maximum over the
    /// last half. A finite surrogate for limsup > 0.
    pub fn kozv_criterion(&self, grid_depth: u32) -> Result<KozvReport> {
        if grid_depth < 2 {
            return Err(Error::InvalidParameter("grid_depth must be >= 2".into()));
        }
        let rearranged = self.decreasing_rearrangement()?;
        let mut ratios = Vec::with_capacity(grid_depth as usize);
        for k in 1..=grid_depth {
            let t = (-(k as f64)).exp2();
            let p_star = rearranged.eval(t)?;
            ratios.push(p_star / (1.0 + k as f64 * std::f64::consts::LN_2));
        }
        let d = ratios.len();
        let suffix_max = |from: usize| -> f64 {
            ratios[from.min(d - 1)..]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let m_half = suffix_max(d / 2);
        let m_tail = suffix_max(3 * d / 4);
        let verdict = m_tail > KOZV_THRESHOLD && m_tail >= KOZV_STABILITY * m_half;
        Ok(KozvReport {
            ratios,
            tail_ratio: m_tail,
            verdict,
        })
    }

    /// Supremum of p over a set, None when essentially unbounded there.
    pub fn sup_on(&self, set: &MeasSet) -> Option<f64> {
        if set.is_empty() {
            return Some(1.0);
        }
        match self {
            Exponent::Constant(p0) => Some(*p0),
            Exponent::PiecewiseConstant { breaks, values } => {
                let mut sup = 1.0f64;
                for (i, &v) in values.iter().enumerate() {
                    let piece = MeasSet::interval(breaks[i], breaks[i + 1]).ok()?;
                    if piece.intersect(set).measure() > 0.0 {
                        sup = sup.max(v);
                    }
                }
                Some(sup)
            }
            Exponent::LogFamily => {
                let lo = set.inf();
                if lo > 0.0 {
                    Some(1.0 - lo.ln())
                } else {
                    None
                }
            }
            Exponent::Spiked(s) => {
                let hi = set.sup();
                if hi >= 1.0 {
                    return None;
                }
                let mut sup = 1.0f64;
                for p in &s.pieces {
                    let piece = MeasSet::interval(p.lo, p.hi).ok()?;
                    if piece.intersect(set).measure() > 0.0 {
                        sup = sup.max(p.value);
                    }
                }
                if hi > s.reservoir_start() {
                    sup = sup.max(s.reservoir_value(hi - (hi - s.reservoir_start()) * 1e-9));
                }
                Some(sup)
            }
            Exponent::Dual(_) => Some(1.0 + 1.0 / DUAL_CLIP_EPS),
            Exponent::RearrangedSpiked(s) => {
                let lo = set.inf();
                if lo > 0.0 {
                    s.rearranged_eval(lo).ok()
                } else {
                    None
                }
            }
        }
    }

    /// True when the exponent is essentially bounded on the whole interval.
    pub fn is_bounded(&self) -> bool {
        self.sup_on(&MeasSet::full()).is_some()
    }

    /// Piecewise-constant discretization on the dyadic grid of the given
    /// depth, sampling at cell midpoints.
    pub fn discretize_dyadic(&self, depth: u32) -> Result<Exponent> {
        if depth == 0 || depth > 24 {
            return Err(Error::InvalidParameter(
                "discretization depth must be in 1..=24".into(),
            ));
        }
        let n = 1usize << depth;
        let h = 1.0 / n as f64;
        let mut breaks = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n);
        for i in 0..=n {
            breaks.push(i as f64 * h);
        }
        for i in 0..n {
            let mid = (i as f64 + 0.5) * h;
            values.push(self.eval(mid)?.max(1.0 + DUAL_CLIP_EPS));
        }
        Ok(Exponent::PiecewiseConstant { breaks, values })
    }
}

/// Measure-preserving shuffle of a dyadic-constant exponent.
///
/// `perm` must be a permutation of 0..2^depth; output cell i receives the
/// value of input cell perm[i]. The inner exponent must be constant on the
/// cells of that grid.
pub fn shuffle_exponent(p: &Exponent, perm: &[usize]) -> Result<Exponent> {
    let cells = perm.len();
    if cells == 0 || !cells.is_power_of_two() {
        return Err(Error::NotMeasurePreserving(format!(
            "cell count {cells} is not a power of two"
        )));
    }
    let mut seen = vec![false; cells];
    for &i in perm {
        if i >= cells || seen[i] {
            return Err(Error::NotMeasurePreserving(
                "indices do not form a permutation".into(),
            ));
        }
        seen[i] = true;
    }

    let h = 1.0 / cells as f64;
    // Read the source values, demanding constancy on each grid cell.
    let mut source = Vec::with_capacity(cells);
    match p {
        Exponent::Constant(p0) => source = vec![*p0; cells],
        Exponent::PiecewiseConstant { breaks, values } => {
            for b in breaks {
                let scaled = b * cells as f64;
                if scaled.round() != scaled {
                    return Err(Error::UnsupportedVariant {
                        op: "shuffle_exponent",
                        detail: format!("break {b} is not on the dyadic grid of {cells} cells"),
                    });
                }
            }
            for i in 0..cells {
                let mid = (i as f64 + 0.5) * h;
                let idx = breaks[1..breaks.len() - 1].partition_point(|&b| b <= mid);
                source.push(values[idx]);
            }
        }
        _ => {
            return Err(Error::UnsupportedVariant {
                op: "shuffle_exponent",
                detail: "shuffle requires a piecewise-constant exponent; discretize first".into(),
            })
        }
    }

    let mut breaks = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        breaks.push(i as f64 * h);
    }
    let values: Vec<f64> = perm.iter().map(|&i| source[i]).collect();
    Ok(Exponent::PiecewiseConstant { breaks, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn eval_closed_forms() {
        let log = Exponent::log_family();
        assert!((log.eval(E_INV).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(Exponent::constant(2.0).unwrap().eval(0.37).unwrap(), 2.0);
        let pw = Exponent::piecewise(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        assert_eq!(pw.eval(0.75).unwrap(), 4.0);
        assert_eq!(pw.eval(0.25).unwrap(), 2.0);
        assert_eq!(pw.eval(0.5).unwrap(), 4.0);
    }

    #[test]
    fn eval_domain_errors() {
        let log = Exponent::log_family();
        assert!(matches!(log.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(log.eval(1.5), Err(Error::Domain(_))));
        assert!(matches!(log.eval(0.0), Err(Error::UnboundedPoint(_))));
    }

    #[test]
    fn dual_values_and_involution() {
        let p2 = Exponent::constant(2.0).unwrap();
        assert!((p2.dual().eval(0.3).unwrap() - 2.0).abs() < 1e-12);
        let p4 = Exponent::constant(4.0).unwrap();
        assert!((p4.dual().eval(0.9).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let log = Exponent::log_family();
        assert!((log.dual().eval(E_INV).unwrap() - 2.0).abs() < 1e-12);
        // structural involution
        assert_eq!(log.dual().dual(), log);
        // pointwise identity 1/p + 1/p' = 1 away from the clip
        for &t in &[0.01, 0.1, 0.5, 0.9] {
            let p = log.eval(t).unwrap();
            let pd = log.dual().eval(t).unwrap();
            assert!((1.0 / p + 1.0 / pd - 1.0).abs() < 1e-9, "t={t}");
        }
        // dual of log family at the unbounded point is the limit value 1
        assert_eq!(log.dual().eval(0.0).unwrap(), 1.0);
    }

    #[test]
    fn level_sets() {
        let log = Exponent::log_family();
        let omega2 = log.level_set(2).unwrap();
        assert!((omega2.measure() - (1.0 - E_INV)).abs() < 1e-12);
        assert!((omega2.inf() - E_INV).abs() < 1e-12);
        let omega1 = log.level_set(1).unwrap();
        assert_eq!(omega1.measure(), 0.0);

        let p2 = Exponent::constant(2.0).unwrap();
        assert_eq!(p2.level_set(3).unwrap(), MeasSet::full());
        assert_eq!(p2.level_set(1).unwrap().measure(), 0.0);
    }

    #[test]
    fn level_set_monotone_in_n() {
        let sp = Exponent::spiked(6, 4.0, 2.0).unwrap();
        let mut prev = 0.0;
        for n in 1..=200 {
            let m = sp.level_set(n).unwrap().measure();
            assert!(m + 1e-15 >= prev, "n={n}: {m} < {prev}");
            prev = m;
        }
        // measure{p <= n} = 1 - 2^(-floor(n/s)) for large n
        assert!((prev - 1.0).abs() < 1e-6, "{prev}");
    }

    #[test]
    fn rearrangement_sorts_piecewise() {
        let pw = Exponent::piecewise(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        let sorted = pw.decreasing_rearrangement().unwrap();
        assert_eq!(sorted.eval(0.25).unwrap(), 4.0);
        assert_eq!(sorted.eval(0.75).unwrap(), 2.0);
        let log = Exponent::log_family();
        assert_eq!(log.decreasing_rearrangement().unwrap(), log);
    }

    #[test]
    fn spiked_construction_invariant() {
        // every dyadic interval of level j <= J holds measure >= 2^-2j
        // with p >= s*j
        for j_levels in [1u32, 2, 3, 5, 8] {
            let sp = match Exponent::spiked(j_levels, 4.0, 2.0).unwrap() {
                Exponent::Spiked(s) => s,
                _ => unreachable!(),
            };
            for j in 1..=j_levels {
                let quota = (-2.0 * j as f64).exp2();
                let threshold = 4.0 * j as f64;
                for k in 0..(1u64 << j) {
                    let lo = k as f64 * (-(j as f64)).exp2();
                    let hi = (k + 1) as f64 * (-(j as f64)).exp2();
                    let mut m = 0.0;
                    for p in sp.pieces() {
                        if p.value >= threshold {
                            m += (p.hi.min(hi) - p.lo.max(lo)).max(0.0);
                        }
                    }
                    // reservoir values exceed s*J everywhere
                    let rs = sp.reservoir_start();
                    m += (hi.min(1.0) - lo.max(rs)).max(0.0);
                    assert!(
                        m >= quota - 1e-15,
                        "J={j_levels} level {j} interval {k}: {m} < {quota}"
                    );
                }
            }
        }
    }

    #[test]
    fn spiked_level_measures() {
        // explicit level-j spike measure is 2^-j up to the reservoir credit
        let sp = match Exponent::spiked(10, 4.0, 2.0).unwrap() {
            Exponent::Spiked(s) => s,
            _ => unreachable!(),
        };
        let mut total_spike = 0.0;
        for j in 1..=10u32 {
            let v = 4.0 * j as f64;
            let m: f64 = sp
                .pieces()
                .iter()
                .filter(|p| p.value == v)
                .map(|p| p.hi - p.lo)
                .sum();
            let expected = (-(j as f64)).exp2();
            assert!(
                (m - expected).abs() <= (-10.0f64).exp2(),
                "level {j}: {m} vs {expected}"
            );
            total_spike += m;
        }
        // off-spike + explicit + reservoir covers [0,1]
        let off: f64 = sp
            .pieces()
            .iter()
            .filter(|p| p.value == 2.0)
            .map(|p| p.hi - p.lo)
            .sum();
        let reservoir = 1.0 - sp.reservoir_start();
        assert!((total_spike + off + reservoir - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spiked_distribution_matches_sampling() {
        let sp = Exponent::spiked(5, 4.0, 2.0).unwrap();
        for &y in &[1.5, 2.0, 3.9, 4.0, 7.9, 12.0, 19.9, 40.0] {
            let exact = sp.distribution_above(y).unwrap();
            let n = 200_000;
            let mut count = 0u32;
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                if sp.eval(t).unwrap() > y {
                    count += 1;
                }
            }
            let approx = count as f64 / n as f64;
            assert!((exact - approx).abs() < 2e-4, "y={y}: {exact} vs {approx}");
        }
    }

    #[test]
    fn rearranged_spiked_matches_tail_formula() {
        let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
        let p_star = sp.decreasing_rearrangement().unwrap();
        // deep tail: p*(t) = 4j on [2^-j, 2^(1-j))
        for j in [14u32, 18, 25] {
            let t = (-(j as f64)).exp2();
            assert_eq!(p_star.eval(t).unwrap(), 4.0 * j as f64);
            assert_eq!(p_star.eval(t * 1.5).unwrap(), 4.0 * j as f64);
        }
    }

    #[test]
    fn rearranged_equimeasurable_with_primal() {
        let sp = Exponent::spiked(6, 4.0, 2.0).unwrap();
        let p_star = sp.decreasing_rearrangement().unwrap();
        for &y in &[1.2, 2.0, 4.0, 9.7, 16.0, 30.0] {
            let a = sp.distribution_above(y).unwrap();
            let b = p_star.distribution_above(y).unwrap();
            assert_eq!(a, b);
        }
        // and the evaluator agrees with the distribution: for each probe t,
        // measure{p > p*(t)} <= t <= measure{p >= p*(t)}
        for k in 1..=20 {
            let t = (-(k as f64 / 2.0)).exp2();
            let v = p_star.eval(t).unwrap();
            assert!(sp.distribution_above(v).unwrap() <= t + 1e-12);
            assert!(sp.distribution_above(v - 1e-9).unwrap() >= t - 1e-12);
        }
    }

    #[test]
    fn kozv_verdicts() {
        let log = Exponent::log_family();
        let rep = log.kozv_criterion(20).unwrap();
        assert!(rep.verdict);
        assert!((rep.tail_ratio - 1.0).abs() < 1e-12);

        let p2 = Exponent::constant(2.0).unwrap();
        let rep = p2.kozv_criterion(20).unwrap();
        assert!(!rep.verdict);

        let sp = Exponent::spiked(12, 4.0, 2.0).unwrap();
        let rep = sp.kozv_criterion(20).unwrap();
        assert!(rep.verdict);
        let target = 4.0 / std::f64::consts::LN_2;
        assert!(
            (rep.tail_ratio - target).abs() / target < 0.10,
            "tail ratio {} vs {target}",
            rep.tail_ratio
        );
    }

    #[test]
    fn shuffle_preserves_rearrangement() {
        let pw = Exponent::piecewise(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        let swapped = shuffle_exponent(&pw, &[1, 0]).unwrap();
        assert_eq!(
            swapped.decreasing_rearrangement().unwrap(),
            pw.decreasing_rearrangement().unwrap()
        );
        let id = shuffle_exponent(&pw, &[0, 1]).unwrap();
        assert_eq!(id.eval(0.25).unwrap(), 2.0);
        assert_eq!(id.eval(0.75).unwrap(), 4.0);
    }

    #[test]
    fn shuffle_rejects_non_permutation() {
        let pw = Exponent::piecewise(vec![0.0, 0.5, 1.0], vec![2.0, 4.0]).unwrap();
        assert!(matches!(
            shuffle_exponent(&pw, &[0, 0]),
            Err(Error::NotMeasurePreserving(_))
        ));
        assert!(matches!(
            shuffle_exponent(&pw, &[0, 1, 2]),
            Err(Error::NotMeasurePreserving(_))
        ));
        assert!(shuffle_exponent(&Exponent::LogFamily, &[0, 1]).is_err());
    }

    #[test]
    fn shuffled_log_discretization_rearranges_to_sorted() {
        let log = Exponent::log_family();
        let disc = log.discretize_dyadic(8).unwrap();
        // reverse permutation
        let n = 256;
        let perm: Vec<usize> = (0..n).rev().collect();
        let shuffled = shuffle_exponent(&disc, &perm).unwrap();
        let sorted = shuffled.decreasing_rearrangement().unwrap();
        let reference = disc.decreasing_rearrangement().unwrap();
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            assert!((sorted.eval(t).unwrap() - reference.eval(t).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_on_sets() {
        let log = Exponent::log_family();
        assert!(log.sup_on(&MeasSet::full()).is_none());
        let away = MeasSet::interval(E_INV, 1.0).unwrap();
        assert!((log.sup_on(&away).unwrap() - 2.0).abs() < 1e-12);

        let sp = Exponent::spiked(4, 4.0, 2.0).unwrap();
        assert!(sp.sup_on(&MeasSet::full()).is_none());
        let away = MeasSet::interval(0.0, 0.5).unwrap();
        assert!(sp.sup_on(&away).unwrap() <= 16.0);
    }

    #[test]
    fn spiked_parameter_validation() {
        assert!(Exponent::spiked(0, 4.0, 2.0).is_err());
        assert!(Exponent::spiked(25, 4.0, 2.0).is_err());
        assert!(Exponent::spiked(3, -1.0, 2.0).is_err());
        assert!(Exponent::spiked(3, 4.0, 1.0).is_err());
    }
}
