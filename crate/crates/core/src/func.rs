//! Finitely-described functions on [0,1]: indicators, piecewise polynomials
//! up to degree 3, a small analytic family, and the scale/sum/mask algebra
//! over them. Every function resolves to a canonical piecewise form that the
//! integration kernel consumes.

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::measure::{Interval, MeasSet};

/// Polynomial of degree <= 3, coefficients in ascending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly {
    pub coeffs: [f64; 4],
}

impl Poly {
    pub fn new(coeffs: [f64; 4]) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new([c, 0.0, 0.0, 0.0])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, factor: f64) -> Poly {
        let mut c = self.coeffs;
        for x in &mut c {
            *x *= factor;
        }
        Poly::new(c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut c = self.coeffs;
        for i in 0..4 {
            c[i] += other.coeffs[i];
        }
        Poly::new(c)
    }

    pub fn degree(&self) -> usize {
        for d in (0..4).rev() {
            if self.coeffs[d] != 0.0 {
                return d;
            }
        }
        0
    }

    /// Real roots of the derivative inside (lo, hi), for extremum hunting.
    pub fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let [_, c1, c2, c3] = self.coeffs;
        // derivative: c1 + 2 c2 t + 3 c3 t^2
        let mut out = Vec::new();
        if c3 != 0.0 {
            let a = 3.0 * c3;
            let b = 2.0 * c2;
            let disc = b * b - 4.0 * a * c1;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                out.push((-b - sq) / (2.0 * a));
                out.push((-b + sq) / (2.0 * a));
            }
        } else if c2 != 0.0 {
            out.push(-c1 / (2.0 * c2));
        }
        out.retain(|t| *t > lo && *t < hi);
        out
    }
}

/// Named analytic functions (bounded, closed-form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticKind {
    /// amplitude * sin(frequency * pi * t)
    SinPi { amplitude: f64, frequency: f64 },
}

/// Function on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub enum Func {
    Indicator(MeasSet),
    Constant(f64),
    PiecewisePoly {
        breaks: Vec<f64>,
        pieces: Vec<Poly>,
        continuous: bool,
    },
    Analytic(AnalyticKind),
    Scaled {
        factor: f64,
        inner: Box<Func>,
    },
    Sum(Vec<Func>),
    Masked {
        inner: Box<Func>,
        mask: MeasSet,
    },
}

/// Pointwise form of a function on one interval of the resolved cover.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalPiece {
    Zero,
    Poly(Poly),
    Sin { amplitude: f64, frequency: f64 },
    /// Sum of a polynomial part and analytic parts.
    Mixed(Vec<LocalPiece>),
}

impl LocalPiece {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LocalPiece::Zero => 0.0,
            LocalPiece::Poly(p) => p.eval(t),
            LocalPiece::Sin {
                amplitude,
                frequency,
            } => amplitude * (frequency * std::f64::consts::PI * t).sin(),
            LocalPiece::Mixed(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LocalPiece::Zero => true,
            LocalPiece::Poly(p) => p.is_zero(),
            LocalPiece::Sin { amplitude, .. } => *amplitude == 0.0,
            LocalPiece::Mixed(parts) => parts.iter().all(LocalPiece::is_zero),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            LocalPiece::Zero => Some(0.0),
            LocalPiece::Poly(p) if p.degree() == 0 => Some(p.coeffs[0]),
            _ => None,
        }
    }

    /// (c0, c1) when the piece is an affine polynomial.
    pub fn as_linear(&self) -> Option<(f64, f64)> {
        match self {
            LocalPiece::Zero => Some((0.0, 0.0)),
            LocalPiece::Poly(p) if p.degree() <= 1 => Some((p.coeffs[0], p.coeffs[1])),
            _ => None,
        }
    }

    fn scale(&self, factor: f64) -> LocalPiece {
        if factor == 0.0 {
            return LocalPiece::Zero;
        }
        match self {
            LocalPiece::Zero => LocalPiece::Zero,
            LocalPiece::Poly(p) => LocalPiece::Poly(p.scale(factor)),
            LocalPiece::Sin {
                amplitude,
                frequency,
            } => LocalPiece::Sin {
                amplitude: amplitude * factor,
                frequency: *frequency,
            },
            LocalPiece::Mixed(parts) => {
                LocalPiece::Mixed(parts.iter().map(|p| p.scale(factor)).collect())
            }
        }
    }

    fn combine(parts: Vec<LocalPiece>) -> LocalPiece {
        let mut poly = Poly::constant(0.0);
        let mut analytic: Vec<LocalPiece> = Vec::new();
        let mut stack = parts;
        while let Some(p) = stack.pop() {
            match p {
                LocalPiece::Zero => {}
                LocalPiece::Poly(q) => poly = poly.add(&q),
                s @ LocalPiece::Sin { .. } => analytic.push(s),
                LocalPiece::Mixed(inner) => stack.extend(inner),
            }
        }
        if analytic.is_empty() {
            if poly.is_zero() {
                LocalPiece::Zero
            } else {
                LocalPiece::Poly(poly)
            }
        } else {
            if !poly.is_zero() {
                analytic.push(LocalPiece::Poly(poly));
            }
            if analytic.len() == 1 {
                analytic.pop().unwrap()
            } else {
                LocalPiece::Mixed(analytic)
            }
        }
    }
}

/// One cell of the resolved cover of [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct FuncPiece {
    pub iv: Interval,
    pub local: LocalPiece,
}

/// Result of a sup-norm computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    /// Leftmost point attaining the maximum of |f|.
    pub argmax: f64,
}

impl Func {
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        Ok(Func::Indicator(MeasSet::interval(lo, hi)?))
    }

    pub fn constant(c: f64) -> Self {
        Func::Constant(c)
    }

    pub fn piecewise_poly(breaks: Vec<f64>, pieces: Vec<Poly>, continuous: bool) -> Result<Self> {
        if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
            return Err(Error::InvalidParameter(
                "piecewise poly needs breaks = pieces + 1".into(),
            ));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter(
                "piecewise poly breaks must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "piecewise poly breaks must be strictly increasing".into(),
            ));
        }
        if continuous {
            for i in 0..pieces.len() - 1 {
                let t = breaks[i + 1];
                let left = pieces[i].eval(t);
                let right = pieces[i + 1].eval(t);
                if (left - right).abs() > 1e-9 * (1.0 + left.abs().max(right.abs())) {
                    return Err(Error::InvalidParameter(format!(
                        "flagged continuous but one-sided limits differ at t = {t}"
                    )));
                }
            }
        }
        Ok(Func::PiecewisePoly {
            breaks,
            pieces,
            continuous,
        })
    }

    /// Continuous piecewise-linear interpolant through the given nodes.
    /// Nodes must start at t = 0 and end at t = 1.
    pub fn piecewise_linear(nodes: &[(f64, f64)]) -> Result<Self> {
        if nodes.len() < 2 || nodes[0].0 != 0.0 || nodes.last().unwrap().0 != 1.0 {
            return Err(Error::InvalidParameter(
                "piecewise linear nodes must span [0,1]".into(),
            ));
        }
        let mut breaks = Vec::with_capacity(nodes.len());
        let mut pieces = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            if t1 <= t0 {
                return Err(Error::InvalidParameter(
                    "piecewise linear nodes must be strictly increasing in t".into(),
                ));
            }
            let slope = (y1 - y0) / (t1 - t0);
            breaks.push(t0);
            pieces.push(Poly::new([y0 - slope * t0, slope, 0.0, 0.0]));
        }
        breaks.push(1.0);
        Func::piecewise_poly(breaks, pieces, true)
    }

    pub fn sin_pi(amplitude: f64, frequency: f64) -> Self {
        Func::Analytic(AnalyticKind::SinPi {
            amplitude,
            frequency,
        })
    }

    pub fn scaled(factor: f64, inner: Func) -> Self {
        Func::Scaled {
            factor,
            inner: Box::new(inner),
        }
    }

    pub fn sum(terms: Vec<Func>) -> Self {
        Func::Sum(terms)
    }

    pub fn masked(inner: Func, mask: MeasSet) -> Self {
        Func::Masked {
            inner: Box::new(inner),
            mask,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(t));
        }
        Ok(match self {
            Func::Indicator(set) => {
                if set.contains(t) {
                    1.0
                } else {
                    0.0
                }
            }
            Func::Constant(c) => *c,
            Func::PiecewisePoly { breaks, pieces, .. } => {
                let idx = breaks[1..breaks.len() - 1].partition_point(|&b| b <= t);
                pieces[idx].eval(t)
            }
            Func::Analytic(AnalyticKind::SinPi {
                amplitude,
                frequency,
            }) => amplitude * (frequency * std::f64::consts::PI * t).sin(),
            Func::Scaled { factor, inner } => factor * inner.eval(t)?,
            Func::Sum(terms) => {
                let mut acc = 0.0;
                for f in terms {
                    acc += f.eval(t)?;
                }
                acc
            }
            Func::Masked { inner, mask } => {
                if mask.contains(t) {
                    inner.eval(t)?
                } else {
                    0.0
                }
            }
        })
    }

    /// Canonical piecewise form: a sorted cover of [0,1].
    pub fn resolve(&self) -> Vec<FuncPiece> {
        match self {
            Func::Constant(c) => vec![FuncPiece {
                iv: Interval { lo: 0.0, hi: 1.0 },
                local: if *c == 0.0 {
                    LocalPiece::Zero
                } else {
                    LocalPiece::Poly(Poly::constant(*c))
                },
            }],
            Func::Indicator(set) => cover_from_set(set, LocalPiece::Poly(Poly::constant(1.0))),
            Func::PiecewisePoly { breaks, pieces, .. } => breaks
                .windows(2)
                .zip(pieces)
                .map(|(w, p)| FuncPiece {
                    iv: Interval { lo: w[0], hi: w[1] },
                    local: if p.is_zero() {
                        LocalPiece::Zero
                    } else {
                        LocalPiece::Poly(*p)
                    },
                })
                .collect(),
            Func::Analytic(AnalyticKind::SinPi {
                amplitude,
                frequency,
            }) => vec![FuncPiece {
                iv: Interval { lo: 0.0, hi: 1.0 },
                local: LocalPiece::Sin {
                    amplitude: *amplitude,
                    frequency: *frequency,
                },
            }],
            Func::Scaled { factor, inner } => inner
                .resolve()
                .into_iter()
                .map(|fp| FuncPiece {
                    iv: fp.iv,
                    local: fp.local.scale(*factor),
                })
                .collect(),
            Func::Masked { inner, mask } => {
                let mut out = Vec::new();
                for fp in inner.resolve() {
                    let piece_set =
                        MeasSet::interval(fp.iv.lo, fp.iv.hi).expect("resolved cover is valid");
                    let inside = piece_set.intersect(mask);
                    let outside = piece_set.intersect(&mask.complement());
                    let mut parts: Vec<(Interval, bool)> = inside
                        .intervals()
                        .iter()
                        .map(|iv| (*iv, true))
                        .chain(outside.intervals().iter().map(|iv| (*iv, false)))
                        .collect();
                    parts.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
                    for (iv, keep) in parts {
                        out.push(FuncPiece {
                            iv,
                            local: if keep {
                                fp.local.clone()
                            } else {
                                LocalPiece::Zero
                            },
                        });
                    }
                }
                out
            }
            Func::Sum(terms) => {
                let resolved: Vec<Vec<FuncPiece>> = terms.iter().map(Func::resolve).collect();
                if resolved.is_empty() {
                    return vec![FuncPiece {
                        iv: Interval { lo: 0.0, hi: 1.0 },
                        local: LocalPiece::Zero,
                    }];
                }
                let mut cuts: Vec<f64> = resolved
                    .iter()
                    .flatten()
                    .flat_map(|fp| [fp.iv.lo, fp.iv.hi])
                    .collect();
                cuts.push(0.0);
                cuts.push(1.0);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut out = Vec::with_capacity(cuts.len());
                for w in cuts.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if hi <= lo {
                        continue;
                    }
                    let mid = 0.5 * (lo + hi);
                    let parts: Vec<LocalPiece> = resolved
                        .iter()
                        .map(|cover| {
                            cover
                                .iter()
                                .find(|fp| fp.iv.lo <= mid && mid < fp.iv.hi)
                                .map(|fp| fp.local.clone())
                                .unwrap_or(LocalPiece::Zero)
                        })
                        .collect();
                    out.push(FuncPiece {
                        iv: Interval { lo, hi },
                        local: LocalPiece::combine(parts),
                    });
                }
                out
            }
        }
    }

    /// Support of the function, up to measure zero (a nonzero polynomial
    /// piece counts with its whole interval).
    pub fn support(&self) -> MeasSet {
        let pairs: Vec<(f64, f64)> = self
            .resolve()
            .into_iter()
            .filter(|fp| !fp.local.is_zero())
            .map(|fp| (fp.iv.lo, fp.iv.hi))
            .collect();
        MeasSet::from_endpoints(&pairs).expect("resolved cover is valid")
    }

    pub fn is_ae_zero(&self) -> bool {
        self.support().is_empty()
    }

    /// Maximum of |f| over [0,1] with the leftmost attaining point.
    ///
    /// Exact for indicators and piecewise polynomials (closed-form critical
    /// points); analytic pieces fall back to a dense scan with local
    /// refinement.
    pub fn sup_norm_argmax(&self) -> Result<SupNorm> {
        let mut best = SupNorm {
            value: 0.0,
            argmax: 0.0,
        };
        let mut found = false;
        for fp in self.resolve() {
            let mut candidates: Vec<f64> = vec![fp.iv.lo, fp.iv.hi];
            match &fp.local {
                LocalPiece::Zero => {}
                LocalPiece::Poly(p) => candidates.extend(p.critical_points(fp.iv.lo, fp.iv.hi)),
                LocalPiece::Sin { frequency, .. } => {
                    // extrema at t = (k + 1/2)/freq
                    let f = frequency.abs();
                    if f > 0.0 {
                        let mut k = (fp.iv.lo * f - 0.5).ceil().max(0.0);
                        loop {
                            let t = (k + 0.5) / f;
                            if t >= fp.iv.hi {
                                break;
                            }
                            if t > fp.iv.lo {
                                candidates.push(t);
                            }
                            k += 1.0;
                        }
                    }
                }
                LocalPiece::Mixed(_) => {
                    // dense scan + ternary refinement on |f|
                    let n = 4096;
                    let h = fp.iv.len() / n as f64;
                    let mut scan_best = (0.0f64, fp.iv.lo);
                    for i in 0..=n {
                        let t = fp.iv.lo + i as f64 * h;
                        let v = fp.local.eval(t).abs();
                        if v > scan_best.0 {
                            scan_best = (v, t);
                        }
                    }
                    let mut lo = (scan_best.1 - h).max(fp.iv.lo);
                    let mut hi = (scan_best.1 + h).min(fp.iv.hi);
                    for _ in 0..100 {
                        let m1 = lo + (hi - lo) / 3.0;
                        let m2 = hi - (hi - lo) / 3.0;
                        if fp.local.eval(m1).abs() < fp.local.eval(m2).abs() {
                            lo = m1;
                        } else {
                            hi = m2;
                        }
                    }
                    candidates.push(0.5 * (lo + hi));
                }
            }
            candidates.sort_by(f64::total_cmp);
            for t in candidates {
                let v = fp.local.eval(t).abs();
                if !found || v > best.value {
                    best = SupNorm {
                        value: v,
                        argmax: t,
                    };
                    found = true;
                }
            }
        }
        Ok(best)
    }
}

fn cover_from_set(set: &MeasSet, on: LocalPiece) -> Vec<FuncPiece> {
    let mut parts: Vec<(Interval, bool)> = set
        .intervals()
        .iter()
        .map(|iv| (*iv, true))
        .chain(set.complement().intervals().iter().map(|iv| (*iv, false)))
        .collect();
    parts.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
    parts
        .into_iter()
        .map(|(iv, keep)| FuncPiece {
            iv,
            local: if keep { on.clone() } else { LocalPiece::Zero },
        })
        .collect()
}

/// x restricted to the sublevel set of the exponent: x^(n) = x * chi_{Omega_n}.
/// The result lies in the order-continuous part whenever x is bounded, since
/// the exponent is at most n on the support.
pub fn truncate_to_level(f: &Func, p: &Exponent, n: u32) -> Result<Func> {
    Ok(Func::masked(f.clone(), p.level_set(n)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_basics() {
        let ind = Func::indicator(0.25, 0.75).unwrap();
        assert_eq!(ind.eval(0.5).unwrap(), 1.0);
        assert_eq!(ind.eval(0.1).unwrap(), 0.0);

        let id = Func::piecewise_poly(
            vec![0.0, 1.0],
            vec![Poly::new([0.0, 1.0, 0.0, 0.0])],
            true,
        )
        .unwrap();
        assert!((id.eval(0.3).unwrap() - 0.3).abs() < 1e-15);

        // mask the constant 1 with the sublevel set of the log exponent
        let log = Exponent::log_family();
        let masked = truncate_to_level(&Func::constant(1.0), &log, 2).unwrap();
        assert_eq!(masked.eval(0.1).unwrap(), 0.0); // 0.1 < 1/e
        assert_eq!(masked.eval(0.5).unwrap(), 1.0);
    }

    #[test]
    fn eval_domain_error() {
        assert!(Func::constant(1.0).eval(1.1).is_err());
    }

    #[test]
    fn sup_norm_closed_forms() {
        // t(1-t) peaks at 1/4, t = 1/2
        let hump = Func::piecewise_poly(
            vec![0.0, 1.0],
            vec![Poly::new([0.0, 1.0, -1.0, 0.0])],
            true,
        )
        .unwrap();
        let s = hump.sup_norm_argmax().unwrap();
        assert!((s.value - 0.25).abs() < 1e-15);
        assert!((s.argmax - 0.5).abs() < 1e-15);

        // constants attain everywhere; leftmost wins
        let s = Func::constant(1.0).sup_norm_argmax().unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.argmax, 0.0);
    }

    #[test]
    fn sup_norm_cubic_matches_grid_scan() {
        // a sine-like pair of cubics
        let f = Func::piecewise_poly(
            vec![0.0, 0.5, 1.0],
            vec![
                Poly::new([0.0, 7.06, -9.5, 0.2]),
                Poly::new([7.2, -16.0, 9.0, -0.2]),
            ],
            false,
        )
        .unwrap();
        let s = f.sup_norm_argmax().unwrap();
        let n = 1_000_000;
        let mut grid = (0.0f64, 0.0f64);
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let v = f.eval(t).unwrap().abs();
            if v > grid.0 {
                grid = (v, t);
            }
        }
        assert!((s.value - grid.0).abs() < 1e-9, "{} vs {}", s.value, grid.0);
        assert!((s.argmax - grid.1).abs() < 1e-5);
    }

    #[test]
    fn scaled_sup_homogeneous() {
        let f = Func::piecewise_linear(&[(0.0, 0.2), (0.4, -0.9), (1.0, 0.5)]).unwrap();
        let base = f.sup_norm_argmax().unwrap();
        for &alpha in &[0.5, 2.0, 10.0, -3.0] {
            let s = Func::scaled(alpha, f.clone()).sup_norm_argmax().unwrap();
            assert!((s.value - alpha.abs() * base.value).abs() < 1e-12);
        }
    }

    #[test]
    fn mask_full_is_identity() {
        let f = Func::piecewise_linear(&[(0.0, 0.3), (0.5, 1.0), (1.0, -0.7)]).unwrap();
        let masked = Func::masked(f.clone(), MeasSet::full());
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            assert_eq!(f.eval(t).unwrap(), masked.eval(t).unwrap());
        }
    }

    #[test]
    fn truncations_agree_on_lower_level_set() {
        let log = Exponent::log_family();
        let f = Func::piecewise_linear(&[(0.0, 1.0), (1.0, -1.0)]).unwrap();
        let t4 = truncate_to_level(&f, &log, 4).unwrap();
        let t5 = truncate_to_level(&f, &log, 5).unwrap();
        let omega4 = log.level_set(4).unwrap();
        for i in 0..2000 {
            let t = i as f64 / 1999.0;
            if omega4.contains(t) {
                assert_eq!(t4.eval(t).unwrap(), t5.eval(t).unwrap());
            }
        }
    }

    #[test]
    fn sum_of_polys_stays_poly() {
        let a = Func::piecewise_linear(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        let b = Func::constant(2.0);
        let s = Func::sum(vec![a, b]);
        let resolved = s.resolve();
        assert!(resolved
            .iter()
            .all(|fp| matches!(fp.local, LocalPiece::Poly(_))));
        assert!((s.eval(0.5).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn support_of_masked_indicator() {
        let f = Func::masked(
            Func::constant(1.0),
            MeasSet::from_endpoints(&[(0.1, 0.2), (0.6, 0.9)]).unwrap(),
        );
        let supp = f.support();
        assert!((supp.measure() - 0.4).abs() < 1e-15);
        assert!(!Func::constant(0.0).support().measure().is_nan());
        assert!(Func::constant(0.0).is_ae_zero());
    }

    #[test]
    fn continuity_flag_validated() {
        let bad = Func::piecewise_poly(
            vec![0.0, 0.5, 1.0],
            vec![Poly::constant(0.0), Poly::constant(1.0)],
            true,
        );
        assert!(bad.is_err());
    }
}
