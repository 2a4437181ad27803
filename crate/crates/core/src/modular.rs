//! The modular rho_p(x) = int_0^1 |x(t)|^p(t) dt with certified error bounds
//! and divergence detection.
//!
//! Integration runs over cells = (piece of x) x (piece of p). Cells with a
//! closed form (constants and affine pieces against constant exponents, the
//! log-family against constants, staircase tails against constants) are
//! evaluated exactly; everything else goes through adaptive Gauss-Kronrod
//! with geometric grading toward unbounded-exponent endpoints. Divergence is
//! declared either by a closed-form/analytic criterion (route A) or, with
//! `force_quadrature`, by the graded-ladder surrogate (route B): partial sums
//! exceed the cap while successive rungs contribute non-decreasing amounts
//! across three refinements. An exhausted budget is an `Inconclusive` error,
//! never silently coerced.

use crate::error::{Error, Result};
use crate::exponent::{Exponent, DUAL_CLIP_EPS};
use crate::func::{Func, FuncPiece, LocalPiece};
use crate::measure::Interval;
use crate::quad::{adaptive_gk, gk15};

/// Per-call relative floor for adaptive quadrature. The K15 error estimator
/// never reports below 50*eps ~ 1.1e-14 relative, so demanding less spins
/// forever; one order above that floor is attainable.
const REL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: u32,
    pub divergence_cap: f64,
    /// Geometric ratio of the rung ladder toward singular endpoints.
    pub endpoint_grading: f64,
    /// Disable closed forms and analytic divergence tests; everything runs
    /// through the numerical route, including the ladder divergence rule.
    pub force_quadrature: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 1 << 20,
            divergence_cap: 1e12,
            endpoint_grading: 0.5,
            force_quadrature: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceWitness {
    /// Endpoint neighborhood (or region) responsible for the divergence.
    pub region: (f64, f64),
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModularResult {
    Finite {
        value: f64,
        error_bound: f64,
        quadrature_used: bool,
    },
    Divergent {
        witness: DivergenceWitness,
    },
}

impl ModularResult {
    pub fn is_finite(&self) -> bool {
        matches!(self, ModularResult::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ModularResult::Finite { value, .. } => Some(*value),
            ModularResult::Divergent { .. } => None,
        }
    }

    pub fn error_bound(&self) -> Option<f64> {
        match self {
            ModularResult::Finite { error_bound, .. } => Some(*error_bound),
            ModularResult::Divergent { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&DivergenceWitness> {
        match self {
            ModularResult::Divergent { witness } => Some(witness),
            ModularResult::Finite { .. } => None,
        }
    }

    pub fn quadrature_used(&self) -> bool {
        matches!(
            self,
            ModularResult::Finite {
                quadrature_used: true,
                ..
            }
        )
    }
}

/// Exponent restricted to one interval of its canonical cover.
#[derive(Debug, Clone)]
pub(crate) enum ExpSeg {
    Const(f64),
    /// p(t) = 1 - ln t, unbounded at the left endpoint 0.
    Log,
    /// Staircase accumulating at 1: value max(base, slope*j) on
    /// [1 - 2^(1-j), 1 - 2^-j).
    Tail { slope: f64, base: f64 },
    /// Dual of a staircase tail: value mapped through p -> p/(p-1),
    /// bounded by base/(base-1).
    DualTail { slope: f64, base: f64 },
    /// Bounded exponent evaluated pointwise.
    Varying(Exponent),
}

fn dual_value(v: f64) -> f64 {
    let p = v.max(1.0 + DUAL_CLIP_EPS);
    p / (p - 1.0)
}

pub(crate) fn exponent_segments(p: &Exponent) -> Result<Vec<(Interval, ExpSeg)>> {
    let full = Interval { lo: 0.0, hi: 1.0 };
    Ok(match p {
        Exponent::Constant(c) => vec![(full, ExpSeg::Const(*c))],
        Exponent::PiecewiseConstant { breaks, values } => breaks
            .windows(2)
            .zip(values)
            .map(|(w, &v)| (Interval { lo: w[0], hi: w[1] }, ExpSeg::Const(v)))
            .collect(),
        Exponent::LogFamily => vec![(full, ExpSeg::Log)],
        Exponent::Spiked(s) => {
            let mut segs: Vec<(Interval, ExpSeg)> = s
                .pieces()
                .iter()
                .map(|p| {
                    (
                        Interval { lo: p.lo, hi: p.hi },
                        ExpSeg::Const(p.value),
                    )
                })
                .collect();
            segs.push((
                Interval {
                    lo: s.reservoir_start(),
                    hi: 1.0,
                },
                ExpSeg::Tail {
                    slope: s.slope(),
                    base: s.base(),
                },
            ));
            segs
        }
        Exponent::Dual(inner) => match &**inner {
            Exponent::Constant(c) => vec![(full, ExpSeg::Const(dual_value(*c)))],
            Exponent::PiecewiseConstant { breaks, values } => breaks
                .windows(2)
                .zip(values)
                .map(|(w, &v)| {
                    (
                        Interval { lo: w[0], hi: w[1] },
                        ExpSeg::Const(dual_value(v)),
                    )
                })
                .collect(),
            Exponent::LogFamily => vec![(full, ExpSeg::Varying(p.clone()))],
            Exponent::Spiked(s) => {
                let mut segs: Vec<(Interval, ExpSeg)> = s
                    .pieces()
                    .iter()
                    .map(|q| {
                        (
                            Interval { lo: q.lo, hi: q.hi },
                            ExpSeg::Const(dual_value(q.value)),
                        )
                    })
                    .collect();
                segs.push((
                    Interval {
                        lo: s.reservoir_start(),
                        hi: 1.0,
                    },
                    ExpSeg::DualTail {
                        slope: s.slope(),
                        base: s.base(),
                    },
                ));
                segs
            }
            _ => {
                return Err(Error::UnsupportedVariant {
                    op: "modular",
                    detail: "dual of this exponent variant is not integrable here".into(),
                })
            }
        },
        Exponent::RearrangedSpiked(_) => {
            return Err(Error::UnsupportedVariant {
                op: "modular",
                detail: "rearranged exponents are evaluators, not integration domains".into(),
            })
        }
    })
}

struct Cell<'a> {
    iv: Interval,
    local: &'a LocalPiece,
    seg: &'a ExpSeg,
}

fn build_cells<'a>(
    fpieces: &'a [FuncPiece],
    psegs: &'a [(Interval, ExpSeg)],
) -> Vec<Cell<'a>> {
    let mut cuts: Vec<f64> = fpieces
        .iter()
        .flat_map(|fp| [fp.iv.lo, fp.iv.hi])
        .chain(psegs.iter().flat_map(|(iv, _)| [iv.lo, iv.hi]))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut cells = Vec::with_capacity(cuts.len());
    let (mut fi, mut pi) = (0usize, 0usize);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        while fi + 1 < fpieces.len() && fpieces[fi].iv.hi <= mid {
            fi += 1;
        }
        while pi + 1 < psegs.len() && psegs[pi].0.hi <= mid {
            pi += 1;
        }
        cells.push(Cell {
            iv: Interval { lo, hi },
            local: &fpieces[fi].local,
            seg: &psegs[pi].1,
        });
    }
    cells
}

enum CellOut {
    Value { value: f64, err: f64, quad: bool },
    Divergent(DivergenceWitness),
}

/// Exact upper bound for |local| on [lo, hi] (polynomials via critical
/// points; analytic pieces via a padded scan).
fn local_sup_abs(local: &LocalPiece, lo: f64, hi: f64) -> f64 {
    match local {
        LocalPiece::Zero => 0.0,
        LocalPiece::Poly(p) => {
            let mut m = p.eval(lo).abs().max(p.eval(hi).abs());
            for t in p.critical_points(lo, hi) {
                m = m.max(p.eval(t).abs());
            }
            m
        }
        LocalPiece::Sin { amplitude, .. } => amplitude.abs(),
        LocalPiece::Mixed(_) => {
            let mut m = 0.0f64;
            for i in 0..=256 {
                let t = lo + (hi - lo) * i as f64 / 256.0;
                m = m.max(local.eval(t).abs());
            }
            m * 1.05 + 1e-300
        }
    }
}

/// Closed form for int_lo^hi |c0 + c1 t|^p dt via F(u) = u|u|^p/(p+1).
fn linear_power_integral(c0: f64, c1: f64, lo: f64, hi: f64, p: f64) -> f64 {
    if c1 == 0.0 {
        return (hi - lo) * c0.abs().powf(p);
    }
    let f = |u: f64| u * u.abs().powf(p) / (p + 1.0);
    (f(c0 + c1 * hi) - f(c0 + c1 * lo)) / c1
}

/// int_lo^hi |local(t)|^p dt with p constant.
fn power_integral(
    local: &LocalPiece,
    lo: f64,
    hi: f64,
    p: f64,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<(f64, f64, bool)> {
    if local.is_zero() || hi <= lo {
        return Ok((0.0, 0.0, false));
    }
    if !cfg.force_quadrature {
        if let Some(c) = local.as_constant() {
            let v = (hi - lo) * c.abs().powf(p);
            return Ok((v, v * 1e-15, false));
        }
        if let Some((c0, c1)) = local.as_linear() {
            let v = linear_power_integral(c0, c1, lo, hi, p);
            return Ok((v, v.abs() * 1e-14, false));
        }
    }
    let g = |t: f64| local.eval(t).abs().powf(p);
    match adaptive_gk(&g, lo, hi, alloc, REL_FLOOR, budget) {
        Some((v, e)) => Ok((v, e, true)),
        None => Err(Error::Inconclusive(format!(
            "quadrature budget exhausted on [{lo}, {hi}] with exponent {p}"
        ))),
    }
}

/// Exact sum of the staircase series sum_{j>=j0} 2^-j |c|^max(base, slope*j).
/// None means the series diverges.
fn tail_const_sum(c_abs: f64, j0: f64, slope: f64, base: f64) -> Option<f64> {
    if c_abs == 0.0 {
        return Some(0.0);
    }
    let ln2 = std::f64::consts::LN_2;
    let mut total = 0.0;
    // head: levels where the base still dominates, max(base, slope*j) = base
    let jb = (base / slope).floor(); // slope*j <= base for j <= jb
    let mut j_geo = j0;
    if j0 <= jb {
        // base dominates for j <= jb: sum_{j=j0..=jb} 2^-j = 2^(1-j0) - 2^-jb
        let cb = c_abs.powf(base);
        total = cb * ((1.0 - j0).exp2() - (-jb).exp2());
        j_geo = jb + 1.0;
    }
    // pure geometric part: terms exp(j (slope ln c - ln 2))
    let ln_r = slope * c_abs.ln() - ln2;
    if ln_r >= 0.0 {
        return None;
    }
    let first = (j_geo * ln_r).exp();
    total += first / (1.0 - ln_r.exp());
    Some(total)
}

/// Index of the staircase piece containing t: t in [1-2^(1-j), 1-2^-j).
fn tail_piece_index(t: f64) -> f64 {
    let u = 1.0 - t;
    (-u.log2()).floor() + 1.0
}

fn tail_piece_bounds(j: f64) -> (f64, f64) {
    (1.0 - (1.0 - j).exp2(), 1.0 - (-j).exp2())
}

fn eval_cell(cell: &Cell, cfg: &QuadConfig, budget: &mut i64, alloc: f64) -> Result<CellOut> {
    let Interval { lo, hi } = cell.iv;
    if cell.local.is_zero() || hi <= lo {
        return Ok(CellOut::Value {
            value: 0.0,
            err: 0.0,
            quad: false,
        });
    }
    match cell.seg {
        ExpSeg::Const(p) => {
            let (value, err, quad) = power_integral(cell.local, lo, hi, *p, cfg, budget, alloc)?;
            Ok(CellOut::Value { value, err, quad })
        }
        ExpSeg::Varying(p) => {
            let g = |t: f64| {
                let pt = p.eval(t).unwrap_or(1.0);
                cell.local.eval(t).abs().powf(pt)
            };
            match adaptive_gk(&g, lo, hi, alloc, REL_FLOOR, budget) {
                Some((value, err)) => Ok(CellOut::Value {
                    value,
                    err,
                    quad: true,
                }),
                None => Err(Error::Inconclusive(
                    "quadrature budget exhausted on varying-exponent cell".into(),
                )),
            }
        }
        ExpSeg::Log => eval_log_cell(cell.local, lo, hi, cfg, budget, alloc),
        ExpSeg::Tail { slope, base } => eval_tail_cell(
            cell.local,
            lo,
            hi,
            *slope,
            *base,
            false,
            cfg,
            budget,
            alloc,
        ),
        ExpSeg::DualTail { slope, base } => eval_tail_cell(
            cell.local,
            lo,
            hi,
            *slope,
            *base,
            true,
            cfg,
            budget,
            alloc,
        ),
    }
}

fn eval_log_cell(
    local: &LocalPiece,
    lo: f64,
    hi: f64,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<CellOut> {
    let e = std::f64::consts::E;
    // closed form for constants
    if !cfg.force_quadrature {
        if let Some(c) = local.as_constant() {
            let ca = c.abs();
            if ca == 0.0 {
                return Ok(CellOut::Value {
                    value: 0.0,
                    err: 0.0,
                    quad: false,
                });
            }
            let q = 1.0 - ca.ln();
            if lo == 0.0 && q <= 0.0 {
                return Ok(CellOut::Divergent(DivergenceWitness {
                    region: (0.0, hi),
                    reason: format!(
                        "integrand |c|^(1-ln t) = {ca:.6}*t^(-{:.6}) is non-integrable at t=0",
                        ca.ln()
                    ),
                }));
            }
            let value = if q == 0.0 {
                e * (hi.ln() - lo.ln())
            } else {
                ca * (hi.powf(q) - if lo == 0.0 { 0.0 } else { lo.powf(q) }) / q
            };
            return Ok(CellOut::Value {
                value,
                err: value.abs() * 1e-14,
                quad: false,
            });
        }
        // analytic divergence test at the singular endpoint
        if lo == 0.0 {
            let v0 = local.eval(0.0).abs();
            if v0 >= e {
                return Ok(CellOut::Divergent(DivergenceWitness {
                    region: (0.0, hi),
                    reason: format!(
                        "|x(0)| = {v0:.6} >= e: integrand behaves like t^(-ln|x(0)|) at t=0"
                    ),
                }));
            }
            return ladder(
                local,
                lo,
                hi,
                SingularEnd::LogAtZero,
                LadderMode::KnownFinite,
                cfg,
                budget,
                alloc,
            );
        }
    }
    if lo == 0.0 {
        // route B: pure ladder with the empirical divergence rule
        return ladder(
            local,
            lo,
            hi,
            SingularEnd::LogAtZero,
            LadderMode::Detect,
            cfg,
            budget,
            alloc,
        );
    }
    // bounded exponent away from 0
    let g = |t: f64| local.eval(t).abs().powf(1.0 - t.ln());
    match adaptive_gk(&g, lo, hi, alloc, REL_FLOOR, budget) {
        Some((value, err)) => Ok(CellOut::Value {
            value,
            err,
            quad: true,
        }),
        None => Err(Error::Inconclusive(
            "quadrature budget exhausted on log-exponent cell".into(),
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_tail_cell(
    local: &LocalPiece,
    lo: f64,
    hi: f64,
    slope: f64,
    base: f64,
    dual: bool,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<CellOut> {
    let piece_exp = |j: f64| -> f64 {
        let v = base.max(slope * j);
        if dual {
            dual_value(v)
        } else {
            v
        }
    };
    let threshold = 2.0f64.powf(1.0 / slope);

    // Analytic route for the series reaching t = 1.
    if hi >= 1.0 && !dual && !cfg.force_quadrature {
        if let Some(c) = local.as_constant() {
            let ca = c.abs();
            let j0 = tail_piece_index(lo);
            // partial first piece
            let (_, p_hi) = tail_piece_bounds(j0);
            let first_hi = p_hi.min(1.0);
            let head = (first_hi - lo) * ca.powf(piece_exp(j0));
            match tail_const_sum(ca, j0 + 1.0, slope, base) {
                Some(rest) => {
                    let value = head + rest;
                    return Ok(CellOut::Value {
                        value,
                        err: value * 1e-13,
                        quad: false,
                    });
                }
                None => {
                    return Ok(CellOut::Divergent(DivergenceWitness {
                        region: (lo, 1.0),
                        reason: format!(
                            "staircase series with ratio |c|^s/2 = {:.6} >= 1 near t=1",
                            ca.powf(slope) / 2.0
                        ),
                    }))
                }
            }
        }
        let c1 = local.eval(1.0).abs();
        if c1 >= threshold {
            return Ok(CellOut::Divergent(DivergenceWitness {
                region: (lo, 1.0),
                reason: format!(
                    "|x(1)| = {c1:.6} >= 2^(1/s) = {threshold:.6}: staircase terms do not decay"
                ),
            }));
        }
    }

    // Piece-by-piece iteration.
    let mut j = tail_piece_index(lo);
    let mut value = 0.0;
    let mut err = 0.0;
    let mut quad = false;
    let mut contribs: Vec<f64> = Vec::new();
    let mut pieces_done = 0u32;
    loop {
        let (p_lo, p_hi) = tail_piece_bounds(j);
        let a = p_lo.max(lo);
        let b = p_hi.min(hi);
        if b > a {
            let (v, e, q) = power_integral(local, a, b, piece_exp(j), cfg, budget, alloc)?;
            value += v;
            err += e;
            quad |= q;
            contribs.push(v);
        }
        if p_hi >= hi {
            if hi < 1.0 {
                return Ok(CellOut::Value { value, err, quad });
            }
        }
        // Beyond level ~46 the remaining sliver is narrower than the
        // resolution of f's variation (p * |f'| * 2^-j is far below eps),
        // so the series closes analytically with the endpoint value.
        if hi >= 1.0 && j >= 46.0 {
            let c_end = local.eval(1.0).abs();
            if dual {
                let m = c_end.max(c_end.powf(dual_value(base)));
                let rest_bound = (-j).exp2() * m;
                err += rest_bound;
                return Ok(CellOut::Value { value, err, quad });
            }
            match tail_const_sum(c_end, j + 1.0, slope, base) {
                Some(rest) => {
                    value += rest;
                    err += rest * 1e-10 + value.abs() * 1e-13;
                    return Ok(CellOut::Value { value, err, quad });
                }
                None => {
                    return Ok(CellOut::Divergent(DivergenceWitness {
                        region: (a, 1.0),
                        reason: format!(
                            "endpoint staircase ratio |f(1)|^s/2 = {:.6} >= 1",
                            c_end.powf(slope) / 2.0
                        ),
                    }))
                }
            }
        }
        // reaching toward t = 1: decide stop / divergence
        if hi >= 1.0 {
            if !cfg.force_quadrature {
                // certified geometric bound on the remaining series
                let s_bound = local_sup_abs(local, b.max(a), 1.0);
                if let Some(bound) = tail_const_sum(
                    s_bound,
                    j + 1.0,
                    slope,
                    if dual {
                        // dual exponents are bounded; majorize with exponent 1
                        // via c^max(1, ...) <= max(c, c^(b/(b-1)))
                        slope
                    } else {
                        base
                    },
                ) {
                    let bound = if dual {
                        // crude but safe: remaining measure 2^-j times the
                        // largest power of the sup
                        let m = s_bound.max(s_bound.powf(dual_value(base)));
                        ((-j).exp2() * m).min(bound.max(0.0) + (-j).exp2() * m)
                    } else {
                        bound
                    };
                    if bound.is_finite() && bound < alloc.max(value.abs() * cfg.rel_tol) {
                        err += bound;
                        return Ok(CellOut::Value { value, err, quad });
                    }
                }
            } else {
                // route B: empirical rule on the ladder of staircase pieces
                let n = contribs.len();
                if value > cfg.divergence_cap
                    && n >= 3
                    && contribs[n - 1] >= contribs[n - 2]
                    && contribs[n - 2] >= contribs[n - 3]
                {
                    return Ok(CellOut::Divergent(DivergenceWitness {
                        region: (a, 1.0),
                        reason: "partial sums exceeded the divergence cap with non-decreasing \
                                 rung contributions across 3 refinements"
                            .into(),
                    }));
                }
                if n >= 3 {
                    let r1 = safe_ratio(contribs[n - 1], contribs[n - 2]);
                    let r2 = safe_ratio(contribs[n - 2], contribs[n - 3]);
                    let r = r1.max(r2);
                    if r < 0.95 {
                        let tail_bound = contribs[n - 1] * r / (1.0 - r);
                        if tail_bound < alloc.max(value.abs() * cfg.rel_tol) {
                            err += tail_bound;
                            return Ok(CellOut::Value { value, err, quad });
                        }
                    }
                }
            }
        }
        j += 1.0;
        pieces_done += 1;
        if pieces_done > 1100 || (1.0 - (-j).exp2()) >= 1.0 {
            return Err(Error::Inconclusive(
                "staircase iteration exhausted without certifying the tail".into(),
            ));
        }
    }
}

fn safe_ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        a / b
    }
}

enum SingularEnd {
    LogAtZero,
}

enum LadderMode {
    /// Convergence established analytically; only the value is needed.
    KnownFinite,
    /// Apply the empirical divergence rule (route B).
    Detect,
}

#[allow(clippy::too_many_arguments)]
fn ladder(
    local: &LocalPiece,
    _lo: f64,
    hi: f64,
    _end: SingularEnd,
    mode: LadderMode,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<CellOut> {
    let g = cfg.endpoint_grading.clamp(0.1, 0.9);
    let integrand = |t: f64| local.eval(t).abs().powf(1.0 - t.ln());

    let mut upper = hi;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut contribs: Vec<f64> = Vec::new();
    for k in 0..1200 {
        let lower = upper * g;
        let rung_tol = (alloc * (1.0 - g) * g.powi(k)).max(1e-18);
        let (v, e) = match adaptive_gk(&integrand, lower, upper, rung_tol, REL_FLOOR, budget) {
            Some(r) => r,
            None => {
                return Err(Error::Inconclusive(
                    "quadrature budget exhausted inside the endpoint ladder".into(),
                ))
            }
        };
        value += v;
        err += e;
        contribs.push(v);
        let n = contribs.len();

        if matches!(mode, LadderMode::Detect)
            && value > cfg.divergence_cap
            && n >= 3
            && contribs[n - 1] >= contribs[n - 2]
            && contribs[n - 2] >= contribs[n - 3]
        {
            return Ok(CellOut::Divergent(DivergenceWitness {
                region: (0.0, upper),
                reason: "partial sums exceeded the divergence cap with non-decreasing rung \
                         contributions across 3 refinements"
                    .into(),
            }));
        }
        if n >= 3 {
            let r = safe_ratio(contribs[n - 1], contribs[n - 2])
                .max(safe_ratio(contribs[n - 2], contribs[n - 3]));
            if r < 0.95 {
                let tail = contribs[n - 1] * r / (1.0 - r);
                if tail < alloc.max(value.abs() * cfg.rel_tol) {
                    err += tail;
                    return Ok(CellOut::Value {
                        value,
                        err,
                        quad: true,
                    });
                }
            }
        }
        if v == 0.0 && n >= 2 && contribs[n - 2] == 0.0 {
            return Ok(CellOut::Value {
                value,
                err,
                quad: true,
            });
        }
        upper = lower;
        if upper < 1e-300 {
            return Ok(CellOut::Value {
                value,
                err,
                quad: true,
            });
        }
    }
    Err(Error::Inconclusive(
        "endpoint ladder exhausted its rung budget without a verdict".into(),
    ))
}

/// The modular rho_p(f) = int |f|^p(t) dt.
pub fn modular(f: &Func, p: &Exponent, cfg: &QuadConfig) -> Result<ModularResult> {
    let fpieces = f.resolve();
    let psegs = exponent_segments(p)?;
    let cells = build_cells(&fpieces, &psegs);

    // Spread the absolute tolerance over the cells that actually need
    // numerical work.
    let n_numeric = cells
        .iter()
        .filter(|c| {
            !c.local.is_zero()
                && (cfg.force_quadrature
                    || !matches!(
                        (c.local.as_linear(), c.seg),
                        (Some(_), ExpSeg::Const(_))
                    ))
        })
        .count()
        .max(1);
    let alloc = cfg.abs_tol / n_numeric as f64;

    let mut budget: i64 = cfg.max_subdivisions as i64;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut quad = false;
    for cell in &cells {
        match eval_cell(cell, cfg, &mut budget, alloc)? {
            CellOut::Value {
                value: v,
                err: e,
                quad: q,
            } => {
                value += v;
                err += e;
                quad |= q;
            }
            CellOut::Divergent(witness) => {
                return Ok(ModularResult::Divergent { witness });
            }
        }
    }
    Ok(ModularResult::Finite {
        value,
        error_bound: err,
        quadrature_used: quad,
    })
}

/// rho_p( (f/lambda) chi_{p > n} ): the modular of the truncation residual
/// f - f^(n) at scaling lambda.
///
/// For moderate levels this is the plain modular of f masked to the
/// complement of the sublevel set. When the sublevel boundary sits too deep
/// for f64 interval endpoints (e^(1-n) underflowing, or 1 - 2^-m within an
/// ulp of 1), the residual region is a sliver on which f is constant to below
/// machine resolution, and the closed forms take over in log space.
pub fn truncation_residual_modular(
    f: &Func,
    p: &Exponent,
    n: u32,
    lambda: f64,
    cfg: &QuadConfig,
) -> Result<ModularResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling lambda must be positive, got {lambda}"
        )));
    }
    const DEEP: f64 = 1e-12;
    let nf = n as f64;
    match p {
        Exponent::LogFamily => {
            let u = (1.0 - nf).exp();
            if u > DEEP {
                let residual = Func::masked(f.clone(), p.level_set(n)?.complement());
                return modular_scaled(&residual, p, lambda, cfg);
            }
            // residual region (0, e^(1-n)): f is f(0) up to O(e^(1-n))
            let first = f.resolve().into_iter().next().expect("cover is non-empty");
            let c = first.local.eval(0.0).abs() / lambda;
            if c == 0.0 {
                return Ok(ModularResult::Finite {
                    value: 0.0,
                    error_bound: 0.0,
                    quadrature_used: false,
                });
            }
            let q = 1.0 - c.ln();
            if q <= 0.0 {
                return Ok(ModularResult::Divergent {
                    witness: DivergenceWitness {
                        region: (0.0, u),
                        reason: format!(
                            "|f(0)/lambda| = {c:.6} >= e on the residual neighborhood of 0"
                        ),
                    },
                });
            }
            // int_0^u c^(1-ln t) dt = c u^q / q with u^q = e^((1-n) q)
            let value = c * ((1.0 - nf) * q).exp() / q;
            Ok(ModularResult::Finite {
                value,
                error_bound: value * 1e-12,
                quadrature_used: false,
            })
        }
        Exponent::Spiked(s) => {
            let jmax = (nf / s.slope()).floor();
            let boundary_level = jmax.max(s.levels() as f64);
            if (-boundary_level).exp2() > DEEP && s.base() <= nf {
                let residual = Func::masked(f.clone(), p.level_set(n)?.complement());
                return modular_scaled(&residual, p, lambda, cfg);
            }
            if s.base() > nf {
                // residual includes the whole reservoir and possibly explicit
                // cells; the representable mask path covers it
                let residual = Func::masked(f.clone(), p.level_set(n)?.complement());
                return modular_scaled(&residual, p, lambda, cfg);
            }
            // deep tail: explicit cells with value > n (usually none) plus
            // the staircase series from level max(jmax, J) + 1 with f ~ f(1)
            let mut value = 0.0;
            let mut err = 0.0;
            let mut quad = false;
            let high_cells: Vec<(f64, f64)> = s
                .pieces()
                .iter()
                .filter(|q| q.value > nf)
                .map(|q| (q.lo, q.hi))
                .collect();
            if !high_cells.is_empty() {
                let mask = crate::measure::MeasSet::from_endpoints(&high_cells)?;
                match modular_scaled(&Func::masked(f.clone(), mask), p, lambda, cfg)? {
                    ModularResult::Finite {
                        value: v,
                        error_bound: e,
                        quadrature_used: q,
                    } => {
                        value += v;
                        err += e;
                        quad |= q;
                    }
                    divergent => return Ok(divergent),
                }
            }
            let last = f.resolve().into_iter().last().expect("cover is non-empty");
            let c = last.local.eval(1.0).abs() / lambda;
            let j_start = boundary_level + 1.0;
            match tail_const_sum(c, j_start, s.slope(), s.base()) {
                Some(tail) => {
                    value += tail;
                    err += tail * 1e-12;
                }
                None => {
                    return Ok(ModularResult::Divergent {
                        witness: DivergenceWitness {
                            region: (1.0 - (-boundary_level).exp2(), 1.0),
                            reason: format!(
                                "residual staircase ratio (|f(1)|/lambda)^s/2 = {:.6} >= 1",
                                c.powf(s.slope()) / 2.0
                            ),
                        },
                    })
                }
            }
            Ok(ModularResult::Finite {
                value,
                error_bound: err,
                quadrature_used: quad,
            })
        }
        _ => {
            let residual = Func::masked(f.clone(), p.level_set(n)?.complement());
            modular_scaled(&residual, p, lambda, cfg)
        }
    }
}

/// rho_p(f / lambda), monotone non-increasing in lambda.
pub fn modular_scaled(f: &Func, p: &Exponent, lambda: f64, cfg: &QuadConfig) -> Result<ModularResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling lambda must be positive, got {lambda}"
        )));
    }
    modular(&Func::scaled(1.0 / lambda, f.clone()), p, cfg)
}

/// int |f| dt (always finite for the representable functions).
pub fn integral_abs(f: &Func, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let pieces = f.resolve();
    let mut budget: i64 = cfg.max_subdivisions as i64;
    let n = pieces.len().max(1);
    let alloc = cfg.abs_tol / n as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for fp in &pieces {
        if fp.local.is_zero() {
            continue;
        }
        let (v, e, _) = power_integral(&fp.local, fp.iv.lo, fp.iv.hi, 1.0, cfg, &mut budget, alloc)?;
        value += v;
        err += e;
    }
    Ok((value, err))
}

fn merged_cells<'a>(
    a: &'a [FuncPiece],
    b: &'a [FuncPiece],
) -> Vec<(Interval, &'a LocalPiece, &'a LocalPiece)> {
    let mut cuts: Vec<f64> = a
        .iter()
        .chain(b.iter())
        .flat_map(|fp| [fp.iv.lo, fp.iv.hi])
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        while i + 1 < a.len() && a[i].iv.hi <= mid {
            i += 1;
        }
        while j + 1 < b.len() && b[j].iv.hi <= mid {
            j += 1;
        }
        out.push((Interval { lo, hi }, &a[i].local, &b[j].local));
    }
    out
}

/// int f(t) g(t) dt, signed.
pub fn integral_product(f: &Func, g: &Func, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let fa = f.resolve();
    let gb = g.resolve();
    let mut budget: i64 = cfg.max_subdivisions as i64;
    let mut value = 0.0;
    let mut err = 0.0;
    for (iv, lf, lg) in merged_cells(&fa, &gb) {
        if lf.is_zero() || lg.is_zero() {
            continue;
        }
        let h = |t: f64| lf.eval(t) * lg.eval(t);
        if matches!((lf, lg), (LocalPiece::Poly(_), LocalPiece::Poly(_))) {
            // product has degree <= 6; one K15 application is exact
            let (v, e) = gk15(&h, iv.lo, iv.hi);
            value += v;
            err += e;
        } else {
            match adaptive_gk(&h, iv.lo, iv.hi, cfg.abs_tol, REL_FLOOR, &mut budget) {
                Some((v, e)) => {
                    value += v;
                    err += e;
                }
                None => {
                    return Err(Error::Inconclusive(
                        "budget exhausted integrating a product".into(),
                    ))
                }
            }
        }
    }
    Ok((value, err))
}

/// int |f(t) g(t)| dt.
pub fn integral_abs_product(f: &Func, g: &Func, cfg: &QuadConfig) -> Result<(f64, f64)> {
    let fa = f.resolve();
    let gb = g.resolve();
    let mut budget: i64 = cfg.max_subdivisions as i64;
    let mut value = 0.0;
    let mut err = 0.0;
    for (iv, lf, lg) in merged_cells(&fa, &gb) {
        if lf.is_zero() || lg.is_zero() {
            continue;
        }
        let h = |t: f64| (lf.eval(t) * lg.eval(t)).abs();
        match adaptive_gk(&h, iv.lo, iv.hi, cfg.abs_tol, REL_FLOOR, &mut budget) {
            Some((v, e)) => {
                value += v;
                err += e;
            }
            None => {
                return Err(Error::Inconclusive(
                    "budget exhausted integrating |f g|".into(),
                ))
            }
        }
    }
    Ok((value, err))
}

/// Integrate g(t, p(t)) dt over [0,1] against the exponent's cell structure,
/// with optional extra cut points. The integrand must be non-negative and
/// integrable near unbounded-exponent endpoints; the staircase/ladder regions
/// stop on certified geometric decay of their contributions.
pub(crate) fn integrate_against_exponent(
    p: &Exponent,
    extra_cuts: &[f64],
    g: &dyn Fn(f64, f64) -> f64,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    let psegs = exponent_segments(p)?;
    let mut cuts: Vec<f64> = psegs
        .iter()
        .flat_map(|(iv, _)| [iv.lo, iv.hi])
        .chain(extra_cuts.iter().copied())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.retain(|&t| (0.0..=1.0).contains(&t));

    let mut budget: i64 = cfg.max_subdivisions as i64;
    let alloc = cfg.abs_tol / cuts.len().max(2) as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut pi = 0usize;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        while pi + 1 < psegs.len() && psegs[pi].0.hi <= mid {
            pi += 1;
        }
        let (v, e) = match &psegs[pi].1 {
            ExpSeg::Const(pv) => {
                let h = |t: f64| g(t, *pv);
                adaptive_gk(&h, lo, hi, alloc, REL_FLOOR, &mut budget)
                    .ok_or_else(|| Error::Inconclusive("profile quadrature budget".into()))?
            }
            ExpSeg::Varying(q) => {
                let h = |t: f64| g(t, q.eval(t).unwrap_or(1.0));
                adaptive_gk(&h, lo, hi, alloc, REL_FLOOR, &mut budget)
                    .ok_or_else(|| Error::Inconclusive("profile quadrature budget".into()))?
            }
            ExpSeg::Log => {
                let h = |t: f64| g(t, 1.0 - t.ln());
                if lo > 0.0 {
                    adaptive_gk(&h, lo, hi, alloc, REL_FLOOR, &mut budget)
                        .ok_or_else(|| Error::Inconclusive("profile quadrature budget".into()))?
                } else {
                    ladder_pointwise(&h, hi, cfg, &mut budget, alloc)?
                }
            }
            ExpSeg::Tail { slope, base } | ExpSeg::DualTail { slope, base } => {
                let dual = matches!(psegs[pi].1, ExpSeg::DualTail { .. });
                staircase_pointwise(g, lo, hi, *slope, *base, dual, cfg, &mut budget, alloc)?
            }
        };
        value += v;
        err += e;
    }
    Ok((value, err))
}

/// Geometric rung ladder toward t = 0 for a pointwise integrand that is
/// known integrable there (empirical geometric stopping).
fn ladder_pointwise(
    h: &dyn Fn(f64) -> f64,
    hi: f64,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<(f64, f64)> {
    let g = cfg.endpoint_grading.clamp(0.1, 0.9);
    let mut upper = hi;
    let mut value = 0.0;
    let mut err = 0.0;
    let mut prev = f64::INFINITY;
    let mut prev2 = f64::INFINITY;
    for k in 0..1200 {
        let lower = upper * g;
        let rung_tol = (alloc * (1.0 - g) * g.powi(k)).max(1e-18);
        let (v, e) = adaptive_gk(&h, lower, upper, rung_tol, REL_FLOOR, budget)
            .ok_or_else(|| Error::Inconclusive("profile ladder budget".into()))?;
        value += v;
        err += e;
        let r = safe_ratio(v, prev).max(safe_ratio(prev, prev2));
        if k >= 2 && r < 0.95 {
            let tail = v * r / (1.0 - r);
            if tail < alloc.max(value.abs() * cfg.rel_tol) {
                return Ok((value, err + tail));
            }
        }
        if v == 0.0 && prev == 0.0 {
            return Ok((value, err));
        }
        prev2 = prev;
        prev = v;
        upper = lower;
        if upper < 1e-300 {
            return Ok((value, err));
        }
    }
    Err(Error::Inconclusive(
        "profile ladder exhausted its rungs".into(),
    ))
}

#[allow(clippy::too_many_arguments)]
fn staircase_pointwise(
    g: &dyn Fn(f64, f64) -> f64,
    lo: f64,
    hi: f64,
    slope: f64,
    base: f64,
    dual: bool,
    cfg: &QuadConfig,
    budget: &mut i64,
    alloc: f64,
) -> Result<(f64, f64)> {
    let mut j = tail_piece_index(lo);
    let mut value = 0.0;
    let mut err = 0.0;
    let mut prev = f64::INFINITY;
    let mut prev2 = f64::INFINITY;
    let mut count = 0u32;
    loop {
        let (p_lo, p_hi) = tail_piece_bounds(j);
        let a = p_lo.max(lo);
        let b = p_hi.min(hi);
        let pv = {
            let v = base.max(slope * j);
            if dual {
                dual_value(v)
            } else {
                v
            }
        };
        let mut v = 0.0;
        let mut e = 0.0;
        if b > a {
            let h = |t: f64| g(t, pv);
            let (vv, ee) = adaptive_gk(&h, a, b, alloc * 0.1, REL_FLOOR, budget)
                .ok_or_else(|| Error::Inconclusive("profile staircase budget".into()))?;
            v = vv;
            e = ee;
        }
        value += v;
        err += e;
        if p_hi >= hi && hi < 1.0 {
            return Ok((value, err));
        }
        // bounded profile integrands: the remaining sliver is majorized by
        // its measure times the last observed scale
        if j >= 46.0 {
            let scale = if b > a {
                v / (b - a).max(1e-300)
            } else {
                prev.max(0.0)
            };
            return Ok((value, err + (-j).exp2() * scale.max(0.0)));
        }
        let r = safe_ratio(v, prev).max(safe_ratio(prev, prev2));
        if count >= 2 && r < 0.95 {
            let tail = v * r / (1.0 - r);
            if tail < alloc.max(value.abs() * cfg.rel_tol) {
                return Ok((value, err + tail));
            }
        }
        if count >= 2 && v == 0.0 && prev == 0.0 {
            return Ok((value, err));
        }
        prev2 = prev;
        prev = v;
        j += 1.0;
        count += 1;
        if count > 1100 {
            return Err(Error::Inconclusive(
                "profile staircase exhausted its pieces".into(),
            ));
        }
    }
}
