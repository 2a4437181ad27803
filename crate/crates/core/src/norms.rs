//! Luxemburg norm, the finiteness threshold theta, the distance to the
//! order-continuous part, and the Orlicz norm of regular functionals.
//!
//! All bisections run against the three-valued modular oracle (finite value /
//! divergent / inconclusive). A divergent modular counts as "above 1" for the
//! norm bisection, which also yields the certified infimum bracket at a
//! finiteness jump.

use crate::error::{Error, Result};
use crate::exponent::{Exponent, DUAL_CLIP_EPS};
use crate::func::Func;
use crate::modular::{
    integrate_against_exponent, modular_scaled, truncation_residual_modular, ModularResult,
    QuadConfig,
};

/// Default absolute tolerance on the norm bisection.
pub const NORM_TOL: f64 = 1e-9;
/// Default relative tolerance on the theta bisection.
pub const THETA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct NormResult {
    pub value: f64,
    /// Certified bracket around the value (lo, hi).
    pub bracket: (f64, f64),
    pub iterations: u32,
    pub diagnostics: String,
    /// Whether any cell required numerical quadrature.
    pub quadrature_used: bool,
}

impl NormResult {
    fn exact(value: f64, note: &str) -> Self {
        NormResult {
            value,
            bracket: (value, value),
            iterations: 0,
            diagnostics: note.to_string(),
            quadrature_used: false,
        }
    }
}

/// Trace of ||x - x^(n)|| along a schedule of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrace {
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    pub limit_estimate: f64,
    pub theta_crosscheck: f64,
    pub converged: bool,
}

fn modular_at(f: &Func, p: &Exponent, lambda: f64, cfg: &QuadConfig) -> Result<ModularResult> {
    modular_scaled(f, p, lambda, cfg)
}

/// Bisection on the monotone map lambda -> rho(f/lambda) against a
/// three-valued oracle. Divergent counts as "above 1", which also yields the
/// certified infimum bracket at a finiteness jump.
fn bisect_norm(
    mut rho_at: impl FnMut(f64) -> Result<ModularResult>,
    sup_hint: f64,
    tol: f64,
) -> Result<NormResult> {
    let mut quad = false;
    let mut feasible = |lambda: f64, quad: &mut bool| -> Result<bool> {
        match rho_at(lambda)? {
            ModularResult::Finite {
                value,
                quadrature_used,
                ..
            } => {
                *quad |= quadrature_used;
                Ok(value <= 1.0)
            }
            ModularResult::Divergent { .. } => Ok(false),
        }
    };

    // rho(f / sup|f|) <= 1 whenever the sup is exact; double as a guard for
    // scanned (approximate) analytic suprema.
    let mut hi = sup_hint.max(1e-12);
    let mut grow = 0;
    while !feasible(hi, &mut quad)? {
        hi *= 2.0;
        grow += 1;
        if grow > 80 {
            return Err(Error::Inconclusive(
                "no feasible upper bracket for the Luxemburg norm".into(),
            ));
        }
    }
    let mut lo = 0.0f64;
    let mut iterations = grow;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid, &mut quad)? {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(NormResult {
        value: hi,
        bracket: (lo, hi),
        iterations,
        diagnostics: format!("bisection to |bracket| <= {tol}; rho(f/value) <= 1 certified"),
        quadrature_used: quad,
    })
}

/// Luxemburg norm inf{ lambda > 0 : rho(f/lambda) <= 1 } by bisection.
///
/// The returned value is the certified upper end of the bracket:
/// rho(f/value) <= 1 held at the last verification.
pub fn luxemburg_norm(f: &Func, p: &Exponent, tol: f64, cfg: &QuadConfig) -> Result<NormResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("norm tolerance must be positive".into()));
    }
    let sup = f.sup_norm_argmax()?;
    if sup.value == 0.0 && f.is_ae_zero() {
        return Ok(NormResult::exact(0.0, "f = 0 a.e."));
    }
    bisect_norm(|lambda| modular_at(f, p, lambda, cfg), sup.value, tol)
}

/// theta(f) = inf{ lambda > 0 : rho(f/lambda) < infinity }, the finiteness
/// threshold of the scaling. Exactly 0 when the exponent is essentially
/// bounded on the support of f.
pub fn theta(f: &Func, p: &Exponent, tol: f64, cfg: &QuadConfig) -> Result<NormResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("theta tolerance must be positive".into()));
    }
    let supp = f.support();
    if supp.is_empty() {
        return Ok(NormResult::exact(0.0, "f = 0 a.e."));
    }
    if p.sup_on(&supp).is_some() {
        return Ok(NormResult::exact(
            0.0,
            "exponent essentially bounded on supp f: f scales inside E^p",
        ));
    }

    let mut quad = false;
    let mut finite = |lambda: f64| -> Result<bool> {
        match modular_at(f, p, lambda, cfg)? {
            ModularResult::Finite {
                quadrature_used, ..
            } => {
                quad |= quadrature_used;
                Ok(true)
            }
            ModularResult::Divergent { .. } => Ok(false),
        }
    };

    // upper end: the norm bracket start is always finite
    let sup = f.sup_norm_argmax()?;
    let mut hi = sup.value.max(1e-12);
    let mut grow = 0;
    while !finite(hi)? {
        hi *= 2.0;
        grow += 1;
        if grow > 80 {
            return Err(Error::Inconclusive("no finite scaling found for theta".into()));
        }
    }
    // lower end: shrink until divergent, or certify theta ~ 0
    let mut lo = hi;
    let mut iterations = grow;
    loop {
        let probe = lo / 2.0;
        if probe < tol * hi {
            // finite all the way down
            return Ok(NormResult {
                value: 0.0,
                bracket: (0.0, probe * 2.0),
                iterations,
                diagnostics: "rho(f/lambda) finite for lambda down to tol: theta = 0".into(),
                quadrature_used: quad,
            });
        }
        iterations += 1;
        if finite(probe)? {
            lo = probe;
        } else {
            lo = probe;
            break;
        }
    }
    // now lo is divergent, hi finite; bisect the status boundary
    let mut hi_f = hi;
    let mut lo_d = lo;
    while hi_f - lo_d > tol * hi_f {
        let mid = 0.5 * (lo_d + hi_f);
        if mid <= lo_d || mid >= hi_f {
            break;
        }
        if finite(mid)? {
            hi_f = mid;
        } else {
            lo_d = mid;
        }
        iterations += 1;
    }
    Ok(NormResult {
        value: 0.5 * (lo_d + hi_f),
        bracket: (lo_d, hi_f),
        iterations,
        diagnostics: "finiteness boundary: rho divergent at bracket.0, finite at bracket.1".into(),
        quadrature_used: quad,
    })
}

/// Distance to the order-continuous part via the truncation trace
/// ||f - f chi_{Omega_n}|| along the schedule, cross-checked against theta.
pub fn distance_to_e(
    f: &Func,
    p: &Exponent,
    schedule: &[u32],
    tol: f64,
    cfg: &QuadConfig,
) -> Result<DistanceTrace> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "distance schedule must be non-empty and increasing".into(),
        ));
    }
    let sup_hint = f.sup_norm_argmax()?.value;
    let mut levels = Vec::with_capacity(schedule.len());
    let mut values = Vec::with_capacity(schedule.len());
    for &n in schedule {
        // || f - f^(n) || = || f chi_{p > n} ||, through the level-indexed
        // residual modular (deep sublevel boundaries are not representable
        // as interval endpoints)
        let norm = bisect_norm(
            |lambda| truncation_residual_modular(f, p, n, lambda, cfg),
            sup_hint,
            (tol * 0.1).min(NORM_TOL),
        )?;
        levels.push(n);
        values.push(norm.value);
    }
    let k = values.len();
    let converged = k >= 2 && (values[k - 1] - values[k - 2]).abs() < tol;
    let limit_estimate = values[k - 1];
    let theta_res = theta(f, p, THETA_TOL, cfg)?;
    if converged && (limit_estimate - theta_res.value).abs() > 10.0 * tol {
        return Err(Error::Consistency(format!(
            "distance trace limit {} disagrees with theta {} beyond 10*tol = {}",
            limit_estimate,
            theta_res.value,
            10.0 * tol
        )));
    }
    Ok(DistanceTrace {
        levels,
        values,
        limit_estimate,
        theta_crosscheck: theta_res.value,
        converged,
    })
}

/// Orlicz norm ||v||^0 = sup{ int v x : rho_p(x) <= 1 }, computed with the
/// pointwise maximizer profile x_mu(t) = sgn(v) (|v|/(mu p))^(1/(p-1)) and mu
/// tuned by bisection until rho(x_mu) = 1. Equals the operator norm of the
/// regular functional induced by v.
pub fn orlicz_norm(v: &Func, p: &Exponent, tol: f64, cfg: &QuadConfig) -> Result<NormResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if v.is_ae_zero() {
        return Ok(NormResult::exact(0.0, "v = 0 a.e."));
    }
    let vres = v.resolve();
    let cuts: Vec<f64> = vres.iter().flat_map(|fp| [fp.iv.lo, fp.iv.hi]).collect();
    let v_at = move |t: f64, vres: &[crate::func::FuncPiece]| -> f64 {
        let idx = vres
            .partition_point(|fp| fp.iv.hi <= t)
            .min(vres.len() - 1);
        vres[idx].local.eval(t)
    };

    let rho_of = |mu: f64| -> Result<f64> {
        let g = |t: f64, pt: f64| -> f64 {
            let pc = pt.max(1.0 + DUAL_CLIP_EPS);
            let va = v_at(t, &vres).abs();
            if va == 0.0 {
                0.0
            } else {
                (va / (mu * pc)).powf(pc / (pc - 1.0))
            }
        };
        let (val, _) = integrate_against_exponent(p, &cuts, &g, cfg)?;
        Ok(val)
    };
    let pair_of = |mu: f64| -> Result<f64> {
        let g = |t: f64, pt: f64| -> f64 {
            let pc = pt.max(1.0 + DUAL_CLIP_EPS);
            let va = v_at(t, &vres).abs();
            if va == 0.0 {
                0.0
            } else {
                va * (va / (mu * pc)).powf(1.0 / (pc - 1.0))
            }
        };
        let (val, _) = integrate_against_exponent(p, &cuts, &g, cfg)?;
        Ok(val)
    };

    // bracket mu: rho decreasing in mu, target rho = 1
    let mut mu_hi = 1.0f64; // rho(mu_hi) <= 1
    let mut mu_lo = 1.0f64; // rho(mu_lo) >= 1
    let mut iterations = 0u32;
    if rho_of(1.0)? <= 1.0 {
        loop {
            mu_lo /= 2.0;
            iterations += 1;
            if rho_of(mu_lo)? >= 1.0 {
                break;
            }
            if iterations > 200 {
                return Err(Error::Inconclusive("no lower mu bracket".into()));
            }
        }
    } else {
        loop {
            mu_hi *= 2.0;
            iterations += 1;
            if rho_of(mu_hi)? <= 1.0 {
                break;
            }
            if iterations > 200 {
                return Err(Error::Inconclusive("no upper mu bracket".into()));
            }
        }
    }
    // bisect on rho(x_mu) = 1, then report the pairing at the feasible end
    loop {
        let mid = 0.5 * (mu_lo + mu_hi);
        if mid <= mu_lo || mid >= mu_hi {
            break;
        }
        if rho_of(mid)? <= 1.0 {
            mu_hi = mid;
        } else {
            mu_lo = mid;
        }
        iterations += 1;
        let gap = pair_of(mu_lo)? - pair_of(mu_hi)?;
        if gap.abs() <= tol {
            break;
        }
        if iterations > 500 {
            return Err(Error::Inconclusive("mu bisection exceeded its budget".into()));
        }
    }
    let value = pair_of(mu_hi)?;
    let upper = pair_of(mu_lo)?;
    Ok(NormResult {
        value,
        bracket: (value, upper.max(value)),
        iterations,
        diagnostics: format!("Lagrange profile with mu in [{mu_hi}, {mu_lo}]; rho(x_mu) <= 1 at the feasible end"),
        quadrature_used: true,
    })
}

/// Variable-exponent Hoelder check: int |x v| <= 2 ||x||_p ||v||_p'.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn holder_check(x: &Func, v: &Func, p: &Exponent, cfg: &QuadConfig) -> Result<HolderCheck> {
    let (lhs, _) = crate::modular::integral_abs_product(x, v, cfg)?;
    let nx = luxemburg_norm(x, p, NORM_TOL, cfg)?;
    let nv = luxemburg_norm(v, &p.dual(), NORM_TOL, cfg)?;
    let rhs = 2.0 * nx.value * nv.value;
    Ok(HolderCheck {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}
