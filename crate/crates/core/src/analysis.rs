//! Quantitative closedness program for C([0,1]) inside L^p(.): indicator
//! norm bounds, the equivalence constants on continuous functions, the
//! separation constant delta = c/(2 c2), the direct-sum estimates, the
//! proximinality of the order-continuous part, and the norm bound of the
//! trivial extension of a continuous functional.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::families::{
    lux_normalized, piecewise_linear, rng_from_seed, simple_on_level_set, sup_normalized,
};
use crate::func::{truncate_to_level, Func};
use crate::measure::MeasSet;
use crate::modular::{integral_abs, integral_product, QuadConfig};
use crate::norms::{distance_to_e, luxemburg_norm, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosednessVerdict {
    Closed,
    NotClosed,
    Inconclusive,
}

impl std::fmt::Display for ClosednessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClosednessVerdict::Closed => write!(f, "closed"),
            ClosednessVerdict::NotClosed => write!(f, "not_closed"),
            ClosednessVerdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Estimates of the constants in the indicator-norm and sup-norm
/// equivalence inequalities, with the closedness verdict.
#[derive(Debug, Clone)]
pub struct ClosednessReport {
    /// inf over probed dyadic intervals of ||chi_I||.
    pub c_est: f64,
    /// sup over probed dyadic intervals of ||chi_I||.
    pub c_upper: f64,
    /// min over sampled unit-sup continuous functions of ||x||_p.
    pub c1_est: f64,
    /// max of the same (<= 1 by the lattice bound).
    pub c2_est: f64,
    /// c_est / (2 c2_est).
    pub delta_est: f64,
    pub grid_depth: u32,
    pub sample_count: u32,
    /// Per-depth minima of ||chi_I|| over the dyadic intervals of that depth.
    pub depth_series: Vec<(u32, f64)>,
    pub verdict: ClosednessVerdict,
}

/// Dyadic intervals only: a general interval contains a dyadic one of at
/// least half its length, so the infimum over all intervals is certified up
/// to that factor.
pub fn closedness_constants(
    p: &Exponent,
    grid_depth: u32,
    sample_count: u32,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<ClosednessReport> {
    if grid_depth < 3 {
        return Err(Error::InvalidParameter("grid_depth must be >= 3".into()));
    }
    let mut c_est = f64::INFINITY;
    let mut c_upper: f64 = 0.0;
    let mut depth_series = Vec::with_capacity(grid_depth as usize + 1);
    for k in 0..=grid_depth {
        let cells = 1u64 << k;
        let h = (-(k as f64)).exp2();
        let mut depth_min = f64::INFINITY;
        for i in 0..cells {
            let lo = i as f64 * h;
            let hi = (i + 1) as f64 * h;
            let chi = Func::indicator(lo, hi)?;
            let norm = luxemburg_norm(&chi, p, NORM_TOL, cfg)?.value;
            depth_min = depth_min.min(norm);
            c_upper = c_upper.max(norm);
        }
        c_est = c_est.min(depth_min);
        depth_series.push((k, depth_min));
    }

    let mut rng = rng_from_seed(seed);
    let mut c1_est = f64::INFINITY;
    let mut c2_est: f64 = 0.0;
    for _ in 0..sample_count {
        let x = sup_normalized(&piecewise_linear(&mut rng, 16))?;
        let n = luxemburg_norm(&x, p, NORM_TOL, cfg)?.value;
        c1_est = c1_est.min(n);
        c2_est = c2_est.max(n);
    }

    let delta_est = c_est / (2.0 * c2_est);
    let d = depth_series.len();
    let last = depth_series[d - 1].1;
    let prev = depth_series[d - 2].1;
    let prev2 = depth_series[d - 3].1;
    let drift = (last - prev).abs() / prev.max(1e-300);
    let two_depth_decay = prev2 / last.max(1e-300);
    let verdict = if last > 1e-6 && drift < 0.05 {
        ClosednessVerdict::Closed
    } else if two_depth_decay >= 2.0 * (1.0 - 1e-9) || last <= 1e-9 {
        // constant exponents decay like 2^(-k/p): at least 2x across two
        // depths for every p <= 2, and the log family decays faster
        ClosednessVerdict::NotClosed
    } else {
        ClosednessVerdict::Inconclusive
    };

    Ok(ClosednessReport {
        c_est,
        c_upper,
        c1_est,
        c2_est,
        delta_est,
        grid_depth,
        sample_count,
        depth_series,
        verdict,
    })
}

/// One proof replay around the argmax of a sample: the window O where
/// ||x^(n) chi_O|| <= tol and |x| >= |x(t0)|/2, with the two sides of the
/// localized lower bound ||x chi_O|| >= |x(t0)| ||chi_O|| / 2.
#[derive(Debug, Clone)]
pub struct ProofReplay {
    pub argmax: f64,
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct SeparationReport {
    pub samples: u32,
    pub min_observed: f64,
    pub delta_bound: f64,
    pub violations: u32,
    pub replays: Vec<ProofReplay>,
}

/// Exact half-height radius of a piecewise function around its argmax:
/// largest r with |x| >= level on (t0 - r, t0 + r).
fn half_height_radius(x: &Func, t0: f64, level: f64) -> f64 {
    let probe = |t: f64| x.eval(t.clamp(0.0, 1.0)).map(f64::abs).unwrap_or(0.0);
    let mut r = t0.max(1.0 - t0);
    // bisection on the first crossing in either direction
    let crossing = |dir: f64| -> f64 {
        let mut lo = 0.0f64;
        let mut hi = r;
        if probe(t0 + dir * hi) >= level {
            return hi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if probe(t0 + dir * mid) >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    r = crossing(1.0).min(crossing(-1.0));
    r.max(1e-12)
}

/// Draws unit-norm continuous samples against members of the dense simple
/// family in E^p and certifies the separation ||x - y|| >= delta, replaying
/// the localization argument around each argmax.
pub fn separation_delta(
    p: &Exponent,
    report: &ClosednessReport,
    samples: u32,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<SeparationReport> {
    if report.verdict != ClosednessVerdict::Closed {
        return Err(Error::InvalidParameter(
            "separation check requires a closed verdict".into(),
        ));
    }
    let delta_bound = report.delta_est;
    let mut rng = rng_from_seed(seed);
    let mut min_observed = f64::INFINITY;
    let mut violations = 0u32;
    let mut replays = Vec::with_capacity(samples as usize);

    for _ in 0..samples {
        let x = lux_normalized(&piecewise_linear(&mut rng, 16), p, cfg)?;
        let (y, _) = simple_on_level_set(&mut rng, p)?;
        let diff = Func::sum(vec![x.clone(), Func::scaled(-1.0, y)]);
        let dist = luxemburg_norm(&diff, p, NORM_TOL, cfg)?.value;
        min_observed = min_observed.min(dist);
        if dist < delta_bound - 1e-9 {
            violations += 1;
        }

        // proof replay: shrink O_n = (t0 - eps, t0 + eps) until the truncated
        // part is negligible, then certify the localized indicator bound
        let sup = x.sup_norm_argmax()?;
        let t0 = sup.argmax;
        let xn = truncate_to_level(&x, p, 64)?;
        let window_norm = |eps: f64| -> Result<f64> {
            let window = MeasSet::interval((t0 - eps).max(0.0), (t0 + eps).min(1.0))?;
            Ok(luxemburg_norm(&Func::masked(xn.clone(), window), p, NORM_TOL, cfg)?.value)
        };
        let mut hi = t0.max(1.0 - t0);
        let mut eps = hi;
        if window_norm(hi)? > 1e-4 {
            let mut lo = 0.0;
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if window_norm(mid)? <= 1e-4 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            eps = lo;
        }
        let eps = eps.min(half_height_radius(&x, t0, sup.value / 2.0));
        let window = MeasSet::interval((t0 - eps).max(0.0), (t0 + eps).min(1.0))?;
        let lhs = luxemburg_norm(&Func::masked(x.clone(), window.clone()), p, NORM_TOL, cfg)?.value;
        let chi = Func::Indicator(window);
        let rhs = 0.5 * sup.value * luxemburg_norm(&chi, p, NORM_TOL, cfg)?.value;
        let ok = lhs >= rhs * (1.0 - 1e-9);
        if !ok {
            violations += 1;
        }
        replays.push(ProofReplay {
            argmax: t0,
            epsilon: eps,
            lhs,
            rhs,
            ok,
        });
    }

    Ok(SeparationReport {
        samples,
        min_observed,
        delta_bound,
        violations,
        replays,
    })
}

#[derive(Debug, Clone)]
pub struct DirectSumReport {
    pub samples: u32,
    pub failures: u32,
    pub projection_bound: f64,
}

/// Checks both sides of the direct-sum equivalence on seeded pairs:
/// ||x+y|| <= 2 max(||x||, ||y||) and max(||x||, ||y||) <= (1 + 1/delta)
/// ||x+y|| (the projection x+y -> x has norm at most 1/delta).
pub fn direct_sum_check(
    p: &Exponent,
    delta: f64,
    samples: u32,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<DirectSumReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut failures = 0u32;
    let projection_bound = 1.0 / delta;
    for _ in 0..samples {
        let scale_x = rng.random_range(0.1..3.0);
        let scale_y = rng.random_range(0.0..3.0);
        let x = Func::scaled(scale_x, lux_normalized(&piecewise_linear(&mut rng, 16), p, cfg)?);
        let (y0, _) = simple_on_level_set(&mut rng, p)?;
        let y = Func::scaled(scale_y, y0);
        let nx = luxemburg_norm(&x, p, NORM_TOL, cfg)?.value;
        let ny = luxemburg_norm(&y, p, NORM_TOL, cfg)?.value;
        let nxy = luxemburg_norm(&Func::sum(vec![x, y]), p, NORM_TOL, cfg)?.value;
        let m = nx.max(ny);
        let tol = 1e-7 * (1.0 + m);
        if nxy > 2.0 * m + tol {
            failures += 1;
        }
        if m > (1.0 + projection_bound) * nxy + tol {
            failures += 1;
        }
    }
    Ok(DirectSumReport {
        samples,
        failures,
        projection_bound,
    })
}

#[derive(Debug, Clone)]
pub struct ProximinalityReport {
    pub d_value: f64,
    pub witness_level: u32,
    pub witness: Func,
    pub gap: f64,
    pub theta_value: f64,
}

/// Distance attainment through the truncation family: the best truncation
/// over the schedule realizes the distance up to tol, and no witness beats
/// the finiteness threshold.
pub fn proximinality_check(
    f: &Func,
    p: &Exponent,
    tol: f64,
    cfg: &QuadConfig,
) -> Result<ProximinalityReport> {
    let schedule: Vec<u32> = (1..=8).map(|k| 1 << k).collect();
    let trace = distance_to_e(f, p, &schedule, tol, cfg)?;
    let d_value = trace.limit_estimate;
    let witness_level = *trace.levels.last().expect("non-empty schedule");
    let witness = truncate_to_level(f, p, witness_level)?;
    let last_value = *trace.values.last().expect("non-empty schedule");
    let gap = last_value - d_value;
    let theta_value = trace.theta_crosscheck;
    if !(0.0..=tol).contains(&gap) {
        return Err(Error::Consistency(format!(
            "witness gap {gap} outside [0, {tol}]"
        )));
    }
    if last_value < theta_value - tol {
        return Err(Error::Consistency(format!(
            "witness distance {last_value} beats the germ norm {theta_value}"
        )));
    }
    Ok(ProximinalityReport {
        d_value,
        witness_level,
        witness,
        gap,
        theta_value,
    })
}

/// A bounded functional on C([0,1]): finitely many point masses plus an
/// absolutely continuous density.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub atoms: Vec<(f64, f64)>,
    pub density: Option<Func>,
}

impl FunctionalSpec {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Func>) -> Result<Self> {
        if atoms.iter().any(|&(t, _)| !(0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidParameter(
                "atom locations must lie in [0,1]".into(),
            ));
        }
        Ok(FunctionalSpec { atoms, density })
    }

    /// Total variation of the representing measure: the norm on (C, ||.||_C).
    pub fn cstar_norm(&self, cfg: &QuadConfig) -> Result<f64> {
        let atom_part: f64 = self.atoms.iter().map(|&(_, a)| a.abs()).sum();
        let density_part = match &self.density {
            Some(d) => integral_abs(d, cfg)?.0,
            None => 0.0,
        };
        Ok(atom_part + density_part)
    }

    pub fn apply(&self, x: &Func, cfg: &QuadConfig) -> Result<f64> {
        let mut value = 0.0;
        for &(t, a) in &self.atoms {
            value += a * x.eval(t)?;
        }
        if let Some(d) = &self.density {
            value += integral_product(d, x, cfg)?.0;
        }
        Ok(value)
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionReport {
    pub cstar_norm: f64,
    pub bound: f64,
    pub samples: u32,
    pub violations: u32,
}

/// Norm bound of the trivial extension psi(x + y) = psi(x) on the direct sum,
/// certified sample-wise: |psi(x)| <= bound ||x + y||. The further extension
/// to the whole space is non-constructive and out of scope.
pub fn extension_bound(
    psi: &FunctionalSpec,
    p: &Exponent,
    report: &ClosednessReport,
    samples: u32,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<ExtensionReport> {
    if report.verdict != ClosednessVerdict::Closed {
        return Err(Error::InvalidParameter(
            "extension bound requires a closed verdict".into(),
        ));
    }
    let cstar_norm = psi.cstar_norm(cfg)?;
    let bound = cstar_norm / (report.c1_est * report.delta_est);
    let mut rng = rng_from_seed(seed);
    let mut violations = 0u32;
    for _ in 0..samples {
        let scale = rng.random_range(0.1..3.0);
        let x = Func::scaled(scale, sup_normalized(&piecewise_linear(&mut rng, 16))?);
        let (y, _) = simple_on_level_set(&mut rng, p)?;
        let psi_x = psi.apply(&x, cfg)?.abs();
        let nxy = luxemburg_norm(&Func::sum(vec![x, y]), p, NORM_TOL, cfg)?.value;
        if psi_x > bound * nxy + 1e-7 * (1.0 + psi_x) {
            violations += 1;
        }
    }
    Ok(ExtensionReport {
        cstar_norm,
        bound,
        samples,
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct LinftyReport {
    pub samples: u32,
    /// Failures of ||x - y||_inf >= ||x - y||_p (exact lattice bound).
    pub lattice_violations: u32,
    /// Failures of ||x - y||_inf >= delta * c1.
    pub separation_violations: u32,
}

/// Sup-norm separation of C([0,1]) from the bounded order-continuous ideal:
/// ||x - y||_inf dominates the p-norm (since ||chi_[0,1]|| = 1) and stays
/// above delta * c1 for unit-sup x.
pub fn linfty_separation_check(
    p: &Exponent,
    delta: f64,
    c1_est: f64,
    samples: u32,
    seed: u64,
    cfg: &QuadConfig,
) -> Result<LinftyReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut lattice_violations = 0u32;
    let mut separation_violations = 0u32;
    for _ in 0..samples {
        let x = sup_normalized(&piecewise_linear(&mut rng, 16))?;
        let (y, _) = simple_on_level_set(&mut rng, p)?;
        let diff = Func::sum(vec![x, Func::scaled(-1.0, y)]);
        let sup = diff.sup_norm_argmax()?.value;
        let pnorm = luxemburg_norm(&diff, p, NORM_TOL, cfg)?.value;
        if pnorm > sup + 1e-9 {
            lattice_violations += 1;
        }
        if sup < delta * c1_est - 1e-9 {
            separation_violations += 1;
        }
    }
    Ok(LinftyReport {
        samples,
        lattice_violations,
        separation_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn closedness_constant_exponent_not_closed() {
        let p = Exponent::constant(2.0).unwrap();
        let rep = closedness_constants(&p, 6, 12, 42, &cfg()).unwrap();
        assert_eq!(rep.verdict, ClosednessVerdict::NotClosed);
        for &(k, c) in &rep.depth_series {
            let expected = (-(k as f64) / 2.0).exp2();
            assert!((c - expected).abs() < 1e-6, "depth {k}: {c} vs {expected}");
        }
        assert!(rep.c2_est <= 1.0 + 1e-6);
        assert!((rep.delta_est - rep.c_est / (2.0 * rep.c2_est)).abs() < 1e-15);
    }

    #[test]
    fn closedness_log_family_not_closed() {
        let p = Exponent::log_family();
        let rep = closedness_constants(&p, 6, 8, 42, &cfg()).unwrap();
        assert_eq!(rep.verdict, ClosednessVerdict::NotClosed);
    }

    #[test]
    fn closedness_spiked_closed() {
        let p = Exponent::spiked(10, 4.0, 2.0).unwrap();
        let rep = closedness_constants(&p, 8, 16, 42, &cfg()).unwrap();
        assert_eq!(rep.verdict, ClosednessVerdict::Closed);
        assert!(rep.c_est >= 0.5, "c_est = {}", rep.c_est);
        assert!(rep.c2_est <= 1.0 + 1e-6);
    }

    #[test]
    fn separation_and_direct_sum_on_spiked() {
        let p = Exponent::spiked(8, 4.0, 2.0).unwrap();
        let rep = closedness_constants(&p, 6, 8, 42, &cfg()).unwrap();
        assert_eq!(rep.verdict, ClosednessVerdict::Closed);
        let sep = separation_delta(&p, &rep, 10, 7, &cfg()).unwrap();
        assert_eq!(sep.violations, 0, "min observed {}", sep.min_observed);
        assert!(sep.min_observed >= sep.delta_bound);
        let ds = direct_sum_check(&p, rep.delta_est, 10, 7, &cfg()).unwrap();
        assert_eq!(ds.failures, 0);
        assert!((ds.projection_bound - 1.0 / rep.delta_est).abs() < 1e-12);
    }

    #[test]
    fn separation_requires_closed_verdict() {
        let p = Exponent::constant(2.0).unwrap();
        let rep = closedness_constants(&p, 4, 4, 1, &cfg()).unwrap();
        assert!(separation_delta(&p, &rep, 2, 1, &cfg()).is_err());
    }

    #[test]
    fn proximinality_log_family() {
        let one = Func::constant(1.0);
        let log = Exponent::log_family();
        let rep = proximinality_check(&one, &log, 0.05, &cfg()).unwrap();
        assert!((rep.theta_value - (-1.0f64).exp()).abs() < 1e-4);
        assert!(rep.gap >= 0.0 && rep.gap <= 0.05);
        assert_eq!(rep.witness_level, 256);
    }

    #[test]
    fn proximinality_trivial_when_inside_e() {
        let p = Exponent::constant(2.5).unwrap();
        let f = Func::piecewise_linear(&[(0.0, 0.5), (1.0, -0.5)]).unwrap();
        let rep = proximinality_check(&f, &p, 1e-6, &cfg()).unwrap();
        assert!(rep.d_value.abs() < 1e-9);
        assert!(rep.gap.abs() < 1e-9);
    }

    #[test]
    fn functional_norms() {
        let atom = FunctionalSpec::new(vec![(0.5, 1.0)], None).unwrap();
        assert_eq!(atom.cstar_norm(&cfg()).unwrap(), 1.0);
        let lebesgue = FunctionalSpec::new(vec![], Some(Func::constant(1.0))).unwrap();
        assert!((lebesgue.cstar_norm(&cfg()).unwrap() - 1.0).abs() < 1e-12);
        let two = FunctionalSpec::new(vec![(0.5, 1.0), (0.25, -1.0)], None).unwrap();
        assert_eq!(two.cstar_norm(&cfg()).unwrap(), 2.0);
        // evaluation
        let x = Func::piecewise_linear(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert!((two.apply(&x, &cfg()).unwrap() - 0.25).abs() < 1e-12);
        assert!((lebesgue.apply(&x, &cfg()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn functional_rejects_bad_atoms() {
        assert!(FunctionalSpec::new(vec![(1.5, 1.0)], None).is_err());
    }

    #[test]
    fn extension_bound_on_spiked() {
        let p = Exponent::spiked(8, 4.0, 2.0).unwrap();
        let rep = closedness_constants(&p, 6, 8, 42, &cfg()).unwrap();
        let psi = FunctionalSpec::new(vec![(0.5, 1.0), (0.25, -1.0)], None).unwrap();
        let ext = extension_bound(&psi, &p, &rep, 10, 3, &cfg()).unwrap();
        assert_eq!(ext.violations, 0);
        assert!((ext.cstar_norm - 2.0).abs() < 1e-12);
        assert!((ext.bound - 2.0 / (rep.c1_est * rep.delta_est)).abs() < 1e-9);
    }

    #[test]
    fn linfty_checks_on_spiked() {
        let p = Exponent::spiked(8, 4.0, 2.0).unwrap();
        let rep = closedness_constants(&p, 6, 8, 42, &cfg()).unwrap();
        let lr = linfty_separation_check(&p, rep.delta_est, rep.c1_est, 10, 11, &cfg()).unwrap();
        assert_eq!(lr.lattice_violations, 0);
        assert_eq!(lr.separation_violations, 0);
    }
}
