//! Acceptance suite: one test per criterion, each printing a pass line with
//! its runtime. Tolerances are pinned in the assertions.

mod common;

use std::time::Instant;

use rand::Rng;

use varlex::analysis::{
    closedness_constants, direct_sum_check, extension_bound, linfty_separation_check,
    separation_delta, ClosednessVerdict, FunctionalSpec,
};
use varlex::families::{piecewise_cubic, piecewise_linear, rng_from_seed};
use varlex::modular::{modular, modular_scaled, QuadConfig};
use varlex::norms::{distance_to_e, holder_check, luxemburg_norm, orlicz_norm, theta};
use varlex::runner::{run_experiment, ExperimentConfig};
use varlex::{Exponent, Func, Poly};

use common::{assert_close, classical_lq_norm, discrete_dual_norm_oracle};

const E_INV: f64 = 0.36787944117144233;

fn cfg() -> QuadConfig {
    QuadConfig::default()
}

fn finish(criterion: u32, what: &str, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!(
        "[acceptance] criterion {criterion} ({what}): PASS in {elapsed:.2}s (limit {limit_s}s)"
    );
    assert!(
        elapsed < limit_s,
        "criterion {criterion} exceeded its runtime budget: {elapsed:.2}s >= {limit_s}s"
    );
}

#[test]
fn criterion_1_constant_exponent_equivalence() {
    let started = Instant::now();
    for (qi, &q) in [1.5f64, 2.0, 4.0].iter().enumerate() {
        let p = Exponent::constant(q).unwrap();
        let mut rng = rng_from_seed(1000 + qi as u64);
        for i in 0..20 {
            let f = piecewise_cubic(&mut rng, 5);
            let lux = luxemburg_norm(&f, &p, 1e-9, &cfg()).unwrap().value;
            let classical = classical_lq_norm(&f, q);
            let rel = (lux - classical).abs() / classical.max(1e-12);
            assert!(
                rel <= 1e-6,
                "q={q} sample {i}: luxemburg {lux} vs classical {classical} (rel {rel})"
            );
        }
    }
    finish(1, "constant-exponent equivalence", started, 10.0);
}

#[test]
fn criterion_2_log_family_closed_forms() {
    let started = Instant::now();
    let log = Exponent::log_family();
    let one = Func::constant(1.0);

    // quadrature reproduces the closed form (1/l)/(1 + ln l) to 1e-8 relative
    let mut forced = cfg();
    forced.force_quadrature = true;
    for &l in &[0.5f64, 0.75, 1.0, 2.0] {
        let expected = (1.0 / l) / (1.0 + l.ln());
        let r = modular_scaled(&one, &log, l, &forced).unwrap();
        let rel = (r.value().unwrap() - expected).abs() / expected;
        assert!(rel <= 1e-8, "lambda={l}: rel err {rel}");
    }

    let norm = luxemburg_norm(&one, &log, 1e-9, &cfg()).unwrap().value;
    assert_close(norm, 1.0, 1e-6, "||1|| under the log family");

    let th = theta(&one, &log, 1e-6, &cfg()).unwrap().value;
    assert_close(th, E_INV, 1e-5, "theta(1) under the log family");

    let r = modular(&Func::constant(std::f64::consts::E), &log, &cfg()).unwrap();
    assert!(r.witness().is_some(), "modular of e must be certified divergent");

    finish(2, "log-family closed forms", started, 5.0);
}

#[test]
fn criterion_3_proposition_21_identity() {
    let started = Instant::now();

    // log family: truncation distances approach theta = 1/e
    let log = Exponent::log_family();
    let one = Func::constant(1.0);
    let schedule: Vec<u32> = (1..=13).map(|k| 1 << k).collect();
    let trace = distance_to_e(&one, &log, &schedule, 1e-3, &cfg()).unwrap();
    assert!(trace.converged, "log-family trace did not converge");
    assert!(
        (trace.limit_estimate - trace.theta_crosscheck).abs() <= 1e-3,
        "identity gap {} > 1e-3",
        (trace.limit_estimate - trace.theta_crosscheck).abs()
    );
    assert_close(trace.limit_estimate, E_INV, 1e-3, "log-family limit");

    // spiked family: limit = 2^(-1/4) against the series oracle
    let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
    let schedule: Vec<u32> = (1..=10).map(|k| 1u32 << (2 * k)).collect();
    let trace = distance_to_e(&one, &sp, &schedule, 1e-3, &cfg()).unwrap();
    assert!(trace.converged, "spiked trace did not converge");
    assert_close(
        trace.limit_estimate,
        2.0f64.powf(-0.25),
        1e-4,
        "spiked limit",
    );
    assert!(
        (trace.limit_estimate - trace.theta_crosscheck).abs() <= 1e-3,
        "spiked identity gap"
    );

    finish(3, "Proposition 2.1 identity", started, 30.0);
}

#[test]
fn criterion_4_closedness_verdicts() {
    let started = Instant::now();

    let p2 = Exponent::constant(2.0).unwrap();
    let rep = closedness_constants(&p2, 10, 20, 42, &cfg()).unwrap();
    assert_eq!(rep.verdict, ClosednessVerdict::NotClosed, "p = 2");
    for &(k, c) in &rep.depth_series {
        let expected = (-(k as f64) / 2.0).exp2();
        assert!(
            (c - expected).abs() <= 1e-6,
            "depth {k}: c_est {c} vs 2^(-k/2) = {expected}"
        );
    }

    let log = Exponent::log_family();
    let rep = closedness_constants(&log, 8, 20, 42, &cfg()).unwrap();
    assert_eq!(rep.verdict, ClosednessVerdict::NotClosed, "log family");

    let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
    let rep10 = closedness_constants(&sp, 10, 20, 42, &cfg()).unwrap();
    assert_eq!(rep10.verdict, ClosednessVerdict::Closed, "spiked");
    let series = &rep10.depth_series;
    let c8 = series[8].1;
    let c9 = series[9].1;
    let c10 = series[10].1;
    // stability in the sense of the verdict rule: consecutive-depth drift
    for (a, b) in [(c8, c9), (c9, c10)] {
        let drift = (a - b).abs() / a;
        assert!(drift < 0.05, "c_est drift {drift} between consecutive depths in 8..10");
    }
    assert!(c10 >= 0.5, "c_est {} below the dyadic-probe floor 1/2", c10);
    // verdict stable under one extra refinement depth
    let rep9 = closedness_constants(&sp, 9, 20, 42, &cfg()).unwrap();
    assert_eq!(rep9.verdict, rep10.verdict, "verdict changed at depth 9 vs 10");

    finish(4, "closedness verdicts", started, 60.0);
}

#[test]
fn criterion_5_theorem_11_skeleton() {
    let started = Instant::now();
    let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
    let rep = closedness_constants(&sp, 8, 40, 42, &cfg()).unwrap();
    assert_eq!(rep.verdict, ClosednessVerdict::Closed);

    let sep = separation_delta(&sp, &rep, 100, 7, &cfg()).unwrap();
    assert_eq!(
        sep.violations, 0,
        "separation: min observed {} vs delta {}",
        sep.min_observed, sep.delta_bound
    );
    assert!(sep.min_observed >= sep.delta_bound);
    assert_eq!(sep.replays.len(), 100);
    assert!(
        sep.replays.iter().all(|r| r.ok),
        "localized indicator bound failed on a replay"
    );

    let ds = direct_sum_check(&sp, rep.delta_est, 100, 8, &cfg()).unwrap();
    assert_eq!(ds.failures, 0, "direct-sum failures");
    assert!((ds.projection_bound - 1.0 / rep.delta_est).abs() < 1e-12);

    let functionals = [
        FunctionalSpec::new(vec![(0.5, 1.0)], None).unwrap(),
        FunctionalSpec::new(vec![], Some(Func::constant(1.0))).unwrap(),
        FunctionalSpec::new(vec![(0.5, 1.0), (0.25, -1.0)], None).unwrap(),
    ];
    for (i, psi) in functionals.iter().enumerate() {
        let ext = extension_bound(psi, &sp, &rep, 100, 9 + i as u64, &cfg()).unwrap();
        assert_eq!(ext.violations, 0, "extension bound violations for psi #{i}");
    }

    finish(5, "Theorem 1.1 skeleton on the spiked family", started, 120.0);
}

/// Piecewise-constant function on the dyadic grid with the given depth.
fn seeded_step_function(rng: &mut impl Rng, depth: u32) -> Func {
    let cells = 1usize << depth;
    let h = 1.0 / cells as f64;
    let breaks: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
    let pieces: Vec<Poly> = (0..cells)
        .map(|_| Poly::constant(rng.random_range(-2.0..2.0)))
        .collect();
    Func::piecewise_poly(breaks, pieces, false).unwrap()
}

#[test]
fn criterion_6_duality() {
    let started = Instant::now();

    // oracle sanity on a closed form: ||chi_E||^0 = |E|^(1/q') under p = q
    {
        let q = 3.0;
        let k = 16usize;
        let mut v = vec![0.0f64; 64];
        for vi in v.iter_mut().take(k) {
            *vi = 1.0;
        }
        let p = vec![q; 64];
        let w = vec![1.0 / 64.0; 64];
        let expected = (k as f64 / 64.0).powf(1.0 - 1.0 / q);
        assert_close(
            discrete_dual_norm_oracle(&v, &p, &w),
            expected,
            1e-6,
            "oracle self-check",
        );
    }

    // Lagrange-profile dual norm against the independent ascent oracle on
    // matched 64-cell data (same mathematical object for both routes)
    let log64 = Exponent::log_family().discretize_dyadic(6).unwrap();
    let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
    let sp64 = sp.discretize_dyadic(6).unwrap();
    let w = vec![1.0 / 64.0; 64];
    for (ei, p_disc) in [&log64, &sp64].into_iter().enumerate() {
        let p_vals: Vec<f64> = (0..64)
            .map(|i| p_disc.eval((i as f64 + 0.5) / 64.0).unwrap())
            .collect();
        let mut rng = rng_from_seed(600 + ei as u64);
        for i in 0..5 {
            let v = seeded_step_function(&mut rng, 6);
            let v_vals: Vec<f64> = (0..64)
                .map(|j| v.eval((j as f64 + 0.5) / 64.0).unwrap())
                .collect();
            let kernel = orlicz_norm(&v, p_disc, 1e-6, &cfg()).unwrap().value;
            let oracle = discrete_dual_norm_oracle(&v_vals, &p_vals, &w);
            assert!(
                (kernel - oracle).abs() <= 1e-3,
                "exponent {ei} sample {i}: profile {kernel} vs ascent {oracle}"
            );
        }
    }

    // duality sandwich ||v||_p' <= ||v||^0 <= 2 ||v||_p' on the true
    // exponents, and Hoelder ratio <= 1 on 100 seeded pairs
    let log = Exponent::log_family();
    for (ei, p) in [&log, &sp].into_iter().enumerate() {
        let dual = p.dual();
        let mut rng = rng_from_seed(700 + ei as u64);
        for i in 0..5 {
            let v = piecewise_cubic(&mut rng, 4);
            let nv = luxemburg_norm(&v, &dual, 1e-9, &cfg()).unwrap().value;
            let no = orlicz_norm(&v, p, 1e-6, &cfg()).unwrap().value;
            assert!(
                nv <= no + 1e-5,
                "exponent {ei} sample {i}: ||v||_p' = {nv} > ||v||^0 = {no}"
            );
            assert!(
                no <= 2.0 * nv + 1e-5,
                "exponent {ei} sample {i}: ||v||^0 = {no} > 2||v||_p' = {}",
                2.0 * nv
            );
        }
        let mut rng = rng_from_seed(800 + ei as u64);
        for i in 0..50 {
            let x = piecewise_linear(&mut rng, 8);
            let v = piecewise_linear(&mut rng, 8);
            let hc = holder_check(&x, &v, p, &cfg()).unwrap();
            assert!(
                hc.ratio <= 1.0,
                "exponent {ei} pair {i}: Hoelder ratio {} > 1",
                hc.ratio
            );
        }
    }

    finish(6, "duality", started, 60.0);
}

#[test]
fn criterion_7_remark_2() {
    let started = Instant::now();
    let sp = Exponent::spiked(10, 4.0, 2.0).unwrap();
    let log = Exponent::log_family();

    // exact lattice bound ||z||_p <= ||z||_inf on 50 seeded z
    let mut rng = rng_from_seed(77);
    for i in 0..50 {
        let z = piecewise_linear(&mut rng, 16);
        let p = if i % 2 == 0 { &sp } else { &log };
        let sup = z.sup_norm_argmax().unwrap().value;
        let pn = luxemburg_norm(&z, p, 1e-9, &cfg()).unwrap().value;
        assert!(pn <= sup + 1e-9, "sample {i}: ||z||_p = {pn} > sup = {sup}");
    }

    let rep = closedness_constants(&sp, 8, 40, 42, &cfg()).unwrap();
    let lr = linfty_separation_check(&sp, rep.delta_est, rep.c1_est, 100, 13, &cfg()).unwrap();
    assert_eq!(lr.lattice_violations, 0);
    assert_eq!(lr.separation_violations, 0);

    finish(7, "Remark 2 sup-norm separation", started, 20.0);
}

#[test]
fn criterion_8_kozv_criterion() {
    let started = Instant::now();

    let log = Exponent::log_family();
    let rep = log.kozv_criterion(20).unwrap();
    assert!(rep.verdict);
    assert_close(rep.tail_ratio, 1.0, 1e-3, "log-family tail ratio");
    for (k, r) in rep.ratios.iter().enumerate() {
        assert_close(*r, 1.0, 1e-3, &format!("log-family ratio at k={}", k + 1));
    }

    for p in [
        Exponent::constant(2.0).unwrap(),
        Exponent::constant(40.0).unwrap(),
        Exponent::piecewise(vec![0.0, 0.3, 1.0], vec![1.5, 12.0]).unwrap(),
    ] {
        assert!(!p.kozv_criterion(20).unwrap().verdict, "{p:?}");
    }

    let sp = Exponent::spiked(12, 4.0, 2.0).unwrap();
    let rep = sp.kozv_criterion(20).unwrap();
    assert!(rep.verdict);
    let target = 4.0 / std::f64::consts::LN_2;
    let rel = (rep.tail_ratio - target).abs() / target;
    assert!(rel <= 0.10, "spiked tail ratio {} vs {target}", rep.tail_ratio);

    finish(8, "tail-ratio criterion", started, 10.0);
}

#[test]
fn criterion_9_determinism() {
    let started = Instant::now();
    let config_text = r#"
seed = 42
exponent = "spiked(8,4,2)"

[[ops]]
kind = "norm"
func = "indicator(0, 0.25)"

[[ops]]
kind = "theta"
func = "const(1)"

[[ops]]
kind = "dist"
func = "const(1)"
label = "prop21"
schedule = [4, 16, 64, 256, 1024, 4096]

[[ops]]
kind = "kozv"
depth = 18

[[ops]]
kind = "closedness"
depth = 6
samples = 10
expect = "closed"

[[ops]]
kind = "separation"
depth = 6
samples = 10
"#;
    let config = ExperimentConfig::from_toml(config_text).unwrap();
    let base = std::env::temp_dir().join(format!("varlex_acceptance_{}", std::process::id()));
    let run = |dir: &std::path::Path| {
        let bundle = run_experiment(&config).unwrap();
        assert!(bundle.ok(), "bundle has failing rows: {:?}", bundle.rows);
        bundle.write_to(dir).unwrap();
    };
    let d1 = base.join("run1");
    let d2 = base.join("run2");
    run(&d1);
    run(&d2);

    let mut names: Vec<String> = std::fs::read_dir(&d1)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"report.csv".to_string()));
    assert!(names.contains(&"report.json".to_string()));
    assert!(names.iter().any(|n| n.starts_with("plotdata_")));
    for name in &names {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(!a.is_empty(), "{name} is empty");
    }

    // the truncation-trace plot ends within 1e-3 of theta = 2^(-1/4)
    let plot = std::fs::read_to_string(d1.join("plotdata_prop21.csv")).unwrap();
    let last = plot.lines().last().unwrap();
    let y: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert_close(y, 2.0f64.powf(-0.25), 1e-3, "trace endpoint");

    std::fs::remove_dir_all(&base).ok();
    finish(9, "byte-identical report bundles", started, 60.0);
}
