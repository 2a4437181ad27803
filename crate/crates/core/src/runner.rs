//! Batch experiment driver: structured TOML configs in, deterministic
//! CSV/JSON reports and plot-data files out.
//!
//! Identical config + seed produces byte-identical bundles: operations run
//! sequentially in config order, all randomness flows from the single seed
//! through ChaCha8, and floats are written with the shortest round-trip
//! formatting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    closedness_constants, direct_sum_check, extension_bound, linfty_separation_check,
    separation_delta, ClosednessReport, ClosednessVerdict, FunctionalSpec,
};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::families::{piecewise_linear, rng_from_seed, sup_normalized};
use crate::func::Func;
use crate::modular::{modular_scaled, ModularResult, QuadConfig};
use crate::norms::{
    distance_to_e, holder_check, luxemburg_norm, orlicz_norm, theta, NORM_TOL, THETA_TOL,
};
use crate::parse::{parse_exponent, parse_func};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Exponent spec in the grammar of `parse::parse_exponent`.
    pub exponent: String,
    /// Output directory for the report bundle.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub quadrature: QuadOverrides,
    #[serde(default)]
    pub ops: Vec<OpSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadOverrides {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdiv: Option<u32>,
    pub div_cap: Option<f64>,
    pub force_quadrature: Option<bool>,
}

impl QuadOverrides {
    pub fn apply(&self, cfg: &mut QuadConfig) {
        if let Some(v) = self.abs_tol {
            cfg.abs_tol = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.max_subdiv {
            cfg.max_subdivisions = v;
        }
        if let Some(v) = self.div_cap {
            cfg.divergence_cap = v;
        }
        if let Some(v) = self.force_quadrature {
            cfg.force_quadrature = v;
        }
    }
}

/// One operation of an experiment. `kind` selects the operation; the other
/// fields parameterize it and unknown keys are rejected at parse time.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpSpec {
    pub kind: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub func: Option<String>,
    #[serde(default)]
    pub v: Option<String>,
    #[serde(default)]
    pub x: Option<String>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub schedule: Option<Vec<u32>>,
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub samples: Option<u32>,
    #[serde(default)]
    pub atoms: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub density: Option<String>,
    /// Expected categorical outcome (verdicts: "closed", "true", ...).
    #[serde(default)]
    pub expect: Option<String>,
    /// Expected numeric value, checked against `tol`.
    #[serde(default)]
    pub expect_value: Option<f64>,
}

impl OpSpec {
    pub fn of_kind(kind: &str) -> Self {
        OpSpec {
            kind: kind.to_string(),
            label: None,
            func: None,
            v: None,
            x: None,
            lambda: None,
            tol: None,
            schedule: None,
            depth: None,
            samples: None,
            atoms: None,
            density: None,
            expect: None,
            expect_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "inconclusive")]
    Inconclusive,
    #[serde(rename = "n/a")]
    NA,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail => write!(f, "fail"),
            Verdict::Inconclusive => write!(f, "inconclusive"),
            Verdict::NA => write!(f, "n/a"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "quadrature")]
    Quadrature,
    #[serde(rename = "sampled")]
    Sampled,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::ClosedForm => write!(f, "closed-form"),
            Provenance::Quadrature => write!(f, "quadrature"),
            Provenance::Sampled => write!(f, "sampled"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct ReportBundle {
    pub rows: Vec<ReportRow>,
    pub plots: Vec<PlotSeries>,
}

impl ReportBundle {
    /// True when every row is pass or n/a.
    pub fn ok(&self) -> bool {
        self.rows
            .iter()
            .all(|r| matches!(r.verdict, Verdict::Pass | Verdict::NA))
    }

    /// Writes report.csv, report.json and plotdata_*.csv into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("report.csv"))
            .map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["quantity", "value", "tolerance", "verdict", "provenance"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for row in &self.rows {
            w.write_record([
                row.quantity.as_str(),
                &format!("{}", row.value),
                &format!("{}", row.tolerance),
                &row.verdict.to_string(),
                &row.provenance.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;

        let json = serde_json::json!({ "rows": self.rows });
        let mut text = serde_json::to_string_pretty(&json).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join("report.json"), text)?;

        for plot in &self.plots {
            emit_plot_data(plot, dir)?;
        }
        Ok(())
    }
}

/// Writes one two-column series as `plotdata_<name>.csv`. The first column
/// must be monotone; empty series are an error.
pub fn emit_plot_data(plot: &PlotSeries, dir: &Path) -> Result<PathBuf> {
    if plot.points.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "plot series `{}` is empty",
            plot.name
        )));
    }
    if plot.points.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidParameter(format!(
            "plot series `{}` has a non-monotone first column",
            plot.name
        )));
    }
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("plotdata_{}.csv", plot.name));
    let mut text = String::from("x,y\n");
    for &(x, y) in &plot.points {
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(&path, text)?;
    Ok(path)
}

fn provenance_of(quadrature_used: bool) -> Provenance {
    if quadrature_used {
        Provenance::Quadrature
    } else {
        Provenance::ClosedForm
    }
}

fn check_value(value: f64, op: &OpSpec, tol: f64) -> Verdict {
    match op.expect_value {
        Some(expected) => {
            if (value - expected).abs() <= tol {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        None => Verdict::NA,
    }
}

fn check_verdict(actual: &str, op: &OpSpec) -> Verdict {
    match &op.expect {
        Some(expected) => {
            if actual == expected {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        None => Verdict::NA,
    }
}

fn zero_violations_row(quantity: String, violations: u32) -> ReportRow {
    ReportRow {
        quantity,
        value: violations as f64,
        tolerance: 0.0,
        verdict: if violations == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        provenance: Provenance::Sampled,
    }
}

struct OpContext<'a> {
    p: &'a Exponent,
    cfg: &'a QuadConfig,
    seed: u64,
    index: usize,
}

impl OpContext<'_> {
    fn op_seed(&self) -> u64 {
        // distinct deterministic stream per operation
        self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(self.index as u64)
    }
}

fn label_of(op: &OpSpec, default: String) -> String {
    op.label.clone().unwrap_or(default)
}

fn internal_closedness(ctx: &OpContext, op: &OpSpec) -> Result<ClosednessReport> {
    let depth = op.depth.unwrap_or(8);
    let samples = op.samples.unwrap_or(40);
    closedness_constants(ctx.p, depth, samples, ctx.op_seed(), ctx.cfg)
}

fn run_op(op: &OpSpec, ctx: &OpContext) -> Result<(Vec<ReportRow>, Vec<PlotSeries>)> {
    let mut rows = Vec::new();
    let mut plots = Vec::new();
    let p = ctx.p;
    let cfg = ctx.cfg;
    match op.kind.as_str() {
        "norm" => {
            let spec = op.func.as_deref().ok_or_else(|| missing("norm", "func"))?;
            let f = parse_func(spec, p)?;
            let tol = op.tol.unwrap_or(NORM_TOL);
            let n = luxemburg_norm(&f, p, tol, cfg)?;
            rows.push(ReportRow {
                quantity: label_of(op, format!("norm({spec})")),
                value: n.value,
                tolerance: tol,
                verdict: check_value(n.value, op, tol.max(1e-9) * 10.0),
                provenance: provenance_of(n.quadrature_used),
            });
        }
        "modular" => {
            let spec = op.func.as_deref().ok_or_else(|| missing("modular", "func"))?;
            let f = parse_func(spec, p)?;
            let lambda = op.lambda.unwrap_or(1.0);
            let r = modular_scaled(&f, p, lambda, cfg)?;
            let (value, provenance) = match &r {
                ModularResult::Finite {
                    value,
                    quadrature_used,
                    ..
                } => (*value, provenance_of(*quadrature_used)),
                ModularResult::Divergent { .. } => (f64::INFINITY, Provenance::ClosedForm),
            };
            let verdict = match op.expect.as_deref() {
                Some("divergent") => {
                    if r.is_finite() {
                        Verdict::Fail
                    } else {
                        Verdict::Pass
                    }
                }
                Some("finite") => {
                    if r.is_finite() {
                        Verdict::Pass
                    } else {
                        Verdict::Fail
                    }
                }
                _ => check_value(value, op, op.tol.unwrap_or(cfg.rel_tol * value.abs())),
            };
            rows.push(ReportRow {
                quantity: label_of(op, format!("modular({spec})/{lambda}")),
                value,
                tolerance: op.tol.unwrap_or(0.0),
                verdict,
                provenance,
            });
        }
        "theta" => {
            let spec = op.func.as_deref().ok_or_else(|| missing("theta", "func"))?;
            let f = parse_func(spec, p)?;
            let tol = op.tol.unwrap_or(THETA_TOL);
            let th = theta(&f, p, tol, cfg)?;
            rows.push(ReportRow {
                quantity: label_of(op, format!("theta({spec})")),
                value: th.value,
                tolerance: tol,
                verdict: check_value(th.value, op, tol * 10.0),
                provenance: provenance_of(th.quadrature_used),
            });
        }
        "dist" | "verify-prop21" => {
            let spec = op.func.as_deref().unwrap_or("const(1)");
            let f = parse_func(spec, p)?;
            let tol = op.tol.unwrap_or(1e-3);
            let schedule = op
                .schedule
                .clone()
                .unwrap_or_else(|| (1..=8).map(|k| 1 << k).collect());
            let trace = distance_to_e(&f, p, &schedule, tol, cfg)?;
            let name = label_of(op, format!("dist({spec})"));
            rows.push(ReportRow {
                quantity: format!("{name}:limit"),
                value: trace.limit_estimate,
                tolerance: tol,
                verdict: check_value(trace.limit_estimate, op, tol),
                provenance: Provenance::Quadrature,
            });
            rows.push(ReportRow {
                quantity: format!("{name}:theta"),
                value: trace.theta_crosscheck,
                tolerance: THETA_TOL,
                verdict: Verdict::NA,
                provenance: Provenance::Quadrature,
            });
            let gap = (trace.limit_estimate - trace.theta_crosscheck).abs();
            rows.push(ReportRow {
                quantity: format!("{name}:identity_gap"),
                value: gap,
                tolerance: 10.0 * tol,
                verdict: if !trace.converged {
                    Verdict::Inconclusive
                } else if gap <= 10.0 * tol {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                provenance: Provenance::Quadrature,
            });
            plots.push(PlotSeries {
                name: plot_name(&name),
                points: trace
                    .levels
                    .iter()
                    .zip(&trace.values)
                    .map(|(&n, &v)| (n as f64, v))
                    .collect(),
            });
        }
        "dual-norm" => {
            let spec = op.v.as_deref().or(op.func.as_deref()).ok_or_else(|| missing("dual-norm", "v"))?;
            let v = parse_func(spec, p)?;
            let tol = op.tol.unwrap_or(1e-6);
            let n = orlicz_norm(&v, p, tol, cfg)?;
            rows.push(ReportRow {
                quantity: label_of(op, format!("dual_norm({spec})")),
                value: n.value,
                tolerance: tol,
                verdict: check_value(n.value, op, tol * 10.0),
                provenance: Provenance::Quadrature,
            });
        }
        "holder" => {
            let xs = op.x.as_deref().ok_or_else(|| missing("holder", "x"))?;
            let vs = op.v.as_deref().ok_or_else(|| missing("holder", "v"))?;
            let hc = holder_check(&parse_func(xs, p)?, &parse_func(vs, p)?, p, cfg)?;
            rows.push(ReportRow {
                quantity: label_of(op, format!("holder({xs};{vs})")),
                value: hc.ratio,
                tolerance: 1.0,
                verdict: if hc.ratio <= 1.0 {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                provenance: Provenance::Quadrature,
            });
        }
        "closedness" => {
            let rep = internal_closedness(ctx, op)?;
            let name = label_of(op, "closedness".into());
            for (q, v) in [
                ("c_est", rep.c_est),
                ("C_est", rep.c_upper),
                ("c1_est", rep.c1_est),
                ("c2_est", rep.c2_est),
                ("delta_est", rep.delta_est),
            ] {
                rows.push(ReportRow {
                    quantity: format!("{name}:{q}"),
                    value: v,
                    tolerance: 0.0,
                    verdict: Verdict::NA,
                    provenance: Provenance::Sampled,
                });
            }
            rows.push(ReportRow {
                quantity: format!("{name}:verdict({})", rep.verdict),
                value: match rep.verdict {
                    ClosednessVerdict::Closed => 1.0,
                    ClosednessVerdict::NotClosed => 0.0,
                    ClosednessVerdict::Inconclusive => -1.0,
                },
                tolerance: 0.0,
                verdict: check_verdict(&rep.verdict.to_string(), op),
                provenance: Provenance::Sampled,
            });
            plots.push(PlotSeries {
                name: plot_name(&name),
                points: rep
                    .depth_series
                    .iter()
                    .map(|&(k, c)| (k as f64, c))
                    .collect(),
            });
        }
        "kozv" => {
            let depth = op.depth.unwrap_or(20);
            let rep = p.kozv_criterion(depth)?;
            let name = label_of(op, "kozv".into());
            rows.push(ReportRow {
                quantity: format!("{name}:tail_ratio"),
                value: rep.tail_ratio,
                tolerance: op.tol.unwrap_or(0.0),
                verdict: check_value(rep.tail_ratio, op, op.tol.unwrap_or(1e-3)),
                provenance: Provenance::ClosedForm,
            });
            rows.push(ReportRow {
                quantity: format!("{name}:verdict({})", rep.verdict),
                value: if rep.verdict { 1.0 } else { 0.0 },
                tolerance: 0.0,
                verdict: check_verdict(&rep.verdict.to_string(), op),
                provenance: Provenance::ClosedForm,
            });
            plots.push(PlotSeries {
                name: plot_name(&name),
                points: rep
                    .ratios
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| ((i + 1) as f64, r))
                    .collect(),
            });
        }
        "rearrange" => {
            let points = op.samples.unwrap_or(256);
            let p_star = p.decreasing_rearrangement()?;
            let mut series = Vec::with_capacity(points as usize);
            for i in 0..points {
                let t = (i as f64 + 0.5) / points as f64;
                series.push((t, p_star.eval(t)?));
            }
            let name = label_of(op, "rearrange".into());
            rows.push(ReportRow {
                quantity: format!("{name}:points"),
                value: points as f64,
                tolerance: 0.0,
                verdict: Verdict::NA,
                provenance: Provenance::ClosedForm,
            });
            plots.push(PlotSeries {
                name: plot_name(&name),
                points: series,
            });
        }
        "separation" => {
            let rep = internal_closedness(ctx, op)?;
            let samples = op.samples.unwrap_or(100);
            let sep = separation_delta(p, &rep, samples, ctx.op_seed(), cfg)?;
            let name = label_of(op, "separation".into());
            rows.push(ReportRow {
                quantity: format!("{name}:min_observed"),
                value: sep.min_observed,
                tolerance: 0.0,
                verdict: Verdict::NA,
                provenance: Provenance::Sampled,
            });
            rows.push(zero_violations_row(
                format!("{name}:violations"),
                sep.violations,
            ));
        }
        "direct-sum" => {
            let rep = internal_closedness(ctx, op)?;
            let samples = op.samples.unwrap_or(100);
            let ds = direct_sum_check(p, rep.delta_est, samples, ctx.op_seed(), cfg)?;
            let name = label_of(op, "direct_sum".into());
            rows.push(ReportRow {
                quantity: format!("{name}:projection_bound"),
                value: ds.projection_bound,
                tolerance: 0.0,
                verdict: Verdict::NA,
                provenance: Provenance::Sampled,
            });
            rows.push(zero_violations_row(format!("{name}:failures"), ds.failures));
        }
        "extension" => {
            let rep = internal_closedness(ctx, op)?;
            let atoms = op.atoms.clone().unwrap_or_default();
            let density = match &op.density {
                Some(d) => Some(parse_func(d, p)?),
                None => None,
            };
            let psi = FunctionalSpec::new(atoms, density)?;
            let samples = op.samples.unwrap_or(100);
            let ext = extension_bound(&psi, p, &rep, samples, ctx.op_seed(), cfg)?;
            let name = label_of(op, "extension".into());
            rows.push(ReportRow {
                quantity: format!("{name}:cstar_norm"),
                value: ext.cstar_norm,
                tolerance: 0.0,
                verdict: Verdict::NA,
                provenance: Provenance::ClosedForm,
            });
            rows.push(ReportRow {
                quantity: format!("{name}:bound"),
                value: ext.bound,
                tolerance: 0.0,
                verdict: Verdict::NA,
                provenance: Provenance::Sampled,
            });
            rows.push(zero_violations_row(
                format!("{name}:violations"),
                ext.violations,
            ));
        }
        "linfty" | "verify-remark2" => {
            let rep = internal_closedness(ctx, op)?;
            let samples = op.samples.unwrap_or(100);
            let name = label_of(op, "linfty".into());
            // lattice bound on its own seeded draw, then the separation
            let mut rng = rng_from_seed(ctx.op_seed().wrapping_add(1));
            let mut lattice_violations = 0u32;
            for _ in 0..50 {
                let z = sup_normalized(&piecewise_linear(&mut rng, 16))?;
                let sup = z.sup_norm_argmax()?.value;
                let pn = luxemburg_norm(&z, p, NORM_TOL, cfg)?.value;
                if pn > sup + 1e-9 {
                    lattice_violations += 1;
                }
            }
            rows.push(zero_violations_row(
                format!("{name}:lattice_violations"),
                lattice_violations,
            ));
            let lr = linfty_separation_check(
                p,
                rep.delta_est,
                rep.c1_est,
                samples,
                ctx.op_seed(),
                cfg,
            )?;
            rows.push(zero_violations_row(
                format!("{name}:lattice_violations_pairs"),
                lr.lattice_violations,
            ));
            rows.push(zero_violations_row(
                format!("{name}:separation_violations"),
                lr.separation_violations,
            ));
        }
        "verify-thm11" => {
            let rep = internal_closedness(ctx, op)?;
            let samples = op.samples.unwrap_or(100);
            let name = label_of(op, "thm11".into());
            rows.push(ReportRow {
                quantity: format!("{name}:closedness({})", rep.verdict),
                value: rep.c_est,
                tolerance: 0.0,
                verdict: if rep.verdict == ClosednessVerdict::Closed {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                provenance: Provenance::Sampled,
            });
            if rep.verdict != ClosednessVerdict::Closed {
                return Ok((rows, plots));
            }
            let sep = separation_delta(p, &rep, samples, ctx.op_seed(), cfg)?;
            rows.push(zero_violations_row(
                format!("{name}:separation_violations"),
                sep.violations,
            ));
            let replay_failures = sep.replays.iter().filter(|r| !r.ok).count() as u32;
            rows.push(zero_violations_row(
                format!("{name}:replay_failures"),
                replay_failures,
            ));
            let ds = direct_sum_check(p, rep.delta_est, samples, ctx.op_seed(), cfg)?;
            rows.push(zero_violations_row(
                format!("{name}:direct_sum_failures"),
                ds.failures,
            ));
            let functionals: [(&str, FunctionalSpec); 3] = [
                ("point_mass", FunctionalSpec::new(vec![(0.5, 1.0)], None)?),
                (
                    "lebesgue",
                    FunctionalSpec::new(vec![], Some(Func::constant(1.0)))?,
                ),
                (
                    "dipole",
                    FunctionalSpec::new(vec![(0.5, 1.0), (0.25, -1.0)], None)?,
                ),
            ];
            for (tag, psi) in functionals {
                let ext = extension_bound(&psi, p, &rep, samples, ctx.op_seed(), cfg)?;
                rows.push(zero_violations_row(
                    format!("{name}:extension_{tag}_violations"),
                    ext.violations,
                ));
            }
        }
        other => {
            return Err(Error::Parse(format!("unknown operation kind `{other}`")));
        }
    }
    Ok((rows, plots))
}

fn plot_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn missing(kind: &str, field: &str) -> Error {
    Error::Parse(format!("operation `{kind}` requires the `{field}` field"))
}

/// Executes the operations in config order and returns the report bundle.
/// Operation errors become inconclusive rows rather than aborting the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    let mut cfg = QuadConfig::default();
    config.quadrature.apply(&mut cfg);
    let p = parse_exponent(&config.exponent)?;
    let mut bundle = ReportBundle::default();
    for (index, op) in config.ops.iter().enumerate() {
        let ctx = OpContext {
            p: &p,
            cfg: &cfg,
            seed: config.seed,
            index,
        };
        match run_op(op, &ctx) {
            Ok((rows, plots)) => {
                bundle.rows.extend(rows);
                bundle.plots.extend(plots);
            }
            Err(e) => {
                bundle.rows.push(ReportRow {
                    quantity: format!(
                        "{}: {e}",
                        op.label.clone().unwrap_or_else(|| op.kind.clone())
                    ),
                    value: f64::NAN,
                    tolerance: 0.0,
                    verdict: Verdict::Inconclusive,
                    provenance: Provenance::Sampled,
                });
            }
        }
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_norm_row() {
        let config = ExperimentConfig::from_toml(
            r#"
seed = 1
exponent = "constant(2)"

[[ops]]
kind = "norm"
func = "indicator(0, 0.25)"
"#,
        )
        .unwrap();
        let bundle = run_experiment(&config).unwrap();
        assert_eq!(bundle.rows.len(), 1);
        assert!((bundle.rows[0].value - 0.5).abs() < 1e-8);
        assert!(bundle.ok());
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = ExperimentConfig::from_toml(
            r#"
seed = 1
exponent = "log"
[quadratur]
abs_tol = 1e-10
"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("quadratur"), "{msg}");
    }

    #[test]
    fn op_errors_become_inconclusive_rows() {
        let config = ExperimentConfig::from_toml(
            r#"
seed = 1
exponent = "log"

[[ops]]
kind = "norm"
func = "nonsense(1)"
"#,
        )
        .unwrap();
        let bundle = run_experiment(&config).unwrap();
        assert_eq!(bundle.rows.len(), 1);
        assert_eq!(bundle.rows[0].verdict, Verdict::Inconclusive);
        assert!(!bundle.ok());
    }

    #[test]
    fn bundle_writes_deterministic_bytes() {
        let config = ExperimentConfig::from_toml(
            r#"
seed = 42
exponent = "log"

[[ops]]
kind = "theta"
func = "const(1)"
expect_value = 0.36787944117144233

[[ops]]
kind = "dist"
func = "const(1)"
schedule = [2, 4, 8, 16, 32]
"#,
        )
        .unwrap();
        let tmp = std::env::temp_dir().join(format!("varlex_runner_test_{}", std::process::id()));
        let d1 = tmp.join("a");
        let d2 = tmp.join("b");
        let b1 = run_experiment(&config).unwrap();
        b1.write_to(&d1).unwrap();
        let b2 = run_experiment(&config).unwrap();
        b2.write_to(&d2).unwrap();
        for file in ["report.csv", "report.json", "plotdata_dist_const_1__.csv"] {
            let x = std::fs::read(d1.join(file)).unwrap();
            let y = std::fs::read(d2.join(file)).unwrap();
            assert_eq!(x, y, "{file} differs");
            assert!(!x.is_empty());
        }
        std::fs::remove_dir_all(&tmp).ok();
    }

    #[test]
    fn empty_plot_rejected() {
        let plot = PlotSeries {
            name: "x".into(),
            points: vec![],
        };
        assert!(emit_plot_data(&plot, &std::env::temp_dir()).is_err());
    }
}
