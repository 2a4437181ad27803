//! Command-line driver for the variable-exponent kernel.
//!
//! Every subcommand assembles one or more operations, runs them through the
//! experiment runner and prints the report rows; `--out` additionally writes
//! the CSV/JSON bundle. Exit code is 0 iff every row is pass or n/a.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use varlex::runner::{ExperimentConfig, OpSpec, QuadOverrides, ReportBundle, Verdict};

#[derive(Parser)]
#[command(
    name = "varlex",
    about = "Modulars, Luxemburg/Orlicz norms and closedness diagnostics for variable-exponent Lebesgue spaces on [0,1]",
    version
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GlobalArgs {
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,

    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,

    /// Maximum quadrature subdivisions per modular evaluation.
    #[arg(long, global = true)]
    max_subdiv: Option<u32>,

    /// Divergence cap for the graded-ladder rule.
    #[arg(long, global = true)]
    div_cap: Option<f64>,

    /// Seed for all sampled families.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Dyadic probing depth (closedness) / ratio grid depth (kozv).
    #[arg(long, global = true)]
    depth: Option<u32>,

    /// Sample count for seeded checks.
    #[arg(long, global = true)]
    samples: Option<u32>,

    /// Write the report bundle (CSV, JSON, plot data) to this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Luxemburg norm of a function.
    Norm {
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        func: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Modular rho(f/lambda), with divergence detection.
    Modular {
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        func: String,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Finiteness threshold theta(f).
    Theta {
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        func: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Distance to the order-continuous part along a truncation schedule.
    Dist {
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        func: String,
        /// Comma-separated increasing levels, e.g. 2,4,8,16.
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<u32>>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Orlicz (dual) norm of a density v.
    DualNorm {
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Indicator-norm constants, equivalence constants and the verdict.
    Closedness {
        #[arg(long)]
        exponent: String,
        /// Expected verdict: closed | not_closed (row fails on mismatch).
        #[arg(long)]
        expect: Option<String>,
    },
    /// Tail-ratio criterion on the decreasing rearrangement.
    Kozv {
        #[arg(long)]
        exponent: String,
        /// Expected verdict: true | false.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Sample the decreasing rearrangement (plot data).
    Rearrange {
        #[arg(long)]
        exponent: String,
        /// Number of sample points.
        #[arg(long)]
        points: Option<u32>,
    },
    /// Canned verification bundles.
    Verify {
        /// prop21 | thm11 | remark2
        what: String,
        #[arg(long)]
        exponent: String,
        #[arg(long)]
        func: Option<String>,
        #[arg(long, value_delimiter = ',')]
        schedule: Option<Vec<u32>>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Norm bound of the trivial extension of a functional on C([0,1]).
    Extension {
        #[arg(long)]
        exponent: String,
        /// Point masses as location:weight, repeatable.
        #[arg(long = "atom")]
        atoms: Vec<String>,
        /// Absolutely continuous density (function spec).
        #[arg(long)]
        density: Option<String>,
    },
    /// Run an experiment config file (TOML).
    Run { config: PathBuf },
}

fn op_with_depth_samples(mut op: OpSpec, g: &GlobalArgs) -> OpSpec {
    op.depth = g.depth;
    op.samples = g.samples;
    op
}

fn parse_atom(s: &str) -> anyhow::Result<(f64, f64)> {
    let (t, w) = s
        .split_once(':')
        .with_context(|| format!("atom `{s}` must be location:weight"))?;
    Ok((t.trim().parse()?, w.trim().parse()?))
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    });
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let g = cli.global.clone();
    let quadrature = QuadOverrides {
        abs_tol: g.abs_tol,
        rel_tol: g.rel_tol,
        max_subdiv: g.max_subdiv,
        div_cap: g.div_cap,
        force_quadrature: None,
    };

    let (exponent, ops, out): (String, Vec<OpSpec>, Option<PathBuf>) = match cli.command {
        Command::Norm {
            exponent,
            func,
            tol,
        } => {
            let mut op = OpSpec::of_kind("norm");
            op.func = Some(func);
            op.tol = tol;
            (exponent, vec![op], g.out.clone())
        }
        Command::Modular {
            exponent,
            func,
            lambda,
        } => {
            let mut op = OpSpec::of_kind("modular");
            op.func = Some(func);
            op.lambda = Some(lambda);
            (exponent, vec![op], g.out.clone())
        }
        Command::Theta {
            exponent,
            func,
            tol,
        } => {
            let mut op = OpSpec::of_kind("theta");
            op.func = Some(func);
            op.tol = tol;
            (exponent, vec![op], g.out.clone())
        }
        Command::Dist {
            exponent,
            func,
            schedule,
            tol,
        } => {
            let mut op = OpSpec::of_kind("dist");
            op.func = Some(func);
            op.schedule = schedule;
            op.tol = tol;
            (exponent, vec![op], g.out.clone())
        }
        Command::DualNorm { exponent, v, tol } => {
            let mut op = OpSpec::of_kind("dual-norm");
            op.v = Some(v);
            op.tol = tol;
            (exponent, vec![op], g.out.clone())
        }
        Command::Closedness { exponent, expect } => {
            let mut op = op_with_depth_samples(OpSpec::of_kind("closedness"), &g);
            op.expect = expect;
            (exponent, vec![op], g.out.clone())
        }
        Command::Kozv { exponent, expect } => {
            let mut op = OpSpec::of_kind("kozv");
            op.depth = g.depth;
            op.expect = expect;
            (exponent, vec![op], g.out.clone())
        }
        Command::Rearrange { exponent, points } => {
            let mut op = OpSpec::of_kind("rearrange");
            op.samples = points;
            (exponent, vec![op], g.out.clone())
        }
        Command::Verify {
            what,
            exponent,
            func,
            schedule,
            tol,
        } => {
            let kind = match what.as_str() {
                "prop21" => "verify-prop21",
                "thm11" => "verify-thm11",
                "remark2" => "verify-remark2",
                other => bail!("unknown verification `{other}` (expected prop21, thm11, remark2)"),
            };
            let mut op = op_with_depth_samples(OpSpec::of_kind(kind), &g);
            op.func = func;
            op.schedule = schedule;
            op.tol = tol;
            (exponent, vec![op], g.out.clone())
        }
        Command::Extension {
            exponent,
            atoms,
            density,
        } => {
            let mut op = op_with_depth_samples(OpSpec::of_kind("extension"), &g);
            op.atoms = Some(
                atoms
                    .iter()
                    .map(|s| parse_atom(s))
                    .collect::<anyhow::Result<Vec<_>>>()?,
            );
            op.density = density;
            (exponent, vec![op], g.out.clone())
        }
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut parsed = ExperimentConfig::from_toml(&text)?;
            parsed.quadrature = merge_overrides(parsed.quadrature, &quadrature);
            let out = g
                .out
                .clone()
                .or(parsed.out.clone())
                .unwrap_or_else(|| PathBuf::from("reports"));
            let bundle = varlex::run_experiment(&parsed)?;
            print_bundle(&bundle);
            bundle.write_to(&out)?;
            println!("report bundle written to {}", out.display());
            return Ok(bundle.ok());
        }
    };

    let config = ExperimentConfig {
        seed: g.seed,
        exponent,
        out: None,
        quadrature,
        ops,
    };
    let bundle = varlex::run_experiment(&config)?;
    print_bundle(&bundle);
    if let Some(dir) = out {
        bundle.write_to(&dir)?;
        println!("report bundle written to {}", dir.display());
    }
    Ok(bundle.ok())
}

fn merge_overrides(base: QuadOverrides, cli: &QuadOverrides) -> QuadOverrides {
    QuadOverrides {
        abs_tol: cli.abs_tol.or(base.abs_tol),
        rel_tol: cli.rel_tol.or(base.rel_tol),
        max_subdiv: cli.max_subdiv.or(base.max_subdiv),
        div_cap: cli.div_cap.or(base.div_cap),
        force_quadrature: cli.force_quadrature.or(base.force_quadrature),
    }
}

fn print_bundle(bundle: &ReportBundle) {
    let width = bundle
        .rows
        .iter()
        .map(|r| r.quantity.len())
        .max()
        .unwrap_or(8)
        .min(72);
    for row in &bundle.rows {
        println!(
            "{:width$}  {:<24}  {:<12}  {}",
            row.quantity,
            row.value,
            row.verdict,
            row.provenance,
            width = width
        );
    }
    let verdicts = bundle
        .rows
        .iter()
        .filter(|r| !matches!(r.verdict, Verdict::NA))
        .count();
    if verdicts > 0 {
        let passed = bundle
            .rows
            .iter()
            .filter(|r| matches!(r.verdict, Verdict::Pass))
            .count();
        println!("{passed}/{verdicts} checks passed");
    }
}
