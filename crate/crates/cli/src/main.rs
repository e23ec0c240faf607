//! `bmlab`: certified Brunn-Minkowski inequality checks on exact lattice
//! sets, scripted counterexample reproductions, and randomized searches.
//!
//! Exit codes: 0 = certified holds (or reproduction succeeded),
//! 3 = inconclusive, 4 = certified violation, 1 = usage/IO/parse error.

mod spec;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bmlab_core::checkers::{
    falsify, report_csv, run_repro, FalsifyConfig, TrialRecord, Verdict, VerdictStatus,
};
use bmlab_core::density::DensitySpec;
use bmlab_core::gridset::{RandomFamily, Window};
use bmlab_core::means::{Lambda, PParam};
use bmlab_core::rational::{format_rat, parse_rat};

use spec::ExperimentSpec;

#[derive(Parser)]
#[command(name = "bmlab", version, about = "Brunn-Minkowski inequality verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the check described by a JSON experiment spec.
    Check(CheckArgs),
    /// Run a named reproduction of a counterexample or theorem instance.
    Repro(ReproArgs),
    /// Randomized counterexample search with a deterministic seed.
    Search(SearchArgs),
    /// Shortcut: run an isoperimetric experiment spec.
    Iso(CheckArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Path to the experiment spec JSON.
    spec: PathBuf,
    /// Re-run the check on this many successive exact pitch halvings.
    #[arg(long, default_value_t = 0)]
    pitch_refine: u32,
    /// Write the plain-text report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the per-iteration CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    /// One of: gauss-shifted-balls, nayar-tkocz-cone, x-squared-1d,
    /// nonproduct-square, log-bm-boxes, p-bm-boxes, pl-product.
    name: String,
    /// Parameter overrides, repeatable: --param pitch=1/32
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Set family: wu | convex | any
    #[arg(long)]
    family: String,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Density: gaussian | gaussian:<sigma> | lebesgue | nonproduct | x-squared
    #[arg(long)]
    density: String,
    /// Mean exponent, e.g. 1/2, 0, inf, -inf.
    #[arg(long)]
    p: String,
    /// Combination weights, repeatable; defaults to 1/2.
    #[arg(long = "lambda")]
    lambdas: Vec<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to BMLAB_WORKERS or 1.
    #[arg(long)]
    workers: Option<usize>,
    /// Lattice pitch (rational).
    #[arg(long, default_value = "1/8")]
    pitch: String,
    /// Half-width of the symmetric sampling window (rational).
    #[arg(long, default_value = "2")]
    window: String,
    /// Use the raw power combination (no zero-measure zeroing).
    #[arg(long, default_value_t = false)]
    general: bool,
    /// Exact measure-pitch refinement factor.
    #[arg(long, default_value_t = 4)]
    refine: i64,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Directory for violation witness JSON files (defaults beside the CSV).
    #[arg(long)]
    witness_dir: Option<PathBuf>,
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn status_exit(status: VerdictStatus) -> ExitCode {
    match status {
        VerdictStatus::CertifiedHolds => ExitCode::from(0),
        VerdictStatus::Inconclusive => ExitCode::from(3),
        VerdictStatus::CertifiedViolation => ExitCode::from(4),
    }
}

fn describe_verdict(v: &Verdict, out: &mut String) {
    writeln!(out, "status: {}", v.status.as_str()).ok();
    writeln!(out, "  lhs bracket: [{:.9}, {:.9}]", v.lhs.lower, v.lhs.upper).ok();
    writeln!(out, "  rhs bracket: [{:.9}, {:.9}]", v.rhs.lower, v.rhs.upper).ok();
    writeln!(out, "  mu_A: [{:.9}, {:.9}]  mu_B: [{:.9}, {:.9}]", v.mu_a.lower, v.mu_a.upper, v.mu_b.lower, v.mu_b.upper).ok();
    writeln!(out, "  hold_margin: {:.9}  violation_margin: {:.9}", v.hold_margin, v.violation_margin).ok();
    writeln!(out, "  rigorous: {}", v.rigorous).ok();
    if let Some(eq) = v.equality_case {
        writeln!(out, "  equality case (A = B): {eq}").ok();
    }
    for hyp in &v.hypotheses {
        writeln!(
            out,
            "  gate [{}] {}: {} ({:?})",
            if hyp.passed { "pass" } else { "FAIL" },
            hyp.name,
            hyp.detail,
            hyp.mode
        )
        .ok();
    }
}

fn run_check(args: &CheckArgs, force_iso: bool) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.spec)?;
    let exp = ExperimentSpec::parse(&text)?;
    if force_iso && !matches!(exp.check, spec::CheckKind::Iso) {
        anyhow::bail!("`bmlab iso` expects a spec with \"check\": \"iso\"");
    }
    let mut report = String::new();
    let mut rows = Vec::new();
    let mut last_status = VerdictStatus::Inconclusive;
    for level in 0..=args.pitch_refine {
        let v = exp.run(level)?;
        writeln!(report, "refinement level {level} (pitch / 2^{level}):").ok();
        describe_verdict(&v, &mut report);
        last_status = v.status;
        rows.push(TrialRecord {
            trial: level as usize,
            seed: 0,
            lambda: exp.lambda.unwrap_or(Lambda::new(bmlab_core::rational::rat(1, 2)).unwrap()),
            p: exp.p.as_deref().map(PParam::parse).transpose()?.unwrap_or(PParam::Zero),
            verdict: v,
            witness: None,
        });
    }
    print!("{report}");
    if let Some(path) = &args.report {
        std::fs::write(path, &report)?;
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, report_csv(&rows))?;
    }
    Ok(status_exit(last_status))
}

fn run_repro_cmd(args: &ReproArgs) -> anyhow::Result<ExitCode> {
    let overrides: BTreeMap<String, String> = args.params.iter().cloned().collect();
    let outcome = run_repro(&args.name, &overrides)?;
    print!("{}", outcome.report);
    if let Some(path) = &args.report {
        std::fs::write(path, &outcome.report)?;
    }
    if let Some(path) = &args.csv {
        std::fs::write(path, outcome.csv())?;
    }
    Ok(if outcome.reproduced {
        ExitCode::from(0)
    } else {
        ExitCode::from(3)
    })
}

fn parse_density(s: &str, dim: usize) -> anyhow::Result<DensitySpec> {
    Ok(match s {
        "gaussian" => DensitySpec::Gaussian { sigma: 1.0, dim },
        "lebesgue" => DensitySpec::Lebesgue { dim },
        "nonproduct" => DensitySpec::NonproductSquare,
        "x-squared" => DensitySpec::Product {
            factors: vec![bmlab_core::density::Density1D::Power { alpha: 2.0 }; dim],
        },
        other => match other.strip_prefix("gaussian:") {
            Some(sigma) => DensitySpec::Gaussian { sigma: sigma.parse()?, dim },
            None => anyhow::bail!("unknown density `{other}` (gaussian[:sigma]|lebesgue|nonproduct|x-squared)"),
        },
    })
}

fn run_search(args: &SearchArgs) -> anyhow::Result<ExitCode> {
    let workers = args
        .workers
        .or_else(|| std::env::var("BMLAB_WORKERS").ok().and_then(|w| w.parse().ok()))
        .unwrap_or(1);
    let lambdas = if args.lambdas.is_empty() {
        vec![Lambda::parse("1/2")?]
    } else {
        args.lambdas.iter().map(|l| Lambda::parse(l)).collect::<Result<_, _>>()?
    };
    let half = parse_rat(&args.window)?;
    let window = Window::new(vec![-half; args.dim], vec![half; args.dim])?;
    let cfg = FalsifyConfig {
        family: RandomFamily::parse(&args.family)?,
        density: parse_density(&args.density, args.dim)?,
        p: PParam::parse(&args.p)?,
        lambdas,
        trials: args.trials,
        seed: args.seed,
        workers,
        dim: args.dim,
        pitch: parse_rat(&args.pitch)?,
        window,
        general: args.general,
        measure_refine: args.refine,
    };
    let report = falsify(&cfg)?;
    println!(
        "search: {} trials, {} certified violations, min hold margin {:.6}",
        cfg.trials, report.violations, report.min_hold_margin
    );
    let csv = report_csv(&report.records);
    if let Some(path) = &args.csv {
        std::fs::write(path, &csv)?;
    } else {
        print!("{csv}");
    }
    // Witness files: the set pair plus everything needed to re-run it.
    let witness_dir = args.witness_dir.clone().or_else(|| {
        args.csv.as_ref().map(|p| p.parent().unwrap_or(std::path::Path::new(".")).to_path_buf())
    });
    if let Some(dir) = witness_dir {
        std::fs::create_dir_all(&dir)?;
        for rec in report.records.iter().filter(|r| r.witness.is_some()) {
            let (wa, wb) = rec.witness.as_ref().unwrap();
            let doc = serde_json::json!({
                "trial": rec.trial,
                "lambda": format_rat(rec.lambda.rat()),
                "p": rec.p.describe(),
                "pitch": format_rat(cfg.pitch),
                "dim": cfg.dim,
                "density": args.density,
                "general": cfg.general,
                "measure_refine": cfg.measure_refine,
                "a": wa,
                "b": wb,
            });
            let path = dir.join(format!("witness-{:05}.json", rec.trial));
            std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(ExitCode::from(0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(args) => run_check(args, false),
        Command::Repro(args) => run_repro_cmd(args),
        Command::Search(args) => run_search(args),
        Command::Iso(args) => run_check(args, true),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("bmlab: {err}");
            ExitCode::from(1)
        }
    }
}
