use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use ruijsenaars_cli::{run_suite, validate_report, Suite, SuiteConfig};
use ruijsenaars_core::macdonald::QTField;
use ruijsenaars_core::{FlavorKind, Precision};

/// Run identity suites for the elliptic, trigonometric and rational
/// Ruijsenaars operator families.
#[derive(Debug, Parser)]
#[command(name = "ruijsenaars", version)]
struct Args {
    /// hirota | commute | wronski | expansions | keyidentity | kernels | kajihara | macdonald | all
    #[arg(default_value = "all")]
    suite: String,

    /// Bracket flavor: elliptic, trig or rational. Runs all three when omitted.
    #[arg(long)]
    flavor: Option<String>,

    /// Largest number of variables; every n from 1 up to this is checked.
    #[arg(long, default_value_t = 3)]
    n: usize,

    /// Largest order l of the H operators (and partition size for exact checks).
    #[arg(long, default_value_t = 4)]
    lmax: usize,

    /// Largest order r of the D operators, also the u-order of series checks.
    #[arg(long, default_value_t = 3)]
    rmax: usize,

    /// Working precision in decimal digits.
    #[arg(long, default_value_t = 64)]
    precision: u32,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Exact parameter q as p/q.
    #[arg(long, default_value = "3/5")]
    q: String,

    /// Exact parameter t as p/q.
    #[arg(long, default_value = "2/7")]
    t: String,

    /// Write the machine-readable report to this path.
    #[arg(long)]
    json: Option<PathBuf>,

    /// Override the relative tolerance of numeric checks.
    #[arg(long)]
    tol: Option<f64>,

    /// Override the number of random samples per check.
    #[arg(long)]
    samples: Option<usize>,

    /// Suppress the plain-text table.
    #[arg(long)]
    quiet: bool,

    /// Negative control: perturb one [κ] factor of every H operator.
    #[arg(long, hide = true)]
    perturb_kappa: Option<f64>,
}

fn config(args: &Args) -> anyhow::Result<SuiteConfig> {
    let flavors = match &args.flavor {
        None => FlavorKind::ALL.to_vec(),
        Some(f) => vec![f.parse::<FlavorKind>()?],
    };
    Ok(SuiteConfig {
        flavors,
        n: args.n,
        lmax: args.lmax,
        rmax: args.rmax,
        precision: Precision::digits(args.precision),
        seed: args.seed,
        qt: QTField::parse(&args.q, &args.t)?,
        tolerance: args.tol,
        samples: args.samples,
        perturb_kappa: args.perturb_kappa,
    })
}

fn run(args: &Args) -> anyhow::Result<bool> {
    let suite: Suite = args.suite.parse()?;
    let cfg = config(args)?;
    let report = run_suite(suite, &cfg)?;
    let json = report.to_json();
    if let Err(errs) = validate_report(&json) {
        bail!("report failed schema validation: {}", errs.join("; "));
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&json)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    if !args.quiet {
        print!("{}", report.table());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
