use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use cocircular::certificate::{Tolerances, VerdictTag};
use cocircular::scan::{evaluate, run_scan, write_csv, write_json, PatternSource, ScanSpec, ValueSource};
use cocircular::suites::{run_suite, SuiteOptions, SUITE_NAMES};
use cocircular::MassVector;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "cocircular", version, about = "Centered co-circular configuration classifier and scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a single mass vector.
    Classify(ClassifyArgs),
    /// Classify every point of a grid and write a report.
    Scan(ScanArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
struct TolArgs {
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    center_tol: Option<f64>,
    #[arg(long)]
    neg_margin: Option<f64>,
}

impl TolArgs {
    fn or(self, other: TolArgs) -> TolArgs {
        TolArgs {
            grad_tol: self.grad_tol.or(other.grad_tol),
            center_tol: self.center_tol.or(other.center_tol),
            neg_margin: self.neg_margin.or(other.neg_margin),
        }
    }

    fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(x) = self.grad_tol {
            t.grad_tol = x;
        }
        if let Some(x) = self.center_tol {
            t.center_tol = x;
        }
        if let Some(x) = self.neg_margin {
            t.neg_margin = x;
        }
        t
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    masses: Vec<f64>,
    #[command(flatten)]
    tol: TolArgs,
    /// Also print the report row as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    TwoSpecials,
    TwoGroups,
}

#[derive(Args, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
struct ScanArgs {
    /// TOML file whose keys mirror these flags; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// One explicit comma-separated mass vector per occurrence.
    #[arg(long)]
    masses: Vec<String>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    special: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', num_args = 1)]
    values: Option<Vec<f64>>,
    /// lo:hi:count
    #[arg(long)]
    grid_values: Option<String>,
    /// lo:hi:count
    #[arg(long)]
    random_values: Option<String>,
    /// Random distinct-value triples per sign case.
    #[arg(long)]
    sign_cases: Option<usize>,
    /// With --sign-cases, also draw non-symmetric equal-pair triples.
    #[arg(long)]
    two_equal: bool,
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    count: Option<usize>,
    /// Add an equal-mass control row per (n, alpha).
    #[arg(long)]
    controls: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    tol: TolArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct VerifyArgs {
    suite: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tol: TolArgs,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Classify(a) => classify(a),
        Command::Scan(a) => scan(a),
        Command::Verify(a) => verify(a),
    }
}

fn classify(a: ClassifyArgs) -> ExitCode {
    let m = match MassVector::new(a.masses) {
        Ok(m) => m,
        Err(e) => return usage(e),
    };
    let tols = a.tol.resolve();
    let row = match evaluate(&m, a.alpha, &tols) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    println!("verdict     {}", row.verdict_tag);
    println!("prediction  {}", row.prediction_tag);
    println!("best_g      {}", row.best_g.as_deref().unwrap_or("-"));
    match row.cert_value {
        Some(v) => println!("cert_value  {v:e}"),
        None => println!("cert_value  -"),
    }
    println!("com_norm    {:e}", row.com_norm);
    println!("row_spread  {:e}", row.row_spread);
    println!("grad_norm   {:e}", row.grad_norm);
    println!("lambda      {}", row.lambda_estimate);
    println!(
        "theta       {}",
        row.theta.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
    );
    if a.json {
        match serde_json::to_string(&row) {
            Ok(s) => println!("{s}"),
            Err(e) => return usage(e),
        }
    }
    if row.verdict_tag == VerdictTag::Unconverged.as_str() {
        ExitCode::from(EXIT_UNCONVERGED)
    } else {
        ExitCode::SUCCESS
    }
}

fn parse_range(text: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected lo:hi:count, got {text:?}"));
    }
    let lo = parts[0].parse().map_err(|e| format!("{text:?}: {e}"))?;
    let hi = parts[1].parse().map_err(|e| format!("{text:?}: {e}"))?;
    let count = parts[2].parse().map_err(|e| format!("{text:?}: {e}"))?;
    Ok((lo, hi, count))
}

/// Fills unset flags from the config file.
fn merge(flags: ScanArgs, file: ScanArgs) -> ScanArgs {
    fn pick<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
        if a.is_empty() {
            b
        } else {
            a
        }
    }
    ScanArgs {
        config: flags.config,
        n: pick(flags.n, file.n),
        alpha: pick(flags.alpha, file.alpha),
        masses: pick(flags.masses, file.masses),
        special: flags.special.or(file.special),
        values: flags.values.or(file.values),
        grid_values: flags.grid_values.or(file.grid_values),
        random_values: flags.random_values.or(file.random_values),
        sign_cases: flags.sign_cases.or(file.sign_cases),
        two_equal: flags.two_equal || file.two_equal,
        family: flags.family.or(file.family),
        count: flags.count.or(file.count),
        controls: flags.controls || file.controls,
        seed: flags.seed.or(file.seed),
        tol: flags.tol.or(file.tol),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format),
    }
}

fn scan_spec(a: &ScanArgs, explicit: Vec<Vec<f64>>) -> Result<ScanSpec, String> {
    let value_flags = [
        a.values.is_some(),
        a.grid_values.is_some(),
        a.random_values.is_some(),
        a.sign_cases.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if value_flags > 1 {
        return Err("use at most one of --values, --grid-values, --random-values, --sign-cases".into());
    }
    let pattern_flags = a.special.is_some() || value_flags > 0;
    let source = if !explicit.is_empty() {
        if pattern_flags || a.family.is_some() {
            return Err("--masses cannot be combined with pattern flags".into());
        }
        PatternSource::Explicit(explicit)
    } else if let Some(family) = a.family {
        if pattern_flags {
            return Err("--family cannot be combined with three-special flags".into());
        }
        let count = a.count.unwrap_or(20);
        match family {
            Family::TwoSpecials => PatternSource::TwoSpecials { count },
            Family::TwoGroups => PatternSource::TwoGroups { count },
        }
    } else {
        let positions = match &a.special {
            None => None,
            Some(v) if v.len() == 2 => Some((v[0], v[1])),
            Some(_) => return Err("--special takes two positions l,s".into()),
        };
        let values = if let Some(v) = &a.values {
            let triple: [f64; 3] = v
                .as_slice()
                .try_into()
                .map_err(|_| "--values takes three values".to_string())?;
            ValueSource::Fixed(triple)
        } else if let Some(g) = &a.grid_values {
            let (lo, hi, count) = parse_range(g)?;
            ValueSource::Grid { lo, hi, count }
        } else if let Some(g) = &a.random_values {
            let (lo, hi, count) = parse_range(g)?;
            ValueSource::Random { lo, hi, count }
        } else if let Some(per_case) = a.sign_cases {
            ValueSource::SignCases {
                per_case,
                two_equal: a.two_equal,
            }
        } else {
            return Err("scan needs --masses, --family, or a value source for three specials".into());
        };
        PatternSource::ThreeSpecial { positions, values }
    };
    let alpha_list = if a.alpha.is_empty() { vec![1.0] } else { a.alpha.clone() };
    let spec = ScanSpec {
        n_list: a.n.clone(),
        alpha_list,
        source,
        controls: a.controls,
        seed: a.seed.unwrap_or(0),
        tolerances: a.tol.resolve(),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn scan(a: ScanArgs) -> ExitCode {
    let a = match &a.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return usage(format!("{}: {e}", path.display())),
            };
            match toml::from_str::<ScanArgs>(&text) {
                Ok(file) => merge(a, file),
                Err(e) => return usage(format!("{}: {e}", path.display())),
            }
        }
        None => a,
    };
    let explicit = match a.masses.iter().map(|v| parse_list(v)).collect::<Result<Vec<_>, _>>() {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let spec = match scan_spec(&a, explicit) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let report = match run_scan(&spec) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let out: Box<dyn Write> = match &a.out {
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(BufWriter::new(f)),
            Err(e) => return usage(format!("cannot write {}: {e}", path.display())),
        },
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let written = match a.format.unwrap_or_default() {
        Format::Csv => write_csv(&report, out),
        Format::Json => write_json(&report, out),
    };
    if let Err(e) = written {
        return usage(format!("writing report: {e}"));
    }
    let s = &report.summary;
    eprintln!(
        "{} rows; {}",
        s.rows,
        s.verdicts.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    );
    ExitCode::SUCCESS
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("--masses {text:?}: {e}")))
        .collect()
}

fn verify(a: VerifyArgs) -> ExitCode {
    if !SUITE_NAMES.contains(&a.suite.as_str()) {
        return usage(format!("unknown suite {:?}; expected one of {}", a.suite, SUITE_NAMES.join(", ")));
    }
    let opts = SuiteOptions {
        seed: a.seed,
        trials: a.trials,
        n: a.n,
        n_max: a.n_max,
        alphas: a.alpha,
        tolerances: a.tol.resolve(),
    };
    match run_suite(&a.suite, &opts) {
        Ok(r) => {
            println!("{r}");
            if r.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => usage(e),
    }
}
