use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prodgeo::catalog::{catalog_get, catalog_list, CatalogScenario};
use prodgeo::report::{Report, Suites};
use prodgeo::scenario::{LoadOptions, Scenario};
use prodgeo::theorems::{Theorem, TheoremConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "prodgeo",
    version,
    about = "Verify submanifold geometry in locally product Riemannian manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a scenario as invariant, anti-invariant, semi-invariant or generic.
    Classify {
        #[command(flatten)]
        load: LoadArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run the lemma and theorem suites; exit 0 iff every consistency check passes.
    Check {
        #[arg(long)]
        lemmas: bool,
        #[arg(long)]
        theorems: bool,
        #[arg(long)]
        all: bool,
        /// Identity tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// List, run or export built-in scenarios.
    Catalog {
        #[command(subcommand)]
        action: Option<CatalogAction>,
    },
    /// Full report for a scenario.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[command(flatten)]
        load: LoadArgs,
    },
}

#[derive(Args)]
struct LoadArgs {
    /// Continue when ambient validation fails.
    #[arg(long)]
    force: bool,
    /// Seed for `[samples] random`.
    #[arg(long)]
    seed: Option<u64>,
    file: PathBuf,
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Run {
        label: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    Export {
        label: String,
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load(args: &LoadArgs) -> Result<Scenario, Failure> {
    let opts = LoadOptions {
        force: args.force,
        seed: args.seed,
    };
    let scenario =
        Scenario::load(&args.file, opts).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    Ok(scenario)
}

fn config(scenario: &Scenario, tol: Option<f64>) -> Result<TheoremConfig, Failure> {
    let t = scenario.tolerances;
    let identity_tol = tol.unwrap_or(t.identity_tol);
    if identity_tol.is_nan() || identity_tol <= 0.0 {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("--tol must be positive, got {identity_tol}"),
        ));
    }
    Ok(TheoremConfig {
        identity_tol,
        classify_tol: t.classify_tol,
        strict: false,
    })
}

fn build(scenario: &Scenario, suites: Suites, cfg: &TheoremConfig) -> Result<Report, Failure> {
    Report::build(scenario, suites, cfg).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => print!("{}", report.to_json()),
    }
}

fn verdict(report: &Report) -> Outcome {
    if report.verdicts.pass {
        return Ok(());
    }
    let v = &report.verdicts;
    let mut reasons = Vec::new();
    if v.structural.as_ref().is_some_and(|s| !s.pass) {
        reasons.push("structural identities".to_string());
    }
    if v.lemmas.as_ref().is_some_and(|l| !l.pass) {
        reasons.push("lemma residuals".to_string());
    }
    for (name, t) in &v.theorems {
        if !t.biconditional_consistent {
            reasons.push(format!("{name} biconditional"));
        }
        if !t.proof_pass {
            reasons.push(format!("{name} proof residual"));
        }
    }
    Err(Failure::new(
        EXIT_VERIFICATION,
        format!("verification failed: {}", reasons.join(", ")),
    ))
}

fn run_catalog(entry: &CatalogScenario, format: Format) -> Outcome {
    let scenario = entry
        .build()
        .map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let cfg = config(&scenario, None)?;
    let report = build(&scenario, Suites::ALL, &cfg)?;
    emit(&report, format);
    let e = &entry.expected;
    let v = &report.verdicts;
    let mut mismatches = Vec::new();
    if v.classification.class != e.classification.to_string() {
        mismatches.push(format!(
            "classification {} (expected {})",
            v.classification.class, e.classification
        ));
    }
    if v.minimal_everywhere != e.minimal {
        mismatches.push(format!(
            "minimal {} (expected {})",
            v.minimal_everywhere, e.minimal
        ));
    }
    if v.pseudo_umbilical_everywhere != e.pseudo_umbilical {
        mismatches.push(format!(
            "pseudo-umbilical {} (expected {})",
            v.pseudo_umbilical_everywhere, e.pseudo_umbilical
        ));
    }
    for t in Theorem::ALL {
        let got = v.theorems[t.as_str()].identity_everywhere;
        if got != e.identity(t) {
            mismatches.push(format!("{t} identity {got} (expected {})", e.identity(t)));
        }
    }
    if matches!(format, Format::Text) {
        println!(
            "expectations: {}",
            if mismatches.is_empty() {
                "all met".to_string()
            } else {
                mismatches.join("; ")
            }
        );
    }
    verdict(&report)?;
    if !mismatches.is_empty() {
        return Err(Failure::new(
            EXIT_VERIFICATION,
            format!("catalog expectations not met: {}", mismatches.join("; ")),
        ));
    }
    Ok(())
}

fn export(label: &str, path: &Path) -> Outcome {
    let entry = catalog_get(label).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    std::fs::write(path, entry.spec.to_toml()).map_err(|e| {
        Failure::new(
            EXIT_INVALID,
            format!("cannot write {}: {e}", path.display()),
        )
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Classify { load: args, format } => {
            let scenario = load(&args)?;
            let cfg = config(&scenario, None)?;
            let suites = Suites {
                lemmas: false,
                theorems: false,
            };
            let report = build(&scenario, suites, &cfg)?;
            match format {
                Format::Text => print!("{}", report.classification_text()),
                Format::Json => print!("{}", report.to_json()),
            }
            Ok(())
        }
        Command::Check {
            lemmas,
            theorems,
            all,
            tol,
            format,
            load: args,
        } => {
            let any = lemmas || theorems;
            let suites = Suites {
                lemmas: all || lemmas || !any,
                theorems: all || theorems || !any,
            };
            let scenario = load(&args)?;
            let cfg = config(&scenario, tol)?;
            let report = build(&scenario, suites, &cfg)?;
            emit(&report, format);
            verdict(&report)
        }
        Command::Catalog { action } => match action.unwrap_or(CatalogAction::List) {
            CatalogAction::List => {
                for label in catalog_list() {
                    println!("{label}");
                }
                Ok(())
            }
            CatalogAction::Run { label, format } => {
                let entry =
                    catalog_get(&label).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
                run_catalog(&entry, format)
            }
            CatalogAction::Export { label, path } => export(&label, &path),
        },
        Command::Report { format, load: args } => {
            let scenario = load(&args)?;
            let cfg = config(&scenario, None)?;
            let report = build(&scenario, Suites::ALL, &cfg)?;
            emit(&report, format);
            Ok(())
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("PRODGEO_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
