//! `besselkit`: load a measure spec, run a pipeline, write a report.
//!
//! Exit codes: 0 BESSEL (or every check passed), 1 NOT_BESSEL (or a check
//! failed), 2 INCONCLUSIVE, 3 usage or input errors, 4 numerical failures,
//! 5 output errors.

mod commands;
mod render;
mod verify;

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use besselkit::criteria::CriteriaConfig;
use besselkit::SpectralMeasure;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Full verdict with every criterion and a Gram profile.
    Analyze,
    /// Operator norms of growing Gram sections.
    GramProfile,
    /// Every criterion report and the verdict, without the Gram profile.
    Criteria,
    /// Moment and tail tables of the heat measure (no input needed).
    Heat,
    /// Consistency identities on the input measure.
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::GramProfile => "gram-profile",
            Command::Criteria => "criteria",
            Command::Heat => "heat",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "besselkit", version, about = "Bessel-sequence diagnostics for operator orbits")]
pub struct Args {
    /// Measure spec (JSON list of components); `-` reads stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "analyze")]
    pub command: Command,
    /// Relative tolerance of the Lanczos norm estimates.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Largest Gram section.
    #[arg(long, default_value_t = 512)]
    pub max_size: usize,
    /// Finest tail width of the ε grid.
    #[arg(long, default_value_t = 2f64.powi(-40))]
    pub eps_min: f64,
    /// Finest radius of the ball and λ grids.
    #[arg(long, default_value_t = 2f64.powi(-20))]
    pub radius_min: f64,
    /// Time step of the heat measure.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Largest k in the heat moment table.
    #[arg(long, default_value_t = 1_000_000)]
    pub max_k: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl Args {
    pub fn criteria_config(&self) -> CriteriaConfig {
        CriteriaConfig {
            eps_min: self.eps_min,
            radius_min: self.radius_min,
            gram_max_size: self.max_size,
            norm_tol: self.tol,
            ..CriteriaConfig::default()
        }
    }

    fn check(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::usage(m));
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("--tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_size == 0 {
            return bad("--max-size must be at least 1".into());
        }
        if !(self.eps_min > 0.0 && self.eps_min < 0.5) {
            return bad(format!("--eps-min must lie in (0, 1/2), got {}", self.eps_min));
        }
        if !(self.radius_min > 0.0 && self.radius_min < 0.5) {
            return bad(format!("--radius-min must lie in (0, 1/2), got {}", self.radius_min));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("--delta must be positive, got {}", self.delta));
        }
        if self.max_k == 0 {
            return bad("--max-k must be at least 1".into());
        }
        if self.command != Command::Heat && self.input.is_none() {
            return bad(format!("--command {} needs --input", self.command.as_str()));
        }
        Ok(())
    }
}

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Self {
            code: 3,
            kind: "usage",
            message,
        }
    }

    pub fn from_lib(e: besselkit::Error) -> Self {
        use besselkit::Error as E;
        let (code, kind) = match e {
            E::Spec { .. }
            | E::DensityParse { .. }
            | E::DensityEval { .. }
            | E::NegativeDensity { .. }
            | E::Document(_)
            | E::Input(_) => (3, "input"),
            _ => (4, "numerical"),
        };
        Self {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

/// What a command produced: a report and the exit code it implies.
pub struct Outcome {
    pub report: render::Report,
    pub code: u8,
}

fn load(path: &PathBuf) -> Result<SpectralMeasure, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::usage(format!("reading stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("reading {}: {e}", path.display())))?
    };
    let mu = SpectralMeasure::from_json(&text).map_err(Failure::from_lib)?;
    // a density that is negative or undefined somewhere is a bad spec, even
    // where a criterion would never look at it
    mu.total_mass().map_err(Failure::from_lib)?;
    Ok(mu)
}

fn run(args: &Args) -> Result<Outcome, Failure> {
    args.check()?;
    let mu = match &args.input {
        Some(path) if args.command != Command::Heat => Some(load(path)?),
        _ => None,
    };
    match (args.command, mu) {
        (Command::Heat, _) => commands::heat(args),
        (Command::Analyze, Some(mu)) => Ok(commands::analyze(args, &mu, true)),
        (Command::Criteria, Some(mu)) => Ok(commands::analyze(args, &mu, false)),
        (Command::GramProfile, Some(mu)) => commands::gram_profile(args, &mu),
        (Command::Verify, Some(mu)) => Ok(verify::verify(args, &mu)),
        (_, None) => unreachable!("checked above"),
    }
}

fn emit(args: &Args, text: &str) -> Result<(), Failure> {
    let result = match &args.output {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    };
    result.map_err(|e| Failure {
        code: 5,
        kind: "output",
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = run(&args).and_then(|o| {
        emit(&args, &render::render(&o.report, args.format))?;
        Ok(o.code)
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if f.code != 5 {
                // the diagnostic goes where the report would have gone
                let _ = emit(&args, &render::render_failure(&f, args.command, args.format));
            }
            eprintln!("besselkit: {} error: {}", f.kind, f.message);
            ExitCode::from(f.code)
        }
    }
}
