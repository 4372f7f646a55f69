//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use structid_core::analyzer::{AnalysisConfig, AnalysisError, Method};
use structid_core::groebner::{is_prime, CoefficientField, DEFAULT_PRIME};
use structid_core::prolong::Probability;

use crate::analysis::run_parallel;
use crate::parser::parse_model;
use crate::report::{render_json, render_text};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sat,
    Membership,
}

/// Randomized global identifiability analysis of rational ODE models.
#[derive(Debug, Parser)]
#[command(name = "structid", version)]
pub struct CliOptions {
    /// Model file (`.ode`).
    pub model_path: PathBuf,
    /// Required probability of a correct answer, in (0, 1).
    #[arg(long, default_value = "0.99")]
    pub prob: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Sat)]
    pub method: MethodArg,
    /// Prime modulus for the Groebner computations.
    #[arg(long, default_value_t = DEFAULT_PRIME)]
    pub prime: u64,
    /// Compute over the rationals.
    #[arg(long)]
    pub exact: bool,
    /// Random seed; drawn from the OS when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: bool,
    /// Check local identifiability first and drop failing parameters.
    #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = clap::ArgAction::Set)]
    pub check_local: bool,
    /// Fail when the local check rejects a requested parameter.
    #[arg(long)]
    pub abort_on_nonlocal: bool,
    /// Comma-separated parameter names to analyze.
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<String>>,
    /// Worker threads for the per-parameter checks.
    #[arg(long, default_value_t = default_threads())]
    pub threads: usize,
    #[arg(long, default_value_t = 16)]
    pub retry_cap: usize,
    /// Leave timings out of the output.
    #[arg(long)]
    pub no_timings: bool,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let opts = match CliOptions::try_parse_from(args) {
        Ok(o) => o,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let probability: Probability = match opts.prob.parse() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if !opts.exact && (opts.prime <= 1 << 30 || !is_prime(opts.prime) || opts.prime >= 1 << 63) {
        let _ = writeln!(err, "error: --prime must be a prime between 2^30 and 2^63");
        return EXIT_USAGE;
    }
    if opts.threads == 0 || opts.retry_cap == 0 {
        let _ = writeln!(err, "error: --threads and --retry-cap must be positive");
        return EXIT_USAGE;
    }
    let text = match std::fs::read_to_string(&opts.model_path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", opts.model_path.display());
            return EXIT_INPUT;
        }
    };
    let model = match parse_model(&text) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", opts.model_path.display());
            return EXIT_INPUT;
        }
    };
    let config = AnalysisConfig {
        probability,
        method: match opts.method {
            MethodArg::Sat => Method::Saturation,
            MethodArg::Membership => Method::Membership,
        },
        field: if opts.exact {
            CoefficientField::ExactRational
        } else {
            CoefficientField::Prime(opts.prime)
        },
        seed: opts.seed.unwrap_or_else(rand::random),
        check_local: opts.check_local,
        params: opts.params.clone(),
        retry_cap: opts.retry_cap,
        abort_on_nonlocal: opts.abort_on_nonlocal,
        certify: false,
        injected: None,
    };
    match run_parallel(&model, &config, opts.threads) {
        Ok((report, timings)) => {
            let t = (!opts.no_timings).then_some(&timings);
            let body = if opts.json {
                let mut s = render_json(&report, t);
                s.push('\n');
                s
            } else {
                render_text(&report, t)
            };
            let _ = out.write_all(body.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                AnalysisError::UnknownParameter(_) => EXIT_USAGE,
                AnalysisError::Model(_) | AnalysisError::NotLocallyIdentifiableInput(_) => EXIT_INPUT,
                _ => EXIT_ABORTED,
            }
        }
    }
}
