//! Command-line surface.
//!
//! Exit codes are part of the contract: 0 on success, 2 when inputs fail
//! validation (unreadable or malformed parameter files, bad run shapes),
//! 3 when a numerical procedure cannot deliver (quadrature that misses its
//! tolerance, infeasible or non-converging calibration).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cheshire::analytic::{
    analytic_report_approx, analytic_report_exact, analytic_report_quadrature,
};
use cheshire::calibrate::{fit, CalibrationError, CalibrationTarget, Policy};
use cheshire::model::ModelParams;
use cheshire::report::{estimates_csv, to_json_string, ReportDocument};
use cheshire::simulate::{run, weak_signal_advice, SimConfig};

#[derive(Parser)]
#[command(
    name = "cheshire",
    version,
    about = "Analytics, Monte Carlo, and calibration for a post-selected two-path pointer model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the conditioned pointer statistics analytically.
    Analytic {
        /// Parameter source: "paper", "desk", or a JSON file path.
        #[arg(long, default_value = "paper")]
        params: String,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        /// Absolute tolerance for the quadrature route.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream Monte Carlo events and report the estimator battery.
    Simulate {
        /// Parameter source: "paper", "desk", or a JSON file path.
        #[arg(long, default_value = "desk")]
        params: String,
        #[arg(long, default_value_t = 1_000_000)]
        events: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent random-stream chunks; defaults to 64 or the event
        /// count, whichever is smaller. Part of the stream identity.
        #[arg(long)]
        chunks: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve window centers so the conditioned means hit the targets.
    Fit {
        /// Base parameter source: "paper", "desk", or a JSON file path.
        #[arg(long, default_value = "paper")]
        params: String,
        /// Desired kept-ensemble mean of the cat pointer.
        #[arg(long = "target-x", default_value_t = 1.0)]
        target_x: f64,
        /// Desired kept-ensemble mean of the tail pointer.
        #[arg(long = "target-y", default_value_t = 1.0)]
        target_y: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every analytic route on the built-in wide-pointer set and print
    /// the computed values next to the claimed ones.
    #[command(name = "reproduce-paper")]
    ReproducePaper {
        /// Also write the full JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    #[value(name = "paper-approx")]
    PaperApprox,
    Exact,
    Quadrature,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct CliError {
    message: String,
    code: u8,
}

fn input_error(message: impl ToString) -> CliError {
    CliError {
        message: message.to_string(),
        code: 2,
    }
}

fn numeric_error(message: impl ToString) -> CliError {
    CliError {
        message: message.to_string(),
        code: 3,
    }
}

fn load_params(source: &str) -> Result<ModelParams, CliError> {
    match source {
        "paper" => Ok(ModelParams::paper()),
        "desk" => Ok(ModelParams::desk()),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| input_error(format!("cannot read {path}: {e}")))?;
            let params: ModelParams = serde_json::from_str(&text)
                .map_err(|e| input_error(format!("cannot parse {path}: {e}")))?;
            params
                .validated()
                .map_err(|e| input_error(format!("{path}: {e}")))
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| input_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_analytic(
    params: ModelParams,
    method: MethodArg,
    tol: f64,
) -> Result<ReportDocument, CliError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(input_error("tolerance must be positive and finite"));
    }
    let mut doc = ReportDocument::new(params);
    if matches!(method, MethodArg::PaperApprox | MethodArg::All) {
        doc.analytic
            .push(analytic_report_approx(&params).map_err(numeric_error)?);
    }
    if matches!(method, MethodArg::Exact | MethodArg::All) {
        doc.analytic
            .push(analytic_report_exact(&params).map_err(numeric_error)?);
    }
    if matches!(method, MethodArg::Quadrature | MethodArg::All) {
        doc.analytic
            .push(analytic_report_quadrature(&params, tol).map_err(numeric_error)?);
    }
    Ok(doc)
}

fn cmd_analytic(
    params: String,
    method: MethodArg,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = load_params(&params)?;
    let doc = run_analytic(params, method, tol)?;
    emit(&to_json_string(&doc), out.as_ref())
}

fn cmd_simulate(
    params: String,
    events: u64,
    seed: u64,
    chunks: Option<u64>,
    format: Format,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = load_params(&params)?;
    let config = SimConfig {
        n_events: events,
        seed,
        n_chunks: chunks.unwrap_or_else(|| 64.min(events.max(1))),
    };
    config.validate().map_err(input_error)?;
    if let Some(warning) = weak_signal_advice(&params, &config) {
        eprintln!("warning: {warning}");
    }
    let estimates = run(&params, &config).map_err(input_error)?;
    match format {
        Format::Csv => emit(&estimates_csv(&estimates), out.as_ref()),
        Format::Json => {
            let mut doc = ReportDocument::new(params);
            doc.sim_config = Some(config);
            doc.simulation = Some(estimates);
            emit(&to_json_string(&doc), out.as_ref())
        }
    }
}

fn cmd_fit(
    params: String,
    target_x: f64,
    target_y: f64,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let base = load_params(&params)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(input_error("tolerance must be positive and finite"));
    }
    let target = CalibrationTarget {
        target_mean_x_b: target_x,
        target_mean_y_b: target_y,
        base,
        policy: Policy::FixEpsSolveCenters,
        target_prob_excess: None,
    };
    let result = fit(target, tol).map_err(|e| match e {
        CalibrationError::Params(_)
        | CalibrationError::NonFiniteTarget
        | CalibrationError::CouplingRequired { .. }
        | CalibrationError::BudgetRequired => input_error(e),
        _ => numeric_error(e),
    })?;
    let mut doc = ReportDocument::new(base);
    doc.calibration = Some(result);
    emit(&to_json_string(&doc), out.as_ref())
}

fn cmd_reproduce_paper(out: Option<PathBuf>) -> Result<(), CliError> {
    let params = ModelParams::paper();
    let doc = run_analytic(params, MethodArg::All, 1e-10)?;
    let [approx, exact, quad] = doc.analytic.as_slice() else {
        unreachable!("all-methods run produces three reports");
    };

    let mut table = String::new();
    table.push_str(&format!(
        "{:<20}{:>10}{:>16}{:>16}{:>16}\n",
        "quantity", "claim", "paper-approx", "exact", "quadrature"
    ));
    let mut row = |name: &str, claim: &str, pick: fn(&cheshire::AnalyticReport) -> f64| {
        table.push_str(&format!(
            "{:<20}{:>10}{:>16.6}{:>16.6}{:>16.6}\n",
            name,
            claim,
            pick(approx),
            pick(exact),
            pick(quad)
        ));
    };
    row("prob_b", "0.251", |r| r.prob_b);
    row("mean_x_b", "1", |r| r.mean_x_b);
    row("mean_y_b", "1", |r| r.mean_y_b);
    row("crossmoment_b", "0", |r| r.crossmoment_b);
    row("signed_crossmoment", "0", |r| r.signed_crossmoment);
    print!("{table}");

    if out.is_some() {
        emit(&to_json_string(&doc), out.as_ref())?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analytic {
            params,
            method,
            tol,
            out,
        } => cmd_analytic(params, method, tol, out),
        Command::Simulate {
            params,
            events,
            seed,
            chunks,
            format,
            out,
        } => cmd_simulate(params, events, seed, chunks, format, out),
        Command::Fit {
            params,
            target_x,
            target_y,
            tol,
            out,
        } => cmd_fit(params, target_x, target_y, tol, out),
        Command::ReproducePaper { out } => cmd_reproduce_paper(out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
