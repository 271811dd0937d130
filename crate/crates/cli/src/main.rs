use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use varns_core::exponents::ExponentSpec;
use varns_core::harness::{
    emit_report, read_field, run_campaign, CampaignConfig, CorpusField, InequalityReport, Report, ReportBody,
    ReportFormat, SolveConfig, Target,
};
use varns_core::mild_solver::{picard_solve, SolveStatus};
use varns_core::varlp::{luxemburg_norm, mixed_norm};
use varns_core::Error;

/// Variable-exponent Lebesgue norms, inequality campaigns and a mild
/// Navier–Stokes solver.
///
/// Exit status: 0 pass, 1 bound violated or solver failure, 2 usage or I/O error.
#[derive(Parser)]
#[command(name = "varns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Luxemburg (or mixed) norm of a field file.
    Norm {
        #[arg(long)]
        field: PathBuf,
        /// JSON exponent descriptor, e.g. {"family":"radial-log","params":[2,1]}.
        #[arg(long)]
        exponent: PathBuf,
        /// Constant index of the mixed norm.
        #[arg(long)]
        mixed: Option<f64>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the campaigns of a JSON config and write a report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override a config key: key=value, value parsed as JSON.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the Picard solver of a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run one campaign with default settings.
    Campaign {
        #[arg(long)]
        target: String,
        #[arg(long)]
        corpus_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long)]
        refinement_levels: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// Failures that map to exit status 1 rather than 2.
#[derive(Debug)]
struct Violation(String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn apply_overrides(v: &mut Value, overrides: &[String]) -> Result<()> {
    let obj = v.as_object_mut().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    for o in overrides {
        let (k, val) = o.split_once('=').ok_or_else(|| anyhow!("override {o:?} is not key=value"))?;
        let parsed = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
        obj.insert(k.to_string(), parsed);
    }
    Ok(())
}

fn print_summary(r: &InequalityReport) {
    println!(
        "{:16} max {:.6e} bound {:.3e} drift {:.2}% {}",
        r.target.name(),
        r.observed_max_ratio,
        r.bound,
        100.0 * r.max_drift,
        if r.pass { "PASS" } else { "FAIL" }
    );
}

fn write_reports(report: &Report, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    if let Some(p) = out {
        emit_report(report, p, ReportFormat::Json)?;
    }
    if let Some(p) = csv {
        emit_report(report, p, ReportFormat::Csv)?;
    }
    Ok(())
}

fn run_campaigns(configs: Vec<CampaignConfig>, out: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    let mut reports = Vec::new();
    for c in &configs {
        let r = run_campaign(c)?;
        print_summary(&r);
        reports.push(r);
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let body = if reports.len() == 1 {
        ReportBody::Campaign(reports.pop().expect("one report"))
    } else {
        ReportBody::Campaigns { reports }
    };
    write_reports(&Report::new(body), out, csv)?;
    if !all_pass {
        return Err(Violation("observed ratio exceeds the configured bound".into()).into());
    }
    Ok(())
}

fn norm(field: &Path, exponent: &Path, mixed: Option<f64>, tol: f64) -> Result<()> {
    let f = match read_field(field)? {
        CorpusField::Scalar(f) => f,
        CorpusField::Vector(v) => v.magnitude(),
    };
    let spec: ExponentSpec = serde_json::from_value(read_json(exponent)?).context("exponent descriptor")?;
    let p = spec.sample(&f.grid)?;
    let v = match mixed {
        Some(fp) => mixed_norm(&f, &p, fp, tol)?,
        None => luxemburg_norm(&f, &p, tol)?,
    };
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}

fn verify(config: &Path, out: &Path, csv: Option<&Path>, overrides: &[String]) -> Result<()> {
    let v = read_json(config)?;
    let items: Vec<Value> = match v {
        Value::Array(a) => a,
        Value::Object(ref o) if o.contains_key("campaigns") => o["campaigns"]
            .as_array()
            .cloned()
            .ok_or_else(|| anyhow!("\"campaigns\" must be a list"))?,
        other => vec![other],
    };
    let configs = items
        .into_iter()
        .map(|mut item| {
            apply_overrides(&mut item, overrides)?;
            Ok(CampaignConfig::from_json(&item)?)
        })
        .collect::<Result<Vec<_>>>()?;
    run_campaigns(configs, Some(out), csv)
}

fn solve(config: &Path, out: &Path, csv: Option<&Path>, overrides: &[String]) -> Result<()> {
    let mut v = read_json(config)?;
    apply_overrides(&mut v, overrides)?;
    let cfg = SolveConfig::from_json(&v)?.build()?;
    let result = match picard_solve(&cfg) {
        Ok(r) => r,
        Err(e @ (Error::SmallnessViolated { .. } | Error::FixedPointNonConvergence { .. } | Error::NonFinite { .. })) => {
            return Err(Violation(e.to_string()).into())
        }
        Err(e) => return Err(e.into()),
    };
    let s = &result.summary;
    println!(
        "{:?}: {} iterations, delta {:.6e} (threshold {:.6e}), residual {:.3e}, contraction {:.3}",
        s.status, s.iterations, s.smallness.delta, s.smallness.threshold, s.residual, s.contraction_estimate
    );
    let converged = s.status == SolveStatus::Converged;
    write_reports(&Report::new(ReportBody::Solver(result.summary)), Some(out), csv)?;
    if !converged {
        return Err(Violation("fixed-point iteration diverged".into()).into());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn campaign(
    target: &str,
    corpus_size: Option<usize>,
    seed: Option<u64>,
    bound: Option<f64>,
    levels: Option<usize>,
    tol: Option<f64>,
    out: Option<&Path>,
    csv: Option<&Path>,
    overrides: &[String],
) -> Result<()> {
    let t = Target::parse(target).ok_or_else(|| {
        let names: Vec<_> = Target::ALL.iter().map(|t| t.name()).collect();
        anyhow!("unknown target {target:?}; expected one of {}", names.join(", "))
    })?;
    let mut v = Map::new();
    v.insert("target".into(), json!(t.name()));
    let flags = [
        ("corpus_size", corpus_size.map(|x| json!(x))),
        ("seed", seed.map(|x| json!(x))),
        ("bound", bound.map(|x| json!(x))),
        ("refinement_levels", levels.map(|x| json!(x))),
        ("tol", tol.map(|x| json!(x))),
    ];
    for (k, val) in flags {
        if let Some(val) = val {
            v.insert(k.into(), val);
        }
    }
    let mut v = Value::Object(v);
    apply_overrides(&mut v, overrides)?;
    let cfg = CampaignConfig::from_json(&v)?;
    run_campaigns(vec![cfg], out, csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Norm {
            field,
            exponent,
            mixed,
            tol,
        } => norm(field, exponent, *mixed, *tol),
        Command::Verify {
            config,
            out,
            csv,
            overrides,
        } => verify(config, out, csv.as_deref(), overrides),
        Command::Solve {
            config,
            out,
            csv,
            overrides,
        } => solve(config, out, csv.as_deref(), overrides),
        Command::Campaign {
            target,
            corpus_size,
            seed,
            bound,
            refinement_levels,
            tol,
            out,
            csv,
            overrides,
        } => campaign(
            target,
            *corpus_size,
            *seed,
            *bound,
            *refinement_levels,
            *tol,
            out.as_deref(),
            csv.as_deref(),
            overrides,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Violation>().is_some() => {
            eprintln!("varns: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("varns: {e:#}");
            ExitCode::from(2)
        }
    }
}

