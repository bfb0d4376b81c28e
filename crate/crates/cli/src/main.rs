use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use robust_doe::design::{write_schedule_csv, Plan, PlanError, ResponseError, ResponseTable};
use robust_doe::oa::{self, OaError};
use robust_doe::optimize::{
    analyze_confirmation, optimal_levels, predict, ConfirmationRuns, OptimizeError, DEFAULT_DELTA_DB,
};
use robust_doe::report::{
    analyze, confirmation_markdown, selection_markdown, AnalysisError, AnalysisOptions, InputDigest,
    Provenance, DEFAULT_ALPHA,
};
use robust_doe::stats::{main_effects, SnrCriterion, StatsError};

/// Robust parameter design with crossed orthogonal arrays.
#[derive(Debug, Parser)]
#[command(name = "doe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a catalogue array as CSV.
    Array {
        /// Array name, e.g. L9.
        name: String,
    },
    /// Validate a plan and write its run schedule.
    Plan {
        plan: PathBuf,
        #[arg(long, default_value = "doe-out")]
        out: PathBuf,
    },
    /// Full analysis: summaries, main effects, ANOVA, Tukey and optimal levels.
    Analyze {
        plan: PathBuf,
        responses: PathBuf,
        /// Optional confirmation runs to include in the report.
        #[arg(long)]
        confirmation: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// smaller-the-better, larger-the-better or nominal-the-best:<target>
        #[arg(long, default_value = "smaller-the-better")]
        criterion: SnrCriterion,
        #[arg(long, default_value_t = DEFAULT_DELTA_DB)]
        delta_db: f64,
        #[arg(long, default_value = "doe-out")]
        out: PathBuf,
    },
    /// Recommend level combinations with predicted mean and S/N.
    Optimize {
        plan: PathBuf,
        responses: PathBuf,
        #[arg(long, default_value = "smaller-the-better")]
        criterion: SnrCriterion,
        #[arg(long, default_value_t = DEFAULT_DELTA_DB)]
        delta_db: f64,
        #[arg(long, default_value = "doe-out")]
        out: PathBuf,
    },
    /// Summarize confirmation runs against the main array and predictions.
    Confirm {
        plan: PathBuf,
        responses: PathBuf,
        confirmation: PathBuf,
        #[arg(long, default_value = "smaller-the-better")]
        criterion: SnrCriterion,
        #[arg(long, default_value = "doe-out")]
        out: PathBuf,
    },
}

struct Input {
    digest: InputDigest,
    bytes: Vec<u8>,
}

fn read_input(role: &str, path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Input {
        digest: InputDigest {
            role: role.to_string(),
            file,
            sha256: hex::encode(Sha256::digest(&bytes)),
        },
        bytes,
    })
}

fn load_plan(path: &Path) -> Result<(Plan, Input)> {
    let input = read_input("plan", path)?;
    let text = String::from_utf8(input.bytes.clone()).map_err(|e| PlanError::Parse(e.to_string()))?;
    Ok((Plan::from_json(&text)?, input))
}

fn load_responses(plan: &Plan, path: &Path) -> Result<(ResponseTable, Input)> {
    let input = read_input("responses", path)?;
    Ok((ResponseTable::read_csv(plan, input.bytes.as_slice())?, input))
}

fn load_confirmation(plan: &Plan, path: &Path) -> Result<(ConfirmationRuns, Input)> {
    let input = read_input("confirmation", path)?;
    Ok((ConfirmationRuns::read_csv(plan, input.bytes.as_slice())?, input))
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut stdout = stdout.lock();
    match cli.command {
        Command::Array { name } => {
            oa::lookup(&name)?.write_csv(&mut stdout)?;
        }
        Command::Plan { plan, out } => {
            let (plan, _) = load_plan(&plan)?;
            create_out(&out)?;
            write_file(&out, "schedule.csv", &csv_bytes(|b| write_schedule_csv(&plan, b))?)?;
            writeln!(
                stdout,
                "{}: {} runs x {} noise levels = {} measurements",
                plan.inner().name(),
                plan.num_runs(),
                plan.num_noise_levels(),
                plan.num_measurements()
            )?;
        }
        Command::Analyze {
            plan,
            responses,
            confirmation,
            alpha,
            criterion,
            delta_db,
            out,
        } => {
            let (plan, plan_in) = load_plan(&plan)?;
            let (table, resp_in) = load_responses(&plan, &responses)?;
            let mut inputs = vec![plan_in.digest, resp_in.digest];
            let runs = match confirmation {
                Some(path) => {
                    let (runs, conf_in) = load_confirmation(&plan, &path)?;
                    inputs.push(conf_in.digest);
                    Some(runs)
                }
                None => None,
            };
            let options = AnalysisOptions {
                alpha,
                criterion,
                delta_db,
            };
            let bundle = analyze(&plan, &table, runs.as_ref(), options, Provenance::new(inputs, options))?;
            create_out(&out)?;
            write_file(&out, "report.json", bundle.to_json().as_bytes())?;
            write_file(&out, "report.md", bundle.to_markdown().as_bytes())?;
            write_file(&out, "main_effects.csv", &csv_bytes(|b| bundle.main_effects.write_csv(b))?)?;
            for a in &bundle.anova {
                let name = format!("anova_{}.csv", a.factor);
                write_file(&out, &name, &csv_bytes(|b| a.table.write_csv(b))?)?;
            }
            writeln!(stdout, "wrote report to {}", out.display())?;
        }
        Command::Optimize {
            plan,
            responses,
            criterion,
            delta_db,
            out,
        } => {
            let (plan, _) = load_plan(&plan)?;
            let (table, _) = load_responses(&plan, &responses)?;
            let effects = main_effects(&plan, &table, criterion)?;
            let selection = optimal_levels(&effects, delta_db);
            let predictions = selection
                .recommended
                .iter()
                .map(|c| predict(&effects, c))
                .collect::<Result<Vec<_>, _>>()?;
            create_out(&out)?;
            let json = serde_json::json!({ "optimal": selection, "predictions": predictions });
            write_file(&out, "optimal.json", format!("{json:#}\n").as_bytes())?;
            write_file(&out, "optimal.md", selection_markdown(&selection, &predictions).as_bytes())?;
            for p in &predictions {
                writeln!(
                    stdout,
                    "{}\tmean {:.2}\tS/N {:.2} dB",
                    p.combination, p.predicted_mean, p.predicted_snr
                )?;
            }
        }
        Command::Confirm {
            plan,
            responses,
            confirmation,
            criterion,
            out,
        } => {
            let (plan, _) = load_plan(&plan)?;
            let (table, _) = load_responses(&plan, &responses)?;
            let (runs, _) = load_confirmation(&plan, &confirmation)?;
            let effects = main_effects(&plan, &table, criterion)?;
            let report = analyze_confirmation(&plan, &table, &effects, &runs)?;
            create_out(&out)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            write_file(&out, "confirmation.json", json.as_bytes())?;
            let md = confirmation_markdown(&report, &plan);
            write_file(&out, "confirmation.md", md.as_bytes())?;
            stdout.write_all(md.as_bytes())?;
        }
    }
    Ok(())
}

/// 2 plan/schema, 3 data, 4 degenerate statistics, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    fn optimize_code(e: &OptimizeError) -> u8 {
        match e {
            OptimizeError::Stats(_) => 4,
            _ => 3,
        }
    }
    if err.is::<PlanError>() || err.is::<OaError>() {
        2
    } else if err.is::<ResponseError>() {
        3
    } else if let Some(e) = err.downcast_ref::<OptimizeError>() {
        optimize_code(e)
    } else if err.is::<StatsError>() {
        4
    } else if let Some(e) = err.downcast_ref::<AnalysisError>() {
        match e {
            AnalysisError::Stats(_) => 4,
            AnalysisError::Confirmation(e) => optimize_code(e),
        }
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
