//! Command-line front end.
//!
//! Exit codes: 0 success, 1 malformed input or usage error, 2 a universal
//! relation was violated (which indicates a bug, never physics).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::model_file::{self, Model};
use crate::operator::StateVector;
use crate::periodic_box::{self, Profile};
use crate::relations::{eval, joint_quantities, quantities, QuantitySet, RelationId, RelationReport};
use crate::spin::{self, fmt17};
use crate::witness::{self, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "uncertainty", version, about = "Numerical checks of error-disturbance uncertainty relations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the spin detuning angle and write the CSV and plot script.
    Sweep {
        #[arg(long, default_value_t = spin::DEFAULT_STEPS, value_parser = parse_steps)]
        steps: usize,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Gnuplot script to write alongside the CSV.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Evaluate relations on a model file.
    Check {
        #[arg(long)]
        model: PathBuf,
        /// Index into the model's `states`, or a path to a JSON state file.
        #[arg(long, default_value = "0")]
        state: String,
        /// Comma-separated relation ids, or `all`.
        #[arg(long, default_value = "all")]
        relations: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Search random models for violations of a relation.
    Search {
        #[arg(long)]
        target: RelationId,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Directory receiving one JSON file per witness and summary.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refinement rounds per witness.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[arg(long, default_value_t = witness::DEFAULT_PERTURBATION)]
        perturbation: f64,
        /// System dimension range `lo:hi` within [2, 8].
        #[arg(long, default_value = "2:4", value_parser = parse_range)]
        dim_system: (usize, usize),
        /// Apparatus dimension range `lo:hi` within [2, 8].
        #[arg(long, default_value = "2:4", value_parser = parse_range)]
        dim_apparatus: (usize, usize),
        /// Use the spin model as trial 0.
        #[arg(long)]
        inject_spin: bool,
    },
    /// Kennard-Robertson check on a periodic box.
    Box {
        /// plane:n | gaussian:w[:c] | random:seed | file:path (repeatable).
        #[arg(long, required = true)]
        profile: Vec<String>,
        #[arg(long = "L", default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1024, value_parser = parse_grid)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay data points on a sweep CSV and summarize residuals.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn parse_steps(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < 2 {
        return Err(format!("a sweep needs at least 2 steps, got {n}"));
    }
    Ok(n)
}

fn parse_grid(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if n < periodic_box::MIN_GRID || !n.is_power_of_two() {
        return Err(format!("grid must be a power of two ≥ {}, got {n}", periodic_box::MIN_GRID));
    }
    Ok(n)
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = match s.split_once(':') {
        Some((a, b)) => (a.parse().map_err(|e| format!("{e}"))?, b.parse().map_err(|e| format!("{e}"))?),
        None => {
            let d = s.parse().map_err(|e| format!("{e}"))?;
            (d, d)
        }
    };
    if lo < witness::MIN_DIM || hi > witness::MAX_DIM || lo > hi {
        return Err(format!("range {lo}:{hi} must lie within [{}, {}]", witness::MIN_DIM, witness::MAX_DIM));
    }
    Ok((lo, hi))
}

/// Diagnostic text and exit code of a failed command.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: e.to_string(),
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Sweep { steps, out: csv, plot } => run_sweep(steps, &csv, plot.as_deref(), out, err),
        Command::Check {
            model,
            state,
            relations,
            format,
        } => run_check(&model, &state, &relations, format, out, err),
        Command::Search {
            target,
            trials,
            seed,
            out: dir,
            refine,
            perturbation,
            dim_system,
            dim_apparatus,
            inject_spin,
        } => {
            let mut config = SearchConfig::new(target, trials, seed);
            config.refine_steps = refine;
            config.perturbation_scale = perturbation;
            config.dim_system = dim_system.0..=dim_system.1;
            config.dim_apparatus = dim_apparatus.0..=dim_apparatus.1;
            if inject_spin {
                config = config.with_spin_injection();
            }
            run_search(&config, dir.as_deref(), out, err)
        }
        Command::Box {
            profile,
            length,
            grid,
            out: csv,
        } => run_box(&profile, length, grid, csv.as_deref(), out, err),
        Command::Report { input, data } => run_report(&input, data.as_deref(), out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(input)
}

pub fn run_sweep(steps: usize, csv: &Path, plot: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let rows = spin::sweep(steps).map_err(input)?;
    spin::emit_csv(&rows, csv).map_err(input)?;
    if let Some(plot) = plot {
        spin::emit_plot_script(&rows, plot, csv).map_err(input)?;
    }
    let min14 = rows.iter().map(|r| r.lhs14).fold(f64::INFINITY, f64::min);
    let max15 = rows.iter().map(|r| r.lhs15).fold(f64::NEG_INFINITY, f64::max);
    write_out(
        out,
        &format!(
            "rows={} min_lhs14={} max_lhs15={} csv={}\n",
            rows.len(),
            fmt17(min14),
            fmt17(max15),
            csv.display()
        ),
    )?;
    let failures = spin::invariant_failures(&rows);
    for f in &failures {
        let _ = writeln!(err, "invariant failed: {f}");
    }
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

fn parse_relations(text: &str, model: &Model) -> Result<Vec<RelationId>, Failure> {
    let applicable: &[RelationId] = match model {
        Model::Joint(_) => &RelationId::JOINT,
        _ => &RelationId::INDIRECT,
    };
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(applicable.to_vec());
    }
    text.split(',')
        .map(|s| {
            let id: RelationId = s.trim().parse().map_err(input)?;
            if applicable.contains(&id) {
                Ok(id)
            } else {
                Err(input(format!(
                    "relation {id} does not apply to a {} model",
                    model.kind().as_str()
                )))
            }
        })
        .collect()
}

fn resolve_state(doc: &model_file::ModelDocument, selector: &str) -> Result<StateVector, Failure> {
    if let Ok(index) = selector.parse::<usize>() {
        return doc.states.get(index).cloned().ok_or_else(|| {
            input(format!(
                "field `states`: index {index} requested but the file holds {} state(s)",
                doc.states.len()
            ))
        });
    }
    model_file::load_state(Path::new(selector), doc.model.dim_system()).map_err(input)
}

pub const REPORT_HEADER: &str = "relation_id,lhs,rhs,slack,normalized_slack,satisfied";

pub fn report_csv(reports: &[RelationReport]) -> String {
    let mut text = String::from(REPORT_HEADER);
    text.push('\n');
    for r in reports {
        let normalized = r.normalized_slack.map(fmt17).unwrap_or_default();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            r.relation,
            fmt17(r.lhs),
            fmt17(r.rhs),
            fmt17(r.slack),
            normalized,
            r.satisfied
        );
    }
    text
}

pub fn run_check(
    model_path: &Path,
    state: &str,
    relations: &str,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let doc = model_file::load(model_path).map_err(|e| input(format!("{}: {e}", model_path.display())))?;
    let ids = parse_relations(relations, &doc.model)?;
    let psi = resolve_state(&doc, state)?;
    let q: QuantitySet = match &doc.model {
        Model::Joint(m) => joint_quantities(m, &psi).map_err(input)?,
        other => quantities(&other.indirect().expect("single-meter model").map_err(input)?, &psi),
    };
    let reports: Vec<RelationReport> = ids
        .iter()
        .map(|&id| eval(id, &q).map_err(input))
        .collect::<Result<_, _>>()?;
    let text = match format {
        Format::Csv => report_csv(&reports),
        Format::Json => {
            let doc = serde_json::json!({
                "model": model_path.display().to_string(),
                "state": state,
                "quantities": q,
                "reports": reports,
            });
            serde_json::to_string_pretty(&doc).expect("reports serialize") + "\n"
        }
    };
    write_out(out, &text)?;
    Ok(check_exit_code(&reports, err))
}

/// [`EXIT_VIOLATION`] if any universal relation in `reports` fails.
pub fn check_exit_code(reports: &[RelationReport], err: &mut dyn Write) -> i32 {
    let mut code = EXIT_OK;
    for r in reports.iter().filter(|r| r.relation.is_universal() && !r.satisfied) {
        let _ = writeln!(err, "universal relation {} violated: slack {}", r.relation, fmt17(r.slack));
        code = EXIT_VIOLATION;
    }
    code
}

pub fn run_search(config: &SearchConfig, dir: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let outcome = witness::search(config).map_err(input)?;
    if let Some(dir) = dir {
        witness::write_outcome(&outcome, config.seed, dir).map_err(input)?;
    }
    let mut text = format!(
        "target={} trials={} seed={} witnesses={}\n",
        config.target,
        outcome.evaluated,
        config.seed,
        outcome.witnesses.len()
    );
    text.push_str(witness::SUMMARY_HEADER.trim_end_matches(",file"));
    text.push('\n');
    let rows = outcome.witnesses.iter().enumerate().map(|(i, w)| ("witness", i, w));
    for (kind, rank, w) in rows.chain(outcome.closest.iter().map(|w| ("closest", 0, w))) {
        let _ = writeln!(
            text,
            "{kind},{rank},{},{},{},{},{},{}",
            w.trial,
            w.report.relation,
            fmt17(w.report.lhs),
            fmt17(w.report.rhs),
            fmt17(w.report.slack),
            fmt17(w.margin)
        );
    }
    write_out(out, &text)?;
    if config.target.is_universal() && !outcome.witnesses.is_empty() {
        let _ = writeln!(err, "universal relation {} violated by random models", config.target);
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

pub fn run_box(
    profiles: &[String],
    length: f64,
    grid: usize,
    csv: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let mut rows = Vec::with_capacity(profiles.len());
    for text in profiles {
        let profile: Profile = text.parse().map_err(input)?;
        let state = profile.build(length, grid).map_err(input)?;
        rows.push(periodic_box::evaluate(text, &state));
    }
    let mut buf = Vec::new();
    periodic_box::write_box_csv(&rows, &mut buf).map_err(input)?;
    match csv {
        Some(path) => {
            fs::write(path, &buf).map_err(|e| input(format!("{}: {e}", path.display())))?;
            for r in &rows {
                write_out(
                    out,
                    &format!(
                        "{}: lhs={} rhs={} min_quadratic={} satisfied={}\n",
                        r.state_id,
                        fmt17(r.report.lhs),
                        fmt17(r.report.rhs),
                        fmt17(r.min_quadratic),
                        r.satisfied()
                    ),
                )?;
            }
        }
        None => out.write_all(&buf).map_err(input)?,
    }
    let broken: Vec<_> = rows.iter().filter(|r| !r.satisfied()).collect();
    for r in &broken {
        let _ = writeln!(
            err,
            "{}: Kennard-Robertson check failed (slack {}, min quadratic {})",
            r.state_id,
            fmt17(r.report.slack),
            fmt17(r.min_quadratic)
        );
    }
    Ok(if broken.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn run_report(sweep_csv: &Path, data: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let rows = spin::read_csv(sweep_csv).map_err(input)?;
    let mut text = format!("# sweep rows={}\n", rows.len());
    if let Some(data) = data {
        let points = spin::ingest(data).map_err(input)?;
        let overlay = spin::overlay(&rows, &points);
        text.push_str("phi,quantity_id,value,uncertainty,curve_phi,curve_value,residual\n");
        for e in &overlay.entries {
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                fmt17(e.point.phi),
                e.point.quantity,
                fmt17(e.point.value),
                e.point.uncertainty.map(fmt17).unwrap_or_default(),
                fmt17(e.nearest_phi),
                fmt17(e.curve_value),
                fmt17(e.residual)
            );
        }
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_else(|| "none".into());
        let _ = writeln!(
            text,
            "# points={} max_abs_residual={} mean_abs_residual={}",
            overlay.entries.len(),
            opt(overlay.max_abs_residual),
            opt(overlay.mean_abs_residual)
        );
    }
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

/// Entry point used by the binary.
pub fn main_exit_code() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = io::stdout().flush();
    code
}
