use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dca_core::analytics::{
    assemble_stats, read_defects, read_effort, read_units, DefectRecord, IterationStats,
};
use dca_core::bn::{parse_network, serialize_network, validate_network, Cpd, Network};
use dca_core::learn::{Initialization, Provenance, RecordSet};
use dca_core::model::{
    compile, parse_model, read_citations, records_to_assignments, CauseEffectModel,
};
use dca_core::session::{generate_report, learn_with_restarts, train_version, ModelVersion};

use crate::error::ApiError;
use crate::jobs::TrainingOptions;
use crate::ops::{self, Basis};
use crate::store::Store;

pub const STORE_PATH_ENV: &str = "DCA_STORE_PATH";
pub const DEFAULT_STORE_PATH: &str = "dca-store";

#[derive(Debug, Parser)]
#[command(name = "dca", version, about = "Defect causal analysis workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct StoreArg {
    /// Store directory.
    #[arg(long, env = STORE_PATH_ENV, default_value = DEFAULT_STORE_PATH)]
    pub store_path: PathBuf,
}

#[derive(Debug, Args)]
pub struct DefectFiles {
    /// Defect file: id, iteration, unit, nature, detail_tag, description.
    #[arg(long)]
    pub defects: PathBuf,
    /// Unit sizes: iteration, unit, size_fp.
    #[arg(long)]
    pub units: PathBuf,
    /// Inspection effort: iteration, hours.
    #[arg(long)]
    pub effort: PathBuf,
    #[arg(long)]
    pub iteration: Option<String>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Random,
    Structure,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Fp,
    Hours,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model document and list every issue.
    ValidateModel { model: PathBuf },
    /// Compile a model document to a network document.
    Compile {
        model: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn parameters with EM.
    Learn {
        /// Model document; records are then a citation file.
        #[arg(long, conflicts_with = "network", required_unless_present = "network")]
        model: Option<PathBuf>,
        /// Network document; records are then a plain record file.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        records: PathBuf,
        /// Dirichlet pseudo-count.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long, value_enum)]
        init: Option<InitArg>,
        /// Write the trained network document here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store the result as a new model version (requires --model).
        #[arg(long, requires = "model")]
        save: bool,
        #[command(flatten)]
        store: StoreArg,
        #[arg(long)]
        json: bool,
    },
    /// Rank causes of a problem given evidence.
    Diagnose {
        /// Stored model version.
        #[arg(long, conflicts_with_all = ["model", "network"], required_unless_present = "model")]
        version: Option<String>,
        #[arg(long, requires = "network")]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        network: Option<PathBuf>,
        #[arg(long)]
        problem: String,
        /// cause=true|false, repeatable.
        #[arg(long)]
        evidence: Vec<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Pareto of defect natures.
    Pareto {
        #[arg(long)]
        defects: PathBuf,
        #[arg(long)]
        iteration: Option<String>,
        /// Write the chart description here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// U-chart of defects per FP (one iteration) or per hour (all iterations).
    Uchart {
        #[command(flatten)]
        files: DefectFiles,
        #[arg(long, value_enum, default_value = "fp")]
        basis: BasisArg,
        /// Chart description file; defaults to uchart-<iteration>.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Defects per function point.
    Density {
        #[command(flatten)]
        files: DefectFiles,
    },
    /// Defects found per inspection hour.
    Efficiency {
        #[command(flatten)]
        files: DefectFiles,
    },
    /// Print a stored session's report.
    Report {
        #[arg(long)]
        session: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "DCA_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        store: StoreArg,
    },
}

fn read_file(path: &Path) -> Result<String, ApiError> {
    fs::read_to_string(path)
        .map_err(|e| ApiError::new("io-error", format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), ApiError> {
    fs::write(path, text).map_err(|e| ApiError::new("io-error", format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn load_model(path: &Path) -> Result<CauseEffectModel, ApiError> {
    Ok(parse_model(&read_file(path)?)?)
}

fn load_defect_files(
    files: &DefectFiles,
) -> Result<(Vec<DefectRecord>, Vec<IterationStats>), ApiError> {
    let defects = read_defects(read_file(&files.defects)?.as_bytes())?;
    let units = read_units(read_file(&files.units)?.as_bytes())?;
    let effort = read_effort(read_file(&files.effort)?.as_bytes())?;
    Ok((defects, assemble_stats(&units, &effort)?))
}

/// Runs a command and returns its standard output.
pub fn execute(command: Command) -> Result<String, ApiError> {
    match command {
        Command::ValidateModel { model } => {
            let model = load_model(&model)?;
            let issues = model.issues();
            if let Some(first) = issues.first() {
                let detail: Vec<String> = issues
                    .iter()
                    .map(|i| format!("{}: {i}", i.code()))
                    .collect();
                return Err(ApiError::new(first.code(), detail.join("\n")));
            }
            let mut out = String::from("valid\n");
            for w in model.warnings() {
                out.push_str(&format!("warning: {w}\n"));
            }
            Ok(out)
        }
        Command::Compile { model, out } => {
            let compiled = compile(&load_model(&model)?)?;
            let doc = serialize_network(&compiled.network) + "\n";
            match out {
                Some(path) => {
                    write_file(&path, &doc)?;
                    Ok(format!(
                        "wrote {} ({} variables)\n",
                        path.display(),
                        compiled.network.variables.len()
                    ))
                }
                None => Ok(doc),
            }
        }
        Command::Learn {
            model,
            network,
            records,
            alpha,
            tol,
            max_iters,
            seed,
            restarts,
            init,
            out,
            save,
            store,
            json,
        } => {
            let options = TrainingOptions {
                max_iterations: max_iters,
                tolerance: tol,
                alpha,
                seed,
                restarts,
                init: init.map(|i| match i {
                    InitArg::Random => Initialization::Random,
                    InitArg::Structure => Initialization::Structure,
                }),
            };
            let config = options.to_config()?;
            let records_text = read_file(&records)?;
            let (trained, summary, version) = if let Some(model) = model {
                let model = load_model(&model)?;
                let compiled = compile(&model)?;
                let citations =
                    read_citations(&model, records_text.as_bytes(), Provenance::CrossCompany)?;
                let records = records_to_assignments(&model, &compiled, &citations)?;
                let version = train_version(&model, &records, &config, None)?;
                let version = if save {
                    Some(Store::open(&store.store_path)?.put_version(version, &records)?)
                } else {
                    Some(version)
                };
                let v = version.as_ref().expect("trained");
                (
                    v.network.clone(),
                    learn_summary(v),
                    version.filter(|_| save),
                )
            } else {
                let structure =
                    parse_network(&read_file(network.as_deref().expect("clap requires one"))?)?;
                let report = validate_network(&structure);
                if !report.is_valid() {
                    return Err(ApiError::new("invalid-network", format!("{report:?}")));
                }
                let records =
                    RecordSet::read_csv(records_text.as_bytes(), Provenance::CrossCompany)?;
                let (result, best_seed, scores) =
                    learn_with_restarts(&structure, &records, &config.learn, config.restarts)?;
                let summary = LearnSummary {
                    final_log_likelihood: result.final_log_likelihood,
                    iterations: result.iterations,
                    converged: result.converged,
                    best_seed,
                    seed_log_likelihoods: scores,
                    loglik_trace: result.loglik_trace.clone(),
                    version_id: None,
                };
                (result.network, summary, None)
            };
            let summary = LearnSummary {
                version_id: version.map(|v| v.id),
                ..summary
            };
            if let Some(path) = &out {
                write_file(path, &(serialize_network(&trained) + "\n"))?;
            }
            if json {
                return Ok(to_json(&serde_json::json!({
                    "summary": summary,
                    "parameters": parameter_rows(&trained),
                })));
            }
            Ok(render_learn(&summary, &trained))
        }
        Command::Diagnose {
            version,
            model,
            network,
            problem,
            evidence,
            format,
            store,
        } => {
            let evidence = ops::parse_evidence(&evidence)?;
            let version = match version {
                Some(id) => Store::open(&store.store_path)?.version(&id)?,
                None => {
                    let model = load_model(model.as_deref().expect("clap requires model"))?;
                    let network = parse_network(&read_file(
                        network.as_deref().expect("clap requires network"),
                    )?)?;
                    adhoc_version(model, network)
                }
            };
            let view = ops::diagnose_version(&version, &problem, &evidence)?;
            Ok(match format {
                Format::Json => to_json(&view),
                Format::Text => ops::render_diagnosis(&view),
            })
        }
        Command::Pareto {
            defects,
            iteration,
            out,
            json,
        } => {
            let defects = read_defects(read_file(&defects)?.as_bytes())?;
            let report = ops::pareto_report(&defects, iteration.as_deref())?;
            if let Some(path) = &out {
                write_file(path, &to_json(&report.chart))?;
            }
            Ok(if json {
                to_json(&report)
            } else {
                ops::render_pareto(&report)
            })
        }
        Command::Uchart { files, basis, out } => {
            let (defects, stats) = load_defect_files(&files)?;
            let basis = match basis {
                BasisArg::Fp => Basis::Fp,
                BasisArg::Hours => Basis::Hours,
            };
            let report = ops::u_chart_report(&stats, &defects, files.iteration.as_deref(), basis)?;
            let path = out.unwrap_or_else(|| match (basis, &files.iteration) {
                (Basis::Fp, Some(i)) => PathBuf::from(format!("uchart-{i}.json")),
                _ => PathBuf::from("uchart-hours.json"),
            });
            write_file(&path, &to_json(&report.chart))?;
            Ok(if files.json {
                to_json(&report)
            } else {
                format!(
                    "{}chart description: {}\n",
                    report.chart.render_text(),
                    path.display()
                )
            })
        }
        Command::Density { files } => {
            let (defects, stats) = load_defect_files(&files)?;
            let rows = ops::density_table(&stats, &defects, files.iteration.as_deref())?;
            Ok(if files.json {
                to_json(&rows)
            } else {
                ops::render_metrics("defects per function point", &rows)
            })
        }
        Command::Efficiency { files } => {
            let (defects, stats) = load_defect_files(&files)?;
            let rows = ops::efficiency_table(&stats, &defects, files.iteration.as_deref())?;
            Ok(if files.json {
                to_json(&rows)
            } else {
                ops::render_metrics("defects per inspection hour", &rows)
            })
        }
        Command::Report {
            session,
            format,
            store,
        } => {
            let session = Store::open(&store.store_path)?.session(&session)?;
            let report = generate_report(&session)?;
            Ok(match format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            })
        }
        Command::Serve { .. } => Err(ApiError::new("internal", "serve is handled by the binary")),
    }
}

/// Wraps a model and a trained network for one-off diagnosis.
fn adhoc_version(model: CauseEffectModel, network: Network) -> ModelVersion {
    use dca_core::learn::LearnConfig;
    use dca_core::session::LearnMetadata;
    ModelVersion {
        id: "adhoc".into(),
        parent: None,
        created_at: chrono::DateTime::UNIX_EPOCH,
        model,
        network,
        records_fingerprint: String::new(),
        record_count: 0,
        learn: LearnMetadata {
            config: LearnConfig::default(),
            restarts: 0,
            best_seed: 0,
            seed_log_likelihoods: Vec::new(),
            final_log_likelihood: 0.0,
            iterations: 0,
            converged: false,
            loglik_trace: Vec::new(),
        },
    }
}

#[derive(Debug, Serialize)]
struct LearnSummary {
    final_log_likelihood: f64,
    iterations: usize,
    converged: bool,
    best_seed: u64,
    seed_log_likelihoods: Vec<(u64, f64)>,
    loglik_trace: Vec<f64>,
    version_id: Option<String>,
}

fn learn_summary(v: &ModelVersion) -> LearnSummary {
    LearnSummary {
        final_log_likelihood: v.learn.final_log_likelihood,
        iterations: v.learn.iterations,
        converged: v.learn.converged,
        best_seed: v.learn.best_seed,
        seed_log_likelihoods: v.learn.seed_log_likelihoods.clone(),
        loglik_trace: v.learn.loglik_trace.clone(),
        version_id: None,
    }
}

#[derive(Debug, Serialize)]
struct ParameterRow {
    variable: String,
    condition: String,
    values: Vec<(String, f64)>,
}

fn parameter_rows(net: &Network) -> Vec<ParameterRow> {
    let states = |id: &str| -> Vec<String> {
        net.variable(id)
            .map(|v| v.states.clone())
            .unwrap_or_default()
    };
    let mut out = Vec::new();
    for cpd in &net.cpds {
        match cpd {
            Cpd::Table(t) => {
                let child_states = states(&t.child);
                let parent_states: Vec<Vec<String>> = t.parents.iter().map(|p| states(p)).collect();
                for (r, row) in t.rows.iter().enumerate() {
                    let mut rest = r;
                    let mut cond = vec![String::new(); t.parents.len()];
                    for (i, ps) in parent_states.iter().enumerate().rev() {
                        cond[i] = format!("{}={}", t.parents[i], ps[rest % ps.len()]);
                        rest /= ps.len();
                    }
                    out.push(ParameterRow {
                        variable: t.child.clone(),
                        condition: cond.join(","),
                        values: child_states
                            .iter()
                            .cloned()
                            .zip(row.iter().copied())
                            .collect(),
                    });
                }
            }
            Cpd::NoisyOr(n) => {
                let mut values = vec![("leak".to_string(), n.leak)];
                values.extend(n.parents.iter().cloned().zip(n.link_probs.iter().copied()));
                out.push(ParameterRow {
                    variable: n.child.clone(),
                    condition: "noisy-or".into(),
                    values,
                });
            }
        }
    }
    out
}

fn render_learn(summary: &LearnSummary, net: &Network) -> String {
    let mut out = format!(
        "log-likelihood: {:.6}\niterations: {} ({})\nbest seed: {} of {} restarts\n",
        summary.final_log_likelihood,
        summary.iterations,
        if summary.converged {
            "converged"
        } else {
            "not converged"
        },
        summary.best_seed,
        summary.seed_log_likelihoods.len()
    );
    if let Some(id) = &summary.version_id {
        out.push_str(&format!("version: {id}\n"));
    }
    out.push_str("parameters:\n");
    for row in parameter_rows(net) {
        let values: Vec<String> = row
            .values
            .iter()
            .map(|(k, v)| format!("{k}={v:.6}"))
            .collect();
        if row.condition.is_empty() {
            out.push_str(&format!("  {}  {}\n", row.variable, values.join(" ")));
        } else {
            out.push_str(&format!(
                "  {} | {}  {}\n",
                row.variable,
                row.condition,
                values.join(" ")
            ));
        }
    }
    out
}

/// Entry point shared by the binary and the tests: returns the exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(cli.command) {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {}", e.code, e.message);
            e.exit_code()
        }
    }
}

/// Parses `args` and runs the command. Usage errors count as validation errors.
pub fn run_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            0
        }
        Err(e) => {
            let _ = write!(stderr, "{e}");
            1
        }
    }
}
