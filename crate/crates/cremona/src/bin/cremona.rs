//! Command-line interface: parse curve documents, dispatch to the engine,
//! emit canonical reports. Exit codes: 0 success, 1 validation error,
//! 2 internal invariant violation.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use cremona::cluster::rational_string;
use cremona::coolidge::CoolidgeConfig;
use cremona::document::surface_text;
use cremona::hirzebruch::SurfaceDesc;
use cremona::{
    ci_projection_certificate, classify_singularities, enumerate_standard_models,
    enumerate_standard_models_ruled, is_minimal_degree, jung_test, km_empty_test, line_equivalent,
    log_discrepancies, minimal_plane_report, noether_fano_certificate,
    noether_fano_plane_certificate, parse_batch, replay, scroll_reduction, standard_model,
    ClassificationScope, CurveDocument, DocumentError, EngineError, MinimalityStatus, Pair,
    ProjectionPair, ReportDocument, ReportFormat, TraceRecord,
};

#[derive(Parser)]
#[command(
    name = "cremona",
    version,
    about = "Cremona-equivalence engine for plane curves given by weighted clusters"
)]
struct Cli {
    /// Input document (JSON); defaults to stdin for document commands.
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output file; defaults to stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format: json or text.
    #[arg(long, global = true, default_value = "json")]
    format: String,

    /// Degree bound for contractible-class searches.
    #[arg(long, global = true, default_value_t = 6)]
    max_class_degree: i64,

    /// Leaf bound for standard-model enumeration.
    #[arg(long, global = true, default_value_t = 64)]
    branch_bound: usize,

    /// Worker threads for batch documents.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Check every cluster and pair invariant; report all violations.
    Validate,
    /// Combinatorial genus of the pair.
    Genus,
    /// Log discrepancies at the given coefficient.
    Discrepancies {
        /// Coefficient as p/q in (0, 1].
        #[arg(long)]
        coeff: String,
    },
    /// Terminal/canonical classification at the given coefficient.
    Classify {
        #[arg(long)]
        coeff: String,
        /// Restrict the minimum to valuations centered on C0.
        #[arg(long)]
        along_c0: bool,
    },
    /// Reduce to a standard model; --all enumerates the reachable models.
    StandardModel {
        #[arg(long)]
        all: bool,
    },
    /// Minimal-degree verdict (plane input) or minimal plane model (ruled).
    MinimalDegree,
    /// Cremona equivalence to a line for rational curves.
    LineEquivalence,
    /// Noether-Fano certificate: numeric form, or the plane overload when a
    /// document is supplied.
    NfCertificate {
        #[arg(long)]
        n: Option<i64>,
        #[arg(long)]
        d_high: Option<i64>,
        #[arg(long)]
        d_low: i64,
        #[arg(long)]
        max_mult: Option<i64>,
    },
    /// Scroll case reduction trace for the given degree.
    ScrollReduce {
        #[arg(long)]
        degree: i64,
    },
    /// Complete-intersection projection certificate.
    CiCertificate {
        #[arg(short)]
        a: i64,
        #[arg(short)]
        b: i64,
        #[arg(short)]
        k: i64,
    },
    /// Re-execute the traces of a previously emitted report.
    Replay {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run the built-in regression checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify_exit(&err))
        }
    }
}

fn classify_exit(err: &EngineError) -> u8 {
    match err {
        EngineError::InvariantViolation { .. } | EngineError::Internal(_) => 2,
        _ => 1,
    }
}

fn run(cli: &Cli) -> Result<ExitCode, EngineError> {
    let format = match cli.format.as_str() {
        "json" => ReportFormat::Json,
        "text" => ReportFormat::Text,
        other => {
            return Err(EngineError::Precondition(format!(
                "unknown format {other:?}, expected json or text"
            )))
        }
    };

    // Commands that do not read a curve document.
    match &cli.command {
        Command::ScrollReduce { degree } => {
            let reduction = scroll_reduction(*degree)?;
            let report = ReportDocument::new("scroll-reduce")
                .with_verdicts(to_value(&reduction)?)
                .with_summary(format!(
                    "{} states from ({}, {})",
                    reduction.states.len(),
                    degree,
                    degree - 1
                ));
            write_output(cli, &report.emit(format)?)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::CiCertificate { a, b, k } => {
            let cert = ci_projection_certificate(&ProjectionPair::new(*a, *b, *k)?)?;
            let mut report = ReportDocument::new("ci-certificate")
                .with_summary(cert.statement.clone())
                .with_verdicts(json!({ "holds": cert.holds }));
            report.push_certificate(to_value(&cert)?);
            write_output(cli, &report.emit(format)?)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::NfCertificate {
            n: Some(n),
            d_high: Some(d_high),
            d_low,
            max_mult: Some(max_mult),
        } => {
            let cert = noether_fano_certificate(*n, *d_high, *d_low, *max_mult)?;
            let mut report = ReportDocument::new("nf-certificate")
                .with_summary(cert.statement.clone())
                .with_verdicts(json!({ "holds": cert.holds }));
            report.push_certificate(to_value(&cert)?);
            write_output(cli, &report.emit(format)?)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::Replay { trace } => {
            return run_replay(cli, trace, format);
        }
        Command::Selftest => {
            return run_selftest(cli);
        }
        _ => {}
    }

    // Document commands, possibly in batch.
    let bytes = read_input(cli)?;
    let docs = match parse_batch(&bytes) {
        Ok(docs) => docs,
        Err(err) => {
            let report = error_report(&cli.command, &err);
            write_output(cli, &report.emit(format)?)?;
            return Ok(ExitCode::from(1));
        }
    };

    let outputs: Vec<(String, u8)> = if docs.len() > 1 && cli.jobs > 1 {
        run_batch_parallel(cli, &docs, format)?
    } else {
        docs.iter()
            .map(|doc| entry_output(cli, doc, format))
            .collect::<Result<Vec<_>, _>>()?
    };

    let worst = outputs.iter().map(|(_, code)| *code).max().unwrap_or(0);
    let body = if outputs.len() == 1 {
        outputs.into_iter().next().unwrap().0
    } else if format == ReportFormat::Json {
        // Batch: a JSON array of per-entry reports.
        let items: Vec<Value> = outputs
            .iter()
            .map(|(s, _)| serde_json::from_str(s).expect("reports are valid JSON"))
            .collect();
        serde_json::to_string_pretty(&Value::Array(items))
            .map_err(|e| EngineError::Internal(e.to_string()))?
    } else {
        outputs
            .iter()
            .map(|(s, _)| s.as_str())
            .collect::<Vec<_>>()
            .join("\n----\n")
    };
    write_output(cli, &body)?;
    Ok(ExitCode::from(worst))
}

fn run_batch_parallel(
    cli: &Cli,
    docs: &[CurveDocument],
    format: ReportFormat,
) -> Result<Vec<(String, u8)>, EngineError> {
    let jobs = cli.jobs.max(1);
    let mut results: Vec<Option<Result<(String, u8), EngineError>>> = Vec::new();
    results.resize_with(docs.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results_mutex = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(docs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= docs.len() {
                    break;
                }
                let out = entry_output(cli, &docs[i], format);
                results_mutex.lock().unwrap()[i] = Some(out);
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every entry processed"))
        .collect()
}

/// Process one document; engine failures become error reports with the
/// matching exit code rather than aborting the batch.
fn entry_output(
    cli: &Cli,
    doc: &CurveDocument,
    format: ReportFormat,
) -> Result<(String, u8), EngineError> {
    match run_document(cli, doc) {
        Ok(report) => Ok((report.emit(format)?, 0)),
        Err(RunError::Document(err)) => {
            let report = error_report(&cli.command, &err);
            Ok((report.emit(format)?, 1))
        }
        Err(RunError::Engine(err)) => {
            let code = classify_exit(&err);
            let report = ReportDocument::new(command_name(&cli.command))
                .with_input(doc)
                .with_verdicts(json!({ "error": err.to_string() }))
                .with_summary(format!("error: {err}"));
            Ok((report.emit(format)?, code))
        }
    }
}

enum RunError {
    Document(DocumentError),
    Engine(EngineError),
}

impl From<EngineError> for RunError {
    fn from(e: EngineError) -> Self {
        RunError::Engine(e)
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Validate => "validate",
        Command::Genus => "genus",
        Command::Discrepancies { .. } => "discrepancies",
        Command::Classify { .. } => "classify",
        Command::StandardModel { .. } => "standard-model",
        Command::MinimalDegree => "minimal-degree",
        Command::LineEquivalence => "line-equivalence",
        Command::NfCertificate { .. } => "nf-certificate",
        Command::ScrollReduce { .. } => "scroll-reduce",
        Command::CiCertificate { .. } => "ci-certificate",
        Command::Replay { .. } => "replay",
        Command::Selftest => "selftest",
    }
}

fn error_report(command: &Command, err: &DocumentError) -> ReportDocument {
    let verdicts = match err {
        DocumentError::Schema { path, message } => {
            json!({ "schema_error": { "path": format!("/{path}"), "message": message } })
        }
        DocumentError::Invalid(report) => {
            json!({ "validation": serde_json::to_value(report).unwrap_or(Value::Null) })
        }
    };
    ReportDocument::new(command_name(command))
        .with_verdicts(verdicts)
        .with_summary(format!("{err}"))
}

fn run_document(cli: &Cli, doc: &CurveDocument) -> Result<ReportDocument, RunError> {
    let branch_bound = doc
        .options
        .as_ref()
        .and_then(|o| o.branch_bound)
        .unwrap_or(cli.branch_bound);
    let max_class_degree = doc
        .options
        .as_ref()
        .and_then(|o| o.max_class_degree)
        .unwrap_or(cli.max_class_degree);

    match &cli.command {
        Command::Validate => {
            // Validation never aborts: report violations for raw clusters
            // even when the pair constructor would refuse them.
            let cluster = match doc.to_pair() {
                Ok(pair) => {
                    let report = ReportDocument::new("validate")
                        .with_input(doc)
                        .with_verdicts(json!({ "valid": true, "violations": [] }))
                        .with_summary("valid");
                    let _ = pair;
                    return Ok(report);
                }
                Err(DocumentError::Invalid(report)) => report,
                Err(err @ DocumentError::Schema { .. }) => return Err(RunError::Document(err)),
            };
            Ok(ReportDocument::new("validate")
                .with_input(doc)
                .with_verdicts(json!({
                    "valid": false,
                    "violations": serde_json::to_value(&cluster.violations)
                        .unwrap_or(Value::Null),
                }))
                .with_summary(format!("invalid: {cluster}")))
        }
        Command::Genus => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let genus = pair.combinatorial_genus();
            Ok(ReportDocument::new("genus")
                .with_input(doc)
                .with_verdicts(json!({ "genus": rational_string(&genus) }))
                .with_summary(format!("genus {}", rational_string(&genus))))
        }
        Command::Discrepancies { coeff } => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let c = cremona::cluster::parse_rational(coeff)?;
            let report = log_discrepancies(pair.cluster(), &c)?;
            let entries: Value = report
                .entries
                .iter()
                .map(|(id, a)| (format!("a({id})"), Value::String(rational_string(a))))
                .collect::<serde_json::Map<String, Value>>()
                .into();
            Ok(ReportDocument::new("discrepancies")
                .with_input(doc)
                .with_verdicts(json!({
                    "coefficient": rational_string(&report.coefficient),
                    "entries": entries,
                    "minimum": rational_string(&report.minimum),
                    "witness": to_value(&report.witness)?,
                }))
                .with_summary(format!(
                    "minimum {} at {:?}",
                    rational_string(&report.minimum),
                    report.witness
                )))
        }
        Command::Classify { coeff, along_c0 } => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let c = cremona::cluster::parse_rational(coeff)?;
            let scope = if *along_c0 {
                ClassificationScope::AlongC0
            } else {
                ClassificationScope::Global
            };
            let classification = classify_singularities(pair.cluster(), &c, scope)?;
            Ok(ReportDocument::new("classify")
                .with_input(doc)
                .with_verdicts(json!({
                    "class": format!("{}", classification.class),
                    "minimum": classification.minimum.as_ref().map(rational_string),
                    "witness": to_value(&classification.witness)?,
                    "along_c0": along_c0,
                }))
                .with_summary(format!("{}", classification.class)))
        }
        Command::StandardModel { all } => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let mut report = ReportDocument::new("standard-model").with_input(doc);
            if *all {
                let enumerated = match &pair {
                    Pair::Plane(p) => enumerate_standard_models(p, branch_bound)?,
                    Pair::Ruled(r) => enumerate_standard_models_ruled(r, branch_bound)?,
                };
                let mut verdicts = Vec::new();
                for (i, model) in enumerated.models.iter().enumerate() {
                    verdicts.push(model_verdict(model)?);
                    report.push_trace(&format!("model-{i}"), &pair, &model.trace);
                }
                let summary = format!(
                    "{} model(s){}",
                    enumerated.models.len(),
                    if enumerated.truncated {
                        " (truncated)"
                    } else {
                        ""
                    }
                );
                report = report
                    .with_verdicts(json!({
                        "models": verdicts,
                        "truncated": enumerated.truncated,
                    }))
                    .with_summary(summary);
            } else {
                let model = standard_model(&pair, &doc.tie_break())?;
                report.push_trace("model", &pair, &model.trace);
                let summary = model_summary(&model);
                report = report
                    .with_verdicts(json!({ "model": model_verdict(&model)? }))
                    .with_summary(summary);
            }
            Ok(report)
        }
        Command::MinimalDegree => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let mut report = ReportDocument::new("minimal-degree").with_input(doc);
            match &pair {
                Pair::Plane(p) => {
                    let verdict = is_minimal_degree(p, branch_bound)?;
                    if let Some(trace) = &verdict.witness_trace {
                        report.push_trace("witness", &pair, trace);
                    }
                    if let Some(cert) = &verdict.certificate {
                        report.push_certificate(to_value(cert)?);
                    }
                    let summary = match verdict.status {
                        MinimalityStatus::Minimal => {
                            format!("minimal at degree {}", verdict.minimal_degree)
                        }
                        MinimalityStatus::Line => "a line".to_string(),
                        MinimalityStatus::NotMinimal => format!(
                            "not minimal: degree {} is achievable",
                            verdict.minimal_degree
                        ),
                    };
                    report = report
                        .with_verdicts(json!({
                            "status": to_value(&verdict.status)?,
                            "reason": to_value(&verdict.reason)?,
                            "minimal_degree": verdict.minimal_degree,
                        }))
                        .with_summary(summary);
                }
                Pair::Ruled(r) => {
                    let mpm = minimal_plane_report(r)?;
                    report.push_trace("minimal-plane-model", &pair, &mpm.trace);
                    report = report
                        .with_verdicts(json!({
                            "minimal_degree": mpm.degree,
                            "top_multiplicity": mpm.top_multiplicity,
                            "cluster_best_effort": mpm.cluster_best_effort,
                            "plane_model": to_value(&CurveDocument::from_pair(&Pair::Plane(
                                mpm.pair.clone()
                            )))?,
                        }))
                        .with_summary(format!(
                            "minimal plane model: degree {}, top multiplicity {}",
                            mpm.degree, mpm.top_multiplicity
                        ));
                }
            }
            Ok(report)
        }
        Command::LineEquivalence => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let plane = match &pair {
                Pair::Plane(p) => p.clone(),
                Pair::Ruled(_) => {
                    return Err(RunError::Engine(EngineError::Precondition(
                        "line-equivalence takes a plane input".into(),
                    )))
                }
            };
            let config = CoolidgeConfig {
                max_class_degree,
                ..CoolidgeConfig::default()
            };
            let verdict = line_equivalent(&plane, &config)?;
            let km = km_empty_test(&plane)?;
            Ok(ReportDocument::new("line-equivalence")
                .with_input(doc)
                .with_verdicts(json!({
                    "status": to_value(&verdict.status)?,
                    "certificate": to_value(&verdict.certificate)?,
                    "km_outcome": to_value(&km.outcome)?,
                }))
                .with_summary(format!("{:?}", verdict.status)))
        }
        Command::NfCertificate { d_low, .. } => {
            let pair = doc.to_pair().map_err(RunError::Document)?;
            let plane = match &pair {
                Pair::Plane(p) => p.clone(),
                Pair::Ruled(_) => {
                    return Err(RunError::Engine(EngineError::Precondition(
                        "the plane overload takes a plane input".into(),
                    )))
                }
            };
            let cert = noether_fano_plane_certificate(&plane, *d_low)?;
            let jung = jung_test(&plane);
            let mut report = ReportDocument::new("nf-certificate")
                .with_input(doc)
                .with_verdicts(json!({ "holds": cert.holds, "jung_holds": jung.holds }))
                .with_summary(cert.statement.clone());
            report.push_certificate(to_value(&cert)?);
            report.push_certificate(to_value(&jung)?);
            Ok(report)
        }
        Command::ScrollReduce { .. }
        | Command::CiCertificate { .. }
        | Command::Replay { .. }
        | Command::Selftest => unreachable!("handled before document dispatch"),
    }
}

fn model_summary(model: &cremona::StandardModel) -> String {
    let desc = match &model.state {
        Pair::Plane(p) => surface_text(&SurfaceDesc::Plane { degree: p.degree() }),
        Pair::Ruled(r) => surface_text(&SurfaceDesc::Ruled {
            a: r.a(),
            alpha: r.alpha(),
            beta: r.beta(),
        }),
    };
    match model.kappa {
        Some(k) => format!("{:?} on {desc}, kappa {k}", model.kind),
        None => format!("{:?} on {desc}", model.kind),
    }
}

fn model_verdict(model: &cremona::StandardModel) -> Result<Value, EngineError> {
    let (surface, class): (Value, Value) = match &model.state {
        Pair::Plane(p) => (json!("plane"), json!({ "degree": p.degree() })),
        Pair::Ruled(r) => (
            json!({ "hirzebruch": r.a() }),
            json!({ "alpha": r.alpha(), "beta": r.beta() }),
        ),
    };
    Ok(json!({
        "kind": to_value(&model.kind)?,
        "surface": surface,
        "class": class,
        "kappa": model.kappa,
        "moves": model.trace.len(),
    }))
}

fn run_replay(cli: &Cli, path: &PathBuf, format: ReportFormat) -> Result<ExitCode, EngineError> {
    #[derive(serde::Deserialize)]
    struct ReplayFile {
        #[serde(default)]
        traces: Vec<TraceRecord>,
    }
    let bytes = fs::read(path)
        .map_err(|e| EngineError::Precondition(format!("cannot read {path:?}: {e}")))?;
    let file: ReplayFile = serde_json::from_slice(&bytes)
        .map_err(|e| EngineError::Precondition(format!("not a report document: {e}")))?;
    if file.traces.is_empty() {
        return Err(EngineError::Precondition(
            "report contains no replayable traces".into(),
        ));
    }
    let mut verdicts = Vec::new();
    for record in &file.traces {
        let pair = record
            .initial
            .to_pair()
            .map_err(|e| EngineError::Precondition(format!("trace {}: {e}", record.label)))?;
        let end = replay(&pair, &record.steps)?;
        let desc = match &end {
            Pair::Plane(p) => surface_text(&SurfaceDesc::Plane { degree: p.degree() }),
            Pair::Ruled(r) => surface_text(&SurfaceDesc::Ruled {
                a: r.a(),
                alpha: r.alpha(),
                beta: r.beta(),
            }),
        };
        verdicts.push(json!({
            "label": record.label,
            "steps": record.steps.len(),
            "final_state": desc,
        }));
    }
    let report = ReportDocument::new("replay")
        .with_verdicts(json!({ "replayed": verdicts }))
        .with_summary(format!("{} trace(s) replayed", file.traces.len()));
    write_output(cli, &report.emit(format)?)?;
    Ok(ExitCode::SUCCESS)
}

fn run_selftest(cli: &Cli) -> Result<ExitCode, EngineError> {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, pass: bool| {
        lines.push(format!("{} {}", if pass { "PASS" } else { "FAIL" }, name));
        ok &= pass;
    };

    // Example regressions from the engine's own test corpus, runnable in the
    // field.
    let d1 = cremona::RuledPair::new(
        3,
        3,
        11,
        cremona::WeightedCluster::new(vec![cremona::ClusterPoint::free("n", 2).with_on_c0(true)]),
    )
    .map_err(|e| EngineError::InvalidPair(e.to_string()))?;
    let mpm = minimal_plane_report(&d1)?;
    check(
        "ruled 3C0+11f node on C0 -> degree 9 top 6",
        mpm.degree == 9 && mpm.top_multiplicity == 6,
    );

    let d2 = cremona::RuledPair::new(
        3,
        3,
        11,
        cremona::WeightedCluster::new(vec![cremona::ClusterPoint::free("n", 2).with_on_c0(false)]),
    )
    .map_err(|e| EngineError::InvalidPair(e.to_string()))?;
    let mpm = minimal_plane_report(&d2)?;
    check(
        "ruled 3C0+11f node off C0 -> degree 8 top 5",
        mpm.degree == 8 && mpm.top_multiplicity == 5,
    );

    let sextic = cremona::PlanePair::new(
        6,
        cremona::WeightedCluster::new(vec![
            cremona::ClusterPoint::free("n", 2),
            cremona::ClusterPoint::free("t1", 2),
            cremona::ClusterPoint::near("t2", 2, "t1"),
        ]),
    )
    .map_err(|e| EngineError::InvalidPair(e.to_string()))?;
    let models = enumerate_standard_models(&sextic, 64)?;
    check(
        "sextic node+tacnode -> two kappa-0 models",
        models.models.len() == 2,
    );

    let reduction = scroll_reduction(5)?;
    check(
        "scroll reduction 5 -> 4 states",
        reduction.states.len() == 4,
    );

    let cert = ci_projection_certificate(&ProjectionPair::new(2, 4, 2)?)?;
    check("complete intersection (2,4) in dim 2 certified", cert.holds);
    let cert = ci_projection_certificate(&ProjectionPair::new(2, 3, 2)?)?;
    check(
        "complete intersection (2,3) in dim 2 not certified",
        !cert.holds,
    );

    let body = lines.join("\n") + "\n";
    write_output(cli, &body)?;
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn to_value<T: serde::Serialize>(value: &T) -> Result<Value, EngineError> {
    serde_json::to_value(value).map_err(|e| EngineError::Internal(e.to_string()))
}

fn read_input(cli: &Cli) -> Result<Vec<u8>, EngineError> {
    match &cli.input {
        Some(path) => fs::read(path)
            .map_err(|e| EngineError::Precondition(format!("cannot read {path:?}: {e}"))),
        None => {
            let mut buffer = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buffer)
                .map_err(|e| EngineError::Precondition(format!("cannot read stdin: {e}")))?;
            Ok(buffer)
        }
    }
}

fn write_output(cli: &Cli, body: &str) -> Result<(), EngineError> {
    let body = if body.ends_with('\n') {
        body.to_string()
    } else {
        format!("{body}\n")
    };
    match &cli.output {
        Some(path) => fs::write(path, body)
            .map_err(|e| EngineError::Precondition(format!("cannot write {path:?}: {e}"))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
