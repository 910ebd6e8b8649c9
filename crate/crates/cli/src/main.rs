//! Command-line front end: reads model files, computes moments along the
//! different routes, renders diagrams, and runs cross-route verification.
//!
//! Exit codes: 0 on success, 1 for parse or validation problems, 2 for
//! computation limits (recursion guard, non-PSD covariance, size caps) and
//! failed verifications.

use std::fmt::Write as _;
use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qmoments::algebra::{AlgebraError, ModelDocument, ModelSpec, MomentQuery, QPoint};
use qmoments::diagrams::{
    enumerate_pairings_with_limit, q_wick_moment_parallel, q_wick_moment_with_limit,
    scalar_recursion_with_limit, CatalanSeq, DiagramError,
};
use qmoments::engine::{moment, EngineError};
use qmoments::exactmath::{QPoly, QRational};
use qmoments::fockoracle::{numeric_moment, FockError, FockModel};

/// Word-length cap for the pairing-sum and recursion routes; 2n = 12 means
/// 10,395 diagrams. `--force` raises it to the library limit of 16.
const DEFAULT_WORD_CAP: usize = 12;
const FORCED_WORD_CAP: usize = 16;

#[derive(Parser)]
#[command(
    name = "qmoments",
    about = "Exact mixed moments of noncommutative random vectors from q-commutator data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// Model file (JSON); `-` reads standard input
    #[arg(long)]
    model: String,
}

#[derive(Args)]
struct WordArg {
    /// Index word sigma as comma-separated 1-based coordinates, e.g. 1,2,1,2
    #[arg(long)]
    word: String,
}

#[derive(Subcommand)]
enum Command {
    /// Moment via the normal-ordering engine (any model)
    Moment {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        word: WordArg,
        /// Evaluation point: a rational like 1/2, or `symbolic`
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Moment via the crossing-weighted pairing sum (centered models)
    Wick {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        word: WordArg,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long)]
        json: bool,
        /// Raise the word-length cap from 12 to 16
        #[arg(long)]
        force: bool,
        /// Size of the worker pool for the diagram fold
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Moment via the pair-removal recursion (centered models)
    Recursion {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        word: WordArg,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<String>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        force: bool,
    },
    /// All moments up to an order, one row per index word
    Table {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        max_order: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// All pairings of a ground set with their crossing numbers
    Diagrams {
        /// Even ground-set size
        #[arg(long)]
        size: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        force: bool,
    },
    /// Classify a comma-separated ±1 sequence
    Catalan {
        /// Sequence like -1,1 or -1,-1,1,1
        #[arg(long, allow_hyphen_values = true)]
        seq: String,
        #[arg(long)]
        json: bool,
    },
    /// Three-route agreement on every word up to an order
    Verify {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        max_order: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare symbolic moments against the numeric Fock realization
    FockCheck {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        word: WordArg,
        /// Evaluation points (repeatable); defaults to -9/10 -1/2 0 1/2 9/10
        #[arg(long, allow_hyphen_values = true)]
        q: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

enum CliError {
    Validation(String),
    Computation(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Computation(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Computation(m) => m,
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::DepthExceeded { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DiagramError> for CliError {
    fn from(e: DiagramError) -> Self {
        match e {
            DiagramError::SizeLimitExceeded { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        match e {
            FockError::CovNotPsd { .. }
            | FockError::TruncationOverflow { .. }
            | FockError::LevelTooSmall { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

#[cfg(unix)]
fn reset_sigpipe() {
    // downstream `head`-style consumers close the pipe; exit quietly like
    // any other unix filter instead of panicking on the broken pipe
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn load_model(arg: &ModelArg) -> Result<ModelDocument, CliError> {
    let text = if arg.model == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::Validation(format!("cannot read stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(&arg.model)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", arg.model)))?
    };
    Ok(ModelDocument::from_json(&text)?)
}

fn parse_word(arg: &WordArg) -> Result<MomentQuery, CliError> {
    Ok(arg.word.parse()?)
}

/// The effective q point: the command-line flag wins over the model file.
fn effective_q(doc: &ModelDocument, flag: &Option<String>) -> Result<QPoint, CliError> {
    match flag {
        None => Ok(doc.q.clone()),
        Some(s) => Ok(s.parse()?),
    }
}

fn word_cap(force: bool) -> usize {
    if force {
        FORCED_WORD_CAP
    } else {
        DEFAULT_WORD_CAP
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Computation(format!("cannot build worker pool: {e}")))
}

fn poly_json(p: &QPoly) -> serde_json::Value {
    json!({
        "coefficients": p.coeffs().iter().map(QRational::to_string).collect::<Vec<_>>(),
        "display": p.to_string(),
    })
}

/// Renders one computed polynomial, optionally evaluated at a q point.
fn emit_polynomial(query: &MomentQuery, poly: &QPoly, q: &QPoint, as_json: bool) {
    let evaluation = q.as_rational().map(|q0| (q0.clone(), poly.eval(q0)));
    if as_json {
        let evaluations = match &evaluation {
            None => vec![],
            Some((q0, v)) => vec![json!({"q": q0.to_string(), "value": v.to_string()})],
        };
        let doc = json!({
            "query": query.indices(),
            "polynomial": poly_json(poly),
            "evaluations": evaluations,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("{poly}");
        if let Some((q0, v)) = evaluation {
            println!("at q = {q0}: {v}");
        }
    }
}

fn all_words(d: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut sigma = vec![1usize; len];
    loop {
        out.push(sigma.clone());
        let mut pos = len;
        while pos > 0 {
            if sigma[pos - 1] < d {
                sigma[pos - 1] += 1;
                break;
            }
            sigma[pos - 1] = 1;
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Moment {
            model,
            word,
            q,
            json,
        } => {
            let doc = load_model(&model)?;
            let query = parse_word(&word)?;
            let value = moment(&doc.spec, &query)?;
            emit_polynomial(&query, &value, &effective_q(&doc, &q)?, json);
            Ok(())
        }
        Command::Wick {
            model,
            word,
            q,
            json,
            force,
            threads,
        } => {
            let doc = load_model(&model)?;
            let query = parse_word(&word)?;
            let cap = word_cap(force);
            let value = match threads {
                None => q_wick_moment_with_limit(&doc.spec, &query, cap)?,
                Some(_) => thread_pool(threads)?
                    .install(|| q_wick_moment_parallel(&doc.spec, &query, cap))?,
            };
            emit_polynomial(&query, &value, &effective_q(&doc, &q)?, json);
            Ok(())
        }
        Command::Recursion {
            model,
            word,
            q,
            json,
            force,
        } => {
            let doc = load_model(&model)?;
            let query = parse_word(&word)?;
            let value = scalar_recursion_with_limit(&doc.spec, &query, word_cap(force))?;
            emit_polynomial(&query, &value, &effective_q(&doc, &q)?, json);
            Ok(())
        }
        Command::Table {
            model,
            max_order,
            json,
            threads,
        } => {
            let doc = load_model(&model)?;
            run_table(&doc, max_order, json, threads)
        }
        Command::Diagrams { size, json, force } => run_diagrams(size, json, force),
        Command::Catalan { seq, json } => run_catalan(&seq, json),
        Command::Verify {
            model,
            max_order,
            json,
            threads,
        } => {
            let doc = load_model(&model)?;
            run_verify(&doc.spec, max_order, json, threads)
        }
        Command::FockCheck {
            model,
            word,
            q,
            json,
        } => {
            let doc = load_model(&model)?;
            let query = parse_word(&word)?;
            run_fock_check(&doc, &query, &q, json)
        }
    }
}

fn run_table(
    doc: &ModelDocument,
    max_order: usize,
    as_json: bool,
    threads: Option<usize>,
) -> Result<(), CliError> {
    use rayon::prelude::*;
    let spec = &doc.spec;
    let words: Vec<Vec<usize>> = (1..=max_order)
        .flat_map(|len| all_words(spec.dim(), len))
        .collect();
    let pool = thread_pool(threads)?;
    let rows: Vec<(MomentQuery, QPoly)> = pool.install(|| {
        words
            .par_iter()
            .map(|sigma| {
                let query = MomentQuery::new(sigma.clone()).expect("nonempty");
                let value = moment(spec, &query)?;
                Ok((query, value))
            })
            .collect::<Result<Vec<_>, EngineError>>()
    })?;
    if as_json {
        let doc = json!({
            "max_order": max_order,
            "rows": rows
                .iter()
                .map(|(q, p)| json!({"query": q.indices(), "polynomial": poly_json(p)}))
                .collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        for (query, value) in &rows {
            println!("{query} -> {value}");
        }
    }
    Ok(())
}

fn run_diagrams(size: usize, as_json: bool, force: bool) -> Result<(), CliError> {
    let diagrams = enumerate_pairings_with_limit(size, word_cap(force))?;
    if as_json {
        let rows: Vec<serde_json::Value> = diagrams
            .map(|d| json!({"pairs": d.pairs(), "crossings": d.crossing_number()}))
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({"size": size, "diagrams": rows})).expect("json")
        );
    } else {
        for d in diagrams {
            println!("{d} c={}", d.crossing_number());
        }
    }
    Ok(())
}

fn run_catalan(seq: &str, as_json: bool) -> Result<(), CliError> {
    let values = seq
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| CliError::Validation(format!("bad sign entry `{part}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sequence = CatalanSeq::from_values(&values)?;
    let catalan = sequence.is_catalan()?;
    if as_json {
        let doc = json!({
            "sequence": values,
            "taus": sequence.taus(),
            "catalan": catalan,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("{}", if catalan { "Catalan" } else { "not Catalan" });
    }
    Ok(())
}

fn run_verify(
    spec: &ModelSpec,
    max_order: usize,
    as_json: bool,
    threads: Option<usize>,
) -> Result<(), CliError> {
    use rayon::prelude::*;
    struct Disagreement {
        sigma: Vec<usize>,
        engine: QPoly,
        wick: QPoly,
        recursion: QPoly,
    }
    let pool = thread_pool(threads)?;
    let mut first_failure: Option<Disagreement> = None;
    let mut checked = 0usize;
    for len in 1..=max_order {
        let words = all_words(spec.dim(), len);
        checked += words.len();
        let failures: Vec<Disagreement> = pool.install(|| {
            words
                .par_iter()
                .map(|sigma| {
                    let query = MomentQuery::new(sigma.clone()).expect("nonempty");
                    let engine = moment(spec, &query)?;
                    let wick = q_wick_moment_with_limit(spec, &query, FORCED_WORD_CAP)
                        .map_err(CliError::from)?;
                    let recursion = scalar_recursion_with_limit(spec, &query, FORCED_WORD_CAP)
                        .map_err(CliError::from)?;
                    if engine != wick || engine != recursion {
                        Ok(Some(Disagreement {
                            sigma: sigma.clone(),
                            engine,
                            wick,
                            recursion,
                        }))
                    } else {
                        Ok(None)
                    }
                })
                .collect::<Result<Vec<Option<Disagreement>>, CliError>>()
                .map(|v| v.into_iter().flatten().collect())
        })?;
        // Words are generated in lexicographic order, so the first failure
        // at the shortest failing length is the canonical counterexample.
        if let Some(f) = failures.into_iter().next() {
            first_failure = Some(f);
            break;
        }
    }
    match first_failure {
        None => {
            if as_json {
                let doc = json!({"status": "PASS", "max_order": max_order, "words": checked});
                println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            } else {
                println!(
                    "PASS: engine, pairing sum, and recursion agree on all {checked} words up to order {max_order}"
                );
            }
            Ok(())
        }
        Some(f) => {
            let sigma = f
                .sigma
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",");
            if as_json {
                let doc = json!({
                    "status": "FAIL",
                    "sigma": f.sigma,
                    "engine": poly_json(&f.engine),
                    "wick": poly_json(&f.wick),
                    "recursion": poly_json(&f.recursion),
                });
                println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            } else {
                println!(
                    "FAIL at sigma = {sigma}: engine = {}, pairing sum = {}, recursion = {}",
                    f.engine, f.wick, f.recursion
                );
            }
            Err(CliError::Computation(format!(
                "three-route verification failed at sigma = {sigma}"
            )))
        }
    }
}

fn run_fock_check(
    doc: &ModelDocument,
    query: &MomentQuery,
    q_flags: &[String],
    as_json: bool,
) -> Result<(), CliError> {
    let spec = &doc.spec;
    if !spec.is_gaussian_form() {
        return Err(CliError::Validation(
            "fock-check needs a centered model with zero preservation commutators".into(),
        ));
    }
    let mut q_points: Vec<QRational> = Vec::new();
    if q_flags.is_empty() {
        for s in ["-9/10", "-1/2", "0", "1/2", "9/10"] {
            q_points.push(s.parse().expect("builtin rational"));
        }
        if let QPoint::Value(v) = &doc.q {
            q_points.push(v.clone());
        }
    } else {
        for s in q_flags {
            let point: QPoint = s.parse()?;
            match point.as_rational() {
                Some(v) => q_points.push(v.clone()),
                None => {
                    return Err(CliError::Validation(
                        "fock-check needs numeric q values".into(),
                    ))
                }
            }
        }
    }
    let symbolic = moment(spec, query)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for q0 in &q_points {
        let model = FockModel::new(spec, q0.to_f64(), query.len())?;
        let numeric = numeric_moment(&model, query)?;
        let exact = symbolic.eval(q0);
        let exact_f = exact.to_f64();
        let rel = (numeric - exact_f).abs() / exact_f.abs().max(1.0);
        worst = worst.max(rel);
        rows.push((q0.clone(), exact, numeric, rel));
    }
    let pass = worst <= 1e-9;
    if as_json {
        let doc = json!({
            "query": query.indices(),
            "polynomial": poly_json(&symbolic),
            "status": if pass { "PASS" } else { "FAIL" },
            "comparisons": rows
                .iter()
                .map(|(q0, exact, numeric, rel)| json!({
                    "q": q0.to_string(),
                    "symbolic": exact.to_string(),
                    "symbolic_f64": exact.to_f64(),
                    "numeric": numeric,
                    "relative_error": rel,
                }))
                .collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("symbolic: {symbolic}");
        for (q0, exact, numeric, rel) in &rows {
            let mut line = String::new();
            let _ = write!(
                line,
                "q = {q0}: symbolic = {exact} ({:.12}), numeric = {numeric:.12}, rel err = {rel:.3e}",
                exact.to_f64()
            );
            println!("{line}");
        }
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::Computation(format!(
            "fock-check exceeded the 1e-9 relative tolerance (worst {worst:.3e})"
        )))
    }
}
