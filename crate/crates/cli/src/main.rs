use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use crossfile_core::eval::{load_dataset, masked_index, EvalRun};
use crossfile_core::llm::extract_code;
use crossfile_core::refine::{auto_import, normalize_body};
use crossfile_core::{
    backend_from_config, build_prompt, build_repo_index, identify_context, lint_completion, refine_loop, run_eval,
    CompletionBackend, CompletionPoint, Config, RepoIndex, Strategy,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "crossfile",
    version,
    about = "Repository-level Python code completion",
    after_help = concat!(
        "The http backend reads its API key from the environment variable named by ",
        "backend.api_key_env in the config (default CROSSFILE_API_KEY).\n\n",
        "Exit codes: 0 success, 1 I/O, config or dataset error, 2 completion point not found, 3 backend error."
    )
)]
struct Cli {
    /// JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Progress and timing on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// Repository root.
    root: PathBuf,
    /// Dotted module path, e.g. `app.main`.
    module: String,
    /// Function name, `Class.method`, or fully qualified name.
    function: String,
}

#[derive(Subcommand)]
enum Command {
    /// Index a repository and write its symbol table as JSON.
    Index {
        root: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "OUT")]
        json: Option<PathBuf>,
    },
    /// Complete the body of one function.
    Complete {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "idecoder")]
        strategy: Strategy,
        /// Write the prompt and refinement history here as JSON.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Print the ranked cross-file context for a function as JSON.
    ExplainContext {
        #[command(flatten)]
        target: Target,
    },
    /// Lint a candidate body for a function; diagnostics are printed as JSON.
    Lint {
        #[command(flatten)]
        target: Target,
        /// File holding the body, or `-` for stdin.
        completion: PathBuf,
    },
    /// Run a JSONL dataset under one strategy or all of them.
    Eval {
        dataset: PathBuf,
        /// in_file, all_import, rag, idecoder or all.
        #[arg(long, default_value = "idecoder")]
        strategy: String,
        /// Report file; stdout when omitted.
        #[arg(long, value_name = "OUT")]
        report: Option<PathBuf>,
        /// Per-task traces as JSON lines.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Failure {
        Failure { code, message: message.into() }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| Failure::new(1, e.to_string()))?,
        None => Config::default(),
    };
    let verbose = cli.verbose;
    match cli.command {
        Command::Index { root, json } => cmd_index(&root, json.as_deref(), &config, verbose),
        Command::Complete { target, strategy, trace } => {
            cmd_complete(&target, strategy, trace.as_deref(), &config, verbose)
        }
        Command::ExplainContext { target } => cmd_explain(&target, &config),
        Command::Lint { target, completion } => cmd_lint(&target, &completion, &config),
        Command::Eval { dataset, strategy, report, trace } => {
            cmd_eval(&dataset, &strategy, report.as_deref(), trace.as_deref(), &config, verbose)
        }
    }
}

fn index_repo(root: &Path, config: &Config, verbose: bool) -> Result<RepoIndex, Failure> {
    let started = Instant::now();
    let index = build_repo_index(root, &config.ignore).map_err(|e| Failure::new(1, e.to_string()))?;
    for err in index.errors() {
        eprintln!("warning: {}: {}", err.path, err.message);
    }
    if verbose {
        eprintln!(
            "indexed {} modules, {} symbols in {:?}",
            index.modules().len(),
            index.symbols().len(),
            started.elapsed()
        );
    }
    Ok(index)
}

fn write_output(path: Option<&Path>, text: &str) -> Outcome {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(1, format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON value serializes");
    s.push('\n');
    s
}

fn symbol_table(index: &RepoIndex) -> Value {
    json!({
        "root": index.root().display().to_string(),
        "modules": index.modules().keys().collect::<Vec<_>>(),
        "symbols": index.symbols(),
        "hierarchy": index.hierarchy(),
        "third_party": index.third_party(),
        "errors": index.errors(),
    })
}

fn cmd_index(root: &Path, out: Option<&Path>, config: &Config, verbose: bool) -> Outcome {
    let index = index_repo(root, config, verbose)?;
    write_output(out, &pretty(&symbol_table(&index)))
}

fn point(index: &RepoIndex, target: &Target) -> Result<CompletionPoint, Failure> {
    CompletionPoint::new(index, &target.module, &target.function).map_err(|e| Failure::new(2, e.to_string()))
}

fn backend(config: &Config) -> Result<Box<dyn CompletionBackend>, Failure> {
    backend_from_config(&config.backend).map_err(|e| Failure::new(1, e))
}

fn cmd_complete(target: &Target, strategy: Strategy, trace: Option<&Path>, config: &Config, verbose: bool) -> Outcome {
    let index = index_repo(&target.root, config, verbose)?;
    point(&index, target)?;
    let backend = backend(config)?;
    let (index, point) = masked_index(&index, &target.module, &target.function).map_err(|e| Failure::new(2, e))?;
    let ctx =
        identify_context(&point, &index, &config.context_options()).map_err(|e| Failure::new(2, e.to_string()))?;
    let plan = build_prompt(&ctx, strategy, &config.budget, &index, &config.rag)
        .map_err(|e| Failure::new(1, e.to_string()))?;
    if verbose {
        eprintln!("prompt: {} chars, {} sections", plan.realized.chars().count(), plan.sections.len());
    }
    let (completion, record) = if strategy == Strategy::IdeCoder {
        let t = refine_loop(
            &point,
            &plan,
            backend.as_ref(),
            &index,
            config.max_refine_iters,
            Some(config.budget.max_chars),
        )
        .map_err(|e| Failure::new(3, e.to_string()))?;
        if verbose {
            eprintln!("{} iteration(s), converged: {}", t.iterations.len(), t.converged);
        }
        (normalize_body(&t.final_completion), json!(t))
    } else {
        let reply = backend.complete(&plan.realized).map_err(|e| Failure::new(3, e.to_string()))?;
        let body = normalize_body(&extract_code(&reply));
        (body.clone(), json!({"iterations": [], "final": body, "converged": null}))
    };
    if let Some(path) = trace {
        let doc = json!({"point": point, "strategy": strategy, "prompt": plan.realized, "refinement": record});
        write_output(Some(path), &pretty(&doc))?;
    }
    print!("{completion}");
    Ok(())
}

fn cmd_explain(target: &Target, config: &Config) -> Outcome {
    let index = index_repo(&target.root, config, false)?;
    let point = point(&index, target)?;
    let ctx =
        identify_context(&point, &index, &config.context_options()).map_err(|e| Failure::new(2, e.to_string()))?;
    write_output(None, &pretty(&ctx.to_json()))
}

fn cmd_lint(target: &Target, completion: &Path, config: &Config) -> Outcome {
    let body = if completion == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Failure::new(1, format!("cannot read stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(completion)
            .map_err(|e| Failure::new(1, format!("cannot read {}: {e}", completion.display())))?
    };
    let index = index_repo(&target.root, config, false)?;
    let point = point(&index, target)?;
    let diagnostics = lint_completion(&body, &point, &index);
    let (edits, _) = auto_import(&body, &diagnostics, &point, &index);
    for d in &diagnostics {
        eprintln!("{}", d.render());
    }
    write_output(None, &pretty(&json!({"diagnostics": diagnostics, "import_edits": edits})))
}

fn cmd_eval(
    dataset: &Path,
    strategy: &str,
    report: Option<&Path>,
    trace: Option<&Path>,
    config: &Config,
    verbose: bool,
) -> Outcome {
    let strategies: Vec<Strategy> = if strategy == "all" {
        Strategy::ALL.to_vec()
    } else {
        vec![strategy.parse().map_err(|e: String| Failure::new(1, e))?]
    };
    let data = load_dataset(dataset).map_err(|e| Failure::new(1, e.to_string()))?;
    for w in &data.warnings {
        eprintln!("warning: {w}");
    }
    if data.tasks.is_empty() {
        return Err(Failure::new(1, format!("no tasks in {}", dataset.display())));
    }
    let backend = backend(config)?;
    let settings = config.eval_settings();
    let runs: Vec<EvalRun> = strategies
        .iter()
        .map(|s| {
            let started = Instant::now();
            let run = run_eval(&data.tasks, *s, backend.as_ref(), &settings);
            let r = &run.report;
            eprintln!(
                "{}: n={} EM {:.2} CodeBLEU {:.2} SyntaxMatch {:.2} errors {}",
                r.strategy, r.n, r.em, r.codebleu, r.syntax_match, r.errors
            );
            if verbose {
                eprintln!("  {:?}", started.elapsed());
            }
            run
        })
        .collect();
    let reports: Vec<Value> = runs.iter().map(|r| json!(r.report)).collect();
    let doc = if reports.len() == 1 { reports[0].clone() } else { Value::Array(reports) };
    write_output(report, &pretty(&doc))?;
    if let Some(path) = trace {
        let lines: String = runs.iter().map(EvalRun::trace_jsonl).collect();
        write_output(Some(path), &lines)?;
    }
    Ok(())
}
