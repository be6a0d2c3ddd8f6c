//! `respi`: run, step through, explore and check reversible session
//! programs.

use std::fs;
use std::io::{self, BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use rand::seq::SliceRandom;
use respi_core::generate::rng;
use respi_core::history::{rollback, RollbackTarget};
use respi_core::parser::{parse_program, parse_type_env};
use respi_core::props::{check_all, explore, STATE_CAP};
use respi_core::types::{typecheck_config, typecheck_process, ConfigVerdict, TypeEnv};
use respi_core::{
    build_graph, enumerate, enumerate_forward, print_configuration, Configuration, Engine, Mutation,
    Trace,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Apply seeded random forward steps until none is enabled.
    Run,
    /// Pick steps interactively by number.
    Step,
    /// Enumerate every state within `--max-steps` steps in either direction.
    ExploreExhaustive,
    /// Run the property suites over the states within `--bound` steps.
    CheckProps,
    /// Type check against the `--types` declarations.
    Typecheck,
    /// Start the HTTP explorer service.
    Serve,
}

#[derive(Debug, Parser)]
#[command(name = "respi", version, about = "Reversible session-based pi-calculus engine")]
struct Cli {
    /// Program or configuration (`.respi`).
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "run")]
    mode: Mode,
    /// Shared channel declarations (`.styp`).
    #[arg(long)]
    types: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_steps: usize,
    /// Trace length bound for the property suites.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    bound: u64,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Memory graph of the final configuration, in DOT.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: SocketAddr,
    /// Inject an engine fault, to check that the suites catch it.
    #[arg(long, hide = true)]
    mutate: Option<Mutation>,
}

/// A failure and the exit status it maps to.
enum Failure {
    /// Property or typing failure.
    Check(String),
    /// Bad usage, unreadable or unparsable input.
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(cli: &Cli) -> Result<Configuration, Failure> {
    let path = cli.input.as_deref().ok_or_else(|| Failure::Usage("missing input file".into()))?;
    let file = path.display().to_string();
    let parsed = parse_program(&read(path)?, Some(&file)).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(parsed.config)
}

fn load_types(cli: &Cli) -> Result<Option<TypeEnv>, Failure> {
    let Some(path) = cli.types.as_deref() else { return Ok(None) };
    let file = path.display().to_string();
    parse_type_env(&read(path)?, Some(&file)).map(Some).map_err(|e| Failure::Usage(e.to_string()))
}

fn engine(cli: &Cli, m: &Configuration) -> Engine {
    let mut e = Engine::seeded(cli.seed).with_mutation(cli.mutate);
    e.reserve(m);
    e
}

fn outputs(cli: &Cli, trace: &Trace, last: &Configuration) -> Outcome {
    if let Some(p) = &cli.trace_out {
        write(p, &trace.to_text())?;
    }
    if let Some(p) = &cli.graph_out {
        write(p, &build_graph(last).to_dot())?;
    }
    Ok(())
}

/// Rejects ill-typed input when declarations are given.
fn precheck(m: &Configuration, env: Option<&TypeEnv>) -> Outcome {
    match env.map(|env| typecheck_config(m, env)) {
        Some(ConfigVerdict::IllTyped { error }) => Err(Failure::Check(error.to_string())),
        _ => Ok(()),
    }
}

fn cmd_run(cli: &Cli) -> Outcome {
    let m = load(cli)?;
    precheck(&m, load_types(cli)?.as_ref())?;
    let mut engine = engine(cli, &m);
    let mut r = rng(cli.seed);
    let mut trace = Trace::new(m.clone());
    let mut cur = m;
    while trace.len() < cli.max_steps {
        let redexes = enumerate_forward(&cur);
        let Some(redex) = redexes.choose(&mut r) else { break };
        let (next, step) = engine.apply(&cur, redex).map_err(|e| Failure::Check(e.to_string()))?;
        trace.push(step);
        cur = next;
    }
    println!("{}", print_configuration(&cur));
    eprintln!("{} steps, {} memories", trace.len(), cur.memories.len());
    outputs(cli, &trace, &cur)
}

fn cmd_step(cli: &Cli) -> Outcome {
    let m = load(cli)?;
    let mut engine = engine(cli, &m);
    let mut trace = Trace::new(m.clone());
    let mut cur = m;
    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    let mut out = io::stdout().lock();
    loop {
        let redexes = enumerate(&cur);
        let _ = writeln!(out, "\n{}\n", print_configuration(&cur));
        for (i, r) in redexes.iter().enumerate() {
            let _ = writeln!(out, "  [{i}] {r}");
        }
        let _ = write!(out, "step number, `undo <m|t>`, or `q`> ");
        let _ = out.flush();
        let Some(Ok(line)) = lines.next() else { break };
        let line = line.trim();
        if line == "q" || line == "quit" {
            break;
        }
        let result = if let Some(target) = line.strip_prefix("undo ") {
            target
                .trim()
                .parse::<RollbackTarget>()
                .map_err(|e| e.to_string())
                .and_then(|t| rollback(&mut engine, &cur, t).map_err(|e| e.to_string()))
                .map(|(next, undo)| (next, undo.steps))
        } else {
            match line.parse::<usize>().ok().and_then(|i| redexes.get(i)) {
                Some(r) => engine.apply(&cur, r).map(|(next, s)| (next, vec![s])).map_err(|e| e.to_string()),
                None => Err(format!("no redex `{line}`")),
            }
        };
        match result {
            Ok((next, steps)) => {
                steps.into_iter().for_each(|s| trace.push(s));
                cur = next;
            }
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
            }
        }
    }
    outputs(cli, &trace, &cur)
}

fn cmd_explore(cli: &Cli) -> Outcome {
    let m = load(cli)?;
    let mut engine = engine(cli, &m);
    let (states, complete) = explore(&mut engine, &m, cli.max_steps, STATE_CAP);
    let terminal: Vec<&Configuration> = states.iter().filter(|s| enumerate_forward(s).is_empty()).collect();
    println!("states: {}", states.len());
    println!("forward-terminal states: {}", terminal.len());
    println!("exhausted: {complete}");
    for t in terminal {
        println!("---\n{}", print_configuration(t));
    }
    Ok(())
}

fn cmd_check_props(cli: &Cli) -> Outcome {
    let m = load(cli)?;
    let env = load_types(cli)?;
    let mut engine = engine(cli, &m);
    let reports = check_all(&mut engine, &m, env.as_ref(), cli.bound as usize);
    let mut failed = false;
    for r in &reports {
        println!("{} {}", if r.passed() { "ok" } else { "FAILED" }, r.summary());
        for c in r.counterexamples.iter().take(1) {
            failed = true;
            println!("counterexample: {}", c.description);
            for w in &c.witness {
                println!("{w}");
            }
        }
        failed |= !r.passed();
    }
    if failed {
        Err(Failure::Check("property check failed".into()))
    } else {
        Ok(())
    }
}

fn cmd_typecheck(cli: &Cli) -> Outcome {
    let m = load(cli)?;
    let env = load_types(cli)?.unwrap_or_default();
    if m.memories.is_empty() {
        for t in &m.threads {
            match typecheck_process(&t.body, &env) {
                Ok(typing) => println!("{}: {typing}", t.tag),
                Err(e) => println!("{}: {e}", t.tag),
            }
        }
    }
    match typecheck_config(&m, &env) {
        ConfigVerdict::WellTyped { typing } => {
            println!("well-typed: {typing}");
            Ok(())
        }
        ConfigVerdict::IllTyped { error } => Err(Failure::Check(format!("ill-typed: {error}"))),
        ConfigVerdict::OutOfClass { reason } => Err(Failure::Check(format!("out of class: {reason}"))),
    }
}

fn cmd_serve(cli: &Cli) -> Outcome {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Usage(e.to_string()))?;
    eprintln!("listening on http://{}", cli.listen);
    runtime.block_on(respi_service::serve(cli.listen)).map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.mode {
        Mode::Run => cmd_run(&cli),
        Mode::Step => cmd_step(&cli),
        Mode::ExploreExhaustive => cmd_explore(&cli),
        Mode::CheckProps => cmd_check_props(&cli),
        Mode::Typecheck => cmd_typecheck(&cli),
        Mode::Serve => cmd_serve(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Check(m) | Failure::Usage(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
