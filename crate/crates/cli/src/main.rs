mod human;
mod io;
mod run;

use std::fmt;
use std::process::ExitCode;

use anyhow::{bail, Result};
use cake_core::ir::{stats, GccMode};
use cake_core::library::{generate, GENERATORS};
use cake_core::oracle::{build_grid, check_equiv, Notion, Oracle};
use cake_core::transform::*;
use cake_core::{dsl, Protocol};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Bad flags or arguments; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "cake",
    version,
    about = "Build, convert, run and compare cake-cutting protocols"
)]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Node budget for conversions and the oracle (default: $CAKE_BUDGET).
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Bc,
    Extbc,
    Dag,
    Gcc,
}

impl ModelArg {
    fn name(self) -> &'static str {
        match self {
            ModelArg::Bc => "bc",
            ModelArg::Extbc => "extbc",
            ModelArg::Dag => "dag",
            ModelArg::Gcc => "gcc",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Restricted,
    Extensive,
}

#[derive(Clone, Copy, ValueEnum)]
enum PassArg {
    CbcExt,
    CbcBc,
    Intermediate,
}

#[derive(Clone, Copy, ValueEnum)]
enum NotionArg {
    Value,
    Total,
    Pairwise,
    Strong,
}

#[derive(Args)]
struct Io {
    /// Protocol file (`.cake` or `.json`); `-` reads stdin.
    #[arg(default_value = "-")]
    input: String,
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a protocol between models.
    Convert {
        #[arg(long, value_enum)]
        from: ModelArg,
        #[arg(long, value_enum)]
        to: ModelArg,
        /// Required GCC mode of the output.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        io: Io,
    },
    /// Apply a normalization pass.
    Normalize {
        #[arg(long, value_enum)]
        pass: PassArg,
        #[command(flatten)]
        io: Io,
    },
    /// Execute a protocol.
    Run(run::RunArgs),
    /// Compare the guarantees of two protocols on a grid.
    Verify {
        left: String,
        right: String,
        #[arg(long, value_enum, default_value = "strong")]
        notion: NotionArg,
        #[arg(long, default_value_t = 4)]
        grid_q: u32,
        /// JSON array of valuations (default: uniform).
        #[arg(long)]
        valuations: Option<String>,
        /// Seeded random bound vectors per agent for `strong`.
        #[arg(long, default_value_t = 32)]
        random_bounds: usize,
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Print size figures.
    Stats {
        #[arg(default_value = "-")]
        input: String,
    },
    /// Generate a classic protocol.
    Gen {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(GENERATORS))]
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "gcc")]
        model: ModelArg,
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Print protocols in canonical DSL form.
    Fmt {
        #[arg(default_value = "-")]
        inputs: Vec<String>,
        /// Fail if any input is not already canonical.
        #[arg(long)]
        check: bool,
    },
}

/// Flag, then `CAKE_BUDGET`, then `default`.
pub fn budget(flag: Option<u64>, default: u64) -> Result<u64> {
    let b = match flag {
        Some(b) => b,
        None => match std::env::var("CAKE_BUDGET") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| usage(format!("CAKE_BUDGET `{s}` is not a number")))?,
            Err(_) => default,
        },
    };
    if b == 0 {
        return Err(usage("budget must be positive"));
    }
    Ok(b)
}

fn transform_budget(flag: Option<u64>) -> Result<usize> {
    Ok(budget(flag, DEFAULT_BUDGET as u64)?
        .try_into()
        .unwrap_or(usize::MAX))
}

fn to_bc(p: Protocol, budget: usize) -> Result<Protocol> {
    Ok(match p {
        Protocol::Bc(_) => p,
        Protocol::Dag(d) => Protocol::Bc(dag_to_tree_with_budget(&d, budget)?.output),
        Protocol::Ext(t) => Protocol::Bc(extended_to_bc_with_budget(&t, budget)?.output),
        Protocol::Gcc(g) => Protocol::Bc(gcc_to_bc_with_budget(&g, budget)?.0),
    })
}

fn convert(p: Protocol, to: ModelArg, budget: usize) -> Result<Protocol> {
    if p.model() == to.name() {
        return Ok(p);
    }
    let Protocol::Bc(t) = to_bc(p, budget)? else {
        unreachable!()
    };
    Ok(match to {
        ModelArg::Bc => Protocol::Bc(t),
        ModelArg::Dag => Protocol::Dag(t.into_dag()),
        ModelArg::Extbc => Protocol::Ext(bc_to_extended(&t)),
        ModelArg::Gcc => Protocol::Gcc(bc_to_gcc(&t)?),
    })
}

fn expect_model(p: &Protocol, model: &str, what: &str) -> Result<()> {
    if p.model() != model {
        bail!("{what} takes a {model} protocol, got {}", p.model());
    }
    Ok(())
}

fn cmd_convert(
    cli: &Cli,
    from: ModelArg,
    to: ModelArg,
    mode: Option<ModeArg>,
    io: &Io,
) -> Result<()> {
    let p = io::load_protocol(&io.input)?;
    expect_model(&p, from.name(), "--from")?;
    if mode.is_some() && to != ModelArg::Gcc {
        return Err(usage("--mode only applies with --to gcc"));
    }
    let out = convert(p, to, transform_budget(cli.budget)?)?;
    if let (Protocol::Gcc(g), Some(mode)) = (&out, mode) {
        let want = match mode {
            ModeArg::Restricted => GccMode::Restricted,
            ModeArg::Extensive => GccMode::Extensive,
        };
        if g.mode != want {
            bail!("the converted protocol is in {:?} mode", g.mode);
        }
    }
    io::emit(
        &io::render_protocol(&out, cli.json, io.output.as_deref()),
        io.output.as_deref(),
    )
}

fn cmd_normalize(cli: &Cli, pass: PassArg, io: &Io) -> Result<()> {
    let p = io::load_protocol(&io.input)?;
    let budget = transform_budget(cli.budget)?;
    let out = match (pass, &p) {
        (PassArg::CbcExt, Protocol::Ext(t)) => Protocol::Ext(cuts_before_choices_ext(t)?.output),
        (PassArg::CbcBc, Protocol::Bc(t)) => {
            Protocol::Bc(cuts_before_choices_bc_with_budget(t, budget)?.output)
        }
        (PassArg::Intermediate, Protocol::Bc(t)) => {
            Protocol::Bc(bc_intermediate_form_with_budget(t, budget)?.0)
        }
        (PassArg::CbcExt, _) => return expect_model(&p, "extbc", "cbc-ext"),
        _ => return expect_model(&p, "bc", "this pass"),
    };
    io::emit(
        &io::render_protocol(&out, cli.json, io.output.as_deref()),
        io.output.as_deref(),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    cli: &Cli,
    left: &str,
    right: &str,
    notion: NotionArg,
    grid_q: u32,
    valuations: Option<&str>,
    random_bounds: usize,
    output: Option<&str>,
) -> Result<bool> {
    let p1 = io::load_protocol(left)?;
    let p2 = io::load_protocol(right)?;
    if p1.agents() != p2.agents() {
        bail!(
            "{left} has {} agents, {right} has {}",
            p1.agents(),
            p2.agents()
        );
    }
    let vals = io::load_valuations(valuations, p1.agents())?;
    if grid_q < 2 {
        return Err(usage("--grid-q must be at least 2"));
    }
    let mut grid = build_grid(&vals, grid_q)?;
    for p in [&p1, &p2] {
        if let Some(marks) = run::intended_marks(p, &vals) {
            grid = grid.with_points(marks)?;
        }
    }
    let budget = budget(cli.budget, cake_core::oracle::DEFAULT_BUDGET)?;
    let oracle = Oracle::new(&grid, &vals).with_budget(budget);
    let notion = match notion {
        NotionArg::Value => Notion::Value,
        NotionArg::Total => Notion::Total,
        NotionArg::Pairwise => Notion::Pairwise,
        NotionArg::Strong => Notion::Strong,
    };
    let report = check_equiv(&p1, &p2, notion, &oracle, random_bounds)?;
    let mut json = report.to_json();
    json.push('\n');
    if let Some(path) = output {
        io::emit(&json, Some(path))?;
    }
    if cli.json {
        print!("{json}");
    } else {
        println!(
            "{}: {} under {notion:?} ({} queries, grid of {} points)",
            if report.equivalent {
                "equivalent"
            } else {
                "not equivalent"
            },
            left.to_string() + " vs " + right,
            report.checked,
            report.grid.len()
        );
        let grid: Vec<String> = report.grid.iter().map(|f| f.to_string()).collect();
        println!("grid: {}", grid.join(" "));
        for d in &report.disagreements {
            println!(
                "  {}: {} vs {}",
                serde_json::to_string(&d.query)?,
                d.left,
                d.right
            );
        }
    }
    Ok(report.equivalent)
}

fn cmd_stats(cli: &Cli, input: &str) -> Result<()> {
    let s = stats(&io::load_protocol(input)?);
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("model: {}", s.model);
        println!("agents: {}", s.agents);
        println!("nodes: {}", s.nodes);
        println!("cuts: {}", s.cuts);
        println!("chooses: {}", s.chooses);
        println!("if-else: {}", s.if_else);
        println!("leaves: {}", s.leaves);
        println!("depth: {}", s.depth);
        println!("max branching: {}", s.max_branching);
    }
    Ok(())
}

fn cmd_gen(
    cli: &Cli,
    name: &str,
    n: Option<usize>,
    model: ModelArg,
    output: Option<&str>,
) -> Result<()> {
    let g = generate(name, n, model.name())?;
    io::emit(&io::render_protocol(&g.protocol, cli.json, output), output)
}

#[derive(Serialize)]
struct FmtResult<'a> {
    input: &'a str,
    canonical: bool,
    text: String,
}

fn cmd_fmt(cli: &Cli, inputs: &[String], check: bool) -> Result<bool> {
    let mut all_canonical = true;
    let mut results = Vec::new();
    for input in inputs {
        let text = io::read_input(input)?;
        let p = io::parse_protocol(input, &text)?;
        let out = dsl::print(&p);
        let canonical = out == text;
        all_canonical &= canonical;
        if cli.json {
            results.push(FmtResult {
                input,
                canonical,
                text: out,
            });
        } else if check {
            if !canonical {
                println!("{input}: not canonical");
            }
        } else {
            print!("{out}");
        }
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
    }
    Ok(!check || all_canonical)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    budget(cli.budget, 1)?;
    match &cli.command {
        Command::Convert { from, to, mode, io } => cmd_convert(cli, *from, *to, *mode, io)?,
        Command::Normalize { pass, io } => cmd_normalize(cli, *pass, io)?,
        Command::Run(args) => return run::cmd_run(args, cli.json),
        Command::Verify {
            left,
            right,
            notion,
            grid_q,
            valuations,
            random_bounds,
            output,
        } => {
            return cmd_verify(
                cli,
                left,
                right,
                *notion,
                *grid_q,
                valuations.as_deref(),
                *random_bounds,
                output.as_deref(),
            )
        }
        Command::Stats { input } => cmd_stats(cli, input)?,
        Command::Gen {
            name,
            n,
            model,
            output,
        } => cmd_gen(cli, name, *n, *model, output.as_deref())?,
        Command::Fmt { inputs, check } => return cmd_fmt(cli, inputs, *check),
    }
    Ok(true)
}

fn main() -> ExitCode {
    // die quietly when stdout is a closed pipe, like other filters
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run `cake --help` for usage");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
