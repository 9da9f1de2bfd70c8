use std::collections::BTreeMap;
use std::fs;
use std::io::{stderr, stdin};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use cake_core::exec::{
    replay, run, DecisionContext, Machine, RandomStrategy, ScriptedStrategy, Strategy, Trace,
};
use cake_core::library::{generate, StrategyBundle, GENERATORS};
use cake_core::valuation::{cross_values, envy};
use cake_core::{Allocation, Fraction, Protocol, Valuation};
use clap::Args;
use serde::Serialize;

use crate::human::{EndOfInput, Prompter};
use crate::{io, usage};

#[derive(Args)]
pub struct RunArgs {
    /// Protocol file (`.cake` or `.json`).
    protocol: String,
    /// JSON array of valuations (default: uniform).
    #[arg(long)]
    valuations: Option<String>,
    /// `KIND`, `AGENT=KIND` or `human:AGENT`; KIND is `intended`, `random`,
    /// `human` or `script:TRACE.json`. A bare KIND covers unassigned agents.
    #[arg(long = "strategy", short = 's')]
    strategies: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Save the trace here.
    #[arg(short, long)]
    output: Option<String>,
    /// Re-execute a saved trace instead of asking strategies.
    #[arg(long, conflicts_with_all = ["strategies", "seed"])]
    replay: Option<String>,
}

enum Source {
    Auto(Arc<dyn Strategy>),
    Human,
}

/// The bundle of the generator that produces exactly `p`, if any.
pub fn intended_bundle(p: &Protocol) -> Option<StrategyBundle> {
    GENERATORS.iter().find_map(|name| {
        let g = generate(name, Some(p.agents()), p.model()).ok()?;
        g.protocol.structurally_eq(p).then_some(g.bundle)
    })
}

/// Cut points of the intended run of `p`, when `p` is a generated protocol.
pub fn intended_marks(p: &Protocol, vals: &[Valuation]) -> Option<Vec<Fraction>> {
    let bundle = intended_bundle(p)?;
    run(p, &bundle.profile(), vals).ok().map(|(t, _)| t.cuts)
}

fn parse_kind(kind: &str, agent: usize, p: &Protocol, seed: u64) -> Result<Source> {
    Ok(match kind {
        "human" => Source::Human,
        "random" => Source::Auto(Arc::new(RandomStrategy::new(
            seed.wrapping_mul(31).wrapping_add(agent as u64 - 1),
        ))),
        "intended" => {
            let bundle = intended_bundle(p).ok_or_else(|| {
                anyhow!("no generator produces this protocol, so it has no intended play")
            })?;
            Source::Auto(bundle.strategy())
        }
        _ => match kind.strip_prefix("script:") {
            Some(path) => {
                let trace: Trace = serde_json::from_str(&io::read_input(path)?)
                    .with_context(|| format!("{path}: not a trace"))?;
                Source::Auto(Arc::new(ScriptedStrategy::from_trace(&trace, agent)))
            }
            None => return Err(usage(format!("unknown strategy `{kind}`"))),
        },
    })
}

fn assign(specs: &[String], p: &Protocol, seed: u64) -> Result<Vec<Source>> {
    let n = p.agents();
    let mut named: BTreeMap<usize, &str> = BTreeMap::new();
    let mut fallback: Option<&str> = None;
    for spec in specs {
        let (agent, kind) = if let Some(a) = spec.strip_prefix("human:") {
            (Some(a), "human")
        } else if let Some((a, k)) = spec.split_once('=') {
            (Some(a), k)
        } else {
            (None, spec.as_str())
        };
        match agent {
            Some(a) => {
                let i: usize = a
                    .parse()
                    .ok()
                    .filter(|i| (1..=n).contains(i))
                    .ok_or_else(|| usage(format!("`{a}` is not an agent in 1..={n}")))?;
                if named.insert(i, kind).is_some() {
                    return Err(usage(format!("agent {i} has two strategies")));
                }
            }
            None if fallback.is_some() => {
                return Err(usage("more than one default strategy"));
            }
            None => fallback = Some(kind),
        }
    }
    (1..=n)
        .map(|i| {
            let kind = named
                .get(&i)
                .copied()
                .or(fallback)
                .ok_or_else(|| usage(format!("agent {i} has no strategy")))?;
            parse_kind(kind, i, p, seed)
        })
        .collect()
}

/// Runs the protocol, prompting on stdin for human agents. On end of input
/// the partial trace is returned as the error value.
fn drive(
    p: &Protocol,
    sources: &[Source],
    vals: &[Valuation],
) -> Result<std::result::Result<(Trace, Allocation), Trace>> {
    let mut m = Machine::new(p)?;
    let mut prompter = Prompter::new(stdin().lock(), stderr());
    while let Some(d) = m.decision() {
        let (agent, node) = (d.agent, d.node);
        let ctx = DecisionContext::from_machine(&m, &vals[agent - 1]).expect("pending decision");
        let action = match &sources[agent - 1] {
            Source::Human => match prompter.ask(&ctx) {
                Ok(a) => a,
                Err(EndOfInput) => return Ok(Err(m.into_trace())),
            },
            Source::Auto(s) => s
                .decide(&ctx)
                .map_err(|why| anyhow!("agent {agent} at node {node}: {why}"))?,
        };
        m.apply(&action)?;
    }
    let alloc = m.allocation().cloned().expect("finished");
    Ok(Ok((m.into_trace(), alloc)))
}

#[derive(Serialize)]
struct RunReport {
    model: &'static str,
    allocation: Allocation,
    /// `values[i][j]` is agent `i+1`'s value for agent `j+1`'s piece.
    values: Vec<Vec<Fraction>>,
    envy: Vec<Vec<Fraction>>,
    envy_free: bool,
    trace: Trace,
}

fn print_human(r: &RunReport) {
    for (i, piece) in r.allocation.pieces.iter().enumerate() {
        let ivs: Vec<String> = piece
            .iter()
            .map(|iv| format!("[{}, {}]", iv.lo, iv.hi))
            .collect();
        let shown = if ivs.is_empty() {
            "nothing".into()
        } else {
            ivs.join(" ")
        };
        println!(
            "agent {}: {shown}, value {}",
            i + 1,
            r.values[i][i].display_with_decimal()
        );
    }
    for (i, row) in r.envy.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if !e.is_zero() {
                println!(
                    "agent {} envies agent {} by {}",
                    i + 1,
                    j + 1,
                    e.display_with_decimal()
                );
            }
        }
    }
    println!("envy-free: {}", if r.envy_free { "yes" } else { "no" });
}

pub fn cmd_run(args: &RunArgs, json: bool) -> Result<bool> {
    let p = io::load_protocol(&args.protocol)?;
    let vals = io::load_valuations(args.valuations.as_deref(), p.agents())?;
    let (trace, alloc) = match &args.replay {
        Some(path) => {
            let trace: Trace = serde_json::from_str(&io::read_input(path)?)
                .with_context(|| format!("{path}: not a trace"))?;
            let alloc = replay(&p, &trace)?;
            (trace, alloc)
        }
        None => {
            let sources = assign(&args.strategies, &p, args.seed)?;
            match drive(&p, &sources, &vals)? {
                Ok(done) => done,
                Err(partial) => {
                    let path = args.output.as_deref().unwrap_or("cake-partial-trace.json");
                    fs::write(path, partial.to_json())
                        .with_context(|| format!("writing {path}"))?;
                    bail!("input ended; partial trace saved to {path}");
                }
            }
        }
    };
    if let Some(path) = &args.output {
        fs::write(path, trace.to_json()).with_context(|| format!("writing {path}"))?;
    }
    let m = envy(&alloc, &vals)?;
    let report = RunReport {
        model: p.model(),
        values: cross_values(&alloc, &vals)?,
        envy_free: m.is_envy_free(),
        envy: m.0,
        allocation: alloc,
        trace,
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_human(&report);
    }
    Ok(true)
}
