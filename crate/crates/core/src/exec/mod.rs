//! Protocol interpreter.

mod machine;
mod strategy;
mod trace;

use std::sync::Arc;

pub use machine::{Decision, DecisionKind, Machine, StateKey};
pub use strategy::{
    best_index, DecisionContext, FnStrategy, RandomStrategy, ScriptedStrategy, Strategy,
};
pub use trace::{Action, Event, Trace};

use crate::error::{DomainError, ExecError};
use crate::fraction::Fraction;
use crate::ir::Protocol;
use crate::valuation::{cross_values, Allocation, Valuation};

pub type Profile = Vec<Arc<dyn Strategy>>;

/// Drives an already-started machine to the end.
pub fn run_machine(
    mut m: Machine<'_>,
    strategies: &[Arc<dyn Strategy>],
    vals: &[Valuation],
) -> Result<(Trace, Allocation), ExecError> {
    while let Some(decision) = m.decision() {
        let agent = decision.agent;
        let node = decision.node;
        let ctx = DecisionContext::from_machine(&m, &vals[agent - 1]).expect("pending decision");
        let action = strategies[agent - 1]
            .decide(&ctx)
            .map_err(|reason| ExecError::Aborted {
                node,
                agent,
                reason,
            })?;
        m.apply(&action)?;
    }
    let alloc = m
        .allocation()
        .cloned()
        .expect("finished machine has an allocation");
    Ok((m.into_trace(), alloc))
}

/// Executes `p` with one strategy and one valuation per agent.
pub fn run(
    p: &Protocol,
    strategies: &[Arc<dyn Strategy>],
    vals: &[Valuation],
) -> Result<(Trace, Allocation), ExecError> {
    let n = p.agents();
    for got in [strategies.len(), vals.len()] {
        if got != n {
            return Err(DomainError::AgentMismatch { expected: n, got }.into());
        }
    }
    run_machine(Machine::new(p)?, strategies, vals)
}

/// Re-executes a recorded trace.
pub fn replay(p: &Protocol, trace: &Trace) -> Result<Allocation, ExecError> {
    let mut m = Machine::new(p)?;
    for (i, e) in trace.events.iter().enumerate() {
        let Some(d) = m.decision() else {
            return Err(ExecError::TraceMismatch(format!(
                "protocol finished before event {i}"
            )));
        };
        if d.node != e.node() || d.agent != e.agent() {
            return Err(ExecError::TraceMismatch(format!(
                "event {i} is for node {} agent {}, but the protocol asks node {} agent {}",
                e.node(),
                e.agent(),
                d.node,
                d.agent
            )));
        }
        m.apply(&e.action())
            .map_err(|err| ExecError::TraceMismatch(format!("event {i}: {err}")))?;
    }
    if let Some(d) = m.decision() {
        return Err(ExecError::TraceMismatch(format!(
            "trace ends while node {} still waits for agent {}",
            d.node, d.agent
        )));
    }
    if m.trace().cuts != trace.cuts {
        return Err(ExecError::TraceMismatch(
            "recorded cut list differs from the events".into(),
        ));
    }
    Ok(m.allocation().cloned().expect("finished"))
}

/// `V_i(X_j)` for every agent pair.
pub fn allocation_values(
    a: &Allocation,
    vals: &[Valuation],
) -> Result<Vec<Vec<Fraction>>, DomainError> {
    cross_values(a, vals)
}

/// A profile of equal random strategies with per-agent seeds.
pub fn random_profile(n: usize, seed: u64) -> Profile {
    (0..n)
        .map(|i| {
            Arc::new(RandomStrategy::new(
                seed.wrapping_mul(31).wrapping_add(i as u64),
            )) as Arc<dyn Strategy>
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraction::frac;
    use crate::ir::{BcBuilder, BcTree, CutRef, GccMode, GccNode, GccTree, NodeId, PieceRef};
    use crate::valuation::Interval;

    fn cut_and_choose() -> Protocol {
        let mut b = BcBuilder::new();
        let keep_left = b.leaf(vec![2, 1]);
        let keep_right = b.leaf(vec![1, 2]);
        let ch = b.choose(2, vec![keep_left, keep_right]);
        let root = b.cut(1, 1, ch);
        Protocol::Bc(b.finish(2, root))
    }

    fn honest() -> Profile {
        let cutter = FnStrategy(|ctx: &DecisionContext<'_>| ctx.mark_action(0, &frac(1, 2)));
        let chooser = FnStrategy(|ctx: &DecisionContext<'_>| {
            let parts = ctx.partition();
            let child = best_index(parts.iter().map(|iv| ctx.value(iv)));
            Ok(Action::Branch { child })
        });
        vec![Arc::new(cutter), Arc::new(chooser)]
    }

    #[test]
    fn trivial_protocol_gives_all_to_agent_one() {
        let p = Protocol::Bc(BcTree::trivial(1));
        let (trace, alloc) = run(&p, &random_profile(1, 0), &[Valuation::uniform()]).unwrap();
        assert!(trace.events.is_empty());
        assert_eq!(alloc.piece(1), &[Interval::unit()]);
    }

    #[test]
    fn cut_and_choose_is_proportional() {
        let v1 = Valuation::uniform();
        let v2 = Valuation::new(
            vec![frac(0, 1), frac(1, 2), frac(1, 1)],
            vec![frac(2, 1), frac(0, 1)],
        )
        .unwrap();
        let vals = vec![v1, v2];
        let (trace, alloc) = run(&cut_and_choose(), &honest(), &vals).unwrap();
        assert_eq!(trace.cuts, vec![frac(1, 2)]);
        let m = allocation_values(&alloc, &vals).unwrap();
        assert!(m[0][0] >= frac(1, 2));
        assert!(m[1][1] >= frac(1, 2));
        assert_eq!(replay(&cut_and_choose(), &trace).unwrap(), alloc);
    }

    #[test]
    fn out_of_interval_cut_is_an_error() {
        let bad = FnStrategy(|_: &DecisionContext<'_>| {
            Ok(Action::Cut {
                piece: 0,
                at: frac(3, 2),
            })
        });
        let profile: Profile = vec![Arc::new(bad), Arc::new(RandomStrategy::new(1))];
        let err = run(
            &cut_and_choose(),
            &profile,
            &[Valuation::uniform(), Valuation::uniform()],
        )
        .unwrap_err();
        assert!(matches!(err, ExecError::IllegalAction { agent: 1, .. }));
    }

    #[test]
    fn truncated_trace_mismatches() {
        let p = cut_and_choose();
        let (mut trace, _) =
            run(&p, &honest(), &[Valuation::uniform(), Valuation::uniform()]).unwrap();
        trace.events.pop();
        assert!(matches!(
            replay(&p, &trace),
            Err(ExecError::TraceMismatch(_))
        ));
    }

    #[test]
    fn end_cuts_make_empty_pieces() {
        let mut b = BcBuilder::new();
        let leaf = b.leaf(vec![1, 2, 1]);
        let c2 = b.cut(1, 2, leaf);
        let root = b.cut(1, 1, c2);
        let p = Protocol::Bc(b.finish(2, root));
        let at_one = FnStrategy(|ctx: &DecisionContext<'_>| {
            Ok(Action::Cut {
                piece: 0,
                at: ctx.options()[0].hi.clone(),
            })
        });
        let profile: Profile = vec![Arc::new(at_one), Arc::new(RandomStrategy::new(0))];
        let (trace, alloc) =
            run(&p, &profile, &[Valuation::uniform(), Valuation::uniform()]).unwrap();
        assert_eq!(trace.cuts, vec![frac(1, 1), frac(1, 1)]);
        assert_eq!(alloc.canonical().piece(2), &[] as &[Interval]);
        alloc.check().unwrap();
    }

    #[test]
    fn gcc_leaf_with_remainder_fails() {
        let g = GccTree {
            agents: 1,
            mode: GccMode::Restricted,
            nodes: vec![
                GccNode::Cut {
                    agent: 1,
                    pieces: vec![PieceRef::new(CutRef::Origin, CutRef::End)],
                    child: NodeId(1),
                },
                GccNode::Choose {
                    agent: 1,
                    pieces: vec![PieceRef::new(CutRef::Origin, CutRef::MadeAt(NodeId(0)))],
                    child: NodeId(2),
                },
                GccNode::Leaf,
            ],
            root: NodeId(0),
        };
        let p = Protocol::Gcc(g);
        let half = FnStrategy(|ctx: &DecisionContext<'_>| match ctx.kind() {
            DecisionKind::Cut { .. } => Ok(Action::Cut {
                piece: 0,
                at: frac(1, 2),
            }),
            _ => Ok(Action::Pick { piece: 0 }),
        });
        let err = run(
            &p,
            &[Arc::new(half) as Arc<dyn Strategy>],
            &[Valuation::uniform()],
        )
        .unwrap_err();
        assert!(matches!(err, ExecError::Unallocated { .. }));
    }
}
