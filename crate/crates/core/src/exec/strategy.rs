use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, Decision, DecisionKind, Machine, Trace};
use crate::fraction::Fraction;
use crate::ir::{CutRef, NodeId};
use crate::valuation::{Interval, Valuation};

/// Everything a strategy may look at when asked for a decision.
pub struct DecisionContext<'a> {
    pub decision: &'a Decision,
    pub trace: &'a Trace,
    pub valuation: &'a Valuation,
    /// Cut points left to right, including Origin and End.
    pub points: &'a [(CutRef, Fraction)],
}

impl<'a> DecisionContext<'a> {
    pub fn from_machine(m: &'a Machine<'_>, valuation: &'a Valuation) -> Option<Self> {
        Some(DecisionContext {
            decision: m.decision()?,
            trace: m.trace(),
            valuation,
            points: m.points(),
        })
    }

    pub fn node(&self) -> NodeId {
        self.decision.node
    }

    pub fn agent(&self) -> usize {
        self.decision.agent
    }

    pub fn kind(&self) -> &DecisionKind {
        &self.decision.kind
    }

    pub fn position(&self, r: CutRef) -> Option<&Fraction> {
        self.points.iter().find(|(p, _)| *p == r).map(|(_, x)| x)
    }

    /// Position of the cut made at `node`, if it was made.
    pub fn cut_at(&self, node: NodeId) -> Option<&Fraction> {
        self.position(CutRef::MadeAt(node))
    }

    /// The current left-to-right partition of the cake.
    pub fn partition(&self) -> Vec<Interval> {
        self.points
            .windows(2)
            .map(|w| Interval::new(w[0].1.clone(), w[1].1.clone()))
            .collect()
    }

    /// Value of an interval to the acting agent.
    pub fn value(&self, iv: &Interval) -> Fraction {
        self.valuation.value_of(std::slice::from_ref(iv))
    }

    pub fn options(&self) -> &[Interval] {
        match self.kind() {
            DecisionKind::Cut { options } | DecisionKind::Pick { options } => options,
            DecisionKind::Branch { .. } => &[],
        }
    }

    /// Index of the most valuable offered piece; ties go to the lowest index.
    pub fn best_option(&self) -> usize {
        best_index(self.options().iter().map(|iv| self.value(iv)))
    }

    /// Cut inside option `piece` at the leftmost point splitting off
    /// `lambda` of its value.
    pub fn mark_action(&self, piece: usize, lambda: &Fraction) -> Result<Action, String> {
        let iv = self.options().get(piece).ok_or("no such cut option")?;
        let at = self
            .valuation
            .mark(&iv.lo, &iv.hi, lambda)
            .map_err(|e| e.to_string())?;
        Ok(Action::Cut { piece, at })
    }
}

/// Index of the first maximum.
pub fn best_index(values: impl IntoIterator<Item = Fraction>) -> usize {
    let mut best: Option<(usize, Fraction)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.as_ref().is_none_or(|(_, b)| &v > b) {
            best = Some((i, v));
        }
    }
    best.map_or(0, |(i, _)| i)
}

/// A pure, deterministic decision provider for one agent.
pub trait Strategy: Send + Sync {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String>;
}

/// Strategy from a closure.
pub struct FnStrategy<F>(pub F);

impl<F> Strategy for FnStrategy<F>
where
    F: Fn(&DecisionContext<'_>) -> Result<Action, String> + Send + Sync,
{
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String> {
        (self.0)(ctx)
    }
}

/// Pseudo-random play, determined by the seed, the node and the history.
/// Cuts land on one of five equally spaced points of a random option,
/// endpoints included.
#[derive(Clone, Debug)]
pub struct RandomStrategy {
    pub seed: u64,
}

impl RandomStrategy {
    pub fn new(seed: u64) -> Self {
        RandomStrategy { seed }
    }
}

impl Strategy for RandomStrategy {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String> {
        let mut h = DefaultHasher::new();
        self.seed.hash(&mut h);
        ctx.node().hash(&mut h);
        ctx.trace.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        Ok(match ctx.kind() {
            DecisionKind::Cut { options } => {
                let piece = rng.gen_range(0..options.len());
                let iv = &options[piece];
                let k = rng.gen_range(0..=4i64);
                let at = &iv.lo + iv.length() * Fraction::new(k, 4);
                Action::Cut { piece, at }
            }
            DecisionKind::Branch { count } => Action::Branch {
                child: rng.gen_range(0..*count),
            },
            DecisionKind::Pick { options } => Action::Pick {
                piece: rng.gen_range(0..options.len()),
            },
        })
    }
}

/// Replays recorded actions by node; fails at nodes it has no entry for.
#[derive(Clone, Debug, Default)]
pub struct ScriptedStrategy {
    actions: HashMap<NodeId, Action>,
}

impl ScriptedStrategy {
    pub fn new(actions: HashMap<NodeId, Action>) -> Self {
        ScriptedStrategy { actions }
    }

    /// Actions of `agent` in a recorded trace.
    pub fn from_trace(trace: &Trace, agent: usize) -> Self {
        ScriptedStrategy {
            actions: trace
                .events
                .iter()
                .filter(|e| e.agent() == agent)
                .map(|e| (e.node(), e.action()))
                .collect(),
        }
    }
}

impl Strategy for ScriptedStrategy {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String> {
        self.actions
            .get(&ctx.node())
            .cloned()
            .ok_or_else(|| format!("script has no action for node {}", ctx.node()))
    }
}
