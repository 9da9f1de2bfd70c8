use std::sync::Arc;

use crate::exec::{
    Action, DecisionContext, DecisionKind, Event, Machine, Profile, Strategy, Trace,
};
use crate::ir::{NodeId, Protocol};

/// Conversion-specific knowledge for mimicking source play on the target.
pub(crate) trait Bridge: Send + Sync {
    fn source(&self) -> &Protocol;

    /// Source events leading up to the source decision imitated at target
    /// node `at`, given the target history; `None` when the decision at `at`
    /// has no bearing on the outcome.
    fn source_prefix(&self, at: NodeId, target: &Trace) -> Option<Vec<Event>>;

    /// Turns the source strategy's answer into the target action.
    fn translate(
        &self,
        at: NodeId,
        target: &DecisionContext<'_>,
        source: &Machine<'_>,
        action: Action,
    ) -> Action;
}

/// Maps strategies for a conversion's source protocol to strategies for its
/// output so that both executions hand out identical allocations.
#[derive(Clone)]
pub struct Transporter {
    bridge: Arc<dyn Bridge>,
}

impl std::fmt::Debug for Transporter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Transporter")
    }
}

impl Transporter {
    pub(crate) fn new(bridge: impl Bridge + 'static) -> Self {
        Transporter {
            bridge: Arc::new(bridge),
        }
    }

    pub fn transport(&self, strategy: Arc<dyn Strategy>) -> Arc<dyn Strategy> {
        Arc::new(Transported {
            bridge: self.bridge.clone(),
            inner: strategy,
        })
    }

    pub fn transport_profile(&self, profile: &[Arc<dyn Strategy>]) -> Profile {
        profile.iter().map(|s| self.transport(s.clone())).collect()
    }
}

struct Transported {
    bridge: Arc<dyn Bridge>,
    inner: Arc<dyn Strategy>,
}

/// Legal placeholder for decisions that do not matter.
pub(crate) fn default_action(kind: &DecisionKind) -> Action {
    match kind {
        DecisionKind::Cut { options } => Action::Cut {
            piece: 0,
            at: options[0].lo.clone(),
        },
        DecisionKind::Branch { .. } => Action::Branch { child: 0 },
        DecisionKind::Pick { .. } => Action::Pick { piece: 0 },
    }
}

impl Strategy for Transported {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String> {
        let at = ctx.node();
        let Some(prefix) = self.bridge.source_prefix(at, ctx.trace) else {
            return Ok(default_action(ctx.kind()));
        };
        let mut m = Machine::new_unchecked(self.bridge.source()).map_err(|e| e.to_string())?;
        for e in &prefix {
            m.apply(&e.action())
                .map_err(|e| format!("source replay failed: {e}"))?;
        }
        let source_ctx = DecisionContext::from_machine(&m, ctx.valuation)
            .ok_or("source protocol finished early")?;
        let action = self.inner.decide(&source_ctx)?;
        Ok(self.bridge.translate(at, ctx, &m, action))
    }
}

/// Source events for a target trace whose decisions map one-to-one onto
/// source decisions in the same order; `map` gives the source node for a
/// target event, `None` to drop it.
pub(crate) fn mapped_events(target: &Trace, map: impl Fn(&Event) -> Option<Event>) -> Vec<Event> {
    target.events.iter().filter_map(map).collect()
}
