use serde::{Deserialize, Serialize};

use crate::fraction::Fraction;
use crate::ir::NodeId;

/// What an agent does at a decision node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Cut at `at` inside option `piece` (always 0 outside GCC).
    Cut { piece: usize, at: Fraction },
    /// Descend into child `child` (0-based) of a BC choose node.
    Branch { child: usize },
    /// Take entry `piece` (0-based) of a GCC choose node's set.
    Pick { piece: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    CutMade {
        node: NodeId,
        agent: usize,
        piece: usize,
        position: Fraction,
    },
    BranchChosen {
        node: NodeId,
        agent: usize,
        child: usize,
    },
    PieceChosen {
        node: NodeId,
        agent: usize,
        piece: usize,
    },
}

impl Event {
    pub fn node(&self) -> NodeId {
        match self {
            Event::CutMade { node, .. }
            | Event::BranchChosen { node, .. }
            | Event::PieceChosen { node, .. } => *node,
        }
    }

    pub fn agent(&self) -> usize {
        match self {
            Event::CutMade { agent, .. }
            | Event::BranchChosen { agent, .. }
            | Event::PieceChosen { agent, .. } => *agent,
        }
    }

    pub fn action(&self) -> Action {
        match self {
            Event::CutMade {
                piece, position, ..
            } => Action::Cut {
                piece: *piece,
                at: position.clone(),
            },
            Event::BranchChosen { child, .. } => Action::Branch { child: *child },
            Event::PieceChosen { piece, .. } => Action::Pick { piece: *piece },
        }
    }

    pub fn from_action(node: NodeId, agent: usize, action: &Action) -> Event {
        match action {
            Action::Cut { piece, at } => Event::CutMade {
                node,
                agent,
                piece: *piece,
                position: at.clone(),
            },
            Action::Branch { child } => Event::BranchChosen {
                node,
                agent,
                child: *child,
            },
            Action::Pick { piece } => Event::PieceChosen {
                node,
                agent,
                piece: *piece,
            },
        }
    }

    pub fn with_node(&self, node: NodeId) -> Event {
        let mut e = self.clone();
        match &mut e {
            Event::CutMade { node: n, .. }
            | Event::BranchChosen { node: n, .. }
            | Event::PieceChosen { node: n, .. } => *n = node,
        }
        e
    }
}

/// Execution history: events along one root-to-leaf path plus the cut
/// positions in creation order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<Event>,
    pub cuts: Vec<Fraction>,
}

impl Trace {
    pub fn push(&mut self, e: Event) {
        if let Event::CutMade { position, .. } = &e {
            self.cuts.push(position.clone());
        }
        self.events.push(e);
    }

    pub fn event_at(&self, node: NodeId) -> Option<&Event> {
        self.events.iter().find(|e| e.node() == node)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace JSON is always serialisable");
        s.push('\n');
        s
    }
}
