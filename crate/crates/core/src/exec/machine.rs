use std::collections::BTreeMap;

use super::{Action, Event, Trace};
use crate::error::ExecError;
use crate::fraction::Fraction;
use crate::ir::{BcNode, Condition, CutRef, ExtNode, GccNode, NodeId, Protocol};
use crate::valuation::{Allocation, Interval};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DecisionKind {
    /// Cut somewhere inside one of the offered intervals.
    Cut { options: Vec<Interval> },
    /// Pick one of `count` children.
    Branch { count: usize },
    /// Take one of the offered pieces.
    Pick { options: Vec<Interval> },
}

impl DecisionKind {
    pub fn is_cut(&self) -> bool {
        matches!(self, DecisionKind::Cut { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decision {
    pub node: NodeId,
    pub agent: usize,
    pub kind: DecisionKind,
}

/// Memo key describing everything the rest of an execution depends on.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey {
    pub node: Option<NodeId>,
    pub points: Vec<(CutRef, Fraction)>,
    pub chosen: Vec<(NodeId, usize)>,
}

/// Step-by-step interpreter for any protocol form.
///
/// Cut points are kept in a left-to-right list. A new cut made between
/// references `l` and `r` is inserted after `l`, after every point between
/// `l` and `r` at or left of the new position, and before `r`, so coincident
/// cuts keep a structural order and BC piece indices stay stable.
#[derive(Clone, Debug)]
pub struct Machine<'p> {
    protocol: &'p Protocol,
    at: Option<NodeId>,
    points: Vec<(CutRef, Fraction)>,
    chosen: BTreeMap<NodeId, usize>,
    alloc: Allocation,
    trace: Trace,
    pending: Option<Decision>,
    result: Option<Allocation>,
}

enum View<'a> {
    Cut {
        agent: usize,
        entries: Vec<(CutRef, CutRef)>,
        child: NodeId,
    },
    Branch {
        agent: usize,
        children: &'a [NodeId],
    },
    Pick {
        agent: usize,
        entries: Vec<(CutRef, CutRef)>,
        child: NodeId,
    },
    IfElse(&'a [crate::ir::Branch]),
    Assign(Vec<(CutRef, CutRef, usize)>),
    GccLeaf,
}

impl<'p> Machine<'p> {
    /// Validates `p` and advances to the first decision.
    pub fn new(p: &'p Protocol) -> Result<Self, ExecError> {
        let report = p.validate();
        if !report.is_valid() {
            return Err(ExecError::InvalidProtocol(report.summary()));
        }
        Self::new_unchecked(p)
    }

    /// As `new`, trusting that `p` is valid.
    pub fn new_unchecked(p: &'p Protocol) -> Result<Self, ExecError> {
        let root = match p {
            Protocol::Bc(t) => t.root,
            Protocol::Dag(d) => d.root,
            Protocol::Ext(t) => t.root,
            Protocol::Gcc(g) => g.root,
        };
        let mut m = Machine {
            protocol: p,
            at: Some(root),
            points: vec![
                (CutRef::Origin, Fraction::zero()),
                (CutRef::End, Fraction::one()),
            ],
            chosen: BTreeMap::new(),
            alloc: Allocation::empty(p.agents()),
            trace: Trace::default(),
            pending: None,
            result: None,
        };
        m.settle()?;
        Ok(m)
    }

    pub fn protocol(&self) -> &'p Protocol {
        self.protocol
    }

    pub fn decision(&self) -> Option<&Decision> {
        self.pending.as_ref()
    }

    pub fn allocation(&self) -> Option<&Allocation> {
        self.result.as_ref()
    }

    /// Pieces handed out so far; final only once the machine is done.
    pub fn allocation_so_far(&self) -> &Allocation {
        &self.alloc
    }

    pub fn is_done(&self) -> bool {
        self.result.is_some()
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Cut points left to right, including Origin and End.
    pub fn points(&self) -> &[(CutRef, Fraction)] {
        &self.points
    }

    pub fn position(&self, r: CutRef) -> Option<&Fraction> {
        self.points.iter().find(|(p, _)| *p == r).map(|(_, x)| x)
    }

    pub fn state_key(&self) -> StateKey {
        StateKey {
            node: self.at,
            points: self.points.clone(),
            chosen: self.chosen.iter().map(|(k, v)| (*k, *v)).collect(),
        }
    }

    fn index_of(&self, r: CutRef) -> Option<usize> {
        self.points.iter().position(|(p, _)| *p == r)
    }

    fn interval(&self, l: CutRef, r: CutRef) -> Result<Interval, ExecError> {
        let get = |x: CutRef| {
            self.position(x).cloned().ok_or_else(|| {
                ExecError::InvalidProtocol(format!("reference to {x}, which has not been cut"))
            })
        };
        Ok(Interval::new(get(l)?, get(r)?))
    }

    fn view(&self, id: NodeId) -> View<'p> {
        match self.protocol {
            Protocol::Bc(t) => self.bc_view(t.node(id)),
            Protocol::Dag(d) => self.bc_view(d.node(id)),
            Protocol::Ext(t) => match t.node(id) {
                ExtNode::Cut {
                    agent,
                    left,
                    right,
                    child,
                } => View::Cut {
                    agent: *agent,
                    entries: vec![(*left, *right)],
                    child: *child,
                },
                ExtNode::Choose { agent, children } => View::Branch {
                    agent: *agent,
                    children,
                },
                ExtNode::Leaf { segments } => View::Assign(
                    segments
                        .iter()
                        .map(|s| (s.left, s.right, s.agent))
                        .collect(),
                ),
            },
            Protocol::Gcc(g) => match g.node(id) {
                GccNode::Cut {
                    agent,
                    pieces,
                    child,
                } => View::Cut {
                    agent: *agent,
                    entries: pieces.iter().map(|p| (p.left, p.right)).collect(),
                    child: *child,
                },
                GccNode::Choose {
                    agent,
                    pieces,
                    child,
                } => View::Pick {
                    agent: *agent,
                    entries: pieces.iter().map(|p| (p.left, p.right)).collect(),
                    child: *child,
                },
                GccNode::IfElse { branches } => View::IfElse(branches),
                GccNode::Leaf => View::GccLeaf,
            },
        }
    }

    fn bc_view(&self, node: &'p BcNode) -> View<'p> {
        match node {
            BcNode::Cut {
                agent,
                piece,
                child,
            } => {
                let k = (*piece).clamp(1, self.points.len() - 1);
                View::Cut {
                    agent: *agent,
                    entries: vec![(self.points[k - 1].0, self.points[k].0)],
                    child: *child,
                }
            }
            BcNode::Choose { agent, children } => View::Branch {
                agent: *agent,
                children,
            },
            BcNode::Leaf { assign } => View::Assign(
                assign
                    .iter()
                    .enumerate()
                    .map(|(k, a)| {
                        let l = self.points.get(k).map(|p| p.0).unwrap_or(CutRef::End);
                        let r = self.points.get(k + 1).map(|p| p.0).unwrap_or(CutRef::End);
                        (l, r, *a)
                    })
                    .collect(),
            ),
        }
    }

    fn eval(&self, c: &Condition) -> bool {
        match c {
            Condition::Less(a, b) => match (self.index_of(*a), self.index_of(*b)) {
                (Some(i), Some(j)) => i < j,
                _ => false,
            },
            Condition::ChoseAt { node, piece } | Condition::CutInAt { node, piece } => {
                self.chosen.get(node) == Some(piece)
            }
            Condition::Else => true,
            Condition::And(cs) => cs.iter().all(|c| self.eval(c)),
            Condition::Or(cs) => cs.iter().any(|c| self.eval(c)),
            Condition::Not(c) => !self.eval(c),
        }
    }

    /// Runs through non-decision nodes until a decision or a leaf.
    fn settle(&mut self) -> Result<(), ExecError> {
        self.pending = None;
        while let Some(id) = self.at {
            match self.view(id) {
                View::Cut { agent, entries, .. } => {
                    let options = entries
                        .iter()
                        .map(|(l, r)| self.interval(*l, *r))
                        .collect::<Result<Vec<_>, _>>()?;
                    self.pending = Some(Decision {
                        node: id,
                        agent,
                        kind: DecisionKind::Cut { options },
                    });
                    return Ok(());
                }
                View::Branch { agent, children } => {
                    self.pending = Some(Decision {
                        node: id,
                        agent,
                        kind: DecisionKind::Branch {
                            count: children.len(),
                        },
                    });
                    return Ok(());
                }
                View::Pick { agent, entries, .. } => {
                    let options = entries
                        .iter()
                        .map(|(l, r)| self.interval(*l, *r))
                        .collect::<Result<Vec<_>, _>>()?;
                    self.pending = Some(Decision {
                        node: id,
                        agent,
                        kind: DecisionKind::Pick { options },
                    });
                    return Ok(());
                }
                View::IfElse(branches) => {
                    let next = branches
                        .iter()
                        .find(|b| self.eval(&b.condition))
                        .map(|b| b.child)
                        .ok_or_else(|| {
                            ExecError::InvalidProtocol(format!("no if-else branch matched at {id}"))
                        })?;
                    self.at = Some(next);
                }
                View::Assign(segments) => {
                    let mut alloc = Allocation::empty(self.protocol.agents());
                    for (l, r, agent) in segments {
                        alloc.give(agent, self.interval(l, r)?);
                    }
                    self.result = Some(alloc);
                    self.at = None;
                }
                View::GccLeaf => {
                    if let Err(e) = self.alloc.check() {
                        return Err(ExecError::Unallocated {
                            node: id,
                            detail: e.to_string(),
                        });
                    }
                    self.result = Some(self.alloc.clone());
                    self.at = None;
                }
            }
        }
        Ok(())
    }

    fn insert_point(&mut self, l: CutRef, r: CutRef, cut: CutRef, at: Fraction) {
        let il = self.index_of(l).expect("left reference present");
        let ir = self.index_of(r).expect("right reference present");
        let mut j = il + 1;
        while j < ir && self.points[j].1 <= at {
            j += 1;
        }
        self.points.insert(j, (cut, at));
    }

    /// Applies the acting agent's choice at the pending decision.
    pub fn apply(&mut self, action: &Action) -> Result<(), ExecError> {
        let Some(decision) = self.pending.clone() else {
            return Err(ExecError::TraceMismatch(
                "protocol has already finished".into(),
            ));
        };
        let id = decision.node;
        let agent = decision.agent;
        let illegal = |detail: String| ExecError::IllegalAction {
            node: id,
            agent,
            detail,
        };
        match (self.view(id), action) {
            (View::Cut { entries, child, .. }, Action::Cut { piece, at }) => {
                let DecisionKind::Cut { options } = &decision.kind else {
                    unreachable!()
                };
                let Some(iv) = options.get(*piece) else {
                    return Err(illegal(format!(
                        "cut option {piece} out of range (0..{})",
                        options.len()
                    )));
                };
                if !iv.contains(at) {
                    return Err(illegal(format!(
                        "cut at {at} outside the mandated interval [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
                let (l, r) = entries[*piece];
                self.insert_point(l, r, CutRef::MadeAt(id), at.clone());
                if matches!(self.protocol, Protocol::Gcc(_)) {
                    self.chosen.insert(id, *piece);
                }
                self.at = Some(child);
            }
            (View::Branch { children, .. }, Action::Branch { child }) => {
                let Some(next) = children.get(*child) else {
                    return Err(illegal(format!(
                        "branch {child} out of range (0..{})",
                        children.len()
                    )));
                };
                self.at = Some(*next);
            }
            (View::Pick { child, .. }, Action::Pick { piece }) => {
                let DecisionKind::Pick { options } = &decision.kind else {
                    unreachable!()
                };
                let Some(iv) = options.get(*piece) else {
                    return Err(illegal(format!(
                        "piece {piece} out of range (0..{})",
                        options.len()
                    )));
                };
                self.alloc.give(agent, iv.clone());
                self.chosen.insert(id, *piece);
                self.at = Some(child);
            }
            (_, a) => return Err(illegal(format!("action {a:?} does not fit this node"))),
        }
        self.trace.push(Event::from_action(id, agent, action));
        self.settle()
    }
}
