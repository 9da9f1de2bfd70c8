use std::collections::HashMap;

use super::{check_input, NodeMap};
use crate::error::TransformError;
use crate::ir::{BcNode, BcTree, Condition, CutRef, GccNode, GccTree, NodeId, PieceRef, Protocol};

/// Path state while unfolding a GCC tree: the left-to-right order of all
/// cuts so far, the entry taken at every cut and choose node, and the pieces
/// handed out.
#[derive(Clone)]
struct Path {
    order: Vec<CutRef>,
    chosen: HashMap<NodeId, usize>,
    given: Vec<(usize, PieceRef)>,
}

impl Path {
    fn pos(&self, r: CutRef) -> Option<usize> {
        self.order.iter().position(|x| *x == r)
    }

    fn span(&self, p: &PieceRef, at: NodeId) -> Result<(usize, usize), TransformError> {
        match (self.pos(p.left), self.pos(p.right)) {
            (Some(l), Some(r)) if l < r => Ok((l, r)),
            _ => Err(TransformError::Invalid(format!(
                "piece [{}, {}] at {at} is not an interval on every path",
                p.left, p.right
            ))),
        }
    }

    fn eval(&self, c: &Condition) -> bool {
        match c {
            Condition::Less(a, b) => {
                matches!((self.pos(*a), self.pos(*b)), (Some(i), Some(j)) if i < j)
            }
            Condition::ChoseAt { node, piece } | Condition::CutInAt { node, piece } => {
                self.chosen.get(node) == Some(piece)
            }
            Condition::Else => true,
            Condition::And(cs) => cs.iter().all(|c| self.eval(c)),
            Condition::Or(cs) => cs.iter().any(|c| self.eval(c)),
            Condition::Not(c) => !self.eval(c),
        }
    }
}

struct Builder<'a> {
    src: &'a GccTree,
    nodes: Vec<BcNode>,
    origin: Vec<Option<NodeId>>,
    budget: usize,
}

impl Builder<'_> {
    fn push(&mut self, n: BcNode, origin: NodeId) -> Result<NodeId, TransformError> {
        if self.nodes.len() >= self.budget {
            return Err(TransformError::Budget { limit: self.budget });
        }
        self.nodes.push(n);
        self.origin.push(Some(origin));
        Ok(NodeId::from(self.nodes.len() - 1))
    }

    fn build(&mut self, id: NodeId, path: Path) -> Result<NodeId, TransformError> {
        match self.src.node(id) {
            GccNode::Cut {
                agent,
                pieces,
                child,
            } => {
                // one option per entry and per piece of the current partition inside it
                let mut options = Vec::new();
                for (t, p) in pieces.iter().enumerate() {
                    let (l, r) = path.span(p, id)?;
                    for k in l..r {
                        options.push((t, k));
                    }
                }
                let slot = self.push(BcNode::Leaf { assign: Vec::new() }, id)?;
                let mut cuts = Vec::with_capacity(options.len());
                for (t, k) in &options {
                    let cut_slot = if options.len() == 1 {
                        slot
                    } else {
                        self.push(BcNode::Leaf { assign: Vec::new() }, id)?
                    };
                    let mut next = path.clone();
                    next.order.insert(k + 1, CutRef::MadeAt(id));
                    next.chosen.insert(id, *t);
                    let c = self.build(*child, next)?;
                    self.nodes[cut_slot.index()] = BcNode::Cut {
                        agent: *agent,
                        piece: k + 1,
                        child: c,
                    };
                    cuts.push(cut_slot);
                }
                if options.len() > 1 {
                    self.nodes[slot.index()] = BcNode::Choose {
                        agent: *agent,
                        children: cuts,
                    };
                }
                Ok(slot)
            }
            GccNode::Choose {
                agent,
                pieces,
                child,
            } => {
                for p in pieces {
                    path.span(p, id)?;
                }
                if pieces.len() == 1 {
                    let mut next = path;
                    next.chosen.insert(id, 0);
                    next.given.push((*agent, pieces[0]));
                    return self.build(*child, next);
                }
                let slot = self.push(BcNode::Leaf { assign: Vec::new() }, id)?;
                let mut children = Vec::with_capacity(pieces.len());
                for (t, p) in pieces.iter().enumerate() {
                    let mut next = path.clone();
                    next.chosen.insert(id, t);
                    next.given.push((*agent, *p));
                    children.push(self.build(*child, next)?);
                }
                self.nodes[slot.index()] = BcNode::Choose {
                    agent: *agent,
                    children,
                };
                Ok(slot)
            }
            GccNode::IfElse { branches } => {
                let b = branches
                    .iter()
                    .find(|b| path.eval(&b.condition))
                    .ok_or_else(|| {
                        TransformError::Invalid(format!("no if-else branch matches at {id}"))
                    })?;
                self.build(b.child, path)
            }
            GccNode::Leaf => {
                let mut assign = Vec::with_capacity(path.order.len() - 1);
                for k in 0..path.order.len() - 1 {
                    let owner = path.given.iter().find_map(|(agent, p)| {
                        let (l, r) = path.span(p, id).ok()?;
                        (l <= k && k < r).then_some(*agent)
                    });
                    match owner {
                        Some(a) => assign.push(a),
                        None => {
                            return Err(TransformError::Unallocated {
                                node: id,
                                piece: k + 1,
                            })
                        }
                    }
                }
                self.push(BcNode::Leaf { assign }, id)
            }
        }
    }
}

/// Unfolds a GCC tree into a BC tree.
///
/// The left-to-right order of every cut is tracked along each path. A GCC
/// cut becomes a choose node of the cutter over one BC cut per entry of its
/// set and per piece of the current partition inside that entry, so
/// entries spanning earlier cuts are split on the way. A choose over several
/// entries becomes a branch per entry; if-else nodes are settled from the
/// path and vanish; leaves hand each piece to whoever picked the entry
/// covering it.
pub fn gcc_to_bc(g: &GccTree) -> Result<(BcTree, NodeMap), TransformError> {
    gcc_to_bc_with_budget(g, super::DEFAULT_BUDGET)
}

pub fn gcc_to_bc_with_budget(
    g: &GccTree,
    budget: usize,
) -> Result<(BcTree, NodeMap), TransformError> {
    check_input(&Protocol::Gcc(g.clone()))?;
    let mut b = Builder {
        src: g,
        nodes: Vec::new(),
        origin: Vec::new(),
        budget,
    };
    let path = Path {
        order: vec![CutRef::Origin, CutRef::End],
        chosen: HashMap::new(),
        given: Vec::new(),
    };
    let root = b.build(g.root, path)?;
    let tree = BcTree {
        agents: g.agents,
        nodes: b.nodes,
        root,
    };
    Ok((tree, NodeMap { origin: b.origin }))
}
