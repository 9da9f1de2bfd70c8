use super::transport::{mapped_events, Bridge};
use super::{check_input, Conversion, NodeMap, Transporter};
use crate::error::TransformError;
use crate::exec::{Action, DecisionContext, Event, Machine, Trace};
use crate::ir::{BcNode, BcTree, CutRef, ExtBcTree, ExtNode, NodeId, Protocol, Segment};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    /// Same decision as the source node.
    Same(NodeId),
    /// Choose node picking which sub-piece the source cut falls in.
    Selector(NodeId),
    /// Cut below a selector, at the source cut's position.
    Selected(NodeId),
}

impl Role {
    fn source(self) -> NodeId {
        match self {
            Role::Same(n) | Role::Selector(n) | Role::Selected(n) => n,
        }
    }
}

struct Builder<'a> {
    src: &'a ExtBcTree,
    nodes: Vec<BcNode>,
    roles: Vec<Role>,
    budget: usize,
}

impl Builder<'_> {
    fn push(&mut self, node: BcNode, role: Role) -> Result<NodeId, TransformError> {
        if self.nodes.len() >= self.budget {
            return Err(TransformError::Budget { limit: self.budget });
        }
        self.nodes.push(node);
        self.roles.push(role);
        Ok(NodeId::from(self.nodes.len() - 1))
    }

    /// `order` is the left-to-right order of all cuts on the current path.
    fn build(&mut self, id: NodeId, order: &[CutRef]) -> Result<NodeId, TransformError> {
        let pos = |r: CutRef| {
            order
                .iter()
                .position(|x| *x == r)
                .expect("validated reference")
        };
        match self.src.node(id) {
            ExtNode::Cut {
                agent,
                left,
                right,
                child,
            } => {
                let (il, ir) = (pos(*left), pos(*right));
                let subpieces = ir - il;
                let slot = self.push(BcNode::Leaf { assign: Vec::new() }, Role::Same(id))?;
                let mut cuts = Vec::with_capacity(subpieces);
                for i in 0..subpieces {
                    let mut next = order.to_vec();
                    next.insert(il + 1 + i, CutRef::MadeAt(id));
                    let role = if subpieces == 1 {
                        Role::Same(id)
                    } else {
                        Role::Selected(id)
                    };
                    let cut_slot = if subpieces == 1 {
                        slot
                    } else {
                        self.push(BcNode::Leaf { assign: Vec::new() }, role)?
                    };
                    let c = self.build(*child, &next)?;
                    self.nodes[cut_slot.index()] = BcNode::Cut {
                        agent: *agent,
                        piece: il + 1 + i,
                        child: c,
                    };
                    cuts.push(cut_slot);
                }
                if subpieces > 1 {
                    self.nodes[slot.index()] = BcNode::Choose {
                        agent: *agent,
                        children: cuts,
                    };
                    self.roles[slot.index()] = Role::Selector(id);
                }
                Ok(slot)
            }
            ExtNode::Choose { agent, children } => {
                let slot = self.push(BcNode::Leaf { assign: Vec::new() }, Role::Same(id))?;
                let mut out = Vec::with_capacity(children.len());
                for c in children {
                    out.push(self.build(*c, order)?);
                }
                self.nodes[slot.index()] = BcNode::Choose {
                    agent: *agent,
                    children: out,
                };
                Ok(slot)
            }
            ExtNode::Leaf { segments } => {
                let mut assign = vec![0usize; order.len() - 1];
                for s in segments {
                    for a in &mut assign[pos(s.left)..pos(s.right)] {
                        *a = s.agent;
                    }
                }
                self.push(BcNode::Leaf { assign }, Role::Same(id))
            }
        }
    }
}

/// Rewrites an extended BC tree as a plain BC tree. A cut spanning `k`
/// existing cuts becomes a choose node of the same agent over `k + 1` cuts,
/// one per sub-piece; leaf segments are split along the path's cut order.
pub fn extended_to_bc(t: &ExtBcTree) -> Result<Conversion<BcTree>, TransformError> {
    extended_to_bc_with_budget(t, super::DEFAULT_BUDGET)
}

pub fn extended_to_bc_with_budget(
    t: &ExtBcTree,
    budget: usize,
) -> Result<Conversion<BcTree>, TransformError> {
    check_input(&Protocol::Ext(t.clone()))?;
    let mut b = Builder {
        src: t,
        nodes: Vec::new(),
        roles: Vec::new(),
        budget,
    };
    let root = b.build(t.root, &[CutRef::Origin, CutRef::End])?;
    let tree = BcTree {
        agents: t.agents,
        nodes: b.nodes,
        root,
    };
    let map = NodeMap {
        origin: b.roles.iter().map(|r| Some(r.source())).collect(),
    };
    let transporter = Transporter::new(ExtBridge {
        source: Protocol::Ext(t.clone()),
        roles: b.roles,
    });
    Ok(Conversion {
        output: tree,
        map,
        transporter,
    })
}

struct ExtBridge {
    source: Protocol,
    roles: Vec<Role>,
}

impl Bridge for ExtBridge {
    fn source(&self) -> &Protocol {
        &self.source
    }

    fn source_prefix(&self, _at: NodeId, target: &Trace) -> Option<Vec<Event>> {
        Some(mapped_events(target, |e| {
            match self.roles[e.node().index()] {
                Role::Selector(_) => None,
                r => Some(e.with_node(r.source())),
            }
        }))
    }

    fn translate(
        &self,
        at: NodeId,
        _t: &DecisionContext<'_>,
        source: &Machine<'_>,
        action: Action,
    ) -> Action {
        match (self.roles[at.index()], action) {
            (Role::Selector(src), Action::Cut { at: z, .. }) => {
                let ExtNode::Cut { left, right, .. } = node_of(&self.source, src) else {
                    unreachable!("selectors stand for cuts")
                };
                // the cut lands after every interior point at or left of it
                let pts = source.points();
                let il = pts.iter().position(|p| p.0 == left).expect("known");
                let ir = pts.iter().position(|p| p.0 == right).expect("known");
                let child = pts[il + 1..ir].iter().filter(|p| p.1 <= z).count();
                Action::Branch { child }
            }
            (_, a) => a,
        }
    }
}

fn node_of(p: &Protocol, id: NodeId) -> ExtNode {
    match p {
        Protocol::Ext(t) => t.node(id).clone(),
        _ => unreachable!("extended source"),
    }
}

/// Views a BC tree as an extended BC tree with the same node ids: each cut
/// spans exactly one current piece and each leaf lists its pieces.
pub fn bc_to_extended(t: &BcTree) -> ExtBcTree {
    let mut nodes: Vec<ExtNode> = vec![
        ExtNode::Leaf {
            segments: Vec::new()
        };
        t.nodes.len()
    ];
    let mut stack = vec![(t.root, vec![CutRef::Origin, CutRef::End])];
    while let Some((id, order)) = stack.pop() {
        nodes[id.index()] = match t.node(id) {
            BcNode::Cut {
                agent,
                piece,
                child,
            } => {
                let k = (*piece).clamp(1, order.len() - 1);
                let mut next = order.clone();
                next.insert(k, CutRef::MadeAt(id));
                stack.push((*child, next));
                ExtNode::Cut {
                    agent: *agent,
                    left: order[k - 1],
                    right: order[k],
                    child: *child,
                }
            }
            BcNode::Choose { agent, children } => {
                for c in children {
                    stack.push((*c, order.clone()));
                }
                ExtNode::Choose {
                    agent: *agent,
                    children: children.clone(),
                }
            }
            BcNode::Leaf { assign } => ExtNode::Leaf {
                segments: assign
                    .iter()
                    .enumerate()
                    .map(|(k, a)| Segment {
                        left: order[k.min(order.len() - 1)],
                        right: order[(k + 1).min(order.len() - 1)],
                        agent: *a,
                    })
                    .collect(),
            },
        };
    }
    ExtBcTree {
        agents: t.agents,
        nodes,
        root: t.root,
    }
}
