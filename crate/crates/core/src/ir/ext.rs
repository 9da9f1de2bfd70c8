use serde::{Deserialize, Serialize};

use super::{
    check_tree_shape, permute, preorder_map, CutRef, NodeId, PartialOrder, Relation,
    ValidationReport,
};

/// Leaf segment: the cake between two cuts goes to `agent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub left: CutRef,
    pub right: CutRef,
    pub agent: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExtNode {
    Cut {
        agent: usize,
        left: CutRef,
        right: CutRef,
        child: NodeId,
    },
    Choose {
        agent: usize,
        children: Vec<NodeId>,
    },
    Leaf {
        segments: Vec<Segment>,
    },
}

impl ExtNode {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            ExtNode::Cut { child, .. } => vec![*child],
            ExtNode::Choose { children, .. } => children.clone(),
            ExtNode::Leaf { .. } => Vec::new(),
        }
    }

    pub fn agent(&self) -> Option<usize> {
        match self {
            ExtNode::Cut { agent, .. } | ExtNode::Choose { agent, .. } => Some(*agent),
            ExtNode::Leaf { .. } => None,
        }
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, ExtNode::Cut { .. })
    }

    pub(crate) fn remap(&self, f: &impl Fn(NodeId) -> NodeId) -> ExtNode {
        match self {
            ExtNode::Cut {
                agent,
                left,
                right,
                child,
            } => ExtNode::Cut {
                agent: *agent,
                left: left.remap(f),
                right: right.remap(f),
                child: f(*child),
            },
            ExtNode::Choose { agent, children } => ExtNode::Choose {
                agent: *agent,
                children: children.iter().map(|c| f(*c)).collect(),
            },
            ExtNode::Leaf { segments } => ExtNode::Leaf {
                segments: segments
                    .iter()
                    .map(|s| Segment {
                        left: s.left.remap(f),
                        right: s.right.remap(f),
                        agent: s.agent,
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtBcTree {
    pub agents: usize,
    pub nodes: Vec<ExtNode>,
    pub root: NodeId,
}

impl ExtBcTree {
    pub fn node(&self, id: NodeId) -> &ExtNode {
        &self.nodes[id.index()]
    }

    pub fn parents(&self) -> Vec<Option<NodeId>> {
        let mut parents = vec![None; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for c in node.children() {
                if c.index() < parents.len() {
                    parents[c.index()] = Some(NodeId::from(i));
                }
            }
        }
        parents
    }

    /// Root-to-`at` path, inclusive.
    pub fn path_to(&self, at: NodeId) -> Vec<NodeId> {
        let parents = self.parents();
        let mut path = vec![at];
        let mut cur = at;
        while let Some(p) = parents[cur.index()] {
            if path.len() > self.nodes.len() {
                break;
            }
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            out.push(n);
            for c in self.node(n).children().into_iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    pub fn canonical(&self) -> ExtBcTree {
        let map = preorder_map(self.nodes.len(), self.root, |n| self.node(n).children());
        let f = |n: NodeId| map[n.index()];
        ExtBcTree {
            agents: self.agents,
            nodes: permute(&self.nodes, &map, |n| n.remap(&f)),
            root: NodeId(0),
        }
    }
}

#[derive(Default)]
pub struct ExtBuilder {
    pub nodes: Vec<ExtNode>,
}

impl ExtBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: ExtNode) -> NodeId {
        self.nodes.push(node);
        NodeId::from(self.nodes.len() - 1)
    }

    /// Reserves an id so that children can refer to the cut made here.
    pub fn reserve(&mut self) -> NodeId {
        self.push(ExtNode::Leaf {
            segments: Vec::new(),
        })
    }

    pub fn set(&mut self, id: NodeId, node: ExtNode) {
        self.nodes[id.index()] = node;
    }

    pub fn finish(self, agents: usize, root: NodeId) -> ExtBcTree {
        ExtBcTree {
            agents,
            nodes: self.nodes,
            root,
        }
    }
}

fn check_pair(
    order: &PartialOrder,
    left: CutRef,
    right: CutRef,
    what: &str,
    id: NodeId,
    path: &[NodeId],
    report: &mut ValidationReport,
) {
    for r in [left, right] {
        if !order.contains(r) {
            report.error(
                Some(id),
                path,
                format!("{what} refers to {r}, which is not a cut above this node"),
            );
            return;
        }
    }
    match order.relation(left, right) {
        Relation::Less => {}
        Relation::Unknown => report.error(
            Some(id),
            path,
            format!("{what}: order of {left} and {right} cannot be determined from the structure"),
        ),
        _ => report.error(
            Some(id),
            path,
            format!("{what}: {left} is not left of {right}"),
        ),
    }
}

pub fn validate_ext(t: &ExtBcTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    if t.agents == 0 {
        report.error(None, &[], "protocol needs at least one agent");
    }
    if !check_tree_shape(t.nodes.len(), t.root, |n| t.node(n).children(), &mut report) {
        return report;
    }
    let mut stack = vec![(t.root, PartialOrder::new(), vec![t.root])];
    while let Some((id, order, path)) = stack.pop() {
        let node = t.node(id);
        if let Some(a) = node.agent() {
            if a == 0 || a > t.agents {
                report.error(
                    Some(id),
                    &path,
                    format!("agent {a} outside 1..={}", t.agents),
                );
            }
        }
        match node {
            ExtNode::Cut {
                left, right, child, ..
            } => {
                check_pair(
                    &order,
                    *left,
                    *right,
                    "cut interval",
                    id,
                    &path,
                    &mut report,
                );
                let mut next = order.clone();
                next.add_cut(CutRef::MadeAt(id), *left, *right);
                let mut p = path.clone();
                p.push(*child);
                stack.push((*child, next, p));
            }
            ExtNode::Choose { children, .. } => {
                if children.is_empty() {
                    report.error(Some(id), &path, "choose node without children");
                }
                for c in children {
                    let mut p = path.clone();
                    p.push(*c);
                    stack.push((*c, order.clone(), p));
                }
            }
            ExtNode::Leaf { segments } => {
                if segments.is_empty() {
                    report.error(Some(id), &path, "leaf has no segments");
                    continue;
                }
                if segments[0].left != CutRef::Origin {
                    report.error(Some(id), &path, "first leaf segment must start at origin");
                }
                if segments[segments.len() - 1].right != CutRef::End {
                    report.error(Some(id), &path, "last leaf segment must end at end");
                }
                for w in segments.windows(2) {
                    if w[0].right != w[1].left {
                        report.error(
                            Some(id),
                            &path,
                            format!(
                                "leaf segments do not abut: {} then {}",
                                w[0].right, w[1].left
                            ),
                        );
                    }
                }
                for s in segments {
                    check_pair(
                        &order,
                        s.left,
                        s.right,
                        "leaf segment",
                        id,
                        &path,
                        &mut report,
                    );
                    if s.agent == 0 || s.agent > t.agents {
                        report.error(
                            Some(id),
                            &path,
                            format!("leaf assigns to agent {} outside 1..={}", s.agent, t.agents),
                        );
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::static_cut_order;

    fn seg(left: CutRef, right: CutRef, agent: usize) -> Segment {
        Segment { left, right, agent }
    }

    fn two_cuts(second_left: CutRef) -> ExtBcTree {
        let x = CutRef::MadeAt(NodeId(0));
        let y = CutRef::MadeAt(NodeId(1));
        ExtBcTree {
            agents: 2,
            nodes: vec![
                ExtNode::Cut {
                    agent: 1,
                    left: CutRef::Origin,
                    right: CutRef::End,
                    child: NodeId(1),
                },
                ExtNode::Cut {
                    agent: 2,
                    left: second_left,
                    right: CutRef::End,
                    child: NodeId(2),
                },
                ExtNode::Leaf {
                    segments: vec![
                        seg(CutRef::Origin, x, 1),
                        seg(x, y, 2),
                        seg(y, CutRef::End, 1),
                    ],
                },
            ],
            root: NodeId(0),
        }
    }

    #[test]
    fn single_cut_valid() {
        let y = CutRef::MadeAt(NodeId(0));
        let t = ExtBcTree {
            agents: 2,
            nodes: vec![
                ExtNode::Cut {
                    agent: 1,
                    left: CutRef::Origin,
                    right: CutRef::End,
                    child: NodeId(1),
                },
                ExtNode::Leaf {
                    segments: vec![seg(CutRef::Origin, y, 1), seg(y, CutRef::End, 2)],
                },
            ],
            root: NodeId(0),
        };
        assert!(validate_ext(&t).is_valid());
        let order = static_cut_order(&t, NodeId(1));
        assert!(order.is_less(CutRef::Origin, y));
        assert!(order.is_less(y, CutRef::End));
    }

    #[test]
    fn independent_cuts_cannot_be_ordered() {
        let r = validate_ext(&two_cuts(CutRef::Origin));
        assert!(!r.is_valid());
        assert!(r
            .errors
            .iter()
            .any(|v| v.message.contains("cannot be determined")));
    }

    #[test]
    fn restricted_second_cut_is_valid() {
        assert!(validate_ext(&two_cuts(CutRef::MadeAt(NodeId(0)))).is_valid());
    }

    #[test]
    fn non_ancestor_reference_rejected() {
        let mut t = two_cuts(CutRef::MadeAt(NodeId(0)));
        t.nodes[0] = ExtNode::Cut {
            agent: 1,
            left: CutRef::Origin,
            right: CutRef::MadeAt(NodeId(1)),
            child: NodeId(1),
        };
        assert!(!validate_ext(&t).is_valid());
    }
}
