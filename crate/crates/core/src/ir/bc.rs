use std::collections::VecDeque;

use super::{check_tree_shape, permute, preorder_map, tree_paths, NodeId, ValidationReport};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BcNode {
    /// `piece` is 1-based into the current left-to-right partition.
    Cut {
        agent: usize,
        piece: usize,
        child: NodeId,
    },
    Choose {
        agent: usize,
        children: Vec<NodeId>,
    },
    /// `assign[k]` is the agent receiving piece `k + 1`.
    Leaf {
        assign: Vec<usize>,
    },
}

impl BcNode {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            BcNode::Cut { child, .. } => vec![*child],
            BcNode::Choose { children, .. } => children.clone(),
            BcNode::Leaf { .. } => Vec::new(),
        }
    }

    pub fn agent(&self) -> Option<usize> {
        match self {
            BcNode::Cut { agent, .. } | BcNode::Choose { agent, .. } => Some(*agent),
            BcNode::Leaf { .. } => None,
        }
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, BcNode::Cut { .. })
    }

    fn remap(&self, map: &[NodeId]) -> BcNode {
        match self {
            BcNode::Cut {
                agent,
                piece,
                child,
            } => BcNode::Cut {
                agent: *agent,
                piece: *piece,
                child: map[child.index()],
            },
            BcNode::Choose { agent, children } => BcNode::Choose {
                agent: *agent,
                children: children.iter().map(|c| map[c.index()]).collect(),
            },
            leaf => leaf.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BcTree {
    pub agents: usize,
    pub nodes: Vec<BcNode>,
    pub root: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BcDag {
    pub agents: usize,
    pub nodes: Vec<BcNode>,
    pub root: NodeId,
}

impl BcTree {
    /// The protocol giving the whole cake to agent 1.
    pub fn trivial(agents: usize) -> BcTree {
        BcTree {
            agents,
            nodes: vec![BcNode::Leaf { assign: vec![1] }],
            root: NodeId(0),
        }
    }

    pub fn node(&self, id: NodeId) -> &BcNode {
        &self.nodes[id.index()]
    }

    pub fn canonical(&self) -> BcTree {
        let map = preorder_map(self.nodes.len(), self.root, |n| self.node(n).children());
        BcTree {
            agents: self.agents,
            nodes: permute(&self.nodes, &map, |n| n.remap(&map)),
            root: NodeId(0),
        }
    }

    /// Root-to-node path for every node (including the node itself).
    pub fn paths(&self) -> Vec<Vec<NodeId>> {
        tree_paths(self.nodes.len(), self.root, |n| self.node(n).children())
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

    pub fn into_dag(self) -> BcDag {
        BcDag {
            agents: self.agents,
            nodes: self.nodes,
            root: self.root,
        }
    }
}

impl BcDag {
    pub fn node(&self, id: NodeId) -> &BcNode {
        &self.nodes[id.index()]
    }

    /// Node ids in topological order (parents first); `None` on a cycle or
    /// a dangling child.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for node in &self.nodes {
            for c in node.children() {
                if c.index() >= n {
                    return None;
                }
                indeg[c.index()] += 1;
            }
        }
        let mut queue: VecDeque<NodeId> = (0..n)
            .filter(|&i| indeg[i] == 0)
            .map(NodeId::from)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for c in self.node(v).children() {
                indeg[c.index()] -= 1;
                if indeg[c.index()] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Renumbers reachable nodes in first-visit preorder.
    pub fn canonical(&self) -> BcDag {
        let map = preorder_map(self.nodes.len(), self.root, |n| self.node(n).children());
        BcDag {
            agents: self.agents,
            nodes: permute(&self.nodes, &map, |n| n.remap(&map)),
            root: NodeId(0),
        }
    }

    /// Number of cut ancestors of each node, assuming the DAG is valid.
    pub fn cut_depths(&self) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.nodes.len()];
        if let Some(order) = self.topological_order() {
            depth[self.root.index()] = 0;
            for v in order {
                let d = depth[v.index()];
                if d == usize::MAX {
                    continue;
                }
                let inc = usize::from(self.node(v).is_cut());
                for c in self.node(v).children() {
                    depth[c.index()] = depth[c.index()].min(d + inc);
                }
            }
        }
        depth
    }
}

/// Accumulates BC nodes bottom-up; the last node added is usually the root.
#[derive(Default)]
pub struct BcBuilder {
    pub nodes: Vec<BcNode>,
}

impl BcBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: BcNode) -> NodeId {
        self.nodes.push(node);
        NodeId::from(self.nodes.len() - 1)
    }

    pub fn cut(&mut self, agent: usize, piece: usize, child: NodeId) -> NodeId {
        self.push(BcNode::Cut {
            agent,
            piece,
            child,
        })
    }

    pub fn choose(&mut self, agent: usize, children: Vec<NodeId>) -> NodeId {
        self.push(BcNode::Choose { agent, children })
    }

    pub fn leaf(&mut self, assign: Vec<usize>) -> NodeId {
        self.push(BcNode::Leaf { assign })
    }

    pub fn finish(self, agents: usize, root: NodeId) -> BcTree {
        BcTree {
            agents,
            nodes: self.nodes,
            root,
        }
    }
}

fn check_node(
    node: &BcNode,
    id: NodeId,
    cuts_above: usize,
    agents: usize,
    path: &[NodeId],
    report: &mut ValidationReport,
) {
    if let Some(a) = node.agent() {
        if a == 0 || a > agents {
            report.error(Some(id), path, format!("agent {a} outside 1..={agents}"));
        }
    }
    match node {
        BcNode::Cut { piece, .. } => {
            if *piece == 0 || *piece > cuts_above + 1 {
                report.error(
                    Some(id),
                    path,
                    format!(
                        "cut piece {piece} outside 1..={} of the current partition",
                        cuts_above + 1
                    ),
                );
            }
        }
        BcNode::Choose { children, .. } => {
            if children.is_empty() {
                report.error(Some(id), path, "choose node without children");
            }
        }
        BcNode::Leaf { assign } => {
            if assign.len() != cuts_above + 1 {
                report.error(
                    Some(id),
                    path,
                    format!(
                        "leaf assigns {} pieces but {} cuts above it make {} pieces",
                        assign.len(),
                        cuts_above,
                        cuts_above + 1
                    ),
                );
            }
            for &a in assign {
                if a == 0 || a > agents {
                    report.error(
                        Some(id),
                        path,
                        format!("leaf assigns to agent {a} outside 1..={agents}"),
                    );
                }
            }
        }
    }
}

pub fn validate_bc(t: &BcTree) -> ValidationReport {
    let mut report = ValidationReport::default();
    if t.agents == 0 {
        report.error(None, &[], "protocol needs at least one agent");
    }
    if !check_tree_shape(t.nodes.len(), t.root, |n| t.node(n).children(), &mut report) {
        return report;
    }
    let paths = t.paths();
    let mut cuts_above = vec![0usize; t.nodes.len()];
    for id in t.preorder() {
        let node = t.node(id);
        for c in node.children() {
            cuts_above[c.index()] = cuts_above[id.index()] + usize::from(node.is_cut());
        }
        check_node(
            node,
            id,
            cuts_above[id.index()],
            t.agents,
            &paths[id.index()],
            &mut report,
        );
    }
    report
}

pub fn validate_dag(d: &BcDag) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = d.nodes.len();
    if d.agents == 0 {
        report.error(None, &[], "protocol needs at least one agent");
    }
    if d.root.index() >= n {
        report.error(None, &[], format!("root {} is not a node", d.root));
        return report;
    }
    for (i, node) in d.nodes.iter().enumerate() {
        for c in node.children() {
            if c.index() >= n {
                report.error(
                    Some(NodeId::from(i)),
                    &[],
                    format!("child {c} does not exist"),
                );
            }
        }
    }
    if !report.is_valid() {
        return report;
    }
    let Some(order) = d.topological_order() else {
        report.error(None, &[], "graph has a cycle");
        return report;
    };
    let mut cuts_above: Vec<Option<usize>> = vec![None; n];
    let mut witness: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    cuts_above[d.root.index()] = Some(0);
    witness[d.root.index()] = vec![d.root];
    for &v in &order {
        let Some(depth) = cuts_above[v.index()] else {
            continue;
        };
        let node = d.node(v);
        let inc = usize::from(node.is_cut());
        for c in node.children() {
            let mut path = witness[v.index()].clone();
            path.push(c);
            match cuts_above[c.index()] {
                None => {
                    cuts_above[c.index()] = Some(depth + inc);
                    witness[c.index()] = path;
                }
                Some(other) if other != depth + inc => {
                    report.error(
                        Some(c),
                        &path,
                        format!(
                            "paths reaching this node pass {} and {} cuts; all paths need the same number",
                            other,
                            depth + inc
                        ),
                    );
                }
                Some(_) => {}
            }
        }
    }
    for (i, depth) in cuts_above.iter().enumerate() {
        match depth {
            None => report.error(
                Some(NodeId::from(i)),
                &[],
                "node is unreachable from the root",
            ),
            Some(k) => check_node(
                &d.nodes[i],
                NodeId::from(i),
                *k,
                d.agents,
                &witness[i],
                &mut report,
            ),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_leaf_is_valid() {
        assert!(validate_bc(&BcTree::trivial(1)).is_valid());
    }

    #[test]
    fn leaf_arity_must_follow_cuts() {
        let mut b = BcBuilder::new();
        let leaf = b.leaf(vec![1]);
        let root = b.cut(1, 1, leaf);
        let report = validate_bc(&b.finish(1, root));
        assert!(!report.is_valid());
        assert!(report.errors[0].message.contains("leaf assigns 1 pieces"));
        assert_eq!(report.errors[0].path.len(), 2);
    }

    #[test]
    fn cut_piece_range() {
        let mut b = BcBuilder::new();
        let leaf = b.leaf(vec![1, 1]);
        let root = b.cut(1, 2, leaf);
        assert!(!validate_bc(&b.finish(1, root)).is_valid());
    }

    #[test]
    fn shared_child_is_not_a_tree() {
        let mut b = BcBuilder::new();
        let leaf = b.leaf(vec![1]);
        let root = b.choose(1, vec![leaf, leaf]);
        let t = b.finish(1, root);
        assert!(!validate_bc(&t).is_valid());
        assert!(validate_dag(&t.into_dag()).is_valid());
    }

    fn diamond(second_path_cuts: usize) -> BcDag {
        // root choose -> (cut -> shared) and (cut [-> cut] -> shared)
        let mut nodes = Vec::new();
        let shared_arity = 2;
        nodes.push(BcNode::Leaf {
            assign: vec![1; shared_arity],
        }); // 0
        nodes.push(BcNode::Cut {
            agent: 1,
            piece: 1,
            child: NodeId(0),
        }); // 1
        if second_path_cuts == 1 {
            nodes.push(BcNode::Cut {
                agent: 2,
                piece: 1,
                child: NodeId(0),
            }); // 2
        } else {
            nodes.push(BcNode::Cut {
                agent: 2,
                piece: 1,
                child: NodeId(3),
            }); // 2
            nodes.push(BcNode::Cut {
                agent: 2,
                piece: 1,
                child: NodeId(0),
            }); // 3
        }
        nodes.push(BcNode::Choose {
            agent: 1,
            children: vec![NodeId(1), NodeId(2)],
        });
        let root = NodeId::from(nodes.len() - 1);
        BcDag {
            agents: 2,
            nodes,
            root,
        }
    }

    #[test]
    fn diamond_cut_counts() {
        assert!(validate_dag(&diamond(1)).is_valid());
        let bad = validate_dag(&diamond(2));
        assert!(!bad.is_valid());
        assert!(bad.errors.iter().any(|v| v.message.contains("same number")));
    }

    #[test]
    fn dag_cycle_rejected() {
        let d = BcDag {
            agents: 1,
            nodes: vec![
                BcNode::Choose {
                    agent: 1,
                    children: vec![NodeId(1)],
                },
                BcNode::Choose {
                    agent: 1,
                    children: vec![NodeId(0)],
                },
            ],
            root: NodeId(0),
        };
        assert!(!validate_dag(&d).is_valid());
    }

    #[test]
    fn canonical_renumbers_preorder() {
        let mut b = BcBuilder::new();
        let l1 = b.leaf(vec![1, 2]);
        let l2 = b.leaf(vec![2, 1]);
        let ch = b.choose(2, vec![l1, l2]);
        let root = b.cut(1, 1, ch);
        let t = b.finish(2, root);
        let c = t.canonical();
        assert_eq!(c.root, NodeId(0));
        assert_eq!(
            c.nodes[0],
            BcNode::Cut {
                agent: 1,
                piece: 1,
                child: NodeId(1)
            }
        );
        assert_eq!(c.nodes[2], BcNode::Leaf { assign: vec![1, 2] });
        assert_eq!(c.canonical(), c);
    }
}
