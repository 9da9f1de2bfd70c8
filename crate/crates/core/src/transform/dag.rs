use super::transport::{mapped_events, Bridge};
use super::{check_input, Conversion, NodeMap, Transporter};
use crate::error::TransformError;
use crate::exec::{Action, DecisionContext, Event, Machine, Trace};
use crate::ir::{BcDag, BcNode, BcTree, NodeId, Protocol};

/// Number of root-to-node paths per node, saturating.
pub(crate) fn path_counts(d: &BcDag) -> Vec<u128> {
    let mut count = vec![0u128; d.nodes.len()];
    if let Some(order) = d.topological_order() {
        count[d.root.index()] = 1;
        for v in order {
            let c = count[v.index()];
            for child in d.node(v).children() {
                count[child.index()] = count[child.index()].saturating_add(c);
            }
        }
    }
    count
}

/// Unfolds a DAG into the tree with one copy of every node per path.
///
/// Nodes are handled in reverse topological order: once all children of a
/// node have their subtree built, the node gets its own subtree with a fresh
/// copy of each child's subtree.
pub fn dag_to_tree(d: &BcDag) -> Result<Conversion<BcTree>, TransformError> {
    dag_to_tree_with_budget(d, super::DEFAULT_BUDGET)
}

pub fn dag_to_tree_with_budget(
    d: &BcDag,
    budget: usize,
) -> Result<Conversion<BcTree>, TransformError> {
    check_input(&Protocol::Dag(d.clone()))?;
    let size: u128 = path_counts(d)
        .iter()
        .fold(0u128, |a, b| a.saturating_add(*b));
    if size > budget as u128 {
        return Err(TransformError::Budget { limit: budget });
    }
    let order = d.topological_order().expect("validated");
    // subtree[v] holds v's unfolded subtree as a small arena rooted at index 0
    let mut subtree: Vec<Option<Vec<(BcNode, NodeId)>>> = vec![None; d.nodes.len()];
    for &v in order.iter().rev() {
        let node = d.node(v);
        let mut arena: Vec<(BcNode, NodeId)> = vec![(node.clone(), v)];
        let mut new_children = Vec::new();
        for c in node.children() {
            let part = subtree[c.index()].as_ref().expect("children done first");
            let offset = arena.len() as u32;
            new_children.push(NodeId(offset));
            for (n, origin) in part {
                arena.push((shift(n, offset), *origin));
            }
        }
        arena[0].0 = match &arena[0].0 {
            BcNode::Cut { agent, piece, .. } => BcNode::Cut {
                agent: *agent,
                piece: *piece,
                child: new_children[0],
            },
            BcNode::Choose { agent, .. } => BcNode::Choose {
                agent: *agent,
                children: new_children,
            },
            leaf => leaf.clone(),
        };
        subtree[v.index()] = Some(arena);
    }
    let arena = subtree[d.root.index()].take().expect("root reachable");
    let tree = BcTree {
        agents: d.agents,
        nodes: arena.iter().map(|(n, _)| n.clone()).collect(),
        root: NodeId(0),
    };
    let map = NodeMap {
        origin: arena.iter().map(|(_, o)| Some(*o)).collect(),
    };
    let transporter = Transporter::new(DagBridge {
        source: Protocol::Dag(d.clone()),
        origin: map
            .origin
            .iter()
            .map(|o| o.expect("every copy has an origin"))
            .collect(),
    });
    Ok(Conversion {
        output: tree,
        map,
        transporter,
    })
}

fn shift(n: &BcNode, offset: u32) -> BcNode {
    let s = |c: &NodeId| NodeId(c.0 + offset);
    match n {
        BcNode::Cut {
            agent,
            piece,
            child,
        } => BcNode::Cut {
            agent: *agent,
            piece: *piece,
            child: s(child),
        },
        BcNode::Choose { agent, children } => BcNode::Choose {
            agent: *agent,
            children: children.iter().map(s).collect(),
        },
        leaf => leaf.clone(),
    }
}

struct DagBridge {
    source: Protocol,
    origin: Vec<NodeId>,
}

impl Bridge for DagBridge {
    fn source(&self) -> &Protocol {
        &self.source
    }

    fn source_prefix(&self, _at: NodeId, target: &Trace) -> Option<Vec<Event>> {
        Some(mapped_events(target, |e| {
            Some(e.with_node(self.origin[e.node().index()]))
        }))
    }

    fn translate(
        &self,
        _at: NodeId,
        _t: &DecisionContext<'_>,
        _s: &Machine<'_>,
        action: Action,
    ) -> Action {
        action
    }
}

/// Follows a DAG execution trace through the unfolded tree.
pub fn dag_trace_to_tree(
    tree: &BcTree,
    map: &NodeMap,
    trace: &Trace,
) -> Result<Trace, TransformError> {
    let mut out = Trace::default();
    let mut at = tree.root;
    for e in &trace.events {
        if map.origin.get(at.index()).copied().flatten() != Some(e.node()) {
            return Err(TransformError::Invalid(format!(
                "trace event for node {} does not match tree node {at}",
                e.node()
            )));
        }
        out.push(e.with_node(at));
        at = match (tree.node(at), e) {
            (BcNode::Cut { child, .. }, Event::CutMade { .. }) => *child,
            (BcNode::Choose { children, .. }, Event::BranchChosen { child, .. }) => *children
                .get(*child)
                .ok_or_else(|| TransformError::Invalid(format!("branch {child} out of range")))?,
            _ => {
                return Err(TransformError::Invalid(
                    "trace event does not fit the node".into(),
                ))
            }
        };
    }
    Ok(out)
}
