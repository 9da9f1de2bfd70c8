use std::collections::HashMap;

use super::transport::Bridge;
use super::{check_input, Conversion, NodeMap, Transporter};
use crate::error::TransformError;
use crate::exec::{Action, DecisionContext, Event, Machine, Trace};
use crate::ir::{ExtBcTree, ExtNode, NodeId, Protocol};

fn first_hoist(t: &ExtBcTree) -> Option<(NodeId, usize)> {
    t.preorder().into_iter().find_map(|id| match t.node(id) {
        ExtNode::Choose { children, .. } => children
            .iter()
            .position(|c| t.node(*c).is_cut())
            .map(|i| (id, i)),
        _ => None,
    })
}

/// Moves every cut above the choose nodes over it. Each step takes a choose
/// node with a cut child and swaps the two: the cut now happens first and the
/// choose node's other branches ignore it. Node ids, and hence the node
/// count, are unchanged.
pub fn cuts_before_choices_ext(t: &ExtBcTree) -> Result<Conversion<ExtBcTree>, TransformError> {
    check_input(&Protocol::Ext(t.clone()))?;
    let mut out = t.clone();
    let limit = t.nodes.len() * t.nodes.len() + 1;
    let mut steps = 0;
    while let Some((c, i)) = first_hoist(&out) {
        steps += 1;
        if steps > limit {
            return Err(TransformError::Budget { limit });
        }
        let parents = out.parents();
        let k = match &out.nodes[c.index()] {
            ExtNode::Choose { children, .. } => children[i],
            _ => unreachable!(),
        };
        let v = match &out.nodes[k.index()] {
            ExtNode::Cut { child, .. } => *child,
            _ => unreachable!(),
        };
        if let ExtNode::Choose { children, .. } = &mut out.nodes[c.index()] {
            children[i] = v;
        }
        if let ExtNode::Cut { child, .. } = &mut out.nodes[k.index()] {
            *child = c;
        }
        match parents[c.index()] {
            None => out.root = k,
            Some(p) => match &mut out.nodes[p.index()] {
                ExtNode::Cut { child, .. } => *child = k,
                ExtNode::Choose { children, .. } => {
                    for ch in children.iter_mut() {
                        if *ch == c {
                            *ch = k;
                        }
                    }
                }
                ExtNode::Leaf { .. } => unreachable!(),
            },
        }
    }
    let map = NodeMap::identity(t.nodes.len());
    let transporter = Transporter::new(HoistBridge::new(t));
    Ok(Conversion {
        output: out,
        map,
        transporter,
    })
}

/// Imitates a source tree whose decisions may have been reordered: the
/// source history at a node is rebuilt along its source path, and choices
/// not yet made in the target are assumed to lead towards the node.
pub(crate) struct HoistBridge {
    source: Protocol,
    tree: ExtBcTree,
    parents: Vec<Option<NodeId>>,
}

impl HoistBridge {
    pub(crate) fn new(t: &ExtBcTree) -> Self {
        HoistBridge {
            source: Protocol::Ext(t.clone()),
            tree: t.clone(),
            parents: t.parents(),
        }
    }
}

impl Bridge for HoistBridge {
    fn source(&self) -> &Protocol {
        &self.source
    }

    fn source_prefix(&self, at: NodeId, target: &Trace) -> Option<Vec<Event>> {
        let mut path = vec![at];
        let mut cur = at;
        while let Some(p) = self.parents[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        let seen: HashMap<NodeId, &Event> = target.events.iter().map(|e| (e.node(), e)).collect();
        let mut out = Vec::with_capacity(path.len());
        for w in path.windows(2) {
            let (a, next) = (w[0], w[1]);
            match (self.tree.node(a), seen.get(&a)) {
                (ExtNode::Choose { agent, children }, e) => {
                    let towards = children.iter().position(|c| *c == next)?;
                    match e {
                        Some(Event::BranchChosen { child, .. }) if *child != towards => {
                            return None
                        }
                        Some(e) => out.push((*e).clone()),
                        None => out.push(Event::BranchChosen {
                            node: a,
                            agent: *agent,
                            child: towards,
                        }),
                    }
                }
                (_, Some(e)) => out.push((*e).clone()),
                (_, None) => return None,
            }
        }
        Some(out)
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
