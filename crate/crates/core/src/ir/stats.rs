use serde::{Deserialize, Serialize};

use super::{BcNode, ExtNode, GccNode, NodeId, Protocol};

/// Size figures for a protocol. `depth` counts edges on the longest
/// root-to-leaf path; `max_branching` is the largest child count.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub model: String,
    pub agents: usize,
    pub nodes: usize,
    pub cuts: usize,
    pub chooses: usize,
    pub if_else: usize,
    pub leaves: usize,
    pub depth: usize,
    pub max_branching: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Cut,
    Choose,
    IfElse,
    Leaf,
}

fn tally(model: &str, agents: usize, root: NodeId, nodes: Vec<(Kind, Vec<NodeId>)>) -> Stats {
    // children always point to nodes reachable only from their parents, so a
    // memoised longest-path walk works for trees and DAGs alike
    let n = nodes.len();
    let mut depth = vec![None::<usize>; n];
    let mut stack = vec![(root, false)];
    while let Some((v, expanded)) = stack.pop() {
        if depth[v.index()].is_some() {
            continue;
        }
        let children = &nodes[v.index()].1;
        if expanded || children.is_empty() {
            let d = children
                .iter()
                .map(|c| depth[c.index()].unwrap_or(0) + 1)
                .max()
                .unwrap_or(0);
            depth[v.index()] = Some(d);
        } else {
            stack.push((v, true));
            for c in children {
                if depth[c.index()].is_none() {
                    stack.push((*c, false));
                }
            }
        }
    }
    let count = |k: Kind| nodes.iter().filter(|(kind, _)| *kind == k).count();
    Stats {
        model: model.to_string(),
        agents,
        nodes: n,
        cuts: count(Kind::Cut),
        chooses: count(Kind::Choose),
        if_else: count(Kind::IfElse),
        leaves: count(Kind::Leaf),
        depth: depth[root.index()].unwrap_or(0),
        max_branching: nodes.iter().map(|(_, c)| c.len()).max().unwrap_or(0),
    }
}

fn bc_kind(n: &BcNode) -> Kind {
    match n {
        BcNode::Cut { .. } => Kind::Cut,
        BcNode::Choose { .. } => Kind::Choose,
        BcNode::Leaf { .. } => Kind::Leaf,
    }
}

pub fn stats(p: &Protocol) -> Stats {
    match p {
        Protocol::Bc(t) => tally(
            "bc",
            t.agents,
            t.root,
            t.nodes.iter().map(|n| (bc_kind(n), n.children())).collect(),
        ),
        Protocol::Dag(d) => tally(
            "dag",
            d.agents,
            d.root,
            d.nodes.iter().map(|n| (bc_kind(n), n.children())).collect(),
        ),
        Protocol::Ext(t) => tally(
            "extbc",
            t.agents,
            t.root,
            t.nodes
                .iter()
                .map(|n| {
                    let k = match n {
                        ExtNode::Cut { .. } => Kind::Cut,
                        ExtNode::Choose { .. } => Kind::Choose,
                        ExtNode::Leaf { .. } => Kind::Leaf,
                    };
                    (k, n.children())
                })
                .collect(),
        ),
        Protocol::Gcc(g) => tally(
            "gcc",
            g.agents,
            g.root,
            g.nodes
                .iter()
                .map(|n| {
                    let k = match n {
                        GccNode::Cut { .. } => Kind::Cut,
                        GccNode::Choose { .. } => Kind::Choose,
                        GccNode::IfElse { .. } => Kind::IfElse,
                        GccNode::Leaf => Kind::Leaf,
                    };
                    (k, n.children())
                })
                .collect(),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{BcBuilder, BcTree};

    #[test]
    fn single_leaf() {
        let s = stats(&Protocol::Bc(BcTree::trivial(1)));
        assert_eq!((s.nodes, s.leaves, s.depth, s.max_branching), (1, 1, 0, 0));
    }

    #[test]
    fn cut_and_choose_counts() {
        let mut b = BcBuilder::new();
        let l1 = b.leaf(vec![2, 1]);
        let l2 = b.leaf(vec![1, 2]);
        let ch = b.choose(2, vec![l1, l2]);
        let root = b.cut(1, 1, ch);
        let s = stats(&Protocol::Bc(b.finish(2, root)));
        assert_eq!(
            (
                s.nodes,
                s.cuts,
                s.chooses,
                s.leaves,
                s.depth,
                s.max_branching
            ),
            (4, 1, 1, 2, 2, 2)
        );
    }
}
