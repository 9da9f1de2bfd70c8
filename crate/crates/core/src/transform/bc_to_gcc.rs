use std::collections::HashSet;

use super::check_input;
use crate::error::TransformError;
use crate::ir::{
    BcNode, BcTree, Branch, Condition, CutRef, GccBuilder, GccMode, GccNode, GccTree, NodeId,
    PieceRef, Protocol,
};

struct Layout {
    /// `a[i]` for `i` in `0..=n`; `a[0]` is the end of the cake.
    a: Vec<CutRef>,
    /// Sub-pieces of each agent's reserved piece, one per choose node of the
    /// agent, or the whole reserved piece if the agent has none.
    slots: Vec<Vec<PieceRef>>,
    /// Index of each BC choose node among its agent's choose nodes.
    slot_of: Vec<Option<usize>>,
}

struct Converter<'a> {
    src: &'a BcTree,
    layout: Layout,
    b: GccBuilder,
}

impl Converter<'_> {
    fn cut(&mut self, agent: usize, left: CutRef, right: CutRef) -> (NodeId, CutRef) {
        let id = self.b.reserve();
        self.b.set(
            id,
            GccNode::Cut {
                agent,
                pieces: vec![PieceRef::new(left, right)],
                child: id,
            },
        );
        (id, CutRef::MadeAt(id))
    }

    fn link(&mut self, id: NodeId, next: NodeId) {
        if let GccNode::Cut { child, .. } | GccNode::Choose { child, .. } =
            &mut self.b.nodes[id.index()]
        {
            *child = next;
        }
    }

    /// Singleton choose nodes handing out `items` in order, above `then`.
    fn singles(&mut self, items: &[(usize, PieceRef)], then: NodeId) -> NodeId {
        items.iter().rev().fold(then, |child, (agent, p)| {
            self.b.push(GccNode::Choose {
                agent: *agent,
                pieces: vec![*p],
                child,
            })
        })
    }

    fn convert(
        &mut self,
        id: NodeId,
        order: &[CutRef],
        reached: &HashSet<(usize, usize)>,
    ) -> NodeId {
        match self.src.node(id) {
            BcNode::Cut {
                agent,
                piece,
                child,
            } => {
                let k = (*piece).clamp(1, order.len() - 1);
                let (g, r) = self.cut(*agent, order[k - 1], order[k]);
                let mut next = order.to_vec();
                next.insert(k, r);
                let c = self.convert(*child, &next, reached);
                self.link(g, c);
                g
            }
            BcNode::Choose { agent, children } => {
                let j = self.layout.slot_of[id.index()].expect("every choose node has a slot");
                let p = self.layout.slots[*agent - 1][j];
                let mut reached = reached.clone();
                reached.insert((*agent, j));
                if children.len() == 1 {
                    let c = self.convert(children[0], order, &reached);
                    return self.singles(&[(*agent, p)], c);
                }
                let k = children.len();
                let mut bounds = vec![p.left];
                let mut first = None;
                let mut last: Option<NodeId> = None;
                for _ in 1..k {
                    let prev = *bounds.last().expect("nonempty");
                    let (g, r) = self.cut(*agent, prev, p.right);
                    if let Some(l) = last {
                        self.link(l, g);
                    }
                    first.get_or_insert(g);
                    last = Some(g);
                    bounds.push(r);
                }
                bounds.push(p.right);
                let subs: Vec<PieceRef> = bounds
                    .windows(2)
                    .map(|w| PieceRef::new(w[0], w[1]))
                    .collect();
                let choose = self.b.reserve();
                let mut branches = Vec::with_capacity(k);
                for (t, c) in children.iter().enumerate() {
                    let rest: Vec<(usize, PieceRef)> = subs
                        .iter()
                        .enumerate()
                        .filter(|(l, _)| *l != t)
                        .map(|(_, q)| (*agent, *q))
                        .collect();
                    let sub = self.convert(*c, order, &reached);
                    let top = self.singles(&rest, sub);
                    let condition = if t + 1 < k {
                        Condition::ChoseAt {
                            node: choose,
                            piece: t,
                        }
                    } else {
                        Condition::Else
                    };
                    branches.push(Branch {
                        condition,
                        child: top,
                    });
                }
                let dispatch = self.b.push(GccNode::IfElse { branches });
                self.b.set(
                    choose,
                    GccNode::Choose {
                        agent: *agent,
                        pieces: subs,
                        child: dispatch,
                    },
                );
                let last = last.expect("at least one sub-piece cut");
                self.link(last, choose);
                first.expect("at least one sub-piece cut")
            }
            BcNode::Leaf { assign } => {
                let mut items: Vec<(usize, PieceRef)> = assign
                    .iter()
                    .enumerate()
                    .map(|(k, a)| (*a, PieceRef::new(order[k], order[k + 1])))
                    .collect();
                for (i, slots) in self.layout.slots.iter().enumerate() {
                    for (j, p) in slots.iter().enumerate() {
                        if !reached.contains(&(i + 1, j)) {
                            items.push((i + 1, *p));
                        }
                    }
                }
                let leaf = self.b.push(GccNode::Leaf);
                self.singles(&items, leaf)
            }
        }
    }
}

/// Simulates a BC tree with a GCC tree.
///
/// A preamble has agent `i` cut `a_i` into `[0, a_{i-1}]` and then `b_i`
/// into `[0, b_{i-1}]`; agent `i` reserves `[b_i, b_{i-1}]` and splits it
/// into one piece per choose node it controls. The BC protocol then runs on
/// `[a_n, 1]`. A choose node with `k` branches becomes `k - 1` cuts of its
/// piece, a pick among the `k` parts, an if-else on the part picked, and
/// picks of the remaining parts. Leaves pick their pieces one by one, plus
/// every reserved piece whose choose node was not reached. The output uses
/// entries spanning earlier cuts, so it validates in extensive mode.
pub fn bc_to_gcc(t: &BcTree) -> Result<GccTree, TransformError> {
    check_input(&Protocol::Bc(t.clone()))?;
    let n = t.agents;
    let mut slot_of = vec![None; t.nodes.len()];
    let mut counts = vec![0usize; n];
    for id in t.preorder() {
        if let BcNode::Choose { agent, .. } = t.node(id) {
            slot_of[id.index()] = Some(counts[agent - 1]);
            counts[agent - 1] += 1;
        }
    }
    let mut conv = Converter {
        src: t,
        layout: Layout {
            a: vec![CutRef::End],
            slots: vec![Vec::new(); n],
            slot_of,
        },
        b: GccBuilder::new(),
    };
    let mut chain: Vec<NodeId> = Vec::new();
    for i in 1..=n {
        let prev = conv.layout.a[i - 1];
        let (g, r) = conv.cut(i, CutRef::Origin, prev);
        chain.push(g);
        conv.layout.a.push(r);
    }
    let an = conv.layout.a[n];
    let mut b = vec![an];
    for i in 1..n {
        let (g, r) = conv.cut(i, CutRef::Origin, b[i - 1]);
        chain.push(g);
        b.push(r);
    }
    b.push(CutRef::Origin);
    for i in 1..=n {
        let (lo, hi) = (b[i], b[i - 1]);
        let m = counts[i - 1];
        let mut bounds = vec![lo];
        for _ in 1..m {
            let prev = *bounds.last().expect("nonempty");
            let (g, r) = conv.cut(i, prev, hi);
            chain.push(g);
            bounds.push(r);
        }
        bounds.push(hi);
        conv.layout.slots[i - 1] = bounds
            .windows(2)
            .map(|w| PieceRef::new(w[0], w[1]))
            .collect();
    }
    let body = conv.convert(t.root, &[an, CutRef::End], &HashSet::new());
    for w in chain.windows(2) {
        conv.link(w[0], w[1]);
    }
    conv.link(*chain.last().expect("at least one agent"), body);
    Ok(conv.b.finish(n, GccMode::Extensive, chain[0]))
}
