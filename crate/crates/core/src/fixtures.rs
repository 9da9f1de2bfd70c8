//! Seeded random protocols for tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{
    BcBuilder, BcDag, BcNode, BcTree, Branch, Condition, CutRef, ExtBcTree, ExtBuilder, ExtNode,
    GccBuilder, GccMode, GccNode, GccTree, NodeId, PartialOrder, PieceRef, Segment,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` agents in turn cutting anywhere in the cake; agent 1 gets it all.
pub fn unrestricted_cut_chain(n: usize) -> ExtBcTree {
    let mut b = ExtBuilder::new();
    let ids: Vec<NodeId> = (0..n).map(|_| b.reserve()).collect();
    let leaf = b.push(ExtNode::Leaf {
        segments: vec![Segment {
            left: CutRef::Origin,
            right: CutRef::End,
            agent: 1,
        }],
    });
    for (k, id) in ids.iter().enumerate() {
        let child = ids.get(k + 1).copied().unwrap_or(leaf);
        b.set(
            *id,
            ExtNode::Cut {
                agent: k + 1,
                left: CutRef::Origin,
                right: CutRef::End,
                child,
            },
        );
    }
    b.finish(n, ids.first().copied().unwrap_or(leaf))
}

/// Agent 1 makes `m - 1` cuts, then agent 2 picks one of the `m` pieces
/// and cuts it. Pieces alternate between the two agents.
pub fn cut_after_choice(m: usize) -> BcTree {
    let mut b = BcBuilder::new();
    let branches: Vec<NodeId> = (1..=m)
        .map(|j| {
            let leaf = b.leaf((0..=m).map(|k| 1 + k % 2).collect());
            b.cut(2, j, leaf)
        })
        .collect();
    let mut top = b.choose(2, branches);
    for _ in 1..m {
        top = b.cut(1, 1, top);
    }
    b.finish(2, top)
}

/// Random BC tree with at most about `max_nodes` nodes.
pub fn random_bc_tree(seed: u64, agents: usize, max_nodes: usize) -> BcTree {
    let mut r = rng(seed);
    let mut nodes = Vec::new();
    let mut budget = max_nodes.max(1) as i64;
    let root = bc_node(&mut r, agents, 1, &mut budget, &mut nodes);
    BcTree {
        agents,
        nodes,
        root,
    }
}

fn bc_node(
    r: &mut ChaCha8Rng,
    agents: usize,
    pieces: usize,
    budget: &mut i64,
    nodes: &mut Vec<BcNode>,
) -> NodeId {
    *budget -= 1;
    let id = NodeId::from(nodes.len());
    nodes.push(BcNode::Leaf { assign: Vec::new() });
    let roll = if *budget <= 1 { 0 } else { r.gen_range(0..10) };
    let node = match roll {
        0..=2 => BcNode::Leaf {
            assign: (0..pieces).map(|_| r.gen_range(1..=agents)).collect(),
        },
        3..=6 => {
            let piece = r.gen_range(1..=pieces);
            let child = bc_node(r, agents, pieces + 1, budget, nodes);
            BcNode::Cut {
                agent: r.gen_range(1..=agents),
                piece,
                child,
            }
        }
        _ => {
            let k = r.gen_range(1..=3);
            let children = (0..k)
                .map(|_| bc_node(r, agents, pieces, budget, nodes))
                .collect();
            BcNode::Choose {
                agent: r.gen_range(1..=agents),
                children,
            }
        }
    };
    nodes[id.index()] = node;
    id
}

/// Random BC DAG: a random tree in which some children are replaced by
/// already finished nodes with the same number of cuts above them.
pub fn random_bc_dag(seed: u64, agents: usize, max_nodes: usize) -> BcDag {
    let mut r = rng(seed);
    let mut nodes = Vec::new();
    let mut finished: Vec<Vec<NodeId>> = Vec::new();
    let mut budget = max_nodes.max(1) as i64;
    let root = dag_node(&mut r, agents, 0, &mut budget, &mut nodes, &mut finished);
    BcDag {
        agents,
        nodes,
        root,
    }
}

fn dag_node(
    r: &mut ChaCha8Rng,
    agents: usize,
    cuts: usize,
    budget: &mut i64,
    nodes: &mut Vec<BcNode>,
    finished: &mut Vec<Vec<NodeId>>,
) -> NodeId {
    if finished.len() <= cuts {
        finished.resize(cuts + 1, Vec::new());
    }
    if !finished[cuts].is_empty() && r.gen_bool(0.3) {
        return *finished[cuts].choose(r).expect("nonempty");
    }
    *budget -= 1;
    let id = NodeId::from(nodes.len());
    nodes.push(BcNode::Leaf { assign: Vec::new() });
    let roll = if *budget <= 1 { 0 } else { r.gen_range(0..10) };
    let node = match roll {
        0..=2 => BcNode::Leaf {
            assign: (0..=cuts).map(|_| r.gen_range(1..=agents)).collect(),
        },
        3..=6 => {
            let piece = r.gen_range(1..=cuts + 1);
            let child = dag_node(r, agents, cuts + 1, budget, nodes, finished);
            BcNode::Cut {
                agent: r.gen_range(1..=agents),
                piece,
                child,
            }
        }
        _ => {
            let k = r.gen_range(1..=3);
            let children = (0..k)
                .map(|_| dag_node(r, agents, cuts, budget, nodes, finished))
                .collect();
            BcNode::Choose {
                agent: r.gen_range(1..=agents),
                children,
            }
        }
    };
    nodes[id.index()] = node;
    finished[cuts].push(id);
    id
}

/// Random extended BC tree. Cuts go between any two cuts whose order is
/// known; leaves hand out a random chain of known pieces.
pub fn random_ext_tree(seed: u64, agents: usize, max_nodes: usize) -> ExtBcTree {
    let mut r = rng(seed);
    let mut b = ExtBuilder::new();
    let mut budget = max_nodes.max(1) as i64;
    let order = PartialOrder::new();
    let root = ext_node(&mut r, agents, &order, &mut budget, &mut b);
    b.finish(agents, root)
}

fn ext_node(
    r: &mut ChaCha8Rng,
    agents: usize,
    order: &PartialOrder,
    budget: &mut i64,
    b: &mut ExtBuilder,
) -> NodeId {
    *budget -= 1;
    let id = b.reserve();
    let roll = if *budget <= 1 { 0 } else { r.gen_range(0..10) };
    let refs = order.refs().to_vec();
    let node = match roll {
        0..=2 => {
            let mut segments = Vec::new();
            let mut at = CutRef::Origin;
            while at != CutRef::End {
                let next: Vec<CutRef> = refs
                    .iter()
                    .copied()
                    .filter(|x| order.is_less(at, *x))
                    .collect();
                let right = *next.choose(r).expect("end is always after");
                segments.push(Segment {
                    left: at,
                    right,
                    agent: r.gen_range(1..=agents),
                });
                at = right;
            }
            ExtNode::Leaf { segments }
        }
        3..=6 => {
            let pairs: Vec<(CutRef, CutRef)> = refs
                .iter()
                .flat_map(|a| refs.iter().map(move |c| (*a, *c)))
                .filter(|(a, c)| order.is_less(*a, *c))
                .collect();
            let (left, right) = *pairs.choose(r).expect("origin before end");
            let mut next = order.clone();
            next.add_cut(CutRef::MadeAt(id), left, right);
            let child = ext_node(r, agents, &next, budget, b);
            ExtNode::Cut {
                agent: r.gen_range(1..=agents),
                left,
                right,
                child,
            }
        }
        _ => {
            let k = r.gen_range(1..=3);
            let children = (0..k)
                .map(|_| ext_node(r, agents, order, budget, b))
                .collect();
            ExtNode::Choose {
                agent: r.gen_range(1..=agents),
                children,
            }
        }
    };
    b.set(id, node);
    id
}

/// Random restricted GCC tree. Every cut or choice over several pieces is
/// followed by an if-else naming the piece taken, so the order of all cuts
/// is known on every path; leaves are preceded by picks of all pieces not
/// handed out yet.
pub fn random_gcc_tree(seed: u64, agents: usize, max_nodes: usize) -> GccTree {
    let mut r = rng(seed);
    let mut g = GccBuilder::new();
    let mut budget = max_nodes.max(1) as i64;
    let state = GccState {
        order: vec![CutRef::Origin, CutRef::End],
        free: vec![PieceRef::new(CutRef::Origin, CutRef::End)],
    };
    let root = gcc_node(&mut r, agents, state, &mut budget, &mut g);
    g.finish(agents, GccMode::Restricted, root)
}

#[derive(Clone)]
struct GccState {
    order: Vec<CutRef>,
    /// Pieces between adjacent cuts not handed out yet.
    free: Vec<PieceRef>,
}

fn gcc_node(
    r: &mut ChaCha8Rng,
    agents: usize,
    state: GccState,
    budget: &mut i64,
    g: &mut GccBuilder,
) -> NodeId {
    *budget -= 1;
    let roll = if *budget <= 1 || state.free.is_empty() {
        0
    } else {
        r.gen_range(0..10)
    };
    match roll {
        0..=1 => {
            let leaf = g.push(GccNode::Leaf);
            state.free.iter().rev().fold(leaf, |child, p| {
                g.push(GccNode::Choose {
                    agent: r.gen_range(1..=agents),
                    pieces: vec![*p],
                    child,
                })
            })
        }
        2..=5 => {
            let k = r.gen_range(1..=state.free.len().min(2));
            let mut entries: Vec<PieceRef> = state.free.choose_multiple(r, k).copied().collect();
            entries.sort_by_key(|p| state.order.iter().position(|x| *x == p.left));
            let id = g.reserve();
            let mut kids = Vec::with_capacity(k);
            for p in &entries {
                let mut s = state.clone();
                let at = s.order.iter().position(|x| *x == p.right).expect("known");
                s.order.insert(at, CutRef::MadeAt(id));
                let i = s.free.iter().position(|f| f == p).expect("free");
                s.free.remove(i);
                s.free.insert(i, PieceRef::new(CutRef::MadeAt(id), p.right));
                s.free.insert(i, PieceRef::new(p.left, CutRef::MadeAt(id)));
                kids.push(gcc_node(r, agents, s, budget, g));
            }
            let child = if k == 1 {
                kids[0]
            } else {
                dispatch(g, id, kids, true)
            };
            g.set(
                id,
                GccNode::Cut {
                    agent: r.gen_range(1..=agents),
                    pieces: entries,
                    child,
                },
            );
            id
        }
        6..=8 => {
            let k = r.gen_range(1..=state.free.len().min(3));
            let entries: Vec<PieceRef> = state.free.choose_multiple(r, k).copied().collect();
            let id = g.reserve();
            let mut kids = Vec::with_capacity(k);
            for p in &entries {
                let mut s = state.clone();
                s.free.retain(|f| f != p);
                kids.push(gcc_node(r, agents, s, budget, g));
            }
            let child = if k == 1 {
                kids[0]
            } else {
                dispatch(g, id, kids, false)
            };
            g.set(
                id,
                GccNode::Choose {
                    agent: r.gen_range(1..=agents),
                    pieces: entries,
                    child,
                },
            );
            id
        }
        _ => {
            let a = *state.order.choose(r).expect("nonempty");
            let b = *state.order.choose(r).expect("nonempty");
            let yes = gcc_node(r, agents, state.clone(), budget, g);
            let no = gcc_node(r, agents, state, budget, g);
            g.push(GccNode::IfElse {
                branches: vec![
                    Branch {
                        condition: Condition::Less(a, b),
                        child: yes,
                    },
                    Branch {
                        condition: Condition::Else,
                        child: no,
                    },
                ],
            })
        }
    }
}

fn dispatch(g: &mut GccBuilder, node: NodeId, kids: Vec<NodeId>, cut: bool) -> NodeId {
    let k = kids.len();
    let branches = kids
        .into_iter()
        .enumerate()
        .map(|(t, child)| Branch {
            condition: match (t + 1 == k, cut) {
                (true, _) => Condition::Else,
                (false, true) => Condition::CutInAt { node, piece: t },
                (false, false) => Condition::ChoseAt { node, piece: t },
            },
            child,
        })
        .collect();
    g.push(GccNode::IfElse { branches })
}
