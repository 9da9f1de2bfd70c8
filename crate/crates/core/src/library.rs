//! The classic protocols in each model, with their intended play.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::DomainError;
use crate::exec::{best_index, Action, DecisionContext, DecisionKind, Profile, Strategy};
use crate::fraction::{frac, Fraction};
use crate::ir::{
    BcNode, BcTree, Branch, Condition, CutRef, ExtBcTree, ExtBuilder, ExtNode, GccBuilder, GccMode,
    GccNode, NodeId, PieceRef, Protocol, Segment,
};
use crate::valuation::Interval;

/// What an agent intends to do at one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Intent {
    /// Cut at the point splitting off `lambda` of the value of `within`
    /// (the offered piece if `None`), clamped into the offered piece.
    Mark {
        within: Option<PieceRef>,
        lambda: Fraction,
    },
    /// Cut the most valuable offered piece so that its left part is worth
    /// the second most valuable of `among` (of the offered pieces if empty).
    Trim { among: Vec<PieceRef> },
    /// Take the branch whose pieces are worth the most.
    Prefer(Vec<Vec<PieceRef>>),
    /// Take the branch counting how many `pivots` lie at or left of the
    /// mark of `lambda` in `within`.
    Locate {
        within: PieceRef,
        lambda: Fraction,
        pivots: Vec<CutRef>,
    },
}

/// Plays the intents of a bundle. Nodes without an intent get a half mark of
/// the first offered piece, the first branch, or the best offered piece.
#[derive(Clone, Debug)]
pub struct IntentStrategy {
    intents: Arc<HashMap<NodeId, Intent>>,
}

fn resolve(ctx: &DecisionContext<'_>, p: &PieceRef) -> Result<Interval, String> {
    let get = |r: CutRef| {
        ctx.position(r)
            .cloned()
            .ok_or_else(|| format!("{r} has not been cut"))
    };
    Ok(Interval::new(get(p.left)?, get(p.right)?))
}

fn clamp(x: Fraction, iv: &Interval) -> Fraction {
    x.max(iv.lo.clone()).min(iv.hi.clone())
}

impl Strategy for IntentStrategy {
    fn decide(&self, ctx: &DecisionContext<'_>) -> Result<Action, String> {
        let intent = self.intents.get(&ctx.node());
        match (ctx.kind(), intent) {
            (DecisionKind::Cut { options }, Some(Intent::Mark { within, lambda })) => {
                let iv = match within {
                    Some(p) => resolve(ctx, p)?,
                    None => options[0].clone(),
                };
                let z = ctx
                    .valuation
                    .mark(&iv.lo, &iv.hi, lambda)
                    .map_err(|e| e.to_string())?;
                Ok(Action::Cut {
                    piece: 0,
                    at: clamp(z, &options[0]),
                })
            }
            (DecisionKind::Cut { options }, Some(Intent::Trim { among })) => {
                let (piece, mut values) = if among.is_empty() {
                    (
                        ctx.best_option(),
                        options.iter().map(|iv| ctx.value(iv)).collect::<Vec<_>>(),
                    )
                } else {
                    let v = among
                        .iter()
                        .map(|p| resolve(ctx, p).map(|iv| ctx.value(&iv)))
                        .collect::<Result<Vec<_>, _>>()?;
                    (0, v)
                };
                values.sort_by(|a, b| b.cmp(a));
                let target = values
                    .get(1)
                    .or(values.first())
                    .cloned()
                    .unwrap_or_else(Fraction::zero);
                let iv = &options[piece];
                let own = ctx.value(iv);
                let lambda = target
                    .checked_div(&own)
                    .unwrap_or_else(Fraction::zero)
                    .min(Fraction::one());
                ctx.mark_action(piece, &lambda)
            }
            (DecisionKind::Cut { .. }, _) => ctx.mark_action(0, &frac(1, 2)),
            (DecisionKind::Branch { count }, Some(Intent::Prefer(lists))) => {
                let values = lists
                    .iter()
                    .map(|ps| {
                        let ivs = ps
                            .iter()
                            .map(|p| resolve(ctx, p))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(ctx.valuation.value_of(&ivs))
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(Action::Branch {
                    child: best_index(values).min(count - 1),
                })
            }
            (
                DecisionKind::Branch { count },
                Some(Intent::Locate {
                    within,
                    lambda,
                    pivots,
                }),
            ) => {
                let iv = resolve(ctx, within)?;
                let z = ctx
                    .valuation
                    .mark(&iv.lo, &iv.hi, lambda)
                    .map_err(|e| e.to_string())?;
                let mut child = 0;
                for p in pivots {
                    if ctx.position(*p).ok_or("pivot has not been cut")? <= &z {
                        child += 1;
                    }
                }
                Ok(Action::Branch {
                    child: child.min(count - 1),
                })
            }
            (DecisionKind::Branch { .. }, _) => Ok(Action::Branch { child: 0 }),
            (DecisionKind::Pick { .. }, _) => Ok(Action::Pick {
                piece: ctx.best_option(),
            }),
        }
    }
}

/// Intended play for every agent of one generated protocol.
#[derive(Clone, Debug)]
pub struct StrategyBundle {
    pub name: String,
    pub agents: usize,
    intents: Arc<HashMap<NodeId, Intent>>,
}

impl StrategyBundle {
    pub fn new(name: &str, agents: usize, intents: HashMap<NodeId, Intent>) -> Self {
        StrategyBundle {
            name: name.to_string(),
            agents,
            intents: Arc::new(intents),
        }
    }

    pub fn intent(&self, node: NodeId) -> Option<&Intent> {
        self.intents.get(&node)
    }

    pub fn strategy(&self) -> Arc<dyn Strategy> {
        Arc::new(IntentStrategy {
            intents: self.intents.clone(),
        })
    }

    pub fn profile(&self) -> Profile {
        (0..self.agents).map(|_| self.strategy()).collect()
    }
}

/// A generated protocol together with its intended play.
#[derive(Clone, Debug)]
pub struct Generated {
    pub protocol: Protocol,
    pub bundle: StrategyBundle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Gcc,
    ExtBc,
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gcc" => Ok(Model::Gcc),
            "extbc" => Ok(Model::ExtBc),
            other => Err(format!("no such model for this generator: `{other}`")),
        }
    }
}

fn piece(l: CutRef, r: CutRef) -> PieceRef {
    PieceRef::new(l, r)
}

fn cut(id: NodeId) -> CutRef {
    CutRef::MadeAt(id)
}

fn mark(lambda: Fraction) -> Intent {
    Intent::Mark {
        within: None,
        lambda,
    }
}

/// Top-down BC construction.
#[derive(Default)]
struct BcDraft {
    nodes: Vec<BcNode>,
}

impl BcDraft {
    fn reserve(&mut self) -> NodeId {
        self.nodes.push(BcNode::Leaf { assign: Vec::new() });
        NodeId::from(self.nodes.len() - 1)
    }

    fn set(&mut self, id: NodeId, n: BcNode) {
        self.nodes[id.index()] = n;
    }

    fn leaf(&mut self, order: &[CutRef], owner: &HashMap<(CutRef, CutRef), usize>) -> NodeId {
        let assign = order.windows(2).map(|w| owner[&(w[0], w[1])]).collect();
        let id = self.reserve();
        self.set(id, BcNode::Leaf { assign });
        id
    }
}

/// Cut and choose: agent 1 cuts the cake, agent 2 takes a side.
pub fn gen_cut_and_choose() -> (Generated, Generated) {
    let bc = BcTree {
        agents: 2,
        nodes: vec![
            BcNode::Cut {
                agent: 1,
                piece: 1,
                child: NodeId(1),
            },
            BcNode::Choose {
                agent: 2,
                children: vec![NodeId(2), NodeId(3)],
            },
            BcNode::Leaf { assign: vec![2, 1] },
            BcNode::Leaf { assign: vec![1, 2] },
        ],
        root: NodeId(0),
    };
    let x = cut(NodeId(0));
    let mut bc_intents = HashMap::new();
    bc_intents.insert(NodeId(0), mark(frac(1, 2)));
    bc_intents.insert(
        NodeId(1),
        Intent::Prefer(vec![
            vec![piece(CutRef::Origin, x)],
            vec![piece(x, CutRef::End)],
        ]),
    );

    let mut g = GccBuilder::new();
    let c = g.reserve();
    let pick = g.reserve();
    let dispatch = g.reserve();
    let leaf_a = g.push(GccNode::Leaf);
    let right = g.push(GccNode::Choose {
        agent: 1,
        pieces: vec![piece(x, CutRef::End)],
        child: leaf_a,
    });
    let leaf_b = g.push(GccNode::Leaf);
    let left = g.push(GccNode::Choose {
        agent: 1,
        pieces: vec![piece(CutRef::Origin, x)],
        child: leaf_b,
    });
    g.set(
        c,
        GccNode::Cut {
            agent: 1,
            pieces: vec![piece(CutRef::Origin, CutRef::End)],
            child: pick,
        },
    );
    g.set(
        pick,
        GccNode::Choose {
            agent: 2,
            pieces: vec![piece(CutRef::Origin, x), piece(x, CutRef::End)],
            child: dispatch,
        },
    );
    g.set(
        dispatch,
        GccNode::IfElse {
            branches: vec![
                Branch {
                    condition: Condition::ChoseAt {
                        node: pick,
                        piece: 0,
                    },
                    child: right,
                },
                Branch {
                    condition: Condition::Else,
                    child: left,
                },
            ],
        },
    );
    let mut gcc_intents = HashMap::new();
    gcc_intents.insert(c, mark(frac(1, 2)));
    (
        Generated {
            protocol: Protocol::Bc(bc),
            bundle: StrategyBundle::new("honest", 2, bc_intents),
        },
        Generated {
            protocol: Protocol::Gcc(g.finish(2, GccMode::Restricted, c)),
            bundle: StrategyBundle::new("honest", 2, gcc_intents),
        },
    )
}

/// The Selfridge-Conway protocol as a BC tree of 150 nodes.
///
/// Agent 1 cuts thirds at `x0` and `x1`. Agent 2 picks the big piece to trim
/// and cuts it at `y`, keeping the left part. Agent 3 picks a big piece. If
/// it took the trimmed one, agent 2 cuts the trimmings in thirds, picks
/// between the two other big pieces and agent 3 then agent 1 pick
/// trimmings. Otherwise agent 2 gets the trimmed piece, agent 3 cuts the
/// trimmings and agent 2 then agent 1 pick from them.
pub fn gen_selfridge_conway_bc() -> Generated {
    let mut d = BcDraft::default();
    let mut intents = HashMap::new();
    let n0 = d.reserve();
    let n1 = d.reserve();
    let trim = d.reserve();
    let (x0, x1) = (cut(n0), cut(n1));
    d.set(
        n0,
        BcNode::Cut {
            agent: 1,
            piece: 1,
            child: n1,
        },
    );
    d.set(
        n1,
        BcNode::Cut {
            agent: 1,
            piece: 2,
            child: trim,
        },
    );
    intents.insert(n0, mark(frac(1, 3)));
    intents.insert(n1, mark(frac(1, 2)));
    let bounds = [CutRef::Origin, x0, x1, CutRef::End];
    let big: Vec<PieceRef> = bounds.windows(2).map(|w| piece(w[0], w[1])).collect();
    intents.insert(trim, Intent::Prefer(big.iter().map(|p| vec![*p]).collect()));
    let mut branches = Vec::new();
    for t in 0..3 {
        let ny = d.reserve();
        branches.push(ny);
        let y = cut(ny);
        intents.insert(ny, Intent::Trim { among: big.clone() });
        let (l, r) = (bounds[t], bounds[t + 1]);
        let a1 = piece(l, y);
        let others: Vec<PieceRef> = (0..3).filter(|s| *s != t).map(|s| big[s]).collect();
        let mut order = bounds.to_vec();
        order.insert(t + 1, y);
        let third = d.reserve();
        d.set(
            ny,
            BcNode::Cut {
                agent: 2,
                piece: t + 1,
                child: third,
            },
        );
        intents.insert(
            third,
            Intent::Prefer(vec![vec![a1], vec![others[0]], vec![others[1]]]),
        );
        let mut kids = Vec::new();
        for took in 0..3 {
            // agent 3 takes a1 (took = 0) or one of the two other big pieces
            let (x_agent, y_agent) = if took == 0 { (3, 2) } else { (2, 3) };
            let n_y1 = d.reserve();
            kids.push(n_y1);
            let n_y2 = d.reserve();
            let (y1, y2) = (cut(n_y1), cut(n_y2));
            let mut ord = order.clone();
            let at = ord.iter().position(|c| *c == y).expect("trim cut") + 1;
            d.set(
                n_y1,
                BcNode::Cut {
                    agent: y_agent,
                    piece: at,
                    child: n_y2,
                },
            );
            ord.insert(at, y1);
            let next = d.reserve();
            d.set(
                n_y2,
                BcNode::Cut {
                    agent: y_agent,
                    piece: at + 1,
                    child: next,
                },
            );
            ord.insert(at + 1, y2);
            intents.insert(n_y1, mark(frac(1, 3)));
            intents.insert(n_y2, mark(frac(1, 2)));
            let trimmings = [piece(y, y1), piece(y1, y2), piece(y2, r)];
            let key = |p: PieceRef| (p.left, p.right);
            let mut owner: HashMap<(CutRef, CutRef), usize> = HashMap::new();
            let mut bigs: Vec<Vec<(PieceRef, usize)>> = Vec::new();
            if took == 0 {
                // agent 2 takes one of the other two big pieces
                for b in 0..2 {
                    bigs.push(vec![(a1, 3), (others[b], 2), (others[1 - b], 1)]);
                }
            } else {
                bigs.push(vec![(others[took - 1], 3), (a1, 2), (others[2 - took], 1)]);
            }
            let mut trimming =
                |d: &mut BcDraft, owner: &mut HashMap<(CutRef, CutRef), usize>, top: NodeId| {
                    let mut firsts = Vec::new();
                    for u in 0..3 {
                        let second = d.reserve();
                        firsts.push(second);
                        let rest: Vec<usize> = (0..3).filter(|w| *w != u).collect();
                        let mut leaves = Vec::new();
                        for &w in &rest {
                            let last = rest.iter().copied().find(|z| *z != w).expect("two left");
                            owner.insert(key(trimmings[u]), x_agent);
                            owner.insert(key(trimmings[w]), 1);
                            owner.insert(key(trimmings[last]), y_agent);
                            leaves.push(d.leaf(&ord, owner));
                        }
                        d.set(
                            second,
                            BcNode::Choose {
                                agent: 1,
                                children: leaves,
                            },
                        );
                        intents.insert(
                            second,
                            Intent::Prefer(rest.iter().map(|w| vec![trimmings[*w]]).collect()),
                        );
                    }
                    d.set(
                        top,
                        BcNode::Choose {
                            agent: x_agent,
                            children: firsts,
                        },
                    );
                    intents.insert(
                        top,
                        Intent::Prefer(trimmings.iter().map(|p| vec![*p]).collect()),
                    );
                };
            if took == 0 {
                let mut picks = Vec::new();
                for assignment in &bigs {
                    let top = d.reserve();
                    picks.push(top);
                    for (p, a) in assignment {
                        owner.insert(key(*p), *a);
                    }
                    owner.insert((l, y), 3);
                    trimming(&mut d, &mut owner, top);
                }
                d.set(
                    next,
                    BcNode::Choose {
                        agent: 2,
                        children: picks,
                    },
                );
                intents.insert(next, Intent::Prefer(vec![vec![others[0]], vec![others[1]]]));
            } else {
                for (p, a) in &bigs[0] {
                    owner.insert(key(*p), *a);
                }
                trimming(&mut d, &mut owner, next);
            }
        }
        d.set(
            third,
            BcNode::Choose {
                agent: 3,
                children: kids,
            },
        );
    }
    d.set(
        trim,
        BcNode::Choose {
            agent: 2,
            children: branches,
        },
    );
    let tree = BcTree {
        agents: 3,
        nodes: d.nodes,
        root: n0,
    };
    Generated {
        protocol: Protocol::Bc(tree),
        bundle: StrategyBundle::new("envy-free", 3, intents),
    }
}

/// Picks of single pieces in order, above `then`.
fn gcc_singles(g: &mut GccBuilder, items: &[(usize, PieceRef)], then: NodeId) -> NodeId {
    items.iter().rev().fold(then, |child, (agent, p)| {
        g.push(GccNode::Choose {
            agent: *agent,
            pieces: vec![*p],
            child,
        })
    })
}

/// If-else on the entry taken at `node`, one branch per entry.
fn dispatch(g: &mut GccBuilder, node: NodeId, children: Vec<NodeId>) -> NodeId {
    dispatch_from(g, node, 0, children)
}

/// Agent `y` cuts `[y0, r]` in thirds, `x` then agent 1 pick, `y` takes the rest.
fn gcc_trimmings(
    g: &mut GccBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    x: usize,
    y: usize,
    y0: CutRef,
    r: CutRef,
) -> NodeId {
    let c1 = g.reserve();
    let c2 = g.reserve();
    let pick = g.reserve();
    let (y1, y2) = (cut(c1), cut(c2));
    g.set(
        c1,
        GccNode::Cut {
            agent: y,
            pieces: vec![piece(y0, r)],
            child: c2,
        },
    );
    g.set(
        c2,
        GccNode::Cut {
            agent: y,
            pieces: vec![piece(y1, r)],
            child: pick,
        },
    );
    intents.insert(c1, mark(frac(1, 3)));
    intents.insert(c2, mark(frac(1, 2)));
    let t = [piece(y0, y1), piece(y1, y2), piece(y2, r)];
    let mut after_first = Vec::new();
    for u in 0..3 {
        let rest: Vec<PieceRef> = (0..3).filter(|w| *w != u).map(|w| t[w]).collect();
        let second = g.reserve();
        let ends: Vec<NodeId> = (0..2)
            .map(|w| {
                let leaf = g.push(GccNode::Leaf);
                gcc_singles(g, &[(y, rest[1 - w])], leaf)
            })
            .collect();
        let d = dispatch(g, second, ends);
        g.set(
            second,
            GccNode::Choose {
                agent: 1,
                pieces: rest,
                child: d,
            },
        );
        after_first.push(second);
    }
    let d = dispatch(g, pick, after_first);
    g.set(
        pick,
        GccNode::Choose {
            agent: x,
            pieces: t.to_vec(),
            child: d,
        },
    );
    c1
}

/// Selfridge-Conway with every labelling made explicit by if-else nodes.
pub fn gen_selfridge_conway_gcc() -> Generated {
    let mut g = GccBuilder::new();
    let mut intents = HashMap::new();
    let n0 = g.reserve();
    let n1 = g.reserve();
    let n2 = g.reserve();
    let (x0, x1) = (cut(n0), cut(n1));
    g.set(
        n0,
        GccNode::Cut {
            agent: 1,
            pieces: vec![piece(CutRef::Origin, CutRef::End)],
            child: n1,
        },
    );
    g.set(
        n1,
        GccNode::Cut {
            agent: 1,
            pieces: vec![piece(x0, CutRef::End)],
            child: n2,
        },
    );
    intents.insert(n0, mark(frac(1, 3)));
    intents.insert(n1, mark(frac(1, 2)));
    intents.insert(n2, Intent::Trim { among: Vec::new() });
    let bounds = [CutRef::Origin, x0, x1, CutRef::End];
    let big: Vec<PieceRef> = bounds.windows(2).map(|w| piece(w[0], w[1])).collect();
    let y = cut(n2);
    let mut per_piece = Vec::new();
    for t in 0..3 {
        let (l, r) = (bounds[t], bounds[t + 1]);
        let a1 = piece(l, y);
        let others: Vec<PieceRef> = (0..3).filter(|s| *s != t).map(|s| big[s]).collect();
        let c3 = g.reserve();
        // agent 3 took a1: agent 2 picks between the other two, agent 1 gets the rest
        let c2 = g.reserve();
        let mut ends = Vec::new();
        for b in 0..2 {
            let trims = gcc_trimmings(&mut g, &mut intents, 3, 2, y, r);
            ends.push(gcc_singles(&mut g, &[(1, others[1 - b])], trims));
        }
        let d2 = dispatch(&mut g, c2, ends);
        g.set(
            c2,
            GccNode::Choose {
                agent: 2,
                pieces: others.clone(),
                child: d2,
            },
        );
        // agent 3 took another piece: agent 2 gets a1, agent 1 the last one
        let mut rest = Vec::new();
        for b in 0..2 {
            let trims = gcc_trimmings(&mut g, &mut intents, 2, 3, y, r);
            rest.push(gcc_singles(&mut g, &[(1, others[1 - b])], trims));
        }
        let d_rest = dispatch_from(&mut g, c3, 1, rest);
        let a1_to_2 = gcc_singles(&mut g, &[(2, a1)], d_rest);
        let d3 = g.push(GccNode::IfElse {
            branches: vec![
                Branch {
                    condition: Condition::ChoseAt { node: c3, piece: 0 },
                    child: c2,
                },
                Branch {
                    condition: Condition::Else,
                    child: a1_to_2,
                },
            ],
        });
        g.set(
            c3,
            GccNode::Choose {
                agent: 3,
                pieces: vec![a1, others[0], others[1]],
                child: d3,
            },
        );
        per_piece.push(c3);
    }
    let top = g.push(GccNode::IfElse {
        branches: per_piece
            .iter()
            .enumerate()
            .map(|(t, c)| Branch {
                condition: if t < 2 {
                    Condition::CutInAt { node: n2, piece: t }
                } else {
                    Condition::Else
                },
                child: *c,
            })
            .collect(),
    });
    g.set(
        n2,
        GccNode::Cut {
            agent: 2,
            pieces: big.clone(),
            child: top,
        },
    );
    Generated {
        protocol: Protocol::Gcc(g.finish(3, GccMode::Extensive, n0)),
        bundle: StrategyBundle::new("envy-free", 3, intents),
    }
}

/// If-else on the entry taken at `node`, for entries `first..`.
fn dispatch_from(g: &mut GccBuilder, node: NodeId, first: usize, children: Vec<NodeId>) -> NodeId {
    let k = children.len();
    let branches = children
        .into_iter()
        .enumerate()
        .map(|(t, child)| Branch {
            condition: if t + 1 < k {
                Condition::ChoseAt {
                    node,
                    piece: first + t,
                }
            } else {
                Condition::Else
            },
            child,
        })
        .collect();
    g.push(GccNode::IfElse { branches })
}

fn check_agents(n: usize) -> Result<(), DomainError> {
    if n < 2 {
        return Err(DomainError::Invalid(format!(
            "need at least 2 agents, got {n}"
        )));
    }
    Ok(())
}

/// Dubins-Spanier: every remaining agent marks its share of what is left,
/// the leftmost mark wins the piece up to it. Ties go to the lowest index.
pub fn gen_dubins_spanier(n: usize, model: Model) -> Result<Generated, DomainError> {
    check_agents(n)?;
    let agents: Vec<usize> = (1..=n).collect();
    let mut intents = HashMap::new();
    let protocol = match model {
        Model::Gcc => {
            let mut g = GccBuilder::new();
            let root = ds_gcc(&mut g, &mut intents, &agents, CutRef::Origin);
            Protocol::Gcc(g.finish(n, GccMode::Extensive, root))
        }
        Model::ExtBc => {
            let mut b = ExtBuilder::new();
            let root = ds_ext(&mut b, &mut intents, &agents, CutRef::Origin, Vec::new());
            Protocol::Ext(b.finish(n, root))
        }
    };
    Ok(Generated {
        protocol,
        bundle: StrategyBundle::new("honest-proportional", n, intents),
    })
}

fn ds_gcc(
    g: &mut GccBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    agents: &[usize],
    left: CutRef,
) -> NodeId {
    if let [a] = agents {
        let leaf = g.push(GccNode::Leaf);
        return gcc_singles(g, &[(*a, piece(left, CutRef::End))], leaf);
    }
    let m = agents.len();
    let cuts: Vec<NodeId> = agents.iter().map(|_| g.reserve()).collect();
    let mut branches = Vec::with_capacity(m);
    for (k, j) in agents.iter().enumerate() {
        let condition = if k + 1 == m {
            Condition::Else
        } else {
            Condition::And(
                (0..m)
                    .filter(|o| *o != k)
                    .map(|o| Condition::Less(cut(cuts[k]), cut(cuts[o])))
                    .collect(),
            )
        };
        let rest: Vec<usize> = agents.iter().copied().filter(|a| a != j).collect();
        let below = ds_gcc(g, intents, &rest, cut(cuts[k]));
        let child = gcc_singles(g, &[(*j, piece(left, cut(cuts[k])))], below);
        branches.push(Branch { condition, child });
    }
    let d = g.push(GccNode::IfElse { branches });
    for (k, a) in agents.iter().enumerate() {
        let child = cuts.get(k + 1).copied().unwrap_or(d);
        g.set(
            cuts[k],
            GccNode::Cut {
                agent: *a,
                pieces: vec![piece(left, CutRef::End)],
                child,
            },
        );
        intents.insert(cuts[k], mark(frac(1, m as i64)));
    }
    cuts[0]
}

fn ds_ext(
    b: &mut ExtBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    agents: &[usize],
    left: CutRef,
    segs: Vec<Segment>,
) -> NodeId {
    if let [a] = agents {
        let mut segments = segs;
        segments.push(Segment {
            left,
            right: CutRef::End,
            agent: *a,
        });
        return b.push(ExtNode::Leaf { segments });
    }
    let lambda = frac(1, agents.len() as i64);
    let rest_piece = piece(left, CutRef::End);
    let first = b.reserve();
    intents.insert(
        first,
        Intent::Mark {
            within: Some(rest_piece),
            lambda: lambda.clone(),
        },
    );
    let child = ds_round(b, intents, agents, 1, left, (cut(first), agents[0]), segs);
    b.set(
        first,
        ExtNode::Cut {
            agent: agents[0],
            left,
            right: CutRef::End,
            child,
        },
    );
    first
}

/// Agents from `k` on cut left or right of the leftmost cut `lm` so far.
fn ds_round(
    b: &mut ExtBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    agents: &[usize],
    k: usize,
    left: CutRef,
    lm: (CutRef, usize),
    segs: Vec<Segment>,
) -> NodeId {
    if k == agents.len() {
        let mut segments = segs;
        segments.push(Segment {
            left,
            right: lm.0,
            agent: lm.1,
        });
        let rest: Vec<usize> = agents.iter().copied().filter(|a| *a != lm.1).collect();
        return ds_ext(b, intents, &rest, lm.0, segments);
    }
    let a = agents[k];
    let lambda = frac(1, agents.len() as i64);
    let within = piece(left, CutRef::End);
    let choose = b.reserve();
    intents.insert(
        choose,
        Intent::Locate {
            within,
            lambda: lambda.clone(),
            pivots: vec![lm.0],
        },
    );
    let mut children = Vec::with_capacity(2);
    for side in 0..2 {
        let c = b.reserve();
        intents.insert(
            c,
            Intent::Mark {
                within: Some(within),
                lambda: lambda.clone(),
            },
        );
        let (l, r, next) = if side == 0 {
            (left, lm.0, (cut(c), a))
        } else {
            (lm.0, CutRef::End, lm)
        };
        let child = ds_round(b, intents, agents, k + 1, left, next, segs.clone());
        b.set(
            c,
            ExtNode::Cut {
                agent: a,
                left: l,
                right: r,
                child,
            },
        );
        children.push(c);
    }
    b.set(choose, ExtNode::Choose { agent: a, children });
    choose
}

/// Even-Paz for `n` a power of two: everyone marks half of their piece, the
/// agents with the lower half of the marks split the part left of the
/// median mark and the others the rest.
pub fn gen_even_paz(n: usize, model: Model) -> Result<Generated, DomainError> {
    check_agents(n)?;
    if !n.is_power_of_two() {
        return Err(DomainError::Invalid(format!(
            "agent count must be a power of two, got {n}"
        )));
    }
    let agents: Vec<usize> = (1..=n).collect();
    let mut intents = HashMap::new();
    let pending = vec![(agents, CutRef::Origin, CutRef::End)];
    let protocol = match model {
        Model::Gcc => {
            let mut g = GccBuilder::new();
            let root = ep_gcc(&mut g, &mut intents, pending);
            Protocol::Gcc(g.finish(n, GccMode::Extensive, root))
        }
        Model::ExtBc => {
            let mut b = ExtBuilder::new();
            let root = ep_ext(&mut b, &mut intents, pending, Vec::new());
            Protocol::Ext(b.finish(n, root))
        }
    };
    Ok(Generated {
        protocol,
        bundle: StrategyBundle::new("honest-proportional", n, intents),
    })
}

type Pending = Vec<(Vec<usize>, CutRef, CutRef)>;

/// Sets of `size` agents from `agents` containing `j`, in lexicographic order.
fn halves_with(agents: &[usize], j: usize, size: usize) -> Vec<Vec<usize>> {
    let others: Vec<usize> = agents.iter().copied().filter(|a| *a != j).collect();
    let mut out = Vec::new();
    let mut pick = vec![];
    fn rec(
        others: &[usize],
        from: usize,
        need: usize,
        pick: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if need == 0 {
            out.push(pick.clone());
            return;
        }
        for i in from..others.len() {
            pick.push(others[i]);
            rec(others, i + 1, need - 1, pick, out);
            pick.pop();
        }
    }
    rec(&others, 0, size - 1, &mut pick, &mut out);
    for s in &mut out {
        s.push(j);
        s.sort_unstable();
    }
    out
}

fn ep_gcc(
    g: &mut GccBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    mut pending: Pending,
) -> NodeId {
    if pending.is_empty() {
        return g.push(GccNode::Leaf);
    }
    let (group, l, r) = pending.remove(0);
    if let [a] = group[..] {
        let below = ep_gcc(g, intents, pending);
        return gcc_singles(g, &[(a, piece(l, r))], below);
    }
    let s = group.len();
    let cuts: Vec<NodeId> = group.iter().map(|_| g.reserve()).collect();
    let of = |a: usize| cut(cuts[group.iter().position(|x| *x == a).expect("group member")]);
    let mut cases = Vec::new();
    for &j in &group {
        for lower in halves_with(&group, j, s / 2) {
            cases.push((j, lower));
        }
    }
    let total = cases.len();
    let mut branches = Vec::with_capacity(total);
    for (idx, (j, lower)) in cases.into_iter().enumerate() {
        let condition = if idx + 1 == total {
            Condition::Else
        } else {
            Condition::And(
                group
                    .iter()
                    .filter(|a| **a != j)
                    .map(|a| {
                        if lower.contains(a) {
                            Condition::Less(of(*a), of(j))
                        } else {
                            Condition::Less(of(j), of(*a))
                        }
                    })
                    .collect(),
            )
        };
        let upper: Vec<usize> = group
            .iter()
            .copied()
            .filter(|a| !lower.contains(a))
            .collect();
        let mut next = vec![(lower, l, of(j)), (upper, of(j), r)];
        next.extend(pending.iter().cloned());
        let child = ep_gcc(g, intents, next);
        branches.push(Branch { condition, child });
    }
    let d = g.push(GccNode::IfElse { branches });
    for (k, a) in group.iter().enumerate() {
        let child = cuts.get(k + 1).copied().unwrap_or(d);
        g.set(
            cuts[k],
            GccNode::Cut {
                agent: *a,
                pieces: vec![piece(l, r)],
                child,
            },
        );
        intents.insert(cuts[k], mark(frac(1, 2)));
    }
    cuts[0]
}

fn ep_ext(
    b: &mut ExtBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    mut pending: Pending,
    segs: Vec<Segment>,
) -> NodeId {
    if pending.is_empty() {
        return b.push(ExtNode::Leaf { segments: segs });
    }
    let (group, l, r) = pending.remove(0);
    if let [a] = group[..] {
        let mut segments = segs;
        segments.push(Segment {
            left: l,
            right: r,
            agent: a,
        });
        return ep_ext(b, intents, pending, segments);
    }
    ep_round(b, intents, &group, 0, (l, r), Vec::new(), pending, segs)
}

/// Agents of `group` from `k` on cut into one of the pieces between the
/// cuts of this round so far, kept in left-to-right `order`.
#[allow(clippy::too_many_arguments)]
fn ep_round(
    b: &mut ExtBuilder,
    intents: &mut HashMap<NodeId, Intent>,
    group: &[usize],
    k: usize,
    (l, r): (CutRef, CutRef),
    order: Vec<(CutRef, usize)>,
    pending: Pending,
    segs: Vec<Segment>,
) -> NodeId {
    let s = group.len();
    if k == s {
        let (median, _) = order[s / 2 - 1];
        let mut lower: Vec<usize> = order[..s / 2].iter().map(|x| x.1).collect();
        let mut upper: Vec<usize> = order[s / 2..].iter().map(|x| x.1).collect();
        lower.sort_unstable();
        upper.sort_unstable();
        let mut next = vec![(lower, l, median), (upper, median, r)];
        next.extend(pending);
        return ep_ext(b, intents, next, segs);
    }
    let a = group[k];
    let within = piece(l, r);
    let half = Intent::Mark {
        within: Some(within),
        lambda: frac(1, 2),
    };
    if k == 0 {
        let c = b.reserve();
        intents.insert(c, half);
        let child = ep_round(
            b,
            intents,
            group,
            1,
            (l, r),
            vec![(cut(c), a)],
            pending,
            segs,
        );
        b.set(
            c,
            ExtNode::Cut {
                agent: a,
                left: l,
                right: r,
                child,
            },
        );
        return c;
    }
    let choose = b.reserve();
    intents.insert(
        choose,
        Intent::Locate {
            within,
            lambda: frac(1, 2),
            pivots: order.iter().map(|x| x.0).collect(),
        },
    );
    let mut children = Vec::with_capacity(k + 1);
    for p in 0..=k {
        let c = b.reserve();
        intents.insert(c, half.clone());
        let left = if p == 0 { l } else { order[p - 1].0 };
        let right = if p == k { r } else { order[p].0 };
        let mut next = order.clone();
        next.insert(p, (cut(c), a));
        let child = ep_round(
            b,
            intents,
            group,
            k + 1,
            (l, r),
            next,
            pending.clone(),
            segs.clone(),
        );
        b.set(
            c,
            ExtNode::Cut {
                agent: a,
                left,
                right,
                child,
            },
        );
        children.push(c);
    }
    b.set(choose, ExtNode::Choose { agent: a, children });
    choose
}

/// Product of the branching of every choose node on the path to each leaf.
pub fn leaf_branch_products(t: &ExtBcTree) -> Vec<u128> {
    let mut out = Vec::new();
    let mut stack = vec![(t.root, 1u128)];
    while let Some((id, acc)) = stack.pop() {
        match t.node(id) {
            ExtNode::Cut { child, .. } => stack.push((*child, acc)),
            ExtNode::Choose { children, .. } => {
                for c in children {
                    stack.push((*c, acc * children.len() as u128));
                }
            }
            ExtNode::Leaf { .. } => out.push(acc),
        }
    }
    out
}

/// Generator names accepted by `generate`.
pub const GENERATORS: &[&str] = &[
    "cut-and-choose",
    "selfridge-conway",
    "dubins-spanier",
    "even-paz",
];

/// Runs a generator by name. `model` is one of `bc`, `gcc`, `extbc`; BC
/// versions of the proportional protocols are not generated directly.
pub fn generate(name: &str, n: Option<usize>, model: &str) -> Result<Generated, DomainError> {
    let bad_model = || DomainError::Invalid(format!("generator `{name}` has no `{model}` form"));
    match name {
        "cut-and-choose" => {
            let (bc, gcc) = gen_cut_and_choose();
            match model {
                "bc" => Ok(bc),
                "gcc" => Ok(gcc),
                _ => Err(bad_model()),
            }
        }
        "selfridge-conway" => match model {
            "bc" => Ok(gen_selfridge_conway_bc()),
            "gcc" => Ok(gen_selfridge_conway_gcc()),
            _ => Err(bad_model()),
        },
        "dubins-spanier" | "even-paz" => {
            let n = n.ok_or_else(|| {
                DomainError::Invalid(format!("generator `{name}` needs an agent count"))
            })?;
            let m: Model = model.parse().map_err(DomainError::Invalid)?;
            if name == "dubins-spanier" {
                gen_dubins_spanier(n, m)
            } else {
                gen_even_paz(n, m)
            }
        }
        other => Err(DomainError::Invalid(format!("unknown generator `{other}`"))),
    }
}
