use std::collections::HashMap;

use super::cbc_ext::cuts_before_choices_ext;
use super::ext_to_bc::{bc_to_extended, extended_to_bc_with_budget};
use super::transport::Bridge;
use super::{check_input, Conversion, NodeMap, Transporter};
use crate::error::TransformError;
use crate::exec::{Action, DecisionContext, Event, Machine, Trace};
use crate::fraction::Fraction;
use crate::ir::{BcNode, BcTree, CutRef, NodeId, Protocol};

/// Rewrites `t` so that every choose node with a cut below it has only cut
/// children, all by the chooser, each cutting one of a run of consecutive
/// pieces.
pub fn bc_intermediate_form(t: &BcTree) -> Result<(BcTree, NodeMap), TransformError> {
    bc_intermediate_form_with_budget(t, super::DEFAULT_BUDGET)
}

pub fn bc_intermediate_form_with_budget(
    t: &BcTree,
    budget: usize,
) -> Result<(BcTree, NodeMap), TransformError> {
    check_input(&Protocol::Bc(t.clone()))?;
    let ext = bc_to_extended(t);
    let hoisted = cuts_before_choices_ext(&ext)?;
    let bc = extended_to_bc_with_budget(&hoisted.output, budget)?;
    Ok((bc.output, bc.map))
}

/// Whether every choose node either has no cut descendant or has only cut
/// children, controlled by the chooser, over consecutive pieces.
pub fn is_intermediate_form(t: &BcTree) -> bool {
    let below = cut_below(t);
    t.nodes.iter().all(|n| match n {
        BcNode::Choose { agent, children } => {
            if !children
                .iter()
                .any(|c| below[c.index()] || t.node(*c).is_cut())
            {
                return true;
            }
            let pieces: Option<Vec<usize>> = children
                .iter()
                .map(|c| match t.node(*c) {
                    BcNode::Cut {
                        agent: a, piece, ..
                    } if a == agent => Some(*piece),
                    _ => None,
                })
                .collect();
            match pieces {
                Some(p) => p.windows(2).all(|w| w[1] == w[0] + 1),
                None => false,
            }
        }
        _ => true,
    })
}

/// `below[i]`: some proper descendant of node `i` is a cut.
fn cut_below(t: &BcTree) -> Vec<bool> {
    let mut below = vec![false; t.nodes.len()];
    for id in t.preorder().into_iter().rev() {
        below[id.index()] = t
            .node(id)
            .children()
            .iter()
            .any(|c| t.node(*c).is_cut() || below[c.index()]);
    }
    below
}

/// Whether no choose node has a cut descendant.
pub fn is_cuts_before_choices(t: &BcTree) -> bool {
    let below = cut_below(t);
    t.nodes
        .iter()
        .enumerate()
        .all(|(i, n)| !matches!(n, BcNode::Choose { .. }) || !below[i])
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Pt {
    Origin,
    End,
    Chain(usize),
}

/// One copy of an original cut for a fixed choice of where each cut above
/// it really went.
#[derive(Clone, Debug)]
struct Instance {
    cut: NodeId,
    ctx: Vec<usize>,
    /// Chain cut made for each variant.
    chain: Vec<usize>,
    /// Points bounding the variant sub-pieces (`chain.len() + 1` entries).
    bounds: Vec<Pt>,
}

#[derive(Clone, Copy, Debug)]
enum Role {
    Chain { instance: usize, variant: usize },
    Variant { instance: usize },
    Same(NodeId),
}

struct Original {
    /// Cut ancestors of each node, top-down.
    cut_anc: Vec<Vec<NodeId>>,
    parents: Vec<Option<NodeId>>,
}

impl Original {
    fn new(t: &BcTree) -> Self {
        let mut cut_anc = vec![Vec::new(); t.nodes.len()];
        let mut parents = vec![None; t.nodes.len()];
        for id in t.preorder() {
            let mine = cut_anc[id.index()].clone();
            let is_cut = t.node(id).is_cut();
            for c in t.node(id).children() {
                parents[c.index()] = Some(id);
                let mut a = mine.clone();
                if is_cut {
                    a.push(id);
                }
                cut_anc[c.index()] = a;
            }
        }
        Original { cut_anc, parents }
    }
}

struct Construction<'a> {
    t: &'a BcTree,
    orig: Original,
    instances: Vec<Instance>,
    by_key: HashMap<(NodeId, Vec<usize>), usize>,
    order: Vec<Pt>,
    chain_agents: Vec<(usize, usize)>,
    budget: usize,
}

impl Construction<'_> {
    fn index(&self, p: Pt) -> usize {
        self.order
            .iter()
            .position(|x| *x == p)
            .expect("chain point")
    }

    fn real_points(&self, cuts: &[NodeId], ctx: &[usize]) -> Vec<Pt> {
        let mut pts = vec![Pt::Origin, Pt::End];
        for j in 0..cuts.len() {
            let inst = &self.instances[self.by_key[&(cuts[j], ctx[..j].to_vec())]];
            pts.push(Pt::Chain(inst.chain[ctx[j]]));
        }
        pts.sort_by_key(|p| self.index(*p));
        pts
    }

    fn add_instance(&mut self, cut: NodeId, ctx: Vec<usize>) -> Result<(), TransformError> {
        let BcNode::Cut { agent, piece, .. } = self.t.node(cut) else {
            unreachable!()
        };
        let anc = self.orig.cut_anc[cut.index()].clone();
        let real = self.real_points(&anc, &ctx);
        let (lo, hi) = (self.index(real[piece - 1]), self.index(real[*piece]));
        let bounds: Vec<Pt> = self.order[lo..=hi].to_vec();
        let mut chain = Vec::with_capacity(bounds.len() - 1);
        for q in &bounds[..bounds.len() - 1] {
            if self.chain_agents.len() >= self.budget {
                return Err(TransformError::Budget { limit: self.budget });
            }
            let id = self.chain_agents.len();
            let at = self.index(*q) + 1;
            self.chain_agents.push((*agent, at));
            self.order.insert(at, Pt::Chain(id));
            chain.push(id);
        }
        self.by_key.insert((cut, ctx.clone()), self.instances.len());
        self.instances.push(Instance {
            cut,
            ctx,
            chain,
            bounds,
        });
        Ok(())
    }
}

struct Output {
    nodes: Vec<BcNode>,
    roles: Vec<Role>,
    budget: usize,
}

impl Output {
    fn push(&mut self, n: BcNode, r: Role) -> Result<NodeId, TransformError> {
        if self.nodes.len() >= self.budget {
            return Err(TransformError::Budget { limit: self.budget });
        }
        self.nodes.push(n);
        self.roles.push(r);
        Ok(NodeId::from(self.nodes.len() - 1))
    }
}

/// Puts a BC tree in cuts-before-choices form.
///
/// Every original cut gets one copy per combination of sub-pieces its cut
/// ancestors may have landed in, and each copy cuts once into every
/// sub-piece of its piece of the cake. All these cuts form a chain at the
/// top. Below it the original choose structure is repeated, with each
/// original cut replaced by a choose node of the cutter picking which of the
/// copy's cuts is the real one; leaves merge the extra pieces back.
pub fn cuts_before_choices_bc(t: &BcTree) -> Result<Conversion<BcTree>, TransformError> {
    cuts_before_choices_bc_with_budget(t, super::DEFAULT_BUDGET)
}

pub fn cuts_before_choices_bc_with_budget(
    t: &BcTree,
    budget: usize,
) -> Result<Conversion<BcTree>, TransformError> {
    check_input(&Protocol::Bc(t.clone()))?;
    let orig = Original::new(t);
    let mut c = Construction {
        t,
        orig,
        instances: Vec::new(),
        by_key: HashMap::new(),
        order: vec![Pt::Origin, Pt::End],
        chain_agents: Vec::new(),
        budget,
    };
    let preorder = t.preorder();
    let depth_max = c.orig.cut_anc.iter().map(Vec::len).max().unwrap_or(0);
    for d in 0..=depth_max {
        for &k in &preorder {
            if !t.node(k).is_cut() || c.orig.cut_anc[k.index()].len() != d {
                continue;
            }
            let contexts: Vec<Vec<usize>> = match c.orig.cut_anc[k.index()].last() {
                None => vec![Vec::new()],
                Some(&parent) => c
                    .instances
                    .iter()
                    .filter(|i| i.cut == parent)
                    .flat_map(|i| {
                        (0..i.chain.len()).map(move |v| [i.ctx.clone(), vec![v]].concat())
                    })
                    .collect(),
            };
            for ctx in contexts {
                c.add_instance(k, ctx)?;
            }
        }
    }

    let mut out = Output {
        nodes: Vec::new(),
        roles: Vec::new(),
        budget,
    };
    // creation order of chain cuts, each cutting the piece right of its anchor
    let chain_len = c.chain_agents.len();
    let mut instance_of = vec![(0usize, 0usize); chain_len];
    for (ii, inst) in c.instances.iter().enumerate() {
        for (v, ch) in inst.chain.iter().enumerate() {
            instance_of[*ch] = (ii, v);
        }
    }
    for (j, (agent, at)) in c.chain_agents.iter().enumerate() {
        let (instance, variant) = instance_of[j];
        out.push(
            BcNode::Cut {
                agent: *agent,
                piece: *at,
                child: NodeId::from(j + 1),
            },
            Role::Chain { instance, variant },
        )?;
    }
    let body = build_body(&c, &mut out, t.root, Vec::new())?;
    if chain_len == 0 {
        return finish(t, out, body, c);
    }
    if let BcNode::Cut { child, .. } = &mut out.nodes[chain_len - 1] {
        *child = body;
    }
    finish(t, out, NodeId(0), c)
}

fn finish(
    t: &BcTree,
    out: Output,
    root: NodeId,
    c: Construction<'_>,
) -> Result<Conversion<BcTree>, TransformError> {
    let tree = BcTree {
        agents: t.agents,
        nodes: out.nodes,
        root,
    };
    let map = NodeMap {
        origin: out
            .roles
            .iter()
            .map(|r| {
                Some(match r {
                    Role::Chain { instance, .. } | Role::Variant { instance } => {
                        c.instances[*instance].cut
                    }
                    Role::Same(n) => *n,
                })
            })
            .collect(),
    };
    let chain_nodes: Vec<Vec<NodeId>> = c
        .instances
        .iter()
        .map(|i| i.chain.iter().map(|j| NodeId::from(*j)).collect())
        .collect();
    let bridge = ChainBridge {
        source: Protocol::Bc(t.clone()),
        tree: t.clone(),
        parents: c.orig.parents,
        instances: c.instances,
        by_key: c.by_key,
        chain_nodes,
        roles: out.roles,
    };
    Ok(Conversion {
        output: tree,
        map,
        transporter: Transporter::new(bridge),
    })
}

fn build_body(
    c: &Construction<'_>,
    out: &mut Output,
    id: NodeId,
    ctx: Vec<usize>,
) -> Result<NodeId, TransformError> {
    match c.t.node(id) {
        BcNode::Cut { agent, child, .. } => {
            let ii = c.by_key[&(id, ctx.clone())];
            let variants = c.instances[ii].chain.len();
            if variants == 1 {
                return build_body(c, out, *child, [ctx, vec![0]].concat());
            }
            let slot = out.push(
                BcNode::Leaf { assign: Vec::new() },
                Role::Variant { instance: ii },
            )?;
            let mut children = Vec::with_capacity(variants);
            for v in 0..variants {
                children.push(build_body(c, out, *child, [ctx.clone(), vec![v]].concat())?);
            }
            out.nodes[slot.index()] = BcNode::Choose {
                agent: *agent,
                children,
            };
            Ok(slot)
        }
        BcNode::Choose { agent, children } => {
            let slot = out.push(BcNode::Leaf { assign: Vec::new() }, Role::Same(id))?;
            let mut kids = Vec::with_capacity(children.len());
            for ch in children {
                kids.push(build_body(c, out, *ch, ctx.clone())?);
            }
            out.nodes[slot.index()] = BcNode::Choose {
                agent: *agent,
                children: kids,
            };
            Ok(slot)
        }
        BcNode::Leaf { assign } => {
            let real = c.real_points(&c.orig.cut_anc[id.index()], &ctx);
            let real_idx: Vec<usize> = real.iter().map(|p| c.index(*p)).collect();
            let chain_assign = (0..c.order.len() - 1)
                .map(|k| {
                    let seg = real_idx.iter().filter(|&&r| r <= k).count() - 1;
                    assign[seg]
                })
                .collect();
            out.push(
                BcNode::Leaf {
                    assign: chain_assign,
                },
                Role::Same(id),
            )
        }
    }
}

struct ChainBridge {
    source: Protocol,
    tree: BcTree,
    parents: Vec<Option<NodeId>>,
    instances: Vec<Instance>,
    by_key: HashMap<(NodeId, Vec<usize>), usize>,
    chain_nodes: Vec<Vec<NodeId>>,
    roles: Vec<Role>,
}

impl ChainBridge {
    fn point(&self, p: Pt) -> CutRef {
        match p {
            Pt::Origin => CutRef::Origin,
            Pt::End => CutRef::End,
            Pt::Chain(j) => CutRef::MadeAt(NodeId::from(j)),
        }
    }

    /// Variant of the sub-piece the position `z` falls in.
    fn variant_of(&self, inst: &Instance, points: &[(CutRef, Fraction)], z: &Fraction) -> usize {
        let pos = |p: Pt| {
            let r = self.point(p);
            points
                .iter()
                .find(|x| x.0 == r)
                .map(|x| x.1.clone())
                .expect("chain point cut")
        };
        let interior = &inst.bounds[1..inst.bounds.len() - 1];
        interior.iter().filter(|q| pos(**q) <= *z).count()
    }
}

impl Bridge for ChainBridge {
    fn source(&self) -> &Protocol {
        &self.source
    }

    fn source_prefix(&self, at: NodeId, target: &Trace) -> Option<Vec<Event>> {
        let (src, fixed) = match self.roles[at.index()] {
            Role::Chain { instance, .. } | Role::Variant { instance } => {
                let inst = &self.instances[instance];
                (inst.cut, Some(inst.ctx.clone()))
            }
            Role::Same(n) => (n, None),
        };
        let mut path = vec![src];
        let mut cur = src;
        while let Some(p) = self.parents[cur.index()] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        let by_node: HashMap<NodeId, &Event> =
            target.events.iter().map(|e| (e.node(), e)).collect();
        let mut ctx: Vec<usize> = Vec::new();
        let mut out = Vec::new();
        for w in path.windows(2) {
            let (a, next) = (w[0], w[1]);
            match self.tree.node(a) {
                BcNode::Cut { agent, .. } => {
                    let ii = *self.by_key.get(&(a, ctx.clone()))?;
                    let v = match &fixed {
                        Some(f) => f[ctx.len()],
                        None if self.instances[ii].chain.len() == 1 => 0,
                        None => target.events.iter().find_map(|e| {
                            match (self.roles[e.node().index()], e) {
                                (Role::Variant { instance }, Event::BranchChosen { child, .. })
                                    if instance == ii =>
                                {
                                    Some(*child)
                                }
                                _ => None,
                            }
                        })?,
                    };
                    let chain_node = self.chain_nodes[ii][v];
                    let Some(Event::CutMade { position, .. }) = by_node.get(&chain_node) else {
                        return None;
                    };
                    out.push(Event::CutMade {
                        node: a,
                        agent: *agent,
                        piece: 0,
                        position: position.clone(),
                    });
                    ctx.push(v);
                }
                BcNode::Choose { agent, children } => {
                    let towards = children.iter().position(|c| *c == next)?;
                    let made = target.events.iter().find_map(|e| {
                        match (self.roles[e.node().index()], e) {
                            (Role::Same(n), Event::BranchChosen { child, .. }) if n == a => {
                                Some(*child)
                            }
                            _ => None,
                        }
                    });
                    match made {
                        Some(child) if child != towards => return None,
                        _ => out.push(Event::BranchChosen {
                            node: a,
                            agent: *agent,
                            child: towards,
                        }),
                    }
                }
                BcNode::Leaf { .. } => return None,
            }
        }
        Some(out)
    }

    fn translate(
        &self,
        at: NodeId,
        target: &DecisionContext<'_>,
        _s: &Machine<'_>,
        action: Action,
    ) -> Action {
        let Action::Cut { at: z, .. } = &action else {
            return action;
        };
        match self.roles[at.index()] {
            Role::Chain { instance, variant } => {
                let inst = &self.instances[instance];
                if self.variant_of(inst, target.points, z) == variant {
                    return Action::Cut {
                        piece: 0,
                        at: z.clone(),
                    };
                }
                let iv = &target.options()[0];
                let clamped = z.clone().max(iv.lo.clone()).min(iv.hi.clone());
                Action::Cut {
                    piece: 0,
                    at: clamped,
                }
            }
            Role::Variant { instance } => Action::Branch {
                child: self.variant_of(&self.instances[instance], target.points, z),
            },
            Role::Same(_) => action,
        }
    }
}
