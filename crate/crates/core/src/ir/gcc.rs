use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    check_tree_shape, permute, preorder_map, CutRef, NodeId, PartialOrder, Relation,
    ValidationReport,
};

/// One entry `[left, right]` of a piece set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PieceRef {
    pub left: CutRef,
    pub right: CutRef,
}

impl PieceRef {
    pub fn new(left: CutRef, right: CutRef) -> Self {
        PieceRef { left, right }
    }

    fn remap(&self, f: &impl Fn(NodeId) -> NodeId) -> PieceRef {
        PieceRef {
            left: self.left.remap(f),
            right: self.right.remap(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Less(CutRef, CutRef),
    /// The chooser at `node` took entry `piece` (0-based) of its set.
    ChoseAt {
        node: NodeId,
        piece: usize,
    },
    /// The cut at `node` was made in entry `piece` (0-based) of its set.
    CutInAt {
        node: NodeId,
        piece: usize,
    },
    Else,
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
}

impl Condition {
    pub fn not(c: Condition) -> Condition {
        Condition::Not(Box::new(c))
    }

    fn remap(&self, f: &impl Fn(NodeId) -> NodeId) -> Condition {
        match self {
            Condition::Less(a, b) => Condition::Less(a.remap(f), b.remap(f)),
            Condition::ChoseAt { node, piece } => Condition::ChoseAt {
                node: f(*node),
                piece: *piece,
            },
            Condition::CutInAt { node, piece } => Condition::CutInAt {
                node: f(*node),
                piece: *piece,
            },
            Condition::Else => Condition::Else,
            Condition::And(cs) => Condition::And(cs.iter().map(|c| c.remap(f)).collect()),
            Condition::Or(cs) => Condition::Or(cs.iter().map(|c| c.remap(f)).collect()),
            Condition::Not(c) => Condition::not(c.remap(f)),
        }
    }

    fn contains_else(&self) -> bool {
        match self {
            Condition::Else => true,
            Condition::And(cs) | Condition::Or(cs) => cs.iter().any(Condition::contains_else),
            Condition::Not(c) => c.contains_else(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub condition: Condition,
    pub child: NodeId,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GccMode {
    /// Piece-set entries never contain an earlier cut in their interior.
    #[default]
    Restricted,
    /// Entries may span earlier cuts.
    Extensive,
}

impl std::str::FromStr for GccMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "restricted" => Ok(GccMode::Restricted),
            "extensive" => Ok(GccMode::Extensive),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl std::fmt::Display for GccMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GccMode::Restricted => "restricted",
            GccMode::Extensive => "extensive",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GccNode {
    Cut {
        agent: usize,
        pieces: Vec<PieceRef>,
        child: NodeId,
    },
    Choose {
        agent: usize,
        pieces: Vec<PieceRef>,
        child: NodeId,
    },
    IfElse {
        branches: Vec<Branch>,
    },
    Leaf,
}

impl GccNode {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            GccNode::Cut { child, .. } | GccNode::Choose { child, .. } => vec![*child],
            GccNode::IfElse { branches } => branches.iter().map(|b| b.child).collect(),
            GccNode::Leaf => Vec::new(),
        }
    }

    pub fn agent(&self) -> Option<usize> {
        match self {
            GccNode::Cut { agent, .. } | GccNode::Choose { agent, .. } => Some(*agent),
            _ => None,
        }
    }

    pub fn pieces(&self) -> Option<&[PieceRef]> {
        match self {
            GccNode::Cut { pieces, .. } | GccNode::Choose { pieces, .. } => Some(pieces),
            _ => None,
        }
    }

    fn remap(&self, f: &impl Fn(NodeId) -> NodeId) -> GccNode {
        match self {
            GccNode::Cut {
                agent,
                pieces,
                child,
            } => GccNode::Cut {
                agent: *agent,
                pieces: pieces.iter().map(|p| p.remap(f)).collect(),
                child: f(*child),
            },
            GccNode::Choose {
                agent,
                pieces,
                child,
            } => GccNode::Choose {
                agent: *agent,
                pieces: pieces.iter().map(|p| p.remap(f)).collect(),
                child: f(*child),
            },
            GccNode::IfElse { branches } => GccNode::IfElse {
                branches: branches
                    .iter()
                    .map(|b| Branch {
                        condition: b.condition.remap(f),
                        child: f(b.child),
                    })
                    .collect(),
            },
            GccNode::Leaf => GccNode::Leaf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GccTree {
    pub agents: usize,
    pub mode: GccMode,
    pub nodes: Vec<GccNode>,
    pub root: NodeId,
}

impl GccTree {
    pub fn node(&self, id: NodeId) -> &GccNode {
        &self.nodes[id.index()]
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

    pub fn canonical(&self) -> GccTree {
        let map = preorder_map(self.nodes.len(), self.root, |n| self.node(n).children());
        let f = |n: NodeId| map[n.index()];
        GccTree {
            agents: self.agents,
            mode: self.mode,
            nodes: permute(&self.nodes, &map, |n| n.remap(&f)),
            root: NodeId(0),
        }
    }
}

#[derive(Default)]
pub struct GccBuilder {
    pub nodes: Vec<GccNode>,
}

impl GccBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: GccNode) -> NodeId {
        self.nodes.push(node);
        NodeId::from(self.nodes.len() - 1)
    }

    /// Reserves an id to be filled in by `set`, so that descendants can
    /// refer to a cut or choice made here.
    pub fn reserve(&mut self) -> NodeId {
        self.push(GccNode::Leaf)
    }

    pub fn set(&mut self, id: NodeId, node: GccNode) {
        self.nodes[id.index()] = node;
    }

    pub fn finish(self, agents: usize, mode: GccMode, root: NodeId) -> GccTree {
        GccTree {
            agents,
            mode,
            nodes: self.nodes,
            root,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum AncestorKind {
    Cut,
    Choose,
}

/// What the structure of a path tells us about an execution reaching a node.
#[derive(Clone)]
struct Knowledge {
    order: PartialOrder,
    kinds: HashMap<NodeId, AncestorKind>,
    sets: HashMap<NodeId, Vec<PieceRef>>,
    /// Remaining possible entry indices per ancestor Cut/Choose.
    candidates: HashMap<NodeId, Vec<usize>>,
    /// Choose ancestors in path order.
    chooses: Vec<NodeId>,
    contradictory: bool,
}

impl Knowledge {
    fn new() -> Self {
        Knowledge {
            order: PartialOrder::new(),
            kinds: HashMap::new(),
            sets: HashMap::new(),
            candidates: HashMap::new(),
            chooses: Vec::new(),
            contradictory: false,
        }
    }

    fn add_less(&mut self, a: CutRef, b: CutRef) {
        if !self.order.contains(a) || !self.order.contains(b) {
            return;
        }
        match self.order.relation(a, b) {
            Relation::Greater | Relation::Equal => self.contradictory = true,
            _ => self.order.add_less(a, b),
        }
    }

    fn resolve_cut(&mut self, node: NodeId) {
        if let Some(c) = self.candidates.get(&node) {
            if c.len() == 1 && self.kinds.get(&node) == Some(&AncestorKind::Cut) {
                let p = self.sets[&node][c[0]];
                let me = CutRef::MadeAt(node);
                self.add_less(p.left, me);
                self.add_less(me, p.right);
            }
        }
    }

    fn restrict(&mut self, node: NodeId, keep: impl Fn(usize) -> bool) {
        if let Some(c) = self.candidates.get_mut(&node) {
            c.retain(|&t| keep(t));
            if c.is_empty() {
                self.contradictory = true;
            }
        }
        self.resolve_cut(node);
    }

    fn apply(&mut self, cond: &Condition, positive: bool) {
        match (cond, positive) {
            (Condition::Less(a, b), true) => self.add_less(*a, *b),
            (Condition::Less(a, b), false) => {
                if a != b {
                    self.add_less(*b, *a)
                }
            }
            (Condition::ChoseAt { node, piece } | Condition::CutInAt { node, piece }, pos) => {
                let t = *piece;
                if pos {
                    self.restrict(*node, |x| x == t)
                } else {
                    self.restrict(*node, |x| x != t)
                }
            }
            (Condition::And(cs), true) | (Condition::Or(cs), false) => {
                for c in cs {
                    self.apply(c, positive);
                }
            }
            (Condition::Not(c), pos) => self.apply(c, !pos),
            _ => {}
        }
    }

    fn disjoint(&self, a: &PieceRef, b: &PieceRef) -> bool {
        self.order.is_le(a.right, b.left) || self.order.is_le(b.right, a.left)
    }

    /// Pieces certainly allocated, and pieces possibly allocated by an
    /// unresolved choice.
    fn allocations(&self) -> (Vec<PieceRef>, Vec<PieceRef>) {
        let mut definite = Vec::new();
        let mut possible = Vec::new();
        for n in &self.chooses {
            let set = &self.sets[n];
            let cand = &self.candidates[n];
            if cand.len() == 1 {
                definite.push(set[cand[0]]);
            } else {
                possible.extend(cand.iter().map(|&t| set[t]));
            }
        }
        (definite, possible)
    }
}

struct GccValidator<'a> {
    t: &'a GccTree,
    mode: GccMode,
    report: ValidationReport,
}

impl GccValidator<'_> {
    fn check_set(
        &mut self,
        id: NodeId,
        path: &[NodeId],
        k: &Knowledge,
        pieces: &[PieceRef],
    ) -> bool {
        if pieces.is_empty() {
            self.report.error(Some(id), path, "empty piece set");
            return false;
        }
        let mut ok = true;
        for (i, p) in pieces.iter().enumerate() {
            for r in [p.left, p.right] {
                if !k.order.contains(r) {
                    self.report.error(
                        Some(id),
                        path,
                        format!("piece {i} refers to {r}, which is not a cut above this node"),
                    );
                    ok = false;
                }
            }
            if !ok {
                continue;
            }
            if !k.order.is_less(p.left, p.right) {
                self.report.error(
                    Some(id),
                    path,
                    format!("piece {i}: {} is not provably left of {}", p.left, p.right),
                );
                ok = false;
            }
            if self.mode == GccMode::Restricted {
                for &r in k.order.refs() {
                    if r == p.left || r == p.right {
                        continue;
                    }
                    if !(k.order.is_le(r, p.left) || k.order.is_le(p.right, r)) {
                        self.report.error(
                            Some(id),
                            path,
                            format!("piece {i} may contain the earlier cut {r}; not allowed in restricted mode"),
                        );
                        ok = false;
                    }
                }
            }
        }
        if !ok {
            return false;
        }
        for i in 0..pieces.len() {
            for j in (i + 1)..pieces.len() {
                if !k.disjoint(&pieces[i], &pieces[j]) {
                    self.report.error(
                        Some(id),
                        path,
                        format!("overlapping piece-set entries {i} and {j}"),
                    );
                    ok = false;
                }
            }
        }
        ok
    }

    fn check_condition(&mut self, id: NodeId, path: &[NodeId], k: &Knowledge, c: &Condition) {
        match c {
            Condition::Less(a, b) => {
                for r in [a, b] {
                    if !k.order.contains(*r) {
                        self.report.error(
                            Some(id),
                            path,
                            format!("condition refers to {r}, which is not a cut above"),
                        );
                    }
                }
            }
            Condition::ChoseAt { node, piece } | Condition::CutInAt { node, piece } => {
                let want = if matches!(c, Condition::ChoseAt { .. }) {
                    AncestorKind::Choose
                } else {
                    AncestorKind::Cut
                };
                match k.kinds.get(node) {
                    Some(kind) if *kind == want => {
                        if *piece >= k.sets[node].len() {
                            self.report.error(
                                Some(id),
                                path,
                                format!("condition piece {piece} out of range for node {node}"),
                            );
                        }
                    }
                    _ => self.report.error(
                        Some(id),
                        path,
                        format!(
                            "condition refers to node {node}, which is not a {} ancestor",
                            if want == AncestorKind::Choose {
                                "choose"
                            } else {
                                "cut"
                            }
                        ),
                    ),
                }
            }
            Condition::Else => {}
            Condition::And(cs) | Condition::Or(cs) => {
                for c in cs {
                    self.check_condition(id, path, k, c);
                }
            }
            Condition::Not(c) => self.check_condition(id, path, k, c),
        }
    }

    fn run(&mut self) {
        let t = self.t;
        let mut stack = vec![(t.root, Knowledge::new(), vec![t.root])];
        while let Some((id, mut k, path)) = stack.pop() {
            let node = t.node(id);
            if let Some(a) = node.agent() {
                if a == 0 || a > t.agents {
                    self.report.error(
                        Some(id),
                        &path,
                        format!("agent {a} outside 1..={}", t.agents),
                    );
                }
            }
            let push = |stack: &mut Vec<_>, child: NodeId, k: Knowledge| {
                let mut p = path.clone();
                p.push(child);
                stack.push((child, k, p));
            };
            match node {
                GccNode::Cut { pieces, child, .. } => {
                    if self.check_set(id, &path, &k, pieces) {
                        k.kinds.insert(id, AncestorKind::Cut);
                        k.sets.insert(id, pieces.clone());
                        k.candidates.insert(id, (0..pieces.len()).collect());
                        k.order
                            .add_cut(CutRef::MadeAt(id), CutRef::Origin, CutRef::End);
                        k.resolve_cut(id);
                    }
                    push(&mut stack, *child, k);
                }
                GccNode::Choose { pieces, child, .. } => {
                    if self.check_set(id, &path, &k, pieces) {
                        let (definite, possible) = k.allocations();
                        for (i, p) in pieces.iter().enumerate() {
                            if definite
                                .iter()
                                .chain(possible.iter())
                                .any(|q| !k.disjoint(p, q))
                            {
                                self.report.error(
                                    Some(id),
                                    &path,
                                    format!(
                                        "piece {i} may overlap cake already allocated on this path"
                                    ),
                                );
                            }
                        }
                        k.kinds.insert(id, AncestorKind::Choose);
                        k.sets.insert(id, pieces.clone());
                        k.candidates.insert(id, (0..pieces.len()).collect());
                        k.chooses.push(id);
                    }
                    push(&mut stack, *child, k);
                }
                GccNode::IfElse { branches } => {
                    if branches.is_empty() {
                        self.report
                            .error(Some(id), &path, "if-else without branches");
                        continue;
                    }
                    for (i, b) in branches.iter().enumerate() {
                        let last = i + 1 == branches.len();
                        if last && b.condition != Condition::Else {
                            self.report.error(
                                Some(id),
                                &path,
                                "last if-else branch must be the else branch",
                            );
                        }
                        if !last && b.condition.contains_else() {
                            self.report.error(
                                Some(id),
                                &path,
                                "else may only appear as the last branch",
                            );
                        }
                        self.check_condition(id, &path, &k, &b.condition);
                    }
                    for (i, b) in branches.iter().enumerate() {
                        let mut kb = k.clone();
                        for prev in &branches[..i] {
                            kb.apply(&prev.condition, false);
                        }
                        kb.apply(&b.condition, true);
                        if kb.contradictory {
                            self.report.warn(
                                Some(b.child),
                                &path,
                                format!("branch {i} can never be taken"),
                            );
                            continue;
                        }
                        push(&mut stack, b.child, kb);
                    }
                }
                GccNode::Leaf => {
                    let (definite, possible) = k.allocations();
                    if !possible.is_empty() || !covers(&definite) {
                        self.report.warn(
                            Some(id),
                            &path,
                            "leaf may be reached with cake left unallocated",
                        );
                    }
                }
            }
        }
    }
}

/// Whether the pieces chain from Origin to End through shared endpoints.
fn covers(pieces: &[PieceRef]) -> bool {
    let mut reached = vec![CutRef::Origin];
    let mut i = 0;
    while i < reached.len() {
        let at = reached[i];
        for p in pieces {
            if p.left == at && !reached.contains(&p.right) {
                reached.push(p.right);
            }
        }
        i += 1;
    }
    reached.contains(&CutRef::End)
}

pub fn validate_gcc(t: &GccTree, mode: GccMode) -> ValidationReport {
    let mut report = ValidationReport::default();
    if t.agents == 0 {
        report.error(None, &[], "protocol needs at least one agent");
    }
    if !check_tree_shape(t.nodes.len(), t.root, |n| t.node(n).children(), &mut report) {
        return report;
    }
    let mut v = GccValidator { t, mode, report };
    v.run();
    v.report
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: CutRef = CutRef::Origin;
    const E: CutRef = CutRef::End;

    fn cut(i: u32) -> CutRef {
        CutRef::MadeAt(NodeId(i))
    }

    fn cut_and_choose() -> GccTree {
        let x = cut(0);
        GccTree {
            agents: 2,
            mode: GccMode::Restricted,
            nodes: vec![
                GccNode::Cut {
                    agent: 1,
                    pieces: vec![PieceRef::new(O, E)],
                    child: NodeId(1),
                },
                GccNode::Choose {
                    agent: 2,
                    pieces: vec![PieceRef::new(O, x), PieceRef::new(x, E)],
                    child: NodeId(2),
                },
                GccNode::IfElse {
                    branches: vec![
                        Branch {
                            condition: Condition::ChoseAt {
                                node: NodeId(1),
                                piece: 0,
                            },
                            child: NodeId(3),
                        },
                        Branch {
                            condition: Condition::Else,
                            child: NodeId(5),
                        },
                    ],
                },
                GccNode::Choose {
                    agent: 1,
                    pieces: vec![PieceRef::new(x, E)],
                    child: NodeId(4),
                },
                GccNode::Leaf,
                GccNode::Choose {
                    agent: 1,
                    pieces: vec![PieceRef::new(O, x)],
                    child: NodeId(6),
                },
                GccNode::Leaf,
            ],
            root: NodeId(0),
        }
    }

    #[test]
    fn cut_and_choose_valid() {
        let t = cut_and_choose();
        let r = validate_gcc(&t, GccMode::Restricted);
        assert!(r.is_valid(), "{}", r.summary());
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn overlapping_entries_rejected() {
        let mut t = cut_and_choose();
        t.nodes[1] = GccNode::Choose {
            agent: 2,
            pieces: vec![PieceRef::new(O, E), PieceRef::new(cut(0), E)],
            child: NodeId(2),
        };
        let r = validate_gcc(&t, GccMode::Extensive);
        assert!(r.errors.iter().any(|v| v.message.contains("overlapping")));
    }

    #[test]
    fn reallocation_rejected() {
        let mut t = cut_and_choose();
        // the remainder chooser is offered the piece agent 2 already took
        t.nodes[3] = GccNode::Choose {
            agent: 1,
            pieces: vec![PieceRef::new(O, cut(0))],
            child: NodeId(4),
        };
        let r = validate_gcc(&t, GccMode::Restricted);
        assert!(r
            .errors
            .iter()
            .any(|v| v.message.contains("already allocated")));
    }

    #[test]
    fn missing_else_rejected() {
        let mut t = cut_and_choose();
        if let GccNode::IfElse { branches } = &mut t.nodes[2] {
            branches[1].condition = Condition::ChoseAt {
                node: NodeId(1),
                piece: 1,
            };
        }
        assert!(!validate_gcc(&t, GccMode::Restricted).is_valid());
    }

    #[test]
    fn interior_cut_needs_extensive_mode() {
        // second cut over [0,1] after a first cut: [0,1] contains cut 0
        let t = GccTree {
            agents: 1,
            mode: GccMode::Extensive,
            nodes: vec![
                GccNode::Cut {
                    agent: 1,
                    pieces: vec![PieceRef::new(O, E)],
                    child: NodeId(1),
                },
                GccNode::Choose {
                    agent: 1,
                    pieces: vec![PieceRef::new(O, E)],
                    child: NodeId(2),
                },
                GccNode::Leaf,
            ],
            root: NodeId(0),
        };
        assert!(validate_gcc(&t, GccMode::Extensive).is_valid());
        assert!(!validate_gcc(&t, GccMode::Restricted).is_valid());
    }

    #[test]
    fn unallocated_leaf_warns() {
        let t = GccTree {
            agents: 1,
            mode: GccMode::Restricted,
            nodes: vec![GccNode::Leaf],
            root: NodeId(0),
        };
        let r = validate_gcc(&t, GccMode::Restricted);
        assert!(r.is_valid());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn condition_must_reference_ancestor() {
        let mut t = cut_and_choose();
        if let GccNode::IfElse { branches } = &mut t.nodes[2] {
            branches[0].condition = Condition::ChoseAt {
                node: NodeId(3),
                piece: 0,
            };
        }
        assert!(!validate_gcc(&t, GccMode::Restricted).is_valid());
    }
}
