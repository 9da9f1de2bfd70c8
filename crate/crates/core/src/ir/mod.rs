//! Protocol representations: BC trees and DAGs, extended BC trees and GCC trees.

mod bc;
mod ext;
mod gcc;
pub mod json;
mod order;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bc::{validate_bc, validate_dag, BcBuilder, BcDag, BcNode, BcTree};
pub use ext::{validate_ext, ExtBcTree, ExtBuilder, ExtNode, Segment};
pub use gcc::{validate_gcc, Branch, Condition, GccBuilder, GccMode, GccNode, GccTree, PieceRef};
pub use order::{static_cut_order, PartialOrder, Relation};
pub use stats::{stats, Stats};

/// Index of a node inside its protocol's node arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A cut point: the cake's ends or the cut made at a given node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutRef {
    Origin,
    End,
    MadeAt(NodeId),
}

impl CutRef {
    pub fn node(self) -> Option<NodeId> {
        match self {
            CutRef::MadeAt(n) => Some(n),
            _ => None,
        }
    }

    pub fn remap(self, f: &impl Fn(NodeId) -> NodeId) -> CutRef {
        match self {
            CutRef::MadeAt(n) => CutRef::MadeAt(f(n)),
            other => other,
        }
    }
}

impl fmt::Display for CutRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutRef::Origin => write!(f, "origin"),
            CutRef::End => write!(f, "end"),
            CutRef::MadeAt(n) => write!(f, "cut{}", n),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CutRefRepr {
    Named(String),
    Cut { cut: NodeId },
}

impl Serialize for CutRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CutRef::Origin => CutRefRepr::Named("origin".into()).serialize(s),
            CutRef::End => CutRefRepr::Named("end".into()).serialize(s),
            CutRef::MadeAt(n) => CutRefRepr::Cut { cut: *n }.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for CutRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match CutRefRepr::deserialize(d)? {
            CutRefRepr::Named(s) if s == "origin" => Ok(CutRef::Origin),
            CutRefRepr::Named(s) if s == "end" => Ok(CutRef::End),
            CutRefRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "unknown cut reference `{s}`"
            ))),
            CutRefRepr::Cut { cut } => Ok(CutRef::MadeAt(cut)),
        }
    }
}

/// Any of the four protocol forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Protocol {
    Bc(BcTree),
    Dag(BcDag),
    Ext(ExtBcTree),
    Gcc(GccTree),
}

impl Protocol {
    pub fn agents(&self) -> usize {
        match self {
            Protocol::Bc(t) => t.agents,
            Protocol::Dag(d) => d.agents,
            Protocol::Ext(t) => t.agents,
            Protocol::Gcc(g) => g.agents,
        }
    }

    pub fn model(&self) -> &'static str {
        match self {
            Protocol::Bc(_) => "bc",
            Protocol::Dag(_) => "dag",
            Protocol::Ext(_) => "extbc",
            Protocol::Gcc(_) => "gcc",
        }
    }

    pub fn validate(&self) -> ValidationReport {
        match self {
            Protocol::Bc(t) => validate_bc(t),
            Protocol::Dag(d) => validate_dag(d),
            Protocol::Ext(t) => validate_ext(t),
            Protocol::Gcc(g) => validate_gcc(g, g.mode),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Protocol::Bc(t) => t.nodes.len(),
            Protocol::Dag(d) => d.nodes.len(),
            Protocol::Ext(t) => t.nodes.len(),
            Protocol::Gcc(g) => g.nodes.len(),
        }
    }

    /// Same protocol with node ids renumbered in preorder; structural
    /// equality is equality of canonical forms.
    pub fn canonical(&self) -> Protocol {
        match self {
            Protocol::Bc(t) => Protocol::Bc(t.canonical()),
            Protocol::Dag(d) => Protocol::Dag(d.canonical()),
            Protocol::Ext(t) => Protocol::Ext(t.canonical()),
            Protocol::Gcc(g) => Protocol::Gcc(g.canonical()),
        }
    }

    pub fn structurally_eq(&self, other: &Protocol) -> bool {
        self.canonical() == other.canonical()
    }
}

impl From<BcTree> for Protocol {
    fn from(t: BcTree) -> Self {
        Protocol::Bc(t)
    }
}
impl From<BcDag> for Protocol {
    fn from(d: BcDag) -> Self {
        Protocol::Dag(d)
    }
}
impl From<ExtBcTree> for Protocol {
    fn from(t: ExtBcTree) -> Self {
        Protocol::Ext(t)
    }
}
impl From<GccTree> for Protocol {
    fn from(g: GccTree) -> Self {
        Protocol::Gcc(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub node: Option<NodeId>,
    /// Root-to-node path, when the node is reachable.
    pub path: Vec<NodeId>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Some(n) => write!(f, "node {n}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub(crate) fn error(
        &mut self,
        node: Option<NodeId>,
        path: &[NodeId],
        message: impl Into<String>,
    ) {
        self.errors.push(Violation {
            node,
            path: path.to_vec(),
            message: message.into(),
        });
    }

    pub(crate) fn warn(
        &mut self,
        node: Option<NodeId>,
        path: &[NodeId],
        message: impl Into<String>,
    ) {
        self.warnings.push(Violation {
            node,
            path: path.to_vec(),
            message: message.into(),
        });
    }

    pub fn summary(&self) -> String {
        self.errors
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks that `children_of` describes a tree rooted at `root` covering all
/// `count` nodes, reporting dangling ids, sharing, cycles and unreachable nodes.
pub(crate) fn check_tree_shape(
    count: usize,
    root: NodeId,
    children_of: impl Fn(NodeId) -> Vec<NodeId>,
    report: &mut ValidationReport,
) -> bool {
    if root.index() >= count {
        report.error(None, &[], format!("root {root} is not a node"));
        return false;
    }
    let mut parent_count = vec![0usize; count];
    let mut ok = true;
    for i in 0..count {
        for c in children_of(NodeId::from(i)) {
            if c.index() >= count {
                report.error(
                    Some(NodeId::from(i)),
                    &[],
                    format!("child {c} does not exist"),
                );
                ok = false;
            } else {
                parent_count[c.index()] += 1;
            }
        }
    }
    if !ok {
        return false;
    }
    if parent_count[root.index()] != 0 {
        report.error(Some(root), &[], "root has a parent");
        ok = false;
    }
    for (i, &p) in parent_count.iter().enumerate() {
        if i != root.index() && p != 1 {
            report.error(
                Some(NodeId::from(i)),
                &[],
                format!("node has {p} parents; a tree node needs exactly one"),
            );
            ok = false;
        }
    }
    if !ok {
        return false;
    }
    let mut seen = vec![false; count];
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if seen[n.index()] {
            report.error(Some(n), &[], "cycle detected");
            return false;
        }
        seen[n.index()] = true;
        stack.extend(children_of(n));
    }
    for (i, s) in seen.iter().enumerate() {
        if !s {
            report.error(
                Some(NodeId::from(i)),
                &[],
                "node is unreachable from the root",
            );
            ok = false;
        }
    }
    ok
}

/// Preorder renumbering map for a tree: `map[old] = new`.
pub(crate) fn preorder_map(
    count: usize,
    root: NodeId,
    children_of: impl Fn(NodeId) -> Vec<NodeId>,
) -> Vec<NodeId> {
    let mut map = vec![NodeId(u32::MAX); count];
    let mut next = 0u32;
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if map[n.index()].0 != u32::MAX {
            continue;
        }
        map[n.index()] = NodeId(next);
        next += 1;
        for c in children_of(n).into_iter().rev() {
            stack.push(c);
        }
    }
    map
}

/// Applies a renumbering to an arena, dropping nodes the map does not reach.
pub(crate) fn permute<T: Clone>(nodes: &[T], map: &[NodeId], remap: impl Fn(&T) -> T) -> Vec<T> {
    let live = map.iter().filter(|m| m.0 != u32::MAX).count();
    let mut out: Vec<Option<T>> = vec![None; live];
    for (old, node) in nodes.iter().enumerate() {
        let new = map[old];
        if new.0 != u32::MAX {
            out[new.index()] = Some(remap(node));
        }
    }
    out.into_iter()
        .map(|n| n.expect("dense renumbering"))
        .collect()
}

/// Root-to-`target` paths for every node of a tree (`paths[i]` ends with `i`).
pub(crate) fn tree_paths(
    count: usize,
    root: NodeId,
    children_of: impl Fn(NodeId) -> Vec<NodeId>,
) -> Vec<Vec<NodeId>> {
    let mut paths = vec![Vec::new(); count];
    let mut stack = vec![(root, vec![root])];
    while let Some((n, path)) = stack.pop() {
        for c in children_of(n) {
            let mut p = path.clone();
            p.push(c);
            stack.push((c, p));
        }
        paths[n.index()] = path;
    }
    paths
}
