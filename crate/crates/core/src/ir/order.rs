use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CutRef, ExtBcTree, ExtNode, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Left operand never lies to the right of the right operand.
    Less,
    Greater,
    /// Both operands are the same cut.
    Equal,
    Unknown,
}

/// Transitively closed "lies left of" relation over the cuts known at a node.
#[derive(Clone, Debug, Default)]
pub struct PartialOrder {
    refs: Vec<CutRef>,
    index: HashMap<CutRef, usize>,
    less: Vec<Vec<bool>>,
}

impl PartialOrder {
    /// Order over Origin and End only.
    pub fn new() -> Self {
        let mut p = PartialOrder::default();
        p.insert(CutRef::Origin);
        p.insert(CutRef::End);
        p.add_less(CutRef::Origin, CutRef::End);
        p
    }

    pub fn refs(&self) -> &[CutRef] {
        &self.refs
    }

    pub fn contains(&self, r: CutRef) -> bool {
        self.index.contains_key(&r)
    }

    fn insert(&mut self, r: CutRef) -> usize {
        if let Some(&i) = self.index.get(&r) {
            return i;
        }
        let i = self.refs.len();
        self.refs.push(r);
        self.index.insert(r, i);
        for row in &mut self.less {
            row.push(false);
        }
        self.less.push(vec![false; i + 1]);
        i
    }

    /// Registers a new cut lying between `left` and `right`.
    pub fn add_cut(&mut self, cut: CutRef, left: CutRef, right: CutRef) {
        self.insert(cut);
        self.add_less(CutRef::Origin, cut);
        self.add_less(cut, CutRef::End);
        self.add_less(left, cut);
        self.add_less(cut, right);
    }

    /// Records `a` left of `b` and restores transitive closure.
    pub fn add_less(&mut self, a: CutRef, b: CutRef) {
        if a == b {
            return;
        }
        let ia = self.insert(a);
        let ib = self.insert(b);
        if self.less[ia][ib] {
            return;
        }
        let n = self.refs.len();
        let below: Vec<usize> = (0..n).filter(|&x| x == ia || self.less[x][ia]).collect();
        let above: Vec<usize> = (0..n).filter(|&y| y == ib || self.less[ib][y]).collect();
        for &x in &below {
            for &y in &above {
                if x != y {
                    self.less[x][y] = true;
                }
            }
        }
    }

    pub fn relation(&self, a: CutRef, b: CutRef) -> Relation {
        if a == b {
            return Relation::Equal;
        }
        match (self.index.get(&a), self.index.get(&b)) {
            (Some(&ia), Some(&ib)) => {
                if self.less[ia][ib] {
                    Relation::Less
                } else if self.less[ib][ia] {
                    Relation::Greater
                } else {
                    Relation::Unknown
                }
            }
            _ => Relation::Unknown,
        }
    }

    pub fn is_less(&self, a: CutRef, b: CutRef) -> bool {
        self.relation(a, b) == Relation::Less
    }

    /// `a` provably not to the right of `b` (same cut or Less).
    pub fn is_le(&self, a: CutRef, b: CutRef) -> bool {
        matches!(self.relation(a, b), Relation::Less | Relation::Equal)
    }

    /// Every known ref in a linear order consistent with the relation, when
    /// the relation is total; `None` otherwise.
    pub fn total_order(&self) -> Option<Vec<CutRef>> {
        let mut refs = self.refs.clone();
        let n = refs.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.relation(refs[i], refs[j]) == Relation::Unknown {
                    return None;
                }
            }
        }
        refs.sort_by(|a, b| match self.relation(*a, *b) {
            Relation::Less => std::cmp::Ordering::Less,
            Relation::Greater => std::cmp::Ordering::Greater,
            _ => std::cmp::Ordering::Equal,
        });
        Some(refs)
    }
}

/// Order facts derivable from the structure alone at node `at` of an
/// extended BC tree: every cut made strictly above `at` lies between its
/// left and right references.
pub fn static_cut_order(t: &ExtBcTree, at: NodeId) -> PartialOrder {
    let mut order = PartialOrder::new();
    for id in t.path_to(at) {
        if id == at {
            break;
        }
        if let ExtNode::Cut { left, right, .. } = t.node(id) {
            order.add_cut(CutRef::MadeAt(id), *left, *right);
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u32) -> CutRef {
        CutRef::MadeAt(NodeId(i))
    }

    #[test]
    fn origin_end_always_ordered() {
        let p = PartialOrder::new();
        assert_eq!(p.relation(CutRef::Origin, CutRef::End), Relation::Less);
        assert_eq!(p.relation(CutRef::End, CutRef::Origin), Relation::Greater);
    }

    #[test]
    fn unrestricted_cuts_are_unordered() {
        let mut p = PartialOrder::new();
        p.add_cut(c(0), CutRef::Origin, CutRef::End);
        p.add_cut(c(1), CutRef::Origin, CutRef::End);
        assert_eq!(p.relation(c(0), c(1)), Relation::Unknown);
        assert!(p.total_order().is_none());
    }

    #[test]
    fn chain_closes_transitively() {
        let mut p = PartialOrder::new();
        p.add_cut(c(0), CutRef::Origin, CutRef::End);
        p.add_cut(c(1), c(0), CutRef::End);
        p.add_cut(c(2), c(1), CutRef::End);
        assert!(p.is_less(c(0), c(2)));
        assert_eq!(
            p.total_order().unwrap(),
            vec![CutRef::Origin, c(0), c(1), c(2), CutRef::End]
        );
    }
}
