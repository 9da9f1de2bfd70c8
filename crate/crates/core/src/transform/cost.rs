use std::collections::HashMap;

use super::cbc_ext::cuts_before_choices_ext;
use super::check_input;
use super::dag::path_counts;
use super::ext_to_bc::bc_to_extended;
use crate::error::TransformError;
use crate::ir::{
    BcNode, BcTree, CutRef, ExtBcTree, ExtNode, GccMode, GccNode, GccTree, NodeId, PartialOrder,
    Protocol,
};

/// Conversions known to `conversion_cost`, with the input model each takes.
pub const CONVERSIONS: &[(&str, &str)] = &[
    ("dag_to_tree", "dag"),
    ("extended_to_bc", "extbc"),
    ("cuts_before_choices_ext", "extbc"),
    ("bc_intermediate_form", "bc"),
    ("cuts_before_choices_bc", "bc"),
    ("gcc_to_bc", "gcc"),
    ("bc_to_gcc", "bc"),
];

/// Upper bound on the node count of `op` applied to `input`.
pub fn conversion_cost(op: &str, input: &Protocol) -> Result<u128, TransformError> {
    let Some((_, model)) = CONVERSIONS.iter().find(|(name, _)| *name == op) else {
        return Err(TransformError::UnknownOp(op.to_string()));
    };
    if input.model() != *model {
        return Err(TransformError::Invalid(format!(
            "`{op}` takes a {model} protocol, got {}",
            input.model()
        )));
    }
    check_input(input)?;
    Ok(match input {
        Protocol::Dag(d) => path_counts(d)
            .iter()
            .fold(0u128, |a, b| a.saturating_add(*b)),
        Protocol::Ext(t) if op == "cuts_before_choices_ext" => t.nodes.len() as u128,
        Protocol::Ext(t) => ext_bound(t),
        Protocol::Bc(t) => match op {
            "bc_intermediate_form" => {
                let hoisted = cuts_before_choices_ext(&bc_to_extended(t))?;
                ext_bound(&hoisted.output)
            }
            "cuts_before_choices_bc" => cbc_bound(t),
            _ => bc_to_gcc_bound(t),
        },
        Protocol::Gcc(g) => gcc_bound(g),
    })
}

/// Sub-pieces a cut into `[l, r]` may land in: one plus the cuts not known
/// to lie outside.
fn spanned(order: &PartialOrder, l: CutRef, r: CutRef) -> u128 {
    let inside = order
        .refs()
        .iter()
        .filter(|c| **c != l && **c != r)
        .filter(|c| !order.is_le(**c, l) && !order.is_le(r, **c))
        .count();
    1 + inside as u128
}

fn ext_bound(t: &ExtBcTree) -> u128 {
    fn go(t: &ExtBcTree, id: NodeId, order: &PartialOrder) -> u128 {
        match t.node(id) {
            ExtNode::Cut {
                left, right, child, ..
            } => {
                let s = spanned(order, *left, *right);
                let mut next = order.clone();
                next.add_cut(CutRef::MadeAt(id), *left, *right);
                let below = go(t, *child, &next);
                if s == 1 {
                    below.saturating_add(1)
                } else {
                    s.saturating_mul(below.saturating_add(1)).saturating_add(1)
                }
            }
            ExtNode::Choose { children, .. } => children
                .iter()
                .fold(1u128, |a, c| a.saturating_add(go(t, *c, order))),
            ExtNode::Leaf { .. } => 1,
        }
    }
    go(t, t.root, &PartialOrder::new())
}

fn gcc_bound(g: &GccTree) -> u128 {
    fn go(g: &GccTree, id: NodeId, cuts: u128) -> u128 {
        match g.node(id) {
            GccNode::Cut { pieces, child, .. } => {
                let opts = match g.mode {
                    GccMode::Restricted => pieces.len() as u128,
                    GccMode::Extensive => {
                        (cuts + 1).min((pieces.len() as u128).saturating_mul(cuts + 1))
                    }
                };
                let below = go(g, *child, cuts + 1);
                if opts == 1 {
                    below.saturating_add(1)
                } else {
                    opts.saturating_mul(below.saturating_add(1))
                        .saturating_add(1)
                }
            }
            GccNode::Choose { pieces, child, .. } => {
                let below = go(g, *child, cuts);
                if pieces.len() == 1 {
                    below
                } else {
                    (pieces.len() as u128)
                        .saturating_mul(below)
                        .saturating_add(1)
                }
            }
            GccNode::IfElse { branches } => branches
                .iter()
                .map(|b| go(g, b.child, cuts))
                .max()
                .unwrap_or(0),
            GccNode::Leaf => 1,
        }
    }
    go(g, g.root, 0)
}

fn bc_to_gcc_bound(t: &BcTree) -> u128 {
    let n = t.agents as u128;
    let mut chooses = vec![0u128; t.agents];
    let mut total: u128 = 2 * n - 1;
    let mut leaves = 0u128;
    let mut leaf_pieces = 0u128;
    for node in &t.nodes {
        match node {
            BcNode::Cut { .. } => total += 1,
            BcNode::Choose { agent, children } => {
                chooses[agent - 1] += 1;
                let k = children.len() as u128;
                total += if k == 1 { 1 } else { k + 1 + k * (k - 1) };
            }
            BcNode::Leaf { assign } => {
                leaves += 1;
                leaf_pieces += assign.len() as u128;
            }
        }
    }
    let reserved: u128 = chooses.iter().map(|m| (*m).max(1)).sum();
    total += chooses.iter().map(|m| m.saturating_sub(1)).sum::<u128>();
    total + leaf_pieces + leaves * (reserved + 1)
}

/// Bound for the chain construction: every copy of a cut cuts at most once
/// per piece of the cake so far, and each copy of a node below corresponds
/// to one way the cuts above it can have landed.
fn cbc_bound(t: &BcTree) -> u128 {
    let mut cut_anc: Vec<Vec<NodeId>> = vec![Vec::new(); t.nodes.len()];
    for id in t.preorder() {
        let mut mine = cut_anc[id.index()].clone();
        if t.node(id).is_cut() {
            mine.push(id);
        }
        for c in t.node(id).children() {
            cut_anc[c.index()] = mine.clone();
        }
    }
    let mut chain: u128 = 0;
    let mut made: HashMap<NodeId, u128> = HashMap::new();
    let mut instances_total: u128 = 0;
    let depth = cut_anc.iter().map(Vec::len).max().unwrap_or(0);
    let preorder = t.preorder();
    for d in 0..=depth {
        for &k in &preorder {
            if !t.node(k).is_cut() || cut_anc[k.index()].len() != d {
                continue;
            }
            let instances = cut_anc[k.index()].last().map_or(1, |p| made[p]);
            let mut cuts: u128 = 0;
            let mut i: u128 = 0;
            while i < instances && chain < u128::MAX / 4 {
                let v = chain.saturating_add(1);
                cuts = cuts.saturating_add(v);
                chain = chain.saturating_add(v);
                i += 1;
            }
            if i < instances {
                return u128::MAX;
            }
            instances_total = instances_total.saturating_add(instances);
            made.insert(k, cuts);
        }
    }
    let body = preorder.iter().fold(0u128, |a, id| {
        let copies = cut_anc[id.index()].last().map_or(1, |p| made[p]);
        if t.node(*id).is_cut() {
            a
        } else {
            a.saturating_add(copies)
        }
    });
    chain.saturating_add(body).saturating_add(instances_total)
}
