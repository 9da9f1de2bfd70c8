//! IR JSON encoding.
//!
//! ```json
//! {"model": "bc", "agents": 2, "root": 0, "nodes": [
//!   {"id": 0, "kind": "cut", "agent": 1, "piece": 1, "children": [1]}, ...]}
//! ```
//!
//! Cut references are `"origin"`, `"end"` or `{"cut": id}`. GCC documents
//! carry `"mode"`; if-else nodes list one condition per child.

use serde::{Deserialize, Serialize};

use super::{
    BcDag, BcNode, BcTree, Branch, Condition, CutRef, ExtBcTree, ExtNode, GccMode, GccNode,
    GccTree, NodeId, PieceRef, Protocol, Segment,
};
use crate::error::DomainError;

#[derive(Serialize, Deserialize)]
struct ProtocolJson {
    model: String,
    agents: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<GccMode>,
    root: NodeId,
    nodes: Vec<NodeJson>,
}

#[derive(Serialize, Deserialize, Default)]
struct NodeJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<NodeId>,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agent: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    piece: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<CutRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<CutRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pieces: Option<Vec<PieceRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conditions: Option<Vec<ConditionJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    assign: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<Segment>>,
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(tag = "op", rename_all = "snake_case")]
enum ConditionJson {
    Less { left: CutRef, right: CutRef },
    ChoseAt { node: NodeId, piece: usize },
    CutInAt { node: NodeId, piece: usize },
    Else,
    And { args: Vec<ConditionJson> },
    Or { args: Vec<ConditionJson> },
    Not { arg: Box<ConditionJson> },
}

impl From<&Condition> for ConditionJson {
    fn from(c: &Condition) -> Self {
        match c {
            Condition::Less(a, b) => ConditionJson::Less {
                left: *a,
                right: *b,
            },
            Condition::ChoseAt { node, piece } => ConditionJson::ChoseAt {
                node: *node,
                piece: *piece,
            },
            Condition::CutInAt { node, piece } => ConditionJson::CutInAt {
                node: *node,
                piece: *piece,
            },
            Condition::Else => ConditionJson::Else,
            Condition::And(cs) => ConditionJson::And {
                args: cs.iter().map(Into::into).collect(),
            },
            Condition::Or(cs) => ConditionJson::Or {
                args: cs.iter().map(Into::into).collect(),
            },
            Condition::Not(c) => ConditionJson::Not {
                arg: Box::new(c.as_ref().into()),
            },
        }
    }
}

impl From<ConditionJson> for Condition {
    fn from(c: ConditionJson) -> Self {
        match c {
            ConditionJson::Less { left, right } => Condition::Less(left, right),
            ConditionJson::ChoseAt { node, piece } => Condition::ChoseAt { node, piece },
            ConditionJson::CutInAt { node, piece } => Condition::CutInAt { node, piece },
            ConditionJson::Else => Condition::Else,
            ConditionJson::And { args } => {
                Condition::And(args.into_iter().map(Into::into).collect())
            }
            ConditionJson::Or { args } => Condition::Or(args.into_iter().map(Into::into).collect()),
            ConditionJson::Not { arg } => Condition::not((*arg).into()),
        }
    }
}

fn bc_json(i: usize, n: &BcNode) -> NodeJson {
    let id = Some(NodeId::from(i));
    match n {
        BcNode::Cut {
            agent,
            piece,
            child,
        } => NodeJson {
            id,
            kind: "cut".into(),
            agent: Some(*agent),
            piece: Some(*piece),
            children: Some(vec![*child]),
            ..Default::default()
        },
        BcNode::Choose { agent, children } => NodeJson {
            id,
            kind: "choose".into(),
            agent: Some(*agent),
            children: Some(children.clone()),
            ..Default::default()
        },
        BcNode::Leaf { assign } => NodeJson {
            id,
            kind: "leaf".into(),
            assign: Some(assign.clone()),
            ..Default::default()
        },
    }
}

fn ext_json(i: usize, n: &ExtNode) -> NodeJson {
    let id = Some(NodeId::from(i));
    match n {
        ExtNode::Cut {
            agent,
            left,
            right,
            child,
        } => NodeJson {
            id,
            kind: "cut".into(),
            agent: Some(*agent),
            left: Some(*left),
            right: Some(*right),
            children: Some(vec![*child]),
            ..Default::default()
        },
        ExtNode::Choose { agent, children } => NodeJson {
            id,
            kind: "choose".into(),
            agent: Some(*agent),
            children: Some(children.clone()),
            ..Default::default()
        },
        ExtNode::Leaf { segments } => NodeJson {
            id,
            kind: "leaf".into(),
            segments: Some(segments.clone()),
            ..Default::default()
        },
    }
}

fn gcc_json(i: usize, n: &GccNode) -> NodeJson {
    let id = Some(NodeId::from(i));
    match n {
        GccNode::Cut {
            agent,
            pieces,
            child,
        }
        | GccNode::Choose {
            agent,
            pieces,
            child,
        } => NodeJson {
            id,
            kind: if matches!(n, GccNode::Cut { .. }) {
                "cut"
            } else {
                "choose"
            }
            .into(),
            agent: Some(*agent),
            pieces: Some(pieces.clone()),
            children: Some(vec![*child]),
            ..Default::default()
        },
        GccNode::IfElse { branches } => NodeJson {
            id,
            kind: "if_else".into(),
            conditions: Some(branches.iter().map(|b| (&b.condition).into()).collect()),
            children: Some(branches.iter().map(|b| b.child).collect()),
            ..Default::default()
        },
        GccNode::Leaf => NodeJson {
            id,
            kind: "leaf".into(),
            ..Default::default()
        },
    }
}

fn to_repr(p: &Protocol) -> ProtocolJson {
    let (mode, root, nodes) = match p {
        Protocol::Bc(t) => (
            None,
            t.root,
            t.nodes
                .iter()
                .enumerate()
                .map(|(i, n)| bc_json(i, n))
                .collect(),
        ),
        Protocol::Dag(d) => (
            None,
            d.root,
            d.nodes
                .iter()
                .enumerate()
                .map(|(i, n)| bc_json(i, n))
                .collect(),
        ),
        Protocol::Ext(t) => (
            None,
            t.root,
            t.nodes
                .iter()
                .enumerate()
                .map(|(i, n)| ext_json(i, n))
                .collect(),
        ),
        Protocol::Gcc(g) => (
            Some(g.mode),
            g.root,
            g.nodes
                .iter()
                .enumerate()
                .map(|(i, n)| gcc_json(i, n))
                .collect(),
        ),
    };
    ProtocolJson {
        model: p.model().to_string(),
        agents: p.agents(),
        mode,
        root,
        nodes,
    }
}

pub fn to_value(p: &Protocol) -> serde_json::Value {
    serde_json::to_value(to_repr(p)).expect("protocol JSON is always serialisable")
}

/// Pretty JSON with a trailing newline; byte-stable for equal protocols.
pub fn to_string(p: &Protocol) -> String {
    let mut s =
        serde_json::to_string_pretty(&to_repr(p)).expect("protocol JSON is always serialisable");
    s.push('\n');
    s
}

fn bad(msg: impl Into<String>) -> DomainError {
    DomainError::Invalid(msg.into())
}

fn field<T>(v: Option<T>, i: usize, name: &str) -> Result<T, DomainError> {
    v.ok_or_else(|| bad(format!("node {i}: missing field `{name}`")))
}

fn single_child(n: &NodeJson, i: usize) -> Result<NodeId, DomainError> {
    match n.children.as_deref() {
        Some([c]) => Ok(*c),
        _ => Err(bad(format!(
            "node {i}: `{}` needs exactly one child",
            n.kind
        ))),
    }
}

fn parse_bc(i: usize, n: NodeJson) -> Result<BcNode, DomainError> {
    Ok(match n.kind.as_str() {
        "cut" => BcNode::Cut {
            child: single_child(&n, i)?,
            agent: field(n.agent, i, "agent")?,
            piece: field(n.piece, i, "piece")?,
        },
        "choose" => BcNode::Choose {
            agent: field(n.agent, i, "agent")?,
            children: field(n.children, i, "children")?,
        },
        "leaf" => BcNode::Leaf {
            assign: field(n.assign, i, "assign")?,
        },
        k => return Err(bad(format!("node {i}: unknown kind `{k}`"))),
    })
}

fn parse_ext(i: usize, n: NodeJson) -> Result<ExtNode, DomainError> {
    Ok(match n.kind.as_str() {
        "cut" => ExtNode::Cut {
            child: single_child(&n, i)?,
            agent: field(n.agent, i, "agent")?,
            left: field(n.left, i, "left")?,
            right: field(n.right, i, "right")?,
        },
        "choose" => ExtNode::Choose {
            agent: field(n.agent, i, "agent")?,
            children: field(n.children, i, "children")?,
        },
        "leaf" => ExtNode::Leaf {
            segments: field(n.segments, i, "segments")?,
        },
        k => return Err(bad(format!("node {i}: unknown kind `{k}`"))),
    })
}

fn parse_gcc(i: usize, n: NodeJson) -> Result<GccNode, DomainError> {
    Ok(match n.kind.as_str() {
        "cut" => GccNode::Cut {
            child: single_child(&n, i)?,
            agent: field(n.agent, i, "agent")?,
            pieces: field(n.pieces, i, "pieces")?,
        },
        "choose" => GccNode::Choose {
            child: single_child(&n, i)?,
            agent: field(n.agent, i, "agent")?,
            pieces: field(n.pieces, i, "pieces")?,
        },
        "if_else" => {
            let conds = field(n.conditions, i, "conditions")?;
            let children = field(n.children, i, "children")?;
            if conds.len() != children.len() {
                return Err(bad(format!(
                    "node {i}: conditions and children differ in length"
                )));
            }
            GccNode::IfElse {
                branches: conds
                    .into_iter()
                    .zip(children)
                    .map(|(c, child)| Branch {
                        condition: c.into(),
                        child,
                    })
                    .collect(),
            }
        }
        "leaf" => GccNode::Leaf,
        k => return Err(bad(format!("node {i}: unknown kind `{k}`"))),
    })
}

fn collect<T>(
    nodes: Vec<NodeJson>,
    parse: impl Fn(usize, NodeJson) -> Result<T, DomainError>,
) -> Result<Vec<T>, DomainError> {
    nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            if let Some(id) = n.id {
                if id.index() != i {
                    return Err(bad(format!(
                        "node at position {i} has id {id}; ids must match positions"
                    )));
                }
            }
            parse(i, n)
        })
        .collect()
}

pub fn from_value(v: serde_json::Value) -> Result<Protocol, DomainError> {
    let repr: ProtocolJson = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
    let agents = repr.agents;
    let root = repr.root;
    Ok(match repr.model.as_str() {
        "bc" => Protocol::Bc(BcTree {
            agents,
            root,
            nodes: collect(repr.nodes, parse_bc)?,
        }),
        "dag" => Protocol::Dag(BcDag {
            agents,
            root,
            nodes: collect(repr.nodes, parse_bc)?,
        }),
        "extbc" => Protocol::Ext(ExtBcTree {
            agents,
            root,
            nodes: collect(repr.nodes, parse_ext)?,
        }),
        "gcc" => Protocol::Gcc(GccTree {
            agents,
            root,
            mode: repr.mode.unwrap_or_default(),
            nodes: collect(repr.nodes, parse_gcc)?,
        }),
        m => return Err(bad(format!("unknown model `{m}`"))),
    })
}

pub fn from_str(s: &str) -> Result<Protocol, DomainError> {
    let v: serde_json::Value = serde_json::from_str(s).map_err(|e| bad(e.to_string()))?;
    from_value(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::BcBuilder;

    #[test]
    fn bc_round_trip_and_layout() {
        let mut b = BcBuilder::new();
        let l = b.leaf(vec![1, 2]);
        let root = b.cut(1, 1, l);
        let p = Protocol::Bc(b.finish(2, root));
        let s = to_string(&p);
        assert!(s.contains("\"kind\": \"cut\""));
        let compact = serde_json::to_string(&to_repr(&p)).unwrap();
        assert_eq!(
            compact,
            r#"{"model":"bc","agents":2,"root":1,"nodes":[{"id":0,"kind":"leaf","assign":[1,2]},{"id":1,"kind":"cut","agent":1,"piece":1,"children":[0]}]}"#
        );
        assert_eq!(from_str(&s).unwrap(), p);
    }

    #[test]
    fn gcc_round_trip() {
        let x = CutRef::MadeAt(NodeId(0));
        let g = GccTree {
            agents: 2,
            mode: GccMode::Extensive,
            root: NodeId(0),
            nodes: vec![
                GccNode::Cut {
                    agent: 1,
                    pieces: vec![PieceRef::new(CutRef::Origin, CutRef::End)],
                    child: NodeId(1),
                },
                GccNode::IfElse {
                    branches: vec![
                        Branch {
                            condition: Condition::And(vec![
                                Condition::Less(CutRef::Origin, x),
                                Condition::not(Condition::CutInAt {
                                    node: NodeId(0),
                                    piece: 0,
                                }),
                            ]),
                            child: NodeId(2),
                        },
                        Branch {
                            condition: Condition::Else,
                            child: NodeId(3),
                        },
                    ],
                },
                GccNode::Leaf,
                GccNode::Leaf,
            ],
        };
        let p = Protocol::Gcc(g);
        let s = to_string(&p);
        assert!(s.contains("\"cut\": 0"));
        assert_eq!(from_str(&s).unwrap(), p);
    }

    #[test]
    fn rejects_unknown_kind() {
        let s = r#"{"model":"bc","agents":1,"root":0,"nodes":[{"kind":"spoon"}]}"#;
        assert!(from_str(s).is_err());
    }
}
