//! S-expression syntax for protocols.
//!
//! ```text
//! (bc :agents 2
//!   (cut :agent 1 :piece 1
//!     (choose :agent 2
//!       (leaf (1 -> 2) (2 -> 1))
//!       (leaf (1 -> 1) (2 -> 2)))))
//! ```
//!
//! `dag` trees may tag a node with `:id name` and reuse it with `(ref name)`.
//! `extbc` cuts carry `:id`, `:left` and `:right`; leaves list segments as
//! `(left right -> agent)`. `gcc` trees use `gcc-cut`, `gcc-choose`, `if`
//! and an empty `(leaf)`; conditions are `(< a b)`, `(chose id k)`,
//! `(cut-in id k)`, `and`, `or`, `not`, and `else`. Agents, pieces and set
//! entries count from 1. Cut references are `origin`, `end` or a cut's id.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::ir::{
    BcDag, BcNode, BcTree, Branch, Condition, CutRef, ExtBcTree, ExtNode, GccMode, GccNode,
    GccTree, NodeId, PieceRef, Protocol, Segment,
};

const MAX_DEPTH: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}",
            self.span.line, self.span.column, self.message
        )
    }
}

impl Diagnostic {
    /// The message followed by the offending source line and a caret marker.
    pub fn render(&self, text: &str) -> String {
        let line = text.lines().nth(self.span.line - 1).unwrap_or("");
        let width = text[self.span.start..self.span.end.min(text.len())]
            .chars()
            .take_while(|c| *c != '\n')
            .count()
            .max(1);
        format!(
            "{self}\n  {line}\n  {}{}",
            " ".repeat(self.span.column - 1),
            "^".repeat(width)
        )
    }
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, SourceSpan),
    List(Vec<Sexp>, SourceSpan),
}

impl Sexp {
    fn span(&self) -> SourceSpan {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, s) => *s,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }
}

struct Reader<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn here(&self) -> SourceSpan {
        SourceSpan {
            start: self.pos,
            end: self.pos,
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
    }

    fn skip_blank(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn read(&mut self, depth: usize) -> Result<Sexp, Diagnostic> {
        self.skip_blank();
        let mut span = self.here();
        match self.peek() {
            None => Err(diag(span, "unexpected end of input")),
            Some(')') => {
                span.end = self.pos + 1;
                Err(diag(span, "unbalanced `)`"))
            }
            Some('(') => {
                if depth >= MAX_DEPTH {
                    span.end = self.pos + 1;
                    return Err(diag(span, format!("nesting deeper than {MAX_DEPTH}")));
                }
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_blank();
                    match self.peek() {
                        None => {
                            span.end = span.start + 1;
                            return Err(diag(span, "unclosed `(`"));
                        }
                        Some(')') => {
                            self.bump();
                            span.end = self.pos;
                            return Ok(Sexp::List(items, span));
                        }
                        _ => items.push(self.read(depth + 1)?),
                    }
                }
            }
            Some(_) => {
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    self.bump();
                }
                span.end = self.pos;
                Ok(Sexp::Atom(
                    self.text[span.start..span.end].to_string(),
                    span,
                ))
            }
        }
    }
}

fn diag(span: SourceSpan, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        span,
        message: message.into(),
    }
}

fn read_one(text: &str) -> Result<Sexp, Diagnostic> {
    let mut r = Reader {
        text,
        pos: 0,
        line: 1,
        column: 1,
    };
    let form = r.read(0)?;
    r.skip_blank();
    if r.peek().is_some() {
        let mut span = r.here();
        span.end = text.len();
        let message = if r.peek() == Some(')') {
            "unbalanced `)`"
        } else {
            "unexpected input after the protocol"
        };
        return Err(diag(span, message));
    }
    Ok(form)
}

/// A list split into its head symbol, `:key value` pairs and the rest.
struct Form<'a> {
    head: &'a str,
    span: SourceSpan,
    keys: Vec<(&'a str, &'a Sexp)>,
    rest: Vec<&'a Sexp>,
}

type Res<T> = Result<T, Diagnostic>;

fn form(s: &Sexp) -> Res<Form<'_>> {
    let Sexp::List(items, span) = s else {
        return Err(diag(s.span(), "expected a parenthesised form"));
    };
    let Some(head) = items.first().and_then(Sexp::atom) else {
        return Err(diag(*span, "form must start with a keyword"));
    };
    let mut keys = Vec::new();
    let mut rest = Vec::new();
    let mut it = items[1..].iter();
    while let Some(x) = it.next() {
        match x.atom() {
            Some(k) if k.starts_with(':') && k.len() > 1 => match it.next() {
                Some(v) => {
                    if keys.iter().any(|(seen, _)| *seen == k) {
                        return Err(diag(x.span(), format!("`{k}` given twice")));
                    }
                    keys.push((k, v));
                }
                None => return Err(diag(x.span(), format!("`{k}` needs a value"))),
            },
            _ => rest.push(x),
        }
    }
    Ok(Form {
        head,
        span: *span,
        keys,
        rest,
    })
}

impl<'a> Form<'a> {
    fn get(&self, key: &str) -> Option<&'a Sexp> {
        self.keys.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn need(&self, key: &str) -> Res<&'a Sexp> {
        self.get(key)
            .ok_or_else(|| diag(self.span, format!("`{}` needs `{key}`", self.head)))
    }

    fn only(&self, allowed: &[&str]) -> Res<()> {
        match self.keys.iter().find(|(k, _)| !allowed.contains(k)) {
            Some((k, v)) => Err(diag(
                v.span(),
                format!("`{}` does not take `{k}`", self.head),
            )),
            None => Ok(()),
        }
    }

    fn number(&self, key: &str) -> Res<usize> {
        number(self.need(key)?)
    }
}

fn number(s: &Sexp) -> Res<usize> {
    s.atom()
        .and_then(|a| a.parse::<usize>().ok())
        .ok_or_else(|| diag(s.span(), "expected a non-negative integer"))
}

fn positive(s: &Sexp) -> Res<usize> {
    match number(s)? {
        0 => Err(diag(s.span(), "numbering starts at 1")),
        k => Ok(k),
    }
}

fn name(s: &Sexp) -> Res<&str> {
    match s.atom() {
        Some(a)
            if !a.starts_with(':')
                && a != "->"
                && a != "origin"
                && a != "end"
                && a.parse::<i64>().is_err() =>
        {
            Ok(a)
        }
        _ => Err(diag(s.span(), "expected an identifier")),
    }
}

/// Arena under construction with a span per node and a label table.
struct Builder<N> {
    nodes: Vec<Option<N>>,
    spans: Vec<SourceSpan>,
    labels: HashMap<String, NodeId>,
    depth: usize,
}

impl<N> Builder<N> {
    fn new() -> Self {
        Builder {
            nodes: Vec::new(),
            spans: Vec::new(),
            labels: HashMap::new(),
            depth: 0,
        }
    }

    fn reserve(&mut self, span: SourceSpan) -> NodeId {
        self.nodes.push(None);
        self.spans.push(span);
        NodeId::from(self.nodes.len() - 1)
    }

    fn label(&mut self, f: &Form<'_>, id: NodeId) -> Res<()> {
        if let Some(s) = f.get(":id") {
            let n = name(s)?;
            if self.labels.insert(n.to_string(), id).is_some() {
                return Err(diag(s.span(), format!("duplicate id `{n}`")));
            }
        }
        Ok(())
    }

    fn lookup(&self, s: &Sexp) -> Res<NodeId> {
        let n = name(s)?;
        self.labels
            .get(n)
            .copied()
            .ok_or_else(|| diag(s.span(), format!("unknown id `{n}`")))
    }

    fn cut_ref(&self, s: &Sexp) -> Res<CutRef> {
        match s.atom() {
            Some("origin") => Ok(CutRef::Origin),
            Some("end") => Ok(CutRef::End),
            _ => Ok(CutRef::MadeAt(self.lookup(s)?)),
        }
    }

    fn enter(&mut self, span: SourceSpan) -> Res<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(diag(span, format!("nesting deeper than {MAX_DEPTH}")));
        }
        Ok(())
    }

    fn finish(self) -> (Vec<N>, Vec<SourceSpan>) {
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| n.expect("every reserved node is filled"))
            .collect();
        (nodes, self.spans)
    }
}

fn bc_node(b: &mut Builder<BcNode>, s: &Sexp, dag: bool) -> Res<NodeId> {
    let f = form(s)?;
    if dag && f.head == "ref" {
        f.only(&[])?;
        return match f.rest.as_slice() {
            [target] => b.lookup(target),
            _ => Err(diag(f.span, "`ref` takes one id")),
        };
    }
    if let (false, Some(x)) = (dag, f.get(":id")) {
        return Err(diag(x.span(), "`:id` is only allowed in dag protocols"));
    }
    b.enter(f.span)?;
    let id = b.reserve(f.span);
    let node = match f.head {
        "cut" => {
            f.only(&[":agent", ":piece", ":id"])?;
            let agent = positive(f.need(":agent")?)?;
            let piece = positive(f.need(":piece")?)?;
            b.label(&f, id)?;
            let [child] = f.rest.as_slice() else {
                return Err(diag(f.span, "`cut` takes exactly one child"));
            };
            BcNode::Cut {
                agent,
                piece,
                child: bc_node(b, child, dag)?,
            }
        }
        "choose" => {
            f.only(&[":agent", ":id"])?;
            let agent = positive(f.need(":agent")?)?;
            b.label(&f, id)?;
            if f.rest.is_empty() {
                return Err(diag(f.span, "`choose` needs at least one child"));
            }
            let mut children = Vec::with_capacity(f.rest.len());
            for c in &f.rest {
                children.push(bc_node(b, c, dag)?);
            }
            BcNode::Choose { agent, children }
        }
        "leaf" => {
            f.only(&[":id"])?;
            b.label(&f, id)?;
            BcNode::Leaf {
                assign: bc_assign(&f)?,
            }
        }
        other => return Err(diag(f.span, format!("unknown node `{other}`"))),
    };
    b.nodes[id.index()] = Some(node);
    b.depth -= 1;
    Ok(id)
}

fn bc_assign(f: &Form<'_>) -> Res<Vec<usize>> {
    let mut given: Vec<Option<usize>> = Vec::new();
    for item in &f.rest {
        let Sexp::List(parts, span) = item else {
            return Err(diag(item.span(), "expected `(piece -> agent)`"));
        };
        let [k, arrow, j] = parts.as_slice() else {
            return Err(diag(*span, "expected `(piece -> agent)`"));
        };
        if arrow.atom() != Some("->") {
            return Err(diag(arrow.span(), "expected `->`"));
        }
        let k = positive(k)?;
        let j = positive(j)?;
        if k > 1 << 20 {
            return Err(diag(*span, "piece index too large"));
        }
        if given.len() < k {
            given.resize(k, None);
        }
        if given[k - 1].replace(j).is_some() {
            return Err(diag(*span, format!("piece {k} assigned twice")));
        }
    }
    given
        .into_iter()
        .enumerate()
        .map(|(k, a)| a.ok_or_else(|| diag(f.span, format!("piece {} is not assigned", k + 1))))
        .collect()
}

fn ext_node(b: &mut Builder<ExtNode>, s: &Sexp) -> Res<NodeId> {
    let f = form(s)?;
    b.enter(f.span)?;
    let id = b.reserve(f.span);
    let node = match f.head {
        "cut" => {
            f.only(&[":agent", ":id", ":left", ":right"])?;
            let agent = positive(f.need(":agent")?)?;
            let left = b.cut_ref(f.need(":left")?)?;
            let right = b.cut_ref(f.need(":right")?)?;
            b.label(&f, id)?;
            let [child] = f.rest.as_slice() else {
                return Err(diag(f.span, "`cut` takes exactly one child"));
            };
            ExtNode::Cut {
                agent,
                left,
                right,
                child: ext_node(b, child)?,
            }
        }
        "choose" => {
            f.only(&[":agent"])?;
            let agent = positive(f.need(":agent")?)?;
            if f.rest.is_empty() {
                return Err(diag(f.span, "`choose` needs at least one child"));
            }
            let mut children = Vec::with_capacity(f.rest.len());
            for c in &f.rest {
                children.push(ext_node(b, c)?);
            }
            ExtNode::Choose { agent, children }
        }
        "leaf" => {
            f.only(&[])?;
            let mut segments = Vec::new();
            for item in &f.rest {
                let Sexp::List(parts, span) = item else {
                    return Err(diag(item.span(), "expected `(left right -> agent)`"));
                };
                let [l, r, arrow, j] = parts.as_slice() else {
                    return Err(diag(*span, "expected `(left right -> agent)`"));
                };
                if arrow.atom() != Some("->") {
                    return Err(diag(arrow.span(), "expected `->`"));
                }
                segments.push(Segment {
                    left: b.cut_ref(l)?,
                    right: b.cut_ref(r)?,
                    agent: positive(j)?,
                });
            }
            ExtNode::Leaf { segments }
        }
        other => return Err(diag(f.span, format!("unknown node `{other}`"))),
    };
    b.nodes[id.index()] = Some(node);
    b.depth -= 1;
    Ok(id)
}

fn gcc_pieces(b: &Builder<GccNode>, at: SourceSpan, items: &[&Sexp]) -> Res<Vec<PieceRef>> {
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let Sexp::List(parts, span) = item else {
            return Err(diag(item.span(), "expected a piece `(left right)`"));
        };
        let [l, r] = parts.as_slice() else {
            return Err(diag(*span, "expected a piece `(left right)`"));
        };
        out.push(PieceRef::new(b.cut_ref(l)?, b.cut_ref(r)?));
    }
    if out.is_empty() {
        return Err(diag(at, "expected at least one piece"));
    }
    Ok(out)
}

fn condition(b: &Builder<GccNode>, s: &Sexp, depth: usize) -> Res<Condition> {
    if s.atom() == Some("else") {
        return Ok(Condition::Else);
    }
    if depth > MAX_DEPTH {
        return Err(diag(s.span(), format!("nesting deeper than {MAX_DEPTH}")));
    }
    let f = form(s)?;
    f.only(&[])?;
    let entry = |x: &Sexp| positive(x).map(|k| k - 1);
    Ok(match (f.head, f.rest.as_slice()) {
        ("<", [x, y]) => Condition::Less(b.cut_ref(x)?, b.cut_ref(y)?),
        ("chose", [n, k]) => Condition::ChoseAt {
            node: b.lookup(n)?,
            piece: entry(k)?,
        },
        ("cut-in", [n, k]) => Condition::CutInAt {
            node: b.lookup(n)?,
            piece: entry(k)?,
        },
        ("not", [c]) => Condition::Not(Box::new(condition(b, c, depth + 1)?)),
        ("and" | "or", cs) => {
            let cs = cs
                .iter()
                .map(|c| condition(b, c, depth + 1))
                .collect::<Res<Vec<_>>>()?;
            if f.head == "and" {
                Condition::And(cs)
            } else {
                Condition::Or(cs)
            }
        }
        ("<" | "chose" | "cut-in" | "not", _) => {
            return Err(diag(
                f.span,
                format!("wrong number of arguments to `{}`", f.head),
            ))
        }
        (other, _) => return Err(diag(f.span, format!("unknown condition `{other}`"))),
    })
}

fn gcc_node(b: &mut Builder<GccNode>, s: &Sexp) -> Res<NodeId> {
    let f = form(s)?;
    b.enter(f.span)?;
    let id = b.reserve(f.span);
    let node = match f.head {
        "gcc-cut" | "gcc-choose" => {
            f.only(&[":agent", ":id"])?;
            let agent = positive(f.need(":agent")?)?;
            let Some((child, pieces)) = f.rest.split_last() else {
                return Err(diag(
                    f.span,
                    format!("`{}` needs pieces and a child", f.head),
                ));
            };
            let pieces = gcc_pieces(b, f.span, pieces)?;
            b.label(&f, id)?;
            let child = gcc_node(b, child)?;
            if f.head == "gcc-cut" {
                GccNode::Cut {
                    agent,
                    pieces,
                    child,
                }
            } else {
                GccNode::Choose {
                    agent,
                    pieces,
                    child,
                }
            }
        }
        "if" => {
            f.only(&[])?;
            let mut branches = Vec::with_capacity(f.rest.len());
            for item in &f.rest {
                let Sexp::List(parts, span) = item else {
                    return Err(diag(item.span(), "expected `(condition node)`"));
                };
                let [c, n] = parts.as_slice() else {
                    return Err(diag(*span, "expected `(condition node)`"));
                };
                let condition = condition(b, c, 0)?;
                branches.push(Branch {
                    condition,
                    child: gcc_node(b, n)?,
                });
            }
            GccNode::IfElse { branches }
        }
        "leaf" => {
            f.only(&[])?;
            if let Some(x) = f.rest.first() {
                return Err(diag(x.span(), "a gcc leaf takes no arguments"));
            }
            GccNode::Leaf
        }
        other => return Err(diag(f.span, format!("unknown node `{other}`"))),
    };
    b.nodes[id.index()] = Some(node);
    b.depth -= 1;
    Ok(id)
}

/// Parses without validating; also returns the span of every node.
pub fn parse_unchecked(text: &str) -> Result<(Protocol, Vec<SourceSpan>), Diagnostic> {
    let top = read_one(text)?;
    let f = form(&top)?;
    let agents = f.number(":agents")?;
    let [root] = f.rest.as_slice() else {
        return Err(diag(
            f.span,
            format!("`{}` takes exactly one root node", f.head),
        ));
    };
    Ok(match f.head {
        "bc" | "dag" => {
            f.only(&[":agents"])?;
            let dag = f.head == "dag";
            let mut b = Builder::new();
            let root = bc_node(&mut b, root, dag)?;
            let (nodes, spans) = b.finish();
            let p = if dag {
                Protocol::Dag(BcDag {
                    agents,
                    nodes,
                    root,
                })
            } else {
                Protocol::Bc(BcTree {
                    agents,
                    nodes,
                    root,
                })
            };
            (p, spans)
        }
        "extbc" => {
            f.only(&[":agents"])?;
            let mut b = Builder::new();
            let root = ext_node(&mut b, root)?;
            let (nodes, spans) = b.finish();
            (
                Protocol::Ext(ExtBcTree {
                    agents,
                    nodes,
                    root,
                }),
                spans,
            )
        }
        "gcc" => {
            f.only(&[":agents", ":mode"])?;
            let mode = match f.get(":mode") {
                None => GccMode::default(),
                Some(m) => m
                    .atom()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| diag(m.span(), "mode is `restricted` or `extensive`"))?,
            };
            let mut b = Builder::new();
            let root = gcc_node(&mut b, root)?;
            let (nodes, spans) = b.finish();
            (
                Protocol::Gcc(GccTree {
                    agents,
                    mode,
                    nodes,
                    root,
                }),
                spans,
            )
        }
        other => {
            return Err(diag(
                f.span,
                format!("unknown protocol kind `{other}`; expected bc, dag, extbc or gcc"),
            ))
        }
    })
}

/// Parses and validates. Validation errors point at the offending node.
pub fn parse(text: &str) -> Result<Protocol, Vec<Diagnostic>> {
    let (p, spans) = parse_unchecked(text).map_err(|d| vec![d])?;
    let report = p.validate();
    if report.is_valid() {
        return Ok(p);
    }
    let whole = SourceSpan {
        start: 0,
        end: text.len(),
        line: 1,
        column: 1,
    };
    Err(report
        .errors
        .iter()
        .map(|v| Diagnostic {
            span: v
                .node
                .and_then(|n| spans.get(n.index()).copied())
                .unwrap_or(whole),
            message: v.message.clone(),
        })
        .collect())
}

struct Printer {
    out: String,
}

impl Printer {
    fn open(&mut self, indent: usize, head: &str) {
        if indent > 0 {
            self.out.push('\n');
            self.out.push_str(&" ".repeat(indent));
        }
        self.out.push('(');
        self.out.push_str(head);
    }
}

fn label(n: NodeId) -> String {
    format!("n{}", n.0)
}

fn cut_ref(r: CutRef) -> String {
    match r {
        CutRef::Origin => "origin".into(),
        CutRef::End => "end".into(),
        CutRef::MadeAt(n) => label(n),
    }
}

/// Writes `child` on a new line, or on the same line if `inline`.
fn child_indent(inline: bool, indent: usize) -> usize {
    if inline {
        0
    } else {
        indent
    }
}

fn print_bc(
    pr: &mut Printer,
    nodes: &[BcNode],
    id: NodeId,
    indent: usize,
    shared: &HashSet<NodeId>,
    done: &mut HashSet<NodeId>,
) {
    let tag = if shared.contains(&id) {
        format!(" :id {}", label(id))
    } else {
        String::new()
    };
    if shared.contains(&id) && !done.insert(id) {
        pr.open(indent, &format!("ref {})", label(id)));
        return;
    }
    match &nodes[id.index()] {
        BcNode::Cut {
            agent,
            piece,
            child,
        } => {
            pr.open(indent, &format!("cut :agent {agent} :piece {piece}{tag}"));
            print_bc(pr, nodes, *child, indent + 2, shared, done);
        }
        BcNode::Choose { agent, children } => {
            pr.open(indent, &format!("choose :agent {agent}{tag}"));
            for c in children {
                print_bc(pr, nodes, *c, indent + 2, shared, done);
            }
        }
        BcNode::Leaf { assign } => {
            let parts: Vec<String> = assign
                .iter()
                .enumerate()
                .map(|(k, a)| format!(" ({} -> {a})", k + 1))
                .collect();
            pr.open(indent, &format!("leaf{tag}{}", parts.concat()));
        }
    }
    pr.out.push(')');
}

fn print_ext(pr: &mut Printer, t: &ExtBcTree, id: NodeId, indent: usize) {
    match t.node(id) {
        ExtNode::Cut {
            agent,
            left,
            right,
            child,
        } => {
            pr.open(
                indent,
                &format!(
                    "cut :agent {agent} :id {} :left {} :right {}",
                    label(id),
                    cut_ref(*left),
                    cut_ref(*right)
                ),
            );
            print_ext(pr, t, *child, indent + 2);
        }
        ExtNode::Choose { agent, children } => {
            pr.open(indent, &format!("choose :agent {agent}"));
            for c in children {
                print_ext(pr, t, *c, indent + 2);
            }
        }
        ExtNode::Leaf { segments } => {
            let parts: Vec<String> = segments
                .iter()
                .map(|s| format!(" ({} {} -> {})", cut_ref(s.left), cut_ref(s.right), s.agent))
                .collect();
            pr.open(indent, &format!("leaf{}", parts.concat()));
        }
    }
    pr.out.push(')');
}

fn print_condition(c: &Condition) -> String {
    match c {
        Condition::Less(a, b) => format!("(< {} {})", cut_ref(*a), cut_ref(*b)),
        Condition::ChoseAt { node, piece } => format!("(chose {} {})", label(*node), piece + 1),
        Condition::CutInAt { node, piece } => format!("(cut-in {} {})", label(*node), piece + 1),
        Condition::Else => "else".into(),
        Condition::And(cs) | Condition::Or(cs) => {
            let head = if matches!(c, Condition::And(_)) {
                "and"
            } else {
                "or"
            };
            let parts: Vec<String> = cs
                .iter()
                .map(|c| format!(" {}", print_condition(c)))
                .collect();
            format!("({head}{})", parts.concat())
        }
        Condition::Not(c) => format!("(not {})", print_condition(c)),
    }
}

fn print_gcc(pr: &mut Printer, g: &GccTree, id: NodeId, indent: usize) {
    match g.node(id) {
        GccNode::Cut {
            agent,
            pieces,
            child,
        }
        | GccNode::Choose {
            agent,
            pieces,
            child,
        } => {
            let head = if matches!(g.node(id), GccNode::Cut { .. }) {
                "gcc-cut"
            } else {
                "gcc-choose"
            };
            let ps: Vec<String> = pieces
                .iter()
                .map(|p| format!(" ({} {})", cut_ref(p.left), cut_ref(p.right)))
                .collect();
            pr.open(
                indent,
                &format!("{head} :agent {agent} :id {}{}", label(id), ps.concat()),
            );
            print_gcc(pr, g, *child, indent + 2);
        }
        GccNode::IfElse { branches } => {
            pr.open(indent, "if");
            for b in branches {
                pr.open(indent + 2, &print_condition(&b.condition));
                print_gcc(pr, g, b.child, indent + 4);
                pr.out.push(')');
            }
        }
        GccNode::Leaf => pr.open(indent, "leaf"),
    }
    pr.out.push(')');
}

/// Canonical text for `p`. Node ids are renumbered in preorder first, so
/// structurally equal protocols print identically.
pub fn print(p: &Protocol) -> String {
    let p = p.canonical();
    let mut pr = Printer { out: String::new() };
    let (head, leaf_root) = match &p {
        Protocol::Bc(t) => (
            format!("bc :agents {}", t.agents),
            matches!(t.node(t.root), BcNode::Leaf { .. }),
        ),
        Protocol::Dag(d) => (
            format!("dag :agents {}", d.agents),
            matches!(d.node(d.root), BcNode::Leaf { .. }),
        ),
        Protocol::Ext(t) => (
            format!("extbc :agents {}", t.agents),
            matches!(t.node(t.root), ExtNode::Leaf { .. }),
        ),
        Protocol::Gcc(g) => (
            format!("gcc :agents {} :mode {}", g.agents, g.mode),
            matches!(g.node(g.root), GccNode::Leaf),
        ),
    };
    pr.open(0, &head);
    let indent = child_indent(leaf_root, 2);
    if leaf_root {
        pr.out.push(' ');
    }
    match &p {
        Protocol::Bc(t) => print_bc(
            &mut pr,
            &t.nodes,
            t.root,
            indent,
            &HashSet::new(),
            &mut HashSet::new(),
        ),
        Protocol::Dag(d) => {
            let mut parents = vec![0usize; d.nodes.len()];
            for n in &d.nodes {
                for c in n.children() {
                    parents[c.index()] += 1;
                }
            }
            let shared = (0..d.nodes.len())
                .filter(|i| parents[*i] > 1)
                .map(NodeId::from)
                .collect();
            print_bc(
                &mut pr,
                &d.nodes,
                d.root,
                indent,
                &shared,
                &mut HashSet::new(),
            );
        }
        Protocol::Ext(t) => print_ext(&mut pr, t, t.root, indent),
        Protocol::Gcc(g) => print_gcc(&mut pr, g, g.root, indent),
    }
    pr.out.push_str(")\n");
    pr.out
}
