//! Bracketed constituency trees and constituent enumeration.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("unbalanced brackets at byte {pos}")]
    UnbalancedBrackets { pos: usize },
    #[error("node without a label at byte {pos}")]
    EmptyLabel { pos: usize },
    #[error("tree contains no tokens")]
    EmptyTree,
    #[error("unexpected content after the root node at byte {pos}")]
    TrailingGarbage { pos: usize },
    #[error("node `{label}` has neither children nor a token (byte {pos})")]
    EmptyNode { label: String, pos: usize },
    #[error("malformed node at byte {pos}: {reason}")]
    MalformedNode { pos: usize, reason: &'static str },
    #[error("invalid label `{0}`")]
    InvalidLabel(String),
}

/// A tree node: either a phrase over child nodes or a pre-terminal over one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Phrase { label: String, children: Vec<Node> },
    Leaf { label: String, token: String },
}

impl Node {
    pub fn label(&self) -> &str {
        match self {
            Node::Phrase { label, .. } | Node::Leaf { label, .. } => label,
        }
    }

    pub fn is_preterminal(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    pub fn token_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Phrase { children, .. } => children.iter().map(Node::token_count).sum(),
        }
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Node::Leaf { token, .. } => out.push(token),
            Node::Phrase { children, .. } => children.iter().for_each(|c| c.collect_tokens(out)),
        }
    }

    fn validate(&self) -> Result<(), TreeError> {
        check_label(self.label())?;
        match self {
            Node::Leaf { token, .. } => {
                if token.is_empty() || token.contains(|c: char| c.is_whitespace() || c == '(' || c == ')') {
                    return Err(TreeError::MalformedNode { pos: 0, reason: "invalid token" });
                }
                Ok(())
            }
            Node::Phrase { label, children } => {
                if children.is_empty() {
                    return Err(TreeError::EmptyNode { label: label.clone(), pos: 0 });
                }
                children.iter().try_for_each(Node::validate)
            }
        }
    }

    fn write_bracketed(&self, out: &mut String) {
        match self {
            Node::Leaf { label, token } => {
                out.push('(');
                out.push_str(label);
                out.push(' ');
                out.push_str(token);
                out.push(')');
            }
            Node::Phrase { label, children } => {
                out.push('(');
                out.push_str(label);
                for child in children {
                    out.push(' ');
                    child.write_bracketed(out);
                }
                out.push(')');
            }
        }
    }
}

fn check_label(label: &str) -> Result<(), TreeError> {
    if label.is_empty() || label.contains(|c: char| c.is_whitespace() || c == '(' || c == ')') {
        return Err(TreeError::InvalidLabel(label.to_string()));
    }
    Ok(())
}

/// Strips functional annotations: `NP-SBJ-1` and `NP=2` both become `NP`.
/// Labels that start with `-` (`-NONE-`, `-LRB-`) are returned unchanged.
pub fn normalize_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    match label.find(['-', '=']) {
        Some(idx) => &label[..idx],
        None => label,
    }
}

/// An immutable, validated constituency tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    root: Node,
    token_count: usize,
}

impl ParseTree {
    pub fn new(root: Node) -> Result<Self, TreeError> {
        root.validate()?;
        let token_count = root.token_count();
        Ok(Self { root, token_count })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn leaf_tokens(&self) -> Vec<String> {
        self.leaf_token_refs().into_iter().map(str::to_string).collect()
    }

    pub fn leaf_token_refs(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.token_count);
        self.root.collect_tokens(&mut out);
        out
    }

    /// Follows child indices from the root.
    pub fn node_at(&self, path: &[usize]) -> Option<&Node> {
        let mut node = &self.root;
        for &idx in path {
            node = match node {
                Node::Phrase { children, .. } => children.get(idx)?,
                Node::Leaf { .. } => return None,
            };
        }
        Some(node)
    }

    /// The constituent spanning the whole utterance.
    pub fn root_constituent(&self) -> Constituent {
        Constituent {
            label: self.root.label().to_string(),
            span: Span::new(0, self.token_count),
            node_path: Vec::new(),
        }
    }

    pub fn to_bracketed(&self) -> String {
        let mut out = String::new();
        self.root.write_bracketed(&mut out);
        out
    }

    /// Every node accepted by `policy`, in pre-order. Pre-order sorts spans by
    /// start ascending and end descending; unary chains come ancestor first.
    pub fn enumerate_constituents(&self, policy: &ConstituentPolicy) -> Vec<Constituent> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.visit(&self.root, 0, &mut path, policy, &mut out);
        out
    }

    fn visit(
        &self,
        node: &Node,
        start: usize,
        path: &mut Vec<usize>,
        policy: &ConstituentPolicy,
        out: &mut Vec<Constituent>,
    ) -> usize {
        let len = node.token_count();
        if let Some(c) = policy.accept(node, Span::new(start, start + len), path, self.token_count) {
            out.push(c);
        }
        if let Node::Phrase { children, .. } = node {
            let mut offset = start;
            for (i, child) in children.iter().enumerate() {
                path.push(i);
                offset += self.visit(child, offset, path, policy, out);
                path.pop();
            }
        }
        len
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracketed())
    }
}

impl std::str::FromStr for ParseTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_bracketed(s)
    }
}

/// Half-open word-index range `[start, end)`; serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Self { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// A labelled node of a tree together with the word span it covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constituent {
    pub label: String,
    pub span: Span,
    pub node_path: Vec<usize>,
}

impl fmt::Display for Constituent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.label, self.span)
    }
}

/// Which nodes count as substitutable constituents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituentPolicy {
    pub include_preterminals: bool,
    pub exclude_full_span: bool,
    pub min_words: usize,
    pub max_words: Option<usize>,
    pub label_allowlist: Option<BTreeSet<String>>,
    pub normalize_labels: bool,
}

impl Default for ConstituentPolicy {
    fn default() -> Self {
        Self {
            include_preterminals: true,
            exclude_full_span: true,
            min_words: 1,
            max_words: None,
            label_allowlist: None,
            normalize_labels: false,
        }
    }
}

impl ConstituentPolicy {
    pub fn matching_label<'a>(&self, label: &'a str) -> &'a str {
        if self.normalize_labels {
            normalize_label(label)
        } else {
            label
        }
    }

    fn accept(&self, node: &Node, span: Span, path: &[usize], token_count: usize) -> Option<Constituent> {
        if node.is_preterminal() && !self.include_preterminals {
            return None;
        }
        if self.exclude_full_span && span.start == 0 && span.end == token_count {
            return None;
        }
        let len = span.len();
        if len < self.min_words || self.max_words.is_some_and(|max| len > max) {
            return None;
        }
        let label = self.matching_label(node.label());
        if let Some(allow) = &self.label_allowlist {
            if !allow.contains(label) {
                return None;
            }
        }
        Some(Constituent {
            label: label.to_string(),
            span,
            node_path: path.to_vec(),
        })
    }
}

pub fn enumerate_constituents(tree: &ParseTree, policy: &ConstituentPolicy) -> Vec<Constituent> {
    tree.enumerate_constituents(policy)
}

pub fn leaf_tokens(tree: &ParseTree) -> Vec<String> {
    tree.leaf_tokens()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut toks = Vec::new();
    let mut atom_start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = atom_start.take() {
                toks.push((s, Tok::Atom(&text[s..i])));
            }
            match c {
                '(' => toks.push((i, Tok::Open)),
                ')' => toks.push((i, Tok::Close)),
                _ => {}
            }
        } else if atom_start.is_none() {
            atom_start = Some(i);
        }
    }
    if let Some(s) = atom_start {
        toks.push((s, Tok::Atom(&text[s..])));
    }
    toks
}

struct Frame<'a> {
    pos: usize,
    label: Option<&'a str>,
    children: Vec<Node>,
    atoms: Vec<&'a str>,
}

/// Parses one bracketed tree such as `(S (NP (PRP He)) (VP (VBD lied)))`.
///
/// A single outer pair of brackets without a label (`( (S ...) )`) is
/// stripped.
pub fn parse_bracketed(text: &str) -> Result<ParseTree, TreeError> {
    let toks = tokenize(text);
    if toks.is_empty() {
        return Err(TreeError::EmptyTree);
    }
    let mut stack: Vec<Frame<'_>> = Vec::new();
    let mut root: Option<Node> = None;
    let mut expect_label = false;

    for &(pos, tok) in &toks {
        if root.is_some() {
            if tok == Tok::Close {
                return Err(TreeError::UnbalancedBrackets { pos });
            }
            return Err(TreeError::TrailingGarbage { pos });
        }
        match tok {
            Tok::Open => {
                stack.push(Frame { pos, label: None, children: Vec::new(), atoms: Vec::new() });
                expect_label = true;
            }
            Tok::Atom(atom) => {
                let Some(top) = stack.last_mut() else {
                    return Err(TreeError::MalformedNode { pos, reason: "expected `(`" });
                };
                if expect_label {
                    top.label = Some(atom);
                } else {
                    top.atoms.push(atom);
                }
                expect_label = false;
            }
            Tok::Close => {
                expect_label = false;
                let frame = stack.pop().ok_or(TreeError::UnbalancedBrackets { pos })?;
                let is_root = stack.is_empty();
                let node = close_frame(frame, is_root)?;
                match stack.last_mut() {
                    Some(parent) => {
                        if !parent.atoms.is_empty() {
                            return Err(TreeError::MalformedNode {
                                pos: parent.pos,
                                reason: "node mixes tokens and subtrees",
                            });
                        }
                        parent.children.push(node);
                    }
                    None => root = Some(node),
                }
            }
        }
    }
    if let Some(open) = stack.last() {
        return Err(TreeError::UnbalancedBrackets { pos: open.pos });
    }
    let root = root.ok_or(TreeError::EmptyTree)?;
    ParseTree::new(root)
}

fn close_frame(frame: Frame<'_>, is_root: bool) -> Result<Node, TreeError> {
    let Frame { pos, label, mut children, atoms } = frame;
    if !atoms.is_empty() && !children.is_empty() {
        return Err(TreeError::MalformedNode { pos, reason: "node mixes tokens and subtrees" });
    }
    match label {
        None => {
            if is_root && children.len() == 1 {
                return Ok(children.pop().expect("one child"));
            }
            if is_root && children.is_empty() && atoms.is_empty() {
                return Err(TreeError::EmptyTree);
            }
            Err(TreeError::EmptyLabel { pos })
        }
        Some(label) => {
            if atoms.len() > 1 {
                return Err(TreeError::MalformedNode { pos, reason: "pre-terminal with more than one token" });
            }
            if let Some(token) = atoms.first() {
                return Ok(Node::Leaf { label: label.to_string(), token: token.to_string() });
            }
            if children.is_empty() {
                return Err(TreeError::EmptyNode { label: label.to_string(), pos });
            }
            Ok(Node::Phrase { label: label.to_string(), children })
        }
    }
}
