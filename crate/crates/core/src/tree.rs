//! CSG expression trees.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::error::{CsgError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CsgNode {
    Leaf(u32),
    Empty,
    Universe,
    Union(Box<CsgNode>, Box<CsgNode>),
    Intersection(Box<CsgNode>, Box<CsgNode>),
    Complement(Box<CsgNode>),
    Difference(Box<CsgNode>, Box<CsgNode>),
}

/// Operation kinds, used by builders and the GA's operator mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Union,
    Intersection,
    Difference,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 3] = [BinaryOp::Union, BinaryOp::Intersection, BinaryOp::Difference];

    pub fn apply(self, l: CsgNode, r: CsgNode) -> CsgNode {
        match self {
            BinaryOp::Union => CsgNode::union(l, r),
            BinaryOp::Intersection => CsgNode::inter(l, r),
            BinaryOp::Difference => CsgNode::diff(l, r),
        }
    }
}

impl CsgNode {
    pub fn leaf(id: u32) -> Self {
        CsgNode::Leaf(id)
    }

    pub fn union(l: CsgNode, r: CsgNode) -> Self {
        CsgNode::Union(Box::new(l), Box::new(r))
    }

    pub fn inter(l: CsgNode, r: CsgNode) -> Self {
        CsgNode::Intersection(Box::new(l), Box::new(r))
    }

    pub fn diff(l: CsgNode, r: CsgNode) -> Self {
        CsgNode::Difference(Box::new(l), Box::new(r))
    }

    pub fn comp(c: CsgNode) -> Self {
        CsgNode::Complement(Box::new(c))
    }

    /// Left-leaning union chain; `Empty` for no operands.
    pub fn union_all<I: IntoIterator<Item = CsgNode>>(items: I) -> Self {
        items.into_iter().reduce(CsgNode::union).unwrap_or(CsgNode::Empty)
    }

    /// Left-leaning intersection chain; `Universe` for no operands.
    pub fn inter_all<I: IntoIterator<Item = CsgNode>>(items: I) -> Self {
        items.into_iter().reduce(CsgNode::inter).unwrap_or(CsgNode::Universe)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, CsgNode::Leaf(_))
    }

    pub fn is_empty_literal(&self) -> bool {
        matches!(self, CsgNode::Empty)
    }

    pub fn binary_op(&self) -> Option<(BinaryOp, &CsgNode, &CsgNode)> {
        match self {
            CsgNode::Union(l, r) => Some((BinaryOp::Union, l, r)),
            CsgNode::Intersection(l, r) => Some((BinaryOp::Intersection, l, r)),
            CsgNode::Difference(l, r) => Some((BinaryOp::Difference, l, r)),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&CsgNode> {
        match self {
            CsgNode::Leaf(_) | CsgNode::Empty | CsgNode::Universe => Vec::new(),
            CsgNode::Complement(c) => vec![c],
            CsgNode::Union(l, r) | CsgNode::Intersection(l, r) | CsgNode::Difference(l, r) => vec![l, r],
        }
    }

    fn children_mut(&mut self) -> Vec<&mut CsgNode> {
        match self {
            CsgNode::Leaf(_) | CsgNode::Empty | CsgNode::Universe => Vec::new(),
            CsgNode::Complement(c) => vec![c],
            CsgNode::Union(l, r) | CsgNode::Intersection(l, r) | CsgNode::Difference(l, r) => vec![l, r],
        }
    }

    /// Node count: operations plus literals, including `Empty`/`Universe`.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(CsgNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(CsgNode::depth).max().unwrap_or(0)
    }

    /// Distinct halfspace ids referenced by the tree.
    pub fn halfspace_ids(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_ids(&mut out);
        out
    }

    fn collect_ids(&self, out: &mut BTreeSet<u32>) {
        if let CsgNode::Leaf(id) = self {
            out.insert(*id);
        }
        for c in self.children() {
            c.collect_ids(out);
        }
    }

    /// Boolean value with each leaf's membership given by `inside`.
    pub fn eval_bool(&self, inside: &dyn Fn(u32) -> bool) -> bool {
        match self {
            CsgNode::Leaf(id) => inside(*id),
            CsgNode::Empty => false,
            CsgNode::Universe => true,
            CsgNode::Union(l, r) => l.eval_bool(inside) || r.eval_bool(inside),
            CsgNode::Intersection(l, r) => l.eval_bool(inside) && r.eval_bool(inside),
            CsgNode::Difference(l, r) => l.eval_bool(inside) && !r.eval_bool(inside),
            CsgNode::Complement(c) => !c.eval_bool(inside),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            CsgNode::Leaf(_) => 1,
            _ => self.children().into_iter().map(CsgNode::leaf_count).sum(),
        }
    }

    /// Replace every leaf whose id is in `ids` with `Empty`.
    pub fn substitute_empty(&self, ids: &BTreeSet<u32>) -> CsgNode {
        self.map_leaves(&|id| if ids.contains(&id) { CsgNode::Empty } else { CsgNode::Leaf(id) })
    }

    pub fn map_leaves(&self, f: &dyn Fn(u32) -> CsgNode) -> CsgNode {
        match self {
            CsgNode::Leaf(id) => f(*id),
            CsgNode::Empty => CsgNode::Empty,
            CsgNode::Universe => CsgNode::Universe,
            CsgNode::Complement(c) => CsgNode::comp(c.map_leaves(f)),
            CsgNode::Union(l, r) => CsgNode::union(l.map_leaves(f), r.map_leaves(f)),
            CsgNode::Intersection(l, r) => CsgNode::inter(l.map_leaves(f), r.map_leaves(f)),
            CsgNode::Difference(l, r) => CsgNode::diff(l.map_leaves(f), r.map_leaves(f)),
        }
    }

    /// Subtree at preorder index `index` (the root is 0).
    pub fn subtree(&self, index: usize) -> Option<&CsgNode> {
        let mut counter = index;
        self.subtree_inner(&mut counter)
    }

    fn subtree_inner(&self, counter: &mut usize) -> Option<&CsgNode> {
        if *counter == 0 {
            return Some(self);
        }
        *counter -= 1;
        for c in self.children() {
            let size = c.size();
            if *counter < size {
                return c.subtree_inner(counter);
            }
            *counter -= size;
        }
        None
    }

    pub fn subtree_mut(&mut self, index: usize) -> Option<&mut CsgNode> {
        if index == 0 {
            return Some(self);
        }
        let mut rest = index - 1;
        for c in self.children_mut() {
            let size = c.size();
            if rest < size {
                return c.subtree_mut(rest);
            }
            rest -= size;
        }
        None
    }

    /// Returns a copy with the subtree at preorder `index` replaced.
    pub fn with_subtree(&self, index: usize, replacement: CsgNode) -> CsgNode {
        let mut out = self.clone();
        if let Some(slot) = out.subtree_mut(index) {
            *slot = replacement;
        }
        out
    }

    /// Preorder list of (index, subtree size).
    pub fn preorder_sizes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.size());
        self.preorder_sizes_inner(&mut out);
        out
    }

    fn preorder_sizes_inner(&self, out: &mut Vec<usize>) -> usize {
        let slot = out.len();
        out.push(0);
        let mut size = 1;
        for c in self.children() {
            size += c.preorder_sizes_inner(out);
        }
        out[slot] = size;
        size
    }

    /// Structural hash invariant under commutative operand order, with
    /// `Difference(a, b)` hashed as `Intersection(a, Complement(b))`.
    pub fn canonical_hash(&self) -> u64 {
        fn mix(tag: u8, parts: &[u64]) -> u64 {
            let mut h = DefaultHasher::new();
            tag.hash(&mut h);
            parts.hash(&mut h);
            h.finish()
        }
        fn sorted(a: u64, b: u64) -> [u64; 2] {
            if a <= b {
                [a, b]
            } else {
                [b, a]
            }
        }
        match self {
            CsgNode::Leaf(id) => mix(0, &[*id as u64]),
            CsgNode::Empty => mix(1, &[]),
            CsgNode::Universe => mix(2, &[]),
            CsgNode::Complement(c) => mix(3, &[c.canonical_hash()]),
            CsgNode::Union(l, r) => mix(4, &sorted(l.canonical_hash(), r.canonical_hash())),
            CsgNode::Intersection(l, r) => mix(5, &sorted(l.canonical_hash(), r.canonical_hash())),
            CsgNode::Difference(l, r) => {
                let neg = mix(3, &[r.canonical_hash()]);
                mix(5, &sorted(l.canonical_hash(), neg))
            }
        }
    }

    /// Plain structural hash (operand order significant).
    pub fn structural_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.hash(&mut h);
        h.finish()
    }

    /// Parses the infix notation produced by `Display`.
    ///
    /// Grammar, loosest binding first: `+` union, `-` difference, `*` or `·`
    /// intersection, prefix `!` complement. Atoms are `h<id>`, `0` (empty),
    /// `1` (universe) and parenthesised expressions. `+`/`-` share a level
    /// and associate left.
    pub fn parse(text: &str) -> Result<CsgNode> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let node = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(CsgError::Parse(format!("unexpected trailing input in {text:?}")));
        }
        Ok(node)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Id(u32),
    Empty,
    Universe,
    Plus,
    Minus,
    Star,
    Bang,
    Open,
    Close,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '+' => out.push(Token::Plus),
            '-' | '−' => out.push(Token::Minus),
            '*' | '·' => out.push(Token::Star),
            '!' => out.push(Token::Bang),
            '(' => out.push(Token::Open),
            ')' => out.push(Token::Close),
            '0' => out.push(Token::Empty),
            '1' => out.push(Token::Universe),
            'h' => {
                let mut digits = String::new();
                while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                    digits.push(*d);
                    chars.next();
                }
                let id = digits
                    .parse()
                    .map_err(|_| CsgError::Parse(format!("bad halfspace literal in {text:?}")))?;
                out.push(Token::Id(id));
            }
            other => return Err(CsgError::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<CsgNode> {
        let mut acc = self.product()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = CsgNode::union(acc, self.product()?);
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = CsgNode::diff(acc, self.product()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn product(&mut self) -> Result<CsgNode> {
        let mut acc = self.unary()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            acc = CsgNode::inter(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<CsgNode> {
        match self.next() {
            Some(Token::Bang) => Ok(CsgNode::comp(self.unary()?)),
            Some(Token::Id(id)) => Ok(CsgNode::Leaf(id)),
            Some(Token::Empty) => Ok(CsgNode::Empty),
            Some(Token::Universe) => Ok(CsgNode::Universe),
            Some(Token::Open) => {
                let inner = self.sum()?;
                match self.next() {
                    Some(Token::Close) => Ok(inner),
                    _ => Err(CsgError::Parse("missing ')'".into())),
                }
            }
            other => Err(CsgError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Infix rendering: `+` union, `·` intersection, `-` difference, `!` complement.
/// Every binary operation is parenthesised, so the output re-parses exactly.
impl fmt::Display for CsgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsgNode::Leaf(id) => write!(f, "h{id}"),
            CsgNode::Empty => write!(f, "0"),
            CsgNode::Universe => write!(f, "1"),
            CsgNode::Complement(c) => write!(f, "!{c}"),
            CsgNode::Union(l, r) => write!(f, "({l} + {r})"),
            CsgNode::Intersection(l, r) => write!(f, "({l} · {r})"),
            CsgNode::Difference(l, r) => write!(f, "({l} - {r})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(id: u32) -> CsgNode {
        CsgNode::leaf(id)
    }

    #[test]
    fn sizes() {
        assert_eq!(h(0).size(), 1);
        assert_eq!(CsgNode::union(h(0), h(1)).size(), 3);
        assert_eq!(CsgNode::comp(CsgNode::diff(h(0), CsgNode::Empty)).size(), 4);
    }

    #[test]
    fn parse_precedence() {
        let t = CsgNode::parse("h4 - h0 - h2 + h3").unwrap();
        let expect = CsgNode::union(CsgNode::diff(CsgNode::diff(h(4), h(0)), h(2)), h(3));
        assert_eq!(t, expect);
        let t = CsgNode::parse("!h0 * !h2 · h4").unwrap();
        assert_eq!(t, CsgNode::inter(CsgNode::inter(CsgNode::comp(h(0)), CsgNode::comp(h(2))), h(4)));
    }

    #[test]
    fn canonical_hash_ignores_commutative_order() {
        let a = CsgNode::parse("(h1 + h2) * h3").unwrap();
        let b = CsgNode::parse("h3 * (h2 + h1)").unwrap();
        assert_eq!(a.canonical_hash(), b.canonical_hash());
        let d = CsgNode::parse("h1 - h2").unwrap();
        let n = CsgNode::parse("!h2 * h1").unwrap();
        assert_eq!(d.canonical_hash(), n.canonical_hash());
        assert_ne!(
            CsgNode::parse("h1 - h2").unwrap().canonical_hash(),
            CsgNode::parse("h2 - h1").unwrap().canonical_hash()
        );
    }

    #[test]
    fn subtree_addressing() {
        let t = CsgNode::parse("(h0 + h1) - !h2").unwrap();
        assert_eq!(t.subtree(1), Some(&CsgNode::parse("h0 + h1").unwrap()));
        assert_eq!(t.subtree(3), Some(&h(1)));
        assert_eq!(t.subtree(5), Some(&h(2)));
        assert_eq!(t.subtree(6), None);
        assert_eq!(t.preorder_sizes(), vec![6, 3, 1, 1, 2, 1]);
        let r = t.with_subtree(4, h(7));
        assert_eq!(r, CsgNode::parse("(h0 + h1) - h7").unwrap());
    }

    pub(crate) fn arb_tree() -> impl Strategy<Value = CsgNode> {
        let leaf = prop_oneof![
            8 => (0u32..6).prop_map(CsgNode::Leaf),
            1 => Just(CsgNode::Empty),
            1 => Just(CsgNode::Universe),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(l, r)| CsgNode::union(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| CsgNode::inter(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| CsgNode::diff(l, r)),
                inner.prop_map(CsgNode::comp),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(t in arb_tree()) {
            let text = t.to_string();
            prop_assert_eq!(CsgNode::parse(&text).unwrap(), t);
        }

        #[test]
        fn size_is_one_plus_children(t in arb_tree()) {
            let kids: usize = t.children().iter().map(|c| c.size()).sum();
            prop_assert_eq!(t.size(), 1 + kids);
            prop_assert_eq!(t.preorder_sizes().len(), t.size());
            prop_assert!(t == t.clone());
        }
    }
}
