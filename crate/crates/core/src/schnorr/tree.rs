//! `2^n`-ary trees over `[0,1]^n` with values at the leaves, kept canonical:
//! a split node never has all children equal leaves.

use crate::rat::{pow2, Rat};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Node<T> {
    Leaf(T),
    Split(Box<[Node<T>]>),
}

impl<T: Clone + PartialEq> Node<T> {
    pub(crate) fn split(children: Vec<Node<T>>) -> Self {
        if let Node::Leaf(first) = &children[0] {
            if children
                .iter()
                .all(|c| matches!(c, Node::Leaf(v) if v == first))
            {
                return Node::Leaf(first.clone());
            }
        }
        Node::Split(children.into_boxed_slice())
    }

    pub(crate) fn map<U: Clone + PartialEq>(&self, f: &impl Fn(&T) -> U) -> Node<U> {
        match self {
            Node::Leaf(v) => Node::Leaf(f(v)),
            Node::Split(cs) => Node::split(cs.iter().map(|c| c.map(f)).collect()),
        }
    }

    pub(crate) fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split(cs) => 1 + cs.iter().map(Node::depth).max().unwrap_or(0),
        }
    }

    /// Visits leaves with their level and per-coordinate cube index.
    pub(crate) fn for_each_leaf(&self, dim: usize, f: &mut impl FnMut(u32, &[u64], &T)) {
        let mut idx = vec![0u64; dim];
        self.walk(dim, 0, &mut idx, f);
    }

    fn walk(
        &self,
        dim: usize,
        level: u32,
        idx: &mut Vec<u64>,
        f: &mut impl FnMut(u32, &[u64], &T),
    ) {
        match self {
            Node::Leaf(v) => f(level, idx, v),
            Node::Split(cs) => {
                for (c, child) in cs.iter().enumerate() {
                    let saved = idx.clone();
                    for (j, i) in idx.iter_mut().enumerate() {
                        *i = 2 * *i + child_bit(dim, c, j);
                    }
                    child.walk(dim, level + 1, idx, f);
                    *idx = saved;
                }
            }
        }
    }

    /// `Σ_leaves w(value) · 2^{-n·level}`.
    pub(crate) fn integrate(&self, dim: usize, w: &impl Fn(&T) -> Rat) -> Rat {
        match self {
            Node::Leaf(v) => w(v),
            Node::Split(cs) => {
                let s: Rat = cs.iter().map(|c| c.integrate(dim, w)).sum();
                s * pow2(-(dim as i64))
            }
        }
    }
}

/// Bit of coordinate `j` selected by child number `c`; coordinate 0 is the
/// most significant, matching the interleaved bit order.
pub(crate) fn child_bit(dim: usize, c: usize, j: usize) -> u64 {
    ((c >> (dim - 1 - j)) & 1) as u64
}

pub(crate) fn zip<A, B, C>(
    dim: usize,
    a: &Node<A>,
    b: &Node<B>,
    f: &impl Fn(&A, &B) -> C,
) -> Node<C>
where
    A: Clone + PartialEq,
    B: Clone + PartialEq,
    C: Clone + PartialEq,
{
    match (a, b) {
        (Node::Leaf(x), Node::Leaf(y)) => Node::Leaf(f(x, y)),
        (Node::Leaf(_), Node::Split(bs)) => {
            Node::split(bs.iter().map(|bc| zip(dim, a, bc, f)).collect())
        }
        (Node::Split(as_), Node::Leaf(_)) => {
            Node::split(as_.iter().map(|ac| zip(dim, ac, b, f)).collect())
        }
        (Node::Split(as_), Node::Split(bs)) => Node::split(
            as_.iter()
                .zip(bs.iter())
                .map(|(x, y)| zip(dim, x, y, f))
                .collect(),
        ),
    }
}

/// A tree that is `inside` on the cube `(level, idx)` and `outside` elsewhere.
pub(crate) fn cube_tree<T: Clone + PartialEq>(
    dim: usize,
    level: u32,
    idx: &[u64],
    inside: T,
    outside: T,
) -> Node<T> {
    let mut node = Node::Leaf(inside);
    for l in (0..level).rev() {
        let shift = level - 1 - l;
        let c = (0..dim).fold(0usize, |acc, j| {
            (acc << 1) | ((idx[j] >> shift) & 1) as usize
        });
        let mut children: Vec<Node<T>> = vec![Node::Leaf(outside.clone()); 1 << dim];
        children[c] = node;
        node = Node::split(children);
    }
    node
}
