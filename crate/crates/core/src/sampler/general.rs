use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::rng::GaussianSource;
use crate::scalar::Real;

use super::{check_sigma, split_node};

/// Child structure of one node in a [`GeneralTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Children {
    /// A leaf holding data slot `slot`.
    Leaf { slot: usize },
    One(usize),
    Two(usize, usize),
}

impl Children {
    fn ids(self) -> impl Iterator<Item = usize> {
        let (a, b) = match self {
            Children::Leaf { .. } => (None, None),
            Children::One(a) => (Some(a), None),
            Children::Two(a, b) => (Some(a), Some(b)),
        };
        a.into_iter().chain(b)
    }
}

/// Rooted binary tree whose nodes have 0, 1 or 2 children. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralTree {
    nodes: Vec<Children>,
    bfs: Vec<usize>,
    depth_of: Vec<u32>,
    leaf_count: usize,
}

impl GeneralTree {
    pub fn new(nodes: Vec<Children>) -> Result<Self> {
        let malformed = |m: String| Err(Error::MalformedTree(m));
        if nodes.is_empty() {
            return malformed("tree has no nodes".into());
        }
        let n = nodes.len();
        let mut parents = vec![0u32; n];
        let mut slots = Vec::new();
        for (id, c) in nodes.iter().enumerate() {
            match *c {
                Children::Leaf { slot } => slots.push(slot),
                Children::Two(a, b) if a == b => {
                    return malformed(format!("node {id} lists child {a} twice"));
                }
                _ => {}
            }
            for k in c.ids() {
                if k >= n {
                    return malformed(format!("node {id} points at missing node {k}"));
                }
                parents[k] += 1;
            }
        }
        if parents[0] != 0 {
            return malformed("root has a parent".into());
        }
        if let Some(bad) = (1..n).find(|&i| parents[i] != 1) {
            return malformed(format!("node {bad} has {} parents", parents[bad]));
        }

        let mut bfs = Vec::with_capacity(n);
        let mut depth_of = vec![u32::MAX; n];
        let mut queue = VecDeque::from([0usize]);
        depth_of[0] = 0;
        while let Some(id) = queue.pop_front() {
            bfs.push(id);
            let d = depth_of[id] + 1;
            for c in nodes[id].ids() {
                if depth_of[c] != u32::MAX {
                    return malformed(format!("cycle through node {c}"));
                }
                depth_of[c] = d;
                queue.push_back(c);
            }
        }
        if bfs.len() != n {
            return malformed(format!("{} nodes unreachable from the root", n - bfs.len()));
        }

        let leaf_count = slots.len();
        let mut seen = vec![false; leaf_count];
        for s in slots {
            if s >= leaf_count || std::mem::replace(&mut seen[s], true) {
                return malformed(format!("leaf slots are not a permutation of 0..{leaf_count}"));
            }
        }
        Ok(Self {
            nodes,
            bfs,
            depth_of,
            leaf_count,
        })
    }

    /// Perfect tree of depth `k` in heap layout.
    pub fn perfect(k: u32) -> Self {
        let internal = (1usize << k) - 1;
        let nodes = (0..2 * internal + 1)
            .map(|m| {
                if m < internal {
                    Children::Two(2 * m + 1, 2 * m + 2)
                } else {
                    Children::Leaf { slot: m - internal }
                }
            })
            .collect();
        Self::new(nodes).expect("perfect tree is well formed")
    }

    /// Chain of `len` nodes ending in a single leaf.
    pub fn path(len: usize) -> Self {
        assert!(len >= 1);
        let mut nodes: Vec<Children> = (1..len).map(Children::One).collect();
        nodes.push(Children::Leaf { slot: 0 });
        Self::new(nodes).expect("path is well formed")
    }

    /// Every internal node has a leaf as its right child; depth `depth` ≥ 1.
    pub fn caterpillar(depth: u32) -> Self {
        let mut b = Builder::default();
        fn grow(b: &mut Builder, remaining: u32) -> usize {
            if remaining == 0 {
                return b.leaf();
            }
            let id = b.reserve();
            let left = grow(b, remaining - 1);
            let right = b.leaf();
            b.set(id, Children::Two(left, right));
            id
        }
        grow(&mut b, depth);
        b.finish()
    }

    /// Near-balanced tree over `n` leaves (left halves take the extra leaf).
    pub fn balanced(n: usize) -> Self {
        assert!(n >= 1);
        let mut b = Builder::default();
        fn grow(b: &mut Builder, n: usize) -> usize {
            if n == 1 {
                return b.leaf();
            }
            let id = b.reserve();
            let left = grow(b, n.div_ceil(2));
            let right = grow(b, n / 2);
            b.set(id, Children::Two(left, right));
            id
        }
        grow(&mut b, n);
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn children(&self, id: usize) -> Children {
        self.nodes[id]
    }

    pub fn node_depth(&self, id: usize) -> u32 {
        self.depth_of[id]
    }

    pub fn max_depth(&self) -> u32 {
        self.depth_of.iter().copied().max().unwrap_or(0)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Nodes in breadth-first order from the root.
    pub fn bfs_order(&self) -> &[usize] {
        &self.bfs
    }

    /// Node id of every leaf, indexed by data slot.
    pub fn leaf_nodes(&self) -> Vec<usize> {
        let mut out = vec![0; self.leaf_count];
        for (id, c) in self.nodes.iter().enumerate() {
            if let Children::Leaf { slot } = c {
                out[*slot] = id;
            }
        }
        out
    }

    /// Number of two-child nodes, i.e. the draws consumed beyond the root.
    pub fn branching_nodes(&self) -> usize {
        self.nodes
            .iter()
            .filter(|c| matches!(c, Children::Two(..)))
            .count()
    }
}

/// Assigns ids in pre-order and leaf slots left to right.
#[derive(Default)]
struct Builder {
    nodes: Vec<Children>,
    next_slot: usize,
}

impl Builder {
    fn reserve(&mut self) -> usize {
        self.nodes.push(Children::Leaf { slot: usize::MAX });
        self.nodes.len() - 1
    }

    fn leaf(&mut self) -> usize {
        let id = self.reserve();
        self.nodes[id] = Children::Leaf {
            slot: self.next_slot,
        };
        self.next_slot += 1;
        id
    }

    fn set(&mut self, id: usize, c: Children) {
        self.nodes[id] = c;
    }

    fn finish(self) -> GeneralTree {
        GeneralTree::new(self.nodes).expect("builder output is well formed")
    }
}

/// Noise for every node of a general binary tree, indexed by node id.
///
/// Two-child nodes split as in the perfect-tree cascade; a single child
/// inherits its parent's value and consumes no randomness. Nodes are visited
/// breadth-first, so on a heap-laid perfect tree the draws line up with
/// [`cascade_sample`](super::cascade_sample).
pub fn general_tree_sample<T, S>(tree: &GeneralTree, sigma: T, src: &mut S) -> Result<Vec<T>>
where
    T: Real,
    S: GaussianSource<T> + ?Sized,
{
    check_sigma(sigma)?;
    let mut values = vec![T::zero(); tree.len()];
    values[0] = sigma * src.standard_normal();
    for &id in tree.bfs_order() {
        match tree.nodes[id] {
            Children::Leaf { .. } => {}
            Children::One(a) => values[a] = values[id],
            Children::Two(a, b) => {
                let y = sigma * src.standard_normal();
                let (x0, x1) = split_node(values[id], y);
                values[a] = x0;
                values[b] = x1;
            }
        }
    }
    Ok(values)
}
