//! The rooted tree of nests and alternatives.
//!
//! Nodes are stored in pre-order (root first, children in input order), so a
//! node's parent always has a smaller index and every subtree occupies a
//! contiguous index range. Passes that need children before parents simply
//! walk the indices backwards.

use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidModel("node id must be non-empty".into()));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Nest { lambda: f64 },
    Leaf,
}

impl NodeKind {
    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Leaf)
    }
}

/// Tree-shaped description of a model, as read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum RawNode {
    Nest { id: String, lambda: f64, children: Vec<RawNode> },
    Leaf { id: String },
}

/// One node of a parent-link (edge list) description.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub id: String,
    pub parent: Option<String>,
    pub kind: NodeKind,
}

#[derive(Debug, Clone)]
pub struct Arborescence {
    ids: Vec<NodeId>,
    index: HashMap<String, usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    kind: Vec<NodeKind>,
    depth: Vec<usize>,
    subtree_end: Vec<usize>,
    leaves: Vec<usize>,
}

impl Arborescence {
    /// Builds from a nested description. Duplicate ids are reported before
    /// anything else, since they make the nesting ambiguous.
    pub fn build(root: &RawNode) -> Result<Self> {
        let mut specs = Vec::new();
        let mut stack: Vec<(&RawNode, Option<&str>)> = vec![(root, None)];
        while let Some((node, parent)) = stack.pop() {
            let parent = parent.map(str::to_owned);
            match node {
                RawNode::Nest { id, lambda, children } => {
                    specs.push(NodeSpec { id: id.clone(), parent, kind: NodeKind::Nest { lambda: *lambda } });
                    for child in children.iter().rev() {
                        stack.push((child, Some(id)));
                    }
                }
                RawNode::Leaf { id } => {
                    specs.push(NodeSpec { id: id.clone(), parent, kind: NodeKind::Leaf });
                }
            }
        }
        Self::from_parent_links(&specs)
    }

    /// Builds from parent links. Children keep the order in which they appear
    /// in `specs`; the root is the unique node without a parent.
    pub fn from_parent_links(specs: &[NodeSpec]) -> Result<Self> {
        let mut index = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            NodeId::new(s.id.clone())?;
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }

        let mut parent_of = vec![None; specs.len()];
        let mut roots = Vec::new();
        for (i, s) in specs.iter().enumerate() {
            match &s.parent {
                None => roots.push(i),
                Some(p) => match index.get(p) {
                    Some(&pi) => parent_of[i] = Some(pi),
                    None => return Err(Error::OrphanNode(s.id.clone())),
                },
            }
        }

        // Parent chains either end at a parentless node or loop.
        let mut resolved = vec![false; specs.len()];
        for start in 0..specs.len() {
            let mut on_path = HashSet::new();
            let mut cur = start;
            while !resolved[cur] {
                if !on_path.insert(cur) {
                    return Err(Error::CycleDetected(specs[cur].id.clone()));
                }
                match parent_of[cur] {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            for i in on_path {
                resolved[i] = true;
            }
        }
        let root = match roots.as_slice() {
            [] => return Err(Error::CycleDetected(specs.first().map(|s| s.id.clone()).unwrap_or_default())),
            [r] => *r,
            [first, rest @ ..] => {
                // Every extra parentless node heads a component the root cannot reach.
                let stray = rest.iter().copied().find(|&r| r != *first).unwrap_or(*first);
                return Err(Error::OrphanNode(specs[stray].id.clone()));
            }
        };

        let mut input_children = vec![Vec::new(); specs.len()];
        for (i, p) in parent_of.iter().enumerate() {
            if let Some(p) = *p {
                if specs[p].kind.is_leaf() {
                    return Err(Error::InvalidModel(format!("leaf `{}` has children", specs[p].id)));
                }
                input_children[p].push(i);
            }
        }

        match specs[root].kind {
            NodeKind::Leaf => return Err(Error::InvalidModel(format!("root `{}` must be a nest", specs[root].id))),
            NodeKind::Nest { lambda } if lambda != 1.0 => {
                return Err(Error::RootLambdaNotOne { id: specs[root].id.clone(), value: lambda })
            }
            NodeKind::Nest { .. } => {}
        }
        for (i, s) in specs.iter().enumerate() {
            if let NodeKind::Nest { lambda } = s.kind {
                if !(lambda > 0.0 && lambda <= 1.0) {
                    return Err(Error::LambdaOutOfRange { id: s.id.clone(), value: lambda });
                }
                if input_children[i].is_empty() {
                    return Err(Error::EmptyNest(s.id.clone()));
                }
            }
        }

        // Pre-order relabelling.
        let n = specs.len();
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(input_children[v].iter().rev().copied());
        }
        if order.len() != n {
            let reached: HashSet<usize> = order.iter().copied().collect();
            let orphan = (0..n).find(|i| !reached.contains(i)).expect("unreached node");
            return Err(Error::OrphanNode(specs[orphan].id.clone()));
        }
        let mut new_index = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }

        let ids: Vec<NodeId> = order.iter().map(|&o| NodeId(specs[o].id.clone())).collect();
        let kind: Vec<NodeKind> = order.iter().map(|&o| specs[o].kind).collect();
        let parent: Vec<Option<usize>> = order.iter().map(|&o| parent_of[o].map(|p| new_index[p])).collect();
        let children: Vec<Vec<usize>> =
            order.iter().map(|&o| input_children[o].iter().map(|&c| new_index[c]).collect()).collect();
        let mut depth = vec![0; n];
        for v in 1..n {
            depth[v] = depth[parent[v].expect("non-root parent")] + 1;
        }
        let mut subtree_end: Vec<usize> = (1..=n).collect();
        for v in (1..n).rev() {
            let p = parent[v].expect("non-root parent");
            subtree_end[p] = subtree_end[p].max(subtree_end[v]);
        }
        let leaves = (0..n).filter(|&v| kind[v].is_leaf()).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.0.clone(), i)).collect();

        Ok(Self { ids, index, parent, children, kind, depth, subtree_end, leaves })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn id(&self, v: usize) -> &NodeId {
        &self.ids[v]
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index.get(id).copied().ok_or_else(|| Error::UnknownNode(id.to_owned()))
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.kind[v]
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.kind[v].is_leaf()
    }

    /// λ of a nest; leaves report `None`.
    pub fn lambda(&self, v: usize) -> Option<f64> {
        match self.kind[v] {
            NodeKind::Nest { lambda } => Some(lambda),
            NodeKind::Leaf => None,
        }
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Leaves in pre-order. This is the column order used everywhere.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn nests(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&v| !self.is_leaf(v))
    }

    /// Lowest common ancestor by node index.
    pub fn lca_index(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("deeper node has a parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("deeper node has a parent");
        }
        while a != b {
            a = self.parent[a].expect("distinct nodes below root");
            b = self.parent[b].expect("distinct nodes below root");
        }
        a
    }

    pub fn lca(&self, z1: &str, z2: &str) -> Result<&NodeId> {
        let (a, b) = (self.index_of(z1)?, self.index_of(z2)?);
        Ok(&self.ids[self.lca_index(a, b)])
    }

    /// Indices of the leaves below `v` (just `v` itself for a leaf).
    pub fn descendant_leaf_indices(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (v..self.subtree_end[v]).filter(|&w| self.is_leaf(w))
    }

    pub fn descendant_leaves(&self, z: &str) -> Result<Vec<&NodeId>> {
        let v = self.index_of(z)?;
        Ok(self.descendant_leaf_indices(v).map(|w| &self.ids[w]).collect())
    }

    /// Whether `ancestor` lies on the root path of `v` (inclusive).
    pub fn is_ancestor(&self, ancestor: usize, v: usize) -> bool {
        ancestor <= v && v < self.subtree_end[ancestor]
    }

    pub fn metrics(&self) -> TreeMetrics {
        let n = self.len();
        let mut height = vec![0; n];
        for v in (1..n).rev() {
            let p = self.parent[v].expect("non-root parent");
            height[p] = height[p].max(height[v] + 1);
        }
        let mut big_lambda = vec![1.0; n];
        for v in 1..n {
            let p = self.parent[v].expect("non-root parent");
            big_lambda[v] = big_lambda[p] * self.lambda(v).unwrap_or(1.0);
        }
        TreeMetrics { depth: self.depth.clone(), height, big_lambda }
    }

    /// Nests from the first level below the root down to `v` (or to the parent
    /// of `v` when it is a leaf). The root itself is omitted.
    pub fn path_from_root(&self, v: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.depth[v]);
        let mut cur = if self.is_leaf(v) { self.parent[v] } else { Some(v) };
        while let Some(c) = cur {
            if c == self.root() {
                break;
            }
            path.push(c);
            cur = self.parent[c];
        }
        path.reverse();
        path
    }
}

/// Per-node depth, height and cumulative λ product (Λ).
///
/// For a leaf, `big_lambda` is that of its parent nest. Root paths are
/// produced on demand by [`Arborescence::path_from_root`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMetrics {
    pub depth: Vec<usize>,
    pub height: Vec<usize>,
    pub big_lambda: Vec<f64>,
}
