use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Arena-stored binary tree node. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode<S> {
    Split { feature: usize, threshold: S, left: usize, right: usize },
    Leaf { value: S },
}

/// A decision tree whose leaves hold a class frequency or an additive score.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<S> {
    nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> Tree<S> {
    pub fn leaf(value: S) -> Self {
        Tree { nodes: vec![TreeNode::Leaf { value }] }
    }

    pub(crate) fn from_nodes(nodes: Vec<TreeNode<S>>) -> Self {
        Tree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode<S>] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode<S> {
        &self.nodes[0]
    }

    #[inline]
    pub fn predict(&self, x: &[S]) -> S {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<S>(nodes: &[TreeNode<S>], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    /// Preorder tokens: `S <feature> <threshold>` or `L <value>`.
    pub fn to_preorder(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => out.push(format!("L {value}")),
                TreeNode::Split { feature, threshold, left, right } => {
                    out.push(format!("S {feature} {threshold}"));
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        out
    }

    /// Inverse of [`Tree::to_preorder`]; node indices come out in preorder.
    pub fn from_preorder<T: AsRef<str>>(lines: &[T]) -> Result<Self> {
        fn bad(msg: impl Into<String>) -> Error {
            Error::parse(0, msg)
        }
        fn parse_node<S: Scalar, T: AsRef<str>>(
            lines: &[T],
            pos: &mut usize,
            nodes: &mut Vec<TreeNode<S>>,
            depth: usize,
        ) -> Result<usize> {
            if depth > 10_000 {
                return Err(bad("tree nesting too deep"));
            }
            let line = lines.get(*pos).ok_or_else(|| bad("truncated tree"))?.as_ref();
            *pos += 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let idx = nodes.len();
            match toks.as_slice() {
                ["L", v] => {
                    let value = v.parse::<S>().map_err(|_| bad(format!("bad leaf value {v:?}")))?;
                    nodes.push(TreeNode::Leaf { value });
                }
                ["S", f, t] => {
                    let feature = f.parse().map_err(|_| bad(format!("bad feature {f:?}")))?;
                    let threshold = t.parse::<S>().map_err(|_| bad(format!("bad threshold {t:?}")))?;
                    if !threshold.is_finite() {
                        return Err(bad("non-finite threshold"));
                    }
                    nodes.push(TreeNode::Split { feature, threshold, left: 0, right: 0 });
                    let l = parse_node(lines, pos, nodes, depth + 1)?;
                    let r = parse_node(lines, pos, nodes, depth + 1)?;
                    nodes[idx] = TreeNode::Split { feature, threshold, left: l, right: r };
                }
                _ => return Err(bad(format!("bad tree node {line:?}"))),
            }
            Ok(idx)
        }
        let mut nodes = Vec::new();
        let mut pos = 0;
        parse_node::<S, T>(lines, &mut pos, &mut nodes, 0)?;
        if pos != lines.len() {
            return Err(bad("trailing tree nodes"));
        }
        Ok(Tree { nodes })
    }
}
