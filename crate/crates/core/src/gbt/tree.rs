use serde::{Deserialize, Serialize};

/// Arena node. Samples with `x[feature] < threshold` go left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
    Leaf { weight: f64 },
}

/// Binary regression tree stored as an arena rooted at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "NestedNode", from = "NestedNode")]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf(weight: f64) -> Self {
        Self { nodes: vec![TreeNode::Leaf { weight }] }
    }

    pub fn stump(feature: usize, threshold: f64, gain: f64, left: f64, right: f64) -> Self {
        Self {
            nodes: vec![
                TreeNode::Split { feature, threshold, gain, left: 1, right: 2 },
                TreeNode::Leaf { weight: left },
                TreeNode::Leaf { weight: right },
            ],
        }
    }

    pub(crate) fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        debug_assert!(!nodes.is_empty());
        Self { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if x[feature] < threshold { left } else { right };
                }
                TreeNode::Leaf { weight } => return weight,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NestedNode {
    Split { feature: usize, threshold: f64, gain: f64, left: Box<NestedNode>, right: Box<NestedNode> },
    Leaf { weight: f64 },
}

impl From<DecisionTree> for NestedNode {
    fn from(tree: DecisionTree) -> Self {
        fn build(nodes: &[TreeNode], i: usize) -> NestedNode {
            match nodes[i] {
                TreeNode::Split { feature, threshold, gain, left, right } => NestedNode::Split {
                    feature,
                    threshold,
                    gain,
                    left: Box::new(build(nodes, left)),
                    right: Box::new(build(nodes, right)),
                },
                TreeNode::Leaf { weight } => NestedNode::Leaf { weight },
            }
        }
        build(&tree.nodes, 0)
    }
}

impl From<NestedNode> for DecisionTree {
    fn from(root: NestedNode) -> Self {
        fn push(node: NestedNode, nodes: &mut Vec<TreeNode>) -> usize {
            let at = nodes.len();
            match node {
                NestedNode::Leaf { weight } => nodes.push(TreeNode::Leaf { weight }),
                NestedNode::Split { feature, threshold, gain, left, right } => {
                    nodes.push(TreeNode::Leaf { weight: 0.0 });
                    let l = push(*left, nodes);
                    let r = push(*right, nodes);
                    nodes[at] = TreeNode::Split { feature, threshold, gain, left: l, right: r };
                }
            }
            at
        }
        let mut nodes = Vec::new();
        push(root, &mut nodes);
        DecisionTree { nodes }
    }
}
