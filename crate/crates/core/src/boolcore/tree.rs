use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::clause::{BitInput, Clause, Literal};
use crate::error::{parse_json, Error, Result};

/// A decision-tree node. `low` is taken when the split variable is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Leaf(bool),
    Split {
        var: usize,
        low: Box<Node>,
        high: Box<Node>,
    },
}

impl Node {
    pub fn split(var: usize, low: Node, high: Node) -> Self {
        Node::Split {
            var,
            low: Box::new(low),
            high: Box::new(high),
        }
    }

    fn size(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { low, high, .. } => 1 + low.size() + high.size(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }
}

/// A binary decision tree over `{0,1}^d` with no variable repeated along any
/// root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    d: usize,
    root: Node,
}

impl DecisionTree {
    pub fn new(d: usize, root: Node) -> Result<Self> {
        fn check(node: &Node, d: usize, used: &mut Vec<usize>) -> Result<()> {
            if let Node::Split { var, low, high } = node {
                if *var >= d {
                    return Err(Error::invalid(format!("split on x{var} with d = {d}")));
                }
                if used.contains(var) {
                    return Err(Error::invalid(format!("x{var} repeated along a path")));
                }
                used.push(*var);
                check(low, d, used)?;
                check(high, d, used)?;
                used.pop();
            }
            Ok(())
        }
        check(&root, d, &mut Vec::new())?;
        Ok(Self { d, root })
    }

    pub fn leaf(d: usize, label: bool) -> Self {
        Self {
            d,
            root: Node::Leaf(label),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Total node count, internal nodes and leaves alike.
    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn eval(&self, x: &BitInput) -> Result<bool> {
        if x.dim() != self.d {
            return Err(Error::invalid(format!(
                "input has dimension {}, tree expects {}",
                x.dim(),
                self.d
            )));
        }
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &BitInput) -> bool {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(label) => return *label,
                Node::Split { var, low, high } => {
                    node = if x.get(*var) { high } else { low };
                }
            }
        }
    }

    /// One clause per node: the conjunction of literals on the path from the
    /// root to that node. Always contains the empty clause.
    pub fn intermediate_computations(&self) -> BTreeSet<Clause> {
        let mut out = BTreeSet::new();
        self.walk(|clause, _| {
            out.insert(clause.clone());
        });
        out
    }

    /// The path clause and label of every leaf, in low-before-high order.
    pub fn leaf_clauses(&self) -> Vec<(Clause, bool)> {
        let mut out = Vec::new();
        self.walk(|clause, node| {
            if let Node::Leaf(label) = node {
                out.push((clause.clone(), *label));
            }
        });
        out
    }

    fn walk(&self, mut visit: impl FnMut(&Clause, &Node)) {
        fn go(node: &Node, clause: Clause, visit: &mut impl FnMut(&Clause, &Node)) {
            visit(&clause, node);
            if let Node::Split { var, low, high } = node {
                // variables never repeat on a path, so `with` cannot fail
                go(low, clause.with(Literal::neg(*var)).expect("valid tree"), visit);
                go(high, clause.with(Literal::pos(*var)).expect("valid tree"), visit);
            }
        }
        go(&self.root, Clause::empty(self.d), &mut visit);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json("decision tree", text)
    }
}

/// A full binary tree of exactly `depth` levels. Each split variable is drawn
/// uniformly from those unused on its root path, leaf labels are fair coins.
pub fn random_tree<R: Rng + ?Sized>(d: usize, depth: usize, rng: &mut R) -> Result<DecisionTree> {
    if depth > d {
        return Err(Error::invalid(format!("depth {depth} exceeds dimension {d}")));
    }
    fn grow<R: Rng + ?Sized>(d: usize, remaining: usize, used: &mut Vec<usize>, rng: &mut R) -> Node {
        if remaining == 0 {
            return Node::Leaf(rng.random_bool(0.5));
        }
        // pick the k-th unused variable
        let mut k = rng.random_range(0..d - used.len());
        let mut var = 0;
        loop {
            if !used.contains(&var) {
                if k == 0 {
                    break;
                }
                k -= 1;
            }
            var += 1;
        }
        used.push(var);
        let low = grow(d, remaining - 1, used, rng);
        let high = grow(d, remaining - 1, used, rng);
        used.pop();
        Node::split(var, low, high)
    }
    let root = grow(d, depth, &mut Vec::new(), rng);
    Ok(DecisionTree { d, root })
}

// JSON form: {"d": int, "root": node}, node = {"leaf": 0|1} or
// {"var": int, "low": node, "high": node}.

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Leaf { leaf: u8 },
    Split {
        var: usize,
        low: Box<NodeRepr>,
        high: Box<NodeRepr>,
    },
}

#[derive(Serialize, Deserialize)]
struct TreeRepr {
    d: usize,
    root: NodeRepr,
}

impl NodeRepr {
    fn from_node(node: &Node) -> Self {
        match node {
            Node::Leaf(label) => NodeRepr::Leaf { leaf: *label as u8 },
            Node::Split { var, low, high } => NodeRepr::Split {
                var: *var,
                low: Box::new(Self::from_node(low)),
                high: Box::new(Self::from_node(high)),
            },
        }
    }

    fn into_node(self) -> Result<Node> {
        match self {
            NodeRepr::Leaf { leaf: 0 } => Ok(Node::Leaf(false)),
            NodeRepr::Leaf { leaf: 1 } => Ok(Node::Leaf(true)),
            NodeRepr::Leaf { leaf } => Err(Error::invalid(format!("leaf label {leaf}"))),
            NodeRepr::Split { var, low, high } => {
                Ok(Node::split(var, low.into_node()?, high.into_node()?))
            }
        }
    }
}

impl Serialize for DecisionTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        TreeRepr {
            d: self.d,
            root: NodeRepr::from_node(&self.root),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DecisionTree {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = TreeRepr::deserialize(deserializer)?;
        let root = repr.root.into_node().map_err(serde::de::Error::custom)?;
        DecisionTree::new(repr.d, root).map_err(serde::de::Error::custom)
    }
}
