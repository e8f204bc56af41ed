use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;

/// A rooted tree before canonicalisation: end nodes carry modes, internal
/// nodes carry children.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    End(MultiIndex),
    Node(Vec<Shape>),
}

impl Shape {
    pub fn end<V: Into<MultiIndex>>(nu: V) -> Shape {
        Shape::End(nu.into())
    }

    /// Bracketed text: `e(1,0)` for an end node, `v[a,b]` for an internal
    /// node with children `a`, `b`.
    pub fn to_text(&self) -> String {
        match self {
            Shape::End(nu) => format!("e{nu}"),
            Shape::Node(children) => {
                let inner: Vec<String> = children.iter().map(Shape::to_text).collect();
                format!("v[{}]", inner.join(","))
            }
        }
    }

    /// Children sorted by their text, recursively.
    pub fn canonical(&self) -> Shape {
        match self {
            Shape::End(nu) => Shape::End(nu.clone()),
            Shape::Node(children) => {
                let mut kids: Vec<(String, Shape)> = children
                    .iter()
                    .map(|c| {
                        let c = c.canonical();
                        (c.to_text(), c)
                    })
                    .collect();
                kids.sort_by(|a, b| a.0.cmp(&b.0));
                Shape::Node(kids.into_iter().map(|(_, c)| c).collect())
            }
        }
    }

    pub fn parse(text: &str) -> Result<Shape> {
        let bytes: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let shape = parse_shape(&bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(Error::Parse(format!("trailing input at {pos} in {text:?}")));
        }
        Ok(shape)
    }
}

fn parse_shape(s: &[char], pos: &mut usize) -> Result<Shape> {
    let err = |msg: &str, at: usize| Error::Parse(format!("{msg} at {at}"));
    match s.get(*pos) {
        Some('e') => {
            *pos += 1;
            if s.get(*pos) != Some(&'(') {
                return Err(err("expected '('", *pos));
            }
            let start = *pos + 1;
            let end = s[start..]
                .iter()
                .position(|&c| c == ')')
                .map(|i| start + i)
                .ok_or_else(|| err("unclosed mode", start))?;
            let body: String = s[start..end].iter().collect();
            let comps = body
                .split(',')
                .map(|t| {
                    t.parse::<i32>()
                        .map_err(|_| err("bad mode component", start))
                })
                .collect::<Result<Vec<i32>>>()?;
            *pos = end + 1;
            Ok(Shape::End(MultiIndex::new(comps)))
        }
        Some('v') => {
            *pos += 1;
            if s.get(*pos) != Some(&'[') {
                return Err(err("expected '['", *pos));
            }
            *pos += 1;
            let mut children = Vec::new();
            loop {
                children.push(parse_shape(s, pos)?);
                match s.get(*pos) {
                    Some(',') => *pos += 1,
                    Some(']') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(err("expected ',' or ']'", *pos)),
                }
            }
            Ok(Shape::Node(children))
        }
        _ => Err(err("expected 'e' or 'v'", *pos)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// `None` for the top node, whose line is the root line.
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Mode label of an end node.
    pub mode: Option<MultiIndex>,
    /// Momentum of the line leaving this node.
    pub momentum: MultiIndex,
    /// Number of distinct orderings of the children, s!/Π m_i!.
    pub sigma: u64,
}

impl TreeNode {
    pub fn is_end(&self) -> bool {
        self.mode.is_some()
    }

    pub fn branching(&self) -> usize {
        self.children.len()
    }
}

/// A canonical tree. Nodes are stored in preorder; node 0 is the top node and
/// each line ℓ_v is identified with the node v it leaves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    scales: Option<Vec<usize>>,
}

impl Tree {
    /// Builds the canonical tree for `shape`. Every line momentum must be nonzero.
    pub fn from_shape(shape: &Shape) -> Result<Tree> {
        let shape = shape.canonical();
        let mut nodes = Vec::new();
        build(&shape, None, &mut nodes)?;
        let dim = nodes[0].momentum.dim();
        for node in &nodes {
            if node.momentum.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: node.momentum.dim(),
                });
            }
            if node.momentum.is_zero() {
                return Err(Error::Precondition(format!(
                    "zero line momentum in {}",
                    shape.to_text()
                )));
            }
        }
        Ok(Tree {
            nodes,
            scales: None,
        })
    }

    pub fn parse(text: &str) -> Result<Tree> {
        Tree::from_shape(&Shape::parse(text)?)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &TreeNode {
        &self.nodes[v]
    }

    /// Number of nodes, the order of the tree.
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].momentum.dim()
    }

    pub fn root_momentum(&self) -> &MultiIndex {
        &self.nodes[0].momentum
    }

    pub fn end_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].is_end())
    }

    /// M(θ) = Σ_{v ∈ E(θ)} |ν_v|.
    pub fn mode_mass(&self) -> u64 {
        self.nodes
            .iter()
            .filter_map(|n| n.mode.as_ref())
            .map(MultiIndex::l1)
            .sum()
    }

    pub fn scales(&self) -> Option<&[usize]> {
        self.scales.as_deref()
    }

    pub fn with_scales(mut self, scales: Vec<usize>) -> Result<Tree> {
        if scales.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                left: self.nodes.len(),
                right: scales.len(),
            });
        }
        self.scales = Some(scales);
        Ok(self)
    }

    pub fn to_shape(&self) -> Shape {
        self.shape_at(0)
    }

    fn shape_at(&self, v: usize) -> Shape {
        let node = &self.nodes[v];
        match &node.mode {
            Some(nu) => Shape::End(nu.clone()),
            None => Shape::Node(node.children.iter().map(|&w| self.shape_at(w)).collect()),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_shape().to_text()
    }

    /// The tree with every end-node mode negated.
    pub fn conjugate(&self) -> Tree {
        fn flip(s: &Shape) -> Shape {
            match s {
                Shape::End(nu) => Shape::End(-nu),
                Shape::Node(c) => Shape::Node(c.iter().map(flip).collect()),
            }
        }
        Tree::from_shape(&flip(&self.to_shape())).expect("negation keeps momenta nonzero")
    }

    /// True when an internal node has exactly one entering line.
    pub fn has_unary_node(&self) -> bool {
        self.nodes.iter().any(|n| !n.is_end() && n.branching() == 1)
    }
}

fn build(shape: &Shape, parent: Option<usize>, nodes: &mut Vec<TreeNode>) -> Result<usize> {
    let v = nodes.len();
    match shape {
        Shape::End(nu) => {
            if nu.is_zero() {
                return Err(Error::ZeroIndex);
            }
            nodes.push(TreeNode {
                parent,
                children: Vec::new(),
                mode: Some(nu.clone()),
                momentum: nu.clone(),
                sigma: 1,
            });
        }
        Shape::Node(children) => {
            if children.is_empty() {
                return Err(Error::Precondition("internal node without children".into()));
            }
            nodes.push(TreeNode {
                parent,
                children: Vec::new(),
                mode: None,
                momentum: MultiIndex::new(Vec::new()),
                sigma: orderings(children),
            });
            let mut momentum: Option<MultiIndex> = None;
            for child in children {
                let w = build(child, Some(v), nodes)?;
                nodes[v].children.push(w);
                let m = &nodes[w].momentum;
                momentum = Some(match momentum {
                    None => m.clone(),
                    Some(acc) => {
                        if acc.dim() != m.dim() {
                            return Err(Error::DimensionMismatch {
                                left: acc.dim(),
                                right: m.dim(),
                            });
                        }
                        &acc + m
                    }
                });
            }
            nodes[v].momentum = momentum.expect("children nonempty");
        }
    }
    Ok(v)
}

/// s!/Π m_i! for canonically sorted children, m_i the multiplicities of equal subtrees.
fn orderings(children: &[Shape]) -> u64 {
    let fact = |n: usize| (1..=n as u64).product::<u64>();
    let mut denom = 1;
    let mut run = 1;
    for w in children.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            denom *= fact(run);
            run = 1;
        }
    }
    denom *= fact(run);
    fact(children.len()) / denom
}
