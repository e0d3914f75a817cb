//! Response hierarchy: complete-linkage agglomerative clustering of the
//! response columns, the resulting overlapping groups and their weights,
//! and JSON import/export for user-supplied trees.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Internal,
    Leaf,
}

/// One group G_m: a set of response indices (0-based), the merge height it
/// was formed at, and its penalty weight w_m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub members: Vec<usize>,
    pub height: f64,
    pub kind: NodeKind,
    pub weight: f64,
}

/// A hierarchy over the D responses. Leaves are singletons covering
/// {0..D-1}; internal member sets are nested along root paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseTree {
    nodes: Vec<TreeNode>,
}

/// How group weights are assigned when deriving them from a tree.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// w_m = sqrt(|G_m|) for internal nodes, 1 for leaves.
    SqrtSize,
    /// All weights 1.
    Unit,
    /// Explicit weights, indexed by node id.
    Explicit(Vec<f64>),
}

impl ResponseTree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        let tree = ResponseTree { nodes };
        let d = tree.leaf_nodes().count();
        tree.validate(d)?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Internal)
    }

    pub fn leaf_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Leaf)
    }

    /// Number of responses covered by the leaves.
    pub fn n_responses(&self) -> usize {
        self.leaf_nodes().count()
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let mut covered = vec![false; d];
        for node in &self.nodes {
            if node.members.is_empty() {
                return Err(Error::invalid("tree node with empty member set"));
            }
            if node.weight <= 0.0 {
                return Err(Error::invalid("tree node weight must be positive"));
            }
            if node.members.iter().any(|&m| m >= d) {
                return Err(Error::invalid(format!(
                    "tree node references response >= D={d}"
                )));
            }
            match node.kind {
                NodeKind::Leaf => {
                    if node.members.len() != 1 {
                        return Err(Error::invalid("leaf nodes must be singletons"));
                    }
                    let m = node.members[0];
                    if covered[m] {
                        return Err(Error::invalid(format!("response {m} has two leaves")));
                    }
                    covered[m] = true;
                }
                NodeKind::Internal => {}
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::invalid("leaves do not cover all responses"));
        }
        // Nestedness: any two groups are disjoint or one contains the other.
        let sets: Vec<&Vec<usize>> = self.nodes.iter().map(|n| &n.members).collect();
        for (a, sa) in sets.iter().enumerate() {
            for sb in sets.iter().skip(a + 1) {
                let inter = sa.iter().filter(|m| sb.contains(m)).count();
                if inter != 0 && inter != sa.len().min(sb.len()) {
                    return Err(Error::invalid("tree groups are not nested"));
                }
            }
        }
        Ok(())
    }

    /// Replaces all weights per the given rule.
    pub fn with_weights(mut self, rule: &WeightRule) -> Result<Self> {
        for node in &mut self.nodes {
            node.weight = match rule {
                WeightRule::SqrtSize => match node.kind {
                    NodeKind::Internal => (node.members.len() as f64).sqrt(),
                    NodeKind::Leaf => 1.0,
                },
                WeightRule::Unit => 1.0,
                WeightRule::Explicit(w) => *w.get(node.id).ok_or_else(|| {
                    Error::invalid(format!("no explicit weight for node {}", node.id))
                })?,
            };
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&NestedNode::from_tree(self)?)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let nested: NestedNode = serde_json::from_str(json)?;
        let mut nodes = Vec::new();
        nested.collect(&mut nodes)?;
        nodes.sort_by_key(|n: &TreeNode| (matches!(n.kind, NodeKind::Internal), n.members.len(), n.members.clone()));
        for (i, n) in nodes.iter_mut().enumerate() {
            n.id = i;
        }
        ResponseTree::from_nodes(nodes)
    }
}

/// Nested JSON document for tree import/export: {members, height, weight,
/// children}. Members are 1-based in the file format.
#[derive(Debug, Serialize, Deserialize)]
struct NestedNode {
    members: Vec<usize>,
    height: f64,
    weight: f64,
    #[serde(default)]
    children: Vec<NestedNode>,
}

impl NestedNode {
    fn from_tree(tree: &ResponseTree) -> Result<NestedNode> {
        // Root: the node with the largest member set (or a synthetic root when
        // the tree's top group does not cover everything).
        let root = tree
            .nodes
            .iter()
            .max_by_key(|n| n.members.len())
            .ok_or_else(|| Error::invalid("empty tree"))?;
        Ok(Self::build(tree, root))
    }

    fn build(tree: &ResponseTree, node: &TreeNode) -> NestedNode {
        let children = tree
            .nodes
            .iter()
            .filter(|c| {
                c.id != node.id
                    && c.members.len() < node.members.len()
                    && c.members.iter().all(|m| node.members.contains(m))
            })
            // Direct children: not contained in any other strict descendant.
            .filter(|c| {
                !tree.nodes.iter().any(|o| {
                    o.id != c.id
                        && o.id != node.id
                        && o.members.len() < node.members.len()
                        && o.members.len() > c.members.len()
                        && c.members.iter().all(|m| o.members.contains(m))
                        && o.members.iter().all(|m| node.members.contains(m))
                })
            })
            .map(|c| Self::build(tree, c))
            .collect();
        NestedNode {
            members: node.members.iter().map(|m| m + 1).collect(),
            height: node.height,
            weight: node.weight,
            children,
        }
    }

    fn collect(&self, out: &mut Vec<TreeNode>) -> Result<()> {
        if self.members.iter().any(|&m| m == 0) {
            return Err(Error::invalid("tree JSON members are 1-based"));
        }
        let kind = if self.members.len() == 1 {
            NodeKind::Leaf
        } else {
            NodeKind::Internal
        };
        let mut members: Vec<usize> = self.members.iter().map(|m| m - 1).collect();
        members.sort_unstable();
        out.push(TreeNode {
            id: 0,
            members,
            height: self.height,
            weight: self.weight,
            kind,
        });
        // Singleton leaves may be implicit in the file.
        if kind == NodeKind::Internal && self.children.is_empty() {
            for &m in &self.members {
                out.push(TreeNode {
                    id: 0,
                    members: vec![m - 1],
                    height: 0.0,
                    weight: 1.0,
                    kind: NodeKind::Leaf,
                });
            }
        }
        for c in &self.children {
            c.collect(out)?;
        }
        Ok(())
    }
}

/// Complete-linkage agglomerative clustering of the columns of `cols`
/// under Euclidean distance. Ties are broken by the lexicographically
/// smallest pair of cluster indices, so the result is deterministic.
pub fn cluster_responses(cols: &Array2<f64>) -> Result<ResponseTree> {
    let d = cols.ncols();
    if d < 2 {
        return Err(Error::invalid("clustering requires D >= 2 columns"));
    }
    if cols.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("cluster input"));
    }

    // Pairwise Euclidean distances between columns.
    let mut dist = vec![vec![0.0f64; d]; d];
    for a in 0..d {
        for b in (a + 1)..d {
            let s: f64 = cols
                .column(a)
                .iter()
                .zip(cols.column(b).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            let e = s.sqrt();
            dist[a][b] = e;
            dist[b][a] = e;
        }
    }

    // Active clusters, each carrying its member set sorted ascending.
    let mut nodes: Vec<TreeNode> = (0..d)
        .map(|i| TreeNode {
            id: i,
            members: vec![i],
            height: 0.0,
            kind: NodeKind::Leaf,
            weight: 1.0,
        })
        .collect();
    // active[i] = index into `nodes` of the cluster currently labeled i.
    let mut active: Vec<usize> = (0..d).collect();
    let mut cluster_dist = dist;
    let mut alive: Vec<bool> = vec![true; d];
    let mut last_height = 0.0f64;

    for _ in 0..(d - 1) {
        // Closest live pair, lexicographic tie-break.
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for a in 0..d {
            if !alive[a] {
                continue;
            }
            for b in (a + 1)..d {
                if !alive[b] {
                    continue;
                }
                if cluster_dist[a][b] < best_d {
                    best_d = cluster_dist[a][b];
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        // Heights are nondecreasing root-ward under complete linkage.
        let height = best_d.max(last_height);
        last_height = height;

        let mut members = nodes[active[a]].members.clone();
        members.extend_from_slice(&nodes[active[b]].members);
        members.sort_unstable();
        let weight = (members.len() as f64).sqrt();
        nodes.push(TreeNode {
            id: nodes.len(),
            members,
            height,
            kind: NodeKind::Internal,
            weight,
        });
        // Complete linkage: distance to the merged cluster is the max.
        for c in 0..d {
            if alive[c] && c != a && c != b {
                let m = cluster_dist[a][c].max(cluster_dist[b][c]);
                cluster_dist[a][c] = m;
                cluster_dist[c][a] = m;
            }
        }
        alive[b] = false;
        active[a] = nodes.len() - 1;
    }

    ResponseTree::from_nodes(nodes)
}

/// One group per tree node under the given weight rule; leaves feed the
/// lambda2 term, internal nodes the lambda1 term.
pub fn derive_groups(tree: &ResponseTree, rule: &WeightRule) -> Result<ResponseTree> {
    tree.clone().with_weights(rule)
}
