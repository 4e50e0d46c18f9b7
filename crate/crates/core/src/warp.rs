//! Deformation node graph and the two-level warp field.
//!
//! Level 1 carries one rigid transform per cluster of nodes, level 2 one rigid
//! transform per node. A surface point is deformed by blending the transforms
//! of its nearest nodes (level 2) or of the clusters those nodes belong to
//! (level 1), weighted by Gaussian skinning weights.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::mesh::TriangleMesh;
use crate::spatial::{HashGrid, PointGrid};

/// Cluster label of a node that has not been segmented yet.
pub const UNASSIGNED: u32 = u32::MAX;

/// Maximum number of skinning neighbors per point.
pub const MAX_K: usize = 8;

/// Neighbor count used for node-graph edges.
pub const GRAPH_NEIGHBORS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    /// Canonical position.
    pub x: Vec3,
    /// Influence radius.
    pub sigma: f64,
    pub cluster: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeGraph {
    pub nodes: Vec<Node>,
    /// Symmetric, sorted neighbor lists without self-edges.
    pub edges: Vec<Vec<usize>>,
    /// Incremented whenever nodes are inserted.
    pub generation: u64,
}

/// Deformation level: per-cluster or per-node transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Cluster,
    Node,
}

impl Level {
    pub fn number(self) -> u8 {
        match self {
            Level::Cluster => 1,
            Level::Node => 2,
        }
    }
}

/// Gaussian denominator of the skinning weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WeightKernel {
    /// `exp(-d^2 / (2 sigma)^2)`.
    #[default]
    Literal,
    /// `exp(-d^2 / (2 sigma^2))`.
    Conventional,
}

impl WeightKernel {
    #[inline]
    pub fn eval(self, d2: f64, sigma: f64) -> f64 {
        let denom = match self {
            WeightKernel::Literal => 4.0 * sigma * sigma,
            WeightKernel::Conventional => 2.0 * sigma * sigma,
        };
        (-d2 / denom).exp()
    }
}

impl NodeGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.nodes.iter().map(|n| n.x).collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.cluster).collect()
    }

    /// Largest influence radius, used as grid cell for neighbor queries.
    pub fn max_sigma(&self) -> f64 {
        self.nodes.iter().map(|n| n.sigma).fold(0.0, f64::max)
    }

    pub fn index(&self) -> PointGrid {
        let cell = self.max_sigma();
        PointGrid::new(&self.positions(), if cell > 0.0 { cell } else { 1.0 })
    }

    /// Rebuilds edges from the `GRAPH_NEIGHBORS` nearest nodes, symmetrized.
    pub fn rebuild_edges(&mut self) {
        let index = self.index();
        let mut edges = alloc::vec![Vec::new(); self.nodes.len()];
        let mut nn = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            index.knn_into(&node.x, GRAPH_NEIGHBORS + 1, &mut nn);
            for &(j, _) in nn.iter().filter(|(j, _)| *j != i).take(GRAPH_NEIGHBORS) {
                edges[i].push(j);
                edges[j].push(i);
            }
        }
        for e in &mut edges {
            e.sort_unstable();
            e.dedup();
        }
        self.edges = edges;
    }

    /// Edge list invariants: symmetric, no self-edges, every node connected
    /// unless the graph has a single node.
    pub fn edges_are_valid(&self) -> bool {
        if self.edges.len() != self.nodes.len() {
            return false;
        }
        self.edges.iter().enumerate().all(|(i, e)| {
            (self.nodes.len() == 1 || !e.is_empty())
                && e.iter().all(|&j| j != i && j < self.nodes.len() && self.edges[j].contains(&i))
        })
    }

    /// Number of connected components of the edge graph.
    pub fn component_count(&self) -> usize {
        let mut seen = alloc::vec![false; self.nodes.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.nodes.len() {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(i) = stack.pop() {
                for &j in &self.edges[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }
}

/// Greedy Poisson-disk node sampling over mesh vertices in index order.
///
/// A vertex becomes a node when no accepted node lies closer than `spacing`.
/// Every node gets `sigma = spacing` and edges to its nearest accepted nodes.
pub fn sample_nodes(mesh: &TriangleMesh, spacing: f64) -> Result<NodeGraph> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("node spacing must be positive"));
    }
    let mut grid = HashGrid::new(spacing);
    for v in &mesh.vertices {
        if !grid.any_closer_than(v, spacing) {
            grid.insert(*v);
        }
    }
    let mut graph = NodeGraph {
        nodes: grid
            .points()
            .iter()
            .map(|&x| Node {
                x,
                sigma: spacing,
                cluster: UNASSIGNED,
            })
            .collect(),
        edges: Vec::new(),
        generation: 0,
    };
    graph.rebuild_edges();
    Ok(graph)
}

/// Nearest nodes of a point with their normalized level-2 skinning weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeWeights {
    pub len: u8,
    pub nodes: [u32; MAX_K],
    pub weights: [f64; MAX_K],
}

impl Default for NodeWeights {
    fn default() -> Self {
        Self {
            len: 0,
            nodes: [0; MAX_K],
            weights: [0.0; MAX_K],
        }
    }
}

impl NodeWeights {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(|i| (self.nodes[i] as usize, self.weights[i]))
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Skinning weights of one point at either level.
#[derive(Clone, Debug, PartialEq)]
pub enum SkinWeights {
    /// `(cluster, weight)` sorted by cluster id.
    Clusters(Vec<(u32, f64)>),
    Nodes(NodeWeights),
}

impl SkinWeights {
    pub fn total(&self) -> f64 {
        match self {
            SkinWeights::Clusters(c) => c.iter().map(|e| e.1).sum(),
            SkinWeights::Nodes(n) => n.iter().map(|e| e.1).sum(),
        }
    }
}

/// Level-2 weights over the given neighbor nodes (normalized Gaussian influence).
///
/// Falls back to weight 1 on the nearest listed node when every Gaussian
/// underflows.
pub fn node_weights(v: &Vec3, graph: &NodeGraph, knn: &[usize], kernel: WeightKernel) -> NodeWeights {
    let mut out = NodeWeights::default();
    let mut total = 0.0;
    for &j in knn.iter().take(MAX_K) {
        let node = &graph.nodes[j];
        let lambda = kernel.eval((v - node.x).norm_squared(), node.sigma);
        out.nodes[out.len as usize] = j as u32;
        out.weights[out.len as usize] = lambda;
        out.len += 1;
        total += lambda;
    }
    if total > 0.0 && total.is_finite() {
        for w in &mut out.weights[..out.len as usize] {
            *w /= total;
        }
    } else if out.len > 0 {
        let nearest = (0..out.len as usize)
            .min_by(|&a, &b| {
                let da = (v - graph.nodes[out.nodes[a] as usize].x).norm_squared();
                let db = (v - graph.nodes[out.nodes[b] as usize].x).norm_squared();
                da.total_cmp(&db).then(out.nodes[a].cmp(&out.nodes[b]))
            })
            .unwrap_or(0);
        out.weights = [0.0; MAX_K];
        out.weights[nearest] = 1.0;
    }
    out
}

/// Aggregates level-2 weights by the cluster label of each node.
pub fn cluster_weights(weights: &NodeWeights, graph: &NodeGraph) -> Vec<(u32, f64)> {
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(weights.len as usize);
    for (j, w) in weights.iter() {
        let c = graph.nodes[j].cluster;
        match out.binary_search_by_key(&c, |e| e.0) {
            Ok(pos) => out[pos].1 += w,
            Err(pos) => out.insert(pos, (c, w)),
        }
    }
    out
}

/// Skinning weights of `v` with respect to its neighbor nodes `knn`.
pub fn skinning_weights(
    v: &Vec3,
    graph: &NodeGraph,
    knn: &[usize],
    level: Level,
    kernel: WeightKernel,
) -> Result<SkinWeights> {
    if knn.is_empty() {
        return Err(Error::InvalidArgument("empty neighbor list"));
    }
    let nw = node_weights(v, graph, knn, kernel);
    Ok(match level {
        Level::Node => SkinWeights::Nodes(nw),
        Level::Cluster => SkinWeights::Clusters(cluster_weights(&nw, graph)),
    })
}

/// Per-frame warp: one transform per cluster and one per node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WarpField {
    pub level1: Vec<RigidTransform>,
    pub level2: Vec<RigidTransform>,
    pub frame_index: usize,
}

impl WarpField {
    pub fn identity(clusters: usize, nodes: usize) -> Self {
        Self {
            level1: alloc::vec![RigidTransform::identity(); clusters],
            level2: alloc::vec![RigidTransform::identity(); nodes],
            frame_index: 0,
        }
    }

    pub fn transforms(&self, level: Level) -> &[RigidTransform] {
        match level {
            Level::Cluster => &self.level1,
            Level::Node => &self.level2,
        }
    }

    pub fn transforms_mut(&mut self, level: Level) -> &mut Vec<RigidTransform> {
        match level {
            Level::Cluster => &mut self.level1,
            Level::Node => &mut self.level2,
        }
    }

    /// Seeds every node transform with its cluster's transform.
    pub fn seed_nodes_from_clusters(&mut self, graph: &NodeGraph) {
        for (t, node) in self.level2.iter_mut().zip(&graph.nodes) {
            if let Some(c) = self.level1.get(node.cluster as usize) {
                *t = *c;
            }
        }
    }

    /// Level-2 live position of every node (`y = T_j x_j`).
    pub fn node_positions(&self, graph: &NodeGraph) -> Vec<Vec3> {
        graph
            .nodes
            .iter()
            .zip(&self.level2)
            .map(|(n, t)| t.apply(&n.x))
            .collect()
    }
}

/// Blended warp `sum_j w_j (R_j v + t_j)` at the level the weights belong to.
pub fn warp_vertex(v: &Vec3, weights: &SkinWeights, warp: &WarpField) -> Vec3 {
    match weights {
        SkinWeights::Nodes(nw) => warp_by_nodes(v, nw, &warp.level2),
        SkinWeights::Clusters(cw) => cw
            .iter()
            .map(|&(c, w)| warp.level1[c as usize].apply(v) * w)
            .sum(),
    }
}

/// Level-2 blend against an explicit transform list.
#[inline]
pub fn warp_by_nodes(v: &Vec3, weights: &NodeWeights, transforms: &[RigidTransform]) -> Vec3 {
    let mut out = Vec3::zeros();
    for (j, w) in weights.iter() {
        out += transforms[j].apply(v) * w;
    }
    out
}

/// Blended rotation applied to a normal, renormalized.
pub fn warp_normal(n: &Vec3, weights: &SkinWeights, warp: &WarpField) -> Vec3 {
    let blended: Vec3 = match weights {
        SkinWeights::Nodes(nw) => nw.iter().map(|(j, w)| warp.level2[j].rotate(n) * w).sum(),
        SkinWeights::Clusters(cw) => cw
            .iter()
            .map(|&(c, w)| warp.level1[c as usize].rotate(n) * w)
            .sum(),
    };
    let len = blended.norm();
    if len > 0.0 {
        blended / len
    } else {
        *n
    }
}

/// Nodes inserted by [`update_graph`], each with the pre-existing node it copied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphUpdate {
    pub inserted: Vec<usize>,
    pub parents: Vec<usize>,
}

/// Inserts nodes where the canonical mesh has grown away from the graph.
///
/// New nodes inherit the cluster label and level-2 transform of their nearest
/// pre-existing node; edges are rebuilt when anything was inserted.
pub fn update_graph(
    graph: &mut NodeGraph,
    warp: &mut WarpField,
    new_mesh: &TriangleMesh,
    spacing: f64,
) -> GraphUpdate {
    let mut update = GraphUpdate::default();
    if graph.is_empty() {
        return update;
    }
    let old = graph.index();
    let old_count = graph.len();
    let mut grid = HashGrid::new(spacing);
    for n in &graph.nodes {
        grid.insert(n.x);
    }
    for v in &new_mesh.vertices {
        if grid.any_closer_than(v, spacing) {
            continue;
        }
        grid.insert(*v);
        let parent = old.knn(v, 1)[0].0;
        let node = Node {
            x: *v,
            sigma: spacing,
            cluster: graph.nodes[parent].cluster,
        };
        update.inserted.push(graph.nodes.len());
        update.parents.push(parent);
        graph.nodes.push(node);
        let t = warp.level2.get(parent).copied().unwrap_or_default();
        warp.level2.push(t);
    }
    debug_assert_eq!(graph.len(), old_count + update.inserted.len());
    if !update.inserted.is_empty() {
        graph.generation += 1;
        graph.rebuild_edges();
    }
    update
}
