//! Motion-based clustering of the node graph.
//!
//! A cluster is scored by the residual of the best rigid transform taking its
//! canonical node positions `x` to their live positions `y`. That residual has
//! the closed form `E* = E1 - 2 (s1 + s2 + d s3)` over the singular values of
//! the cross-covariance, so merging or moving nodes between clusters only needs
//! constant-time updates of centroids, cross-covariance and scatter.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{Error, Result};
use crate::math::{procrustes, svd3, Mat3, RigidTransform, Vec3};
use crate::warp::NodeGraph;

/// Sufficient statistics of one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterStats {
    pub n: usize,
    /// Canonical centroid.
    pub c: Vec3,
    /// Live centroid.
    pub c_t: Vec3,
    /// Cross-covariance `sum (x - c)(y - c_t)^T`.
    pub a: Mat3,
    /// Scatter `sum |x - c|^2 + |y - c_t|^2`.
    pub e1: f64,
    /// Minimal rigid-fit residual.
    pub e_star: f64,
}

impl ClusterStats {
    pub fn singleton(x: Vec3, y: Vec3) -> Self {
        Self {
            n: 1,
            c: x,
            c_t: y,
            a: Mat3::zeros(),
            e1: 0.0,
            e_star: 0.0,
        }
    }

    fn finish(mut self) -> Self {
        self.e_star = self.e1 - 2.0 * svd3(&self.a).rotation_trace();
        self
    }
}

/// Statistics of a cluster computed directly from its members.
pub fn cluster_stats(x: &[Vec3], y: &[Vec3]) -> Result<ClusterStats> {
    if x.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len();
    let c = x.iter().sum::<Vec3>() / n as f64;
    let c_t = y.iter().sum::<Vec3>() / n as f64;
    let mut a = Mat3::zeros();
    let mut e1 = 0.0;
    for (p, q) in x.iter().zip(y) {
        let (dp, dq) = (p - c, q - c_t);
        a += dp * dq.transpose();
        e1 += dp.norm_squared() + dq.norm_squared();
    }
    Ok(ClusterStats {
        n,
        c,
        c_t,
        a,
        e1,
        e_star: 0.0,
    }
    .finish())
}

/// Constant-time union of two disjoint clusters.
pub fn merge_stats(a: &ClusterStats, b: &ClusterStats) -> ClusterStats {
    let n = a.n + b.n;
    let (na, nb) = (a.n as f64, b.n as f64);
    let c = (a.c * na + b.c * nb) / n as f64;
    let c_t = (a.c_t * na + b.c_t * nb) / n as f64;
    let (da, db) = (a.c - c, b.c - c);
    let (da_t, db_t) = (a.c_t - c_t, b.c_t - c_t);
    ClusterStats {
        n,
        c,
        c_t,
        a: a.a + b.a + da * da_t.transpose() * na + db * db_t.transpose() * nb,
        e1: a.e1
            + b.e1
            + na * (da.norm_squared() + da_t.norm_squared())
            + nb * (db.norm_squared() + db_t.norm_squared()),
        e_star: 0.0,
    }
    .finish()
}

/// Merging cost `E*(a + b) - E*(a) - E*(b)` and the merged statistics.
pub fn merge_cost(a: &ClusterStats, b: &ClusterStats) -> (f64, ClusterStats) {
    let merged = merge_stats(a, b);
    (merged.e_star - a.e_star - b.e_star, merged)
}

/// Constant-time removal of the single node `(x, y)` from `from` (which must
/// hold at least two nodes).
pub fn remove_node(from: &ClusterStats, x: Vec3, y: Vec3) -> Result<ClusterStats> {
    if from.n < 2 {
        return Err(Error::CannotEmptyCluster);
    }
    let n = from.n - 1;
    let nf = n as f64;
    let c = (from.c * from.n as f64 - x) / nf;
    let c_t = (from.c_t * from.n as f64 - y) / nf;
    if n == 1 {
        // Exact, rather than the roundoff left by subtracting.
        return Ok(ClusterStats::singleton(c, c_t));
    }
    // Inverse of merging the remainder with the singleton.
    let (dr, dr_t) = (c - from.c, c_t - from.c_t);
    let (ds, ds_t) = (x - from.c, y - from.c_t);
    Ok(ClusterStats {
        n,
        c,
        c_t,
        a: from.a - dr * dr_t.transpose() * nf - ds * ds_t.transpose(),
        e1: from.e1 - nf * (dr.norm_squared() + dr_t.norm_squared()) - ds.norm_squared() - ds_t.norm_squared(),
        e_star: 0.0,
    }
    .finish())
}

/// Cost of moving node `(x, y)` from `from` to `to`, with both updated clusters.
pub fn swap_cost(
    x: Vec3,
    y: Vec3,
    from: &ClusterStats,
    to: &ClusterStats,
) -> Result<(f64, ClusterStats, ClusterStats)> {
    let from_new = remove_node(from, x, y)?;
    let to_new = merge_stats(to, &ClusterStats::singleton(x, y));
    let delta = from_new.e_star + to_new.e_star - from.e_star - to.e_star;
    Ok((delta, from_new, to_new))
}

/// A partition of the nodes with per-cluster statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Cluster index of every node, in `0..m`.
    pub labels: Vec<u32>,
    pub stats: Vec<ClusterStats>,
    pub total_energy: f64,
}

impl Clustering {
    pub fn m(&self) -> usize {
        self.stats.len()
    }

    /// Builds a clustering from arbitrary labels, compacting them to `0..m`
    /// in order of first appearance by node index.
    pub fn from_labels(labels: &[u32], x: &[Vec3], y: &[Vec3]) -> Result<Self> {
        if labels.len() != x.len() || x.len() != y.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                actual: labels.len().min(y.len()),
            });
        }
        let mut remap = alloc::collections::BTreeMap::new();
        let compact: Vec<u32> = labels
            .iter()
            .map(|&l| {
                let next = remap.len() as u32;
                *remap.entry(l).or_insert(next)
            })
            .collect();
        let m = remap.len();
        let mut members = alloc::vec![(Vec::new(), Vec::new()); m];
        for (i, &l) in compact.iter().enumerate() {
            members[l as usize].0.push(x[i]);
            members[l as usize].1.push(y[i]);
        }
        let stats = members
            .iter()
            .map(|(xs, ys)| cluster_stats(xs, ys))
            .collect::<Result<Vec<_>>>()?;
        let total_energy = stats.iter().map(|s| s.e_star).sum();
        Ok(Self {
            labels: compact,
            stats,
            total_energy,
        })
    }

    pub fn recompute_total(&mut self) {
        self.total_energy = self.stats.iter().map(|s| s.e_star).sum();
    }

    /// Node indices of every cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.m()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }

    /// Optimal rigid transform of every cluster from canonical to live.
    pub fn transforms(&self, x: &[Vec3], y: &[Vec3]) -> Result<Vec<RigidTransform>> {
        self.members()
            .iter()
            .map(|ids| {
                let xs: Vec<Vec3> = ids.iter().map(|&i| x[i]).collect();
                let ys: Vec<Vec3> = ids.iter().map(|&i| y[i]).collect();
                procrustes(&xs, &ys).map(|r| r.0)
            })
            .collect()
    }
}

/// Stopping rule of greedy merging.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MergeStop {
    TargetM(usize),
    /// Stop when the cheapest merge costs more than this (meters squared).
    Threshold(f64),
}

#[derive(Clone, Copy, Debug)]
struct HeapEntry {
    cost: f64,
    a: usize,
    b: usize,
    va: u32,
    vb: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Agglomerative clustering from singletons, always merging the cheapest pair
/// of adjacent clusters.
///
/// If `TargetM` asks for fewer clusters than the graph has connected
/// components, merging stops at the component count.
pub fn greedy_merge(graph: &NodeGraph, live: &[Vec3], stop: MergeStop) -> Result<Clustering> {
    let nodes: Vec<usize> = (0..graph.len()).collect();
    greedy_merge_subset(graph, live, &nodes, stop)
}

/// [`greedy_merge`] restricted to `subset` (edges leaving it are ignored).
/// Labels of the result index `subset`.
fn greedy_merge_subset(
    graph: &NodeGraph,
    live: &[Vec3],
    subset: &[usize],
    stop: MergeStop,
) -> Result<Clustering> {
    if live.len() != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            actual: live.len(),
        });
    }
    let n = subset.len();
    let mut local = alloc::vec![usize::MAX; graph.len()];
    for (k, &i) in subset.iter().enumerate() {
        local[i] = k;
    }
    let mut stats: Vec<Option<ClusterStats>> = subset
        .iter()
        .map(|&i| Some(ClusterStats::singleton(graph.nodes[i].x, live[i])))
        .collect();
    let mut version = alloc::vec![0u32; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|k| alloc::vec![k]).collect();
    let mut adjacency: Vec<BTreeSet<usize>> = subset
        .iter()
        .map(|&i| {
            graph.edges[i]
                .iter()
                .filter_map(|&j| (local[j] != usize::MAX).then_some(local[j]))
                .collect()
        })
        .collect();
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Reverse<HeapEntry>>,
                stats: &[Option<ClusterStats>],
                version: &[u32],
                a: usize,
                b: usize| {
        let (a, b) = (a.min(b), a.max(b));
        if let (Some(sa), Some(sb)) = (&stats[a], &stats[b]) {
            heap.push(Reverse(HeapEntry {
                cost: merge_cost(sa, sb).0,
                a,
                b,
                va: version[a],
                vb: version[b],
            }));
        }
    };
    for a in 0..n {
        for &b in &adjacency[a] {
            if a < b {
                push(&mut heap, &stats, &version, a, b);
            }
        }
    }
    let mut m = n;
    while let Some(Reverse(e)) = heap.pop() {
        if let MergeStop::TargetM(t) = stop {
            if m <= t.max(1) {
                break;
            }
        }
        if version[e.a] != e.va || version[e.b] != e.vb || stats[e.a].is_none() || stats[e.b].is_none() {
            continue;
        }
        if let MergeStop::Threshold(th) = stop {
            if e.cost > th {
                break;
            }
        }
        let (sa, sb) = (stats[e.a].unwrap(), stats[e.b].unwrap());
        stats[e.a] = Some(merge_stats(&sa, &sb));
        stats[e.b] = None;
        version[e.a] += 1;
        version[e.b] += 1;
        let moved = core::mem::take(&mut members[e.b]);
        members[e.a].extend(moved);
        let nb = core::mem::take(&mut adjacency[e.b]);
        for &k in &nb {
            adjacency[k].remove(&e.b);
            if k != e.a {
                adjacency[k].insert(e.a);
                adjacency[e.a].insert(k);
            }
        }
        adjacency[e.a].remove(&e.b);
        adjacency[e.a].remove(&e.a);
        m -= 1;
        let neighbors: Vec<usize> = adjacency[e.a].iter().copied().collect();
        for k in neighbors {
            push(&mut heap, &stats, &version, e.a, k);
        }
    }
    // Survivors keep the lowest member index as id; compact in that order.
    let mut labels = alloc::vec![0u32; n];
    let mut out_stats = Vec::with_capacity(m);
    for (id, s) in stats.iter().enumerate() {
        if let Some(s) = s {
            for &k in &members[id] {
                labels[k] = out_stats.len() as u32;
            }
            out_stats.push(*s);
        }
    }
    let total_energy = out_stats.iter().map(|s| s.e_star).sum();
    Ok(Clustering {
        labels,
        stats: out_stats,
        total_energy,
    })
}

/// True if the members of `cluster` adjacent to `node` stay connected inside
/// the cluster once `node` leaves it.
fn stays_connected(graph: &NodeGraph, labels: &[u32], node: usize) -> bool {
    let cluster = labels[node];
    let targets: Vec<usize> = graph.edges[node]
        .iter()
        .copied()
        .filter(|&j| labels[j] == cluster)
        .collect();
    if targets.len() <= 1 {
        return true;
    }
    let mut seen = BTreeSet::new();
    seen.insert(node);
    seen.insert(targets[0]);
    let mut stack = alloc::vec![targets[0]];
    let mut found = 1;
    while let Some(i) = stack.pop() {
        for &j in &graph.edges[i] {
            if labels[j] == cluster && seen.insert(j) {
                if targets.contains(&j) {
                    found += 1;
                    if found == targets.len() {
                        return true;
                    }
                }
                stack.push(j);
            }
        }
    }
    false
}

/// Default cap on swap passes per frame.
pub const DEFAULT_MAX_PASSES: usize = 10;

/// Moves boundary nodes to the neighboring cluster that lowers the total
/// energy most. Returns the number of swaps applied.
pub fn optimize_swaps(
    clustering: &mut Clustering,
    graph: &NodeGraph,
    live: &[Vec3],
    max_passes: usize,
) -> Result<usize> {
    if live.len() != graph.len() || clustering.labels.len() != graph.len() {
        return Err(Error::LengthMismatch {
            expected: graph.len(),
            actual: live.len().min(clustering.labels.len()),
        });
    }
    let mut swaps = 0;
    let mut candidates = Vec::new();
    for _ in 0..max_passes {
        let mut changed = false;
        for l in 0..graph.len() {
            let i = clustering.labels[l] as usize;
            candidates.clear();
            candidates.extend(
                graph.edges[l]
                    .iter()
                    .map(|&j| clustering.labels[j] as usize)
                    .filter(|&c| c != i),
            );
            if candidates.is_empty() || clustering.stats[i].n < 2 {
                continue;
            }
            candidates.sort_unstable();
            candidates.dedup();
            let (x, y) = (graph.nodes[l].x, live[l]);
            let mut best: Option<(f64, usize, ClusterStats, ClusterStats)> = None;
            for &j in &candidates {
                let (delta, si, sj) = swap_cost(x, y, &clustering.stats[i], &clustering.stats[j])?;
                if best.as_ref().is_none_or(|b| delta < b.0) {
                    best = Some((delta, j, si, sj));
                }
            }
            let Some((delta, j, si, sj)) = best else { continue };
            if delta >= -1e-12 || !stays_connected(graph, &clustering.labels, l) {
                continue;
            }
            clustering.stats[i] = si;
            clustering.stats[j] = sj;
            clustering.labels[l] = j as u32;
            swaps += 1;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    clustering.recompute_total();
    Ok(swaps)
}

/// Splits every cluster whose mean residual per node exceeds `tau_break` into
/// two by re-merging its nodes. Returns the number of clusters split.
pub fn dynamic_cluster_update(
    clustering: &mut Clustering,
    graph: &NodeGraph,
    live: &[Vec3],
    tau_break: f64,
) -> Result<usize> {
    let members = clustering.members();
    let mut labels = clustering.labels.clone();
    let mut next = clustering.m() as u32;
    let mut splits = 0;
    for (id, ids) in members.iter().enumerate() {
        let s = &clustering.stats[id];
        if ids.len() < 2 || !(s.e_star / s.n as f64 > tau_break) {
            continue;
        }
        let sub = greedy_merge_subset(graph, live, ids, MergeStop::TargetM(2))?;
        if sub.m() < 2 {
            continue;
        }
        for (k, &node) in ids.iter().enumerate() {
            let part = sub.labels[k];
            if part > 0 {
                labels[node] = next + part - 1;
            }
        }
        next += sub.m() as u32 - 1;
        splits += 1;
    }
    if splits > 0 {
        let x = graph.positions();
        *clustering = Clustering::from_labels(&labels, &x, live)?;
    }
    Ok(splits)
}

/// Cluster-count control for [`segment_frame`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentationPolicy {
    pub stop: MergeStop,
    /// Per-node mean residual above which a cluster is split (meters squared).
    pub tau_break: f64,
    pub max_passes: usize,
}

impl SegmentationPolicy {
    /// Threshold-driven policy scaled to the voxel size.
    pub fn for_voxel(voxel_size: f64) -> Self {
        let t = (2.0 * voxel_size) * (2.0 * voxel_size);
        Self {
            stop: MergeStop::Threshold(t),
            tau_break: t,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

impl Default for SegmentationPolicy {
    fn default() -> Self {
        Self::for_voxel(crate::tsdf::DEFAULT_VOXEL_SIZE)
    }
}

/// Result of one segmentation step.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentOutcome {
    pub clustering: Clustering,
    pub swaps: usize,
    pub splits: usize,
}

/// Segments the current frame.
///
/// Without a previous result the graph is merged from scratch. Otherwise the
/// previous labels are carried over (nodes added since take the label stored
/// on the graph), statistics are rebuilt for the current live positions, high
/// error clusters are split and boundaries refined by swapping.
pub fn segment_frame(
    prev: Option<&Clustering>,
    graph: &NodeGraph,
    live: &[Vec3],
    policy: &SegmentationPolicy,
) -> Result<SegmentOutcome> {
    let x = graph.positions();
    match prev {
        None => {
            let mut clustering = greedy_merge(graph, live, policy.stop)?;
            let swaps = optimize_swaps(&mut clustering, graph, live, policy.max_passes)?;
            Ok(SegmentOutcome {
                clustering,
                swaps,
                splits: 0,
            })
        }
        Some(prev) => {
            let labels: Vec<u32> = (0..graph.len())
                .map(|i| prev.labels.get(i).copied().unwrap_or(graph.nodes[i].cluster))
                .collect();
            let mut clustering = Clustering::from_labels(&labels, &x, live)?;
            let splits = match policy.stop {
                MergeStop::Threshold(_) => {
                    dynamic_cluster_update(&mut clustering, graph, live, policy.tau_break)?
                }
                MergeStop::TargetM(_) => 0,
            };
            let swaps = optimize_swaps(&mut clustering, graph, live, policy.max_passes)?;
            Ok(SegmentOutcome {
                clustering,
                swaps,
                splits,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{twist_exp, Twist};
    use crate::warp::{Node, UNASSIGNED};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_motion(rng: &mut ChaCha8Rng) -> RigidTransform {
        let mut c = |s: f64| rng.random_range(-s..s);
        twist_exp(&Twist::new(Vec3::new(c(1.0), c(1.0), c(1.0)), Vec3::new(c(0.5), c(0.5), c(0.5))))
    }

    fn rel_close(a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= 1e-9 * scale.max(a.abs()).max(b.abs()).max(1e-12)
    }

    fn stats_close(a: &ClusterStats, b: &ClusterStats, scale: f64) -> bool {
        a.n == b.n
            && (a.c - b.c).norm() <= 1e-9 * scale.max(1.0)
            && (a.c_t - b.c_t).norm() <= 1e-9 * scale.max(1.0)
            && (a.a - b.a).norm() <= 1e-9 * scale.max(a.a.norm())
            && rel_close(a.e1, b.e1, scale)
            && rel_close(a.e_star, b.e_star, scale)
    }

    /// Chain graph: two straight rods meeting at a hinge.
    fn two_body(n: usize, bend: f64) -> (NodeGraph, Vec<Vec3>, Vec<u32>) {
        let mut nodes = Vec::new();
        for i in 0..2 * n {
            let x = Vec3::new(i as f64 * 0.02, (i % 2) as f64 * 0.01, (i % 3) as f64 * 0.01);
            nodes.push(Node {
                x,
                sigma: 0.02,
                cluster: UNASSIGNED,
            });
        }
        let mut g = NodeGraph {
            nodes,
            ..Default::default()
        };
        g.rebuild_edges();
        let pivot = Vec3::new(n as f64 * 0.02 - 0.01, 0.0, 0.0);
        let r = RigidTransform::about_axis(&pivot, &Vec3::z(), bend);
        let live = g
            .nodes
            .iter()
            .enumerate()
            .map(|(i, nd)| if i < n { nd.x } else { r.apply(&nd.x) })
            .collect();
        let truth = (0..2 * n).map(|i| (i >= n) as u32).collect();
        (g, live, truth)
    }

    #[test]
    fn singleton_and_translation() {
        let s = cluster_stats(&[Vec3::new(1.0, 2.0, 3.0)], &[Vec3::new(4.0, 5.0, 6.0)]).unwrap();
        assert_eq!(s.c, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(s.a, Mat3::zeros());
        assert_eq!(s.e_star, 0.0);
        let x: Vec<Vec3> = (0..10).map(|i| Vec3::new(i as f64, (i * i) as f64 * 0.1, 1.0)).collect();
        let y: Vec<Vec3> = x.iter().map(|p| p + Vec3::new(0.3, -1.0, 2.0)).collect();
        assert!(cluster_stats(&x, &y).unwrap().e_star.abs() < 1e-9);
        assert_eq!(cluster_stats(&[], &[]).unwrap_err(), Error::EmptyCluster);
    }

    #[test]
    fn e_star_matches_explicit_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let n = rng.random_range(1..=50);
            let t = random_motion(&mut rng);
            let x: Vec<Vec3> = (0..n)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let y: Vec<Vec3> = x
                .iter()
                .map(|p| t.apply(p) + Vec3::new(rng.random(), rng.random(), rng.random()) * 0.02)
                .collect();
            let s = cluster_stats(&x, &y).unwrap();
            let (r, _) = procrustes(&x, &y).unwrap();
            let explicit: f64 = x.iter().zip(&y).map(|(p, q)| (r.apply(p) - q).norm_squared()).sum();
            assert!(rel_close(s.e_star, explicit, s.e1 * 1e-3), "{} vs {explicit}", s.e_star);
            assert!(s.e_star >= -1e-9);
        }
    }

    #[test]
    fn merge_and_swap_match_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x: Vec<Vec3> = (0..60).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let t = random_motion(&mut rng);
        let y: Vec<Vec3> = x
            .iter()
            .map(|p| t.apply(p) + Vec3::new(rng.random(), rng.random(), rng.random()) * 0.1)
            .collect();
        let stats_of = |ids: &[usize]| {
            let xs: Vec<Vec3> = ids.iter().map(|&i| x[i]).collect();
            let ys: Vec<Vec3> = ids.iter().map(|&i| y[i]).collect();
            cluster_stats(&xs, &ys).unwrap()
        };
        for _ in 0..500 {
            let mut ids: Vec<usize> = (0..60).collect();
            for i in (1..ids.len()).rev() {
                ids.swap(i, rng.random_range(0..=i));
            }
            let cut = rng.random_range(1..59);
            let end = rng.random_range(cut + 1..=60);
            let (a, b) = (&ids[..cut], &ids[cut..end]);
            let (sa, sb) = (stats_of(a), stats_of(b));
            let (delta, merged) = merge_cost(&sa, &sb);
            let union: Vec<usize> = ids[..end].to_vec();
            let direct = stats_of(&union);
            assert!(stats_close(&merged, &direct, direct.e1));
            assert!(rel_close(delta, direct.e_star - sa.e_star - sb.e_star, direct.e1));
            if a.len() >= 2 {
                let l = a[0];
                let (d, si, sj) = swap_cost(x[l], y[l], &sa, &sb).unwrap();
                let si_direct = stats_of(&a[1..]);
                let mut bj = b.to_vec();
                bj.push(l);
                let sj_direct = stats_of(&bj);
                assert!(stats_close(&si, &si_direct, sa.e1));
                assert!(stats_close(&sj, &sj_direct, sj_direct.e1));
                let want = si_direct.e_star + sj_direct.e_star - sa.e_star - sb.e_star;
                assert!(rel_close(d, want, sa.e1 + sj_direct.e1));
                // Swapping back restores the originals.
                let (_, bi, bj2) = swap_cost(x[l], y[l], &sj, &si).unwrap();
                let scale = sa.e1 + sb.e1 + 1.0;
                assert!(stats_close(&bi, &sb, scale));
                assert!(stats_close(&bj2, &sa, scale));
            }
        }
    }

    #[test]
    fn shared_motion_and_pair_merges_are_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let t = random_motion(&mut rng);
        let x: Vec<Vec3> = (0..20).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
        let y: Vec<Vec3> = x.iter().map(|p| t.apply(p)).collect();
        let sa = cluster_stats(&x[..8], &y[..8]).unwrap();
        let sb = cluster_stats(&x[8..], &y[8..]).unwrap();
        assert!(merge_cost(&sa, &sb).0.abs() < 1e-9);
        let p = ClusterStats::singleton(x[0], Vec3::new(5.0, 0.0, 0.0));
        let q = ClusterStats::singleton(x[1], Vec3::new(5.0, (x[0] - x[1]).norm(), 0.0));
        let (d, merged) = merge_cost(&p, &q);
        assert!(d.abs() < 1e-12 && merged.e_star.abs() < 1e-12);
    }

    #[test]
    fn swap_rejects_emptying() {
        let s = ClusterStats::singleton(Vec3::zeros(), Vec3::zeros());
        assert_eq!(
            swap_cost(Vec3::zeros(), Vec3::zeros(), &s, &s).unwrap_err(),
            Error::CannotEmptyCluster
        );
    }

    #[test]
    fn greedy_merge_rigid_and_no_merge() {
        let (g, _, _) = two_body(10, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let t = random_motion(&mut rng);
        let live: Vec<Vec3> = g.nodes.iter().map(|n| t.apply(&n.x)).collect();
        let c = greedy_merge(&g, &live, MergeStop::TargetM(1)).unwrap();
        assert_eq!(c.m(), 1);
        assert!(c.total_energy.abs() < 1e-9);
        let c = greedy_merge(&g, &live, MergeStop::TargetM(g.len())).unwrap();
        assert_eq!(c.m(), g.len());
        assert_eq!(c.total_energy, 0.0);
        assert_eq!(c.labels, (0..g.len() as u32).collect::<Vec<_>>());
    }

    #[test]
    fn greedy_merge_finds_two_bodies() {
        let (g, live, truth) = two_body(12, 0.5);
        let cross = {
            let c = greedy_merge(&g, &live, MergeStop::TargetM(1)).unwrap();
            c.total_energy
        };
        let c = greedy_merge(&g, &live, MergeStop::Threshold(cross * 0.5)).unwrap();
        assert_eq!(c.m(), 2);
        assert_eq!(crate::scenes::segmentation_accuracy(&c.labels, &truth.iter().map(|&l| l as usize).collect::<Vec<_>>()), 1.0);
        // Every cluster is connected.
        for ids in c.members() {
            let mut sub = g.clone();
            let set: BTreeSet<usize> = ids.iter().copied().collect();
            for (i, e) in sub.edges.iter_mut().enumerate() {
                if !set.contains(&i) {
                    e.clear();
                } else {
                    e.retain(|j| set.contains(j));
                }
            }
            assert_eq!(sub.component_count(), g.len() - ids.len() + 1);
        }
    }

    #[test]
    fn greedy_merge_energy_is_monotone_in_merges() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let (g, mut live, _) = two_body(10, 0.3);
        for y in &mut live {
            *y += Vec3::new(rng.random(), rng.random(), rng.random()) * 0.005;
        }
        let mut last = 0.0;
        for m in (1..=g.len()).rev() {
            let e = greedy_merge(&g, &live, MergeStop::TargetM(m)).unwrap().total_energy;
            assert!(e >= last - 1e-9);
            last = e;
        }
    }

    #[test]
    fn target_below_component_count_stops_at_components() {
        let mut g = NodeGraph {
            nodes: (0..4)
                .map(|i| Node {
                    x: Vec3::new(i as f64, 0.0, 0.0),
                    sigma: 0.1,
                    cluster: UNASSIGNED,
                })
                .collect(),
            ..Default::default()
        };
        g.edges = alloc::vec![alloc::vec![1], alloc::vec![0], alloc::vec![3], alloc::vec![2]];
        let live = g.positions();
        assert_eq!(greedy_merge(&g, &live, MergeStop::TargetM(1)).unwrap().m(), 2);
    }

    #[test]
    fn swaps_fix_planted_error_and_keep_optimum() {
        let (g, live, truth) = two_body(12, 0.5);
        let x = g.positions();
        let mut c = Clustering::from_labels(&truth, &x, &live).unwrap();
        assert_eq!(optimize_swaps(&mut c, &g, &live, 10).unwrap(), 0);
        let mut planted = truth.clone();
        planted[12] = 0;
        let mut c = Clustering::from_labels(&planted, &x, &live).unwrap();
        let before = c.total_energy;
        let swaps = optimize_swaps(&mut c, &g, &live, 1).unwrap();
        assert_eq!(swaps, 1);
        assert_eq!(c.labels, truth);
        assert!(c.total_energy < before);
    }

    #[test]
    fn swaps_never_increase_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..100 {
            let (g, mut live, _) = two_body(8, rng.random_range(0.0..1.0));
            for y in &mut live {
                *y += Vec3::new(rng.random(), rng.random(), rng.random()) * 0.01;
            }
            let labels: Vec<u32> = (0..g.len()).map(|i| (i * 3 / g.len()) as u32).collect();
            let mut c = Clustering::from_labels(&labels, &g.positions(), &live).unwrap();
            let before = c.total_energy;
            optimize_swaps(&mut c, &g, &live, DEFAULT_MAX_PASSES).unwrap();
            assert!(c.total_energy <= before + 1e-12);
            let fresh = Clustering::from_labels(&c.labels, &g.positions(), &live).unwrap();
            assert!((fresh.total_energy - c.total_energy).abs() < 1e-9);
        }
    }

    #[test]
    fn dynamic_update_splits_bent_cluster() {
        let (g, live, truth) = two_body(12, 0.5);
        let x = g.positions();
        let mut c = Clustering::from_labels(&alloc::vec![0; g.len()], &x, &live).unwrap();
        let mut same = c.clone();
        assert_eq!(dynamic_cluster_update(&mut same, &g, &live, f64::INFINITY).unwrap(), 0);
        assert_eq!(same, c);
        let before = c.total_energy;
        assert_eq!(dynamic_cluster_update(&mut c, &g, &live, 1e-6).unwrap(), 1);
        assert_eq!(c.m(), 2);
        assert!(c.total_energy < before);
        let t: Vec<usize> = truth.iter().map(|&l| l as usize).collect();
        assert!(crate::scenes::segmentation_accuracy(&c.labels, &t) > 0.9);
    }

    #[test]
    fn segment_frame_rigid_and_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let (g, _, _) = two_body(12, 0.0);
        let t = random_motion(&mut rng);
        let live: Vec<Vec3> = g.nodes.iter().map(|n| t.apply(&n.x)).collect();
        let policy = SegmentationPolicy::default();
        let first = segment_frame(None, &g, &live, &policy).unwrap();
        assert_eq!(first.clustering.m(), 1);
        let (g2, live2, _) = two_body(12, 0.4);
        let seg = segment_frame(None, &g2, &live2, &policy).unwrap();
        let again = segment_frame(Some(&seg.clustering), &g2, &live2, &policy).unwrap();
        assert_eq!(again.clustering.labels, seg.clustering.labels);
        assert_eq!(again.swaps, 0);
        assert_eq!(again.splits, 0);
    }

    #[test]
    fn cluster_transforms_recover_motion() {
        let (g, live, truth) = two_body(10, 0.3);
        let c = Clustering::from_labels(&truth, &g.positions(), &live).unwrap();
        let tr = c.transforms(&g.positions(), &live).unwrap();
        assert!(tr[0].rotation_angle() < 1e-9);
        assert!((tr[1].rotation_angle() - 0.3).abs() < 1e-9);
    }
}
