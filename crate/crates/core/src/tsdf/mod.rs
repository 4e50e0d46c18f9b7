//! Canonical TSDF volume, warped depth integration and marching cubes.

mod tables;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::depth::DepthFrame;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::spatial::PointGrid;
use crate::warp::{node_weights, NodeGraph, NodeWeights, WarpField, WeightKernel, MAX_K};
use tables::{EDGE_TABLE, TRI_TABLE};

/// Default voxel edge length (meters).
pub const DEFAULT_VOXEL_SIZE: f64 = 0.005;
/// Default truncation band in voxels.
pub const TRUNCATION_VOXELS: f64 = 4.0;
/// Default cap on the per-voxel integration weight.
pub const DEFAULT_MAX_WEIGHT: f32 = 64.0;

/// Dense truncated signed-distance grid in the canonical frame.
///
/// Voxel `(i, j, k)` is centered at `origin + voxel_size * (i, j, k)`. Values are
/// normalized by the truncation distance, positive in front of the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct TsdfVolume {
    pub dims: [usize; 3],
    pub voxel_size: f64,
    pub origin: Vec3,
    pub truncation: f64,
    pub max_weight: f32,
    pub tsdf: Vec<f32>,
    pub weight: Vec<f32>,
}

impl TsdfVolume {
    pub fn new(dims: [usize; 3], voxel_size: f64, origin: Vec3) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        Self {
            dims,
            voxel_size,
            origin,
            truncation: TRUNCATION_VOXELS * voxel_size,
            max_weight: DEFAULT_MAX_WEIGHT,
            tsdf: alloc::vec![1.0; n],
            weight: alloc::vec![0.0; n],
        }
    }

    /// Volume of `dims` voxels centered on `center`.
    pub fn centered(dims: [usize; 3], voxel_size: f64, center: Vec3) -> Self {
        let half = Vec3::new(
            (dims[0] - 1) as f64,
            (dims[1] - 1) as f64,
            (dims[2] - 1) as f64,
        ) * (0.5 * voxel_size);
        Self::new(dims, voxel_size, center - half)
    }

    /// Fills the volume from an analytic signed-distance function (weight 1 everywhere).
    pub fn from_sdf(
        dims: [usize; 3],
        voxel_size: f64,
        origin: Vec3,
        sdf: impl Fn(&Vec3) -> f64,
    ) -> Self {
        let mut vol = Self::new(dims, voxel_size, origin);
        for idx in 0..vol.len() {
            let p = vol.center_of(idx);
            vol.tsdf[idx] = (sdf(&p) / vol.truncation).clamp(-1.0, 1.0) as f32;
            vol.weight[idx] = 1.0;
        }
        vol
    }

    pub fn len(&self) -> usize {
        self.tsdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tsdf.is_empty()
    }

    #[inline]
    pub fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.voxel_size
    }

    #[inline]
    pub fn center_of(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.center(i, j, k)
    }

    /// Cell of the grid (same lattice, unbounded) nearest to `p`.
    #[inline]
    pub fn cell_key(&self, p: &Vec3) -> [i64; 3] {
        let r = (p - self.origin) / self.voxel_size;
        [0, 1, 2].map(|a| (r[a] + 0.5).floor() as i64)
    }

    pub fn observed_count(&self) -> usize {
        self.weight.iter().filter(|&&w| w > 0.0).count()
    }
}

/// Per-voxel nearest nodes with normalized blend weights.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct VoxelSkin {
    pub len: u8,
    pub nodes: [u32; MAX_K],
    pub weights: [f32; MAX_K],
}

/// Sparse k-NN field covering the voxels within `band` of some node.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnField {
    pub k: usize,
    pub band: f64,
    pub kernel: WeightKernel,
    /// Voxel index to entry slot, `u32::MAX` when the voxel is outside the band.
    pub slot: Vec<u32>,
    pub entries: Vec<(u32, VoxelSkin)>,
}

const NO_SLOT: u32 = u32::MAX;

impl KnnField {
    pub fn get(&self, voxel: usize) -> Option<&VoxelSkin> {
        match self.slot.get(voxel) {
            Some(&s) if s != NO_SLOT => Some(&self.entries[s as usize].1),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Voxel indices covered by the field, ascending.
    pub fn voxels(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.entries.iter().map(|e| e.0).collect();
        v.sort_unstable();
        v
    }
}

fn voxel_skin(
    p: &Vec3,
    graph: &NodeGraph,
    index: &PointGrid,
    k: usize,
    kernel: WeightKernel,
    scratch: &mut Vec<(usize, f64)>,
) -> VoxelSkin {
    index.knn_into(p, k, scratch);
    let mut ids = [0usize; MAX_K];
    let n = scratch.len().min(MAX_K);
    for (slot, e) in ids.iter_mut().zip(scratch.iter()) {
        *slot = e.0;
    }
    let nw = node_weights(p, graph, &ids[..n], kernel);
    let mut skin = VoxelSkin {
        len: nw.len,
        ..Default::default()
    };
    for i in 0..nw.len as usize {
        skin.nodes[i] = nw.nodes[i];
        skin.weights[i] = nw.weights[i] as f32;
    }
    skin
}

/// Marks every voxel within `radius` of `p`.
fn mark_ball(volume: &TsdfVolume, p: &Vec3, radius: f64, mut mark: impl FnMut(usize)) {
    let r = (radius / volume.voxel_size).ceil() as i64 + 1;
    let c = volume.cell_key(p);
    let r2 = radius * radius;
    let lo = |a: usize| (c[a] - r).max(0);
    let hi = |a: usize| (c[a] + r).min(volume.dims[a] as i64 - 1);
    for k in lo(2)..=hi(2) {
        for j in lo(1)..=hi(1) {
            for i in lo(0)..=hi(0) {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                if (volume.center(i, j, k) - p).norm_squared() <= r2 {
                    mark(volume.linear(i, j, k));
                }
            }
        }
    }
}

/// Full k-NN field over the voxels within two influence radii of any node.
pub fn update_knn_field(
    volume: &TsdfVolume,
    graph: &NodeGraph,
    k: usize,
    kernel: WeightKernel,
) -> Result<KnnField> {
    if graph.is_empty() {
        return Err(Error::NoNodes);
    }
    let band = 2.0 * graph.max_sigma();
    let mut field = KnnField {
        k: k.clamp(1, MAX_K),
        band,
        kernel,
        slot: alloc::vec![NO_SLOT; volume.len()],
        entries: Vec::new(),
    };
    let all: Vec<usize> = (0..graph.len()).collect();
    refresh_knn_field(&mut field, volume, graph, &all);
    Ok(field)
}

/// Recomputes (and adds) the entries of voxels within the band of `nodes`.
pub fn refresh_knn_field(field: &mut KnnField, volume: &TsdfVolume, graph: &NodeGraph, nodes: &[usize]) {
    let mut touched = alloc::vec![false; volume.len()];
    for &n in nodes {
        mark_ball(volume, &graph.nodes[n].x, field.band, |v| touched[v] = true);
    }
    let index = graph.index();
    let mut scratch = Vec::with_capacity(field.k + 1);
    for (v, _) in touched.iter().enumerate().filter(|(_, &t)| t) {
        let skin = voxel_skin(&volume.center_of(v), graph, &index, field.k, field.kernel, &mut scratch);
        match field.slot[v] {
            NO_SLOT => {
                field.slot[v] = field.entries.len() as u32;
                field.entries.push((v as u32, skin));
            }
            s => field.entries[s as usize].1 = skin,
        }
    }
}

/// Level-2 skin of an arbitrary canonical point, computed exactly.
pub fn point_skin(p: &Vec3, graph: &NodeGraph, k: usize, kernel: WeightKernel) -> NodeWeights {
    let index = graph.index();
    let ids: Vec<usize> = index.knn(p, k.clamp(1, MAX_K)).iter().map(|e| e.0).collect();
    node_weights(p, graph, &ids, kernel)
}

/// Outcome counts of one integration pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub updated: usize,
    pub rejected: usize,
}

/// Warp context for integration: level-2 node transforms and the voxel skin field.
#[derive(Clone, Copy)]
pub struct WarpContext<'a> {
    pub warp: &'a WarpField,
    pub field: &'a KnnField,
}

/// Fuses a live depth frame into the canonical volume.
///
/// Without a warp context every voxel is integrated under the identity warp.
/// With one, each voxel of the k-NN band is moved by the blended node
/// transforms; voxels whose warped centers share a live-frame cell are all
/// rejected for this frame.
pub fn integrate(volume: &mut TsdfVolume, frame: &DepthFrame, ctx: Option<WarpContext<'_>>) -> IntegrationStats {
    match ctx {
        None => {
            let order: Vec<u32> = (0..volume.len() as u32).collect();
            integrate_voxels(volume, frame, None, &order)
        }
        Some(c) => {
            let order: Vec<u32> = c.field.entries.iter().map(|e| e.0).collect();
            integrate_voxels(volume, frame, Some(c), &order)
        }
    }
}

struct Candidate {
    voxel: u32,
    key: [i64; 3],
    tsdf: f32,
}

fn integrate_voxels(
    volume: &mut TsdfVolume,
    frame: &DepthFrame,
    ctx: Option<WarpContext<'_>>,
    order: &[u32],
) -> IntegrationStats {
    let intr = &frame.intrinsics;
    let trunc = volume.truncation;

    // Pass 1: warp, project and compute the candidate update of each voxel.
    let mut candidates = Vec::new();
    for &voxel in order {
        let p = volume.center_of(voxel as usize);
        let q = match ctx {
            None => p,
            Some(c) => {
                let Some(skin) = c.field.get(voxel as usize) else { continue };
                let mut q = Vec3::zeros();
                for s in 0..skin.len as usize {
                    q += c.warp.level2[skin.nodes[s] as usize].apply(&p) * skin.weights[s] as f64;
                }
                q
            }
        };
        let Some((u, v)) = intr.project_to_pixel(&q) else { continue };
        let d = frame.at(u, v);
        if d <= 0.0 {
            continue;
        }
        let sdf = d - q.z;
        if sdf < -trunc {
            continue;
        }
        candidates.push(Candidate {
            voxel,
            key: volume.cell_key(&q),
            tsdf: (sdf / trunc).clamp(-1.0, 1.0) as f32,
        });
    }

    // Pass 2: every candidate sharing a warped cell with another is rejected.
    let mut rejected = alloc::vec![false; candidates.len()];
    if ctx.is_some() {
        let mut by_key: Vec<usize> = (0..candidates.len()).collect();
        by_key.sort_unstable_by(|&a, &b| candidates[a].key.cmp(&candidates[b].key));
        for run in by_key.chunk_by(|&a, &b| candidates[a].key == candidates[b].key) {
            if run.len() > 1 {
                for &c in run {
                    rejected[c] = true;
                }
            }
        }
    }

    // Pass 3: running weighted average for the survivors.
    let mut stats = IntegrationStats::default();
    for (c, &rej) in candidates.iter().zip(&rejected) {
        if rej {
            stats.rejected += 1;
            continue;
        }
        let i = c.voxel as usize;
        let w = volume.weight[i];
        volume.tsdf[i] = (volume.tsdf[i] * w + c.tsdf) / (w + 1.0);
        volume.weight[i] = (w + 1.0).min(volume.max_weight);
        stats.updated += 1;
    }
    stats
}

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Marching cubes over cells whose eight corners are all observed.
///
/// Triangles are wound counter-clockwise seen from the positive (free-space)
/// side; vertex normals follow the TSDF gradient.
pub fn extract_mesh(volume: &TsdfVolume) -> TriangleMesh {
    let [dx, dy, dz] = volume.dims;
    let mut mesh = TriangleMesh::default();
    if dx < 2 || dy < 2 || dz < 2 {
        return mesh;
    }
    let mut edge_vertex: BTreeMap<u64, u32> = BTreeMap::new();
    for k in 0..dz - 1 {
        for j in 0..dy - 1 {
            for i in 0..dx - 1 {
                let mut vals = [0f64; 8];
                let mut observed = true;
                let mut cube = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    let idx = volume.linear(i + off[0], j + off[1], k + off[2]);
                    if volume.weight[idx] <= 0.0 {
                        observed = false;
                        break;
                    }
                    vals[c] = volume.tsdf[idx] as f64;
                    if vals[c] < 0.0 {
                        cube |= 1 << c;
                    }
                }
                if !observed || EDGE_TABLE[cube] == 0 {
                    continue;
                }
                let mut ids = [0u32; 12];
                for (e, [a, b]) in EDGES.iter().enumerate() {
                    if EDGE_TABLE[cube] & (1 << e) == 0 {
                        continue;
                    }
                    let (oa, ob) = (CORNERS[*a], CORNERS[*b]);
                    let base = [0, 1, 2].map(|x| oa[x].min(ob[x]));
                    let axis = (0..3).find(|&x| oa[x] != ob[x]).unwrap_or(0);
                    let key = volume.linear(i + base[0], j + base[1], k + base[2]) as u64 * 3 + axis as u64;
                    ids[e] = *edge_vertex.entry(key).or_insert_with(|| {
                        let (va, vb) = (vals[*a], vals[*b]);
                        let t = va / (va - vb);
                        let pa = volume.center(i + oa[0], j + oa[1], k + oa[2]);
                        let pb = volume.center(i + ob[0], j + ob[1], k + ob[2]);
                        let ga = gradient(volume, i + oa[0], j + oa[1], k + oa[2]);
                        let gb = gradient(volume, i + ob[0], j + ob[1], k + ob[2]);
                        let g = ga + (gb - ga) * t;
                        let n = g.norm();
                        mesh.vertices.push(pa + (pb - pa) * t);
                        mesh.normals.push(if n > 0.0 { g / n } else { Vec3::zeros() });
                        (mesh.vertices.len() - 1) as u32
                    });
                }
                for tri in TRI_TABLE[cube].chunks(3).take_while(|t| t[0] >= 0) {
                    mesh.triangles.push([
                        ids[tri[0] as usize],
                        ids[tri[2] as usize],
                        ids[tri[1] as usize],
                    ]);
                }
            }
        }
    }
    mesh
}

/// Central-difference TSDF gradient, one-sided next to unobserved or border voxels.
fn gradient(volume: &TsdfVolume, i: usize, j: usize, k: usize) -> Vec3 {
    let c = [i, j, k];
    let at = |p: [usize; 3]| {
        let idx = volume.linear(p[0], p[1], p[2]);
        (volume.weight[idx] > 0.0).then(|| volume.tsdf[idx] as f64)
    };
    let center = at(c).unwrap_or(0.0);
    let mut g = Vec3::zeros();
    for a in 0..3 {
        let mut lo = c;
        let mut hi = c;
        let minus = if c[a] > 0 {
            lo[a] -= 1;
            at(lo)
        } else {
            None
        };
        let plus = if c[a] + 1 < volume.dims[a] {
            hi[a] += 1;
            at(hi)
        } else {
            None
        };
        g[a] = match (minus, plus) {
            (Some(m), Some(p)) => 0.5 * (p - m),
            (None, Some(p)) => p - center,
            (Some(m), None) => center - m,
            (None, None) => 0.0,
        };
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{render_depth, CameraIntrinsics};
    use crate::math::RigidTransform;
    use crate::warp::{Node, UNASSIGNED};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 200.0,
            fy: 200.0,
            cx: 40.0,
            cy: 30.0,
            width: 80,
            height: 60,
        }
    }

    fn plane_frame(z: f64) -> DepthFrame {
        let mut f = DepthFrame::empty(intr(), 0);
        f.depth.iter_mut().for_each(|d| *d = z);
        f
    }

    fn graph(points: &[Vec3], sigma: f64) -> NodeGraph {
        let mut g = NodeGraph {
            nodes: points
                .iter()
                .map(|&x| Node {
                    x,
                    sigma,
                    cluster: UNASSIGNED,
                })
                .collect(),
            ..Default::default()
        };
        g.rebuild_edges();
        g
    }

    #[test]
    fn identity_integration_sign_convention() {
        let mut vol = TsdfVolume::centered([8, 8, 33], 0.005, Vec3::new(0.0, 0.0, 2.0));
        let f = plane_frame(2.0);
        integrate(&mut vol, &f, None);
        let t = vol.truncation;
        for k in 0..33 {
            let idx = vol.linear(4, 4, k);
            let z = vol.center_of(idx).z;
            let expect = ((2.0 - z) / t).clamp(-1.0, 1.0);
            if vol.weight[idx] == 0.0 {
                assert!(2.0 - z <= -t + 1e-9, "z={z}");
                continue;
            }
            assert!(2.0 - z >= -t - 1e-9);
            assert!((vol.tsdf[idx] as f64 - expect).abs() < 1e-5, "z={z}");
            if (z - 2.0).abs() < 1e-9 {
                assert!(vol.tsdf[idx].abs() < 1e-5);
            }
            if (z - (2.0 - t)).abs() < 1e-9 {
                assert!((vol.tsdf[idx] - 1.0).abs() < 1e-5);
            }
            if (z - (2.0 + t)).abs() < 1e-9 {
                assert!((vol.tsdf[idx] + 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn double_integration_doubles_weight() {
        let mut vol = TsdfVolume::centered([8, 8, 20], 0.005, Vec3::new(0.0, 0.0, 2.0));
        let f = plane_frame(2.0);
        integrate(&mut vol, &f, None);
        let once = vol.clone();
        integrate(&mut vol, &f, None);
        assert_eq!(vol.tsdf, once.tsdf);
        for (a, b) in vol.weight.iter().zip(&once.weight) {
            assert_eq!(*a, (2.0 * b).min(vol.max_weight));
        }
        assert!(vol.tsdf.iter().all(|t| t.abs() <= 1.0));
    }

    #[test]
    fn colliding_voxels_are_both_rejected() {
        let mut vol = TsdfVolume::centered([4, 4, 4], 0.005, Vec3::new(0.0, 0.0, 2.0));
        let a = vol.linear(1, 1, 1);
        let b = vol.linear(2, 1, 1);
        let c = vol.linear(1, 2, 1);
        let g = graph(&[vol.center_of(a), vol.center_of(b)], 0.01);
        let mut warp = WarpField::identity(1, 2);
        // Node 1 drags voxel b onto voxel a's cell.
        warp.level2[1] = RigidTransform::from_translation(vol.center_of(a) - vol.center_of(b));
        let skin = |n: u32| VoxelSkin {
            len: 1,
            nodes: [n, 0, 0, 0, 0, 0, 0, 0],
            weights: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        };
        let mut field = KnnField {
            k: 1,
            band: 1.0,
            kernel: WeightKernel::Literal,
            slot: alloc::vec![NO_SLOT; vol.len()],
            entries: Vec::new(),
        };
        for (i, (v, n)) in [(a, 0), (b, 1), (c, 0)].into_iter().enumerate() {
            field.slot[v] = i as u32;
            field.entries.push((v as u32, skin(n)));
        }
        let _ = g;
        let f = plane_frame(2.0);
        let ctx = WarpContext { warp: &warp, field: &field };
        let stats = integrate(&mut vol, &f, Some(ctx));
        assert_eq!(stats.rejected, 2);
        assert_eq!(stats.updated, 1);
        assert_eq!(vol.weight[a], 0.0);
        assert_eq!(vol.weight[b], 0.0);
        assert_eq!(vol.weight[c], 1.0);
    }

    #[test]
    fn collision_rejection_ignores_iteration_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = TsdfVolume::centered([12, 12, 12], 0.005, Vec3::new(0.0, 0.0, 2.0));
        let pts: Vec<Vec3> = (0..6)
            .map(|_| base.center_of(rng.random_range(0..base.len())))
            .collect();
        let g = graph(&pts, 0.01);
        let mut warp = WarpField::identity(1, g.len());
        for t in &mut warp.level2 {
            *t = RigidTransform::from_translation(Vec3::new(
                rng.random_range(-0.01..0.01),
                rng.random_range(-0.01..0.01),
                rng.random_range(-0.01..0.01),
            ));
        }
        let field = update_knn_field(&base, &g, 4, WeightKernel::Literal).unwrap();
        let f = plane_frame(2.0);
        let ctx = WarpContext { warp: &warp, field: &field };
        let mut fwd = base.clone();
        let s1 = integrate_voxels(&mut fwd, &f, Some(ctx), &field.voxels());
        let mut rev = base.clone();
        let mut order = field.voxels();
        order.reverse();
        let s2 = integrate_voxels(&mut rev, &f, Some(ctx), &order);
        assert_eq!(s1, s2);
        assert!(s1.rejected > 0);
        assert_eq!(fwd, rev);
    }

    #[test]
    fn knn_field_single_node_and_coincident_voxel() {
        let vol = TsdfVolume::centered([6, 6, 6], 0.01, Vec3::zeros());
        let g = graph(&[Vec3::zeros()], 1.0);
        let f = update_knn_field(&vol, &g, 8, WeightKernel::Literal).unwrap();
        assert_eq!(f.len(), vol.len());
        for (_, s) in &f.entries {
            assert_eq!(s.len, 1);
            assert_eq!(s.nodes[0], 0);
            assert_eq!(s.weights[0], 1.0);
        }
        let v = vol.linear(1, 2, 3);
        let g = graph(&[vol.center_of(v), vol.center_of(vol.linear(4, 4, 4))], 0.05);
        let f = update_knn_field(&vol, &g, 2, WeightKernel::Literal).unwrap();
        let s = f.get(v).unwrap();
        assert_eq!(s.nodes[0], 0);
        assert!(s.weights[0] > s.weights[1]);
        assert_eq!(update_knn_field(&vol, &NodeGraph::default(), 8, WeightKernel::Literal).unwrap_err(), Error::NoNodes);
    }

    #[test]
    fn knn_field_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let vol = TsdfVolume::centered([16, 16, 16], 0.01, Vec3::zeros());
        let pts: Vec<Vec3> = (0..50)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-0.08..0.08),
                    rng.random_range(-0.08..0.08),
                    rng.random_range(-0.08..0.08),
                )
            })
            .collect();
        let g = graph(&pts, 0.03);
        let f = update_knn_field(&vol, &g, 8, WeightKernel::Literal).unwrap();
        assert!(f.len() > 1000);
        for (v, s) in &f.entries {
            let p = vol.center_of(*v as usize);
            let want = crate::spatial::knn_brute_force(&pts, &p, 8);
            let got: Vec<usize> = s.nodes[..s.len as usize].iter().map(|&n| n as usize).collect();
            let want: Vec<usize> = want.iter().map(|e| e.0).collect();
            assert_eq!(got, want);
            let sum: f32 = s.weights[..s.len as usize].iter().sum();
            assert!((sum - 1.0).abs() < 1e-5);
            assert!(s.weights.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn sphere_sdf_mesh_lies_on_sphere() {
        let vol = TsdfVolume::from_sdf([64, 64, 64], 0.02, Vec3::repeat(-0.63), |p| p.norm() - 0.5);
        let mesh = extract_mesh(&vol);
        assert!(mesh.vertex_count() > 1000);
        assert!(mesh.is_valid());
        for (v, n) in mesh.vertices.iter().zip(&mesh.normals) {
            assert!((v.norm() - 0.5).abs() < vol.voxel_size);
            // Outward normals.
            assert!(n.dot(&v.normalize()) > 0.9);
        }
        // Counter-clockwise winding seen from outside.
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i as usize]);
            let fnorm = (b - a).cross(&(c - a));
            assert!(fnorm.dot(&((a + b + c) / 3.0)) > 0.0);
        }
    }

    #[test]
    fn plane_sdf_mesh_is_planar() {
        let n = Vec3::new(0.3, -0.2, 0.9).normalize();
        let vol = TsdfVolume::from_sdf([20, 20, 20], 0.01, Vec3::repeat(-0.095), |p| n.dot(p) - 0.01);
        let mesh = extract_mesh(&vol);
        assert!(!mesh.triangles.is_empty());
        for v in &mesh.vertices {
            assert!((n.dot(v) - 0.01).abs() < vol.voxel_size / 10.0);
        }
    }

    #[test]
    fn negated_field_flips_normals() {
        let vol = TsdfVolume::from_sdf([30, 30, 30], 0.02, Vec3::repeat(-0.29), |p| p.norm() - 0.2);
        let mut neg = vol.clone();
        neg.tsdf.iter_mut().for_each(|t| *t = -*t);
        let a = extract_mesh(&vol);
        let b = extract_mesh(&neg);
        assert_eq!(a.vertex_count(), b.vertex_count());
        assert_eq!(a.triangles.len(), b.triangles.len());
        let key = |v: &Vec3| [v.x, v.y, v.z].map(|c| (c * 1e9).round() as i64);
        let mut va: Vec<_> = a.vertices.iter().zip(&a.normals).map(|(v, n)| (key(v), *n)).collect();
        let mut vb: Vec<_> = b.vertices.iter().zip(&b.normals).map(|(v, n)| (key(v), *n)).collect();
        va.sort_by_key(|x| x.0);
        vb.sort_by_key(|x| x.0);
        for (x, y) in va.iter().zip(&vb) {
            assert_eq!(x.0, y.0);
            assert!((x.1 + y.1).norm() < 1e-9);
        }
    }

    #[test]
    fn empty_when_no_zero_crossing() {
        let vol = TsdfVolume::from_sdf([8, 8, 8], 0.01, Vec3::zeros(), |_| 1.0);
        assert!(extract_mesh(&vol).triangles.is_empty());
    }

    #[test]
    fn fused_rendered_sphere_matches_analytic() {
        let k = intr();
        let center = Vec3::new(0.0, 0.0, 0.6);
        let sphere = crate::scenes::uv_sphere(center, 0.1, 64, 128);
        let frame = render_depth(&sphere, &RigidTransform::identity(), &k);
        let mut vol = TsdfVolume::centered([56, 56, 56], 0.005, center);
        for _ in 0..3 {
            integrate(&mut vol, &frame, None);
        }
        let mesh = extract_mesh(&vol);
        assert!(mesh.vertex_count() > 100);
        let mean: f64 = mesh
            .vertices
            .iter()
            .map(|v| ((v - center).norm() - 0.1).abs())
            .sum::<f64>()
            / mesh.vertex_count() as f64;
        assert!(mean < vol.voxel_size, "mean {mean}");
    }
}
