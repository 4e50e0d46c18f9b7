//! Two-level frame-to-model registration.
//!
//! The canonical mesh is warped into the live frame and fitted with the
//! point-to-plane energy plus an as-rigid-as-possible regularizer over the node
//! graph. Unknowns are one twist per cluster (level 1) or per node (level 2);
//! each Gauss-Newton step is solved with block-Jacobi preconditioned CG and
//! applied as `T <- exp(xi) T`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use nalgebra::{Matrix6, Vector6};
#[allow(unused_imports)]
use num_traits::Float;

use crate::depth::{
    back_project, bilateral_filter, compute_normals, distance_transform, render_depth_points,
    DepthFrame, DistanceTransformImage, NormalMap,
};
use crate::error::{Error, Result};
use crate::math::{skew, twist_exp, RigidTransform, Twist, Vec3};
use crate::mesh::TriangleMesh;
use crate::spatial::PointGrid;
use crate::warp::{node_weights, Level, NodeGraph, NodeWeights, WarpField, WeightKernel, MAX_K};

pub type Mat6 = Matrix6<f64>;
pub type Vec6 = Vector6<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorrespondenceSource {
    Projective,
    SilhouetteDt,
}

/// A model vertex paired with a live-frame point and normal (camera space).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correspondence {
    pub vertex_index: usize,
    pub target_point: Vec3,
    pub target_normal: Vec3,
    pub source: CorrespondenceSource,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub omega_fit: f64,
    pub omega_reg: f64,
    pub iters_level1: usize,
    pub iters_level2: usize,
    pub pcg_iters: usize,
    /// Scale of the Levenberg term `damping * trace(jtj) / rows`; 0 disables it.
    pub damping: f64,
    pub corr_dist_max: f64,
    /// Degrees.
    pub corr_angle_max: f64,
    /// Regularize across clusters at level 1 too. Off by default: the
    /// regularizer then vanishes at level 1, and turning it on makes the
    /// joints resist the very articulation level 1 is meant to capture.
    pub l1_cross_cluster_reg: bool,
    /// Pair silhouette vertices with the nearest live contour pixel.
    pub use_silhouette: bool,
    /// Depth slack of the self-occlusion test (meters).
    pub visibility_epsilon: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            omega_fit: 1.0,
            omega_reg: 10.0,
            iters_level1: 5,
            iters_level2: 2,
            pcg_iters: 10,
            damping: 1e-4,
            corr_dist_max: 0.10,
            corr_angle_max: 60.0,
            l1_cross_cluster_reg: false,
            use_silhouette: true,
            visibility_epsilon: 0.01,
        }
    }
}

/// Canonical model: surface, node graph and per-vertex level-2 skin.
#[derive(Clone, Copy, Debug)]
pub struct Model<'a> {
    pub mesh: &'a TriangleMesh,
    pub graph: &'a NodeGraph,
    pub skin: &'a [NodeWeights],
}

/// Nearest-node skin of every mesh vertex.
pub fn compute_skin(mesh: &TriangleMesh, graph: &NodeGraph, k: usize, kernel: WeightKernel) -> Result<Vec<NodeWeights>> {
    if graph.is_empty() {
        return Err(Error::NoNodes);
    }
    let index = graph.index();
    let mut nn = Vec::new();
    let mut ids = [0usize; MAX_K];
    Ok(mesh
        .vertices
        .iter()
        .map(|v| {
            index.knn_into(v, k.clamp(1, MAX_K), &mut nn);
            for (slot, e) in ids.iter_mut().zip(&nn) {
                *slot = e.0;
            }
            node_weights(v, graph, &ids[..nn.len()], kernel)
        })
        .collect())
}

/// Transform acting on node `j` at `level`.
#[inline]
fn node_transform<'a>(graph: &NodeGraph, warp: &'a WarpField, level: Level, j: usize) -> &'a RigidTransform {
    match level {
        Level::Node => &warp.level2[j],
        Level::Cluster => &warp.level1[graph.nodes[j].cluster as usize],
    }
}

/// Unknown block index of node `j` at `level`.
#[inline]
fn unknown_of(graph: &NodeGraph, level: Level, j: usize) -> usize {
    match level {
        Level::Node => j,
        Level::Cluster => graph.nodes[j].cluster as usize,
    }
}

fn check_level(graph: &NodeGraph, warp: &WarpField, level: Level) -> Result<usize> {
    match level {
        Level::Node => {
            if warp.level2.len() != graph.len() {
                return Err(Error::LengthMismatch {
                    expected: graph.len(),
                    actual: warp.level2.len(),
                });
            }
            Ok(graph.len())
        }
        Level::Cluster => {
            let m = warp.level1.len();
            if m == 0 || graph.nodes.iter().any(|n| n.cluster as usize >= m) {
                return Err(Error::InvalidArgument("level 1 needs every node in a cluster"));
            }
            Ok(m)
        }
    }
}

/// Warped position of mesh vertex `i` (blend of its nodes' transforms).
#[inline]
pub fn warp_model_vertex(model: &Model<'_>, warp: &WarpField, level: Level, i: usize) -> Vec3 {
    let v = &model.mesh.vertices[i];
    model.skin[i]
        .iter()
        .map(|(j, w)| node_transform(model.graph, warp, level, j).apply(v) * w)
        .sum()
}

fn warp_model_normal(model: &Model<'_>, warp: &WarpField, level: Level, i: usize) -> Vec3 {
    let n = &model.mesh.normals[i];
    let b: Vec3 = model.skin[i]
        .iter()
        .map(|(j, w)| node_transform(model.graph, warp, level, j).rotate(n) * w)
        .sum();
    let len = b.norm();
    if len > 0.0 {
        b / len
    } else {
        *n
    }
}

/// Live frame with its derived maps.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedFrame {
    pub depth: DepthFrame,
    pub normals: NormalMap,
    pub dt: DistanceTransformImage,
}

/// Bilateral smoothing, normals and contour distance transform.
pub fn prepare_frame(frame: &DepthFrame, sigma_space: f64, sigma_depth: f64) -> Result<PreparedFrame> {
    let depth = if sigma_space > 0.0 && sigma_depth > 0.0 {
        bilateral_filter(frame, sigma_space, sigma_depth)
    } else {
        frame.clone()
    };
    let normals = compute_normals(&depth);
    let dt = distance_transform(&depth)?;
    Ok(PreparedFrame { depth, normals, dt })
}

/// Smallest DT distance (pixels) at which a background vertex gets a silhouette pair.
pub const SILHOUETTE_MIN_PIXELS: f64 = 1.5;

/// Correspondences of one search with their silhouette count.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<Correspondence>,
    pub silhouette: usize,
}

/// Pairs visible warped model vertices with live-frame points.
///
/// A vertex is visible when it faces the camera and is not behind the
/// rendered warped model. If its pixel is live foreground it is paired with
/// that pixel's point and normal. Otherwise, if it lies on the silhouette of
/// the rendered model, it is paired with the nearest live contour pixel; the
/// target normal is then the image-plane direction from the vertex to that
/// point, which pulls the vertex sideways onto the contour.
pub fn find_correspondences(
    model: &Model<'_>,
    warp: &WarpField,
    level: Level,
    frame: &PreparedFrame,
    settings: &SolverSettings,
) -> Result<CorrespondenceSet> {
    check_level(model.graph, warp, level)?;
    let n = model.mesh.vertices.len();
    let warped: Vec<Vec3> = (0..n).map(|i| warp_model_vertex(model, warp, level, i)).collect();
    let intr = &frame.depth.intrinsics;
    let buffer = render_depth_points(&warped, &model.mesh.triangles, intr);
    let (w, h) = (intr.width, intr.height);
    let cos_max = settings.corr_angle_max.to_radians().cos();
    let mut out = CorrespondenceSet::default();
    for (i, p) in warped.iter().enumerate() {
        let normal = warp_model_normal(model, warp, level, i);
        if normal.dot(p) >= 0.0 {
            continue;
        }
        let Some((u, v)) = intr.project_to_pixel(p) else { continue };
        let b = buffer.at(u, v);
        if b > 0.0 && p.z > b + settings.visibility_epsilon {
            continue;
        }
        let (target, target_normal, source) = if frame.depth.at(u, v) > 0.0 {
            let (Some(q), Some(nq)) = (frame.depth.point(u, v), frame.normals.at(u, v)) else {
                continue;
            };
            (q, nq, CorrespondenceSource::Projective)
        } else {
            let silhouette = b == 0.0
                || u == 0
                || v == 0
                || u + 1 == w
                || v + 1 == h
                || buffer.at(u - 1, v) == 0.0
                || buffer.at(u + 1, v) == 0.0
                || buffer.at(u, v - 1) == 0.0
                || buffer.at(u, v + 1) == 0.0;
            if !settings.use_silhouette || !silhouette {
                continue;
            }
            // Limb vertices rounding onto a pixel next to the contour are rasterisation noise.
            if frame.dt.distance(u, v) < SILHOUETTE_MIN_PIXELS {
                continue;
            }
            let (cu, cv) = frame.dt.nearest(u, v);
            let Ok(q) = back_project(cu as f64, cv as f64, frame.depth.at(cu, cv), intr) else {
                continue;
            };
            let tangential = Vec3::new(q.x - p.x, q.y - p.y, 0.0);
            let len = tangential.norm();
            if !(len > 0.0) {
                continue;
            }
            (q, tangential / len, CorrespondenceSource::SilhouetteDt)
        };
        // A silhouette normal only fixes a line; its sign just encodes the pull direction.
        let cos = match source {
            CorrespondenceSource::Projective => normal.dot(&target_normal),
            CorrespondenceSource::SilhouetteDt => normal.dot(&target_normal).abs(),
        };
        if (target - p).norm() > settings.corr_dist_max || cos < cos_max {
            continue;
        }
        if source == CorrespondenceSource::SilhouetteDt {
            out.silhouette += 1;
        }
        out.pairs.push(Correspondence {
            vertex_index: i,
            target_point: target,
            target_normal,
            source,
        });
    }
    if out.pairs.is_empty() {
        return Err(Error::TrackingLost);
    }
    Ok(out)
}

/// Point-to-plane energy `sum (n^T (v_hat - u))^2`.
pub fn energy_fit(pairs: &[Correspondence], model: &Model<'_>, warp: &WarpField, level: Level) -> f64 {
    pairs
        .iter()
        .map(|c| {
            let r = c
                .target_normal
                .dot(&(warp_model_vertex(model, warp, level, c.vertex_index) - c.target_point));
            r * r
        })
        .sum()
}

#[inline]
fn reg_alpha(graph: &NodeGraph, level: Level, a: usize, b: usize, settings: &SolverSettings) -> f64 {
    match level {
        Level::Node => 1.0,
        Level::Cluster => {
            if graph.nodes[a].cluster == graph.nodes[b].cluster || settings.l1_cross_cluster_reg {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// As-rigid-as-possible energy over directed graph edges (unweighted by
/// `omega_reg`).
pub fn energy_reg(graph: &NodeGraph, warp: &WarpField, level: Level, settings: &SolverSettings) -> f64 {
    let mut e = 0.0;
    for (a, nbrs) in graph.edges.iter().enumerate() {
        for &b in nbrs {
            let alpha = reg_alpha(graph, level, a, b, settings);
            if alpha == 0.0 {
                continue;
            }
            let xb = &graph.nodes[b].x;
            let r = node_transform(graph, warp, level, a).apply(xb) - node_transform(graph, warp, level, b).apply(xb);
            e += alpha * r.norm_squared();
        }
    }
    e
}

/// Weighted total `omega_fit * E_fit + omega_reg * E_reg`.
pub fn energy_total(
    pairs: &[Correspondence],
    model: &Model<'_>,
    warp: &WarpField,
    level: Level,
    settings: &SolverSettings,
) -> (f64, f64, f64) {
    let fit = energy_fit(pairs, model, warp, level);
    let reg = energy_reg(model.graph, warp, level, settings);
    (settings.omega_fit * fit + settings.omega_reg * reg, fit, reg)
}

/// Block-sparse Gauss-Newton system `jtj x = jtf` with 6x6 blocks.
///
/// `jtf = -J^T r`, so the gradient of the energy is `-2 jtf`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalEquations {
    pub diag: Vec<Mat6>,
    /// Upper off-diagonal blocks `(i, j)` with `i < j`.
    pub off: BTreeMap<(usize, usize), Mat6>,
    pub jtf: Vec<Vec6>,
}

impl NormalEquations {
    pub fn new(blocks: usize) -> Self {
        Self {
            diag: alloc::vec![Mat6::zeros(); blocks],
            off: BTreeMap::new(),
            jtf: alloc::vec![Vec6::zeros(); blocks],
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().map(|d| d.trace()).sum()
    }

    pub fn add_damping(&mut self, lambda: f64) {
        for d in &mut self.diag {
            for k in 0..6 {
                d[(k, k)] += lambda;
            }
        }
    }

    /// Accumulates `weight * J^T J` and `-weight * J^T r` for one residual row
    /// touching the listed blocks.
    fn add_row(&mut self, blocks: &[(usize, Vec6)], residual: f64, weight: f64) {
        for (bi, (i, ji)) in blocks.iter().enumerate() {
            self.jtf[*i] -= ji * (weight * residual);
            self.diag[*i] += ji * ji.transpose() * weight;
            for (j, jj) in &blocks[bi + 1..] {
                if i == j {
                    // Same unknown listed twice: fold into the diagonal.
                    self.diag[*i] += (ji * jj.transpose() + jj * ji.transpose()) * weight;
                } else if i < j {
                    *self.off.entry((*i, *j)).or_insert_with(Mat6::zeros) += ji * jj.transpose() * weight;
                } else {
                    *self.off.entry((*j, *i)).or_insert_with(Mat6::zeros) += jj * ji.transpose() * weight;
                }
            }
        }
    }

    pub fn mul(&self, x: &[Vec6]) -> Vec<Vec6> {
        let mut y: Vec<Vec6> = self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect();
        for (&(i, j), b) in &self.off {
            y[i] += b * x[j];
            y[j] += b.transpose() * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.blocks();
        let mut m = nalgebra::DMatrix::zeros(6 * n, 6 * n);
        for (i, d) in self.diag.iter().enumerate() {
            m.view_mut((6 * i, 6 * i), (6, 6)).copy_from(d);
        }
        for (&(i, j), b) in &self.off {
            m.view_mut((6 * i, 6 * j), (6, 6)).copy_from(b);
            m.view_mut((6 * j, 6 * i), (6, 6)).copy_from(&b.transpose());
        }
        m
    }
}

#[inline]
fn point_row(p: &Vec3, n: &Vec3, weight: f64) -> Vec6 {
    let c = p.cross(n) * weight;
    let nn = n * weight;
    Vec6::new(c.x, c.y, c.z, nn.x, nn.y, nn.z)
}

/// Gauss-Newton linearization of the weighted total energy about `warp`.
pub fn build_normal_equations(
    pairs: &[Correspondence],
    model: &Model<'_>,
    warp: &WarpField,
    level: Level,
    settings: &SolverSettings,
) -> Result<NormalEquations> {
    let graph = model.graph;
    let blocks = check_level(graph, warp, level)?;
    let mut eq = NormalEquations::new(blocks);
    let mut row: Vec<(usize, Vec6)> = Vec::with_capacity(MAX_K);
    for c in pairs {
        let v = &model.mesh.vertices[c.vertex_index];
        let n = &c.target_normal;
        row.clear();
        let mut v_hat = Vec3::zeros();
        for (j, w) in model.skin[c.vertex_index].iter() {
            let p = node_transform(graph, warp, level, j).apply(v);
            v_hat += p * w;
            let u = unknown_of(graph, level, j);
            match row.iter_mut().find(|e| e.0 == u) {
                Some(e) => e.1 += point_row(&p, n, w),
                None => row.push((u, point_row(&p, n, w))),
            }
        }
        let r = n.dot(&(v_hat - c.target_point));
        eq.add_row(&row, r, settings.omega_fit);
    }
    for (a, nbrs) in graph.edges.iter().enumerate() {
        for &b in nbrs {
            let alpha = reg_alpha(graph, level, a, b, settings);
            let (ua, ub) = (unknown_of(graph, level, a), unknown_of(graph, level, b));
            if alpha == 0.0 || ua == ub {
                continue;
            }
            let xb = &graph.nodes[b].x;
            let qa = node_transform(graph, warp, level, a).apply(xb);
            let qb = node_transform(graph, warp, level, b).apply(xb);
            let r = qa - qb;
            // d(exp(xi) q)/d(omega) = -[q]x, d/dv = I.
            let (sa, sb) = (skew(&qa), skew(&qb));
            for k in 0..3 {
                let mut ja = Vec6::zeros();
                let mut jb = Vec6::zeros();
                for c in 0..3 {
                    ja[c] = -sa[(k, c)];
                    jb[c] = sb[(k, c)];
                }
                ja[3 + k] = 1.0;
                jb[3 + k] = -1.0;
                eq.add_row(&[(ua, ja), (ub, jb)], r[k], settings.omega_reg * alpha);
            }
        }
    }
    Ok(eq)
}

/// Preconditioned conjugate gradient with 6x6 block-Jacobi preconditioner.
pub fn pcg_solve(eq: &NormalEquations, iters: usize) -> Result<Vec<Vec6>> {
    let n = eq.blocks();
    let mut inv = Vec::with_capacity(n);
    for d in &eq.diag {
        if d.iter().all(|&x| x == 0.0) {
            inv.push(Mat6::zeros());
            continue;
        }
        match d.cholesky() {
            Some(ch) => inv.push(ch.inverse()),
            None => return Err(Error::SingularSystem),
        }
    }
    let dot = |a: &[Vec6], b: &[Vec6]| a.iter().zip(b).map(|(x, y)| x.dot(y)).sum::<f64>();
    let precond = |r: &[Vec6]| -> Vec<Vec6> { inv.iter().zip(r).map(|(m, x)| m * x).collect() };
    let mut x = alloc::vec![Vec6::zeros(); n];
    let mut r = eq.jtf.clone();
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..iters {
        let ap = eq.mul(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !(rz > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        if dot(&r, &r).sqrt() <= 1e-14 * b_norm {
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    Ok(x)
}

/// Applies `T <- exp(xi) T` to every unknown of `level`.
pub fn apply_update(warp: &WarpField, level: Level, step: &[Vec6], scale: f64) -> WarpField {
    let mut out = warp.clone();
    for (t, xi) in out.transforms_mut(level).iter_mut().zip(step) {
        let s = xi * scale;
        *t = twist_exp(&Twist::from_slice(s.as_slice())) * *t;
    }
    out
}

/// One Gauss-Newton iteration as logged per frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub level: Level,
    pub iteration: usize,
    pub e_fit: f64,
    pub e_reg: f64,
    pub e_total: f64,
    pub correspondences: usize,
    pub silhouette: usize,
    pub accepted: bool,
}

const MAX_RETRIES: usize = 4;

/// Runs the Gauss-Newton iterations of one level.
///
/// Each candidate step is scored with correspondences searched afresh from
/// the candidate pose, and those become the next iteration's correspondences,
/// so the recorded energy never rises from one iteration to the next. A step
/// that raises the energy is retried with more damping (or half the step when
/// damping is off) up to four times; if none succeeds the transforms are kept
/// and the level stops early. After level 1 every node transform is seeded
/// with its cluster's transform.
pub fn solve_level(
    level: Level,
    model: &Model<'_>,
    warp: &WarpField,
    frame: &PreparedFrame,
    settings: &SolverSettings,
) -> Result<(WarpField, Vec<IterationRecord>)> {
    let iters = match level {
        Level::Cluster => settings.iters_level1,
        Level::Node => settings.iters_level2,
    };
    let mut warp = warp.clone();
    let mut records = Vec::with_capacity(iters);
    let mut lambda_scale = settings.damping;
    let mut corr = find_correspondences(model, &warp, level, frame, settings)?;
    let (mut e0, _, _) = energy_total(&corr.pairs, model, &warp, level, settings);
    for iteration in 0..iters {
        let eq = build_normal_equations(&corr.pairs, model, &warp, level, settings)?;
        let rows = 6 * eq.blocks();
        let base = if rows > 0 { eq.trace() / rows as f64 } else { 0.0 };
        let mut step_scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_RETRIES {
            let mut damped = eq.clone();
            damped.add_damping(lambda_scale * base);
            let step = pcg_solve(&damped, settings.pcg_iters)?;
            let candidate = apply_update(&warp, level, &step, step_scale);
            let next = find_correspondences(model, &candidate, level, frame, settings)?;
            let (e1, fit1, reg1) = energy_total(&next.pairs, model, &candidate, level, settings);
            if e1 <= e0 {
                accepted = Some((candidate, next, e1, fit1, reg1));
                lambda_scale *= 0.5;
                break;
            }
            if settings.damping > 0.0 {
                lambda_scale *= 10.0;
            } else {
                step_scale *= 0.5;
            }
        }
        let Some((candidate, next, e1, fit1, reg1)) = accepted else {
            let (e, fit, reg) = energy_total(&corr.pairs, model, &warp, level, settings);
            records.push(IterationRecord {
                level,
                iteration,
                e_fit: fit,
                e_reg: reg,
                e_total: e,
                correspondences: corr.pairs.len(),
                silhouette: corr.silhouette,
                accepted: false,
            });
            break;
        };
        warp = candidate;
        corr = next;
        e0 = e1;
        records.push(IterationRecord {
            level,
            iteration,
            e_fit: fit1,
            e_reg: reg1,
            e_total: e1,
            correspondences: corr.pairs.len(),
            silhouette: corr.silhouette,
            accepted: true,
        });
    }
    if level == Level::Cluster {
        warp.seed_nodes_from_clusters(model.graph);
    }
    Ok((warp, records))
}

/// Whether every node has a cluster with a level-1 transform.
pub fn cluster_level_ready(graph: &NodeGraph, warp: &WarpField) -> bool {
    check_level(graph, warp, Level::Cluster).is_ok()
}

/// Level-1 then level-2 registration of one frame, starting from `warp_prev`.
///
/// Level 1 runs only when [`cluster_level_ready`] holds.
pub fn register_frame(
    model: &Model<'_>,
    warp_prev: &WarpField,
    frame: &PreparedFrame,
    settings: &SolverSettings,
) -> Result<(WarpField, Vec<IterationRecord>)> {
    let mut warp = warp_prev.clone();
    let mut records = Vec::new();
    if cluster_level_ready(model.graph, &warp) {
        let (w, r) = solve_level(Level::Cluster, model, &warp, frame, settings)?;
        warp = w;
        records.extend(r);
    }
    let (w, r) = solve_level(Level::Node, model, &warp, frame, settings)?;
    records.extend(r);
    Ok((w, records))
}

/// Nearest canonical mesh vertex of every point, for attaching markers.
pub fn nearest_vertices(mesh: &TriangleMesh, points: &[Vec3]) -> Vec<usize> {
    let grid = PointGrid::new(&mesh.vertices, 0.01);
    points.iter().map(|p| grid.knn(p, 1).first().map_or(0, |e| e.0)).collect()
}
