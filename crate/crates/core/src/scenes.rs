//! Synthetic articulated scenes with ground truth for evaluation.
//!
//! Every preset is a single watertight surface split into rigid parts by
//! planes through its joints. Parts rotate about hinge axes; vertices within
//! `skinning_band` of a joint plane blend the two adjacent rigid motions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
#[allow(unused_imports)]
use num_traits::Float;

use crate::depth::{render_depth, CameraIntrinsics, DepthFrame};
use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::mesh::TriangleMesh;

/// Default half-width of the blend region around a joint plane.
pub const DEFAULT_SKINNING_BAND: f64 = 0.06;
/// Markers tracked per part.
pub const MARKERS_PER_PART: usize = 20;
/// Surface vertex pitch of the preset meshes.
pub const MESH_PITCH: f64 = 0.005;

/// UV sphere with poles on the z axis, counter-clockwise seen from outside.
pub fn uv_sphere(center: Vec3, radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let rings = rings.max(2);
    let segments = segments.max(3);
    let mut v = alloc::vec![center + Vec3::new(0.0, 0.0, radius)];
    for i in 1..rings {
        let phi = PI * i as f64 / rings as f64;
        for j in 0..segments {
            let theta = 2.0 * PI * j as f64 / segments as f64;
            v.push(
                center
                    + Vec3::new(
                        phi.sin() * theta.cos(),
                        phi.sin() * theta.sin(),
                        phi.cos(),
                    ) * radius,
            );
        }
    }
    v.push(center - Vec3::new(0.0, 0.0, radius));
    let bottom = (v.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + (i - 1) * segments + j % segments) as u32;
    let mut t = Vec::new();
    for j in 0..segments {
        t.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    for j in 0..segments {
        t.push([ring(rings - 1, j), bottom, ring(rings - 1, j + 1)]);
    }
    TriangleMesh::new(v, t)
}

/// Axis-aligned box with full extents `size`, surface vertices on a lattice of
/// roughly `pitch` spacing, welded along edges.
pub fn box_mesh(center: Vec3, size: Vec3, pitch: f64) -> TriangleMesh {
    let n = [0, 1, 2].map(|a| ((size[a] / pitch).ceil() as usize).max(1));
    let lo = center - size / 2.0;
    let mut ids: BTreeMap<[usize; 3], u32> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut id = |p: [usize; 3], vertices: &mut Vec<Vec3>| {
        *ids.entry(p).or_insert_with(|| {
            vertices.push(lo + Vec3::new(
                size.x * p[0] as f64 / n[0] as f64,
                size.y * p[1] as f64 / n[1] as f64,
                size.z * p[2] as f64 / n[2] as f64,
            ));
            (vertices.len() - 1) as u32
        })
    };
    let mut triangles = Vec::new();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for side in [0, n[a]] {
            for i in 0..n[b] {
                for j in 0..n[c] {
                    let corner = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[a] = side;
                        p[b] = i + di;
                        p[c] = j + dj;
                        p
                    };
                    let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]
                        .map(|p| id(p, &mut vertices));
                    if side == 0 {
                        triangles.push([q[0], q[2], q[1]]);
                        triangles.push([q[0], q[3], q[2]]);
                    } else {
                        triangles.push([q[0], q[1], q[2]]);
                        triangles.push([q[0], q[2], q[3]]);
                    }
                }
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Capped cylinder along the x axis.
pub fn cylinder_mesh(center: Vec3, length: f64, radius: f64, pitch: f64) -> TriangleMesh {
    let nl = ((length / pitch).ceil() as usize).max(1);
    let ns = ((2.0 * PI * radius / pitch).ceil() as usize).max(3);
    let nr = ((radius / pitch).ceil() as usize).max(1);
    let dir = |j: usize| {
        let th = 2.0 * PI * (j % ns) as f64 / ns as f64;
        Vec3::new(0.0, th.cos(), th.sin())
    };
    let mut v = Vec::new();
    for i in 0..=nl {
        let x = -length / 2.0 + length * i as f64 / nl as f64;
        for j in 0..ns {
            v.push(center + Vec3::new(x, 0.0, 0.0) + dir(j) * radius);
        }
    }
    let tube = |i: usize, j: usize| (i * ns + j % ns) as u32;
    let mut t = Vec::new();
    for i in 0..nl {
        for j in 0..ns {
            let (a, b, c, d) = (tube(i, j), tube(i, j + 1), tube(i + 1, j + 1), tube(i + 1, j));
            t.push([a, b, c]);
            t.push([a, c, d]);
        }
    }
    for (end, sign) in [(0usize, -1.0), (nl, 1.0)] {
        let x = center + Vec3::new(sign * length / 2.0, 0.0, 0.0);
        let hub = v.len() as u32;
        v.push(x);
        // Inner rings k = 1..nr-1; ring nr is the tube end.
        let first = v.len();
        for k in 1..nr {
            for j in 0..ns {
                v.push(x + dir(j) * (radius * k as f64 / nr as f64));
            }
        }
        let ring = |k: usize, j: usize| -> u32 {
            if k == nr {
                tube(end, j)
            } else {
                (first + (k - 1) * ns + j % ns) as u32
            }
        };
        let mut push = |tri: [u32; 3]| {
            if sign > 0.0 {
                t.push(tri);
            } else {
                t.push([tri[0], tri[2], tri[1]]);
            }
        };
        for j in 0..ns {
            push([hub, ring(1, j), ring(1, j + 1)]);
        }
        for k in 1..nr {
            for j in 0..ns {
                let (a, b, c, d) = (ring(k, j), ring(k + 1, j), ring(k + 1, j + 1), ring(k, j + 1));
                push([a, b, c]);
                push([a, c, d]);
            }
        }
    }
    TriangleMesh::new(v, t)
}

/// Hinge between two parts. `normal` is the joint-plane normal pointing into
/// the child part; both vectors are in rest (body) coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Joint {
    pub pivot: Vec3,
    pub axis: Vec3,
    pub normal: Vec3,
    pub parent: usize,
    pub child: usize,
}

/// Per-frame root pose (body to camera) and joint angles (radians).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Motion {
    pub root: Vec<RigidTransform>,
    pub angles: Vec<Vec<f64>>,
}

impl Motion {
    pub fn frame_count(&self) -> usize {
        self.root.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    TwoBoxHinge,
    BendingPipe,
    ThreePartArm,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::TwoBoxHinge, Preset::BendingPipe, Preset::ThreePartArm];

    pub fn name(self) -> &'static str {
        match self {
            Preset::TwoBoxHinge => "two-box-hinge",
            Preset::BendingPipe => "bending-pipe",
            Preset::ThreePartArm => "three-part-arm",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArticulatedScene {
    pub name: String,
    /// Rest surface in body coordinates.
    pub rest: TriangleMesh,
    /// Part index of each rest vertex.
    pub part_of_vertex: Vec<usize>,
    pub part_count: usize,
    /// Ordered so that every parent precedes its children.
    pub joints: Vec<Joint>,
    pub motion: Motion,
    pub skinning_band: f64,
    pub intrinsics: CameraIntrinsics,
    /// Standard deviation of additive Gaussian depth noise (meters).
    pub noise_sigma: f64,
}

/// Ground truth of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTruth {
    pub vertices: Vec<Vec3>,
    pub markers: Vec<Vec3>,
}

/// Whole-sequence ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub frames: Vec<Vec<Vec3>>,
    pub labels: Vec<usize>,
    pub part_count: usize,
    pub marker_ids: Vec<u32>,
}

impl GroundTruth {
    pub fn marker_trajectory(&self, frame: usize) -> Vec<Vec3> {
        self.marker_ids
            .iter()
            .map(|&i| self.frames[frame][i as usize])
            .collect()
    }

    /// Part label of each point, taken from the nearest frame-0 vertex.
    pub fn label_points(&self, points: &[Vec3]) -> Vec<usize> {
        let grid = crate::spatial::PointGrid::new(&self.frames[0], 0.01);
        points
            .iter()
            .map(|p| self.labels[grid.knn(p, 1)[0].0])
            .collect()
    }
}

fn linear_ramp(frames: usize, start: usize, end_angle: f64) -> Vec<f64> {
    ramp_until(frames, start, frames.saturating_sub(1), end_angle)
}

/// Zero up to `start`, linear to `end_angle` at `stop`, held afterwards.
fn ramp_until(frames: usize, start: usize, stop: usize, end_angle: f64) -> Vec<f64> {
    (0..frames)
        .map(|f| {
            if f <= start || stop <= start {
                0.0
            } else {
                end_angle * ((f - start) as f64 / (stop - start) as f64).min(1.0)
            }
        })
        .collect()
}

/// Fixed root pose: the object sits 1 m in front of the camera, tilted so
/// three faces are visible.
fn default_root() -> RigidTransform {
    let tilt_y = RigidTransform::about_axis(&Vec3::zeros(), &Vec3::y(), 25f64.to_radians());
    let tilt_x = RigidTransform::about_axis(&Vec3::zeros(), &Vec3::x(), -20f64.to_radians());
    RigidTransform::from_translation(Vec3::new(0.0, 0.0, 1.0)) * tilt_x * tilt_y
}

/// Relative cross-section swell in the middle of each part.
pub const PART_BULGE: f64 = 0.25;

/// Scales the y and z extents of `mesh` so every part between consecutive
/// `breaks` (sorted x positions, mesh ends included) is narrow at its ends and
/// wide in the middle. Flat-sided parts would slide freely along their length
/// whenever their end faces are hidden.
fn bulge_parts(mesh: TriangleMesh, breaks: &[f64], amount: f64) -> TriangleMesh {
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| {
            let k = breaks.windows(2).position(|w| v.x <= w[1]).unwrap_or(breaks.len() - 2);
            let (a, b) = (breaks[k], breaks[k + 1]);
            let frac = ((v.x - a) / (b - a)).clamp(0.0, 1.0);
            let s = 1.0 - amount + 2.0 * amount * (PI * frac).sin();
            Vec3::new(v.x, v.y * s, v.z * s)
        })
        .collect();
    TriangleMesh::new(vertices, mesh.triangles)
}

/// Builds a preset with `frames` frames of motion.
pub fn build_scene(preset: Preset, frames: usize) -> ArticulatedScene {
    let frames = frames.max(1);
    let hinge = |x: f64, parent: usize, child: usize| Joint {
        pivot: Vec3::new(x, 0.0, 0.0),
        // Bends the child towards the camera under the default root pose.
        axis: Vec3::y(),
        normal: Vec3::x(),
        parent,
        child,
    };
    let (rest, joints, angles): (TriangleMesh, Vec<Joint>, Vec<Vec<f64>>) = match preset {
        Preset::TwoBoxHinge => {
            let mesh = box_mesh(Vec3::zeros(), Vec3::new(0.4, 0.08, 0.08), MESH_PITCH);
            let mesh = bulge_parts(mesh, &[-0.2, 0.0, 0.2], PART_BULGE);
            let a = linear_ramp(frames, 0, 45f64.to_radians());
            (mesh, alloc::vec![hinge(0.0, 0, 1)], a.into_iter().map(|x| alloc::vec![x]).collect())
        }
        Preset::BendingPipe => {
            let mesh = cylinder_mesh(Vec3::zeros(), 0.4, 0.04, MESH_PITCH);
            let mesh = bulge_parts(mesh, &[-0.2, -0.1, 0.2], PART_BULGE);
            let a = linear_ramp(frames, 0, 40f64.to_radians());
            (mesh, alloc::vec![hinge(-0.1, 0, 1)], a.into_iter().map(|x| alloc::vec![x]).collect())
        }
        Preset::ThreePartArm => {
            let mesh = box_mesh(Vec3::zeros(), Vec3::new(0.54, 0.08, 0.08), MESH_PITCH);
            let mesh = bulge_parts(mesh, &[-0.27, -0.09, 0.09, 0.27], PART_BULGE);
            // The first joint opens and holds; the second starts once it stops.
            let a1 = ramp_until(frames, 0, THREE_PART_ACTIVATION, 45f64.to_radians());
            let a2 = linear_ramp(frames, THREE_PART_ACTIVATION.min(frames), 75f64.to_radians());
            (
                mesh,
                alloc::vec![hinge(-0.09, 0, 1), hinge(0.09, 1, 2)],
                a1.into_iter().zip(a2).map(|(x, y)| alloc::vec![x, y]).collect(),
            )
        }
    };
    let part_count = joints.len() + 1;
    let part_of_vertex = rest
        .vertices
        .iter()
        .map(|v| {
            // Walk down the chain: a vertex on the child side of a joint belongs
            // to the child part (joints are ordered along the chain).
            let mut part = 0;
            for j in &joints {
                if j.parent == part && j.normal.dot(&(v - j.pivot)) >= 0.0 {
                    part = j.child;
                }
            }
            part
        })
        .collect();
    ArticulatedScene {
        name: preset.name().into(),
        rest,
        part_of_vertex,
        part_count,
        joints,
        motion: Motion {
            root: alloc::vec![default_root(); frames],
            angles,
        },
        skinning_band: DEFAULT_SKINNING_BAND,
        intrinsics: CameraIntrinsics::default(),
        noise_sigma: 0.0,
    }
}

/// Frame at which the second joint of the three-part arm starts moving.
pub const THREE_PART_ACTIVATION: usize = 15;

impl ArticulatedScene {
    pub fn frame_count(&self) -> usize {
        self.motion.frame_count()
    }

    /// Rigid body-to-camera transform of every part at `frame`.
    pub fn part_transforms(&self, frame: usize) -> Vec<RigidTransform> {
        let mut out = alloc::vec![self.motion.root[frame]; self.part_count];
        for (j, joint) in self.joints.iter().enumerate() {
            let angle = self.motion.angles[frame][j];
            out[joint.child] =
                out[joint.parent] * RigidTransform::about_axis(&joint.pivot, &joint.axis, angle);
        }
        out
    }

    /// Blend weight of the child part for a rest vertex near `joint`, or `None`
    /// when the vertex lies outside the band.
    fn band_weight(&self, joint: &Joint, v: &Vec3) -> Option<f64> {
        let s = joint.normal.dot(&(v - joint.pivot));
        (s.abs() < self.skinning_band).then(|| (s + self.skinning_band) / (2.0 * self.skinning_band))
    }

    /// Deformed vertex positions at `frame` (camera coordinates).
    pub fn animate_vertices(&self, frame: usize) -> Vec<Vec3> {
        let tr = self.part_transforms(frame);
        self.rest
            .vertices
            .iter()
            .zip(&self.part_of_vertex)
            .map(|(v, &part)| {
                for joint in &self.joints {
                    if joint.parent != part && joint.child != part {
                        continue;
                    }
                    if let Some(a) = self.band_weight(joint, v) {
                        return tr[joint.parent].apply(v) * (1.0 - a) + tr[joint.child].apply(v) * a;
                    }
                }
                tr[part].apply(v)
            })
            .collect()
    }

    /// Deformed mesh and ground-truth slice at `frame`.
    pub fn animate(&self, frame: usize) -> (TriangleMesh, FrameTruth) {
        let vertices = self.animate_vertices(frame);
        let markers = self.marker_ids().iter().map(|&i| vertices[i as usize]).collect();
        let mesh = TriangleMesh::new(vertices.clone(), self.rest.triangles.clone());
        (mesh, FrameTruth { vertices, markers })
    }

    /// Marker vertices: per part, vertices visible in frame 0 and outside every
    /// blend band, sampled by index stride.
    pub fn marker_ids(&self) -> Vec<u32> {
        let verts = self.animate_vertices(0);
        let mesh = TriangleMesh::new(verts.clone(), self.rest.triangles.clone());
        let depth = render_depth(&mesh, &RigidTransform::identity(), &self.intrinsics);
        let mut out = Vec::new();
        for part in 0..self.part_count {
            let candidates: Vec<u32> = (0..verts.len())
                .filter(|&i| self.part_of_vertex[i] == part)
                .filter(|&i| {
                    let v = &self.rest.vertices[i];
                    self.joints.iter().all(|j| self.band_weight(j, v).is_none())
                })
                .filter(|&i| {
                    let p = verts[i];
                    let normal_towards_camera = mesh.normals[i].dot(&p) < 0.0;
                    normal_towards_camera
                        && self.intrinsics.project_to_pixel(&p).is_some_and(|(u, v)| {
                            let d = depth.at(u, v);
                            d > 0.0 && p.z <= d + 0.005
                        })
                })
                .map(|i| i as u32)
                .collect();
            let stride = (candidates.len() / MARKERS_PER_PART).max(1);
            out.extend(candidates.iter().step_by(stride).take(MARKERS_PER_PART));
        }
        out
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            frames: (0..self.frame_count()).map(|f| self.animate_vertices(f)).collect(),
            labels: self.part_of_vertex.clone(),
            part_count: self.part_count,
            marker_ids: self.marker_ids(),
        }
    }

    /// Rendered depth of `frame`, with Gaussian noise when `noise_sigma > 0`.
    pub fn render(&self, frame: usize, seed: u64) -> DepthFrame {
        let (mesh, _) = self.animate(frame);
        let mut depth = render_depth(&mesh, &RigidTransform::identity(), &self.intrinsics);
        depth.frame_index = frame;
        if self.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (frame as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            if let Ok(noise) = Normal::new(0.0, self.noise_sigma) {
                for d in depth.depth.iter_mut().filter(|d| **d > 0.0) {
                    *d = (*d + noise.sample(&mut rng)).max(0.0);
                }
            }
        }
        depth
    }
}

/// Marker errors of one frame (meters).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameError {
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub frames: Vec<FrameError>,
    /// Fraction of nodes whose cluster matches their part under the optimal
    /// one-to-one cluster/part assignment.
    pub accuracy: f64,
    pub histogram: Vec<usize>,
    pub bin_width: f64,
}

impl MetricsReport {
    pub fn mean_marker_error(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().map(|f| f.mean).sum::<f64>() / self.frames.len() as f64
    }

    pub fn max_marker_error(&self) -> f64 {
        self.frames.iter().map(|f| f.max).fold(0.0, f64::max)
    }
}

/// Histogram bin width of per-vertex errors (meters).
pub const HISTOGRAM_BIN: f64 = 0.002;
pub const HISTOGRAM_BINS: usize = 20;

/// Compares predicted marker positions and node labels against ground truth.
///
/// `vertex_errors` feeds the error histogram; its last bin collects everything
/// beyond the range.
pub fn evaluate(
    predicted_markers: &[Vec<Vec3>],
    true_markers: &[Vec<Vec3>],
    labels: &[u32],
    true_labels: &[usize],
    vertex_errors: &[f64],
) -> Result<MetricsReport> {
    if predicted_markers.len() != true_markers.len() {
        return Err(Error::LengthMismatch {
            expected: true_markers.len(),
            actual: predicted_markers.len(),
        });
    }
    if labels.len() != true_labels.len() {
        return Err(Error::LengthMismatch {
            expected: true_labels.len(),
            actual: labels.len(),
        });
    }
    let mut frames = Vec::with_capacity(predicted_markers.len());
    for (p, t) in predicted_markers.iter().zip(true_markers) {
        if p.len() != t.len() {
            return Err(Error::LengthMismatch {
                expected: t.len(),
                actual: p.len(),
            });
        }
        let errs: Vec<f64> = p.iter().zip(t).map(|(a, b)| (a - b).norm()).collect();
        frames.push(FrameError {
            max: errs.iter().copied().fold(0.0, f64::max),
            mean: if errs.is_empty() {
                0.0
            } else {
                errs.iter().sum::<f64>() / errs.len() as f64
            },
        });
    }
    let mut histogram = alloc::vec![0usize; HISTOGRAM_BINS];
    for &e in vertex_errors {
        let bin = ((e / HISTOGRAM_BIN) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    Ok(MetricsReport {
        frames,
        accuracy: segmentation_accuracy(labels, true_labels),
        histogram,
        bin_width: HISTOGRAM_BIN,
    })
}

/// Best one-to-one matching of cluster labels to part labels; nodes of
/// unmatched clusters count as errors.
pub fn segmentation_accuracy(labels: &[u32], true_labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let mut clusters: Vec<u32> = labels.to_vec();
    clusters.sort_unstable();
    clusters.dedup();
    let parts = true_labels.iter().copied().max().map_or(0, |m| m + 1);
    let n = clusters.len().max(parts);
    let mut table = alloc::vec![alloc::vec![0i64; n]; n];
    for (&l, &p) in labels.iter().zip(true_labels) {
        let row = clusters.binary_search(&l).unwrap_or(0);
        table[row][p] += 1;
    }
    let cost: Vec<Vec<i64>> = table.iter().map(|r| r.iter().map(|&c| -c).collect()).collect();
    let assignment = hungarian(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(r, &c)| table[r][c]).sum();
    matched as f64 / labels.len() as f64
}

/// Minimum-cost perfect assignment on a square matrix; returns the column of
/// each row.
pub fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // Potentials formulation with 1-based sentinel column 0.
    let mut u = alloc::vec![0i64; n + 1];
    let mut v = alloc::vec![0i64; n + 1];
    let mut p = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = alloc::vec![i64::MAX; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = alloc::vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}
