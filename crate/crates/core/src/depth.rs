//! Depth frames: pinhole camera model, software rendering, preprocessing and
//! the silhouette distance transform.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::math::{RigidTransform, Vec3};
use crate::mesh::TriangleMesh;

/// Default foreground cut-off for noisy input (meters).
pub const DEFAULT_MAX_RANGE: f64 = 5.0;

/// Pinhole intrinsics. Pixel `(u, v)` has its center at integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    /// 512 x 424 time-of-flight sensor geometry.
    fn default() -> Self {
        Self {
            fx: 365.0,
            fy: 365.0,
            cx: 256.0,
            cy: 212.0,
            width: 512,
            height: 424,
        }
    }
}

impl CameraIntrinsics {
    pub fn is_valid(&self) -> bool {
        self.fx > 0.0 && self.fy > 0.0 && self.width > 0 && self.height > 0
    }

    /// Continuous pixel coordinates of a camera-space point in front of the camera.
    #[inline]
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Pixel containing the projection of `p`, if inside the image.
    #[inline]
    pub fn project_to_pixel(&self, p: &Vec3) -> Option<(usize, usize)> {
        let (u, v) = self.project(p)?;
        let (u, v) = ((u + 0.5).floor(), (v + 0.5).floor());
        if u < 0.0 || v < 0.0 || u >= self.width as f64 || v >= self.height as f64 {
            return None;
        }
        Some((u as usize, v as usize))
    }

    /// Camera ray through `(u, v)` scaled so its z component is 1.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Lifts pixel `(u, v)` at `depth` meters into camera space.
pub fn back_project(u: f64, v: f64, depth: f64, intrinsics: &CameraIntrinsics) -> Result<Vec3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidDepth);
    }
    Ok(intrinsics.ray(u, v) * depth)
}

/// Row-major depth image in meters; `0` marks invalid or background pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthFrame {
    pub depth: Vec<f64>,
    pub intrinsics: CameraIntrinsics,
    pub frame_index: usize,
}

impl DepthFrame {
    pub fn empty(intrinsics: CameraIntrinsics, frame_index: usize) -> Self {
        Self {
            depth: alloc::vec![0.0; intrinsics.width * intrinsics.height],
            intrinsics,
            frame_index,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.intrinsics.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, d: f64) {
        let w = self.intrinsics.width;
        self.depth[v * w + u] = d;
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.at(u, v) > 0.0
    }

    /// Camera-space point of a valid pixel.
    #[inline]
    pub fn point(&self, u: usize, v: usize) -> Option<Vec3> {
        let d = self.at(u, v);
        (d > 0.0).then(|| self.intrinsics.ray(u as f64, v as f64) * d)
    }

    pub fn foreground_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > 0.0).count()
    }

    /// Zeroes every pixel outside `(0, max_range]`.
    pub fn apply_range_mask(&mut self, max_range: f64) {
        for d in &mut self.depth {
            if !(*d > 0.0 && *d <= max_range) {
                *d = 0.0;
            }
        }
    }
}

/// Z-buffered rasterization of `mesh` seen through `pose` (model to camera).
///
/// Back-facing triangles (clockwise as seen from the camera) are culled; triangles
/// touching the near plane are skipped.
pub fn render_depth(
    mesh: &TriangleMesh,
    pose: &RigidTransform,
    intrinsics: &CameraIntrinsics,
) -> DepthFrame {
    let cam: Vec<Vec3> = mesh.vertices.iter().map(|v| pose.apply(v)).collect();
    render_depth_points(&cam, &mesh.triangles, intrinsics)
}

/// [`render_depth`] on vertices already in camera space.
pub fn render_depth_points(
    cam: &[Vec3],
    triangles: &[[u32; 3]],
    intrinsics: &CameraIntrinsics,
) -> DepthFrame {
    const NEAR: f64 = 1e-3;
    let mut frame = DepthFrame::empty(*intrinsics, 0);
    let (w, h) = (intrinsics.width, intrinsics.height);
    for tri in triangles {
        let [a, b, c] = tri.map(|i| cam[i as usize]);
        if a.z <= NEAR || b.z <= NEAR || c.z <= NEAR {
            continue;
        }
        let n = (b - a).cross(&(c - a));
        if n.dot(&a) >= 0.0 {
            continue;
        }
        let (Some(pa), Some(pb), Some(pc)) = (
            intrinsics.project(&a),
            intrinsics.project(&b),
            intrinsics.project(&c),
        ) else {
            continue;
        };
        let area = edge(pa, pb, pc);
        if area == 0.0 {
            continue;
        }
        let umin = pa.0.min(pb.0).min(pc.0).ceil().max(0.0);
        let umax = pa.0.max(pb.0).max(pc.0).floor().min(w as f64 - 1.0);
        let vmin = pa.1.min(pb.1).min(pc.1).ceil().max(0.0);
        let vmax = pa.1.max(pb.1).max(pc.1).floor().min(h as f64 - 1.0);
        if umin > umax || vmin > vmax {
            continue;
        }
        let plane_d = n.dot(&a);
        for v in vmin as usize..=vmax as usize {
            for u in umin as usize..=umax as usize {
                let p = (u as f64, v as f64);
                let w0 = edge(pb, pc, p) / area;
                let w1 = edge(pc, pa, p) / area;
                let w2 = edge(pa, pb, p) / area;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let ray = intrinsics.ray(p.0, p.1);
                let denom = n.dot(&ray);
                if denom == 0.0 {
                    continue;
                }
                let z = plane_d / denom;
                let idx = v * w + u;
                let cur = frame.depth[idx];
                if z > 0.0 && (cur == 0.0 || z < cur) {
                    frame.depth[idx] = z;
                }
            }
        }
    }
    frame
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Joint spatial/range Gaussian smoothing. Invalid pixels neither contribute
/// nor receive values.
pub fn bilateral_filter(frame: &DepthFrame, sigma_space: f64, sigma_depth: f64) -> DepthFrame {
    let (w, h) = (frame.width(), frame.height());
    let radius = (2.0 * sigma_space).ceil() as isize;
    let inv_s = 1.0 / (2.0 * sigma_space * sigma_space);
    let inv_r = 1.0 / (2.0 * sigma_depth * sigma_depth);
    let spatial: Vec<f64> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| ((dx * dx + dy * dy) as f64 * -inv_s).exp()))
        .collect();
    let side = (2 * radius + 1) as usize;
    let mut out = frame.clone();
    for v in 0..h {
        for u in 0..w {
            let d0 = frame.at(u, v);
            if d0 <= 0.0 {
                continue;
            }
            let (mut sum, mut wsum) = (0.0, 0.0);
            for dy in -radius..=radius {
                let y = v as isize + dy;
                if y < 0 || y >= h as isize {
                    continue;
                }
                for dx in -radius..=radius {
                    let x = u as isize + dx;
                    if x < 0 || x >= w as isize {
                        continue;
                    }
                    let d = frame.at(x as usize, y as usize);
                    if d <= 0.0 {
                        continue;
                    }
                    let ws = spatial[(dy + radius) as usize * side + (dx + radius) as usize];
                    let wr = (-(d - d0) * (d - d0) * inv_r).exp();
                    sum += ws * wr * d;
                    wsum += ws * wr;
                }
            }
            out.depth[v * w + u] = sum / wsum;
        }
    }
    out
}

/// Per-pixel unit normals; `None` where the pixel or a 4-neighbor is invalid.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Option<Vec3>>,
}

impl NormalMap {
    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Option<Vec3> {
        self.normals[v * self.width + u]
    }
}

/// Cosine of the largest angle between one-sided normals of a valid pixel.
const CREASE_COS: f64 = 0.966;

/// Central-difference normals of the back-projected surface, facing the camera.
///
/// Pixels whose forward and backward difference normals differ by more than
/// about 15 degrees sit on a crease or a depth jump and get no normal.
pub fn compute_normals(frame: &DepthFrame) -> NormalMap {
    let (w, h) = (frame.width(), frame.height());
    let mut normals = alloc::vec![None; w * h];
    for v in 1..h.saturating_sub(1) {
        for u in 1..w.saturating_sub(1) {
            let (Some(c), Some(l), Some(r), Some(t), Some(b)) = (
                frame.point(u, v),
                frame.point(u - 1, v),
                frame.point(u + 1, v),
                frame.point(u, v - 1),
                frame.point(u, v + 1),
            ) else {
                continue;
            };
            let n = (r - l).cross(&(b - t));
            let len = n.norm();
            if !(len > 0.0) {
                continue;
            }
            let n = n / len;
            // Creases and depth jumps: the one-sided normals disagree.
            let fwd = (r - c).cross(&(b - c));
            let bwd = (c - l).cross(&(c - t));
            if fwd.dot(&bwd) < CREASE_COS * fwd.norm() * bwd.norm() {
                continue;
            }
            normals[v * w + u] = Some(if n.z > 0.0 { -n } else { n });
        }
    }
    NormalMap {
        width: w,
        height: h,
        normals,
    }
}

/// Exact Euclidean distance (pixels) to the nearest foreground contour pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceTransformImage {
    pub width: usize,
    pub height: usize,
    pub dt: Vec<f64>,
    pub nearest: Vec<(u32, u32)>,
}

impl DistanceTransformImage {
    #[inline]
    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.dt[v * self.width + u]
    }

    #[inline]
    pub fn nearest(&self, u: usize, v: usize) -> (usize, usize) {
        let (x, y) = self.nearest[v * self.width + u];
        (x as usize, y as usize)
    }
}

/// Foreground pixels with a 4-neighbor that is background or outside the image.
pub fn contour_mask(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut contour = alloc::vec![false; mask.len()];
    for v in 0..height {
        for u in 0..width {
            let i = v * width + u;
            if !mask[i] {
                continue;
            }
            let edge = u == 0
                || v == 0
                || u + 1 == width
                || v + 1 == height
                || !mask[i - 1]
                || !mask[i + 1]
                || !mask[i - width]
                || !mask[i + width];
            contour[i] = edge;
        }
    }
    contour
}

/// Distance transform to the contour of the `depth > 0` region.
pub fn distance_transform(frame: &DepthFrame) -> Result<DistanceTransformImage> {
    let mask: Vec<bool> = frame.depth.iter().map(|&d| d > 0.0).collect();
    distance_transform_mask(&mask, frame.width(), frame.height())
}

/// Distance transform of an explicit foreground mask.
///
/// Separable lower-envelope transform: a per-row pass to the nearest contour
/// column, then a per-column pass over the row results.
pub fn distance_transform_mask(
    mask: &[bool],
    width: usize,
    height: usize,
) -> Result<DistanceTransformImage> {
    if !mask.iter().any(|&m| m) {
        return Err(Error::NoForeground);
    }
    let contour = contour_mask(mask, width, height);

    // Row pass: squared horizontal distance and nearest contour column per pixel.
    let mut row_d2 = alloc::vec![f64::INFINITY; width * height];
    let mut row_arg = alloc::vec![0u32; width * height];
    let mut env = Envelope::with_capacity(width.max(height));
    let mut f = alloc::vec![f64::INFINITY; width.max(height)];
    for v in 0..height {
        for u in 0..width {
            f[u] = if contour[v * width + u] { 0.0 } else { f64::INFINITY };
        }
        env.transform(&f[..width], |u, d2, arg| {
            row_d2[v * width + u] = d2;
            row_arg[v * width + u] = arg as u32;
        });
    }

    let mut dt = alloc::vec![0.0; width * height];
    let mut nearest = alloc::vec![(0u32, 0u32); width * height];
    for u in 0..width {
        for v in 0..height {
            f[v] = row_d2[v * width + u];
        }
        env.transform(&f[..height], |v, d2, arg| {
            dt[v * width + u] = d2.sqrt();
            nearest[v * width + u] = (row_arg[arg * width + u], arg as u32);
        });
    }
    Ok(DistanceTransformImage {
        width,
        height,
        dt,
        nearest,
    })
}

/// 1-D squared-distance transform by the lower envelope of parabolas.
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// Calls `out(q, min_p f(p) + (q - p)^2, argmin)` for every `q`; skipped if no
    /// finite site exists.
    fn transform(&mut self, f: &[f64], mut out: impl FnMut(usize, f64, usize)) {
        self.sites.clear();
        self.bounds.clear();
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            let fq = f[q] + (q * q) as f64;
            loop {
                let Some(&p) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= *self.bounds.last().unwrap_or(&f64::NEG_INFINITY) {
                    self.sites.pop();
                    self.bounds.pop();
                    continue;
                }
                self.sites.push(q);
                self.bounds.push(s);
                break;
            }
        }
        if self.sites.is_empty() {
            for q in 0..f.len() {
                out(q, f64::INFINITY, q);
            }
            return;
        }
        let mut k = 0;
        for q in 0..f.len() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.sites[k];
            let d = q as f64 - p as f64;
            out(q, f[p] + d * d, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn small_intrinsics() -> CameraIntrinsics {
        CameraIntrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 32.0,
            cy: 24.0,
            width: 64,
            height: 48,
        }
    }

    fn quad(z: f64, half: f64) -> TriangleMesh {
        let v = alloc::vec![
            Vec3::new(-half, -half, z),
            Vec3::new(half, -half, z),
            Vec3::new(half, half, z),
            Vec3::new(-half, half, z),
        ];
        // Counter-clockwise seen from -z (the camera side): normal points to -z.
        TriangleMesh::new(v, alloc::vec![[0, 2, 1], [0, 3, 2]])
    }

    #[test]
    fn back_project_cases() {
        let k = small_intrinsics();
        assert_eq!(back_project(k.cx, k.cy, 1.0, &k).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        let p = back_project(k.cx + k.fx, k.cy, 2.0, &k).unwrap();
        assert!((p - Vec3::new(2.0, 0.0, 2.0)).norm() < 1e-15);
        assert_eq!(back_project(1.0, 1.0, 0.0, &k).unwrap_err(), Error::InvalidDepth);
        assert_eq!(back_project(1.0, 1.0, -1.0, &k).unwrap_err(), Error::InvalidDepth);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (u, v, d) = (
                rng.random_range(0.0..64.0),
                rng.random_range(0.0..48.0),
                rng.random_range(0.1..5.0),
            );
            let (pu, pv) = k.project(&back_project(u, v, d, &k).unwrap()).unwrap();
            assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
        }
    }

    #[test]
    fn render_plane_at_principal_point() {
        let k = small_intrinsics();
        let f = render_depth(&quad(2.0, 1.0), &RigidTransform::identity(), &k);
        assert!((f.at(32, 24) - 2.0).abs() < 1e-12);
        // Back-facing version is culled.
        let mut flipped = quad(2.0, 1.0);
        for t in &mut flipped.triangles {
            t.swap(1, 2);
        }
        let f = render_depth(&flipped, &RigidTransform::identity(), &k);
        assert_eq!(f.foreground_count(), 0);
        // Entirely behind the camera.
        let f = render_depth(&quad(-2.0, 1.0), &RigidTransform::identity(), &k);
        assert_eq!(f.foreground_count(), 0);
    }

    #[test]
    fn render_plane_round_trip_lies_on_plane() {
        let k = small_intrinsics();
        let tilt = RigidTransform::about_axis(&Vec3::new(0.0, 0.0, 2.0), &Vec3::x(), 0.4);
        let mesh = quad(2.0, 1.0);
        let f = render_depth(&mesh, &tilt, &k);
        let normal = tilt.rotate(&Vec3::new(0.0, 0.0, -1.0));
        let anchor = tilt.apply(&Vec3::new(0.0, 0.0, 2.0));
        let mut count = 0;
        for v in 0..k.height {
            for u in 0..k.width {
                if let Some(p) = f.point(u, v) {
                    assert!(normal.dot(&(p - anchor)).abs() < 1e-4);
                    count += 1;
                }
            }
        }
        assert!(count > 100);
    }

    #[test]
    fn render_matches_ray_cast_oracle() {
        let k = small_intrinsics();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let mut c = || {
                Vec3::new(
                    rng.random_range(-0.6..0.6),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(1.5..2.5),
                )
            };
            let (a, mut b, mut cc) = (c(), c(), c());
            if (b - a).cross(&(cc - a)).dot(&a) > 0.0 {
                core::mem::swap(&mut b, &mut cc);
            }
            let mesh = TriangleMesh::new(alloc::vec![a, b, cc], alloc::vec![[0, 1, 2]]);
            let f = render_depth(&mesh, &RigidTransform::identity(), &k);
            for v in 0..k.height {
                for u in 0..k.width {
                    // Moller-Trumbore against the same pixel ray.
                    let dir = k.ray(u as f64, v as f64);
                    let (e1, e2) = (b - a, cc - a);
                    let pvec = dir.cross(&e2);
                    let det = e1.dot(&pvec);
                    let tvec = -a;
                    let bu = tvec.dot(&pvec) / det;
                    let qvec = tvec.cross(&e1);
                    let bv = dir.dot(&qvec) / det;
                    let t = e2.dot(&qvec) / det;
                    let inside = bu >= 0.0 && bv >= 0.0 && bu + bv <= 1.0;
                    let got = f.at(u, v);
                    let margin = bu.min(bv).min(1.0 - bu - bv).abs();
                    if margin < 1e-6 {
                        continue;
                    }
                    if inside {
                        assert!((got - t).abs() < 1e-5, "{got} vs {t}");
                    } else {
                        assert_eq!(got, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn render_sphere_center_depth() {
        let k = small_intrinsics();
        let sphere = crate::scenes::uv_sphere(Vec3::new(0.0, 0.0, 2.0), 0.5, 64, 128);
        let f = render_depth(&sphere, &RigidTransform::identity(), &k);
        assert!((f.at(32, 24) - 1.5).abs() < 1e-3);
    }

    #[test]
    fn bilateral_constant_and_edges() {
        let k = small_intrinsics();
        let mut f = DepthFrame::empty(k, 0);
        f.depth.iter_mut().for_each(|d| *d = 1.7);
        f.set(3, 3, 0.0);
        let g = bilateral_filter(&f, 3.0, 0.03);
        for (i, (&a, &b)) in f.depth.iter().zip(&g.depth).enumerate() {
            assert!((a - b).abs() < 1e-12, "pixel {i}");
        }
        for v in 0..k.height {
            for u in 0..k.width {
                f.set(u, v, if u < 32 { 1.0 } else { 2.0 });
            }
        }
        let g = bilateral_filter(&f, 3.0, 0.05);
        assert!(g.depth.iter().all(|&d| !(d > 1.1 && d < 1.9)));
    }

    #[test]
    fn bilateral_reduces_plane_noise() {
        let k = small_intrinsics();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let noise = Normal::new(0.0, 0.005).unwrap();
        let mut f = DepthFrame::empty(k, 0);
        f.depth.iter_mut().for_each(|d| *d = 1.5 + noise.sample(&mut rng));
        let rms = |fr: &DepthFrame| {
            (fr.depth.iter().map(|d| (d - 1.5) * (d - 1.5)).sum::<f64>() / fr.depth.len() as f64)
                .sqrt()
        };
        let g = bilateral_filter(&f, 3.0, 0.03);
        assert!(rms(&g) < rms(&f));
    }

    fn plane_frame(k: &CameraIntrinsics, n: Vec3, c: f64) -> DepthFrame {
        let mut f = DepthFrame::empty(*k, 0);
        for v in 0..k.height {
            for u in 0..k.width {
                let ray = k.ray(u as f64, v as f64);
                f.set(u, v, c / n.dot(&ray));
            }
        }
        f
    }

    #[test]
    fn normals_of_analytic_planes() {
        let k = small_intrinsics();
        let f = plane_frame(&k, Vec3::new(0.0, 0.0, 1.0), 2.0);
        let nm = compute_normals(&f);
        let n = nm.at(10, 10).unwrap();
        assert!((n - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-6);
        assert!(nm.at(0, 10).is_none());
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let f = plane_frame(&k, Vec3::new(0.0, s, s), 2.0);
        let nm = compute_normals(&f);
        for (u, v) in [(10, 10), (32, 24), (50, 40)] {
            let n = nm.at(u, v).unwrap();
            assert!((n - Vec3::new(0.0, -s, -s)).norm() < 1e-3);
        }
    }

    #[test]
    fn normals_of_rendered_sphere() {
        let k = small_intrinsics();
        let center = Vec3::new(0.0, 0.0, 1.2);
        let sphere = crate::scenes::uv_sphere(center, 0.3, 96, 192);
        let f = render_depth(&sphere, &RigidTransform::identity(), &k);
        let nm = compute_normals(&f);
        let mut checked = 0;
        for v in 0..k.height {
            for u in 0..k.width {
                let (Some(n), Some(p)) = (nm.at(u, v), f.point(u, v)) else {
                    continue;
                };
                let truth = (p - center).normalize();
                // Skip grazing silhouette pixels where neighbours straddle the limb.
                if truth.dot(&(-p.normalize())) < 0.3 {
                    continue;
                }
                let angle = n.dot(&truth).clamp(-1.0, 1.0).acos().to_degrees();
                assert!(angle < 2.0, "{angle} at {u},{v}");
                checked += 1;
            }
        }
        assert!(checked > 200);
    }

    fn brute_force_dt(mask: &[bool], w: usize, h: usize) -> Vec<f64> {
        let contour = contour_mask(mask, w, h);
        let pts: Vec<(usize, usize)> = (0..w * h).filter(|&i| contour[i]).map(|i| (i % w, i / w)).collect();
        (0..w * h)
            .map(|i| {
                let (u, v) = (i % w, i / w);
                pts.iter()
                    .map(|&(x, y)| {
                        let (dx, dy) = (x as f64 - u as f64, y as f64 - v as f64);
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .collect()
    }

    #[test]
    fn dt_single_pixel() {
        let (w, h) = (20, 20);
        let mut mask = alloc::vec![false; w * h];
        mask[5 * w + 5] = true;
        let dt = distance_transform_mask(&mask, w, h).unwrap();
        assert_eq!(dt.distance(5, 5), 0.0);
        assert_eq!(dt.distance(8, 9), 5.0);
        assert_eq!(dt.nearest(8, 9), (5, 5));
    }

    #[test]
    fn dt_rectangle_interior() {
        let (w, h) = (30, 20);
        let mut mask = alloc::vec![false; w * h];
        for v in 4..16 {
            for u in 5..25 {
                mask[v * w + u] = true;
            }
        }
        let dt = distance_transform_mask(&mask, w, h).unwrap();
        for v in 4..16usize {
            for u in 5..25usize {
                let d = (u - 5).min(24 - u).min(v - 4).min(15 - v) as f64;
                assert_eq!(dt.distance(u, v), d);
            }
        }
    }

    #[test]
    fn dt_matches_brute_force_on_random_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let (w, h) = (rng.random_range(8..40), rng.random_range(8..40));
            let mut mask = alloc::vec![false; w * h];
            for _ in 0..4 {
                let (cu, cv, r) = (
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                    rng.random_range(1.0..8.0),
                );
                for v in 0..h {
                    for u in 0..w {
                        if (u as f64 - cu).powi(2) + (v as f64 - cv).powi(2) <= r * r {
                            mask[v * w + u] = true;
                        }
                    }
                }
            }
            if !mask.iter().any(|&m| m) {
                continue;
            }
            let dt = distance_transform_mask(&mask, w, h).unwrap();
            let oracle = brute_force_dt(&mask, w, h);
            assert_eq!(dt.dt, oracle);
            for v in 0..h {
                for u in 0..w {
                    let (x, y) = dt.nearest(u, v);
                    let d = ((x as f64 - u as f64).powi(2) + (y as f64 - v as f64).powi(2)).sqrt();
                    assert_eq!(d, dt.distance(u, v));
                }
            }
            // Lipschitz between 4-neighbours.
            for v in 0..h {
                for u in 0..w - 1 {
                    assert!((dt.distance(u, v) - dt.distance(u + 1, v)).abs() <= 2f64.sqrt());
                }
            }
        }
    }

    #[test]
    fn dt_requires_foreground() {
        let f = DepthFrame::empty(small_intrinsics(), 0);
        assert_eq!(distance_transform(&f).unwrap_err(), Error::NoForeground);
    }
}
