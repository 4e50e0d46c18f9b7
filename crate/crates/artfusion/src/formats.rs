//! On-disk formats: raw depth sequences, meshes and CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use artfusion_core::depth::{CameraIntrinsics, DepthFrame};
use artfusion_core::math::RigidTransform;
use artfusion_core::warp::{Node, NodeGraph};
use artfusion_core::{TriangleMesh, Twist, Vec3};

use crate::error::{Error, Result};

/// Name of the sequence manifest inside a sequence directory.
pub const MANIFEST_FILE: &str = "sequence.txt";

/// Default file-name pattern of raw depth frames.
pub const DEFAULT_PATTERN: &str = "depth_%04d.raw";

/// Description of a raw depth sequence: camera geometry, frame count and the
/// file-name pattern (`%0Nd` is replaced by the zero-padded frame index).
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceManifest {
    pub intrinsics: CameraIntrinsics,
    pub frames: usize,
    pub pattern: String,
}

impl SequenceManifest {
    pub fn to_text(&self) -> String {
        let k = &self.intrinsics;
        format!(
            "width={}\nheight={}\nfx={}\nfy={}\ncx={}\ncy={}\nframes={}\npattern={}\n",
            k.width, k.height, k.fx, k.fy, k.cx, k.cy, self.frames, self.pattern
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let get = |key: &str| -> Result<&str> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Format(format!("manifest is missing `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| Error::Format(format!("manifest `{key}` is not a number")))
        };
        let int = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|_| Error::Format(format!("manifest `{key}` is not an integer")))
        };
        let intrinsics = CameraIntrinsics {
            fx: num("fx")?,
            fy: num("fy")?,
            cx: num("cx")?,
            cy: num("cy")?,
            width: int("width")?,
            height: int("height")?,
        };
        if !intrinsics.is_valid() {
            return Err(Error::Format("manifest intrinsics are invalid".into()));
        }
        Ok(Self {
            intrinsics,
            frames: int("frames")?,
            pattern: get("pattern").unwrap_or(DEFAULT_PATTERN).to_string(),
        })
    }

    pub fn frame_name(&self, index: usize) -> String {
        format_index(&self.pattern, index)
    }
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Replaces the first `%d` or `%0Nd` in `pattern` with `index`.
pub fn format_index(pattern: &str, index: usize) -> String {
    if let Some(start) = pattern.find('%') {
        let rest = &pattern[start + 1..];
        if let Some(end) = rest.find('d') {
            let spec = &rest[..end];
            if spec.chars().all(|c| c.is_ascii_digit()) {
                let width: usize = spec.trim_start_matches('0').parse().unwrap_or(0);
                return format!("{}{:0width$}{}", &pattern[..start], index, &rest[end + 1..]);
            }
        }
    }
    format!("{pattern}{index}")
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Encodes depth as 16-bit little-endian millimeters, row-major.
pub fn encode_raw_depth(frame: &DepthFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.depth.len() * 2);
    for &d in &frame.depth {
        let mm = if d.is_finite() && d > 0.0 {
            (d * 1000.0).round().clamp(0.0, u16::MAX as f64) as u16
        } else {
            0
        };
        out.extend_from_slice(&mm.to_le_bytes());
    }
    out
}

pub fn decode_raw_depth(bytes: &[u8], intrinsics: CameraIntrinsics, frame_index: usize) -> Result<DepthFrame> {
    let n = intrinsics.width * intrinsics.height;
    if bytes.len() != 2 * n {
        return Err(Error::Format(format!(
            "raw depth frame {frame_index} has {} bytes, expected {}",
            bytes.len(),
            2 * n
        )));
    }
    let mut frame = DepthFrame::empty(intrinsics, frame_index);
    for (d, b) in frame.depth.iter_mut().zip(bytes.chunks_exact(2)) {
        *d = u16::from_le_bytes([b[0], b[1]]) as f64 / 1000.0;
    }
    Ok(frame)
}

/// A raw depth sequence directory opened through its manifest.
#[derive(Clone, Debug)]
pub struct RawSequence {
    pub dir: PathBuf,
    pub manifest: SequenceManifest,
}

impl RawSequence {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = SequenceManifest::parse(&read_text(&dir.join(MANIFEST_FILE))?)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn read_frame(&self, index: usize) -> Result<DepthFrame> {
        let path = self.dir.join(self.manifest.frame_name(index));
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        decode_raw_depth(&bytes, self.manifest.intrinsics, index)
    }

    /// Writes a manifest and one raw file per frame.
    pub fn write(dir: &Path, frames: &[DepthFrame]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Format("cannot write an empty sequence".into()))?;
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let manifest = SequenceManifest {
            intrinsics: first.intrinsics,
            frames: frames.len(),
            pattern: DEFAULT_PATTERN.to_string(),
        };
        for (i, f) in frames.iter().enumerate() {
            let path = dir.join(manifest.frame_name(i));
            fs::write(&path, encode_raw_depth(f)).map_err(|e| io_err(&path, e))?;
        }
        write_file(&dir.join(MANIFEST_FILE), &manifest.to_text())?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }
}

fn mesh_normal(mesh: &TriangleMesh, i: usize) -> Vec3 {
    mesh.normals.get(i).copied().unwrap_or_else(Vec3::zeros)
}

/// ASCII PLY with per-vertex normals.
pub fn mesh_to_ply(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property float nx\nproperty float ny\nproperty float nz\nelement face {}\n\
         property list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    for (i, v) in mesh.vertices.iter().enumerate() {
        let n = mesh_normal(mesh, i);
        let _ = writeln!(s, "{} {} {} {} {} {}", v.x, v.y, v.z, n.x, n.y, n.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// OBJ with `vn` normals; faces reference matching vertex and normal indices.
pub fn mesh_to_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for i in 0..mesh.vertices.len() {
        let n = mesh_normal(mesh, i);
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        let _ = writeln!(s, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    s
}

/// Reads back an ASCII PLY written by [`mesh_to_ply`].
pub fn parse_ply(text: &str) -> Result<TriangleMesh> {
    let bad = |m: &str| Error::Format(format!("ply: {m}"));
    let mut lines = text.lines();
    let (mut nv, mut nf) = (None, None);
    for line in lines.by_ref() {
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some("element"), Some("vertex"), Some(n)) => nv = n.parse::<usize>().ok(),
            (Some("element"), Some("face"), Some(n)) => nf = n.parse::<usize>().ok(),
            (Some("end_header"), _, _) => break,
            _ => {}
        }
    }
    let (nv, nf) = (nv.ok_or_else(|| bad("no vertex count"))?, nf.ok_or_else(|| bad("no face count"))?);
    let mut vertices = Vec::with_capacity(nv);
    let mut normals = Vec::with_capacity(nv);
    for _ in 0..nv {
        let vals: Vec<f64> = lines
            .next()
            .ok_or_else(|| bad("truncated vertices"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad vertex")))
            .collect::<Result<_>>()?;
        if vals.len() < 6 {
            return Err(bad("vertex needs 6 values"));
        }
        vertices.push(Vec3::new(vals[0], vals[1], vals[2]));
        normals.push(Vec3::new(vals[3], vals[4], vals[5]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let vals: Vec<u32> = lines
            .next()
            .ok_or_else(|| bad("truncated faces"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad face")))
            .collect::<Result<_>>()?;
        if vals.len() != 4 || vals[0] != 3 || vals[1..].iter().any(|&i| i as usize >= nv) {
            return Err(bad("faces must be valid triangles"));
        }
        triangles.push([vals[1], vals[2], vals[3]]);
    }
    Ok(TriangleMesh {
        vertices,
        normals,
        triangles,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Node snapshot: `node_id,x,y,z,sigma,cluster` (cluster empty when unassigned).
pub fn nodes_to_csv(graph: &NodeGraph) -> String {
    let mut s = String::from("node_id,x,y,z,sigma,cluster\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        let c = if n.cluster == artfusion_core::warp::UNASSIGNED {
            String::new()
        } else {
            n.cluster.to_string()
        };
        let _ = writeln!(s, "{i},{},{},{},{},{c}", n.x.x, n.x.y, n.x.z, n.sigma);
    }
    s
}

fn csv_rows(text: &str, header: &str) -> Result<Vec<Vec<String>>> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default().trim();
    if first != header {
        return Err(Error::Format(format!("expected CSV header `{header}`, found `{first}`")));
    }
    let cols = header.split(',').count();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let row: Vec<String> = l.split(',').map(|c| c.trim().to_string()).collect();
            if row.len() == cols {
                Ok(row)
            } else {
                Err(Error::Format(format!("CSV row `{l}` has {} columns, expected {cols}", row.len())))
            }
        })
        .collect()
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad CSV value `{s}`")))
}

pub fn nodes_from_csv(text: &str) -> Result<Vec<Node>> {
    csv_rows(text, "node_id,x,y,z,sigma,cluster")?
        .iter()
        .map(|r| {
            Ok(Node {
                x: Vec3::new(num(&r[1])?, num(&r[2])?, num(&r[3])?),
                sigma: num(&r[4])?,
                cluster: if r[5].is_empty() {
                    artfusion_core::warp::UNASSIGNED
                } else {
                    num(&r[5])?
                },
            })
        })
        .collect()
}

/// Per-node cluster labels: `node_id,cluster`.
pub fn labels_to_csv(labels: &[u32]) -> String {
    let mut s = String::from("node_id,cluster\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(s, "{i},{l}");
    }
    s
}

pub fn labels_from_csv(text: &str) -> Result<Vec<u32>> {
    csv_rows(text, "node_id,cluster")?.iter().map(|r| num(&r[1])).collect()
}

const WARP_HEADER: &str = "node_id,wx,wy,wz,vx,vy,vz";

/// Level-2 node transforms as twists: `node_id,wx,wy,wz,vx,vy,vz`.
pub fn warp_to_csv(transforms: &[RigidTransform]) -> String {
    let mut s = format!("{WARP_HEADER}\n");
    for (i, t) in transforms.iter().enumerate() {
        let [a, b, c, d, e, f] = t.log().to_array();
        let _ = writeln!(s, "{i},{a},{b},{c},{d},{e},{f}");
    }
    s
}

pub fn warp_from_csv(text: &str) -> Result<Vec<RigidTransform>> {
    csv_rows(text, WARP_HEADER)?
        .iter()
        .map(|r| {
            let vals: Vec<f64> = r[1..].iter().map(|v| num(v)).collect::<Result<_>>()?;
            Ok(artfusion_core::math::twist_exp(&Twist::from_slice(&vals)))
        })
        .collect()
}

/// Canonical ground-truth vertices with their part: `vertex_id,part,x,y,z`.
pub fn gt_vertices_to_csv(vertices: &[Vec3], parts: &[usize]) -> String {
    let mut s = String::from("vertex_id,part,x,y,z\n");
    for (i, (v, p)) in vertices.iter().zip(parts).enumerate() {
        let _ = writeln!(s, "{i},{p},{},{},{}", v.x, v.y, v.z);
    }
    s
}

pub fn gt_vertices_from_csv(text: &str) -> Result<(Vec<Vec3>, Vec<usize>)> {
    let rows = csv_rows(text, "vertex_id,part,x,y,z")?;
    let mut vs = Vec::with_capacity(rows.len());
    let mut parts = Vec::with_capacity(rows.len());
    for r in rows {
        parts.push(num(&r[1])?);
        vs.push(Vec3::new(num(&r[2])?, num(&r[3])?, num(&r[4])?));
    }
    Ok((vs, parts))
}

/// Marker trajectories: `frame,marker,vertex_id,x,y,z`.
pub fn gt_markers_to_csv(marker_ids: &[u32], frames: &[Vec<Vec3>]) -> String {
    let mut s = String::from("frame,marker,vertex_id,x,y,z\n");
    for (f, pts) in frames.iter().enumerate() {
        for (m, (id, p)) in marker_ids.iter().zip(pts).enumerate() {
            let _ = writeln!(s, "{f},{m},{id},{},{},{}", p.x, p.y, p.z);
        }
    }
    s
}

/// Returns marker vertex ids and per-frame marker positions.
pub fn gt_markers_from_csv(text: &str) -> Result<(Vec<u32>, Vec<Vec<Vec3>>)> {
    let rows = csv_rows(text, "frame,marker,vertex_id,x,y,z")?;
    let mut ids = Vec::new();
    let mut frames: Vec<Vec<Vec3>> = Vec::new();
    for r in rows {
        let (f, m): (usize, usize) = (num(&r[0])?, num(&r[1])?);
        if f == frames.len() {
            frames.push(Vec::new());
        }
        if f + 1 != frames.len() || m != frames[f].len() {
            return Err(Error::Format("marker rows must be sorted by frame and marker".into()));
        }
        if f == 0 {
            ids.push(num(&r[2])?);
        }
        frames[f].push(Vec3::new(num(&r[3])?, num(&r[4])?, num(&r[5])?));
    }
    if frames.iter().any(|f| f.len() != ids.len()) {
        return Err(Error::Format("every frame needs the same markers".into()));
    }
    Ok((ids, frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_formatting() {
        assert_eq!(format_index("depth_%04d.raw", 7), "depth_0007.raw");
        assert_eq!(format_index("f%d.raw", 12), "f12.raw");
        assert_eq!(format_index("plain", 3), "plain3");
    }

    #[test]
    fn manifest_round_trip() {
        let m = SequenceManifest {
            intrinsics: CameraIntrinsics::default(),
            frames: 12,
            pattern: DEFAULT_PATTERN.into(),
        };
        assert_eq!(SequenceManifest::parse(&m.to_text()).unwrap(), m);
        assert!(SequenceManifest::parse("width=3\n").is_err());
    }

    #[test]
    fn raw_depth_is_millimeter_le() {
        let k = CameraIntrinsics {
            fx: 1.0,
            fy: 1.0,
            cx: 0.0,
            cy: 0.0,
            width: 2,
            height: 1,
        };
        let mut f = DepthFrame::empty(k, 0);
        f.set(0, 0, 1.2344);
        f.set(1, 0, 0.0);
        let bytes = encode_raw_depth(&f);
        assert_eq!(bytes, vec![0xD2, 0x04, 0, 0]);
        let back = decode_raw_depth(&bytes, k, 0).unwrap();
        assert_eq!(back.depth, vec![1.234, 0.0]);
        assert!(decode_raw_depth(&bytes[..3], k, 0).is_err());
    }
}
