//! Scoring a run against synthetic ground truth.

use std::fmt::Write as _;
use std::path::Path;

use artfusion_core::math::RigidTransform;
use artfusion_core::scenes::{evaluate, MetricsReport};
use artfusion_core::spatial::PointGrid;
use artfusion_core::warp::{node_weights, warp_by_nodes, Node, NodeGraph, WeightKernel};
use artfusion_core::Vec3;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::{self, read_text};
use crate::pipeline::{frame_file, RunOutput, REPORT_HEADER};
use crate::scene_io::{GT_MARKERS_FILE, GT_VERTICES_FILE};

/// Canonical labeled surface and marker trajectories of a synthetic scene.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthData {
    pub canonical: Vec<Vec3>,
    pub parts: Vec<usize>,
    pub marker_ids: Vec<u32>,
    /// Marker positions per frame; frame 0 is the canonical pose.
    pub markers: Vec<Vec<Vec3>>,
}

impl GroundTruthData {
    pub fn from_scene(scene: &artfusion_core::scenes::ArticulatedScene) -> Self {
        let gt = scene.ground_truth();
        Self {
            canonical: gt.frames[0].clone(),
            parts: gt.labels.clone(),
            markers: (0..gt.frames.len()).map(|f| gt.marker_trajectory(f)).collect(),
            marker_ids: gt.marker_ids,
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let (canonical, parts) = formats::gt_vertices_from_csv(&read_text(&dir.join(GT_VERTICES_FILE))?)?;
        let (marker_ids, markers) = formats::gt_markers_from_csv(&read_text(&dir.join(GT_MARKERS_FILE))?)?;
        if markers.is_empty() {
            return Err(Error::Format("ground truth has no frames".into()));
        }
        Ok(Self {
            canonical,
            parts,
            marker_ids,
            markers,
        })
    }

    /// Part of the nearest canonical ground-truth vertex of every point.
    pub fn label_points(&self, points: &[Vec3]) -> Vec<usize> {
        let grid = PointGrid::new(&self.canonical, 0.01);
        points.iter().map(|p| self.parts[grid.knn(p, 1)[0].0]).collect()
    }
}

/// Deforms canonical `points` with per-node transforms, skinned over the `k`
/// nearest nodes.
pub fn warp_points(
    nodes: &[Node],
    transforms: &[RigidTransform],
    points: &[Vec3],
    k: usize,
    kernel: WeightKernel,
) -> Vec<Vec3> {
    let graph = NodeGraph {
        nodes: nodes.to_vec(),
        edges: vec![Vec::new(); nodes.len()],
        generation: 0,
    };
    let index = graph.index();
    points
        .iter()
        .map(|p| {
            let ids: Vec<usize> = index.knn(p, k).iter().map(|e| e.0).collect();
            let w = node_weights(p, &graph, &ids, kernel);
            warp_by_nodes(p, &w, transforms)
        })
        .collect()
}

/// Scores per-frame node transforms and final labels.
///
/// `frames[f]` holds the nodes and their transforms at frame `f`.
pub fn evaluate_frames(
    frames: &[(Vec<Node>, Vec<RigidTransform>)],
    final_labels: &[u32],
    gt: &GroundTruthData,
    k: usize,
    kernel: WeightKernel,
) -> Result<MetricsReport> {
    if frames.len() != gt.markers.len() {
        return Err(Error::Mismatch(format!(
            "run has {} frames, ground truth has {}",
            frames.len(),
            gt.markers.len()
        )));
    }
    let predicted: Vec<Vec<Vec3>> = frames
        .iter()
        .map(|(nodes, ts)| warp_points(nodes, ts, &gt.markers[0], k, kernel))
        .collect();
    let errors: Vec<f64> = predicted
        .iter()
        .zip(&gt.markers)
        .flat_map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b).norm()))
        .collect();
    let last_nodes = frames.last().map(|f| f.0.as_slice()).unwrap_or_default();
    if final_labels.len() != last_nodes.len() {
        return Err(Error::Mismatch(format!(
            "{} labels for {} nodes",
            final_labels.len(),
            last_nodes.len()
        )));
    }
    let positions: Vec<Vec3> = last_nodes.iter().map(|n| n.x).collect();
    let truth = gt.label_points(&positions);
    evaluate(&predicted, &gt.markers, final_labels, &truth, &errors).map_err(|source| Error::Core {
        frame: frames.len() - 1,
        source,
    })
}

/// Scores an in-memory run.
pub fn evaluate_run(run: &RunOutput, gt: &GroundTruthData, k: usize, kernel: WeightKernel) -> Result<MetricsReport> {
    let all = &run.state.graph.nodes;
    let frames: Vec<_> = run
        .records
        .iter()
        .map(|r| (all[..r.warp.level2.len()].to_vec(), r.warp.level2.clone()))
        .collect();
    let labels = final_labels(run);
    evaluate_frames(&frames, &labels, gt, k, kernel)
}

fn final_labels(run: &RunOutput) -> Vec<u32> {
    match run.records.last().and_then(|r| r.clustering.as_ref()) {
        Some(c) => c.labels.clone(),
        None => vec![0; run.state.graph.len()],
    }
}

/// Mean per-frame stage timings in milliseconds, in column order
/// Init, DT, Level 1, Level 2, TSDF, Seg, Total.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TimingSummary {
    pub columns: [f64; 7],
    pub frames: usize,
}

pub const TIMING_COLUMNS: [&str; 7] = ["Init", "DT", "Level 1", "Level 2", "TSDF", "Seg", "Total"];

/// Averages `report.csv` timings over tracked frames (all frames after the first,
/// or the first alone).
pub fn timing_summary(report_csv: &str) -> Result<(usize, TimingSummary)> {
    let mut lines = report_csv.lines();
    if lines.next().map(str::trim) != Some(REPORT_HEADER) {
        return Err(Error::Format("report.csv has an unexpected header".into()));
    }
    let rows: Vec<Vec<f64>> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad report value `{v}`"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let used: Vec<&Vec<f64>> = if rows.len() > 1 { rows[1..].iter().collect() } else { rows.iter().collect() };
    let mut s = TimingSummary {
        frames: used.len(),
        ..Default::default()
    };
    for r in &used {
        if r.len() != 13 {
            return Err(Error::Format("report.csv row has the wrong column count".into()));
        }
        for (c, v) in s.columns.iter_mut().zip(&r[6..13]) {
            *c += v;
        }
    }
    if !used.is_empty() {
        for c in &mut s.columns {
            *c /= used.len() as f64;
        }
    }
    Ok((rows.len(), s))
}

/// Report text: accuracy, marker errors, error histogram and timing table.
pub fn report_text(report: &MetricsReport, timing: &TimingSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "segmentation_accuracy={:.4}", report.accuracy);
    let _ = writeln!(s, "mean_marker_error_mm={:.3}", report.mean_marker_error() * 1e3);
    let _ = writeln!(s, "max_marker_error_mm={:.3}", report.max_marker_error() * 1e3);
    let _ = writeln!(s, "frames={}", report.frames.len());
    s.push_str("\nerror histogram (marker errors over all frames)\n");
    for (i, count) in report.histogram.iter().enumerate() {
        let lo = i as f64 * report.bin_width * 1e3;
        if i + 1 == report.histogram.len() {
            let _ = writeln!(s, ">={lo:>5.1} mm  {count}");
        } else {
            let _ = writeln!(s, "{lo:>5.1}-{:<5.1} mm  {count}", lo + report.bin_width * 1e3);
        }
    }
    let _ = writeln!(s, "\naverage time per frame (ms) over {} frames", timing.frames);
    let _ = writeln!(s, "{}", TIMING_COLUMNS.map(|c| format!("{c:>8}")).join(""));
    let _ = writeln!(s, "{}", timing.columns.map(|v| format!("{v:>8.2}")).join(""));
    s
}

pub fn report_csv(report: &MetricsReport) -> String {
    let mut s = String::from("frame,mean_error_m,max_error_m\n");
    for (i, f) in report.frames.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{}", f.mean, f.max);
    }
    s
}

/// Scores the exports of `run_dir` against the ground truth in `truth_dir`
/// and writes `metrics.txt` and `metrics.csv` into `run_dir`.
pub fn metrics_command(run_dir: &Path, truth_dir: &Path) -> Result<(MetricsReport, TimingSummary)> {
    let gt = GroundTruthData::load(truth_dir)?;
    let frames = gt.markers.len();
    let mut missing = Vec::new();
    let mut need = |p: std::path::PathBuf| {
        if !p.is_file() {
            missing.push(p.display().to_string());
        }
        p
    };
    let config_path = need(run_dir.join("config.txt"));
    let report_path = need(run_dir.join("report.csv"));
    let files: Vec<_> = (0..frames)
        .map(|f| {
            (
                need(frame_file(run_dir, "nodes", f, "csv")),
                need(frame_file(run_dir, "warp", f, "csv")),
            )
        })
        .collect();
    // A single-frame run has no segmentation yet.
    let labels_path = (frames > 1).then(|| need(frame_file(run_dir, "labels", frames - 1, "csv")));
    if !missing.is_empty() {
        // A run with a different length is a mismatch, not a missing export.
        if report_path.is_file() {
            let (run_frames, _) = timing_summary(&read_text(&report_path)?)?;
            if run_frames != frames {
                return Err(Error::Mismatch(format!(
                    "run has {run_frames} frames, ground truth has {frames}"
                )));
            }
        }
        return Err(Error::MissingExports(missing));
    }
    let config = PipelineConfig::load(&config_path)?;
    let (run_frames, timing) = timing_summary(&read_text(&report_path)?)?;
    if run_frames != frames {
        return Err(Error::Mismatch(format!(
            "run has {run_frames} frames, ground truth has {frames}"
        )));
    }
    let per_frame: Vec<(Vec<Node>, Vec<RigidTransform>)> = files
        .iter()
        .map(|(n, w)| {
            let nodes = formats::nodes_from_csv(&read_text(n)?)?;
            let warp = formats::warp_from_csv(&read_text(w)?)?;
            if nodes.len() != warp.len() {
                return Err(Error::Format(format!("{} and {} disagree in length", n.display(), w.display())));
            }
            Ok((nodes, warp))
        })
        .collect::<Result<_>>()?;
    let labels = match &labels_path {
        Some(p) => formats::labels_from_csv(&read_text(p)?)?,
        None => vec![0; per_frame.last().map_or(0, |f| f.0.len())],
    };
    let report = evaluate_frames(&per_frame, &labels, &gt, config.k, config.kernel)?;
    formats::write_file(&run_dir.join("metrics.txt"), &report_text(&report, &timing))?;
    formats::write_file(&run_dir.join("metrics.csv"), &report_csv(&report))?;
    Ok((report, timing))
}
