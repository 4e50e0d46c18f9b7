//! The per-frame reconstruction loop and its exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use artfusion_core::depth::{bilateral_filter, compute_normals, distance_transform, DepthFrame};
use artfusion_core::registration::{
    cluster_level_ready, compute_skin, solve_level, warp_model_vertex, IterationRecord, Model, PreparedFrame,
};
use artfusion_core::scenes::{build_scene, ArticulatedScene};
use artfusion_core::segmentation::{segment_frame, Clustering, SegmentationPolicy};
use artfusion_core::tsdf::{
    extract_mesh, integrate, refresh_knn_field, update_knn_field, KnnField, TsdfVolume, WarpContext,
};
use artfusion_core::warp::{sample_nodes, update_graph, Level, NodeGraph, WarpField};
use artfusion_core::{TriangleMesh, Vec3};

use crate::config::{InputSource, MeshFormat, PipelineConfig, VolumeCenter};
use crate::error::{Error, Result};
use crate::formats::{self, RawSequence};

/// Wall-clock milliseconds per stage of one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    /// Range masking and bilateral filtering.
    pub init: f64,
    /// Normals and distance transform.
    pub dt: f64,
    pub level1: f64,
    pub level2: f64,
    /// Fusion, mesh extraction, graph growth and k-NN field upkeep.
    pub tsdf: f64,
    pub seg: f64,
    pub total: f64,
}

impl Timings {
    pub fn stage_sum(&self) -> f64 {
        self.init + self.dt + self.level1 + self.level2 + self.tsdf + self.seg
    }
}

/// Everything the loop produced for one frame.
#[derive(Clone, Debug)]
pub struct FrameRecord {
    pub frame: usize,
    /// Warp from the canonical frame to this frame.
    pub warp: WarpField,
    pub clustering: Option<Clustering>,
    pub iterations: Vec<IterationRecord>,
    /// Final fit and regularizer energies (zero on the first frame).
    pub e_fit: f64,
    pub e_reg: f64,
    pub node_count: usize,
    pub rejected_voxels: usize,
    pub timings: Timings,
}

impl FrameRecord {
    pub fn cluster_count(&self) -> usize {
        self.clustering.as_ref().map_or(0, |c| c.m())
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn core_err(frame: usize) -> impl Fn(artfusion_core::Error) -> Error {
    move |e| match e {
        artfusion_core::Error::TrackingLost | artfusion_core::Error::NoForeground => Error::TrackingLost { frame },
        source => Error::Core { frame, source },
    }
}

/// Reconstruction state carried from frame to frame.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    config: PipelineConfig,
    policy: SegmentationPolicy,
    pub volume: Option<TsdfVolume>,
    pub graph: NodeGraph,
    pub warp: WarpField,
    /// Current canonical surface.
    pub mesh: TriangleMesh,
    pub clustering: Option<Clustering>,
    field: Option<KnnField>,
    frames_seen: usize,
    last_full_field: usize,
}

impl Reconstruction {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            policy: config.segmentation_policy(),
            volume: None,
            graph: NodeGraph::default(),
            warp: WarpField::default(),
            mesh: TriangleMesh::default(),
            clustering: None,
            field: None,
            frames_seen: 0,
            last_full_field: 0,
        })
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Runs one frame through the loop.
    pub fn process(&mut self, raw: &DepthFrame) -> Result<FrameRecord> {
        let index = self.frames_seen;
        let err = core_err(index);
        let start = Instant::now();
        let mut timings = Timings::default();

        let t = Instant::now();
        let mut depth = raw.clone();
        depth.apply_range_mask(self.config.max_range);
        if self.config.sigma_space > 0.0 && self.config.sigma_depth > 0.0 {
            depth = bilateral_filter(&depth, self.config.sigma_space, self.config.sigma_depth);
        }
        timings.init = ms(t);
        if depth.foreground_count() == 0 {
            return Err(Error::TrackingLost { frame: index });
        }

        let record = if index == 0 {
            self.first_frame(&depth, &mut timings)?
        } else {
            let t = Instant::now();
            let frame = PreparedFrame {
                normals: compute_normals(&depth),
                dt: distance_transform(&depth).map_err(&err)?,
                depth,
            };
            timings.dt = ms(t);
            self.next_frame(&frame, &mut timings)?
        };
        self.frames_seen += 1;
        timings.total = ms(start);
        Ok(FrameRecord { timings, ..record })
    }

    fn first_frame(&mut self, depth: &DepthFrame, timings: &mut Timings) -> Result<FrameRecord> {
        let err = core_err(0);
        let t = Instant::now();
        let center = match self.config.center {
            VolumeCenter::Fixed(c) => c,
            VolumeCenter::Auto => foreground_centroid(depth),
        };
        let mut volume = TsdfVolume::centered(self.config.dims, self.config.voxel_size, center);
        volume.truncation = self.config.truncation();
        volume.max_weight = self.config.max_weight;
        let stats = integrate(&mut volume, depth, None);
        self.mesh = extract_mesh(&volume);
        if self.mesh.is_empty() {
            return Err(Error::Core {
                frame: 0,
                source: artfusion_core::Error::EmptyMesh,
            });
        }
        self.graph = sample_nodes(&self.mesh, self.config.node_spacing).map_err(&err)?;
        self.warp = WarpField::identity(0, self.graph.len());
        self.field = Some(update_knn_field(&volume, &self.graph, self.config.k, self.config.kernel).map_err(&err)?);
        self.volume = Some(volume);
        timings.tsdf = ms(t);
        Ok(FrameRecord {
            frame: 0,
            warp: self.warp.clone(),
            clustering: None,
            iterations: Vec::new(),
            e_fit: 0.0,
            e_reg: 0.0,
            node_count: self.graph.len(),
            rejected_voxels: stats.rejected,
            timings: Timings::default(),
        })
    }

    fn next_frame(&mut self, frame: &PreparedFrame, timings: &mut Timings) -> Result<FrameRecord> {
        let index = self.frames_seen;
        let err = core_err(index);
        let settings = &self.config.solver;

        let skin = compute_skin(&self.mesh, &self.graph, self.config.k, self.config.kernel).map_err(&err)?;
        let model = Model {
            mesh: &self.mesh,
            graph: &self.graph,
            skin: &skin,
        };
        let mut iterations = Vec::new();
        let mut warp = self.warp.clone();
        if cluster_level_ready(&self.graph, &warp) {
            let t = Instant::now();
            let (w, r) = solve_level(Level::Cluster, &model, &warp, frame, settings).map_err(&err)?;
            warp = w;
            iterations.extend(r);
            timings.level1 = ms(t);
        }
        let t = Instant::now();
        let (w, r) = solve_level(Level::Node, &model, &warp, frame, settings).map_err(&err)?;
        warp = w;
        iterations.extend(r);
        timings.level2 = ms(t);
        let (e_fit, e_reg) = iterations.last().map_or((0.0, 0.0), |r| (r.e_fit, r.e_reg));

        let t = Instant::now();
        let volume = self.volume.as_mut().expect("volume exists after the first frame");
        let field = self.field.as_mut().expect("field exists after the first frame");
        let stats = integrate(
            volume,
            &frame.depth,
            Some(WarpContext {
                warp: &warp,
                field,
            }),
        );
        let mesh = extract_mesh(volume);
        if !mesh.is_empty() {
            self.mesh = mesh;
        }
        let grown = update_graph(&mut self.graph, &mut warp, &self.mesh, self.config.node_spacing);
        if index - self.last_full_field >= self.config.knn_refresh_every {
            *field = update_knn_field(volume, &self.graph, self.config.k, self.config.kernel).map_err(&err)?;
            self.last_full_field = index;
        } else if !grown.inserted.is_empty() {
            refresh_knn_field(field, volume, &self.graph, &grown.inserted);
        }
        timings.tsdf = ms(t);

        let t = Instant::now();
        let live = warp.node_positions(&self.graph);
        let outcome = segment_frame(self.clustering.as_ref(), &self.graph, &live, &self.policy).map_err(&err)?;
        for (node, &label) in self.graph.nodes.iter_mut().zip(&outcome.clustering.labels) {
            node.cluster = label;
        }
        warp.level1 = outcome
            .clustering
            .transforms(&self.graph.positions(), &live)
            .map_err(&err)?;
        timings.seg = ms(t);

        self.warp = warp;
        self.clustering = Some(outcome.clustering);
        Ok(FrameRecord {
            frame: index,
            warp: self.warp.clone(),
            clustering: self.clustering.clone(),
            iterations,
            e_fit,
            e_reg,
            node_count: self.graph.len(),
            rejected_voxels: stats.rejected,
            timings: Timings::default(),
        })
    }

    /// The canonical surface deformed into the current frame.
    pub fn live_mesh(&self) -> Result<TriangleMesh> {
        let skin = compute_skin(&self.mesh, &self.graph, self.config.k, self.config.kernel)
            .map_err(core_err(self.frames_seen.saturating_sub(1)))?;
        let model = Model {
            mesh: &self.mesh,
            graph: &self.graph,
            skin: &skin,
        };
        let vertices = (0..self.mesh.vertices.len())
            .map(|i| warp_model_vertex(&model, &self.warp, Level::Node, i))
            .collect();
        Ok(TriangleMesh::new(vertices, self.mesh.triangles.clone()))
    }
}

fn foreground_centroid(depth: &DepthFrame) -> Vec3 {
    let mut sum = Vec3::zeros();
    let mut n = 0usize;
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            if let Some(p) = depth.point(u, v) {
                sum += p;
                n += 1;
            }
        }
    }
    if n == 0 {
        Vec3::zeros()
    } else {
        sum / n as f64
    }
}

/// Depth frames from either a built-in scene or a raw sequence.
#[derive(Clone, Debug)]
pub enum FrameSource {
    Synthetic { scene: ArticulatedScene, seed: u64 },
    Raw(RawSequence),
}

impl FrameSource {
    pub fn open(config: &PipelineConfig) -> Result<Self> {
        Ok(match &config.input {
            InputSource::Synthetic {
                preset,
                frames,
                noise_sigma,
            } => {
                let mut scene = build_scene(*preset, *frames);
                scene.noise_sigma = *noise_sigma;
                FrameSource::Synthetic {
                    scene,
                    seed: config.seed,
                }
            }
            InputSource::Raw { path } => FrameSource::Raw(RawSequence::open(path)?),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            FrameSource::Synthetic { scene, .. } => scene.frame_count(),
            FrameSource::Raw(seq) => seq.manifest.frames,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame(&self, index: usize) -> Result<DepthFrame> {
        match self {
            FrameSource::Synthetic { scene, seed } => Ok(scene.render(index, *seed)),
            FrameSource::Raw(seq) => seq.read_frame(index),
        }
    }

    pub fn scene(&self) -> Option<&ArticulatedScene> {
        match self {
            FrameSource::Synthetic { scene, .. } => Some(scene),
            FrameSource::Raw(_) => None,
        }
    }
}

/// Result of a whole run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<FrameRecord>,
    pub first_mesh: TriangleMesh,
    pub state: Reconstruction,
}

pub const REPORT_HEADER: &str =
    "frame,nodes,clusters,e_fit,e_reg,rejected_voxels,init_ms,dt_ms,level1_ms,level2_ms,tsdf_ms,seg_ms,total_ms";

fn report_row(r: &FrameRecord) -> String {
    let t = &r.timings;
    format!(
        "{},{},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3}",
        r.frame,
        r.node_count,
        r.cluster_count(),
        r.e_fit,
        r.e_reg,
        r.rejected_voxels,
        t.init,
        t.dt,
        t.level1,
        t.level2,
        t.tsdf,
        t.seg,
        t.total
    )
}

fn log_lines(r: &FrameRecord) -> String {
    let mut s = String::new();
    for it in &r.iterations {
        let _ = writeln!(
            s,
            "frame={} level={} iter={} e_fit={:.6e} e_reg={:.6e} correspondences={} silhouette={} accepted={}",
            r.frame,
            it.level.number(),
            it.iteration,
            it.e_fit,
            it.e_reg,
            it.correspondences,
            it.silhouette,
            it.accepted
        );
    }
    let _ = writeln!(
        s,
        "frame={} nodes={} clusters={} rejected_voxels={} total_ms={:.1}",
        r.frame,
        r.node_count,
        r.cluster_count(),
        r.rejected_voxels,
        r.timings.total
    );
    s
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Output file names of one exported frame.
pub fn frame_file(dir: &Path, stem: &str, frame: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{frame:04}.{ext}"))
}

struct Exporter {
    dir: PathBuf,
    every: usize,
    format: MeshFormat,
    log: String,
    report: String,
}

impl Exporter {
    fn new(dir: &Path, config: &PipelineConfig, source: &FrameSource) -> Result<Self> {
        ensure_dir(dir)?;
        formats::write_file(&dir.join("config.txt"), &config.to_text())?;
        if let Some(scene) = source.scene() {
            crate::scene_io::write_ground_truth(dir, scene)?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            every: config.export_every,
            format: config.mesh_format,
            log: String::new(),
            report: format!("{REPORT_HEADER}\n"),
        })
    }

    fn frame(&mut self, r: &FrameRecord, state: &Reconstruction, last: bool) -> Result<()> {
        self.log.push_str(&log_lines(r));
        self.report.push_str(&report_row(r));
        self.report.push('\n');
        if !r.frame.is_multiple_of(self.every) && !last {
            return Ok(());
        }
        let live = state.live_mesh()?;
        let (text, ext) = match self.format {
            MeshFormat::Ply => (formats::mesh_to_ply(&live), "ply"),
            MeshFormat::Obj => (formats::mesh_to_obj(&live), "obj"),
        };
        formats::write_file(&frame_file(&self.dir, "frame", r.frame, ext), &text)?;
        formats::write_file(
            &frame_file(&self.dir, "nodes", r.frame, "csv"),
            &formats::nodes_to_csv(&state.graph),
        )?;
        formats::write_file(
            &frame_file(&self.dir, "warp", r.frame, "csv"),
            &formats::warp_to_csv(&r.warp.level2),
        )?;
        if let Some(c) = &r.clustering {
            formats::write_file(
                &frame_file(&self.dir, "labels", r.frame, "csv"),
                &formats::labels_to_csv(&c.labels),
            )?;
        }
        Ok(())
    }

    fn flush(&self, state: &Reconstruction) -> Result<()> {
        formats::write_file(&self.dir.join("run.log"), &self.log)?;
        formats::write_file(&self.dir.join("report.csv"), &self.report)?;
        let canonical = match self.format {
            MeshFormat::Ply => ("canonical.ply", formats::mesh_to_ply(&state.mesh)),
            MeshFormat::Obj => ("canonical.obj", formats::mesh_to_obj(&state.mesh)),
        };
        formats::write_file(&self.dir.join(canonical.0), &canonical.1)
    }
}

/// Runs the whole input through the loop, exporting when an output
/// directory is configured. `observer` sees every record as it is produced.
///
/// On a failure mid-run the logs gathered so far are still written.
pub fn run_pipeline(config: &PipelineConfig, mut observer: impl FnMut(&FrameRecord)) -> Result<RunOutput> {
    config.validate()?;
    let source = FrameSource::open(config)?;
    let mut state = Reconstruction::new(config)?;
    let mut exporter = match &config.output {
        Some(dir) => Some(Exporter::new(dir, config, &source)?),
        None => None,
    };
    let mut records = Vec::with_capacity(source.len());
    let mut first_mesh = TriangleMesh::default();
    let n = source.len();
    let mut outcome = Ok(());
    for i in 0..n {
        let step = source.frame(i).and_then(|f| state.process(&f));
        let record = match step {
            Ok(r) => r,
            Err(e) => {
                outcome = Err(e);
                break;
            }
        };
        if i == 0 {
            first_mesh = state.mesh.clone();
        }
        log::info!(
            "frame {i}: {} nodes, {} clusters, e_fit {:.3e}, {:.1} ms",
            record.node_count,
            record.cluster_count(),
            record.e_fit,
            record.timings.total
        );
        if let Some(ex) = exporter.as_mut() {
            if let Err(e) = ex.frame(&record, &state, i + 1 == n) {
                outcome = Err(e);
                break;
            }
        }
        observer(&record);
        records.push(record);
    }
    if let Some(ex) = &exporter {
        ex.flush(&state)?;
    }
    outcome?;
    Ok(RunOutput {
        records,
        first_mesh,
        state,
    })
}
