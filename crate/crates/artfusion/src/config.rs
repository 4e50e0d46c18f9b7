//! Flat `section.key=value` configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use artfusion_core::registration::SolverSettings;
use artfusion_core::scenes::Preset;
use artfusion_core::segmentation::{MergeStop, SegmentationPolicy, DEFAULT_MAX_PASSES};
use artfusion_core::tsdf::{DEFAULT_MAX_WEIGHT, DEFAULT_VOXEL_SIZE, TRUNCATION_VOXELS};
use artfusion_core::warp::WeightKernel;
use artfusion_core::Vec3;

use crate::error::{Error, Result};
use crate::formats::{parse_key_values, read_text};

/// Where depth frames come from.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSource {
    /// Rendered on the fly from a built-in scene.
    Synthetic { preset: Preset, frames: usize, noise_sigma: f64 },
    /// A directory holding a sequence manifest and raw frames.
    Raw { path: PathBuf },
}

/// Placement of the canonical volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VolumeCenter {
    /// Centroid of the first frame's foreground points.
    Auto,
    Fixed(Vec3),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Ply,
    Obj,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClusterCount {
    /// Merge while the cheapest merge costs at most `merge_threshold`, split
    /// clusters whose per-node residual exceeds `tau_break`.
    Threshold,
    /// Merge down to a fixed number of clusters.
    Target(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub seed: u64,
    pub dims: [usize; 3],
    pub voxel_size: f64,
    /// Defaults to four voxels.
    pub truncation: Option<f64>,
    pub max_weight: f32,
    pub center: VolumeCenter,
    pub node_spacing: f64,
    pub k: usize,
    pub kernel: WeightKernel,
    /// Frames between full recomputations of the voxel k-NN field.
    pub knn_refresh_every: usize,
    pub sigma_space: f64,
    pub sigma_depth: f64,
    pub max_range: f64,
    pub solver: SolverSettings,
    pub cluster_count: ClusterCount,
    /// Defaults to `(2 * voxel_size)^2`.
    pub merge_threshold: Option<f64>,
    /// Defaults to `(2 * voxel_size)^2`.
    pub tau_break: Option<f64>,
    pub max_passes: usize,
    pub output: Option<PathBuf>,
    pub export_every: usize,
    pub mesh_format: MeshFormat,
    /// Whether a synthetic-input key was set explicitly.
    synthetic_keys: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputSource::Synthetic {
                preset: Preset::TwoBoxHinge,
                frames: 30,
                noise_sigma: 0.0,
            },
            seed: 0,
            dims: [192; 3],
            voxel_size: DEFAULT_VOXEL_SIZE,
            truncation: None,
            max_weight: DEFAULT_MAX_WEIGHT,
            center: VolumeCenter::Auto,
            node_spacing: 0.05,
            k: 8,
            kernel: WeightKernel::Literal,
            knn_refresh_every: 30,
            sigma_space: 3.0,
            sigma_depth: 0.03,
            max_range: artfusion_core::depth::DEFAULT_MAX_RANGE,
            solver: SolverSettings::default(),
            cluster_count: ClusterCount::Threshold,
            merge_threshold: None,
            tau_break: None,
            max_passes: DEFAULT_MAX_PASSES,
            output: None,
            export_every: 1,
            mesh_format: MeshFormat::Ply,
            synthetic_keys: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse_num(key, v.trim())).collect()
}

impl PipelineConfig {
    pub fn truncation(&self) -> f64 {
        self.truncation.unwrap_or(TRUNCATION_VOXELS * self.voxel_size)
    }

    pub fn segmentation_policy(&self) -> SegmentationPolicy {
        let base = SegmentationPolicy::for_voxel(self.voxel_size);
        let tau_break = self.tau_break.unwrap_or(base.tau_break);
        let stop = match self.cluster_count {
            ClusterCount::Target(m) => MergeStop::TargetM(m),
            ClusterCount::Threshold => MergeStop::Threshold(self.merge_threshold.unwrap_or(tau_break)),
        };
        SegmentationPolicy {
            stop,
            tau_break,
            max_passes: self.max_passes,
        }
    }

    pub fn frame_count(&self) -> Option<usize> {
        match &self.input {
            InputSource::Synthetic { frames, .. } => Some(*frames),
            InputSource::Raw { .. } => None,
        }
    }

    /// Applies one `section.key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input.preset" | "input.frames" | "input.noise_sigma" => {
                let InputSource::Synthetic {
                    preset,
                    frames,
                    noise_sigma,
                } = &mut self.input
                else {
                    return Err(Error::Config("both input.path and synthetic input given".into()));
                };
                match key {
                    "input.preset" => {
                        *preset = Preset::from_name(value)
                            .ok_or_else(|| Error::Config(format!("unknown scene preset `{value}`")))?
                    }
                    "input.frames" => *frames = parse_num(key, value)?,
                    _ => *noise_sigma = parse_num(key, value)?,
                }
                self.synthetic_keys = true;
            }
            "input.path" => {
                if self.synthetic_keys {
                    return Err(Error::Config("both input.path and synthetic input given".into()));
                }
                self.input = InputSource::Raw { path: value.into() };
            }
            "input.seed" => self.seed = parse_num(key, value)?,
            "volume.dims" => {
                let v: Vec<usize> = value
                    .split(',')
                    .map(|d| parse_num(key, d.trim()))
                    .collect::<Result<_>>()?;
                self.dims = match v[..] {
                    [n] => [n; 3],
                    [a, b, c] => [a, b, c],
                    _ => return Err(Error::Config("`volume.dims` takes one or three integers".into())),
                };
            }
            "volume.voxel_size" => self.voxel_size = parse_num(key, value)?,
            "volume.truncation" => self.truncation = Some(parse_num(key, value)?),
            "volume.max_weight" => self.max_weight = parse_num(key, value)?,
            "volume.center" => {
                self.center = if value == "auto" {
                    VolumeCenter::Auto
                } else {
                    match parse_list(key, value)?[..] {
                        [x, y, z] => VolumeCenter::Fixed(Vec3::new(x, y, z)),
                        _ => return Err(Error::Config("`volume.center` takes `auto` or x,y,z".into())),
                    }
                }
            }
            "graph.node_spacing" => self.node_spacing = parse_num(key, value)?,
            "graph.k" => self.k = parse_num(key, value)?,
            "graph.kernel" => {
                self.kernel = match value {
                    "literal" => WeightKernel::Literal,
                    "conventional" => WeightKernel::Conventional,
                    _ => return Err(Error::Config(format!("`graph.kernel`: unknown kernel `{value}`"))),
                }
            }
            "graph.knn_refresh_every" => self.knn_refresh_every = parse_num(key, value)?,
            "depth.sigma_space" => self.sigma_space = parse_num(key, value)?,
            "depth.sigma_depth" => self.sigma_depth = parse_num(key, value)?,
            "depth.max_range" => self.max_range = parse_num(key, value)?,
            "solver.omega_fit" => self.solver.omega_fit = parse_num(key, value)?,
            "solver.omega_reg" => self.solver.omega_reg = parse_num(key, value)?,
            "solver.iters_level1" => self.solver.iters_level1 = parse_num(key, value)?,
            "solver.iters_level2" => self.solver.iters_level2 = parse_num(key, value)?,
            "solver.pcg_iters" => self.solver.pcg_iters = parse_num(key, value)?,
            "solver.damping" => self.solver.damping = parse_num(key, value)?,
            "solver.corr_dist_max" => self.solver.corr_dist_max = parse_num(key, value)?,
            "solver.corr_angle_max" => self.solver.corr_angle_max = parse_num(key, value)?,
            "solver.l1_cross_cluster_reg" => self.solver.l1_cross_cluster_reg = parse_bool(key, value)?,
            "solver.use_silhouette" => self.solver.use_silhouette = parse_bool(key, value)?,
            "solver.visibility_epsilon" => self.solver.visibility_epsilon = parse_num(key, value)?,
            "segmentation.policy" => {
                self.cluster_count = match value {
                    "threshold" => ClusterCount::Threshold,
                    "target" => match self.cluster_count {
                        ClusterCount::Target(m) => ClusterCount::Target(m),
                        ClusterCount::Threshold => ClusterCount::Target(6),
                    },
                    _ => return Err(Error::Config(format!("`segmentation.policy`: unknown policy `{value}`"))),
                }
            }
            "segmentation.target_m" => self.cluster_count = ClusterCount::Target(parse_num(key, value)?),
            "segmentation.merge_threshold" => self.merge_threshold = Some(parse_num(key, value)?),
            "segmentation.tau_break" => self.tau_break = Some(parse_num(key, value)?),
            "segmentation.max_passes" => self.max_passes = parse_num(key, value)?,
            "output.dir" => self.output = Some(value.into()),
            "output.every" => self.export_every = parse_num(key, value)?,
            "output.mesh_format" => {
                self.mesh_format = match value {
                    "ply" => MeshFormat::Ply,
                    "obj" => MeshFormat::Obj,
                    _ => return Err(Error::Config(format!("`output.mesh_format`: unknown format `{value}`"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Defaults overridden by every line of `text`, then validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let pairs = parse_key_values(text).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in pairs {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    /// Applies `--section.key=value` (or bare `section.key=value`) arguments.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, args: &[S]) -> Result<()> {
        for arg in args {
            let arg = arg.as_ref();
            let body = arg.strip_prefix("--").unwrap_or(arg);
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{arg}` is not --section.key=value")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| -> Result<()> {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be non-negative, got {v}")))
            }
        };
        if let InputSource::Synthetic { frames, noise_sigma, .. } = self.input {
            positive("input.frames", frames as f64)?;
            non_negative("input.noise_sigma", noise_sigma)?;
        }
        for d in self.dims {
            if d < 2 {
                return Err(Error::Config("`volume.dims` must be at least 2".into()));
            }
        }
        positive("volume.voxel_size", self.voxel_size)?;
        positive("volume.truncation", self.truncation())?;
        positive("volume.max_weight", self.max_weight as f64)?;
        positive("graph.node_spacing", self.node_spacing)?;
        if !(1..=artfusion_core::warp::MAX_K).contains(&self.k) {
            return Err(Error::Config(format!(
                "`graph.k` must be in 1..={}",
                artfusion_core::warp::MAX_K
            )));
        }
        positive("graph.knn_refresh_every", self.knn_refresh_every as f64)?;
        non_negative("depth.sigma_space", self.sigma_space)?;
        non_negative("depth.sigma_depth", self.sigma_depth)?;
        positive("depth.max_range", self.max_range)?;
        let s = &self.solver;
        positive("solver.omega_fit", s.omega_fit)?;
        non_negative("solver.omega_reg", s.omega_reg)?;
        non_negative("solver.damping", s.damping)?;
        positive("solver.pcg_iters", s.pcg_iters as f64)?;
        positive("solver.corr_dist_max", s.corr_dist_max)?;
        positive("solver.corr_angle_max", s.corr_angle_max)?;
        non_negative("solver.visibility_epsilon", s.visibility_epsilon)?;
        if let ClusterCount::Target(m) = self.cluster_count {
            positive("segmentation.target_m", m as f64)?;
        }
        let p = self.segmentation_policy();
        if let MergeStop::Threshold(t) = p.stop {
            positive("segmentation.merge_threshold", t)?;
        }
        positive("segmentation.tau_break", p.tau_break)?;
        positive("output.every", self.export_every as f64)?;
        Ok(())
    }

    /// Resolved settings as config text; parsing it reproduces this config.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        match &self.input {
            InputSource::Synthetic {
                preset,
                frames,
                noise_sigma,
            } => {
                let _ = writeln!(o, "input.preset={}", preset.name());
                let _ = writeln!(o, "input.frames={frames}");
                let _ = writeln!(o, "input.noise_sigma={noise_sigma}");
            }
            InputSource::Raw { path } => {
                let _ = writeln!(o, "input.path={}", path.display());
            }
        }
        let _ = writeln!(o, "input.seed={}", self.seed);
        let [a, b, c] = self.dims;
        let _ = writeln!(o, "volume.dims={a},{b},{c}");
        let _ = writeln!(o, "volume.voxel_size={}", self.voxel_size);
        let _ = writeln!(o, "volume.truncation={}", self.truncation());
        let _ = writeln!(o, "volume.max_weight={}", self.max_weight);
        match self.center {
            VolumeCenter::Auto => o.push_str("volume.center=auto\n"),
            VolumeCenter::Fixed(p) => {
                let _ = writeln!(o, "volume.center={},{},{}", p.x, p.y, p.z);
            }
        }
        let _ = writeln!(o, "graph.node_spacing={}", self.node_spacing);
        let _ = writeln!(o, "graph.k={}", self.k);
        let kernel = match self.kernel {
            WeightKernel::Literal => "literal",
            WeightKernel::Conventional => "conventional",
        };
        let _ = writeln!(o, "graph.kernel={kernel}");
        let _ = writeln!(o, "graph.knn_refresh_every={}", self.knn_refresh_every);
        let _ = writeln!(o, "depth.sigma_space={}", self.sigma_space);
        let _ = writeln!(o, "depth.sigma_depth={}", self.sigma_depth);
        let _ = writeln!(o, "depth.max_range={}", self.max_range);
        let s = &self.solver;
        let _ = writeln!(o, "solver.omega_fit={}", s.omega_fit);
        let _ = writeln!(o, "solver.omega_reg={}", s.omega_reg);
        let _ = writeln!(o, "solver.iters_level1={}", s.iters_level1);
        let _ = writeln!(o, "solver.iters_level2={}", s.iters_level2);
        let _ = writeln!(o, "solver.pcg_iters={}", s.pcg_iters);
        let _ = writeln!(o, "solver.damping={}", s.damping);
        let _ = writeln!(o, "solver.corr_dist_max={}", s.corr_dist_max);
        let _ = writeln!(o, "solver.corr_angle_max={}", s.corr_angle_max);
        let _ = writeln!(o, "solver.l1_cross_cluster_reg={}", s.l1_cross_cluster_reg);
        let _ = writeln!(o, "solver.use_silhouette={}", s.use_silhouette);
        let _ = writeln!(o, "solver.visibility_epsilon={}", s.visibility_epsilon);
        let p = self.segmentation_policy();
        match self.cluster_count {
            ClusterCount::Threshold => {
                o.push_str("segmentation.policy=threshold\n");
                if let MergeStop::Threshold(t) = p.stop {
                    let _ = writeln!(o, "segmentation.merge_threshold={t}");
                }
            }
            ClusterCount::Target(m) => {
                let _ = writeln!(o, "segmentation.target_m={m}");
                if let Some(t) = self.merge_threshold {
                    let _ = writeln!(o, "segmentation.merge_threshold={t}");
                }
            }
        }
        let _ = writeln!(o, "segmentation.tau_break={}", p.tau_break);
        let _ = writeln!(o, "segmentation.max_passes={}", self.max_passes);
        if let Some(dir) = &self.output {
            let _ = writeln!(o, "output.dir={}", dir.display());
        }
        let _ = writeln!(o, "output.every={}", self.export_every);
        let fmt = match self.mesh_format {
            MeshFormat::Ply => "ply",
            MeshFormat::Obj => "obj",
        };
        let _ = writeln!(o, "output.mesh_format={fmt}");
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.truncation(), 0.02);
        assert_eq!(c.solver.omega_reg, 10.0);
        let p = c.segmentation_policy();
        assert_eq!(p.stop, MergeStop::Threshold(1e-4));
    }

    #[test]
    fn overrides_and_round_trip() {
        let mut c = PipelineConfig::parse("# comment\nvolume.voxel_size=0.01\nsolver.omega_reg=5\n").unwrap();
        c.apply_overrides(&["--graph.node_spacing=0.02", "segmentation.target_m=3", "--volume.center=0,0,1"])
            .unwrap();
        assert_eq!(c.truncation(), 0.04);
        assert_eq!(c.solver.omega_reg, 5.0);
        assert_eq!(c.node_spacing, 0.02);
        assert_eq!(c.cluster_count, ClusterCount::Target(3));
        let back = PipelineConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back.to_text(), c.to_text());
        assert_eq!(back.segmentation_policy(), c.segmentation_policy());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PipelineConfig::parse("volume.voxel_size=-1").is_err());
        assert!(PipelineConfig::parse("nosuch.key=1").is_err());
        assert!(PipelineConfig::parse("input.path=/tmp/x\ninput.preset=bending-pipe").is_err());
        assert!(PipelineConfig::parse("input.preset=bending-pipe\ninput.path=/tmp/x").is_err());
        assert!(PipelineConfig::parse("graph.k=9").is_err());
        assert!(PipelineConfig::parse("solver.use_silhouette=maybe").is_err());
        assert!(PipelineConfig::parse("input.frames=0").is_err());
    }
}
