//! Writing synthetic scenes to disk.

use std::path::Path;

use artfusion_core::scenes::ArticulatedScene;

use crate::error::Result;
use crate::formats::{self, RawSequence};

pub const GT_VERTICES_FILE: &str = "gt_vertices.csv";
pub const GT_MARKERS_FILE: &str = "gt_markers.csv";

/// Writes the canonical labeled vertices and all marker trajectories.
pub fn write_ground_truth(dir: &Path, scene: &ArticulatedScene) -> Result<()> {
    let gt = scene.ground_truth();
    formats::write_file(
        &dir.join(GT_VERTICES_FILE),
        &formats::gt_vertices_to_csv(&gt.frames[0], &gt.labels),
    )?;
    let markers: Vec<_> = (0..gt.frames.len()).map(|f| gt.marker_trajectory(f)).collect();
    formats::write_file(
        &dir.join(GT_MARKERS_FILE),
        &formats::gt_markers_to_csv(&gt.marker_ids, &markers),
    )
}

/// Renders every frame of `scene` into a raw sequence with ground truth.
pub fn make_scene(dir: &Path, scene: &ArticulatedScene, seed: u64) -> Result<RawSequence> {
    let frames: Vec<_> = (0..scene.frame_count()).map(|f| scene.render(f, seed)).collect();
    let seq = RawSequence::write(dir, &frames)?;
    write_ground_truth(dir, scene)?;
    formats::write_file(
        &dir.join("scene.txt"),
        &format!(
            "preset={}\nframes={}\nnoise_sigma={}\nseed={seed}\n",
            scene.name,
            scene.frame_count(),
            scene.noise_sigma
        ),
    )?;
    Ok(seq)
}
