//! Property tests for the public invariants of the core crate.

use artfusion_core::depth::{distance_transform_mask, CameraIntrinsics, DepthFrame};
use artfusion_core::math::{procrustes, svd3, twist_exp};
use artfusion_core::scenes::segmentation_accuracy;
use artfusion_core::segmentation::{greedy_merge, optimize_swaps, MergeStop};
use artfusion_core::tsdf::{integrate, TsdfVolume};
use artfusion_core::warp::{node_weights, warp_by_nodes, Node, NodeGraph, WeightKernel, UNASSIGNED};
use artfusion_core::{Mat3, RigidTransform, Twist, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (vec3(3.0), vec3(1.0)).prop_map(|(w, v)| twist_exp(&Twist::new(w, v)))
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec3>> {
    proptest::collection::vec(vec3(1.0), 1..max)
}

fn graph_of(xs: &[Vec3]) -> NodeGraph {
    let mut g = NodeGraph {
        nodes: xs
            .iter()
            .map(|&x| Node {
                x,
                sigma: 0.2,
                cluster: UNASSIGNED,
            })
            .collect(),
        edges: Vec::new(),
        generation: 0,
    };
    g.rebuild_edges();
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exp_gives_rotation_and_inverts(w in vec3(3.0), v in vec3(1.0)) {
        let xi = Twist::new(w, v);
        let t = twist_exp(&xi);
        prop_assert!(t.is_valid(1e-9));
        let back = t * twist_exp(&Twist::new(-w, -v));
        prop_assert!((back.rotation - Mat3::identity()).norm() < 1e-9);
        prop_assert!(back.translation.norm() < 1e-9);
    }

    #[test]
    fn svd_reconstructs_sorted(a in proptest::array::uniform9(-2.0..2.0f64)) {
        let m = Mat3::from_row_slice(&a);
        let s = svd3(&m);
        prop_assert!((s.reconstruct() - m).norm() <= 1e-8 * m.norm().max(1e-12));
        prop_assert!(s.sigma[0] >= s.sigma[1] && s.sigma[1] >= s.sigma[2] && s.sigma[2] >= 0.0);
    }

    #[test]
    fn procrustes_is_proper_and_optimal(src in points(30), t in transform(), noise in points(30), probes in proptest::collection::vec(transform(), 20)) {
        // Mirrored targets would be fit best by a reflection.
        let dst: Vec<Vec3> = src
            .iter()
            .zip(noise.iter().cycle())
            .map(|(p, e)| {
                let q = t.apply(p) + e * 0.05;
                Vec3::new(-q.x, q.y, q.z)
            })
            .collect();
        let (best, _) = procrustes(&src, &dst).unwrap();
        prop_assert!(best.is_valid(1e-9));
        let cost = |r: &RigidTransform| -> f64 {
            src.iter().zip(&dst).map(|(p, q)| (r.apply(p) - q).norm_squared()).sum()
        };
        let e = cost(&best);
        for probe in &probes {
            prop_assert!(e <= cost(probe) + 1e-9);
        }
    }

    #[test]
    fn distance_transform_is_consistent(
        (w, h, mask) in (2usize..24, 2usize..24).prop_flat_map(|(w, h)| {
            (Just(w), Just(h), proptest::collection::vec(proptest::bool::weighted(0.3), w * h))
        })
    ) {
        prop_assume!(mask.iter().any(|&m| m));
        let dt = distance_transform_mask(&mask, w, h).unwrap();
        for v in 0..h {
            for u in 0..w {
                let (nu, nv) = dt.nearest(u, v);
                let du = u as f64 - nu as f64;
                let dv = v as f64 - nv as f64;
                prop_assert_eq!(dt.distance(u, v), (du * du + dv * dv).sqrt());
                if u + 1 < w {
                    prop_assert!((dt.distance(u, v) - dt.distance(u + 1, v)).abs() <= 2f64.sqrt() + 1e-12);
                }
                if v + 1 < h {
                    prop_assert!((dt.distance(u, v) - dt.distance(u, v + 1)).abs() <= 2f64.sqrt() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn node_weights_partition_unity_and_permute(xs in points(12), v in vec3(1.0), ts in proptest::collection::vec(transform(), 12), rot in 0usize..12) {
        let g = graph_of(&xs);
        let knn: Vec<usize> = (0..xs.len().min(8)).collect();
        let nw = node_weights(&v, &g, &knn, WeightKernel::Literal);
        let total: f64 = nw.iter().map(|e| e.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut shuffled = knn.clone();
        let k = shuffled.len();
        shuffled.rotate_left(rot % k);
        let nw2 = node_weights(&v, &g, &shuffled, WeightKernel::Literal);
        let a = warp_by_nodes(&v, &nw, &ts);
        let b = warp_by_nodes(&v, &nw2, &ts);
        prop_assert!((a - b).norm() < 1e-12);
        // Same rigid transform everywhere moves the point rigidly.
        let same = vec![ts[0]; ts.len()];
        prop_assert!((warp_by_nodes(&v, &nw, &same) - ts[0].apply(&v)).norm() < 1e-12);
    }

    #[test]
    fn accuracy_ignores_label_names(truth in proptest::collection::vec(0usize..4, 1..60), noise in proptest::collection::vec(0u32..5, 60), perm in Just([3u32, 0, 4, 1, 2])) {
        let labels: Vec<u32> = truth.iter().zip(&noise).map(|(&t, &n)| if n == 0 { (t as u32 + 1) % 5 } else { t as u32 }).collect();
        let renamed: Vec<u32> = labels.iter().map(|&l| perm[l as usize]).collect();
        prop_assert_eq!(segmentation_accuracy(&labels, &truth), segmentation_accuracy(&renamed, &truth));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn swaps_never_raise_energy(xs in proptest::collection::vec(vec3(0.5), 6..60), ts in proptest::collection::vec(transform(), 3), m in 1usize..5) {
        let g = graph_of(&xs);
        let live: Vec<Vec3> = xs
            .iter()
            .map(|x| ts[(x.x > 0.0) as usize + (x.y > 0.2) as usize].apply(x))
            .collect();
        let mut c = greedy_merge(&g, &live, MergeStop::TargetM(m)).unwrap();
        let before = c.total_energy;
        let passes = optimize_swaps(&mut c, &g, &live, 10).unwrap();
        prop_assert!(passes <= 10);
        prop_assert!(c.total_energy <= before + 1e-9 * before.max(1.0));
        let sum: f64 = c.stats.iter().map(|s| s.e_star).sum();
        prop_assert!((sum - c.total_energy).abs() <= 1e-9 * sum.abs().max(1.0));
    }

    #[test]
    fn tsdf_stays_bounded(depths in proptest::collection::vec(0.25..0.45f64, 1..4), tilt in -0.3..0.3f64) {
        let k = CameraIntrinsics { fx: 40.0, fy: 40.0, cx: 16.0, cy: 12.0, width: 32, height: 24 };
        let mut vol = TsdfVolume::centered([16, 16, 16], 0.01, Vec3::new(0.0, 0.0, 0.35));
        let mut prev_weight = vol.weight.clone();
        for d in depths {
            let mut f = DepthFrame::empty(k, 0);
            for v in 0..k.height {
                for u in 0..k.width {
                    f.set(u, v, d + tilt * (u as f64 - k.cx) / k.fx * d);
                }
            }
            integrate(&mut vol, &f, None);
            for (i, (&t, &w)) in vol.tsdf.iter().zip(&vol.weight).enumerate() {
                prop_assert!(w > 0.0 || t == 1.0);
                prop_assert!(t.abs() <= 1.0);
                prop_assert!(w >= prev_weight[i]);
            }
            prev_weight = vol.weight.clone();
        }
    }
}
