use artfusion::formats::{
    decode_raw_depth, encode_raw_depth, gt_markers_from_csv, gt_markers_to_csv, gt_vertices_from_csv,
    gt_vertices_to_csv, labels_from_csv, labels_to_csv, mesh_to_obj, mesh_to_ply, nodes_from_csv, nodes_to_csv,
    parse_ply, warp_from_csv, warp_to_csv, RawSequence,
};
use artfusion::Error;
use artfusion_core::depth::{CameraIntrinsics, DepthFrame};
use artfusion_core::math::twist_exp;
use artfusion_core::scenes::{build_scene, uv_sphere, Preset};
use artfusion_core::warp::{sample_nodes, UNASSIGNED};
use artfusion_core::{Twist, Vec3};

#[test]
fn ply_round_trips_exactly() {
    let mesh = uv_sphere(Vec3::new(0.1, -0.2, 1.0), 0.15, 8, 12);
    let back = parse_ply(&mesh_to_ply(&mesh)).unwrap();
    assert_eq!(back, mesh);
}

#[test]
fn ply_rejects_bad_faces() {
    let mesh = uv_sphere(Vec3::zeros(), 1.0, 4, 6);
    let text = mesh_to_ply(&mesh).replacen("\n3 ", "\n4 ", 1);
    assert!(matches!(parse_ply(&text), Err(Error::Format(_))));
    let truncated: String = mesh_to_ply(&mesh).lines().take(20).collect::<Vec<_>>().join("\n");
    assert!(parse_ply(&truncated).is_err());
}

#[test]
fn obj_has_one_line_per_element() {
    let mesh = uv_sphere(Vec3::zeros(), 1.0, 4, 6);
    let text = mesh_to_obj(&mesh);
    let count = |p: &str| text.lines().filter(|l| l.starts_with(p)).count();
    assert_eq!(count("v "), mesh.vertices.len());
    assert_eq!(count("vn "), mesh.vertices.len());
    assert_eq!(count("f "), mesh.triangles.len());
    // Indices are 1-based.
    assert!(!text.lines().any(|l| l.starts_with("f ") && l.contains(" 0//")));
}

#[test]
fn nodes_labels_and_warp_round_trip() {
    let mesh = build_scene(Preset::TwoBoxHinge, 1).animate(0).0;
    let mut graph = sample_nodes(&mesh, 0.05).unwrap();
    for (i, n) in graph.nodes.iter_mut().enumerate() {
        n.cluster = if i % 3 == 0 { UNASSIGNED } else { i as u32 % 2 };
    }
    assert_eq!(nodes_from_csv(&nodes_to_csv(&graph)).unwrap(), graph.nodes);

    let labels: Vec<u32> = (0..graph.len() as u32).map(|i| i % 4).collect();
    assert_eq!(labels_from_csv(&labels_to_csv(&labels)).unwrap(), labels);

    let ts: Vec<_> = (0..5)
        .map(|i| {
            let a = i as f64 * 0.3;
            twist_exp(&Twist::new(Vec3::new(a, -0.5 * a, 0.2), Vec3::new(0.01, a, -0.1)))
        })
        .collect();
    let back = warp_from_csv(&warp_to_csv(&ts)).unwrap();
    for (a, b) in ts.iter().zip(&back) {
        assert!((a.rotation - b.rotation).norm() < 1e-12);
        assert!((a.translation - b.translation).norm() < 1e-12);
    }
}

#[test]
fn csv_headers_are_checked() {
    assert!(labels_from_csv("id,label\n0,1\n").is_err());
    assert!(warp_from_csv("node_id,wx,wy,wz,vx,vy,vz\n0,1,2\n").is_err());
}

#[test]
fn ground_truth_round_trips() {
    let scene = build_scene(Preset::ThreePartArm, 4);
    let gt = scene.ground_truth();
    let (vs, parts) = gt_vertices_from_csv(&gt_vertices_to_csv(&gt.frames[0], &gt.labels)).unwrap();
    assert_eq!(vs, gt.frames[0]);
    assert_eq!(parts, gt.labels);
    let markers: Vec<_> = (0..4).map(|f| gt.marker_trajectory(f)).collect();
    let (ids, back) = gt_markers_from_csv(&gt_markers_to_csv(&gt.marker_ids, &markers)).unwrap();
    assert_eq!(ids, gt.marker_ids);
    assert_eq!(back, markers);
}

#[test]
fn out_of_order_markers_are_rejected() {
    let text = "frame,marker,vertex_id,x,y,z\n0,0,5,0,0,0\n1,0,5,0,0,0\n0,1,6,0,0,0\n";
    assert!(gt_markers_from_csv(text).is_err());
}

fn small_frame(index: usize) -> DepthFrame {
    let k = CameraIntrinsics {
        fx: 50.0,
        fy: 50.0,
        cx: 8.0,
        cy: 6.0,
        width: 16,
        height: 12,
    };
    let mut f = DepthFrame::empty(k, index);
    for v in 2..10 {
        for u in 3..13 {
            f.set(u, v, 0.5 + 0.001 * (u * v + index) as f64);
        }
    }
    f
}

#[test]
fn raw_depth_keeps_millimeters() {
    let f = small_frame(0);
    let bytes = encode_raw_depth(&f);
    assert_eq!(bytes.len(), 2 * 16 * 12);
    let back = decode_raw_depth(&bytes, f.intrinsics, 0).unwrap();
    for (a, b) in f.depth.iter().zip(&back.depth) {
        assert!((a - b).abs() <= 0.0005 + 1e-12);
    }
    assert!(decode_raw_depth(&bytes[1..], f.intrinsics, 0).is_err());
}

#[test]
fn raw_sequence_write_then_read() {
    let dir = tempfile::tempdir().unwrap();
    let frames: Vec<_> = (0..3).map(small_frame).collect();
    let seq = RawSequence::write(dir.path(), &frames).unwrap();
    let opened = RawSequence::open(dir.path()).unwrap();
    assert_eq!(opened.manifest, seq.manifest);
    assert_eq!(opened.manifest.frames, 3);
    for (i, f) in frames.iter().enumerate() {
        let back = opened.read_frame(i).unwrap();
        assert_eq!(back.foreground_count(), f.foreground_count());
    }
    assert!(matches!(opened.read_frame(7), Err(Error::Io { .. })));
}
