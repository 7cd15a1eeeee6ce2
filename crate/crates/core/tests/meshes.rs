use hexdiv::element::geometry_report;
use hexdiv::mesh::{Mesh, MeshFamily};

#[test]
fn shape_regularity_is_constant_under_refinement() {
    for fam in [MeshFamily::Cube, MeshFamily::Trapezoid, MeshFamily::Pillar] {
        let q: Vec<f64> = [2, 4, 8]
            .iter()
            .map(|&n| {
                Mesh::generate(fam, n)
                    .unwrap()
                    .hexes()
                    .unwrap()
                    .iter()
                    .map(|h| h.shape_regularity())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        assert!(q[0] > 0.2, "{}: {q:?}", fam.name());
        for v in &q[1..] {
            assert!((v - q[0]).abs() < 1e-12, "{}: {q:?}", fam.name());
        }
    }
}

#[test]
fn cell_classification_per_family() {
    for (fam, pairs, pillar) in [
        (MeshFamily::Cube, 3, true),
        (MeshFamily::Trapezoid, 2, true),
        (MeshFamily::Pillar, 0, true),
    ] {
        for h in Mesh::generate(fam, 4).unwrap().hexes().unwrap() {
            let r = geometry_report(&h).unwrap();
            assert_eq!(r.parallel_pairs, pairs, "{}", fam.name());
            assert_eq!(r.truncated_pillar, pillar, "{}", fam.name());
            assert!(r.rel_det_c_h > 1e-3);
        }
    }
}

#[test]
fn table_face_counts() {
    for (n, faces) in [(2, 36), (6, 756), (12, 5616)] {
        assert_eq!(Mesh::gen_cube(n).unwrap().num_faces(), faces);
    }
    assert_eq!(Mesh::gen_pillar(6).unwrap().num_cells(), 216);
}

#[test]
fn json_round_trip_preserves_connectivity() {
    let m = Mesh::gen_pillar(4).unwrap();
    let back = Mesh::from_json(&m.to_json()).unwrap();
    assert_eq!(back.cells, m.cells);
    assert_eq!(back.num_faces(), m.num_faces());
    assert!(back.shared_face_mismatch(&back.hexes().unwrap()) < 1e-14);
}
