use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{HexError, Result};
use crate::geometry::{Hexahedron, Point};

/// Affine map `x ↦ L (x - x024)` sending `x124, x034, x025` to `e1, e2, e3`, and the image of `hex`.
pub fn affine_normalize(hex: &Hexahedron) -> Result<(Matrix3<f64>, Point, Hexahedron)> {
    let o = hex.vertex(0);
    let edges = Matrix3::from_columns(&[hex.vertex(1) - o, hex.vertex(2) - o, hex.vertex(4) - o]);
    let scale = edges.abs().max();
    let l = edges
        .try_inverse()
        .filter(|_| edges.determinant().abs() > 1e-12 * scale.powi(3))
        .ok_or(HexError::DegenerateCorner)?;
    let verts: [[f64; 3]; 8] = std::array::from_fn(|i| {
        let y = l * (hex.vertex(i) - o);
        [y.x, y.y, y.z]
    });
    let mut v = verts;
    for (i, e) in [(1, 0), (2, 1), (4, 2)] {
        v[i] = [0.0; 3];
        v[i][e] = 1.0;
    }
    v[0] = [0.0; 3];
    let tilde = Hexahedron::with_tol(v, hex.flat_tol())?;
    Ok((l, o, tilde))
}

/// Shape diagnostics on the normalized element.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub parallel_pairs: usize,
    pub truncated_pillar: bool,
    /// `H = [ν1 ν3 ν5]` on the normalized element.
    pub h: [[f64; 3]; 3],
    /// `C∘H`, entry `(l, i)` = `c^{2i+1}_l ν_{2i+1,l}`.
    pub c_h: [[f64; 3]; 3],
    /// Principal minors of `H`: 1×1 (3), 2×2 (3), then the determinant.
    pub h_minors: Vec<f64>,
    pub det_c_h: f64,
    /// `|det(C∘H)|` over the product of its row norms.
    pub rel_det_c_h: f64,
    pub cond_c_h: f64,
    pub recommend_symmetric: bool,
}

/// Relative determinant threshold for symmetric AT₁ supplements.
pub const SYMMETRIC_THRESHOLD: f64 = 1e-8;

const PARALLEL_TOL: f64 = 1e-12;

fn edges_along(hex: &Hexahedron, k: usize) -> Vec<Vector3<f64>> {
    (0..8)
        .filter(|v| v & (1 << k) == 0)
        .map(|v| hex.vertex(v | (1 << k)) - hex.vertex(v))
        .collect()
}

fn is_parallel(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    (a.dot(b) / (a.norm() * b.norm())).abs() > 1.0 - PARALLEL_TOL
}

pub fn geometry_report(hex: &Hexahedron) -> Result<GeometryReport> {
    let parallel_pairs = (0..3)
        .filter(|m| {
            let a = Vector3::from(hex.face(2 * m).normal);
            let b = Vector3::from(hex.face(2 * m + 1).normal);
            is_parallel(&a, &b)
        })
        .count();
    let truncated_pillar = (0..3).any(|k| {
        let e = edges_along(hex, k);
        (0..4).all(|i| (i + 1..4).all(|j| is_parallel(&e[i], &e[j])))
    });
    let (_, _, t) = affine_normalize(hex)?;
    let h: [[f64; 3]; 3] =
        std::array::from_fn(|l| std::array::from_fn(|i| t.face(2 * i + 1).normal[l]));
    let c_h: [[f64; 3]; 3] =
        std::array::from_fn(|l| std::array::from_fn(|i| t.face(2 * i + 1).centroid[l] * h[l][i]));
    let hm = Matrix3::from_fn(|i, j| h[i][j]);
    let mut h_minors: Vec<f64> = (0..3).map(|i| hm[(i, i)]).collect();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        h_minors.push(hm[(a, a)] * hm[(b, b)] - hm[(a, b)] * hm[(b, a)]);
    }
    h_minors.push(hm.determinant());
    let cm = Matrix3::from_fn(|i, j| c_h[i][j]);
    let det_c_h = cm.determinant();
    let row_norms: f64 = (0..3).map(|i| cm.row(i).norm()).product();
    let rel_det_c_h = det_c_h.abs() / row_norms.max(1e-300);
    let sv = cm.svd(false, false).singular_values;
    let cond_c_h = if sv.min() > 0.0 {
        sv.max() / sv.min()
    } else {
        f64::INFINITY
    };
    Ok(GeometryReport {
        parallel_pairs,
        truncated_pillar,
        h,
        c_h,
        h_minors,
        det_c_h,
        rel_det_c_h,
        cond_c_h,
        recommend_symmetric: rel_det_c_h > SYMMETRIC_THRESHOLD,
    })
}

/// Whether `[M; N(I - φφᵀ/φᵀφ)]` is invertible (numerical rank test).
pub fn lemma51_check(m: &DMatrix<f64>, n: &DMatrix<f64>, phi: &[f64]) -> bool {
    let k = phi.len();
    let p = nalgebra::DVector::from_column_slice(phi);
    let s = n * (DMatrix::identity(k, k) - &p * p.transpose() / p.dot(&p));
    let mut stacked = DMatrix::zeros(m.nrows() + s.nrows(), k);
    stacked.rows_mut(0, m.nrows()).copy_from(m);
    stacked.rows_mut(m.nrows(), s.nrows()).copy_from(&s);
    if stacked.nrows() != k {
        return false;
    }
    let sv = stacked.svd(false, false).singular_values;
    sv.min() > 1e-10 * sv.max()
}
