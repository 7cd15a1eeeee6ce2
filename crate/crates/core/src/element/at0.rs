use nalgebra::{DMatrix, DVector, Vector3};

use super::{
    at_face_tests, finalize, standard_dofs, BuildInfo, ElementSpace, Frame, HexPolys, SpaceSpec,
};
use crate::error::{HexError, Result};
use crate::geometry::Hexahedron;
use crate::polyalg::{MultiPoly, Scalar, VectorPoly};
use crate::supplement::{face_area, supplement_pair, RefVectorFunction};

/// Face order of the columns of the AT₀ flux matrices: faces 0, 2, 4 then 1, 3, 5.
pub const AT0_ORDER: [usize; 6] = [0, 2, 4, 1, 3, 5];

/// Vertices `x124, x034, x025, x024`.
const POLY_VERTICES: [usize; 4] = [1, 2, 4, 0];
const POLY_TAGS: [&str; 4] = ["x-x124", "x-x034", "x-x025", "x-x024"];

/// `x - x_v` for the four corner vertices, as reference polynomials.
fn at0_poly_part<T: Scalar>(hex: &Hexahedron) -> Vec<RefVectorFunction<T>> {
    let hp = HexPolys::<T>::new(hex);
    POLY_VERTICES
        .iter()
        .zip(POLY_TAGS)
        .map(|(&v, tag)| {
            let x0 = hex.vertex(v);
            let p = VectorPoly::position([T::from_f64(x0.x), T::from_f64(x0.y), T::from_f64(x0.z)]);
            RefVectorFunction::new(hp.pullback(&Frame::identity(), &p), tag)
        })
        .collect()
}

fn at0_space<T: Scalar>(
    hex: &Hexahedron,
    spec: SpaceSpec,
    basis: Vec<RefVectorFunction<T>>,
    info: BuildInfo,
) -> Result<ElementSpace<T>> {
    let face_tests = at_face_tests::<T>(hex, 0);
    let dofs = standard_dofs(&face_tests, 0, 0);
    finalize(ElementSpace {
        spec,
        basis,
        n_supplements: 2,
        w_basis: vec![MultiPoly::one()],
        face_tests,
        div_tests: Vec::new(),
        interior_tests: Vec::new(),
        dofs,
        info,
    })
}

/// AT₀ with the supplements `σ^{1,3}` and `σ^{3,5}`.
pub fn build_at0_simple<T: Scalar>(hex: &Hexahedron) -> Result<ElementSpace<T>> {
    let mut basis = at0_poly_part::<T>(hex);
    basis.push(supplement_pair(hex, 1, 3));
    basis.push(supplement_pair(hex, 3, 5));
    at0_space(hex, SpaceSpec::At0Simple, basis, BuildInfo::default())
}

/// Closed-form AT₀ shape functions `φ_0 … φ_5`, each with unit physical flux on its face.
pub fn at0_simple_shape_functions(hex: &Hexahedron) -> Result<Vec<RefVectorFunction<f64>>> {
    let poly = at0_poly_part::<f64>(hex);
    let s13 = supplement_pair::<f64>(hex, 1, 3);
    let s35 = supplement_pair::<f64>(hex, 3, 5);
    let x024 = &poly[3];
    let area: Vec<f64> = (0..6).map(|f| hex.face(f).area).collect();
    let nu: Vec<Vector3<f64>> = (0..6).map(|f| Vector3::from(hex.face(f).normal)).collect();
    let dist = |f: usize| (Vector3::from(hex.face(f).centroid) - hex.vertex(0)).dot(&nu[f]);
    let (al, be, ga) = (dist(1), dist(3), dist(5));
    let den = area[1] * al + area[3] * be + area[5] * ga;
    if !(den > 0.0) {
        return Err(HexError::DegenerateElement(format!(
            "|f1|a+|f3|b+|f5|c = {den:.3e} <= 0"
        )));
    }
    let combo = |c13: f64, c35: f64, f: usize| {
        x024.add(&s13.scale(&c13))
            .add(&s35.scale(&c35))
            .scale(&(area[f] / den))
    };
    let phi1 = combo(area[3] * be + area[5] * ga, area[5] * ga, 1);
    let phi3 = combo(-area[1] * al, area[5] * ga, 3);
    let phi5 = combo(-area[1] * al, -(area[1] * al + area[3] * be), 5);
    let hp = HexPolys::<f64>::new(hex);
    let even = |a: usize, b: usize, c: usize| -> Result<RefVectorFunction<f64>> {
        let w = nu[a].cross(&nu[b]);
        let d = w.dot(&nu[c]);
        if d.abs() < 1e-14 {
            return Err(HexError::DegenerateElement(format!(
                "(nu{a} x nu{b}) . nu{c} vanishes"
            )));
        }
        let cw = RefVectorFunction::new(
            hp.pullback(&Frame::identity(), &VectorPoly::constant([w.x, w.y, w.z])),
            "w",
        );
        let v = cw
            .sub(&phi1.scale(&w.dot(&nu[1])))
            .sub(&phi3.scale(&w.dot(&nu[3])))
            .sub(&phi5.scale(&w.dot(&nu[5])));
        Ok(v.scale(&(1.0 / d)))
    };
    let phi0 = even(2, 4, 0)?;
    let phi2 = even(0, 4, 2)?;
    let phi4 = even(0, 2, 4)?;
    Ok([phi0, phi1, phi2, phi3, phi4, phi5]
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.with_tag(format!("phi_0,{i}")))
        .collect())
}

/// Flux matrices of the general AT₀ construction, columns in [`AT0_ORDER`].
#[derive(Clone, Debug)]
pub struct At0Matrices {
    /// Physical fluxes of `x - x124, x - x034, x - x025, x - x024`.
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    /// Face areas permuted into the column order.
    pub phi: DVector<f64>,
    pub s: DMatrix<f64>,
    pub mnt_max: f64,
    pub s_phi_max: f64,
}

/// `M`, the closed-form complement `N`, and the projected supplement fluxes `S`.
pub fn at0_general_matrices(hex: &Hexahedron) -> Result<At0Matrices> {
    let poly = at0_poly_part::<f64>(hex);
    let m = DMatrix::from_fn(4, 6, |i, j| {
        let f = AT0_ORDER[j];
        poly[i].ref_trace(f).integrate_unit_square() / hex.face(f).area
    });
    let (a1, b1, c1) = (m[(0, 0)], m[(0, 4)], m[(0, 5)]);
    let (b2, a2, c2) = (m[(1, 1)], m[(1, 3)], m[(1, 5)]);
    let (c3, a3, b3) = (m[(2, 2)], m[(2, 3)], m[(2, 4)]);
    let (al, be, ga) = (m[(3, 3)], m[(3, 4)], m[(3, 5)]);
    for (name, v) in [("a1", a1), ("b2", b2), ("c3", c3)] {
        if v.abs() < 1e-14 {
            return Err(HexError::RankDeficiency {
                reason: format!("flux entry {name} vanishes"),
                singular_values: vec![],
            });
        }
    }
    let n = DMatrix::from_row_slice(
        2,
        6,
        &[
            al * b1 / a1,
            -be * a2 / b2,
            (al * b3 - be * a3) / c3,
            be,
            -al,
            0.0,
            (be * c1 - ga * b1) / a1,
            be * c2 / b2,
            -ga * b3 / c3,
            0.0,
            ga,
            -be,
        ],
    );
    let phi = DVector::from_iterator(6, AT0_ORDER.iter().map(|&f| hex.face(f).area));
    let proj = DMatrix::identity(6, 6) - &phi * phi.transpose() / phi.dot(&phi);
    let s = &n * proj;
    let mnt_max = (&m * n.transpose()).amax() / (m.amax() * n.amax());
    let s_phi_max = (&s * &phi).amax() / (s.amax() * phi.amax());
    let rank_n = n.clone().svd(false, false).singular_values;
    if rank_n.min() < 1e-12 * rank_n.max() {
        return Err(HexError::RankDeficiency {
            reason: "N has rank < 2".into(),
            singular_values: rank_n.iter().copied().collect(),
        });
    }
    Ok(At0Matrices {
        m,
        n,
        phi,
        s,
        mnt_max,
        s_phi_max,
    })
}

/// Divergence-free function with physical flux `flux[f]` on face `f` (`Σ |f| flux[f] = 0` assumed),
/// realized through pair supplements against face 5.
pub(crate) fn realize_constant_fluxes<T: Scalar>(
    hex: &Hexahedron,
    flux: &[f64; 6],
) -> RefVectorFunction<T> {
    let mut acc = RefVectorFunction::zero();
    for (f, &v) in flux.iter().enumerate().take(5) {
        if v != 0.0 {
            let area: T = face_area(hex, f);
            acc = acc.add(&supplement_pair::<T>(hex, f, 5).scale(&(T::from_f64(v) * area)));
        }
    }
    acc
}

/// AT₀ with supplements spanning the projected orthogonal complement of the polynomial fluxes.
pub fn build_at0_general<T: Scalar>(hex: &Hexahedron) -> Result<ElementSpace<T>> {
    let mats = at0_general_matrices(hex)?;
    let mut basis = at0_poly_part::<T>(hex);
    for row in 0..2 {
        let mut flux = [0.0; 6];
        for (j, &f) in AT0_ORDER.iter().enumerate() {
            flux[f] = mats.s[(row, j)];
        }
        basis.push(
            realize_constant_fluxes::<T>(hex, &flux).with_tag(format!("sigma^{}_0,0", row + 1)),
        );
    }
    at0_space(
        hex,
        SpaceSpec::At0General,
        basis,
        BuildInfo {
            at0: Some(mats),
            ..Default::default()
        },
    )
}
