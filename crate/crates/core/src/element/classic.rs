use super::{finalize, standard_dofs, BuildInfo, ElementSpace, SpaceSpec};
use crate::error::Result;
use crate::geometry::Hexahedron;
use crate::polyalg::{FacePoly, MultiPoly, Scalar, VectorPoly};
use crate::supplement::RefVectorFunction;

fn box_monomials(max: [u32; 3]) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for c in 0..=max[2] {
        for b in 0..=max[1] {
            for a in 0..=max[0] {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Reference basis of `P_{r+1,r,r} × P_{r,r+1,r} × P_{r,r,r+1}`.
pub fn rt_reference_basis<T: Scalar>(r: u32) -> Vec<VectorPoly<T>> {
    let mut out = Vec::new();
    for k in 0..3 {
        let mut max = [r; 3];
        max[k] = r + 1;
        for e in box_monomials(max) {
            out.push(VectorPoly::axis(k, MultiPoly::monomial(e, T::one())));
        }
    }
    out
}

/// `P_1^3` plus the six curl fields completing the 3-D BDDF₁ space.
pub fn bddf1_reference_basis<T: Scalar>() -> Vec<VectorPoly<T>> {
    let mut out = Vec::new();
    for k in 0..3 {
        out.push(VectorPoly::axis(k, MultiPoly::one()));
        for j in 0..3 {
            out.push(VectorPoly::axis(k, MultiPoly::var(j)));
        }
    }
    let mono = |e: [u32; 3]| MultiPoly::monomial(e, T::one());
    for (k, e) in [
        (2, [1, 2, 0]),
        (2, [1, 1, 1]),
        (0, [0, 1, 2]),
        (0, [1, 1, 1]),
        (1, [2, 0, 1]),
        (1, [1, 1, 1]),
    ] {
        out.push(VectorPoly::axis(k, mono(e)).curl());
    }
    out
}

/// Face tests `Q_r(s, t)` (RT) or `P_r(s, t)` (BDDF).
fn face_monomials<T: Scalar>(r: u32, tensor: bool) -> [Vec<FacePoly<T>>; 6] {
    let list: Vec<FacePoly<T>> = if tensor {
        box_monomials([r, r, 0])
            .into_iter()
            .map(|e| MultiPoly::monomial(e, T::one()))
            .collect()
    } else {
        crate::polyalg::exponents_p2(r)
            .into_iter()
            .map(|(a, b)| MultiPoly::monomial([a, b, 0], T::one()))
            .collect()
    };
    std::array::from_fn(|_| list.clone())
}

/// Mapped Raviart-Thomas space of index `r` with `W = Q_r` in reference coordinates.
pub fn build_rt<T: Scalar>(hex: &Hexahedron, r: u32) -> Result<ElementSpace<T>> {
    let _ = hex;
    let basis: Vec<RefVectorFunction<T>> = rt_reference_basis::<T>(r)
        .into_iter()
        .enumerate()
        .map(|(i, v)| RefVectorFunction::new(v, format!("rt_{i}")))
        .collect();
    let w_basis: Vec<MultiPoly<T>> = box_monomials([r; 3])
        .into_iter()
        .map(|e| MultiPoly::monomial(e, T::one()))
        .collect();
    let face_tests = face_monomials::<T>(r, true);
    let mut interior_tests = Vec::new();
    if r >= 1 {
        for k in 0..3 {
            let mut max = [r; 3];
            max[k] = r - 1;
            for e in box_monomials(max) {
                interior_tests.push(VectorPoly::axis(k, MultiPoly::monomial(e, T::one())));
            }
        }
    }
    let dofs = standard_dofs(&face_tests, 0, interior_tests.len());
    finalize(ElementSpace {
        spec: SpaceSpec::Rt { r },
        basis,
        n_supplements: 0,
        w_basis,
        face_tests,
        div_tests: Vec::new(),
        interior_tests,
        dofs,
        info: BuildInfo::default(),
    })
}

/// Mapped BDDF₁ space with `W = P_0`.
pub fn build_bddf1<T: Scalar>(hex: &Hexahedron) -> Result<ElementSpace<T>> {
    let _ = hex;
    let basis: Vec<RefVectorFunction<T>> = bddf1_reference_basis::<T>()
        .into_iter()
        .enumerate()
        .map(|(i, v)| RefVectorFunction::new(v, format!("bddf_{i}")))
        .collect();
    let face_tests = face_monomials::<T>(1, false);
    let dofs = standard_dofs(&face_tests, 0, 0);
    finalize(ElementSpace {
        spec: SpaceSpec::Bddf1,
        basis,
        n_supplements: 0,
        w_basis: vec![MultiPoly::one()],
        face_tests,
        div_tests: Vec::new(),
        interior_tests: Vec::new(),
        dofs,
        info: BuildInfo::default(),
    })
}
