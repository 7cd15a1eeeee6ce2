use nalgebra::{DMatrix, DVector};

use super::at0::realize_constant_fluxes;
use super::{
    at_face_tests, finalize, fit_trace, scalar_p_pullback, standard_dofs, BuildInfo, ElementSpace,
    FaceFrame, Frame, HexPolys, SpaceSpec,
};
use crate::error::{HexError, Result};
use crate::geometry::Hexahedron;
use crate::polyalg::{basis_curl_p, dim_p2, exponents_p, MultiPoly, Scalar, VectorPoly};
use crate::supplement::{supplement_trace, RefVectorFunction};

/// Number of supplements: 2 for `r = 0`, `3(r+1)` otherwise.
pub fn supplement_count(r: u32) -> usize {
    if r == 0 {
        2
    } else {
        3 * (r as usize + 1)
    }
}

/// Spectral diagnostics of the general construction.
#[derive(Clone, Debug)]
pub struct SvdInfo {
    pub singular_values: Vec<f64>,
    /// Rows of `N`, the discarded right singular vectors.
    pub n: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub phi: DVector<f64>,
    pub s_phi_max: f64,
    /// Flux matrix `[M; S]` condition number.
    pub stacked_condition: f64,
    /// Largest least-squares residual of the trace fits.
    pub fit_residual: f64,
}

/// AT_r (full) or AT_r^red via the null-space projection of the polynomial flux matrix.
pub fn build_general_r<T: Scalar>(
    hex: &Hexahedron,
    r: u32,
    reduced: bool,
) -> Result<ElementSpace<T>> {
    if reduced && r == 0 {
        return Err(HexError::DegenerateElement(
            "reduced space needs r >= 1".into(),
        ));
    }
    let frame = Frame::of_hex(hex);
    let hp = HexPolys::<T>::new(hex);
    let g = hp.frame_coords(&frame);
    let mut basis: Vec<RefVectorFunction<T>> = basis_curl_p::<T>(r)
        .iter()
        .enumerate()
        .map(|(i, v)| RefVectorFunction::new(hp.pullback_with(&g, v), format!("curl_{i}")))
        .collect();
    let n_poly = basis.len();
    let d2 = dim_p2(r);
    let nf = 6 * d2;
    let n_supp = supplement_count(r);

    let frames: Vec<FaceFrame> = (0..6).map(|f| FaceFrame::new(hex, f, r)).collect();
    let mut mfull = DMatrix::zeros(n_poly, nf);
    let mut fit_residual: f64 = 0.0;
    for (i, b) in basis.iter().enumerate() {
        let bf = b.to_f64();
        for (f, ff) in frames.iter().enumerate() {
            let (c, res) = fit_trace(hex, ff, &bf);
            fit_residual = fit_residual.max(res);
            for (m, v) in c.iter().enumerate() {
                mfull[(i, f * d2 + m)] = *v;
            }
        }
    }
    let svd = mfull.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let keep = nf - n_supp;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if keep > sv.len() || sv[order[keep - 1]] < 1e-10 * smax {
        return Err(HexError::RankDeficiency {
            reason: format!("polynomial flux matrix rank below {keep}"),
            singular_values: sv,
        });
    }
    // complete the kept rows to an orthonormal basis of R^nf
    let rows: Vec<DVector<f64>> = order[..keep]
        .iter()
        .map(|&i| vt.row(i).transpose())
        .collect();
    let mut null = Vec::new();
    for e in 0..nf {
        let mut v = DVector::zeros(nf);
        v[e] = 1.0;
        for q in rows.iter().chain(null.iter()) {
            let d = q.dot(&v);
            v -= q * d;
        }
        for q in rows.iter().chain(null.iter()) {
            let d = q.dot(&v);
            v -= q * d;
        }
        let nrm = v.norm();
        if nrm > 1e-8 && null.len() < n_supp {
            null.push(v / nrm);
        }
    }
    let n = DMatrix::from_fn(n_supp, nf, |i, j| null[i][j]);
    let phi = DVector::from_fn(nf, |j, _| {
        if j % d2 == 0 {
            hex.face(j / d2).area
        } else {
            0.0
        }
    });
    let s = &n * (DMatrix::identity(nf, nf) - &phi * phi.transpose() / phi.dot(&phi));
    let s_phi_max = (&s * &phi).amax() / phi.amax();
    let mut stacked = DMatrix::zeros(n_poly + n_supp, nf);
    stacked.rows_mut(0, n_poly).copy_from(&mfull);
    stacked.rows_mut(n_poly, n_supp).copy_from(&s);
    let stacked_condition = super::condition_number(&stacked);

    // realize each row of S as a divergence-free supplement
    let mono: Vec<Vec<RefVectorFunction<T>>> = (0..6)
        .map(|f| {
            (1..d2)
                .map(|m| supplement_trace::<T>(hex, f, &frames[f].raw_poly::<T>(m)).0)
                .collect()
        })
        .collect();
    for row in 0..n_supp {
        let mut consts = [0.0; 6];
        let mut acc = RefVectorFunction::zero();
        for f in 0..6 {
            consts[f] = s[(row, f * d2)];
            for m in 1..d2 {
                let c = s[(row, f * d2 + m)];
                if c != 0.0 {
                    acc = acc.add(&mono[f][m - 1].scale(&T::from_f64(c)));
                }
            }
        }
        acc = acc.add(&realize_constant_fluxes::<T>(hex, &consts));
        basis.push(acc.with_tag(format!("sigma_{row}")));
    }

    // divergence representatives y·m
    let top = if reduced { r.saturating_sub(1) } else { r };
    for e in exponents_p(top)
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() >= 1)
    {
        let m = MultiPoly::monomial(e, T::one());
        let v = VectorPoly::position([T::zero(), T::zero(), T::zero()]).mul_poly(&m);
        basis.push(RefVectorFunction::new(
            hp.pullback_with(&g, &v),
            format!("y*m{e:?}"),
        ));
    }

    let w_basis = if reduced {
        scalar_p_pullback(&hp, &frame, r - 1)
    } else {
        scalar_p_pullback(&hp, &frame, r)
    };
    let face_tests = at_face_tests::<T>(hex, r);
    let div_tests: Vec<usize> = (1..w_basis.len()).collect();
    let dofs = standard_dofs(&face_tests, div_tests.len(), 0);
    let info = SvdInfo {
        singular_values: sv,
        n,
        s,
        phi,
        s_phi_max,
        stacked_condition,
        fit_residual,
    };
    finalize(ElementSpace {
        spec: SpaceSpec::AtR { r, reduced },
        basis,
        n_supplements: n_supp,
        w_basis,
        face_tests,
        div_tests,
        interior_tests: Vec::new(),
        dofs,
        info: BuildInfo {
            svd: Some(info),
            ..Default::default()
        },
    })
}
