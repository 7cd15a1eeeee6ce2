use nalgebra::{DMatrix, Matrix3};

use super::report::{affine_normalize, SYMMETRIC_THRESHOLD};
use super::{
    at_face_tests, finalize, standard_dofs, At1Mode, BuildInfo, ElementSpace, Frame, HexPolys,
    SpaceSpec,
};
use crate::error::{HexError, Result};
use crate::geometry::{FaceAxes, Hexahedron};
use crate::polyalg::{gauss_legendre_01, MultiPoly, Scalar, VectorPoly};
use crate::supplement::{supplement_pair, supplement_trace, RefVectorFunction};

/// Diagnostics of the AT₁ construction.
#[derive(Clone, Debug)]
pub struct At1Info {
    pub mode: At1Mode,
    pub det_c_h: f64,
    pub rel_det_c_h: f64,
    /// Chosen `(s, t)` and `d(s, t)` in non-symmetric mode.
    pub st: Option<(f64, f64, f64)>,
    /// `d(0,0) - d(|f5| c²₅, 0)` and its closed form.
    pub ab_identity: (f64, f64),
    /// Determinant of the 9×9 flux matrix on faces 1, 3, 5 (from the formula and from fitted traces).
    pub appendix_b_det: (f64, f64),
}

/// Normalized-element data: areas, centroids `c[i][l]`, normals `nu[i][l]`, volume.
struct Tilde {
    hex: Hexahedron,
    area: [f64; 6],
    c: [[f64; 3]; 6],
    nu: [[f64; 3]; 6],
    vol: f64,
}

impl Tilde {
    fn new(hex: &Hexahedron) -> Result<Self> {
        let (_, _, t) = affine_normalize(hex)?;
        Ok(Self {
            area: std::array::from_fn(|f| t.face(f).area),
            c: std::array::from_fn(|f| t.face(f).centroid),
            nu: std::array::from_fn(|f| t.face(f).normal),
            vol: t.volume(),
            hex: t,
        })
    }

    fn c_h(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|l, i| self.c[2 * i + 1][l] * self.nu[2 * i + 1][l])
    }
}

/// `d(s, t)`: determinant deciding independence of the non-symmetric supplements.
fn d_tilde(t: &Tilde, s: f64, tt: f64) -> f64 {
    let (a1, a3, a5) = (t.area[1], t.area[3], t.area[5]);
    let (c, nu) = (&t.c, &t.nu);
    let m11 = c[1][0] * nu[1][0] + nu[5][0] * (a5 * c[5][0] - tt) / a1;
    let m12 = c[3][0] * nu[3][0] + tt * nu[5][0] / a3;
    let m21 = c[1][1] * nu[1][1] + s * nu[5][1] / a1;
    let m22 = c[3][1] * nu[3][1] + nu[5][1] * (a5 * c[5][1] - s) / a3;
    m11 * m22 - m12 * m21
}

/// `d(s, t)` on the normalized image of `hex`.
pub fn d_value(hex: &Hexahedron, s: f64, t: f64) -> Result<f64> {
    Ok(d_tilde(&Tilde::new(hex)?, s, t))
}

/// Probe `(s, t)` values and return the maximizer of `|d|` with its value.
pub fn select_st(hex: &Hexahedron) -> Result<(f64, f64, f64)> {
    select_st_tilde(&Tilde::new(hex)?)
}

fn select_st_tilde(t: &Tilde) -> Result<(f64, f64, f64)> {
    let mut best = (0.0, 0.0, d_tilde(t, 0.0, 0.0));
    for sig in [t.area[5] * t.c[5][1], t.area[5] * t.c[5][0]] {
        for (s, tt) in [(sig, 0.0), (0.0, sig), (sig, sig)] {
            let d = d_tilde(t, s, tt);
            if d.abs() > best.2.abs() {
                best = (s, tt, d);
            }
        }
    }
    let scale = t.c_h().norm().powi(2).max(1e-300);
    if best.2.abs() < 1e-12 * scale {
        return Err(HexError::SupplementSelectionFailed { max_d: best.2 });
    }
    Ok(best)
}

/// The 9×9 flux matrix of `ψ*9, ψ*10, ψ*11` and the symmetric supplements on faces 1, 3, 5 in the
/// bases `[1, x2, x3 | 1, x1, x3 | 1, x1, x2]`.
pub fn appendix_b_matrix(hex: &Hexahedron) -> Result<DMatrix<f64>> {
    let t = Tilde::new(hex)?;
    Ok(appendix_b_tilde(&t))
}

fn appendix_b_tilde(t: &Tilde) -> DMatrix<f64> {
    let (n1, n3, n5, c) = (t.nu[1], t.nu[3], t.nu[5], &t.c);
    #[rustfmt::skip]
    let rows: [[f64; 9]; 9] = [
        [n1[0], -n1[1], -n1[2], 0.0, n3[0], 0.0, 0.0, n5[0], 0.0],
        [0.0, n1[1], 0.0, n3[1], -n3[0], -n3[2], 0.0, 0.0, n5[1]],
        [0.0, 0.0, n1[2], 0.0, 0.0, n3[2], n5[2], -n5[0], -n5[1]],
        [-c[1][1], 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [-c[1][2], 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -c[3][0], 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -c[3][2], 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -c[5][0], 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -c[5][1], 0.0, 1.0],
    ];
    DMatrix::from_fn(9, 9, |i, j| rows[i][j])
}

/// Fit the physical trace of `v` on face `f` of `t` in `[1, x_a, x_b]`.
fn fit_linear(
    t: &Hexahedron,
    f: usize,
    vars: (usize, usize),
    v: &RefVectorFunction<f64>,
) -> [f64; 3] {
    let (g, _) = gauss_legendre_01(3);
    let ax = FaceAxes::of(f);
    let tr = v.ref_trace(f);
    let mut a = DMatrix::zeros(9, 3);
    let mut b = nalgebra::DVector::zeros(9);
    let mut r = 0;
    for &s in &g {
        for &u in &g {
            let x = t.map(&ax.point(s, u));
            a[(r, 0)] = 1.0;
            a[(r, 1)] = x[vars.0];
            a[(r, 2)] = x[vars.1];
            b[r] = tr.eval(&[s, u, 0.0]) / t.face(f).k_at(s, u);
            r += 1;
        }
    }
    let c = a.svd(true, true).solve(&b, 1e-14).expect("least squares");
    [c[0], c[1], c[2]]
}

const B_VARS: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

/// `curl(λ_i λ_j ν_k)` on the normalized element, with `λ_{0,2,4} = x_{1,2,3}`,
/// `λ_6 = x1 + x2 + x3 - 1` and `ν_{0,2,4} = -e_{1,2,3}`.
fn lambda_curl<T: Scalar>(i: usize, j: usize, k: usize) -> VectorPoly<T> {
    let lam = |i: usize| -> MultiPoly<T> {
        if i == 6 {
            MultiPoly::var(0) + MultiPoly::var(1) + MultiPoly::var(2) - MultiPoly::one()
        } else {
            MultiPoly::var(i / 2)
        }
    };
    VectorPoly::axis(k / 2, -(&lam(i) * &lam(j))).curl()
}

/// AT₁ (full or reduced) built on the affine normalization of `hex`.
pub fn build_at1<T: Scalar>(
    hex: &Hexahedron,
    mode: At1Mode,
    reduced: bool,
) -> Result<ElementSpace<T>> {
    let t = Tilde::new(hex)?;
    let th = &t.hex;
    let hp = HexPolys::<T>::new(th);
    let id = Frame::identity();
    let pull = |v: &VectorPoly<T>, tag: &str| RefVectorFunction::new(hp.pullback(&id, v), tag);
    let pos = |k: usize| -> VectorPoly<T> {
        let mut x0 = [T::zero(), T::zero(), T::zero()];
        if k < 3 {
            x0[k] = T::one();
        }
        VectorPoly::position(x0)
    };
    let mut basis = vec![
        pull(&pos(0), "psi0"),
        pull(&lambda_curl(2, 6, 4), "psi1"),
        pull(&lambda_curl(4, 6, 2), "psi2"),
        pull(&pos(1), "psi3"),
        pull(&lambda_curl(0, 6, 4), "psi4"),
        pull(&lambda_curl(4, 6, 0), "psi5"),
        pull(&pos(2), "psi6"),
        pull(&lambda_curl(0, 6, 2), "psi7"),
        pull(&lambda_curl(2, 6, 0), "psi8"),
    ];
    for k in 0..3 {
        basis.push(pull(
            &VectorPoly::axis(k, MultiPoly::var(k)),
            &format!("psi*{}", 9 + k),
        ));
    }

    let c_h = t.c_h();
    let det_c_h = c_h.determinant();
    let row_norms: f64 = (0..3).map(|i| c_h.row(i).norm()).product();
    let rel = det_c_h.abs() / row_norms.max(1e-300);
    let mode = match mode {
        At1Mode::Auto => {
            if rel > SYMMETRIC_THRESHOLD {
                At1Mode::Symmetric
            } else {
                At1Mode::Nonsymmetric
            }
        }
        At1Mode::Symmetric if rel <= SYMMETRIC_THRESHOLD => {
            return Err(HexError::SingularCnuMatrix { rel_det: rel })
        }
        m => m,
    };

    let sup = |f: usize, var: usize| {
        let (s, _) = supplement_trace::<T>(th, f, &MultiPoly::var(var));
        s.with_tag(format!("sigma^{f}[x{}]", var + 1))
    };
    let mut supps = vec![sup(1, 1), sup(1, 2), sup(3, 0), sup(3, 2)];
    let mut st = None;
    match mode {
        At1Mode::Symmetric => {
            supps.push(sup(5, 0));
            supps.push(sup(5, 1));
        }
        _ => {
            let (s, tt, d) = select_st_tilde(&t)?;
            st = Some((s, tt, d));
            let a5 = T::from_f64(t.area[5]);
            let s4 = sup(5, 0)
                .add(&supplement_pair::<T>(th, 5, 1).scale(&(a5.clone() * T::from_f64(t.c[5][0]))))
                .add(&supplement_pair::<T>(th, 1, 3).scale(&T::from_f64(tt)));
            let s5 = sup(5, 1)
                .add(&supplement_pair::<T>(th, 5, 3).scale(&(a5 * T::from_f64(t.c[5][1]))))
                .add(&supplement_pair::<T>(th, 3, 1).scale(&T::from_f64(s)));
            supps.push(s4.with_tag("sigma4*"));
            supps.push(s5.with_tag("sigma5*"));
        }
    }

    let ab_identity = {
        let sig = t.area[5] * t.c[5][1];
        let diff = d_tilde(&t, 0.0, 0.0) - d_tilde(&t, sig, 0.0);
        (diff, t.nu[5][1] * sig * t.vol / (t.area[1] * t.area[3]))
    };
    let appendix_b_det = {
        let formula = appendix_b_tilde(&t).determinant();
        let mut fitted = DMatrix::zeros(9, 9);
        let sym: Vec<RefVectorFunction<f64>> = [(1, 1), (1, 2), (3, 0), (3, 2), (5, 0), (5, 1)]
            .iter()
            .map(|&(f, v)| supplement_trace::<f64>(th, f, &MultiPoly::var(v)).0)
            .collect();
        let rows: Vec<RefVectorFunction<f64>> =
            basis[9..12].iter().map(|b| b.to_f64()).chain(sym).collect();
        for (r, v) in rows.iter().enumerate() {
            for (bi, f) in [1usize, 3, 5].into_iter().enumerate() {
                let c = fit_linear(th, f, B_VARS[bi], v);
                for q in 0..3 {
                    fitted[(r, 3 * bi + q)] = c[q];
                }
            }
        }
        (formula, fitted.determinant())
    };

    basis.extend(supps);
    let mut w_basis = vec![MultiPoly::one()];
    if !reduced {
        for k in 0..3 {
            let xk = VectorPoly::position([T::zero(), T::zero(), T::zero()])
                .mul_poly(&MultiPoly::var(k));
            basis.push(pull(&xk, &format!("x*x{}", k + 1)));
            w_basis.push(hp.map[k].clone());
        }
    }
    let face_tests = at_face_tests::<T>(hex, 1);
    let div_tests: Vec<usize> = (1..w_basis.len()).collect();
    let dofs = standard_dofs(&face_tests, div_tests.len(), 0);
    finalize(ElementSpace {
        spec: SpaceSpec::At1 { mode, reduced },
        basis,
        n_supplements: 6,
        w_basis,
        face_tests,
        div_tests,
        interior_tests: Vec::new(),
        dofs,
        info: BuildInfo {
            at1: Some(At1Info {
                mode,
                det_c_h,
                rel_det_c_h: rel,
                st,
                ab_identity,
                appendix_b_det,
            }),
            ..Default::default()
        },
    })
}
