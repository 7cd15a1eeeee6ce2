//! Element spaces on a single hexahedron: AT (full and reduced), mapped RT and BDDF, their DOF
//! functionals and the canonical projection.

mod at0;
mod at1;
mod classic;
mod general;
mod report;

pub use at0::{
    at0_general_matrices, at0_simple_shape_functions, build_at0_general, build_at0_simple,
    At0Matrices, AT0_ORDER,
};
pub use at1::{appendix_b_matrix, build_at1, d_value, select_st, At1Info};
pub use classic::{bddf1_reference_basis, build_bddf1, build_rt, rt_reference_basis};
pub use general::{build_general_r, supplement_count, SvdInfo};
pub use report::{affine_normalize, geometry_report, lemma51_check, GeometryReport};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::error::{HexError, Result};
use crate::geometry::{FaceAxes, Hexahedron, Point};
use crate::polyalg::{
    exponents_p2, gauss_rule, FacePoly, MultiPoly, PowerTable, Scalar, VectorPoly,
};
use crate::supplement::RefVectorFunction;

/// Mode of the AT₁ supplements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum At1Mode {
    Auto,
    Symmetric,
    Nonsymmetric,
}

impl std::str::FromStr for At1Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "symmetric" | "sym" => Ok(Self::Symmetric),
            "nonsymmetric" | "nonsym" => Ok(Self::Nonsymmetric),
            _ => Err(format!("unknown AT1 mode '{s}'")),
        }
    }
}

/// Which element space to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceSpec {
    At0Simple,
    At0General,
    At1 { mode: At1Mode, reduced: bool },
    AtR { r: u32, reduced: bool },
    Rt { r: u32 },
    Bddf1,
}

/// Family grouping used for dimension formulas and multiplier spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    AtFull,
    AtRed,
    Rt,
    Bddf,
}

impl SpaceSpec {
    /// Parse the command-line name (`at0`, `at0g`, `at1`, `at1red`, `atr:<r>`, `atrred:<r>`, `rt0`,
    /// `rt1`, `bddf1`).
    pub fn parse(s: &str, mode: At1Mode) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        let parse_r = |t: &str| t.parse::<u32>().map_err(|_| format!("bad index in '{s}'"));
        let spec = match s.as_str() {
            "at0" => Self::At0Simple,
            "at0g" => Self::At0General,
            "at1" => Self::At1 {
                mode,
                reduced: false,
            },
            "at1red" => Self::At1 {
                mode,
                reduced: true,
            },
            "rt0" => Self::Rt { r: 0 },
            "rt1" => Self::Rt { r: 1 },
            "bddf1" => Self::Bddf1,
            _ => {
                if let Some(t) = s.strip_prefix("atrred:") {
                    Self::AtR {
                        r: parse_r(t)?,
                        reduced: true,
                    }
                } else if let Some(t) = s.strip_prefix("atr:") {
                    Self::AtR {
                        r: parse_r(t)?,
                        reduced: false,
                    }
                } else {
                    return Err(format!("unknown space '{s}'"));
                }
            }
        };
        match spec {
            Self::AtR { r, .. } if r > 2 => Err(format!("index r = {r} is not supported (r <= 2)")),
            Self::AtR {
                r: 0,
                reduced: true,
            } => Err("the reduced space needs r >= 1".into()),
            _ => Ok(spec),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::At0Simple => "AT0".into(),
            Self::At0General => "AT0g".into(),
            Self::At1 { reduced: false, .. } => "AT1".into(),
            Self::At1 { reduced: true, .. } => "AT1red".into(),
            Self::AtR { r, reduced: false } => format!("AT{r}(general)"),
            Self::AtR { r, reduced: true } => format!("AT{r}red(general)"),
            Self::Rt { r } => format!("RT{r}"),
            Self::Bddf1 => "BDDF1".into(),
        }
    }

    pub fn r(&self) -> u32 {
        match self {
            Self::At0Simple | Self::At0General => 0,
            Self::At1 { .. } | Self::Bddf1 => 1,
            Self::AtR { r, .. } | Self::Rt { r } => *r,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::At0Simple | Self::At0General => Family::AtFull,
            Self::At1 { reduced, .. } | Self::AtR { reduced, .. } => {
                if *reduced {
                    Family::AtRed
                } else {
                    Family::AtFull
                }
            }
            Self::Rt { .. } => Family::Rt,
            Self::Bddf1 => Family::Bddf,
        }
    }

    /// `(dim V(E), dim W(E))`.
    pub fn expected_dims(&self) -> (usize, usize) {
        let r = self.r() as usize;
        match self.family() {
            Family::AtFull => {
                let extra = if r == 0 { 2 } else { 3 * (r + 1) };
                (
                    (r + 1) * (r + 2) * (r + 4) / 2 + extra,
                    (r + 1) * (r + 2) * (r + 3) / 6,
                )
            }
            Family::AtRed => (
                (r + 1) * (r + 2) * (r + 3) / 2 + 3 * (r + 1),
                r * (r + 1) * (r + 2) / 6,
            ),
            Family::Rt => (3 * (r + 2) * (r + 1) * (r + 1), (r + 1).pow(3)),
            Family::Bddf => (18, 1),
        }
    }

    /// Multiplier dimension per face.
    pub fn face_dim(&self) -> usize {
        let r = self.r() as usize;
        match self.family() {
            Family::Rt => (r + 1) * (r + 1),
            _ => (r + 1) * (r + 2) / 2,
        }
    }

    /// Quadrature degree per variable for element integrals.
    pub fn assembly_degree(&self) -> u32 {
        2 * self.r() + 4
    }
}

/// Degree-of-freedom functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dof {
    /// `∫_f (v·ν) μ_k dA` with `μ_k` the `k`-th face test function.
    Flux { face: usize, k: usize },
    /// `∫_E div v · w_k dx`.
    Div { k: usize },
    /// `∫_Ê v̂ · q̂_k dx̂`.
    Interior { k: usize },
}

/// Construction diagnostics.
#[derive(Clone, Debug, Default)]
pub struct BuildInfo {
    pub at0: Option<At0Matrices>,
    pub at1: Option<At1Info>,
    pub svd: Option<SvdInfo>,
    /// Condition number of the DOF matrix.
    pub dof_condition: f64,
}

/// Basis and DOFs of a local space.
#[derive(Clone, Debug)]
pub struct ElementSpace<T: Scalar> {
    pub spec: SpaceSpec,
    /// Reference vector polynomials; the physical functions are their Piola images.
    pub basis: Vec<RefVectorFunction<T>>,
    pub n_supplements: usize,
    /// Scalar space `W(E)` as reference polynomials `w ∘ F_E`.
    pub w_basis: Vec<MultiPoly<T>>,
    /// Face test functions (the multiplier basis) in the face variables `(s, t)` of each face.
    pub face_tests: [Vec<FacePoly<T>>; 6],
    /// Indices into `w_basis` used as divergence DOFs.
    pub div_tests: Vec<usize>,
    /// Reference fields for interior moments.
    pub interior_tests: Vec<VectorPoly<T>>,
    pub dofs: Vec<Dof>,
    pub info: BuildInfo,
}

/// Physical coordinates `y = (x - center)/scale` used for polynomial bases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub center: [f64; 3],
    pub scale: f64,
}

impl Frame {
    pub fn identity() -> Self {
        Self {
            center: [0.0; 3],
            scale: 1.0,
        }
    }

    pub fn of_hex(hex: &Hexahedron) -> Self {
        let c = hex.center();
        Self {
            center: [c.x, c.y, c.z],
            scale: hex.diameter(),
        }
    }

    pub fn to_local(&self, x: &Point) -> [f64; 3] {
        std::array::from_fn(|k| (x[k] - self.center[k]) / self.scale)
    }

    /// `y_k` as an affine polynomial in the physical variables.
    pub fn local_var<T: Scalar>(&self, k: usize) -> MultiPoly<T> {
        let inv = T::one() / T::from_f64(self.scale);
        MultiPoly::affine_var(k, -(T::from_f64(self.center[k]) * inv.clone()), inv)
    }
}

/// Polynomial data of the reference map, computed once per element.
#[derive(Clone, Debug)]
pub struct HexPolys<T: Scalar> {
    pub map: [MultiPoly<T>; 3],
    pub adj: [[MultiPoly<T>; 3]; 3],
}

impl<T: Scalar> HexPolys<T> {
    pub fn new(hex: &Hexahedron) -> Self {
        Self {
            map: hex.map_polys(),
            adj: hex.adjugate_polys(),
        }
    }

    /// `y ∘ F_E` for a frame.
    pub fn frame_coords(&self, frame: &Frame) -> [MultiPoly<T>; 3] {
        let inv = T::one() / T::from_f64(frame.scale);
        std::array::from_fn(|k| {
            (&self.map[k] - &MultiPoly::constant(T::from_f64(frame.center[k]))).scale(&inv)
        })
    }

    /// Reference polynomial whose Piola image is the physical field `v(y)`.
    pub fn pullback(&self, frame: &Frame, v: &VectorPoly<T>) -> VectorPoly<T> {
        let g = self.frame_coords(frame);
        self.pullback_with(&g, v)
    }

    pub fn pullback_with(&self, g: &[MultiPoly<T>; 3], v: &VectorPoly<T>) -> VectorPoly<T> {
        let vg = v.substitute(g);
        let comp = |i: usize| {
            let mut out = MultiPoly::zero();
            for j in 0..3 {
                out = out + &self.adj[i][j] * &vg.c[j];
            }
            out
        };
        VectorPoly::new(comp(0), comp(1), comp(2))
    }

    /// `p ∘ y ∘ F_E`.
    pub fn pullback_scalar(&self, frame: &Frame, p: &MultiPoly<T>) -> MultiPoly<T> {
        p.substitute(&self.frame_coords(frame))
    }
}

/// Per-face polynomial basis `{1} ∪ {((x_i-c_i)/h)^a ((x_j-c_j)/h)^b - avg}` in the face's local
/// variables, centered at the face centroid and scaled by `sqrt|f|`.
#[derive(Clone, Debug)]
pub struct FaceFrame {
    pub face: usize,
    pub vars: (usize, usize),
    pub center: [f64; 3],
    pub scale: f64,
    pub exps: Vec<(u32, u32)>,
    /// Face averages of the raw monomials (first entry is 1).
    pub avgs: Vec<f64>,
}

impl FaceFrame {
    pub fn new(hex: &Hexahedron, face: usize, r: u32) -> Self {
        let fd = hex.face(face);
        let mut ff = Self {
            face,
            vars: fd.local_vars,
            center: fd.centroid,
            scale: fd.area.sqrt(),
            exps: exponents_p2(r),
            avgs: Vec::new(),
        };
        let k = hex.face_jacobian_poly::<f64>(face);
        let fm = hex.face_map_polys::<f64>(face);
        ff.avgs = (0..ff.exps.len())
            .map(|m| {
                (&k * &ff.raw_poly::<f64>(m).substitute(&fm)).integrate_unit_square() / fd.area
            })
            .collect();
        ff
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Raw monomial `m` as a physical polynomial.
    pub fn raw_poly<T: Scalar>(&self, m: usize) -> MultiPoly<T> {
        let (a, b) = self.exps[m];
        let inv = T::one() / T::from_f64(self.scale);
        let lv = |k: usize| {
            MultiPoly::affine_var(k, -(T::from_f64(self.center[k]) * inv.clone()), inv.clone())
        };
        &lv(self.vars.0).pow(a) * &lv(self.vars.1).pow(b)
    }

    /// Mean-zero basis values at a physical point (entry 0 is the constant 1).
    pub fn eval(&self, x: &Point) -> Vec<f64> {
        let u = (x[self.vars.0] - self.center[self.vars.0]) / self.scale;
        let v = (x[self.vars.1] - self.center[self.vars.1]) / self.scale;
        self.exps
            .iter()
            .enumerate()
            .map(|(m, &(a, b))| {
                if m == 0 {
                    1.0
                } else {
                    u.powi(a as i32) * v.powi(b as i32) - self.avgs[m]
                }
            })
            .collect()
    }

    /// Mean-zero basis pulled back to the face variables `(s, t)` of `hex`.
    pub fn pulled_back<T: Scalar>(&self, hex: &Hexahedron) -> Vec<FacePoly<T>> {
        let fm = hex.face_map_polys::<T>(self.face);
        (0..self.len())
            .map(|m| {
                if m == 0 {
                    MultiPoly::one()
                } else {
                    self.raw_poly::<T>(m).substitute(&fm)
                        - MultiPoly::constant(T::from_f64(self.avgs[m]))
                }
            })
            .collect()
    }
}

/// Least-squares coefficients of the physical normal trace of `v` on face `face` in the
/// mean-zero face basis, with the maximum residual at the fitting points.
pub fn fit_trace(hex: &Hexahedron, ff: &FaceFrame, v: &RefVectorFunction<f64>) -> (Vec<f64>, f64) {
    let n = ff.exps.iter().map(|&(a, b)| a + b).max().unwrap_or(0) as usize + 3;
    let (g, _) = crate::polyalg::gauss_legendre_01(n);
    let ax = FaceAxes::of(ff.face);
    let tr = v.ref_trace(ff.face);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for &s in &g {
        for &t in &g {
            let x = hex.map(&ax.point(s, t));
            rows.push(ff.eval(&x));
            rhs.push(tr.eval(&[s, t, 0.0]) / hex.face(ff.face).k_at(s, t));
        }
    }
    let a = DMatrix::from_fn(rows.len(), ff.len(), |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-14).expect("least squares");
    let res = (&a * &c - &b).amax();
    (c.iter().copied().collect(), res)
}

impl<T: Scalar> ElementSpace<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn w_dim(&self) -> usize {
        self.w_basis.len()
    }

    /// Exact value of DOF `d` on a reference vector polynomial.
    pub fn dof_exact(&self, d: &Dof, v: &RefVectorFunction<T>) -> T {
        match *d {
            Dof::Flux { face, k } => {
                (&self.face_tests[face][k] * &v.ref_trace(face)).integrate_unit_square()
            }
            Dof::Div { k } => (&self.w_basis[self.div_tests[k]] * &v.div).integrate_unit_cube(),
            Dof::Interior { k } => {
                let q = &self.interior_tests[k];
                (0..3).fold(T::zero(), |acc, c| {
                    acc + (&q.c[c] * &v.vpoly.c[c]).integrate_unit_cube()
                })
            }
        }
    }

    /// DOF matrix in the coefficient field; rows are DOFs, columns basis functions.
    pub fn dof_matrix_exact(&self) -> Vec<Vec<T>> {
        self.dofs
            .iter()
            .map(|d| self.basis.iter().map(|v| self.dof_exact(d, v)).collect())
            .collect()
    }

    pub fn dof_matrix(&self) -> DMatrix<f64> {
        let m = self.dof_matrix_exact();
        DMatrix::from_fn(self.dofs.len(), self.basis.len(), |i, j| m[i][j].to_f64())
    }

    /// Rows of the DOF matrix that belong to flux DOFs, transposed so that rows are basis
    /// functions (the flux matrix).
    pub fn flux_matrix(&self) -> DMatrix<f64> {
        let d = self.dof_matrix();
        let rows: Vec<usize> = self
            .dofs
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Dof::Flux { .. }))
            .map(|(i, _)| i)
            .collect();
        DMatrix::from_fn(self.basis.len(), rows.len(), |j, i| d[(rows[i], j)])
    }

    /// Shape function coefficients: column `i` expresses the function dual to DOF `i`.
    pub fn shape_coefficients(&self) -> Result<DMatrix<f64>> {
        let d = self.dof_matrix();
        let cond = condition_number(&d);
        d.try_inverse()
            .filter(|_| cond.is_finite() && cond < 1e14)
            .ok_or(HexError::SingularDofMatrix { cond })
    }

    pub fn shape_functions(&self) -> Result<Vec<RefVectorFunction<f64>>> {
        let c = self.shape_coefficients()?;
        let b: Vec<RefVectorFunction<f64>> = self.basis.iter().map(|v| v.to_f64()).collect();
        Ok((0..self.dim())
            .map(|i| {
                let mut acc = RefVectorFunction::zero();
                for (j, bj) in b.iter().enumerate() {
                    acc = acc.add(&bj.scale(&c[(j, i)]));
                }
                acc.with_tag(format!("phi_{i}"))
            })
            .collect())
    }

    pub fn to_f64(&self) -> ElementSpace<f64> {
        ElementSpace {
            spec: self.spec,
            basis: self.basis.iter().map(|v| v.to_f64()).collect(),
            n_supplements: self.n_supplements,
            w_basis: self.w_basis.iter().map(|p| p.to_f64()).collect(),
            face_tests: std::array::from_fn(|f| {
                self.face_tests[f].iter().map(|p| p.to_f64()).collect()
            }),
            div_tests: self.div_tests.clone(),
            interior_tests: self.interior_tests.iter().map(|q| q.to_f64()).collect(),
            dofs: self.dofs.clone(),
            info: self.info.clone(),
        }
    }

    /// JSON dump of the reference coefficient tables.
    pub fn to_json(&self) -> serde_json::Value {
        let poly = |p: &MultiPoly<T>| -> Vec<(Vec<u32>, f64)> {
            p.terms().map(|(e, c)| (e.to_vec(), c.to_f64())).collect()
        };
        serde_json::json!({
            "space": self.spec.name(),
            "dim": self.dim(),
            "w_dim": self.w_dim(),
            "supplements": self.n_supplements,
            "dof_condition": self.info.dof_condition,
            "basis": self.basis.iter().map(|v| serde_json::json!({
                "tag": v.tag,
                "components": v.vpoly.c.iter().map(poly).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "w_basis": self.w_basis.iter().map(poly).collect::<Vec<_>>(),
        })
    }
}

impl ElementSpace<f64> {
    /// DOF values of a smooth physical field `v` with divergence `divv`, by quadrature.
    pub fn dofs_of_field(
        &self,
        hex: &Hexahedron,
        v: &dyn Fn(&Point) -> [f64; 3],
        divv: &dyn Fn(&Point) -> f64,
        degree: u32,
    ) -> DVector<f64> {
        let face_rule = gauss_rule(2, degree);
        let vol_rule = gauss_rule(3, degree);
        DVector::from_iterator(
            self.dofs.len(),
            self.dofs.iter().map(|d| match *d {
                Dof::Flux { face, k } => {
                    let ax = FaceAxes::of(face);
                    let nu = Vector3::from(hex.face(face).normal);
                    face_rule.integrate(|p| {
                        let (s, t) = (p[0], p[1]);
                        let x = hex.map(&ax.point(s, t));
                        let val = Vector3::from(v(&x)).dot(&nu);
                        self.face_tests[face][k].eval(&[s, t, 0.0])
                            * val
                            * hex.face(face).k_at(s, t)
                    })
                }
                Dof::Div { k } => vol_rule.integrate(|xh| {
                    let (_, j) = hex.jacobian(xh);
                    divv(&hex.map(xh)) * self.w_basis[self.div_tests[k]].eval(xh) * j
                }),
                Dof::Interior { k } => vol_rule.integrate(|xh| {
                    let (df, j) = hex.jacobian(xh);
                    let vh = df.try_inverse().unwrap_or_else(Matrix3::zeros)
                        * Vector3::from(v(&hex.map(xh)))
                        * j;
                    let q = self.interior_tests[k].eval(xh);
                    vh.x * q[0] + vh.y * q[1] + vh.z * q[2]
                }),
            }),
        )
    }

    /// Coefficients of the canonical projection `π v` in the basis.
    pub fn pi_project(
        &self,
        hex: &Hexahedron,
        v: &dyn Fn(&Point) -> [f64; 3],
        divv: &dyn Fn(&Point) -> f64,
        degree: u32,
    ) -> Result<DVector<f64>> {
        let d = self.dof_matrix();
        let cond = condition_number(&d);
        let lu = d.lu();
        let rhs = self.dofs_of_field(hex, v, divv, degree);
        lu.solve(&rhs)
            .filter(|_| cond < 1e14)
            .ok_or(HexError::SingularDofMatrix { cond })
    }

    /// `max_k |∫_E (div π v - div v) w_k| / ‖w_k‖`, the commuting-diagram residual.
    pub fn commuting_residual(
        &self,
        hex: &Hexahedron,
        v: &dyn Fn(&Point) -> [f64; 3],
        divv: &dyn Fn(&Point) -> f64,
        degree: u32,
    ) -> Result<f64> {
        let c = self.pi_project(hex, v, divv, degree)?;
        let rule = gauss_rule(3, degree);
        let mut worst: f64 = 0.0;
        for w in &self.w_basis {
            let r = rule.integrate(|xh| {
                let (_, j) = hex.jacobian(xh);
                let dpi: f64 = self
                    .basis
                    .iter()
                    .zip(c.iter())
                    .map(|(b, cj)| cj * b.div.eval(xh))
                    .sum::<f64>()
                    / j;
                (dpi - divv(&hex.map(xh))) * w.eval(xh) * j
            });
            let wn = rule
                .integrate(|xh| w.eval(xh).powi(2) * hex.jacobian(xh).1)
                .sqrt();
            worst = worst.max(r.abs() / wn.max(1e-300));
        }
        Ok(worst)
    }

    /// Physical value of `Σ c_j v_j` at `x̂`.
    pub fn eval_combination(&self, hex: &Hexahedron, c: &[f64], xh: &[f64; 3]) -> [f64; 3] {
        let pt = PowerTable::new(xh, 8);
        let mut vh = [0.0; 3];
        for (b, cj) in self.basis.iter().zip(c) {
            let v = pt.eval_vec(&b.vpoly);
            for k in 0..3 {
                vh[k] += cj * v[k];
            }
        }
        let (df, j) = hex.jacobian(xh);
        let p = df * Vector3::from(vh) / j;
        [p.x, p.y, p.z]
    }

    /// Largest residual of projecting `div v_j` onto `W` (zero when `div V ⊆ W`).
    pub fn div_in_w_residual(&self, hex: &Hexahedron) -> f64 {
        let rule = gauss_rule(3, self.spec.assembly_degree() + 2);
        let nw = self.w_basis.len();
        let mut mass = DMatrix::zeros(nw, nw);
        for (p, wt) in rule.points.iter().zip(&rule.weights) {
            let j = hex.jacobian(p).1;
            let w: Vec<f64> = self.w_basis.iter().map(|q| q.eval(p)).collect();
            for a in 0..nw {
                for b in 0..nw {
                    mass[(a, b)] += wt * j * w[a] * w[b];
                }
            }
        }
        let chol = mass.cholesky().expect("W mass matrix");
        let mut worst: f64 = 0.0;
        for b in &self.basis {
            let divf = |p: &[f64; 3]| b.div.eval(p) / hex.jacobian(p).1;
            let rhs = DVector::from_iterator(
                nw,
                self.w_basis
                    .iter()
                    .map(|w| rule.integrate(|p| divf(p) * w.eval(p) * hex.jacobian(p).1)),
            );
            let c = chol.solve(&rhs);
            let norm = rule
                .integrate(|p| divf(p).powi(2) * hex.jacobian(p).1)
                .sqrt();
            let res = rule
                .integrate(|p| {
                    let proj: f64 = self
                        .w_basis
                        .iter()
                        .zip(c.iter())
                        .map(|(w, ci)| ci * w.eval(p))
                        .sum();
                    (divf(p) - proj).powi(2) * hex.jacobian(p).1
                })
                .max(0.0)
                .sqrt();
            worst = worst.max(res / norm.max(1.0));
        }
        worst
    }
}

/// 2-norm condition number from the SVD.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Build any supported space.
pub fn build_space<T: Scalar>(hex: &Hexahedron, spec: SpaceSpec) -> Result<ElementSpace<T>> {
    match spec {
        SpaceSpec::At0Simple => build_at0_simple(hex),
        SpaceSpec::At0General => build_at0_general(hex),
        SpaceSpec::At1 { mode, reduced } => build_at1(hex, mode, reduced),
        SpaceSpec::AtR { r, reduced } => build_general_r(hex, r, reduced),
        SpaceSpec::Rt { r } => build_rt(hex, r),
        SpaceSpec::Bddf1 => build_bddf1(hex),
    }
}

/// Face tests of an AT space: the mean-zero physical face basis pulled back.
pub(crate) fn at_face_tests<T: Scalar>(hex: &Hexahedron, r: u32) -> [Vec<FacePoly<T>>; 6] {
    std::array::from_fn(|f| FaceFrame::new(hex, f, r).pulled_back(hex))
}

/// Flux DOFs for every face test followed by the given divergence DOFs.
pub(crate) fn standard_dofs<T: Scalar>(
    face_tests: &[Vec<FacePoly<T>>; 6],
    n_div: usize,
    n_int: usize,
) -> Vec<Dof> {
    let mut d = Vec::new();
    for (face, tests) in face_tests.iter().enumerate() {
        for k in 0..tests.len() {
            d.push(Dof::Flux { face, k });
        }
    }
    d.extend((0..n_div).map(|k| Dof::Div { k }));
    d.extend((0..n_int).map(|k| Dof::Interior { k }));
    d
}

/// Verify the DOF matrix is square and invertible and record its condition number.
pub(crate) fn finalize<T: Scalar>(mut space: ElementSpace<T>) -> Result<ElementSpace<T>> {
    if space.dofs.len() != space.basis.len() {
        return Err(HexError::DegenerateElement(format!(
            "{}: {} DOFs for {} basis functions",
            space.spec.name(),
            space.dofs.len(),
            space.basis.len()
        )));
    }
    let cond = condition_number(&space.dof_matrix());
    space.info.dof_condition = cond;
    if !(cond < 1e13) {
        return Err(HexError::SingularDofMatrix { cond });
    }
    Ok(space)
}

/// Physical polynomial space `P_r` in frame coordinates, pulled back (monomials ordered by degree).
pub(crate) fn scalar_p_pullback<T: Scalar>(
    hp: &HexPolys<T>,
    frame: &Frame,
    r: u32,
) -> Vec<MultiPoly<T>> {
    let g = hp.frame_coords(frame);
    crate::polyalg::basis_p::<T>(r)
        .iter()
        .map(|p| p.substitute(&g))
        .collect()
}
