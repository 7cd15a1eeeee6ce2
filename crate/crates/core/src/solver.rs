//! Hybridized mixed method: local condensation to face multipliers, global solve, recovery and
//! error norms for the manufactured test problem.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use nalgebra_sparse::{coo::CooMatrix, csr::CsrMatrix};

use crate::element::{build_space, ElementSpace, SpaceSpec};
use crate::error::{HexError, Result};
use crate::geometry::{FaceAxes, Hexahedron, Point};
use crate::mesh::{FaceMap, Mesh, MeshFamily};
use crate::polyalg::{gauss_rule, FacePoly, MultiPoly, PowerTable};

/// Elliptic problem `u = -a ∇p`, `div u = f`, with Dirichlet data `p` on the boundary.
pub trait Problem: Sync {
    fn p(&self, x: &Point) -> f64;
    fn u(&self, x: &Point) -> Vector3<f64>;
    fn f(&self, x: &Point) -> f64;
    fn a_inv(&self, _x: &Point) -> Matrix3<f64> {
        Matrix3::identity()
    }
}

/// `p = cos πx cos πy cos πz`, `a = 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Manufactured;

impl Problem for Manufactured {
    fn p(&self, x: &Point) -> f64 {
        (PI * x.x).cos() * (PI * x.y).cos() * (PI * x.z).cos()
    }
    fn u(&self, x: &Point) -> Vector3<f64> {
        let (s, c): (Vec<f64>, Vec<f64>) = (0..3)
            .map(|k| ((PI * x[k]).sin(), (PI * x[k]).cos()))
            .unzip();
        Vector3::new(s[0] * c[1] * c[2], c[0] * s[1] * c[2], c[0] * c[1] * s[2]) * PI
    }
    fn f(&self, x: &Point) -> f64 {
        3.0 * PI * PI * self.p(x)
    }
}

/// Solver settings.
#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Relative residual for conjugate gradients.
    pub tol: f64,
    /// Largest interior multiplier count solved by dense Cholesky.
    pub dense_limit: usize,
    /// Quadrature degree per variable for element matrices (default `2r + 4`).
    pub assembly_degree: Option<u32>,
    /// Quadrature degree per variable for error norms (default `2r + 8`).
    pub error_degree: Option<u32>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            dense_limit: 2000,
            assembly_degree: None,
            error_degree: None,
        }
    }
}

/// Condensed local data kept for recovery.
#[derive(Clone, Debug)]
struct LocalBlock {
    c: DMatrix<f64>,
    ainv_bt: DMatrix<f64>,
    ainv_ct: DMatrix<f64>,
    sb_inv: DMatrix<f64>,
    f: DVector<f64>,
    b: DMatrix<f64>,
    /// Global multiplier index of every local multiplier row.
    dofs: Vec<usize>,
}

/// Solved discrete problem.
#[derive(Clone, Debug)]
pub struct HybridSolution {
    pub spec: SpaceSpec,
    pub hexes: Vec<Hexahedron>,
    pub spaces: Vec<ElementSpace<f64>>,
    /// Velocity coefficients per cell.
    pub u: Vec<DVector<f64>>,
    /// Pressure coefficients per cell (in `w_basis`).
    pub p: Vec<DVector<f64>>,
    pub lambda: DVector<f64>,
    pub mult_dofs: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub interior_dofs: usize,
    pub schur_asymmetry: f64,
    pub cg_iterations: usize,
    pub residual: f64,
    /// `max |Σ_E ∫ (u_h·ν) μ|` over interior multipliers, relative to the largest local flux.
    pub flux_jump: f64,
    /// `max_E |∫_E div u_h - ∫_E f|` relative to the largest load entry.
    pub mass_balance: f64,
    pub max_dof_condition: f64,
}

/// Multiplier basis of local face `lf` of cell `c`: the owner's face tests, composed with the
/// face map on the neighbor side.
fn multiplier_basis(
    mesh: &Mesh,
    spaces: &[ElementSpace<f64>],
    c: usize,
    lf: usize,
) -> Vec<FacePoly<f64>> {
    let face = &mesh.faces[mesh.cell_faces[c][lf]];
    let (oc, of) = face.owner;
    let base = &spaces[oc].face_tests[of];
    if (oc, of) == (c, lf) {
        return base.clone();
    }
    let (_, _, map) = face.neighbor.expect("neighbor side");
    let sub = face_map_polys(&map);
    base.iter().map(|m| m.substitute(&sub)).collect()
}

fn face_map_polys(map: &FaceMap) -> [MultiPoly<f64>; 3] {
    let comp = |k: usize| {
        MultiPoly::constant(map.p0[k])
            + MultiPoly::var(0).scale(&(map.p1[k] - map.p0[k]))
            + MultiPoly::var(1).scale(&(map.p2[k] - map.p0[k]))
    };
    [comp(0), comp(1), MultiPoly::var(2)]
}

fn local_block(
    hex: &Hexahedron,
    space: &ElementSpace<f64>,
    mults: &[Vec<FacePoly<f64>>],
    problem: &dyn Problem,
    degree: u32,
    cell: usize,
) -> Result<(LocalBlock, DMatrix<f64>, DVector<f64>)> {
    let nv = space.dim();
    let nw = space.w_dim();
    let rule = gauss_rule(3, degree);
    let maxdeg = 12;
    let mut a = DMatrix::zeros(nv, nv);
    let mut b = DMatrix::zeros(nw, nv);
    let mut f = DVector::zeros(nw);
    let mut phys = vec![Vector3::zeros(); nv];
    let mut div = vec![0.0; nv];
    let mut w = vec![0.0; nw];
    for (xh, wt) in rule.points.iter().zip(&rule.weights) {
        let pt = PowerTable::new(xh, maxdeg);
        let (df, j) = hex.jacobian(xh);
        let x = hex.map(xh);
        let ainv = problem.a_inv(&x);
        for (k, v) in space.basis.iter().enumerate() {
            let vh = pt.eval_vec(&v.vpoly);
            phys[k] = df * Vector3::from(vh);
            div[k] = pt.eval(&v.div);
        }
        for (k, q) in space.w_basis.iter().enumerate() {
            w[k] = pt.eval(q);
        }
        let s = wt / j;
        for i in 0..nv {
            let ai = ainv * phys[i];
            for jj in i..nv {
                a[(i, jj)] += s * ai.dot(&phys[jj]);
            }
        }
        let fx = problem.f(&x);
        for k in 0..nw {
            for jj in 0..nv {
                b[(k, jj)] += wt * w[k] * div[jj];
            }
            f[k] += wt * fx * w[k] * j;
        }
    }
    for i in 0..nv {
        for jj in 0..i {
            a[(i, jj)] = a[(jj, i)];
        }
    }
    let nc: usize = mults.iter().map(|m| m.len()).sum();
    let mut c = DMatrix::zeros(nc, nv);
    let mut row = 0;
    for (lf, ms) in mults.iter().enumerate() {
        let traces: Vec<FacePoly<f64>> = space.basis.iter().map(|v| v.ref_trace(lf)).collect();
        for m in ms {
            for (jj, tr) in traces.iter().enumerate() {
                c[(row, jj)] = (m * tr).integrate_unit_square();
            }
            row += 1;
        }
    }
    let singular = || HexError::SingularLocalBlock { cell };
    let achol = a.clone().cholesky().ok_or_else(singular)?;
    let ainv_bt = achol.solve(&b.transpose());
    let ainv_ct = achol.solve(&c.transpose());
    let sb = &b * &ainv_bt;
    let sb_inv = sb.cholesky().ok_or_else(singular)?.inverse();
    let cab = &c * &ainv_bt;
    let k = &c * &ainv_ct - &cab * &sb_inv * cab.transpose();
    let g = &cab * (&sb_inv * &f);
    Ok((
        LocalBlock {
            c,
            ainv_bt,
            ainv_ct,
            sb_inv,
            f,
            b,
            dofs: Vec::new(),
        },
        k,
        g,
    ))
}

/// `K`-weighted `L²` projection of the exact pressure onto the multiplier basis of a boundary face.
fn boundary_values(
    hex: &Hexahedron,
    cell: usize,
    lf: usize,
    mults: &[FacePoly<f64>],
    problem: &dyn Problem,
    degree: u32,
) -> Result<DVector<f64>> {
    let rule = gauss_rule(2, degree);
    let ax = FaceAxes::of(lf);
    let d = mults.len();
    let mut m = DMatrix::zeros(d, d);
    let mut rhs = DVector::zeros(d);
    for (q, wt) in rule.points.iter().zip(&rule.weights) {
        let (s, t) = (q[0], q[1]);
        let k = hex.face(lf).k_at(s, t);
        let x = hex.map(&ax.point(s, t));
        let mu: Vec<f64> = mults.iter().map(|p| p.eval(&[s, t, 0.0])).collect();
        let px = problem.p(&x);
        for i in 0..d {
            rhs[i] += wt * k * px * mu[i];
            for j in 0..d {
                m[(i, j)] += wt * k * mu[i] * mu[j];
            }
        }
    }
    m.cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or(HexError::SingularLocalBlock { cell })
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(
    a: &CsrMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, usize, f64)> {
    let n = b.len();
    let mut diag = DVector::from_element(n, 1.0);
    for (i, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            if i == j && v != 0.0 {
                diag[i] = 1.0 / v;
            }
        }
    }
    let matvec = |x: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for (i, row) in a.row_iter().enumerate() {
            let mut s = 0.0;
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                s += v * x[j];
            }
            y[i] = s;
        }
        y
    };
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.clone();
    let mut z = r.component_mul(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 1..=max_iter {
        let ap = matvec(&p);
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let res = r.norm() / bnorm;
        if res < tol {
            return Ok((x, it, res));
        }
        z = r.component_mul(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    Err(HexError::SolverDivergence {
        iterations: max_iter,
        residual: r.norm() / bnorm,
    })
}

/// Build every element, condense, solve for the multipliers and recover `u_h`, `p_h`.
pub fn solve(
    mesh: &Mesh,
    spec: SpaceSpec,
    problem: &dyn Problem,
    opts: &SolverOptions,
) -> Result<HybridSolution> {
    let hexes = mesh.hexes()?;
    let spaces: Vec<ElementSpace<f64>> = hexes
        .iter()
        .enumerate()
        .map(|(c, h)| {
            build_space::<f64>(h, spec).map_err(|e| HexError::ElementBuildFailure {
                cell: c,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let d = spec.face_dim();
    let n_mult = mesh.num_faces() * d;
    let degree = opts.assembly_degree.unwrap_or(spec.assembly_degree());

    // boundary multipliers
    let mut lambda = DVector::zeros(n_mult);
    let mut is_boundary = vec![false; n_mult];
    for (g, face) in mesh.faces.iter().enumerate() {
        if face.is_boundary() {
            let (c, lf) = face.owner;
            let vals =
                boundary_values(&hexes[c], c, lf, &spaces[c].face_tests[lf], problem, degree)?;
            for m in 0..d {
                lambda[g * d + m] = vals[m];
                is_boundary[g * d + m] = true;
            }
        }
    }
    let mut interior_index = vec![usize::MAX; n_mult];
    let mut n_int = 0;
    for i in 0..n_mult {
        if !is_boundary[i] {
            interior_index[i] = n_int;
            n_int += 1;
        }
    }

    let mut blocks = Vec::with_capacity(hexes.len());
    let mut coo = CooMatrix::new(n_int, n_int);
    let mut rhs = DVector::zeros(n_int);
    let mut max_cond: f64 = 0.0;
    for (c, hex) in hexes.iter().enumerate() {
        let mults: Vec<Vec<FacePoly<f64>>> = (0..6)
            .map(|lf| multiplier_basis(mesh, &spaces, c, lf))
            .collect();
        let (mut blk, k, g) = local_block(hex, &spaces[c], &mults, problem, degree, c)?;
        max_cond = max_cond.max(spaces[c].info.dof_condition);
        blk.dofs = (0..6)
            .flat_map(|lf| (0..d).map(move |m| (lf, m)))
            .map(|(lf, m)| mesh.cell_faces[c][lf] * d + m)
            .collect();
        for (i, &gi) in blk.dofs.iter().enumerate() {
            if is_boundary[gi] {
                continue;
            }
            let ii = interior_index[gi];
            rhs[ii] += g[i];
            for (j, &gj) in blk.dofs.iter().enumerate() {
                if is_boundary[gj] {
                    rhs[ii] -= k[(i, j)] * lambda[gj];
                } else {
                    coo.push(ii, interior_index[gj], k[(i, j)]);
                }
            }
        }
        blocks.push(blk);
    }
    let csr = CsrMatrix::from(&coo);
    let schur_asymmetry = {
        let t = csr.transpose();
        let diff = &csr - &t;
        let num = diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let den = csr.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let (x, iters, residual) = if n_int == 0 {
        (DVector::zeros(0), 0, 0.0)
    } else if n_int <= opts.dense_limit {
        let mut dense = DMatrix::zeros(n_int, n_int);
        for (i, j, v) in csr.triplet_iter() {
            dense[(i, j)] += *v;
        }
        let sym = (&dense + dense.transpose()) * 0.5;
        let x = sym
            .clone()
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .or_else(|| sym.clone().lu().solve(&rhs))
            .ok_or(HexError::SolverDivergence {
                iterations: 0,
                residual: f64::INFINITY,
            })?;
        let res = (&sym * &x - &rhs).norm() / rhs.norm().max(1e-300);
        (x, 0, res)
    } else {
        pcg(&csr, &rhs, opts.tol, 20 * n_int)?
    };
    for i in 0..n_mult {
        if !is_boundary[i] {
            lambda[i] = x[interior_index[i]];
        }
    }

    // recovery
    let mut u = Vec::with_capacity(blocks.len());
    let mut p = Vec::with_capacity(blocks.len());
    let mut flux = DVector::<f64>::zeros(n_mult);
    let mut flux_scale: f64 = 0.0;
    let mut mass: f64 = 0.0;
    let mut mass_scale: f64 = 0.0;
    for blk in &blocks {
        let lam = DVector::from_iterator(blk.dofs.len(), blk.dofs.iter().map(|&g| lambda[g]));
        let ct_lam = blk.c.transpose() * &lam;
        let pc = &blk.sb_inv * (&blk.f + blk.ainv_bt.transpose() * &ct_lam);
        let uc = &blk.ainv_bt * &pc - &blk.ainv_ct * &lam;
        let cu = &blk.c * &uc;
        for (i, &g) in blk.dofs.iter().enumerate() {
            flux[g] += cu[i];
            flux_scale = flux_scale.max(cu[i].abs());
        }
        let bu = &blk.b * &uc;
        mass = mass.max((bu[0] - blk.f[0]).abs());
        mass_scale = mass_scale.max(blk.f.amax());
        u.push(uc);
        p.push(pc);
    }
    let flux_jump = (0..n_mult)
        .filter(|&i| !is_boundary[i])
        .map(|i| flux[i].abs())
        .fold(0.0, f64::max)
        / flux_scale.max(1e-300);
    Ok(HybridSolution {
        spec,
        hexes,
        spaces,
        u,
        p,
        lambda,
        mult_dofs: n_mult,
        diagnostics: Diagnostics {
            interior_dofs: n_int,
            schur_asymmetry,
            cg_iterations: iters,
            residual,
            flux_jump,
            mass_balance: mass / mass_scale.max(1e-300),
            max_dof_condition: max_cond,
        },
    })
}

/// `(‖p - p_h‖, ‖u - u_h‖, ‖div(u - u_h)‖)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub p: f64,
    pub u: f64,
    pub div: f64,
}

impl HybridSolution {
    pub fn error_norms(&self, problem: &dyn Problem, degree: Option<u32>) -> ErrorNorms {
        let deg = degree.unwrap_or(2 * self.spec.r() + 8);
        let rule = gauss_rule(3, deg);
        let (mut ep, mut eu, mut ed) = (0.0, 0.0, 0.0);
        for (c, hex) in self.hexes.iter().enumerate() {
            let sp = &self.spaces[c];
            for (xh, wt) in rule.points.iter().zip(&rule.weights) {
                let pt = PowerTable::new(xh, 12);
                let (df, j) = hex.jacobian(xh);
                let x = hex.map(xh);
                let ph: f64 = sp
                    .w_basis
                    .iter()
                    .zip(self.p[c].iter())
                    .map(|(w, pc)| pc * pt.eval(w))
                    .sum();
                let mut vh = Vector3::zeros();
                let mut dh = 0.0;
                for (v, uc) in sp.basis.iter().zip(self.u[c].iter()) {
                    vh += Vector3::from(pt.eval_vec(&v.vpoly)) * *uc;
                    dh += uc * pt.eval(&v.div);
                }
                let uh = df * vh / j;
                dh /= j;
                ep += wt * j * (problem.p(&x) - ph).powi(2);
                eu += wt * j * (problem.u(&x) - uh).norm_squared();
                ed += wt * j * (problem.f(&x) - dh).powi(2);
            }
        }
        ErrorNorms {
            p: ep.sqrt(),
            u: eu.sqrt(),
            div: ed.sqrt(),
        }
    }
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub cells: usize,
    pub mult_dofs: usize,
    pub errors: ErrorNorms,
    /// Orders relative to the previous row (`None` for the first).
    pub orders: Option<ErrorNorms>,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct StudyResult {
    pub mesh: String,
    pub space: String,
    pub rows: Vec<StudyRow>,
}

/// Observed order between two refinement levels.
pub fn order(e0: f64, e1: f64, n0: usize, n1: usize) -> f64 {
    (e0 / e1).ln() / (n1 as f64 / n0 as f64).ln()
}

/// Solve on each `n` of a mesh family and tabulate errors and orders.
pub fn run_study(
    family: MeshFamily,
    spec: SpaceSpec,
    ns: &[usize],
    opts: &SolverOptions,
) -> Result<StudyResult> {
    let mut rows: Vec<StudyRow> = Vec::new();
    for &n in ns {
        let t0 = std::time::Instant::now();
        let mesh = Mesh::generate(family, n)?;
        let row = study_row(&mesh, n, spec, opts, rows.last(), t0)?;
        rows.push(row);
    }
    Ok(StudyResult {
        mesh: family.name().into(),
        space: spec.name(),
        rows,
    })
}

/// Solve on an explicit mesh and produce a table row (orders against `prev`).
pub fn study_row(
    mesh: &Mesh,
    n: usize,
    spec: SpaceSpec,
    opts: &SolverOptions,
    prev: Option<&StudyRow>,
    t0: std::time::Instant,
) -> Result<StudyRow> {
    let sol = solve(mesh, spec, &Manufactured, opts)?;
    let errors = sol.error_norms(&Manufactured, opts.error_degree);
    let orders = prev.map(|p| ErrorNorms {
        p: order(p.errors.p, errors.p, p.n, n),
        u: order(p.errors.u, errors.u, p.n, n),
        div: order(p.errors.div, errors.div, p.n, n),
    });
    Ok(StudyRow {
        n,
        cells: mesh.num_cells(),
        mult_dofs: sol.mult_dofs,
        errors,
        orders,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

impl StudyResult {
    pub const CSV_HEADER: [&'static str; 10] = [
        "mesh",
        "n",
        "cells",
        "mult_dofs",
        "p_err",
        "p_ord",
        "u_err",
        "u_ord",
        "div_err",
        "div_ord",
    ];

    /// Rows as CSV records (orders empty on the first row).
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let o = |f: fn(&ErrorNorms) -> f64| {
                    r.orders
                        .as_ref()
                        .map(|o| format!("{:.2}", f(o)))
                        .unwrap_or_default()
                };
                vec![
                    self.mesh.clone(),
                    r.n.to_string(),
                    r.cells.to_string(),
                    r.mult_dofs.to_string(),
                    format!("{:.3e}", r.errors.p),
                    o(|e| e.p),
                    format!("{:.3e}", r.errors.u),
                    o(|e| e.u),
                    format!("{:.3e}", r.errors.div),
                    o(|e| e.div),
                ]
            })
            .collect()
    }

    /// Aligned markdown table.
    pub fn to_markdown(&self) -> String {
        let header = [
            "n",
            "cells",
            "mult DOFs",
            "‖p−p_h‖",
            "ord",
            "‖u−u_h‖",
            "ord",
            "‖div(u−u_h)‖",
            "ord",
        ];
        let rows: Vec<Vec<String>> = self
            .csv_records()
            .into_iter()
            .map(|r| r[1..].to_vec())
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|k| {
                rows.iter()
                    .map(|r| r[k].chars().count())
                    .chain([header[k].chars().count()])
                    .max()
                    .unwrap_or(1)
            })
            .collect();
        let line = |cells: Vec<String>| -> String {
            let mut s = String::from("|");
            for (k, c) in cells.iter().enumerate() {
                let _ = write!(s, " {c:>w$} |", w = widths[k]);
            }
            s
        };
        let mut out = format!("{} on {} meshes\n\n", self.space, self.mesh);
        out.push_str(&line(header.iter().map(|s| s.to_string()).collect()));
        out.push('\n');
        out.push('|');
        for w in &widths {
            out.push_str(&format!("{}:|", "-".repeat(w + 1)));
        }
        out.push('\n');
        for r in rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::At1Mode;

    #[test]
    fn manufactured_identities() {
        let m = Manufactured;
        let o = Point::zeros();
        assert_eq!(m.p(&o), 1.0);
        assert!((m.f(&o) - 3.0 * PI * PI).abs() < 1e-14);
        // div u = f and u = -grad p by central differences
        let h = 1e-5;
        for x in [Point::new(0.1, 0.4, 0.7), Point::new(0.9, 0.2, 0.35)] {
            let mut div = 0.0;
            for k in 0..3 {
                let mut e = Point::zeros();
                e[k] = h;
                div += (m.u(&(x + e))[k] - m.u(&(x - e))[k]) / (2.0 * h);
                let g = (m.p(&(x + e)) - m.p(&(x - e))) / (2.0 * h);
                assert!((m.u(&x)[k] + g).abs() < 1e-8);
            }
            assert!((div - m.f(&x)).abs() < 1e-7);
        }
    }

    #[test]
    fn multiplier_counts() {
        let opts = SolverOptions::default();
        let mesh = Mesh::gen_cube(2).unwrap();
        for (spec, want) in [
            (SpaceSpec::At0Simple, 36),
            (
                SpaceSpec::At1 {
                    mode: At1Mode::Symmetric,
                    reduced: false,
                },
                108,
            ),
            (SpaceSpec::Bddf1, 108),
            (SpaceSpec::Rt { r: 1 }, 144),
        ] {
            let s = solve(&mesh, spec, &Manufactured, &opts).unwrap();
            assert_eq!(s.mult_dofs, want);
        }
    }

    #[test]
    fn discrete_conservation_and_continuity() {
        let opts = SolverOptions::default();
        for mesh in [Mesh::gen_cube(1).unwrap(), Mesh::gen_pillar(2).unwrap()] {
            for spec in [
                SpaceSpec::At0Simple,
                SpaceSpec::At1 {
                    mode: At1Mode::Auto,
                    reduced: true,
                },
                SpaceSpec::Rt { r: 1 },
            ] {
                let s = solve(&mesh, spec, &Manufactured, &opts).unwrap();
                let d = &s.diagnostics;
                assert!(d.flux_jump < 1e-10, "{}: {}", spec.name(), d.flux_jump);
                assert!(
                    d.mass_balance < 1e-10,
                    "{}: {}",
                    spec.name(),
                    d.mass_balance
                );
                assert!(d.schur_asymmetry < 1e-12);
            }
        }
    }

    /// A problem whose solution lies in every AT₁ space: errors vanish up to round-off.
    struct Linear;
    impl Problem for Linear {
        fn p(&self, x: &Point) -> f64 {
            1.0 + 2.0 * x.x - x.y + 0.5 * x.z
        }
        fn u(&self, _x: &Point) -> Vector3<f64> {
            Vector3::new(-2.0, 1.0, -0.5)
        }
        fn f(&self, _x: &Point) -> f64 {
            0.0
        }
    }

    #[test]
    fn linear_pressure_is_reproduced() {
        let opts = SolverOptions::default();
        let mesh = Mesh::gen_pillar(2).unwrap();
        for spec in [
            SpaceSpec::At0Simple,
            SpaceSpec::At1 {
                mode: At1Mode::Auto,
                reduced: false,
            },
        ] {
            let s = solve(&mesh, spec, &Linear, &opts).unwrap();
            let e = s.error_norms(&Linear, None);
            assert!(e.u < 1e-10 && e.div < 1e-10, "{}: {e:?}", spec.name());
            if spec.r() == 1 {
                assert!(e.p < 1e-10, "{e:?}");
            }
        }
    }

    #[test]
    fn pcg_matches_dense() {
        let mesh = Mesh::gen_cube(4).unwrap();
        let spec = SpaceSpec::At0Simple;
        let a = solve(&mesh, spec, &Manufactured, &SolverOptions::default()).unwrap();
        let b = solve(
            &mesh,
            spec,
            &Manufactured,
            &SolverOptions {
                dense_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(b.diagnostics.cg_iterations > 0);
        assert!((&a.lambda - &b.lambda).amax() < 1e-9);
    }

    #[test]
    fn table_emitters() {
        let r = run_study(
            MeshFamily::Cube,
            SpaceSpec::At0Simple,
            &[2, 4],
            &SolverOptions::default(),
        )
        .unwrap();
        let recs = r.csv_records();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0][5], "");
        assert!(!recs[1][5].is_empty());
        let md = r.to_markdown();
        assert_eq!(md.lines().filter(|l| l.starts_with('|')).count(), 4);
        assert!((order(1.0, 0.25, 2, 4) - 2.0).abs() < 1e-14);
    }
}
