//! Randomized invariant suites over fixed and random admissible cells.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::{
    at0_general_matrices, build_at1, build_space, geometry_report, lemma51_check, At1Mode,
    SpaceSpec,
};
use crate::geometry::{random, FaceAxes, Hexahedron, Point};
use crate::mesh::{Mesh, MeshFamily};
use crate::polyalg::{gauss_legendre_01, Rational, Scalar};
use crate::supplement::{supplement_monomial, supplement_pair, RefVectorFunction};

/// Default seed of every suite (`HEXDIV_SEED` overrides it in the command-line tool).
pub const DEFAULT_SEED: u64 = 20170;

/// Pass count and worst measured value of one property.
#[derive(Clone, Debug)]
pub struct PropertyCount {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl PropertyCount {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            passed: 0,
            total: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    /// Record a measured value against `tol` (pass when `value <= tol`).
    fn measure(&mut self, value: f64, tol: f64, what: impl FnOnce() -> String) {
        self.total += 1;
        self.worst = self.worst.max(value);
        if value <= tol {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(format!("{}: {value:.3e}", what()));
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub properties: Vec<PropertyCount>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.properties.iter().all(PropertyCount::ok)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyCount> {
        self.properties.iter().find(|p| p.name == name)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (seed {})", self.suite, self.seed)?;
        for p in &self.properties {
            write!(
                f,
                "  [{}] {}: {}/{} worst {:.3e}",
                if p.ok() { "pass" } else { "FAIL" },
                p.name,
                p.passed,
                p.total,
                p.worst
            )?;
            if let Some(m) = &p.first_failure {
                write!(f, " first failure: {m}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub const SUITES: [&str; 5] = ["supplements", "spaces", "projection", "lemma51", "appendix"];

pub fn run_suite(name: &str, seed: u64) -> Option<SuiteReport> {
    Some(match name {
        "supplements" => supplements(seed, 100),
        "spaces" => spaces(seed, 100),
        "projection" => projection(seed, 30),
        "lemma51" => lemma51(seed, 1000),
        "appendix" => appendix(seed, 100),
        _ => return None,
    })
}

/// Cells of the `n = 2` trapezoid and pillar meshes.
pub fn pattern_cells() -> Vec<Hexahedron> {
    let mut v = vec![Hexahedron::unit_cube()];
    for fam in [MeshFamily::Trapezoid, MeshFamily::Pillar] {
        v.extend(
            Mesh::generate(fam, 2)
                .and_then(|m| m.hexes())
                .expect("pattern meshes are admissible"),
        );
    }
    v
}

/// `count` random admissible cells cycling through the three generator kinds.
pub fn random_cells(seed: u64, count: usize) -> Vec<Hexahedron> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| match i % 3 {
            0 => random::perturbed_cube(&mut rng, 0.2),
            1 => random::one_parallel_pair(&mut rng, 0.15),
            _ => random::truncated_pillar(&mut rng, 0.15),
        })
        .collect()
}

fn face_points() -> Vec<(f64, f64)> {
    let (g, _) = gauss_legendre_01(3);
    g.iter()
        .flat_map(|&s| g.iter().map(move |&t| (s, t)))
        .collect()
}

/// Largest deviation of the physical trace from `want(face, x)` over face Gauss points.
fn trace_deviation(
    hex: &Hexahedron,
    v: &RefVectorFunction<f64>,
    want: &dyn Fn(usize, &Point) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..6 {
        for (s, t) in face_points() {
            let x = hex.map(&FaceAxes::of(j).point(s, t));
            worst = worst.max((v.physical_trace(hex, j, s, t) - want(j, &x)).abs());
        }
    }
    worst
}

/// Supplements: exactly zero reference divergence and the prescribed face fluxes.
pub fn supplements(seed: u64, count: usize) -> SuiteReport {
    let mut div = PropertyCount::new("supplement divergence is the zero polynomial");
    let mut mono = PropertyCount::new("monomial supplement flux contract");
    let mut pair = PropertyCount::new("pair supplement flux contract");
    let mut spaces = PropertyCount::new("AT space supplements divergence-free");
    let mut cells = pattern_cells();
    cells.extend(random_cells(seed, count));
    for (c, h) in cells.iter().enumerate() {
        for i in 0..6 {
            let (a, b) = h.face(i).local_vars;
            for (l, m) in [(1, 0), (0, 1), (1, 1)] {
                let (s, cst) = supplement_monomial::<Rational>(h, i, l, m);
                div.check(s.div.is_zero(), || format!("cell {c} sigma^{i}_{l},{m}"));
                let cst = Scalar::to_f64(&cst);
                let dev = trace_deviation(h, &s.to_f64(), &|j, x| {
                    if j == i {
                        x[a].powi(l as i32) * x[b].powi(m as i32) - cst
                    } else {
                        0.0
                    }
                });
                mono.measure(dev, 1e-10, || format!("cell {c} sigma^{i}_{l},{m}"));
            }
            let j = (i + 1 + (c % 5)) % 6;
            let p = supplement_pair::<Rational>(h, i, j);
            div.check(p.div.is_zero(), || format!("cell {c} sigma^{i},{j}"));
            let (ai, aj) = (h.face(i).area, h.face(j).area);
            let dev = trace_deviation(h, &p.to_f64(), &|f, _| {
                if f == i {
                    1.0 / ai
                } else if f == j {
                    -1.0 / aj
                } else {
                    0.0
                }
            });
            pair.measure(dev, 1e-10, || format!("cell {c} sigma^{i},{j}"));
        }
        {
            for mode in [At1Mode::Symmetric, At1Mode::Nonsymmetric] {
                if let Ok(s) = build_at1::<Rational>(h, mode, true) {
                    let n = s.basis.len();
                    for b in &s.basis[n - s.n_supplements..] {
                        spaces.check(b.div.is_zero(), || format!("cell {c} {}", b.tag));
                    }
                }
            }
        }
    }
    SuiteReport {
        suite: "supplements".into(),
        seed,
        properties: vec![div, mono, pair, spaces],
    }
}

fn all_specs() -> Vec<SpaceSpec> {
    let mut v = vec![SpaceSpec::At0Simple, SpaceSpec::At0General];
    for mode in [At1Mode::Symmetric, At1Mode::Nonsymmetric] {
        for reduced in [false, true] {
            v.push(SpaceSpec::At1 { mode, reduced });
        }
    }
    v.extend([
        SpaceSpec::AtR {
            r: 1,
            reduced: false,
        },
        SpaceSpec::AtR {
            r: 1,
            reduced: true,
        },
        SpaceSpec::Rt { r: 0 },
        SpaceSpec::Rt { r: 1 },
        SpaceSpec::Bddf1,
    ]);
    v
}

/// Dimensions, DOF unisolvence and the AT₀ general flux matrices.
pub fn spaces(seed: u64, count: usize) -> SuiteReport {
    let mut dims = PropertyCount::new("dim V and dim W match the closed forms");
    let mut unisolvent = PropertyCount::new("DOF matrix condition < 1e10");
    let mut divw = PropertyCount::new("div V within W");
    let mut mnt = PropertyCount::new("M N^T = 0 (AT0 general)");
    let mut sphi = PropertyCount::new("S phi = 0 (AT0 general)");
    let mut l51 = PropertyCount::new("[M; S] invertible (AT0 general)");
    let mut cells = pattern_cells();
    cells.extend(random_cells(seed, count));
    for (c, h) in cells.iter().enumerate() {
        let m = match at0_general_matrices(h) {
            Ok(m) => m,
            Err(e) => {
                l51.check(false, || format!("cell {c}: {e}"));
                continue;
            }
        };
        mnt.measure(m.mnt_max, 1e-12, || format!("cell {c}"));
        sphi.measure(m.s_phi_max, 1e-12, || format!("cell {c}"));
        l51.check(lemma51_check(&m.m, &m.n, m.phi.as_slice()), || {
            format!("cell {c}")
        });
        for spec in all_specs() {
            match build_space::<f64>(h, spec) {
                Ok(s) => {
                    let (dv, dw) = spec.expected_dims();
                    dims.check(s.dim() == dv && s.w_dim() == dw, || {
                        format!(
                            "cell {c} {}: ({}, {}) vs ({dv}, {dw})",
                            spec.name(),
                            s.dim(),
                            s.w_dim()
                        )
                    });
                    unisolvent.measure(s.info.dof_condition, 1e10, || {
                        format!("cell {c} {}", spec.name())
                    });
                    // mapped classical spaces only keep div V ⊆ W on affine cells
                    if spec.family() != crate::element::Family::Rt
                        && spec.family() != crate::element::Family::Bddf
                        || h.is_affine(1e-12)
                    {
                        divw.measure(s.div_in_w_residual(h), 1e-10, || {
                            format!("cell {c} {}", spec.name())
                        });
                    }
                }
                Err(e) => dims.check(false, || format!("cell {c} {}: {e}", spec.name())),
            }
        }
    }
    SuiteReport {
        suite: "spaces".into(),
        seed,
        properties: vec![dims, unisolvent, divw, mnt, sphi, l51],
    }
}

/// Canonical projection: reproduces the space and commutes with the divergence.
pub fn projection(seed: u64, count: usize) -> SuiteReport {
    let mut repro = PropertyCount::new("pi reproduces basis functions");
    let mut comm = PropertyCount::new("commuting-diagram residual < 1e-10");
    let pi = std::f64::consts::PI;
    let sm = |x: &Point| {
        [
            (pi * x.x).sin() * x.y,
            (pi * x.y).cos() + x.z * x.x,
            (x.x + 2.0 * x.z).exp() * 0.1,
        ]
    };
    let dsm = |x: &Point| {
        pi * (pi * x.x).cos() * x.y - pi * (pi * x.y).sin() + 0.2 * (x.x + 2.0 * x.z).exp()
    };
    let mut cells = vec![Hexahedron::unit_cube()];
    cells.extend(random_cells(seed ^ 0x5eed, count));
    for (c, h) in cells.iter().enumerate() {
        for spec in all_specs() {
            let Ok(s) = build_space::<f64>(h, spec) else {
                comm.check(false, || {
                    format!("cell {c} {} failed to build", spec.name())
                });
                continue;
            };
            match s.commuting_residual(h, &sm, &dsm, 2 * spec.r() + 12) {
                Ok(r) => comm.measure(r, 1e-10, || format!("cell {c} {}", spec.name())),
                Err(e) => comm.check(false, || format!("cell {c} {}: {e}", spec.name())),
            }
            let k = c % s.dim();
            let b = &s.basis[k];
            let v = |x: &Point| {
                let xh = h.inverse_map(x).expect("inside");
                b.physical_value(h, &xh)
            };
            let dv = |x: &Point| {
                let xh = h.inverse_map(x).expect("inside");
                b.physical_div(h, &xh)
            };
            match s.pi_project(h, &v, &dv, 2 * spec.r() + 8) {
                Ok(coef) => {
                    let mut e = DVector::zeros(s.dim());
                    e[k] = 1.0;
                    repro.measure((coef - e).amax(), 1e-8, || {
                        format!("cell {c} {} basis {k}", spec.name())
                    });
                }
                Err(e) => repro.check(false, || format!("cell {c} {}: {e}", spec.name())),
            }
        }
    }
    SuiteReport {
        suite: "projection".into(),
        seed,
        properties: vec![repro, comm],
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn min_singular(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// Random instances of the projection-independence lemma, with a negative control each.
pub fn lemma51(seed: u64, trials: usize) -> SuiteReport {
    let mut pos = PropertyCount::new("[M; N(I - P_phi)] invertible when phi is outside row(N)");
    let mut neg = PropertyCount::new("singular when phi lies in row(N)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    while done < trials {
        let m = random_matrix(&mut rng, 4, 6);
        let n = random_matrix(&mut rng, 2, 6);
        let mut stacked = DMatrix::zeros(6, 6);
        stacked.rows_mut(0, 4).copy_from(&m);
        stacked.rows_mut(4, 2).copy_from(&n);
        if min_singular(&stacked) < 1e-3 {
            continue;
        }
        let phi = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        // distance of phi from row(N) through an orthonormal basis of that row space
        let q = n.transpose().qr().q();
        let resid = &phi - &q * (q.transpose() * &phi);
        if resid.norm() < 1e-3 * phi.norm() {
            continue;
        }
        done += 1;
        pos.check(lemma51_check(&m, &n, phi.as_slice()), || {
            format!("trial {done}")
        });
        let inside = n.transpose() * DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        neg.check(!lemma51_check(&m, &n, inside.as_slice()), || {
            format!("trial {done}")
        });
    }
    SuiteReport {
        suite: "lemma51".into(),
        seed,
        properties: vec![pos, neg],
    }
}

/// Normal and centroid matrices, the bilinear-determinant identity and the reduced determinant.
pub fn appendix(seed: u64, count: usize) -> SuiteReport {
    let mut minors = PropertyCount::new("principal minors of H positive");
    let mut cube = PropertyCount::new("C∘H = I on the unit cube");
    let mut nonsing = PropertyCount::new("det(C∘H) != 0 for parallel-pair and pillar cells");
    let mut ab = PropertyCount::new("a - b identity");
    let mut det = PropertyCount::new("reduced determinant = det(C∘H)");
    let r = geometry_report(&Hexahedron::unit_cube()).expect("cube");
    let dev = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (r.c_h[i][j] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    cube.measure(dev, 1e-14, || "unit cube".into());
    let mut cells = pattern_cells();
    cells.extend(random_cells(seed, count));
    for (c, h) in cells.iter().enumerate() {
        let rep = match geometry_report(h) {
            Ok(r) => r,
            Err(e) => {
                minors.check(false, || format!("cell {c}: {e}"));
                continue;
            }
        };
        minors.check(rep.h_minors.iter().all(|&m| m > 0.0), || {
            format!("cell {c}: {:?}", rep.h_minors)
        });
        if rep.parallel_pairs > 0 || rep.truncated_pillar {
            nonsing.check(rep.det_c_h.abs() > 1e-8, || {
                format!("cell {c}: {:.3e}", rep.det_c_h)
            });
        }
        match build_at1::<f64>(h, At1Mode::Nonsymmetric, true) {
            Ok(s) => {
                let info = s.info.at1.expect("AT1 info");
                let (a, b) = info.ab_identity;
                ab.measure((a - b).abs(), 1e-10, || format!("cell {c}"));
                let (formula, _) = info.appendix_b_det;
                det.measure((formula.abs() - info.det_c_h.abs()).abs(), 1e-10, || {
                    format!("cell {c}")
                });
            }
            Err(e) => ab.check(false, || format!("cell {c}: {e}")),
        }
    }
    SuiteReport {
        suite: "appendix".into(),
        seed,
        properties: vec![minors, cube, nonsing, ab, det],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for r in [
            supplements(1, 3),
            spaces(1, 3),
            projection(1, 1),
            lemma51(1, 50),
            appendix(1, 6),
        ] {
            assert!(r.ok(), "{r}");
            assert!(r.properties.iter().all(|p| p.total > 0), "{r}");
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 0).is_none());
    }
}
