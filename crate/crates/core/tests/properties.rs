use hexdiv::element::{build_space, fit_trace, lemma51_check, At1Mode, FaceFrame, SpaceSpec};
use hexdiv::geometry::{random, FaceAxes, Hexahedron};
use hexdiv::mesh::{Mesh, MeshFamily};
use hexdiv::polyalg::{gauss_legendre_01, gauss_rule, MultiPoly, Rational, Scalar, VectorPoly};
use hexdiv::solver::{solve, Manufactured, SolverOptions};
use hexdiv::supplement::{
    expand_flux_coeffs, face_bubble, pulled_back_flux, supplement_monomial, supplement_pair,
    RefVectorFunction,
};
use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cell(seed: u64) -> Hexahedron {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match seed % 3 {
        0 => random::perturbed_cube(&mut rng, 0.2),
        1 => random::one_parallel_pair(&mut rng, 0.15),
        _ => random::truncated_pillar(&mut rng, 0.15),
    }
}

fn small_vec_poly(c: &[f64]) -> VectorPoly<f64> {
    // one coefficient per (component, monomial of degree <= 1 in each variable)
    let comp = |k: usize| {
        let mut p = MultiPoly::zero();
        for e in 0..8 {
            p.add_term(
                [e & 1, (e >> 1) & 1, (e >> 2) & 1].map(|v| v as u32),
                c[8 * k + e],
            );
        }
        p
    };
    VectorPoly::new(comp(0), comp(1), comp(2))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_weighted_normals_cancel(seed in any::<u64>()) {
        let h = cell(seed);
        let s = (0..6).fold(Vector3::zeros(), |acc, f| acc + Vector3::from(h.face(f).normal) * h.face(f).area);
        prop_assert!(s.norm() < 1e-12, "{s:?}");
    }

    #[test]
    fn piola_preserves_face_fluxes(seed in any::<u64>(), c in prop::collection::vec(-1.0f64..1.0, 24)) {
        let h = cell(seed);
        let v = RefVectorFunction::new(small_vec_poly(&c), "v");
        let (g, w) = gauss_legendre_01(6);
        for f in 0..6 {
            let ax = FaceAxes::of(f);
            let k = h.face(f);
            let mut phys = 0.0;
            let mut refl = 0.0;
            for a in 0..g.len() {
                for b in 0..g.len() {
                    let xh = ax.point(g[a], g[b]);
                    let val = h.piola(&v.vpoly.eval(&xh), &xh).unwrap();
                    let nu = Vector3::from(k.normal);
                    phys += w[a] * w[b] * val.dot(&nu) * k.k_at(g[a], g[b]);
                    let rn = ax.ref_normal();
                    let vh = v.vpoly.eval(&xh);
                    refl += w[a] * w[b] * (vh[0] * rn[0] + vh[1] * rn[1] + vh[2] * rn[2]);
                }
            }
            prop_assert!((phys - refl).abs() < 1e-12, "face {f}: {phys} vs {refl}");
        }
    }

    #[test]
    fn jacobian_is_quadratic_per_variable(seed in any::<u64>(), y in 0.0f64..1.0, z in 0.0f64..1.0) {
        let h = cell(seed);
        for k in 0..3 {
            let at = |s: f64| {
                let mut x = [y, z, 0.5];
                x[k] = s;
                h.jacobian(&x).1
            };
            // third finite difference of a quadratic vanishes
            let d3 = at(0.9) - 3.0 * at(0.6) + 3.0 * at(0.3) - at(0.0);
            prop_assert!(d3.abs() < 1e-13, "{d3}");
        }
    }

    #[test]
    fn composed_integral_matches_physical_quadrature(seed in any::<u64>(), c in prop::collection::vec(-1.0f64..1.0, 8)) {
        let h = cell(seed);
        let mut p = MultiPoly::<f64>::zero();
        for e in 0..8 {
            p.add_term([e & 1, (e >> 1) & 1, (e >> 2) & 1].map(|v| v as u32), c[e]);
        }
        let map = h.map_polys::<f64>();
        let df: Vec<Vec<MultiPoly<f64>>> = (0..3).map(|i| (0..3).map(|j| map[i].deriv(j)).collect()).collect();
        let minor = |a: usize, b: usize, c: usize, d: usize| &(&df[1][a] * &df[2][b]) - &(&df[1][c] * &df[2][d]);
        let jac = &(&(&df[0][0] * &minor(1, 2, 2, 1)) - &(&df[0][1] * &minor(0, 2, 2, 0))) + &(&df[0][2] * &minor(0, 1, 1, 0));
        let exact = (&p.substitute(&map) * &jac).integrate_unit_cube();
        let quad = gauss_rule(3, 10).integrate(|xh| p.eval(&h.map(xh).into()) * h.jacobian(xh).1);
        prop_assert!((exact - quad).abs() < 1e-12, "{exact} vs {quad}");
    }

    #[test]
    fn lemma51_random_matrices(c in prop::collection::vec(-1.0f64..1.0, 48)) {
        let m = DMatrix::from_row_slice(4, 6, &c[..24]);
        let n = DMatrix::from_row_slice(2, 6, &c[24..36]);
        let phi = DVector::from_column_slice(&c[36..42]);
        let mut st = DMatrix::zeros(6, 6);
        st.rows_mut(0, 4).copy_from(&m);
        st.rows_mut(4, 2).copy_from(&n);
        let q = n.transpose().qr().q();
        let outside = (&phi - &q * (q.transpose() * &phi)).norm();
        prop_assume!(st.svd(false, false).singular_values.min() > 1e-2 && outside > 1e-2);
        prop_assert!(lemma51_check(&m, &n, phi.as_slice()));
        let inside = n.transpose() * DVector::from_column_slice(&c[42..44]);
        prop_assume!(inside.norm() > 1e-2);
        prop_assert!(!lemma51_check(&m, &n, inside.as_slice()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn supplements_are_exactly_divergence_free(seed in any::<u64>(), face in 0usize..6, other in 1usize..6) {
        let h = cell(seed);
        for (l, m) in [(1, 0), (0, 1), (1, 1), (2, 0)] {
            let (s, _) = supplement_monomial::<Rational>(&h, face, l, m);
            prop_assert!(s.div.is_zero());
        }
        let p = supplement_pair::<Rational>(&h, face, (face + other) % 6);
        prop_assert!(p.div.is_zero());
    }

    #[test]
    fn face_bubbles_change_nothing_visible(seed in any::<u64>(), face in 0usize..6, a in -3i64..3, b in 1i64..4) {
        let h = cell(seed);
        let (s, _) = supplement_monomial::<Rational>(&h, face, 1, 0);
        let mut q = MultiPoly::<Rational>::zero();
        q.add_term([1, 0, 0], Rational::ratio(a, b));
        q.add_term([0, 1, 0], Rational::ratio(1, b));
        q.add_term([1, 1, 0], Rational::ratio(-a, 1));
        let t = s.add(&face_bubble(&q));
        prop_assert_eq!(&t.div, &s.div);
        for f in 0..6 {
            prop_assert_eq!(t.ref_trace(f), s.ref_trace(f));
        }
    }

    #[test]
    fn flux_expansion_reconstructs_pulled_back_monomial(seed in any::<u64>(), face in 0usize..6, l in 0u32..3, m in 0u32..3) {
        let h = cell(seed);
        let (a, b) = h.face(face).local_vars;
        let c = expand_flux_coeffs::<Rational>(&h, face, l, m);
        let mono = MultiPoly::var(a).pow(l) * MultiPoly::var(b).pow(m);
        prop_assert_eq!(c.reconstruct(), pulled_back_flux(&h, face, &mono));
    }

    #[test]
    fn at_traces_lie_in_face_polynomials(seed in any::<u64>(), pick in 0usize..4) {
        let h = cell(seed);
        let spec = [
            SpaceSpec::At0General,
            SpaceSpec::At1 { mode: At1Mode::Symmetric, reduced: false },
            SpaceSpec::At1 { mode: At1Mode::Nonsymmetric, reduced: true },
            SpaceSpec::AtR { r: 2, reduced: true },
        ][pick];
        let s = build_space::<f64>(&h, spec).unwrap();
        for f in 0..6 {
            let ff = FaceFrame::new(&h, f, spec.r());
            for b in &s.basis {
                let (_, res) = fit_trace(&h, &ff, b);
                prop_assert!(res < 1e-10, "{} {}: {res}", spec.name(), b.tag);
            }
        }
    }

    #[test]
    fn shape_function_dofs_are_kronecker(seed in any::<u64>(), pick in 0usize..6) {
        let h = cell(seed);
        let spec = [
            SpaceSpec::At0Simple,
            SpaceSpec::At1 { mode: At1Mode::Auto, reduced: false },
            SpaceSpec::AtR { r: 1, reduced: true },
            SpaceSpec::Rt { r: 0 },
            SpaceSpec::Rt { r: 1 },
            SpaceSpec::Bddf1,
        ][pick];
        let s = build_space::<f64>(&h, spec).unwrap();
        let shapes = s.shape_functions().unwrap();
        for (j, phi) in shapes.iter().enumerate() {
            for (i, d) in s.dofs.iter().enumerate() {
                let v = s.to_f64().dof_exact(d, phi);
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((Scalar::to_f64(&v) - want).abs() < 1e-8, "{} dof {i} of shape {j}: {v}", spec.name());
            }
        }
    }

    #[test]
    fn schur_complement_is_symmetric(family in 0usize..3, pick in 0usize..3) {
        let fam = [MeshFamily::Cube, MeshFamily::Trapezoid, MeshFamily::Pillar][family];
        let spec = [SpaceSpec::At0General, SpaceSpec::At1 { mode: At1Mode::Auto, reduced: true }, SpaceSpec::Rt { r: 0 }][pick];
        let mesh = Mesh::generate(fam, 2).unwrap();
        let s = solve(&mesh, spec, &Manufactured, &SolverOptions::default()).unwrap();
        prop_assert!(s.diagnostics.schur_asymmetry < 1e-12);
        prop_assert!(s.diagnostics.flux_jump < 1e-10);
    }

    #[test]
    fn face_counts_follow_formula(family in 0usize..3, half in 1usize..4) {
        let fam = [MeshFamily::Cube, MeshFamily::Trapezoid, MeshFamily::Pillar][family];
        let n = 2 * half;
        let m = Mesh::generate(fam, n).unwrap();
        prop_assert_eq!(m.num_faces(), 3 * n * n * (n + 1));
        prop_assert_eq!(m.faces.iter().filter(|f| f.is_boundary()).count(), 6 * n * n);
    }
}

#[test]
fn rational_and_float_supplements_agree() {
    let h = cell(5);
    let (a, ca) = supplement_monomial::<Rational>(&h, 3, 1, 1);
    let (b, cb) = supplement_monomial::<f64>(&h, 3, 1, 1);
    assert!((Scalar::to_f64(&ca) - cb).abs() < 1e-13);
    let xh = [0.3, 0.2, 0.8];
    let (va, vb) = (
        a.to_f64().physical_value(&h, &xh),
        b.physical_value(&h, &xh),
    );
    for k in 0..3 {
        assert!((va[k] - vb[k]).abs() < 1e-11);
    }
}
