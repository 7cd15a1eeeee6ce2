//! Convex cuboidal hexahedra: the trilinear reference map, Jacobians, the contravariant Piola
//! transform, and per-face data (normals, areas, centroids, face Jacobians, local variables).
//!
//! Vertices are stored in the order `[x024, x124, x034, x134, x025, x125, x035, x135]`, i.e.
//! vertex `i1 + 2 i2 + 4 i3` is the image of the reference corner `(i1, i2, i3)`.
//! Reference face `2k` lies on `x̂_{k+1} = 0` and face `2k + 1` on `x̂_{k+1} = 1`.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HexError, Result};
use crate::polyalg::{FacePoly, MultiPoly, Scalar};

/// Default relative coplanarity tolerance for faces.
pub const FLAT_TOL: f64 = 1e-10;

pub type Point = Vector3<f64>;

/// Reference corners `(s, t)` of a face in the order used by [`Hexahedron::face_corners`].
pub const FACE_ST: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];

/// Axis bookkeeping of a reference face: normal axis `k`, side (0 or 1) and the two tangential
/// axes `p < q` that serve as face variables `(s, t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceAxes {
    pub k: usize,
    pub side: usize,
    pub p: usize,
    pub q: usize,
}

impl FaceAxes {
    pub fn of(face: usize) -> Self {
        let k = face / 2;
        let side = face % 2;
        let (p, q) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        Self { k, side, p, q }
    }

    /// Reference point of face coordinates `(s, t)`.
    pub fn point(&self, s: f64, t: f64) -> [f64; 3] {
        let mut x = [0.0; 3];
        x[self.k] = self.side as f64;
        x[self.p] = s;
        x[self.q] = t;
        x
    }

    /// Outward reference normal.
    pub fn ref_normal(&self) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.k] = if self.side == 1 { 1.0 } else { -1.0 };
        n
    }

    /// Sign relating `∂_s F × ∂_t F` to the outward normal.
    pub fn orientation(&self) -> f64 {
        let o = if self.k == 1 { -1.0 } else { 1.0 };
        if self.side == 1 {
            o
        } else {
            -o
        }
    }
}

/// Geometric data of one face.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaceData {
    pub index: usize,
    /// Outward unit normal.
    pub normal: [f64; 3],
    pub area: f64,
    /// Area-average of the position over the face.
    pub centroid: [f64; 3],
    /// Local physical variables `(i, j)` (0-based, `i < j`).
    pub local_vars: (usize, usize),
    /// Face Jacobian at the corners `(s, t) = (0,0), (1,0), (0,1), (1,1)`.
    pub k_corners: [f64; 4],
}

impl FaceData {
    /// Face Jacobian at face coordinates `(s, t)`.
    pub fn k_at(&self, s: f64, t: f64) -> f64 {
        let k = &self.k_corners;
        k[0] * (1.0 - s) * (1.0 - t) + k[1] * s * (1.0 - t) + k[2] * (1.0 - s) * t + k[3] * s * t
    }

    /// Omitted coordinate (the one with the largest normal component).
    pub fn omitted_var(&self) -> usize {
        3 - self.local_vars.0 - self.local_vars.1
    }
}

/// Local variables of a face with normal `nu`: drop the coordinate with the largest `|nu_m|`
/// (ties drop the larger index).
pub fn local_vars_of(nu: &[f64; 3]) -> (usize, usize) {
    let mut m = 0;
    for k in 1..3 {
        if nu[k].abs() >= nu[m].abs() {
            m = k;
        }
    }
    match m {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// JSON element file `{"vertices": [[x,y,z] x 8]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElementFile {
    pub vertices: Vec<[f64; 3]>,
}

/// A convex hexahedron with flat faces.
#[derive(Clone, Debug)]
pub struct Hexahedron {
    vertices: [Point; 8],
    flat_tol: f64,
    faces: [FaceData; 6],
}

fn to_arr(v: &Point) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl Hexahedron {
    /// Build and validate with the default flatness tolerance.
    pub fn new(vertices: [[f64; 3]; 8]) -> Result<Self> {
        Self::with_tol(vertices, FLAT_TOL)
    }

    pub fn with_tol(vertices: [[f64; 3]; 8], flat_tol: f64) -> Result<Self> {
        let verts: [Point; 8] = vertices.map(|v| Point::new(v[0], v[1], v[2]));
        for i in 0..6 {
            let c = face_corner_ids(i).map(|j| verts[j]);
            let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
            let diam = (c[3] - c[0]).norm().max((c[2] - c[1]).norm());
            let dev = if n.norm() > 0.0 {
                ((c[3] - c[0]).dot(&n) / n.norm()).abs() / diam
            } else {
                f64::INFINITY
            };
            if !(dev <= flat_tol) {
                return Err(HexError::NonFlatFace {
                    face: i,
                    deviation: dev,
                });
            }
        }
        let placeholder = FaceData {
            index: 0,
            normal: [0.0; 3],
            area: 0.0,
            centroid: [0.0; 3],
            local_vars: (0, 1),
            k_corners: [0.0; 4],
        };
        let mut hex = Self {
            vertices: verts,
            flat_tol,
            faces: std::array::from_fn(|_| placeholder.clone()),
        };
        let mut probes: Vec<[f64; 3]> = (0..8)
            .map(|v| [(v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64])
            .collect();
        probes.push([0.5; 3]);
        for p in probes {
            let (_, j) = hex.jacobian(&p);
            if !(j > 0.0) {
                return Err(HexError::NonPositiveJacobian { jac: j, at: p });
            }
        }
        for i in 0..6 {
            hex.faces[i] = hex.compute_face_data(i)?;
        }
        Ok(hex)
    }

    pub fn from_points(vertices: &[Point; 8]) -> Result<Self> {
        Self::new(vertices.map(|v| to_arr(&v)))
    }

    /// The unit cube `[0,1]^3`.
    pub fn unit_cube() -> Self {
        Self::new(std::array::from_fn(|v| {
            [(v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64]
        }))
        .expect("unit cube is admissible")
    }

    /// Image of the unit cube under `x -> a x + b`.
    pub fn affine_cube(a: &Matrix3<f64>, b: &Point) -> Result<Self> {
        let verts = Self::unit_cube().vertices.map(|v| a * v + b);
        Self::from_points(&verts)
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let f: ElementFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if f.vertices.len() != 8 {
            return Err(format!("expected 8 vertices, found {}", f.vertices.len()));
        }
        Self::new(std::array::from_fn(|i| f.vertices[i])).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ElementFile {
            vertices: self.vertices.iter().map(to_arr).collect(),
        })
        .unwrap()
    }

    pub fn flat_tol(&self) -> f64 {
        self.flat_tol
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[Point; 8] {
        &self.vertices
    }

    pub fn vertex_arrays(&self) -> [[f64; 3]; 8] {
        self.vertices.map(|v| to_arr(&v))
    }

    /// Trilinear map `F_E`.
    pub fn map(&self, xh: &[f64; 3]) -> Point {
        let w = corner_weights(xh);
        let mut x = Point::zeros();
        for v in 0..8 {
            x += self.vertices[v] * w[v];
        }
        x
    }

    /// `(DF_E, J_E)` at `x̂`.
    pub fn jacobian(&self, xh: &[f64; 3]) -> (Matrix3<f64>, f64) {
        let mut df = Matrix3::zeros();
        for v in 0..8 {
            let b = [(v & 1) as f64, ((v >> 1) & 1) as f64, ((v >> 2) & 1) as f64];
            for j in 0..3 {
                let mut d = 1.0;
                for k in 0..3 {
                    let f = if b[k] == 1.0 { xh[k] } else { 1.0 - xh[k] };
                    d *= if k == j { 2.0 * b[k] - 1.0 } else { f };
                }
                for i in 0..3 {
                    df[(i, j)] += self.vertices[v][i] * d;
                }
            }
        }
        let det = df.determinant();
        (df, det)
    }

    /// `J_E` at `x̂`, failing if it is not positive.
    pub fn checked_jacobian(&self, xh: &[f64; 3]) -> Result<(Matrix3<f64>, f64)> {
        let (df, j) = self.jacobian(xh);
        if j > 0.0 {
            Ok((df, j))
        } else {
            Err(HexError::NonPositiveJacobian { jac: j, at: *xh })
        }
    }

    /// Contravariant Piola transform of a reference vector value at `x̂`.
    pub fn piola(&self, vh: &[f64; 3], xh: &[f64; 3]) -> Result<Point> {
        let (df, j) = self.checked_jacobian(xh)?;
        Ok(df * Point::new(vh[0], vh[1], vh[2]) / j)
    }

    /// Vertex indices of face `i` at the corners `(s, t) = (0,0), (1,0), (0,1), (1,1)`.
    pub fn face_corners(&self, i: usize) -> [usize; 4] {
        face_corner_ids(i)
    }

    pub fn face(&self, i: usize) -> &FaceData {
        &self.faces[i]
    }

    pub fn faces(&self) -> &[FaceData; 6] {
        &self.faces
    }

    /// Face data (normal, area, centroid, local variables, face Jacobian corners).
    pub fn face_data(&self, i: usize) -> FaceData {
        self.faces[i].clone()
    }

    fn compute_face_data(&self, i: usize) -> Result<FaceData> {
        let ax = FaceAxes::of(i);
        let y = face_corner_ids(i).map(|j| self.vertices[j]);
        let raw = (y[1] - y[0]).cross(&(y[2] - y[0])) * ax.orientation();
        let nn = raw.norm();
        if nn == 0.0 {
            return Err(HexError::DegenerateElement(format!(
                "face {i} has a degenerate corner"
            )));
        }
        let nu = raw / nn;
        // signed corner values of the bilinear face Jacobian
        let sgn = ax.orientation();
        let signed = [
            (y[1] - y[0]).cross(&(y[2] - y[0])).dot(&nu) * sgn,
            (y[1] - y[0]).cross(&(y[3] - y[1])).dot(&nu) * sgn,
            (y[3] - y[2]).cross(&(y[2] - y[0])).dot(&nu) * sgn,
            (y[3] - y[2]).cross(&(y[3] - y[1])).dot(&nu) * sgn,
        ];
        if signed.iter().any(|&k| !(k > 0.0)) {
            return Err(HexError::DegenerateElement(format!(
                "face {i} is not a convex quadrilateral"
            )));
        }
        let k_corners = [
            (y[2] - y[0]).cross(&(y[1] - y[0])).norm(),
            (y[3] - y[1]).cross(&(y[0] - y[1])).norm(),
            (y[3] - y[2]).cross(&(y[0] - y[2])).norm(),
            (y[2] - y[3]).cross(&(y[1] - y[3])).norm(),
        ];
        let area = k_corners.iter().sum::<f64>() / 4.0;
        // centroid: integrand x(s,t) K(s,t) has degree 2 per variable
        let (g, w) = crate::polyalg::gauss_legendre_01(2);
        let mut c = Point::zeros();
        for a in 0..2 {
            for b in 0..2 {
                let (s, t) = (g[a], g[b]);
                let x = y[0] * ((1.0 - s) * (1.0 - t))
                    + y[1] * (s * (1.0 - t))
                    + y[2] * ((1.0 - s) * t)
                    + y[3] * (s * t);
                let k = k_corners[0] * (1.0 - s) * (1.0 - t)
                    + k_corners[1] * s * (1.0 - t)
                    + k_corners[2] * (1.0 - s) * t
                    + k_corners[3] * s * t;
                c += x * (k * w[a] * w[b]);
            }
        }
        c /= area;
        let normal = to_arr(&nu);
        Ok(FaceData {
            index: i,
            normal,
            area,
            centroid: to_arr(&c),
            local_vars: local_vars_of(&normal),
            k_corners,
        })
    }

    /// Face Jacobian `K_i` as a bilinear polynomial in the face variables `(s, t)`.
    pub fn face_jacobian_poly<T: Scalar>(&self, i: usize) -> FacePoly<T> {
        bilinear_poly(&self.faces[i].k_corners.map(T::from_f64))
    }

    /// Components of `F_E` as polynomials in `x̂`.
    pub fn map_polys<T: Scalar>(&self) -> [MultiPoly<T>; 3] {
        let mut out = [MultiPoly::zero(), MultiPoly::zero(), MultiPoly::zero()];
        for v in 0..8 {
            let mut basis = MultiPoly::<T>::one();
            for k in 0..3 {
                let f = if (v >> k) & 1 == 1 {
                    MultiPoly::var(k)
                } else {
                    MultiPoly::affine_var(k, T::one(), -T::one())
                };
                basis = &basis * &f;
            }
            for c in 0..3 {
                out[c] = &out[c] + &basis.scale(&T::from_f64(self.vertices[v][c]));
            }
        }
        out
    }

    /// Components of `F_E` restricted to face `i`, as polynomials in the face variables `(s, t)`.
    pub fn face_map_polys<T: Scalar>(&self, i: usize) -> [FacePoly<T>; 3] {
        let y = face_corner_ids(i).map(|j| self.vertices[j]);
        std::array::from_fn(|c| {
            bilinear_poly(&[y[0][c], y[1][c], y[2][c], y[3][c]].map(T::from_f64))
        })
    }

    /// Adjugate `J DF^{-1}` of the Jacobian as polynomials in `x̂`; row `i`, column `j`.
    pub fn adjugate_polys<T: Scalar>(&self) -> [[MultiPoly<T>; 3]; 3] {
        let f = self.map_polys::<T>();
        let d: [[MultiPoly<T>; 3]; 3] =
            std::array::from_fn(|i| std::array::from_fn(|j| f[i].deriv(j)));
        let cof = |r: usize, c: usize| {
            let (r0, r1) = ((r + 1) % 3, (r + 2) % 3);
            let (c0, c1) = ((c + 1) % 3, (c + 2) % 3);
            &(&d[r0][c0] * &d[r1][c1]) - &(&d[r0][c1] * &d[r1][c0])
        };
        std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i)))
    }

    /// Inverse of the trilinear map by damped Newton iteration from the reference centroid.
    pub fn inverse_map(&self, x: &Point) -> Result<[f64; 3]> {
        let scale = self.diameter();
        let mut xh = [0.5; 3];
        let mut res = self.map(&xh) - x;
        for it in 0..50 {
            if res.norm() <= 1e-14 * scale {
                return Ok(xh);
            }
            let (df, _) = self.jacobian(&xh);
            let step = df.lu().solve(&res).ok_or(HexError::NoConvergence {
                iterations: it,
                residual: res.norm(),
            })?;
            let mut lambda = 1.0;
            loop {
                let cand = [
                    xh[0] - lambda * step[0],
                    xh[1] - lambda * step[1],
                    xh[2] - lambda * step[2],
                ];
                let r2 = self.map(&cand) - x;
                if r2.norm() < res.norm() || lambda < 1e-4 {
                    xh = cand;
                    res = r2;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if res.norm() <= 1e-12 * scale {
            Ok(xh)
        } else {
            Err(HexError::NoConvergence {
                iterations: 50,
                residual: res.norm(),
            })
        }
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..8 {
            for b in a + 1..8 {
                d = d.max((self.vertices[a] - self.vertices[b]).norm());
            }
        }
        d
    }

    /// Volume (exact: `J_E` has degree 2 per variable).
    pub fn volume(&self) -> f64 {
        let rule = crate::polyalg::gauss_rule(3, 2);
        rule.integrate(|x| self.jacobian(x).1)
    }

    /// Arithmetic mean of the vertices.
    pub fn center(&self) -> Point {
        self.vertices.iter().sum::<Point>() / 8.0
    }

    /// True when `DF_E` is constant (parallelepiped), up to a relative tolerance.
    pub fn is_affine(&self, tol: f64) -> bool {
        let v = &self.vertices;
        let d = v[0] + v[3] - v[1] - v[2];
        let e = v[0] + v[5] - v[1] - v[4];
        let f = v[0] + v[6] - v[2] - v[4];
        let g = v[7] - v[0] - (v[1] - v[0]) - (v[2] - v[0]) - (v[4] - v[0]) + d + e + f;
        let h = self.diameter();
        d.norm().max(e.norm()).max(f.norm()).max(g.norm()) <= tol * h
    }

    /// Radius of the largest ball around the vertex mean that fits inside all face planes,
    /// divided by the diameter.
    pub fn shape_regularity(&self) -> f64 {
        let c = self.center();
        let mut r = f64::INFINITY;
        for f in &self.faces {
            let n = Point::new(f.normal[0], f.normal[1], f.normal[2]);
            let p = Point::new(f.centroid[0], f.centroid[1], f.centroid[2]);
            r = r.min((p - c).dot(&n));
        }
        r / self.diameter()
    }
}

/// Vertex indices of face `i` at `(s, t) = (0,0), (1,0), (0,1), (1,1)`.
pub fn face_corner_ids(i: usize) -> [usize; 4] {
    let ax = FaceAxes::of(i);
    FACE_ST.map(|st| {
        let x = ax.point(st[0], st[1]);
        (x[0] as usize) + 2 * (x[1] as usize) + 4 * (x[2] as usize)
    })
}

fn corner_weights(xh: &[f64; 3]) -> [f64; 8] {
    std::array::from_fn(|v| {
        let mut w = 1.0;
        for k in 0..3 {
            w *= if (v >> k) & 1 == 1 {
                xh[k]
            } else {
                1.0 - xh[k]
            };
        }
        w
    })
}

/// Bilinear interpolant of corner values at `(0,0), (1,0), (0,1), (1,1)` in variables 0 and 1.
pub fn bilinear_poly<T: Scalar>(c: &[T; 4]) -> FacePoly<T> {
    let one = T::one();
    let s = MultiPoly::<T>::var(0);
    let t = MultiPoly::<T>::var(1);
    let ms = MultiPoly::affine_var(0, one.clone(), -one.clone());
    let mt = MultiPoly::affine_var(1, one.clone(), -one);
    (&ms * &mt).scale(&c[0])
        + (&s * &mt).scale(&c[1])
        + (&ms * &t).scale(&c[2])
        + (&s * &t).scale(&c[3])
}

/// Random admissible hexahedra for property checks.
pub mod random {
    use super::*;
    use nalgebra::SymmetricEigen;

    /// Plane `n · x = d` with unit normal.
    #[derive(Clone, Copy, Debug)]
    pub struct Plane {
        pub n: Point,
        pub d: f64,
    }

    /// Least-squares plane through a set of points.
    pub fn fit_plane(pts: &[Point]) -> Plane {
        let c = pts.iter().sum::<Point>() / pts.len() as f64;
        let mut cov = Matrix3::zeros();
        for p in pts {
            let q = p - c;
            cov += q * q.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let mut imin = 0;
        for k in 1..3 {
            if eig.eigenvalues[k] < eig.eigenvalues[imin] {
                imin = k;
            }
        }
        let n = eig.eigenvectors.column(imin).into_owned().normalize();
        Plane { n, d: n.dot(&c) }
    }

    /// Hexahedron whose vertices are the triple intersections of six face planes (ordered as
    /// faces 0..5).
    pub fn hex_from_planes(planes: &[Plane; 6]) -> Result<Hexahedron> {
        let mut verts = [Point::zeros(); 8];
        for (v, vert) in verts.iter_mut().enumerate() {
            let ids = [(v & 1), 2 + ((v >> 1) & 1), 4 + ((v >> 2) & 1)];
            let a = Matrix3::from_rows(&[
                planes[ids[0]].n.transpose(),
                planes[ids[1]].n.transpose(),
                planes[ids[2]].n.transpose(),
            ]);
            let b = Point::new(planes[ids[0]].d, planes[ids[1]].d, planes[ids[2]].d);
            *vert = a.lu().solve(&b).ok_or(HexError::DegenerateCorner)?;
        }
        Hexahedron::from_points(&verts)
    }

    /// Unit cube with vertices perturbed by up to `amp` per coordinate, re-flattened by
    /// replacing each vertex with the intersection of its three least-squares face planes.
    pub fn perturbed_cube<R: Rng>(rng: &mut R, amp: f64) -> Hexahedron {
        loop {
            let cube = Hexahedron::unit_cube();
            let verts: [Point; 8] = cube.vertices().map(|v| {
                v + Point::new(
                    rng.random_range(-amp..=amp),
                    rng.random_range(-amp..=amp),
                    rng.random_range(-amp..=amp),
                )
            });
            let planes: [Plane; 6] = std::array::from_fn(|f| {
                let pts = face_corner_ids(f).map(|j| verts[j]);
                fit_plane(&pts)
            });
            if let Ok(h) = hex_from_planes(&planes) {
                if h.diameter() < 3.0 {
                    return h;
                }
            }
        }
    }

    /// Random hexahedron with faces 4 and 5 parallel.
    pub fn one_parallel_pair<R: Rng>(rng: &mut R, amp: f64) -> Hexahedron {
        loop {
            let h = perturbed_cube(rng, amp);
            let mut planes: [Plane; 6] = std::array::from_fn(|f| {
                let pts = face_corner_ids(f).map(|j| h.vertex(j));
                fit_plane(&pts)
            });
            let n4 = planes[4].n;
            let c5 = face_corner_ids(5)
                .map(|j| h.vertex(j))
                .iter()
                .sum::<Point>()
                / 4.0;
            planes[5] = Plane {
                n: n4,
                d: n4.dot(&c5),
            };
            if let Ok(h2) = hex_from_planes(&planes) {
                if h2.diameter() < 3.0 {
                    return h2;
                }
            }
        }
    }

    /// Random truncated vertical pillar: vertical side edges, tilted bottom and top planes.
    pub fn truncated_pillar<R: Rng>(rng: &mut R, amp: f64) -> Hexahedron {
        loop {
            let base: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]].map(|p| {
                [
                    p[0] + rng.random_range(-amp..=amp),
                    p[1] + rng.random_range(-amp..=amp),
                ]
            });
            let bottom = [
                rng.random_range(-amp..=amp),
                rng.random_range(-amp..=amp),
                rng.random_range(-amp..=amp),
            ];
            let top = [
                1.0 + rng.random_range(-amp..=amp),
                rng.random_range(-amp..=amp),
                rng.random_range(-amp..=amp),
            ];
            let verts: [[f64; 3]; 8] = std::array::from_fn(|v| {
                let [x, y] = base[v & 3];
                let pl = if v >= 4 { top } else { bottom };
                [x, y, pl[0] + pl[1] * x + pl[2] * y]
            });
            if let Ok(h) = Hexahedron::new(verts) {
                return h;
            }
        }
    }
}
