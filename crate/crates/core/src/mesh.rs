//! Structured hexahedral meshes of the unit cube: cubes, lifted trapezoids and truncated pillars,
//! built by mirroring a 2×2×2 pattern, plus face connectivity.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{HexError, Result};
use crate::geometry::{face_corner_ids, Hexahedron, FACE_ST};

/// Mesh family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshFamily {
    Cube,
    Trapezoid,
    Pillar,
}

impl std::str::FromStr for MeshFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cube" => Ok(Self::Cube),
            "trapezoid" => Ok(Self::Trapezoid),
            "pillar" => Ok(Self::Pillar),
            _ => Err(format!("unknown mesh family '{s}'")),
        }
    }
}

impl MeshFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Cube => "cube",
            Self::Trapezoid => "trapezoid",
            Self::Pillar => "pillar",
        }
    }
}

/// Affine symmetry of the unit square taking a neighbor's face coordinates `(s', t')` to the
/// owner's: `p0 + s' (p1 - p0) + t' (p2 - p0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceMap {
    pub p0: [f64; 2],
    pub p1: [f64; 2],
    pub p2: [f64; 2],
}

impl FaceMap {
    pub fn identity() -> Self {
        Self {
            p0: [0.0, 0.0],
            p1: [1.0, 0.0],
            p2: [0.0, 1.0],
        }
    }

    pub fn apply(&self, s: f64, t: f64) -> [f64; 2] {
        std::array::from_fn(|k| {
            self.p0[k] + s * (self.p1[k] - self.p0[k]) + t * (self.p2[k] - self.p0[k])
        })
    }
}

/// A mesh face with its owner and optional neighbor (cell, local face).
#[derive(Clone, Debug)]
pub struct MeshFace {
    /// Global vertex ids in the owner's `(s, t)` corner order.
    pub vertices: [usize; 4],
    pub owner: (usize, usize),
    pub neighbor: Option<(usize, usize, FaceMap)>,
}

impl MeshFace {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 8]>,
}

/// Conforming hexahedral mesh.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 8]>,
    pub faces: Vec<MeshFace>,
    /// Global face index of each local face.
    pub cell_faces: Vec<[usize; 6]>,
}

/// Position in the base pattern `[0,2]^3` of lattice point `(i, j, k)`, `0 <= i, j, k <= 2`.
fn pattern_point(family: MeshFamily, i: usize, j: usize, k: usize) -> [f64; 3] {
    let (fi, fj, fk) = (i as f64, j as f64, k as f64);
    match family {
        MeshFamily::Cube => [fi, fj, fk],
        MeshFamily::Trapezoid => {
            let y = if j == 1 { [1.25, 0.75, 1.25][i] } else { fj };
            [fi, y, fk]
        }
        MeshFamily::Pillar => {
            #[rustfmt::skip]
            const P: [[[f64; 2]; 3]; 3] = [
                [[0.0, 0.0], [0.0, 1.2], [0.0, 2.0]],
                [[0.8, 0.0], [1.2, 1.1], [1.1, 2.0]],
                [[2.0, 0.0], [2.0, 0.85], [2.0, 2.0]],
            ];
            let [x, y] = P[i][j];
            let z = if k == 1 {
                1.0 + 0.12 * (x - 1.0) + 0.1 * (y - 1.0)
            } else {
                fk
            };
            [x, y, z]
        }
    }
}

impl Mesh {
    /// `n^3` cells of one family; `n` must be even except for the cube family.
    pub fn generate(family: MeshFamily, n: usize) -> Result<Self> {
        if n == 0 || (family != MeshFamily::Cube && n % 2 == 1) {
            return Err(HexError::OddSubdivision(n));
        }
        let m = n + 1;
        let mut vertices = Vec::with_capacity(m * m * m);
        for kk in 0..m {
            for jj in 0..m {
                for ii in 0..m {
                    vertices.push(global_point(family, n, [ii, jj, kk]));
                }
            }
        }
        let mut cells = Vec::with_capacity(n * n * n);
        for ck in 0..n {
            for cj in 0..n {
                for ci in 0..n {
                    cells.push(std::array::from_fn(|v| {
                        (ci + (v & 1)) + m * ((cj + ((v >> 1) & 1)) + m * (ck + ((v >> 2) & 1)))
                    }));
                }
            }
        }
        Self::from_cells(vertices, cells)
    }

    pub fn gen_cube(n: usize) -> Result<Self> {
        Self::generate(MeshFamily::Cube, n)
    }

    pub fn gen_trapezoid(n: usize) -> Result<Self> {
        Self::generate(MeshFamily::Trapezoid, n)
    }

    pub fn gen_pillar(n: usize) -> Result<Self> {
        Self::generate(MeshFamily::Pillar, n)
    }

    /// Build face connectivity; faces shared by more than two cells or with mismatched corners
    /// are rejected.
    pub fn from_cells(vertices: Vec<[f64; 3]>, cells: Vec<[usize; 8]>) -> Result<Self> {
        let mut faces: Vec<MeshFace> = Vec::new();
        let mut cell_faces = vec![[usize::MAX; 6]; cells.len()];
        let mut lookup: HashMap<[usize; 4], usize> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(HexError::NonConforming(format!(
                    "cell {c} references a missing vertex"
                )));
            }
            for f in 0..6 {
                let ids = face_corner_ids(f).map(|l| cell[l]);
                let mut key = ids;
                key.sort_unstable();
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, faces.len());
                        cell_faces[c][f] = faces.len();
                        faces.push(MeshFace {
                            vertices: ids,
                            owner: (c, f),
                            neighbor: None,
                        });
                    }
                    Some(&g) => {
                        let face = &mut faces[g];
                        if face.neighbor.is_some() {
                            return Err(HexError::NonConforming(format!(
                                "face {key:?} shared by more than two cells"
                            )));
                        }
                        let pos = |v: usize| {
                            face.vertices
                                .iter()
                                .position(|&w| w == v)
                                .expect("same vertex set")
                        };
                        let st = |q: usize| FACE_ST[pos(ids[q])];
                        let map = FaceMap {
                            p0: st(0),
                            p1: st(1),
                            p2: st(2),
                        };
                        // the fourth corner must land on the remaining square corner
                        let p3 = map.apply(1.0, 1.0);
                        if (p3[0] - st(3)[0]).abs() + (p3[1] - st(3)[1]).abs() > 1e-12 {
                            return Err(HexError::NonConforming(format!(
                                "face {key:?} corners do not match"
                            )));
                        }
                        face.neighbor = Some((c, f, map));
                        cell_faces[c][f] = g;
                    }
                }
            }
        }
        Ok(Self {
            vertices,
            cells,
            faces,
            cell_faces,
        })
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let file: MeshFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        Self::from_cells(file.vertices, file.cells).map_err(|e| e.to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeshFile {
            vertices: self.vertices.clone(),
            cells: self.cells.clone(),
        })
        .expect("serializable")
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn cell_vertices(&self, c: usize) -> [[f64; 3]; 8] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn hex(&self, c: usize) -> Result<Hexahedron> {
        Hexahedron::new(self.cell_vertices(c)).map_err(|e| HexError::ElementBuildFailure {
            cell: c,
            source: Box::new(e),
        })
    }

    pub fn hexes(&self) -> Result<Vec<Hexahedron>> {
        (0..self.num_cells()).map(|c| self.hex(c)).collect()
    }

    /// Largest cell diameter.
    pub fn h_max(&self) -> Result<f64> {
        Ok(self
            .hexes()?
            .iter()
            .map(|h| h.diameter())
            .fold(0.0, f64::max))
    }

    /// Largest mismatch of a shared face's area computed from both sides, relative to the area.
    pub fn shared_face_mismatch(&self, hexes: &[Hexahedron]) -> f64 {
        self.faces
            .iter()
            .filter_map(|f| {
                let (c1, f1, _) = f.neighbor?;
                let a = hexes[f.owner.0].face(f.owner.1).area;
                let b = hexes[c1].face(f1).area;
                Some((a - b).abs() / a)
            })
            .fold(0.0, f64::max)
    }
}

fn global_point(family: MeshFamily, n: usize, idx: [usize; 3]) -> [f64; 3] {
    let mut local = [0usize; 3];
    let mut block = [0usize; 3];
    for a in 0..3 {
        let b = if n >= 2 {
            (idx[a] / 2).min(n / 2 - 1)
        } else {
            0
        };
        let p = idx[a] - 2 * b;
        block[a] = b;
        local[a] = if b % 2 == 1 { 2 - p } else { p };
    }
    if n == 1 {
        // single cell: the cube family only
        return idx.map(|i| i as f64);
    }
    let q = pattern_point(family, local[0], local[1], local[2]);
    std::array::from_fn(|a| {
        let b = block[a];
        let x = if b % 2 == 1 { 2.0 - q[a] } else { q[a] };
        (2 * b) as f64 / n as f64 + x / n as f64
    })
}
