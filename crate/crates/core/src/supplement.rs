//! Pre-supplements on the reference cube and divergence-free supplements with prescribed normal
//! flux on one face of a hexahedron.

use crate::geometry::{FaceAxes, Hexahedron};
use crate::polyalg::{FacePoly, MultiPoly, Scalar, VectorPoly};

/// A reference vector polynomial, interpreted on a hexahedron through the Piola transform.
#[derive(Clone, Debug, PartialEq)]
pub struct RefVectorFunction<T: Scalar> {
    pub vpoly: VectorPoly<T>,
    pub div: MultiPoly<T>,
    pub tag: String,
}

impl<T: Scalar> RefVectorFunction<T> {
    pub fn new(vpoly: VectorPoly<T>, tag: impl Into<String>) -> Self {
        let div = vpoly.divergence();
        Self {
            vpoly,
            div,
            tag: tag.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new(VectorPoly::zero(), "0")
    }

    /// Reference normal trace `v̂ · ν̂` on reference face `i`, in the face variables `(s, t)`.
    pub fn ref_trace(&self, i: usize) -> FacePoly<T> {
        ref_trace(&self.vpoly, i)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self {
            vpoly: self.vpoly.scale(c),
            div: self.div.scale(c),
            tag: self.tag.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            vpoly: &self.vpoly + &other.vpoly,
            div: &self.div + &other.div,
            tag: self.tag.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            vpoly: &self.vpoly - &other.vpoly,
            div: &self.div - &other.div,
            tag: self.tag.clone(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn to_f64(&self) -> RefVectorFunction<f64> {
        RefVectorFunction {
            vpoly: self.vpoly.to_f64(),
            div: self.div.to_f64(),
            tag: self.tag.clone(),
        }
    }

    /// Physical value at `x = F_E(x̂)`.
    pub fn physical_value(&self, hex: &Hexahedron, xh: &[f64; 3]) -> [f64; 3] {
        let (df, j) = hex.jacobian(xh);
        let v = self.vpoly.eval(xh);
        let p = df * nalgebra::Vector3::new(v[0], v[1], v[2]) / j;
        [p.x, p.y, p.z]
    }

    /// Physical divergence at `x = F_E(x̂)`.
    pub fn physical_div(&self, hex: &Hexahedron, xh: &[f64; 3]) -> f64 {
        self.div.eval(xh) / hex.jacobian(xh).1
    }

    /// Physical normal trace on face `i` at face coordinates `(s, t)`.
    pub fn physical_trace(&self, hex: &Hexahedron, i: usize, s: f64, t: f64) -> f64 {
        self.ref_trace(i).eval(&[s, t, 0.0]) / hex.face(i).k_at(s, t)
    }
}

/// `v̂ · ν̂` on reference face `i` as a polynomial in `(s, t)`.
pub fn ref_trace<T: Scalar>(v: &VectorPoly<T>, i: usize) -> FacePoly<T> {
    let ax = FaceAxes::of(i);
    let side = if ax.side == 1 { T::one() } else { T::zero() };
    let mut relabel = [2usize; 3];
    relabel[ax.p] = 0;
    relabel[ax.q] = 1;
    let tr = v.c[ax.k].restrict(ax.k, &side).relabel(relabel);
    if ax.side == 1 {
        tr
    } else {
        -tr
    }
}

/// Face-1 pre-supplement in its own variables.
fn presupp_face1<T: Scalar>(l: u32, m: u32) -> [MultiPoly<T>; 3] {
    let x1 = MultiPoly::<T>::var(0);
    if l + m == 0 {
        return [x1, MultiPoly::zero(), MultiPoly::zero()];
    }
    let x2l = MultiPoly::monomial([0, l, 0], T::one());
    let x3m = MultiPoly::monomial([0, 0, m], T::one());
    let one = MultiPoly::<T>::one();
    let lp = T::ratio(1, (l + 1) as i64);
    let mp = T::ratio(1, (m + 1) as i64);
    let c0 = &(&x1 * &(&x2l * &x3m)) - &x1.scale(&(lp.clone() * mp.clone()));
    let c1 = (&(&MultiPoly::var(1) * &(&one - &x2l)) * &(&x3m + &MultiPoly::constant(mp.clone())))
        .scale(&T::ratio(1, 2 * (l + 1) as i64));
    let c2 = (&(&MultiPoly::var(2) * &(&one - &x3m)) * &(&x2l + &MultiPoly::constant(lp)))
        .scale(&T::ratio(1, 2 * (m + 1) as i64));
    [c0, c1, c2]
}

/// Pre-supplement `ψ̂^i_{l,m}`: divergence 0 (or 1 when `l = m = 0`), reference normal trace
/// `s^l t^m - 1/((l+1)(m+1))` (or 1) on face `i` and 0 on the other faces.
pub fn presupplement<T: Scalar>(i: usize, l: u32, m: u32) -> RefVectorFunction<T> {
    let ax = FaceAxes::of(i);
    let base = presupp_face1::<T>(l, m);
    let y1 = if ax.side == 1 {
        MultiPoly::var(ax.k)
    } else {
        MultiPoly::affine_var(ax.k, T::one(), -T::one())
    };
    let sub = [y1, MultiPoly::var(ax.p), MultiPoly::var(ax.q)];
    let mut c = [MultiPoly::zero(), MultiPoly::zero(), MultiPoly::zero()];
    let first = base[0].substitute(&sub);
    c[ax.k] = if ax.side == 1 { first } else { -first };
    c[ax.p] = base[1].substitute(&sub);
    c[ax.q] = base[2].substitute(&sub);
    let [a, b, d] = c;
    RefVectorFunction::new(VectorPoly::new(a, b, d), format!("psi^{i}_{l},{m}"))
}

/// Divergence-free interior bubble `(0, ∂_3 b, -∂_2 b)` with `b = x̂_2(1-x̂_2)x̂_3(1-x̂_3)p`.
pub fn face_bubble<T: Scalar>(p: &FacePoly<T>) -> RefVectorFunction<T> {
    // p is given in (x̂_2, x̂_3) as variables 0, 1
    let p3 = p.relabel([1, 2, 0]);
    let one = T::one();
    let b2 = &MultiPoly::var(1) * &MultiPoly::affine_var(1, one.clone(), -one.clone());
    let b3 = &MultiPoly::var(2) * &MultiPoly::affine_var(2, one.clone(), -one);
    let b = &(&b2 * &b3) * &p3;
    RefVectorFunction::new(
        VectorPoly::new(MultiPoly::zero(), b.deriv(2), -b.deriv(1)),
        "bubble",
    )
}

/// Expansion of a face polynomial `g(s, t)` as `Σ_{a+b≥1} α_ab (s^a t^b - 1/((a+1)(b+1))) + α_00`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxCoeffs<T: Scalar> {
    pub face: usize,
    pub lm: (u32, u32),
    /// `((a, b), α_ab)` for all nonzero coefficients; `(0, 0)` carries the face integral.
    pub alpha: Vec<((u32, u32), T)>,
}

impl<T: Scalar> FluxCoeffs<T> {
    pub fn from_face_poly(face: usize, lm: (u32, u32), g: &FacePoly<T>) -> Self {
        let mut alpha = vec![((0, 0), g.integrate_unit_square())];
        for (e, c) in g.terms() {
            if e[0] + e[1] > 0 {
                alpha.push(((e[0], e[1]), c.clone()));
            }
        }
        Self { face, lm, alpha }
    }

    pub fn alpha00(&self) -> T {
        self.alpha[0].1.clone()
    }

    pub fn get(&self, a: u32, b: u32) -> T {
        self.alpha
            .iter()
            .find(|(k, _)| *k == (a, b))
            .map(|(_, v)| v.clone())
            .unwrap_or_else(T::zero)
    }

    /// Rebuild the face polynomial from the expansion.
    pub fn reconstruct(&self) -> FacePoly<T> {
        let mut out = MultiPoly::constant(self.alpha00());
        for ((a, b), c) in &self.alpha[1..] {
            let basis = MultiPoly::monomial([*a, *b, 0], T::one())
                - MultiPoly::constant(T::ratio(1, ((a + 1) * (b + 1)) as i64));
            out = out + basis.scale(c);
        }
        out
    }

    /// `Σ α_ab ψ̂^i_{a,b}`: divergence `α_00`, reference trace equal to the expanded polynomial.
    pub fn presupplement_sum(&self) -> RefVectorFunction<T> {
        let mut v = VectorPoly::zero();
        for ((a, b), c) in &self.alpha {
            v = v + presupplement::<T>(self.face, *a, *b).vpoly.scale(c);
        }
        RefVectorFunction::new(
            v,
            format!("sigma^{}_{},{}", self.face, self.lm.0, self.lm.1),
        )
    }
}

/// `K_i (x_{i1}∘F)^l (x_{j1}∘F)^m` on face `i`, expanded in the mean-zero reference basis.
pub fn expand_flux_coeffs<T: Scalar>(hex: &Hexahedron, i: usize, l: u32, m: u32) -> FluxCoeffs<T> {
    let (a, b) = hex.face(i).local_vars;
    let mut e = [0u32; 3];
    e[a] = l;
    e[b] = m;
    let g = pulled_back_flux(hex, i, &MultiPoly::monomial(e, T::one()));
    FluxCoeffs::from_face_poly(i, (l, m), &g)
}

/// `K_i · (g ∘ F_E)` restricted to face `i`, as a polynomial in `(s, t)`.
pub fn pulled_back_flux<T: Scalar>(hex: &Hexahedron, i: usize, g: &MultiPoly<T>) -> FacePoly<T> {
    let fm = hex.face_map_polys::<T>(i);
    &hex.face_jacobian_poly::<T>(i) * &g.substitute(&fm)
}

/// `σ̂^i_{0,0}`: reference divergence `|f_i|`, reference trace `K_i` on face `i`, 0 elsewhere.
pub fn supplement_const<T: Scalar>(hex: &Hexahedron, i: usize) -> RefVectorFunction<T> {
    FluxCoeffs::from_face_poly(i, (0, 0), &hex.face_jacobian_poly::<T>(i))
        .presupplement_sum()
        .with_tag(format!("sigma^{i}_0,0"))
}

/// Exact face area `∫ K_i` in the coefficient field.
pub fn face_area<T: Scalar>(hex: &Hexahedron, i: usize) -> T {
    hex.face_jacobian_poly::<T>(i).integrate_unit_square()
}

/// Divergence-free supplement whose physical normal trace on face `i` is `g - c` (with `c` the
/// face average of `g`) and zero elsewhere. Returns the function and `c`.
pub fn supplement_trace<T: Scalar>(
    hex: &Hexahedron,
    i: usize,
    g: &MultiPoly<T>,
) -> (RefVectorFunction<T>, T) {
    let coeffs = FluxCoeffs::from_face_poly(i, (0, 0), &pulled_back_flux(hex, i, g));
    supplement_from_coeffs(hex, &coeffs)
}

fn supplement_from_coeffs<T: Scalar>(
    hex: &Hexahedron,
    coeffs: &FluxCoeffs<T>,
) -> (RefVectorFunction<T>, T) {
    let i = coeffs.face;
    let c = coeffs.alpha00() / face_area::<T>(hex, i);
    let s = coeffs
        .presupplement_sum()
        .sub(&supplement_const::<T>(hex, i).scale(&c));
    (s, c)
}

/// `σ̂^i_{l,m}` and its constant `c^i_{l,m}` (the face average of `x_{i1}^l x_{j1}^m`).
pub fn supplement_monomial<T: Scalar>(
    hex: &Hexahedron,
    i: usize,
    l: u32,
    m: u32,
) -> (RefVectorFunction<T>, T) {
    let (s, c) = supplement_from_coeffs(hex, &expand_flux_coeffs::<T>(hex, i, l, m));
    (s.with_tag(format!("sigma^{i}_{l},{m}")), c)
}

/// `σ̂^i_{0,0}/|f_i| - σ̂^j_{0,0}/|f_j|`: divergence-free, physical trace `1/|f_i|` on face `i`
/// and `-1/|f_j|` on face `j`.
pub fn supplement_pair<T: Scalar>(hex: &Hexahedron, i: usize, j: usize) -> RefVectorFunction<T> {
    assert_ne!(i, j, "pair supplement needs two distinct faces");
    let a = supplement_const::<T>(hex, i).scale(&(T::one() / face_area::<T>(hex, i)));
    let b = supplement_const::<T>(hex, j).scale(&(T::one() / face_area::<T>(hex, j)));
    a.sub(&b).with_tag(format!("sigma^{i},{j}_0,0"))
}
