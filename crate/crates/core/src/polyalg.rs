//! Trivariate polynomials with generic coefficients, vector fields built from them, and tensor
//! Gauss-Legendre quadrature on the unit cube and square.
//!
//! Construction-time algebra runs on [`Rational`] coefficients so that divergence and trace
//! identities come out as exact zeros; the same code runs on `f64` for fast evaluation.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational coefficient type.
pub type Rational = BigRational;

/// Exponent triple `(a, b, c)` of the monomial `x1^a x2^b x3^c`.
pub type Exponent = [u32; 3];

/// Coefficient field usable by [`MultiPoly`].
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::ops::Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn ratio(num: i64, den: i64) -> Self;
    fn abs_val(&self) -> Self;
    fn is_exact() -> bool;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for Rational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite coefficient")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // huge numerator/denominator: scale down before converting
            let n = self.numer().bits() as i64;
            let d = self.denom().bits() as i64;
            let shift = (n.max(d) - 900).max(0) as usize;
            let num = (self.numer() >> shift).to_f64().unwrap_or(0.0);
            let den = (self.denom() >> shift).to_f64().unwrap_or(1.0);
            num / den
        })
    }
    fn ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn is_exact() -> bool {
        true
    }
}

/// Sparse trivariate polynomial `sum c_e x^e`. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly<T: Scalar> {
    terms: BTreeMap<Exponent, T>,
}

/// Bivariate polynomial in a face's two local variables, stored in the first two slots of a
/// [`MultiPoly`] (the third exponent is always zero).
pub type FacePoly<T> = MultiPoly<T>;

impl<T: Scalar> Default for MultiPoly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> MultiPoly<T> {
    pub fn zero() -> Self {
        Self {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn one() -> Self {
        Self::constant(T::one())
    }

    pub fn monomial(e: Exponent, c: T) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    /// The coordinate function `x_{k+1}` (0-based `k`).
    pub fn var(k: usize) -> Self {
        let mut e = [0; 3];
        e[k] = 1;
        Self::monomial(e, T::one())
    }

    /// `a + b x_{k+1}`.
    pub fn affine_var(k: usize, a: T, b: T) -> Self {
        Self::constant(a) + Self::var(k).scale(&b)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &T)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: Exponent) -> T {
        self.terms.get(&e).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, e: Exponent, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    /// Maximal exponent of each variable.
    pub fn degrees(&self) -> [u32; 3] {
        let mut d = [0; 3];
        for e in self.terms.keys() {
            for k in 0..3 {
                d[k] = d[k].max(e[k]);
            }
        }
        d
    }

    /// Total degree (0 for the zero polynomial).
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e[0] + e[1] + e[2])
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            out.add_term(*e, v.clone() * c.clone());
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Partial derivative with respect to `x_{k+1}`.
    pub fn deriv(&self, k: usize) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            if e[k] > 0 {
                let mut ne = *e;
                ne[k] -= 1;
                out.add_term(ne, v.clone() * T::ratio(e[k] as i64, 1));
            }
        }
        out
    }

    /// Exact integral over the unit cube `[0,1]^3`.
    pub fn integrate_unit_cube(&self) -> T {
        let mut s = T::zero();
        for (e, v) in &self.terms {
            let den = (e[0] as i64 + 1) * (e[1] as i64 + 1) * (e[2] as i64 + 1);
            s = s + v.clone() * T::ratio(1, den);
        }
        s
    }

    /// Exact integral over the unit square in the first two variables (third exponent must be 0).
    pub fn integrate_unit_square(&self) -> T {
        debug_assert!(self.terms.keys().all(|e| e[2] == 0));
        self.integrate_unit_cube()
    }

    /// Fix variable `k` to the value `c`.
    pub fn restrict(&self, k: usize, c: &T) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            let mut ne = *e;
            ne[k] = 0;
            let mut f = v.clone();
            for _ in 0..e[k] {
                f = f * c.clone();
            }
            out.add_term(ne, f);
        }
        out
    }

    /// Rename variables: variable `k` of `self` becomes variable `map[k]` of the result.
    pub fn relabel(&self, map: [usize; 3]) -> Self {
        let mut out = Self::zero();
        for (e, v) in &self.terms {
            let mut ne = [0; 3];
            for k in 0..3 {
                ne[map[k]] += e[k];
            }
            out.add_term(ne, v.clone());
        }
        out
    }

    /// Composition `self(q_1, q_2, q_3)`.
    pub fn substitute(&self, q: &[MultiPoly<T>; 3]) -> Self {
        let d = self.degrees();
        let powers: Vec<Vec<MultiPoly<T>>> = (0..3)
            .map(|k| {
                let mut v = vec![Self::one()];
                for i in 1..=d[k] as usize {
                    let next = &v[i - 1] * &q[k];
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            let t = &(&powers[0][e[0] as usize] * &powers[1][e[1] as usize])
                * &powers[2][e[2] as usize];
            out = out + t.scale(c);
        }
        out
    }

    pub fn map_coeffs<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MultiPoly<U> {
        let mut out = MultiPoly::zero();
        for (e, v) in &self.terms {
            out.add_term(*e, f(v));
        }
        out
    }

    pub fn to_f64(&self) -> MultiPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn from_f64_poly(p: &MultiPoly<f64>) -> Self {
        p.map_coeffs(|c| T::from_f64(*c))
    }

    /// Floating-point evaluation.
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for (e, v) in &self.terms {
            s += v.to_f64()
                * x[0].powi(e[0] as i32)
                * x[1].powi(e[1] as i32)
                * x[2].powi(e[2] as i32);
        }
        s
    }

    /// Exact evaluation at a point with coefficients in `T`.
    pub fn eval_exact(&self, x: &[T; 3]) -> T {
        let mut s = T::zero();
        for (e, v) in &self.terms {
            let mut t = v.clone();
            for k in 0..3 {
                for _ in 0..e[k] {
                    t = t * x[k].clone();
                }
            }
            s = s + t;
        }
        s
    }

    /// Largest absolute coefficient, as `f64`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|v| v.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

impl<T: Scalar> Add for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn add(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        let mut out = self.clone();
        for (e, v) in &rhs.terms {
            out.add_term(*e, v.clone());
        }
        out
    }
}

impl<T: Scalar> Add for MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn add(mut self, rhs: MultiPoly<T>) -> MultiPoly<T> {
        for (e, v) in rhs.terms {
            self.add_term(e, v);
        }
        self
    }
}

impl<T: Scalar> Sub for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn sub(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        let mut out = self.clone();
        for (e, v) in &rhs.terms {
            out.add_term(*e, -v.clone());
        }
        out
    }
}

impl<T: Scalar> Sub for MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn sub(mut self, rhs: MultiPoly<T>) -> MultiPoly<T> {
        for (e, v) in rhs.terms {
            self.add_term(e, -v);
        }
        self
    }
}

impl<T: Scalar> Neg for MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn neg(self) -> MultiPoly<T> {
        self.scale(&(-T::one()))
    }
}

impl<T: Scalar> Mul for &MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn mul(self, rhs: &MultiPoly<T>) -> MultiPoly<T> {
        let mut out = MultiPoly::zero();
        for (ea, va) in &self.terms {
            for (eb, vb) in &rhs.terms {
                out.add_term(
                    [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]],
                    va.clone() * vb.clone(),
                );
            }
        }
        out
    }
}

impl<T: Scalar> Mul for MultiPoly<T> {
    type Output = MultiPoly<T>;
    fn mul(self, rhs: MultiPoly<T>) -> MultiPoly<T> {
        &self * &rhs
    }
}

/// A 3-vector of polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPoly<T: Scalar> {
    pub c: [MultiPoly<T>; 3],
}

impl<T: Scalar> VectorPoly<T> {
    pub fn new(c0: MultiPoly<T>, c1: MultiPoly<T>, c2: MultiPoly<T>) -> Self {
        Self { c: [c0, c1, c2] }
    }

    pub fn zero() -> Self {
        Self::new(MultiPoly::zero(), MultiPoly::zero(), MultiPoly::zero())
    }

    /// The constant vector field `v`.
    pub fn constant(v: [T; 3]) -> Self {
        let [a, b, c] = v;
        Self::new(
            MultiPoly::constant(a),
            MultiPoly::constant(b),
            MultiPoly::constant(c),
        )
    }

    /// Field with a single nonzero component `k`.
    pub fn axis(k: usize, p: MultiPoly<T>) -> Self {
        let mut v = Self::zero();
        v.c[k] = p;
        v
    }

    /// The position field `x - x0`.
    pub fn position(x0: [T; 3]) -> Self {
        let [a, b, c] = x0;
        Self::new(
            MultiPoly::affine_var(0, -a, T::one()),
            MultiPoly::affine_var(1, -b, T::one()),
            MultiPoly::affine_var(2, -c, T::one()),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|p| p.is_zero())
    }

    pub fn divergence(&self) -> MultiPoly<T> {
        self.c[0].deriv(0) + self.c[1].deriv(1) + self.c[2].deriv(2)
    }

    pub fn curl(&self) -> VectorPoly<T> {
        VectorPoly::new(
            self.c[2].deriv(1) - self.c[1].deriv(2),
            self.c[0].deriv(2) - self.c[2].deriv(0),
            self.c[1].deriv(0) - self.c[0].deriv(1),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Self {
            c: [self.c[0].scale(s), self.c[1].scale(s), self.c[2].scale(s)],
        }
    }

    /// Multiply every component by the scalar polynomial `p`.
    pub fn mul_poly(&self, p: &MultiPoly<T>) -> Self {
        Self {
            c: [&self.c[0] * p, &self.c[1] * p, &self.c[2] * p],
        }
    }

    /// `sum_k w_k c_k` for constant weights.
    pub fn dot_const(&self, w: &[T; 3]) -> MultiPoly<T> {
        self.c[0].scale(&w[0]) + self.c[1].scale(&w[1]) + self.c[2].scale(&w[2])
    }

    pub fn substitute(&self, q: &[MultiPoly<T>; 3]) -> Self {
        Self {
            c: [
                self.c[0].substitute(q),
                self.c[1].substitute(q),
                self.c[2].substitute(q),
            ],
        }
    }

    pub fn eval(&self, x: &[f64; 3]) -> [f64; 3] {
        [self.c[0].eval(x), self.c[1].eval(x), self.c[2].eval(x)]
    }

    pub fn to_f64(&self) -> VectorPoly<f64> {
        VectorPoly {
            c: [self.c[0].to_f64(), self.c[1].to_f64(), self.c[2].to_f64()],
        }
    }

    pub fn from_f64_poly(v: &VectorPoly<f64>) -> Self {
        Self {
            c: [
                MultiPoly::from_f64_poly(&v.c[0]),
                MultiPoly::from_f64_poly(&v.c[1]),
                MultiPoly::from_f64_poly(&v.c[2]),
            ],
        }
    }

    pub fn degrees(&self) -> [u32; 3] {
        let mut d = [0; 3];
        for p in &self.c {
            let e = p.degrees();
            for k in 0..3 {
                d[k] = d[k].max(e[k]);
            }
        }
        d
    }
}

impl<T: Scalar> Add for &VectorPoly<T> {
    type Output = VectorPoly<T>;
    fn add(self, rhs: &VectorPoly<T>) -> VectorPoly<T> {
        VectorPoly {
            c: [
                &self.c[0] + &rhs.c[0],
                &self.c[1] + &rhs.c[1],
                &self.c[2] + &rhs.c[2],
            ],
        }
    }
}

impl<T: Scalar> Add for VectorPoly<T> {
    type Output = VectorPoly<T>;
    fn add(self, rhs: VectorPoly<T>) -> VectorPoly<T> {
        &self + &rhs
    }
}

impl<T: Scalar> Sub for &VectorPoly<T> {
    type Output = VectorPoly<T>;
    fn sub(self, rhs: &VectorPoly<T>) -> VectorPoly<T> {
        VectorPoly {
            c: [
                &self.c[0] - &rhs.c[0],
                &self.c[1] - &rhs.c[1],
                &self.c[2] - &rhs.c[2],
            ],
        }
    }
}

impl<T: Scalar> Sub for VectorPoly<T> {
    type Output = VectorPoly<T>;
    fn sub(self, rhs: VectorPoly<T>) -> VectorPoly<T> {
        &self - &rhs
    }
}

/// Monomial exponents of `P_r` in three variables, ordered by total degree.
pub fn exponents_p(r: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    for d in 0..=r {
        for a in (0..=d).rev() {
            for b in (0..=d - a).rev() {
                out.push([a, b, d - a - b]);
            }
        }
    }
    out
}

/// Monomial exponents `(a, b)` of `P_r` in two variables, ordered by total degree.
pub fn exponents_p2(r: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for d in 0..=r {
        for a in (0..=d).rev() {
            out.push((a, d - a));
        }
    }
    out
}

/// `dim P_r(R^3)`.
pub fn dim_p(r: u32) -> usize {
    ((r + 1) * (r + 2) * (r + 3) / 6) as usize
}

/// `dim P_r(R^2)`.
pub fn dim_p2(r: u32) -> usize {
    ((r + 1) * (r + 2) / 2) as usize
}

/// Monomial basis of `P_r`.
pub fn basis_p<T: Scalar>(r: u32) -> Vec<MultiPoly<T>> {
    exponents_p(r)
        .into_iter()
        .map(|e| MultiPoly::monomial(e, T::one()))
        .collect()
}

/// Basis of `(P_r)^3`: each monomial in each component.
pub fn basis_vec_p<T: Scalar>(r: u32) -> Vec<VectorPoly<T>> {
    let mut out = Vec::new();
    for k in 0..3 {
        for p in basis_p::<T>(r) {
            out.push(VectorPoly::axis(k, p));
        }
    }
    out
}

/// Basis of `x P~_r` (homogeneous degree-`r` monomials times the position field).
pub fn basis_x_tilde_p<T: Scalar>(r: u32) -> Vec<VectorPoly<T>> {
    exponents_p(r)
        .into_iter()
        .filter(|e| e[0] + e[1] + e[2] == r)
        .map(|e| {
            let m = MultiPoly::monomial(e, T::one());
            VectorPoly::new(
                &MultiPoly::var(0) * &m,
                &MultiPoly::var(1) * &m,
                &MultiPoly::var(2) * &m,
            )
        })
        .collect()
}

/// A basis of `Curl (P_{r+1})^3 ⊕ x P_0`.
///
/// Curls of the monomial potentials `x^e e_k` are filtered greedily by Gram-Schmidt on their
/// coefficient vectors, so the returned set is linearly independent.
pub fn basis_curl_p<T: Scalar>(r: u32) -> Vec<VectorPoly<T>> {
    let mut out: Vec<VectorPoly<T>> = Vec::new();
    let mut ortho: Vec<BTreeMap<(usize, Exponent), f64>> = Vec::new();
    for k in 0..3 {
        for e in exponents_p(r + 1) {
            let c = VectorPoly::axis(k, MultiPoly::monomial(e, T::one())).curl();
            if c.is_zero() {
                continue;
            }
            let mut x: BTreeMap<(usize, Exponent), f64> = BTreeMap::new();
            for comp in 0..3 {
                for (ex, v) in c.c[comp].terms() {
                    x.insert((comp, *ex), v.to_f64());
                }
            }
            let norm0 = x.values().map(|v| v * v).sum::<f64>().sqrt();
            for q in &ortho {
                let d: f64 = q
                    .iter()
                    .map(|(key, qv)| qv * x.get(key).copied().unwrap_or(0.0))
                    .sum();
                for (key, qv) in q {
                    *x.entry(*key).or_insert(0.0) -= d * qv;
                }
            }
            let norm = x.values().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-10 * norm0 {
                x.values_mut().for_each(|v| *v /= norm);
                ortho.push(x);
                out.push(c);
            }
        }
    }
    out.push(VectorPoly::position([T::zero(), T::zero(), T::zero()]));
    out
}

/// Tensor-product Gauss-Legendre rule on `[0,1]^dim`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Points; unused trailing coordinates are zero.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly in each variable.
    pub degree: u32,
}

/// Gauss-Legendre nodes and weights on `[0,1]` with `n` points.
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    (
        idx.iter().map(|&i| x[i]).collect(),
        idx.iter().map(|&i| w[i]).collect(),
    )
}

/// Tensor Gauss rule on `[0,1]^dim` exact for polynomials of degree `degree` in each variable.
pub fn gauss_rule(dim: usize, degree: u32) -> QuadratureRule {
    assert!((1..=3).contains(&dim));
    let n = (degree as usize) / 2 + 1;
    let (x, w) = gauss_legendre_01(n);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let nk = |k: usize| if k < dim { n } else { 1 };
    for i in 0..nk(0) {
        for j in 0..nk(1) {
            for k in 0..nk(2) {
                let mut p = [0.0; 3];
                let mut wt = 1.0;
                for (slot, idx) in [i, j, k].iter().enumerate() {
                    if slot < dim {
                        p[slot] = x[*idx];
                        wt *= w[*idx];
                    }
                }
                points.push(p);
                weights.push(wt);
            }
        }
    }
    QuadratureRule {
        dim,
        points,
        weights,
        degree: (2 * n - 1) as u32,
    }
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Precomputed powers of a point's coordinates for fast evaluation of many polynomials.
#[derive(Clone, Debug)]
pub struct PowerTable {
    pw: [Vec<f64>; 3],
}

impl PowerTable {
    pub fn new(x: &[f64; 3], max_deg: usize) -> Self {
        let mk = |v: f64| {
            let mut p = vec![1.0; max_deg + 1];
            for i in 1..=max_deg {
                p[i] = p[i - 1] * v;
            }
            p
        };
        Self {
            pw: [mk(x[0]), mk(x[1]), mk(x[2])],
        }
    }

    pub fn eval(&self, p: &MultiPoly<f64>) -> f64 {
        let mut s = 0.0;
        for (e, c) in p.terms() {
            s += c
                * self.pw[0][e[0] as usize]
                * self.pw[1][e[1] as usize]
                * self.pw[2][e[2] as usize];
        }
        s
    }

    pub fn eval_vec(&self, v: &VectorPoly<f64>) -> [f64; 3] {
        [self.eval(&v.c[0]), self.eval(&v.c[1]), self.eval(&v.c[2])]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn divergence_of_x1_axis_is_one() {
        let v: VectorPoly<Rational> = VectorPoly::axis(0, MultiPoly::var(0));
        assert_eq!(v.divergence(), MultiPoly::one());
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let p: MultiPoly<Rational> = MultiPoly::monomial([2, 1, 3], q(3, 7)) + MultiPoly::var(1);
        let g = VectorPoly::new(p.deriv(0), p.deriv(1), p.deriv(2));
        assert!(g.curl().is_zero());
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let v: VectorPoly<Rational> = VectorPoly::new(
            MultiPoly::monomial([1, 2, 0], q(1, 3)),
            MultiPoly::monomial([0, 1, 2], q(-2, 5)),
            MultiPoly::monomial([3, 0, 1], q(1, 1)),
        );
        assert!(v.curl().divergence().is_zero());
    }

    #[test]
    fn substitute_identity() {
        let p: MultiPoly<Rational> = MultiPoly::monomial([1, 2, 3], q(5, 2)) + MultiPoly::var(2);
        let id = [MultiPoly::var(0), MultiPoly::var(1), MultiPoly::var(2)];
        assert_eq!(p.substitute(&id), p);
    }

    #[test]
    fn substitute_affine() {
        // (x1)^2 with x1 -> 1 - x1 gives 1 - 2 x1 + x1^2
        let p: MultiPoly<Rational> = MultiPoly::monomial([2, 0, 0], q(1, 1));
        let s = [
            MultiPoly::affine_var(0, q(1, 1), q(-1, 1)),
            MultiPoly::var(1),
            MultiPoly::var(2),
        ];
        let expect = MultiPoly::one() - MultiPoly::var(0).scale(&q(2, 1))
            + MultiPoly::monomial([2, 0, 0], q(1, 1));
        assert_eq!(p.substitute(&s), expect);
    }

    #[test]
    fn dimensions() {
        assert_eq!(basis_vec_p::<f64>(1).len(), 12);
        assert_eq!(dim_p(1), 4);
        assert_eq!(dim_p(2), 10);
        assert_eq!(dim_p2(1), 3);
        for r in 0..3u32 {
            let n = ((r + 2) * (r + 1) * (2 * r + 9) / 6 + 1) as usize;
            assert_eq!(basis_curl_p::<Rational>(r).len(), n, "r = {r}");
        }
        // r = 0: P_0^3 ⊕ x P_0
        assert_eq!(basis_curl_p::<Rational>(0).len(), 4);
        assert_eq!(basis_x_tilde_p::<f64>(1).len(), 3);
    }

    #[test]
    fn gauss_exactness() {
        let r1 = gauss_rule(1, 1);
        assert_eq!(r1.len(), 1);
        assert!((r1.integrate(|x| x[0]) - 0.5).abs() < 1e-15);
        let r5 = gauss_rule(1, 5);
        assert_eq!(r5.len(), 3);
        assert!((r5.integrate(|x| x[0].powi(5)) - 1.0 / 6.0).abs() < 1e-15);
        let r2 = gauss_rule(2, 6);
        assert!((r2.integrate(|x| x[0].powi(2) * x[1].powi(4)) - 1.0 / 15.0).abs() < 1e-15);
        let r3 = gauss_rule(3, 4);
        let w: f64 = r3.weights.iter().sum();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_matches_exact_integration() {
        let p: MultiPoly<Rational> =
            MultiPoly::monomial([3, 2, 1], q(2, 3)) + MultiPoly::monomial([0, 4, 2], q(-1, 7));
        let rule = gauss_rule(3, 4);
        let num = rule.integrate(|x| p.eval(x));
        assert!((num - Scalar::to_f64(&p.integrate_unit_cube())).abs() < 1e-14);
    }

    #[test]
    fn power_table_matches_eval() {
        let p: MultiPoly<f64> =
            MultiPoly::monomial([3, 2, 1], 0.7) + MultiPoly::monomial([0, 4, 2], -1.5);
        let x = [0.3, 0.8, 0.45];
        let t = PowerTable::new(&x, 5);
        assert!((t.eval(&p) - p.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn rational_to_f64_handles_huge_terms() {
        let big = Rational::new(BigInt::from(3) << 2000usize, BigInt::from(2) << 2000usize);
        assert!((Scalar::to_f64(&big) - 1.5).abs() < 1e-15);
    }
}
