//! Exact (symbolic) elements of the four function algebras.
//!
//! These carry enough structure for the index maps: Bohr-Fourier spectra for
//! almost-periodic functions, the split into atomic and absolutely continuous
//! parts for the Callier-Desoer class, and Laurent polynomials on the circle
//! and the torus. All of them evaluate at grid points and form a ring with
//! the pointwise involution `f* = conj(f)` on the boundary.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::freqdomain::GridPoint;
use crate::linalg::{CMat, C64, I, ONE, ZERO};
use crate::poly;

pub trait Element: Clone + Send + Sync + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn constant(c: C64) -> Self;
    fn eval(&self, point: &GridPoint) -> Result<C64>;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: C64) -> Self;
    /// Pointwise complex conjugate on the boundary.
    fn conj(&self) -> Self;

    fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

fn wrong_point(kind: &str, point: &GridPoint) -> Error {
    Error::Unsupported(format!("{kind} element evaluated at {point}"))
}

// ---------------------------------------------------------------------------
// Laurent polynomials on the unit circle and rational functions of z.

/// `z^low * (c_0 + c_1 z + ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Laurent1 {
    pub low: i32,
    pub coeffs: Vec<C64>,
}

impl Laurent1 {
    pub fn poly(coeffs: Vec<C64>) -> Self {
        Laurent1 { low: 0, coeffs }
    }

    pub fn eval(&self, z: C64) -> C64 {
        poly::eval(&self.coeffs, z) * z.powi(self.low)
    }

    fn mul(&self, o: &Self) -> Self {
        Laurent1 {
            low: self.low + o.low,
            coeffs: poly::mul(&self.coeffs, &o.coeffs),
        }
    }

    fn add(&self, o: &Self) -> Self {
        let low = self.low.min(o.low);
        let shift = |l: &Laurent1| {
            let mut v = vec![ZERO; (l.low - low) as usize];
            v.extend_from_slice(&l.coeffs);
            v
        };
        Laurent1 {
            low,
            coeffs: poly::add(&shift(self), &shift(o)),
        }
    }

    fn conj(&self) -> Self {
        let hi = self.low + self.coeffs.len() as i32 - 1;
        Laurent1 {
            low: -hi,
            coeffs: self.coeffs.iter().rev().map(|v| v.conj()).collect(),
        }
    }
}

/// A rational function of `z`, evaluated on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalZ {
    pub num: Laurent1,
    pub den: Laurent1,
}

impl RationalZ {
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Self {
        RationalZ {
            num: Laurent1::poly(num),
            den: Laurent1::poly(den),
        }
    }

    pub fn at(&self, z: C64) -> Result<C64> {
        let d = self.den.eval(z);
        if d.norm() == 0.0 {
            return Err(Error::SingularResolvent(format!("pole at z = {z}")));
        }
        Ok(self.num.eval(z) / d)
    }
}

impl Element for RationalZ {
    fn zero() -> Self {
        Self::constant(ZERO)
    }
    fn one() -> Self {
        Self::constant(ONE)
    }
    fn constant(c: C64) -> Self {
        RationalZ::new(vec![c], vec![ONE])
    }
    fn eval(&self, point: &GridPoint) -> Result<C64> {
        let z = point.z().ok_or_else(|| wrong_point("disk", point))?;
        self.at(z)
    }
    fn add(&self, o: &Self) -> Self {
        RationalZ {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        RationalZ {
            num: self.num.mul(&o.num),
            den: self.den.mul(&o.den),
        }
    }
    fn scale(&self, s: C64) -> Self {
        RationalZ {
            num: Laurent1 {
                low: self.num.low,
                coeffs: poly::scale(&self.num.coeffs, s),
            },
            den: self.den.clone(),
        }
    }
    fn conj(&self) -> Self {
        RationalZ {
            num: self.num.conj(),
            den: self.den.conj(),
        }
    }
}

// ---------------------------------------------------------------------------
// Almost-periodic polynomials.

/// A finite Bohr-Fourier sum `sum_k c_k exp(i w_k y)`, frequencies sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    terms: Vec<(f64, C64)>,
}

const FREQ_MERGE: f64 = 1e-12;

impl ExpPoly {
    pub fn new(terms: impl IntoIterator<Item = (f64, C64)>) -> Self {
        let mut t: Vec<(f64, C64)> = terms.into_iter().collect();
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, C64)> = Vec::with_capacity(t.len());
        for (w, c) in t {
            match merged.last_mut() {
                Some(last) if (last.0 - w).abs() <= FREQ_MERGE * w.abs().max(1.0) => last.1 += c,
                _ => merged.push((w, c)),
            }
        }
        let scale = merged.iter().map(|t| t.1.norm()).fold(0.0, f64::max);
        merged.retain(|t| t.1.norm() > 1e-15 * scale);
        ExpPoly { terms: merged }
    }

    pub fn terms(&self) -> &[(f64, C64)] {
        &self.terms
    }

    pub fn at(&self, y: f64) -> C64 {
        self.terms
            .iter()
            .map(|&(w, c)| c * C64::from_polar(1.0, w * y))
            .sum()
    }

    /// Sum of coefficient moduli (the Wiener norm), an upper bound on `|f|`.
    pub fn wiener_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm()).sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.0.abs()).fold(0.0, f64::max)
    }

    /// If every frequency is an integer multiple of a common step `h > 0`,
    /// returns `h` and the integer exponents.
    pub fn lattice(&self) -> Option<(f64, Vec<(i64, C64)>)> {
        let nonzero: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.0.abs())
            .filter(|w| *w > FREQ_MERGE)
            .collect();
        if nonzero.is_empty() {
            return Some((1.0, self.terms.iter().map(|&(_, c)| (0, c)).collect()));
        }
        let top = nonzero.iter().copied().fold(0.0, f64::max);
        let tol = 1e-9 * top;
        let h = nonzero.iter().copied().fold(0.0, |a, b| real_gcd(a, b, tol));
        if h <= tol {
            return None;
        }
        let mut out = Vec::with_capacity(self.terms.len());
        for &(w, c) in &self.terms {
            let k = (w / h).round();
            if (w - k * h).abs() > tol || k.abs() > (1u64 << 16) as f64 {
                return None;
            }
            out.push((k as i64, c));
        }
        Some((h, out))
    }
}

fn real_gcd(a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.max(b), a.min(b));
    let mut guard = 0;
    while b > tol && guard < 200 {
        let r = a % b;
        a = b;
        b = if r > b - tol { 0.0 } else { r };
        guard += 1;
    }
    a
}

impl Element for ExpPoly {
    fn zero() -> Self {
        ExpPoly { terms: Vec::new() }
    }
    fn one() -> Self {
        Self::constant(ONE)
    }
    fn constant(c: C64) -> Self {
        ExpPoly::new([(0.0, c)])
    }
    fn eval(&self, point: &GridPoint) -> Result<C64> {
        let y = point.y().ok_or_else(|| wrong_point("almost-periodic", point))?;
        Ok(self.at(y))
    }
    fn add(&self, o: &Self) -> Self {
        ExpPoly::new(self.terms.iter().chain(&o.terms).copied())
    }
    fn mul(&self, o: &Self) -> Self {
        ExpPoly::new(
            self.terms
                .iter()
                .flat_map(|&(w1, c1)| o.terms.iter().map(move |&(w2, c2)| (w1 + w2, c1 * c2))),
        )
    }
    fn scale(&self, s: C64) -> Self {
        ExpPoly::new(self.terms.iter().map(|&(w, c)| (w, c * s)))
    }
    fn conj(&self) -> Self {
        ExpPoly::new(self.terms.iter().map(|&(w, c)| (-w, c.conj())))
    }
}

// ---------------------------------------------------------------------------
// Callier-Desoer class: atomic part plus absolutely continuous part.

/// A rational function of the real frequency `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalY {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
}

impl RationalY {
    /// Convert `n(s)/d(s)` in the Laplace variable to a function of `y` with `s = i y`.
    pub fn from_laplace(num: &[C64], den: &[C64]) -> Self {
        let conv = |p: &[C64]| -> Vec<C64> {
            let mut ik = ONE;
            p.iter()
                .map(|&a| {
                    let v = a * ik;
                    ik *= I;
                    v
                })
                .collect()
        };
        RationalY {
            num: conv(num),
            den: conv(den),
        }
    }

    pub fn at(&self, y: f64) -> C64 {
        let yc = C64::new(y, 0.0);
        poly::eval(&self.num, yc) / poly::eval(&self.den, yc)
    }

    fn mul(&self, o: &Self) -> Self {
        RationalY {
            num: poly::mul(&self.num, &o.num),
            den: poly::mul(&self.den, &o.den),
        }
    }

    fn scale(&self, s: C64) -> Self {
        RationalY {
            num: poly::scale(&self.num, s),
            den: self.den.clone(),
        }
    }

    fn conj(&self) -> Self {
        RationalY {
            num: self.num.iter().map(|v| v.conj()).collect(),
            den: self.den.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn is_strictly_proper(&self) -> bool {
        poly::degree(&self.num) < poly::degree(&self.den) || self.num.iter().all(|v| *v == ZERO)
    }
}

/// `F(iy) = F_AP(y) + sum_k exp(i w_k y) r_k(y)` with strictly proper rational `r_k`.
///
/// The second sum lies in the L1 ideal: it vanishes as `|y| -> infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdElement {
    pub ap: ExpPoly,
    pub ac: Vec<(f64, RationalY)>,
}

impl CdElement {
    pub fn new(ap: ExpPoly, ac: Vec<(f64, RationalY)>) -> Self {
        CdElement { ap, ac }
    }

    pub fn ac_at(&self, y: f64) -> C64 {
        self.ac
            .iter()
            .map(|(w, r)| C64::from_polar(1.0, w * y) * r.at(y))
            .sum()
    }

    pub fn at(&self, y: f64) -> C64 {
        self.ap.at(y) + self.ac_at(y)
    }
}

impl Element for CdElement {
    fn zero() -> Self {
        CdElement::new(ExpPoly::zero(), Vec::new())
    }
    fn one() -> Self {
        Self::constant(ONE)
    }
    fn constant(c: C64) -> Self {
        CdElement::new(ExpPoly::constant(c), Vec::new())
    }
    fn eval(&self, point: &GridPoint) -> Result<C64> {
        let y = point.y().ok_or_else(|| wrong_point("Callier-Desoer", point))?;
        Ok(self.at(y))
    }
    fn add(&self, o: &Self) -> Self {
        CdElement::new(self.ap.add(&o.ap), self.ac.iter().chain(&o.ac).cloned().collect())
    }
    fn mul(&self, o: &Self) -> Self {
        let mut ac = Vec::new();
        for &(w1, c1) in self.ap.terms() {
            for (w2, r2) in &o.ac {
                ac.push((w1 + w2, r2.scale(c1)));
            }
        }
        for &(w2, c2) in o.ap.terms() {
            for (w1, r1) in &self.ac {
                ac.push((w1 + w2, r1.scale(c2)));
            }
        }
        for (w1, r1) in &self.ac {
            for (w2, r2) in &o.ac {
                ac.push((w1 + w2, r1.mul(r2)));
            }
        }
        CdElement::new(self.ap.mul(&o.ap), ac)
    }
    fn scale(&self, s: C64) -> Self {
        CdElement::new(
            self.ap.scale(s),
            self.ac.iter().map(|(w, r)| (*w, r.scale(s))).collect(),
        )
    }
    fn conj(&self) -> Self {
        CdElement::new(
            self.ap.conj(),
            self.ac.iter().map(|(w, r)| (-*w, r.conj())).collect(),
        )
    }
}

// ---------------------------------------------------------------------------
// Laurent polynomials on the torus.

/// `sum_alpha c_alpha z^alpha` in `n` variables, exponents possibly negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLaurent {
    n: usize,
    terms: BTreeMap<Vec<i32>, C64>,
}

impl MultiLaurent {
    pub fn new(n: usize, terms: impl IntoIterator<Item = (Vec<i32>, C64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Validation(format!(
                    "exponent {e:?} has {} entries, expected {n}",
                    e.len()
                )));
            }
            *map.entry(e).or_insert(ZERO) += c;
        }
        map.retain(|_, c| *c != ZERO);
        Ok(MultiLaurent { n, terms: map })
    }

    fn with_terms(n: usize, terms: impl IntoIterator<Item = (Vec<i32>, C64)>) -> Self {
        Self::new(n, terms).expect("exponent arity is preserved by ring operations")
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &C64)> {
        self.terms.iter()
    }

    pub fn at(&self, z: &[C64]) -> C64 {
        self.terms
            .iter()
            .map(|(e, &c)| e.iter().zip(z).fold(c, |acc, (&k, &zi)| acc * zi.powi(k)))
            .sum()
    }

    /// Restriction `z -> f(z, ..., z)` to the diagonal.
    pub fn diagonal(&self) -> Laurent1 {
        let degs: Vec<(i32, C64)> = self.terms.iter().map(|(e, &c)| (e.iter().sum(), c)).collect();
        let low = degs.iter().map(|d| d.0).min().unwrap_or(0);
        let high = degs.iter().map(|d| d.0).max().unwrap_or(0);
        let mut coeffs = vec![ZERO; (high - low + 1) as usize];
        for (d, c) in degs {
            coeffs[(d - low) as usize] += c;
        }
        Laurent1 { low, coeffs }
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k >= 0))
    }

    // ring operations need the arity, which the zero/one constructors lack;
    // arity 0 acts as a wildcard for constants.
    fn arity_with(&self, o: &Self) -> usize {
        self.n.max(o.n)
    }

    fn padded(&self, n: usize) -> Vec<(Vec<i32>, C64)> {
        self.terms
            .iter()
            .map(|(e, &c)| {
                let mut e = e.clone();
                e.resize(n, 0);
                (e, c)
            })
            .collect()
    }
}

impl Element for MultiLaurent {
    fn zero() -> Self {
        MultiLaurent { n: 0, terms: BTreeMap::new() }
    }
    fn one() -> Self {
        Self::constant(ONE)
    }
    fn constant(c: C64) -> Self {
        MultiLaurent::with_terms(0, [(Vec::new(), c)])
    }
    fn eval(&self, point: &GridPoint) -> Result<C64> {
        let z = match point {
            GridPoint::Torus(a) => a.iter().map(|&t| C64::from_polar(1.0, t)).collect::<Vec<_>>(),
            GridPoint::Diagonal { theta } => vec![C64::from_polar(1.0, *theta); self.n.max(1)],
            _ => return Err(wrong_point("polydisk", point)),
        };
        if self.n > 0 && z.len() != self.n {
            return Err(Error::dims(format!(
                "{}-variable polynomial at a {}-torus point",
                self.n,
                z.len()
            )));
        }
        Ok(self.at(&z))
    }
    fn add(&self, o: &Self) -> Self {
        let n = self.arity_with(o);
        MultiLaurent::with_terms(n, self.padded(n).into_iter().chain(o.padded(n)))
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.arity_with(o);
        let a = self.padded(n);
        let b = o.padded(n);
        MultiLaurent::with_terms(
            n,
            a.iter().flat_map(|(e1, c1)| {
                b.iter().map(move |(e2, c2)| {
                    (e1.iter().zip(e2).map(|(x, y)| x + y).collect(), c1 * c2)
                })
            }),
        )
    }
    fn scale(&self, s: C64) -> Self {
        MultiLaurent::with_terms(self.n, self.terms.iter().map(|(e, &c)| (e.clone(), c * s)))
    }
    fn conj(&self) -> Self {
        MultiLaurent::with_terms(
            self.n,
            self.terms
                .iter()
                .map(|(e, &c)| (e.iter().map(|k| -k).collect(), c.conj())),
        )
    }
}

// ---------------------------------------------------------------------------
// Matrices of elements.

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Element> SymMatrix<E> {
    pub fn from_rows(rows: Vec<Vec<E>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Validation("ragged element matrix".into()));
        }
        Ok(SymMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SymMatrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { E::one() } else { E::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).clone()).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).scale(s))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::dims(format!(
                "symbolic product {}x{} * {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(Self::from_fn(self.rows, o.cols, |i, j| {
            (0..self.cols).fold(E::zero(), |acc, k| acc.add(&self.get(i, k).mul(o.get(k, j))))
        }))
    }

    pub fn vstack(&self, o: &Self) -> Result<Self> {
        if self.cols != o.cols {
            return Err(Error::dims("vertical stack of mismatched widths"));
        }
        let mut rows = self.to_rows();
        rows.extend(o.to_rows());
        Ok(SymMatrix {
            rows: self.rows + o.rows,
            cols: self.cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn hstack(&self, o: &Self) -> Result<Self> {
        if self.rows != o.rows {
            return Err(Error::dims("horizontal stack of mismatched heights"));
        }
        Ok(Self::from_fn(self.rows, self.cols + o.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                o.get(i, j - self.cols).clone()
            }
        }))
    }

    /// Determinant by cofactor expansion (exact in the ring; intended for small sizes).
    pub fn det(&self) -> Result<E> {
        if self.rows != self.cols {
            return Err(Error::dims("determinant of a non-square matrix"));
        }
        let idx: Vec<usize> = (0..self.cols).collect();
        Ok(self.cofactor_det(0, &idx))
    }

    fn cofactor_det(&self, row: usize, cols: &[usize]) -> E {
        if cols.is_empty() {
            return E::one();
        }
        if cols.len() == 1 {
            return self.get(row, cols[0]).clone();
        }
        let mut acc = E::zero();
        for (pos, &c) in cols.iter().enumerate() {
            let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = self.get(row, c).mul(&self.cofactor_det(row + 1, &rest));
            acc = if pos % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }

    pub fn eval(&self, point: &GridPoint) -> Result<CMat> {
        let mut m = CMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).eval(point)?;
            }
        }
        Ok(m)
    }
}
