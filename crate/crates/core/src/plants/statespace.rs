
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::poly;

/// `D + C (x I - A)^{-1} B`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
    pub d: CMat,
}

/// One entry `num(z) / den(z)` of a rational matrix, ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalEntry {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
}

impl RationalEntry {
    pub fn eval(&self, z: C64) -> Result<C64> {
        let d = poly::eval(&self.den, z);
        if d.norm() == 0.0 {
            return Err(Error::SingularResolvent(format!("pole at z = {z}")));
        }
        Ok(poly::eval(&self.num, z) / d)
    }

    pub fn constant(v: C64) -> Self {
        RationalEntry { num: vec![v], den: vec![ONE] }
    }
}

/// Shift candidates for the Möbius change of variable, in order of preference.
const SHIFTS: [f64; 7] = [0.0, 0.5, -0.5, 0.25, -0.25, 0.75, -0.75];
const SHIFT_CLEARANCE: f64 = 0.2;

/// Real `a` in `(-1, 1)` kept away from the given poles.
pub fn choose_shift(poles: &[C64]) -> f64 {
    let clearance = |a: f64| poles.iter().map(|p| (p - a).norm()).fold(f64::INFINITY, f64::min);
    SHIFTS
        .iter()
        .copied()
        .find(|&a| clearance(a) >= SHIFT_CLEARANCE)
        .unwrap_or_else(|| {
            SHIFTS
                .iter()
                .copied()
                .max_by(|x, y| clearance(*x).total_cmp(&clearance(*y)))
                .expect("non-empty candidate list")
        })
}

impl StateSpace {
    pub fn new(a: CMat, b: CMat, c: CMat, d: CMat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || c.nrows() != d.nrows() || b.ncols() != d.ncols() {
            return Err(Error::Validation(format!(
                "inconsistent realization: A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    pub fn gain(d: CMat) -> Self {
        StateSpace {
            a: CMat::zeros(0, 0),
            b: CMat::zeros(0, d.ncols()),
            c: CMat::zeros(d.nrows(), 0),
            d,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.d.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.d.ncols()
    }

    pub fn poles(&self) -> Vec<C64> {
        linalg::eigenvalues(&self.a)
    }

    pub fn eval(&self, x: C64) -> Result<CMat> {
        if self.order() == 0 {
            return Ok(self.d.clone());
        }
        let n = self.order();
        let resolvent = CMat::identity(n, n) * x - &self.a;
        let sol = linalg::solve(&resolvent, &self.b, &format!("x = {x}"))?;
        Ok(&self.d + &self.c * sol)
    }

    pub fn transpose(&self) -> Self {
        StateSpace {
            a: self.a.transpose(),
            b: self.c.transpose(),
            c: self.b.transpose(),
            d: self.d.transpose(),
        }
    }

    /// Realization in `v` of the same transfer function, where the old
    /// variable is `u = (1 + a v) / (v + a)`.
    pub fn mobius(&self, a: f64) -> Result<Self> {
        let n = self.order();
        if n == 0 {
            return Ok(self.clone());
        }
        let id = CMat::identity(n, n);
        let ac = C64::new(a, 0.0);
        let m = &id * ac - &self.a;
        let minv = linalg::inverse(&m, "shifted state matrix")?;
        let a_hat = -&minv * (&id - &self.a * ac);
        let b_hat = &minv * &self.b;
        let c_hat = &self.c * (&a_hat + &id * ac);
        let d_hat = &self.d + &self.c * &b_hat;
        Ok(StateSpace {
            a: a_hat,
            b: b_hat,
            c: c_hat,
            d: d_hat,
        })
    }

    /// Series connection `self * other` (other acts first).
    pub fn series(&self, other: &StateSpace) -> Result<Self> {
        if self.inputs() != other.outputs() {
            return Err(Error::dims("series connection of mismatched systems"));
        }
        let (n1, n2) = (self.order(), other.order());
        let mut a = CMat::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((0, n1), (n1, n2)).copy_from(&(&self.b * &other.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let b = linalg::vstack(&(&self.b * &other.d), &other.b);
        let c = linalg::hstack(&self.c, &(&self.d * &other.c));
        Ok(StateSpace {
            a,
            b,
            c,
            d: &self.d * &other.d,
        })
    }

    /// Removes uncontrollable, then unobservable, states.
    pub fn minimal(&self, tol: f64) -> Self {
        let ctrl = reachable_basis(&self.a, &self.b, tol);
        let reduced = self.project(&ctrl);
        let obs = reachable_basis(&reduced.a.adjoint(), &reduced.c.adjoint(), tol);
        reduced.project(&obs)
    }

    fn project(&self, q: &CMat) -> Self {
        if q.ncols() == self.order() {
            return self.clone();
        }
        let qh = q.adjoint();
        StateSpace {
            a: &qh * &self.a * q,
            b: &qh * &self.b,
            c: &self.c * q,
            d: self.d.clone(),
        }
    }

    /// Entrywise rational form with the characteristic polynomial as denominator.
    pub fn to_rational(&self) -> Result<Vec<Vec<RationalEntry>>> {
        let den = poly::from_roots(&self.poles());
        let n = self.order();
        let pts: Vec<C64> = (0..=n)
            .map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / (n + 1) as f64))
            .collect();
        // num = P * den has degree <= n: recover it from n + 1 samples
        let samples: Vec<CMat> = pts
            .iter()
            .map(|&z| self.eval(z).map(|m| m * poly::eval(&den, z)))
            .collect::<Result<_>>()?;
        Ok((0..self.outputs())
            .map(|i| {
                (0..self.inputs())
                    .map(|j| {
                        let vals: Vec<C64> = samples.iter().map(|s| s[(i, j)]).collect();
                        RationalEntry {
                            num: poly::interpolate_roots_of_unity(&vals),
                            den: den.clone(),
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

/// Orthonormal basis of the smallest `A`-invariant subspace containing the columns of `B`.
fn reachable_basis(a: &CMat, b: &CMat, tol: f64) -> CMat {
    let n = a.nrows();
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    let mut frontier: Vec<nalgebra::DVector<C64>> = b.column_iter().map(|c| c.into_owned()).collect();
    while !frontier.is_empty() && basis.len() < n {
        let mut added = Vec::new();
        for v in frontier {
            let before = v.norm();
            if before == 0.0 {
                continue;
            }
            let mut w = v;
            for _ in 0..2 {
                for q in &basis {
                    let proj = q.dotc(&w);
                    w -= q * proj;
                }
            }
            let after = w.norm();
            if after > tol * before && basis.len() < n {
                let q = w / C64::new(after, 0.0);
                basis.push(q.clone());
                added.push(q);
            }
        }
        frontier = added.iter().map(|q| a * q).collect();
    }
    let mut out = CMat::zeros(n, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

/// Controllable canonical realization of a proper scalar `num / den`.
pub fn realize_scalar(num: &[C64], den: &[C64]) -> Result<StateSpace> {
    let den = poly::trim(den);
    let n = den.len() - 1;
    let lead = den[n];
    if lead == ZERO {
        return Err(Error::Validation("zero denominator".into()));
    }
    let num = poly::trim(num);
    if num.len() > n + 1 {
        return Err(Error::Unsupported("improper rational function".into()));
    }
    let den: Vec<C64> = den.iter().map(|v| v / lead).collect();
    let num: Vec<C64> = num.iter().map(|v| v / lead).collect();
    let d0 = num.get(n).copied().unwrap_or(ZERO);
    let rem: Vec<C64> = (0..n)
        .map(|k| num.get(k).copied().unwrap_or(ZERO) - d0 * den[k])
        .collect();
    let mut a = CMat::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = ONE;
    }
    for k in 0..n {
        a[(n - 1, k)] = -den[k];
    }
    let mut b = CMat::zeros(n, 1);
    if n > 0 {
        b[(n - 1, 0)] = ONE;
    }
    let c = CMat::from_row_slice(1, n, &rem);
    Ok(StateSpace {
        a,
        b,
        c,
        d: linalg::scalar(d0),
    })
}

/// Realization in `w` of a rational matrix in `z = (1 + a w)/(w + a)`.
pub fn realize_rational_mobius(entries: &[Vec<RationalEntry>], a: f64) -> Result<StateSpace> {
    let p = entries.len();
    let m = entries.first().map(|r| r.len()).unwrap_or(0);
    let mut parts = Vec::new();
    for (i, row) in entries.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            let k = poly::degree(&e.num).max(poly::degree(&e.den));
            let num = poly::mobius_substitute(&poly::trim(&e.num), a, k);
            let den = poly::mobius_substitute(&poly::trim(&e.den), a, k);
            parts.push((i, j, realize_scalar(&num, &den)?));
        }
    }
    let n: usize = parts.iter().map(|x| x.2.order()).sum();
    let mut ss = StateSpace {
        a: CMat::zeros(n, n),
        b: CMat::zeros(n, m),
        c: CMat::zeros(p, n),
        d: CMat::zeros(p, m),
    };
    let mut off = 0;
    for (i, j, s) in parts {
        let k = s.order();
        ss.a.view_mut((off, off), (k, k)).copy_from(&s.a);
        ss.b.view_mut((off, j), (k, 1)).copy_from(&s.b);
        ss.c.view_mut((i, off), (1, k)).copy_from(&s.c);
        ss.d[(i, j)] = s.d[(0, 0)];
        off += k;
    }
    Ok(ss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn sample_ss() -> StateSpace {
        StateSpace::new(
            CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]),
            CMat::from_row_slice(2, 1, &[c(1.0, 0.0), c(-0.5, 0.0)]),
            CMat::from_row_slice(1, 2, &[c(0.7, 0.0), c(1.5, 0.0)]),
            CMat::from_row_slice(1, 1, &[c(0.1, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn first_order_value() {
        let ss = StateSpace::new(
            linalg::scalar(c(0.5, 0.0)),
            linalg::scalar(ONE),
            linalg::scalar(ONE),
            linalg::scalar(ZERO),
        )
        .unwrap();
        assert!((ss.eval(ONE).unwrap()[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn mobius_realization_matches() {
        let ss = sample_ss();
        for a in [0.0, 0.5, -0.25] {
            let w_ss = ss.mobius(a).unwrap();
            let w = c(0.3, 0.8);
            let z = (ONE + w * a) / (w + a);
            let diff = w_ss.eval(w).unwrap() - ss.eval(z).unwrap();
            assert!(diff.norm() < 1e-12);
            // inverse transform
            let back = w_ss.mobius(-a).unwrap();
            assert!((back.eval(z).unwrap() - ss.eval(z).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn rational_round_trip() {
        let ss = sample_ss();
        let r = ss.to_rational().unwrap();
        let z = C64::from_polar(1.0, 0.7);
        assert!((r[0][0].eval(z).unwrap() - ss.eval(z).unwrap()[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn minimal_removes_cancelled_mode() {
        // (z - 0.5)/((z - 0.5)(z - 2)) = 1/(z - 2)
        let num = poly::from_roots(&[c(0.5, 0.0)]);
        let den = poly::from_roots(&[c(0.5, 0.0), c(2.0, 0.0)]);
        let ss = realize_scalar(&num, &den).unwrap();
        assert_eq!(ss.order(), 2);
        let min = ss.minimal(1e-10);
        assert_eq!(min.order(), 1);
        let z = c(0.0, 1.0);
        assert!((min.eval(z).unwrap()[(0, 0)] - (z - 2.0).inv()).norm() < 1e-12);
    }

    #[test]
    fn improper_rational_via_mobius() {
        // P(z) = z
        let e = RationalEntry {
            num: vec![ZERO, ONE],
            den: vec![ONE],
        };
        let a = 0.5;
        let ss = realize_rational_mobius(&[vec![e]], a).unwrap();
        let w = C64::from_polar(1.0, 1.3);
        let z = (ONE + w * a) / (w + a);
        assert!((ss.eval(w).unwrap()[(0, 0)] - z).norm() < 1e-12);
    }

    #[test]
    fn shift_avoids_poles() {
        assert_eq!(choose_shift(&[c(2.0, 0.0)]), 0.0);
        assert_eq!(choose_shift(&[c(0.0, 0.0)]), 0.5);
    }
}
