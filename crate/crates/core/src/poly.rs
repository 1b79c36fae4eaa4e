//! Dense complex polynomials, coefficients in ascending degree.

use crate::linalg::{eigenvalues, CMat, C64, ONE, ZERO};

pub fn eval(p: &[C64], x: C64) -> C64 {
    p.iter().rev().fold(ZERO, |acc, &a| acc * x + a)
}

pub fn derivative(p: &[C64]) -> Vec<C64> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

/// Drop trailing (highest degree) coefficients that are exactly zero.
pub fn trim(p: &[C64]) -> Vec<C64> {
    let mut out = p.to_vec();
    while out.len() > 1 && out.last().is_some_and(|v| *v == ZERO) {
        out.pop();
    }
    if out.is_empty() {
        out.push(ZERO);
    }
    out
}

pub fn degree(p: &[C64]) -> usize {
    trim(p).len() - 1
}

pub fn mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    if a.is_empty() || b.is_empty() {
        return vec![ZERO];
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(ZERO) + b.get(k).copied().unwrap_or(ZERO))
        .collect()
}

pub fn scale(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|&v| v * s).collect()
}

/// Monic polynomial with the given roots.
pub fn from_roots(roots: &[C64]) -> Vec<C64> {
    roots
        .iter()
        .fold(vec![ONE], |acc, &r| mul(&acc, &[-r, ONE]))
}

/// `(x + s)^k` expanded.
fn binomial_power(s: C64, lead: C64, k: usize) -> Vec<C64> {
    (0..k).fold(vec![ONE], |acc, _| mul(&acc, &[s, lead]))
}

/// Coefficients (in `w`) of `(w + a)^k p((1 + a w) / (w + a))` for `k >= deg p`.
///
/// The map `z = (1 + a w)/(w + a)` with real `|a| < 1` sends the unit circle to
/// itself and the closed unit disk in `z` onto the closed exterior in `w`.
pub fn mobius_substitute(p: &[C64], a: f64, k: usize) -> Vec<C64> {
    let a = C64::new(a, 0.0);
    let mut out = vec![ZERO; k + 1];
    for (j, &coef) in p.iter().enumerate() {
        if coef == ZERO {
            continue;
        }
        assert!(j <= k, "substitution degree too small");
        let num = binomial_power(ONE, a, j); // (1 + a w)^j
        let den = binomial_power(a, ONE, k - j); // (w + a)^(k-j)
        for (i, v) in mul(&num, &den).into_iter().enumerate() {
            out[i] += coef * v;
        }
    }
    out
}

/// Roots via companion-matrix eigenvalues followed by Newton polishing.
///
/// Zero leading coefficients are dropped (roots at infinity are not
/// reported); zero constant terms contribute exact roots at the origin.
pub fn roots(p: &[C64]) -> Vec<C64> {
    let p = trim(p);
    let mut zeros_at_origin = 0;
    while zeros_at_origin < p.len() - 1 && p[zeros_at_origin] == ZERO {
        zeros_at_origin += 1;
    }
    let q = &p[zeros_at_origin..];
    let n = q.len() - 1;
    let mut out = vec![ZERO; zeros_at_origin];
    if n == 0 {
        return out;
    }
    let lead = q[n];
    let mut comp = CMat::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = ONE;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -q[i] / lead;
    }
    let dq = derivative(q);
    for r in eigenvalues(&comp) {
        out.push(polish(q, &dq, r));
    }
    out
}

fn polish(p: &[C64], dp: &[C64], mut x: C64) -> C64 {
    for _ in 0..8 {
        let f = eval(p, x);
        let d = eval(dp, x);
        if d.norm() == 0.0 {
            break;
        }
        let step = f / d;
        let next = x - step;
        // only accept steps that reduce the residual
        if eval(p, next).norm() <= f.norm() {
            x = next;
        } else {
            break;
        }
        if step.norm() <= 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Coefficients of the degree `< n` polynomial taking `values[k]` at `exp(2 pi i k / n)`.
pub fn interpolate_roots_of_unity(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    (0..n)
        .map(|j| {
            let s: C64 = values
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    let ang = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                    v * C64::from_polar(1.0, ang)
                })
                .sum();
            s / n as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn roots_of_product() {
        let r = [c(2.0, 0.0), c(-0.5, 0.25), c(0.0, 0.0)];
        let p = from_roots(&r);
        let mut got = roots(&p);
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        let mut want = r.to_vec();
        want.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn mobius_substitution_matches_pointwise() {
        let p = [c(0.3, 0.1), c(-1.0, 0.0), c(0.0, 2.0)];
        let a = 0.35;
        let q = mobius_substitute(&p, a, 3);
        let w = c(0.7, -1.3);
        let z = (c(1.0, 0.0) + w * a) / (w + a);
        let lhs = eval(&q, w);
        let rhs = (w + a).powu(3) * eval(&p, z);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn interpolation_recovers_coefficients() {
        let p = [c(1.0, 2.0), c(-3.0, 0.5), c(0.25, 0.0)];
        let n = 4;
        let vals: Vec<C64> = (0..n)
            .map(|k| eval(&p, C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64)))
            .collect();
        let q = interpolate_roots_of_unity(&vals);
        for (k, qk) in q.iter().enumerate().take(n) {
            let want = p.get(k).copied().unwrap_or(ZERO);
            assert!((qk - want).norm() < 1e-13);
        }
    }
}
