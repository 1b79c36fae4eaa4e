//! Normalized coprime factorizations of rational disk-algebra plants and
//! checks on user-supplied factors.
//!
//! A plant `P(z)` is realized in the Möbius variable `w = (1 - a z)/(z - a)`,
//! where stability in `z` becomes the usual discrete-time condition
//! (eigenvalues inside the unit circle). The right factors come from the
//! stabilizing solution of the discrete algebraic Riccati equation
//!
//! ```text
//! X = A*XA - (A*XB + C*D)(R + B*XB)^{-1}(B*XA + D*C) + C*C,   R = I + D*D
//! ```
//!
//! and the left factors from the same construction on the transposed system.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec;
use crate::freqdomain::{AlgebraTag, FrequencyGrid, MatrixFunction, MatrixSampler};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::plants::{Bezout, CoprimeFactors, FactorBlock, PlantBody, PlantModel, Realization, Residuals, StateSpace, SymBlock};
use crate::poly;
use crate::symbolic::{RationalZ, SymMatrix};

/// Relative convergence tolerance of the doubling iteration.
pub const RICCATI_TOL: f64 = 1e-12;
pub const RICCATI_MAX_ITER: usize = 500;
const NEWTON_STEPS: usize = 4;
/// Largest defect accepted by [`unitary_equivalence`].
pub const EQUIVALENCE_TOL: f64 = 1e-7;

/// Stabilizing Riccati solution with its convergence record.
#[derive(Debug, Clone)]
pub struct Dare {
    pub x: CMat,
    /// Relative change of the iterate at each doubling step, then the
    /// relative residual after each Newton correction.
    pub history: Vec<f64>,
    /// Residual of the equation at the returned solution, relative to its
    /// largest term.
    pub residual: f64,
}

fn adj(m: &CMat) -> CMat {
    m.adjoint()
}

/// Residual matrix of the equation at `x`, its size relative to the largest
/// term, and the feedback `F` defined by `x`.
fn dare_residual(a: &CMat, b: &CMat, c: &CMat, d: &CMat, x: &CMat) -> Result<(CMat, f64, CMat)> {
    let r = CMat::identity(d.ncols(), d.ncols()) + adj(d) * d;
    let s = &r + adj(b) * x * b;
    let k = adj(b) * x * a + adj(d) * c;
    let f = -linalg::solve(&s, &k, "R + B*XB")?;
    let terms = [adj(a) * x * a, x.clone(), -adj(&k) * &f, adj(c) * c];
    let res = &terms[0] - &terms[1] - &terms[2] + &terms[3];
    let res = (&res + adj(&res)) * C64::new(0.5, 0.0);
    let scale = terms.iter().map(linalg::max_abs).fold(1.0, f64::max);
    let rel = linalg::max_abs(&res) / scale;
    Ok((res, rel, f))
}

/// Solves `Y - A* Y A = W` through its Kronecker form.
fn stein(a: &CMat, w: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let ah = adj(a);
    let mut k = CMat::identity(n * n, n * n);
    // vec(A* Y A) = (A^T kron A*) vec(Y), column-major
    for j in 0..n {
        for l in 0..n {
            let ajl = a[(l, j)];
            if ajl == ZERO {
                continue;
            }
            for i in 0..n {
                for m in 0..n {
                    k[(j * n + i, l * n + m)] -= ajl * ah[(i, m)];
                }
            }
        }
    }
    let rhs = CMat::from_column_slice(n * n, 1, w.as_slice());
    let y = linalg::solve(&k, &rhs, "Stein equation")?;
    Ok(CMat::from_column_slice(n, n, y.as_slice()))
}

/// Newton correction steps `X += Y`, `Y - Ac* Y Ac = Res(X)`, while they
/// reduce the residual.
fn refine_dare(a: &CMat, b: &CMat, c: &CMat, d: &CMat, mut x: CMat, history: &mut Vec<f64>) -> Result<(CMat, f64)> {
    let (mut res, mut rel, mut f) = dare_residual(a, b, c, d, &x)?;
    for _ in 0..NEWTON_STEPS {
        if rel <= f64::EPSILON {
            break;
        }
        let ac = a + b * &f;
        let Ok(step) = stein(&ac, &res) else { break };
        let next = &x + step;
        let next = (&next + adj(&next)) * C64::new(0.5, 0.0);
        let (r2, rel2, f2) = dare_residual(a, b, c, d, &next)?;
        if rel2.is_nan() || rel2 >= rel {
            break;
        }
        history.push(rel2);
        (x, res, rel, f) = (next, r2, rel2, f2);
    }
    Ok((x, rel))
}

/// Solves the Riccati equation above by structure-preserving doubling
/// followed by Newton corrections.
pub fn solve_dare(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> Result<Dare> {
    let mut dare = doubling(a, b, c, d)?;
    if dare.residual > 1e2 * RICCATI_TOL {
        dare.history.push(dare.residual);
        return Err(Error::RiccatiDivergence { history: dare.history });
    }
    Ok(dare)
}

fn doubling(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> Result<Dare> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Dare {
            x: CMat::zeros(0, 0),
            history: Vec::new(),
            residual: 0.0,
        });
    }
    let (p, m) = d.shape();
    let id = CMat::identity(n, n);
    let r = CMat::identity(m, m) + adj(d) * d;
    let r_inv = linalg::inverse(&r, "I + D*D")?;
    let mut ak = a - b * &r_inv * adj(d) * c;
    let mut gk = b * &r_inv * adj(b);
    let ipdd = CMat::identity(p, p) + d * adj(d);
    let mut hk = adj(c) * linalg::solve(&ipdd, c, "I + DD*")?;
    let mut history = Vec::new();
    loop {
        let w = &id + &gk * &hk;
        let diverged = |history: Vec<f64>| Error::RiccatiDivergence { history };
        let Ok(w_a) = linalg::solve(&w, &ak, "I + GH") else {
            return Err(diverged(history));
        };
        let Ok(w_g) = linalg::solve(&w, &gk, "I + GH") else {
            return Err(diverged(history));
        };
        let h_next = &hk + adj(&ak) * &hk * &w_a;
        let g_next = &gk + &ak * w_g * adj(&ak);
        let a_next = &ak * w_a;
        let change = linalg::max_abs(&(&h_next - &hk)) / linalg::max_abs(&h_next).max(1.0);
        history.push(change);
        if !change.is_finite() || h_next.iter().any(|v| !v.is_finite()) {
            return Err(diverged(history));
        }
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if change <= RICCATI_TOL {
            break;
        }
        if history.len() >= RICCATI_MAX_ITER {
            return Err(diverged(history));
        }
    }
    let x = (&hk + adj(&hk)) * C64::new(0.5, 0.0);
    let (x, residual) = refine_dare(a, b, c, d, x, &mut history)?;
    Ok(Dare { x, history, residual })
}

/// State feedback `F` and normalizing factor `H = (R + B*XB)^{-1/2}`.
struct Gains {
    f: CMat,
    h: CMat,
}

fn gains(ss: &StateSpace) -> Result<Gains> {
    let (a, b, c, d) = (&ss.a, &ss.b, &ss.c, &ss.d);
    let x = solve_dare(a, b, c, d)?.x;
    let m = d.ncols();
    let s = CMat::identity(m, m) + adj(d) * d + adj(b) * &x * b;
    let f = -linalg::solve(&s, &(adj(b) * &x * a + adj(d) * c), "R + B*XB")?;
    if ss.order() > 0 {
        let rho = linalg::spectral_radius(&(a + b * &f));
        if rho >= 1.0 {
            return Err(Error::Factorization(format!(
                "Riccati solution is not stabilizing (spectral radius {rho})"
            )));
        }
    }
    let h = linalg::hermitian_inv_sqrt(&s)?;
    Ok(Gains { f, h })
}

/// Right factors and right Bezout witnesses of one realization, given the
/// state feedback of its own Riccati equation and the output injection `l`.
struct RightPieces {
    n: StateSpace,
    d: StateSpace,
    x: StateSpace,
    y: StateSpace,
}

fn right_pieces(ss: &StateSpace, g: &Gains, l: &CMat) -> Result<RightPieces> {
    let (a, b, c, d) = (&ss.a, &ss.b, &ss.c, &ss.d);
    let m = d.ncols();
    let abf = a + b * &g.f;
    let bh = b * &g.h;
    let n = StateSpace::new(abf.clone(), bh.clone(), c + d * &g.f, d * &g.h)?;
    let dd = StateSpace::new(abf, bh, g.f.clone(), g.h.clone())?;
    let h_inv = linalg::inverse(&g.h, "normalizing factor")?;
    let alc = a + l * c;
    let x = StateSpace::new(alc.clone(), -l, -&h_inv * &g.f, CMat::zeros(m, c.nrows()))?;
    let y = StateSpace::new(alc, -(b + l * d), &h_inv * &g.f, h_inv)?;
    Ok(RightPieces { n, d: dd, x, y })
}

/// Factor `L` with `L L* = M` for a Hermitian positive semidefinite `M`.
fn psd_factor(m: &CMat) -> CMat {
    let eig = SymmetricEigen::new((m + adj(m)) * C64::new(0.5, 0.0));
    let mut v = eig.eigenvectors;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        v.column_mut(k).scale_mut(s);
    }
    v
}

/// Similar realization in which the control and filter Riccati solutions are
/// equal and diagonal. Returns `ss` unchanged when it is not minimal enough
/// for the transformation to be well defined.
fn balance(ss: &StateSpace) -> Result<StateSpace> {
    let n = ss.order();
    if n == 0 {
        return Ok(ss.clone());
    }
    let x = doubling(&ss.a, &ss.b, &ss.c, &ss.d)?.x;
    let t = ss.transpose();
    let y = doubling(&t.a, &t.b, &t.c, &t.d)?.x.map(|v| v.conj());
    let (lo, lc) = (psd_factor(&x), psd_factor(&y));
    let svd = (adj(&lo) * &lc).svd(true, false);
    let Some(u) = svd.u else {
        return Ok(ss.clone());
    };
    let sig = &svd.singular_values;
    if sig.iter().any(|&s| s.is_nan() || s <= f64::EPSILON * sig.max()) {
        return Ok(ss.clone());
    }
    let root = CMat::from_diagonal(&sig.map(|s| C64::new(s.sqrt().recip(), 0.0)));
    let tf = &root * adj(&u) * adj(&lo);
    let Ok(ti) = linalg::inverse(&tf, "balancing transformation") else {
        return Ok(ss.clone());
    };
    StateSpace::new(&tf * &ss.a * &ti, &tf * &ss.b, &ss.c * &ti, ss.d.clone())
}

/// Realization of the plant in `w` with its gains and those of its transpose.
struct Design {
    real: Realization,
    primal: Gains,
    dual: Gains,
}

fn design(p: &PlantModel) -> Result<Design> {
    if p.algebra != AlgebraTag::Disk {
        return Err(Error::Unsupported(format!(
            "normalized coprime factorization of {} plants",
            p.algebra
        )));
    }
    let mut real = p.w_realization()?;
    real.ss = balance(&real.ss)?;
    let primal = gains(&real.ss)?;
    let dual = gains(&real.ss.transpose())?;
    Ok(Design { real, primal, dual })
}

fn realization_block(shift: f64, ss: StateSpace) -> Arc<FactorBlock> {
    Arc::new(FactorBlock::Realization(Realization { shift, ss }))
}

/// Normalized right and left coprime factors with Bezout witnesses.
///
/// Plants already given by factors are returned as they are. The residuals
/// are measured on the grid of `cfg` and must not exceed its structural
/// tolerance.
pub fn ncf(p: &PlantModel, cfg: &Config) -> Result<CoprimeFactors> {
    if let PlantBody::Factors(f) = &p.body {
        return Ok(f.clone());
    }
    if matches!(p.body, PlantBody::ExpPolyQuotient(_)) {
        return Err(Error::Unsupported(
            "exp_poly plants must be given through their coprime factors".into(),
        ));
    }
    let Design { real, primal, dual } = design(p)?;
    let ss = &real.ss;
    let r = right_pieces(ss, &primal, &dual.f.transpose())?;
    let t = right_pieces(&ss.transpose(), &dual, &primal.f.transpose())?;
    let a = real.shift;
    let mut f = CoprimeFactors {
        n: realization_block(a, r.n),
        d: realization_block(a, r.d),
        nt: realization_block(a, t.n.transpose()),
        dt: realization_block(a, t.d.transpose()),
        bezout: Some(Bezout {
            x: realization_block(a, r.x),
            y: realization_block(a, r.y),
            xt: realization_block(a, t.x.transpose()),
            yt: realization_block(a, t.y.transpose()),
        }),
        normalized: true,
        residuals: None,
    };
    let tol = cfg.tolerances.structural;
    let report = verify_factors(&f, AlgebraTag::Disk, cfg, tol)?;
    f.residuals = Some(report.residuals);
    if !report.passed {
        return Err(Error::Factorization(format!(
            "normalization residuals {:?} exceed {tol:e}",
            report.residuals
        )));
    }
    Ok(f)
}

/// Observer-based controller `u = K y` that stabilizes `p` in the positive
/// feedback loop `(I - K P)^{-1}`.
pub fn central_controller(p: &PlantModel) -> Result<PlantModel> {
    let Design { real, primal, dual } = design(p)?;
    let ss = &real.ss;
    let l = dual.f.transpose();
    let f = &primal.f;
    let ak = &ss.a + &ss.b * f + &l * &ss.c + &l * &ss.d * f;
    let k = StateSpace::new(ak, -&l, f.clone(), CMat::zeros(f.nrows(), l.ncols()))?;
    let kz = Realization { shift: real.shift, ss: k }
        .to_z()
        .map_err(|_| Error::Factorization("central controller is improper in z".into()))?;
    PlantModel::state_space(kz)
}

/// Normalized factors of the scalar plant `num/den` (ascending coefficients)
/// by spectral factorization of `num num* + den den*` on the circle.
pub fn spectral_ncf(num: &[C64], den: &[C64]) -> Result<CoprimeFactors> {
    let num = poly::trim(num);
    let den = poly::trim(den);
    if den.iter().all(|v| *v == ZERO) {
        return Err(Error::Validation("zero denominator".into()));
    }
    let k = num.len().max(den.len()) - 1;
    // z^k (n n* + d d*) as an ordinary polynomial of degree 2k
    let mut q = vec![ZERO; 2 * k + 1];
    for p in [&num, &den] {
        for (i, a) in p.iter().enumerate() {
            for (j, b) in p.iter().enumerate() {
                q[k + i - j] += a * b.conj();
            }
        }
    }
    let scale = q.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::Factorization("numerator and denominator both vanish".into()));
    }
    let mut q: Vec<C64> = q
        .into_iter()
        .map(|v| if v.norm() <= 1e-14 * scale { ZERO } else { v })
        .collect();
    q = poly::trim(&q);
    let outer: Vec<C64> = poly::roots(&q).into_iter().filter(|r| r.norm() > 1.0).collect();
    let g0 = poly::from_roots(&outer);
    // |g(1)|^2 must equal the spectral density at z = 1
    let density: C64 = [&num, &den]
        .iter()
        .map(|p| C64::new(poly::eval(p, ONE).norm_sqr(), 0.0))
        .sum();
    let kappa = density.re.sqrt() / poly::eval(&g0, ONE).norm();
    let g = poly::scale(&g0, C64::new(kappa, 0.0));
    let block = |p: &[C64]| {
        Arc::new(FactorBlock::Symbolic(SymBlock::Disk(SymMatrix::from_fn(1, 1, |_, _| {
            RationalZ::new(p.to_vec(), g.clone())
        }))))
    };
    let (n, d) = (block(&num), block(&den));
    Ok(CoprimeFactors {
        n: n.clone(),
        d: d.clone(),
        nt: n,
        dt: d,
        bezout: None,
        normalized: true,
        residuals: None,
    })
}

/// Normalization and Bezout defects of a factor set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub residuals: Residuals,
    pub passed: bool,
    pub tolerance: f64,
}

fn sampled_grid(f: &CoprimeFactors) -> Option<FrequencyGrid> {
    [&f.n, &f.d, &f.nt, &f.dt].iter().find_map(|b| match b.as_ref() {
        FactorBlock::Sampled(s) => Some(s.grid.clone()),
        _ => None,
    })
}

/// The grid on which factor identities are checked: the grid of sampled
/// data when there is any, otherwise the configured one.
pub fn working_grid(f: &CoprimeFactors, algebra: AlgebraTag, cfg: &Config) -> Result<FrequencyGrid> {
    match sampled_grid(f) {
        Some(g) => Ok(g),
        None => FrequencyGrid::for_config(algebra, cfg),
    }
}

fn defect(m: &CMat) -> f64 {
    let id = CMat::identity(m.nrows(), m.ncols());
    linalg::sigma_max(&(m - id))
}

fn sup_norm<S: MatrixSampler + ?Sized>(s: &S, grid: &FrequencyGrid, parallel: bool) -> Result<f64> {
    let f = MatrixFunction::sample(s, grid, parallel)?;
    Ok(f.samples().iter().map(linalg::sigma_max).fold(0.0, f64::max))
}

/// `||G*G - I||`, `||Gt Gt* - I||`, `||G G* + Gt* Gt - I||` and the Bezout
/// defects as grid maxima. The Bezout defects `||XN + YD - I||` and
/// `||Nt Xt + Dt Yt - I||` are taken relative to `max(1, ||[X Y]||)` and
/// `max(1, ||[Xt; Yt]||)` at each point.
pub fn verify_factors(f: &CoprimeFactors, algebra: AlgebraTag, cfg: &Config, tol: f64) -> Result<FactorizationReport> {
    f.check_dims()?;
    let grid = working_grid(f, algebra, cfg)?;
    let g = f.graph()?.on(&grid, cfg.parallel)?;
    let gt = f.dual_graph()?.on(&grid, cfg.parallel)?;
    let per_point = exec::map_indexed(grid.len(), cfg.parallel, |k| {
        let (gk, tk) = (g.at(k), gt.at(k));
        [
            defect(&(adj(gk) * gk)),
            defect(&(tk * adj(tk))),
            defect(&(gk * adj(gk) + adj(tk) * tk)),
        ]
    });
    let worst = |i: usize| per_point.iter().map(|r| r[i]).fold(0.0, f64::max);
    let bezout = match f.bezout_defects() {
        Some((right, left)) => Some(sup_norm(right.as_ref(), &grid, cfg.parallel)?.max(sup_norm(
            left.as_ref(),
            &grid,
            cfg.parallel,
        )?)),
        None => None,
    };
    let residuals = Residuals {
        right: worst(0),
        left: worst(1),
        double: worst(2),
        bezout,
    };
    let passed = [residuals.right, residuals.left, residuals.double]
        .into_iter()
        .chain(bezout)
        .all(|r| r <= tol);
    Ok(FactorizationReport {
        residuals,
        passed,
        tolerance: tol,
    })
}

/// The unitary `U = G2* G1` relating two normalized factorizations of the
/// same plant, so that `G1 = G2 U`.
pub fn unitary_equivalence(f1: &CoprimeFactors, f2: &CoprimeFactors, algebra: AlgebraTag, cfg: &Config) -> Result<MatrixFunction> {
    if (f1.outputs(), f1.inputs()) != (f2.outputs(), f2.inputs()) {
        return Err(Error::dims("factorizations of plants with different shapes"));
    }
    let grid = match sampled_grid(f1).or_else(|| sampled_grid(f2)) {
        Some(g) => g,
        None => FrequencyGrid::for_config(algebra, cfg)?,
    };
    let g1 = f1.graph()?.on(&grid, cfg.parallel)?;
    let g2 = f2.graph()?.on(&grid, cfg.parallel)?;
    let pairs = exec::map_indexed(grid.len(), cfg.parallel, |k| {
        let u = adj(g2.at(k)) * g1.at(k);
        let unitary = defect(&(adj(&u) * &u));
        let graph = linalg::sigma_max(&(g1.at(k) - g2.at(k) * &u));
        (u, unitary.max(graph))
    });
    let defect = pairs.iter().map(|p| p.1).fold(0.0, f64::max);
    if defect > EQUIVALENCE_TOL {
        return Err(Error::NotEquivalent { defect });
    }
    let m = f1.inputs();
    MatrixFunction::from_samples(grid, m, m, pairs.into_iter().map(|p| p.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqdomain::GridPoint;
    use crate::linalg::c;
    use crate::plants::{random_plant, RationalEntry};

    fn cfg() -> Config {
        Config::default().with_grid(512)
    }

    fn at(b: &FactorBlock, theta: f64) -> CMat {
        b.eval(&GridPoint::Circle { theta }).unwrap()
    }

    fn one_over_z() -> PlantModel {
        PlantModel::rational(vec![vec![RationalEntry {
            num: vec![ONE],
            den: vec![ZERO, ONE],
        }]])
        .unwrap()
    }

    #[test]
    fn dare_scalar_closed_form() {
        // x = x a^2 - (x a)^2/(1 + x) + 1 with a = 2: x^2 - 4x - 1 = 0
        let s = |v: f64| linalg::scalar(c(v, 0.0));
        let r = solve_dare(&s(2.0), &s(1.0), &s(1.0), &s(0.0)).unwrap();
        assert!((r.x[(0, 0)].re - (2.0 + 5f64.sqrt())).abs() < 1e-12);
        assert!(r.residual < 1e-14);
    }

    #[test]
    fn constant_plants() {
        for k in [0.0, 0.5, 2.0] {
            let f = ncf(&PlantModel::constant(k), &cfg()).unwrap();
            let n = at(&f.n, 0.4)[(0, 0)];
            let d = at(&f.d, 0.4)[(0, 0)];
            let s = (1.0 + k * k).sqrt();
            assert!((n.norm() - k / s).abs() < 1e-12 && (d.norm() - 1.0 / s).abs() < 1e-12);
            assert!((n - d * k).norm() < 1e-12);
        }
    }

    #[test]
    fn one_over_z_factors() {
        let f = ncf(&one_over_z(), &cfg()).unwrap();
        for theta in [0.0, 1.0, 2.5] {
            let z = C64::from_polar(1.0, theta);
            let n = at(&f.n, theta)[(0, 0)];
            let d = at(&f.d, theta)[(0, 0)];
            assert!((n.norm() - 0.5f64.sqrt()).abs() < 1e-12);
            assert!((n / d - ONE / z).norm() < 1e-12);
        }
        let r = f.residuals.unwrap();
        assert!(r.bezout.unwrap() < 1e-10);
    }

    #[test]
    fn random_plants_are_normalized() {
        for seed in 0..6 {
            let p = random_plant(2, 3, 6, seed);
            let f = ncf(&p, &cfg()).unwrap();
            let r = f.residuals.unwrap();
            assert!(r.right.max(r.left).max(r.double).max(r.bezout.unwrap()) < 1e-9, "{r:?}");
            let pt = GridPoint::Circle { theta: 0.7 };
            let quotient = crate::plants::PlantModel::from_factors(AlgebraTag::Disk, f.clone()).unwrap();
            let diff = quotient.evaluate(&pt).unwrap() - p.evaluate(&pt).unwrap();
            assert!(linalg::max_abs(&diff) < 1e-9);
        }
    }

    #[test]
    fn unnormalized_graph_fails() {
        let one = Arc::new(FactorBlock::Symbolic(SymBlock::Disk(SymMatrix::from_fn(1, 1, |_, _| {
            RationalZ::new(vec![ONE], vec![ONE])
        }))));
        let f = CoprimeFactors {
            n: one.clone(),
            d: one.clone(),
            nt: one.clone(),
            dt: one,
            bezout: None,
            normalized: false,
            residuals: None,
        };
        let r = verify_factors(&f, AlgebraTag::Disk, &cfg(), 1e-8).unwrap();
        assert!((r.residuals.right - 1.0).abs() < 1e-15);
        assert!(!r.passed);
    }

    #[test]
    fn spectral_oracle_matches_riccati() {
        let f1 = ncf(&one_over_z(), &cfg()).unwrap();
        let f2 = spectral_ncf(&[ONE], &[ZERO, ONE]).unwrap();
        let u = unitary_equivalence(&f1, &f2, AlgebraTag::Disk, &cfg()).unwrap();
        let u0 = u.at(0)[(0, 0)];
        assert!(u.samples().iter().all(|v| (v[(0, 0)] - u0).norm() < 1e-10));
    }

    #[test]
    fn rotation_is_recovered() {
        let f1 = ncf(&random_plant(1, 1, 3, 4), &cfg()).unwrap();
        let rot = linalg::scalar(C64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        let f2 = f1.rotated(&rot, &linalg::identity(1)).unwrap();
        let u = unitary_equivalence(&f1, &f2, AlgebraTag::Disk, &cfg()).unwrap();
        assert!(u.samples().iter().all(|v| (v - rot.adjoint()).norm() < 1e-10));
        assert!(unitary_equivalence(&f1, &f1, AlgebraTag::Disk, &cfg())
            .unwrap()
            .samples()
            .iter()
            .all(|v| (v - linalg::identity(1)).norm() < 1e-10));
    }

    #[test]
    fn distinct_plants_are_not_equivalent() {
        let f0 = ncf(&PlantModel::constant(0.0), &cfg()).unwrap();
        let f1 = ncf(&PlantModel::constant(1.0), &cfg()).unwrap();
        assert!(matches!(
            unitary_equivalence(&f0, &f1, AlgebraTag::Disk, &cfg()),
            Err(Error::NotEquivalent { .. })
        ));
    }

    #[test]
    fn central_controller_stabilizes() {
        for seed in 0..5 {
            let p = random_plant(2, 2, 4, seed);
            let k = central_controller(&p).unwrap();
            // closed-loop poles: det(I - K P) has no zeros in the closed disk
            let PlantBody::StateSpace(ps) = &p.body else { panic!() };
            let PlantBody::StateSpace(ks) = &k.body else { panic!() };
            assert_eq!(ks.order(), ps.order());
            for theta in [0.0, 1.3, 2.9] {
                let pt = GridPoint::Circle { theta };
                let l = linalg::identity(2) - k.evaluate(&pt).unwrap() * p.evaluate(&pt).unwrap();
                assert!(linalg::det(&l).norm() > 1e-9);
            }
        }
    }
}
