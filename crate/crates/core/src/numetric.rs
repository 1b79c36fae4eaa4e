//! The ν-gap metric, closed-loop maps, stability margins and robust
//! stabilization certificates.
//!
//! Plants are compared through normalized graph symbols `G = [N; D]` and
//! `Gt = [-Dt, Nt]`. A controller `C` (an `m x p` plant) enters through
//! `K = [D_C; N_C]` and `Kt = [-Nt_C, Dt_C]`, closing the positive feedback
//! loop `u = C y`:
//!
//! ```text
//! H(P, C) = [P; I] (I - C P)^{-1} [-C, I] = G (Kt G)^{-1} Kt
//! ```

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec;
use crate::factorization::{self, FactorizationReport};
use crate::freqdomain::{AlgebraTag, FnSampler, FrequencyGrid, GridPoint, MatrixFunction, MatrixSampler};
use crate::index::{self, IndexValue, ScalarFunction};
use crate::linalg::{self, CMat};
use crate::plants::{CoprimeFactors, FactorBlock, Graph, PlantBody, PlantModel, SymBlock};

/// A plant together with normalized coprime factors.
#[derive(Debug, Clone)]
pub struct NormalizedPlant {
    pub plant: Arc<PlantModel>,
    pub factors: CoprimeFactors,
    /// Check of supplied factors; factors computed here carry their residuals.
    pub report: Option<FactorizationReport>,
    graphs: Arc<Graphs>,
}

/// Memoized graph symbols, built on first use.
#[derive(Default)]
struct Graphs {
    graph: OnceLock<Graph>,
    dual: OnceLock<Graph>,
    controller_dual: OnceLock<Graph>,
}

impl fmt::Debug for Graphs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Graphs")
    }
}

fn memoized(cell: &OnceLock<Graph>, build: impl FnOnce() -> Result<Graph>) -> Result<Graph> {
    if let Some(g) = cell.get() {
        return Ok(g.clone());
    }
    let g = build()?.memoized();
    Ok(cell.get_or_init(|| g).clone())
}

impl NormalizedPlant {
    pub fn algebra(&self) -> AlgebraTag {
        self.plant.algebra
    }

    pub fn outputs(&self) -> usize {
        self.plant.p
    }

    pub fn inputs(&self) -> usize {
        self.plant.m
    }

    pub fn new(plant: Arc<PlantModel>, factors: CoprimeFactors, report: Option<FactorizationReport>) -> Self {
        NormalizedPlant {
            plant,
            factors,
            report,
            graphs: Arc::default(),
        }
    }

    /// The same plant with factors replaced by `N u, D u` and `v Nt, v Dt`
    /// for constant unitaries `u`, `v`.
    pub fn rotated(&self, u: &CMat, v: &CMat) -> Result<Self> {
        Ok(NormalizedPlant::new(self.plant.clone(), self.factors.rotated(u, v)?, None))
    }

    /// `G = [N; D]`, evaluated at most once per point.
    pub fn graph(&self) -> Result<Graph> {
        memoized(&self.graphs.graph, || self.factors.graph())
    }

    /// `Gt = [-Dt, Nt]`, evaluated at most once per point.
    pub fn dual_graph(&self) -> Result<Graph> {
        memoized(&self.graphs.dual, || self.factors.dual_graph())
    }

    /// `Kt = [-Nt, Dt]` of the plant read as a controller.
    pub fn controller_dual_graph(&self) -> Result<Graph> {
        memoized(&self.graphs.controller_dual, || self.factors.controller_dual_graph())
    }
}

/// Normalized factors of a plant: computed for rational plants, checked for
/// plants given through their factors.
pub fn normalize(p: &PlantModel, cfg: &Config) -> Result<NormalizedPlant> {
    match &p.body {
        PlantBody::Factors(f) => {
            let tol = cfg.tolerances.structural;
            let report = factorization::verify_factors(f, p.algebra, cfg, tol)?;
            if !report.passed {
                return Err(Error::Factorization(format!(
                    "supplied factors are not normalized within {tol:e}: {:?}",
                    report.residuals
                )));
            }
            Ok(NormalizedPlant::new(Arc::new(p.clone()), f.clone(), Some(report)))
        }
        _ => Ok(NormalizedPlant::new(Arc::new(p.clone()), factorization::ncf(p, cfg)?, None)),
    }
}

fn sampled_grid(f: &CoprimeFactors) -> Option<FrequencyGrid> {
    [&f.n, &f.d, &f.nt, &f.dt].iter().find_map(|b| match b.as_ref() {
        FactorBlock::Sampled(s) => Some(s.grid.clone()),
        _ => None,
    })
}

/// The grid shared by two factor sets.
fn pair_grid(a: &NormalizedPlant, b: &NormalizedPlant, cfg: &Config) -> Result<FrequencyGrid> {
    if a.algebra() != b.algebra() {
        return Err(Error::Unsupported(format!(
            "comparing a {} plant with a {} plant",
            a.algebra(),
            b.algebra()
        )));
    }
    match (sampled_grid(&a.factors), sampled_grid(&b.factors)) {
        (Some(g), Some(h)) if g != h => Err(Error::GridMismatch),
        (Some(g), _) | (None, Some(g)) => Ok(g),
        (None, None) => FrequencyGrid::for_config(a.algebra(), cfg),
    }
}

/// Pointwise `L(p) R(p)`, with `L` conjugate-transposed when `adjoint`.
fn product(l: &Graph, r: &Graph, adjoint: bool) -> Result<(Arc<dyn MatrixSampler>, Option<SymBlock>)> {
    let (ls, rs) = (l.sampler.clone(), r.sampler.clone());
    let rows = if adjoint { ls.cols() } else { ls.rows() };
    let inner = if adjoint { ls.rows() } else { ls.cols() };
    if inner != rs.rows() {
        return Err(Error::dims(format!(
            "cannot multiply a {}x{} symbol by a {}x{} one",
            rows,
            inner,
            rs.rows(),
            rs.cols()
        )));
    }
    let symbolic = match (&l.symbolic, &r.symbolic) {
        (Some(a), Some(b)) => Some(if adjoint { a.adjoint().mul(b)? } else { a.mul(b)? }),
        _ => None,
    };
    let cols = rs.cols();
    let sampler = FnSampler::new(rows, cols, move |p: &GridPoint| {
        let lv = ls.sample(p)?;
        let lv = if adjoint { lv.adjoint() } else { lv };
        Ok(lv * rs.sample(p)?)
    });
    Ok((Arc::new(sampler), symbolic))
}

/// `det` of a square product as a scalar of the algebra, exact when possible.
fn det_function(
    sampler: &Arc<dyn MatrixSampler>,
    symbolic: Option<SymBlock>,
    sampled: bool,
    grid: &FrequencyGrid,
    cfg: &Config,
) -> Result<ScalarFunction> {
    let algebra = grid.algebra();
    if let Some(s) = symbolic {
        return Ok(ScalarFunction::from_symbol(s.det()?).in_algebra(algebra));
    }
    if sampled {
        return ScalarFunction::from_samples(&MatrixFunction::sample(sampler, grid, cfg.parallel)?);
    }
    ScalarFunction::from_sampler(algebra, sampler.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Winding condition met; the value is `||Gt2 G1||`.
    Metric,
    /// `det(G1* G2)` is not invertible or has a nonzero index.
    DegenerateOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NuResult {
    pub value: f64,
    pub branch: Branch,
    pub det_invertible: bool,
    pub index: Option<IndexValue>,
    pub winding_condition_met: bool,
    pub grid_size_used: usize,
}

/// `d(P1, P2)` between two normalized plants.
pub fn nu_between(a: &NormalizedPlant, b: &NormalizedPlant, cfg: &Config) -> Result<NuResult> {
    if (a.outputs(), a.inputs()) != (b.outputs(), b.inputs()) {
        return Err(Error::dims(format!(
            "plants are {}x{} and {}x{}",
            a.outputs(),
            a.inputs(),
            b.outputs(),
            b.inputs()
        )));
    }
    let grid = pair_grid(a, b, cfg)?;
    let sampled = !(a.factors.refinable() && b.factors.refinable());
    let (g1, g2) = (a.graph()?, b.graph()?);
    let (cross, cross_sym) = product(&g1, &g2, true)?;
    let det = det_function(&cross, cross_sym, sampled, &grid, cfg)?;
    let degenerate = |det_invertible, index| NuResult {
        value: 1.0,
        branch: Branch::DegenerateOne,
        det_invertible,
        index,
        winding_condition_met: false,
        grid_size_used: grid.size(),
    };
    let estimate = match index::index_estimate(&det, cfg) {
        Ok(e) => e,
        Err(Error::NotInvertible { .. }) => return Ok(degenerate(false, None)),
        Err(e) => return Err(e),
    };
    if !estimate.is_identity() {
        return Ok(degenerate(true, Some(estimate.value)));
    }
    let (gap, _) = product(&b.dual_graph()?, &g1, false)?;
    let value = MatrixFunction::sample(&gap, &grid, cfg.parallel)?.sup_norm_with(cfg.parallel);
    Ok(NuResult {
        value,
        branch: Branch::Metric,
        det_invertible: true,
        index: Some(estimate.value),
        winding_condition_met: true,
        grid_size_used: grid.size(),
    })
}

/// The ν-gap distance between two plants of the same shape and algebra.
pub fn nu_distance(p1: &PlantModel, p2: &PlantModel, cfg: &Config) -> Result<NuResult> {
    nu_between(&normalize(p1, cfg)?, &normalize(p2, cfg)?, cfg)
}

/// Largest deviation of `smin(G2* G1)^2 + smax(Gt2 G1)^2` from 1 on the grid.
pub fn pointwise_identity_defect(a: &NormalizedPlant, b: &NormalizedPlant, cfg: &Config) -> Result<f64> {
    let grid = pair_grid(a, b, cfg)?;
    let g1 = a.graph()?.on(&grid, cfg.parallel)?;
    let g2 = b.graph()?.on(&grid, cfg.parallel)?;
    let t2 = b.dual_graph()?.on(&grid, cfg.parallel)?;
    let defects = exec::map_indexed(grid.len(), cfg.parallel, |k| {
        let lo = linalg::sigma_min(&(g2.at(k).adjoint() * g1.at(k)));
        let hi = linalg::sigma_max(&(t2.at(k) * g1.at(k)));
        (lo * lo + hi * hi - 1.0).abs()
    });
    Ok(defects.into_iter().fold(0.0, f64::max))
}

/// `Kt G` for a plant and a controller, with the grid they share.
struct Loop {
    grid: FrequencyGrid,
    g: Graph,
    kt: Graph,
    ktg: Arc<dyn MatrixSampler>,
    ktg_symbolic: Option<SymBlock>,
    sampled: bool,
}

fn loop_of(p: &NormalizedPlant, c: &NormalizedPlant, cfg: &Config) -> Result<Loop> {
    if (c.outputs(), c.inputs()) != (p.inputs(), p.outputs()) {
        return Err(Error::dims(format!(
            "a {}x{} controller cannot close the loop around a {}x{} plant",
            c.outputs(),
            c.inputs(),
            p.outputs(),
            p.inputs()
        )));
    }
    let grid = pair_grid(p, c, cfg)?;
    let g = p.graph()?;
    let kt = c.controller_dual_graph()?;
    let (ktg, ktg_symbolic) = product(&kt, &g, false)?;
    Ok(Loop {
        grid,
        g,
        kt,
        ktg,
        ktg_symbolic,
        sampled: !(p.factors.refinable() && c.factors.refinable()),
    })
}

/// Relative agreement required between the factor form of `H(P, C)` and
/// the direct formula where `I - C P` is well conditioned.
const DIRECT_FORMULA_TOL: f64 = 1e-6;
const DIRECT_FORMULA_MAX_COND: f64 = 1e6;

fn direct_closed_loop(pv: &CMat, cv: &CMat) -> Option<CMat> {
    let (p, m) = pv.shape();
    let l = CMat::identity(m, m) - cv * pv;
    let sv = linalg::singular_values(&l);
    let (hi, lo) = (sv[0], sv[sv.len() - 1]);
    if !(lo > 0.0 && hi / lo < DIRECT_FORMULA_MAX_COND) {
        return None;
    }
    let left = linalg::vstack(pv, &CMat::identity(m, m));
    let right = linalg::hstack(&(-cv), &CMat::identity(m, m));
    debug_assert_eq!(right.ncols(), p + m);
    let inner = linalg::solve(&l, &right, "I - C P").ok()?;
    Some(left * inner)
}

fn closed_loop_on(p: &NormalizedPlant, c: &NormalizedPlant, lp: &Loop, cfg: &Config) -> Result<MatrixFunction> {
    let g = lp.g.on(&lp.grid, cfg.parallel)?;
    let kt = lp.kt.on(&lp.grid, cfg.parallel)?;
    let points = lp.grid.points();
    let threshold = cfg.invertibility_threshold;
    let samples = exec::try_map_indexed(lp.grid.len(), cfg.parallel, |k| {
        let (gk, tk) = (g.at(k), kt.at(k));
        let ktg = tk * gk;
        let sv = linalg::singular_values(&ktg);
        if sv.last().copied().unwrap_or(0.0) <= threshold * sv[0].max(1.0) {
            return Err(Error::SingularLoop(format!("det(Kt G) vanishes at {}", points[k])));
        }
        let h = gk * linalg::solve(&ktg, tk, "Kt G")?;
        if let (Ok(pv), Ok(cv)) = (p.plant.evaluate(&points[k]), c.plant.evaluate(&points[k])) {
            if let Some(hd) = direct_closed_loop(&pv, &cv) {
                let gap = linalg::sigma_max(&(&h - &hd));
                if gap > DIRECT_FORMULA_TOL * linalg::sigma_max(&h).max(1.0) {
                    return Err(Error::Factorization(format!(
                        "closed loop from factors differs from the direct formula by {gap:e} at {}",
                        points[k]
                    )));
                }
            }
        }
        Ok(h)
    })?;
    let n = p.outputs() + p.inputs();
    MatrixFunction::from_samples(lp.grid.clone(), n, n, samples)
}

/// `H(P, C)` sampled on the working grid.
pub fn closed_loop(p: &PlantModel, c: &PlantModel, cfg: &Config) -> Result<MatrixFunction> {
    let (np, nc) = (normalize(p, cfg)?, normalize(c, cfg)?);
    closed_loop_between(&np, &nc, cfg)
}

pub fn closed_loop_between(p: &NormalizedPlant, c: &NormalizedPlant, cfg: &Config) -> Result<MatrixFunction> {
    let lp = loop_of(p, c, cfg)?;
    closed_loop_on(p, c, &lp, cfg)
}

/// Evidence behind a stabilization verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stabilization {
    pub stabilizes: bool,
    /// Smallest `|det(Kt G)|` seen on the grid.
    pub min_det_modulus: f64,
    pub index: Option<IndexValue>,
    pub grid_size_used: usize,
}

fn stabilization_of(lp: &Loop, cfg: &Config) -> Result<Stabilization> {
    let det = det_function(&lp.ktg, lp.ktg_symbolic.clone(), lp.sampled, &lp.grid, cfg)?;
    let inv = det.invertibility(cfg)?;
    let mut out = Stabilization {
        stabilizes: false,
        min_det_modulus: inv.min_modulus,
        index: None,
        grid_size_used: lp.grid.size(),
    };
    if !inv.invertible {
        return Ok(out);
    }
    let est = match index::index_estimate(&det, cfg) {
        Ok(e) => e,
        Err(Error::NotInvertible { .. }) => return Ok(out),
        Err(e) => return Err(e),
    };
    out.index = Some(est.value);
    out.stabilizes = est.is_identity();
    Ok(out)
}

pub fn stabilizes_between(p: &NormalizedPlant, c: &NormalizedPlant, cfg: &Config) -> Result<Stabilization> {
    stabilization_of(&loop_of(p, c, cfg)?, cfg)
}

/// Whether `C` stabilizes `P`: `det(Kt G)` invertible with identity index.
pub fn stabilizes(p: &PlantModel, c: &PlantModel, cfg: &Config) -> Result<Stabilization> {
    stabilizes_between(&normalize(p, cfg)?, &normalize(c, cfg)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginResult {
    pub mu: f64,
    pub stabilizes: bool,
    pub h_norm: Option<f64>,
    pub index_check: Option<IndexValue>,
    /// `|mu ||H|| - 1|`
    pub duality_defect: Option<f64>,
    pub grid_size_used: usize,
}

pub fn margin_between(p: &NormalizedPlant, c: &NormalizedPlant, cfg: &Config) -> Result<MarginResult> {
    let lp = loop_of(p, c, cfg)?;
    let st = stabilization_of(&lp, cfg)?;
    if !st.stabilizes {
        return Ok(MarginResult {
            mu: 0.0,
            stabilizes: false,
            h_norm: None,
            index_check: st.index,
            duality_defect: None,
            grid_size_used: lp.grid.size(),
        });
    }
    let mu = MatrixFunction::sample(&lp.ktg, &lp.grid, cfg.parallel)?.min_singular_inf_with(cfg.parallel);
    let h = closed_loop_on(p, c, &lp, cfg)?.sup_norm_with(cfg.parallel);
    Ok(MarginResult {
        mu,
        stabilizes: true,
        h_norm: Some(h),
        index_check: st.index,
        duality_defect: Some((mu * h - 1.0).abs()),
        grid_size_used: lp.grid.size(),
    })
}

/// `mu(P, C) = inf smin(Kt G)` when `C` stabilizes `P`, else 0.
pub fn stability_margin(p: &PlantModel, c: &PlantModel, cfg: &Config) -> Result<MarginResult> {
    margin_between(&normalize(p, cfg)?, &normalize(c, cfg)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustCertificate {
    pub mu0: f64,
    pub dnu: f64,
    pub certified: bool,
    /// `sin(asin mu0 - asin dnu)` when positive, else 0.
    pub predicted_margin_lower_bound: f64,
    pub actual_mu1: Option<f64>,
    /// `asin mu1 - (asin mu0 - asin dnu)`
    pub arcsin_slack: Option<f64>,
    /// `mu1 - (mu0 - dnu)`
    pub corollary_slack: Option<f64>,
}

fn asin(x: f64) -> f64 {
    x.clamp(0.0, 1.0).asin()
}

pub fn certify_between(
    p0: &NormalizedPlant,
    c: &NormalizedPlant,
    p1: &NormalizedPlant,
    cfg: &Config,
) -> Result<RobustCertificate> {
    let mu0 = margin_between(p0, c, cfg)?.mu;
    let dnu = nu_between(p0, p1, cfg)?.value;
    let certified = dnu < mu0;
    let predicted = (asin(mu0) - asin(dnu)).sin().max(0.0);
    let mut cert = RobustCertificate {
        mu0,
        dnu,
        certified,
        predicted_margin_lower_bound: predicted,
        actual_mu1: None,
        arcsin_slack: None,
        corollary_slack: None,
    };
    if !certified {
        return Ok(cert);
    }
    let mu1 = margin_between(p1, c, cfg)?.mu;
    let arcsin_slack = asin(mu1) - (asin(mu0) - asin(dnu));
    let corollary_slack = mu1 - (mu0 - dnu);
    cert.actual_mu1 = Some(mu1);
    cert.arcsin_slack = Some(arcsin_slack);
    cert.corollary_slack = Some(corollary_slack);
    let tol = cfg.tolerances.certificate;
    let worst = arcsin_slack.min(corollary_slack);
    if worst < -tol {
        return Err(Error::CertificateViolation { slack: worst });
    }
    Ok(cert)
}

/// Margin guaranteed for every plant within the ν-gap of `P0` that `C`
/// stabilizes with margin `mu0`, checked against the actual margin.
pub fn certify_robust(p0: &PlantModel, c: &PlantModel, p1: &PlantModel, cfg: &Config) -> Result<RobustCertificate> {
    certify_between(&normalize(p0, cfg)?, &normalize(c, cfg)?, &normalize(p1, cfg)?, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub plants: usize,
    /// `distances[i][j] = d(P_i, P_j)`.
    pub distances: Vec<Vec<f64>>,
    pub branches: Vec<Vec<Branch>>,
    /// `max_i d(P_i, P_i)`
    pub identity_worst: f64,
    /// `max |d(P_i, P_j) - d(P_j, P_i)|`
    pub symmetry_worst: f64,
    /// `min d(P_i, P_k) + d(P_k, P_j) - d(P_i, P_j)`
    pub triangle_worst_slack: f64,
    /// Distances `<= tol` only between plants with coinciding graphs.
    pub positivity_ok: bool,
    pub range_ok: bool,
    pub tolerance: f64,
    pub passed: bool,
}

/// All pairwise distances and the metric axioms over them.
pub fn metric_axiom_suite(plants: &[PlantModel], cfg: &Config, tol: f64) -> Result<AxiomReport> {
    if plants.len() < 3 {
        return Err(Error::Validation(format!(
            "the axiom suite needs at least 3 plants, got {}",
            plants.len()
        )));
    }
    let normalized = exec::try_map_indexed(plants.len(), cfg.parallel, |i| normalize(&plants[i], cfg))?;
    axioms_between(&normalized, cfg, tol)
}

pub fn axioms_between(plants: &[NormalizedPlant], cfg: &Config, tol: f64) -> Result<AxiomReport> {
    let n = plants.len();
    let results = exec::try_map_indexed(n * n, cfg.parallel, |k| nu_between(&plants[k / n], &plants[k % n], cfg))?;
    let d = |i: usize, j: usize| results[i * n + j].value;
    let distances: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| d(i, j)).collect()).collect();
    let branches = (0..n)
        .map(|i| (0..n).map(|j| results[i * n + j].branch).collect())
        .collect();
    let identity_worst = (0..n).map(|i| d(i, i)).fold(0.0, f64::max);
    let mut symmetry_worst: f64 = 0.0;
    let mut triangle: f64 = f64::INFINITY;
    let mut positivity_ok = true;
    for i in 0..n {
        for j in 0..n {
            symmetry_worst = symmetry_worst.max((d(i, j) - d(j, i)).abs());
            if i != j && d(i, j) <= tol {
                // a vanishing distance must come from the metric branch, where
                // it equals the graph defect ||Gt_j G_i||
                positivity_ok &= results[i * n + j].branch == Branch::Metric;
            }
            for k in 0..n {
                triangle = triangle.min(d(i, k) + d(k, j) - d(i, j));
            }
        }
    }
    let range_ok = results.iter().all(|r| r.value >= 0.0 && r.value <= 1.0 + 1e-9);
    let passed = identity_worst <= tol && symmetry_worst <= tol && triangle >= -tol && positivity_ok && range_ok;
    Ok(AxiomReport {
        plants: n,
        distances,
        branches,
        identity_worst,
        symmetry_worst,
        triangle_worst_slack: triangle,
        positivity_ok,
        range_ok,
        tolerance: tol,
        passed,
    })
}
