use std::sync::Arc;

use serde::Serialize;

use super::statespace::StateSpace;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::freqdomain::{AlgebraTag, FrequencyGrid, GridPoint, MatrixFunction, MatrixSampler, Memo};
use crate::index::ScalarSymbol;
use crate::linalg::{self, CMat, C64};
use crate::symbolic::{CdElement, ExpPoly, MultiLaurent, RationalZ, SymMatrix};

/// A matrix of exact elements of one algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum SymBlock {
    Disk(SymMatrix<RationalZ>),
    Ap(SymMatrix<ExpPoly>),
    Cd(SymMatrix<CdElement>),
    Polydisk(SymMatrix<MultiLaurent>),
}

macro_rules! each {
    ($v:expr, $m:ident => $e:expr) => {
        match $v {
            SymBlock::Disk($m) => $e,
            SymBlock::Ap($m) => $e,
            SymBlock::Cd($m) => $e,
            SymBlock::Polydisk($m) => $e,
        }
    };
}

macro_rules! each_wrap {
    ($v:expr, $m:ident => $e:expr) => {
        match $v {
            SymBlock::Disk($m) => SymBlock::Disk($e),
            SymBlock::Ap($m) => SymBlock::Ap($e),
            SymBlock::Cd($m) => SymBlock::Cd($e),
            SymBlock::Polydisk($m) => SymBlock::Polydisk($e),
        }
    };
}

macro_rules! pair_wrap {
    ($a:expr, $b:expr, ($x:ident, $y:ident) => $e:expr) => {
        match ($a, $b) {
            (SymBlock::Disk($x), SymBlock::Disk($y)) => SymBlock::Disk($e),
            (SymBlock::Ap($x), SymBlock::Ap($y)) => SymBlock::Ap($e),
            (SymBlock::Cd($x), SymBlock::Cd($y)) => SymBlock::Cd($e),
            (SymBlock::Polydisk($x), SymBlock::Polydisk($y)) => SymBlock::Polydisk($e),
            _ => return Err(Error::Unsupported("symbolic blocks from different algebras".into())),
        }
    };
}

impl SymBlock {
    pub fn rows(&self) -> usize {
        each!(self, m => m.rows())
    }

    pub fn cols(&self) -> usize {
        each!(self, m => m.cols())
    }

    pub fn eval(&self, p: &GridPoint) -> Result<CMat> {
        each!(self, m => m.eval(p))
    }

    pub fn adjoint(&self) -> Self {
        each_wrap!(self, m => m.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        each_wrap!(self, m => m.scale(s))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        Ok(pair_wrap!(self, o, (a, b) => a.mul(b)?))
    }

    pub fn vstack(&self, o: &Self) -> Result<Self> {
        Ok(pair_wrap!(self, o, (a, b) => a.vstack(b)?))
    }

    pub fn hstack(&self, o: &Self) -> Result<Self> {
        Ok(pair_wrap!(self, o, (a, b) => a.hstack(b)?))
    }

    pub fn det(&self) -> Result<ScalarSymbol> {
        Ok(match self {
            SymBlock::Disk(m) => ScalarSymbol::Disk(m.det()?),
            SymBlock::Ap(m) => ScalarSymbol::Ap(m.det()?),
            SymBlock::Cd(m) => ScalarSymbol::Cd(m.det()?),
            SymBlock::Polydisk(m) => ScalarSymbol::Polydisk(m.det()?),
        })
    }
}

/// A state-space realization in the variable `w = (1 - a z)/(z - a)`.
///
/// Stable transfer functions of `z` (analytic on the closed disk) become
/// realizations with all eigenvalues strictly inside the unit circle in `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub shift: f64,
    pub ss: StateSpace,
}

impl Realization {
    pub fn w_of_z(&self, z: C64) -> C64 {
        (C64::new(1.0, 0.0) - z * self.shift) / (z - self.shift)
    }

    pub fn eval_z(&self, z: C64) -> Result<CMat> {
        self.ss.eval(self.w_of_z(z))
    }

    /// The same transfer function as a realization in `z`.
    pub fn to_z(&self) -> Result<StateSpace> {
        self.ss.mobius(-self.shift)
    }
}

/// Samples on the points of one grid; values elsewhere are unknown.
#[derive(Debug, Clone)]
pub struct SampledBlock {
    pub grid: FrequencyGrid,
    pub rows: usize,
    pub cols: usize,
    pub samples: Vec<CMat>,
}

impl PartialEq for SampledBlock {
    fn eq(&self, o: &Self) -> bool {
        self.grid == o.grid && self.rows == o.rows && self.cols == o.cols && self.samples == o.samples
    }
}

impl SampledBlock {
    pub fn new(algebra: AlgebraTag, size: usize, radius: f64, rows: usize, cols: usize, samples: Vec<CMat>) -> Result<Self> {
        let cfg = Config {
            ap_radius: radius,
            ..Config::default()
        };
        let grid = FrequencyGrid::new(algebra, size, &cfg)?;
        if samples.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} samples for a {} grid with {} points",
                samples.len(),
                algebra,
                grid.len()
            )));
        }
        if samples.iter().any(|s| s.shape() != (rows, cols)) {
            return Err(Error::Validation(format!("sample shape differs from {rows}x{cols}")));
        }
        Ok(SampledBlock { grid, rows, cols, samples })
    }

    pub fn at(&self, p: &GridPoint) -> Result<CMat> {
        self.grid
            .position(p)
            .map(|k| self.samples[k].clone())
            .ok_or_else(|| {
                Error::Unresolved(format!(
                    "sampled factor known on a {}-point grid, not at {p}",
                    self.grid.size()
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorBlock {
    Symbolic(SymBlock),
    Realization(Realization),
    Sampled(SampledBlock),
}

impl FactorBlock {
    pub fn rows(&self) -> usize {
        match self {
            FactorBlock::Symbolic(s) => s.rows(),
            FactorBlock::Realization(r) => r.ss.outputs(),
            FactorBlock::Sampled(s) => s.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            FactorBlock::Symbolic(s) => s.cols(),
            FactorBlock::Realization(r) => r.ss.inputs(),
            FactorBlock::Sampled(s) => s.cols,
        }
    }

    pub fn eval(&self, p: &GridPoint) -> Result<CMat> {
        match self {
            FactorBlock::Symbolic(s) => s.eval(p),
            FactorBlock::Realization(r) => {
                let z = p
                    .z()
                    .ok_or_else(|| Error::Unsupported(format!("rational factor evaluated at {p}")))?;
                r.eval_z(z)
            }
            FactorBlock::Sampled(s) => s.at(p),
        }
    }

    pub fn refinable(&self) -> bool {
        !matches!(self, FactorBlock::Sampled(_))
    }

    pub fn symbolic(&self) -> Option<&SymBlock> {
        match self {
            FactorBlock::Symbolic(s) => Some(s),
            _ => None,
        }
    }

    /// Grid size of sampled data, if any.
    pub fn sampled_size(&self) -> Option<usize> {
        match self {
            FactorBlock::Sampled(s) => Some(s.grid.size()),
            _ => None,
        }
    }
}

/// Sup-norm defects of the normalization and Bezout identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// `||G* G - I||`
    pub right: f64,
    /// `||Gt Gt* - I||`
    pub left: f64,
    /// `||G G* + Gt* Gt - I||`
    pub double: f64,
    /// `max(||X N + Y D - I||, ||Nt Xt + Dt Yt - I||)`
    pub bezout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bezout {
    pub x: Arc<FactorBlock>,
    pub y: Arc<FactorBlock>,
    pub xt: Arc<FactorBlock>,
    pub yt: Arc<FactorBlock>,
}

/// Right factors `P = N D^{-1}` and left factors `P = Dt^{-1} Nt`.
///
/// The graph symbols are `G = [N; D]` and `Gt = [-Dt, Nt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoprimeFactors {
    pub n: Arc<FactorBlock>,
    pub d: Arc<FactorBlock>,
    pub nt: Arc<FactorBlock>,
    pub dt: Arc<FactorBlock>,
    pub bezout: Option<Bezout>,
    pub normalized: bool,
    pub residuals: Option<Residuals>,
}

/// Blocks arranged in a row or a column, each with a sign.
pub struct Stacked {
    parts: Vec<(Arc<FactorBlock>, f64)>,
    vertical: bool,
    rows: usize,
    cols: usize,
}

impl Stacked {
    fn new(parts: Vec<(Arc<FactorBlock>, f64)>, vertical: bool) -> Result<Self> {
        let (rows, cols) = if vertical {
            let c = parts[0].0.cols();
            if parts.iter().any(|p| p.0.cols() != c) {
                return Err(Error::dims("stacked factor blocks differ in width"));
            }
            (parts.iter().map(|p| p.0.rows()).sum(), c)
        } else {
            let r = parts[0].0.rows();
            if parts.iter().any(|p| p.0.rows() != r) {
                return Err(Error::dims("stacked factor blocks differ in height"));
            }
            (r, parts.iter().map(|p| p.0.cols()).sum())
        };
        Ok(Stacked {
            parts,
            vertical,
            rows,
            cols,
        })
    }

    fn symbolic(&self) -> Result<Option<SymBlock>> {
        let mut acc: Option<SymBlock> = None;
        for (b, s) in &self.parts {
            let Some(sym) = b.symbolic() else { return Ok(None) };
            let sym = if *s == 1.0 { sym.clone() } else { sym.scale(C64::new(*s, 0.0)) };
            acc = Some(match acc {
                None => sym,
                Some(a) if self.vertical => a.vstack(&sym)?,
                Some(a) => a.hstack(&sym)?,
            });
        }
        Ok(acc)
    }
}

impl MatrixSampler for Stacked {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn sample(&self, p: &GridPoint) -> Result<CMat> {
        let mut out = CMat::zeros(self.rows, self.cols);
        let mut off = 0;
        for (b, s) in &self.parts {
            let v = b.eval(p)? * C64::new(*s, 0.0);
            if self.vertical {
                out.view_mut((off, 0), v.shape()).copy_from(&v);
                off += v.nrows();
            } else {
                out.view_mut((0, off), v.shape()).copy_from(&v);
                off += v.ncols();
            }
        }
        Ok(out)
    }
    fn refinable(&self) -> bool {
        self.parts.iter().all(|p| p.0.refinable())
    }
}

/// A graph symbol: sampler plus exact form when every block is exact.
#[derive(Clone)]
pub struct Graph {
    pub sampler: Arc<dyn MatrixSampler>,
    pub symbolic: Option<SymBlock>,
}

impl Graph {
    fn from_stack(s: Stacked) -> Result<Self> {
        let symbolic = s.symbolic()?;
        Ok(Graph {
            sampler: Arc::new(s),
            symbolic,
        })
    }

    pub fn on(&self, grid: &FrequencyGrid, parallel: bool) -> Result<MatrixFunction> {
        MatrixFunction::sample(&self.sampler, grid, parallel)
    }

    /// The same symbol with its samples remembered.
    pub fn memoized(&self) -> Graph {
        Graph {
            sampler: Arc::new(Memo::new(self.sampler.clone())),
            symbolic: self.symbolic.clone(),
        }
    }
}

impl CoprimeFactors {
    pub fn outputs(&self) -> usize {
        self.n.rows()
    }

    pub fn inputs(&self) -> usize {
        self.n.cols()
    }

    pub fn check_dims(&self) -> Result<()> {
        let (p, m) = (self.outputs(), self.inputs());
        let shape = |b: &FactorBlock| (b.rows(), b.cols());
        let ok = shape(&self.d) == (m, m) && shape(&self.nt) == (p, m) && shape(&self.dt) == (p, p);
        let bez_ok = self.bezout.as_ref().is_none_or(|z| {
            shape(&z.x) == (m, p) && shape(&z.y) == (m, m) && shape(&z.xt) == (m, p) && shape(&z.yt) == (p, p)
        });
        if ok && bez_ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "coprime factor blocks inconsistent with a {p}x{m} plant"
            )))
        }
    }

    /// `G = [N; D]`.
    pub fn graph(&self) -> Result<Graph> {
        Graph::from_stack(Stacked::new(vec![(self.n.clone(), 1.0), (self.d.clone(), 1.0)], true)?)
    }

    /// `Gt = [-Dt, Nt]`.
    pub fn dual_graph(&self) -> Result<Graph> {
        Graph::from_stack(Stacked::new(vec![(self.dt.clone(), -1.0), (self.nt.clone(), 1.0)], false)?)
    }

    /// Controller symbol `K = [D; N]` when these factors describe a controller.
    pub fn controller_graph(&self) -> Result<Graph> {
        Graph::from_stack(Stacked::new(vec![(self.d.clone(), 1.0), (self.n.clone(), 1.0)], true)?)
    }

    /// Controller symbol `Kt = [-Nt, Dt]`.
    pub fn controller_dual_graph(&self) -> Result<Graph> {
        Graph::from_stack(Stacked::new(vec![(self.nt.clone(), -1.0), (self.dt.clone(), 1.0)], false)?)
    }

    /// Bezout defects `X N + Y D - I` and `Nt Xt + Dt Yt - I`, each divided
    /// by the larger of 1 and the norm of its witness pair.
    pub(crate) fn bezout_defects(&self) -> Option<(Arc<dyn MatrixSampler>, Arc<dyn MatrixSampler>)> {
        let z = self.bezout.as_ref()?;
        let (n, d, nt, dt) = (self.n.clone(), self.d.clone(), self.nt.clone(), self.dt.clone());
        let (x, y, xt, yt) = (z.x.clone(), z.y.clone(), z.xt.clone(), z.yt.clone());
        let m = self.inputs();
        let p = self.outputs();
        let refinable = [&n, &d, &nt, &dt, &x, &y, &xt, &yt].iter().all(|b| b.refinable());
        let right = ProductSampler {
            dim: m,
            refinable,
            f: Box::new(move |pt| {
                let (x, y) = (x.eval(pt)?, y.eval(pt)?);
                let defect = &x * n.eval(pt)? + &y * d.eval(pt)? - CMat::identity(m, m);
                Ok(defect / C64::new(linalg::sigma_max(&linalg::hstack(&x, &y)).max(1.0), 0.0))
            }),
        };
        let (n2, d2) = (self.nt.clone(), self.dt.clone());
        let left = ProductSampler {
            dim: p,
            refinable,
            f: Box::new(move |pt| {
                let (xt, yt) = (xt.eval(pt)?, yt.eval(pt)?);
                let defect = n2.eval(pt)? * &xt + d2.eval(pt)? * &yt - CMat::identity(p, p);
                Ok(defect / C64::new(linalg::sigma_max(&linalg::vstack(&xt, &yt)).max(1.0), 0.0))
            }),
        };
        Some((Arc::new(right), Arc::new(left)))
    }

    /// Whether all blocks are realizations or exact.
    pub fn refinable(&self) -> bool {
        [&self.n, &self.d, &self.nt, &self.dt].iter().all(|b| b.refinable())
    }

    /// Grid size of any sampled block.
    pub fn sampled_size(&self) -> Option<usize> {
        [&self.n, &self.d, &self.nt, &self.dt]
            .iter()
            .find_map(|b| b.sampled_size())
    }

    /// Right-multiplies `N, D` by the constant unitary `u` and left-multiplies
    /// `Nt, Dt` by `v`. Only realization and exact blocks can be transformed.
    pub fn rotated(&self, u: &CMat, v: &CMat) -> Result<Self> {
        let right = |b: &FactorBlock| transform_block(b, None, Some(u));
        let left = |b: &FactorBlock| transform_block(b, Some(v), None);
        Ok(CoprimeFactors {
            n: Arc::new(right(&self.n)?),
            d: Arc::new(right(&self.d)?),
            nt: Arc::new(left(&self.nt)?),
            dt: Arc::new(left(&self.dt)?),
            bezout: None,
            normalized: self.normalized,
            residuals: None,
        })
    }
}

type PointFn = Box<dyn Fn(&GridPoint) -> Result<CMat> + Send + Sync>;

struct ProductSampler {
    dim: usize,
    refinable: bool,
    f: PointFn,
}

impl MatrixSampler for ProductSampler {
    fn rows(&self) -> usize {
        self.dim
    }
    fn cols(&self) -> usize {
        self.dim
    }
    fn sample(&self, p: &GridPoint) -> Result<CMat> {
        (self.f)(p)
    }
    fn refinable(&self) -> bool {
        self.refinable
    }
}

fn constant_block(like: &SymBlock, m: &CMat) -> SymBlock {
    use crate::symbolic::Element;
    fn build<E: Element>(m: &CMat) -> SymMatrix<E> {
        SymMatrix::from_fn(m.nrows(), m.ncols(), |i, j| E::constant(m[(i, j)]))
    }
    match like {
        SymBlock::Disk(_) => SymBlock::Disk(build(m)),
        SymBlock::Ap(_) => SymBlock::Ap(build(m)),
        SymBlock::Cd(_) => SymBlock::Cd(build(m)),
        SymBlock::Polydisk(_) => SymBlock::Polydisk(build(m)),
    }
}

fn transform_block(b: &FactorBlock, left: Option<&CMat>, right: Option<&CMat>) -> Result<FactorBlock> {
    match b {
        FactorBlock::Realization(r) => {
            let mut ss = r.ss.clone();
            if let Some(u) = right {
                ss.b = &ss.b * u;
                ss.d = &ss.d * u;
            }
            if let Some(v) = left {
                ss.c = v * &ss.c;
                ss.d = v * &ss.d;
            }
            Ok(FactorBlock::Realization(Realization { shift: r.shift, ss }))
        }
        FactorBlock::Symbolic(s) => {
            let mut out = s.clone();
            if let Some(u) = right {
                out = out.mul(&constant_block(s, u))?;
            }
            if let Some(v) = left {
                out = constant_block(s, v).mul(&out)?;
            }
            Ok(FactorBlock::Symbolic(out))
        }
        FactorBlock::Sampled(s) => {
            let samples = s
                .samples
                .iter()
                .map(|m| {
                    let mut m = m.clone();
                    if let Some(u) = right {
                        m *= u;
                    }
                    if let Some(v) = left {
                        m = v * m;
                    }
                    m
                })
                .collect::<Vec<_>>();
            let (rows, cols) = samples.first().map(|m| m.shape()).unwrap_or((s.rows, s.cols));
            Ok(FactorBlock::Sampled(SampledBlock {
                grid: s.grid.clone(),
                rows,
                cols,
                samples,
            }))
        }
    }
}

/// `N D^{-1}` at a point.
pub(crate) fn right_quotient(f: &CoprimeFactors, p: &GridPoint) -> Result<CMat> {
    let n = f.n.eval(p)?;
    let d = f.d.eval(p)?;
    // N D^{-1} = (D^{-T} N^T)^T
    let dt = d.transpose();
    let sol = linalg::solve(&dt, &n.transpose(), "denominator factor")?;
    Ok(sol.transpose())
}
