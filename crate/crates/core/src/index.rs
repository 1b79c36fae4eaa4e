//! Index maps on the invertible elements of each algebra.
//!
//! * disk: winding number on the unit circle (`Int`)
//! * almost-periodic: average winding number (`Real`)
//! * Callier-Desoer: average winding of the atomic part paired with the
//!   winding of the relative L1 correction on the Möbius circle (`RealInt`)
//! * polydisk: winding number of the diagonal restriction (`Int`)
//!
//! Windings come from principal-branch phase increments between consecutive
//! samples. Every increment must stay below `pi/2`, otherwise the grid is
//! doubled (up to the refinement limit).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec;
use crate::freqdomain::{AlgebraTag, FrequencyGrid, GridPoint, MatrixFunction, MatrixSampler};
use crate::linalg::{self, C64};
use crate::symbolic::{CdElement, Element, ExpPoly, Laurent1, MultiLaurent, RationalZ, SymMatrix};

const MAX_STEP: f64 = PI / 2.0;
const INTEGER_SLACK: f64 = 1e-6;
/// Non-lattice average windings must be resolved to this error bar.
pub const AVERAGE_WINDING_TOL: f64 = 1e-3;
/// Smallest tolerance used when deciding that a real index is zero.
pub const REAL_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexValue {
    Int(i64),
    Real(f64),
    RealInt(f64, i64),
}

impl IndexValue {
    /// The group identity of the backend's index group.
    pub fn identity(algebra: AlgebraTag) -> Self {
        match algebra {
            AlgebraTag::Disk | AlgebraTag::Polydisk(_) => IndexValue::Int(0),
            AlgebraTag::Ap => IndexValue::Real(0.0),
            AlgebraTag::Cd => IndexValue::RealInt(0.0, 0),
        }
    }

    /// Identity test; real parts compare against `max(tol, 1e-9)`.
    pub fn is_identity(&self, tol: f64) -> bool {
        let tol = tol.max(REAL_ZERO_TOL);
        match *self {
            IndexValue::Int(k) => k == 0,
            IndexValue::Real(r) => r.abs() <= tol,
            IndexValue::RealInt(r, k) => r.abs() <= tol && k == 0,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        match (*self, *other) {
            (IndexValue::Int(a), IndexValue::Int(b)) => Ok(IndexValue::Int(a + b)),
            (IndexValue::Real(a), IndexValue::Real(b)) => Ok(IndexValue::Real(a + b)),
            (IndexValue::RealInt(a, j), IndexValue::RealInt(b, k)) => Ok(IndexValue::RealInt(a + b, j + k)),
            (a, b) => Err(Error::Unsupported(format!("adding indices {a} and {b} from different groups"))),
        }
    }

    pub fn neg(&self) -> Self {
        match *self {
            IndexValue::Int(a) => IndexValue::Int(-a),
            IndexValue::Real(a) => IndexValue::Real(-a),
            IndexValue::RealInt(a, k) => IndexValue::RealInt(-a, -k),
        }
    }

    /// Equality with integer parts exact and real parts within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (*self, *other) {
            (IndexValue::Int(a), IndexValue::Int(b)) => a == b,
            (IndexValue::Real(a), IndexValue::Real(b)) => (a - b).abs() <= tol,
            (IndexValue::RealInt(a, j), IndexValue::RealInt(b, k)) => j == k && (a - b).abs() <= tol,
            _ => false,
        }
    }
}

impl fmt::Display for IndexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexValue::Int(k) => write!(f, "{k}"),
            IndexValue::Real(r) => write!(f, "{r:.6}"),
            IndexValue::RealInt(r, k) => write!(f, "({r:.6}, {k})"),
        }
    }
}

/// An index together with the uncertainty of its real part (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub value: IndexValue,
    pub error_bar: f64,
}

impl IndexEstimate {
    fn exact(value: IndexValue) -> Self {
        IndexEstimate { value, error_bar: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        self.value.is_identity(self.error_bar)
    }
}

/// Exact scalar element of one of the four algebras.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSymbol {
    Disk(RationalZ),
    Ap(ExpPoly),
    Cd(CdElement),
    Polydisk(MultiLaurent),
}

impl ScalarSymbol {
    fn eval(&self, p: &GridPoint) -> Result<C64> {
        match self {
            ScalarSymbol::Disk(f) => f.eval(p),
            ScalarSymbol::Ap(f) => f.eval(p),
            ScalarSymbol::Cd(f) => f.eval(p),
            ScalarSymbol::Polydisk(f) => f.eval(p),
        }
    }
}

#[derive(Clone)]
enum Source {
    Symbol(ScalarSymbol),
    Sampler(Arc<dyn MatrixSampler>),
    Samples(MatrixFunction),
}

/// A scalar element of an algebra, known exactly, through a sampler, or
/// only through samples on one fixed grid.
#[derive(Clone)]
pub struct ScalarFunction {
    algebra: AlgebraTag,
    source: Source,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Symbol(s) => format!("{s:?}"),
            Source::Sampler(_) => "sampler".to_string(),
            Source::Samples(m) => format!("{} samples", m.samples().len()),
        };
        write!(f, "ScalarFunction({}, {kind})", self.algebra)
    }
}

/// Determinant of a square matrix sampler, itself a 1x1 sampler.
struct DetSampler(Arc<dyn MatrixSampler>);

impl MatrixSampler for DetSampler {
    fn rows(&self) -> usize {
        1
    }
    fn cols(&self) -> usize {
        1
    }
    fn sample(&self, p: &GridPoint) -> Result<linalg::CMat> {
        Ok(linalg::scalar(linalg::det(&self.0.sample(p)?)))
    }
    fn refinable(&self) -> bool {
        self.0.refinable()
    }
}

impl ScalarFunction {
    pub fn from_symbol(symbol: ScalarSymbol) -> Self {
        let algebra = match &symbol {
            ScalarSymbol::Disk(_) => AlgebraTag::Disk,
            ScalarSymbol::Ap(_) => AlgebraTag::Ap,
            ScalarSymbol::Cd(_) => AlgebraTag::Cd,
            ScalarSymbol::Polydisk(f) => AlgebraTag::Polydisk(f.arity()),
        };
        ScalarFunction {
            algebra,
            source: Source::Symbol(symbol),
        }
    }

    /// Pins the algebra of a symbol built only from constants, whose
    /// polydisk arity is not determined by its terms.
    pub fn in_algebra(mut self, algebra: AlgebraTag) -> Self {
        if let (AlgebraTag::Polydisk(0), AlgebraTag::Polydisk(_)) = (self.algebra, algebra) {
            self.algebra = algebra;
        }
        self
    }

    pub fn disk(f: RationalZ) -> Self {
        Self::from_symbol(ScalarSymbol::Disk(f))
    }

    pub fn ap(f: ExpPoly) -> Self {
        Self::from_symbol(ScalarSymbol::Ap(f))
    }

    pub fn cd(f: CdElement) -> Self {
        Self::from_symbol(ScalarSymbol::Cd(f))
    }

    pub fn polydisk(f: MultiLaurent) -> Self {
        Self::from_symbol(ScalarSymbol::Polydisk(f))
    }

    /// A 1x1 sampler, or the determinant of a square one.
    pub fn from_sampler(algebra: AlgebraTag, sampler: Arc<dyn MatrixSampler>) -> Result<Self> {
        if sampler.rows() != sampler.cols() {
            return Err(Error::dims(format!(
                "index of a non-square {}x{} function",
                sampler.rows(),
                sampler.cols()
            )));
        }
        let sampler: Arc<dyn MatrixSampler> = if sampler.rows() == 1 {
            sampler
        } else {
            Arc::new(DetSampler(sampler))
        };
        Ok(ScalarFunction {
            algebra,
            source: Source::Sampler(sampler),
        })
    }

    /// The determinant of sampled data on a fixed grid.
    pub fn from_samples(f: &MatrixFunction) -> Result<Self> {
        let det = f.det()?;
        let grid = f.grid().clone();
        let samples = det.into_iter().map(linalg::scalar).collect();
        Ok(ScalarFunction {
            algebra: grid.algebra(),
            source: Source::Samples(MatrixFunction::from_samples(grid, 1, 1, samples)?),
        })
    }

    /// Determinant of a symbolic matrix.
    pub fn det_of<E: Element>(m: &SymMatrix<E>, wrap: impl Fn(E) -> ScalarSymbol) -> Result<Self> {
        Ok(Self::from_symbol(wrap(m.det()?)))
    }

    pub fn algebra(&self) -> AlgebraTag {
        self.algebra
    }

    pub fn symbol(&self) -> Option<&ScalarSymbol> {
        match &self.source {
            Source::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_refinable(&self) -> bool {
        match &self.source {
            Source::Symbol(_) => true,
            Source::Sampler(s) => s.refinable(),
            Source::Samples(_) => false,
        }
    }

    pub fn value_at(&self, p: &GridPoint) -> Result<C64> {
        match &self.source {
            Source::Symbol(s) => s.eval(p),
            Source::Sampler(s) => Ok(s.sample(p)?[(0, 0)]),
            Source::Samples(_) => Err(Error::Unsupported(
                "sampled data is only known on its own grid".into(),
            )),
        }
    }

    /// Values at the grid points with indices in `range`.
    fn values(&self, grid: &FrequencyGrid, range: std::ops::Range<usize>, parallel: bool) -> Result<Vec<C64>> {
        if let Source::Samples(m) = &self.source {
            if m.grid() != grid {
                return Err(Error::Unresolved(
                    "sampled data is not available on the requested grid".into(),
                ));
            }
            return Ok(m.samples()[range].iter().map(|s| s[(0, 0)]).collect());
        }
        let pts = &grid.points()[range];
        exec::try_map_indexed(pts.len(), parallel, |k| self.value_at(&pts[k]))
    }

    fn base_grid(&self, cfg: &Config) -> Result<FrequencyGrid> {
        match &self.source {
            Source::Samples(m) => Ok(m.grid().clone()),
            _ => FrequencyGrid::for_config(self.algebra, cfg),
        }
    }

    /// Pointwise product (symbolic when both factors are).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        use ScalarSymbol as S;
        if self.algebra != other.algebra {
            return Err(Error::Unsupported("product across algebras".into()));
        }
        if let (Some(a), Some(b)) = (self.symbol(), other.symbol()) {
            let s = match (a, b) {
                (S::Disk(a), S::Disk(b)) => S::Disk(a.mul(b)),
                (S::Ap(a), S::Ap(b)) => S::Ap(a.mul(b)),
                (S::Cd(a), S::Cd(b)) => S::Cd(a.mul(b)),
                (S::Polydisk(a), S::Polydisk(b)) => S::Polydisk(a.mul(b)),
                _ => unreachable!("algebra tags agree"),
            };
            return Ok(Self::from_symbol(s));
        }
        Err(Error::Unsupported("products of sampled scalars are formed by the caller".into()))
    }

    /// Pointwise conjugate `f*`.
    pub fn conj(&self) -> Result<Self> {
        use ScalarSymbol as S;
        match self.symbol() {
            Some(S::Disk(a)) => Ok(Self::disk(a.conj())),
            Some(S::Ap(a)) => Ok(Self::ap(a.conj())),
            Some(S::Cd(a)) => Ok(Self::cd(a.conj())),
            Some(S::Polydisk(a)) => Ok(Self::polydisk(a.conj())),
            None => Err(Error::Unsupported("involution of a sampled scalar".into())),
        }
    }
}

// ---------------------------------------------------------------------------
// invertibility

/// Extremes of `|f|` on a grid and the verdict against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Invertibility {
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// Absolute threshold the minimum was compared against.
    pub threshold: f64,
    pub invertible: bool,
}

fn modulus_check(values: &[C64], threshold: f64) -> Invertibility {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for v in values {
        let m = v.norm();
        if !m.is_finite() {
            lo = 0.0;
            hi = f64::INFINITY;
            continue;
        }
        lo = lo.min(m);
        hi = hi.max(m);
    }
    if values.is_empty() {
        lo = 0.0;
    }
    // relative to the largest modulus, but never looser than absolute
    let abs = threshold * hi.max(1.0);
    Invertibility {
        min_modulus: lo,
        max_modulus: hi,
        threshold: abs,
        invertible: lo > abs && hi.is_finite(),
    }
}

fn require(inv: Invertibility, what: &str) -> Result<()> {
    if inv.invertible {
        Ok(())
    } else {
        Err(Error::NotInvertible {
            what: what.to_string(),
            min_modulus: inv.min_modulus,
            threshold: inv.threshold,
        })
    }
}

/// Grid test of `min |det f| > threshold * max(1, max |det f|)`.
pub fn is_invertible_in_s(f: &MatrixFunction, threshold: f64) -> bool {
    match f.det() {
        Ok(d) => modulus_check(&d, threshold).invertible,
        Err(_) => false,
    }
}

impl ScalarFunction {
    /// Modulus check on the configured grid and, when possible, once more on
    /// the doubled grid. The reported extremes cover both.
    pub fn invertibility(&self, cfg: &Config) -> Result<Invertibility> {
        let grid = self.base_grid(cfg)?;
        let mut inv = self.invertibility_on(&grid, cfg)?;
        if inv.invertible && self.is_refinable() {
            if let Ok(finer) = grid.refine() {
                let again = self.invertibility_on(&finer, cfg)?;
                inv = Invertibility {
                    min_modulus: inv.min_modulus.min(again.min_modulus),
                    max_modulus: inv.max_modulus.max(again.max_modulus),
                    threshold: inv.threshold.max(again.threshold),
                    invertible: again.invertible,
                };
            }
        }
        Ok(inv)
    }

    fn invertibility_on(&self, grid: &FrequencyGrid, cfg: &Config) -> Result<Invertibility> {
        let mut values = self.values(grid, 0..grid.len(), cfg.parallel)?;
        // inf |F_AP| enters the Callier-Desoer invertibility criterion
        if let Some(ScalarSymbol::Cd(f)) = self.symbol() {
            let line = FrequencyGrid::new(AlgebraTag::Ap, grid.size(), cfg)?;
            let ap = ScalarFunction::ap(f.ap.clone());
            values.extend(ap.values(&line, 0..line.len(), cfg.parallel)?);
        }
        Ok(modulus_check(&values, cfg.invertibility_threshold))
    }

    pub fn is_invertible(&self, cfg: &Config) -> bool {
        self.invertibility(cfg).map(|i| i.invertible).unwrap_or(false)
    }
}

// ---------------------------------------------------------------------------
// windings

/// Winding of a closed sampled curve, or `None` when some phase step is too large.
fn closed_curve_winding(values: &[C64]) -> Result<Option<i64>> {
    let n = values.len();
    let mut total = 0.0;
    for k in 0..n {
        let step = (values[(k + 1) % n] / values[k]).arg();
        if step.abs() >= MAX_STEP {
            return Ok(None);
        }
        total += step;
    }
    let raw = total / (2.0 * PI);
    let k = raw.round();
    if (raw - k).abs() > INTEGER_SLACK {
        return Err(Error::NonInteger { raw });
    }
    Ok(Some(k as i64))
}

/// Winding along the ordered curve of a grid, doubling as needed.
fn curve_winding(f: &ScalarFunction, start: FrequencyGrid, cfg: &Config, what: &str) -> Result<i64> {
    let mut grid = start;
    loop {
        let values = f.values(&grid, grid.curve(), cfg.parallel)?;
        require(modulus_check(&values, cfg.invertibility_threshold), what)?;
        if let Some(w) = closed_curve_winding(&values)? {
            return Ok(w);
        }
        if !f.is_refinable() {
            return Err(Error::Unresolved(format!(
                "{what}: phase steps exceed pi/2 on fixed sampled data"
            )));
        }
        grid = grid.refine().map_err(|_| {
            Error::Unresolved(format!(
                "{what}: phase steps still exceed pi/2 at the refinement limit ({} points)",
                grid.len()
            ))
        })?;
    }
}

/// Winding number of a nonvanishing function on the unit circle.
pub fn winding_number(f: &ScalarFunction, cfg: &Config) -> Result<i64> {
    if f.algebra() != AlgebraTag::Disk {
        return Err(Error::Unsupported(format!("circle winding of a {} function", f.algebra())));
    }
    curve_winding(f, f.base_grid(cfg)?, cfg, "winding number")
}

fn laurent_winding(g: Laurent1, cfg: &Config) -> Result<i64> {
    let f = ScalarFunction::disk(RationalZ {
        num: g,
        den: Laurent1::poly(vec![linalg::ONE]),
    });
    winding_number(&f, cfg)
}

/// Average winding number and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageWinding {
    pub value: f64,
    pub error_bar: f64,
    /// Lattice step `h` when all frequencies are multiples of it.
    pub lattice_step: Option<f64>,
}

/// Average winding number of an invertible almost-periodic function.
pub fn average_winding(f: &ScalarFunction, cfg: &Config) -> Result<AverageWinding> {
    match (f.algebra(), f.symbol()) {
        (AlgebraTag::Ap, Some(ScalarSymbol::Ap(e))) => exp_poly_average_winding(e, cfg),
        (AlgebraTag::Ap, None) => sampled_average_winding(f, cfg),
        (other, _) => Err(Error::Unsupported(format!("average winding of a {other} function"))),
    }
}

fn exp_poly_average_winding(f: &ExpPoly, cfg: &Config) -> Result<AverageWinding> {
    let what = "average winding";
    if let Some((h, ks)) = f.lattice() {
        let low = ks.iter().map(|k| k.0).min().unwrap_or(0);
        let high = ks.iter().map(|k| k.0).max().unwrap_or(0);
        let mut coeffs = vec![linalg::ZERO; (high - low + 1) as usize];
        for (k, c) in ks {
            coeffs[(k - low) as usize] += c;
        }
        let g = Laurent1 { low: low as i32, coeffs };
        // f(y) = g(exp(i h y)) covers the circle, so invertibility is decided there
        let w = laurent_winding(g, cfg).map_err(|e| match e {
            Error::NotInvertible { min_modulus, threshold, .. } => Error::NotInvertible {
                what: what.into(),
                min_modulus,
                threshold,
            },
            other => other,
        })?;
        return Ok(AverageWinding {
            value: h * w as f64,
            error_bar: 0.0,
            lattice_step: Some(h),
        });
    }
    let line = FrequencyGrid::for_config(AlgebraTag::Ap, cfg)?;
    let probe = ScalarFunction::ap(f.clone());
    let inv = modulus_check(&probe.values(&line, 0..line.len(), cfg.parallel)?, cfg.invertibility_threshold);
    require(inv, what)?;
    truncated_average_winding(f, inv.min_modulus, cfg)
}

/// Mean phase slope over `[-T, T]`, doubling `T` until the error bar is small.
fn truncated_average_winding(f: &ExpPoly, min_modulus: f64, cfg: &Config) -> Result<AverageWinding> {
    let slope_bound: f64 = f.terms().iter().map(|(w, c)| w.abs() * c.norm()).sum();
    let dy = (0.25 * min_modulus / slope_bound.max(1e-300)).min(0.1);
    let mut t = cfg.ap_radius;
    let mut last_bar = f64::INFINITY;
    loop {
        let n = (2.0 * t / dy).ceil() as usize + 1;
        if n > cfg.refinement_limit {
            return Err(Error::NonLatticeUnconverged { error_bar: last_bar });
        }
        let step = 2.0 * t / (n - 1) as f64;
        let values = exec::map_indexed(n, cfg.parallel, |k| f.at(-t + step * k as f64));
        let Some((value, bar)) = phase_slope(&values, -t, step)? else {
            return Err(Error::Unresolved("phase steps exceed pi/2 on the truncated line".into()));
        };
        if bar <= AVERAGE_WINDING_TOL {
            return Ok(AverageWinding {
                value,
                error_bar: bar,
                lattice_step: None,
            });
        }
        last_bar = bar;
        t *= 2.0;
    }
}

/// Slope of the unwrapped phase between the endpoints, with the spread of
/// the residual phase divided by the half-width as error bar.
fn phase_slope(values: &[C64], y0: f64, step: f64) -> Result<Option<(f64, f64)>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Unresolved("too few samples for an average winding".into()));
    }
    let mut theta = vec![values[0].arg()];
    for k in 1..n {
        let d = (values[k] / values[k - 1]).arg();
        if d.abs() >= MAX_STEP {
            return Ok(None);
        }
        theta.push(theta[k - 1] + d);
    }
    let half = 0.5 * step * (n - 1) as f64;
    let slope = (theta[n - 1] - theta[0]) / (2.0 * half);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, th) in theta.iter().enumerate() {
        let r = th - slope * (y0 + step * k as f64);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(Some((slope, (hi - lo) / half)))
}

fn sampled_average_winding(f: &ScalarFunction, cfg: &Config) -> Result<AverageWinding> {
    let grid = f.base_grid(cfg)?;
    let values = f.values(&grid, 0..grid.len(), cfg.parallel)?;
    require(modulus_check(&values, cfg.invertibility_threshold), "average winding")?;
    let y0 = grid.points()[0].y().unwrap_or(-grid.ap_radius());
    let step = 2.0 * grid.ap_radius() / grid.size() as f64;
    match phase_slope(&values, y0, step)? {
        Some((value, bar)) if bar <= AVERAGE_WINDING_TOL => Ok(AverageWinding {
            value,
            error_bar: bar,
            lattice_step: None,
        }),
        Some((_, bar)) => Err(Error::NonLatticeUnconverged { error_bar: bar }),
        None => Err(Error::Unresolved("phase steps exceed pi/2 on sampled data".into())),
    }
}

/// Callier-Desoer index: average winding of the atomic part and circle
/// winding of `1 + F_AP^{-1} f_a` on the Möbius circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdIndex {
    pub average: AverageWinding,
    pub winding: i64,
}

pub fn cd_index(f: &ScalarFunction, cfg: &Config) -> Result<CdIndex> {
    let Some(ScalarSymbol::Cd(elem)) = f.symbol() else {
        return Err(Error::Unresolved(
            "Callier-Desoer index needs the split into atomic and L1 parts".into(),
        ));
    };
    require(f.invertibility(cfg)?, "Callier-Desoer element")?;
    let average = exp_poly_average_winding(&elem.ap, cfg)?;
    let ap = elem.ap.clone();
    let ac = elem.clone();
    let rel = crate::freqdomain::FnSampler::new(1, 1, move |p: &GridPoint| {
        let y = p
            .y()
            .ok_or_else(|| Error::Unsupported(format!("relative correction at {p}")))?;
        Ok(linalg::scalar(linalg::ONE + ac.ac_at(y) / ap.at(y)))
    });
    let rel = ScalarFunction::from_sampler(AlgebraTag::Cd, Arc::new(rel))?;
    let winding = curve_winding(&rel, FrequencyGrid::for_config(AlgebraTag::Cd, cfg)?, cfg, "relative L1 correction")?;
    Ok(CdIndex { average, winding })
}

/// Winding number of the diagonal restriction, after checking invertibility
/// on the torus lattice and on the diagonal.
pub fn polydisk_index(f: &ScalarFunction, cfg: &Config) -> Result<i64> {
    let AlgebraTag::Polydisk(_) = f.algebra() else {
        return Err(Error::Unsupported(format!("polydisk index of a {} function", f.algebra())));
    };
    let grid = f.base_grid(cfg)?;
    require(
        modulus_check(&f.values(&grid, 0..grid.len(), cfg.parallel)?, cfg.invertibility_threshold),
        "polydisk element on the torus",
    )?;
    if let Some(ScalarSymbol::Polydisk(p)) = f.symbol() {
        return laurent_winding(p.diagonal(), cfg);
    }
    curve_winding(f, grid, cfg, "diagonal restriction")
}

fn dispatch(f: &ScalarFunction, cfg: &Config) -> Result<IndexEstimate> {
    Ok(match f.algebra() {
        AlgebraTag::Disk => IndexEstimate::exact(IndexValue::Int(winding_number(f, cfg)?)),
        AlgebraTag::Polydisk(_) => IndexEstimate::exact(IndexValue::Int(polydisk_index(f, cfg)?)),
        AlgebraTag::Ap => {
            let a = average_winding(f, cfg)?;
            IndexEstimate {
                value: IndexValue::Real(a.value),
                error_bar: a.error_bar,
            }
        }
        AlgebraTag::Cd => {
            let c = cd_index(f, cfg)?;
            IndexEstimate {
                value: IndexValue::RealInt(c.average.value, c.winding),
                error_bar: c.average.error_bar,
            }
        }
    })
}

/// Index of an invertible scalar (typically a determinant), checked for
/// stability under one doubling of the grid.
pub fn index_estimate(f: &ScalarFunction, cfg: &Config) -> Result<IndexEstimate> {
    require(f.invertibility(cfg)?, "determinant")?;
    let first = dispatch(f, cfg)?;
    if !f.is_refinable() {
        return Ok(first);
    }
    let finer = match cfg.grid_size.checked_mul(2) {
        Some(n) if n <= cfg.refinement_limit => cfg.clone().with_grid(n),
        _ => return Ok(first),
    };
    let second = dispatch(f, &finer)?;
    let tol = (first.error_bar + second.error_bar).max(REAL_ZERO_TOL);
    if !first.value.approx_eq(&second.value, tol) {
        return Err(Error::Unresolved(format!(
            "index changed from {} to {} under grid doubling",
            first.value, second.value
        )));
    }
    Ok(first)
}

pub fn index_of(f: &ScalarFunction, cfg: &Config) -> Result<IndexValue> {
    index_estimate(f, cfg).map(|e| e.value)
}

/// Checks that the index is the same at `steps + 1` equally spaced points of
/// a path `t -> H(t)`. Leaving the invertibles is an error naming `t`.
pub fn homotopy_index_check<F>(path: F, steps: usize, cfg: &Config) -> Result<bool>
where
    F: Fn(f64) -> Result<ScalarFunction>,
{
    let steps = steps.max(1);
    let mut first: Option<IndexEstimate> = None;
    let mut same = true;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let h = path(t)?;
        let est = index_estimate(&h, cfg).map_err(|e| match e {
            Error::NotInvertible { min_modulus, threshold, .. } => Error::NotInvertible {
                what: format!("path at t = {t}"),
                min_modulus,
                threshold,
            },
            other => other,
        })?;
        match &first {
            None => first = Some(est),
            Some(f0) => {
                let tol = (f0.error_bar + est.error_bar).max(REAL_ZERO_TOL);
                same &= f0.value.approx_eq(&est.value, tol);
            }
        }
    }
    Ok(same)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};
    use crate::symbolic::RationalY;

    fn cfg() -> Config {
        Config::default().with_grid(256)
    }

    fn zpow(n: i32) -> ScalarFunction {
        ScalarFunction::disk(RationalZ {
            num: Laurent1 { low: n, coeffs: vec![ONE] },
            den: Laurent1::poly(vec![ONE]),
        })
    }

    fn poly(coeffs: Vec<C64>) -> ScalarFunction {
        ScalarFunction::disk(RationalZ::new(coeffs, vec![ONE]))
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&zpow(3), &cfg()).unwrap(), 3);
        assert_eq!(winding_number(&poly(vec![c(5.0, 0.0)]), &cfg()).unwrap(), 0);
        assert_eq!(winding_number(&poly(vec![c(-2.0, 0.0), ONE]), &cfg()).unwrap(), 0);
    }

    #[test]
    fn high_power_refines_from_coarse_grid() {
        let coarse = Config::default().with_grid(16);
        assert_eq!(winding_number(&zpow(9), &coarse).unwrap(), 9);
        assert_eq!(winding_number(&zpow(-9), &coarse).unwrap(), -9);
    }

    #[test]
    fn vanishing_function_is_not_invertible() {
        let f = poly(vec![c(-1.0, 0.0), ONE]);
        assert!(matches!(winding_number(&f, &cfg()), Err(Error::NotInvertible { .. })));
        assert!(!f.is_invertible(&cfg()));
        assert!(zpow(1).is_invertible(&cfg()));
    }

    #[test]
    fn near_singular_constant_matrix() {
        let g = FrequencyGrid::for_config(AlgebraTag::Disk, &cfg()).unwrap();
        let m = linalg::CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(1e-12, 0.0)]);
        assert!(!is_invertible_in_s(&MatrixFunction::constant(&g, m), 1e-9));
    }

    #[test]
    fn average_winding_examples() {
        let e2 = ExpPoly::new([(2.0, ONE)]);
        let w = average_winding(&ScalarFunction::ap(e2), &cfg()).unwrap();
        assert_eq!(w.value, 2.0);
        let k = ExpPoly::constant(c(3.0, 1.0));
        assert_eq!(average_winding(&ScalarFunction::ap(k), &cfg()).unwrap().value, 0.0);
        let f = ExpPoly::new([(1.0, ONE), (0.0, c(0.5, 0.0))]);
        assert_eq!(average_winding(&ScalarFunction::ap(f), &cfg()).unwrap().value, 1.0);
    }

    #[test]
    fn non_lattice_average_winding_converges() {
        let f = ExpPoly::new([(1.0, ONE), (std::f64::consts::SQRT_2, c(0.4, 0.0))]);
        let w = average_winding(&ScalarFunction::ap(f), &Config::default()).unwrap();
        assert!(w.lattice_step.is_none());
        assert!(w.error_bar <= AVERAGE_WINDING_TOL);
        assert!((w.value - 1.0).abs() <= w.error_bar.max(1e-6));
    }

    #[test]
    fn cd_examples() {
        let pure = CdElement::new(ExpPoly::new([(1.0, ONE)]), vec![]);
        let i = cd_index(&ScalarFunction::cd(pure), &cfg()).unwrap();
        assert_eq!((i.average.value, i.winding), (1.0, 0));
        let one = ScalarFunction::cd(CdElement::one());
        assert_eq!(index_of(&one, &cfg()).unwrap(), IndexValue::RealInt(0.0, 0));
        let r = RationalY::from_laplace(&[ONE], &[ONE, ONE]);
        let f = CdElement::new(ExpPoly::constant(c(2.0, 0.0)), vec![(0.0, r)]);
        let i = cd_index(&ScalarFunction::cd(f), &cfg()).unwrap();
        assert_eq!((i.average.value, i.winding), (0.0, 0));
    }

    #[test]
    fn cd_winding_of_relative_correction() {
        // 1 + 3/(1+s) - ... : (s - 2)/(s + 1) = 1 - 3/(1+s) has a zero in Re s > 0
        let r = RationalY::from_laplace(&[c(-3.0, 0.0)], &[ONE, ONE]);
        let f = CdElement::new(ExpPoly::one(), vec![(0.0, r)]);
        let i = cd_index(&ScalarFunction::cd(f), &cfg()).unwrap();
        assert_eq!(i.winding.abs(), 1);
    }

    #[test]
    fn polydisk_examples() {
        let mono = MultiLaurent::new(2, [(vec![1, 1], ONE)]).unwrap();
        assert_eq!(polydisk_index(&ScalarFunction::polydisk(mono), &cfg()).unwrap(), 2);
        let one = MultiLaurent::new(2, [(vec![0, 0], ONE)]).unwrap();
        assert_eq!(polydisk_index(&ScalarFunction::polydisk(one), &cfg()).unwrap(), 0);
        let shifted = MultiLaurent::new(2, [(vec![1, 0], ONE), (vec![0, 0], c(-3.0, 0.0))]).unwrap();
        assert_eq!(polydisk_index(&ScalarFunction::polydisk(shifted), &cfg()).unwrap(), 0);
    }

    #[test]
    fn index_dispatch() {
        assert_eq!(index_of(&zpow(2), &cfg()).unwrap(), IndexValue::Int(2));
        let e3 = ScalarFunction::ap(ExpPoly::new([(3.0, ONE)]));
        assert_eq!(index_of(&e3, &cfg()).unwrap(), IndexValue::Real(3.0));
    }

    #[test]
    fn homotopy_examples() {
        let c0 = cfg();
        let constant = |t: f64| Ok(poly(vec![c((1.0 - t) * 2.0 + 3.0 * t, 0.0)]));
        assert!(homotopy_index_check(constant, 10, &c0).unwrap());
        let scaled = |t: f64| Ok(poly(vec![ZERO, c(1.0 + t, 0.0)]));
        assert!(homotopy_index_check(scaled, 10, &c0).unwrap());
        let crossing = |t: f64| Ok(poly(vec![c(-2.0 * t, 0.0), ONE]));
        match homotopy_index_check(crossing, 10, &c0) {
            Err(Error::NotInvertible { what, .. }) => assert!(what.contains("0.5"), "{what}"),
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn sampled_determinant_matches_symbolic() {
        let g = FrequencyGrid::for_config(AlgebraTag::Disk, &cfg()).unwrap();
        let s = crate::freqdomain::FnSampler::new(2, 2, |p: &GridPoint| {
            let z = p.z().unwrap();
            Ok(linalg::CMat::from_row_slice(2, 2, &[z, ONE, ZERO, z * z - 0.25]))
        });
        let m = MatrixFunction::sample(&s, &g, false).unwrap();
        let f = ScalarFunction::from_samples(&m).unwrap();
        assert_eq!(index_of(&f, &cfg()).unwrap(), IndexValue::Int(3));
    }
}
