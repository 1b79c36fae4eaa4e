use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use super::grid::{FrequencyGrid, GridPoint};
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{self, CMat, C64};

/// Something that can be evaluated at any point of a grid.
pub trait MatrixSampler: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn sample(&self, point: &GridPoint) -> Result<CMat>;
    /// False for data known only on a fixed set of points.
    fn refinable(&self) -> bool {
        true
    }
}

impl<S: MatrixSampler + ?Sized> MatrixSampler for Arc<S> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn sample(&self, point: &GridPoint) -> Result<CMat> {
        (**self).sample(point)
    }
    fn refinable(&self) -> bool {
        (**self).refinable()
    }
}

/// Adapter turning a closure into a [`MatrixSampler`].
pub struct FnSampler<F> {
    rows: usize,
    cols: usize,
    f: F,
}

impl<F> FnSampler<F>
where
    F: Fn(&GridPoint) -> Result<CMat> + Send + Sync,
{
    pub fn new(rows: usize, cols: usize, f: F) -> Self {
        FnSampler { rows, cols, f }
    }
}

impl<F> MatrixSampler for FnSampler<F>
where
    F: Fn(&GridPoint) -> Result<CMat> + Send + Sync,
{
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn sample(&self, point: &GridPoint) -> Result<CMat> {
        (self.f)(point)
    }
}

/// Largest number of points a [`Memo`] keeps.
const MEMO_CAPACITY: usize = 1 << 17;

/// Sampler that remembers its values at circle, line and diagonal points.
pub struct Memo {
    inner: Arc<dyn MatrixSampler>,
    cache: RwLock<HashMap<(u8, u64), CMat>>,
}

impl Memo {
    pub fn new(inner: Arc<dyn MatrixSampler>) -> Self {
        Memo {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

fn memo_key(p: &GridPoint) -> Option<(u8, u64)> {
    match p {
        GridPoint::Circle { theta } => Some((0, theta.to_bits())),
        GridPoint::Line { y } => Some((1, y.to_bits())),
        GridPoint::Mobius { theta } => Some((2, theta.to_bits())),
        GridPoint::Diagonal { theta } => Some((3, theta.to_bits())),
        GridPoint::Torus(_) => None,
    }
}

impl MatrixSampler for Memo {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn sample(&self, point: &GridPoint) -> Result<CMat> {
        let Some(key) = memo_key(point) else {
            return self.inner.sample(point);
        };
        if let Some(v) = self.cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return Ok(v.clone());
        }
        let v = self.inner.sample(point)?;
        let mut cache = self.cache.write().unwrap_or_else(|e| e.into_inner());
        if cache.len() < MEMO_CAPACITY {
            cache.insert(key, v.clone());
        }
        Ok(v)
    }
    fn refinable(&self) -> bool {
        self.inner.refinable()
    }
}

/// A `rows x cols` complex matrix function sampled on every point of a grid.
#[derive(Debug, Clone)]
pub struct MatrixFunction {
    grid: FrequencyGrid,
    rows: usize,
    cols: usize,
    samples: Vec<CMat>,
}

/// Pointwise extreme singular values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularValueProfile {
    pub largest: Vec<f64>,
    pub smallest: Vec<f64>,
}

impl MatrixFunction {
    pub fn from_samples(grid: FrequencyGrid, rows: usize, cols: usize, samples: Vec<CMat>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::dims(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(bad) = samples.iter().find(|s| s.shape() != (rows, cols)) {
            return Err(Error::dims(format!(
                "sample of shape {:?} in a {rows}x{cols} function",
                bad.shape()
            )));
        }
        Ok(MatrixFunction { grid, rows, cols, samples })
    }

    pub fn sample<S: MatrixSampler + ?Sized>(sampler: &S, grid: &FrequencyGrid, parallel: bool) -> Result<Self> {
        let pts = grid.points();
        let samples = exec::try_map_indexed(pts.len(), parallel, |k| sampler.sample(&pts[k]))?;
        Self::from_samples(grid.clone(), sampler.rows(), sampler.cols(), samples)
    }

    pub fn constant(grid: &FrequencyGrid, value: CMat) -> Self {
        MatrixFunction {
            rows: value.nrows(),
            cols: value.ncols(),
            samples: vec![value; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn at(&self, k: usize) -> &CMat {
        &self.samples[k]
    }

    pub fn map<F>(&self, rows: usize, cols: usize, parallel: bool, f: F) -> Self
    where
        F: Fn(&CMat) -> CMat + Send + Sync,
    {
        let samples = exec::map_indexed(self.samples.len(), parallel, |k| f(&self.samples[k]));
        MatrixFunction {
            grid: self.grid.clone(),
            rows,
            cols,
            samples,
        }
    }

    /// Pointwise conjugate transpose.
    pub fn involute(&self) -> Self {
        MatrixFunction {
            grid: self.grid.clone(),
            rows: self.cols,
            cols: self.rows,
            samples: self.samples.iter().map(|s| s.adjoint()).collect(),
        }
    }

    /// Pointwise product `self * other`.
    pub fn compose(&self, other: &MatrixFunction) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(MatrixFunction {
            grid: self.grid.clone(),
            rows: self.rows,
            cols: other.cols,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    fn zip_with(&self, other: &MatrixFunction, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(MatrixFunction {
            grid: self.grid.clone(),
            rows: self.rows,
            cols: self.cols,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &MatrixFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &MatrixFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixFunction {
            grid: self.grid.clone(),
            rows: self.rows,
            cols: self.cols,
            samples: self.samples.iter().map(|a| a * s).collect(),
        }
    }

    /// `self - I` for square functions.
    pub fn minus_identity(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::dims("identity defect of a non-square function"));
        }
        let id = linalg::identity(self.rows);
        Ok(MatrixFunction {
            grid: self.grid.clone(),
            rows: self.rows,
            cols: self.cols,
            samples: self.samples.iter().map(|a| a - &id).collect(),
        })
    }

    /// Pointwise determinant.
    pub fn det(&self) -> Result<Vec<C64>> {
        if self.rows != self.cols {
            return Err(Error::dims(format!("determinant of a {}x{} function", self.rows, self.cols)));
        }
        Ok(self.samples.iter().map(linalg::det).collect())
    }

    pub fn singular_value_profile(&self, parallel: bool) -> SingularValueProfile {
        let pairs = exec::map_indexed(self.samples.len(), parallel, |k| {
            let sv = linalg::singular_values(&self.samples[k]);
            (
                sv.first().copied().unwrap_or(0.0),
                sv.last().copied().unwrap_or(0.0),
            )
        });
        let (largest, smallest) = pairs.into_iter().unzip();
        SingularValueProfile { largest, smallest }
    }

    /// Maximum of the largest singular value over the grid, sharpened by
    /// parabolic interpolation through the maximiser and its neighbours.
    pub fn sup_norm_with(&self, parallel: bool) -> f64 {
        let values = exec::map_indexed(self.samples.len(), parallel, |k| linalg::sigma_max(&self.samples[k]));
        refine_extremum(&values, &self.grid, Extremum::Max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_with(false)
    }

    /// Minimum of the smallest singular value over the grid, sharpened like
    /// [`MatrixFunction::sup_norm`]. Never exceeds the plain grid minimum.
    pub fn min_singular_inf_with(&self, parallel: bool) -> f64 {
        let values = exec::map_indexed(self.samples.len(), parallel, |k| linalg::sigma_min(&self.samples[k]));
        refine_extremum(&values, &self.grid, Extremum::Min)
    }

    pub fn min_singular_inf(&self) -> f64 {
        self.min_singular_inf_with(false)
    }
}

pub fn involute(f: &MatrixFunction) -> MatrixFunction {
    f.involute()
}

pub fn compose(a: &MatrixFunction, b: &MatrixFunction) -> Result<MatrixFunction> {
    a.compose(b)
}

pub fn sup_norm(f: &MatrixFunction) -> f64 {
    f.sup_norm()
}

pub fn min_singular_inf(f: &MatrixFunction) -> f64 {
    f.min_singular_inf()
}

/// Doubles the grid; the caller's sampler is re-invoked on the finer grid.
pub fn refine<S: MatrixSampler + ?Sized>(sampler: &S, grid: &FrequencyGrid, parallel: bool) -> Result<(FrequencyGrid, MatrixFunction)> {
    if !sampler.refinable() {
        return Err(Error::Unresolved("sampled data cannot be refined".into()));
    }
    let finer = grid.refine()?;
    let f = MatrixFunction::sample(sampler, &finer, parallel)?;
    Ok((finer, f))
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extremum {
    Max,
    Min,
}

/// Grid extremum with a parabolic correction along the ordered curve of the grid.
///
/// Ties go to the lowest index so the result does not depend on evaluation order.
pub(crate) fn refine_extremum(values: &[f64], grid: &FrequencyGrid, kind: Extremum) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let better = |a: f64, b: f64| match kind {
        Extremum::Max => a > b,
        Extremum::Min => a < b,
    };
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if better(v, values[best]) {
            best = k;
        }
    }
    let plain = values[best];
    let curve = grid.curve();
    if !curve.contains(&best) || curve.len() < 3 {
        return plain;
    }
    let (lo, hi) = (curve.start, curve.end);
    let (left, right) = if best > lo && best + 1 < hi {
        (best - 1, best + 1)
    } else if grid.curve_is_closed() {
        let left = if best == lo { hi - 1 } else { best - 1 };
        let right = if best + 1 == hi { lo } else { best + 1 };
        (left, right)
    } else {
        return plain;
    };
    let (ym, y0, yp) = (values[left], plain, values[right]);
    let a = 0.5 * (yp + ym) - y0;
    let b = 0.5 * (yp - ym);
    let curved = match kind {
        Extremum::Max => a < 0.0,
        Extremum::Min => a > 0.0,
    };
    if !curved {
        return plain;
    }
    let x = (-b / (2.0 * a)).clamp(-1.0, 1.0);
    let v = y0 + b * x + a * x * x;
    match kind {
        Extremum::Max => v.max(plain),
        Extremum::Min => v.min(plain).max(0.0),
    }
}
