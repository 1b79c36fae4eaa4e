use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::{validate_grid_size, Config};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Which transfer-function algebra a computation lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraTag {
    /// Disk algebra: functions continuous on the closed unit disk, sampled on the circle.
    Disk,
    /// Almost-periodic functions on the real line.
    Ap,
    /// Fourier transforms of L1 functions plus summable atomic parts.
    Cd,
    /// Polydisk algebra in `n >= 2` variables.
    Polydisk(usize),
}

impl AlgebraTag {
    pub fn name(&self) -> &'static str {
        match self {
            AlgebraTag::Disk => "disk",
            AlgebraTag::Ap => "ap",
            AlgebraTag::Cd => "cd",
            AlgebraTag::Polydisk(_) => "polydisk",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgebraTag::Polydisk(n) if *n < 2 => Err(Error::Validation(format!(
                "polydisk arity must be at least 2, got {n}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraTag::Polydisk(n) => write!(f, "polydisk({n})"),
            other => f.write_str(other.name()),
        }
    }
}

/// One character of the algebra, i.e. one place where a function is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum GridPoint {
    /// `z = exp(i theta)` on the unit circle.
    Circle { theta: f64 },
    /// A real frequency `y` (almost-periodic line).
    Line { y: f64 },
    /// `i y = (1 + e^{i theta}) / (1 - e^{i theta})`, i.e. `y = cot(theta / 2)`.
    Mobius { theta: f64 },
    /// A point `(e^{i t_1}, ..., e^{i t_n})` of the torus.
    Torus(Vec<f64>),
    /// `(z, ..., z)` with `z = exp(i theta)`, the diagonal of the polydisk boundary.
    Diagonal { theta: f64 },
}

impl GridPoint {
    /// The unit-circle variable for circle-type points.
    pub fn z(&self) -> Option<C64> {
        match self {
            GridPoint::Circle { theta } | GridPoint::Diagonal { theta } => {
                Some(C64::from_polar(1.0, *theta))
            }
            _ => None,
        }
    }

    /// The real frequency for line-type points.
    pub fn y(&self) -> Option<f64> {
        match self {
            GridPoint::Line { y } => Some(*y),
            GridPoint::Mobius { theta } => Some(mobius_to_line(*theta)),
            _ => None,
        }
    }

    /// The coordinates on the polydisk boundary (torus or diagonal).
    pub fn torus(&self, n: usize) -> Option<Vec<C64>> {
        match self {
            GridPoint::Torus(angles) => Some(angles.iter().map(|&t| C64::from_polar(1.0, t)).collect()),
            GridPoint::Diagonal { theta } => Some(vec![C64::from_polar(1.0, *theta); n]),
            _ => None,
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridPoint::Circle { theta } => write!(f, "theta={theta:.6}"),
            GridPoint::Line { y } => write!(f, "y={y:.6}"),
            GridPoint::Mobius { theta } => write!(f, "theta={theta:.6} (y={:.6})", mobius_to_line(*theta)),
            GridPoint::Torus(a) => write!(f, "torus{a:?}"),
            GridPoint::Diagonal { theta } => write!(f, "diagonal theta={theta:.6}"),
        }
    }
}

pub fn mobius_to_line(theta: f64) -> f64 {
    1.0 / (theta / 2.0).tan()
}

/// Largest lattice the polydisk grid uses, in total points.
pub const LATTICE_CAP: usize = 64 * 64;

/// A finite sample of the maximal ideal space.
///
/// Grids are immutable and cheap to clone. Two grids compare equal when they
/// were built from the same parameters.
#[derive(Clone)]
pub struct FrequencyGrid {
    algebra: AlgebraTag,
    size: usize,
    ap_radius: f64,
    refinement_limit: usize,
    lattice_axis: usize,
    points: Arc<Vec<GridPoint>>,
}

impl fmt::Debug for FrequencyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyGrid")
            .field("algebra", &self.algebra)
            .field("size", &self.size)
            .field("points", &self.points.len())
            .finish()
    }
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra
            && self.size == other.size
            && self.ap_radius == other.ap_radius
            && self.lattice_axis == other.lattice_axis
    }
}

impl FrequencyGrid {
    pub fn new(algebra: AlgebraTag, size: usize, cfg: &Config) -> Result<Self> {
        Self::build(algebra, size, cfg.ap_radius, cfg.refinement_limit)
    }

    /// Grid of the configured base size.
    pub fn for_config(algebra: AlgebraTag, cfg: &Config) -> Result<Self> {
        Self::new(algebra, cfg.grid_size, cfg)
    }

    fn build(algebra: AlgebraTag, size: usize, ap_radius: f64, refinement_limit: usize) -> Result<Self> {
        algebra.validate()?;
        validate_grid_size(size)?;
        let mut lattice_axis = 0;
        let points: Vec<GridPoint> = match algebra {
            AlgebraTag::Disk => (0..size)
                .map(|k| GridPoint::Circle { theta: circle_angle(k, size) })
                .collect(),
            AlgebraTag::Ap => (0..size)
                .map(|k| GridPoint::Line {
                    y: -ap_radius + 2.0 * ap_radius * k as f64 / size as f64,
                })
                .collect(),
            // midpoints keep theta = 0 (y = infinity) off the grid
            AlgebraTag::Cd => (0..size)
                .map(|k| GridPoint::Mobius {
                    theta: 2.0 * PI * (k as f64 + 0.5) / size as f64,
                })
                .collect(),
            AlgebraTag::Polydisk(n) => {
                lattice_axis = lattice_axis_for(size, n);
                let mut pts = lattice_points(lattice_axis, n);
                pts.extend((0..size).map(|k| GridPoint::Diagonal { theta: circle_angle(k, size) }));
                pts
            }
        };
        if points.len() > refinement_limit.max(size) {
            return Err(Error::RefinementExhausted { points: points.len() });
        }
        Ok(FrequencyGrid {
            algebra,
            size,
            ap_radius,
            refinement_limit,
            lattice_axis,
            points: Arc::new(points),
        })
    }

    pub fn algebra(&self) -> AlgebraTag {
        self.algebra
    }

    /// Nominal resolution `N_grid` of the one-dimensional part.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn ap_radius(&self) -> f64 {
        self.ap_radius
    }

    pub fn refinement_limit(&self) -> usize {
        self.refinement_limit
    }

    /// Points per torus axis (polydisk only, zero otherwise).
    pub fn lattice_axis(&self) -> usize {
        self.lattice_axis
    }

    /// Index range of the ordered one-dimensional part of the grid
    /// (the circle, line, Möbius circle, or polydisk diagonal).
    pub fn curve(&self) -> std::ops::Range<usize> {
        let start = self.points.len() - self.size;
        start..self.points.len()
    }

    /// Whether the one-dimensional part closes up on itself.
    pub fn curve_is_closed(&self) -> bool {
        matches!(self.algebra, AlgebraTag::Disk | AlgebraTag::Polydisk(_))
    }

    /// Position of `p` in this grid, if it is one of the grid's points.
    pub fn position(&self, p: &GridPoint) -> Option<usize> {
        let n = self.size as f64;
        let snap = |x: f64| -> Option<usize> {
            let k = x.round();
            ((x - k).abs() < 1e-6 && k >= 0.0).then_some(k as usize)
        };
        let k = match (self.algebra, p) {
            (AlgebraTag::Disk, GridPoint::Circle { theta }) => snap(theta * n / (2.0 * PI))?,
            (AlgebraTag::Ap, GridPoint::Line { y }) => snap((y + self.ap_radius) * n / (2.0 * self.ap_radius))?,
            (AlgebraTag::Cd, GridPoint::Mobius { theta }) => snap(theta * n / (2.0 * PI) - 0.5)?,
            (AlgebraTag::Polydisk(_), GridPoint::Torus(angles)) => {
                let axis = self.lattice_axis;
                let mut idx = 0;
                for a in angles.iter().rev() {
                    idx = idx * axis + snap(a * axis as f64 / (2.0 * PI))?;
                }
                idx
            }
            (AlgebraTag::Polydisk(_), GridPoint::Diagonal { theta }) => {
                self.curve().start + snap(theta * n / (2.0 * PI))?
            }
            _ => return None,
        };
        (self.points.get(k) == Some(p)).then_some(k)
    }

    /// The grid with twice the resolution. Circle, line and diagonal point
    /// sets contain the coarser grid's points.
    pub fn refine(&self) -> Result<Self> {
        let size = self.size * 2;
        let total = match self.algebra {
            AlgebraTag::Polydisk(n) => lattice_axis_for(size, n).pow(n as u32) + size,
            _ => size,
        };
        if total > self.refinement_limit {
            return Err(Error::RefinementExhausted { points: self.len() });
        }
        Self::build(self.algebra, size, self.ap_radius, self.refinement_limit)
    }
}

fn circle_angle(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

fn lattice_axis_for(size: usize, n: usize) -> usize {
    let budget = size.min(LATTICE_CAP);
    let bits = budget.trailing_zeros() as usize / n;
    (1usize << bits).max(4)
}

fn lattice_points(axis: usize, n: usize) -> Vec<GridPoint> {
    let total = axis.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut angles = vec![0.0; n];
            for a in angles.iter_mut() {
                *a = circle_angle(idx % axis, axis);
                idx /= axis;
            }
            GridPoint::Torus(angles)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refinement_keeps_original_angles() {
        let cfg = Config::default();
        let g = FrequencyGrid::new(AlgebraTag::Disk, 16, &cfg).unwrap();
        let r = g.refine().unwrap();
        assert_eq!(r.len(), 32);
        for (k, p) in g.points().iter().enumerate() {
            assert_eq!(p, &r.points()[2 * k]);
        }
    }

    #[test]
    fn refinement_limit_is_enforced() {
        let cfg = Config {
            grid_size: 16,
            refinement_limit: 16,
            ..Config::default()
        };
        let g = FrequencyGrid::for_config(AlgebraTag::Disk, &cfg).unwrap();
        assert!(matches!(g.refine(), Err(Error::RefinementExhausted { .. })));
    }

    #[test]
    fn grid_sizes_must_be_powers_of_two() {
        let cfg = Config::default();
        assert!(FrequencyGrid::new(AlgebraTag::Disk, 100, &cfg).is_err());
        assert!(FrequencyGrid::new(AlgebraTag::Disk, 8, &cfg).is_err());
    }

    #[test]
    fn mobius_angles_increase_and_avoid_infinity() {
        let cfg = Config::default();
        let g = FrequencyGrid::new(AlgebraTag::Cd, 64, &cfg).unwrap();
        let thetas: Vec<f64> = g
            .points()
            .iter()
            .map(|p| match p {
                GridPoint::Mobius { theta } => *theta,
                _ => unreachable!(),
            })
            .collect();
        assert!(thetas.windows(2).all(|w| w[0] < w[1]));
        assert!(thetas[0] > 0.0 && *thetas.last().unwrap() < 2.0 * PI);
        // y = cot(theta/2) runs from +inf to -inf
        assert!(g.points()[0].y().unwrap() > 10.0);
        assert!(g.points()[63].y().unwrap() < -10.0);
    }

    #[test]
    fn polydisk_lattice_is_capped() {
        let cfg = Config::default();
        let g = FrequencyGrid::new(AlgebraTag::Polydisk(2), 4096, &cfg).unwrap();
        assert_eq!(g.lattice_axis(), 64);
        assert_eq!(g.len(), 64 * 64 + 4096);
        assert_eq!(g.curve(), 4096..8192);
        assert!(FrequencyGrid::new(AlgebraTag::Polydisk(1), 64, &cfg).is_err());
    }

    #[test]
    fn positions_invert_the_layout() {
        let cfg = Config::default();
        for alg in [AlgebraTag::Disk, AlgebraTag::Ap, AlgebraTag::Cd, AlgebraTag::Polydisk(3)] {
            let g = FrequencyGrid::new(alg, 64, &cfg).unwrap();
            for (k, p) in g.points().iter().enumerate() {
                assert_eq!(g.position(p), Some(k), "{alg} {p}");
            }
        }
        let g = FrequencyGrid::new(AlgebraTag::Disk, 64, &cfg).unwrap();
        assert_eq!(g.position(&GridPoint::Circle { theta: 0.05 }), None);
    }
}
