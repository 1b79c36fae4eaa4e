use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GRID: usize = 4096;
pub const MIN_GRID: usize = 16;
pub const MAX_GRID_POINTS: usize = 1 << 20;
pub const DEFAULT_AP_RADIUS: f64 = 200.0;
pub const DEFAULT_INVERTIBILITY: f64 = 1e-9;
/// Poles closer than this to the unit circle are rejected.
pub const CIRCLE_EXCLUSION: f64 = 1e-6;

/// Numerical slack used when checking structural identities and inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Normalization residuals, pointwise identities, margin formulas.
    pub structural: f64,
    /// Robust stability certificate slack.
    pub certificate: f64,
    /// Metric axiom slack (symmetry and triangle).
    pub axiom: f64,
}

impl ToleranceProfile {
    pub const DEFAULT: ToleranceProfile = ToleranceProfile {
        structural: 1e-8,
        certificate: 1e-7,
        axiom: 1e-7,
    };
    pub const STRICT: ToleranceProfile = ToleranceProfile {
        structural: 1e-10,
        certificate: 1e-9,
        axiom: 1e-9,
    };
    pub const LOOSE: ToleranceProfile = ToleranceProfile {
        structural: 1e-6,
        certificate: 1e-5,
        axiom: 1e-5,
    };

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "default" => Some(Self::DEFAULT),
            "strict" => Some(Self::STRICT),
            "loose" => Some(Self::LOOSE),
            _ => None,
        }
    }
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Everything that shapes a computation besides its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Points on the base circle / line grid. Power of two in `[16, 2^20]`.
    pub grid_size: usize,
    /// Largest total number of points a grid may be refined to.
    pub refinement_limit: usize,
    /// Truncation radius `Y` of the almost-periodic line grid `[-Y, Y]`.
    pub ap_radius: f64,
    /// Relative invertibility threshold for determinants.
    pub invertibility_threshold: f64,
    pub tolerances: ToleranceProfile,
    /// Evaluate grid points in parallel (requires the `parallel` feature).
    pub parallel: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grid_size: DEFAULT_GRID,
            refinement_limit: MAX_GRID_POINTS,
            ap_radius: DEFAULT_AP_RADIUS,
            invertibility_threshold: DEFAULT_INVERTIBILITY,
            tolerances: ToleranceProfile::DEFAULT,
            parallel: false,
        }
    }
}

impl Config {
    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_size = n;
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid_size(self.grid_size)?;
        if self.refinement_limit < self.grid_size || self.refinement_limit > MAX_GRID_POINTS {
            return Err(Error::Validation(format!(
                "refinement limit {} outside [{}, {}]",
                self.refinement_limit, self.grid_size, MAX_GRID_POINTS
            )));
        }
        if !(self.ap_radius.is_finite() && self.ap_radius > 0.0) {
            return Err(Error::Validation("AP truncation radius must be positive".into()));
        }
        if !(self.invertibility_threshold > 0.0 && self.invertibility_threshold < 1.0) {
            return Err(Error::Validation("invertibility threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

pub fn validate_grid_size(n: usize) -> Result<()> {
    if !(MIN_GRID..=MAX_GRID_POINTS).contains(&n) || !n.is_power_of_two() {
        return Err(Error::Validation(format!(
            "grid size {n} must be a power of two in [{MIN_GRID}, {MAX_GRID_POINTS}]"
        )));
    }
    Ok(())
}
