//! Grid-sampled frequency-domain arithmetic.
//!
//! The maximal ideal space of each algebra is replaced by a finite grid: the
//! unit circle for the disk algebra, a truncated line `[-Y, Y]` for
//! almost-periodic functions, a Möbius-mapped circle for the Callier-Desoer
//! class, and a torus lattice plus diagonal circle for the polydisk.
//! Norms and extrema are grid estimates, sharpened by parabolic interpolation,
//! not certified bounds.

mod function;
mod grid;

pub use function::{
    compose, involute, min_singular_inf, refine, sup_norm, FnSampler, MatrixFunction, MatrixSampler, Memo,
    SingularValueProfile,
};
pub use grid::{mobius_to_line, AlgebraTag, FrequencyGrid, GridPoint, LATTICE_CAP};
