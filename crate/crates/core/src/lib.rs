pub mod config;
pub mod error;
pub mod exec;
pub mod factorization;
pub mod freqdomain;
pub mod index;
pub mod linalg;
pub mod numetric;
pub mod plants;
pub mod poly;
pub mod symbolic;

pub use config::{Config, ToleranceProfile};
pub use error::{Error, Result};
