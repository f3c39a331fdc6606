pub mod chain;
pub mod config;
pub mod dyn_props;
pub mod error;
pub mod fixtures;
pub mod metric_space;
pub mod orbits;
pub mod runner;
pub mod shadowing;
pub mod stability;
pub mod system;
pub mod verdict;

pub use error::{NasError, Result};
pub use metric_space::{Coords, PointId, Space, SpaceKind, TOL};
pub use system::{ExponentRule, MapPrimitive, MapSequence};
pub use verdict::{Verdict, Witness};
