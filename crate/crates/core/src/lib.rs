//! Ihara zeta functions and L-functions of finite weighted graphs, computed
//! along several independent routes that are checked against each other.
//!
//! ```
//! use zetagraph::{fixtures, routes};
//!
//! let z = routes::zeta_fredholm(&fixtures::k3(), 6).series;
//! assert_eq!(z.real_parts(), vec![1.0, 0.0, 0.0, -2.0, 0.0, 0.0, 1.0]);
//! ```

pub mod cycles;
pub mod error;
pub mod families;
pub mod fixtures;
pub mod format;
pub mod graph;
pub mod linalg;
pub mod operators;
pub mod routes;
pub mod series;
pub mod twist;

pub use error::{Error, Result};
pub use graph::{GraphStats, Issue, OrientedEdge, RawEdge, RawGraph, ValidationReport, WeightedGraph};
pub use linalg::{Basis, LinearOperator, C64};
pub use series::{OperatorSeries, TruncatedSeries, DEFAULT_ORDER, MAX_ORDER};
pub use cycles::CycleRecord;
pub use twist::LocalSystem;
pub use routes::{DiscrepancyReport, Route, RouteResult};
pub use families::GraphSource;
