//! Monte Carlo tracking benchmark for the cubature smoothers in `wrw-core`.
//!
//! A [`ScenarioConfig`] describes truth, filter assumptions and the
//! algorithms to compare; [`run_monte_carlo`] simulates and filters every
//! run; [`emit_report`] writes the JSON summary and CSV series.

pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod oracle;
pub mod report;
pub mod scenario;

pub use error::{BenchError, Result};
pub use metrics::{EstimateKind, RmseAccumulator, RmseReport};
pub use montecarlo::{run_monte_carlo, MonteCarloOptions, MonteCarloResult};
pub use report::{emit_report, Summary};
pub use scenario::{Algorithm, ScenarioConfig};
