//! Evolutionary optimization for stochastic programming.
//!
//! One generic elitist evolutionary engine ([`ea`]) drives three solvers:
//!
//! - [`portfolio`]: single-stage risk–return portfolio selection with a
//!   two-part (bucket + selection) genotype,
//! - [`cluster`]: single-stage scenario generation by evolutionary clustering,
//! - [`tree`]: multi-stage scenario tree generation from sampled paths.
//!
//! [`distributions`] holds the discrete probability objects they share,
//! [`risk`] the probability functionals, and [`io`] the CSV/JSON/DOT formats.

pub mod cluster;
pub mod distributions;
pub mod ea;
pub mod error;
pub mod io;
pub mod metric;
pub mod portfolio;
pub mod risk;
pub mod tree;

pub use distributions::{
    loss_distribution, LossDistribution, ScenarioPathMatrix, ScenarioSet, ScenarioTree, TreeNode,
};
pub use ea::{Direction, EaConfig, Fitness, GenerationRecord, Individual, Problem};
pub use error::{Error, Result};
pub use metric::{Center, Distance};
pub use risk::{ObjectiveSpec, RiskMeasure};
