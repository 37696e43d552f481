//! Monte Carlo site percolation: sampling, Newman–Ziff sweeps, threshold
//! estimation and cluster-count observables.

mod circuit;
mod engine;
mod estimate;
mod observables;
mod sweep;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::duality::SiteConfig;
use crate::graph::SiteGraph;
use crate::matching::MatchingError;
use crate::rng::trial_rng;
use crate::tilings::TilingError;

pub use circuit::{blocking_circuit_check, exhaustive_circuit_check, CircuitContext, CircuitOutcome, CircuitSummary};
pub use estimate::{estimate_pc, EstimateOptions, GraphRecipe, Method, Recipe, ThresholdEstimate};
pub use observables::{boundary_cluster_count, sample_observable, uniqueness_fraction, CountDistribution, UniquenessReport};
pub use sweep::{newman_ziff_sweep, parse_grid, write_curve_csv, SweepCurve, SweepPoint};

#[derive(Debug, Error)]
pub enum PercolationError {
    #[error("observable {observable} is not supported on {reason}")]
    UnsupportedObservable { observable: Observable, reason: String },
    #[error("curves do not cross: {0}")]
    CurvesDoNotCross(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Tiling(#[from] TilingError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    /// Some open cluster wraps the torus in some direction.
    WrapProbability,
    /// An open cluster joins the two sides of a patch, or the root to the
    /// boundary when the patch has no sides.
    CrossProbability,
    /// Size of the largest open cluster over the number of vertices.
    MaxClusterFraction,
    /// Open clusters meeting both the inner ball around the root and the
    /// boundary.
    BoundaryClusterCount,
    /// Share of trials whose unbounded-proxy clusters are at most one,
    /// among trials with at least one.
    UniquenessFraction,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::WrapProbability => "WRAP_PROBABILITY",
            Observable::CrossProbability => "CROSS_PROBABILITY",
            Observable::MaxClusterFraction => "MAX_CLUSTER_FRACTION",
            Observable::BoundaryClusterCount => "BOUNDARY_CLUSTER_COUNT",
            Observable::UniquenessFraction => "UNIQUENESS_FRACTION",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = PercolationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        [
            Observable::WrapProbability,
            Observable::CrossProbability,
            Observable::MaxClusterFraction,
            Observable::BoundaryClusterCount,
            Observable::UniquenessFraction,
        ]
        .into_iter()
        .find(|o| o.name() == norm || o.name().split('_').next() == Some(norm.as_str()))
        .ok_or_else(|| PercolationError::BadParameter(format!("unknown observable `{s}`")))
    }
}

/// Independent site states with density `p`; forced vertices keep their
/// state and consume no randomness. Deterministic in `(seed, trial)`.
pub fn sample_sites(graph: &SiteGraph, p: f64, seed: u64, trial: u64) -> SiteConfig {
    let mut rng = trial_rng(seed, trial);
    let states = graph
        .forced_states()
        .iter()
        .map(|f| f.unwrap_or_else(|| rng.random::<f64>() < p))
        .collect();
    SiteConfig::new(states, graph.forced_states().to_vec()).expect("forced states are respected")
}

/// Runs `f` on a pool of `threads` workers (at least one).
pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

pub(crate) fn check_probability(p: f64) -> Result<(), PercolationError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(PercolationError::BadParameter(format!("p = {p} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{generate, Family, TilingSpec};

    #[test]
    fn sampling_extremes_and_density() {
        let m = generate(&TilingSpec::torus(Family::Square, 10)).unwrap();
        let mut g = SiteGraph::from_map(&m);
        g.set_forced(0, Some(false));
        let all = sample_sites(&g, 1.0, 3, 0);
        assert_eq!(all.open_count(), 99);
        let none = sample_sites(&g, 0.0, 3, 0);
        assert_eq!(none.open_count(), 0);
        assert_eq!(sample_sites(&g, 0.4, 3, 5), sample_sites(&g, 0.4, 3, 5));
    }

    #[test]
    fn observable_names_parse() {
        assert_eq!("wrap".parse::<Observable>().unwrap(), Observable::WrapProbability);
        assert_eq!(
            "boundary-cluster-count".parse::<Observable>().unwrap(),
            Observable::BoundaryClusterCount
        );
        assert!("nope".parse::<Observable>().is_err());
    }
}
