//! Fixed-density samplers for the observables that are not monotone in the
//! occupation, chiefly cluster counts and the uniqueness proxy.

use rayon::prelude::*;

use crate::graph::SiteGraph;
use crate::rng::derive_seed;

use super::engine::{Engine, Prepared};
use super::estimate::Recipe;
use super::sweep::{chunk_ranges, SweepCurve, SweepPoint};
use super::{check_probability, sample_sites, with_threads, Observable, PercolationError};

/// Histogram of an integer observable: `counts[k]` trials gave the value `k`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CountDistribution {
    pub counts: Vec<u64>,
}

impl CountDistribution {
    fn add(&mut self, k: usize) {
        if self.counts.len() <= k {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
    }

    /// Sum of two histograms.
    pub fn combined(mut self, other: CountDistribution) -> Self {
        for (k, &c) in other.counts.iter().enumerate() {
            if c > 0 {
                if self.counts.len() <= k {
                    self.counts.resize(k + 1, 0);
                }
                self.counts[k] += c;
            }
        }
        self
    }

    pub fn trials(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let t = self.trials();
        if t == 0 {
            return 0.0;
        }
        self.counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / t as f64
    }

    pub fn stderr(&self) -> f64 {
        let t = self.trials() as f64;
        if t < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let var = self.counts.iter().enumerate().map(|(k, &c)| c as f64 * (k as f64 - m).powi(2)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt()
    }

    /// Share of trials with a value of at least `k`.
    pub fn at_least(&self, k: usize) -> f64 {
        let t = self.trials();
        if t == 0 {
            return 0.0;
        }
        self.counts.iter().skip(k).sum::<u64>() as f64 / t as f64
    }
}

/// Uniqueness proxy at one size.
#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport {
    pub size: usize,
    /// Single point: share of trials with at most one proxy cluster among
    /// those with at least one. Its `trials` is the number of such trials.
    pub curve: SweepCurve,
    /// Share of all trials with at least one proxy cluster.
    pub at_least_one: f64,
    /// Distribution of the number of proxy clusters.
    pub distribution: CountDistribution,
}

/// Per-trial quantities measured on one sampled configuration.
#[derive(Clone, Copy, Debug)]
struct TrialValues {
    wrapped: bool,
    crossed: bool,
    max_size: u32,
    inner_boundary: u32,
    proxies: usize,
}

fn fixed_p_values(g: &SiteGraph, prep: &Prepared, p: f64, trials: u64, seed: u64, threads: usize) -> Vec<TrialValues> {
    let chunks = chunk_ranges(trials);
    let parts: Vec<Vec<TrialValues>> = with_threads(threads, || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut engine = Engine::new(g, prep);
                (lo..hi)
                    .map(|t| {
                        engine.reset();
                        let config = sample_sites(g, p, seed, t);
                        for v in (0..g.vertex_count()).filter(|&v| config.state(v)) {
                            engine.activate(v);
                        }
                        TrialValues {
                            wrapped: engine.wrapped,
                            crossed: engine.crossed,
                            max_size: engine.max_size,
                            inner_boundary: engine.inner_boundary,
                            proxies: engine.proxy_roots().len(),
                        }
                    })
                    .collect()
            })
            .collect()
    });
    parts.into_iter().flatten().collect()
}

fn uniqueness_point(p: f64, dist: &CountDistribution) -> SweepPoint {
    let with_one = dist.trials() - dist.counts.first().copied().unwrap_or(0);
    let exactly_one = dist.counts.get(1).copied().unwrap_or(0);
    if with_one == 0 {
        // no proxy cluster at all: the condition is vacuous
        return SweepPoint {
            p,
            mean: 1.0,
            stderr: 0.0,
            trials: dist.trials(),
        };
    }
    let m = exactly_one as f64 / with_one as f64;
    SweepPoint {
        p,
        mean: m,
        stderr: (m * (1.0 - m) / with_one as f64).sqrt(),
        trials: with_one,
    }
}

/// Estimates `observable` at a single density by direct sampling.
pub fn sample_observable(
    graph: &SiteGraph,
    observable: Observable,
    p: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<SweepPoint, PercolationError> {
    check_probability(p)?;
    if trials == 0 {
        return Err(PercolationError::BadParameter("trials must be positive".into()));
    }
    let prep = Prepared::new(graph, None);
    prep.supports(graph, observable)?;
    let values = fixed_p_values(graph, &prep, p, trials, seed, threads);
    if observable == Observable::UniquenessFraction {
        let mut dist = CountDistribution::default();
        values.iter().for_each(|v| dist.add(v.proxies));
        return Ok(uniqueness_point(p, &dist));
    }
    let n = graph.vertex_count() as f64;
    let xs: Vec<f64> = values
        .iter()
        .map(|v| match observable {
            Observable::WrapProbability => v.wrapped as u8 as f64,
            Observable::CrossProbability => v.crossed as u8 as f64,
            Observable::MaxClusterFraction => v.max_size as f64 / n,
            _ => v.inner_boundary as f64,
        })
        .collect();
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    Ok(SweepPoint {
        p,
        mean,
        stderr: (var / t).sqrt(),
        trials,
    })
}

/// Number of distinct open clusters meeting both the inner ball (half the
/// root-to-boundary distance) and the boundary.
pub fn boundary_cluster_count(
    graph: &SiteGraph,
    p: f64,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<(SweepPoint, CountDistribution), PercolationError> {
    check_probability(p)?;
    if trials == 0 {
        return Err(PercolationError::BadParameter("trials must be positive".into()));
    }
    let prep = Prepared::new(graph, None);
    prep.supports(graph, Observable::BoundaryClusterCount)?;
    let dist = fixed_p_values(graph, &prep, p, trials, seed, threads)
        .iter()
        .fold(CountDistribution::default(), |mut d, v| {
            d.add(v.inner_boundary as usize);
            d
        });
    let point = SweepPoint {
        p,
        mean: dist.mean(),
        stderr: dist.stderr(),
        trials,
    };
    Ok((point, dist))
}

/// Uniqueness proxy of `recipe` at each size: torus graphs count wrapping
/// clusters, patches count clusters joining the inner ball to the boundary.
pub fn uniqueness_fraction(
    recipe: &Recipe,
    p: f64,
    trials: u64,
    sizes: &[usize],
    seed: u64,
    threads: usize,
) -> Result<Vec<UniquenessReport>, PercolationError> {
    check_probability(p)?;
    if trials == 0 {
        return Err(PercolationError::BadParameter("trials must be positive".into()));
    }
    sizes
        .iter()
        .map(|&size| {
            let g = recipe.build(size)?;
            let prep = Prepared::new(&g, None);
            if !prep.periodic {
                prep.supports(&g, Observable::BoundaryClusterCount)?;
            }
            let size_seed = derive_seed(seed, size as u64);
            let dist = fixed_p_values(&g, &prep, p, trials, size_seed, threads)
                .iter()
                .fold(CountDistribution::default(), |mut d, v| {
                    d.add(v.proxies);
                    d
                });
            Ok(UniquenessReport {
                size,
                curve: SweepCurve {
                    observable: Observable::UniquenessFraction,
                    label: g.label().to_string(),
                    seed: size_seed,
                    points: vec![uniqueness_point(p, &dist)],
                },
                at_least_one: dist.at_least(1),
                distribution: dist,
            })
        })
        .collect()
}
