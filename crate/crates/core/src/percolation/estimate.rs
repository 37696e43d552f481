//! Threshold estimates from finite-size data.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::graph::SiteGraph;
use crate::matching::{hatted_graphs, FaceClass, FacePartition, PartitionStrategy};
use crate::rng::{aux_rng, derive_seed};
use crate::tilings::{generate, Boundary, Family, TilingSpec};

use super::engine::{Engine, Prepared};
use super::sweep::{cumulative, run_canonical, trial_order, Binomial, Canonical, SweepCurve};
use super::{with_threads, Observable, PercolationError};

/// Which graph to build from a tiling at a given size.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphRecipe {
    /// The tiling itself.
    Base,
    /// One of the two hatted graphs of a face partition, with its facial
    /// sites forced open.
    Hatted { strategy: PartitionStrategy, class: FaceClass },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub family: Family,
    pub boundary: Boundary,
    pub graph: GraphRecipe,
}

impl Recipe {
    pub fn base(family: Family, boundary: Boundary) -> Self {
        Recipe {
            family,
            boundary,
            graph: GraphRecipe::Base,
        }
    }

    pub fn hatted(family: Family, strategy: PartitionStrategy, class: FaceClass) -> Self {
        Recipe {
            family,
            boundary: Boundary::Torus,
            graph: GraphRecipe::Hatted { strategy, class },
        }
    }

    pub fn spec(&self, size: usize) -> TilingSpec {
        TilingSpec {
            family: self.family,
            size,
            size2: None,
            boundary: self.boundary,
        }
    }

    pub fn build(&self, size: usize) -> Result<SiteGraph, PercolationError> {
        let map = generate(&self.spec(size))?;
        let mut g = match &self.graph {
            GraphRecipe::Base => SiteGraph::from_map(&map),
            GraphRecipe::Hatted { strategy, class } => {
                let partition = FacePartition::with_strategy(&map, strategy)?;
                let (g1, g2) = hatted_graphs(&map, &partition)?;
                match class {
                    FaceClass::F1 => g1.percolation_graph(),
                    FaceClass::F2 => g2.percolation_graph(),
                }
            }
        };
        g.set_label(format!("{} {}", self, size));
        Ok(g)
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.graph {
            GraphRecipe::Base => write!(f, "{} {}", self.family, self.boundary),
            GraphRecipe::Hatted { strategy, class } => {
                write!(f, "{} {} hat-G{} {}", self.family, self.boundary, class, strategy)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Crossing of the wrapping-probability curves of two torus sizes.
    WrapCrossing,
    /// Point where the expected number of sphere vertices joined to the
    /// root stops decaying between two radii.
    SizeScaling,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::WrapCrossing => "WRAP_CROSSING",
            Method::SizeScaling => "SIZE_SCALING",
        })
    }
}

impl FromStr for Method {
    type Err = PercolationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "WRAP_CROSSING" | "WRAP" => Ok(Method::WrapCrossing),
            "SIZE_SCALING" | "SIZE" => Ok(Method::SizeScaling),
            _ => Err(PercolationError::BadParameter(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateOptions {
    pub method: Method,
    /// Bootstrap resamples behind the half-width.
    pub bootstrap: usize,
    /// Extra layers grown beyond the outer radius for SIZE_SCALING, so the
    /// outer sphere is not the boundary of the graph.
    pub margin: usize,
    pub threads: usize,
    /// Grid on which the per-size curves are reported.
    pub report_grid: Vec<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            method: Method::WrapCrossing,
            bootstrap: 1000,
            margin: 0,
            threads: 1,
            report_grid: (0..=100).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdEstimate {
    pub p_c: f64,
    /// Half-width of the 95% interval.
    pub half_width: f64,
    pub method: Method,
    pub sizes: Vec<usize>,
    /// Trials over all sizes.
    pub trials: u64,
    pub seed: u64,
    /// Crossing of every pair of successive sizes; the estimate is the last.
    pub pair_crossings: Vec<(usize, usize, f64)>,
    /// Wrapping curve of each size on the report grid (WRAP_CROSSING only).
    pub curves: Vec<SweepCurve>,
}

const BISECTIONS: usize = 50;
const Z95: f64 = 1.96;

/// Root of `d` in `[lo, hi]`, given a sign change there.
fn bisect(d: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = d(lo) < 0.0;
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if (d(mid) < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upward sign changes of `d` (from negative to non-negative) on a grid,
/// restricted to points where `valid` holds.
fn sign_changes(d: &impl Fn(f64) -> f64, valid: &impl Fn(f64) -> bool, lo: f64, hi: f64, step: f64) -> Vec<(f64, f64)> {
    let count = ((hi - lo) / step).ceil() as usize;
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=count {
        let p = (lo + i as f64 * step).min(hi);
        if !valid(p) {
            prev = None;
            continue;
        }
        let v = d(p);
        if let Some((q, w)) = prev {
            if w < 0.0 && v >= 0.0 {
                out.push((q, p));
            }
        }
        prev = Some((p, v));
    }
    out
}

fn spread(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    if values.len() < 2 {
        return f64::EPSILON;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt().max(f64::EPSILON)
}

/// Estimates the site threshold of `recipe` from the given sizes (torus
/// sides for WRAP_CROSSING, the two radii for SIZE_SCALING).
pub fn estimate_pc(
    recipe: &Recipe,
    sizes: &[usize],
    trials: u64,
    seed: u64,
    options: &EstimateOptions,
) -> Result<ThresholdEstimate, PercolationError> {
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(PercolationError::BadParameter("at least two distinct sizes are needed".into()));
    }
    if trials < 2 {
        return Err(PercolationError::BadParameter("at least two trials per size are needed".into()));
    }
    match options.method {
        Method::WrapCrossing => wrap_crossing(recipe, &sizes, trials, seed, options),
        Method::SizeScaling => size_scaling(recipe, &sizes, trials, seed, options),
    }
}

struct WrapData {
    first: Vec<u32>,
    n_free: usize,
    binomial: Binomial,
}

impl WrapData {
    fn curve(&self, first: &[u32]) -> impl Fn(f64) -> f64 + '_ {
        let cum = cumulative(first, self.n_free);
        move |p| self.binomial.convolve(p, |n| cum[n])
    }
}

fn crossing(
    small: &dyn Fn(f64) -> f64,
    big: &dyn Fn(f64) -> f64,
    window: (f64, f64),
    step: f64,
    near: Option<f64>,
) -> Option<f64> {
    let d = |p: f64| big(p) - small(p);
    let inside = |p: f64| {
        let (a, b) = (small(p), big(p));
        a > 0.02 && a < 0.98 && b > 0.02 && b < 0.98
    };
    let changes = sign_changes(&d, &inside, window.0, window.1, step);
    // the change closest to where the larger system sits at one half
    let target = near.unwrap_or_else(|| bisect(&|p| big(p) - 0.5, 0.0, 1.0));
    changes
        .into_iter()
        .map(|(lo, hi)| bisect(&d, lo, hi))
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

fn wrap_crossing(
    recipe: &Recipe,
    sizes: &[usize],
    trials: u64,
    seed: u64,
    options: &EstimateOptions,
) -> Result<ThresholdEstimate, PercolationError> {
    let mut data = Vec::new();
    let mut curves = Vec::new();
    for &size in sizes {
        let g = recipe.build(size)?;
        let prep = Prepared::new(&g, None);
        prep.supports(&g, Observable::WrapProbability)?;
        let size_seed = derive_seed(seed, size as u64);
        let canonical = run_canonical(&g, &prep, Observable::WrapProbability, trials, size_seed, options.threads);
        let binomial = Binomial::new(canonical.n_free);
        curves.push(SweepCurve {
            observable: Observable::WrapProbability,
            label: g.label().to_string(),
            seed: size_seed,
            points: options.report_grid.iter().map(|&p| canonical.point(&binomial, p)).collect(),
        });
        let Canonical::Threshold { first } = canonical.data else {
            unreachable!("wrapping is a threshold observable")
        };
        data.push(WrapData {
            first,
            n_free: canonical.n_free,
            binomial,
        });
    }

    let mut pair_crossings = Vec::new();
    for (i, pair) in data.windows(2).enumerate() {
        let small = pair[0].curve(&pair[0].first);
        let big = pair[1].curve(&pair[1].first);
        let p = crossing(&small, &big, (0.0, 1.0), 0.002, None).ok_or_else(|| {
            PercolationError::CurvesDoNotCross(format!(
                "{recipe}: sizes {} and {} with {trials} trials",
                sizes[i],
                sizes[i + 1]
            ))
        })?;
        pair_crossings.push((sizes[i], sizes[i + 1], p));
    }
    let p_c = pair_crossings.last().expect("two sizes").2;

    let (small, big) = (&data[data.len() - 2], &data[data.len() - 1]);
    let resample = |d: &WrapData, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<u32> {
        (0..d.first.len()).map(|_| d.first[rng.random_range(0..d.first.len())]).collect()
    };
    let estimates: Vec<f64> = with_threads(options.threads, || {
        (0..options.bootstrap as u64)
            .into_par_iter()
            .filter_map(|b| {
                let mut rng = aux_rng(seed, 1, b);
                let fs = resample(small, &mut rng);
                let fb = resample(big, &mut rng);
                let (cs, cb) = (small.curve(&fs), big.curve(&fb));
                crossing(&cs, &cb, ((p_c - 0.05).max(0.0), (p_c + 0.05).min(1.0)), 0.001, Some(p_c))
            })
            .collect()
    });
    Ok(ThresholdEstimate {
        p_c,
        half_width: Z95 * spread(&estimates),
        method: Method::WrapCrossing,
        sizes: sizes.to_vec(),
        trials: trials * sizes.len() as u64,
        seed,
        pair_crossings,
        curves,
    })
}

const SCALING_BATCHES: u64 = 50;

fn size_scaling(
    recipe: &Recipe,
    sizes: &[usize],
    trials: u64,
    seed: u64,
    options: &EstimateOptions,
) -> Result<ThresholdEstimate, PercolationError> {
    let (r1, r2) = (sizes[0], sizes[sizes.len() - 1]);
    let g = recipe.build(r2 + options.margin)?;
    if g.root().is_none() {
        return Err(PercolationError::UnsupportedObservable {
            observable: Observable::CrossProbability,
            reason: "a graph without a root".into(),
        });
    }
    let prep = Prepared::new(&g, Some((r1, r2)));
    let n_free = prep.free.len();
    let batches = SCALING_BATCHES.min(trials);
    let batch_sums: Vec<Vec<[u64; 2]>> = with_threads(options.threads, || {
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut sums = vec![[0u64; 2]; n_free + 1];
                let mut engine = Engine::new(&g, &prep);
                for t in b * trials / batches..(b + 1) * trials / batches {
                    engine.reset();
                    for &v in &prep.forced_open {
                        engine.activate(v);
                    }
                    let mut record = |n: usize, e: &mut Engine| {
                        let [a, c] = e.root_spheres();
                        sums[n][0] += a as u64;
                        sums[n][1] += c as u64;
                    };
                    record(0, &mut engine);
                    for (i, v) in trial_order(&prep, seed, t).into_iter().enumerate() {
                        engine.activate(v);
                        record(i + 1, &mut engine);
                    }
                }
                sums
            })
            .collect()
    });
    let binomial = Binomial::new(n_free);
    let estimate = |weights: &[u64]| -> Option<f64> {
        let mut total = vec![[0u64; 2]; n_free + 1];
        for (b, &w) in weights.iter().enumerate() {
            for (acc, s) in total.iter_mut().zip(&batch_sums[b]) {
                acc[0] += w * s[0];
                acc[1] += w * s[1];
            }
        }
        let inner = |p: f64| binomial.convolve(p, |n| total[n][0] as f64);
        let outer = |p: f64| binomial.convolve(p, |n| total[n][1] as f64);
        let d = |p: f64| outer(p) - inner(p);
        let valid = |p: f64| inner(p) > 0.0;
        sign_changes(&d, &valid, 0.005, 0.995, 0.005)
            .first()
            .map(|&(lo, hi)| bisect(&d, lo, hi))
    };
    let p_c = estimate(&vec![1; batches as usize])
        .ok_or_else(|| PercolationError::CurvesDoNotCross(format!("{recipe}: radii {r1} and {r2} with {trials} trials")))?;
    let estimates: Vec<f64> = with_threads(options.threads, || {
        (0..options.bootstrap as u64)
            .into_par_iter()
            .filter_map(|b| {
                let mut rng = aux_rng(seed, 2, b);
                let mut weights = vec![0u64; batches as usize];
                for _ in 0..batches {
                    weights[rng.random_range(0..batches as usize)] += 1;
                }
                estimate(&weights)
            })
            .collect()
    });
    Ok(ThresholdEstimate {
        p_c,
        half_width: Z95 * spread(&estimates),
        method: Method::SizeScaling,
        sizes: vec![r1, r2],
        trials,
        seed,
        pair_crossings: vec![(r1, r2, p_c)],
        curves: Vec::new(),
    })
}
