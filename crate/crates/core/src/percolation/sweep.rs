//! Newman–Ziff sweeps: each trial switches the free vertices on in a random
//! order and records the observable after every step; averaging over trials
//! gives the observable at fixed occupation `n`, and binomial weights turn
//! that into a curve in `p`.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::graph::SiteGraph;
use crate::rng::trial_rng;

use super::engine::{Engine, Prepared};
use super::{check_probability, with_threads, Observable, PercolationError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Observable against `p`, with `p` strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCurve {
    pub observable: Observable,
    /// Description of the graph the curve was measured on.
    pub label: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

pub(crate) const CHUNK: u64 = 32;

/// Per-occupation statistics of one observable over all trials.
#[derive(Clone, Debug)]
pub(crate) enum Canonical {
    /// Step at which the event first holds in each trial, in trial order;
    /// `n_free + 1` when it never does.
    Threshold { first: Vec<u32> },
    /// Sums of the value and of its square at each step.
    Values { sum: Vec<u64>, sumsq: Vec<u128>, scale: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct CanonicalData {
    pub n_free: usize,
    pub trials: u64,
    pub data: Canonical,
}

/// Shuffled activation order of the free vertices for one trial.
pub(crate) fn trial_order(prep: &Prepared, seed: u64, trial: u64) -> Vec<usize> {
    let mut order = prep.free.clone();
    order.shuffle(&mut trial_rng(seed, trial));
    order
}

pub(crate) fn chunk_ranges(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(trials)))
        .collect()
}

pub(crate) fn run_canonical(
    g: &SiteGraph,
    prep: &Prepared,
    observable: Observable,
    trials: u64,
    seed: u64,
    threads: usize,
) -> CanonicalData {
    let n_free = prep.free.len();
    let threshold = matches!(observable, Observable::WrapProbability | Observable::CrossProbability);
    let chunks = chunk_ranges(trials);
    let parts: Vec<Canonical> = with_threads(threads, || {
        chunks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut engine = Engine::new(g, prep);
                let mut first = Vec::new();
                let mut sum = vec![0u64; n_free + 1];
                let mut sumsq = vec![0u128; n_free + 1];
                for t in lo..hi {
                    engine.reset();
                    for &v in &prep.forced_open {
                        engine.activate(v);
                    }
                    let order = trial_order(prep, seed, t);
                    if threshold {
                        let hit = |e: &Engine| match observable {
                            Observable::WrapProbability => e.wrapped,
                            _ => e.crossed,
                        };
                        let mut at = if hit(&engine) { Some(0) } else { None };
                        for (i, &v) in order.iter().enumerate() {
                            if at.is_some() {
                                break;
                            }
                            engine.activate(v);
                            if hit(&engine) {
                                at = Some(i + 1);
                            }
                        }
                        first.push(at.unwrap_or(n_free + 1) as u32);
                    } else {
                        let value = |e: &Engine| match observable {
                            Observable::MaxClusterFraction => e.max_size as u64,
                            _ => e.inner_boundary as u64,
                        };
                        let mut record = |n: usize, x: u64| {
                            sum[n] += x;
                            sumsq[n] += (x as u128) * (x as u128);
                        };
                        record(0, value(&engine));
                        for (i, &v) in order.iter().enumerate() {
                            engine.activate(v);
                            record(i + 1, value(&engine));
                        }
                    }
                }
                if threshold {
                    Canonical::Threshold { first }
                } else {
                    Canonical::Values { sum, sumsq, scale: 1.0 }
                }
            })
            .collect()
    });
    let scale = match observable {
        Observable::MaxClusterFraction => g.vertex_count() as f64,
        _ => 1.0,
    };
    let data = parts
        .into_iter()
        .reduce(|a, b| match (a, b) {
            (Canonical::Threshold { mut first }, Canonical::Threshold { first: more }) => {
                first.extend(more);
                Canonical::Threshold { first }
            }
            (Canonical::Values { mut sum, mut sumsq, .. }, Canonical::Values { sum: s2, sumsq: q2, .. }) => {
                sum.iter_mut().zip(s2).for_each(|(a, b)| *a += b);
                sumsq.iter_mut().zip(q2).for_each(|(a, b)| *a += b);
                Canonical::Values { sum, sumsq, scale }
            }
            _ => unreachable!("all chunks record the same kind"),
        })
        .map(|d| match d {
            Canonical::Values { sum, sumsq, .. } => Canonical::Values { sum, sumsq, scale },
            other => other,
        })
        .unwrap_or(Canonical::Values {
            sum: vec![0; n_free + 1],
            sumsq: vec![0; n_free + 1],
            scale,
        });
    CanonicalData { n_free, trials, data }
}

/// Binomial weights `C(N, n) p^n (1-p)^(N-n)`, computed in log space over
/// a window around the mode.
#[derive(Clone, Debug)]
pub(crate) struct Binomial {
    n: usize,
    ln_fact: Vec<f64>,
}

impl Binomial {
    pub fn new(n: usize) -> Self {
        let mut ln_fact = vec![0.0; n + 1];
        for k in 1..=n {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        Binomial { n, ln_fact }
    }

    /// First index and weights of the window.
    pub fn weights(&self, p: f64) -> (usize, Vec<f64>) {
        let n = self.n;
        if p <= 0.0 {
            return (0, vec![1.0]);
        }
        if p >= 1.0 {
            return (n, vec![1.0]);
        }
        let mean = n as f64 * p;
        let sd = (mean * (1.0 - p)).sqrt();
        let half = 12.0 * sd + 10.0;
        let lo = (mean - half).floor().max(0.0) as usize;
        let hi = ((mean + half).ceil() as usize).min(n);
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let weights = (lo..=hi)
            .map(|k| {
                let ln_w = self.ln_fact[n] - self.ln_fact[k] - self.ln_fact[n - k] + k as f64 * lp + (n - k) as f64 * lq;
                ln_w.exp()
            })
            .collect();
        (lo, weights)
    }

    pub fn convolve(&self, p: f64, f: impl Fn(usize) -> f64) -> f64 {
        let (lo, w) = self.weights(p);
        w.iter().enumerate().map(|(i, &w)| w * f(lo + i)).sum()
    }
}

/// Fraction of trials whose event has happened by step `n`, for every `n`.
pub(crate) fn cumulative(first: &[u32], n_free: usize) -> Vec<f64> {
    let mut counts = vec![0u64; n_free + 2];
    for &f in first {
        counts[f as usize] += 1;
    }
    let t = first.len().max(1) as f64;
    let mut acc = 0u64;
    (0..=n_free)
        .map(|n| {
            acc += counts[n];
            acc as f64 / t
        })
        .collect()
}

impl CanonicalData {
    pub fn point(&self, binomial: &Binomial, p: f64) -> SweepPoint {
        let t = self.trials as f64;
        let (mean, stderr) = match &self.data {
            Canonical::Threshold { first } => {
                let cum = cumulative(first, self.n_free);
                let m = binomial.convolve(p, |n| cum[n]).clamp(0.0, 1.0);
                (m, (m * (1.0 - m) / t).sqrt())
            }
            Canonical::Values { sum, sumsq, scale } => {
                let m = binomial.convolve(p, |n| sum[n] as f64 / t / scale);
                let s2 = binomial.convolve(p, |n| sumsq[n] as f64 / t / (scale * scale));
                (m, ((s2 - m * m).max(0.0) / t).sqrt())
            }
        };
        SweepPoint {
            p,
            mean,
            stderr,
            trials: self.trials,
        }
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<(), PercolationError> {
    if grid.is_empty() {
        return Err(PercolationError::BadParameter("empty p grid".into()));
    }
    for &p in grid {
        check_probability(p)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PercolationError::BadParameter("p grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Newman–Ziff sweep of `observable` over `trials` random orders.
pub fn newman_ziff_sweep(
    graph: &SiteGraph,
    trials: u64,
    observable: Observable,
    grid: &[f64],
    seed: u64,
    threads: usize,
) -> Result<SweepCurve, PercolationError> {
    check_grid(grid)?;
    if trials == 0 {
        return Err(PercolationError::BadParameter("trials must be positive".into()));
    }
    if observable == Observable::UniquenessFraction {
        return Err(PercolationError::UnsupportedObservable {
            observable,
            reason: "a sweep; use uniqueness_fraction at fixed p".into(),
        });
    }
    let prep = Prepared::new(graph, None);
    prep.supports(graph, observable)?;
    let data = run_canonical(graph, &prep, observable, trials, seed, threads);
    let binomial = Binomial::new(data.n_free);
    Ok(SweepCurve {
        observable,
        label: graph.label().to_string(),
        seed,
        points: grid.iter().map(|&p| data.point(&binomial, p)).collect(),
    })
}

/// `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, PercolationError> {
    let bad = || PercolationError::BadParameter(format!("bad p grid `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    check_grid(&grid)?;
    Ok(grid)
}

/// CSV with a `#` header block, then `p,mean,stderr,trials`.
pub fn write_curve_csv(curve: &SweepCurve, header: &[(&str, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# observable: {}", curve.observable);
    let _ = writeln!(out, "# graph: {}", curve.label);
    let _ = writeln!(out, "# seed: {}", curve.seed);
    let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in header {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("p,mean,stderr,trials\n");
    for pt in &curve.points {
        let _ = writeln!(out, "{:.6},{:.9},{:.9},{}", pt.p, pt.mean, pt.stderr, pt.trials);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilings::{generate, Family, TilingSpec};

    #[test]
    fn binomial_weights_sum_to_one() {
        let b = Binomial::new(5000);
        for p in [0.01, 0.3, 0.5, 0.97] {
            let (_, w) = b.weights(p);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-9, "p={p}: {s}");
        }
        assert_eq!(b.weights(0.0), (0, vec![1.0]));
        assert_eq!(b.weights(1.0), (5000, vec![1.0]));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().len(), 3);
        assert_eq!(parse_grid("0.2,0.4").unwrap(), vec![0.2, 0.4]);
        assert!(parse_grid("0.4,0.2").is_err());
        assert!(parse_grid("0:2:0.5").is_err());
    }

    #[test]
    fn wrap_curve_endpoints_and_monotone() {
        let g = SiteGraph::from_map(&generate(&TilingSpec::torus(Family::Triangular, 8)).unwrap());
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let c = newman_ziff_sweep(&g, 200, Observable::WrapProbability, &grid, 1, 1).unwrap();
        assert_eq!(c.points[0].mean, 0.0);
        assert_eq!(c.points[20].mean, 1.0);
        assert!(c.points.windows(2).all(|w| w[1].mean >= w[0].mean));
    }

    #[test]
    fn wrap_needs_a_torus() {
        let g = SiteGraph::from_map(&generate(&TilingSpec::free(Family::Square, 5)).unwrap());
        let err = newman_ziff_sweep(&g, 10, Observable::WrapProbability, &[0.5], 1, 1).unwrap_err();
        assert!(matches!(err, PercolationError::UnsupportedObservable { .. }));
    }
}
