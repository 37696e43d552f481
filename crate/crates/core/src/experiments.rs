//! Named experiments driven by TOML configs. Each run writes CSV tables
//! stamped with the config hash and seed, plus a plain-text summary.
//!
//! ```toml
//! experiment = "SUM_RULE"
//! seed = 7
//! output = "out/sum-rule"
//!
//! [tiling]
//! family = "square"
//! sizes = [32, 64]
//!
//! [partition]
//! strategies = ["all-f1"]
//!
//! [budget]
//! trials = 20000
//! threads = 4
//! ```

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::duality::{exhaustive_check, DualityContext, DualityError, ViolationKind};
use crate::graph::SiteGraph;
use crate::map::CombinatorialMap;
use crate::matching::{matching_graph, FaceClass, FacePartition, MatchingError, PartitionStrategy, TrianglePolicy};
use crate::percolation::{
    boundary_cluster_count, estimate_pc, exhaustive_circuit_check, sample_observable, uniqueness_fraction,
    write_curve_csv, CircuitContext, EstimateOptions, Method, Observable, PercolationError, Recipe, ThresholdEstimate,
};
use crate::rng::derive_seed;
use crate::tilings::{generate, Boundary, Family, TilingError, TilingSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{experiment}: {source}")]
    Percolation {
        experiment: ExperimentKind,
        source: PercolationError,
    },
    #[error("{experiment}: {source}")]
    Duality { experiment: ExperimentKind, source: DualityError },
    #[error("{experiment}: {source}")]
    Tiling { experiment: ExperimentKind, source: TilingError },
    #[error("{experiment}: {source}")]
    Matching { experiment: ExperimentKind, source: MatchingError },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentKind {
    SumRule,
    TriangulationIdentity,
    DualityExhaustive,
    HyperbolicNonuniqueness,
    EndsSanity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SumRule,
        ExperimentKind::TriangulationIdentity,
        ExperimentKind::DualityExhaustive,
        ExperimentKind::HyperbolicNonuniqueness,
        ExperimentKind::EndsSanity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SumRule => "SUM_RULE",
            ExperimentKind::TriangulationIdentity => "TRIANGULATION_IDENTITY",
            ExperimentKind::DualityExhaustive => "DUALITY_EXHAUSTIVE",
            ExperimentKind::HyperbolicNonuniqueness => "HYPERBOLIC_NONUNIQUENESS",
            ExperimentKind::EndsSanity => "ENDS_SANITY",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Registry entry: an experiment and the relation it checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExperimentInfo {
    pub kind: ExperimentKind,
    pub relation: &'static str,
}

/// Every experiment with the relation it exercises.
///
/// ```
/// use percoplane_core::experiments::{registry, ExperimentKind};
///
/// let names: Vec<&str> = registry().iter().map(|e| e.kind.name()).collect();
/// assert_eq!(
///     names,
///     [
///         "SUM_RULE",
///         "TRIANGULATION_IDENTITY",
///         "DUALITY_EXHAUSTIVE",
///         "HYPERBOLIC_NONUNIQUENESS",
///         "ENDS_SANITY",
///     ]
/// );
/// let relations: Vec<&str> = registry().iter().map(|e| e.relation).collect();
/// for needle in [
///     "thresholds of a matching pair sum to one",
///     "triangulation is its own matching graph",
///     "faces of the open subgraph",
///     "blocking circuit",
///     "infinitely many infinite clusters",
///     "below one half",
///     "ladder",
///     "tree",
/// ] {
///     assert!(relations.iter().any(|r| r.contains(needle)), "{needle}");
/// }
/// assert_eq!(registry().len(), ExperimentKind::ALL.len());
/// ```
pub fn registry() -> &'static [ExperimentInfo] {
    const REGISTRY: [ExperimentInfo; 5] = [
        ExperimentInfo {
            kind: ExperimentKind::SumRule,
            relation: "site thresholds of a matching pair sum to one (square lattice with its matching graph, \
                       and the pairs from mixed face partitions)",
        },
        ExperimentInfo {
            kind: ExperimentKind::TriangulationIdentity,
            relation: "a triangulation is its own matching graph, so its threshold is one half",
        },
        ExperimentInfo {
            kind: ExperimentKind::DualityExhaustive,
            relation: "faces of the open subgraph of the hatted graph correspond to dual components and to \
                       closed clusters of the other hatted graph, with matching cluster counts; on plane \
                       patches a blocking circuit of G1 exists iff no closed G2 path escapes",
        },
        ExperimentInfo {
            kind: ExperimentKind::HyperbolicNonuniqueness,
            relation: "on hyperbolic tilings with vertex degree at least seven there are infinitely many \
                       infinite clusters at one half, and the threshold lies below one half",
        },
        ExperimentInfo {
            kind: ExperimentKind::EndsSanity,
            relation: "two-ended graphs such as the ladder have threshold one; the regular tree has \
                       infinitely many ends and branching threshold 1/(degree - 1)",
        },
    ];
    &REGISTRY
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingSection {
    pub family: Option<String>,
    /// Torus sides, ball radii, ladder lengths or tree depths.
    pub sizes: Option<Vec<usize>>,
    pub boundary: Option<String>,
    /// Second torus side for rectangular tori.
    pub size2: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub strategies: Option<Vec<String>>,
    /// `all-f1` (default) or `follow`.
    pub triangles: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    pub trials: u64,
    pub threads: usize,
    pub bootstrap: usize,
    /// Largest vertex count enumerated exhaustively.
    pub max_vertices: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            trials: 20_000,
            threads: 1,
            bootstrap: 1000,
            max_vertices: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub sum_rule: f64,
    pub triangular_pc: f64,
    pub tree_pc: f64,
    /// Minimum share of ladder trials without a spanning cluster.
    pub ladder_no_span: f64,
    /// Minimum mean boundary cluster count at the largest radius.
    pub boundary_count: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sum_rule: 0.015,
            triangular_pc: 0.005,
            tree_pc: 0.02,
            ladder_no_span: 0.99,
            boundary_count: 1.5,
        }
    }
}

/// Experiment-specific knobs; unset values fall back to the experiment's
/// defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Density for the fixed-p observables.
    pub p: Option<f64>,
    /// Radius of the ball cut off by blocking circuits.
    pub ball_radius: Option<usize>,
    /// Inner and outer radius for SIZE_SCALING.
    pub scaling_radii: Option<Vec<usize>>,
    /// Layers grown beyond the outer SIZE_SCALING radius.
    pub margin: Option<usize>,
    /// Torus sides on which the matching graph is compared with its input.
    pub identity_sizes: Option<Vec<usize>>,
    pub ladder_length: Option<usize>,
    pub tree_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub tiling: TilingSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Hex SHA-256 of the canonical serialization, leaving out the output
    /// directory and the thread count, neither of which affects results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        canonical.budget.threads = 0;
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.budget.trials == 0 || self.budget.bootstrap == 0 || self.budget.max_vertices == 0 {
            return bad("budget values must be positive".into());
        }
        if let Some(sizes) = &self.tiling.sizes {
            if sizes.is_empty() || sizes.contains(&0) {
                return bad("sizes must be a non-empty list of positive integers".into());
            }
        }
        if let Some(p) = self.params.p {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p = {p} outside [0, 1]"));
            }
        }
        self.family()?;
        self.boundary()?;
        self.strategies()?;
        self.triangle_policy()?;
        Ok(())
    }

    fn default_family(&self) -> Family {
        match self.experiment {
            ExperimentKind::TriangulationIdentity => Family::Triangular,
            ExperimentKind::HyperbolicNonuniqueness => Family::Hyperbolic { p: 3, q: 7 },
            _ => Family::Square,
        }
    }

    pub fn family(&self) -> Result<Family, ExperimentError> {
        match &self.tiling.family {
            Some(f) => f.parse().map_err(|e: TilingError| ExperimentError::Config(e.to_string())),
            None => Ok(self.default_family()),
        }
    }

    pub fn boundary(&self) -> Result<Boundary, ExperimentError> {
        match &self.tiling.boundary {
            Some(b) => b.parse().map_err(|e: TilingError| ExperimentError::Config(e.to_string())),
            None => Ok(Boundary::Torus),
        }
    }

    pub fn strategies(&self) -> Result<Vec<PartitionStrategy>, ExperimentError> {
        let default: &[&str] = match self.experiment {
            ExperimentKind::DualityExhaustive => &["all-f1", "all-f2", "checkerboard"],
            _ => &["all-f1"],
        };
        let names: Vec<String> = match &self.partition.strategies {
            Some(list) => list.clone(),
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        names
            .iter()
            .map(|s| s.parse().map_err(|e: MatchingError| ExperimentError::Config(e.to_string())))
            .collect()
    }

    pub fn triangle_policy(&self) -> Result<TrianglePolicy, ExperimentError> {
        match self.partition.triangles.as_deref() {
            None | Some("all-f1") => Ok(TrianglePolicy::AllF1),
            Some("follow") => Ok(TrianglePolicy::FollowStrategy),
            Some(other) => Err(ExperimentError::Config(format!("unknown triangle policy `{other}`"))),
        }
    }

    fn sizes_or(&self, default: &[usize]) -> Vec<usize> {
        self.tiling.sizes.clone().unwrap_or_else(|| default.to_vec())
    }
}

/// One named pass/fail check of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment: {}", self.experiment);
        let _ = writeln!(out, "config_hash: {}", self.config_hash);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "version: {}", env!("CARGO_PKG_VERSION"));
        for c in &self.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let _ = writeln!(out, "result: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

/// Output collector for one run.
struct Run<'a> {
    config: &'a ExperimentConfig,
    hash: String,
    checks: Vec<Check>,
    files: Vec<(PathBuf, String)>,
}

impl<'a> Run<'a> {
    fn header(&self) -> Vec<(&'static str, String)> {
        vec![("experiment", self.config.experiment.to_string()), ("config_hash", self.hash.clone())]
    }

    /// CSV with the standard `#` block and the given column line.
    fn table(&mut self, name: &str, columns: &str, rows: Vec<String>) {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment: {}", self.config.experiment);
        let _ = writeln!(out, "# config_hash: {}", self.hash);
        let _ = writeln!(out, "# seed: {}", self.config.seed);
        let _ = writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "{columns}");
        for r in rows {
            let _ = writeln!(out, "{r}");
        }
        self.files.push((PathBuf::from(name), out));
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn perc<T>(&self, r: Result<T, PercolationError>) -> Result<T, ExperimentError> {
        r.map_err(|source| ExperimentError::Percolation {
            experiment: self.config.experiment,
            source,
        })
    }

    fn tiling<T>(&self, r: Result<T, TilingError>) -> Result<T, ExperimentError> {
        r.map_err(|source| ExperimentError::Tiling {
            experiment: self.config.experiment,
            source,
        })
    }

    fn matching<T>(&self, r: Result<T, MatchingError>) -> Result<T, ExperimentError> {
        r.map_err(|source| ExperimentError::Matching {
            experiment: self.config.experiment,
            source,
        })
    }

    fn duality<T>(&self, r: Result<T, DualityError>) -> Result<T, ExperimentError> {
        r.map_err(|source| ExperimentError::Duality {
            experiment: self.config.experiment,
            source,
        })
    }

    fn estimate_options(&self, method: Method) -> EstimateOptions {
        EstimateOptions {
            method,
            bootstrap: self.config.budget.bootstrap,
            threads: self.config.budget.threads,
            ..EstimateOptions::default()
        }
    }

    fn curves(&mut self, prefix: &str, est: &ThresholdEstimate) {
        let header = self.header();
        for (size, curve) in est.sizes.iter().zip(&est.curves) {
            let csv = write_curve_csv(curve, &header);
            self.files.push((PathBuf::from(format!("{prefix}_L{size}.csv")), csv));
        }
    }
}

/// Result of a sum-rule check for one matching pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SumRuleResult {
    pub g1: ThresholdEstimate,
    pub g2: ThresholdEstimate,
    pub sum: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Estimates the thresholds of the two hatted graphs of `strategy` on
/// tori of `family` and checks that they sum to one. Fails iff the sum is
/// further from one than `tolerance` plus both half-widths.
pub fn check_sum_rule(
    family: Family,
    strategy: &PartitionStrategy,
    sizes: &[usize],
    trials: u64,
    seed: u64,
    options: &EstimateOptions,
    tolerance: f64,
) -> Result<SumRuleResult, PercolationError> {
    let r1 = Recipe::hatted(family, strategy.clone(), FaceClass::F1);
    let r2 = Recipe::hatted(family, strategy.clone(), FaceClass::F2);
    let g1 = estimate_pc(&r1, sizes, trials, derive_seed(seed, 1), options)?;
    let g2 = estimate_pc(&r2, sizes, trials, derive_seed(seed, 2), options)?;
    let sum = g1.p_c + g2.p_c;
    let passed = (sum - 1.0).abs() <= tolerance + g1.half_width + g2.half_width;
    Ok(SumRuleResult {
        g1,
        g2,
        sum,
        tolerance,
        passed,
    })
}

/// Runs the experiment and writes its files under `config.output`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    config.validate()?;
    let mut run = Run {
        config,
        hash: config.hash(),
        checks: Vec::new(),
        files: Vec::new(),
    };
    match config.experiment {
        ExperimentKind::SumRule => sum_rule(&mut run)?,
        ExperimentKind::TriangulationIdentity => triangulation_identity(&mut run)?,
        ExperimentKind::DualityExhaustive => duality_exhaustive(&mut run)?,
        ExperimentKind::HyperbolicNonuniqueness => hyperbolic_nonuniqueness(&mut run)?,
        ExperimentKind::EndsSanity => ends_sanity(&mut run)?,
    }
    let report = RunReport {
        experiment: config.experiment,
        config_hash: run.hash.clone(),
        seed: config.seed,
        checks: run.checks,
        files: run.files.iter().map(|(p, _)| p.clone()).chain([PathBuf::from("summary.txt")]).collect(),
    };
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(&config.output).map_err(io(&config.output))?;
    for (name, content) in &run.files {
        let path = config.output.join(name);
        fs::write(&path, content).map_err(io(&path))?;
    }
    let path = config.output.join("summary.txt");
    fs::write(&path, report.summary()).map_err(io(&path))?;
    Ok(report)
}

fn estimate_row(label: &str, e: &ThresholdEstimate) -> String {
    let sizes: Vec<String> = e.sizes.iter().map(|s| s.to_string()).collect();
    format!(
        "{label},{:.6},{:.6},{},{},{},{}",
        e.p_c,
        e.half_width,
        e.method,
        sizes.join(" "),
        e.trials,
        e.seed
    )
}

const ESTIMATE_COLUMNS: &str = "graph,p_c,half_width,method,sizes,trials,seed";

fn sum_rule(run: &mut Run) -> Result<(), ExperimentError> {
    let config = run.config;
    let family = config.family()?;
    let sizes = config.sizes_or(&[32, 64]);
    let options = run.estimate_options(Method::WrapCrossing);
    let mut rows = Vec::new();
    for (i, strategy) in config.strategies()?.iter().enumerate() {
        let seed = derive_seed(config.seed, i as u64);
        let result = check_sum_rule(
            family,
            strategy,
            &sizes,
            config.budget.trials,
            seed,
            &options,
            config.tolerance.sum_rule,
        );
        let result = run.perc(result)?;
        rows.push(estimate_row(&format!("G1 {strategy}"), &result.g1));
        rows.push(estimate_row(&format!("G2 {strategy}"), &result.g2));
        run.curves(&format!("wrap_{strategy}_G1"), &result.g1);
        run.curves(&format!("wrap_{strategy}_G2"), &result.g2);
        run.check(
            format!("sum rule {family} {strategy}"),
            result.passed,
            format!(
                "p_c(G1) = {:.4} ± {:.4}, p_c(G2) = {:.4} ± {:.4}, sum = {:.4}, tolerance {}",
                result.g1.p_c, result.g1.half_width, result.g2.p_c, result.g2.half_width, result.sum, result.tolerance
            ),
        );
    }
    run.table("estimates.csv", ESTIMATE_COLUMNS, rows);
    Ok(())
}

fn triangulation_identity(run: &mut Run) -> Result<(), ExperimentError> {
    let config = run.config;
    let family = config.family()?;
    let identity_sizes = config.params.identity_sizes.clone().unwrap_or_else(|| (3..=8).collect());
    let mut rows = Vec::new();
    let mut all_equal = true;
    for &l in &identity_sizes {
        let map = run.tiling(generate(&TilingSpec::torus(family, l)))?;
        let equal = run.matching(matching_graph_is_identity(&map))?;
        all_equal &= equal;
        rows.push(format!("{l},{},{},{equal}", map.vertex_count(), map.edge_count()));
    }
    run.table("identity.csv", "size,vertices,edges,matching_graph_equal", rows);
    run.check(
        format!("{family} matching graph equals input"),
        all_equal,
        format!("torus sides {identity_sizes:?}"),
    );

    let sizes = config.sizes_or(&[32, 64]);
    let options = run.estimate_options(Method::WrapCrossing);
    let recipe = Recipe::base(family, Boundary::Torus);
    let est = estimate_pc(&recipe, &sizes, config.budget.trials, config.seed, &options);
    let est = run.perc(est)?;
    run.curves("wrap", &est);
    run.table("estimates.csv", ESTIMATE_COLUMNS, vec![estimate_row(&recipe.to_string(), &est)]);
    let tol = config.tolerance.triangular_pc;
    run.check(
        "threshold is one half",
        (est.p_c - 0.5).abs() <= tol,
        format!("p_c = {:.4} ± {:.4}, tolerance {tol}", est.p_c, est.half_width),
    );
    Ok(())
}

/// Whether adding all face diagonals leaves the graph unchanged.
pub fn matching_graph_is_identity(map: &CombinatorialMap) -> Result<bool, MatchingError> {
    let g = matching_graph(map)?;
    let base: std::collections::BTreeSet<_> = (0..map.edge_count())
        .map(|e| {
            let d = map.edge_dart(e);
            (map.origin(d), map.target(d), map.lift(d))
        })
        .map(|(u, v, l)| if u < v || (u == v && l >= [0, 0]) { (u, v, l) } else { (v, u, [-l[0], -l[1]]) })
        .collect();
    Ok(g.diagonals().next().is_none() && g.edge_keys() == base)
}

fn duality_exhaustive(run: &mut Run) -> Result<(), ExperimentError> {
    let config = run.config;
    let family = config.family()?;
    let boundary = config.boundary()?;
    let policy = config.triangle_policy()?;
    let threads = config.budget.threads;
    let mut rows = Vec::new();
    match boundary {
        Boundary::Torus => {
            for &size in &config.sizes_or(&[3]) {
                let mut spec = TilingSpec::torus(family, size);
                spec.size2 = config.tiling.size2;
                let base = run.tiling(generate(&spec))?;
                for strategy in config.strategies()? {
                    let partition = run.matching(FacePartition::new(&base, &strategy, policy))?;
                    let ctx = run.duality(DualityContext::new(&base, &partition))?;
                    let report = crate::percolation::with_threads(threads, || {
                        exhaustive_check(&ctx, config.budget.max_vertices)
                    });
                    let report = run.duality(report)?;
                    let bond = report.violations_by_kind.get(&ViolationKind::BondRule).copied().unwrap_or(0);
                    rows.push(format!(
                        "{spec},{strategy},{},{},{},{}",
                        report.configurations,
                        report.violating_configurations,
                        report.total_violations(),
                        report.bond_rule_edges_checked
                    ));
                    run.check(
                        format!("correspondence {spec} {strategy}"),
                        report.total_violations() == 0,
                        format!(
                            "{} configurations, {} violations ({:?})",
                            report.configurations,
                            report.total_violations(),
                            report.violations_by_kind
                        ),
                    );
                    run.check(
                        format!("bond rule {spec} {strategy}"),
                        bond == 0 && report.bond_rule_edges_checked > 0,
                        format!("{} edge checks, {bond} violations", report.bond_rule_edges_checked),
                    );
                }
            }
            run.table(
                "duality.csv",
                "tiling,strategy,configurations,violating_configurations,violations,bond_edge_checks",
                rows,
            );
        }
        Boundary::Free => {
            let radius = config.params.ball_radius.unwrap_or(1);
            for &size in &config.sizes_or(&[5]) {
                let spec = TilingSpec::free(family, size);
                let base = run.tiling(generate(&spec))?;
                if base.vertex_count() > config.budget.max_vertices {
                    return Err(ExperimentError::Config(format!(
                        "{spec} has {} vertices, over max_vertices = {}",
                        base.vertex_count(),
                        config.budget.max_vertices
                    )));
                }
                for strategy in config.strategies()? {
                    let partition = run.matching(FacePartition::new(&base, &strategy, policy))?;
                    let ctx = run.perc(CircuitContext::new(&base, &partition, radius))?;
                    let summary = run.perc(exhaustive_circuit_check(&ctx, threads))?;
                    rows.push(format!(
                        "{spec},{strategy},{radius},{},{},{},{},{}",
                        summary.configurations,
                        summary.disconnected,
                        summary.mismatches,
                        summary.witness_configurations,
                        summary.witness_failures
                    ));
                    run.check(
                        format!("blocking circuit {spec} {strategy} radius {radius}"),
                        summary.is_clean(),
                        format!(
                            "{} configurations, {} mismatches, {} witness failures",
                            summary.configurations, summary.mismatches, summary.witness_failures
                        ),
                    );
                }
            }
            run.table(
                "circuits.csv",
                "tiling,strategy,radius,configurations,disconnected,mismatches,witness_configurations,witness_failures",
                rows,
            );
        }
    }
    Ok(())
}

fn hyperbolic_nonuniqueness(run: &mut Run) -> Result<(), ExperimentError> {
    let config = run.config;
    let family = config.family()?;
    let p = config.params.p.unwrap_or(0.5);
    let radii = config.sizes_or(&[4, 5, 6]);
    let mut rows = Vec::new();
    let mut dist_rows = Vec::new();
    let mut means = Vec::new();
    for &r in &radii {
        let map = run.tiling(generate(&TilingSpec::free(family, r)))?;
        let g = SiteGraph::from_map(&map);
        let seed = derive_seed(config.seed, r as u64);
        let counted = boundary_cluster_count(&g, p, config.budget.trials, seed, config.budget.threads);
        let (point, dist) = run.perc(counted)?;
        rows.push(format!("{r},{},{:.6},{:.9},{:.9},{}", g.vertex_count(), p, point.mean, point.stderr, point.trials));
        for (k, &c) in dist.counts.iter().enumerate() {
            dist_rows.push(format!("{r},{k},{c}"));
        }
        means.push((r, point.mean, point.stderr));
    }
    run.table("boundary_clusters.csv", "radius,vertices,p,mean,stderr,trials", rows);
    run.table("boundary_cluster_distribution.csv", "radius,count,trials", dist_rows);
    let fmt_means = means.iter().map(|(r, m, s)| format!("r={r}: {m:.4} ± {s:.4}")).collect::<Vec<_>>().join(", ");
    let last = means.last().map_or(0.0, |m| m.1);
    run.check(
        format!("mean boundary cluster count exceeds {} at the largest radius", config.tolerance.boundary_count),
        last > config.tolerance.boundary_count,
        fmt_means.clone(),
    );
    run.check(
        "mean boundary cluster count increases with the radius",
        means.windows(2).all(|w| w[1].1 > w[0].1),
        fmt_means,
    );

    let scaling = config.params.scaling_radii.clone().unwrap_or_else(|| vec![4, 7]);
    let mut options = run.estimate_options(Method::SizeScaling);
    options.margin = config.params.margin.unwrap_or(1);
    let recipe = Recipe::base(family, Boundary::Free);
    let est = estimate_pc(&recipe, &scaling, config.budget.trials, derive_seed(config.seed, 1000), &options);
    let est = run.perc(est)?;
    run.table("estimates.csv", ESTIMATE_COLUMNS, vec![estimate_row(&recipe.to_string(), &est)]);
    run.check(
        "threshold below one half",
        est.p_c < 0.5 - est.half_width,
        format!("p_c = {:.4} ± {:.4} (radii {:?}, margin {})", est.p_c, est.half_width, est.sizes, options.margin),
    );
    Ok(())
}

fn ends_sanity(run: &mut Run) -> Result<(), ExperimentError> {
    let config = run.config;
    let threads = config.budget.threads;
    let trials = config.budget.trials;

    let length = config.params.ladder_length.unwrap_or(500);
    let p = config.params.p.unwrap_or(0.95);
    let ladder = run.tiling(generate(&TilingSpec::free(Family::Ladder, length)))?;
    let g = SiteGraph::from_map(&ladder);
    let cross = sample_observable(&g, Observable::CrossProbability, p, trials, derive_seed(config.seed, 1), threads);
    let cross = run.perc(cross)?;
    let no_span = 1.0 - cross.mean;
    run.table(
        "ladder.csv",
        "length,p,span_probability,stderr,trials",
        vec![format!("{length},{p:.6},{:.9},{:.9},{}", cross.mean, cross.stderr, cross.trials)],
    );
    run.check(
        format!("ladder length {length} rarely spans at p = {p}"),
        no_span >= config.tolerance.ladder_no_span,
        format!(
            "no spanning cluster in {:.4} of trials, required {}",
            no_span, config.tolerance.ladder_no_span
        ),
    );

    let depth = config.params.tree_depth.unwrap_or(10);
    let tree = Recipe::base(Family::Tree { degree: 3 }, Boundary::Free);
    let radii = config.params.scaling_radii.clone().unwrap_or_else(|| vec![depth / 2, depth]);
    let mut options = run.estimate_options(Method::SizeScaling);
    options.margin = config.params.margin.unwrap_or(depth.saturating_sub(*radii.iter().max().unwrap_or(&depth)));
    let est = run.perc(estimate_pc(&tree, &radii, trials, derive_seed(config.seed, 2), &options))?;
    let unique = uniqueness_fraction(&tree, 0.9, trials.min(2000), &[depth], derive_seed(config.seed, 3), threads);
    let unique = run.perc(unique)?;
    let mut rows = vec![estimate_row(&tree.to_string(), &est)];
    rows.extend(unique.iter().map(|u| {
        let pt = &u.curve.points[0];
        format!("{tree} uniqueness,{:.6},{:.6},UNIQUENESS_FRACTION,{},{},p=0.9", pt.mean, pt.stderr, u.size, pt.trials)
    }));
    run.table("tree.csv", ESTIMATE_COLUMNS, rows);
    let tol = config.tolerance.tree_pc;
    run.check(
        "tree threshold brackets one half",
        (est.p_c - 0.5).abs() <= tol,
        format!("p_c = {:.4} ± {:.4}, tolerance {tol}", est.p_c, est.half_width),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn config_round_trip_and_hash() {
        let c = config("experiment = \"SUM_RULE\"\nseed = 3\noutput = \"x\"\n[budget]\ntrials = 10\n");
        assert_eq!(c.budget.trials, 10);
        assert_eq!(c.budget.bootstrap, 1000);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let mut other = c.clone();
        other.budget.threads = 8;
        other.output = PathBuf::from("y");
        assert_eq!(c.hash(), other.hash());
        other.seed = 4;
        assert_ne!(c.hash(), other.hash());
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in [
            "experiment = \"NOPE\"\nseed = 1\noutput = \"x\"",
            "experiment = \"SUM_RULE\"\nseed = 1\noutput = \"x\"\n[budget]\ntrials = 0",
            "experiment = \"SUM_RULE\"\nseed = 1\noutput = \"x\"\n[tiling]\nfamily = \"pentagon\"",
            "experiment = \"SUM_RULE\"\nseed = 1\noutput = \"x\"\n[budget]\ntrails = 5",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn names_parse() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }

    #[test]
    fn triangular_tori_are_their_own_matching_graphs() {
        for l in 3..=8 {
            let map = generate(&TilingSpec::torus(Family::Triangular, l)).unwrap();
            assert!(matching_graph_is_identity(&map).unwrap());
        }
        let square = generate(&TilingSpec::torus(Family::Square, 4)).unwrap();
        assert!(!matching_graph_is_identity(&square).unwrap());
    }
}
