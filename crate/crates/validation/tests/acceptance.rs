//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run a subset with `ACCEPTANCE_ONLY=4,5`.

use std::time::{Duration, Instant};

use percoplane_core::duality::{cluster_stats_sites, exhaustive_check, Cluster, DualityContext, SiteConfig, ViolationKind};
use percoplane_core::experiments::{check_sum_rule, matching_graph_is_identity, run, ExperimentConfig};
use percoplane_core::graph::SiteGraph;
use percoplane_core::matching::{hatted_graphs, FacePartition, PartitionStrategy};
use percoplane_core::percolation::{
    boundary_cluster_count, estimate_pc, sample_observable, EstimateOptions, Method, Observable, Recipe,
};
use percoplane_core::tilings::{ball, generate, BallSpec, Boundary, Family, TilingSpec};
use percoplane_validation::{ladder_span_probability, square_ball_counts, traversal_clusters, TraversalCluster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

const DUALITY_RUNTIME: Duration = Duration::from_secs(60);
const TRIANGULAR_RUNTIME: Duration = Duration::from_secs(600);
const THRESHOLD_TRIALS: u64 = 20_000;
const TRIANGULAR_PC_TOL: f64 = 0.005;
const SUM_RULE_TOL: f64 = 0.015;
const DEGREE7_RATIO_MAX: f64 = 10.0;
const BOUNDARY_COUNT_TRIALS: u64 = 100_000;
const BOUNDARY_COUNT_MIN: f64 = 1.5;
const HYPERBOLIC_PC_TRIALS: u64 = 4_000;
const LADDER_LENGTH: usize = 500;
const LADDER_P: f64 = 0.95;
const LADDER_TRIALS: u64 = 20_000;
const LADDER_NO_SPAN_MIN: f64 = 0.99;
const TREE_TRIALS: u64 = 20_000;
const TREE_PC_TOL: f64 = 0.02;
const ORACLE_INSTANCES: usize = 100_000;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn duality_correspondence(bond_rule_only: bool) -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut clean = true;
    for spec in [TilingSpec::torus(Family::Square, 3), TilingSpec::torus(Family::Square, 3).with_size2(4)] {
        let base = generate(&spec).unwrap();
        for strategy in [PartitionStrategy::AllF1, PartitionStrategy::AllF2, PartitionStrategy::Checkerboard] {
            let partition = FacePartition::with_strategy(&base, &strategy).unwrap();
            let ctx = DualityContext::new(&base, &partition).unwrap();
            let report = exhaustive_check(&ctx, 12).unwrap();
            let bond = report.violations_by_kind.get(&ViolationKind::BondRule).copied().unwrap_or(0);
            let counted = if bond_rule_only {
                clean &= bond == 0 && report.bond_rule_edges_checked > 0;
                bond
            } else {
                let total = report.total_violations();
                clean &= total == 0 && report.configurations == 1 << base.vertex_count();
                total
            };
            lines.push(format!("{spec} {strategy}: {} configs, {counted} violations", report.configurations));
        }
    }
    let elapsed = start.elapsed();
    let in_time = bond_rule_only || elapsed < DUALITY_RUNTIME;
    outcome(clean && in_time, format!("{}; {:.1?}", lines.join("; "), elapsed))
}

fn triangulation_identity() -> Outcome {
    let mut failed = Vec::new();
    for l in 3..=8 {
        let map = generate(&TilingSpec::torus(Family::Triangular, l)).unwrap();
        if !matching_graph_is_identity(&map).unwrap() {
            failed.push(l);
        }
    }
    outcome(failed.is_empty(), format!("torus sides 3..=8, mismatches at {failed:?}"))
}

fn wrap_options() -> EstimateOptions {
    EstimateOptions {
        method: Method::WrapCrossing,
        ..EstimateOptions::default()
    }
}

fn triangular_threshold() -> Outcome {
    let start = Instant::now();
    let recipe = Recipe::base(Family::Triangular, Boundary::Torus);
    let est = estimate_pc(&recipe, &[32, 64], THRESHOLD_TRIALS, SEED, &wrap_options()).unwrap();
    let elapsed = start.elapsed();
    outcome(
        (est.p_c - 0.5).abs() <= TRIANGULAR_PC_TOL && elapsed < TRIANGULAR_RUNTIME,
        format!(
            "p_c = {:.4} ± {:.4} (L = 32, 64; {} trials/size); {:.1?}",
            est.p_c, est.half_width, THRESHOLD_TRIALS, elapsed
        ),
    )
}

fn sum_rule() -> Outcome {
    let options = wrap_options();
    let mut lines = Vec::new();
    let mut ok = true;
    let square = estimate_pc(&Recipe::base(Family::Square, Boundary::Torus), &[32, 64], THRESHOLD_TRIALS, SEED, &options).unwrap();
    let star = estimate_pc(
        &Recipe::hatted(Family::Square, PartitionStrategy::AllF1, percoplane_core::matching::FaceClass::F1),
        &[32, 64],
        THRESHOLD_TRIALS,
        SEED + 1,
        &options,
    )
    .unwrap();
    let sum = square.p_c + star.p_c;
    ok &= (sum - 1.0).abs() <= SUM_RULE_TOL;
    lines.push(format!("G {:.4} + G* {:.4} = {:.4}", square.p_c, star.p_c, sum));
    for (name, strategy) in [("left", PartitionStrategy::Diagonal3), ("right", PartitionStrategy::AllF1)] {
        let r = check_sum_rule(Family::Square, &strategy, &[33, 66], THRESHOLD_TRIALS, SEED + 2, &options, SUM_RULE_TOL).unwrap();
        ok &= (r.sum - 1.0).abs() <= SUM_RULE_TOL;
        lines.push(format!("{name} pair ({strategy}) {:.4} + {:.4} = {:.4}", r.g1.p_c, r.g2.p_c, r.sum));
    }
    outcome(ok, lines.join("; "))
}

fn degree_seven_structure() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for r in 3..=6 {
        let m = generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, r)).unwrap();
        let ratio = m.edge_count() as f64 / m.boundary_vertices().len() as f64;
        ok &= ratio < DEGREE7_RATIO_MAX;
        lines.push(format!("{{3,7}} r={r}: {}/{} = {ratio:.3}", m.edge_count(), m.boundary_vertices().len()));
    }
    let torus = generate(&TilingSpec::torus(Family::Square, 30)).unwrap();
    let mut previous = 0.0;
    for r in 3..=6 {
        let (b, _) = ball(&torus, BallSpec { center: 0, radius: r }).unwrap();
        let counts = (b.edge_count(), b.boundary_vertices().len());
        let ratio = counts.0 as f64 / counts.1 as f64;
        ok &= counts == square_ball_counts(r) && ratio > previous;
        previous = ratio;
        lines.push(format!("square r={r}: {}/{} = {ratio:.3}", counts.0, counts.1));
    }
    outcome(ok, lines.join("; "))
}

fn hyperbolic_signature() -> Outcome {
    let mut means = Vec::new();
    for r in [4, 5, 6] {
        let m = generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, r)).unwrap();
        let g = SiteGraph::from_map(&m);
        let (point, _) = boundary_cluster_count(&g, 0.5, BOUNDARY_COUNT_TRIALS, SEED + r as u64, 1).unwrap();
        means.push((r, point.mean, point.stderr));
    }
    let above = means[2].1 > BOUNDARY_COUNT_MIN;
    let increasing = means.windows(2).all(|w| w[1].1 > w[0].1);
    let options = EstimateOptions {
        method: Method::SizeScaling,
        margin: 1,
        ..EstimateOptions::default()
    };
    let recipe = Recipe::base(Family::Hyperbolic { p: 3, q: 7 }, Boundary::Free);
    let est = estimate_pc(&recipe, &[4, 7], HYPERBOLIC_PC_TRIALS, SEED, &options).unwrap();
    let below = est.p_c < 0.5 - est.half_width;
    let listed: Vec<String> = means.iter().map(|(r, m, s)| format!("r={r} {m:.4}±{s:.4}")).collect();
    outcome(
        above && increasing && below,
        format!(
            "means {} (> {BOUNDARY_COUNT_MIN} at r=6: {above}, increasing: {increasing}); p_c = {:.4} ± {:.4} (< 1/2: {below})",
            listed.join(", "),
            est.p_c,
            est.half_width
        ),
    )
}

fn ends_sanity() -> Outcome {
    let ladder = SiteGraph::from_map(&generate(&TilingSpec::free(Family::Ladder, LADDER_LENGTH)).unwrap());
    let cross = sample_observable(&ladder, Observable::CrossProbability, LADDER_P, LADDER_TRIALS, SEED, 1).unwrap();
    let no_span = 1.0 - cross.mean;
    let exact = 1.0 - ladder_span_probability(LADDER_LENGTH, LADDER_P);
    let ladder_ok = no_span >= LADDER_NO_SPAN_MIN;

    let options = EstimateOptions {
        method: Method::SizeScaling,
        ..EstimateOptions::default()
    };
    let tree = Recipe::base(Family::Tree { degree: 3 }, Boundary::Free);
    let est = estimate_pc(&tree, &[5, 10], TREE_TRIALS, SEED, &options).unwrap();
    let tree_ok = (est.p_c - 0.5).abs() <= TREE_PC_TOL;
    outcome(
        ladder_ok && tree_ok,
        format!(
            "ladder {LADDER_LENGTH} at p={LADDER_P}: no span in {no_span:.4} of trials (exact {exact:.4}, need >= {LADDER_NO_SPAN_MIN}); \
             tree depth 10: p_c = {:.4} ± {:.4} (need within {TREE_PC_TOL} of 1/2)",
            est.p_c, est.half_width
        ),
    )
}

fn same(a: &[Cluster], b: &[TraversalCluster]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.vertices == y.vertices && x.touches_boundary == y.touches_boundary && x.wraps == y.wraps
        })
}

fn engine_equivalence() -> Outcome {
    let mut pool: Vec<SiteGraph> = Vec::new();
    for family in [Family::Square, Family::Triangular, Family::Hexagonal] {
        for l in [2, 3, 4, 6, 8] {
            if let Ok(m) = generate(&TilingSpec::torus(family, l)) {
                pool.push(SiteGraph::from_map(&m));
            }
            if let Ok(m) = generate(&TilingSpec::free(family, l + 1)) {
                pool.push(SiteGraph::from_map(&m));
            }
        }
        if let Ok(m) = generate(&TilingSpec::torus(family, 4).with_size2(6)) {
            pool.push(SiteGraph::from_map(&m));
        }
    }
    for strategy in [PartitionStrategy::AllF1, PartitionStrategy::Checkerboard] {
        let m = generate(&TilingSpec::torus(Family::Square, 4)).unwrap();
        let partition = FacePartition::with_strategy(&m, &strategy).unwrap();
        let (g1, g2) = hatted_graphs(&m, &partition).unwrap();
        pool.push(g1.percolation_graph());
        pool.push(g2.percolation_graph());
    }
    pool.push(SiteGraph::from_map(&generate(&TilingSpec::free(Family::Hyperbolic { p: 3, q: 7 }, 3)).unwrap()));
    pool.push(SiteGraph::from_map(&generate(&TilingSpec::free(Family::Tree { degree: 3 }, 4)).unwrap()));
    pool.push(SiteGraph::from_map(&generate(&TilingSpec::free(Family::Ladder, 12)).unwrap()));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut mismatches = 0usize;
    for _ in 0..ORACLE_INSTANCES {
        let g = &pool[rng.random_range(0..pool.len())];
        let p: f64 = rng.random();
        let states: Vec<bool> = g
            .forced_states()
            .iter()
            .map(|f| f.unwrap_or_else(|| rng.random::<f64>() < p))
            .collect();
        let config = SiteConfig::new(states.clone(), g.forced_states().to_vec()).unwrap();
        let stats = cluster_stats_sites(g, &config);
        let (open, closed) = traversal_clusters(g, &states);
        if !same(&stats.open, &open) || !same(&stats.closed, &closed) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{ORACLE_INSTANCES} instances over {} graphs, {mismatches} mismatches", pool.len()),
    )
}

fn small_configs() -> Vec<String> {
    let head = |name: &str| format!("experiment = \"{name}\"\nseed = 11\noutput = \"unused\"\n");
    vec![
        head("SUM_RULE")
            + "[tiling]\nsizes = [12, 24]\n[partition]\nstrategies = [\"all-f1\", \"diagonal3\"]\n\
               [budget]\ntrials = 2000\nbootstrap = 40\n",
        head("TRIANGULATION_IDENTITY")
            + "[tiling]\nsizes = [12, 24]\n[params]\nidentity_sizes = [3, 4]\n[budget]\ntrials = 2000\nbootstrap = 40\n",
        head("DUALITY_EXHAUSTIVE") + "[tiling]\nsizes = [3]\n",
        head("DUALITY_EXHAUSTIVE") + "[tiling]\nsizes = [4]\nboundary = \"free\"\n[params]\nball_radius = 0\n",
        head("HYPERBOLIC_NONUNIQUENESS") + "[tiling]\nsizes = [3, 4]\n[budget]\ntrials = 1000\nbootstrap = 40\n",
        head("ENDS_SANITY") + "[params]\nladder_length = 60\ntree_depth = 6\n[budget]\ntrials = 1000\nbootstrap = 40\n",
    ]
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for (i, text) in small_configs().iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in [1, 3] {
            let mut config = ExperimentConfig::from_toml(text).unwrap();
            config.budget.threads = threads;
            config.output = dir.path().join(format!("{i}-{threads}"));
            let report = run(&config).unwrap();
            let files: Vec<(String, Vec<u8>)> = report
                .files
                .iter()
                .map(|f| (f.display().to_string(), std::fs::read(config.output.join(f)).unwrap()))
                .collect();
            outputs.push((config.experiment, files));
        }
        let (kind, a) = &outputs[0];
        let (_, b) = &outputs[1];
        compared += a.len();
        if a != b {
            differing.push(kind.to_string());
        }
    }
    outcome(
        differing.is_empty(),
        format!("{compared} files from {} runs at 1 and 3 threads, differing: {differing:?}", small_configs().len()),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "exhaustive duality correspondence", || duality_correspondence(false)),
        (2, "bond rule identity", || duality_correspondence(true)),
        (3, "triangulation identity", triangulation_identity),
        (4, "triangular threshold", triangular_threshold),
        (5, "sum rule", sum_rule),
        (6, "degree-7 structure", degree_seven_structure),
        (7, "hyperbolic non-uniqueness signature", hyperbolic_signature),
        (8, "ends sanity", ends_sanity),
        (9, "engine equivalence", engine_equivalence),
        (10, "reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let tag = if result.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name}: {} ({:.1?})", result.detail, start.elapsed());
        failed += usize::from(!result.passed);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
