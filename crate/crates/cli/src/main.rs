use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use percoplane_core::duality::{exhaustive_check, DualityContext};
use percoplane_core::experiments::{registry, run, ExperimentConfig};
use percoplane_core::format::write_map;
use percoplane_core::matching::{
    facial_triangulation, hatted_graphs, matching_graph, matching_pair, read_augmented, write_augmented, FaceClass,
    FacePartition, PartitionStrategy, TrianglePolicy,
};
use percoplane_core::percolation::{
    estimate_pc, newman_ziff_sweep, parse_grid, write_curve_csv, EstimateOptions, GraphRecipe, Method, Observable, Recipe,
};
use percoplane_core::tilings::{ball, generate, BallSpec, Boundary, Family, TilingSpec};

type CliResult = Result<bool, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "percoplane", version, about = "Planar maps, matching pairs and site percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Derived {
    /// Base map plus the diagonals of every face.
    Matching,
    /// Base map plus the diagonals of the F1 faces.
    G1,
    /// Base map plus the diagonals of the F2 faces.
    G2,
    /// Base map with facial sites in the F1 faces.
    Hat1,
    /// Base map with facial sites in the F2 faces.
    Hat2,
    /// Facial sites in every face.
    Triangulation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tiling in the map exchange format.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        size2: Option<usize>,
        #[arg(long, default_value = "torus")]
        boundary: Boundary,
        /// Cut out the ball of this radius around `--center`.
        #[arg(long)]
        ball_radius: Option<usize>,
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a matching graph, a matching pair member or a hatted graph.
    Match {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "matching")]
        graph: Derived,
        #[arg(long, default_value = "all-f1")]
        strategy: PartitionStrategy,
        /// Classify triangles like other faces instead of putting them in F1.
        #[arg(long)]
        follow_triangles: bool,
        /// Write the face partition to this file.
        #[arg(long)]
        partition_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively check the site/bond duality correspondence.
    DualityCheck {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "all-f1")]
        strategy: PartitionStrategy,
        #[arg(long, default_value_t = 16)]
        max_vertices: usize,
    },
    /// Newman–Ziff sweep of an observable over a p grid.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        observable: Observable,
        #[arg(long, default_value = "0:1:0.01")]
        pgrid: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the site threshold of a tiling or of a hatted graph.
    Pc {
        #[arg(long)]
        family: Family,
        #[arg(long, value_delimiter = ',', default_value = "32,64")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "torus")]
        boundary: Boundary,
        /// Use a hatted graph of this partition instead of the tiling.
        #[arg(long)]
        strategy: Option<PartitionStrategy>,
        /// Which hatted graph (1 or 2).
        #[arg(long, default_value = "1")]
        class: FaceClass,
        #[arg(long, default_value = "WRAP_CROSSING")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        margin: usize,
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Run an experiment config; exits with 0 iff all its checks pass.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the thread count of the config.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the registered experiments.
    ListExperiments,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), std::io::Error> {
    match out {
        Some(path) => fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::Gen {
            family,
            size,
            size2,
            boundary,
            ball_radius,
            center,
            out,
        } => {
            let spec = TilingSpec {
                family,
                size,
                size2,
                boundary,
            };
            let mut map = generate(&spec)?;
            if let Some(radius) = ball_radius {
                map = ball(&map, BallSpec { center, radius })?.0;
            }
            emit(out.as_deref(), &write_map(&map))?;
            Ok(true)
        }
        Command::Match {
            input,
            graph,
            strategy,
            follow_triangles,
            partition_out,
            out,
        } => {
            let map = read_augmented(&fs::read_to_string(&input)?)?.map().clone();
            let policy = if follow_triangles {
                TrianglePolicy::FollowStrategy
            } else {
                TrianglePolicy::AllF1
            };
            let partition = FacePartition::new(&map, &strategy, policy)?;
            if let Some(path) = partition_out {
                fs::write(path, partition.to_text())?;
            }
            let derived = match graph {
                Derived::Matching => matching_graph(&map)?,
                Derived::G1 => matching_pair(&map, &partition)?.0,
                Derived::G2 => matching_pair(&map, &partition)?.1,
                Derived::Hat1 => hatted_graphs(&map, &partition)?.0,
                Derived::Hat2 => hatted_graphs(&map, &partition)?.1,
                Derived::Triangulation => facial_triangulation(&map)?,
            };
            emit(out.as_deref(), &write_augmented(&derived))?;
            Ok(true)
        }
        Command::DualityCheck {
            input,
            strategy,
            max_vertices,
        } => {
            let map = read_augmented(&fs::read_to_string(&input)?)?.map().clone();
            let partition = FacePartition::with_strategy(&map, &strategy)?;
            let ctx = DualityContext::new(&map, &partition)?;
            let report = exhaustive_check(&ctx, max_vertices)?;
            println!("configurations: {}", report.configurations);
            println!("violating configurations: {}", report.violating_configurations);
            for (kind, n) in &report.violations_by_kind {
                println!("{kind:?}: {n}");
            }
            for (idx, v) in &report.examples {
                println!("example config {idx:#x}: {:?} face {:?} {}", v.kind, v.face, v.witness);
            }
            Ok(report.total_violations() == 0)
        }
        Command::Sweep {
            input,
            observable,
            pgrid,
            trials,
            seed,
            threads,
            out,
        } => {
            let graph = read_augmented(&fs::read_to_string(&input)?)?;
            let mut g = graph.percolation_graph();
            if g.label().is_empty() {
                g.set_label(input.display().to_string());
            }
            let grid = parse_grid(&pgrid)?;
            let curve = newman_ziff_sweep(&g, trials, observable, &grid, seed, threads)?;
            emit(out.as_deref(), &write_curve_csv(&curve, &[("trials", trials.to_string())]))?;
            Ok(true)
        }
        Command::Pc {
            family,
            sizes,
            trials,
            seed,
            boundary,
            strategy,
            class,
            method,
            margin,
            bootstrap,
            threads,
        } => {
            let recipe = Recipe {
                family,
                boundary,
                graph: match strategy {
                    Some(strategy) => GraphRecipe::Hatted { strategy, class },
                    None => GraphRecipe::Base,
                },
            };
            let options = EstimateOptions {
                method,
                bootstrap,
                margin,
                threads,
                ..EstimateOptions::default()
            };
            let est = estimate_pc(&recipe, &sizes, trials, seed, &options)?;
            println!("graph: {recipe}");
            println!("method: {}", est.method);
            println!("sizes: {:?}", est.sizes);
            for (a, b, p) in &est.pair_crossings {
                println!("crossing {a}/{b}: {p:.6}");
            }
            println!("p_c: {:.6}", est.p_c);
            println!("half_width: {:.6}", est.half_width);
            println!("total trials: {}", est.trials);
            println!("seed: {}", est.seed);
            Ok(true)
        }
        Command::Run { config, threads } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(t) = threads {
                config.budget.threads = t;
            }
            let report = run(&config)?;
            print!("{}", report.summary());
            Ok(report.passed())
        }
        Command::ListExperiments => {
            for e in registry() {
                println!("{:<26} {}", e.kind.name(), e.relation);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
