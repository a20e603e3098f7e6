//! Command-line harness: generators, algorithms, simulators, oracles, and
//! the property suites, wired into reproducible seeded experiments with
//! machine-readable reports.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use xclust_core::cut_process::{
    embed_cut_metric, f_exact, g_recurrence, harmonic_bound, last_point_trial,
    sample_clock_order, survival_distribution,
};
use xclust_core::exec::{map_trials, mean_stderr};
use xclust_core::instances::{
    default_colocated, gen_axis_instance, gen_hitting_instance, gen_random_set_system,
    min_hitting_set, GeneratedInstance, HittingSetInstance,
};
use xclust_core::kmeans::build_tree_kmeans;
use xclust_core::model::{cost_of_assignment, cost_q, Clustering, CostExponent, PointSet};
use xclust_core::oracle::{
    opt_explainable_fixed, opt_explainable_free, price_of_explainability, OracleCaps,
};
use xclust_core::random_thresholds::build_tree_rt;
use xclust_core::verify;
use xclust_core::{Error as CoreError, Seed};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPS: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "xclust",
    version,
    about = "Explainable clustering via threshold trees: experiments, simulators, and oracles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate instances and set systems.
    Gen {
        #[command(subcommand)]
        what: GenCommand,
    },
    /// Convert a reference clustering into an explainable one over repeated
    /// seeded trials and report the cost statistics.
    Cluster(ClusterArgs),
    /// Exact and Monte Carlo process evaluators.
    Simulate {
        #[command(subcommand)]
        what: SimulateCommand,
    },
    /// Brute-force optima on small instances.
    Oracle {
        #[command(subcommand)]
        what: OracleCommand,
    },
    /// Run the property suites; exits 4 on any violation.
    Verify {
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// One unit center plus k-1 centers at distance M on separate axes.
    Axis {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: f64,
        /// Points colocated with each center.
        #[arg(long, default_value_t = 0)]
        colocated: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduction from an s-uniform hitting set system.
    Hitting {
        /// Set-system file: {"d": int, "sets": [[int, ...], ...]}.
        #[arg(long)]
        sets: PathBuf,
        /// Colocated points per center; defaults to (d + k)^2.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random set system with inclusion probability 2 ln(2k) / k^(1/3).
    Setsystem {
        #[arg(long)]
        k: usize,
        /// Override the inclusion probability (required for small k).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Algorithm {
    /// Random Thresholds for k-medians.
    #[value(name = "kmedians-rt")]
    KmediansRt,
    /// Solo/bulk cuts for k-means.
    #[value(name = "kmeans-sb")]
    KmeansSb,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long, value_enum)]
    pub algo: Algorithm,
    /// Instance file (JSON). Alternative: --points + --centers.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Points as CSV (no header) or PointSet JSON.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Centers as PointSet JSON.
    #[arg(long)]
    pub centers: Option<PathBuf>,
    /// Cost exponent when assembling --points/--centers instances.
    #[arg(long, default_value_t = 1)]
    pub q: u8,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    /// Write the JSON report here (stdout otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write per-trial costs as CSV here.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    /// Stdout format when --out is not given.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Subcommand, Debug)]
pub enum SimulateCommand {
    /// Survivor frequencies of the clock process vs the exact distribution.
    LastPoint {
        /// Point set (CSV or PointSet JSON).
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected survivor norm and survival distribution.
    FExact {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The closed-form axis-instance recurrence.
    GRecurrence {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        m: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Optimal separating tree for the instance's own centers.
    Fixed {
        #[arg(long)]
        instance: PathBuf,
        /// Caps overrides as JSON, e.g. '{"max_grid_cuts": 400}'.
        #[arg(long)]
        caps: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal k-leaf tree with re-optimized centers.
    Free {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        q: u8,
        #[arg(long)]
        caps: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact minimum hitting set of a set-system file.
    HittingSet {
        #[arg(long)]
        sets: PathBuf,
        /// Node budget for the branch-and-bound search.
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Config echo embedded in every run report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportConfig {
    pub command: String,
    pub algorithm: String,
    pub instance: String,
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    pub q: u8,
    pub trials: u64,
    pub seed: u64,
}

/// Per-trial solo/bulk statistics, reported for the k-means algorithm.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TreeStats {
    pub solo_nodes_mean: f64,
    pub bulk_nodes_mean: f64,
    pub sampled_cuts_mean: f64,
}

/// Machine-readable experiment report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    /// Report schema version (tool version).
    pub version: String,
    pub config: ReportConfig,
    pub reference_cost: f64,
    pub trial_costs: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// mean / reference_cost.
    pub ratio: f64,
    /// 1 + H_{k-1} for the instance's k.
    pub harmonic_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_stats: Option<TreeStats>,
    /// Excluded from the determinism contract.
    pub wall_time_secs: f64,
}

/// A validated instance ready to run.
#[derive(Debug)]
pub struct LoadedInstance {
    pub label: String,
    pub points: PointSet,
    pub clustering: Clustering,
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Load and validate an instance file, or assemble one from separate points
/// and centers files (points then assigned to their nearest center).
pub fn load_instance(
    instance: Option<&Path>,
    points: Option<&Path>,
    centers: Option<&Path>,
    q: u8,
) -> anyhow::Result<LoadedInstance> {
    match (instance, points, centers) {
        (Some(path), None, None) => {
            let text = read_to_string(path)?;
            let inst: GeneratedInstance = serde_json::from_str(&text)
                .with_context(|| format!("parsing instance {}", path.display()))?;
            let clustering = inst.clustering()?;
            Ok(LoadedInstance {
                label: path.display().to_string(),
                points: inst.points,
                clustering,
            })
        }
        (None, Some(points_path), Some(centers_path)) => {
            let points = load_points(points_path)?;
            let centers_text = read_to_string(centers_path)?;
            let centers: PointSet = serde_json::from_str(&centers_text)
                .with_context(|| format!("parsing centers {}", centers_path.display()))?;
            let q = CostExponent::try_from(q)?;
            let assignment: Vec<usize> = points
                .iter()
                .map(|x| {
                    (0..centers.len())
                        .min_by(|&a, &b| {
                            q.point_cost(x, centers.point(a))
                                .total_cmp(&q.point_cost(x, centers.point(b)))
                        })
                        .expect("nonempty centers")
                })
                .collect();
            let clustering = Clustering::new(centers, assignment, q)?;
            Ok(LoadedInstance {
                label: format!("{}+{}", points_path.display(), centers_path.display()),
                points,
                clustering,
            })
        }
        _ => Err(anyhow!("pass either --instance or both --points and --centers")),
    }
}

/// Points file: PointSet JSON if it parses, else CSV rows of floats.
pub fn load_points(path: &Path) -> anyhow::Result<PointSet> {
    let text = read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).with_context(|| format!("parsing points {}", path.display()))
    } else {
        PointSet::from_csv(&text).with_context(|| format!("parsing points CSV {}", path.display()))
    }
}

/// Run the selected algorithm over independent seeded trials.
pub fn run_experiment(args: &ClusterArgs) -> anyhow::Result<RunReport> {
    let started = Instant::now();
    let loaded = load_instance(
        args.instance.as_deref(),
        args.points.as_deref(),
        args.centers.as_deref(),
        args.q,
    )?;
    if args.trials < 1 {
        return Err(anyhow!("trials must be >= 1"));
    }
    let seed = Seed(args.seed);
    let points = &loaded.points;
    let clustering = &loaded.clustering;
    let centers = clustering.centers();
    let q = clustering.q();
    eprintln!(
        "loaded {}: n={} k={} d={}",
        loaded.label,
        points.len(),
        clustering.k(),
        points.dim()
    );
    let reference = cost_q(points, clustering)?;

    let (trial_costs, tree_stats) = match args.algo {
        Algorithm::KmediansRt => {
            build_tree_rt(centers, seed)?; // surface errors before fanning out
            let costs = map_trials(args.trials, |t| {
                let tree = build_tree_rt(centers, seed.child(t)).expect("validated centers");
                let routed: Vec<usize> = points.iter().map(|x| tree.route(x)).collect();
                cost_of_assignment(points, centers, &routed, q)
            });
            (costs, None)
        }
        Algorithm::KmeansSb => {
            build_tree_kmeans(centers, seed)?;
            let runs: Vec<(f64, usize, usize, usize)> = map_trials(args.trials, |t| {
                let build = build_tree_kmeans(centers, seed.child(t)).expect("validated centers");
                let routed: Vec<usize> = points.iter().map(|x| build.tree.route(x)).collect();
                let cost = cost_of_assignment(points, centers, &routed, q);
                let (solo, bulk) = build.compressed.count_kinds();
                let sampled: usize = build.stats.iter().map(|r| r.sampled_cuts).sum();
                (cost, solo, bulk, sampled)
            });
            let n = runs.len() as f64;
            let stats = TreeStats {
                solo_nodes_mean: runs.iter().map(|r| r.1 as f64).sum::<f64>() / n,
                bulk_nodes_mean: runs.iter().map(|r| r.2 as f64).sum::<f64>() / n,
                sampled_cuts_mean: runs.iter().map(|r| r.3 as f64).sum::<f64>() / n,
            };
            (runs.into_iter().map(|r| r.0).collect(), Some(stats))
        }
    };

    let (mean, stderr) = mean_stderr(&trial_costs);
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ReportConfig {
            command: "cluster".into(),
            algorithm: match args.algo {
                Algorithm::KmediansRt => "kmedians-rt".into(),
                Algorithm::KmeansSb => "kmeans-sb".into(),
            },
            instance: loaded.label.clone(),
            n: points.len(),
            k: clustering.k(),
            dim: points.dim(),
            q: q.as_u8(),
            trials: args.trials,
            seed: args.seed,
        },
        reference_cost: reference,
        mean,
        stderr,
        ratio: if reference > 0.0 { mean / reference } else { f64::NAN },
        harmonic_bound: harmonic_bound(clustering.k()),
        tree_stats,
        trial_costs,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

pub fn costs_csv(costs: &[f64]) -> String {
    let mut out = String::from("trial,cost\n");
    for (i, c) in costs.iter().enumerate() {
        out.push_str(&format!("{i},{c:?}\n"));
    }
    out
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn parse_caps(caps: Option<&str>) -> anyhow::Result<OracleCaps> {
    match caps {
        None => Ok(OracleCaps::default()),
        Some(text) => serde_json::from_str(text).context("parsing --caps JSON"),
    }
}

/// Execute a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Gen { what } => {
            match what {
                GenCommand::Axis { k, m, colocated, out } => {
                    let inst = gen_axis_instance(k, m, colocated)?;
                    write_or_print(out.as_deref(), &to_json(&inst)?)?;
                }
                GenCommand::Hitting { sets, m, out } => {
                    let text = read_to_string(&sets)?;
                    let hs: HittingSetInstance = serde_json::from_str(&text)
                        .with_context(|| format!("parsing set system {}", sets.display()))?;
                    let m = m.unwrap_or_else(|| default_colocated(hs.ground_size(), hs.sets().len()));
                    let inst = gen_hitting_instance(&hs, m)?;
                    write_or_print(out.as_deref(), &to_json(&inst)?)?;
                }
                GenCommand::Setsystem { k, p, seed, out } => {
                    let (inst, report) = gen_random_set_system(k, p, Seed(seed))?;
                    eprintln!(
                        "p={:.6} epsilon={:.6} size_floor={:.2} all_meet_floor={}",
                        report.params.p,
                        report.params.epsilon,
                        report.params.size_floor,
                        report.all_meet_floor
                    );
                    write_or_print(out.as_deref(), &to_json(&inst)?)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Cluster(args) => {
            let report = run_experiment(&args)?;
            if let Some(costs_path) = args.costs.as_deref() {
                std::fs::write(costs_path, costs_csv(&report.trial_costs))
                    .with_context(|| format!("writing {}", costs_path.display()))?;
            }
            match (&args.out, args.format) {
                (Some(path), _) => write_or_print(Some(path), &to_json(&report)?)?,
                (None, OutputFormat::Json) => println!("{}", to_json(&report)?),
                (None, OutputFormat::Csv) => print!("{}", costs_csv(&report.trial_costs)),
            }
            Ok(EXIT_OK)
        }
        Command::Simulate { what } => {
            match what {
                SimulateCommand::LastPoint { points, trials, seed, out } => {
                    let u = load_points(&points)?;
                    let emb = embed_cut_metric(&u)?;
                    let full = emb.full_mask();
                    let exact = survival_distribution(&emb, full)?;
                    let master = Seed(seed);
                    let survivors: Vec<usize> = map_trials(trials, |t| {
                        let mut rng = master.child(t).rng();
                        let order = sample_clock_order(&emb, &mut rng);
                        last_point_trial(&emb, full, &order).expect("nonempty")
                    });
                    let mut counts = vec![0u64; emb.n_points()];
                    for s in survivors {
                        counts[s] += 1;
                    }
                    let freqs: Vec<f64> =
                        counts.iter().map(|&c| c as f64 / trials as f64).collect();
                    let gof = xclust_core::stats::chi_squared_gof(&counts, &exact)?;
                    let payload = serde_json::json!({
                        "trials": trials,
                        "seed": seed,
                        "survival_exact": exact,
                        "survivor_frequencies": freqs,
                        "gof_p_value": gof.p_value,
                    });
                    write_or_print(out.as_deref(), &to_json(&payload)?)?;
                }
                SimulateCommand::FExact { points, out } => {
                    let u = load_points(&points)?;
                    let emb = embed_cut_metric(&u)?;
                    let full = emb.full_mask();
                    let f = f_exact(&emb, full)?;
                    let survival = survival_distribution(&emb, full)?;
                    let payload = serde_json::json!({
                        "n": emb.n_points(),
                        "f": f,
                        "survival": survival,
                        "weights": emb.dump(),
                    });
                    write_or_print(out.as_deref(), &to_json(&payload)?)?;
                }
                SimulateCommand::GRecurrence { k, m } => {
                    let g = g_recurrence(k, m)?;
                    let payload = serde_json::json!({
                        "k": k,
                        "m": m,
                        "g": g,
                        "harmonic_bound": harmonic_bound(k as usize),
                    });
                    println!("{}", to_json(&payload)?);
                }
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { what } => {
            match what {
                OracleCommand::Fixed { instance, caps, out } => {
                    let loaded = load_instance(Some(&instance), None, None, 1)?;
                    let caps = parse_caps(caps.as_deref())?;
                    let (tree, cost) =
                        opt_explainable_fixed(&loaded.points, &loaded.clustering, &caps)?;
                    let ratio =
                        price_of_explainability(&loaded.points, &loaded.clustering, &caps).ok();
                    let payload = serde_json::json!({
                        "cost": cost,
                        "ratio": ratio,
                        "tree": tree,
                    });
                    write_or_print(out.as_deref(), &to_json(&payload)?)?;
                }
                OracleCommand::Free { instance, k, q, caps, out } => {
                    let loaded = load_instance(Some(&instance), None, None, q)?;
                    let caps = parse_caps(caps.as_deref())?;
                    let q = CostExponent::try_from(q)?;
                    let (tree, centers, cost) =
                        opt_explainable_free(&loaded.points, k, q, &caps)?;
                    let payload = serde_json::json!({
                        "cost": cost,
                        "centers": centers,
                        "tree": tree,
                    });
                    write_or_print(out.as_deref(), &to_json(&payload)?)?;
                }
                OracleCommand::HittingSet { sets, budget, out } => {
                    let text = read_to_string(&sets)?;
                    let hs: HittingSetInstance = serde_json::from_str(&text)
                        .with_context(|| format!("parsing set system {}", sets.display()))?;
                    let sol = min_hitting_set(&hs, budget);
                    write_or_print(out.as_deref(), &to_json(&sol)?)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Verify { seed } => {
            let checks = verify::run_all(Seed(seed));
            for c in &checks {
                println!(
                    "[{}] {} — {}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.details
                );
            }
            if verify::all_passed(&checks) {
                Ok(EXIT_OK)
            } else {
                Ok(EXIT_VERIFY)
            }
        }
    }
}

/// Map an error to its exit code: caps violations exit 3, everything else
/// is a config error exiting 2.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<CoreError>() {
        if matches!(core, CoreError::CapsExceeded(_)) {
            return EXIT_CAPS;
        }
    }
    EXIT_CONFIG
}
