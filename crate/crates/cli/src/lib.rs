//! `binstretch`: search for adversary strategies, verify and inspect them.
//!
//! Exit codes: 0 found / accepted, 1 not found / rejected, 2 usage or I/O
//! error, 3 interrupted by the time limit.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use binstretch_checker::check;
use binstretch_core::dag::{compress_last_layer, decompress, tree_to_dag};
use binstretch_core::dot::{emit_dot, parse_dot};
use binstretch_core::{GameParams, StrategyDag};
use binstretch_search::engine::{ItemOrder, Progress, SearchOptions};
use binstretch_search::hashing::{DEFAULT_HASH_BITS, DEFAULT_SEED};
use binstretch_search::parallel::{ParallelConfig, TaskThresholds};
use binstretch_search::solver::{solve, Outcome, SolveConfig, SolveReport};
use clap::{Args, Parser, Subcommand};

pub const EXIT_FOUND: i32 = 0;
pub const EXIT_NOT_FOUND: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_ABORTED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "binstretch", version, about = "Lower-bound search for online bin stretching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for an adversary strategy in the game (m, t, g).
    Search(SearchArgs),
    /// Check a strategy file.
    Verify {
        file: PathBuf,
    },
    /// Print size statistics of a strategy file.
    Stats {
        file: PathBuf,
    },
    /// Search a list of ratios t/g for a fixed number of bins.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GameArgs {
    #[arg(short = 'm', long)]
    bins: usize,
    #[arg(short = 't', long)]
    target: u32,
    #[arg(short = 'g', long)]
    guarantee: u32,
}

#[derive(Debug, Args, Clone)]
struct EngineArgs {
    /// Each item is at least the previous one minus K.
    #[arg(long, value_name = "K", conflicts_with = "iterate_monotonicity")]
    monotonicity: Option<u32>,
    /// Try K = 0, 1, ... until a strategy is found.
    #[arg(long)]
    iterate_monotonicity: bool,
    /// Comma-separated items sent before the search starts.
    #[arg(long, value_name = "ITEMS", value_delimiter = ',')]
    initial: Vec<u32>,
    /// Let the last initial item restrict the first searched item.
    #[arg(long)]
    seed_initial_last: bool,
    /// Worker threads; 0 searches on the main thread.
    #[arg(long, env = "BINSTRETCH_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long, env = "BINSTRETCH_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// log2 of the state cache size.
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    hash_bits: u32,
    /// log2 of the feasibility cache size.
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    feas_hash_bits: u32,
    #[arg(long)]
    no_good_situations: bool,
    #[arg(long)]
    no_large_item: bool,
    #[arg(long)]
    no_five_nine: bool,
    #[arg(long)]
    no_state_cache: bool,
    #[arg(long)]
    no_feasibility_cache: bool,
    /// Cache adversary wins as well.
    #[arg(long)]
    two_sided_cache: bool,
    /// Try small items first.
    #[arg(long)]
    smallest_first: bool,
    /// Item count at which a vertex becomes a parallel task.
    #[arg(long, default_value_t = 6)]
    task_depth: usize,
    /// Item volume, as a fraction of g, at which a vertex becomes a task.
    #[arg(long, default_value_t = 0.3)]
    task_load_fraction: f64,
    #[arg(long, default_value_t = 250)]
    batch_size: usize,
    /// Give up after this many seconds.
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    /// Print progress to stderr every SECONDS.
    #[arg(long, value_name = "SECONDS")]
    progress: Option<f64>,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[command(flatten)]
    game: GameArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the strategy as DOT.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the strategy without last-layer compression.
    #[arg(long)]
    no_compress: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(short = 'm', long)]
    bins: usize,
    /// Comma-separated ratios such as "19/14,22/16".
    #[arg(long, value_delimiter = ',', required = true)]
    ratios: Vec<String>,
    #[command(flatten)]
    engine: EngineArgs,
}

/// Parse arguments and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_ERROR,
            };
        }
    };
    let result = match cli.command {
        Command::Search(args) => cmd_search(&args),
        Command::Verify { file } => cmd_verify(&file),
        Command::Stats { file } => cmd_stats(&file),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

fn solve_config(e: &EngineArgs) -> Result<SolveConfig, String> {
    let seconds = |s: f64, what: &str| {
        Duration::try_from_secs_f64(s).map_err(|_| format!("{what} must be a non-negative number of seconds"))
    };
    if !(0.0..=1.0).contains(&e.task_load_fraction) {
        return Err("--task-load-fraction must lie in [0, 1]".into());
    }
    let progress = match e.progress {
        Some(s) => Some(seconds(s, "--progress")?),
        None => None,
    };
    Ok(SolveConfig {
        options: SearchOptions {
            monotonicity: e.monotonicity,
            good_situations: !e.no_good_situations,
            large_item: !e.no_large_item,
            five_nine: !e.no_five_nine,
            item_order: if e.smallest_first {
                ItemOrder::SmallestFirst
            } else {
                ItemOrder::LargestFirst
            },
            two_sided_cache: e.two_sided_cache,
            state_cache: !e.no_state_cache,
            feasibility_cache: !e.no_feasibility_cache,
            seed: e.seed,
            hash_bits: e.hash_bits.clamp(1, 40),
            feas_hash_bits: e.feas_hash_bits.clamp(1, 40),
            depth_budget: None,
        },
        initial: e.initial.clone(),
        seed_initial_last: e.seed_initial_last,
        iterate_monotonicity: e.iterate_monotonicity,
        workers: e.workers,
        parallel: ParallelConfig {
            thresholds: TaskThresholds {
                depth_k: e.task_depth,
                load_fraction: e.task_load_fraction,
                ..TaskThresholds::default()
            },
            batch_size: e.batch_size,
            inject_failure: None,
        },
        record: true,
        time_limit: match e.time_limit {
            Some(s) => Some(seconds(s, "--time-limit")?),
            None => None,
        },
        progress: progress.map(|_| {
            Arc::new(|p: &Progress| {
                eprintln!(
                    "[{:>9.1}s] {}: {} nodes, tasks {}/{}",
                    p.elapsed.as_secs_f64(),
                    p.phase,
                    p.nodes,
                    p.tasks_done,
                    p.tasks_total
                );
            }) as Arc<dyn Fn(&Progress) + Send + Sync>
        }),
        progress_interval: progress.unwrap_or(Duration::from_secs(3600)),
    })
}

/// Node counts of an emitted strategy.
#[derive(Debug, Clone, Copy, Default)]
struct Sizes {
    tree: u64,
    dag: usize,
    compressed: usize,
}

/// Build the DAG to emit and check it; `Err` when the checker refuses it.
fn certify(report: &SolveReport, compress: bool) -> Result<Option<(StrategyDag, Sizes)>, String> {
    let Some(tree) = &report.tree else {
        return Ok(None);
    };
    let params = &report.params;
    let dag = tree_to_dag(tree, params).map_err(|e| e.to_string())?;
    let full = decompress(&dag, params).map_err(|e| e.to_string())?;
    let compressed = compress_last_layer(&dag);
    let sizes = Sizes {
        tree: full.unfold().map_err(|e| e.to_string())?.node_count(),
        dag: full.len(),
        compressed: compressed.len(),
    };
    let out = if compress { compressed } else { full };
    let verdict = check(&out, params);
    if !verdict.accepted {
        return Err(format!("the recorded strategy failed verification: {verdict}"));
    }
    Ok(Some((out, sizes)))
}

fn mono_text(k: Option<u32>, params: &GameParams) -> String {
    match k {
        Some(k) => k.to_string(),
        None => format!("{} (full)", params.g() - 1),
    }
}

fn render_report(report: &SolveReport, verdict: &str, sizes: Option<Sizes>, e: &EngineArgs) -> String {
    let p = &report.params;
    let mono = mono_text(report.monotonicity, p);
    let mut s = String::new();
    let _ = writeln!(s, "game {p}: {verdict} (monotonicity {mono}) in {:.3}s", report.elapsed.as_secs_f64());
    for r in &report.rounds {
        let _ = writeln!(
            s,
            "  monotonicity {}: {} in {:.3}s",
            mono_text(r.monotonicity, p),
            r.outcome.as_str(),
            r.elapsed.as_secs_f64()
        );
    }
    if let Some(z) = sizes {
        let _ = writeln!(s, "  strategy: {} tree nodes, {} DAG nodes, {} compressed", z.tree, z.dag, z.compressed);
    }
    let st = &report.stats;
    let _ = writeln!(
        s,
        "  {} adversary / {} algorithm vertices, {} cache hits, {} good situations, {} heuristic wins",
        st.adversary_nodes, st.algorithm_nodes, st.state_cache_hits, st.good_situation_prunes, st.heuristic_wins
    );
    let z = sizes.unwrap_or_default();
    let _ = writeln!(s, "---");
    for (k, v) in [
        ("bins", p.m().to_string()),
        ("target", p.t().to_string()),
        ("guarantee", p.g().to_string()),
        ("verdict", verdict.to_string()),
        ("monotonicity", report.monotonicity.unwrap_or(p.g() - 1).to_string()),
        ("tree_nodes", z.tree.to_string()),
        ("dag_nodes", z.dag.to_string()),
        ("compressed_dag_nodes", z.compressed.to_string()),
        ("wall_seconds", format!("{:.3}", report.elapsed.as_secs_f64())),
        ("seed", e.seed.to_string()),
        ("workers", e.workers.to_string()),
        ("tasks", report.tasks.to_string()),
    ] {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

fn game(args: &GameArgs) -> Result<GameParams, String> {
    GameParams::new(args.bins, args.target, args.guarantee).map_err(|e| e.to_string())
}

fn cmd_search(args: &SearchArgs) -> Result<i32, String> {
    let params = game(&args.game)?;
    let config = solve_config(&args.engine)?;
    let report = solve(&params, &config).map_err(|e| e.to_string())?;
    let (verdict, code, sizes) = match report.outcome {
        Outcome::Found => {
            let (dag, sizes) = certify(&report, !args.no_compress)?.ok_or("search found a strategy but recorded none")?;
            if let Some(path) = &args.output {
                write_verified(path, &dag, &params)?;
            }
            ("found", EXIT_FOUND, Some(sizes))
        }
        Outcome::NotFound => ("not found", EXIT_NOT_FOUND, None),
        Outcome::Aborted => ("aborted", EXIT_ABORTED, None),
    };
    print!("{}", render_report(&report, verdict, sizes, &args.engine));
    Ok(code)
}

/// Write the DOT text, then re-read and re-check the file itself.
fn write_verified(path: &Path, dag: &StrategyDag, params: &GameParams) -> Result<(), String> {
    let text = emit_dot(dag, params);
    let mut f = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let (p2, dag2) = read_dot(path)?;
    let verdict = check(&dag2, &p2);
    if !verdict.accepted {
        return Err(format!("{}: written strategy failed verification: {verdict}", path.display()));
    }
    Ok(())
}

fn read_dot(path: &Path) -> Result<(GameParams, StrategyDag), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_dot(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_verify(path: &Path) -> Result<i32, String> {
    let (params, dag) = read_dot(path)?;
    let verdict = check(&dag, &params);
    println!("{}: {params}: {verdict}", path.display());
    println!("---");
    println!("verdict={}", if verdict.accepted { "verified" } else { "rejected" });
    if let Some(r) = verdict.reason {
        println!("node={}", r.node);
        println!("rule={}", r.rule.name());
    }
    Ok(if verdict.accepted { EXIT_FOUND } else { EXIT_NOT_FOUND })
}

fn cmd_stats(path: &Path) -> Result<i32, String> {
    let (params, dag) = read_dot(path)?;
    let st = dag.stats();
    let expanded = decompress(&dag, &params).map_err(|e| e.to_string())?;
    let tree_nodes = expanded.unfold().map_err(|e| e.to_string())?.node_count();
    println!("{}: {params}", path.display());
    println!("---");
    println!("nodes={}", st.nodes);
    println!("edges={}", st.edges);
    println!("compressed_nodes={}", st.compressed_nodes);
    println!("leaves={}", st.leaves);
    println!("depth={}", st.depth);
    println!("uncompressed_nodes={}", expanded.len());
    println!("tree_nodes={tree_nodes}");
    Ok(EXIT_FOUND)
}

fn parse_ratio(s: &str) -> Result<(u32, u32), String> {
    let (t, g) = s.trim().split_once('/').ok_or_else(|| format!("ratio {s:?} is not of the form t/g"))?;
    let parse = |x: &str| x.trim().parse::<u32>().map_err(|_| format!("ratio {s:?} is not of the form t/g"));
    Ok((parse(t)?, parse(g)?))
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, String> {
    let config = solve_config(&args.engine)?;
    let ratios = args.ratios.iter().map(|r| parse_ratio(r)).collect::<Result<Vec<_>, _>>()?;
    println!("{:<10} {:<8} {:<10} {:<6} {:>10}", "fraction", "decimal", "verdict", "mon", "seconds");
    for (t, g) in ratios {
        let params = GameParams::new(args.bins, t, g).map_err(|e| e.to_string())?;
        let report = solve(&params, &config).map_err(|e| e.to_string())?;
        let verdict = match report.outcome {
            Outcome::Found => {
                certify(&report, true)?;
                "found"
            }
            Outcome::NotFound => "not found",
            Outcome::Aborted => "aborted",
        };
        let mono = if report.outcome == Outcome::Found {
            report.monotonicity.unwrap_or(g - 1).to_string()
        } else {
            String::new()
        };
        println!(
            "{:<10} {:<8.4} {:<10} {:<6} {:>10.3}",
            format!("{t}/{g}"),
            f64::from(t) / f64::from(g),
            verdict,
            mono,
            report.elapsed.as_secs_f64()
        );
    }
    Ok(EXIT_FOUND)
}
