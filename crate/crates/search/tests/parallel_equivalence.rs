//! The coordinator/worker evaluation changes nothing but speed.

use std::fs;
use std::path::PathBuf;

use binstretch_checker::check;
use binstretch_core::dag::tree_to_dag;
use binstretch_core::dot::emit_dot;
use binstretch_core::{BinConfiguration, GameParams};
use binstretch_search::engine::{Eval, SearchContext, SearchOptions, SharedCaches, Winner};
use binstretch_search::parallel::{generate_tasks, ParallelConfig, TaskStatus, TaskThresholds};
use binstretch_search::solver::{solve, Outcome, SolveConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn options(monotonicity: Option<u32>) -> SearchOptions {
    SearchOptions {
        monotonicity,
        hash_bits: 18,
        feas_hash_bits: 18,
        ..SearchOptions::default()
    }
}

fn run(params: &GameParams, monotonicity: Option<u32>, workers: usize, parallel: ParallelConfig) -> Outcome {
    let config = SolveConfig {
        options: options(monotonicity),
        workers,
        parallel,
        ..SolveConfig::default()
    };
    let report = solve(params, &config).unwrap();
    if let Some(tree) = &report.tree {
        let dag = tree_to_dag(tree, params).unwrap();
        assert!(check(&dag, params).accepted, "{params}");
    }
    report.outcome
}

fn partitions() -> Vec<(usize, ParallelConfig)> {
    let mut out = Vec::new();
    for (workers, batch_size, depth_k, load_fraction) in
        [(1, 250, 6, 0.3), (2, 1, 3, 0.2), (3, 2, 2, 0.4), (4, 7, 5, 0.3)]
    {
        out.push((
            workers,
            ParallelConfig {
                thresholds: TaskThresholds {
                    depth_k,
                    load_fraction,
                    ..TaskThresholds::default()
                },
                batch_size,
                inject_failure: None,
            },
        ));
    }
    out
}

#[test]
fn small_games_agree_with_sequential() {
    for m in 2..=3 {
        for g in 2..=7 {
            for t in g + 1..=9 {
                let params = GameParams::new(m, t, g).unwrap();
                let expected = run(&params, None, 0, ParallelConfig::default());
                for (workers, cfg) in partitions() {
                    assert_eq!(run(&params, None, workers, cfg.clone()), expected, "{params} {workers} {cfg:?}");
                }
            }
        }
    }
}

#[test]
fn nineteen_fourteenths_agree_with_sequential() {
    let three = GameParams::new(3, 19, 14).unwrap();
    for k in [Some(0), Some(2), None] {
        let expected = run(&three, k, 0, ParallelConfig::default());
        for (workers, cfg) in partitions() {
            assert_eq!(run(&three, k, workers, cfg), expected, "k={k:?}");
        }
    }
    let four = GameParams::new(4, 19, 14).unwrap();
    assert_eq!(run(&four, None, 4, ParallelConfig::default()), Outcome::Found);
}

#[test]
fn failed_batches_are_reassigned() {
    let params = GameParams::new(3, 19, 14).unwrap();
    for workers in [1, 3] {
        let cfg = ParallelConfig {
            inject_failure: Some(0),
            ..ParallelConfig::default()
        };
        assert_eq!(run(&params, None, workers, cfg), Outcome::Found);
    }
}

/// Resolve tasks in random order, skipping pruned ones: the root is always
/// decided, and decided correctly, without them.
#[test]
fn pruned_tasks_are_never_needed() {
    let params = GameParams::new(3, 19, 14).unwrap();
    for k in [Some(0), Some(2), None] {
        let opts = options(k);
        let caches = SharedCaches::new(&params, &opts);
        let mut ctx = SearchContext::new(params, opts.clone(), caches.clone());
        let starts = [BinConfiguration::empty(&params)];
        let frontier = generate_tasks(&mut ctx, &starts, &TaskThresholds::default());
        let truth: Vec<Winner> = frontier
            .tasks()
            .iter()
            .map(|task| {
                ctx.set_configuration(&task.config);
                ctx.eval_adv(None, task.config.items().len()).winner().unwrap()
            })
            .collect();
        ctx.set_configuration(&starts[0]);
        let expected = match ctx.eval_adv(None, 0) {
            Eval::Adv => Winner::Adversary,
            _ => Winner::Algorithm,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut f = frontier.clone();
            let mut order: Vec<usize> = (0..truth.len()).collect();
            order.shuffle(&mut rng);
            for id in order {
                if f.root_value().is_some() {
                    break;
                }
                if f.status(id) == TaskStatus::Pending {
                    f.resolve(id, truth[id]);
                }
            }
            assert_eq!(f.root_value(), Some(expected), "k={k:?}");
        }
    }
}

#[test]
fn single_worker_runs_are_deterministic() {
    let params = GameParams::new(3, 19, 14).unwrap();
    let emit = |workers| {
        let config = SolveConfig {
            options: options(None),
            workers,
            ..SolveConfig::default()
        };
        let report = solve(&params, &config).unwrap();
        emit_dot(&tree_to_dag(&report.tree.unwrap(), &params).unwrap(), &params)
    };
    let first = emit(0);
    assert_eq!(emit(0), first);
    assert_eq!(emit(1), emit(1));
}

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tasks_3_19_14_d5.txt")
}

/// Task set of (3,19,14) at depth 5 and load fraction 0.3, one per line.
#[test]
fn task_set_matches_fixture() {
    let params = GameParams::new(3, 19, 14).unwrap();
    let opts = options(None);
    let mut ctx = SearchContext::new(params, opts.clone(), SharedCaches::new(&params, &opts));
    let thresholds = TaskThresholds {
        depth_k: 5,
        ..TaskThresholds::default()
    };
    let frontier = generate_tasks(&mut ctx, &[BinConfiguration::empty(&params)], &thresholds);
    let mut text = String::new();
    for task in frontier.tasks() {
        let c = &task.config;
        text.push_str(&format!("{:?} {} {:?}\n", c.loads(), c.items(), c.last_item()));
    }
    if std::env::var_os("BINSTRETCH_BLESS").is_some() {
        fs::write(fixture(), &text).unwrap();
    }
    let expected = fs::read_to_string(fixture()).expect("fixture present; regenerate with BINSTRETCH_BLESS=1");
    assert_eq!(text, expected);
}
