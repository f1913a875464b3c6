//! Full search against exhaustive minimax on every small game.

use binstretch_checker::check;
use binstretch_core::dag::{compress_last_layer, tree_to_dag};
use binstretch_core::GameParams;
use binstretch_oracle::{replay_strategy, OracleSolver};
use binstretch_search::engine::{ItemOrder, SearchOptions};
use binstretch_search::solver::{solve, Outcome, SolveConfig};

fn small_games() -> Vec<GameParams> {
    let mut games = Vec::new();
    for m in 2..=3 {
        for g in 1..=7 {
            for t in 2..=9 {
                if let Ok(p) = GameParams::new(m, t, g) {
                    games.push(p);
                }
            }
        }
    }
    games
}

fn small(opts: SearchOptions) -> SearchOptions {
    SearchOptions {
        hash_bits: 16,
        feas_hash_bits: 16,
        ..opts
    }
}

fn variants() -> Vec<(&'static str, SearchOptions)> {
    vec![
        ("default", small(SearchOptions::default())),
        ("plain", small(SearchOptions::plain())),
        (
            "two-sided, smallest first",
            small(SearchOptions {
                two_sided_cache: true,
                item_order: ItemOrder::SmallestFirst,
                ..SearchOptions::default()
            }),
        ),
        (
            "tiny caches",
            SearchOptions {
                hash_bits: 3,
                feas_hash_bits: 3,
                ..SearchOptions::default()
            },
        ),
    ]
}

/// Verdicts agree and every found strategy certifies.
#[test]
fn full_search_matches_brute_force() {
    let games = small_games();
    assert!(games.len() >= 24);
    for params in games {
        let expected = OracleSolver::new(params, None).adversary_wins();
        for (name, options) in variants() {
            let config = SolveConfig {
                options,
                ..SolveConfig::default()
            };
            let report = solve(&params, &config).unwrap();
            assert_eq!(report.outcome == Outcome::Found, expected, "{params} with {name}");
            if let Some(tree) = report.tree {
                let dag = tree_to_dag(&tree, &params).unwrap();
                assert!(check(&dag, &params).accepted, "{params} with {name}");
                assert!(replay_strategy(&dag, &params), "{params} with {name}");
                assert!(check(&compress_last_layer(&dag), &params).accepted);
            }
        }
    }
}

/// Restricted searches match the restricted brute force, and a win at `k`
/// persists for every looser `k`.
#[test]
fn monotonicity_matches_brute_force_and_is_dominated() {
    for params in small_games().into_iter().filter(|p| p.t() > p.g()) {
        let mut won_at = None;
        for k in 0..params.g() {
            let expected = OracleSolver::new(params, Some(k)).adversary_wins();
            let config = SolveConfig {
                options: small(SearchOptions {
                    monotonicity: Some(k),
                    ..SearchOptions::default()
                }),
                ..SolveConfig::default()
            };
            let report = solve(&params, &config).unwrap();
            let found = report.outcome == Outcome::Found;
            assert_eq!(found, expected, "{params} k={k}");
            if let Some(first) = won_at {
                assert!(found, "{params}: found at k={first} but not at k={k}");
            } else if found {
                won_at = Some(k);
            }
            if let Some(tree) = report.tree {
                let dag = tree_to_dag(&tree, &params).unwrap();
                assert!(check(&dag, &params).accepted, "{params} k={k}");
            }
        }
    }
}

#[test]
fn iteration_reports_the_smallest_monotonicity() {
    for params in small_games().into_iter().filter(|p| p.g() <= 5 && p.t() > p.g()) {
        let config = SolveConfig {
            options: small(SearchOptions::default()),
            iterate_monotonicity: true,
            ..SolveConfig::default()
        };
        let report = solve(&params, &config).unwrap();
        let expected = OracleSolver::minimal_monotonicity(params);
        match expected {
            Some(k) => {
                assert_eq!(report.outcome, Outcome::Found, "{params}");
                let reported = report.monotonicity.unwrap_or(params.g() - 1);
                assert_eq!(reported.min(params.g() - 1), k.min(params.g() - 1), "{params}");
            }
            None => assert_eq!(report.outcome, Outcome::NotFound, "{params}"),
        }
    }
}
