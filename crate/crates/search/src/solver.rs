//! Top-level driver: initial items, monotonicity rounds, evaluation and
//! recording.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use binstretch_core::{BinConfiguration, GameParams, ItemMultiset, StrategyTree};

use crate::engine::{
    Control, Eval, ProgressSink, SearchContext, SearchError, SearchOptions, SearchStats, SharedCaches,
};
use crate::feasibility::pack_items;
use crate::parallel::{self, ParallelConfig};
use crate::record::Recorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The adversary has a winning strategy.
    Found,
    /// The algorithm survives under the searched restrictions.
    NotFound,
    /// Time limit or cancellation.
    Aborted,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Found => "found",
            Outcome::NotFound => "not-found",
            Outcome::Aborted => "aborted",
        }
    }
}

#[derive(Clone)]
pub struct SolveConfig {
    pub options: SearchOptions,
    /// Items sent before the search starts.
    pub initial: Vec<u32>,
    /// Whether the last initial item restricts the first searched item.
    pub seed_initial_last: bool,
    /// Try monotonicity `k, k+1, ...` until a strategy is found.
    pub iterate_monotonicity: bool,
    /// 0 runs sequentially.
    pub workers: usize,
    pub parallel: ParallelConfig,
    pub record: bool,
    pub time_limit: Option<Duration>,
    pub progress: Option<ProgressSink>,
    pub progress_interval: Duration,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            options: SearchOptions::default(),
            initial: Vec::new(),
            seed_initial_last: false,
            iterate_monotonicity: false,
            workers: 0,
            parallel: ParallelConfig::default(),
            record: true,
            time_limit: None,
            progress: None,
            progress_interval: Duration::from_secs(10),
        }
    }
}

/// One monotonicity round.
#[derive(Debug, Clone)]
pub struct Round {
    pub monotonicity: Option<u32>,
    pub outcome: Outcome,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub params: GameParams,
    pub outcome: Outcome,
    /// Monotonicity of the deciding round.
    pub monotonicity: Option<u32>,
    pub tree: Option<StrategyTree>,
    pub stats: SearchStats,
    pub tasks: usize,
    pub rounds: Vec<Round>,
    pub elapsed: Duration,
}

/// Configurations reachable after the algorithm places `initial`, deduplicated.
/// Configurations where an item cannot be placed are dropped: the adversary
/// has already won there.
pub fn apply_initial_strategy(params: &GameParams, initial: &[u32]) -> Result<Vec<BinConfiguration>, SearchError> {
    let g = params.g();
    if let Some(&bad) = initial.iter().find(|&&e| e == 0 || e > g) {
        return Err(SearchError::InvalidPrefix(initial.to_vec(), format!("item {bad} outside 1..={g}")));
    }
    let items = ItemMultiset::from_items(g, initial)?;
    if pack_items(&items, params).is_none() {
        return Err(SearchError::InvalidPrefix(
            initial.to_vec(),
            format!("no packing into {} bins of size {g}", params.m()),
        ));
    }
    let mut level: BTreeSet<Vec<u32>> = BTreeSet::from([vec![0; params.m()]]);
    for &e in initial {
        let mut next = BTreeSet::new();
        for loads in &level {
            for i in 0..loads.len() {
                if (i > 0 && loads[i] == loads[i - 1]) || loads[i] + e >= params.t() {
                    continue;
                }
                let mut l = loads.clone();
                l[i] += e;
                l.sort_unstable_by(|a, b| b.cmp(a));
                next.insert(l);
            }
        }
        level = next;
    }
    level
        .into_iter()
        .map(|loads| BinConfiguration::from_parts(params, loads, items.clone(), None).map_err(SearchError::from))
        .collect()
}

/// Evaluate every start configuration in one context.
pub fn evaluate_sequential(ctx: &mut SearchContext, starts: &[BinConfiguration]) -> Eval {
    for start in starts {
        ctx.set_configuration(start);
        let depth = start.items().len();
        match ctx.eval_adv(None, depth) {
            Eval::Adv => {}
            other => {
                ctx.flush_ticks();
                return other;
            }
        }
    }
    ctx.flush_ticks();
    Eval::Adv
}

/// Run the whole pipeline for `params`.
pub fn solve(params: &GameParams, config: &SolveConfig) -> Result<SolveReport, SearchError> {
    let control = Arc::new(Control::new(
        config.time_limit,
        config.progress.clone(),
        config.progress_interval,
    ));
    let mut starts = apply_initial_strategy(params, &config.initial)?;
    if config.seed_initial_last {
        if let Some(&last) = config.initial.last() {
            for s in &mut starts {
                s.set_last_item(Some(last));
            }
        }
    }
    let caches = SharedCaches::new(params, &config.options);
    let schedule: Vec<Option<u32>> = if config.iterate_monotonicity {
        let first = config.options.monotonicity.unwrap_or(0);
        (first..params.g().saturating_sub(1))
            .map(Some)
            .chain(std::iter::once(None))
            .collect()
    } else {
        vec![config.options.monotonicity]
    };

    let mut report = SolveReport {
        params: *params,
        outcome: Outcome::NotFound,
        monotonicity: None,
        tree: None,
        stats: SearchStats::default(),
        tasks: 0,
        rounds: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for mono in schedule {
        let options = SearchOptions {
            monotonicity: mono,
            ..config.options.clone()
        };
        let round_start = control.elapsed();
        control.set_phase(&match options.effective_monotonicity(params) {
            Some(k) => format!("monotonicity {k}"),
            None => String::from("full"),
        });
        let result = if config.workers == 0 {
            let mut ctx = SearchContext::new(*params, options.clone(), caches.clone());
            ctx.set_control(Some(control.clone()));
            let r = evaluate_sequential(&mut ctx, &starts);
            report.stats.merge(&ctx.stats());
            r
        } else {
            let run = parallel::evaluate(
                params,
                &starts,
                &options,
                &caches,
                &control,
                config.workers,
                &config.parallel,
            );
            report.stats.merge(&run.stats);
            report.tasks += run.tasks;
            run.result
        };
        let outcome = match result {
            Eval::Adv => Outcome::Found,
            Eval::Alg => Outcome::NotFound,
            Eval::Stop => Outcome::Aborted,
        };
        report.rounds.push(Round {
            monotonicity: options.effective_monotonicity(params),
            outcome,
            elapsed: control.elapsed() - round_start,
        });
        report.outcome = outcome;
        report.monotonicity = options.effective_monotonicity(params);
        if outcome != Outcome::NotFound {
            if outcome == Outcome::Found && config.record {
                control.set_phase("recording");
                let record_opts = SearchOptions {
                    two_sided_cache: true,
                    ..options
                };
                let mut ctx = SearchContext::new(*params, record_opts, caches.clone());
                ctx.set_control(Some(control.clone()));
                match Recorder::new(&mut ctx).record(&config.initial, config.seed_initial_last) {
                    Ok(tree) => report.tree = Some(tree),
                    Err(SearchError::Aborted) => report.outcome = Outcome::Aborted,
                    Err(e) => return Err(e),
                }
                report.stats.merge(&ctx.stats());
            }
            break;
        }
    }
    control.report_now();
    report.elapsed = control.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_items_spread_over_placements() {
        let params = GameParams::new(3, 19, 14).unwrap();
        let starts = apply_initial_strategy(&params, &[5, 1, 1]).unwrap();
        let loads: Vec<Vec<u32>> = starts.iter().map(|s| s.loads().to_vec()).collect();
        assert_eq!(loads, vec![vec![5, 1, 1], vec![5, 2, 0], vec![6, 1, 0], vec![7, 0, 0]]);
        assert!(starts.iter().all(|s| s.items().len() == 3));
    }

    #[test]
    fn unpackable_initial_items_are_rejected() {
        let params = GameParams::new(2, 5, 3).unwrap();
        assert!(matches!(
            apply_initial_strategy(&params, &[3, 3, 1]),
            Err(SearchError::InvalidPrefix(..))
        ));
        assert!(apply_initial_strategy(&params, &[4]).is_err());
    }

    #[test]
    fn small_cases() {
        for (m, t, g, found) in [(3, 4, 3, true), (2, 4, 3, true), (2, 5, 3, false)] {
            let params = GameParams::new(m, t, g).unwrap();
            let report = solve(&params, &SolveConfig::default()).unwrap();
            assert_eq!(report.outcome == Outcome::Found, found, "{params}");
            assert_eq!(report.tree.is_some(), found);
        }
    }
}
