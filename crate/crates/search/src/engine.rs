//! The minimax engine.
//!
//! A [`SearchContext`] holds one mutable configuration and walks the game
//! tree in place: items are pushed and popped, bins are moved and moved back,
//! and the Zobrist hashes follow incrementally.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use binstretch_core::{BinConfiguration, CoreError, GameParams, ItemMultiset};
use thiserror::Error;

use crate::feasibility::{max_feasible, DpWorkspace, MaxFeasInput, ObfState};
use crate::hashing::{
    FeasibilityCache, LossyCache, StateCache, ZobristTables, DEFAULT_HASH_BITS, DEFAULT_SEED,
};
use crate::pruning::{
    five_nine_gate, five_nine_heuristic, good_situation, large_item_heuristic, AdversaryWitness,
};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("initial items {0:?} cannot be sent: {1}")]
    InvalidPrefix(Vec<u32>, String),
    #[error("search interrupted")]
    Aborted,
    #[error("inconsistent search state: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Which player wins a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Algorithm,
    Adversary,
}

/// Result of an evaluation that may have been interrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eval {
    Alg,
    Adv,
    Stop,
}

impl Eval {
    pub fn winner(self) -> Option<Winner> {
        match self {
            Eval::Alg => Some(Winner::Algorithm),
            Eval::Adv => Some(Winner::Adversary),
            Eval::Stop => None,
        }
    }
}

/// Order in which the adversary tries item sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemOrder {
    LargestFirst,
    SmallestFirst,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// `Some(k)`: every item is at least the previous one minus `k`.
    /// `None` or `k >= g - 1` is the unrestricted game.
    pub monotonicity: Option<u32>,
    pub good_situations: bool,
    pub large_item: bool,
    pub five_nine: bool,
    pub item_order: ItemOrder,
    /// Cache adversary wins as well as algorithm wins.
    pub two_sided_cache: bool,
    pub state_cache: bool,
    pub feasibility_cache: bool,
    pub seed: u64,
    pub hash_bits: u32,
    pub feas_hash_bits: u32,
    /// Maximum adversary moves; default `m·g + 2`.
    pub depth_budget: Option<usize>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            monotonicity: None,
            good_situations: true,
            large_item: true,
            five_nine: true,
            item_order: ItemOrder::LargestFirst,
            two_sided_cache: false,
            state_cache: true,
            feasibility_cache: true,
            seed: DEFAULT_SEED,
            hash_bits: DEFAULT_HASH_BITS,
            feas_hash_bits: DEFAULT_HASH_BITS,
            depth_budget: None,
        }
    }
}

impl SearchOptions {
    /// No caches and no heuristics.
    pub fn plain() -> Self {
        SearchOptions {
            good_situations: false,
            large_item: false,
            five_nine: false,
            state_cache: false,
            feasibility_cache: false,
            ..Self::default()
        }
    }

    /// Monotonicity with the unrestricted values folded to `None`.
    pub fn effective_monotonicity(&self, params: &GameParams) -> Option<u32> {
        self.monotonicity.filter(|&k| k + 1 < params.g())
    }
}

/// Zobrist tables and the two caches, shared by all contexts of one run.
#[derive(Debug, Clone)]
pub struct SharedCaches {
    pub tables: Arc<ZobristTables>,
    pub state: Arc<StateCache>,
    pub feasibility: Arc<FeasibilityCache>,
}

impl SharedCaches {
    pub fn new(params: &GameParams, opts: &SearchOptions) -> Self {
        SharedCaches {
            tables: Arc::new(ZobristTables::new(params, opts.seed)),
            state: Arc::new(LossyCache::new(if opts.state_cache { opts.hash_bits } else { 1 })),
            feasibility: Arc::new(LossyCache::new(if opts.feasibility_cache {
                opts.feas_hash_bits
            } else {
                1
            })),
        }
    }
}

/// Snapshot passed to progress callbacks.
#[derive(Debug, Clone)]
pub struct Progress {
    pub elapsed: Duration,
    pub nodes: u64,
    pub phase: String,
    pub tasks_done: usize,
    pub tasks_total: usize,
}

pub type ProgressSink = Arc<dyn Fn(&Progress) + Send + Sync>;

/// Cancellation, deadline and progress reporting shared by a run.
pub struct Control {
    start: Instant,
    deadline: Option<Instant>,
    cancelled: AtomicBool,
    nodes: AtomicU64,
    progress: Option<ProgressSink>,
    interval: Duration,
    last_report: Mutex<Instant>,
    phase: Mutex<String>,
    tasks: Mutex<(usize, usize)>,
}

impl Control {
    pub fn new(time_limit: Option<Duration>, progress: Option<ProgressSink>, interval: Duration) -> Self {
        let start = Instant::now();
        Control {
            start,
            deadline: time_limit.map(|d| start + d),
            cancelled: AtomicBool::new(false),
            nodes: AtomicU64::new(0),
            progress,
            interval,
            last_report: Mutex::new(start),
            phase: Mutex::new(String::from("search")),
            tasks: Mutex::new((0, 0)),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(None, None, Duration::from_secs(3600))
    }

    pub fn cancel(&self) {
        self.cancelled.store(true, Ordering::Relaxed);
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn nodes(&self) -> u64 {
        self.nodes.load(Ordering::Relaxed)
    }

    pub fn set_phase(&self, phase: &str) {
        *self.phase.lock().expect("phase lock") = phase.to_string();
    }

    pub fn set_tasks(&self, done: usize, total: usize) {
        *self.tasks.lock().expect("task lock") = (done, total);
    }

    /// Whether the run must stop (cancelled or past the deadline).
    pub fn should_stop(&self) -> bool {
        if self.cancelled.load(Ordering::Relaxed) {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.cancel();
            return true;
        }
        false
    }

    /// Count visited nodes and emit a progress report when one is due.
    pub fn tick(&self, nodes: u64) {
        self.nodes.fetch_add(nodes, Ordering::Relaxed);
        self.maybe_report();
    }

    pub fn maybe_report(&self) {
        let Some(sink) = &self.progress else {
            return;
        };
        let now = Instant::now();
        {
            let mut last = self.last_report.lock().expect("report lock");
            if now.duration_since(*last) < self.interval {
                return;
            }
            *last = now;
        }
        self.report_now_with(sink);
    }

    pub fn report_now(&self) {
        if let Some(sink) = &self.progress {
            self.report_now_with(sink);
        }
    }

    fn report_now_with(&self, sink: &ProgressSink) {
        let (tasks_done, tasks_total) = *self.tasks.lock().expect("task lock");
        sink(&Progress {
            elapsed: self.elapsed(),
            nodes: self.nodes(),
            phase: self.phase.lock().expect("phase lock").clone(),
            tasks_done,
            tasks_total,
        });
    }
}

/// Counters of one context.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub adversary_nodes: u64,
    pub algorithm_nodes: u64,
    pub state_cache_hits: u64,
    pub good_situation_prunes: u64,
    pub heuristic_wins: u64,
    pub dynprog_calls: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.adversary_nodes += other.adversary_nodes;
        self.algorithm_nodes += other.algorithm_nodes;
        self.state_cache_hits += other.state_cache_hits;
        self.good_situation_prunes += other.good_situation_prunes;
        self.heuristic_wins += other.heuristic_wins;
        self.dynprog_calls += other.dynprog_calls;
    }
}

const TICK: u64 = 1 << 12;

/// Per-worker search state.
pub struct SearchContext {
    params: GameParams,
    opts: SearchOptions,
    mono: Option<u32>,
    caches: SharedCaches,
    loads: Vec<u32>,
    items: ItemMultiset,
    last: Option<u32>,
    load_hash: u64,
    item_hash: u64,
    obf: ObfState,
    dp: DpWorkspace,
    stats: SearchStats,
    control: Option<Arc<Control>>,
    interrupt: Option<Box<dyn Fn() -> bool + Send>>,
    stopped: bool,
    pending_ticks: u64,
    depth_budget: usize,
}

impl SearchContext {
    pub fn new(params: GameParams, opts: SearchOptions, caches: SharedCaches) -> Self {
        let mono = opts.effective_monotonicity(&params);
        let depth_budget = opts.depth_budget.unwrap_or(params.depth_bound()).max(1);
        let mut ctx = SearchContext {
            params,
            mono,
            caches,
            loads: vec![0; params.m()],
            items: ItemMultiset::new(params.g()),
            last: None,
            load_hash: 0,
            item_hash: 0,
            obf: ObfState::new(params.m(), params.g()),
            dp: DpWorkspace::new(&params),
            stats: SearchStats::default(),
            control: None,
            interrupt: None,
            stopped: false,
            pending_ticks: 0,
            depth_budget,
            opts,
        };
        ctx.set_configuration(&BinConfiguration::empty(&params));
        ctx
    }

    pub fn params(&self) -> &GameParams {
        &self.params
    }

    pub fn options(&self) -> &SearchOptions {
        &self.opts
    }

    pub fn caches(&self) -> &SharedCaches {
        &self.caches
    }

    pub fn stats(&self) -> SearchStats {
        let mut s = self.stats;
        s.dynprog_calls = self.dp.calls();
        s
    }

    pub fn set_control(&mut self, control: Option<Arc<Control>>) {
        self.control = control;
    }

    /// Extra stop condition consulted together with the control block.
    pub fn set_interrupt(&mut self, interrupt: Option<Box<dyn Fn() -> bool + Send>>) {
        self.interrupt = interrupt;
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn items(&self) -> &ItemMultiset {
        &self.items
    }

    pub fn last_item(&self) -> Option<u32> {
        self.last
    }

    /// Current state as a configuration.
    pub fn configuration(&self) -> BinConfiguration {
        BinConfiguration::from_parts(&self.params, self.loads.clone(), self.items.clone(), self.last)
            .expect("the context keeps a valid configuration")
    }

    /// Replace the current state. The online packing is rebuilt from the
    /// items in decreasing order.
    pub fn set_configuration(&mut self, config: &BinConfiguration) {
        self.loads = config.loads().to_vec();
        self.items = config.items().clone();
        self.last = config.last_item();
        let tables = &self.caches.tables;
        self.load_hash = tables.loads_hash(&self.loads).expect("valid configuration");
        self.item_hash = tables.items_hash(&self.items).expect("valid configuration");
        self.obf = ObfState::new(self.params.m(), self.params.g());
        for size in self.items.sizes_descending() {
            self.obf.insert(size);
        }
        self.stopped = false;
    }

    /// Lower limit on the next item under the monotonicity restriction.
    pub fn floor(&self) -> u32 {
        match (self.mono, self.last) {
            (Some(k), Some(l)) => l.saturating_sub(k).max(1),
            _ => 1,
        }
    }

    /// Cache key of the current state, including floor and monotonicity.
    pub fn state_key(&self) -> u64 {
        let t = &self.caches.tables;
        self.load_hash ^ self.item_hash ^ t.floor_key(self.floor()) ^ t.mono_key(self.mono)
    }

    /// Key of the current configuration alone.
    pub fn config_hash(&self) -> u64 {
        self.load_hash ^ self.item_hash
    }

    fn check_stop(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        self.pending_ticks += 1;
        if self.pending_ticks >= TICK {
            let n = self.pending_ticks;
            self.pending_ticks = 0;
            if let Some(c) = &self.control {
                c.tick(n);
                if c.should_stop() {
                    self.stopped = true;
                }
            }
            if self.interrupt.as_ref().is_some_and(|f| f()) {
                self.stopped = true;
            }
        }
        self.stopped
    }

    /// Flush pending node counts to the control block.
    pub fn flush_ticks(&mut self) {
        if let Some(c) = &self.control {
            c.tick(self.pending_ticks);
        }
        self.pending_ticks = 0;
    }

    pub fn was_stopped(&self) -> bool {
        self.stopped
    }

    pub(crate) fn push_item(&mut self, e: u32) {
        let t = &self.caches.tables;
        let c = self.items.count(e);
        self.items.insert(e).expect("item within 1..=g");
        self.item_hash ^= t.item_key(e, c) ^ t.item_key(e, c + 1);
        self.obf.insert(e);
    }

    pub(crate) fn pop_item(&mut self, e: u32) {
        let t = &self.caches.tables;
        let c = self.items.count(e);
        self.items.remove(e).expect("item was pushed");
        self.item_hash ^= t.item_key(e, c) ^ t.item_key(e, c - 1);
        self.obf.remove(e).expect("item was pushed");
    }

    /// Add `e` to the bin at position `i`; returns its new position.
    pub(crate) fn place_load(&mut self, i: usize, e: u32) -> usize {
        let t = &self.caches.tables;
        let old = self.loads[i];
        let new = old + e;
        let mut h = self.load_hash ^ t.load_key(i, old);
        let mut p = i;
        while p > 0 && self.loads[p - 1] < new {
            let v = self.loads[p - 1];
            h ^= t.load_key(p - 1, v) ^ t.load_key(p, v);
            self.loads[p] = v;
            p -= 1;
        }
        self.loads[p] = new;
        self.load_hash = h ^ t.load_key(p, new);
        p
    }

    /// Undo [`place_load`](Self::place_load).
    pub(crate) fn unplace_load(&mut self, pos: usize, e: u32) {
        let t = &self.caches.tables;
        let m = self.loads.len();
        let cur = self.loads[pos];
        let old = cur - e;
        let mut h = self.load_hash ^ t.load_key(pos, cur);
        let mut p = pos;
        while p + 1 < m && self.loads[p + 1] > old {
            let v = self.loads[p + 1];
            h ^= t.load_key(p + 1, v) ^ t.load_key(p, v);
            self.loads[p] = v;
            p += 1;
        }
        self.loads[p] = old;
        self.load_hash = h ^ t.load_key(p, old);
    }

    pub(crate) fn set_last(&mut self, last: Option<u32>) {
        self.last = last;
    }

    /// Largest item that may be sent next.
    pub fn max_feasible(&mut self, prev_y: Option<u32>) -> i64 {
        let input = MaxFeasInput {
            params: &self.params,
            items: &self.items,
            items_hash: self.item_hash,
            obf_lowerbound: self.obf.lowerbound(),
            prev_y,
            tables: &self.caches.tables,
            cache: self.opts.feasibility_cache.then_some(&*self.caches.feasibility),
        };
        max_feasible(&input, &mut self.dp, None)
    }

    /// Whether the current items plus `extra` (size, copies) still pack.
    pub fn feasible_with(&mut self, extra: &[(u32, u32)]) -> bool {
        feasible_with(
            &mut self.items,
            self.item_hash,
            &self.caches.tables,
            self.opts.feasibility_cache.then_some(&*self.caches.feasibility),
            &mut self.dp,
            &self.params,
            extra,
        )
    }

    /// Adversary-win heuristics at the current configuration.
    pub fn adversary_heuristic(&mut self, floor: u32, y: u32) -> Option<AdversaryWitness> {
        let params = self.params;
        let t = params.t();
        let g = params.g();
        let SearchContext {
            loads,
            items,
            item_hash,
            caches,
            dp,
            opts,
            ..
        } = self;
        let cache = opts.feasibility_cache.then_some(&*caches.feasibility);
        if opts.large_item && loads[0] + g >= t {
            let w = large_item_heuristic(loads, &params, floor, |size, copies| {
                size <= y
                    && feasible_with(items, *item_hash, &caches.tables, cache, dp, &params, &[(size, copies)])
            });
            if w.is_some() {
                return w;
            }
        }
        if opts.five_nine && five_nine_gate(loads, &params) {
            return five_nine_heuristic(loads, &params, floor, |extra| {
                feasible_with(items, *item_hash, &caches.tables, cache, dp, &params, extra)
            });
        }
        None
    }

    fn store(&self, key: Option<u64>, result: Eval) {
        let Some(key) = key else { return };
        match result {
            Eval::Alg => self.caches.state.insert(key, false),
            Eval::Adv if self.opts.two_sided_cache => self.caches.state.insert(key, true),
            _ => {}
        }
    }

    /// Evaluate the current configuration with the adversary to move.
    pub fn eval_adv(&mut self, prev_y: Option<u32>, depth: usize) -> Eval {
        self.stats.adversary_nodes += 1;
        if self.check_stop() {
            return Eval::Stop;
        }
        if depth >= self.depth_budget {
            return Eval::Alg;
        }
        if self.opts.good_situations && good_situation(&self.loads, &self.params) {
            self.stats.good_situation_prunes += 1;
            return Eval::Alg;
        }
        let floor = self.floor();
        let key = self.opts.state_cache.then(|| self.state_key());
        if let Some(k) = key {
            match self.caches.state.lookup(k) {
                Some(false) => {
                    self.stats.state_cache_hits += 1;
                    return Eval::Alg;
                }
                Some(true) if self.opts.two_sided_cache => {
                    self.stats.state_cache_hits += 1;
                    return Eval::Adv;
                }
                _ => {}
            }
        }
        let y = self.max_feasible(prev_y);
        if y < i64::from(floor) {
            self.store(key, Eval::Alg);
            return Eval::Alg;
        }
        let y = y as u32;
        if self.adversary_heuristic(floor, y).is_some() {
            self.stats.heuristic_wins += 1;
            self.store(key, Eval::Adv);
            return Eval::Adv;
        }
        let largest = self.opts.item_order == ItemOrder::LargestFirst;
        let n = y - floor + 1;
        for i in 0..n {
            let e = if largest { y - i } else { floor + i };
            match self.eval_alg(e, y, depth) {
                Eval::Adv => {
                    self.store(key, Eval::Adv);
                    return Eval::Adv;
                }
                Eval::Stop => return Eval::Stop,
                Eval::Alg => {}
            }
        }
        self.store(key, Eval::Alg);
        Eval::Alg
    }

    /// Evaluate the algorithm's reply to item `e`.
    pub fn eval_alg(&mut self, e: u32, y: u32, depth: usize) -> Eval {
        self.stats.algorithm_nodes += 1;
        let m = self.loads.len();
        let t = self.params.t();
        if self.loads[m - 1] + e >= t {
            return Eval::Adv;
        }
        self.push_item(e);
        let prev_last = self.last;
        self.last = Some(e);
        let mut result = Eval::Adv;
        for i in 0..m {
            if i > 0 && self.loads[i] == self.loads[i - 1] {
                continue;
            }
            if self.loads[i] + e >= t {
                continue;
            }
            let pos = self.place_load(i, e);
            let r = self.eval_adv(Some(y), depth + 1);
            self.unplace_load(pos, e);
            match r {
                Eval::Adv => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        self.last = prev_last;
        self.pop_item(e);
        result
    }
}

/// Feasibility of `items` plus extras, through the cache when given.
pub(crate) fn feasible_with(
    items: &mut ItemMultiset,
    item_hash: u64,
    tables: &ZobristTables,
    cache: Option<&FeasibilityCache>,
    dp: &mut DpWorkspace,
    params: &GameParams,
    extra: &[(u32, u32)],
) -> bool {
    let added: u32 = extra.iter().map(|&(s, c)| s * c).sum();
    if items.total() + added > params.capacity() || extra.iter().any(|&(s, c)| c > 0 && s > params.g()) {
        return false;
    }
    let (_, span) = tables.item_dims();
    let mut h = item_hash;
    for &(s, c) in extra {
        let f = items.count(s);
        if (f + c) as usize >= span {
            return false;
        }
        h ^= tables.item_key(s, f) ^ tables.item_key(s, f + c);
        items.insert_many(s, c).expect("size checked");
    }
    let verdict = match cache.and_then(|c| c.lookup(h)) {
        Some(v) => v,
        None => {
            let v = dp.feasible(items);
            if let Some(c) = cache {
                c.insert(h, v);
            }
            v
        }
    };
    for &(s, c) in extra {
        for _ in 0..c {
            items.remove(s).expect("inserted above");
        }
    }
    verdict
}
