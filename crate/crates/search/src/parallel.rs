//! Coordinator/worker evaluation.
//!
//! The coordinator expands the top of the game tree into a frontier DAG whose
//! leaves are tasks (adversary vertices at the task frontier). Workers
//! evaluate tasks with the sequential engine over shared caches and report
//! each result as soon as it is known; the coordinator propagates results up
//! the frontier and prunes tasks whose value no longer matters.
//!
//! Messages: `Sync` (task table), `Assign` (batch of ids), `Result`,
//! `BatchDone`, `Failed` (batch handed back after a worker fault) and
//! `Shutdown`. Pruning is delivered through a shared flag per task so that a
//! worker can abandon the task it is running.

use std::collections::{HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use binstretch_core::{BinConfiguration, GameParams};
use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use crate::engine::{Control, Eval, SearchContext, SearchOptions, SearchStats, SharedCaches, Winner};
use crate::pruning::good_situation;

/// Where the coordinator stops expanding and hands vertices to workers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskThresholds {
    /// Item count at which a vertex becomes a task.
    pub depth_k: usize,
    /// Item volume `ceil(load_fraction * g)` at which a vertex becomes a task.
    pub load_fraction: f64,
    /// Frontier size past which every unexpanded vertex becomes a task.
    pub max_nodes: usize,
}

impl Default for TaskThresholds {
    fn default() -> Self {
        TaskThresholds {
            depth_k: 6,
            load_fraction: 0.3,
            max_nodes: 1 << 18,
        }
    }
}

impl TaskThresholds {
    pub fn task_load(&self, params: &GameParams) -> u32 {
        (self.load_fraction * f64::from(params.g())).ceil() as u32
    }
}

#[derive(Debug, Clone)]
pub struct ParallelConfig {
    pub thresholds: TaskThresholds,
    /// Largest batch handed to one worker.
    pub batch_size: usize,
    #[doc(hidden)]
    /// Worker that panics on its first task; exercises reassignment.
    pub inject_failure: Option<usize>,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig {
            thresholds: TaskThresholds::default(),
            batch_size: 250,
            inject_failure: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskStatus {
    Pending,
    Assigned,
    Done(Winner),
    Pruned,
}

#[derive(Debug, Clone)]
pub struct Task {
    pub id: usize,
    pub config: BinConfiguration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// Adversary must win every start configuration.
    Root,
    Adv,
    /// Algorithm reply to one item.
    Alg,
    Task(usize),
}

#[derive(Debug, Clone)]
struct Node {
    kind: Kind,
    children: Vec<usize>,
    parents: Vec<usize>,
    value: Option<Winner>,
    undecided: usize,
    live_parents: usize,
    released: bool,
}

/// Coordinator-owned top of the game tree.
#[derive(Debug, Clone)]
pub struct Frontier {
    nodes: Vec<Node>,
    root: usize,
    tasks: Vec<Task>,
    task_nodes: Vec<usize>,
    status: Vec<TaskStatus>,
}

impl Frontier {
    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn status(&self, id: usize) -> TaskStatus {
        self.status[id]
    }

    pub fn root_value(&self) -> Option<Winner> {
        self.nodes[self.root].value
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn add(&mut self, kind: Kind, value: Option<Winner>) -> usize {
        self.nodes.push(Node {
            kind,
            children: Vec::new(),
            parents: Vec::new(),
            value,
            undecided: 0,
            live_parents: 0,
            released: false,
        });
        self.nodes.len() - 1
    }

    fn link(&mut self, parent: usize, child: usize) {
        self.nodes[parent].children.push(child);
        self.nodes[child].parents.push(parent);
    }

    /// Value of an internal node from its children, if already determined.
    fn combine(&self, n: usize) -> Option<Winner> {
        let node = &self.nodes[n];
        let (wins, loses) = match node.kind {
            Kind::Adv => (Winner::Adversary, Winner::Algorithm),
            Kind::Alg | Kind::Root => (Winner::Algorithm, Winner::Adversary),
            Kind::Task(_) => return node.value,
        };
        let values = node.children.iter().map(|&c| self.nodes[c].value);
        let mut all = true;
        for v in values {
            if v == Some(wins) {
                return Some(wins);
            }
            all &= v == Some(loses);
        }
        all.then_some(loses)
    }

    /// Settle values bottom-up and compute liveness after construction.
    fn settle(&mut self) {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut state = vec![0u8; self.nodes.len()];
        let mut stack = vec![(self.root, 0usize)];
        state[self.root] = 1;
        while let Some((n, i)) = stack.pop() {
            if i < self.nodes[n].children.len() {
                stack.push((n, i + 1));
                let c = self.nodes[n].children[i];
                if state[c] == 0 {
                    state[c] = 1;
                    stack.push((c, 0));
                }
            } else {
                order.push(n);
            }
        }
        for &n in &order {
            if self.nodes[n].value.is_none() {
                self.nodes[n].value = self.combine(n);
            }
            let undecided = self.nodes[n]
                .children
                .iter()
                .filter(|&&c| self.nodes[c].value.is_none())
                .count();
            self.nodes[n].undecided = undecided;
        }
        // Liveness: reachable from the root through undecided nodes.
        for &n in order.iter().rev() {
            let alive = n == self.root || self.nodes[n].live_parents > 0;
            if alive && self.nodes[n].value.is_none() {
                for i in 0..self.nodes[n].children.len() {
                    let c = self.nodes[n].children[i];
                    self.nodes[c].live_parents += 1;
                }
            } else {
                self.nodes[n].released = true;
            }
        }
        for (id, &node) in self.task_nodes.iter().enumerate() {
            let n = &self.nodes[node];
            self.status[id] = match n.value {
                Some(w) => TaskStatus::Done(w),
                None if n.live_parents == 0 => TaskStatus::Pruned,
                None => TaskStatus::Pending,
            };
        }
    }

    /// Record a task result; returns ids of tasks pruned as a consequence.
    pub fn resolve(&mut self, id: usize, winner: Winner) -> Vec<usize> {
        let mut pruned = Vec::new();
        if matches!(self.status[id], TaskStatus::Done(_)) {
            return pruned;
        }
        self.status[id] = TaskStatus::Done(winner);
        let node = self.task_nodes[id];
        if self.nodes[node].value.is_none() {
            self.decide(node, winner, &mut pruned);
        }
        pruned
    }

    fn decide(&mut self, n: usize, w: Winner, pruned: &mut Vec<usize>) {
        let mut work = vec![(n, w)];
        while let Some((n, w)) = work.pop() {
            if self.nodes[n].value.is_some() {
                continue;
            }
            self.nodes[n].value = Some(w);
            self.release(n, pruned);
            for i in 0..self.nodes[n].parents.len() {
                let p = self.nodes[n].parents[i];
                if self.nodes[p].value.is_some() {
                    continue;
                }
                let wins = match self.nodes[p].kind {
                    Kind::Adv => Winner::Adversary,
                    _ => Winner::Algorithm,
                };
                if w == wins {
                    work.push((p, w));
                } else {
                    self.nodes[p].undecided -= 1;
                    if self.nodes[p].undecided == 0 {
                        let loses = match wins {
                            Winner::Adversary => Winner::Algorithm,
                            Winner::Algorithm => Winner::Adversary,
                        };
                        work.push((p, loses));
                    }
                }
            }
        }
    }

    /// Drop this node's claim on its children; orphaned subtrees are pruned.
    fn release(&mut self, n: usize, pruned: &mut Vec<usize>) {
        let mut stack = vec![n];
        while let Some(n) = stack.pop() {
            if self.nodes[n].released {
                continue;
            }
            self.nodes[n].released = true;
            for i in 0..self.nodes[n].children.len() {
                let c = self.nodes[n].children[i];
                if self.nodes[c].value.is_some() || self.nodes[c].released {
                    continue;
                }
                self.nodes[c].live_parents -= 1;
                if self.nodes[c].live_parents == 0 {
                    if let Kind::Task(id) = self.nodes[c].kind {
                        if matches!(self.status[id], TaskStatus::Pending | TaskStatus::Assigned) {
                            self.status[id] = TaskStatus::Pruned;
                            pruned.push(id);
                        }
                    }
                    stack.push(c);
                }
            }
        }
    }
}

type StateKey = (Vec<u32>, Vec<u32>, u32);

struct Expander<'a> {
    ctx: &'a mut SearchContext,
    frontier: Frontier,
    seen: HashMap<StateKey, usize>,
    task_load: u32,
    depth_k: usize,
    max_nodes: usize,
}

impl Expander<'_> {
    fn adversary(&mut self, prev_y: Option<u32>) -> usize {
        let floor = self.ctx.floor();
        let key = (
            self.ctx.loads().to_vec(),
            self.ctx.items().counts().to_vec(),
            floor,
        );
        if let Some(&n) = self.seen.get(&key) {
            return n;
        }
        let n = self.expand(prev_y, floor);
        self.seen.insert(key, n);
        n
    }

    fn expand(&mut self, prev_y: Option<u32>, floor: u32) -> usize {
        let params = *self.ctx.params();
        let opts = self.ctx.options().clone();
        let depth = self.ctx.items().len();
        let alg_leaf = |f: &mut Frontier| f.add(Kind::Adv, Some(Winner::Algorithm));
        if depth >= opts.depth_budget.unwrap_or(params.depth_bound()) {
            return alg_leaf(&mut self.frontier);
        }
        if opts.good_situations && good_situation(self.ctx.loads(), &params) {
            return alg_leaf(&mut self.frontier);
        }
        if opts.state_cache && self.ctx.caches().state.lookup(self.ctx.state_key()) == Some(false) {
            return alg_leaf(&mut self.frontier);
        }
        let y = self.ctx.max_feasible(prev_y);
        if y < i64::from(floor) {
            return alg_leaf(&mut self.frontier);
        }
        let y = y as u32;
        if self.ctx.adversary_heuristic(floor, y).is_some() {
            return self.frontier.add(Kind::Adv, Some(Winner::Adversary));
        }
        if self.ctx.items().total() >= self.task_load
            || depth >= self.depth_k
            || self.frontier.node_count() >= self.max_nodes
        {
            let id = self.frontier.tasks.len();
            let node = self.frontier.add(Kind::Task(id), None);
            self.frontier.tasks.push(Task {
                id,
                config: self.ctx.configuration(),
            });
            self.frontier.task_nodes.push(node);
            self.frontier.status.push(TaskStatus::Pending);
            return node;
        }
        let adv = self.frontier.add(Kind::Adv, None);
        let m = params.m();
        let t = params.t();
        for i in 0..=(y - floor) {
            let e = match opts.item_order {
                crate::engine::ItemOrder::LargestFirst => y - i,
                crate::engine::ItemOrder::SmallestFirst => floor + i,
            };
            if self.ctx.loads()[m - 1] + e >= t {
                let leaf = self.frontier.add(Kind::Alg, Some(Winner::Adversary));
                self.frontier.link(adv, leaf);
                continue;
            }
            let alg = self.frontier.add(Kind::Alg, None);
            self.frontier.link(adv, alg);
            self.ctx.push_item(e);
            let saved = self.ctx.last_item();
            self.ctx.set_last(Some(e));
            let loads = self.ctx.loads().to_vec();
            for b in 0..m {
                if (b > 0 && loads[b] == loads[b - 1]) || loads[b] + e >= t {
                    continue;
                }
                let pos = self.ctx.place_load(b, e);
                let child = self.adversary(Some(y));
                self.ctx.unplace_load(pos, e);
                self.frontier.link(alg, child);
            }
            self.ctx.set_last(saved);
            self.ctx.pop_item(e);
        }
        adv
    }
}

/// Expand the start configurations down to the task frontier.
pub fn generate_tasks(ctx: &mut SearchContext, starts: &[BinConfiguration], thresholds: &TaskThresholds) -> Frontier {
    let task_load = thresholds.task_load(ctx.params());
    let mut ex = Expander {
        ctx,
        frontier: Frontier {
            nodes: Vec::new(),
            root: 0,
            tasks: Vec::new(),
            task_nodes: Vec::new(),
            status: Vec::new(),
        },
        seen: HashMap::new(),
        task_load,
        depth_k: thresholds.depth_k,
        max_nodes: thresholds.max_nodes,
    };
    let root = ex.frontier.add(Kind::Root, None);
    for start in starts {
        ex.ctx.set_configuration(start);
        let child = ex.adversary(None);
        ex.frontier.link(root, child);
    }
    let mut frontier = ex.frontier;
    frontier.settle();
    frontier
}

#[derive(Debug)]
pub enum ToWorker {
    Sync(Arc<Vec<Task>>),
    Assign(Vec<usize>),
    Shutdown,
}

#[derive(Debug)]
pub enum FromWorker {
    Result { worker: usize, id: usize, winner: Winner },
    BatchDone { worker: usize },
    Failed { worker: usize, ids: Vec<usize> },
}

/// Shared state a worker needs besides its channels.
#[derive(Clone)]
pub struct WorkerEnv {
    pub params: GameParams,
    pub options: SearchOptions,
    pub caches: SharedCaches,
    pub control: Arc<Control>,
    pub pruned: Arc<Vec<AtomicBool>>,
    pub stats: Arc<Mutex<SearchStats>>,
    pub inject_failure: bool,
}

struct TaskRunner {
    env: WorkerEnv,
    ctx: SearchContext,
    current: Arc<AtomicUsize>,
    fail_next: bool,
}

impl TaskRunner {
    fn new(env: WorkerEnv) -> Self {
        let current = Arc::new(AtomicUsize::new(usize::MAX));
        let ctx = Self::context(&env, &current);
        let fail_next = env.inject_failure;
        TaskRunner {
            env,
            ctx,
            current,
            fail_next,
        }
    }

    fn context(env: &WorkerEnv, current: &Arc<AtomicUsize>) -> SearchContext {
        let mut ctx = SearchContext::new(env.params, env.options.clone(), env.caches.clone());
        ctx.set_control(Some(env.control.clone()));
        let pruned = env.pruned.clone();
        let current = current.clone();
        ctx.set_interrupt(Some(Box::new(move || {
            let id = current.load(Ordering::Relaxed);
            id != usize::MAX && pruned[id].load(Ordering::Relaxed)
        })));
        ctx
    }

    /// `Ok(None)` when the task was pruned or the run stopped.
    fn run(&mut self, task: &Task) -> Result<Option<Winner>, ()> {
        if self.env.pruned[task.id].load(Ordering::Relaxed) {
            return Ok(None);
        }
        self.current.store(task.id, Ordering::Relaxed);
        let fail = std::mem::take(&mut self.fail_next);
        let ctx = &mut self.ctx;
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            if fail {
                panic!("injected worker failure");
            }
            ctx.set_configuration(&task.config);
            ctx.eval_adv(None, task.config.items().len())
        }));
        self.current.store(usize::MAX, Ordering::Relaxed);
        match outcome {
            Ok(e) => Ok(e.winner()),
            Err(_) => {
                self.ctx = Self::context(&self.env, &self.current);
                Err(())
            }
        }
    }

    fn finish(mut self) {
        self.ctx.flush_ticks();
        self.env.stats.lock().expect("stats lock").merge(&self.ctx.stats());
    }
}

/// Worker loop: evaluate assigned batches until `Shutdown`.
pub fn run_worker(worker: usize, env: WorkerEnv, rx: Receiver<ToWorker>, tx: Sender<FromWorker>) {
    let mut runner = TaskRunner::new(env);
    let mut table: Arc<Vec<Task>> = Arc::new(Vec::new());
    while let Ok(msg) = rx.recv() {
        match msg {
            ToWorker::Sync(t) => table = t,
            ToWorker::Assign(batch) => {
                for (i, &id) in batch.iter().enumerate() {
                    match runner.run(&table[id]) {
                        Ok(Some(winner)) => {
                            let _ = tx.send(FromWorker::Result { worker, id, winner });
                        }
                        Ok(None) => {}
                        Err(()) => {
                            let _ = tx.send(FromWorker::Failed {
                                worker,
                                ids: batch[i..].to_vec(),
                            });
                            break;
                        }
                    }
                }
                let _ = tx.send(FromWorker::BatchDone { worker });
            }
            ToWorker::Shutdown => break,
        }
    }
    runner.finish();
}

/// Outcome of one parallel evaluation.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub result: Eval,
    pub stats: SearchStats,
    pub tasks: usize,
}

struct Coordinator<'a> {
    frontier: Frontier,
    pending: VecDeque<usize>,
    batch_size: usize,
    workers: usize,
    pruned: Arc<Vec<AtomicBool>>,
    control: &'a Control,
    done: usize,
}

impl Coordinator<'_> {
    fn next_batch(&mut self) -> Vec<usize> {
        let live = self
            .pending
            .iter()
            .filter(|&&id| self.frontier.status[id] == TaskStatus::Pending)
            .count();
        let size = live.div_ceil(self.workers.max(1)).clamp(1, self.batch_size.max(1));
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size {
            let Some(id) = self.pending.pop_front() else { break };
            if self.frontier.status[id] == TaskStatus::Pending {
                self.frontier.status[id] = TaskStatus::Assigned;
                batch.push(id);
            }
        }
        batch
    }

    fn ingest(&mut self, id: usize, winner: Winner) {
        self.done += 1;
        for p in self.frontier.resolve(id, winner) {
            self.pruned[p].store(true, Ordering::Relaxed);
        }
        self.control.set_tasks(self.done, self.frontier.tasks.len());
    }

    fn hand_back(&mut self, ids: &[usize]) {
        for &id in ids.iter().rev() {
            if self.frontier.status[id] == TaskStatus::Assigned {
                self.frontier.status[id] = TaskStatus::Pending;
                self.pending.push_front(id);
            }
        }
    }

    /// Message loop; returns the root value or `None` when stopped.
    fn run(&mut self, senders: &[Sender<ToWorker>], rx: &Receiver<FromWorker>, mut inline: Option<&mut TaskRunner>) -> Option<Winner> {
        let table = Arc::new(self.frontier.tasks.clone());
        for s in senders {
            let _ = s.send(ToWorker::Sync(table.clone()));
        }
        let mut idle: Vec<usize> = (0..senders.len()).collect();
        loop {
            if let Some(v) = self.frontier.root_value() {
                return Some(v);
            }
            if self.control.should_stop() {
                return None;
            }
            while let Some(&w) = idle.last() {
                let batch = self.next_batch();
                if batch.is_empty() {
                    break;
                }
                idle.pop();
                let _ = senders[w].send(ToWorker::Assign(batch));
            }
            if let Some(runner) = inline.as_deref_mut() {
                let batch = self.next_batch();
                if batch.is_empty() {
                    return self.frontier.root_value();
                }
                for (i, &id) in batch.iter().enumerate() {
                    match runner.run(&table[id]) {
                        Ok(Some(w)) => self.ingest(id, w),
                        Ok(None) => {
                            if self.control.should_stop() {
                                return None;
                            }
                        }
                        Err(()) => {
                            self.hand_back(&batch[i..]);
                            break;
                        }
                    }
                    if self.frontier.root_value().is_some() {
                        break;
                    }
                }
                self.control.maybe_report();
                continue;
            }
            if idle.len() == senders.len() {
                // Nothing in flight and nothing left to hand out.
                return self.frontier.root_value();
            }
            match rx.recv_timeout(Duration::from_millis(50)) {
                Ok(FromWorker::Result { id, winner, .. }) => self.ingest(id, winner),
                Ok(FromWorker::BatchDone { worker }) => idle.push(worker),
                Ok(FromWorker::Failed { ids, .. }) => self.hand_back(&ids),
                Err(RecvTimeoutError::Timeout) => self.control.maybe_report(),
                Err(RecvTimeoutError::Disconnected) => return None,
            }
        }
    }
}

/// Evaluate `starts` with `workers` workers.
pub fn evaluate(
    params: &GameParams,
    starts: &[BinConfiguration],
    options: &SearchOptions,
    caches: &SharedCaches,
    control: &Arc<Control>,
    workers: usize,
    config: &ParallelConfig,
) -> RunResult {
    let mut ctx = SearchContext::new(*params, options.clone(), caches.clone());
    ctx.set_control(Some(control.clone()));
    control.set_phase("generating tasks");
    let frontier = generate_tasks(&mut ctx, starts, &config.thresholds);
    let mut stats = ctx.stats();
    let tasks = frontier.tasks.len();
    control.set_tasks(0, tasks);
    control.set_phase("evaluating tasks");
    let pruned: Arc<Vec<AtomicBool>> = Arc::new(
        (0..tasks)
            .map(|id| AtomicBool::new(frontier.status(id) == TaskStatus::Pruned))
            .collect(),
    );
    let pending: VecDeque<usize> = (0..tasks)
        .filter(|&id| frontier.status(id) == TaskStatus::Pending)
        .collect();
    let worker_stats = Arc::new(Mutex::new(SearchStats::default()));
    let env = |w: usize| WorkerEnv {
        params: *params,
        options: options.clone(),
        caches: caches.clone(),
        control: control.clone(),
        pruned: pruned.clone(),
        stats: worker_stats.clone(),
        inject_failure: config.inject_failure == Some(w),
    };
    let mut coordinator = Coordinator {
        frontier,
        pending,
        batch_size: config.batch_size,
        workers: workers.max(1),
        pruned: pruned.clone(),
        control,
        done: 0,
    };
    let value = run_workers(&mut coordinator, workers, env);
    for flag in pruned.iter() {
        flag.store(true, Ordering::Relaxed);
    }
    stats.merge(&worker_stats.lock().expect("stats lock"));
    RunResult {
        result: match value {
            Some(Winner::Adversary) => Eval::Adv,
            Some(Winner::Algorithm) => Eval::Alg,
            None => Eval::Stop,
        },
        stats,
        tasks,
    }
}

#[cfg(feature = "parallel")]
fn run_workers(coordinator: &mut Coordinator<'_>, workers: usize, env: impl Fn(usize) -> WorkerEnv) -> Option<Winner> {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool,
        Err(_) => return run_inline(coordinator, env(0)),
    };
    let (result_tx, result_rx) = unbounded();
    let mut senders = Vec::with_capacity(workers);
    pool.in_place_scope(|scope| {
        for w in 0..workers.max(1) {
            let (tx, rx) = unbounded();
            senders.push(tx);
            let result_tx = result_tx.clone();
            let env = env(w);
            scope.spawn(move |_| run_worker(w, env, rx, result_tx));
        }
        let value = coordinator.run(&senders, &result_rx, None);
        for flag in coordinator.pruned.iter() {
            flag.store(true, Ordering::Relaxed);
        }
        for s in &senders {
            let _ = s.send(ToWorker::Shutdown);
        }
        value
    })
}

#[cfg(not(feature = "parallel"))]
fn run_workers(coordinator: &mut Coordinator<'_>, _workers: usize, env: impl Fn(usize) -> WorkerEnv) -> Option<Winner> {
    run_inline(coordinator, env(0))
}

/// Evaluate tasks on the coordinator's thread.
fn run_inline(coordinator: &mut Coordinator<'_>, env: WorkerEnv) -> Option<Winner> {
    let mut runner = TaskRunner::new(env);
    let (_, rx) = unbounded();
    let value = coordinator.run(&[], &rx, Some(&mut runner));
    runner.finish();
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty() -> Frontier {
        Frontier {
            nodes: Vec::new(),
            root: 0,
            tasks: Vec::new(),
            task_nodes: Vec::new(),
            status: Vec::new(),
        }
    }

    fn task(f: &mut Frontier, params: &GameParams) -> usize {
        let id = f.tasks.len();
        let n = f.add(Kind::Task(id), None);
        f.tasks.push(Task {
            id,
            config: BinConfiguration::empty(params),
        });
        f.task_nodes.push(n);
        f.status.push(TaskStatus::Pending);
        n
    }

    /// root -> adv -> {alg_a -> {t0, t1}, alg_b -> {t2, t3}}
    fn two_candidates() -> Frontier {
        let params = GameParams::new(3, 19, 14).unwrap();
        let mut f = empty();
        let root = f.add(Kind::Root, None);
        let adv = f.add(Kind::Adv, None);
        f.link(root, adv);
        for _ in 0..2 {
            let alg = f.add(Kind::Alg, None);
            f.link(adv, alg);
            for _ in 0..2 {
                let t = task(&mut f, &params);
                f.link(alg, t);
            }
        }
        f.settle();
        f
    }

    #[test]
    fn lost_candidate_keeps_siblings_alive() {
        let mut f = two_candidates();
        // The algorithm refutes candidate a: t1 becomes irrelevant, b stays.
        let pruned = f.resolve(0, Winner::Algorithm);
        assert_eq!(pruned, vec![1]);
        assert_eq!(f.status(2), TaskStatus::Pending);
        assert_eq!(f.status(3), TaskStatus::Pending);
        assert_eq!(f.root_value(), None);
        f.resolve(2, Winner::Adversary);
        assert_eq!(f.root_value(), None);
        f.resolve(3, Winner::Adversary);
        assert_eq!(f.root_value(), Some(Winner::Adversary));
    }

    #[test]
    fn won_candidate_prunes_the_rest() {
        let mut f = two_candidates();
        assert!(f.resolve(0, Winner::Adversary).is_empty());
        let pruned = f.resolve(1, Winner::Adversary);
        assert_eq!(f.root_value(), Some(Winner::Adversary));
        assert_eq!(pruned.len(), 2);
        assert_eq!(f.status(2), TaskStatus::Pruned);
    }

    #[test]
    fn shared_task_survives_while_one_parent_needs_it() {
        let params = GameParams::new(3, 19, 14).unwrap();
        let mut f = empty();
        let root = f.add(Kind::Root, None);
        let a = f.add(Kind::Adv, None);
        let b = f.add(Kind::Adv, None);
        f.link(root, a);
        f.link(root, b);
        let shared = task(&mut f, &params);
        let only_a = task(&mut f, &params);
        let only_b = task(&mut f, &params);
        for (p, c) in [(a, shared), (a, only_a), (b, shared), (b, only_b)] {
            let alg = f.add(Kind::Alg, None);
            f.link(p, alg);
            f.link(alg, c);
        }
        f.settle();
        assert!(f.resolve(1, Winner::Adversary).is_empty());
        // `a` is won; the shared task is still needed by `b`.
        assert_eq!(f.status(0), TaskStatus::Pending);
        f.resolve(2, Winner::Adversary);
        assert_eq!(f.status(0), TaskStatus::Pruned);
        assert_eq!(f.root_value(), Some(Winner::Adversary));
    }

    #[test]
    fn decided_children_settle_at_construction() {
        let params = GameParams::new(3, 19, 14).unwrap();
        let mut f = empty();
        let root = f.add(Kind::Root, None);
        let adv = f.add(Kind::Adv, None);
        f.link(root, adv);
        let win = f.add(Kind::Alg, Some(Winner::Adversary));
        f.link(adv, win);
        let alg = f.add(Kind::Alg, None);
        f.link(adv, alg);
        let t = task(&mut f, &params);
        f.link(alg, t);
        f.settle();
        assert_eq!(f.root_value(), Some(Winner::Adversary));
        assert_eq!(f.status(0), TaskStatus::Pruned);
    }

    #[test]
    fn first_move_frontier() {
        let params = GameParams::new(3, 19, 14).unwrap();
        let opts = SearchOptions {
            hash_bits: 12,
            feas_hash_bits: 12,
            ..SearchOptions::plain()
        };
        let mut ctx = SearchContext::new(params, opts.clone(), SharedCaches::new(&params, &opts));
        let start = [BinConfiguration::empty(&params)];
        let thresholds = TaskThresholds {
            depth_k: 1,
            ..TaskThresholds::default()
        };
        let f = generate_tasks(&mut ctx, &start, &thresholds);
        // One task per first item; each has a single canonical placement.
        assert_eq!(f.tasks().len(), 14);
        let deep = TaskThresholds {
            depth_k: 1000,
            load_fraction: 100.0,
            ..TaskThresholds::default()
        };
        let params = GameParams::new(3, 4, 3).unwrap();
        let mut ctx = SearchContext::new(params, opts.clone(), SharedCaches::new(&params, &opts));
        let f = generate_tasks(&mut ctx, &[BinConfiguration::empty(&params)], &deep);
        assert!(f.tasks().is_empty());
        assert_eq!(f.root_value(), Some(Winner::Adversary));
    }
}
