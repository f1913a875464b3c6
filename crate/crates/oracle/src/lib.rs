//! Exhaustive reference implementations.
//!
//! Everything here is deliberately naive: packings are found by plain
//! backtracking over bin assignments and the game is solved by minimax over
//! every item and every bin, memoized exactly on the full state. These are
//! the yardsticks the fast code is compared against on small instances.

use std::collections::HashMap;
use std::sync::Arc;

use binstretch_core::{GameParams, ItemMultiset, PackingCertificate, StrategyDag, StrategyTree};

/// Find any packing of `items` into `m` bins of capacity `g` by backtracking.
pub fn brute_force_packing(items: &ItemMultiset, params: &GameParams) -> Option<PackingCertificate> {
    let sizes = items.sizes_descending();
    if sizes.iter().any(|&s| s > params.g()) {
        return None;
    }
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); params.m()];
    let mut sums = vec![0u32; params.m()];
    fn go(
        sizes: &[u32],
        idx: usize,
        g: u32,
        bins: &mut Vec<Vec<u32>>,
        sums: &mut Vec<u32>,
    ) -> bool {
        if idx == sizes.len() {
            return true;
        }
        let s = sizes[idx];
        for b in 0..bins.len() {
            // Bins with equal sums are interchangeable; try only the first.
            if sums[..b].contains(&sums[b]) {
                continue;
            }
            if sums[b] + s <= g {
                sums[b] += s;
                bins[b].push(s);
                if go(sizes, idx + 1, g, bins, sums) {
                    return true;
                }
                bins[b].pop();
                sums[b] -= s;
            }
        }
        false
    }
    if go(&sizes, 0, params.g(), &mut bins, &mut sums) {
        Some(PackingCertificate::new(bins))
    } else {
        None
    }
}

pub fn brute_force_feasible(items: &ItemMultiset, params: &GameParams) -> bool {
    brute_force_packing(items, params).is_some()
}

/// Largest `y` in `1..=g` such that `items ∪ {y}` packs; `0` if none does and
/// `-1` if `items` alone does not pack.
pub fn max_feasible_enum(items: &ItemMultiset, params: &GameParams) -> i64 {
    if !brute_force_feasible(items, params) {
        return -1;
    }
    let mut probe = items.clone();
    for y in (1..=params.g()).rev() {
        probe.insert(y).expect("size within range");
        let ok = brute_force_feasible(&probe, params);
        probe.remove(y).expect("just inserted");
        if ok {
            return y as i64;
        }
    }
    0
}

/// Exact minimax solver of the lower-bound game.
pub struct OracleSolver {
    params: GameParams,
    monotonicity: Option<u32>,
    memo: HashMap<(Vec<u32>, ItemMultiset, u32), bool>,
    feasible: HashMap<ItemMultiset, bool>,
}

impl OracleSolver {
    /// `monotonicity = Some(k)` restricts every item after the first to at
    /// least `last - k`; `None` is the unrestricted game.
    pub fn new(params: GameParams, monotonicity: Option<u32>) -> Self {
        OracleSolver {
            params,
            monotonicity,
            memo: HashMap::new(),
            feasible: HashMap::new(),
        }
    }

    fn feasible(&mut self, items: &ItemMultiset) -> bool {
        if let Some(&f) = self.feasible.get(items) {
            return f;
        }
        let f = brute_force_feasible(items, &self.params);
        self.feasible.insert(items.clone(), f);
        f
    }

    /// Whether the adversary wins from the empty start.
    pub fn adversary_wins(&mut self) -> bool {
        let loads = vec![0; self.params.m()];
        let items = ItemMultiset::new(self.params.g());
        self.adversary_wins_from(&loads, &items, None)
    }

    /// Whether the adversary, to move, wins from `loads` (sorted
    /// non-increasingly) with `items` already sent and the previous item `last`.
    pub fn adversary_wins_from(
        &mut self,
        loads: &[u32],
        items: &ItemMultiset,
        last: Option<u32>,
    ) -> bool {
        let floor = match (self.monotonicity, last) {
            (Some(k), Some(l)) => l.saturating_sub(k).max(1),
            _ => 1,
        };
        let key = (loads.to_vec(), items.clone(), floor);
        if let Some(&w) = self.memo.get(&key) {
            return w;
        }
        let mut win = false;
        for e in (floor..=self.params.g()).rev() {
            let mut next_items = items.clone();
            next_items.insert(e).expect("size within range");
            if !self.feasible(&next_items) {
                continue;
            }
            if self.every_placement_loses(loads, &next_items, e) {
                win = true;
                break;
            }
        }
        self.memo.insert(key, win);
        win
    }

    fn every_placement_loses(&mut self, loads: &[u32], items: &ItemMultiset, e: u32) -> bool {
        for b in 0..loads.len() {
            if b > 0 && loads[b] == loads[b - 1] {
                continue;
            }
            if loads[b] + e >= self.params.t() {
                continue;
            }
            let mut next = loads.to_vec();
            next[b] += e;
            next.sort_unstable_by(|a, b| b.cmp(a));
            if !self.adversary_wins_from(&next, items, Some(e)) {
                return false;
            }
        }
        true
    }

    /// A winning adversary strategy from the empty start, if one exists.
    pub fn winning_strategy(&mut self) -> Option<StrategyTree> {
        let loads = vec![0; self.params.m()];
        let items = ItemMultiset::new(self.params.g());
        let mut built = HashMap::new();
        self.strategy_from(&loads, &items, None, &mut built)
            .map(|t| Arc::try_unwrap(t).unwrap_or_else(|a| (*a).clone()))
    }

    fn strategy_from(
        &mut self,
        loads: &[u32],
        items: &ItemMultiset,
        last: Option<u32>,
        built: &mut HashMap<(Vec<u32>, ItemMultiset, u32), Arc<StrategyTree>>,
    ) -> Option<Arc<StrategyTree>> {
        if !self.adversary_wins_from(loads, items, last) {
            return None;
        }
        let floor = match (self.monotonicity, last) {
            (Some(k), Some(l)) => l.saturating_sub(k).max(1),
            _ => 1,
        };
        let key = (loads.to_vec(), items.clone(), floor);
        if let Some(t) = built.get(&key) {
            return Some(t.clone());
        }
        let t = self.params.t();
        for e in (floor..=self.params.g()).rev() {
            let mut next_items = items.clone();
            next_items.insert(e).expect("size within range");
            if !self.feasible(&next_items) || !self.every_placement_loses(loads, &next_items, e) {
                continue;
            }
            let mut children = Vec::new();
            let mut overflow = false;
            for b in 0..loads.len() {
                if b > 0 && loads[b] == loads[b - 1] {
                    continue;
                }
                if loads[b] + e >= t {
                    overflow = true;
                    continue;
                }
                let mut next = loads.to_vec();
                next[b] += e;
                let next = sorted_desc(next);
                let child = self
                    .strategy_from(&next, &next_items, Some(e), built)
                    .expect("every placement loses");
                children.push(child);
            }
            let packing = if overflow {
                Some(brute_force_packing(&next_items, &self.params).expect("feasible"))
            } else {
                None
            };
            let node = Arc::new(StrategyTree {
                loads: loads.to_vec(),
                next_items: vec![e],
                packing,
                children,
            });
            built.insert(key, node.clone());
            return Some(node);
        }
        unreachable!("a winning state has a winning item")
    }

    /// Smallest `k` in `0..=g-1` for which the adversary wins under
    /// monotonicity `k`, or `None` if it loses even without restriction.
    pub fn minimal_monotonicity(params: GameParams) -> Option<u32> {
        (0..params.g()).find(|&k| OracleSolver::new(params, Some(k)).adversary_wins())
    }
}

/// Replay a strategy DAG against every algorithm response, checking overflow
/// branches by exhaustive feasibility and certificates by direct counting.
/// Independent of the production checker and meant only for small DAGs.
pub fn replay_strategy(dag: &StrategyDag, params: &GameParams) -> bool {
    if dag.nodes.is_empty() || dag.root >= dag.nodes.len() {
        return false;
    }
    let mut on_path = vec![false; dag.nodes.len()];
    let root_loads = vec![0; params.m()];
    replay(dag, params, dag.root, &root_loads, &ItemMultiset::new(params.g()), 0, &mut on_path)
}

fn sorted_desc(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

fn certificate_covers(cert: &PackingCertificate, items: &ItemMultiset, params: &GameParams) -> bool {
    if cert.bins.len() != params.m() {
        return false;
    }
    if cert.bins.iter().any(|b| b.iter().map(|&x| x as u64).sum::<u64>() > params.g() as u64) {
        return false;
    }
    let mut have: HashMap<u32, u32> = HashMap::new();
    for &x in cert.bins.iter().flatten() {
        *have.entry(x).or_default() += 1;
    }
    (1..=params.g()).all(|s| have.get(&s).copied().unwrap_or(0) >= items.count(s))
}

fn replay(
    dag: &StrategyDag,
    params: &GameParams,
    idx: usize,
    loads: &[u32],
    items: &ItemMultiset,
    depth: usize,
    on_path: &mut Vec<bool>,
) -> bool {
    if depth > params.depth_bound() || on_path[idx] {
        return false;
    }
    let node = &dag.nodes[idx];
    if sorted_desc(node.loads.clone()) != node.loads || node.loads != loads {
        return false;
    }
    if node.next_items.is_empty() || node.next_items.iter().any(|&e| e == 0 || e > params.g()) {
        return false;
    }
    on_path[idx] = true;
    let ok = if node.next_items.len() > 1 {
        // Every placement sequence must overflow while the full list still packs.
        let mut all = items.clone();
        for &e in &node.next_items {
            all.insert(e).expect("checked range");
        }
        node.children.is_empty()
            && node.packing.as_ref().is_some_and(|c| certificate_covers(c, &all, params))
            && brute_force_feasible(&all, params)
            && forced_overflow(loads, &node.next_items, params)
    } else {
        let e = node.next_items[0];
        let mut next_items = items.clone();
        next_items.insert(e).expect("checked range");
        let mut good = true;
        for b in 0..loads.len() {
            if loads[b] + e >= params.t() {
                let certified = node
                    .packing
                    .as_ref()
                    .is_some_and(|c| certificate_covers(c, &next_items, params));
                if !certified || !brute_force_feasible(&next_items, params) {
                    good = false;
                    break;
                }
            } else {
                let mut next = loads.to_vec();
                next[b] += e;
                let next = sorted_desc(next);
                let child = node
                    .children
                    .iter()
                    .copied()
                    .find(|&c| c < dag.nodes.len() && dag.nodes[c].loads == next);
                match child {
                    Some(c) => {
                        if !replay(dag, params, c, &next, &next_items, depth + 1, on_path) {
                            good = false;
                            break;
                        }
                    }
                    None => {
                        good = false;
                        break;
                    }
                }
            }
        }
        good
    };
    on_path[idx] = false;
    ok
}

fn forced_overflow(loads: &[u32], seq: &[u32], params: &GameParams) -> bool {
    let Some((&e, rest)) = seq.split_first() else {
        return false;
    };
    (0..loads.len()).all(|b| {
        if loads[b] + e >= params.t() {
            return true;
        }
        let mut next = loads.to_vec();
        next[b] += e;
        forced_overflow(&sorted_desc(next), rest, params)
    })
}
