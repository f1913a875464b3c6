//! Certification of adversary strategies.
//!
//! [`check`] decides whether a [`StrategyDag`] proves that the adversary wins
//! the game `(m, t, g)`. It trusts nothing stored in the DAG: items are
//! re-derived from the root, loads are re-sorted and compared, every
//! certificate is re-validated and compressed nodes are re-expanded.
//!
//! The crate depends on the core vocabulary only.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use binstretch_core::{validate_packing, GameParams, ItemMultiset, PackingCertificate, StrategyDag};

/// Why a strategy was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    MissingPlacement,
    BadCertificate,
    ItemMismatch,
    Cycle,
    OverflowWithoutCertificate,
    LoadMismatch,
    DepthExceeded,
    RootNotZero,
    ItemNotPositive,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::MissingPlacement => "missing-placement",
            Rule::BadCertificate => "bad-certificate",
            Rule::ItemMismatch => "item-mismatch",
            Rule::Cycle => "cycle",
            Rule::OverflowWithoutCertificate => "overflow-without-certificate",
            Rule::LoadMismatch => "load-mismatch",
            Rule::DepthExceeded => "depth-exceeded",
            Rule::RootNotZero => "root-not-zero",
            Rule::ItemNotPositive => "item-not-positive",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Failing node (index into the DAG) and the violated rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub node: usize,
    pub rule: Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Option<Rejection>,
}

impl Verdict {
    fn accept() -> Self {
        Verdict {
            accepted: true,
            reason: None,
        }
    }

    fn reject(node: usize, rule: Rule) -> Self {
        Verdict {
            accepted: false,
            reason: Some(Rejection { node, rule }),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reason {
            None => f.write_str("accepted"),
            Some(r) => write!(f, "rejected at node {}: {}", r.node, r.rule),
        }
    }
}

fn sorted_desc(loads: &[u32]) -> Vec<u32> {
    let mut v = loads.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Loads after adding `e` to bin `b`, sorted non-increasingly.
fn successor(loads: &[u32], e: u32, b: usize) -> Vec<u32> {
    let mut v = loads.to_vec();
    v[b] += e;
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Whether every way of placing `seq` one item at a time, starting from
/// `loads`, overflows some bin before the list runs out. The certificate is
/// validated separately by the caller.
pub fn expand_compressed(
    loads: &[u32],
    derived_items: &ItemMultiset,
    seq: &[u32],
    cert: &PackingCertificate,
    params: &GameParams,
) -> bool {
    let mut all = derived_items.clone();
    for &e in seq {
        if all.insert(e).is_err() {
            return false;
        }
    }
    if !validate_packing(&all, cert, params) {
        return false;
    }
    let mut memo = HashMap::new();
    forced_overflow(&sorted_desc(loads), seq, params.t(), &mut memo)
}

fn forced_overflow(
    loads: &[u32],
    seq: &[u32],
    t: u32,
    memo: &mut HashMap<(Vec<u32>, usize), bool>,
) -> bool {
    let Some((&e, rest)) = seq.split_first() else {
        return false;
    };
    let key = (loads.to_vec(), seq.len());
    if let Some(&r) = memo.get(&key) {
        return r;
    }
    let mut ok = true;
    for b in 0..loads.len() {
        if b > 0 && loads[b] == loads[b - 1] {
            continue;
        }
        if loads[b] + e < t && !forced_overflow(&successor(loads, e, b), rest, t, memo) {
            ok = false;
            break;
        }
    }
    memo.insert(key, ok);
    ok
}

/// Nodes reachable from the root by following edges of non-compressed nodes,
/// in topological order; `Err(node)` names a node on a cycle.
fn reachable_order(dag: &StrategyDag) -> Result<Vec<usize>, usize> {
    let n = dag.nodes.len();
    let followed = |i: usize| -> &[usize] {
        let node = &dag.nodes[i];
        if node.is_compressed() {
            &[]
        } else {
            &node.children
        }
    };
    let mut reachable = vec![false; n];
    let mut stack = vec![dag.root];
    reachable[dag.root] = true;
    while let Some(i) = stack.pop() {
        for &c in followed(i) {
            if !reachable[c] {
                reachable[c] = true;
                stack.push(c);
            }
        }
    }
    let mut indegree = vec![0usize; n];
    for i in (0..n).filter(|&i| reachable[i]) {
        for &c in followed(i) {
            indegree[c] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| reachable[i] && indegree[i] == 0).collect();
    let mut order = Vec::new();
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &c in followed(i) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    let total = reachable.iter().filter(|&&r| r).count();
    if order.len() < total {
        let on_cycle = (0..n).find(|&i| reachable[i] && indegree[i] > 0).unwrap_or(dag.root);
        return Err(on_cycle);
    }
    Ok(order)
}

/// Decide whether `dag` is a winning adversary strategy for `params`.
/// The first failure in topological order is reported.
pub fn check(dag: &StrategyDag, params: &GameParams) -> Verdict {
    let m = params.m();
    let t = params.t();
    let g = params.g();
    let n = dag.nodes.len();
    if dag.root >= n {
        return Verdict::reject(dag.root, Rule::RootNotZero);
    }
    if let Some((i, _)) = dag
        .nodes
        .iter()
        .enumerate()
        .find(|(_, node)| node.children.iter().any(|&c| c >= n))
    {
        return Verdict::reject(i, Rule::MissingPlacement);
    }
    let root = &dag.nodes[dag.root];
    if root.loads.len() != m || root.loads.iter().any(|&l| l != 0) || !root.items.is_empty() {
        return Verdict::reject(dag.root, Rule::RootNotZero);
    }
    let order = match reachable_order(dag) {
        Ok(order) => order,
        Err(node) => return Verdict::reject(node, Rule::Cycle),
    };
    if order.first() != Some(&dag.root) {
        // The root itself sits on a cycle.
        return Verdict::reject(dag.root, Rule::Cycle);
    }

    let mut derived: Vec<Option<ItemMultiset>> = vec![None; n];
    let mut depth = vec![0usize; n];
    derived[dag.root] = Some(ItemMultiset::new(g));

    for &i in &order {
        let node = &dag.nodes[i];
        let items = derived[i].clone().expect("parents are processed first");
        if node.items != items {
            return Verdict::reject(i, Rule::ItemMismatch);
        }
        if node.loads.len() != m
            || sorted_desc(&node.loads) != node.loads
            || node.loads.iter().any(|&l| l >= t)
            || node.loads.iter().map(|&l| u64::from(l)).sum::<u64>() != u64::from(items.total())
        {
            return Verdict::reject(i, Rule::LoadMismatch);
        }
        let Some(&e) = node.next_items.first() else {
            return Verdict::reject(i, Rule::ItemNotPositive);
        };
        if node.next_items.iter().any(|&x| x == 0) {
            return Verdict::reject(i, Rule::ItemNotPositive);
        }
        if node.next_items.iter().any(|&x| x > g) {
            // No packing into bins of size g contains such an item.
            return Verdict::reject(i, Rule::BadCertificate);
        }
        if depth[i] + node.next_items.len() > params.depth_bound() {
            return Verdict::reject(i, Rule::DepthExceeded);
        }

        if node.is_compressed() {
            let Some(cert) = &node.packing else {
                return Verdict::reject(i, Rule::OverflowWithoutCertificate);
            };
            let mut all = items.clone();
            for &x in &node.next_items {
                all.insert(x).expect("sizes checked");
            }
            if !validate_packing(&all, cert, params) {
                return Verdict::reject(i, Rule::BadCertificate);
            }
            if !expand_compressed(&node.loads, &items, &node.next_items, cert, params) {
                return Verdict::reject(i, Rule::MissingPlacement);
            }
            continue;
        }

        let mut next_items = items.clone();
        next_items.insert(e).expect("size checked");
        let mut targets = Vec::new();
        let mut overflow = false;
        for b in 0..m {
            if node.loads[b] + e >= t {
                overflow = true;
            } else {
                targets.push(successor(&node.loads, e, b));
            }
        }
        if overflow {
            let Some(cert) = &node.packing else {
                return Verdict::reject(i, Rule::OverflowWithoutCertificate);
            };
            if !validate_packing(&next_items, cert, params) {
                return Verdict::reject(i, Rule::BadCertificate);
            }
        }
        for target in &targets {
            if !node
                .children
                .iter()
                .any(|&c| sorted_desc(&dag.nodes[c].loads) == *target)
            {
                return Verdict::reject(i, Rule::MissingPlacement);
            }
        }
        for &c in &node.children {
            if !targets.contains(&sorted_desc(&dag.nodes[c].loads)) {
                return Verdict::reject(c, Rule::LoadMismatch);
            }
            match &derived[c] {
                Some(existing) if *existing != next_items => {
                    return Verdict::reject(c, Rule::ItemMismatch);
                }
                Some(_) => {}
                None => derived[c] = Some(next_items.clone()),
            }
            depth[c] = depth[c].max(depth[i] + 1);
        }
    }
    Verdict::accept()
}
