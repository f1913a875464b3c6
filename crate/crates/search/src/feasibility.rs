//! Largest item the adversary may still send.
//!
//! [`max_feasible`] runs a cascade of cheap estimates (online best fit, the
//! feasibility cache, best fit decreasing) and falls back to the exact
//! dynamic program [`DpWorkspace::dynprog_max`] only when the bounds have not
//! met.

use std::collections::HashSet;

use binstretch_core::{CoreError, GameParams, ItemMultiset, PackingCertificate};

use crate::hashing::{FeasibilityCache, ZobristTables};

/// Online best fit packing of the items on the current search path.
#[derive(Debug, Clone)]
pub struct ObfState {
    g: u32,
    sums: Vec<u32>,
    /// Inserted items in order, with the bin each went to (`None`: did not fit).
    stack: Vec<(u32, Option<usize>)>,
    unplaced: usize,
}

impl ObfState {
    pub fn new(m: usize, g: u32) -> Self {
        ObfState {
            g,
            sums: vec![0; m],
            stack: Vec::new(),
            unplaced: 0,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.unplaced == 0
    }

    pub fn bin_sums(&self) -> &[u32] {
        &self.sums
    }

    /// Bin contents, in bin order.
    pub fn bins(&self) -> Vec<Vec<u32>> {
        let mut bins = vec![Vec::new(); self.sums.len()];
        for &(item, bin) in &self.stack {
            if let Some(b) = bin {
                bins[b].push(item);
            }
        }
        bins
    }

    fn best_bin(&self, e: u32) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (b, &s) in self.sums.iter().enumerate() {
            if s + e <= self.g && best.is_none_or(|x| self.sums[x] < s) {
                best = Some(b);
            }
        }
        best
    }

    /// Put `e` into the most loaded bin where it fits.
    pub fn insert(&mut self, e: u32) {
        let bin = self.best_bin(e);
        match bin {
            Some(b) => self.sums[b] += e,
            None => self.unplaced += 1,
        }
        self.stack.push((e, bin));
    }

    /// Remove one copy of `e`, preferring the most recent insertion, then
    /// retry placing items that did not fit.
    pub fn remove(&mut self, e: u32) -> Result<(), CoreError> {
        let Some(idx) = self.stack.iter().rposition(|&(item, _)| item == e) else {
            return Err(CoreError::MissingItem(e));
        };
        let (_, bin) = self.stack.remove(idx);
        match bin {
            Some(b) => self.sums[b] -= e,
            None => self.unplaced -= 1,
        }
        if self.unplaced > 0 {
            for i in 0..self.stack.len() {
                let (item, bin) = self.stack[i];
                if bin.is_none() {
                    if let Some(b) = self.best_bin(item) {
                        self.sums[b] += item;
                        self.stack[i].1 = Some(b);
                        self.unplaced -= 1;
                    }
                }
            }
        }
        Ok(())
    }

    /// Room in the emptiest bin, if the online packing is complete.
    pub fn lowerbound(&self) -> Option<u32> {
        if !self.is_consistent() {
            return None;
        }
        self.sums.iter().min().map(|&s| self.g - s)
    }
}

/// Best fit decreasing; the room left in the emptiest bin, or 0 when some
/// item does not fit.
pub fn bfd_lowerbound(items: &ItemMultiset, params: &GameParams) -> u32 {
    let g = params.g();
    let mut sums = vec![0u32; params.m()];
    for size in (1..=g).rev() {
        for _ in 0..items.count(size) {
            let mut best: Option<usize> = None;
            for (b, &s) in sums.iter().enumerate() {
                if s + size <= g && best.is_none_or(|x| sums[x] < s) {
                    best = Some(b);
                }
            }
            match best {
                Some(b) => sums[b] += size,
                None => return 0,
            }
        }
    }
    g - sums.iter().min().copied().unwrap_or(0)
}

const DEDUP_BITS: u32 = 12;

/// Reusable buffers for the packing dynamic program.
#[derive(Debug, Clone)]
pub struct DpWorkspace {
    m: usize,
    g: u32,
    current: Vec<u16>,
    next: Vec<u16>,
    dedup: Vec<(u64, u32, u32)>,
    generation: u32,
    keys: Vec<u64>,
    use_dedup: bool,
    calls: u64,
}

impl DpWorkspace {
    pub fn new(params: &GameParams) -> Self {
        let m = params.m();
        let g = params.g();
        // Fixed keys: the workspace result never depends on them.
        let mut x = 0x9e37_79b9_7f4a_7c15u64;
        let keys = (0..m * (g as usize + 1))
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                x
            })
            .collect();
        DpWorkspace {
            m,
            g,
            current: Vec::new(),
            next: Vec::new(),
            dedup: vec![(0, 0, 0); 1 << DEDUP_BITS],
            generation: 0,
            keys,
            use_dedup: true,
            calls: 0,
        }
    }

    /// Turn the lossy deduplication off (only the queue grows).
    pub fn set_dedup(&mut self, on: bool) {
        self.use_dedup = on;
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    #[inline]
    fn tuple_hash(&self, tuple: &[u16]) -> u64 {
        let stride = self.g as usize + 1;
        tuple
            .iter()
            .enumerate()
            .fold(0, |h, (i, &l)| h ^ self.keys[i * stride + l as usize])
    }

    /// Exact largest `y` such that `items ∪ {y}` packs into `m` bins of size
    /// `g` (0 if no positive item fits), or -1 if `items` itself does not pack.
    pub fn dynprog_max(&mut self, items: &ItemMultiset) -> i64 {
        self.calls += 1;
        let m = self.m;
        let g = self.g;
        if items.g() != g {
            return -1;
        }
        if items.total() > g * m as u32 {
            return -1;
        }
        self.current.clear();
        self.current.resize(m, 0);
        let mut tuple = vec![0u16; m];
        for size in (1..=g).rev() {
            for _ in 0..items.count(size) {
                self.generation = self.generation.wrapping_add(1);
                if self.generation == 0 {
                    self.dedup.fill((0, 0, 0));
                    self.generation = 1;
                }
                self.next.clear();
                let s = size as u16;
                for ti in (0..self.current.len()).step_by(m) {
                    for pos in 0..m {
                        let load = self.current[ti + pos];
                        if pos > 0 && load == self.current[ti + pos - 1] {
                            continue;
                        }
                        if u32::from(load + s) > g {
                            continue;
                        }
                        tuple.copy_from_slice(&self.current[ti..ti + m]);
                        let new_load = load + s;
                        let mut p = pos;
                        while p > 0 && tuple[p - 1] < new_load {
                            tuple[p] = tuple[p - 1];
                            p -= 1;
                        }
                        tuple[p] = new_load;
                        if self.use_dedup {
                            let h = self.tuple_hash(&tuple);
                            let slot = (h >> (64 - DEDUP_BITS)) as usize;
                            let (sh, sgen, sidx) = self.dedup[slot];
                            if sgen == self.generation && sh == h {
                                let at = sidx as usize * m;
                                if self.next[at..at + m] == tuple[..] {
                                    continue;
                                }
                            }
                            self.dedup[slot] = (h, self.generation, (self.next.len() / m) as u32);
                        }
                        self.next.extend_from_slice(&tuple);
                    }
                }
                if self.next.is_empty() {
                    return -1;
                }
                std::mem::swap(&mut self.current, &mut self.next);
            }
        }
        let mut best = 0u16;
        for ti in (0..self.current.len()).step_by(m) {
            let room = g as u16 - self.current[ti + m - 1];
            best = best.max(room);
            if u32::from(best) == g {
                break;
            }
        }
        i64::from(best)
    }

    /// Whether `items` packs into `m` bins of capacity `g`.
    pub fn feasible(&mut self, items: &ItemMultiset) -> bool {
        self.dynprog_max(items) >= 0
    }
}

/// An explicit packing of `items`, if one exists. Used only when a
/// certificate is needed.
pub fn pack_items(items: &ItemMultiset, params: &GameParams) -> Option<PackingCertificate> {
    let m = params.m();
    let g = params.g();
    if items.g() != g || items.total() > g * m as u32 {
        return None;
    }
    let order = items.sizes_descending();
    let mut search = PackSearch {
        order: &order,
        g,
        sums: vec![0; m],
        assign: vec![0; order.len()],
        failed: HashSet::new(),
    };
    if !search.place(0) {
        return None;
    }
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (k, &size) in order.iter().enumerate() {
        bins[search.assign[k]].push(size);
    }
    Some(PackingCertificate::new(bins))
}

/// Best-fit-first backtracking with a memo of failed (position, loads) pairs.
struct PackSearch<'a> {
    order: &'a [u32],
    g: u32,
    sums: Vec<u32>,
    assign: Vec<usize>,
    failed: HashSet<(usize, Vec<u32>)>,
}

impl PackSearch<'_> {
    fn place(&mut self, k: usize) -> bool {
        if k == self.order.len() {
            return true;
        }
        let mut key = self.sums.clone();
        key.sort_unstable();
        if self.failed.contains(&(k, key.clone())) {
            return false;
        }
        let size = self.order[k];
        let mut bins: Vec<usize> = (0..self.sums.len()).collect();
        bins.sort_by(|&a, &b| self.sums[b].cmp(&self.sums[a]));
        let mut last = None;
        for b in bins {
            let load = self.sums[b];
            if load + size > self.g || last == Some(load) {
                continue;
            }
            last = Some(load);
            self.sums[b] += size;
            self.assign[k] = b;
            if self.place(k + 1) {
                return true;
            }
            self.sums[b] -= size;
        }
        self.failed.insert((k, key));
        false
    }
}

/// Bounds state of the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeasibilityBounds {
    pub lb: u32,
    pub ub: u32,
    pub prev_y: Option<u32>,
    pub volume: u32,
}

/// Answer of the feasibility cache for one multiset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ternary {
    Feasible,
    Infeasible,
    Unknown,
}

/// Hash of `items ∪ {candidate}` given the hash of `items`.
#[inline]
pub fn hash_with(tables: &ZobristTables, items: &ItemMultiset, items_hash: u64, candidate: u32) -> Option<u64> {
    let c = items.count(candidate);
    let (_, span) = tables.item_dims();
    if c as usize + 1 >= span {
        return None;
    }
    Some(items_hash ^ tables.item_key(candidate, c) ^ tables.item_key(candidate, c + 1))
}

pub fn query_feasibility_cache(
    cache: &FeasibilityCache,
    tables: &ZobristTables,
    items: &ItemMultiset,
    items_hash: u64,
    candidate: u32,
) -> Ternary {
    match hash_with(tables, items, items_hash, candidate).and_then(|h| cache.lookup(h)) {
        Some(true) => Ternary::Feasible,
        Some(false) => Ternary::Infeasible,
        None => Ternary::Unknown,
    }
}

/// Stage after which a bounds snapshot was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Init,
    Obf,
    Cache,
    Bfd,
    Dynprog,
}

/// Everything [`max_feasible`] may consult.
pub struct MaxFeasInput<'a> {
    pub params: &'a GameParams,
    pub items: &'a ItemMultiset,
    pub items_hash: u64,
    pub obf_lowerbound: Option<u32>,
    pub prev_y: Option<u32>,
    pub tables: &'a ZobristTables,
    pub cache: Option<&'a FeasibilityCache>,
}

/// Largest item that may be sent next; same contract as `dynprog_max`
/// for feasible `items`. `trace` receives the bounds after each stage.
pub fn max_feasible(
    input: &MaxFeasInput<'_>,
    dp: &mut DpWorkspace,
    mut trace: Option<&mut Vec<(Stage, FeasibilityBounds)>>,
) -> i64 {
    let params = input.params;
    let items = input.items;
    let g = params.g();
    let volume = items.total();
    let room = params.capacity().saturating_sub(volume);
    let mut b = FeasibilityBounds {
        lb: 0,
        ub: input.prev_y.unwrap_or(g).min(g).min(room),
        prev_y: input.prev_y,
        volume,
    };
    let mut note = |stage: Stage, b: &FeasibilityBounds| {
        if let Some(t) = trace.as_deref_mut() {
            t.push((stage, *b));
        }
    };
    note(Stage::Init, &b);
    if b.ub == 0 {
        return 0;
    }
    if let Some(lb) = input.obf_lowerbound {
        b.lb = lb.min(b.ub);
    }
    note(Stage::Obf, &b);
    if b.lb == b.ub {
        return i64::from(b.lb);
    }
    if let Some(cache) = input.cache {
        let mut j = b.ub;
        while j > b.lb {
            match query_feasibility_cache(cache, input.tables, items, input.items_hash, j) {
                Ternary::Feasible => {
                    b.lb = j;
                    break;
                }
                Ternary::Infeasible => b.ub = j - 1,
                Ternary::Unknown => {}
            }
            j -= 1;
        }
        note(Stage::Cache, &b);
        if b.lb == b.ub {
            return i64::from(b.lb);
        }
    }
    b.lb = b.lb.max(bfd_lowerbound(items, params).min(b.ub));
    note(Stage::Bfd, &b);
    if b.lb == b.ub {
        return i64::from(b.lb);
    }
    let y = dp.dynprog_max(items);
    if y >= 0 {
        let y32 = y as u32;
        b.lb = y32;
        b.ub = y32;
        note(Stage::Dynprog, &b);
        if let Some(cache) = input.cache {
            if y32 >= 1 {
                if let Some(h) = hash_with(input.tables, items, input.items_hash, y32) {
                    cache.insert(h, true);
                }
            }
            if y32 < g {
                if let Some(h) = hash_with(input.tables, items, input.items_hash, y32 + 1) {
                    cache.insert(h, false);
                }
            }
        }
    }
    y
}
