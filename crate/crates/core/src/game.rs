//! Game parameters, canonical bin configurations and packing certificates.

use std::fmt;

use crate::error::CoreError;

/// The parameter triple of the game: `m` bins, adversary target `t` and offline
/// guarantee `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GameParams {
    m: usize,
    t: u32,
    g: u32,
}

impl GameParams {
    pub fn new(m: usize, t: u32, g: u32) -> Result<Self, CoreError> {
        if m == 0 {
            return Err(CoreError::InvalidParams("bin count must be at least 1".into()));
        }
        if g == 0 {
            return Err(CoreError::InvalidParams("guarantee must be at least 1".into()));
        }
        if t < 2 {
            return Err(CoreError::InvalidParams("target must be at least 2".into()));
        }
        if g > u32::from(u16::MAX) || t > u32::from(u16::MAX) {
            return Err(CoreError::InvalidParams(format!(
                "target and guarantee must not exceed {}",
                u16::MAX
            )));
        }
        Ok(GameParams { m, t, g })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    /// Slack the algorithm may use above the guarantee without losing: `(t - 1) - g`.
    pub fn alpha(&self) -> i64 {
        i64::from(self.t) - 1 - i64::from(self.g)
    }

    /// Total volume `m * g` of every valid instance.
    pub fn capacity(&self) -> u32 {
        self.m as u32 * self.g
    }

    /// Upper bound on the number of adversary moves along any valid play.
    pub fn depth_bound(&self) -> usize {
        self.m * self.g as usize + 2
    }
}

impl fmt::Display for GameParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m={} t={} g={}", self.m, self.t, self.g)
    }
}

/// Multiset of item sizes in `1..=g`, stored as a count per size.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemMultiset {
    counts: Vec<u32>,
    total: u32,
}

impl ItemMultiset {
    pub fn new(g: u32) -> Self {
        ItemMultiset {
            counts: vec![0; g as usize + 1],
            total: 0,
        }
    }

    pub fn from_items(g: u32, items: &[u32]) -> Result<Self, CoreError> {
        let mut set = ItemMultiset::new(g);
        for &item in items {
            set.insert(item)?;
        }
        Ok(set)
    }

    /// Largest representable item size.
    pub fn g(&self) -> u32 {
        self.counts.len() as u32 - 1
    }

    pub fn insert(&mut self, size: u32) -> Result<(), CoreError> {
        self.insert_many(size, 1)
    }

    pub fn insert_many(&mut self, size: u32, copies: u32) -> Result<(), CoreError> {
        if size == 0 || size > self.g() {
            return Err(CoreError::ItemOutOfRange {
                size,
                max: self.g(),
            });
        }
        self.counts[size as usize] += copies;
        self.total += size * copies;
        Ok(())
    }

    pub fn remove(&mut self, size: u32) -> Result<(), CoreError> {
        match self.counts.get_mut(size as usize) {
            Some(c) if size > 0 && *c > 0 => {
                *c -= 1;
                self.total -= size;
                Ok(())
            }
            _ => Err(CoreError::MissingItem(size)),
        }
    }

    pub fn count(&self, size: u32) -> u32 {
        self.counts.get(size as usize).copied().unwrap_or(0)
    }

    /// Total volume of all items.
    pub fn total(&self) -> u32 {
        self.total
    }

    /// Number of items (with multiplicity).
    pub fn len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Per-size counts; index 0 is always zero.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// All items, largest first.
    pub fn sizes_descending(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        for size in (1..self.counts.len()).rev() {
            for _ in 0..self.counts[size] {
                out.push(size as u32);
            }
        }
        out
    }

    /// Whether every item of `self` appears at least as often in `other`.
    pub fn is_subset_of(&self, other: &ItemMultiset) -> bool {
        (1..self.counts.len()).all(|s| self.counts[s] <= other.count(s as u32))
    }
}

impl fmt::Display for ItemMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .sizes_descending()
            .iter()
            .map(|s| s.to_string())
            .collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Sort loads non-increasingly, checking the bin count.
pub fn canonicalize(loads: &[u32], m: usize) -> Result<Vec<u32>, CoreError> {
    if loads.len() != m {
        return Err(CoreError::WrongLength {
            expected: m,
            actual: loads.len(),
        });
    }
    let mut out = loads.to_vec();
    out.sort_unstable_by(|a, b| b.cmp(a));
    Ok(out)
}

/// Load of the fullest bin.
pub fn max_load(loads: &[u32]) -> u32 {
    loads.iter().copied().max().unwrap_or(0)
}

/// A game state before the adversary moves: canonical loads plus the items sent so far.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinConfiguration {
    loads: Vec<u32>,
    items: ItemMultiset,
    last_item: Option<u32>,
}

impl BinConfiguration {
    /// All bins empty, no items.
    pub fn empty(params: &GameParams) -> Self {
        BinConfiguration {
            loads: vec![0; params.m()],
            items: ItemMultiset::new(params.g()),
            last_item: None,
        }
    }

    /// Build a configuration, checking every invariant of the type.
    pub fn from_parts(
        params: &GameParams,
        loads: Vec<u32>,
        items: ItemMultiset,
        last_item: Option<u32>,
    ) -> Result<Self, CoreError> {
        if loads.len() != params.m() {
            return Err(CoreError::WrongLength {
                expected: params.m(),
                actual: loads.len(),
            });
        }
        if loads.windows(2).any(|w| w[0] < w[1]) {
            return Err(CoreError::Inconsistent(format!(
                "loads {loads:?} are not sorted non-increasingly"
            )));
        }
        if items.g() != params.g() {
            return Err(CoreError::Inconsistent(
                "item multiset sized for a different guarantee".into(),
            ));
        }
        let sum: u32 = loads.iter().sum();
        if sum != items.total() {
            return Err(CoreError::Inconsistent(format!(
                "load sum {sum} differs from item volume {}",
                items.total()
            )));
        }
        if max_load(&loads) >= params.t() {
            return Err(CoreError::Inconsistent(format!(
                "load {} reaches the target {}",
                max_load(&loads),
                params.t()
            )));
        }
        if let Some(last) = last_item {
            if items.count(last) == 0 {
                return Err(CoreError::Inconsistent(format!(
                    "last item {last} is not among the items"
                )));
            }
        }
        Ok(BinConfiguration {
            loads,
            items,
            last_item,
        })
    }

    pub fn loads(&self) -> &[u32] {
        &self.loads
    }

    pub fn items(&self) -> &ItemMultiset {
        &self.items
    }

    pub fn last_item(&self) -> Option<u32> {
        self.last_item
    }

    pub fn set_last_item(&mut self, last: Option<u32>) {
        self.last_item = last;
    }

    pub fn max_load(&self) -> u32 {
        self.loads[0]
    }

    /// Whether some bin has reached the target (the state is an overflow, not a configuration).
    pub fn is_terminal(&self, params: &GameParams) -> bool {
        self.max_load() >= params.t()
    }

    /// Place `item` into the bin at canonical position `bin` in place and
    /// return the position the bin moved to.
    pub fn place(&mut self, item: u32, bin: usize, track_last: bool) -> Result<usize, CoreError> {
        if bin >= self.loads.len() {
            return Err(CoreError::BinOutOfRange {
                index: bin,
                bins: self.loads.len(),
            });
        }
        self.items.insert(item)?;
        let new_load = self.loads[bin] + item;
        let mut pos = bin;
        while pos > 0 && self.loads[pos - 1] < new_load {
            self.loads[pos] = self.loads[pos - 1];
            pos -= 1;
        }
        self.loads[pos] = new_load;
        if track_last {
            self.last_item = Some(item);
        }
        Ok(pos)
    }

    /// Undo a [`place`](Self::place) that moved the bin to `pos`.
    pub fn unplace(
        &mut self,
        item: u32,
        pos: usize,
        previous_last: Option<u32>,
    ) -> Result<(), CoreError> {
        self.items.remove(item)?;
        let old_load = self.loads[pos] - item;
        let mut p = pos;
        while p + 1 < self.loads.len() && self.loads[p + 1] > old_load {
            self.loads[p] = self.loads[p + 1];
            p += 1;
        }
        self.loads[p] = old_load;
        self.last_item = previous_last;
        Ok(())
    }
}

/// Place `item` into bin `bin` and re-canonicalize. The result may be terminal.
pub fn add_item(
    config: &BinConfiguration,
    item: u32,
    bin: usize,
    track_last: bool,
) -> Result<BinConfiguration, CoreError> {
    let mut next = config.clone();
    next.place(item, bin, track_last)?;
    Ok(next)
}

/// Explicit packing of items into `m` bins, witnessing offline feasibility.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackingCertificate {
    pub bins: Vec<Vec<u32>>,
}

impl PackingCertificate {
    pub fn new(bins: Vec<Vec<u32>>) -> Self {
        PackingCertificate { bins }
    }

    pub fn bin_sums(&self) -> Vec<u32> {
        self.bins.iter().map(|b| b.iter().sum()).collect()
    }
}

impl fmt::Display for PackingCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bins: Vec<String> = self
            .bins
            .iter()
            .map(|b| {
                let items: Vec<String> = b.iter().map(|i| i.to_string()).collect();
                format!("{{{}}}", items.join(","))
            })
            .collect();
        write!(f, "[{}]", bins.join("; "))
    }
}

/// Whether `packing` has exactly `m` bins of sum at most `g` and contains at
/// least every item of `items` (with multiplicity).
pub fn validate_packing(
    items: &ItemMultiset,
    packing: &PackingCertificate,
    params: &GameParams,
) -> bool {
    if packing.bins.len() != params.m() {
        return false;
    }
    let g = u64::from(params.g());
    if packing
        .bins
        .iter()
        .any(|b| b.iter().map(|&i| u64::from(i)).sum::<u64>() > g)
    {
        return false;
    }
    let mut available = vec![0u32; items.counts().len()];
    for &item in packing.bins.iter().flatten() {
        if let Some(c) = available.get_mut(item as usize) {
            *c += 1;
        }
    }
    (1..available.len()).all(|s| available[s] >= items.count(s as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(m: usize, t: u32, g: u32) -> GameParams {
        GameParams::new(m, t, g).unwrap()
    }

    fn config(p: &GameParams, loads: &[u32]) -> BinConfiguration {
        // Items: one item per non-empty bin equal to its load.
        let items: Vec<u32> = loads.iter().copied().filter(|&l| l > 0).collect();
        BinConfiguration::from_parts(
            p,
            loads.to_vec(),
            ItemMultiset::from_items(p.g(), &items).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn params_reject_degenerate() {
        assert!(GameParams::new(0, 19, 14).is_err());
        assert!(GameParams::new(3, 1, 14).is_err());
        assert!(GameParams::new(3, 19, 0).is_err());
        let p = params(3, 19, 14);
        assert_eq!(p.alpha(), 4);
        // t <= g is accepted and leaves a negative slack.
        assert_eq!(params(3, 3, 5).alpha(), -3);
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[0, 5, 3], 3).unwrap(), vec![5, 3, 0]);
        assert_eq!(canonicalize(&[0, 0, 0], 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(canonicalize(&[14, 14, 14], 3).unwrap(), vec![14, 14, 14]);
        assert!(matches!(
            canonicalize(&[1, 2], 3),
            Err(CoreError::WrongLength { .. })
        ));
    }

    #[test]
    fn add_item_examples() {
        let p = params(3, 19, 14);
        let c = config(&p, &[5, 3, 0]);
        assert_eq!(add_item(&c, 4, 2, false).unwrap().loads(), &[5, 4, 3]);

        let p4 = params(3, 4, 3);
        let c = config(&p4, &[1, 1, 0]);
        let next = add_item(&c, 3, 0, false).unwrap();
        assert_eq!(next.loads(), &[4, 1, 0]);
        assert!(next.is_terminal(&p4));

        let c = BinConfiguration::empty(&p4);
        assert_eq!(add_item(&c, 1, 1, true).unwrap().loads(), &[1, 0, 0]);
        assert!(add_item(&c, 1, 3, false).is_err());
    }

    #[test]
    fn max_load_examples() {
        assert_eq!(max_load(&[5, 4, 3]), 5);
        assert_eq!(max_load(&[0, 0, 0]), 0);
        assert_eq!(max_load(&[19, 0, 0]), 19);
    }

    #[test]
    fn validate_packing_examples() {
        let p = params(3, 4, 3);
        let items = ItemMultiset::from_items(3, &[1, 1, 3, 3, 3]).unwrap();
        let cert = PackingCertificate::new(vec![vec![3], vec![3], vec![1, 1]]);
        assert!(!validate_packing(&items, &cert, &p));

        let items = ItemMultiset::from_items(3, &[3, 3, 1, 1]).unwrap();
        assert!(validate_packing(&items, &cert, &p));

        let items = ItemMultiset::from_items(3, &[2, 2, 2, 1, 1]).unwrap();
        let cert = PackingCertificate::new(vec![vec![2, 1], vec![2, 1], vec![2]]);
        assert!(validate_packing(&items, &cert, &p));

        // Wrong bin count and overfull bin.
        let cert = PackingCertificate::new(vec![vec![2, 1], vec![2, 1, 2]]);
        assert!(!validate_packing(&items, &cert, &p));
        let cert = PackingCertificate::new(vec![vec![2, 2], vec![2, 1], vec![1]]);
        assert!(!validate_packing(&items, &cert, &p));
    }

    #[test]
    fn from_parts_checks_invariants() {
        let p = params(3, 19, 14);
        let items = ItemMultiset::from_items(14, &[5, 3]).unwrap();
        assert!(BinConfiguration::from_parts(&p, vec![3, 5, 0], items.clone(), None).is_err());
        assert!(BinConfiguration::from_parts(&p, vec![5, 3, 1], items.clone(), None).is_err());
        assert!(BinConfiguration::from_parts(&p, vec![5, 3], items.clone(), None).is_err());
        assert!(BinConfiguration::from_parts(&p, vec![5, 3, 0], items.clone(), Some(4)).is_err());
        assert!(BinConfiguration::from_parts(&p, vec![5, 3, 0], items, Some(5)).is_ok());
    }

    #[test]
    fn multiset_rejects_out_of_range() {
        let mut s = ItemMultiset::new(5);
        assert!(s.insert(0).is_err());
        assert!(s.insert(6).is_err());
        assert!(s.remove(2).is_err());
        s.insert(5).unwrap();
        assert_eq!(s.total(), 5);
        s.remove(5).unwrap();
        assert!(s.is_empty());
    }

    fn moves() -> impl Strategy<Value = (usize, Vec<(u32, usize)>)> {
        (1usize..6).prop_flat_map(|m| (Just(m), prop::collection::vec((1u32..=9, 0..m), 0..20)))
    }

    proptest! {
        #[test]
        fn placements_conserve_volume((m, seq) in moves()) {
            let p = GameParams::new(m, 1000, 9).unwrap();
            let mut c = BinConfiguration::empty(&p);
            for (item, bin) in seq {
                c.place(item, bin, true).unwrap();
                prop_assert_eq!(c.loads().iter().sum::<u32>(), c.items().total());
                prop_assert!(c.loads().windows(2).all(|w| w[0] >= w[1]));
            }
        }

        #[test]
        fn canonicalize_is_idempotent(loads in prop::collection::vec(0u32..50, 1..8)) {
            let once = canonicalize(&loads, loads.len()).unwrap();
            prop_assert_eq!(canonicalize(&once, once.len()).unwrap(), once);
        }

        #[test]
        fn equal_loads_give_equal_successors((m, seq) in moves(), item in 1u32..=9) {
            let p = GameParams::new(m, 1000, 9).unwrap();
            let mut c = BinConfiguration::empty(&p);
            for (i, b) in seq {
                c.place(i, b, false).unwrap();
            }
            for a in 0..m {
                for b in 0..m {
                    if c.loads()[a] == c.loads()[b] {
                        prop_assert_eq!(
                            add_item(&c, item, a, false).unwrap(),
                            add_item(&c, item, b, false).unwrap()
                        );
                    }
                }
            }
        }

        #[test]
        fn unplace_restores((m, seq) in moves(), item in 1u32..=9, bin_seed in 0usize..100) {
            let p = GameParams::new(m, 1000, 9).unwrap();
            let mut c = BinConfiguration::empty(&p);
            for (i, b) in seq {
                c.place(i, b, true).unwrap();
            }
            let before = c.clone();
            let pos = c.place(item, bin_seed % m, true).unwrap();
            c.unplace(item, pos, before.last_item()).unwrap();
            prop_assert_eq!(c, before);
        }

        #[test]
        fn packing_validity_is_monotone_in_items(
            bins in prop::collection::vec(prop::collection::vec(1u32..=4, 0..3), 3),
            drop_mask in prop::collection::vec(any::<bool>(), 9),
        ) {
            let p = GameParams::new(3, 20, 8).unwrap();
            let cert = PackingCertificate::new(bins.clone());
            let all: Vec<u32> = bins.iter().flatten().copied().collect();
            let items = ItemMultiset::from_items(8, &all).unwrap();
            let sub: Vec<u32> = all
                .iter()
                .zip(drop_mask.iter().chain(std::iter::repeat(&false)))
                .filter(|(_, &d)| !d)
                .map(|(&i, _)| i)
                .collect();
            let sub = ItemMultiset::from_items(8, &sub).unwrap();
            if validate_packing(&items, &cert, &p) {
                prop_assert!(validate_packing(&sub, &cert, &p));
            }
        }
    }
}
