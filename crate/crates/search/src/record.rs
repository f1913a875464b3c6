//! Second pass: turn a won evaluation into an explicit strategy.
//!
//! The recorder re-walks the winning lines with the same context, so cached
//! results from the evaluation are reused. Identical (loads, items) vertices
//! share one subtree.

use std::collections::HashMap;
use std::sync::Arc;

use binstretch_core::{BinConfiguration, PackingCertificate, StrategyTree};

use crate::engine::{Eval, ItemOrder, SearchContext, SearchError};
use crate::feasibility::pack_items;
use crate::pruning::{five_nine_step, AdversaryWitness, FiveNineMove};

type VertexKey = (Vec<u32>, Vec<u32>);

pub struct Recorder<'a> {
    ctx: &'a mut SearchContext,
    memo: HashMap<VertexKey, Arc<StrategyTree>>,
    certs: HashMap<Vec<u32>, PackingCertificate>,
}

impl<'a> Recorder<'a> {
    pub fn new(ctx: &'a mut SearchContext) -> Self {
        Recorder {
            ctx,
            memo: HashMap::new(),
            certs: HashMap::new(),
        }
    }

    /// Record from the empty configuration. The `initial` items are sent
    /// first; `seed_last` makes the last of them count for monotonicity.
    pub fn record(mut self, initial: &[u32], seed_last: bool) -> Result<StrategyTree, SearchError> {
        let root = if initial.is_empty() {
            self.adversary(None)?
        } else {
            self.prefix(initial, 0, seed_last)?
        };
        Ok(Arc::try_unwrap(root).unwrap_or_else(|shared| (*shared).clone()))
    }

    /// Record from `config` with the adversary to move.
    pub fn record_from(mut self, config: &BinConfiguration) -> Result<StrategyTree, SearchError> {
        self.ctx.set_configuration(config);
        let root = self.adversary(None)?;
        Ok(Arc::try_unwrap(root).unwrap_or_else(|shared| (*shared).clone()))
    }

    fn prefix(&mut self, initial: &[u32], level: usize, seed_last: bool) -> Result<Arc<StrategyTree>, SearchError> {
        let e = initial[level];
        self.with_item(e, |rec| {
            if level + 1 < initial.len() {
                rec.prefix(initial, level + 1, seed_last)
            } else {
                let saved = rec.ctx.last_item();
                rec.ctx.set_last(if seed_last { Some(e) } else { None });
                let r = rec.adversary(None);
                rec.ctx.set_last(saved);
                r
            }
        })
    }

    /// Node sending `e` from the current configuration; `child` records each
    /// surviving placement.
    fn with_item(
        &mut self,
        e: u32,
        mut child: impl FnMut(&mut Self) -> Result<Arc<StrategyTree>, SearchError>,
    ) -> Result<Arc<StrategyTree>, SearchError> {
        let loads = self.ctx.loads().to_vec();
        let t = self.ctx.params().t();
        let overflow = loads[0] + e >= t;
        let packing = if overflow { Some(self.certificate(&[(e, 1)])?) } else { None };
        self.ctx.push_item(e);
        let saved = self.ctx.last_item();
        self.ctx.set_last(Some(e));
        let mut children = Vec::new();
        let mut result = Ok(());
        for i in 0..loads.len() {
            if (i > 0 && loads[i] == loads[i - 1]) || loads[i] + e >= t {
                continue;
            }
            let pos = self.ctx.place_load(i, e);
            let r = child(self);
            self.ctx.unplace_load(pos, e);
            match r {
                Ok(node) => children.push(node),
                Err(err) => {
                    result = Err(err);
                    break;
                }
            }
        }
        self.ctx.set_last(saved);
        self.ctx.pop_item(e);
        result?;
        Ok(Arc::new(StrategyTree {
            loads,
            next_items: vec![e],
            packing,
            children,
        }))
    }

    fn adversary(&mut self, prev_y: Option<u32>) -> Result<Arc<StrategyTree>, SearchError> {
        let key = self.key();
        if let Some(node) = self.memo.get(&key) {
            return Ok(node.clone());
        }
        let floor = self.ctx.floor();
        let y = self.ctx.max_feasible(prev_y);
        if y < i64::from(floor) {
            return Err(self.inconsistent("no item can be sent"));
        }
        let y = y as u32;
        let node = match self.ctx.adversary_heuristic(floor, y) {
            Some(AdversaryWitness::LargeItem { size, copies }) => self.forced(size, copies)?,
            Some(AdversaryWitness::FiveNine) => self.five_nine()?,
            None => {
                let depth = self.ctx.items().len();
                let mut chosen = None;
                let n = y - floor + 1;
                let largest = self.ctx.options().item_order == ItemOrder::LargestFirst;
                for i in 0..n {
                    let e = if largest { y - i } else { floor + i };
                    match self.ctx.eval_alg(e, y, depth) {
                        Eval::Adv => {
                            chosen = Some(e);
                            break;
                        }
                        Eval::Stop => return Err(SearchError::Aborted),
                        Eval::Alg => {}
                    }
                }
                let Some(e) = chosen else {
                    return Err(self.inconsistent("no winning item"));
                };
                self.with_item(e, |rec| rec.adversary(Some(y)))?
            }
        };
        self.memo.insert(key, node.clone());
        Ok(node)
    }

    fn five_nine(&mut self) -> Result<Arc<StrategyTree>, SearchError> {
        let key = self.key();
        if let Some(node) = self.memo.get(&key) {
            return Ok(node.clone());
        }
        let loads = self.ctx.loads().to_vec();
        let m = loads.len() as u32;
        let ctx = &mut *self.ctx;
        let step = five_nine_step(&loads, 1, &mut |extra| ctx.feasible_with(extra));
        let node = match step {
            Some(FiveNineMove::Nines) => self.forced(9, m)?,
            Some(FiveNineMove::Fourteens(c)) => self.forced(14, c)?,
            Some(FiveNineMove::Five) => self.with_item(5, |rec| rec.five_nine())?,
            None => return Err(self.inconsistent("five/nine recipe failed")),
        };
        self.memo.insert(key, node.clone());
        Ok(node)
    }

    /// `copies` items of `size` that overflow under every placement.
    fn forced(&mut self, size: u32, copies: u32) -> Result<Arc<StrategyTree>, SearchError> {
        let packing = self.certificate(&[(size, copies)])?;
        Ok(Arc::new(StrategyTree::leaf(
            self.ctx.loads().to_vec(),
            vec![size; copies as usize],
            packing,
        )))
    }

    fn certificate(&mut self, extra: &[(u32, u32)]) -> Result<PackingCertificate, SearchError> {
        let mut items = self.ctx.items().clone();
        for &(s, c) in extra {
            items.insert_many(s, c)?;
        }
        let key = items.counts().to_vec();
        if let Some(cert) = self.certs.get(&key) {
            return Ok(cert.clone());
        }
        let cert = pack_items(&items, self.ctx.params())
            .ok_or_else(|| self.inconsistent("items of a winning line do not pack"))?;
        self.certs.insert(key, cert.clone());
        Ok(cert)
    }

    fn key(&self) -> VertexKey {
        (self.ctx.loads().to_vec(), self.ctx.items().counts().to_vec())
    }

    fn inconsistent(&self, what: &str) -> SearchError {
        SearchError::Inconsistent(format!(
            "{what} at loads {:?}, items {}",
            self.ctx.loads(),
            self.ctx.items()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{SearchOptions, SharedCaches};
    use binstretch_core::{validate_packing, GameParams, ItemMultiset};

    fn context(params: GameParams) -> SearchContext {
        let opts = SearchOptions {
            hash_bits: 14,
            feas_hash_bits: 14,
            ..SearchOptions::default()
        };
        let caches = SharedCaches::new(&params, &opts);
        SearchContext::new(params, opts, caches)
    }

    #[test]
    fn large_item_witness_becomes_one_compressed_node() {
        let params = GameParams::new(3, 19, 14).unwrap();
        let mut ctx = context(params);
        let items = ItemMultiset::from_items(14, &[4, 4, 3, 4, 4, 1]).unwrap();
        let config = BinConfiguration::from_parts(&params, vec![11, 9, 0], items.clone(), None).unwrap();
        let tree = Recorder::new(&mut ctx).record_from(&config).unwrap();
        assert_eq!(tree.next_items, vec![10, 10]);
        assert!(tree.children.is_empty());
        let mut all = items;
        all.insert_many(10, 2).unwrap();
        assert!(validate_packing(&all, tree.packing.as_ref().unwrap(), &params));
    }

    #[test]
    fn algorithm_win_cannot_be_recorded() {
        let params = GameParams::new(2, 5, 3).unwrap();
        let mut ctx = context(params);
        let config = BinConfiguration::empty(&params);
        assert!(matches!(
            Recorder::new(&mut ctx).record_from(&config),
            Err(SearchError::Inconsistent(_))
        ));
    }
}
