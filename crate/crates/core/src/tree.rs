//! Recorded adversary strategies.
//!
//! A [`StrategyTree`] is logically a tree; identical subtrees produced by the
//! recorder may share one allocation, so sizes are computed by unfolding.

use std::collections::HashMap;
use std::sync::Arc;

use crate::game::PackingCertificate;

/// One adversary decision: the current loads, the item(s) sent next, an
/// optional packing certificate and one child per surviving placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyTree {
    pub loads: Vec<u32>,
    /// Length greater than one only for compressed forced-item nodes.
    pub next_items: Vec<u32>,
    pub packing: Option<PackingCertificate>,
    /// Children in placement order, one per distinct non-overflowing successor.
    pub children: Vec<Arc<StrategyTree>>,
}

impl StrategyTree {
    pub fn leaf(loads: Vec<u32>, next_items: Vec<u32>, packing: PackingCertificate) -> Self {
        StrategyTree {
            loads,
            next_items,
            packing: Some(packing),
            children: Vec::new(),
        }
    }

    /// Number of nodes of the fully unfolded tree (saturating).
    pub fn node_count(&self) -> u64 {
        fn walk(node: &StrategyTree, memo: &mut HashMap<*const StrategyTree, u64>) -> u64 {
            let mut total = 1u64;
            for child in &node.children {
                let key = Arc::as_ptr(child);
                let count = match memo.get(&key) {
                    Some(&c) => c,
                    None => {
                        let c = walk(child, memo);
                        memo.insert(key, c);
                        c
                    }
                };
                total = total.saturating_add(count);
            }
            total
        }
        walk(self, &mut HashMap::new())
    }

    /// Number of distinct allocations reachable from this node.
    pub fn shared_node_count(&self) -> usize {
        fn walk(node: &StrategyTree, seen: &mut std::collections::HashSet<*const StrategyTree>) {
            for child in &node.children {
                if seen.insert(Arc::as_ptr(child)) {
                    walk(child, seen);
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        walk(self, &mut seen);
        seen.len() + 1
    }

    /// Longest root-to-leaf path counted in adversary items.
    pub fn depth(&self) -> usize {
        fn walk(node: &StrategyTree, memo: &mut HashMap<*const StrategyTree, usize>) -> usize {
            let below = node
                .children
                .iter()
                .map(|c| {
                    let key = Arc::as_ptr(c);
                    if let Some(&d) = memo.get(&key) {
                        d
                    } else {
                        let d = walk(c, memo);
                        memo.insert(key, d);
                        d
                    }
                })
                .max()
                .unwrap_or(0);
            node.next_items.len() + below
        }
        walk(self, &mut HashMap::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_children_count_with_multiplicity() {
        let leaf = Arc::new(StrategyTree::leaf(
            vec![1, 0],
            vec![3],
            PackingCertificate::new(vec![vec![3], vec![1]]),
        ));
        let mid = Arc::new(StrategyTree {
            loads: vec![0, 0],
            next_items: vec![1],
            packing: None,
            children: vec![leaf.clone(), leaf],
        });
        assert_eq!(mid.node_count(), 3);
        assert_eq!(mid.shared_node_count(), 2);
        assert_eq!(mid.depth(), 2);
    }
}
