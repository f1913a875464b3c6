//! Strategy DAGs: hash-consed strategy trees with optional last-layer compression.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::CoreError;
use crate::game::{canonicalize, GameParams, ItemMultiset, PackingCertificate};
use crate::tree::StrategyTree;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    pub loads: Vec<u32>,
    /// Items sent before this node, derived from the path from the root.
    pub items: ItemMultiset,
    pub next_items: Vec<u32>,
    pub packing: Option<PackingCertificate>,
    pub children: Vec<usize>,
}

impl DagNode {
    pub fn is_compressed(&self) -> bool {
        self.next_items.len() > 1
    }
}

/// Adversary strategy with duplicate states merged. Node identity is
/// `(loads, items)`; the root is the all-zero state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyDag {
    pub nodes: Vec<DagNode>,
    pub root: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DagStats {
    pub nodes: usize,
    pub edges: usize,
    pub compressed_nodes: usize,
    pub leaves: usize,
    /// Longest path, counted in adversary items.
    pub depth: usize,
}

type NodeKey = (Vec<u32>, ItemMultiset);

impl StrategyDag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &DagNode {
        &self.nodes[self.root]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Node indices such that every edge goes forward; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for node in &self.nodes {
            for &c in &node.children {
                if c >= n {
                    return None;
                }
                indegree[c] += 1;
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
        while let Some(i) = stack.pop() {
            order.push(i);
            for &c in self.nodes[i].children.iter().rev() {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    stack.push(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn stats(&self) -> DagStats {
        let depth = match self.topological_order() {
            Some(order) => {
                let mut below = vec![0usize; self.nodes.len()];
                for &i in order.iter().rev() {
                    let node = &self.nodes[i];
                    let deepest = node.children.iter().map(|&c| below[c]).max().unwrap_or(0);
                    below[i] = node.next_items.len() + deepest;
                }
                below.get(self.root).copied().unwrap_or(0)
            }
            None => 0,
        };
        DagStats {
            nodes: self.nodes.len(),
            edges: self.edge_count(),
            compressed_nodes: self.nodes.iter().filter(|n| n.is_compressed()).count(),
            leaves: self.nodes.iter().filter(|n| n.children.is_empty()).count(),
            depth,
        }
    }

    /// Unfold into a tree; DAG-shared nodes become shared allocations.
    pub fn unfold(&self) -> Result<StrategyTree, CoreError> {
        let order = self
            .topological_order()
            .ok_or_else(|| CoreError::Structure("strategy graph has a cycle".into()))?;
        let mut built: Vec<Option<Arc<StrategyTree>>> = vec![None; self.nodes.len()];
        for &i in order.iter().rev() {
            let node = &self.nodes[i];
            let children = node
                .children
                .iter()
                .map(|&c| built[c].clone().expect("children precede parents"))
                .collect();
            built[i] = Some(Arc::new(StrategyTree {
                loads: node.loads.clone(),
                next_items: node.next_items.clone(),
                packing: node.packing.clone(),
                children,
            }));
        }
        let root = built[self.root].take().expect("root is built");
        Ok(Arc::try_unwrap(root).unwrap_or_else(|shared| (*shared).clone()))
    }
}

/// Merge tree nodes with identical `(loads, items)` into one DAG node.
///
/// Nodes are numbered in depth-first preorder with the root at index 0.
pub fn tree_to_dag(tree: &StrategyTree, params: &GameParams) -> Result<StrategyDag, CoreError> {
    struct Builder<'a> {
        params: &'a GameParams,
        nodes: Vec<DagNode>,
        index: HashMap<NodeKey, usize>,
    }

    impl Builder<'_> {
        fn visit(&mut self, tree: &StrategyTree, items: ItemMultiset) -> Result<usize, CoreError> {
            let loads = canonicalize(&tree.loads, self.params.m())?;
            if tree.next_items.is_empty() {
                return Err(CoreError::Structure(format!(
                    "node {loads:?} has no next item"
                )));
            }
            let key = (loads.clone(), items.clone());
            if let Some(&existing) = self.index.get(&key) {
                if self.nodes[existing].next_items != tree.next_items {
                    return Err(CoreError::Structure(format!(
                        "state {loads:?} {items} sends both {:?} and {:?}",
                        self.nodes[existing].next_items, tree.next_items
                    )));
                }
                return Ok(existing);
            }
            let idx = self.nodes.len();
            self.nodes.push(DagNode {
                loads,
                items: items.clone(),
                next_items: tree.next_items.clone(),
                packing: tree.packing.clone(),
                children: Vec::new(),
            });
            self.index.insert(key, idx);
            if !tree.children.is_empty() && tree.next_items.len() > 1 {
                return Err(CoreError::Structure(
                    "compressed node must not have children".into(),
                ));
            }
            let mut child_items = items;
            if !tree.children.is_empty() {
                child_items.insert(tree.next_items[0])?;
            }
            let mut children = Vec::with_capacity(tree.children.len());
            for child in &tree.children {
                let c = self.visit(child, child_items.clone())?;
                if !children.contains(&c) {
                    children.push(c);
                }
            }
            self.nodes[idx].children = children;
            Ok(idx)
        }
    }

    let mut builder = Builder {
        params,
        nodes: Vec::new(),
        index: HashMap::new(),
    };
    let root = builder.visit(tree, ItemMultiset::new(params.g()))?;
    Ok(StrategyDag {
        nodes: builder.nodes,
        root,
    })
}

/// Replace maximal forced suffixes by single compressed nodes.
///
/// A node is forced when the adversary keeps sending the same item size on
/// every surviving placement path until all placements overflow. Such a
/// subgraph becomes one node whose `next_items` is the whole item sequence and
/// whose certificate is taken from the deepest leaf.
pub fn compress_last_layer(dag: &StrategyDag) -> StrategyDag {
    fn forced(dag: &StrategyDag, i: usize, memo: &mut HashMap<usize, Option<Vec<u32>>>) -> Option<Vec<u32>> {
        if let Some(known) = memo.get(&i) {
            return known.clone();
        }
        let node = &dag.nodes[i];
        let first = node.next_items[0];
        let result = if node.next_items.iter().any(|&e| e != first) {
            None
        } else if node.is_compressed() {
            Some(node.next_items.clone())
        } else if node.children.is_empty() {
            Some(vec![first])
        } else {
            let mut tail: Option<Vec<u32>> = None;
            let mut ok = true;
            for &c in &node.children {
                match forced(dag, c, memo) {
                    Some(seq) if seq.iter().all(|&e| e == first) => match &tail {
                        Some(t) if *t != seq => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => tail = Some(seq),
                    },
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            match (ok, tail) {
                (true, Some(mut t)) => {
                    t.insert(0, first);
                    Some(t)
                }
                _ => None,
            }
        };
        memo.insert(i, result.clone());
        result
    }

    fn deepest_packing(dag: &StrategyDag, mut i: usize) -> Option<PackingCertificate> {
        loop {
            let node = &dag.nodes[i];
            match node.children.first() {
                Some(&c) => i = c,
                None => return node.packing.clone(),
            }
        }
    }

    let mut memo = HashMap::new();
    let mut out: Vec<DagNode> = Vec::new();
    let mut remap: HashMap<usize, usize> = HashMap::new();

    fn emit(
        dag: &StrategyDag,
        i: usize,
        memo: &mut HashMap<usize, Option<Vec<u32>>>,
        out: &mut Vec<DagNode>,
        remap: &mut HashMap<usize, usize>,
    ) -> usize {
        if let Some(&j) = remap.get(&i) {
            return j;
        }
        let node = &dag.nodes[i];
        let idx = out.len();
        remap.insert(i, idx);
        if !node.is_compressed() {
            if let Some(seq) = forced(dag, i, memo).filter(|s| s.len() > 1) {
                if let Some(packing) = deepest_packing(dag, i) {
                    out.push(DagNode {
                        loads: node.loads.clone(),
                        items: node.items.clone(),
                        next_items: seq,
                        packing: Some(packing),
                        children: Vec::new(),
                    });
                    return idx;
                }
            }
        }
        out.push(DagNode {
            children: Vec::new(),
            ..node.clone()
        });
        let children: Vec<usize> = node
            .children
            .iter()
            .map(|&c| emit(dag, c, memo, out, remap))
            .collect();
        out[idx].children = children;
        idx
    }

    let root = emit(dag, dag.root, &mut memo, &mut out, &mut remap);
    StrategyDag { nodes: out, root }
}

/// Expand every compressed node into explicit single-item nodes. Expanded
/// nodes with an overflowing placement reuse the compressed node's certificate.
pub fn decompress(dag: &StrategyDag, params: &GameParams) -> Result<StrategyDag, CoreError> {
    struct Expander<'a> {
        dag: &'a StrategyDag,
        params: &'a GameParams,
        out: Vec<DagNode>,
        by_key: HashMap<NodeKey, usize>,
        remap: HashMap<usize, usize>,
    }

    impl Expander<'_> {
        fn push(&mut self, node: DagNode) -> usize {
            let idx = self.out.len();
            self.by_key
                .insert((node.loads.clone(), node.items.clone()), idx);
            self.out.push(node);
            idx
        }

        fn original(&mut self, i: usize) -> Result<usize, CoreError> {
            if let Some(&j) = self.remap.get(&i) {
                return Ok(j);
            }
            let node = &self.dag.nodes[i];
            if node.is_compressed() {
                let cert = node.packing.clone();
                let j = self.chain(
                    node.loads.clone(),
                    node.items.clone(),
                    &node.next_items.clone(),
                    cert.as_ref(),
                )?;
                self.remap.insert(i, j);
                return Ok(j);
            }
            let idx = self.push(DagNode {
                children: Vec::new(),
                ..node.clone()
            });
            self.remap.insert(i, idx);
            let children = node.children.clone();
            let mut mapped = Vec::with_capacity(children.len());
            for c in children {
                mapped.push(self.original(c)?);
            }
            self.out[idx].children = mapped;
            Ok(idx)
        }

        fn chain(
            &mut self,
            loads: Vec<u32>,
            items: ItemMultiset,
            seq: &[u32],
            cert: Option<&PackingCertificate>,
        ) -> Result<usize, CoreError> {
            if let Some(&j) = self.by_key.get(&(loads.clone(), items.clone())) {
                return Ok(j);
            }
            let e = seq[0];
            let t = self.params.t();
            let mut successors = Vec::new();
            let mut overflow = false;
            for b in 0..loads.len() {
                if b > 0 && loads[b] == loads[b - 1] {
                    continue;
                }
                if loads[b] + e >= t {
                    overflow = true;
                } else {
                    let mut next = loads.clone();
                    next[b] += e;
                    successors.push(canonicalize(&next, self.params.m())?);
                }
            }
            if !successors.is_empty() && seq.len() == 1 {
                return Err(CoreError::Structure(format!(
                    "compressed sequence ends while {loads:?} still has room"
                )));
            }
            let idx = self.push(DagNode {
                loads,
                items: items.clone(),
                next_items: vec![e],
                packing: if overflow { cert.cloned() } else { None },
                children: Vec::new(),
            });
            let mut child_items = items;
            child_items.insert(e)?;
            let mut children = Vec::new();
            for s in successors {
                let c = self.chain(s, child_items.clone(), &seq[1..], cert)?;
                if !children.contains(&c) {
                    children.push(c);
                }
            }
            self.out[idx].children = children;
            Ok(idx)
        }
    }

    let mut ex = Expander {
        dag,
        params,
        out: Vec::new(),
        by_key: HashMap::new(),
        remap: HashMap::new(),
    };
    let root = ex.original(dag.root)?;
    Ok(StrategyDag { nodes: ex.out, root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p343() -> GameParams {
        GameParams::new(3, 4, 3).unwrap()
    }

    fn cert(bins: &[&[u32]]) -> PackingCertificate {
        PackingCertificate::new(bins.iter().map(|b| b.to_vec()).collect())
    }

    /// The classic 4/3 strategy for three bins, with certificates on mixed nodes.
    pub(crate) fn figure_one() -> StrategyTree {
        let leaf_a = StrategyTree::leaf(vec![2, 2, 2], vec![2], cert(&[&[2, 1], &[2, 1], &[2]]));
        let leaf_b = StrategyTree::leaf(vec![3, 1, 1], vec![3], cert(&[&[3], &[3], &[1, 1]]));
        let n220 = StrategyTree {
            loads: vec![2, 2, 0],
            next_items: vec![2],
            packing: Some(cert(&[&[2, 1], &[2, 1], &[]])),
            children: vec![Arc::new(leaf_a)],
        };
        let n200 = StrategyTree {
            loads: vec![2, 0, 0],
            next_items: vec![2],
            packing: Some(cert(&[&[2, 1], &[1], &[]])),
            children: vec![Arc::new(n220)],
        };
        let n110 = StrategyTree {
            loads: vec![1, 1, 0],
            next_items: vec![3],
            packing: Some(cert(&[&[3], &[1], &[1]])),
            children: vec![Arc::new(leaf_b)],
        };
        let n100 = StrategyTree {
            loads: vec![1, 0, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(n200), Arc::new(n110)],
        };
        StrategyTree {
            loads: vec![0, 0, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(n100)],
        }
    }

    #[test]
    fn figure_one_has_no_duplicates() {
        let tree = figure_one();
        assert_eq!(tree.node_count(), 7);
        let dag = tree_to_dag(&tree, &p343()).unwrap();
        assert_eq!(dag.len(), 7);
        assert_eq!(dag.root, 0);
        assert_eq!(dag.stats().depth, 5);
        let n222 = dag.nodes.iter().find(|n| n.loads == [2, 2, 2]).unwrap();
        assert_eq!(n222.items, ItemMultiset::from_items(3, &[1, 1, 2, 2]).unwrap());
    }

    #[test]
    fn duplicate_states_merge() {
        // Two paths reaching loads [2,0] with items {1,1} under m=2.
        let p = GameParams::new(2, 10, 6).unwrap();
        let leaf = StrategyTree::leaf(vec![2, 0], vec![6], cert(&[&[6], &[1, 1]]));
        let left = StrategyTree {
            loads: vec![1, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(leaf.clone()), Arc::new(StrategyTree::leaf(vec![1, 1], vec![6], cert(&[&[6], &[1, 1]])))],
        };
        let root = StrategyTree {
            loads: vec![0, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(left)],
        };
        let dag = tree_to_dag(&root, &p).unwrap();
        assert_eq!(dag.len(), 4);

        // Same state sending different items is a recorder bug.
        let bad_child = StrategyTree::leaf(vec![2, 0], vec![5], cert(&[&[5], &[1, 1]]));
        let mid = StrategyTree {
            loads: vec![1, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(leaf), Arc::new(bad_child)],
        };
        let root = StrategyTree {
            loads: vec![0, 0],
            next_items: vec![1],
            packing: None,
            children: vec![Arc::new(mid)],
        };
        assert!(tree_to_dag(&root, &p).is_err());
    }

    #[test]
    fn figure_one_forced_tails_compress() {
        let dag = tree_to_dag(&figure_one(), &p343()).unwrap();
        let c = compress_last_layer(&dag);
        assert_eq!(c.len(), 4);
        assert_eq!(c.nodes[2].next_items, vec![2, 2, 2]);
        assert_eq!(c.nodes[3].next_items, vec![3, 3]);
        assert_eq!(compress_last_layer(&c), c);
        let d = decompress(&c, &p343()).unwrap();
        assert_eq!(d.len(), 7);
        assert_eq!(d.nodes.iter().map(|n| n.items.total()).sum::<u32>(), 20);
    }

    #[test]
    fn single_leaf_is_unchanged() {
        let items = ItemMultiset::from_items(3, &[3, 3]).unwrap();
        let dag = StrategyDag {
            nodes: vec![DagNode {
                loads: vec![3, 3],
                items,
                next_items: vec![3],
                packing: Some(cert(&[&[3], &[3]])),
                children: vec![],
            }],
            root: 0,
        };
        assert_eq!(compress_last_layer(&dag), dag);
    }

    #[test]
    fn forced_pair_of_tens_compresses() {
        let p = GameParams::new(3, 19, 14).unwrap();
        let items = ItemMultiset::from_items(14, &[4, 4, 3, 9]).unwrap();
        let packing = cert(&[&[10, 4], &[10, 4], &[9, 3]]);
        let mut after = items.clone();
        after.insert(10).unwrap();
        let dag = StrategyDag {
            nodes: vec![
                DagNode {
                    loads: vec![11, 9, 0],
                    items: items.clone(),
                    next_items: vec![10],
                    packing: Some(packing.clone()),
                    children: vec![1],
                },
                DagNode {
                    loads: vec![11, 10, 9],
                    items: after,
                    next_items: vec![10],
                    packing: Some(packing.clone()),
                    children: vec![],
                },
            ],
            root: 0,
        };
        let compressed = compress_last_layer(&dag);
        assert_eq!(compressed.len(), 1);
        assert_eq!(compressed.nodes[0].next_items, vec![10, 10]);
        let back = decompress(&compressed, &p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.nodes[1].loads, vec![11, 10, 9]);
    }

    #[test]
    fn unfold_round_trips() {
        let dag = tree_to_dag(&figure_one(), &p343()).unwrap();
        let tree = dag.unfold().unwrap();
        assert_eq!(tree_to_dag(&tree, &p343()).unwrap(), dag);
    }
}
