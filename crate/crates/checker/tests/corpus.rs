//! Checker behaviour over every small winning game, solved exhaustively.

use binstretch_checker::{check, Rule};
use binstretch_core::dag::{compress_last_layer, decompress, tree_to_dag};
use binstretch_core::dot::{emit_dot, parse_dot};
use binstretch_core::{GameParams, PackingCertificate, StrategyDag};
use binstretch_oracle::{replay_strategy, OracleSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<(GameParams, StrategyDag)> {
    let mut out = Vec::new();
    for m in 2..=3usize {
        for g in 2..=7u32 {
            for t in g + 1..=9 {
                let params = GameParams::new(m, t, g).unwrap();
                let mut solver = OracleSolver::new(params, None);
                if let Some(tree) = solver.winning_strategy() {
                    let dag = tree_to_dag(&tree, &params).unwrap();
                    out.push((params, compress_last_layer(&dag)));
                    out.push((params, dag));
                }
            }
        }
    }
    assert!(out.len() >= 20, "corpus has {} DAGs", out.len());
    out
}

#[test]
fn oracle_strategies_are_accepted() {
    for (params, dag) in corpus() {
        let v = check(&dag, &params);
        assert!(v.accepted, "{params}: {v}");
        assert!(replay_strategy(&dag, &params));
    }
}

#[test]
fn compression_and_unfolding_preserve_verdicts() {
    for (params, dag) in corpus() {
        let c = compress_last_layer(&dag);
        assert_eq!(check(&c, &params), check(&dag, &params));
        let d = decompress(&c, &params).unwrap();
        assert_eq!(check(&d, &params), check(&dag, &params));
        let unfolded = dag.unfold().unwrap();
        let again = tree_to_dag(&unfolded, &params).unwrap();
        assert_eq!(check(&again, &params), check(&dag, &params));
    }
}

#[test]
fn dot_round_trip_is_identity() {
    for (params, dag) in corpus() {
        let text = emit_dot(&dag, &params);
        let (p2, d2) = parse_dot(&text).unwrap();
        assert_eq!(p2, params);
        assert_eq!(d2, dag);
        assert_eq!(emit_dot(&d2, &p2), text);
    }
}

#[derive(Debug, Clone, Copy)]
enum Mutation {
    DropEdge,
    PerturbLoad,
    RemoveCertificate,
    OverfillCertificate,
    ZeroNextItem,
    ChangeNextItem,
    RedirectEdge,
}

const MUTATIONS: [Mutation; 7] = [
    Mutation::DropEdge,
    Mutation::PerturbLoad,
    Mutation::RemoveCertificate,
    Mutation::OverfillCertificate,
    Mutation::ZeroNextItem,
    Mutation::ChangeNextItem,
    Mutation::RedirectEdge,
];

/// Apply one mutation; `None` if it does not apply to the chosen node.
fn mutate(dag: &StrategyDag, params: &GameParams, rng: &mut ChaCha8Rng) -> Option<StrategyDag> {
    let mut d = dag.clone();
    let i = rng.gen_range(0..d.nodes.len());
    let n = d.nodes.len();
    let node = &mut d.nodes[i];
    match MUTATIONS[rng.gen_range(0..MUTATIONS.len())] {
        Mutation::DropEdge => {
            if node.children.is_empty() {
                return None;
            }
            let c = rng.gen_range(0..node.children.len());
            node.children.remove(c);
        }
        Mutation::PerturbLoad => {
            let b = rng.gen_range(0..node.loads.len());
            if rng.gen_bool(0.5) {
                node.loads[b] += 1;
            } else if node.loads[b] > 0 {
                node.loads[b] -= 1;
            } else {
                return None;
            }
        }
        Mutation::RemoveCertificate => {
            node.packing.take()?;
        }
        Mutation::OverfillCertificate => {
            let cert = node.packing.as_mut()?;
            let b = rng.gen_range(0..cert.bins.len());
            let room = params.g() - cert.bins[b].iter().sum::<u32>();
            cert.bins[b].push(room + 1);
        }
        Mutation::ZeroNextItem => {
            let k = rng.gen_range(0..node.next_items.len());
            node.next_items[k] = 0;
        }
        Mutation::ChangeNextItem => {
            let k = rng.gen_range(0..node.next_items.len());
            let e = rng.gen_range(1..=params.g());
            if e == node.next_items[k] {
                return None;
            }
            node.next_items[k] = e;
        }
        Mutation::RedirectEdge => {
            if node.children.is_empty() {
                return None;
            }
            let c = rng.gen_range(0..node.children.len());
            node.children[c] = rng.gen_range(0..n);
        }
    }
    Some(d)
}

#[test]
fn mutation_fuzzing_finds_no_unsound_acceptance() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut total_rejected = 0usize;
    let mut total_accepted = 0usize;
    for (params, dag) in corpus() {
        let mut applied = 0;
        while applied < 500 {
            let Some(mutant) = mutate(&dag, &params, &mut rng) else {
                continue;
            };
            applied += 1;
            let v = check(&mutant, &params);
            if v.accepted {
                total_accepted += 1;
                assert!(
                    replay_strategy(&mutant, &params),
                    "{params}: checker accepted a mutant the oracle rejects"
                );
            } else {
                total_rejected += 1;
            }
        }
    }
    assert!(total_rejected > total_accepted);
}

#[test]
fn accepted_strategies_are_oracle_wins() {
    // Every accepted corpus DAG, including mutants that survive, must belong
    // to a game the exhaustive solver declares won by the adversary.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (params, dag) in corpus() {
        assert!(OracleSolver::new(params, None).adversary_wins());
        for _ in 0..50 {
            if let Some(m) = mutate(&dag, &params, &mut rng) {
                if check(&m, &params).accepted {
                    assert!(OracleSolver::new(params, None).adversary_wins());
                }
            }
        }
    }
}

#[test]
fn figure_one_leaf_overfill_is_bad_certificate() {
    let params = GameParams::new(3, 4, 3).unwrap();
    let tree = OracleSolver::new(params, None).winning_strategy().unwrap();
    let mut dag = tree_to_dag(&tree, &params).unwrap();
    let leaf = dag.nodes.iter().position(|n| n.packing.is_some()).unwrap();
    dag.nodes[leaf].packing = Some(PackingCertificate::new(vec![vec![3, 3], vec![], vec![]]));
    assert_eq!(check(&dag, &params).reason.unwrap().rule, Rule::BadCertificate);
}
