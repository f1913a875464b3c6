//! Incremental Zobrist updates agree with hashing from scratch.

use binstretch_core::{GameParams, ItemMultiset};
use binstretch_search::hashing::{KeyRef, ZobristTables};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ten_thousand_walks() {
    let params = GameParams::new(4, 19, 14).unwrap();
    let tables = ZobristTables::new(&params, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(0x2077);
    let mut steps = 0;
    for _ in 0..10_000 {
        let mut loads = vec![0u32; 4];
        let mut items = ItemMultiset::new(14);
        let mut hash = tables.hash_config(&loads, &items).unwrap();
        for _ in 0..rng.gen_range(1..12) {
            let e = rng.gen_range(1..=14);
            let b = rng.gen_range(0..4);
            if loads[b] + e >= 19 || items.total() + e > params.capacity() {
                continue;
            }
            let mut next = loads.clone();
            next[b] += e;
            next.sort_unstable_by(|a, b| b.cmp(a));
            let f = items.count(e);
            let mut changed = vec![KeyRef::ItemFreq { size: e, freq: f }, KeyRef::ItemFreq { size: e, freq: f + 1 }];
            for (position, (&old, &new)) in loads.iter().zip(&next).enumerate() {
                if old != new {
                    changed.push(KeyRef::Load { position, load: old });
                    changed.push(KeyRef::Load { position, load: new });
                }
            }
            hash = tables.hash_update(hash, &changed);
            items.insert(e).unwrap();
            loads = next;
            assert_eq!(hash, tables.hash_config(&loads, &items).unwrap());
            steps += 1;
        }
    }
    assert!(steps > 10_000);
}
