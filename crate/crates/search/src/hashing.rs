//! Zobrist hashing of configurations and the lossy shared caches.

use std::sync::atomic::{AtomicU64, Ordering};

use binstretch_core::{CoreError, GameParams, ItemMultiset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x6269_6e73_7472_6574;

/// Random keys for every (position, load) and (size, frequency) pair, plus
/// keys for the monotonicity floor and the monotonicity parameter.
#[derive(Debug, Clone)]
pub struct ZobristTables {
    m: usize,
    t: u32,
    g: u32,
    freq_span: usize,
    item_freq_keys: Vec<u64>,
    load_keys: Vec<u64>,
    floor_keys: Vec<u64>,
    mono_keys: Vec<u64>,
    seed: u64,
}

/// One Zobrist key, named by the pair it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRef {
    /// Bin at canonical `position` (0-based) carrying `load`.
    Load { position: usize, load: u32 },
    /// Item `size` occurring `freq` times.
    ItemFreq { size: u32, freq: u32 },
}

impl ZobristTables {
    pub fn new(params: &GameParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = params.m();
        let t = params.t();
        let g = params.g();
        let freq_span = params.capacity() as usize + 1;
        let item_freq_keys = (0..g as usize * freq_span).map(|_| rng.gen()).collect();
        let load_keys = (0..m * t as usize).map(|_| rng.gen()).collect();
        let floor_keys = (0..=g).map(|_| rng.gen()).collect();
        let mono_keys = (0..=g).map(|_| rng.gen()).collect();
        ZobristTables {
            m,
            t,
            g,
            freq_span,
            item_freq_keys,
            load_keys,
            floor_keys,
            mono_keys,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Dimensions of the item matrix: `(g, m·g + 1)`.
    pub fn item_dims(&self) -> (usize, usize) {
        (self.g as usize, self.freq_span)
    }

    /// Dimensions of the load matrix: `(m, t)`.
    pub fn load_dims(&self) -> (usize, usize) {
        (self.m, self.t as usize)
    }

    #[inline]
    pub fn load_key(&self, position: usize, load: u32) -> u64 {
        self.load_keys[position * self.t as usize + load as usize]
    }

    #[inline]
    pub fn item_key(&self, size: u32, freq: u32) -> u64 {
        self.item_freq_keys[(size as usize - 1) * self.freq_span + freq as usize]
    }

    #[inline]
    pub fn floor_key(&self, floor: u32) -> u64 {
        self.floor_keys[floor.min(self.g) as usize]
    }

    /// Key of the monotonicity parameter; `None` (unrestricted) uses slot `g`.
    #[inline]
    pub fn mono_key(&self, k: Option<u32>) -> u64 {
        self.mono_keys[k.map_or(self.g, |k| k.min(self.g)) as usize]
    }

    pub fn key(&self, key: KeyRef) -> u64 {
        match key {
            KeyRef::Load { position, load } => self.load_key(position, load),
            KeyRef::ItemFreq { size, freq } => self.item_key(size, freq),
        }
    }

    pub fn loads_hash(&self, loads: &[u32]) -> Result<u64, CoreError> {
        if loads.len() != self.m {
            return Err(CoreError::WrongLength {
                expected: self.m,
                actual: loads.len(),
            });
        }
        let mut h = 0;
        for (position, &load) in loads.iter().enumerate() {
            if load >= self.t {
                return Err(CoreError::Inconsistent(format!(
                    "load {load} outside the hashed range 0..{}",
                    self.t
                )));
            }
            h ^= self.load_key(position, load);
        }
        Ok(h)
    }

    /// Hash of an item multiset; zero-frequency sizes contribute their key too.
    pub fn items_hash(&self, items: &ItemMultiset) -> Result<u64, CoreError> {
        if items.g() != self.g {
            return Err(CoreError::Inconsistent(
                "item multiset sized for a different guarantee".into(),
            ));
        }
        let mut h = 0;
        for size in 1..=self.g {
            let freq = items.count(size);
            if freq as usize >= self.freq_span {
                return Err(CoreError::Inconsistent(format!(
                    "frequency {freq} of size {size} outside the hashed range"
                )));
            }
            h ^= self.item_key(size, freq);
        }
        Ok(h)
    }

    /// XOR of the keys of every load and every item frequency.
    pub fn hash_config(&self, loads: &[u32], items: &ItemMultiset) -> Result<u64, CoreError> {
        Ok(self.loads_hash(loads)? ^ self.items_hash(items)?)
    }

    /// Apply a list of flipped pairs to `old`.
    pub fn hash_update(&self, old: u64, changed: &[KeyRef]) -> u64 {
        changed.iter().fold(old, |h, &k| h ^ self.key(k))
    }
}

/// Fixed-size table of 64-bit words, each holding 63 bits of hash and one
/// result bit, addressed by a hash prefix and probed linearly.
///
/// Lookups never block and inserts may evict. Entries are written with one
/// atomic store, so concurrent readers see either the old or the new entry.
pub struct LossyCache {
    entries: Box<[AtomicU64]>,
    bits: u32,
    mask: usize,
    probe: usize,
}

/// Caches evaluated configurations (result bit: adversary wins).
pub type StateCache = LossyCache;
/// Caches feasibility of item multisets (result bit: feasible).
pub type FeasibilityCache = LossyCache;

pub const DEFAULT_HASH_BITS: u32 = 25;
pub const DEFAULT_PROBE: usize = 4;

impl LossyCache {
    pub fn new(address_bits: u32) -> Self {
        Self::with_probe(address_bits, DEFAULT_PROBE)
    }

    pub fn with_probe(address_bits: u32, probe: usize) -> Self {
        assert!((1..=40).contains(&address_bits), "address bits out of range");
        assert!(probe >= 1);
        let len = 1usize << address_bits;
        let entries = (0..len).map(|_| AtomicU64::new(0)).collect();
        LossyCache {
            entries,
            bits: address_bits,
            mask: len - 1,
            probe,
        }
    }

    pub fn address_bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn payload(hash: u64) -> u64 {
        let p = hash & !1;
        if p == 0 {
            // The all-zero word marks an empty slot.
            2
        } else {
            p
        }
    }

    #[inline]
    fn home(&self, hash: u64) -> usize {
        (hash >> (64 - self.bits)) as usize
    }

    pub fn lookup(&self, hash: u64) -> Option<bool> {
        let payload = Self::payload(hash);
        let home = self.home(hash);
        for i in 0..self.probe {
            let e = self.entries[(home + i) & self.mask].load(Ordering::Relaxed);
            if e == 0 {
                return None;
            }
            if e & !1 == payload {
                return Some(e & 1 == 1);
            }
        }
        None
    }

    pub fn insert(&self, hash: u64, bit: bool) {
        let payload = Self::payload(hash);
        let word = payload | u64::from(bit);
        let home = self.home(hash);
        for i in 0..self.probe {
            let slot = &self.entries[(home + i) & self.mask];
            let e = slot.load(Ordering::Relaxed);
            if e == 0 || e & !1 == payload {
                slot.store(word, Ordering::Relaxed);
                return;
            }
        }
        // Window full: evict a slot chosen by hash bits the address does not use.
        let victim = (hash >> 1) as usize % self.probe;
        self.entries[(home + victim) & self.mask].store(word, Ordering::Relaxed);
    }

    /// Number of occupied slots (linear scan).
    pub fn occupied(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.load(Ordering::Relaxed) != 0)
            .count()
    }

    pub fn clear(&self) {
        for e in self.entries.iter() {
            e.store(0, Ordering::Relaxed);
        }
    }
}

impl std::fmt::Debug for LossyCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LossyCache")
            .field("address_bits", &self.bits)
            .field("probe", &self.probe)
            .finish()
    }
}
