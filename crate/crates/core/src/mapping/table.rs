//! Bucketed key-value store from [`InputKey`] to [`EventSequence`].
//!
//! A fixed array of buckets, each an ordered list of entries. The bucket for
//! a key is `mix(hash(key)) % BUCKETS`, where `hash` comes from the table's
//! `BuildHasher` and `mix` is a fixed 64-bit finalizer.

use std::collections::hash_map::DefaultHasher;
use std::hash::{BuildHasher, BuildHasherDefault, Hasher};

use super::event::EventSequence;
use super::key::InputKey;

pub const BUCKETS: usize = 256;

/// Deterministic SipHash with fixed keys.
pub type DefaultKeyHasher = BuildHasherDefault<DefaultHasher>;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct MappingTable<S = DefaultKeyHasher> {
    buckets: Vec<Vec<(InputKey, EventSequence)>>,
    len: usize,
    hasher: S,
}

impl MappingTable {
    pub fn new() -> Self {
        Self::with_hasher(DefaultKeyHasher::default())
    }
}

impl Default for MappingTable {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: BuildHasher> MappingTable<S> {
    pub fn with_hasher(hasher: S) -> Self {
        MappingTable {
            buckets: vec![Vec::new(); BUCKETS],
            len: 0,
            hasher,
        }
    }

    pub fn bucket_of(&self, key: &InputKey) -> usize {
        (mix(self.hasher.hash_one(key)) % BUCKETS as u64) as usize
    }

    /// Inserts or replaces; returns the previous sequence for an equal key.
    pub fn put(&mut self, key: InputKey, seq: EventSequence) -> Option<EventSequence> {
        let bucket = &mut self.buckets[(mix(self.hasher.hash_one(&key)) % BUCKETS as u64) as usize];
        if let Some(slot) = bucket.iter_mut().find(|(k, _)| *k == key) {
            return Some(std::mem::replace(&mut slot.1, seq));
        }
        bucket.push((key, seq));
        self.len += 1;
        None
    }

    pub fn get(&self, key: &InputKey) -> Option<&EventSequence> {
        self.buckets[self.bucket_of(key)]
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }

    pub fn contains_key(&self, key: &InputKey) -> bool {
        self.get(key).is_some()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bucket_len(&self, index: usize) -> usize {
        self.buckets.get(index).map_or(0, Vec::len)
    }

    /// Entries in bucket order, insertion order within a bucket.
    pub fn iter(&self) -> impl Iterator<Item = (&InputKey, &EventSequence)> {
        self.buckets.iter().flatten().map(|(k, v)| (k, v))
    }
}

/// Hashes every key to the same value. Useful to force all entries into one
/// bucket.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantHasher;

impl Hasher for ConstantHasher {
    fn finish(&self) -> u64 {
        0
    }

    fn write(&mut self, _bytes: &[u8]) {}
}

pub type ConstantKeyHasher = BuildHasherDefault<ConstantHasher>;
