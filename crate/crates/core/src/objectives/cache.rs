use std::collections::HashMap;

/// Grid spacing used to key cached evaluations.
pub const QUANTUM: f64 = 1e-6;

/// Cache key: each coordinate rounded to the nearest multiple of
/// [`QUANTUM`].
pub fn quantize_key(lambda: &[f64]) -> Vec<i64> {
    lambda.iter().map(|v| (v / QUANTUM).round() as i64).collect()
}

/// The grid point a key stands for.
pub fn key_point(key: &[i64]) -> Vec<f64> {
    key.iter().map(|&k| k as f64 * QUANTUM).collect()
}

#[derive(Debug, Clone, Default)]
pub struct EvalCache {
    map: HashMap<Vec<i64>, f64>,
    hits: usize,
    misses: usize,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Looks `key` up, counting the hit or miss.
    pub fn get(&mut self, key: &[i64]) -> Option<f64> {
        let found = self.map.get(key).copied();
        if found.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        found
    }

    pub fn insert(&mut self, key: Vec<i64>, loss: f64) {
        self.map.insert(key, loss);
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn misses(&self) -> usize {
        self.misses
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
