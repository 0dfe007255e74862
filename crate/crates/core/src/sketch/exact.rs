use std::collections::BTreeMap;

/// Exact per-index counts. Zero entries are never stored, so two instances
/// over the same net vector compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactCounts {
    counts: BTreeMap<u128, i64>,
}

impl ExactCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, index: u128, delta: i64) {
        if delta == 0 {
            return;
        }
        let entry = self.counts.entry(index).or_insert(0);
        *entry += delta;
        if *entry == 0 {
            self.counts.remove(&index);
        }
    }

    pub fn absorb(&mut self, other: &ExactCounts) {
        for (&i, &c) in &other.counts {
            self.add(i, c);
        }
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, index: u128) -> i64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = u128> + '_ {
        self.counts.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, i64)> + '_ {
        self.counts.iter().map(|(&i, &c)| (i, c))
    }

    /// Indices whose net count is negative.
    pub fn negative(&self) -> Vec<u128> {
        self.counts
            .iter()
            .filter(|(_, &c)| c < 0)
            .map(|(&i, _)| i)
            .collect()
    }
}
