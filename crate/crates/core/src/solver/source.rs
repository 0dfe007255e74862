use crate::Result;

/// State built during one pass; shards of a pass merge pairwise.
pub trait Accumulator: Send {
    fn merge_into(&mut self, other: Self) -> Result<()>;
}

/// A stream that can be traversed repeatedly, delivering each item with its
/// signed multiplicity (+1 insert, −1 delete).
pub trait PassSource<T> {
    /// Runs one pass: `init` creates an accumulator per shard, `feed` applies
    /// one event, and shard accumulators are merged in shard order.
    fn run_pass<A, I, F>(&mut self, init: I, feed: F) -> Result<A>
    where
        A: Accumulator,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T, i64) -> Result<()> + Sync;

    /// Passes completed so far.
    fn passes(&self) -> usize;

    /// First inserted item, read without counting a pass.
    fn first_insert(&mut self) -> Result<Option<T>>;
}

/// Accumulator that ignores the stream; used for validation passes.
#[derive(Debug, Default)]
pub struct Unit;

impl Accumulator for Unit {
    fn merge_into(&mut self, _other: Self) -> Result<()> {
        Ok(())
    }
}
