//! Pass-based execution over replayable event sequences: the multipass
//! model and the strict turnstile model with live-point centering.

mod centering;
pub mod parse;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use centering::{approx_max_norm, encode_point, find_center_turnstile, CoordCodec};
pub use parse::{Header, LineItem};

use crate::sketch::SketchBackend;
use crate::solver::{
    self, Accumulator, Anchor, LpTypeProblem, PassSource, SolveOutcome, SolverParams,
};
use crate::{Error, Result};

/// Default coordinate bound Δ of the turnstile point universe.
pub const DEFAULT_COORD_BOUND: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Op {
    Insert,
    Delete,
}

impl Op {
    pub fn delta(self) -> i64 {
        match self {
            Op::Insert => 1,
            Op::Delete => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamEvent<T> {
    pub op: Op,
    pub item: T,
}

impl<T> StreamEvent<T> {
    pub fn insert(item: T) -> Self {
        StreamEvent {
            op: Op::Insert,
            item,
        }
    }

    pub fn delete(item: T) -> Self {
        StreamEvent {
            op: Op::Delete,
            item,
        }
    }
}

/// Insert events for every item.
pub fn inserts<T: Clone>(items: &[T]) -> Vec<StreamEvent<T>> {
    items.iter().cloned().map(StreamEvent::insert).collect()
}

/// In-memory event sequence; a pass may be split into contiguous shards
/// processed on separate threads and merged in shard order.
#[derive(Debug, Clone)]
pub struct MemorySource<'a, T> {
    events: &'a [StreamEvent<T>],
    shards: usize,
    passes: usize,
}

impl<'a, T> MemorySource<'a, T> {
    pub fn new(events: &'a [StreamEvent<T>]) -> Self {
        MemorySource {
            events,
            shards: 1,
            passes: 0,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards.max(1);
        self
    }

    pub fn events(&self) -> &'a [StreamEvent<T>] {
        self.events
    }
}

impl<T: Clone + Sync> PassSource<T> for MemorySource<'_, T> {
    fn run_pass<A, I, F>(&mut self, init: I, feed: F) -> Result<A>
    where
        A: Accumulator,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T, i64) -> Result<()> + Sync,
    {
        self.passes += 1;
        let run = |chunk: &[StreamEvent<T>]| -> Result<A> {
            let mut acc = init();
            for e in chunk {
                feed(&mut acc, &e.item, e.op.delta())?;
            }
            Ok(acc)
        };
        if self.shards <= 1 || self.events.len() < 2 * self.shards {
            return run(self.events);
        }
        let size = self.events.len().div_ceil(self.shards);
        let parts: Vec<Result<A>> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .events
                .chunks(size)
                .map(|chunk| scope.spawn(move || run(chunk)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Internal("shard panicked".into())))
                })
                .collect()
        });
        let mut parts = parts.into_iter();
        let mut acc = parts.next().unwrap_or_else(|| Ok(init()))?;
        for p in parts {
            acc.merge_into(p?)?;
        }
        Ok(acc)
    }

    fn passes(&self) -> usize {
        self.passes
    }

    fn first_insert(&mut self) -> Result<Option<T>> {
        Ok(self
            .events
            .iter()
            .find(|e| e.op == Op::Insert)
            .map(|e| e.item.clone()))
    }
}

/// Event file re-read and re-parsed on every pass.
#[derive(Debug, Clone)]
pub struct FileSource {
    path: PathBuf,
    header: Header,
    passes: usize,
}

impl FileSource {
    /// Opens `path` and reads its directives.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let header = parse::parse_header(&text)?;
        Ok(FileSource {
            path,
            header,
            passes: 0,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    fn lines(&self) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>> {
        let f = File::open(&self.path)
            .map_err(|e| Error::Io(format!("{}: {e}", self.path.display())))?;
        Ok(BufReader::new(f)
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l)))
    }

    /// Every event of the file, parsed as `T`.
    pub fn read_all<T: LineItem>(&self) -> Result<Vec<StreamEvent<T>>> {
        let mut out = Vec::new();
        let mut dim = None;
        for (no, line) in self.lines()? {
            if let Some(e) = parse::parse_line(&line?, &self.header, &mut dim, no)? {
                out.push(e);
            }
        }
        Ok(out)
    }
}

impl<T: LineItem> PassSource<T> for FileSource {
    fn run_pass<A, I, F>(&mut self, init: I, feed: F) -> Result<A>
    where
        A: Accumulator,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T, i64) -> Result<()> + Sync,
    {
        self.passes += 1;
        let mut acc = init();
        let mut dim = None;
        for (no, line) in self.lines()? {
            if let Some(e) = parse::parse_line::<T>(&line?, &self.header, &mut dim, no)? {
                feed(&mut acc, &e.item, e.op.delta())?;
            }
        }
        Ok(acc)
    }

    fn passes(&self) -> usize {
        self.passes
    }

    fn first_insert(&mut self) -> Result<Option<T>> {
        let mut dim = None;
        for (no, line) in self.lines()? {
            if let Some(e) = parse::parse_line::<T>(&line?, &self.header, &mut dim, no)? {
                if e.op == Op::Insert {
                    return Ok(Some(e.item));
                }
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassReport {
    pub passes: usize,
    /// Passes spent fixing the net anchor, or validating for origin-anchored nets.
    pub setup_passes: usize,
    pub iterations: usize,
    pub successful_iterations: usize,
    pub peak_words: usize,
    pub events_per_pass: u64,
    pub center: Option<Vec<f64>>,
    pub r_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRun {
    pub outcome: SolveOutcome,
    pub report: PassReport,
}

/// How the turnstile model finds the net radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusSearch {
    /// Binary search over powers of two, one pass per probe.
    #[default]
    BinarySearch,
    /// Two passes with one sampler per power of two. Not implemented.
    TwoPass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnstileOptions {
    pub coord_bound: u64,
    pub radius_search: RadiusSearch,
}

impl Default for TurnstileOptions {
    fn default() -> Self {
        TurnstileOptions {
            coord_bound: DEFAULT_COORD_BOUND,
            radius_search: RadiusSearch::BinarySearch,
        }
    }
}

#[derive(Debug, Default)]
struct Scan {
    events: u64,
    max_dist: f64,
}

impl Accumulator for Scan {
    fn merge_into(&mut self, other: Self) -> Result<()> {
        self.events += other.events;
        self.max_dist = self.max_dist.max(other.max_dist);
        Ok(())
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Validates an insert-only stream and, for radial problems, measures the
/// exact distance of the farthest point from `center`.
fn scan_pass<P, S>(source: &mut S, problem: &P, center: Option<&[f64]>) -> Result<Scan>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    source.run_pass(Scan::default, |acc, item, delta| {
        if delta < 0 {
            return Err(Error::Usage(
                "the multipass model requires an insert-only stream".into(),
            ));
        }
        problem.validate(item)?;
        acc.events += 1;
        if let (Some(c), Some(p)) = (center, problem.point_of(item)) {
            if p.len() != c.len() {
                return Err(Error::InputBounds("inconsistent point dimension".into()));
            }
            acc.max_dist = acc.max_dist.max(distance(c, p));
        }
        Ok(())
    })
}

fn finish<P, S>(
    source: &mut S,
    problem: &P,
    params: &SolverParams,
    anchor: Option<Anchor>,
    setup_passes: usize,
    events: u64,
) -> Result<StreamRun>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let net = problem.build_net(anchor.as_ref())?;
    let outcome = solver::solve(source, problem, &net, params)?;
    Ok(StreamRun {
        report: PassReport {
            passes: source.passes(),
            setup_passes,
            iterations: outcome.iterations,
            successful_iterations: outcome.successful,
            peak_words: outcome.peak_words,
            events_per_pass: events,
            center: anchor.as_ref().map(|a| a.center.clone()),
            r_max: anchor.map(|a| a.r_max),
        },
        outcome,
    })
}

/// Multipass model: one pass anchors the net on the first point with the
/// exact maximum distance, then two passes per solver iteration.
pub fn run_multipass<P, S>(source: &mut S, problem: &P, params: &SolverParams) -> Result<StreamRun>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let first = source.first_insert()?.ok_or(Error::EmptyInput)?;
    let center = if problem.needs_anchor() {
        Some(
            problem
                .point_of(&first)
                .ok_or_else(|| Error::Internal("anchored problem without points".into()))?
                .to_vec(),
        )
    } else {
        None
    };
    let before = source.passes();
    let scan = scan_pass(source, problem, center.as_deref())?;
    let anchor = center.map(|center| Anchor {
        center,
        r_max: scan.max_dist,
    });
    finish(
        source,
        problem,
        params,
        anchor,
        source.passes() - before,
        scan.events,
    )
}

/// Multipass model with a caller-fixed anchor; the first pass only validates.
pub fn run_multipass_anchored<P, S>(
    source: &mut S,
    problem: &P,
    params: &SolverParams,
    anchor: Anchor,
) -> Result<StreamRun>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let before = source.passes();
    let scan = scan_pass(source, problem, None)?;
    if scan.events == 0 {
        return Err(Error::EmptyInput);
    }
    let anchor = problem.needs_anchor().then_some(anchor);
    finish(
        source,
        problem,
        params,
        anchor,
        source.passes() - before,
        scan.events,
    )
}

#[derive(Debug)]
struct Validation {
    events: u64,
    counts: Option<crate::sketch::ExactCounts>,
}

impl Accumulator for Validation {
    fn merge_into(&mut self, other: Self) -> Result<()> {
        self.events += other.events;
        if let (Some(a), Some(b)) = (self.counts.as_mut(), other.counts.as_ref()) {
            a.absorb(b);
        }
        Ok(())
    }
}

/// Strict turnstile model. Radial problems spend one pass sampling a live
/// center and a binary search over powers of two for the radius; other
/// problems spend one validation pass. Every pass applies inserts as +1 and
/// deletes as −1.
pub fn run_turnstile<P, S>(
    source: &mut S,
    problem: &P,
    params: &SolverParams,
    opts: &TurnstileOptions,
) -> Result<StreamRun>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
    P::Item: parse::RawKey,
{
    if opts.radius_search == RadiusSearch::TwoPass {
        return Err(Error::Usage(
            "the two-pass radius search is not implemented".into(),
        ));
    }
    let before = source.passes();
    if problem.needs_anchor() {
        let first = source.first_insert()?.ok_or(Error::EmptyInput)?;
        let d = problem
            .point_of(&first)
            .ok_or_else(|| Error::Internal("anchored problem without points".into()))?
            .len();
        let codec = CoordCodec::new(d, opts.coord_bound)?;
        let (center, events) = find_center_turnstile(source, problem, &codec, params)?;
        let r_max = approx_max_norm(source, problem, &center, &codec, params)?;
        let anchor = Anchor { center, r_max };
        return finish(
            source,
            problem,
            params,
            Some(anchor),
            source.passes() - before,
            events,
        );
    }
    let exact = params.backend == SketchBackend::ExactOracle;
    let v = source.run_pass(
        || Validation {
            events: 0,
            counts: exact.then(crate::sketch::ExactCounts::new),
        },
        |acc, item, delta| {
            problem.validate(item)?;
            acc.events += 1;
            if let Some(c) = acc.counts.as_mut() {
                c.add(parse::RawKey::raw_key(item), delta);
            }
            Ok(())
        },
    )?;
    if let Some(c) = &v.counts {
        if !c.negative().is_empty() {
            return Err(Error::StrictTurnstile(format!(
                "{} items end with negative multiplicity",
                c.negative().len()
            )));
        }
        if c.is_empty() {
            return Err(Error::EmptyInput);
        }
    }
    finish(
        source,
        problem,
        params,
        None,
        source.passes() - before,
        v.events,
    )
}
