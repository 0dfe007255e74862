//! In-process simulation of the coordinator and parallel-computation
//! models: machines holding partitions exchange word-metered messages
//! with a coordinator in synchronous rounds.

mod meter;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use meter::{LoadMeter, LoadReport, RoundLoad};

use crate::solver::{
    bank_spec, budget_outcome, build_check_bank, build_sample_bank, check_eps, derive_seed,
    distinct, draw_rng, evaluate_check, log_sum_exp, Anchor, IterationRecord, LpTypeProblem,
    SampleBank, Solution, SolveOutcome, SolverParams, Universe, WeightOracle,
};
use crate::streams::{MemorySource, Op, StreamEvent};
use crate::{Error, Result};

const TAG_QUOTA: u64 = 30;

/// Messages of the protocol with their sizes in words: one word per point,
/// scalar or index; a solution costs the problem's solution size.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    SolutionBroadcast(Solution),
    WeightReport {
        ln_weight: f64,
    },
    SampleQuota(usize),
    SampleBatch(Vec<u128>),
    ViolatorWeightReport {
        ln_total: f64,
        ln_violators: f64,
        violators: u64,
    },
    CenterCandidate(Option<Vec<f64>>),
    CenterBroadcast(Vec<f64>),
    MaxDistReport(f64),
}

impl Message {
    pub fn words(&self, solution_words: usize) -> usize {
        match self {
            Message::SolutionBroadcast(_) => solution_words,
            Message::WeightReport { .. } | Message::SampleQuota(_) => 1,
            Message::SampleBatch(b) => b.len(),
            Message::ViolatorWeightReport { .. } => 3,
            Message::CenterCandidate(c) => usize::from(c.is_some()),
            Message::CenterBroadcast(_) | Message::MaxDistReport(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    /// Machines take turns on the calling thread.
    #[default]
    RoundRobin,
    /// Machines run on their own threads between round barriers.
    Threaded,
}

/// Multinomial allocation of `m` draws to machines proportional to
/// `weights` (given on a log scale).
pub fn allocate_quotas(ln_weights: &[f64], m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    use rand::Rng;
    let top = ln_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return Err(Error::EmptyInput);
    }
    let mut cumulative = Vec::with_capacity(ln_weights.len());
    let mut acc = 0.0;
    for &w in ln_weights {
        acc += (w - top).exp();
        cumulative.push(acc);
    }
    let mut quotas = vec![0usize; ln_weights.len()];
    for _ in 0..m {
        let x = rng.gen::<f64>() * acc;
        let i = cumulative
            .iter()
            .position(|&c| x < c)
            .unwrap_or(cumulative.len() - 1);
        quotas[i] += 1;
    }
    Ok(quotas)
}

/// A logical machine: its partition and its copy of the stored solutions.
struct Machine<'a, T> {
    id: usize,
    key: usize,
    events: &'a [StreamEvent<T>],
    oracle: Option<WeightOracle>,
    bank: Option<SampleBank>,
    sample_words: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributedRun {
    pub outcome: SolveOutcome,
    pub load: LoadReport,
    pub rounds: usize,
    pub machines: usize,
    pub center: Option<Vec<f64>>,
    pub r_max: Option<f64>,
}

fn for_each_machine<'a, T, R, F>(
    machines: &mut [Machine<'a, T>],
    scheduler: Scheduler,
    f: F,
) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&mut Machine<'a, T>) -> Result<R> + Sync,
{
    match scheduler {
        Scheduler::RoundRobin => machines.iter_mut().map(&f).collect(),
        Scheduler::Threaded => std::thread::scope(|scope| {
            let f = &f;
            let handles: Vec<_> = machines
                .iter_mut()
                .map(|m| scope.spawn(move || f(m)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Error::Internal("machine thread panicked".into())))
                })
                .collect()
        }),
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Coordinator model over `partitions`, one per machine. Two setup rounds
/// fix the net anchor (the lexicographically smallest first point among
/// machines and the exact maximum distance from it); every iteration then
/// takes three rounds: weight reports, sample quotas and batches, and
/// violator reports.
pub fn run_coordinator<P>(
    partitions: &[Vec<StreamEvent<P::Item>>],
    problem: &P,
    params: &SolverParams,
    scheduler: Scheduler,
) -> Result<DistributedRun>
where
    P: LpTypeProblem,
    P::Net: Sync,
{
    let keys: Vec<usize> = (0..partitions.len()).collect();
    run_coordinator_keyed(partitions, &keys, problem, params, scheduler)
}

/// Like [`run_coordinator`], with `keys[i]` naming the partition held by
/// machine `i`. Machine randomness and every aggregation follow key order,
/// so permuting partitions together with their keys changes no solution.
pub fn run_coordinator_keyed<P>(
    partitions: &[Vec<StreamEvent<P::Item>>],
    keys: &[usize],
    problem: &P,
    params: &SolverParams,
    scheduler: Scheduler,
) -> Result<DistributedRun>
where
    P: LpTypeProblem,
    P::Net: Sync,
{
    let k = partitions.len();
    if k == 0 {
        return Err(Error::Usage("at least one machine is required".into()));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| keys.get(i).copied().unwrap_or(usize::MAX));
    let mut sorted_keys: Vec<usize> = keys.to_vec();
    sorted_keys.sort_unstable();
    sorted_keys.dedup();
    if keys.len() != k || sorted_keys.len() != k {
        return Err(Error::Usage(
            "partition keys must be distinct, one per machine".into(),
        ));
    }
    check_eps(problem, params)?;
    let sf = problem.solution_words();
    let coord = k;
    let mut meter = LoadMeter::new(k + 1);
    let mut machines: Vec<Machine<P::Item>> = partitions
        .iter()
        .enumerate()
        .map(|(id, events)| Machine {
            id,
            key: keys[id],
            events,
            oracle: None,
            bank: None,
            sample_words: 0,
        })
        .collect();

    // round 1: center candidates
    meter.begin_round();
    let candidates = for_each_machine(&mut machines, scheduler, |m| {
        if m.events.iter().any(|e| e.op == Op::Delete) {
            return Err(Error::Usage(
                "the coordinator model requires insert-only partitions".into(),
            ));
        }
        let first = m.events.first().map(|e| &e.item);
        Ok(first.map(|item| {
            problem
                .point_of(item)
                .map(<[f64]>::to_vec)
                .unwrap_or_default()
        }))
    })?;
    for (i, c) in candidates.iter().enumerate() {
        meter.send(i, coord, &Message::CenterCandidate(c.clone()), sf);
    }
    let center = candidates
        .iter()
        .flatten()
        .min_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .cloned()
        .ok_or(Error::EmptyInput)?;

    // round 2: center broadcast and maximum distances
    meter.begin_round();
    let anchored = problem.needs_anchor();
    for i in 0..k {
        meter.send(coord, i, &Message::CenterBroadcast(center.clone()), sf);
    }
    let dists = for_each_machine(&mut machines, scheduler, |m| {
        let mut worst: f64 = 0.0;
        for e in m.events {
            problem.validate(&e.item)?;
            if anchored {
                if let Some(p) = problem.point_of(&e.item) {
                    if p.len() != center.len() {
                        return Err(Error::InputBounds("inconsistent point dimension".into()));
                    }
                    worst = worst.max(distance(p, &center));
                }
            }
        }
        Ok(worst)
    })?;
    for (i, d) in dists.iter().enumerate() {
        meter.send(i, coord, &Message::MaxDistReport(*d), sf);
    }
    let anchor = anchored.then(|| Anchor {
        center: center.clone(),
        r_max: dists.iter().copied().fold(0.0, f64::max),
    });
    let net = problem.build_net(anchor.as_ref())?;
    let derived = params.derive(net.size(), problem.nu(), problem.lambda())?;
    for m in machines.iter_mut() {
        m.oracle = Some(WeightOracle::new(derived.universe, derived.s));
    }
    let mut oracle = WeightOracle::new(derived.universe, derived.s);
    let mut pending: Option<Solution> = None;
    let mut history = Vec::new();
    let mut successful = 0;
    let mut peak_words = 0;
    let mut quota_rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[TAG_QUOTA]));

    for t in 0..derived.max_iterations {
        let spec = bank_spec(params, &derived, t);
        let stored_words = oracle.len() * sf;

        // R1: broadcast the newest stored solution, collect total weights
        meter.begin_round();
        if let Some(sol) = pending.take() {
            for i in 0..k {
                meter.send(coord, i, &Message::SolutionBroadcast(sol.clone()), sf);
            }
            for m in machines.iter_mut() {
                if let Some(o) = m.oracle.as_mut() {
                    o.push(sol.clone());
                }
            }
        }
        let weights = for_each_machine(&mut machines, scheduler, |m| {
            let o = m
                .oracle
                .as_ref()
                .ok_or_else(|| Error::Internal("machine without oracle".into()))?;
            let mut src = MemorySource::new(m.events);
            let bank = build_sample_bank(&mut src, problem, &net, o, &spec)?;
            let w = bank.ln_total_weight();
            m.sample_words = bank.words();
            m.bank = Some(bank);
            Ok(w)
        })?;
        for (i, w) in weights.iter().enumerate() {
            meter.send(i, coord, &Message::WeightReport { ln_weight: *w }, sf);
            meter.note_per_class_report(i, coord, t + 1);
        }
        for m in &machines {
            peak_words = peak_words.max(m.sample_words + stored_words);
        }
        let keyed: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
        let mut quotas = vec![0; k];
        for (q, &i) in allocate_quotas(&keyed, derived.m, &mut quota_rng)?
            .into_iter()
            .zip(&order)
        {
            quotas[i] = q;
        }

        // R2: quotas out, sample batches back
        meter.begin_round();
        for (i, q) in quotas.iter().enumerate() {
            meter.send(coord, i, &Message::SampleQuota(*q), sf);
        }
        let batches = for_each_machine(&mut machines, scheduler, |m| {
            let q = quotas[m.id];
            let bank = m
                .bank
                .as_mut()
                .ok_or_else(|| Error::Internal("machine without bank".into()))?;
            Ok(bank.draw(q, &mut draw_rng(params.seed, t, m.key)))
        })?;
        let mut draws = Vec::with_capacity(derived.m);
        let mut batches: Vec<Option<Vec<u128>>> = batches.into_iter().map(Some).collect();
        for &i in &order {
            let b = batches[i].take().unwrap_or_default();
            if b.len() != quotas[i] {
                return Err(Error::Protocol(format!(
                    "machine {i} returned {} samples for a quota of {}",
                    b.len(),
                    quotas[i]
                )));
            }
            let msg = Message::SampleBatch(b);
            meter.send(i, coord, &msg, sf);
            if let Message::SampleBatch(b) = msg {
                draws.extend(b);
            }
        }
        if draws.len() != derived.m {
            return Err(Error::Protocol(format!(
                "received {} samples, expected {}",
                draws.len(),
                derived.m
            )));
        }
        let b = distinct(&draws);
        let items: Vec<P::Item> = b.iter().map(|&i| net.representative(i)).collect();
        let candidate = problem.solve_basis(&items)?;

        // R3: candidate out, violator weights back
        meter.begin_round();
        for i in 0..k {
            meter.send(coord, i, &Message::SolutionBroadcast(candidate.clone()), sf);
        }
        let reports = for_each_machine(&mut machines, scheduler, |m| {
            m.bank = None;
            let o = m
                .oracle
                .as_ref()
                .ok_or_else(|| Error::Internal("machine without oracle".into()))?;
            let mut src = MemorySource::new(m.events);
            let bank = build_check_bank(&mut src, problem, &net, o, &spec, &candidate)?;
            Ok((
                bank.ln_total(),
                bank.ln_violators(),
                bank.violator_count(),
                bank.words(),
            ))
        })?;
        let reports: Vec<_> = order.iter().map(|&i| (i, reports[i])).collect();
        for &(i, r) in &reports {
            let msg = Message::ViolatorWeightReport {
                ln_total: r.0,
                ln_violators: r.1,
                violators: r.2,
            };
            meter.send(i, coord, &msg, sf);
            peak_words = peak_words.max(r.3 + stored_words + sf);
        }
        let check = evaluate_check(
            log_sum_exp(reports.iter().map(|(_, r)| r.0)),
            log_sum_exp(reports.iter().map(|(_, r)| r.1)),
            reports.iter().map(|(_, r)| r.2).sum(),
            derived.mu,
        );
        history.push(IterationRecord {
            iteration: t,
            draws: draws.len(),
            distinct: b.len(),
            success: check.success,
            violators: check.violator_count,
            ln_total_weight: check.ln_total,
            ln_violator_weight: check.ln_violators,
        });
        if check.violators_empty {
            successful += 1;
            let outcome = SolveOutcome {
                solution: problem.correct_solution(&candidate, params.eps),
                raw: candidate,
                iterations: t + 1,
                successful,
                history,
                peak_words,
                derived,
                budget_exhausted: false,
            };
            return Ok(finish(outcome, meter, k, anchor));
        }
        if check.success {
            successful += 1;
            oracle.push(candidate.clone());
            pending = Some(candidate);
        }
    }
    let outcome = budget_outcome(problem, derived, history, successful, peak_words)?;
    Ok(finish(outcome, meter, k, anchor))
}

fn finish(
    outcome: SolveOutcome,
    meter: LoadMeter,
    k: usize,
    anchor: Option<Anchor>,
) -> DistributedRun {
    let load = meter.report();
    DistributedRun {
        outcome,
        rounds: load.rounds.len(),
        load,
        machines: k,
        center: anchor.as_ref().map(|a| a.center.clone()),
        r_max: anchor.map(|a| a.r_max),
    }
}

/// Parallel-computation model: the coordinator run with machine 0 acting as
/// coordinator, so its traffic is attributed to machine 0.
pub fn run_parallel<P>(
    partitions: &[Vec<StreamEvent<P::Item>>],
    problem: &P,
    params: &SolverParams,
    scheduler: Scheduler,
) -> Result<DistributedRun>
where
    P: LpTypeProblem,
    P::Net: Sync,
{
    let mut run = run_coordinator(partitions, problem, params, scheduler)?;
    run.load = run.load.fold_coordinator_into(0);
    Ok(run)
}

/// Splits events round-robin over `k` machines.
pub fn partition_round_robin<T: Clone>(
    events: &[StreamEvent<T>],
    k: usize,
) -> Vec<Vec<StreamEvent<T>>> {
    let mut parts = vec![Vec::new(); k.max(1)];
    for (i, e) in events.iter().enumerate() {
        parts[i % k.max(1)].push(e.clone());
    }
    parts
}
