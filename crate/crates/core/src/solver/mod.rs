//! Problem-agnostic solver: the LP-type abstraction, implicit weights over
//! stored solutions, weighted sampling through sketch banks, the
//! violator-weight test, and the main iteration loop.

mod banks;
mod oracle;
mod params;
mod problem;
mod source;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use banks::{
    evaluate_check, log_sum_exp, BankSpec, CheckBank, CheckOutcome, SampleBank, CHECK_ZETA,
};
pub use oracle::WeightOracle;
pub use params::{derive_seed, Derived, SolverParams};
pub use problem::{Anchor, BudgetPolicy, LpTypeProblem, Solution, Universe};
pub use source::{Accumulator, PassSource, Unit};

pub use crate::sketch::SketchBackend;
use crate::{Error, Result};

const TAG_DRAW: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub draws: usize,
    pub distinct: usize,
    pub success: bool,
    pub violators: u64,
    pub ln_total_weight: f64,
    pub ln_violator_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Corrected solution for the original input.
    pub solution: Solution,
    /// Solution of the final sample before correction.
    pub raw: Solution,
    pub iterations: usize,
    pub successful: usize,
    pub history: Vec<IterationRecord>,
    /// Largest number of sketch and stored-solution words live during a pass.
    pub peak_words: usize,
    pub derived: Derived,
    pub budget_exhausted: bool,
}

pub fn bank_spec(params: &SolverParams, derived: &Derived, iteration: usize) -> BankSpec {
    BankSpec {
        universe: derived.universe,
        classes: iteration + 1,
        class_step: derived.class_step,
        backend: params.backend,
        zeta: params.zeta,
        delta: params.delta,
        seed: params.seed,
        iteration,
    }
}

/// RNG used by machine `machine` to pick classes in iteration `iteration`.
pub fn draw_rng(seed: u64, iteration: usize, machine: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(
        seed,
        &[iteration as u64, TAG_DRAW, machine as u64],
    ))
}

/// One pass feeding every snapped point into the sample bank of its weight
/// class.
pub fn build_sample_bank<P, S>(
    source: &mut S,
    problem: &P,
    net: &P::Net,
    oracle: &WeightOracle,
    spec: &BankSpec,
) -> Result<SampleBank>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    source.run_pass(
        || SampleBank::new(spec),
        |bank, item, delta| {
            let idx = net.snap(item)?;
            let rep = net.representative(idx);
            bank.feed(idx, oracle.exponent(problem, &rep), delta)
        },
    )
}

/// One pass counting all points and violators of `candidate` per class.
pub fn build_check_bank<P, S>(
    source: &mut S,
    problem: &P,
    net: &P::Net,
    oracle: &WeightOracle,
    spec: &BankSpec,
    candidate: &Solution,
) -> Result<CheckBank>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    source.run_pass(
        || CheckBank::new(spec),
        |bank, item, delta| {
            let idx = net.snap(item)?;
            let rep = net.representative(idx);
            let v = oracle.exponent(problem, &rep);
            bank.feed(idx, v, problem.violates(candidate, &rep), delta)
        },
    )
}

/// Draws the weighted sample of iteration `t`; returns the raw draws.
pub fn sample_m_points<P, S>(
    source: &mut S,
    problem: &P,
    net: &P::Net,
    oracle: &WeightOracle,
    params: &SolverParams,
    derived: &Derived,
    t: usize,
) -> Result<(Vec<u128>, usize)>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let spec = bank_spec(params, derived, t);
    let mut bank = build_sample_bank(source, problem, net, oracle, &spec)?;
    if bank.ln_total_weight() == f64::NEG_INFINITY {
        return Err(Error::EmptyInput);
    }
    let words = bank.words();
    let draws = bank.draw(derived.m, &mut draw_rng(params.seed, t, 0));
    Ok((draws, words))
}

/// Runs the violator-weight test for `candidate` in iteration `t`.
#[allow(clippy::too_many_arguments)]
pub fn check_violators_weight<P, S>(
    source: &mut S,
    problem: &P,
    net: &P::Net,
    oracle: &WeightOracle,
    params: &SolverParams,
    derived: &Derived,
    t: usize,
    candidate: &Solution,
) -> Result<(CheckOutcome, usize)>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    let spec = bank_spec(params, derived, t);
    let bank = build_check_bank(source, problem, net, oracle, &spec, candidate)?;
    Ok((bank.outcome(derived.mu), bank.words()))
}

/// Sorted distinct indices of a draw.
pub fn distinct(draws: &[u128]) -> Vec<u128> {
    let mut b = draws.to_vec();
    b.sort_unstable();
    b.dedup();
    b
}

/// Solves the sample `b` exactly on its net representatives.
pub fn solve_sample<P: LpTypeProblem>(problem: &P, net: &P::Net, b: &[u128]) -> Result<Solution> {
    let items: Vec<P::Item> = b.iter().map(|&i| net.representative(i)).collect();
    problem.solve_basis(&items)
}

pub fn check_eps<P: LpTypeProblem>(problem: &P, params: &SolverParams) -> Result<()> {
    if (problem.eps() - params.eps).abs() > 1e-15 {
        return Err(Error::Usage(format!(
            "solver eps {} differs from problem eps {}",
            params.eps,
            problem.eps()
        )));
    }
    Ok(())
}

/// Outcome when the iteration budget is exhausted.
pub fn budget_outcome<P: LpTypeProblem>(
    problem: &P,
    derived: Derived,
    history: Vec<IterationRecord>,
    successful: usize,
    peak_words: usize,
) -> Result<SolveOutcome> {
    match problem.budget_policy() {
        BudgetPolicy::Error => Err(Error::IterationBudgetExceeded {
            budget: derived.max_iterations,
        }),
        BudgetPolicy::Infeasible => Ok(SolveOutcome {
            solution: Solution::Infeasible,
            raw: Solution::Infeasible,
            iterations: history.len(),
            successful,
            history,
            peak_words,
            derived,
            budget_exhausted: true,
        }),
    }
}

/// The sampling loop over a replayable source, with the net already fixed.
pub fn solve<P, S>(
    source: &mut S,
    problem: &P,
    net: &P::Net,
    params: &SolverParams,
) -> Result<SolveOutcome>
where
    P: LpTypeProblem,
    S: PassSource<P::Item>,
{
    check_eps(problem, params)?;
    let derived = params.derive(net.size(), problem.nu(), problem.lambda())?;
    let mut oracle = WeightOracle::new(derived.universe, derived.s);
    let mut history = Vec::new();
    let mut successful = 0;
    let mut peak_words = 0;
    for t in 0..derived.max_iterations {
        let stored_words = oracle.len() * problem.solution_words();
        let (draws, words) = sample_m_points(source, problem, net, &oracle, params, &derived, t)?;
        peak_words = peak_words.max(words + stored_words);
        let b = distinct(&draws);
        let candidate = solve_sample(problem, net, &b)?;
        let (check, words) = check_violators_weight(
            source, problem, net, &oracle, params, &derived, t, &candidate,
        )?;
        peak_words = peak_words.max(words + stored_words + problem.solution_words());
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
            return Ok(SolveOutcome {
                solution: problem.correct_solution(&candidate, params.eps),
                raw: candidate,
                iterations: t + 1,
                successful,
                history,
                peak_words,
                derived,
                budget_exhausted: false,
            });
        }
        if check.success {
            successful += 1;
            oracle.push(candidate);
        }
    }
    budget_outcome(problem, derived, history, successful, peak_words)
}
