use std::fmt;
use std::path::{Path, PathBuf};

use lptype_core::distributed::{partition_round_robin, run_coordinator, run_parallel, Scheduler};
use lptype_core::problems::oracles::{
    exact_lp, exact_meb, exact_saddle_grid, exact_sdp_grid, exact_svm,
};
use lptype_core::problems::svm::svm_optimum;
use lptype_core::problems::{
    classification_problem, classification_row, saddle_to_sdp, BoundedLpProblem, BoundedSdpProblem,
    Constraint, Labeled, MebProblem, SdpConstraint, SvmProblem,
};
use lptype_core::solver::PassSource;
use lptype_core::streams::parse::RawKey;
use lptype_core::streams::{
    run_multipass, run_turnstile, FileSource, Header, LineItem, MemorySource, Op, StreamEvent,
    TurnstileOptions,
};
use lptype_core::{Error, LpTypeProblem, Solution, SolverParams, Universe};

use crate::config::{BackendKind, ModelKind, ProblemKind, RunConfig, SchedulerKind};
use crate::report::{DerivedRecord, OracleCheck, Report, Status, SCHEMA};

/// Largest live input verify mode accepts.
pub const VERIFY_MAX_ITEMS: usize = 2000;
pub const VERIFY_MAX_DIM: usize = 4;
/// Resolution of the 2×2 PSD grid oracles.
pub const GRID_RESOLUTION: usize = 400;
/// Subset enumerations beyond this many candidates use the exact
/// incremental solvers instead.
const ENUMERATION_LIMIT: f64 = 2e6;

/// A failure, with the input file it concerns when known.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub path: Option<PathBuf>,
    pub error: Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, &self.error) {
            (Some(p), Error::Parse { line, message }) => {
                write!(f, "{}:{line}: {message}", p.display())
            }
            (Some(p), e) => write!(f, "{}: {e}", p.display()),
            (None, e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        RunError { path: None, error }
    }
}

type Res<T> = std::result::Result<T, RunError>;

fn at(path: &Path) -> impl FnOnce(Error) -> RunError + '_ {
    move |error| RunError {
        path: Some(path.to_path_buf()),
        error,
    }
}

enum Data<T> {
    File(PathBuf),
    Events(Vec<StreamEvent<T>>),
    Partitions(Vec<Vec<StreamEvent<T>>>),
}

impl<T: LineItem + Clone> Data<T> {
    fn load(cfg: &RunConfig) -> Res<(Header, Data<T>)> {
        let first = &cfg.inputs[0];
        let src = FileSource::open(first).map_err(at(first))?;
        let header = src.header().clone();
        let single = matches!(cfg.model, ModelKind::Multipass | ModelKind::Turnstile);
        let data = if single {
            Data::File(first.clone())
        } else if cfg.inputs.len() == 1 {
            Data::Events(src.read_all().map_err(at(first))?)
        } else {
            let mut parts = Vec::new();
            for p in &cfg.inputs {
                parts.push(
                    FileSource::open(p)
                        .and_then(|s| s.read_all())
                        .map_err(at(p))?,
                );
            }
            Data::Partitions(parts)
        };
        Ok((header, data))
    }

    fn events(&self) -> Res<Vec<StreamEvent<T>>> {
        Ok(match self {
            Data::File(p) => FileSource::open(p)
                .and_then(|s| s.read_all())
                .map_err(at(p))?,
            Data::Events(e) => e.clone(),
            Data::Partitions(ps) => ps.concat(),
        })
    }

    fn first_insert(&self) -> Res<Option<T>> {
        Ok(match self {
            Data::File(p) => {
                let mut src = FileSource::open(p).map_err(at(p))?;
                PassSource::<T>::first_insert(&mut src).map_err(at(p))?
            }
            Data::Events(e) => e
                .iter()
                .find(|e| e.op == Op::Insert)
                .map(|e| e.item.clone()),
            Data::Partitions(ps) => ps
                .iter()
                .flatten()
                .find(|e| e.op == Op::Insert)
                .map(|e| e.item.clone()),
        })
    }

    fn map<U>(self, f: impl Fn(&T) -> U) -> Res<Data<U>> {
        let conv = |v: &[StreamEvent<T>]| {
            v.iter()
                .map(|e| StreamEvent {
                    op: e.op,
                    item: f(&e.item),
                })
                .collect::<Vec<_>>()
        };
        Ok(match self {
            Data::Partitions(ps) => Data::Partitions(ps.iter().map(|p| conv(p)).collect()),
            other => Data::Events(conv(&other.events()?)),
        })
    }
}

/// Net items after applying deletions to insertions.
fn live_items<T: Clone + PartialEq>(events: &[StreamEvent<T>]) -> Vec<T> {
    let mut live: Vec<T> = Vec::new();
    for e in events {
        match e.op {
            Op::Insert => live.push(e.item.clone()),
            Op::Delete => {
                if let Some(i) = live.iter().rposition(|x| *x == e.item) {
                    live.remove(i);
                }
            }
        }
    }
    live
}

struct Run {
    outcome: lptype_core::SolveOutcome,
    passes: Option<usize>,
    setup_passes: Option<usize>,
    rounds: Option<usize>,
    center: Option<Vec<f64>>,
    r_max: Option<f64>,
    load: Option<lptype_core::distributed::LoadReport>,
}

fn params_of(cfg: &RunConfig) -> SolverParams {
    let mut p = SolverParams::new(cfg.eps, cfg.seed).with_backend(match cfg.backend {
        BackendKind::Exact => lptype_core::SketchBackend::ExactOracle,
        BackendKind::Sketch => lptype_core::SketchBackend::Randomized,
    });
    p.s = cfg.s;
    p
}

/// Rejects `s` above `⌈ln N⌉` before any pass when the net is known up front.
fn precheck_s<P: LpTypeProblem>(problem: &P, params: &SolverParams) -> Res<()> {
    if !problem.needs_anchor() {
        let n = problem.build_net(None)?.size();
        params.derive(n, problem.nu(), problem.lambda())?;
    }
    Ok(())
}

fn execute_model<P>(problem: &P, cfg: &RunConfig, data: &Data<P::Item>) -> Res<Run>
where
    P: LpTypeProblem,
    P::Net: Sync,
    P::Item: LineItem + RawKey,
{
    let params = params_of(cfg);
    precheck_s(problem, &params)?;
    let opts = TurnstileOptions {
        coord_bound: cfg.coord_bound,
        ..Default::default()
    };
    let stream = |r: lptype_core::streams::StreamRun| Run {
        passes: Some(r.report.passes),
        setup_passes: Some(r.report.setup_passes),
        rounds: None,
        center: r.report.center,
        r_max: r.report.r_max,
        load: None,
        outcome: r.outcome,
    };
    match cfg.model {
        ModelKind::Multipass | ModelKind::Turnstile => {
            let turnstile = cfg.model == ModelKind::Turnstile;
            let run = match data {
                Data::File(p) => {
                    let mut src = FileSource::open(p).map_err(at(p))?;
                    let r = if turnstile {
                        run_turnstile(&mut src, problem, &params, &opts)
                    } else {
                        run_multipass(&mut src, problem, &params)
                    };
                    r.map_err(at(p))?
                }
                Data::Events(e) => {
                    let mut src = MemorySource::new(e);
                    if turnstile {
                        run_turnstile(&mut src, problem, &params, &opts)?
                    } else {
                        run_multipass(&mut src, problem, &params)?
                    }
                }
                Data::Partitions(_) => {
                    return Err(Error::Usage(
                        "partitions need the coordinator or parallel model".into(),
                    )
                    .into())
                }
            };
            Ok(stream(run))
        }
        ModelKind::Coordinator | ModelKind::Parallel => {
            let parts = match data {
                Data::Partitions(ps) => ps.clone(),
                other => partition_round_robin(&other.events()?, cfg.machines),
            };
            let sched = match cfg.scheduler {
                SchedulerKind::RoundRobin => Scheduler::RoundRobin,
                SchedulerKind::Threaded => Scheduler::Threaded,
            };
            let run = if cfg.model == ModelKind::Coordinator {
                run_coordinator(&parts, problem, &params, sched)?
            } else {
                run_parallel(&parts, problem, &params, sched)?
            };
            Ok(Run {
                passes: None,
                setup_passes: None,
                rounds: Some(run.rounds),
                center: run.center,
                r_max: run.r_max,
                load: Some(run.load),
                outcome: run.outcome,
            })
        }
    }
}

fn check_caps(n: usize, d: usize, cfg: &RunConfig) -> Res<()> {
    if n > VERIFY_MAX_ITEMS {
        return Err(Error::Usage(format!(
            "verify mode supports at most {VERIFY_MAX_ITEMS} live items, input has {n}"
        ))
        .into());
    }
    let two_by_two = matches!(cfg.problem, ProblemKind::Sdp | ProblemKind::Saddle);
    if two_by_two && d != 2 {
        return Err(Error::Usage(format!(
            "verify mode supports 2 × 2 matrices only, input has order {d}"
        ))
        .into());
    }
    if !two_by_two && d > VERIFY_MAX_DIM {
        return Err(Error::Usage(format!(
            "verify mode supports dimension at most {VERIFY_MAX_DIM}, input has {d}"
        ))
        .into());
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

fn compare(method: &str, live: usize, value: Option<f64>, oracle: Option<f64>) -> OracleCheck {
    OracleCheck {
        method: method.to_string(),
        live_items: live,
        oracle_feasible: oracle.is_some(),
        value,
        oracle_value: oracle,
        oracle_gap: value.zip(oracle).map(|(v, o)| v - o),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn verify_meb(points: &[Vec<f64>], sol: &Solution) -> Res<OracleCheck> {
    let (_, r) = exact_meb(points)?;
    let value = match sol {
        Solution::Ball { radius, .. } => Some(*radius),
        _ => None,
    };
    Ok(compare("welzl", points.len(), value, Some(r)))
}

fn verify_svm(points: &[Labeled], d: usize, sol: &Solution) -> Res<OracleCheck> {
    let (method, opt) = if points.is_empty() {
        ("subset_enumeration", None)
    } else if binomial(points.len(), d + 1) <= ENUMERATION_LIMIT {
        ("subset_enumeration", exact_svm(points)?)
    } else {
        ("incremental_basis", svm_optimum(points, d)?)
    };
    let value = match sol {
        Solution::Hyperplane { u, .. } => Some(dot(u, u)),
        _ => None,
    };
    Ok(compare(
        method,
        points.len(),
        value,
        opt.map(|(u, _)| dot(&u, &u)),
    ))
}

fn verify_lp(problem: &BoundedLpProblem, rows: &[Constraint], sol: &Solution) -> Res<OracleCheck> {
    let d = problem.d;
    let (method, opt) = if binomial(rows.len() + 2 * d, d) <= ENUMERATION_LIMIT {
        (
            "vertex_enumeration",
            exact_lp(rows, &problem.c)?.map(|(z, _)| z),
        )
    } else {
        (
            "rational_simplex",
            problem.optimum(rows)?.map(|x| dot(&problem.c, &x)),
        )
    };
    let value = match sol {
        Solution::LpPoint { x } => Some(dot(&problem.c, x)),
        _ => None,
    };
    Ok(compare(method, rows.len(), value, opt))
}

fn verify_sdp(
    problem: &BoundedSdpProblem,
    cons: &[SdpConstraint],
    sol: &Solution,
) -> Res<OracleCheck> {
    let (oracle, value) = if problem.saddle {
        let m = (!cons.is_empty())
            .then(|| exact_saddle_grid(cons, GRID_RESOLUTION))
            .transpose()?;
        let v = match sol {
            Solution::SdpMatrix { margin, .. } => *margin,
            _ => None,
        };
        (m, v)
    } else {
        let z = exact_sdp_grid(cons, &problem.c, GRID_RESOLUTION)?;
        let v = match sol {
            Solution::SdpMatrix { entries, .. } => Some(dot(&problem.c, entries)),
            _ => None,
        };
        (z, v)
    };
    Ok(compare("psd_grid", cons.len(), value, oracle))
}

fn sdp_header(header: &Header, saddle: bool, eps: f64) -> Res<BoundedSdpProblem> {
    let need = |what: &str| Error::Usage(format!("sdp input needs a @{what} directive"));
    let d = header.dim.ok_or_else(|| need("dim"))?;
    let sparsity = header.sparsity.ok_or_else(|| need("sparsity"))?;
    let frobenius = header.frobenius.ok_or_else(|| need("frobenius"))?;
    Ok(if saddle {
        saddle_to_sdp(d, sparsity, frobenius, eps)?
    } else {
        let c = header.objective.clone().ok_or_else(|| need("objective"))?;
        BoundedSdpProblem::new(d, c, sparsity, frobenius, eps)?
    })
}

fn dims_of<T>(first: Option<T>, f: impl Fn(&T) -> usize) -> Res<usize> {
    first.map(|x| f(&x)).ok_or_else(|| Error::EmptyInput.into())
}

/// Runs the configured pipeline and assembles its report.
pub fn execute(cfg: &RunConfig) -> Res<Report> {
    let eps = cfg.eps;
    let (run, oracle) = match cfg.problem {
        ProblemKind::Meb => {
            let (_, data) = Data::<Vec<f64>>::load(cfg)?;
            let d = dims_of(data.first_insert()?, |x| x.len())?;
            let problem = MebProblem::new(d, eps)?;
            solve_and_verify(&problem, cfg, &data, d, verify_meb)?
        }
        ProblemKind::Svm => {
            let (_, data) = Data::<Labeled>::load(cfg)?;
            let d = dims_of(data.first_insert()?, |x| x.x.len())?;
            let problem = SvmProblem::new(d, cfg.gamma.unwrap_or(1.0), eps)?;
            solve_and_verify(&problem, cfg, &data, d, |items, sol| {
                verify_svm(items, d, sol)
            })?
        }
        ProblemKind::Lp => {
            let (header, data) = Data::<Constraint>::load(cfg)?;
            let c = header
                .objective
                .clone()
                .ok_or_else(|| Error::Usage("lp input needs an @objective directive".into()))?;
            let problem = BoundedLpProblem::new(c, eps)?;
            let d = problem.d;
            solve_and_verify(&problem, cfg, &data, d, |rows, sol| {
                verify_lp(&problem, rows, sol)
            })?
        }
        ProblemKind::Classify => {
            let (_, labeled) = Data::<Labeled>::load(cfg)?;
            let d = dims_of(labeled.first_insert()?, |x| x.x.len())?;
            let problem = classification_problem(d, eps)?;
            let data = labeled.map(classification_row)?;
            solve_and_verify(&problem, cfg, &data, d, |rows, sol| {
                verify_lp(&problem, rows, sol)
            })?
        }
        ProblemKind::Sdp | ProblemKind::Saddle => {
            let (header, data) = Data::<SdpConstraint>::load(cfg)?;
            let problem = sdp_header(&header, cfg.problem == ProblemKind::Saddle, eps)?;
            let d = problem.d;
            solve_and_verify(&problem, cfg, &data, d, |cons, sol| {
                verify_sdp(&problem, cons, sol)
            })?
        }
    };
    let o = &run.outcome;
    Ok(Report {
        schema: SCHEMA.to_string(),
        config: cfg.clone(),
        status: if o.solution.is_infeasible() {
            Status::Infeasible
        } else {
            Status::Solution
        },
        solution: o.solution.clone(),
        iterations: o.iterations,
        successful_iterations: o.successful,
        budget_exhausted: o.budget_exhausted,
        passes: run.passes,
        setup_passes: run.setup_passes,
        rounds: run.rounds,
        peak_words: o.peak_words,
        derived: DerivedRecord::from(&o.derived),
        center: run.center.clone(),
        r_max: run.r_max,
        load: run.load.clone(),
        oracle_ratio: oracle
            .as_ref()
            .and_then(|c| match (c.value, c.oracle_value) {
                (Some(v), Some(z)) if z != 0.0 => Some(v / z),
                _ => None,
            }),
        oracle,
    })
}

fn solve_and_verify<P>(
    problem: &P,
    cfg: &RunConfig,
    data: &Data<P::Item>,
    d: usize,
    verify: impl Fn(&[P::Item], &Solution) -> Res<OracleCheck>,
) -> Res<(Run, Option<OracleCheck>)>
where
    P: LpTypeProblem,
    P::Net: Sync,
    P::Item: LineItem + RawKey + PartialEq,
{
    let live = if cfg.verify {
        let live = live_items(&data.events()?);
        check_caps(live.len(), d, cfg)?;
        Some(live)
    } else {
        None
    };
    let run = execute_model(problem, cfg, data)?;
    let oracle = match live {
        Some(items) => Some(verify(&items, &run.outcome.solution)?),
        None => None,
    };
    Ok((run, oracle))
}
