use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use lptype_core::streams::DEFAULT_COORD_BOUND;
use lptype_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Meb,
    Svm,
    Lp,
    Sdp,
    Classify,
    Saddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Multipass,
    Turnstile,
    Coordinator,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    Sketch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    RoundRobin,
    Threaded,
}

/// Approximate LP-type solvers over event files.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "lptype", version)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Weight-base exponent, in [1, ⌈ln N⌉]; defaults to ⌈ln N⌉.
    #[arg(long)]
    pub s: Option<f64>,
    /// Margin promise for svm.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub machines: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long, value_enum)]
    pub scheduler: Option<SchedulerKind>,
    /// Event file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Where to write the JSON report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Compare against the reference oracle.
    #[arg(long)]
    pub verify: bool,
    /// TOML scenario; flags override its values.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Coordinate bound of turnstile centering.
    #[arg(long)]
    pub coord_bound: Option<u64>,
}

/// Scenario file contents. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub problem: Option<ProblemKind>,
    pub model: Option<ModelKind>,
    pub eps: Option<f64>,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub machines: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub scheduler: Option<SchedulerKind>,
    pub input: Option<PathBuf>,
    pub partitions: Option<Vec<PathBuf>>,
    pub coord_bound: Option<u64>,
    pub verify: Option<bool>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut sc: Scenario = toml::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        sc.input = sc.input.map(fix);
        sc.partitions = sc.partitions.map(|v| v.into_iter().map(fix).collect());
        Ok(sc)
    }
}

/// Fully resolved run parameters, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub model: ModelKind,
    pub eps: f64,
    pub s: Option<f64>,
    pub gamma: Option<f64>,
    pub machines: usize,
    pub seed: u64,
    pub backend: BackendKind,
    pub scheduler: SchedulerKind,
    /// One event file, or one file per machine.
    pub inputs: Vec<PathBuf>,
    pub coord_bound: u64,
    pub verify: bool,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<RunConfig> {
        let sc = match &cli.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        let problem = cli
            .problem
            .or(sc.problem)
            .ok_or_else(|| Error::Usage("--problem is required".into()))?;
        let model = cli.model.or(sc.model).unwrap_or(ModelKind::Multipass);
        let inputs = match (&cli.input, &sc.input, &sc.partitions) {
            (Some(p), _, _) => vec![p.clone()],
            (None, Some(p), None) => vec![p.clone()],
            (None, None, Some(ps)) => ps.clone(),
            (None, Some(_), Some(_)) => {
                return Err(Error::Usage(
                    "scenario sets both input and partitions".into(),
                ))
            }
            (None, None, None) => return Err(Error::Usage("--input is required".into())),
        };
        let machines =
            cli.machines
                .or(sc.machines)
                .unwrap_or(if inputs.len() > 1 { inputs.len() } else { 1 });
        let cfg = RunConfig {
            problem,
            model,
            eps: cli.eps.or(sc.eps).unwrap_or(0.1),
            s: cli.s.or(sc.s),
            gamma: cli.gamma.or(sc.gamma),
            machines,
            seed: cli.seed.or(sc.seed).unwrap_or(0),
            backend: cli.backend.or(sc.backend).unwrap_or(BackendKind::Exact),
            scheduler: cli
                .scheduler
                .or(sc.scheduler)
                .unwrap_or(SchedulerKind::RoundRobin),
            inputs,
            coord_bound: cli
                .coord_bound
                .or(sc.coord_bound)
                .unwrap_or(DEFAULT_COORD_BOUND),
            verify: cli.verify || sc.verify.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Usage(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if let Some(s) = self.s {
            if s.is_nan() || s < 1.0 {
                return Err(Error::Usage(format!("s must be at least 1, got {s}")));
            }
        }
        match (self.problem, self.gamma) {
            (ProblemKind::Svm, None) => return Err(Error::Usage("svm needs --gamma".into())),
            (ProblemKind::Svm, Some(g)) if !(g > 0.0 && g <= 1.0) => {
                return Err(Error::Usage(format!("gamma must lie in (0, 1], got {g}")))
            }
            _ => {}
        }
        if self.machines == 0 {
            return Err(Error::Usage("machines must be at least 1".into()));
        }
        if self.coord_bound == 0 {
            return Err(Error::Usage("coord bound must be positive".into()));
        }
        let distributed = matches!(self.model, ModelKind::Coordinator | ModelKind::Parallel);
        if self.inputs.len() > 1 {
            if !distributed {
                return Err(Error::Usage(
                    "partition files need the coordinator or parallel model".into(),
                ));
            }
            if self.inputs.len() != self.machines {
                return Err(Error::Usage(format!(
                    "{} partition files for {} machines",
                    self.inputs.len(),
                    self.machines
                )));
            }
        }
        if !distributed && self.machines != 1 {
            return Err(Error::Usage(
                "--machines applies to the coordinator and parallel models".into(),
            ));
        }
        Ok(())
    }
}
