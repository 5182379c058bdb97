//! Argument definitions and their merge into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    default_times, CensoringKind, Clock, FamilyName, ModelConfig, ResampleMethod, RunConfig,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "idm", version, about = "Illness-death model toolkit for progression-free and overall survival")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a parametric model to subject data.
    Fit(FitArgs),
    /// Transition probability matrices on an (s, t) grid.
    Probs(ProbsArgs),
    /// PFS and OS survival curves.
    Curves(CurvesArgs),
    /// Moments and correlation of PFS and OS, from a model or from data.
    Corr(CorrArgs),
    /// Simulate a cohort and write it in the subject CSV schema.
    Simulate(SimulateArgs),
    /// Multi-replication scenario study.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags take precedence over it.
    #[arg(long, alias = "scenario")]
    pub config: Option<PathBuf>,
    /// Output directory for tables and the manifest.
    #[arg(long, default_value = "idm-output")]
    pub out: PathBuf,
    /// Master seed for all randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub clock: Option<Clock>,
    /// Scales λ01,λ02,λ12.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Shapes γ01,γ02,γ12 (Weibull clocks only).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CensoringArgs {
    #[arg(long, value_enum)]
    pub censoring: Option<CensoringKind>,
    /// Administrative censoring time.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Exponential dropout rate.
    #[arg(long)]
    pub dropout_rate: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Subject CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// Clock convention of the fitted model.
    #[arg(long, value_enum)]
    pub clock: Option<Clock>,
    /// Rate assigned to transitions without events.
    #[arg(long)]
    pub zero_event_floor: Option<f64>,
    /// Grid for the cumulative-hazard table.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct ProbsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Start times s.
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// End times t.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Progression time for the semi-Markov clock (defaults to s).
    #[arg(long)]
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct CorrArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Subject CSV file; the correlation is then that of the fitted model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Estimator fitted to the data.
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long)]
    pub zero_event_floor: Option<f64>,
    /// Paths for the Monte-Carlo cross-check (0 disables it).
    #[arg(long)]
    pub mc_paths: Option<usize>,
    /// Bootstrap replicates for a percentile interval (data only).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_enum)]
    pub bootstrap_method: Option<ResampleMethod>,
    #[command(flatten)]
    pub censoring: CensoringArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of subjects.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub censoring: CensoringArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub n_subjects: Option<usize>,
    #[arg(long)]
    pub n_replications: Option<usize>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    #[command(flatten)]
    pub censoring: CensoringArgs,
}

fn triple(name: &str, v: &[f64]) -> Result<[f64; 3], CliError> {
    v.try_into().map_err(|_| CliError::Validation(format!("--{name} takes three comma-separated values, got {}", v.len())))
}

fn apply_model(cfg: &mut RunConfig, m: &ModelArgs) -> Result<(), CliError> {
    if m.clock.is_none() && m.lambda.is_none() && m.gamma.is_none() {
        return Ok(());
    }
    let mut model = match (cfg.model.clone(), m.clock, &m.lambda) {
        (Some(model), _, _) => model,
        (None, Some(clock), Some(l)) => {
            let l = triple("lambda", l)?;
            ModelConfig { clock, lambda01: l[0], lambda02: l[1], lambda12: l[2], gamma01: None, gamma02: None, gamma12: None }
        }
        _ => return Err(CliError::Validation("--clock and --lambda are both required without a [model] section".into())),
    };
    if let Some(clock) = m.clock {
        model.clock = clock;
    }
    if let Some(l) = &m.lambda {
        let l = triple("lambda", l)?;
        (model.lambda01, model.lambda02, model.lambda12) = (l[0], l[1], l[2]);
    }
    if let Some(g) = &m.gamma {
        let g = triple("gamma", g)?;
        (model.gamma01, model.gamma02, model.gamma12) = (Some(g[0]), Some(g[1]), Some(g[2]));
    }
    cfg.model = Some(model);
    Ok(())
}

fn apply_censoring(cfg: &mut RunConfig, c: &CensoringArgs) {
    if let Some(k) = c.censoring {
        cfg.censoring.kind = Some(k);
    }
    if let Some(v) = c.cutoff {
        cfg.censoring.cutoff = Some(v);
    }
    if let Some(v) = c.dropout_rate {
        cfg.censoring.rate = Some(v);
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = Some(v.clone());
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Probs(_) => "probs",
            Command::Curves(_) => "curves",
            Command::Corr(_) => "corr",
            Command::Simulate(_) => "simulate",
            Command::Study(_) => "study",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Fit(a) => &a.common,
            Command::Probs(a) => &a.common,
            Command::Curves(a) => &a.common,
            Command::Corr(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Study(a) => &a.common,
        }
    }

    /// Configuration file (if any) overridden by flags, with every default
    /// the command relies on filled in.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let common = self.common();
        let mut cfg = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(c) = &cfg.command {
            if c != self.name() {
                log_mismatch(c, self.name());
            }
        }
        cfg.command = Some(self.name().to_string());
        set(&mut cfg.seed, &common.seed);
        set(&mut cfg.threads, &common.threads);
        let q = cfg.quadrature()?;
        cfg.quadrature.abs_tol = Some(q.abs_tol);
        cfg.quadrature.rel_tol = Some(q.rel_tol);
        cfg.quadrature.max_subdivisions = Some(q.max_subdivisions);
        match self {
            Command::Fit(a) => {
                set(&mut cfg.data.path, &a.data);
                set(&mut cfg.fit.family, &a.family);
                set(&mut cfg.fit.clock, &a.clock);
                set(&mut cfg.fit.zero_event_floor, &a.zero_event_floor);
                set(&mut cfg.grid.times, &a.times);
                let family = *cfg.fit.family.get_or_insert(FamilyName::Exponential);
                cfg.fit.clock.get_or_insert(match family {
                    FamilyName::Exponential => Clock::HomogeneousMarkov,
                    _ => Clock::TiMarkov,
                });
                cfg.grid.times.get_or_insert_with(default_times);
            }
            Command::Probs(a) => {
                apply_model(&mut cfg, &a.model)?;
                set(&mut cfg.grid.s, &a.s);
                set(&mut cfg.grid.times, &a.times);
                set(&mut cfg.grid.t1, &a.t1);
                cfg.grid.s.get_or_insert_with(|| vec![0.0]);
                cfg.grid.times.get_or_insert_with(default_times);
            }
            Command::Curves(a) => {
                apply_model(&mut cfg, &a.model)?;
                set(&mut cfg.grid.times, &a.times);
                cfg.grid.times.get_or_insert_with(default_times);
            }
            Command::Corr(a) => {
                apply_model(&mut cfg, &a.model)?;
                set(&mut cfg.data.path, &a.data);
                set(&mut cfg.fit.estimator, &a.estimator);
                set(&mut cfg.fit.zero_event_floor, &a.zero_event_floor);
                set(&mut cfg.monte_carlo.paths, &a.mc_paths);
                set(&mut cfg.bootstrap.replicates, &a.bootstrap);
                set(&mut cfg.bootstrap.level, &a.level);
                set(&mut cfg.bootstrap.method, &a.bootstrap_method);
                apply_censoring(&mut cfg, &a.censoring);
                cfg.monte_carlo.paths.get_or_insert(100_000);
                if cfg.data.path.is_some() {
                    cfg.fit.estimator.get_or_insert_with(|| "ti-markov-weibull".into());
                }
                if cfg.bootstrap.replicates.is_some() {
                    cfg.bootstrap.level.get_or_insert(0.95);
                    cfg.bootstrap.method.get_or_insert(ResampleMethod::Nonparametric);
                }
                cfg.seed.get_or_insert(0);
            }
            Command::Simulate(a) => {
                apply_model(&mut cfg, &a.model)?;
                set(&mut cfg.simulate.n, &a.n);
                apply_censoring(&mut cfg, &a.censoring);
                cfg.simulate.n.get_or_insert(500);
                cfg.censoring.kind.get_or_insert(CensoringKind::None);
                cfg.seed.get_or_insert(0);
            }
            Command::Study(a) => {
                apply_model(&mut cfg, &a.model)?;
                set(&mut cfg.study.n_subjects, &a.n_subjects);
                set(&mut cfg.study.n_replications, &a.n_replications);
                set(&mut cfg.study.estimators, &a.estimators);
                apply_censoring(&mut cfg, &a.censoring);
                if cfg.seed.is_none() {
                    return Err(CliError::Validation("study requires --seed (or seed in the scenario file)".into()));
                }
                cfg.study.n_subjects.get_or_insert(500);
                cfg.study.n_replications.get_or_insert(1000);
                let names = cfg.estimators()?.iter().map(|e| e.label().to_string()).collect();
                cfg.study.estimators = Some(names);
                cfg.censoring.kind.get_or_insert(CensoringKind::None);
            }
        }
        Ok(cfg)
    }
}

fn log_mismatch(file: &str, running: &str) {
    eprintln!("note: configuration was written for '{file}', running '{running}'");
}
