use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::{correlation, Marginal};
use crate::error::{IdmError, Result};
use crate::inference::counting::{build_counting_data, CountingData};
use crate::inference::fit::{Estimator, FitOptions};
use crate::inference::records::SubjectRecord;
use crate::joint::{s_os, s_pfs};
use crate::model::{IdmParams, Transition};
use crate::parallel::substream;
use crate::quadrature::QuadratureConfig;
use crate::simulate::{sample_cohort_with_rng, CensoringSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    Scale,
    Shape,
}

/// Quantity whose sampling distribution is bootstrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Statistic {
    Correlation,
    Parameter { transition: Transition, kind: ParamKind },
    Survival { marginal: Marginal, t: f64 },
}

impl Statistic {
    pub fn evaluate(&self, params: &IdmParams, config: &QuadratureConfig) -> Result<f64> {
        match *self {
            Statistic::Correlation => Ok(correlation(params, config)?.correlation),
            Statistic::Parameter { transition, kind } => {
                let f = params.hazard(transition).family;
                Ok(match kind {
                    ParamKind::Scale => f.scale(),
                    ParamKind::Shape => f.shape(),
                })
            }
            Statistic::Survival { marginal: Marginal::Pfs, t } => s_pfs(params, t),
            Statistic::Survival { marginal: Marginal::Os, t } => s_os(params, t, config),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BootstrapMethod {
    /// Resample subjects with replacement and refit.
    Nonparametric,
    /// Simulate cohorts from the fitted model and refit. Without an explicit
    /// censoring scheme, subjects are censored at the largest observed time.
    Parametric { censoring: Option<CensoringSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub estimator: Estimator,
    pub statistic: Statistic,
    pub method: BootstrapMethod,
    pub replicates: usize,
    pub seed: u64,
    pub level: f64,
    pub fit: FitOptions,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub successes: usize,
    pub failures: usize,
    /// One entry per replicate, `None` where the refit failed.
    pub replicates: Vec<Option<f64>>,
}

/// Percentile interval from sorted replicates: the order statistics at
/// ⌊(B−1)α/2⌋ and ⌈(B−1)(1−α/2)⌉.
pub fn percentile_interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let b = sorted.len() as f64;
    let alpha = 1.0 - level;
    let lo = ((b - 1.0) * alpha / 2.0).floor() as usize;
    let hi = (((b - 1.0) * (1.0 - alpha / 2.0)).ceil() as usize).min(sorted.len() - 1);
    (sorted[lo], sorted[hi])
}

fn validate(config: &BootstrapConfig) -> Result<()> {
    if config.replicates < 2 {
        return Err(IdmError::InvalidArgument("bootstrap needs at least 2 replicates".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(IdmError::InvalidArgument(format!("level must lie in (0, 1), got {}", config.level)));
    }
    if let BootstrapMethod::Parametric { censoring: Some(c) } = config.method {
        c.validate()?;
    }
    config.quadrature.validate()
}

/// Percentile bootstrap interval for `config.statistic` under
/// `config.estimator`. Replicate `b` draws from substream `b` of the seed.
pub fn bootstrap_ci(records: &[SubjectRecord], config: &BootstrapConfig) -> Result<BootstrapResult> {
    validate(config)?;
    let data = build_counting_data(records)?;
    let fit = config.estimator.fit(&data, &config.fit)?;
    let estimate = config.statistic.evaluate(&fit.params_hat, &config.quadrature)?;
    let n = data.n_subjects();
    let censoring = match config.method {
        BootstrapMethod::Parametric { censoring } => censoring.unwrap_or(CensoringSpec::Administrative(data.max_time())),
        BootstrapMethod::Nonparametric => CensoringSpec::None,
    };
    let replicate = |b: usize| -> Result<f64> {
        let mut rng = substream(config.seed, b as u64);
        let sample = match config.method {
            BootstrapMethod::Nonparametric => {
                let paths = data.subjects();
                CountingData::from_paths((0..n).map(|_| paths[rng.random_range(0..n)]).collect())
            }
            BootstrapMethod::Parametric { .. } => {
                build_counting_data(&sample_cohort_with_rng(&fit.params_hat, n, &censoring, &mut rng)?)?
            }
        };
        let refit = config.estimator.fit(&sample, &config.fit)?;
        config.statistic.evaluate(&refit.params_hat, &config.quadrature)
    };
    let values: Vec<Option<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| match replicate(b) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("bootstrap replicate {b} (seed {}) gave {v}", config.seed);
                None
            }
            Err(e) => {
                log::warn!("bootstrap replicate {b} (seed {}) failed: {e}", config.seed);
                None
            }
        })
        .collect();
    let mut ok: Vec<f64> = values.iter().flatten().copied().collect();
    if ok.len() < 2 {
        return Err(IdmError::Degenerate(format!("only {} bootstrap replicates succeeded", ok.len())));
    }
    ok.sort_by(f64::total_cmp);
    let (lower, upper) = percentile_interval(&ok, config.level);
    Ok(BootstrapResult {
        estimate,
        lower,
        upper,
        level: config.level,
        successes: ok.len(),
        failures: values.len() - ok.len(),
        replicates: values,
    })
}
