//! Multi-replication scenario studies: simulate, refit, compare correlations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dependence::correlation;
use crate::error::{IdmError, Result};
use crate::inference::counting::build_counting_data;
use crate::inference::fit::{Estimator, FitOptions};
use crate::model::IdmParams;
use crate::parallel::substream;
use crate::quadrature::QuadratureConfig;
use crate::simulate::{sample_cohort_with_rng, CensoringSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStudy {
    pub params: IdmParams,
    pub n_subjects: usize,
    pub n_replications: usize,
    pub estimators: Vec<Estimator>,
    pub seed: u64,
    pub censoring: CensoringSpec,
    pub fit: FitOptions,
    pub quadrature: QuadratureConfig,
}

impl ScenarioStudy {
    /// Uncensored study with default fitting and quadrature settings.
    pub fn new(params: IdmParams, n_subjects: usize, n_replications: usize, estimators: Vec<Estimator>, seed: u64) -> Self {
        ScenarioStudy {
            params,
            n_subjects,
            n_replications,
            estimators,
            seed,
            censoring: CensoringSpec::None,
            fit: FitOptions::default(),
            quadrature: QuadratureConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.n_replications == 0 {
            return Err(IdmError::InvalidArgument("n_subjects and n_replications must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(IdmError::InvalidArgument("a study needs at least one estimator".into()));
        }
        self.censoring.validate()?;
        self.quadrature.validate()
    }
}

/// One estimator applied to one simulated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub estimator: Estimator,
    pub correlation: Option<f64>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub n_ok: usize,
    pub n_failed: usize,
    pub mean: f64,
    pub sd: f64,
    /// Monte-Carlo standard error of the mean, sd / √n_ok.
    pub se_mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub truth: f64,
    pub rows: Vec<ReplicationRow>,
    pub summaries: Vec<EstimatorSummary>,
}

impl StudyResult {
    pub fn summary(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.summaries.iter().find(|s| s.estimator == estimator)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(estimator: Estimator, rows: &[ReplicationRow]) -> EstimatorSummary {
    let mine: Vec<&ReplicationRow> = rows.iter().filter(|r| r.estimator == estimator).collect();
    let mut ok: Vec<f64> = mine.iter().filter_map(|r| r.correlation).collect();
    ok.sort_by(f64::total_cmp);
    let n = ok.len();
    let n_failed = mine.len() - n;
    if n == 0 {
        return EstimatorSummary {
            estimator,
            n_ok: 0,
            n_failed,
            mean: f64::NAN,
            sd: f64::NAN,
            se_mean: f64::NAN,
            min: f64::NAN,
            q1: f64::NAN,
            median: f64::NAN,
            q3: f64::NAN,
            max: f64::NAN,
        };
    }
    let mean = ok.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 { (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    EstimatorSummary {
        estimator,
        n_ok: n,
        n_failed,
        mean,
        sd,
        se_mean: sd / (n as f64).sqrt(),
        min: ok[0],
        q1: quantile(&ok, 0.25),
        median: quantile(&ok, 0.5),
        q3: quantile(&ok, 0.75),
        max: ok[n - 1],
    }
}

fn replicate(study: &ScenarioStudy, r: usize) -> Vec<ReplicationRow> {
    let mut rng = substream(study.seed, r as u64);
    let data = sample_cohort_with_rng(&study.params, study.n_subjects, &study.censoring, &mut rng)
        .and_then(|cohort| build_counting_data(&cohort));
    study
        .estimators
        .iter()
        .map(|&estimator| {
            let outcome = data.as_ref().map_err(Clone::clone).and_then(|d| {
                let fit = estimator.fit(d, &study.fit)?;
                let rho = correlation(&fit.params_hat, &study.quadrature)?.correlation;
                Ok((rho, fit.converged))
            });
            match outcome {
                Ok((rho, converged)) => {
                    ReplicationRow { replication: r, estimator, correlation: Some(rho), converged: Some(converged), error: None }
                }
                Err(e) => {
                    log::warn!("study seed {} replication {r} estimator {estimator} failed: {e}", study.seed);
                    ReplicationRow { replication: r, estimator, correlation: None, converged: None, error: Some(e.to_string()) }
                }
            }
        })
        .collect()
}

/// Runs every replication (replication `r` on substream `r` of the seed)
/// and summarises each estimator against the true correlation.
pub fn run_scenario_study(study: &ScenarioStudy) -> Result<StudyResult> {
    study.validate()?;
    let truth = correlation(&study.params, &study.quadrature)?.correlation;
    let rows: Vec<ReplicationRow> =
        (0..study.n_replications).into_par_iter().flat_map_iter(|r| replicate(study, r)).collect();
    let summaries = study.estimators.iter().map(|&e| summarize(e, &rows)).collect();
    Ok(StudyResult { truth, rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::with_threads;

    fn small() -> ScenarioStudy {
        let p = IdmParams::exponential(0.6, 0.075, 0.9).unwrap();
        ScenarioStudy::new(p, 150, 6, vec![Estimator::HomogeneousMarkov, Estimator::TIMarkovWeibull], 17)
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn table_shape_and_summary() {
        let res = run_scenario_study(&small()).unwrap();
        assert_eq!(res.rows.len(), 12);
        assert_eq!(res.rows[3].replication, 1);
        assert_eq!(res.rows[3].estimator, Estimator::TIMarkovWeibull);
        let s = res.summary(Estimator::HomogeneousMarkov).unwrap();
        assert_eq!(s.n_ok + s.n_failed, 6);
        assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        assert!((s.mean - res.truth).abs() < 0.1, "{s:?} vs {}", res.truth);
    }

    #[test]
    fn identical_across_worker_counts() {
        let one = with_threads(Some(1), || run_scenario_study(&small())).unwrap().unwrap();
        let three = with_threads(Some(3), || run_scenario_study(&small())).unwrap().unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        // one subject rarely shows all three transitions
        let mut study = small();
        study.n_subjects = 1;
        study.n_replications = 4;
        let res = run_scenario_study(&study).unwrap();
        let s = res.summary(Estimator::HomogeneousMarkov).unwrap();
        assert_eq!(s.n_failed, 4);
        assert!(res.rows.iter().all(|r| r.error.is_some()));
    }

    #[test]
    fn invalid_studies() {
        let mut s = small();
        s.estimators.clear();
        assert!(run_scenario_study(&s).is_err());
        let mut s = small();
        s.n_replications = 0;
        assert!(run_scenario_study(&s).is_err());
    }
}
