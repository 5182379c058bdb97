//! Run configuration: a TOML file with one section per concern, overridden
//! by command-line flags. The resolved configuration is written back as the
//! run manifest.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use idm::{
    BootstrapMethod, CensoringSpec, ClockConvention, Estimator, FitOptions, IdmParams, ModelFamily,
    QuadratureConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    HomogeneousMarkov,
    TiMarkov,
    SemiMarkov,
}

impl From<Clock> for ClockConvention {
    fn from(c: Clock) -> Self {
        match c {
            Clock::HomogeneousMarkov => ClockConvention::HomogeneousMarkov,
            Clock::TiMarkov => ClockConvention::TimeInhomogeneousMarkov,
            Clock::SemiMarkov => ClockConvention::SemiMarkov,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Exponential,
    Weibull,
    WeibullCommonShape,
}

impl From<FamilyName> for ModelFamily {
    fn from(f: FamilyName) -> Self {
        match f {
            FamilyName::Exponential => ModelFamily::Exponential,
            FamilyName::Weibull => ModelFamily::Weibull,
            FamilyName::WeibullCommonShape => ModelFamily::WeibullCommonShape,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CensoringKind {
    None,
    Administrative,
    ExponentialDropout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResampleMethod {
    Nonparametric,
    Parametric,
}

/// True intensities. Shapes default to 1 and must be 1 under the
/// homogeneous-Markov clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub clock: Clock,
    pub lambda01: f64,
    pub lambda02: f64,
    pub lambda12: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma01: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma02: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma12: Option<f64>,
}

impl ModelConfig {
    pub fn params(&self) -> Result<IdmParams, CliError> {
        let g = [self.gamma01, self.gamma02, self.gamma12].map(|g| g.unwrap_or(1.0));
        let p = match self.clock {
            Clock::HomogeneousMarkov => {
                if g.iter().any(|&x| x != 1.0) {
                    return Err(CliError::Validation("homogeneous-markov models take no shape parameters".into()));
                }
                IdmParams::exponential(self.lambda01, self.lambda02, self.lambda12)?
            }
            clock => IdmParams::weibull(
                (self.lambda01, g[0]),
                (self.lambda02, g[1]),
                (self.lambda12, g[2]),
                clock.into(),
            )?,
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub family: Option<FamilyName>,
    pub clock: Option<Clock>,
    /// Estimator used by `corr` on data.
    pub estimator: Option<String>,
    pub zero_event_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub times: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensoringConfig {
    pub kind: Option<CensoringKind>,
    pub cutoff: Option<f64>,
    pub rate: Option<f64>,
}

impl CensoringConfig {
    pub fn spec(&self) -> Result<CensoringSpec, CliError> {
        let spec = match self.kind.unwrap_or(CensoringKind::None) {
            CensoringKind::None => CensoringSpec::None,
            CensoringKind::Administrative => CensoringSpec::Administrative(
                self.cutoff.ok_or_else(|| CliError::Validation("administrative censoring needs a cutoff".into()))?,
            ),
            CensoringKind::ExponentialDropout => CensoringSpec::ExponentialDropout(
                self.rate.ok_or_else(|| CliError::Validation("exponential dropout needs a rate".into()))?,
            ),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub n_subjects: Option<usize>,
    pub n_replications: Option<usize>,
    pub estimators: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfigSection {
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub method: Option<ResampleMethod>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub max_subdivisions: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub fit: FitConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub censoring: CensoringConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub simulate: SimulateConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub study: StudyConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub bootstrap: BootstrapConfigSection,
    #[serde(default, skip_serializing_if = "is_default")]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub quadrature: QuadratureSection,
}

pub const MANIFEST: &str = "manifest.toml";

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Validation(format!("cannot serialise manifest: {e}")))
    }

    pub fn params(&self) -> Result<IdmParams, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::Validation("model parameters missing: give --clock/--lambda or a [model] section".into()))?
            .params()
    }

    pub fn quadrature(&self) -> Result<QuadratureConfig, CliError> {
        let d = QuadratureConfig::default();
        let q = QuadratureConfig {
            abs_tol: self.quadrature.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.quadrature.rel_tol.unwrap_or(d.rel_tol),
            max_subdivisions: self.quadrature.max_subdivisions.unwrap_or(d.max_subdivisions),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions { zero_event_floor: self.fit.zero_event_floor, ..FitOptions::default() }
    }

    pub fn estimator(&self) -> Result<Estimator, CliError> {
        Ok(self.fit.estimator.as_deref().unwrap_or("ti-markov-weibull").parse()?)
    }

    pub fn estimators(&self) -> Result<Vec<Estimator>, CliError> {
        let names = self.study.estimators.clone().unwrap_or_else(|| {
            ["homogeneous-markov", "semi-markov-weibull-common-shape", "ti-markov-weibull"].map(String::from).to_vec()
        });
        names.iter().map(|s| s.parse().map_err(CliError::from)).collect()
    }

    pub fn bootstrap_method(&self) -> Result<BootstrapMethod, CliError> {
        Ok(match self.bootstrap.method.unwrap_or(ResampleMethod::Nonparametric) {
            ResampleMethod::Nonparametric => BootstrapMethod::Nonparametric,
            ResampleMethod::Parametric => {
                let censoring = self.censoring.kind.map(|_| self.censoring.spec()).transpose()?;
                BootstrapMethod::Parametric { censoring }
            }
        })
    }
}

/// Default evaluation grid 0, 0.1, …, 5.
pub fn default_times() -> Vec<f64> {
    (0..=50).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rejects_unknown_keys() {
        let c: RunConfig = toml::from_str(
            "seed = 3\n[model]\nclock = \"ti-markov\"\nlambda01 = 0.57\nlambda02 = 0.065\nlambda12 = 1.1\n\
             gamma01 = 1.5\ngamma02 = 0.5\ngamma12 = 0.85\n[study]\nn_subjects = 10\n",
        )
        .unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.params().unwrap().clock(), ClockConvention::TimeInhomogeneousMarkov);
        assert!(toml::from_str::<RunConfig>("[model]\nclock = \"semi-markov\"\nlambda01 = 1\nlambda02 = 1\nlambda12 = 1\nbogus = 2\n").is_err());
        assert!(toml::from_str::<RunConfig>("sed = 1\n").is_err());
    }

    #[test]
    fn manifest_round_trips() {
        let mut c = RunConfig { seed: Some(9), command: Some("study".into()), ..Default::default() };
        c.model = Some(ModelConfig {
            clock: Clock::HomogeneousMarkov,
            lambda01: 0.6,
            lambda02: 0.075,
            lambda12: 0.9,
            gamma01: None,
            gamma02: None,
            gamma12: None,
        });
        c.grid.times = Some(vec![0.5, 1.0]);
        let back: RunConfig = toml::from_str(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn homogeneous_rejects_shapes() {
        let m = ModelConfig {
            clock: Clock::HomogeneousMarkov,
            lambda01: 0.6,
            lambda02: 0.075,
            lambda12: 0.9,
            gamma01: Some(1.5),
            gamma02: None,
            gamma12: None,
        };
        assert!(matches!(m.params(), Err(CliError::Validation(_))));
    }
}
