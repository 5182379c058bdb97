use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::inference::bootstrap::BootstrapResult;
use crate::inference::counting::CountingData;
use crate::inference::likelihood::{loglik_from_samples, samples, TransitionSample};
use crate::inference::optimize::{fd_gradient, minimize_bfgs, OptimizerOptions};
use crate::model::{ClockConvention, HazardSpec, IdmParams, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    Exponential,
    Weibull,
    /// Weibull with one shape shared by all three transitions.
    WeibullCommonShape,
}

/// The fitted models compared in scenario studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Estimator {
    HomogeneousMarkov,
    SemiMarkovWeibullCommonShape,
    SemiMarkovWeibull,
    TIMarkovWeibull,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::HomogeneousMarkov,
        Estimator::SemiMarkovWeibullCommonShape,
        Estimator::SemiMarkovWeibull,
        Estimator::TIMarkovWeibull,
    ];

    pub fn family(self) -> ModelFamily {
        match self {
            Estimator::HomogeneousMarkov => ModelFamily::Exponential,
            Estimator::SemiMarkovWeibullCommonShape => ModelFamily::WeibullCommonShape,
            _ => ModelFamily::Weibull,
        }
    }

    pub fn clock(self) -> ClockConvention {
        match self {
            Estimator::HomogeneousMarkov => ClockConvention::HomogeneousMarkov,
            Estimator::TIMarkovWeibull => ClockConvention::TimeInhomogeneousMarkov,
            _ => ClockConvention::SemiMarkov,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Estimator::HomogeneousMarkov => "homogeneous-markov",
            Estimator::SemiMarkovWeibullCommonShape => "semi-markov-weibull-common-shape",
            Estimator::SemiMarkovWeibull => "semi-markov-weibull",
            Estimator::TIMarkovWeibull => "ti-markov-weibull",
        }
    }

    pub fn fit(self, data: &CountingData, opts: &FitOptions) -> Result<FitResult> {
        fit_mle(data, self.family(), self.clock(), opts)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Estimator {
    type Err = IdmError;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.label() == s)
            .ok_or_else(|| IdmError::InvalidArgument(format!("unknown estimator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub optimizer: OptimizerOptions,
    /// Rate assigned to transitions without events. `None` makes such
    /// transitions an error.
    pub zero_event_floor: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { optimizer: OptimizerOptions::default(), zero_event_floor: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params_hat: IdmParams,
    pub family: ModelFamily,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Events per transition, in `Transition::ALL` order.
    pub events: [usize; 3],
    /// Transitions held at the zero-event floor.
    pub fixed: Vec<Transition>,
    pub bootstrap: Option<BootstrapResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Scale(Transition),
    Shape(Transition),
    CommonShape,
}

struct Layout {
    family: ModelFamily,
    clock: ClockConvention,
    slots: Vec<Slot>,
    floor: [Option<f64>; 3],
}

impl Layout {
    fn params(&self, x: &[f64]) -> Result<IdmParams> {
        let mut scale = [1.0; 3];
        let mut shape = [1.0; 3];
        for (slot, v) in self.slots.iter().zip(x) {
            let v = v.exp();
            match *slot {
                Slot::Scale(tr) => scale[tr.index()] = v,
                Slot::Shape(tr) => shape[tr.index()] = v,
                Slot::CommonShape => shape = [v; 3],
            }
        }
        let spec = |tr: Transition| {
            let i = tr.index();
            if let Some(floor) = self.floor[i] {
                return HazardSpec::exponential(tr, floor);
            }
            match self.family {
                ModelFamily::Exponential => HazardSpec::exponential(tr, scale[i]),
                _ => HazardSpec::weibull(tr, scale[i], shape[i]),
            }
        };
        IdmParams::new(spec(Transition::ZeroOne), spec(Transition::ZeroTwo), spec(Transition::OneTwo), self.clock)
    }
}

fn profile_scale(sample: &TransitionSample, shape: f64) -> f64 {
    let cum: f64 = sample
        .intervals
        .iter()
        .map(|&(a, b)| if a == 0.0 { b.powf(shape) } else { b.powf(shape) - a.powf(shape) })
        .sum();
    sample.events as f64 / cum
}

const SHAPE_GRID: [f64; 9] = [0.3, 0.5, 0.7, 0.85, 1.0, 1.2, 1.5, 2.0, 3.0];

/// Maximum-likelihood fit of the given family under a clock convention.
pub fn fit_mle(data: &CountingData, family: ModelFamily, clock: ClockConvention, opts: &FitOptions) -> Result<FitResult> {
    if family != ModelFamily::Exponential && clock == ClockConvention::HomogeneousMarkov {
        return Err(IdmError::InvalidArgument("homogeneous Markov requires exponential".into()));
    }
    if let Some(f) = opts.zero_event_floor {
        if !(f > 0.0 && f.is_finite()) {
            return Err(IdmError::InvalidArgument(format!("zero-event floor must be positive, got {f}")));
        }
    }
    let samples = samples(data, clock);
    let events = Transition::ALL.map(|tr| samples[tr.index()].events);
    let mut floor = [None; 3];
    let mut fixed = Vec::new();
    for tr in Transition::ALL {
        if events[tr.index()] == 0 {
            match opts.zero_event_floor {
                Some(f) => {
                    floor[tr.index()] = Some(f);
                    fixed.push(tr);
                }
                None => return Err(IdmError::NonIdentifiable(tr)),
            }
        }
    }
    let free: Vec<Transition> = Transition::ALL.into_iter().filter(|tr| floor[tr.index()].is_none()).collect();
    let mut slots: Vec<Slot> = free.iter().map(|&tr| Slot::Scale(tr)).collect();
    match family {
        ModelFamily::Exponential => {}
        ModelFamily::Weibull => slots.extend(free.iter().map(|&tr| Slot::Shape(tr))),
        ModelFamily::WeibullCommonShape => {
            if !free.is_empty() {
                slots.push(Slot::CommonShape)
            }
        }
    }
    let layout = Layout { family, clock, slots, floor };
    let objective = |x: &[f64]| match layout.params(x) {
        Ok(p) => loglik_from_samples(&p, &samples).map_or(f64::INFINITY, |l| -l),
        Err(_) => f64::INFINITY,
    };
    let start_for = |shapes: &dyn Fn(Transition) -> f64| -> Vec<f64> {
        layout
            .slots
            .iter()
            .map(|slot| match *slot {
                Slot::Scale(tr) => profile_scale(&samples[tr.index()], shapes(tr)).ln(),
                Slot::Shape(tr) => shapes(tr).ln(),
                Slot::CommonShape => shapes(Transition::ZeroOne).ln(),
            })
            .collect()
    };

    // occurrences over exposure
    let exponential = start_for(&|_| 1.0);
    if family == ModelFamily::Exponential {
        let value = objective(&exponential);
        let g = fd_gradient(&objective, &exponential);
        let gradient_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        return Ok(FitResult {
            params_hat: layout.params(&exponential)?,
            family,
            loglik: -value,
            converged: gradient_norm < opts.optimizer.gradient_tol,
            iterations: 0,
            gradient_norm,
            events,
            fixed,
            bootstrap: None,
        });
    }

    let profile_ll = |tr: Transition, g: f64| {
        let s = &samples[tr.index()];
        let lambda = profile_scale(s, g);
        s.loglik(&crate::model::Family::Weibull { scale: lambda, shape: g })
    };
    let best_shape = |score: &dyn Fn(f64) -> f64| {
        SHAPE_GRID.into_iter().map(|g| (g, score(g))).fold((1.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b }).0
    };
    let common = best_shape(&|g| free.iter().map(|&tr| profile_ll(tr, g)).sum());
    let per_transition = Transition::ALL.map(|tr| best_shape(&|g| profile_ll(tr, g)));
    let profiled = match family {
        ModelFamily::WeibullCommonShape => start_for(&|_| common),
        _ => start_for(&|tr| per_transition[tr.index()]),
    };
    let perturbed: Vec<f64> = exponential
        .iter()
        .zip(&layout.slots)
        .map(|(v, slot)| if matches!(slot, Slot::Scale(_)) { v - 0.2 } else { v + 0.3 })
        .collect();

    let mut best: Option<crate::inference::optimize::Minimum> = None;
    for start in [exponential, profiled, perturbed] {
        let m = minimize_bfgs(&objective, &start, &opts.optimizer);
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.ok_or_else(|| IdmError::Degenerate("no start produced a finite likelihood".into()))?;
    Ok(FitResult {
        params_hat: layout.params(&best.x)?,
        family,
        loglik: -best.value,
        converged: best.converged,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        events,
        fixed,
        bootstrap: None,
    })
}
