//! Hazard families, clock conventions and the parameter container of the
//! illness-death model with states 0 (initial), 1 (progressed) and 2 (dead).
//!
//! A Weibull intensity is `scale * shape * x^(shape - 1)` with cumulative
//! hazard `scale * x^shape`, where `x` is the clock time of the transition:
//! time since origin for every transition, except 1->2 under the semi-Markov
//! clock where it is the time since progression.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    ZeroOne,
    ZeroTwo,
    OneTwo,
}

impl Transition {
    pub const ALL: [Transition; 3] = [Transition::ZeroOne, Transition::ZeroTwo, Transition::OneTwo];

    pub fn from_state(self) -> usize {
        match self {
            Transition::ZeroOne | Transition::ZeroTwo => 0,
            Transition::OneTwo => 1,
        }
    }

    pub fn to_state(self) -> usize {
        match self {
            Transition::ZeroOne => 1,
            Transition::ZeroTwo | Transition::OneTwo => 2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short label used in tables, e.g. `01`.
    pub fn code(self) -> &'static str {
        match self {
            Transition::ZeroOne => "01",
            Transition::ZeroTwo => "02",
            Transition::OneTwo => "12",
        }
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from_state(), self.to_state())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClockConvention {
    /// Constant intensities.
    HomogeneousMarkov,
    /// All intensities in time since origin.
    TimeInhomogeneousMarkov,
    /// The 1->2 intensity runs on time since progression (clock reset).
    SemiMarkov,
}

impl ClockConvention {
    pub fn is_markov(self) -> bool {
        !matches!(self, ClockConvention::SemiMarkov)
    }
}

impl fmt::Display for ClockConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClockConvention::HomogeneousMarkov => "homogeneous-markov",
            ClockConvention::TimeInhomogeneousMarkov => "time-inhomogeneous-markov",
            ClockConvention::SemiMarkov => "semi-markov",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Exponential { rate: f64 },
    Weibull { scale: f64, shape: f64 },
}

impl Family {
    pub fn scale(&self) -> f64 {
        match *self {
            Family::Exponential { rate } => rate,
            Family::Weibull { scale, .. } => scale,
        }
    }

    pub fn shape(&self) -> f64 {
        match *self {
            Family::Exponential { .. } => 1.0,
            Family::Weibull { shape, .. } => shape,
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, Family::Exponential { .. })
    }

    /// Intensity at clock time `x > 0`.
    #[inline]
    pub fn hazard(&self, x: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => rate,
            Family::Weibull { scale, shape } => {
                if shape == 1.0 {
                    scale
                } else {
                    scale * shape * x.powf(shape - 1.0)
                }
            }
        }
    }

    /// Cumulative intensity on `[0, x]`, `x >= 0`.
    #[inline]
    pub fn cumulative(&self, x: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => rate * x,
            Family::Weibull { scale, shape } => {
                if shape == 1.0 {
                    scale * x
                } else {
                    scale * x.powf(shape)
                }
            }
        }
    }

    /// Clock time at which the cumulative intensity reaches `h >= 0`.
    #[inline]
    pub fn inverse_cumulative(&self, h: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => h / rate,
            Family::Weibull { scale, shape } => (h / scale).powf(1.0 / shape),
        }
    }
}

/// One transition intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    pub transition: Transition,
    pub family: Family,
}

impl HazardSpec {
    pub fn exponential(transition: Transition, rate: f64) -> Self {
        HazardSpec { transition, family: Family::Exponential { rate } }
    }

    pub fn weibull(transition: Transition, scale: f64, shape: f64) -> Self {
        HazardSpec { transition, family: Family::Weibull { scale, shape } }
    }
}

/// A violated parameter invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveRate { transition: Transition, value: f64 },
    NonPositiveShape { transition: Transition, value: f64 },
    HomogeneousRequiresExponential { transition: Transition },
    MisplacedHazard { slot: Transition, found: Transition },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveRate { transition, value } => {
                write!(f, "nonpositive rate for {transition}: {value}")
            }
            Violation::NonPositiveShape { transition, value } => {
                write!(f, "nonpositive shape for {transition}: {value}")
            }
            Violation::HomogeneousRequiresExponential { transition } => {
                write!(f, "homogeneous Markov requires exponential ({transition} is Weibull)")
            }
            Violation::MisplacedHazard { slot, found } => {
                write!(f, "hazard for {found} stored in the {slot} slot")
            }
        }
    }
}

/// Full model: the three intensities plus the clock convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    alpha01: HazardSpec,
    alpha02: HazardSpec,
    alpha12: HazardSpec,
    clock: ClockConvention,
}

impl IdmParams {
    pub fn new(
        alpha01: HazardSpec,
        alpha02: HazardSpec,
        alpha12: HazardSpec,
        clock: ClockConvention,
    ) -> Result<Self> {
        let params = IdmParams { alpha01, alpha02, alpha12, clock };
        validate_params(&params).map_err(IdmError::InvalidParams)?;
        Ok(params)
    }

    /// Constant intensities (homogeneous Markov).
    pub fn exponential(rate01: f64, rate02: f64, rate12: f64) -> Result<Self> {
        IdmParams::new(
            HazardSpec::exponential(Transition::ZeroOne, rate01),
            HazardSpec::exponential(Transition::ZeroTwo, rate02),
            HazardSpec::exponential(Transition::OneTwo, rate12),
            ClockConvention::HomogeneousMarkov,
        )
    }

    /// Weibull intensities given as `(scale, shape)` per transition.
    pub fn weibull(
        w01: (f64, f64),
        w02: (f64, f64),
        w12: (f64, f64),
        clock: ClockConvention,
    ) -> Result<Self> {
        IdmParams::new(
            HazardSpec::weibull(Transition::ZeroOne, w01.0, w01.1),
            HazardSpec::weibull(Transition::ZeroTwo, w02.0, w02.1),
            HazardSpec::weibull(Transition::OneTwo, w12.0, w12.1),
            clock,
        )
    }

    pub fn clock(&self) -> ClockConvention {
        self.clock
    }

    pub fn hazard(&self, transition: Transition) -> &HazardSpec {
        match transition {
            Transition::ZeroOne => &self.alpha01,
            Transition::ZeroTwo => &self.alpha02,
            Transition::OneTwo => &self.alpha12,
        }
    }

    pub(crate) fn family(&self, transition: Transition) -> &Family {
        &self.hazard(transition).family
    }

    /// The same intensities under another clock convention.
    pub fn with_clock(&self, clock: ClockConvention) -> Result<Self> {
        IdmParams::new(self.alpha01, self.alpha02, self.alpha12, clock)
    }

    /// Rescale time by `c`: `T -> c T` for every waiting time.
    pub fn rescale_time(&self, c: f64) -> Result<Self> {
        let scale = |h: &HazardSpec| -> HazardSpec {
            let family = match h.family {
                Family::Exponential { rate } => Family::Exponential { rate: rate / c },
                Family::Weibull { scale, shape } => Family::Weibull { scale: scale / c.powf(shape), shape },
            };
            HazardSpec { transition: h.transition, family }
        };
        IdmParams::new(scale(&self.alpha01), scale(&self.alpha02), scale(&self.alpha12), self.clock)
    }

    // Unchecked kernels shared by the numerical modules. Callers guarantee
    // ordering of the arguments.

    #[inline]
    pub(crate) fn a01(&self, t: f64) -> f64 {
        self.alpha01.family.hazard(t)
    }

    #[inline]
    pub(crate) fn a02(&self, t: f64) -> f64 {
        self.alpha02.family.hazard(t)
    }

    /// Λ01(t) + Λ02(t) from the origin.
    #[inline]
    pub(crate) fn cum0(&self, t: f64) -> f64 {
        self.alpha01.family.cumulative(t) + self.alpha02.family.cumulative(t)
    }

    #[inline]
    pub(crate) fn s_pfs_at(&self, t: f64) -> f64 {
        (-self.cum0(t)).exp()
    }

    /// P00(s, t).
    #[inline]
    pub(crate) fn p00_at(&self, s: f64, t: f64) -> f64 {
        if s == t {
            return 1.0;
        }
        (-(self.cum0(t) - self.cum0(s))).exp()
    }

    /// ∫_s^t α12(u; t1) du.
    #[inline]
    pub(crate) fn cum12(&self, s: f64, t: f64, t1: f64) -> f64 {
        if s == t {
            return 0.0;
        }
        let f = &self.alpha12.family;
        match self.clock {
            ClockConvention::SemiMarkov => f.cumulative(t - t1) - f.cumulative(s - t1),
            _ => f.cumulative(t) - f.cumulative(s),
        }
    }

    /// P11(s, t; t1).
    #[inline]
    pub(crate) fn p11_at(&self, s: f64, t: f64, t1: f64) -> f64 {
        (-self.cum12(s, t, t1)).exp()
    }
}

/// Checks positivity and the homogeneous Markov / exponential coupling.
pub fn validate_params(params: &IdmParams) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    for slot in Transition::ALL {
        let h = params.hazard(slot);
        if h.transition != slot {
            violations.push(Violation::MisplacedHazard { slot, found: h.transition });
        }
        let (scale, shape) = (h.family.scale(), h.family.shape());
        if !(scale > 0.0 && scale.is_finite()) {
            violations.push(Violation::NonPositiveRate { transition: slot, value: scale });
        }
        if !(shape > 0.0 && shape.is_finite()) {
            violations.push(Violation::NonPositiveShape { transition: slot, value: shape });
        }
        if params.clock == ClockConvention::HomogeneousMarkov && !h.family.is_exponential() {
            violations.push(Violation::HomogeneousRequiresExponential { transition: slot });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Intensity α_lm(t) or α12(t; t1).
pub fn hazard_value(params: &IdmParams, transition: Transition, t: f64, t1: Option<f64>) -> Result<f64> {
    if !(t > 0.0) {
        return Err(IdmError::NonPositiveTime(t));
    }
    let family = params.family(transition);
    if transition != Transition::OneTwo {
        return Ok(family.hazard(t));
    }
    if let Some(t1) = t1 {
        if !(t1 < t) {
            return Err(IdmError::ProgressionOrder { t1, t });
        }
    }
    match params.clock {
        ClockConvention::SemiMarkov => {
            let t1 = t1.ok_or(IdmError::MissingProgressionTime)?;
            Ok(family.hazard(t - t1))
        }
        _ => Ok(family.hazard(t)),
    }
}

/// ∫_s^t α(u; t1) du in closed form.
pub fn cumulative_hazard(
    params: &IdmParams,
    transition: Transition,
    s: f64,
    t: f64,
    t1: Option<f64>,
) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(IdmError::InvalidArgument(format!("interval start must be nonnegative, got {s}")));
    }
    if !(s <= t) {
        return Err(IdmError::IntervalOrder { s, t });
    }
    let family = params.family(transition);
    if transition == Transition::OneTwo && params.clock == ClockConvention::SemiMarkov {
        let t1 = t1.ok_or(IdmError::MissingProgressionTime)?;
        if !(t1 <= s) {
            return Err(IdmError::ProgressionOrder { t1, t: s });
        }
        return Ok(params.cum12(s, t, t1));
    }
    if s == t {
        return Ok(0.0);
    }
    Ok(family.cumulative(t) - family.cumulative(s))
}
