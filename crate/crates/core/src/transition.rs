//! Transition probabilities P_lm(s, t; t1) of the illness-death model.

use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::model::{ClockConvention, Family, IdmParams, Transition};
use crate::quadrature::{integrate, QuadratureConfig};

/// Slack allowed before a probability outside [0, 1] becomes an error.
pub(crate) const PROBABILITY_SLACK: f64 = 1e-8;

/// Below this value of |λ012|·(t − s) the homogeneous P01 uses its limit.
const DEGENERATE_EXPONENT: f64 = 1e-8;

/// Transition probability matrix over (s, t]. Lower-triangle entries are
/// zero and P22 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub s: f64,
    pub t: f64,
    pub t1: Option<f64>,
    pub p00: f64,
    pub p01: f64,
    pub p02: f64,
    pub p11: f64,
    pub p12: f64,
}

impl TransitionMatrix {
    pub fn identity(s: f64, t1: Option<f64>) -> Self {
        TransitionMatrix { s, t: s, t1, p00: 1.0, p01: 0.0, p02: 0.0, p11: 1.0, p12: 0.0 }
    }

    pub fn p22(&self) -> f64 {
        1.0
    }

    /// Entry (l, m) of the 3×3 matrix.
    pub fn get(&self, l: usize, m: usize) -> f64 {
        match (l, m) {
            (0, 0) => self.p00,
            (0, 1) => self.p01,
            (0, 2) => self.p02,
            (1, 1) => self.p11,
            (1, 2) => self.p12,
            (2, 2) => 1.0,
            (l, m) if l < 3 && m < 3 => 0.0,
            _ => panic!("state index out of range: ({l}, {m})"),
        }
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (l, row) in out.iter_mut().enumerate() {
            for (m, v) in row.iter_mut().enumerate() {
                *v = self.get(l, m);
            }
        }
        out
    }
}

/// Accepts values within the slack of [0, 1] and clamps them.
pub(crate) fn checked_probability(value: f64) -> Result<f64> {
    if value.is_nan() || value < -PROBABILITY_SLACK || value > 1.0 + PROBABILITY_SLACK {
        return Err(IdmError::ProbabilityOutOfRange { value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn check_interval(s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0) {
        return Err(IdmError::InvalidArgument(format!("interval start must be nonnegative, got {s}")));
    }
    if !(s <= t) || !t.is_finite() {
        return Err(IdmError::IntervalOrder { s, t });
    }
    Ok(())
}

/// ∫_s^t g(u) α01(u) du.
///
/// A Weibull 0->1 intensity with shape below one is singular at the origin;
/// it is then integrated against dΛ01 instead, so that the integrand stays
/// bounded.
pub(crate) fn integrate_progression<G>(
    params: &IdmParams,
    s: f64,
    t: f64,
    mut g: G,
    config: &QuadratureConfig,
) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    if s >= t {
        return Ok(0.0);
    }
    let family = params.hazard(Transition::ZeroOne).family;
    match family {
        Family::Weibull { shape, .. } if shape < 1.0 => {
            let base = family.cumulative(s);
            let top = family.cumulative(t) - base;
            let r = integrate(
                |w| {
                    let u = family.inverse_cumulative(base + w).clamp(s, t);
                    g(u)
                },
                0.0,
                top,
                config,
            )?;
            Ok(r.value)
        }
        _ if s == 0.0 => {
            // u = x²
            let r = integrate(
                |x| {
                    let u = x * x;
                    Ok(g(u)? * params.a01(u) * 2.0 * x)
                },
                0.0,
                t.sqrt(),
                config,
            )?;
            Ok(r.value)
        }
        _ => {
            let r = integrate(|u| Ok(g(u)? * params.a01(u)), s, t, config)?;
            Ok(r.value)
        }
    }
}

/// P00(s, t) = exp(−∫_s^t α01 + α02).
pub fn p00(params: &IdmParams, s: f64, t: f64) -> Result<f64> {
    check_interval(s, t)?;
    Ok(params.p00_at(s, t))
}

/// P11(s, t; t1). `t1` is only used by the semi-Markov clock.
pub fn p11(params: &IdmParams, s: f64, t: f64, t1: Option<f64>) -> Result<f64> {
    check_interval(s, t)?;
    if let Some(t1) = t1 {
        if !(t1 <= s) {
            return Err(IdmError::ProgressionOrder { t1, t: s });
        }
    }
    let t1 = match params.clock() {
        ClockConvention::SemiMarkov => t1.ok_or(IdmError::MissingProgressionTime)?,
        _ => t1.unwrap_or(0.0),
    };
    Ok(params.p11_at(s, t, t1))
}

/// Closed-form homogeneous Markov P01 over an interval of length `d`.
pub fn p01_homogeneous(rate01: f64, rate02: f64, rate12: f64, d: f64) -> f64 {
    let l012 = rate12 - rate01 - rate02;
    if (l012 * d).abs() < DEGENERATE_EXPONENT {
        return rate01 * d * (-rate12 * d).exp();
    }
    // λ01/λ012 [e^{−(λ01+λ02)d} − e^{−λ12 d}] without cancellation or overflow
    if l012 > 0.0 {
        -rate01 * (-(rate01 + rate02) * d).exp() * (-l012 * d).exp_m1() / l012
    } else {
        rate01 * (-rate12 * d).exp() * (l012 * d).exp_m1() / l012
    }
}

/// P01(s, t) = ∫_s^t P00(s, u) α01(u) P11(u, t; u) du by adaptive quadrature,
/// whatever the clock convention.
pub fn p01_quadrature(params: &IdmParams, s: f64, t: f64, config: &QuadratureConfig) -> Result<f64> {
    check_interval(s, t)?;
    let v = integrate_progression(params, s, t, |u| Ok(params.p00_at(s, u) * params.p11_at(u, t, u)), config)?;
    checked_probability(v)
}

/// P01(s, t). Uses the closed form under the homogeneous Markov clock.
pub fn p01(params: &IdmParams, s: f64, t: f64, config: &QuadratureConfig) -> Result<f64> {
    check_interval(s, t)?;
    if s == t {
        return Ok(0.0);
    }
    if params.clock() == ClockConvention::HomogeneousMarkov {
        let r = |tr| params.hazard(tr).family.scale();
        let v = p01_homogeneous(r(Transition::ZeroOne), r(Transition::ZeroTwo), r(Transition::OneTwo), t - s);
        return checked_probability(v);
    }
    p01_quadrature(params, s, t, config)
}

/// All entries of P(s, t; t1). P02 and P12 are complements, so each row sums
/// to one by construction.
pub fn transition_matrix(
    params: &IdmParams,
    s: f64,
    t: f64,
    t1: Option<f64>,
    config: &QuadratureConfig,
) -> Result<TransitionMatrix> {
    check_interval(s, t)?;
    if s == t {
        if params.clock() == ClockConvention::SemiMarkov && t1.is_none() {
            return Err(IdmError::MissingProgressionTime);
        }
        return Ok(TransitionMatrix::identity(s, t1));
    }
    let p00 = p00(params, s, t)?;
    let p01 = p01(params, s, t, config)?;
    let p11 = p11(params, s, t, t1)?;
    let p02 = checked_probability(1.0 - p00 - p01)?;
    Ok(TransitionMatrix { s, t, t1, p00, p01, p02, p11, p12: 1.0 - p11 })
}
