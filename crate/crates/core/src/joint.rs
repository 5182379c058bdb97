//! Marginal survival of PFS and OS, their joint distribution and the
//! distribution of the product PFS·OS.

use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::model::{ClockConvention, IdmParams};
use crate::quadrature::QuadratureConfig;
use crate::simulate::simulate_blocks;
use crate::transition::{checked_probability, integrate_progression, p01, p01_homogeneous};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPoint {
    pub u: f64,
    pub v: f64,
    pub cdf: f64,
}

/// A Monte-Carlo probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_infinite() {
        return Err(IdmError::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

fn check_pair(u: f64, v: f64) -> Result<()> {
    check_time(u)?;
    check_time(v)?;
    if u > v {
        return Err(IdmError::IntervalOrder { s: u, t: v });
    }
    Ok(())
}

/// P(PFS > t).
pub fn s_pfs(params: &IdmParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(params.s_pfs_at(t))
}

/// P(OS > t) = S_PFS(t) + P01(0, t).
pub fn s_os(params: &IdmParams, t: f64, config: &QuadratureConfig) -> Result<f64> {
    check_time(t)?;
    checked_probability(params.s_pfs_at(t) + p01(params, 0.0, t, config)?)
}

/// Closed-form homogeneous Markov S_OS.
pub fn s_os_homogeneous(rate01: f64, rate02: f64, rate12: f64, t: f64) -> f64 {
    (-(rate01 + rate02) * t).exp() + p01_homogeneous(rate01, rate02, rate12, t)
}

/// P(X(u) = 1, X(v) = 1) for u <= v: progressed by `u` and still alive at `v`.
pub fn stay_in_progression(params: &IdmParams, u: f64, v: f64, config: &QuadratureConfig) -> Result<f64> {
    check_pair(u, v)?;
    if params.clock().is_markov() {
        return Ok(p01(params, 0.0, u, config)? * params.p11_at(u, v, 0.0));
    }
    let value = integrate_progression(params, 0.0, u, |s| Ok(params.s_pfs_at(s) * params.p11_at(s, v, s)), config)?;
    checked_probability(value)
}

/// P(X(v) = 2 | X(u) = 1) under the semi-Markov clock, averaging over the
/// progression time given occupation of state 1 at `u`.
fn semi_markov_death_given_progressed(
    params: &IdmParams,
    u: f64,
    v: f64,
    p01_u: f64,
    config: &QuadratureConfig,
) -> Result<f64> {
    if p01_u == 0.0 {
        return Ok(0.0);
    }
    let num = integrate_progression(
        params,
        0.0,
        u,
        |t1| Ok((1.0 - params.p11_at(u, v, t1)) * params.s_pfs_at(t1) * params.p11_at(t1, u, t1)),
        config,
    )?;
    checked_probability(num / p01_u)
}

/// P(PFS <= u, OS <= v) for u <= v.
pub fn joint_cdf(params: &IdmParams, u: f64, v: f64, config: &QuadratureConfig) -> Result<f64> {
    check_pair(u, v)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    let p00 = params.s_pfs_at(u);
    let p01 = p01(params, 0.0, u, config)?;
    let value = match params.clock() {
        ClockConvention::SemiMarkov => {
            let p02 = 1.0 - p00 - p01;
            semi_markov_death_given_progressed(params, u, v, p01, config)? * p01 + p02
        }
        _ => 1.0 - p00 - p01 * params.p11_at(u, v, 0.0),
    };
    checked_probability(value)
}

/// Fully closed homogeneous Markov joint CDF,
/// 1 − e^{−λ0 u} + c e^{−λ12 v} − c e^{(λ12 − λ0) u − λ12 v}, c = λ01/(λ12 − λ0).
pub fn joint_cdf_homogeneous(rate01: f64, rate02: f64, rate12: f64, u: f64, v: f64) -> f64 {
    let l0 = rate01 + rate02;
    let l012 = rate12 - l0;
    if (l012 * u).abs() < 1e-8 {
        return 1.0 - (-l0 * u).exp() - rate01 * u * (-rate12 * v).exp();
    }
    // c e^{−λ12 v} (1 − e^{λ012 u}) = −c e^{−λ12 v} expm1(λ012 u)
    1.0 - (-l0 * u).exp() - rate01 / l012 * (-rate12 * v).exp() * (l012 * u).exp_m1()
}

/// P(PFS > a, OS > b).
pub fn joint_survival(params: &IdmParams, a: f64, b: f64, config: &QuadratureConfig) -> Result<f64> {
    check_time(a)?;
    check_time(b)?;
    if a >= b {
        return Ok(params.s_pfs_at(a));
    }
    let value = s_os(params, b, config)? - stay_in_progression(params, a, b, config)?;
    checked_probability(value)
}

/// P(PFS·OS > t).
pub fn survival_of_product(params: &IdmParams, t: f64, config: &QuadratureConfig) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let r = t.sqrt();
    let progressed = integrate_progression(
        params,
        0.0,
        r,
        |u| {
            if u <= 0.0 {
                return Ok(0.0);
            }
            Ok(params.s_pfs_at(u) * params.p11_at(u, (t / u).max(u), u))
        },
        config,
    )?;
    checked_probability(params.s_pfs_at(r) + progressed)
}

/// Empirical P(PFS <= u, OS <= v) over `n_paths` simulated trajectories.
pub fn joint_cdf_mc(params: &IdmParams, u: f64, v: f64, n_paths: usize, seed: u64) -> Result<McEstimate> {
    check_pair(u, v)?;
    let hits = simulate_blocks(params, n_paths, seed, || 0usize, |c, tr| {
        if tr.pfs <= u && tr.os <= v {
            *c += 1;
        }
    })?;
    Ok(proportion(hits.iter().sum(), n_paths))
}

pub(crate) fn proportion(hits: usize, n: usize) -> McEstimate {
    let p = hits as f64 / n as f64;
    McEstimate { value: p, se: (p * (1.0 - p) / n as f64).sqrt(), n }
}

/// S_PFS and S_OS on a grid of times.
pub fn marginal_curves(
    params: &IdmParams,
    grid: &[f64],
    config: &QuadratureConfig,
) -> Result<(MarginalCurve, MarginalCurve)> {
    let pfs = grid.iter().map(|&t| s_pfs(params, t)).collect::<Result<Vec<_>>>()?;
    let os = grid.iter().map(|&t| s_os(params, t, config)).collect::<Result<Vec<_>>>()?;
    Ok((
        MarginalCurve { grid: grid.to_vec(), values: pfs },
        MarginalCurve { grid: grid.to_vec(), values: os },
    ))
}

/// Joint CDF at every pair `u <= v` of the two grids.
pub fn joint_grid(params: &IdmParams, us: &[f64], vs: &[f64], config: &QuadratureConfig) -> Result<Vec<JointPoint>> {
    let mut out = Vec::new();
    for &u in us {
        for &v in vs.iter().filter(|&&v| v >= u) {
            out.push(JointPoint { u, v, cdf: joint_cdf(params, u, v, config)? });
        }
    }
    Ok(out)
}
