//! Moments of PFS and OS and their Pearson correlation.

use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::joint::{s_os, stay_in_progression, survival_of_product};
use crate::model::IdmParams;
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureConfig};
use crate::simulate::simulate_blocks;
use crate::transition::p01;

/// Survival level that defines the truncation horizon of infinite integrals.
pub const HORIZON_SURVIVAL: f64 = 1e-9;
/// Largest horizon searched before the moments are declared divergent.
pub const MAX_HORIZON: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marginal {
    Pfs,
    Os,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentMethod {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean_pfs: f64,
    pub mean_os: f64,
    pub var_pfs: f64,
    pub var_os: f64,
    pub e_product: f64,
    pub covariance: f64,
    pub correlation: f64,
    pub method: MomentMethod,
    pub mc_se: Option<f64>,
}

/// Smallest doubling of 1 at which S_OS drops below [`HORIZON_SURVIVAL`].
pub fn truncation_horizon(params: &IdmParams, config: &QuadratureConfig) -> Result<f64> {
    let mut t = 1.0;
    loop {
        if s_os(params, t, config)? < HORIZON_SURVIVAL {
            return Ok(t);
        }
        t *= 2.0;
        if t > MAX_HORIZON {
            return Err(IdmError::Truncation { horizon: MAX_HORIZON, threshold: HORIZON_SURVIVAL });
        }
    }
}

/// ∫_0^∞ f, split at the horizon so the body is integrated on a finite range.
fn integrate_half_line<F>(f: F, horizon: f64, config: &QuadratureConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_half_line_from(f, 0.0, horizon, config)
}

fn inner(config: &QuadratureConfig) -> QuadratureConfig {
    QuadratureConfig { max_subdivisions: config.max_subdivisions.max(400), ..config.scaled(1e-1) }
}

/// Mean and variance of PFS or OS from its survival function.
pub fn mean_and_variance(params: &IdmParams, marginal: Marginal, config: &QuadratureConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let horizon = truncation_horizon(params, config)?;
    let cfg = inner(config);
    let surv = |t: f64| -> Result<f64> {
        match marginal {
            Marginal::Pfs => Ok(params.s_pfs_at(t)),
            Marginal::Os => s_os(params, t, &cfg),
        }
    };
    let mean = integrate_half_line(surv, horizon, config)?;
    let second = 2.0 * integrate_half_line(|t| Ok(t * surv(t)?), horizon, config)?;
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// E(PFS·OS) = ∫_0^∞ 2r P(PFS·OS > r²) dr.
pub fn e_product(params: &IdmParams, config: &QuadratureConfig) -> Result<f64> {
    config.validate()?;
    let horizon = truncation_horizon(params, config)?;
    let cfg = inner(config);
    integrate_half_line(|r| Ok(2.0 * r * survival_of_product(params, r * r, &cfg)?), horizon, config)
}

/// ∫ S_OS over fixed panels of [0, horizon], shared by every row of the
/// covariance double integral. Panels are graded geometrically towards the
/// origin, where Weibull shapes below one make S_OS non-smooth.
struct OsPanels<'a> {
    params: &'a IdmParams,
    config: QuadratureConfig,
    breaks: Vec<f64>,
    prefix: Vec<f64>,
    total: f64,
}

impl<'a> OsPanels<'a> {
    const UNIFORM: usize = 64;
    const GRADED: i32 = 48;

    fn new(params: &'a IdmParams, horizon: f64, config: QuadratureConfig) -> Result<Self> {
        let deeper = inner(&config);
        let width = horizon / Self::UNIFORM as f64;
        let mut breaks = vec![0.0];
        breaks.extend((0..Self::GRADED).rev().map(|j| width * 0.5f64.powi(j + 1)));
        breaks.extend((1..=Self::UNIFORM).map(|k| k as f64 * width));
        let mut prefix = vec![0.0];
        for w in breaks.windows(2) {
            let v = integrate(|b| s_os(params, b, &deeper), w[0], w[1], &config)?.value;
            prefix.push(prefix[prefix.len() - 1] + v);
        }
        let tail = integrate_to_infinity(|b| s_os(params, b, &deeper), horizon, &config)?.value;
        let total = prefix[prefix.len() - 1] + tail;
        Ok(OsPanels { params, config, breaks, prefix, total })
    }

    /// ∫_0^a S_OS(b) db.
    fn upto(&self, a: f64) -> Result<f64> {
        let k = self.breaks.partition_point(|&b| b <= a) - 1;
        let deeper = inner(&self.config);
        let part = integrate(|b| s_os(self.params, b, &deeper), self.breaks[k], a, &self.config)?.value;
        Ok(self.prefix[k] + part)
    }
}

/// Cov(PFS, OS) as the double integral of P(PFS > a, OS > b) − S_PFS(a)S_OS(b)
/// over the positive quadrant.
pub fn covariance_analytic(params: &IdmParams, config: &QuadratureConfig) -> Result<f64> {
    config.validate()?;
    let horizon = truncation_horizon(params, config)?;
    let cfg = inner(config);
    let deepest = inner(&cfg);
    let panels = OsPanels::new(params, horizon, cfg)?;
    let markov = params.clock().is_markov();
    let row = |a: f64| -> Result<f64> {
        let sa = params.s_pfs_at(a);
        if sa == 0.0 {
            return Ok(0.0);
        }
        let os_below = panels.upto(a)?;
        let os_above = panels.total - os_below;
        // b < a: the joint survival is S_PFS(a)
        let below = sa * (a - os_below);
        // b > a: S_OS(b) − P(X(a) = 1, X(b) = 1) − S_PFS(a)S_OS(b)
        let p01_a = if markov { p01(params, 0.0, a, &deepest)? } else { 0.0 };
        let stay = |b: f64| -> Result<f64> {
            if markov {
                Ok(p01_a * params.p11_at(a, b, 0.0))
            } else {
                stay_in_progression(params, a, b, &cfg)
            }
        };
        let stay = if a < horizon {
            integrate_half_line_from(stay, a, horizon, &cfg)?
        } else {
            integrate_to_infinity(stay, a, &cfg)?.value
        };
        Ok(below + (1.0 - sa) * os_above - stay)
    };
    integrate_half_line(row, horizon, config)
}

fn integrate_half_line_from<F>(mut f: F, a: f64, horizon: f64, config: &QuadratureConfig) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let body = integrate(&mut f, a, horizon, config)?;
    let tail = integrate_to_infinity(&mut f, horizon, config)?;
    Ok(body.value + tail.value)
}

fn assemble(
    mean_pfs: f64,
    mean_os: f64,
    var_pfs: f64,
    var_os: f64,
    e_product: f64,
    method: MomentMethod,
    mc_se: Option<f64>,
) -> Result<MomentSet> {
    if !(var_pfs > 0.0 && var_os > 0.0) {
        return Err(IdmError::Degenerate(format!("zero variance (var_pfs = {var_pfs}, var_os = {var_os})")));
    }
    let covariance = e_product - mean_pfs * mean_os;
    let correlation = covariance / (var_pfs.sqrt() * var_os.sqrt());
    Ok(MomentSet { mean_pfs, mean_os, var_pfs, var_os, e_product, covariance, correlation, method, mc_se })
}

/// All moments and Corr(PFS, OS) by numerical integration.
pub fn correlation(params: &IdmParams, config: &QuadratureConfig) -> Result<MomentSet> {
    let (mean_pfs, var_pfs) = mean_and_variance(params, Marginal::Pfs, config)?;
    let (mean_os, var_os) = mean_and_variance(params, Marginal::Os, config)?;
    let e = e_product(params, config)?;
    let mut m = assemble(mean_pfs, mean_os, var_pfs, var_os, e, MomentMethod::Analytic, None)?;
    if m.correlation.abs() > 1.0 + 1e-6 {
        return Err(IdmError::Degenerate(format!("correlation {} outside [-1, 1]", m.correlation)));
    }
    m.correlation = m.correlation.clamp(-1.0, 1.0);
    Ok(m)
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    yy: f64,
    xy: f64,
}

impl Sums {
    fn add(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.x += x;
        self.y += y;
        self.xx += x * x;
        self.yy += y * y;
        self.xy += x * y;
    }

    fn merge(&self, o: &Sums, sign: f64) -> Sums {
        Sums {
            n: self.n + sign * o.n,
            x: self.x + sign * o.x,
            y: self.y + sign * o.y,
            xx: self.xx + sign * o.xx,
            yy: self.yy + sign * o.yy,
            xy: self.xy + sign * o.xy,
        }
    }

    /// (mean_x, mean_y, var_x, var_y, E xy), unbiased variances.
    fn moments(&self) -> (f64, f64, f64, f64, f64) {
        let n = self.n;
        let (mx, my) = (self.x / n, self.y / n);
        let c = n / (n - 1.0);
        (mx, my, c * (self.xx / n - mx * mx), c * (self.yy / n - my * my), self.xy / n)
    }

    fn correlation(&self) -> f64 {
        let (mx, my, vx, vy, exy) = self.moments();
        let c = self.n / (self.n - 1.0);
        c * (exy - mx * my) / (vx.sqrt() * vy.sqrt())
    }
}

/// Sample moments over `n_paths` simulated pairs; the standard error of the
/// correlation is a block jackknife.
pub fn correlation_mc(params: &IdmParams, n_paths: usize, seed: u64) -> Result<MomentSet> {
    if n_paths < 2 {
        return Err(IdmError::InvalidArgument("at least two paths are required".into()));
    }
    let blocks = simulate_blocks(params, n_paths, seed, Sums::default, |s, t| s.add(t.pfs, t.os))?;
    let total = blocks.iter().fold(Sums::default(), |acc, b| acc.merge(b, 1.0));
    let (mx, my, vx, vy, exy) = total.moments();
    let c = total.n / (total.n - 1.0);
    let mut m = assemble(mx, my, vx, vy, exy, MomentMethod::MonteCarlo, None)?;
    m.covariance = c * (exy - mx * my);
    m.correlation = total.correlation();
    let g = blocks.len() as f64;
    if blocks.len() >= 2 && blocks.iter().all(|b| total.n - b.n >= 2.0) {
        let loo: Vec<f64> = blocks.iter().map(|b| total.merge(b, -1.0).correlation()).collect();
        let mean = loo.iter().sum::<f64>() / g;
        let ss: f64 = loo.iter().map(|v| (v - mean).powi(2)).sum();
        m.mc_se = Some(((g - 1.0) / g * ss).sqrt());
    }
    Ok(m)
}
