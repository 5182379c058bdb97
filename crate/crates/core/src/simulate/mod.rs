//! Exact trajectory generation and simulated cohorts.

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::inference::records::{OsStatus, PdStatus, SubjectRecord};
use crate::model::{ClockConvention, IdmParams, Transition};
use crate::parallel::substream;

pub mod study;

pub use study::{run_scenario_study, EstimatorSummary, ReplicationRow, ScenarioStudy, StudyResult};

/// Number of independent path blocks used by the Monte-Carlo routines.
pub const MC_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub pfs: f64,
    pub os: f64,
    pub progressed: bool,
    /// Progression time, equal to `pfs` when present.
    pub t1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CensoringSpec {
    None,
    /// Every subject is censored at the cutoff.
    Administrative(f64),
    /// Exponential drop-out time with the given rate.
    ExponentialDropout(f64),
}

impl CensoringSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CensoringSpec::Administrative(c) if !(c > 0.0) => {
                Err(IdmError::InvalidArgument(format!("censoring cutoff must be positive, got {c}")))
            }
            CensoringSpec::ExponentialDropout(r) if !(r > 0.0 && r.is_finite()) => {
                Err(IdmError::InvalidArgument(format!("drop-out rate must be positive, got {r}")))
            }
            _ => Ok(()),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CensoringSpec::None => f64::INFINITY,
            CensoringSpec::Administrative(c) => c,
            CensoringSpec::ExponentialDropout(rate) => -rng.sample::<f64, _>(Open01).ln() / rate,
        }
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -rng.sample::<f64, _>(Open01).ln()
}

const MAX_ROOT_ITERATIONS: usize = 200;

/// Solves Λ01(t) + Λ02(t) = e for t.
fn pfs_from_cumulative(params: &IdmParams, e: f64) -> Result<f64> {
    let f1 = params.hazard(Transition::ZeroOne).family;
    let f2 = params.hazard(Transition::ZeroTwo).family;
    if f1.shape() == f2.shape() {
        let scale = f1.scale() + f2.scale();
        return Ok((e / scale).powf(1.0 / f1.shape()));
    }
    let h = |t: f64| params.cum0(t) - e;
    let (mut lo, mut hi) = (0.0, 1.0);
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(IdmError::RootFinding { target: e });
        }
    }
    for _ in 0..MAX_ROOT_ITERATIONS {
        if hi - lo <= 1e-3 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tol = 1e-12 * e.max(1.0);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_ROOT_ITERATIONS {
        let r = h(t);
        if r.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(t);
        }
        if r < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = params.a01(t) + params.a02(t);
        let next = t - r / slope;
        t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Err(IdmError::RootFinding { target: e })
}

/// Draws one path of the illness-death process.
pub fn sample_trajectory<R: Rng + ?Sized>(params: &IdmParams, rng: &mut R) -> Result<Trajectory> {
    let pfs = pfs_from_cumulative(params, exp1(rng))?;
    if !(pfs > 0.0 && pfs.is_finite()) {
        return Err(IdmError::RootFinding { target: pfs });
    }
    let a01 = params.a01(pfs);
    let a02 = params.a02(pfs);
    let u: f64 = rng.sample(Open01);
    if u * (a01 + a02) >= a01 {
        return Ok(Trajectory { pfs, os: pfs, progressed: false, t1: None });
    }
    let f12 = params.hazard(Transition::OneTwo).family;
    let e = exp1(rng);
    let mut os = match params.clock() {
        ClockConvention::SemiMarkov => pfs + f12.inverse_cumulative(e),
        _ => f12.inverse_cumulative(f12.cumulative(pfs) + e),
    };
    if os <= pfs {
        os = pfs.next_up();
    }
    Ok(Trajectory { pfs, os, progressed: true, t1: Some(pfs) })
}

fn observe<R: Rng + ?Sized>(id: usize, tr: &Trajectory, censoring: &CensoringSpec, rng: &mut R) -> SubjectRecord {
    let c = censoring.draw(rng);
    let id = (id + 1).to_string();
    let censored = |time| SubjectRecord {
        id: id.clone(),
        pd_time: None,
        pd_status: PdStatus::None,
        os_time: time,
        os_status: OsStatus::Censored,
    };
    if tr.pfs > c {
        return censored(c);
    }
    if !tr.progressed {
        return SubjectRecord {
            id,
            pd_time: None,
            pd_status: PdStatus::None,
            os_time: tr.os,
            os_status: OsStatus::Event,
        };
    }
    let (os_time, os_status) = if tr.os <= c { (tr.os, OsStatus::Event) } else { (c, OsStatus::Censored) };
    SubjectRecord { id, pd_time: Some(tr.pfs), pd_status: PdStatus::Event, os_time, os_status }
}

/// `n` observed subjects drawn sequentially from `rng`.
pub fn sample_cohort_with_rng<R: Rng + ?Sized>(
    params: &IdmParams,
    n: usize,
    censoring: &CensoringSpec,
    rng: &mut R,
) -> Result<Vec<SubjectRecord>> {
    censoring.validate()?;
    (0..n)
        .map(|i| {
            let tr = sample_trajectory(params, rng)?;
            Ok(observe(i, &tr, censoring, rng))
        })
        .collect()
}

/// `n` observed subjects from stream 0 of `seed`.
pub fn sample_cohort(params: &IdmParams, n: usize, censoring: &CensoringSpec, seed: u64) -> Result<Vec<SubjectRecord>> {
    if n == 0 {
        return Err(IdmError::InvalidArgument("cohort size must be at least 1".into()));
    }
    sample_cohort_with_rng(params, n, censoring, &mut substream(seed, 0))
}

/// Splits `n` paths into at most [`MC_BLOCKS`] blocks, each simulated from
/// its own substream and folded into an accumulator. Blocks come back in
/// order whatever the worker count.
pub fn simulate_blocks<A, I, F>(params: &IdmParams, n: usize, seed: u64, init: I, fold: F) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &Trajectory) + Sync,
{
    if n == 0 {
        return Err(IdmError::InvalidArgument("number of paths must be at least 1".into()));
    }
    let blocks = n.min(MC_BLOCKS);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = n * (b + 1) / blocks - n * b / blocks;
            let mut rng = substream(seed, b as u64);
            let mut acc = init();
            for _ in 0..len {
                fold(&mut acc, &sample_trajectory(params, &mut rng)?);
            }
            Ok(acc)
        })
        .collect()
}

/// All `n` paths of [`simulate_blocks`] in block order.
pub fn simulate_paths(params: &IdmParams, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let blocks = simulate_blocks(params, n, seed, Vec::new, |v, t| v.push(*t))?;
    Ok(blocks.concat())
}
