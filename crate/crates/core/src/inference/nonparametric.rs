use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};
use crate::inference::counting::CountingData;
use crate::model::Transition;
use crate::transition::TransitionMatrix;

/// Right-continuous step function, zero before the first jump.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => 0.0,
            k => self.values[k - 1],
        }
    }
}

/// Cumulative hazard estimate Σ_{s<=t} ΔN_lm(s) / Y_l(s).
pub fn nelson_aalen(data: &CountingData, transition: Transition) -> StepFunction {
    let table = data.events(transition);
    let mut out = StepFunction::default();
    let mut acc = 0.0;
    for (&t, &d) in table.times.iter().zip(&table.counts) {
        let y = data.at_risk(transition.from_state(), t);
        if y > 0 {
            acc += d as f64 / y as f64;
            out.times.push(t);
            out.values.push(acc);
        }
    }
    out
}

/// Product integral of the Nelson–Aalen increments over (s, t]. The state-0
/// factor uses the pooled increment (d01 + d02) / Y0, so P̂00 is the
/// Kaplan–Meier estimate of PFS.
pub fn aalen_johansen(data: &CountingData, s: f64, t: f64) -> Result<TransitionMatrix> {
    if !(s >= 0.0 && s <= t && t.is_finite()) {
        return Err(IdmError::IntervalOrder { s, t });
    }
    let mut flat: Vec<(f64, usize, usize)> = Transition::ALL
        .into_iter()
        .flat_map(|tr| {
            let table = data.events(tr);
            table.times.iter().zip(&table.counts).map(move |(&u, &d)| (u, tr.index(), d))
        })
        .filter(|&(u, _, _)| u > s && u <= t)
        .collect();
    flat.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut jumps: Vec<(f64, [usize; 3])> = Vec::new();
    for (u, i, d) in flat {
        if jumps.last().is_none_or(|(v, _)| *v != u) {
            jumps.push((u, [0; 3]));
        }
        jumps.last_mut().expect("pushed").1[i] = d;
    }
    let (mut p00, mut p01, mut p11) = (1.0, 0.0, 1.0);
    for &(u, [d01, d02, d12]) in &jumps {
        let y0 = data.at_risk(0, u) as f64;
        let y1 = data.at_risk(1, u) as f64;
        let a01 = if y0 > 0.0 { d01 as f64 / y0 } else { 0.0 };
        let a12 = if y1 > 0.0 { d12 as f64 / y1 } else { 0.0 };
        p01 = p00 * a01 + p01 * (1.0 - a12);
        if y0 > 0.0 {
            p00 *= 1.0 - (d01 + d02) as f64 / y0;
        }
        p11 *= 1.0 - a12;
    }
    Ok(TransitionMatrix { s, t, t1: None, p00, p01, p02: 1.0 - p00 - p01, p11, p12: 1.0 - p11 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::counting::build_counting_data;
    use crate::inference::counting::tests::hand_records;
    use crate::inference::records::{OsStatus, PdStatus, SubjectRecord};
    use crate::model::IdmParams;
    use crate::simulate::{sample_cohort, CensoringSpec};

    #[test]
    fn hand_values() {
        let d = build_counting_data(&hand_records()).unwrap();
        let a01 = nelson_aalen(&d, Transition::ZeroOne);
        assert_eq!((a01.times.clone(), a01.values.clone()), (vec![1.0], vec![1.0 / 3.0]));
        assert_eq!(nelson_aalen(&d, Transition::ZeroTwo).values, vec![0.5]);
        assert_eq!(nelson_aalen(&d, Transition::OneTwo).values, vec![1.0]);
        assert_eq!(a01.eval(0.99), 0.0);
        assert_eq!(a01.eval(1.0), 1.0 / 3.0);
        let m = aalen_johansen(&d, 0.0, 2.5).unwrap();
        assert_eq!(m.p00, (1.0 - 1.0 / 3.0) * (1.0 - 0.5));
        assert_eq!(m.p00 + m.p01 + m.p02, 1.0);
        let id = aalen_johansen(&d, 1.2, 1.2).unwrap();
        assert_eq!((id.p00, id.p01, id.p11), (1.0, 0.0, 1.0));
    }

    #[test]
    fn no_events_is_zero() {
        let r = vec![SubjectRecord {
            id: "a".into(),
            pd_time: None,
            pd_status: PdStatus::None,
            os_time: 3.0,
            os_status: OsStatus::Censored,
        }];
        let d = build_counting_data(&r).unwrap();
        assert!(nelson_aalen(&d, Transition::ZeroOne).times.is_empty());
        assert_eq!(nelson_aalen(&d, Transition::ZeroOne).eval(10.0), 0.0);
    }

    #[test]
    fn converges_to_true_cumulative_hazard() {
        let p = IdmParams::exponential(0.6, 0.075, 0.9).unwrap();
        let sup = |n: usize| {
            let d = build_counting_data(&sample_cohort(&p, n, &CensoringSpec::None, 21).unwrap()).unwrap();
            let na = nelson_aalen(&d, Transition::ZeroOne);
            // 80th percentile of PFS
            let horizon = -(0.2f64).ln() / 0.675;
            na.times
                .iter()
                .zip(&na.values)
                .filter(|(t, _)| **t <= horizon)
                .map(|(t, v)| (v - 0.6 * t).abs())
                .fold(0.0, f64::max)
        };
        assert!(sup(10_000) <= 0.05);
    }
}
