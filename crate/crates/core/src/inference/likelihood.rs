use crate::error::{IdmError, Result};
use crate::inference::counting::CountingData;
use crate::inference::records::Exit0;
use crate::model::{ClockConvention, Family, IdmParams, Transition};

/// Event and exposure times of one transition on its own clock.
#[derive(Debug, Clone, Default)]
pub(crate) struct TransitionSample {
    pub events: usize,
    pub sum_log_events: f64,
    /// `(entry, exit)` clock times of every at-risk interval.
    pub intervals: Vec<(f64, f64)>,
}

impl TransitionSample {
    pub fn exposure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn loglik(&self, family: &Family) -> f64 {
        let d = self.events as f64;
        match *family {
            Family::Exponential { rate } => {
                let events = if self.events > 0 { d * rate.ln() } else { 0.0 };
                events - rate * self.exposure()
            }
            Family::Weibull { scale, shape } => {
                let events = if self.events > 0 {
                    d * (scale.ln() + shape.ln()) + (shape - 1.0) * self.sum_log_events
                } else {
                    0.0
                };
                let cumulative: f64 = self
                    .intervals
                    .iter()
                    .map(|&(a, b)| if a == 0.0 { b.powf(shape) } else { b.powf(shape) - a.powf(shape) })
                    .sum();
                events - scale * cumulative
            }
        }
    }
}

pub(crate) fn transition_sample(data: &CountingData, transition: Transition, clock: ClockConvention) -> TransitionSample {
    let mut s = TransitionSample::default();
    for p in data.subjects() {
        match transition {
            Transition::ZeroOne | Transition::ZeroTwo => {
                s.intervals.push((0.0, p.exit0));
                let hit = match transition {
                    Transition::ZeroOne => p.how == Exit0::Progression,
                    _ => p.how == Exit0::Death,
                };
                if hit {
                    s.events += 1;
                    s.sum_log_events += p.exit0.ln();
                }
            }
            Transition::OneTwo => {
                if let Some((end, died)) = p.exit1 {
                    let (a, b) = match clock {
                        ClockConvention::SemiMarkov => (0.0, end - p.exit0),
                        _ => (p.exit0, end),
                    };
                    s.intervals.push((a, b));
                    if died {
                        s.events += 1;
                        s.sum_log_events += b.ln();
                    }
                }
            }
        }
    }
    s
}

/// All three transition samples under a clock convention.
pub(crate) fn samples(data: &CountingData, clock: ClockConvention) -> [TransitionSample; 3] {
    Transition::ALL.map(|tr| transition_sample(data, tr, clock))
}

pub(crate) fn loglik_from_samples(theta: &IdmParams, samples: &[TransitionSample; 3]) -> Result<f64> {
    let mut total = 0.0;
    for tr in Transition::ALL {
        let v = samples[tr.index()].loglik(&theta.hazard(tr).family);
        if v.is_nan() || v == f64::INFINITY {
            return Err(IdmError::Degenerate(format!("log-likelihood of {tr} is {v}")));
        }
        total += v;
    }
    Ok(total)
}

/// Counting-process log-likelihood of `theta`.
pub fn log_likelihood(theta: &IdmParams, data: &CountingData) -> Result<f64> {
    loglik_from_samples(theta, &samples(data, theta.clock()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::counting::build_counting_data;
    use crate::inference::counting::tests::hand_records;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hand_dataset_exponential() {
        let d = build_counting_data(&hand_records()).unwrap();
        let theta = IdmParams::exponential(0.6, 0.075, 0.9).unwrap();
        // one event per transition; exposures 5 (state 0) and 1 (state 1)
        let expected = 0.6f64.ln() + 0.075f64.ln() + 0.9f64.ln() - (0.6 + 0.075) * 5.0 - 0.9;
        assert_abs_diff_eq!(log_likelihood(&theta, &d).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn hand_dataset_weibull_clocks() {
        let d = build_counting_data(&hand_records()).unwrap();
        let w = ((0.57, 1.5), (0.065, 0.5), (1.1, 0.85));
        let ti = IdmParams::weibull(w.0, w.1, w.2, ClockConvention::TimeInhomogeneousMarkov).unwrap();
        let sm = ti.with_clock(ClockConvention::SemiMarkov).unwrap();
        let h = |l: f64, g: f64, t: f64| l * g * t.powf(g - 1.0);
        let c = |l: f64, g: f64, t: f64| l * t.powf(g);
        let state0 = h(0.57, 1.5, 1.0).ln() + h(0.065, 0.5, 1.5).ln()
            - [1.0, 1.5, 2.5].iter().map(|&t| c(0.57, 1.5, t) + c(0.065, 0.5, t)).sum::<f64>();
        let ti_12 = h(1.1, 0.85, 2.0).ln() - (c(1.1, 0.85, 2.0) - c(1.1, 0.85, 1.0));
        let sm_12 = h(1.1, 0.85, 1.0).ln() - c(1.1, 0.85, 1.0);
        assert_abs_diff_eq!(log_likelihood(&ti, &d).unwrap(), state0 + ti_12, epsilon = 1e-13);
        assert_abs_diff_eq!(log_likelihood(&sm, &d).unwrap(), state0 + sm_12, epsilon = 1e-13);
    }

    #[test]
    fn vanishing_rates_diverge() {
        let d = build_counting_data(&hand_records()).unwrap();
        let a = log_likelihood(&IdmParams::exponential(1e-3, 1e-3, 1e-3).unwrap(), &d).unwrap();
        let b = log_likelihood(&IdmParams::exponential(1e-30, 1e-30, 1e-30).unwrap(), &d).unwrap();
        assert!(b < a && b < -150.0);
    }

    #[test]
    fn invariant_to_subject_order() {
        let mut r = hand_records();
        let theta = IdmParams::weibull((0.5, 1.2), (0.1, 0.8), (0.9, 1.1), ClockConvention::SemiMarkov).unwrap();
        let a = log_likelihood(&theta, &build_counting_data(&r).unwrap()).unwrap();
        r.reverse();
        let b = log_likelihood(&theta, &build_counting_data(&r).unwrap()).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
}
