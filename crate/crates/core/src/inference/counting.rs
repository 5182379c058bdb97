use crate::error::{IdmError, Result};
use crate::inference::records::{Exit0, SubjectPath, SubjectRecord};
use crate::model::Transition;

/// Distinct event times with their multiplicities, in increasing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTable {
    pub times: Vec<f64>,
    pub counts: Vec<usize>,
}

impl EventTable {
    fn from_times(mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        let mut table = EventTable::default();
        for t in times {
            if table.times.last() == Some(&t) {
                *table.counts.last_mut().expect("nonempty") += 1;
            } else {
                table.times.push(t);
                table.counts.push(1);
            }
        }
        table
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Counting-process view of a cohort: transition events and at-risk sets.
#[derive(Debug, Clone)]
pub struct CountingData {
    paths: Vec<SubjectPath>,
    events: [EventTable; 3],
    exit0: Vec<f64>,
    entry1: Vec<f64>,
    exit1: Vec<f64>,
}

/// Builds the counting-process data, rejecting invalid records by id.
pub fn build_counting_data(records: &[SubjectRecord]) -> Result<CountingData> {
    if records.is_empty() {
        return Err(IdmError::NoSubjects);
    }
    let paths = records.iter().map(SubjectRecord::path).collect::<Result<Vec<_>>>()?;
    Ok(CountingData::from_paths(paths))
}

impl CountingData {
    pub(crate) fn from_paths(paths: Vec<SubjectPath>) -> Self {
        let mut ev: [Vec<f64>; 3] = Default::default();
        let mut exit0 = Vec::with_capacity(paths.len());
        let mut entry1 = Vec::new();
        let mut exit1 = Vec::new();
        for p in &paths {
            exit0.push(p.exit0);
            match p.how {
                Exit0::Progression => ev[Transition::ZeroOne.index()].push(p.exit0),
                Exit0::Death => ev[Transition::ZeroTwo.index()].push(p.exit0),
                Exit0::Censored => {}
            }
            if let Some((end, died)) = p.exit1 {
                entry1.push(p.exit0);
                exit1.push(end);
                if died {
                    ev[Transition::OneTwo.index()].push(end);
                }
            }
        }
        for v in [&mut exit0, &mut entry1, &mut exit1] {
            v.sort_by(f64::total_cmp);
        }
        let [a, b, c] = ev;
        CountingData {
            paths,
            events: [EventTable::from_times(a), EventTable::from_times(b), EventTable::from_times(c)],
            exit0,
            entry1,
            exit1,
        }
    }

    pub fn n_subjects(&self) -> usize {
        self.paths.len()
    }

    pub fn subjects(&self) -> &[SubjectPath] {
        &self.paths
    }

    pub fn events(&self, transition: Transition) -> &EventTable {
        &self.events[transition.index()]
    }

    pub fn n_events(&self, transition: Transition) -> usize {
        self.events(transition).total()
    }

    /// Subjects censored while in `state` (0 or 1).
    pub fn n_censored(&self, state: usize) -> usize {
        match state {
            0 => self.paths.iter().filter(|p| p.how == Exit0::Censored).count(),
            1 => self.paths.iter().filter(|p| matches!(p.exit1, Some((_, false)))).count(),
            _ => 0,
        }
    }

    /// Y_l(t): subjects in `state` just before `t`.
    pub fn at_risk(&self, state: usize, t: f64) -> usize {
        match state {
            0 => self.exit0.len() - self.exit0.partition_point(|&x| x < t),
            1 => self.entry1.partition_point(|&x| x < t) - self.exit1.partition_point(|&x| x < t),
            _ => 0,
        }
    }

    /// Total time spent in `state` (0 or 1) on the study time scale.
    pub fn exposure(&self, state: usize) -> f64 {
        match state {
            0 => self.paths.iter().map(|p| p.exit0).sum(),
            1 => self.paths.iter().filter_map(|p| p.exit1.map(|(end, _)| end - p.exit0)).sum(),
            _ => 0.0,
        }
    }

    /// Largest observed time.
    pub fn max_time(&self) -> f64 {
        self.paths.iter().map(|p| p.exit1.map_or(p.exit0, |(end, _)| end)).fold(0.0, f64::max)
    }
}
