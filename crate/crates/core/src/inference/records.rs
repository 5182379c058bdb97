use serde::{Deserialize, Serialize};

use crate::error::{IdmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PdStatus {
    /// Progression observed at `pd_time`.
    Event,
    /// Follow-up for progression ended at `pd_time` without one.
    Censored,
    /// No progression recorded; `pd_time` is absent.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OsStatus {
    Event,
    Censored,
}

/// One patient's observed PFS/OS history under right-censoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub pd_time: Option<f64>,
    pub pd_status: PdStatus,
    pub os_time: f64,
    pub os_status: OsStatus,
}

/// How a subject left state 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit0 {
    Progression,
    Death,
    Censored,
}

/// A record reduced to its multistate path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectPath {
    /// Time of leaving (or being censored in) state 0.
    pub exit0: f64,
    pub how: Exit0,
    /// For progressed subjects: end of follow-up in state 1 and whether it
    /// ended in death.
    pub exit1: Option<(f64, bool)>,
}

impl SubjectPath {
    pub fn progression_time(&self) -> Option<f64> {
        (self.how == Exit0::Progression).then_some(self.exit0)
    }
}

impl SubjectRecord {
    fn reject(&self, reason: impl Into<String>) -> IdmError {
        IdmError::Record { id: self.id.clone(), reason: reason.into() }
    }

    /// Validates the record and reduces it to a path.
    ///
    /// Progression and death recorded at the same instant are read as a
    /// direct 0->2 transition. A censored PFS censors the subject for every
    /// transition at `pd_time`.
    pub fn path(&self) -> Result<SubjectPath> {
        let os = self.os_time;
        if !(os.is_finite() && os > 0.0) {
            return Err(self.reject(format!("os_time must be positive and finite, got {os}")));
        }
        let died = self.os_status == OsStatus::Event;
        let pd = match (self.pd_status, self.pd_time) {
            (PdStatus::None, Some(_)) => return Err(self.reject("pd_time given without a progression status")),
            (PdStatus::None, None) => None,
            (_, None) => return Err(self.reject("pd_time missing")),
            (_, Some(pd)) => {
                if !(pd.is_finite() && pd > 0.0) {
                    return Err(self.reject(format!("pd_time must be positive and finite, got {pd}")));
                }
                if pd > os {
                    return Err(self.reject(format!("pd_time exceeds os_time ({pd} > {os})")));
                }
                Some(pd)
            }
        };
        let path = match (self.pd_status, pd) {
            (PdStatus::Event, Some(t1)) if t1 == os && died => {
                SubjectPath { exit0: os, how: Exit0::Death, exit1: None }
            }
            (PdStatus::Event, Some(t1)) => {
                SubjectPath { exit0: t1, how: Exit0::Progression, exit1: Some((os, died)) }
            }
            (PdStatus::Censored, Some(c)) => {
                if c == os && died {
                    return Err(self.reject("PFS censored at the time of an observed death"));
                }
                SubjectPath { exit0: c, how: Exit0::Censored, exit1: None }
            }
            _ => SubjectPath { exit0: os, how: if died { Exit0::Death } else { Exit0::Censored }, exit1: None },
        };
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(pd_time: Option<f64>, pd_status: PdStatus, os_time: f64, os_status: OsStatus) -> SubjectRecord {
        SubjectRecord { id: "x".into(), pd_time, pd_status, os_time, os_status }
    }

    #[test]
    fn taxonomy() {
        let p = rec(Some(1.0), PdStatus::Event, 2.0, OsStatus::Event).path().unwrap();
        assert_eq!(p, SubjectPath { exit0: 1.0, how: Exit0::Progression, exit1: Some((2.0, true)) });
        let p = rec(None, PdStatus::None, 1.5, OsStatus::Event).path().unwrap();
        assert_eq!(p.how, Exit0::Death);
        let p = rec(None, PdStatus::None, 2.5, OsStatus::Censored).path().unwrap();
        assert_eq!(p.how, Exit0::Censored);
        let p = rec(Some(1.0), PdStatus::Censored, 3.0, OsStatus::Event).path().unwrap();
        assert_eq!(p, SubjectPath { exit0: 1.0, how: Exit0::Censored, exit1: None });
    }

    #[test]
    fn simultaneous_progression_and_death_is_direct_death() {
        let p = rec(Some(2.0), PdStatus::Event, 2.0, OsStatus::Event).path().unwrap();
        assert_eq!(p, SubjectPath { exit0: 2.0, how: Exit0::Death, exit1: None });
        let p = rec(Some(2.0), PdStatus::Event, 2.0, OsStatus::Censored).path().unwrap();
        assert_eq!(p.exit1, Some((2.0, false)));
    }

    #[test]
    fn rejections() {
        let e = rec(Some(3.0), PdStatus::Event, 2.0, OsStatus::Event).path().unwrap_err();
        assert!(e.to_string().contains("pd_time exceeds os_time"), "{e}");
        assert!(rec(None, PdStatus::Event, 2.0, OsStatus::Event).path().is_err());
        assert!(rec(Some(1.0), PdStatus::None, 2.0, OsStatus::Event).path().is_err());
        assert!(rec(None, PdStatus::None, 0.0, OsStatus::Event).path().is_err());
        assert!(rec(None, PdStatus::None, f64::NAN, OsStatus::Event).path().is_err());
        assert!(rec(Some(2.0), PdStatus::Censored, 2.0, OsStatus::Event).path().is_err());
    }
}
