//! Dual-threshold contact states and their run-length segmentation.

use std::fmt;
use std::str::FromStr;

use crate::signal::ConsolidatedSignal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactState {
    Contact,
    NoContact,
    Ambiguous,
    Excluded,
}

impl ContactState {
    pub fn token(self) -> &'static str {
        match self {
            ContactState::Contact => "CONTACT",
            ContactState::NoContact => "NO_CONTACT",
            ContactState::Ambiguous => "AMBIGUOUS",
            ContactState::Excluded => "EXCLUDED",
        }
    }

    /// Contact or NoContact.
    pub fn is_labeled(self) -> bool {
        matches!(self, ContactState::Contact | ContactState::NoContact)
    }
}

impl fmt::Display for ContactState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ContactState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "CONTACT" => Ok(ContactState::Contact),
            "NO_CONTACT" => Ok(ContactState::NoContact),
            "AMBIGUOUS" => Ok(ContactState::Ambiguous),
            "EXCLUDED" => Ok(ContactState::Excluded),
            other => Err(Error::Schema(format!("unknown contact state token '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub c_threshold: f64,
    pub nc_threshold: f64,
    /// Seconds; 0 disables short-run demotion.
    pub min_segment: f64,
}

impl Thresholds {
    pub fn new(c_threshold: f64, nc_threshold: f64, min_segment: f64) -> Result<Self> {
        let th = Self { c_threshold, nc_threshold, min_segment };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.nc_threshold && self.nc_threshold < self.c_threshold) {
            return Err(Error::Config(format!(
                "thresholds must satisfy 0 <= nc ({}) < c ({})",
                self.nc_threshold, self.c_threshold
            )));
        }
        if !(self.min_segment >= 0.0) {
            return Err(Error::Config("min_segment must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSegment {
    pub start_t: f64,
    pub end_t: f64,
    pub state: ContactState,
}

impl ContactSegment {
    pub fn duration(&self) -> f64 {
        self.end_t - self.start_t
    }
}

/// Per-sample state: Excluded wins, then `> c` is Contact, `< nc` is
/// NoContact, and everything else (including equality) is Ambiguous.
pub fn label_samples(sig: &ConsolidatedSignal, th: &Thresholds) -> Result<Vec<ContactState>> {
    th.validate()?;
    Ok(sig
        .value
        .iter()
        .zip(&sig.excluded)
        .map(|(&v, &ex)| {
            if ex {
                ContactState::Excluded
            } else if v > th.c_threshold {
                ContactState::Contact
            } else if v < th.nc_threshold {
                ContactState::NoContact
            } else {
                ContactState::Ambiguous
            }
        })
        .collect())
}

fn runs(states: &[ContactState]) -> Vec<(usize, usize, ContactState)> {
    let mut out: Vec<(usize, usize, ContactState)> = Vec::new();
    for (i, &s) in states.iter().enumerate() {
        match out.last_mut() {
            Some((_, end, state)) if *state == s => *end = i + 1,
            _ => out.push((i, i + 1, s)),
        }
    }
    out
}

/// Demotes Contact/NoContact runs shorter than `min_segment` to Ambiguous.
///
/// A run's duration is its sample count times the median sample period.
pub fn demote_short_runs(states: &[ContactState], t: &[f64], min_segment: f64) -> Result<Vec<ContactState>> {
    if states.len() != t.len() {
        return Err(Error::Structural("states and timestamps differ in length".into()));
    }
    let period = crate::stats::median_period(t).unwrap_or(0.0);
    let mut out = states.to_vec();
    for (lo, hi, s) in runs(states) {
        if s.is_labeled() && ((hi - lo) as f64 * period) < min_segment {
            out[lo..hi].iter_mut().for_each(|x| *x = ContactState::Ambiguous);
        }
    }
    Ok(out)
}

/// Maximal runs after short-run demotion. Segments tile `[t_first, t_last]`:
/// each ends where the next begins and the last ends at the final timestamp.
pub fn segment_runs(states: &[ContactState], t: &[f64], min_segment: f64) -> Result<Vec<ContactSegment>> {
    if states.is_empty() {
        return Ok(Vec::new());
    }
    let demoted = demote_short_runs(states, t, min_segment)?;
    let r = runs(&demoted);
    Ok(r.iter()
        .enumerate()
        .map(|(k, &(lo, _, state))| ContactSegment {
            start_t: t[lo],
            end_t: r.get(k + 1).map(|n| t[n.0]).unwrap_or(t[t.len() - 1]),
            state,
        })
        .collect())
}

/// `#Contact / (#Contact + #NoContact)`; `None` when nothing is labeled.
pub fn contact_fraction(states: &[ContactState]) -> Option<f64> {
    let c = states.iter().filter(|s| **s == ContactState::Contact).count();
    let nc = states.iter().filter(|s| **s == ContactState::NoContact).count();
    (c + nc > 0).then(|| c as f64 / (c + nc) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ContactState::*;

    fn sig(v: &[f64]) -> ConsolidatedSignal {
        ConsolidatedSignal {
            t_device: (0..v.len()).map(|i| i as f64).collect(),
            value: v.to_vec(),
            excluded: vec![false; v.len()],
        }
    }

    #[test]
    fn dual_threshold_bands() {
        let th = Thresholds::new(0.5, 0.2, 0.0).unwrap();
        let s = label_samples(&sig(&[0.9, 0.05, 0.35, 0.5, 0.2]), &th).unwrap();
        assert_eq!(s, vec![Contact, NoContact, Ambiguous, Ambiguous, Ambiguous]);
    }

    #[test]
    fn excluded_dominates() {
        let th = Thresholds::new(0.5, 0.2, 0.0).unwrap();
        let mut x = sig(&[0.9, 0.05]);
        x.excluded = vec![true, true];
        assert_eq!(label_samples(&x, &th).unwrap(), vec![Excluded, Excluded]);
    }

    #[test]
    fn invalid_thresholds() {
        assert!(Thresholds::new(0.2, 0.2, 0.0).is_err());
        assert!(Thresholds::new(0.5, -0.1, 0.0).is_err());
    }

    #[test]
    fn three_segments_at_transitions() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let segs = segment_runs(&[NoContact, NoContact, Contact, Contact, Contact, NoContact], &t, 0.05).unwrap();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs.iter().map(|s| s.state).collect::<Vec<_>>(), vec![NoContact, Contact, NoContact]);
        assert_eq!(segs[0].start_t, 0.0);
        assert_eq!(segs[1].start_t, t[2]);
        assert_eq!(segs[2].start_t, t[5]);
        assert_eq!(segs[2].end_t, t[5]);
    }

    #[test]
    fn all_contact_one_segment() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let segs = segment_runs(&[Contact; 50], &t, 0.1).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start_t, segs[0].end_t), (0.0, t[49]));
    }

    #[test]
    fn single_contact_sample_demoted() {
        let t: Vec<f64> = (0..200).map(|i| i as f64 * 0.01).collect();
        let mut st = vec![NoContact; 200];
        st[100] = Contact;
        let d = demote_short_runs(&st, &t, 0.5).unwrap();
        assert_eq!(d[100], Ambiguous);
        let segs = segment_runs(&st, &t, 0.5).unwrap();
        assert_eq!(segs.iter().map(|s| s.state).collect::<Vec<_>>(), vec![NoContact, Ambiguous, NoContact]);
    }

    #[test]
    fn empty_segments() {
        assert!(segment_runs(&[], &[], 0.1).unwrap().is_empty());
    }

    #[test]
    fn fractions() {
        let mut s = vec![Contact; 45];
        s.extend(vec![NoContact; 55]);
        assert_eq!(contact_fraction(&s), Some(0.45));
        let mut s = vec![Contact; 10];
        s.extend(vec![Ambiguous; 5]);
        assert_eq!(contact_fraction(&s), Some(1.0));
        assert_eq!(contact_fraction(&[Ambiguous, Excluded]), None);
        assert_eq!(contact_fraction(&[]), None);
    }
}
