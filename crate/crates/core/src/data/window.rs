use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowLabel {
    Normal,
    Anomalous,
    Unlabeled,
}

impl WindowLabel {
    pub fn code(self) -> u8 {
        match self {
            WindowLabel::Normal => 0,
            WindowLabel::Anomalous => 1,
            WindowLabel::Unlabeled => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(WindowLabel::Normal),
            1 => Some(WindowLabel::Anomalous),
            2 => Some(WindowLabel::Unlabeled),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WindowLabel::Normal => "normal",
            WindowLabel::Anomalous => "anomalous",
            WindowLabel::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "normal" | "0" => Some(WindowLabel::Normal),
            "anomalous" | "1" => Some(WindowLabel::Anomalous),
            "unlabeled" | "" => Some(WindowLabel::Unlabeled),
            _ => None,
        }
    }

    /// `Some(true)` for anomalous, `Some(false)` for normal, `None` otherwise.
    pub fn is_anomalous(self) -> Option<bool> {
        match self {
            WindowLabel::Normal => Some(false),
            WindowLabel::Anomalous => Some(true),
            WindowLabel::Unlabeled => None,
        }
    }
}

/// A fixed-length slice of one building's squashed series.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub building_id: Arc<str>,
    pub start_index: usize,
    pub values: Vec<f32>,
    pub label: WindowLabel,
}

impl Window {
    pub fn key(&self) -> (&str, usize) {
        (&self.building_id, self.start_index)
    }
}

/// Number of windows of `window_length` at `stride` in a series of `len`.
pub fn window_count(len: usize, window_length: usize, stride: usize) -> usize {
    if window_length == 0 || stride == 0 || len < window_length {
        0
    } else {
        (len - window_length) / stride + 1
    }
}

/// Slices `values` into windows starting at `0, stride, 2*stride, ...`.
/// A window is anomalous when any covered label is 1; without labels every
/// window is unlabeled.
pub fn make_windows(
    building_id: &str,
    values: &[f32],
    labels: Option<&[u8]>,
    window_length: usize,
    stride: usize,
) -> Result<Vec<Window>> {
    if window_length == 0 || stride == 0 {
        return Err(Error::Config("window length and stride must be positive".into()));
    }
    if values.len() < window_length {
        return Err(Error::Data(format!(
            "building {building_id}: series of {} hours is shorter than the {window_length}-hour window",
            values.len()
        )));
    }
    if let Some(l) = labels {
        if l.len() != values.len() {
            return Err(Error::shape("make_windows", "label count", values.len(), l.len()));
        }
    }
    // prefix counts of anomalous steps
    let prefix: Option<Vec<usize>> = labels.map(|l| {
        let mut p = Vec::with_capacity(l.len() + 1);
        p.push(0);
        for &v in l {
            p.push(p[p.len() - 1] + (v != 0) as usize);
        }
        p
    });
    let id: Arc<str> = Arc::from(building_id);
    let count = window_count(values.len(), window_length, stride);
    Ok((0..count)
        .map(|k| {
            let start = k * stride;
            let end = start + window_length;
            let label = match &prefix {
                Some(p) if p[end] > p[start] => WindowLabel::Anomalous,
                Some(_) => WindowLabel::Normal,
                None => WindowLabel::Unlabeled,
            };
            Window {
                building_id: id.clone(),
                start_index: start,
                values: values[start..end].to_vec(),
                label,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_year_counts() {
        assert_eq!(window_count(8760, 60, 1), 8701);
        assert_eq!(window_count(8760, 60, 60), 146);
        assert_eq!(window_count(60, 60, 1), 1);
        let v = vec![0.0f32; 8760];
        assert_eq!(make_windows("b", &v, None, 60, 1).unwrap().len(), 8701);
        assert_eq!(make_windows("b", &v, None, 60, 60).unwrap().len(), 146);
    }

    #[test]
    fn at_least_one_anomalous_step_marks_window() {
        let v = vec![0.0f32; 10];
        let mut l = vec![0u8; 10];
        l[4] = 1;
        let w = make_windows("b", &v, Some(&l), 3, 1).unwrap();
        let anomalous: Vec<usize> = w
            .iter()
            .filter(|w| w.label == WindowLabel::Anomalous)
            .map(|w| w.start_index)
            .collect();
        assert_eq!(anomalous, vec![2, 3, 4]);
        assert!(make_windows("b", &v, None, 3, 1)
            .unwrap()
            .iter()
            .all(|w| w.label == WindowLabel::Unlabeled));
    }

    #[test]
    fn short_series_rejected() {
        assert!(make_windows("b", &[0.0; 5], None, 6, 1).is_err());
    }

    proptest! {
        #[test]
        fn count_matches_closed_form(len in 1usize..2000, l in 1usize..100, stride in 1usize..80) {
            prop_assume!(len >= l);
            let v = vec![0.0f32; len];
            let w = make_windows("p", &v, None, l, stride).unwrap();
            prop_assert_eq!(w.len(), (len - l) / stride + 1);
            prop_assert!(w.iter().all(|w| w.values.len() == l));
            let last = w.last().unwrap();
            prop_assert!(last.start_index + l <= len);
        }

        #[test]
        fn labels_follow_any_rule(labels in proptest::collection::vec(0u8..2, 20..120), l in 1usize..20, stride in 1usize..10) {
            let v = vec![0.0f32; labels.len()];
            for w in make_windows("p", &v, Some(&labels), l, stride).unwrap() {
                let any = labels[w.start_index..w.start_index + l].iter().any(|&x| x == 1);
                prop_assert_eq!(w.label == WindowLabel::Anomalous, any);
            }
        }
    }
}
