use crate::costs::Source;
use crate::env::Action;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const DEFAULT_HISTORY_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: Action,
    pub source: Source,
}

impl HistoryEntry {
    const EMPTY: HistoryEntry = HistoryEntry {
        action: Action::STOP,
        source: Source::Local,
    };
}

/// Last `k` executed actions with their source, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    entries: VecDeque<HistoryEntry>,
}

impl History {
    /// `k` zero entries.
    pub fn new(k: usize) -> Self {
        History {
            entries: std::iter::repeat_n(HistoryEntry::EMPTY, k).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, action: Action, source: Source) {
        if self.entries.is_empty() {
            return;
        }
        self.entries.pop_front();
        self.entries.push_back(HistoryEntry { action, source });
    }

    /// Overwrites the newest entry.
    pub fn set_last(&mut self, action: Action, source: Source) {
        if let Some(last) = self.entries.back_mut() {
            *last = HistoryEntry { action, source };
        }
    }

    pub fn last(&self) -> Option<&HistoryEntry> {
        self.entries.back()
    }

    pub fn entries(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }

    /// `(d / d_m, v / m_v, flag)` per entry, `3k` numbers.
    pub fn features(&self, d_m: f64, m_v: f64) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| [e.action.d / d_m, e.action.v / m_v, e.source.flag()])
            .collect()
    }
}

/// Router input: embedding followed by the flattened history, if any.
pub fn router_features(embedding: &[f64], history: Option<&History>, d_m: f64, m_v: f64) -> Vec<f64> {
    let mut x = embedding.to_vec();
    if let Some(h) = history {
        x.extend(h.features(d_m, m_v));
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_padded() {
        let h = History::new(8);
        assert_eq!(h.len(), 8);
        assert!(h.features(0.3, 1.5).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn newest_last_and_overwrite() {
        let mut h = History::new(3);
        h.push(Action::new(0.1, 1.0), Source::Local);
        h.push(Action::new(0.2, 0.5), Source::Local);
        h.set_last(Action::new(-0.3, 1.5), Source::Cloud);
        assert_eq!(h.len(), 3);
        let f = h.features(0.3, 1.5);
        assert_eq!(f.len(), 9);
        assert_eq!(&f[6..], &[-1.0, 1.0, 1.0]);
        assert!((f[3] - 0.1 / 0.3).abs() < 1e-15);
        assert_eq!(f[5], 0.0);
    }

    #[test]
    fn width_is_embedding_plus_3k() {
        let h = History::new(8);
        assert_eq!(router_features(&[0.0; 32], Some(&h), 0.3, 1.5).len(), 56);
        assert_eq!(router_features(&[0.0; 32], None, 0.3, 1.5).len(), 32);
    }
}
