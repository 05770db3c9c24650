//! First-order transition-count baseline.

use std::collections::BTreeMap;

use crate::data::{Dataset, Visit, PAD_LOCATION};
use crate::error::{Error, Result};
use crate::eval::metrics::Scorer;
use crate::model::Sample;

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovModel {
    /// `transitions[from]` maps successor location to count.
    transitions: Vec<BTreeMap<usize, u64>>,
    popularity: Vec<u64>,
}

impl MarkovModel {
    /// Counts consecutive pairs inside each session. Pad records are skipped.
    pub fn train<'a>(num_locations: usize, sessions: impl IntoIterator<Item = &'a [Visit]>) -> Self {
        let mut m = Self {
            transitions: vec![BTreeMap::new(); num_locations + 1],
            popularity: vec![0; num_locations + 1],
        };
        for s in sessions {
            for v in s.iter().filter(|v| v.location != PAD_LOCATION && v.location <= num_locations) {
                m.popularity[v.location] += 1;
            }
            for w in s.windows(2) {
                let (a, b) = (w[0].location, w[1].location);
                if a != PAD_LOCATION && b != PAD_LOCATION && a <= num_locations && b <= num_locations {
                    *m.transitions[a].entry(b).or_insert(0) += 1;
                }
            }
        }
        m
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        Self::train(data.vocab.num_locations(), data.train_sessions().map(|(_, s)| s))
    }

    pub fn num_locations(&self) -> usize {
        self.popularity.len() - 1
    }

    pub fn count(&self, from: usize, to: usize) -> u64 {
        self.transitions
            .get(from)
            .and_then(|t| t.get(&to))
            .copied()
            .unwrap_or(0)
    }

    /// Successor counts of `last`, or global popularity when `last` was
    /// never followed by anything in training.
    pub fn scores_after(&self, last: usize) -> Vec<f64> {
        match self.transitions.get(last) {
            Some(t) if !t.is_empty() => {
                let mut s = vec![0.0; self.popularity.len()];
                for (&to, &c) in t {
                    s[to] = c as f64;
                }
                s
            }
            _ => self.popularity.iter().map(|&c| c as f64).collect(),
        }
    }
}

impl Scorer for MarkovModel {
    fn score(&self, sample: &Sample) -> Result<Vec<f64>> {
        let last = sample.recent.last().ok_or(Error::EmptySequence)?;
        Ok(self.scores_after(last.location))
    }
}
