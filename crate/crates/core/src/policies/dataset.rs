use crate::env::{Action, Observation};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub observation: Observation,
    pub action: Action,
}

/// Expert `(observation, action)` pairs with their provenance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImitationDataset {
    pub samples: Vec<Sample>,
    /// Episode seeds the samples came from.
    pub seeds: Vec<u64>,
    pub density: String,
}

impl ImitationDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Concatenates datasets, joining density labels with `+`.
    pub fn merge(parts: Vec<ImitationDataset>) -> ImitationDataset {
        let mut out = ImitationDataset::default();
        let mut labels = Vec::new();
        for p in parts {
            out.samples.extend(p.samples);
            out.seeds.extend(p.seeds);
            if !p.density.is_empty() {
                labels.push(p.density);
            }
        }
        out.density = labels.join("+");
        out
    }

    pub fn validate(&self, d_m: f64, m_v: f64, observation_width: usize) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Empty("imitation dataset"));
        }
        for s in &self.samples {
            let a = s.action;
            if a.d.abs() > d_m + 1e-12 || a.v < 0.0 || a.v > m_v + 1e-12 {
                return Err(Error::InvalidInput(format!("action {a:?} out of bounds")));
            }
            if s.observation.features().len() != observation_width {
                return Err(Error::shape(observation_width, s.observation.features().len()));
            }
        }
        Ok(())
    }
}
