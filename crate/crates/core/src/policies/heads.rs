use crate::env::{Action, Observation};
use crate::nn::{network_hash, Activation, Checkpoint, Mlp, MlpSpec, OutputActivation};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Network sizes of the navigation stack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyPreset {
    pub trunk_hidden: usize,
    pub embedding_dim: usize,
    pub local_hidden: usize,
    /// Widths of the cloud continuation after the embedding.
    pub cloud_body: Vec<usize>,
    pub cloud_merge_hidden: usize,
}

impl Default for PolicyPreset {
    fn default() -> Self {
        PolicyPreset {
            trunk_hidden: 64,
            embedding_dim: 32,
            local_hidden: 32,
            cloud_body: vec![128, 128],
            cloud_merge_hidden: 64,
        }
    }
}

impl PolicyPreset {
    pub fn trunk_spec(&self, observation_width: usize) -> MlpSpec {
        MlpSpec::uniform(
            &[observation_width, self.trunk_hidden, self.embedding_dim],
            Activation::Tanh,
            OutputActivation::Tanh,
        )
    }

    pub fn local_spec(&self) -> MlpSpec {
        MlpSpec::uniform(
            &[self.embedding_dim + 2, self.local_hidden, 2],
            Activation::Tanh,
            OutputActivation::Tanh,
        )
    }

    pub fn cloud_specs(&self) -> (MlpSpec, MlpSpec) {
        let mut widths = vec![self.embedding_dim];
        widths.extend_from_slice(&self.cloud_body);
        let body = MlpSpec::uniform(&widths, Activation::Relu, OutputActivation::Tanh);
        let last = *widths.last().expect("non-empty");
        let merge = MlpSpec::uniform(
            &[last + 2, self.cloud_merge_hidden, 2],
            Activation::Relu,
            OutputActivation::Tanh,
        );
        (body, merge)
    }
}

/// Maps head outputs in [-1, 1]^2 to actions and back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionScale {
    pub d_m: f64,
    pub m_v: f64,
}

impl ActionScale {
    /// `d = d_m * y0`, `v = m_v * (y1 + 1) / 2`, clamped to the action bounds.
    pub fn decode(&self, y: &[f64]) -> Action {
        Action {
            d: self.d_m * y[0],
            v: self.m_v * (y[1] + 1.0) / 2.0,
        }
        .clamped(self.d_m, self.m_v)
    }

    pub fn encode(&self, a: &Action) -> [f64; 2] {
        [a.d / self.d_m, 2.0 * a.v / self.m_v - 1.0]
    }
}

/// Observation-to-embedding map shared by both heads and the router.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedTrunk {
    pub net: Mlp,
    /// Set once the cloud policy has been trained; the weights are then fixed.
    pub frozen: bool,
}

impl SharedTrunk {
    pub fn new(net: Mlp) -> Self {
        SharedTrunk { net, frozen: false }
    }

    pub fn embedding_dim(&self) -> usize {
        self.net.output_width()
    }

    pub fn embed(&self, obs: &Observation) -> Result<Vec<f64>> {
        self.net.predict(&obs.features())
    }

    pub fn hash(&self) -> String {
        network_hash(&self.net)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new("trunk")
            .with_network("trunk", &self.net)
            .with_meta("frozen", self.frozen)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("trunk")?;
        Ok(SharedTrunk {
            net: ck.network("trunk")?.clone(),
            frozen: ck.meta("frozen")?,
        })
    }
}

fn head_input(embedding: &[f64], goal: &[f64; 2]) -> Vec<f64> {
    let mut x = Vec::with_capacity(embedding.len() + 2);
    x.extend_from_slice(embedding);
    x.extend_from_slice(goal);
    x
}

/// Small head on `embedding ++ goal`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalHead {
    pub net: Mlp,
    pub scale: ActionScale,
    /// Hash of the trunk this head was trained against.
    pub trunk_hash: String,
}

impl LocalHead {
    pub fn act(&self, embedding: &[f64], goal: &[f64; 2]) -> Result<Action> {
        let y = self.net.predict(&head_input(embedding, goal))?;
        Ok(self.scale.decode(&y))
    }

    pub fn parameter_count(&self) -> usize {
        self.net.parameter_count()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new("local")
            .with_network("head", &self.net)
            .with_meta("scale", self.scale)
            .with_meta("trunk_hash", &self.trunk_hash)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("local")?;
        Ok(LocalHead {
            net: ck.network("head")?.clone(),
            scale: ck.meta("scale")?,
            trunk_hash: ck.meta("trunk_hash")?,
        })
    }
}

/// Deep continuation of the embedding, merged with the goal before the output layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudHead {
    pub body: Mlp,
    pub merge: Mlp,
    pub scale: ActionScale,
    pub trunk_hash: String,
}

impl CloudHead {
    pub fn act(&self, embedding: &[f64], goal: &[f64; 2]) -> Result<Action> {
        let h = self.body.predict(embedding)?;
        let y = self.merge.predict(&head_input(&h, goal))?;
        Ok(self.scale.decode(&y))
    }

    pub fn parameter_count(&self) -> usize {
        self.body.parameter_count() + self.merge.parameter_count()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::new("cloud")
            .with_network("body", &self.body)
            .with_network("merge", &self.merge)
            .with_meta("scale", self.scale)
            .with_meta("trunk_hash", &self.trunk_hash)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        ck.expect_kind("cloud")?;
        let head = CloudHead {
            body: ck.network("body")?.clone(),
            merge: ck.network("merge")?.clone(),
            scale: ck.meta("scale")?,
            trunk_hash: ck.meta("trunk_hash")?,
        };
        if head.merge.input_width() != head.body.output_width() + 2 {
            return Err(Error::shape(head.body.output_width() + 2, head.merge.input_width()));
        }
        Ok(head)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::MAX_SPEED;

    const SCALE: ActionScale = ActionScale { d_m: 0.3, m_v: MAX_SPEED };

    #[test]
    fn preset_capacity_ordering() {
        let p = PolicyPreset::default();
        let (body, merge) = p.cloud_specs();
        assert!(p.local_spec().parameter_count() < body.parameter_count() + merge.parameter_count());
        assert_eq!(p.trunk_spec(19).layer_widths, vec![19, 64, 32]);
        assert_eq!(p.local_spec().layer_widths, vec![34, 32, 2]);
        assert_eq!(merge.layer_widths, vec![130, 64, 2]);
    }

    #[test]
    fn zero_trunk_zero_embedding() {
        let trunk = SharedTrunk::new(Mlp::zeros(PolicyPreset::default().trunk_spec(19)).unwrap());
        let obs = Observation { rays: vec![0.4; 16], goal: [0.1, -0.2], speed_norm: 0.5 };
        assert_eq!(trunk.embed(&obs).unwrap(), vec![0.0; 32]);
    }

    #[test]
    fn zero_local_head_goes_straight_at_half_speed() {
        let head = LocalHead {
            net: Mlp::zeros(PolicyPreset::default().local_spec()).unwrap(),
            scale: SCALE,
            trunk_hash: String::new(),
        };
        let a = head.act(&[0.3; 32], &[0.5, 0.5]).unwrap();
        assert_eq!(a.d, 0.0);
        assert_eq!(a.v, 0.75);
    }

    #[test]
    fn decode_is_clamped_and_inverts_encode() {
        let a = SCALE.decode(&[5.0, -3.0]);
        assert_eq!((a.d, a.v), (0.3, 0.0));
        let b = Action::new(-0.1, 1.2);
        let back = SCALE.decode(&SCALE.encode(&b));
        assert!((back.d - b.d).abs() < 1e-15 && (back.v - b.v).abs() < 1e-15);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let p = PolicyPreset::default();
        let (body, merge) = p.cloud_specs();
        let cloud = CloudHead {
            body: Mlp::init(body, 1).unwrap(),
            merge: Mlp::init(merge, 2).unwrap(),
            scale: SCALE,
            trunk_hash: "abc".into(),
        };
        let ck = Checkpoint::from_json(&cloud.to_checkpoint().to_json().unwrap()).unwrap();
        assert_eq!(CloudHead::from_checkpoint(&ck).unwrap(), cloud);
        assert!(LocalHead::from_checkpoint(&ck).is_err());
    }
}
