//! Gaussian actor-critic parameters for the black-box bidding strategy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{orthogonal_init, Activation, GradientSet, Mlp};
use crate::error::{Error, Result};
use crate::market::ObservationLayout;
use crate::seeding;

/// Number of action coordinates: buy volume, buy price, sell volume and
/// sell price offsets for each of the 24 hours.
pub const ACTION_DIM: usize = 96;

pub const POLICY_FORMAT: &str = "dayahead-policy";
pub const POLICY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyArch {
    pub net_arch: Vec<usize>,
    pub log_std_init: f64,
    pub hidden_gain: f64,
    pub policy_gain: f64,
    pub value_gain: f64,
}

impl Default for PolicyArch {
    fn default() -> Self {
        Self {
            net_arch: vec![200],
            log_std_init: -1.0,
            hidden_gain: 1.0,
            policy_gain: 0.01,
            value_gain: 1.0,
        }
    }
}

/// Actor mean network, state-independent log standard deviations and the
/// critic. The observation normalization travels with the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
    pub layout: ObservationLayout,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    format: String,
    version: u32,
    policy: PolicyParams,
}

/// Gradients matching [`PolicyParams`].
#[derive(Clone, Debug)]
pub struct PolicyGrads {
    pub actor: GradientSet,
    pub log_std: Vec<f64>,
    pub critic: GradientSet,
}

impl PolicyGrads {
    pub fn zeros_like(p: &PolicyParams) -> Self {
        Self {
            actor: GradientSet::zeros_like(&p.actor),
            log_std: vec![0.0; p.log_std.len()],
            critic: GradientSet::zeros_like(&p.critic),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.actor.tensors();
        t.push(&self.log_std);
        t.extend(self.critic.tensors());
        t
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        self.actor.scale(k);
        self.critic.scale(k);
        self.log_std.iter_mut().for_each(|x| *x *= k);
    }
}

impl PolicyParams {
    pub fn new(layout: ObservationLayout, arch: &PolicyArch, seed: u64) -> Self {
        let input = layout.len();
        let mut sizes = vec![input];
        sizes.extend(&arch.net_arch);
        let mut actor_sizes = sizes.clone();
        actor_sizes.push(ACTION_DIM);
        let mut critic_sizes = sizes;
        critic_sizes.push(1);
        let mut actor = Mlp::new(&actor_sizes, Activation::Tanh);
        let mut critic = Mlp::new(&critic_sizes, Activation::Tanh);
        let hidden = arch.net_arch.len();
        let mut gains = vec![arch.hidden_gain; hidden];
        gains.push(arch.policy_gain);
        orthogonal_init(&mut actor, seeding::derive(seed, "actor"), &gains);
        gains[hidden] = arch.value_gain;
        orthogonal_init(&mut critic, seeding::derive(seed, "critic"), &gains);
        Self {
            actor,
            log_std: vec![arch.log_std_init; ACTION_DIM],
            critic,
            layout,
        }
    }

    pub fn input_size(&self) -> usize {
        self.actor.input_size()
    }

    pub fn mean_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.actor.forward(obs)
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.critic.forward(obs)?[0])
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.actor.tensors_mut();
        t.push(&mut self.log_std);
        t.extend(self.critic.tensors_mut());
        t
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic.is_finite()
            && self.log_std.iter().all(|v| v.is_finite())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&PolicyFile {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            policy: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: PolicyFile = serde_json::from_str(s)?;
        if f.format != POLICY_FORMAT || f.version != POLICY_VERSION {
            return Err(Error::Schema(format!(
                "unsupported policy file {} v{}",
                f.format, f.version
            )));
        }
        let p = f.policy;
        if p.actor.output_size() != ACTION_DIM
            || p.log_std.len() != ACTION_DIM
            || p.critic.output_size() != 1
            || p.actor.input_size() != p.layout.len()
            || p.critic.input_size() != p.layout.len()
        {
            return Err(Error::Schema("policy file has inconsistent shapes".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(w: bool) -> ObservationLayout {
        ObservationLayout {
            include_weather: w,
            price_scale: 231.5,
        }
    }

    #[test]
    fn shapes() {
        let p = PolicyParams::new(layout(true), &PolicyArch::default(), 1);
        assert_eq!(p.input_size(), 141);
        assert_eq!(p.actor.output_size(), 96);
        assert_eq!(p.log_std, vec![-1.0; 96]);
        assert_eq!(p.critic.output_size(), 1);
        let q = PolicyParams::new(layout(false), &PolicyArch::default(), 1);
        assert_eq!(q.input_size(), 69);
    }

    #[test]
    fn json_roundtrip_is_bit_identical() {
        let p = PolicyParams::new(layout(true), &PolicyArch::default(), 17);
        let back = PolicyParams::from_json(&p.to_json().unwrap()).unwrap();
        let x: Vec<f64> = (0..141).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = p.mean_action(&x).unwrap();
        let b = back.mean_action(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(PolicyParams::from_json(r#"{"format":"x","version":1,"policy":null}"#).is_err());
    }

    #[test]
    fn outputs_finite_on_bounded_inputs() {
        let p = PolicyParams::new(layout(true), &PolicyArch::default(), 2);
        let x: Vec<f64> = (0..141)
            .map(|i| if i % 2 == 0 { 10.0 } else { -10.0 })
            .collect();
        assert!(p.mean_action(&x).unwrap().iter().all(|v| v.is_finite()));
        assert!(p.value(&x).unwrap().is_finite());
    }
}
