//! Bidding strategies: the fixed-hours Timing rule, the per-hour
//! Opportunistic rule and the neural black-box policy.

mod blackbox;
mod opportunistic;
mod timing;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use blackbox::{
    blackbox_bids, gaussian_log_prob, sample_action, ActionMatrix, SampledAction, ACTION_LIMIT,
};
pub use opportunistic::{opportunistic_bids, OpportunisticParams};
pub use timing::{timing_bids, TimingParams, TIMING_BUY_HOURS, TIMING_SELL_HOURS};

use crate::error::{Error, Result};
use crate::market::{Bid, DecisionContext, Observation};
use crate::nn::PolicyParams;

/// Anything that can place a day's bids from the decision-time view.
pub trait BiddingStrategy: Sync {
    fn bids(&self, ctx: &DecisionContext, obs: &Observation) -> Result<Vec<Bid>>;
}

/// Places nothing; the prosumer only self-balances through the battery.
pub struct NoBids;

impl BiddingStrategy for NoBids {
    fn bids(&self, _: &DecisionContext, _: &Observation) -> Result<Vec<Bid>> {
        Ok(Vec::new())
    }
}

impl BiddingStrategy for TimingParams {
    fn bids(&self, ctx: &DecisionContext, _: &Observation) -> Result<Vec<Bid>> {
        Ok(timing_bids(self, ctx.est_level))
    }
}

impl BiddingStrategy for OpportunisticParams {
    fn bids(&self, ctx: &DecisionContext, _: &Observation) -> Result<Vec<Bid>> {
        Ok(opportunistic_bids(
            self,
            ctx.est_level,
            ctx.max_volume,
            &ctx.price_anchors,
        ))
    }
}

/// Deterministic policy: always plays the network's mean action.
impl BiddingStrategy for PolicyParams {
    fn bids(&self, ctx: &DecisionContext, obs: &Observation) -> Result<Vec<Bid>> {
        let mean = self.mean_action(obs.as_slice())?;
        Ok(blackbox_bids(
            &ActionMatrix::from_flat(&mean)?,
            ctx.max_volume,
            &ctx.price_anchors,
        ))
    }
}

/// Plays one fixed action every day; the all-zero action is the untrained
/// baseline for the black-box strategy.
pub struct ConstantAction(pub ActionMatrix);

impl BiddingStrategy for ConstantAction {
    fn bids(&self, ctx: &DecisionContext, _: &Observation) -> Result<Vec<Bid>> {
        Ok(blackbox_bids(&self.0, ctx.max_volume, &ctx.price_anchors))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Timing,
    Opportunistic,
    Blackbox,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::Timing => "timing",
            StrategyKind::Opportunistic => "opportunistic",
            StrategyKind::Blackbox => "blackbox",
        })
    }
}

/// Serialized strategy parameters. Black-box weights live in their own
/// policy file and are referenced by path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy_kind", rename_all = "snake_case")]
pub enum StrategyParams {
    Timing { params: Vec<f64> },
    Opportunistic { params: Vec<f64> },
    Blackbox { policy_file: String },
}

impl StrategyParams {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyParams::Timing { .. } => StrategyKind::Timing,
            StrategyParams::Opportunistic { .. } => StrategyKind::Opportunistic,
            StrategyParams::Blackbox { .. } => StrategyKind::Blackbox,
        }
    }

    /// Instantiate the strategy. Relative policy paths resolve against
    /// `base_dir`.
    pub fn instantiate(&self, base_dir: &Path) -> Result<Box<dyn BiddingStrategy>> {
        Ok(match self {
            StrategyParams::Timing { params } => {
                if params.len() != TimingParams::DIM {
                    return Err(Error::Dimension {
                        expected: TimingParams::DIM,
                        actual: params.len(),
                    });
                }
                Box::new(TimingParams::new(params[0], params[1])?)
            }
            StrategyParams::Opportunistic { params } => {
                Box::new(OpportunisticParams::new(params.clone())?)
            }
            StrategyParams::Blackbox { policy_file } => {
                Box::new(PolicyParams::load(base_dir.join(policy_file))?)
            }
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
