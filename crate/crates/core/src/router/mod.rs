//! Learned local/cloud routing: history features, policy and value networks,
//! PPO, and the episode runner that executes routed decisions.

mod history;
mod nets;
mod ppo;
mod rollout;
mod train;

pub use history::{router_features, History, HistoryEntry, DEFAULT_HISTORY_LEN};
pub use nets::{DecideMode, Decision, RouterLearner, RouterNets};
pub use ppo::{
    clipped_surrogate, gae_advantages, normalize, ppo_update, PpoConfig, RolloutBuffer, Transition, UpdateMetrics,
};
pub use rollout::{run_episode, summary_from_trace, EpisodeOutput, EpisodeSetup, Router, Stack, TraceRecord};
pub use train::{
    derive_seed, evaluate_router, train_router, CurvePoint, RouterTrainResult, RouterTrainSetup, TrainCurve,
    EVAL_INTERVAL,
};
