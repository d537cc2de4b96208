//! Training procedures: CMA-ES for the parametric strategies and A2C for
//! the black-box policy, plus the replay evaluation both rely on.

mod a2c;
mod cmaes;
mod evaluate;
mod gae;
mod sweep;

pub use a2c::{
    a2c_gradients, a2c_learn, a2c_train, A2cConfig, Environment, EvalRecord, MarketEpisodes,
    TrainingRun, UpdateStats,
};
pub use cmaes::{cmaes_optimize, default_population, Cmaes, CmaesConfig, CmaesResult, Generation};
pub use evaluate::{evaluate_strategy, simulate_strategy, Evaluation};
pub use gae::compute_gae;
pub use sweep::{battery_sweep, mean_std, SweepRow};
