//! TD3 training of the auxiliary network that picks a slimming factor or
//! sensor power levels from the FIFO, plus episode execution, reward,
//! discounted returns, curriculum and resource accounting.

mod curriculum;
mod episode;
mod eta;
mod policy;
mod replay;
mod reward;
mod td3;
pub mod toy;
mod train;

pub use curriculum::{curriculum_controller, CurriculumConfig};
pub use episode::{
    action_to_power, action_to_rho, run_episode, AuxPolicy, Controller, EpisodeConfig, EpisodeLog, Setting, StepRecord,
};
pub use eta::{compute_eta, round_percent, EtaSummary};
pub use policy::{ActorPolicy, ConstantPolicy, NoisyPolicy, UniformPolicy};
pub use replay::{ReplayBuffer, Transition};
pub use reward::{q_return, q_returns, random_walk_probe, reward, ProbeConfig, ProbeStats, RewardWeights};
pub use td3::{critic_targets, td3_update, td3_update_on, Td3Agent, Td3Config, UpdateStats};
pub use train::{
    action_dim, constraint_gate, evaluate_auxiliary, sample_tasks, train_auxiliary, AuxOutcome, AuxTrainConfig, AuxWorld,
    ConstraintConfig, GateReport, GateViolation, TrainRecord,
};
