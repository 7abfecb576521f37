//! Study harnesses, metrics and synthetic data.

pub mod cost;
pub mod metrics;
pub mod robustness;
pub mod runner;
pub mod steps;
pub mod synth;

pub use cost::{cost_benefit, round_sig_figs, CostBenefit, CostBenefitInput};
pub use metrics::{evaluate, MetricsReport};
pub use robustness::{rotation_robustness, RotationPlan, RotationReport, RotationRow};
pub use runner::{run_configuration, Forecast, RunOutcome, RunSetup};
pub use steps::*;
pub use synth::{group_spec, synth_generate, Coupling, GroundTruth, SynthOutput, SynthSpec};
