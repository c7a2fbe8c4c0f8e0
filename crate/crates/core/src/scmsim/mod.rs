//! Structural causal models: exact binary models over an ADMG and
//! Gaussian threshold models for sampling studies.

mod discrete;
mod harness;
mod threshold;

pub use discrete::DiscreteScm;
pub use harness::{ground_truth, parse_scenarios, run_scenarios, Scenario, ScenarioResult, SimConfig, SimReport};
pub use threshold::{rct_sample, Context, McOracle, RctDesign, RctSize, Sampler, Scm, StreamKey, Threshold};
