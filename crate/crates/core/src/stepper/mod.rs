//! The minimizing-movements scheme: data fields, the ATW functional, globally
//! optimal steps by min-cut and flat flows.

mod energy;
mod fields;
mod flow;
mod hypotheses;

pub use energy::{atw_energy, DissipationDistance, EnergyBreakdown, Scheme, StepProblem};
pub use fields::{ContactAngleField, ForcingField, SpaceProfile, TimeProfile};
pub use hypotheses::{gmm_extract, validate_forcing, ForcingReport, GmmReport};
pub use flow::{minimize_step, run_flat_flow, FlatFlowState, StepRecord, StepResult, TRUNCATION_MARGIN};
