//! Denormalized MPJPE, counterfactual emotion perturbation, and gate reports.

mod counterfactual;
mod gate;
mod mpjpe;

pub use counterfactual::{
    counterfactual_delta, sensitivity_csv, sensitivity_sweep, window_seed, PerturbationConfig, SensitivityResult,
};
pub use gate::{gate_report, GateReport, ACTIVE_GATE_THRESHOLD};
pub use mpjpe::{evaluate, mpjpe, EvalSummary};
