//! Participatory differential privacy for time-series releases: stakeholder
//! preferences choose ε via TOPSIS, the Laplace mechanism perturbs the data,
//! a ledger tracks budget spend and reports explain the outcome.

pub mod analysis;
pub mod api;
pub mod dataset;
pub mod dp;
pub mod explain;
pub mod mcda;
pub mod pipeline;
