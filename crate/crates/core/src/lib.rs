//! Brown-energy minimisation for video-on-demand delivery from cloud data
//! centres over an IP-over-WDM core, or from fog data centres at the access
//! edge that may run on solar power with battery storage.
//!
//! The crate is organised bottom-up: [`netmodel`] (topology, paths, device
//! power), [`timeseries`] (hourly demand and irradiance), [`energy`] (PV and
//! battery), [`milp`] (formulation and LP files), [`solver`] (simplex and
//! branch-and-bound) and [`scenarios`] (parameter sweeps and reports).

pub mod config;
pub mod energy;
pub mod error;
pub mod milp;
pub mod netmodel;
pub mod scenarios;
pub mod solver;
pub mod timeseries;

pub use config::Config;
pub use energy::{EsdConfig, PvConfig};
pub use error::{Error, Result};
pub use milp::{build_problem, DeliveryMode, FogcacheModel, MilpProblem, ModelInputs, ScenarioFlags};
pub use netmodel::{build_nsfnet, shortest_paths, NodeId, PathTable, PowerConfig, Topology};
pub use solver::{enumerate_oracle, solve_lp, solve_mip, Solution, SolverOptions, Status};
pub use timeseries::HourlyTraces;
