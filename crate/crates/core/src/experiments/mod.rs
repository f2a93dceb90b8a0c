//! Twin experiments, error metrics and the scenario catalog.

pub mod catalog;
pub mod ic;
pub mod metrics;
pub mod twin;

pub use catalog::{base_config, find_scenario, scenario_catalog, CatalogEntry};
pub use ic::{InitialCondition, ShearParams};
pub use metrics::{fit_decay_rate, rrmse, DecayFit, RrmseRecord, RrmseSeries};
pub use twin::{
    reference_groups, run_forecast, run_forecasts, run_reference, run_twin, run_twins, ForecastResult,
    ReferenceRun, ScenarioConfig, Snapshot, TwinResult, DEFAULT_DECAY_WINDOW,
};
