//! Config-driven experiment runner behind the `geo` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use config::ExperimentConfig;
use error::CliError;
use experiments::Outcome;

/// Runs the configured experiment and writes its summary and curves.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let outcome = experiments::run(config)?;
    output::write_summary(&config.output.summary, &outcome.summary)?;
    if let Some(path) = &config.output.curves {
        output::write_curves(path, &outcome.curves)?;
    }
    Ok(outcome)
}
