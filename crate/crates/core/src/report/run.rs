//! Dispatch of a validated run configuration.

use crate::error::{Error, Result};
use crate::lr::{pvalue_bound, simulate_trials, uniform_experiment, StrengthResult};
use crate::photonic::{chsh_value, max_chsh, DetectionModel, OutcomeSpace, SignMap};
use crate::search::{cold_strength, optimize_settings, trace_curve, Trace};

use super::config::{Command, RunConfig};
use super::table::{angle, bits, trace_table, Table};

/// What a run produced: a table for the main output and, for boundary
/// commands, the underlying trace.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub trace: Option<Trace>,
}

fn settings_columns(name: &str, extra: &[&str]) -> Table {
    let mut columns = vec![name, "A_1", "A_2", "B_1", "B_2", "eta"];
    columns.extend_from_slice(extra);
    Table::new(&columns)
}

fn settings_cells(config: &RunConfig, result: &StrengthResult, eta: f64) -> Vec<String> {
    let mut cells = vec![angle(config.family.parameter())];
    cells.extend(result.settings.polars().map(angle));
    cells.push(eta.to_string());
    cells
}

fn required(value: Option<f64>, key: &str) -> Result<f64> {
    value.ok_or_else(|| Error::Config {
        key: key.into(),
        message: "missing required key".into(),
    })
}

/// Runs the configured command.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let state = config.family.build()?;
    let search = &config.search;
    let strength_at = |eta: f64| -> Result<StrengthResult> {
        match &config.settings {
            Some(s) => cold_strength(&state, config.kind, s, eta, search),
            None => {
                Ok(optimize_settings(&state, DetectionModel::new(config.kind, eta)?, search)?.best)
            }
        }
    };
    let name = config.family.parameter_name();
    match config.command {
        Command::Strength | Command::Optimize => {
            let eta = required(config.eta, "eta")?;
            let result = if config.command == Command::Optimize {
                optimize_settings(&state, DetectionModel::new(config.kind, eta)?, search)?.best
            } else {
                strength_at(eta)?
            };
            let mut table = settings_columns(name, &["S", "S_raw", "gap"]);
            let mut cells = settings_cells(config, &result, eta);
            cells.extend([bits(result.strength), bits(result.raw), bits(result.gap)]);
            table.push(cells);
            Ok(RunOutput { table, trace: None })
        }
        Command::EtaMin | Command::EtaForStrength | Command::Trace => {
            let grid = match config.command {
                Command::Trace => config.grid.clone(),
                _ => vec![config.family.parameter()],
            };
            let target = match config.command {
                Command::EtaMin => 0.0,
                _ => config.target_s.unwrap_or(0.0),
            };
            let trace = trace_curve(config.family, config.kind, &grid, target, search)?;
            Ok(RunOutput {
                table: trace_table(&trace),
                trace: Some(trace),
            })
        }
        Command::Simulate => {
            let eta = required(config.eta, "eta")?;
            let result = strength_at(eta)?;
            let model = DetectionModel::new(config.kind, eta)?;
            let q = uniform_experiment(&state, &result.settings, model)?;
            let summary =
                simulate_trials(&q, &result.lr_model.prediction, config.trials, search.seed)?;
            let z = (summary.mean_llr - result.raw) / summary.std_error;
            let mut table = settings_columns(
                name,
                &[
                    "S",
                    "trials",
                    "mean_llr",
                    "std_error",
                    "z",
                    "exponent",
                    "pvalue_bound",
                ],
            );
            let mut cells = settings_cells(config, &result, eta);
            cells.extend([
                bits(result.raw),
                summary.trials.to_string(),
                bits(summary.mean_llr),
                bits(summary.std_error),
                format!("{z:.4}"),
                bits(summary.exponent()),
                bits(pvalue_bound(result.strength, config.trials)),
            ]);
            table.push(cells);
            Ok(RunOutput { table, trace: None })
        }
        Command::Chsh => {
            let eta = required(config.eta, "eta")?;
            let result = strength_at(eta)?;
            let model = DetectionModel::new(config.kind, eta)?;
            let q = uniform_experiment(&state, &result.settings, model)?;
            let signs = SignMap::reflected_only(OutcomeSpace::new(config.kind));
            let chsh = chsh_value(&q, &signs, &signs)?;
            let best = max_chsh(&q)?;
            let mut table = settings_columns(name, &["CHSH", "CHSH_max", "S"]);
            let mut cells = settings_cells(config, &result, eta);
            cells.extend([
                format!("{chsh:.6}"),
                format!("{best:.6}"),
                bits(result.strength),
            ]);
            table.push(cells);
            Ok(RunOutput { table, trace: None })
        }
    }
}
