//! One scenario run: simulation, analysis and report text.

use std::path::Path;

use crate::analysis::{averaging_residuals, convergence_metrics, design_report, AnalysisReport, QUADRATURE_NODES};
use crate::error::{Error, Result};
use crate::game::{nash_equilibrium, pseudo_gradient_matrix};
use crate::output::{render_report, write_run, ReportInput, RunFiles, RunStatus};
use crate::scenario::Scenario;
use crate::sim::{simulate_partial, SimTrace};

#[derive(Debug)]
pub struct RunOutcome {
    pub trace: SimTrace<f64>,
    pub theta_star: Vec<f64>,
    pub analysis: AnalysisReport<f64>,
    /// Divergence of the simulation, if any. The trace stops at the last
    /// finite step.
    pub failure: Option<Error>,
    pub report: String,
}

pub fn run_scenario(sc: &Scenario) -> Result<RunOutcome> {
    let theta_star = nash_equilibrium(&pseudo_gradient_matrix(&sc.game))?;
    let mut analysis = design_report(&sc.game, sc.trigger.gains(), sc.trigger.sigmas())?;
    analysis.averaging = Some(averaging_residuals(&sc.game, &sc.dither, &theta_star, QUADRATURE_NODES)?);
    let (trace, failure) = simulate_partial(&sc.game, &sc.dither, &sc.trigger, &sc.sim)?;
    analysis.convergence = convergence_metrics(&trace, &theta_star).ok();
    let status = match &failure {
        None => RunStatus::Completed,
        Some(e) => RunStatus::Diverged(e.to_string()),
    };
    let warnings: Vec<String> = sc.warnings.iter().map(ToString::to_string).collect();
    let report = render_report(&ReportInput {
        scenario: &sc.name,
        trace: &trace,
        theta_star: &theta_star,
        analysis: &analysis,
        status: &status,
        warnings: &warnings,
    });
    Ok(RunOutcome { trace, theta_star, analysis, failure, report })
}

/// Runs and writes the trace, events and report files. Files are written
/// even when the run diverged; the divergence is then returned as the error.
pub fn run_to_dir(sc: &Scenario, dir: &Path) -> Result<(RunFiles, RunOutcome)> {
    let outcome = run_scenario(sc)?;
    let stem = format!("{}.{}", sc.name, sc.sim.mode.as_str());
    let files = RunFiles::new(dir, &stem);
    write_run(&files, &outcome.trace, &outcome.report)?;
    Ok((files, outcome))
}
