//! Reproducible Monte Carlo experiment harness.
//!
//! Each replicate draws its data from an independent ChaCha stream split off
//! the master seed, so a run is a pure function of its config: repeating it
//! with a different worker count produces byte-identical reports. Replicate
//! failures (solver non-convergence, singular submatrices) are recorded as
//! non-recoveries rather than dropped, so rates carry no survivorship bias.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_lasso, AdaptiveConfig};
use crate::conditions::{
    event_t, event_x, irrepresentable_margin, sign_recovery_certificate, weighted_incoherence,
};
use crate::model::{diff_against_truth, Constants, Estimate, RegressionProblem, WeightVector};
use crate::solver::{solve_weighted_lasso, SolverConfig};
use crate::synth::{
    gen_problem_with_rng, gen_random_design_with_rng, stream_rng, CovarianceSpec, SignalSpec,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PlainLasso,
    AdaptiveLasso,
    /// Initial Lasso followed by keeping the s largest magnitudes, where s
    /// is the true sparsity (an oracle baseline).
    ThresholdedLassoOracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PlainLasso => "plain_lasso",
            Method::AdaptiveLasso => "adaptive_lasso",
            Method::ThresholdedLassoOracle => "thresholded_lasso_oracle",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub covariance: CovarianceSpec,
    pub n: usize,
    pub p: usize,
    pub signal: SignalSpec,
    pub sigma_eps: f64,
}

/// Pipeline knobs forwarded to [`AdaptiveConfig`] (constants come from the
/// experiment level).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveOptions {
    pub lambda_init: Option<f64>,
    pub lambda_n: Option<f64>,
    pub lambda_n_position: f64,
    pub k_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    N,
    BetaMin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub adaptive: AdaptiveOptions,
    /// Grid for the plain-Lasso best-case mode; when present, a plain-Lasso
    /// replicate counts as exact if any grid point recovers exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    /// Keep per-replicate detail rows in the result.
    #[serde(default)]
    pub detail: bool,
    /// Optional one-parameter sweep (used by the simulate CLI).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one method is required".into(),
            ));
        }
        if self.scenario.p != self.scenario.covariance.p {
            return Err(Error::InvalidArgument(format!(
                "scenario p = {} disagrees with covariance p = {}",
                self.scenario.p, self.scenario.covariance.p
            )));
        }
        if self.scenario.signal.s > self.scenario.p {
            return Err(Error::InvalidArgument("signal sparsity exceeds p".into()));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() {
                return Err(Error::InvalidArgument(
                    "lambda_grid must not be empty".into(),
                ));
            }
        }
        self.constants.clone().validated()?;
        Ok(())
    }

    fn adaptive_config(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            constants: self.constants.clone(),
            lambda_init: self.adaptive.lambda_init,
            lambda_n: self.adaptive.lambda_n,
            lambda_n_position: self.adaptive.lambda_n_position,
            k_override: self.adaptive.k_override,
            ..AdaptiveConfig::default()
        }
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub support_exact: bool,
    pub signs_exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_error: Option<f64>,
    /// Certificate fields (adaptive runs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_predicts: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_decisive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_agrees: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub per_method: BTreeMap<String, ReplicateOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_t: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_x: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irrepresentable_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_incoherence_ok: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MethodSummary {
    pub exact_support_rate: f64,
    pub exact_sign_rate: f64,
    /// Mean errors over replicates that produced an estimate.
    pub mean_l1_error: f64,
    pub mean_l2_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_agreement_rate: Option<f64>,
    pub certificate_decisive_count: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub event_t_rate: f64,
    pub event_x_rate: f64,
    pub mean_r_n: f64,
    pub mean_irrepresentable_norm: f64,
    pub irrepresentable_holds_rate: f64,
    /// Fraction of replicates where the exact per-coordinate weighted
    /// incoherence condition holds at the realized adaptive weights.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_incoherence_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub replicates: usize,
    pub per_method: BTreeMap<String, MethodSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_summary: Option<ConditionSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_replicate: Option<Vec<ReplicateRow>>,
    /// Volatile timing; stripped from canonical reports so that reruns are
    /// byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl ExperimentResult {
    /// The result with volatile fields removed; this is what gets written.
    pub fn canonical(&self) -> ExperimentResult {
        let mut out = self.clone();
        out.wall_time_secs = None;
        out
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(&self.canonical())?;
        text.push('\n');
        Ok(text)
    }
}

fn method_estimate(
    method: Method,
    problem: &RegressionProblem,
    config: &ExperimentConfig,
) -> Result<(Estimate, Option<(WeightVector, f64)>)> {
    match method {
        Method::PlainLasso => {
            let lambda = plain_lambda(problem, config)?;
            let solver = SolverConfig::new(lambda, WeightVector::unit(problem.p()))
                .with_tol(config.constants.tol)
                .with_max_iter(config.constants.max_iter);
            Ok((solve_weighted_lasso(problem, &solver)?, None))
        }
        Method::AdaptiveLasso => {
            let trace = adaptive_lasso(problem, &config.adaptive_config())?;
            let aux = Some((trace.weights.clone(), trace.lambda_n_used));
            Ok((trace.final_estimate, aux))
        }
        Method::ThresholdedLassoOracle => {
            let truth = problem.truth.as_ref().ok_or(Error::MissingTruth)?;
            let init = crate::adaptive::fit_initial(problem, &config.adaptive_config())?;
            let mut order: Vec<usize> = (0..problem.p()).collect();
            order.sort_by(|&a, &b| {
                init.beta_init[b]
                    .abs()
                    .partial_cmp(&init.beta_init[a].abs())
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut beta = Array1::zeros(problem.p());
            for &j in order.iter().take(truth.s) {
                beta[j] = init.beta_init[j];
            }
            Ok((
                Estimate::from_beta(beta, f64::NAN, init.iterations, init.converged),
                None,
            ))
        }
    }
}

fn plain_lambda(problem: &RegressionProblem, config: &ExperimentConfig) -> Result<f64> {
    if let Some(lambda) = config.adaptive.lambda_init {
        return Ok(lambda);
    }
    let sigma = problem.sigma()?;
    let (n, p) = (problem.n() as f64, problem.p() as f64);
    Ok(config.constants.b * config.constants.c0 * sigma * (p.ln() / n).sqrt())
}

/// Regenerates the exact dataset replicate `replicate` draws inside
/// [`run_experiment`]: one ChaCha stream per replicate, design first, then
/// signal and noise.
pub fn replicate_problem(config: &ExperimentConfig, replicate: usize) -> Result<RegressionProblem> {
    let mut rng = stream_rng(config.master_seed, replicate as u64);
    let x = gen_random_design_with_rng(&config.scenario.covariance, config.scenario.n, &mut rng)?;
    gen_problem_with_rng(
        &x,
        &config.scenario.signal,
        config.scenario.sigma_eps,
        &mut rng,
    )
}

fn run_replicate(config: &ExperimentConfig, replicate: usize) -> ReplicateRow {
    let mut row = ReplicateRow {
        replicate,
        per_method: BTreeMap::new(),
        event_t: None,
        event_x: None,
        r_n: None,
        irrepresentable_norm: None,
        weighted_incoherence_ok: None,
    };

    let problem = match replicate_problem(config, replicate) {
        Ok(problem) => problem,
        Err(e) => {
            for &method in &config.methods {
                row.per_method.insert(
                    method.name().to_string(),
                    ReplicateOutcome {
                        error: Some(e.to_string()),
                        ..Default::default()
                    },
                );
            }
            return row;
        }
    };
    let truth = problem
        .truth
        .clone()
        .expect("generated problems carry truth");

    // Design-condition diagnostics at the realized draw.
    if let Ok(eps) = problem.realized_noise() {
        if let Ok(ev) = event_t(
            problem.x.view(),
            &eps,
            config.scenario.sigma_eps,
            config.constants.c0,
        ) {
            row.event_t = Some(ev.holds);
        }
    }
    if let Ok(sigma_matrix) = config.scenario.covariance.build() {
        if let Ok(ev) = event_x(problem.x.view(), sigma_matrix.view(), config.constants.c2) {
            row.event_x = Some(ev.holds);
        }
    }
    if !truth.support.is_empty() {
        if let Ok(check) =
            irrepresentable_margin(problem.x.view(), &truth.support, config.constants.eta)
        {
            row.r_n = Some(check.norm);
            row.irrepresentable_norm = Some(check.norm);
        }
    }

    for &method in &config.methods {
        let outcome = run_method(method, &problem, config, &mut row);
        row.per_method.insert(method.name().to_string(), outcome);
    }
    row
}

fn run_method(
    method: Method,
    problem: &RegressionProblem,
    config: &ExperimentConfig,
    row: &mut ReplicateRow,
) -> ReplicateOutcome {
    let truth = problem
        .truth
        .as_ref()
        .expect("generated problems carry truth");

    // Best-over-grid mode for the plain Lasso: most favorable to the
    // baseline, a replicate succeeds if any grid point succeeds.
    if method == Method::PlainLasso {
        if let Some(grid) = &config.lambda_grid {
            let mut any_support = false;
            let mut any_signs = false;
            let mut best_l2: Option<f64> = None;
            let mut best_l1: Option<f64> = None;
            let mut first_error = None;
            for &lambda in grid {
                let solver = SolverConfig::new(lambda, WeightVector::unit(problem.p()))
                    .with_tol(config.constants.tol)
                    .with_max_iter(config.constants.max_iter);
                match solve_weighted_lasso(problem, &solver) {
                    Ok(est) => {
                        let diff = diff_against_truth(&est, truth).expect("lengths match");
                        any_support |= diff.support_exact;
                        any_signs |= diff.signs_exact;
                        let l2 = l2_error(&est, truth);
                        if best_l2.is_none_or(|b| l2 < b) {
                            best_l2 = Some(l2);
                            best_l1 = Some(l1_error(&est, truth));
                        }
                    }
                    Err(e) => {
                        if first_error.is_none() {
                            first_error = Some(e.to_string());
                        }
                    }
                }
            }
            return ReplicateOutcome {
                support_exact: any_support,
                signs_exact: any_signs,
                l1_error: best_l1,
                l2_error: best_l2,
                error: first_error,
                ..Default::default()
            };
        }
    }

    match method_estimate(method, problem, config) {
        Ok((estimate, adaptive_aux)) => {
            let diff = diff_against_truth(&estimate, truth).expect("lengths match");
            let mut outcome = ReplicateOutcome {
                support_exact: diff.support_exact,
                signs_exact: diff.signs_exact,
                l1_error: Some(l1_error(&estimate, truth)),
                l2_error: Some(l2_error(&estimate, truth)),
                ..Default::default()
            };
            if let Some((weights, lambda_n)) = adaptive_aux {
                attach_certificate(
                    problem,
                    &weights,
                    lambda_n,
                    config,
                    diff.signs_exact,
                    &mut outcome,
                    row,
                );
            }
            outcome
        }
        Err(e) => ReplicateOutcome {
            error: Some(e.to_string()),
            ..Default::default()
        },
    }
}

fn attach_certificate(
    problem: &RegressionProblem,
    weights: &WeightVector,
    lambda_n: f64,
    config: &ExperimentConfig,
    signs_exact: bool,
    outcome: &mut ReplicateOutcome,
    row: &mut ReplicateRow,
) {
    let truth = problem
        .truth
        .as_ref()
        .expect("generated problems carry truth");
    let band = 10.0 * config.constants.tol;

    // An infinite weight inside the true support pins a signal coordinate at
    // zero: no sign-consistent solution can exist.
    let excluded_signal = truth.support.iter().any(|&j| !weights.get(j).is_finite());
    let (predicts, decisive) = if excluded_signal {
        (false, true)
    } else {
        match sign_recovery_certificate(problem, lambda_n, weights) {
            Ok(cert) => {
                let min_margin = cert.condition_a.margin.min(cert.condition_b.margin);
                let decisive = if cert.predicts_recovery {
                    cert.condition_a.margin > band && cert.condition_b.margin > band
                } else {
                    min_margin < -band
                };
                (cert.predicts_recovery, decisive)
            }
            Err(_) => return,
        }
    };
    outcome.certificate_predicts = Some(predicts);
    outcome.certificate_decisive = Some(decisive);
    if decisive {
        outcome.certificate_agrees = Some(predicts == signs_exact);
    }

    if !truth.support.is_empty() && !excluded_signal {
        let signs = truth.signs_on_support();
        if let Ok(check) = weighted_incoherence(
            problem.x.view(),
            &truth.support,
            weights,
            &signs,
            config.constants.eta,
        ) {
            row.weighted_incoherence_ok = Some(check.all_per_j_ok);
        }
    }
}

fn l1_error(estimate: &Estimate, truth: &crate::model::TrueModel) -> f64 {
    estimate
        .beta_hat
        .iter()
        .zip(truth.beta_star.iter())
        .map(|(a, b)| (a - b).abs())
        .sum()
}

fn l2_error(estimate: &Estimate, truth: &crate::model::TrueModel) -> f64 {
    estimate
        .beta_hat
        .iter()
        .zip(truth.beta_star.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Runs every replicate (in parallel over an order-preserving index range)
/// and aggregates in replicate order, so the result is a pure function of
/// the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.check()?;
    let start = Instant::now();
    let rows: Vec<ReplicateRow> = (0..config.replicates)
        .into_par_iter()
        .map(|rep| run_replicate(config, rep))
        .collect();

    let mut per_method = BTreeMap::new();
    for &method in &config.methods {
        let name = method.name().to_string();
        let mut summary = MethodSummary::default();
        let mut l1_sum = 0.0;
        let mut l2_sum = 0.0;
        let mut estimated = 0usize;
        let mut support_hits = 0usize;
        let mut sign_hits = 0usize;
        let mut agreements = 0usize;
        let mut decisive = 0usize;
        for row in &rows {
            let outcome = &row.per_method[&name];
            if outcome.error.is_some() {
                summary.failures += 1;
            }
            if outcome.support_exact {
                support_hits += 1;
            }
            if outcome.signs_exact {
                sign_hits += 1;
            }
            if let (Some(l1), Some(l2)) = (outcome.l1_error, outcome.l2_error) {
                l1_sum += l1;
                l2_sum += l2;
                estimated += 1;
            }
            if outcome.certificate_decisive == Some(true) {
                decisive += 1;
                if outcome.certificate_agrees == Some(true) {
                    agreements += 1;
                }
            }
        }
        let total = config.replicates as f64;
        summary.exact_support_rate = support_hits as f64 / total;
        summary.exact_sign_rate = sign_hits as f64 / total;
        summary.mean_l1_error = if estimated > 0 {
            l1_sum / estimated as f64
        } else {
            f64::NAN
        };
        summary.mean_l2_error = if estimated > 0 {
            l2_sum / estimated as f64
        } else {
            f64::NAN
        };
        summary.certificate_decisive_count = decisive;
        summary.certificate_agreement_rate = if decisive > 0 {
            Some(agreements as f64 / decisive as f64)
        } else {
            None
        };
        per_method.insert(name, summary);
    }

    let condition_summary = aggregate_conditions(&rows);

    let result = ExperimentResult {
        replicates: config.replicates,
        per_method,
        condition_summary,
        per_replicate: if config.detail { Some(rows) } else { None },
        wall_time_secs: Some(start.elapsed().as_secs_f64()),
    };
    Ok(result)
}

fn aggregate_conditions(rows: &[ReplicateRow]) -> Option<ConditionSummary> {
    let mut event_t_hits = 0usize;
    let mut event_t_total = 0usize;
    let mut event_x_hits = 0usize;
    let mut event_x_total = 0usize;
    let mut r_n_sum = 0.0;
    let mut r_n_total = 0usize;
    let mut irr_holds = 0usize;
    let mut weighted_hits = 0usize;
    let mut weighted_total = 0usize;
    for row in rows {
        if let Some(t) = row.event_t {
            event_t_total += 1;
            if t {
                event_t_hits += 1;
            }
        }
        if let Some(x) = row.event_x {
            event_x_total += 1;
            if x {
                event_x_hits += 1;
            }
        }
        if let Some(r) = row.r_n {
            r_n_total += 1;
            r_n_sum += r;
            if r <= 1.0 {
                irr_holds += 1;
            }
        }
        if let Some(ok) = row.weighted_incoherence_ok {
            weighted_total += 1;
            if ok {
                weighted_hits += 1;
            }
        }
    }
    if event_t_total == 0 && event_x_total == 0 && r_n_total == 0 {
        return None;
    }
    Some(ConditionSummary {
        event_t_rate: if event_t_total > 0 {
            event_t_hits as f64 / event_t_total as f64
        } else {
            f64::NAN
        },
        event_x_rate: if event_x_total > 0 {
            event_x_hits as f64 / event_x_total as f64
        } else {
            f64::NAN
        },
        mean_r_n: if r_n_total > 0 {
            r_n_sum / r_n_total as f64
        } else {
            f64::NAN
        },
        mean_irrepresentable_norm: if r_n_total > 0 {
            r_n_sum / r_n_total as f64
        } else {
            f64::NAN
        },
        irrepresentable_holds_rate: if r_n_total > 0 {
            irr_holds as f64 / r_n_total as f64
        } else {
            f64::NAN
        },
        weighted_incoherence_rate: if weighted_total > 0 {
            Some(weighted_hits as f64 / weighted_total as f64)
        } else {
            None
        },
    })
}

/// Plain-vs-adaptive comparison with the plain Lasso at its most favorable
/// grid point per replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub plain_best_rate: f64,
    pub adaptive_rate: f64,
    pub mean_irrepresentable_norm: f64,
    pub irrepresentable_holds_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_incoherence_rate: Option<f64>,
    pub explanation: String,
    pub result: ExperimentResult,
}

pub fn compare_methods(config: &ExperimentConfig) -> Result<ComparisonReport> {
    if config.lambda_grid.as_ref().is_none_or(|g| g.is_empty()) {
        return Err(Error::InvalidArgument(
            "compare_methods needs a nonempty lambda_grid for the plain baseline".into(),
        ));
    }
    let mut config = config.clone();
    config.methods = vec![Method::PlainLasso, Method::AdaptiveLasso];
    let result = run_experiment(&config)?;
    let plain = result.per_method[Method::PlainLasso.name()].exact_support_rate;
    let adaptive = result.per_method[Method::AdaptiveLasso.name()].exact_support_rate;
    let summary = result.condition_summary.clone().unwrap_or_default();
    let explanation = format!(
        "plain Lasso best-over-grid exact-support rate {plain:.3} vs adaptive {adaptive:.3}; \
         mean irrepresentable norm {:.3} (holds in {:.1}% of replicates), \
         weighted incoherence with realized adaptive weights holds in {}",
        summary.mean_irrepresentable_norm,
        100.0 * summary.irrepresentable_holds_rate,
        summary
            .weighted_incoherence_rate
            .map_or("n/a".to_string(), |r| format!(
                "{:.1}% of replicates",
                100.0 * r
            )),
    );
    Ok(ComparisonReport {
        plain_best_rate: plain,
        adaptive_rate: adaptive,
        mean_irrepresentable_norm: summary.mean_irrepresentable_norm,
        irrepresentable_holds_rate: summary.irrepresentable_holds_rate,
        weighted_incoherence_rate: summary.weighted_incoherence_rate,
        explanation,
        result,
    })
}

/// Runs the experiment once per sweep value, mutating the swept parameter.
pub fn run_sweep(
    config: &ExperimentConfig,
    sweep: &SweepSpec,
) -> Result<Vec<(f64, ExperimentResult)>> {
    let mut points = Vec::new();
    for &value in &sweep.values {
        let mut point_config = config.clone();
        point_config.sweep = None;
        match sweep.parameter {
            SweepParameter::N => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "sweep over n needs positive integers, got {value}"
                    )));
                }
                point_config.scenario.n = value as usize;
            }
            SweepParameter::BetaMin => {
                point_config.scenario.signal.beta_min = value;
            }
        }
        let result = run_experiment(&point_config)?;
        points.push((value, result));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Plotdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// Writes the result in the requested format and returns the paths created.
///
/// `json` is the canonical full result (volatile timing stripped), `csv` is
/// one row per replicate (requires a detail run), and `plotdata` is a
/// two-column n-vs-rate file per method for external plotting.
pub fn emit_report(
    result: &ExperimentResult,
    scenario_n: usize,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    match format {
        ReportFormat::Json => {
            let path = out_dir.join("report.json");
            std::fs::write(&path, result.to_canonical_json()?)?;
            Ok(vec![path])
        }
        ReportFormat::Csv => {
            let rows = result.per_replicate.as_ref().ok_or_else(|| {
                Error::InvalidArgument("csv output needs a detail run (per-replicate rows)".into())
            })?;
            let path = out_dir.join("replicates.csv");
            std::fs::write(&path, replicate_csv(rows))?;
            Ok(vec![path])
        }
        ReportFormat::Plotdata => {
            let points = [(scenario_n as f64, result.clone())];
            emit_plotdata("n", &points, out_dir)
        }
    }
}

/// Two-column (x, exact-support rate) CSV per method, for sweep outputs.
pub fn emit_plotdata(
    x_name: &str,
    points: &[(f64, ExperimentResult)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut methods: Vec<String> = Vec::new();
    for (_, result) in points {
        for name in result.per_method.keys() {
            if !methods.contains(name) {
                methods.push(name.clone());
            }
        }
    }
    let mut paths = Vec::new();
    for method in methods {
        let path = out_dir.join(format!("rate_vs_{x_name}_{method}.csv"));
        let mut body = format!("{x_name},exact_support_rate\n");
        for (x, result) in points {
            if let Some(summary) = result.per_method.get(&method) {
                body.push_str(&format!("{x},{}\n", summary.exact_support_rate));
            }
        }
        std::fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}

fn csv_bool(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

fn csv_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn replicate_csv(rows: &[ReplicateRow]) -> String {
    let mut methods: Vec<String> = Vec::new();
    for row in rows {
        for name in row.per_method.keys() {
            if !methods.contains(name) {
                methods.push(name.clone());
            }
        }
    }
    let mut header = String::from("replicate,event_t,event_x,r_n,weighted_incoherence_ok");
    for m in &methods {
        header.push_str(&format!(
            ",{m}_support_exact,{m}_signs_exact,{m}_l1_error,{m}_l2_error,{m}_error"
        ));
    }
    let mut out = header;
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{}",
            row.replicate,
            csv_bool(row.event_t),
            csv_bool(row.event_x),
            csv_f64(row.r_n),
            csv_bool(row.weighted_incoherence_ok)
        ));
        for m in &methods {
            match row.per_method.get(m) {
                Some(o) => out.push_str(&format!(
                    ",{},{},{},{},{}",
                    if o.support_exact { 1 } else { 0 },
                    if o.signs_exact { 1 } else { 0 },
                    csv_f64(o.l1_error),
                    csv_f64(o.l2_error),
                    o.error.as_deref().unwrap_or("").replace(',', ";"),
                )),
                None => out.push_str(",,,,,"),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Magnitude, SignPattern, SupportPlacement};

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario {
                covariance: CovarianceSpec::identity(12),
                n: 60,
                p: 12,
                signal: SignalSpec {
                    s: 2,
                    beta_min: 1.5,
                    magnitude: Magnitude::Fixed,
                    sign_pattern: SignPattern::Random,
                    support_placement: SupportPlacement::Random,
                },
                sigma_eps: 0.3,
            },
            methods: vec![
                Method::PlainLasso,
                Method::AdaptiveLasso,
                Method::ThresholdedLassoOracle,
            ],
            replicates: 16,
            master_seed: 42,
            constants: Constants::default(),
            adaptive: AdaptiveOptions::default(),
            lambda_grid: None,
            detail: true,
            sweep: None,
        }
    }

    #[test]
    fn same_seed_same_result() {
        let config = small_config();
        let a = run_experiment(&config)
            .unwrap()
            .to_canonical_json()
            .unwrap();
        let b = run_experiment(&config)
            .unwrap()
            .to_canonical_json()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_exactness_implies_support_exactness() {
        let result = run_experiment(&small_config()).unwrap();
        for row in result.per_replicate.as_ref().unwrap() {
            for outcome in row.per_method.values() {
                if outcome.signs_exact {
                    assert!(outcome.support_exact);
                }
            }
        }
        for summary in result.per_method.values() {
            assert!(summary.exact_sign_rate <= summary.exact_support_rate + 1e-12);
        }
    }

    #[test]
    fn noiseless_orthogonal_scenario_recovers() {
        let mut config = small_config();
        config.scenario.sigma_eps = 0.0;
        config.replicates = 1;
        config.methods = vec![Method::AdaptiveLasso];
        // Noiseless runs need an explicit initial penalty.
        config.adaptive.lambda_init = Some(0.05);
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.per_method["adaptive_lasso"].exact_support_rate, 1.0);
    }

    #[test]
    fn null_model_mostly_selects_nothing() {
        let mut config = small_config();
        // Zero support: the empty-support outcome counts as exact.
        config.scenario.signal.s = 0;
        config.scenario.signal.beta_min = 1.0;
        config.methods = vec![Method::AdaptiveLasso];
        config.replicates = 40;
        let result = run_experiment(&config).unwrap();
        assert!(
            result.per_method["adaptive_lasso"].exact_support_rate >= 0.95,
            "null-model rate {}",
            result.per_method["adaptive_lasso"].exact_support_rate
        );
    }

    #[test]
    fn report_round_trip_and_csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config();
        let result = run_experiment(&config).unwrap();

        let paths =
            emit_report(&result, config.scenario.n, ReportFormat::Json, dir.path()).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let back: ExperimentResult = serde_json::from_str(&text).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&result.canonical()).unwrap()
        );

        let paths = emit_report(&result, config.scenario.n, ReportFormat::Csv, dir.path()).unwrap();
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        // Header plus one line per replicate.
        assert_eq!(csv.lines().count(), config.replicates + 1);
    }

    #[test]
    fn sweep_emits_monotone_x_plotdata() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config();
        config.replicates = 4;
        config.methods = vec![Method::AdaptiveLasso];
        let sweep = SweepSpec {
            parameter: SweepParameter::N,
            values: vec![30.0, 60.0, 90.0, 120.0],
        };
        let points = run_sweep(&config, &sweep).unwrap();
        assert_eq!(points.len(), 4);
        let paths = emit_plotdata("n", &points, dir.path()).unwrap();
        let body = std::fs::read_to_string(&paths[0]).unwrap();
        let xs: Vec<f64> = body
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse::<f64>().unwrap())
            .collect();
        assert_eq!(xs, vec![30.0, 60.0, 90.0, 120.0]);
    }

    #[test]
    fn comparison_sanity_on_identity_design() {
        let mut config = small_config();
        config.scenario.sigma_eps = 0.1;
        config.scenario.signal.beta_min = 3.0;
        config.replicates = 40;
        config.lambda_grid = Some(vec![0.01, 0.03, 0.1, 0.3, 0.6]);
        let report = compare_methods(&config).unwrap();
        // A well-conditioned identity design is easy for both methods.
        assert!(
            report.plain_best_rate >= 0.9,
            "plain rate {}",
            report.plain_best_rate
        );
        assert!(
            report.adaptive_rate >= 0.9,
            "adaptive rate {}",
            report.adaptive_rate
        );
    }

    #[test]
    fn zero_only_grid_gives_dense_ols_and_zero_rate() {
        let mut config = small_config();
        config.methods = vec![Method::PlainLasso];
        config.lambda_grid = Some(vec![0.0]);
        config.replicates = 8;
        let result = run_experiment(&config).unwrap();
        assert_eq!(result.per_method["plain_lasso"].exact_support_rate, 0.0);
    }

    #[test]
    fn config_errors_are_reported() {
        let mut config = small_config();
        config.replicates = 0;
        assert!(run_experiment(&config).is_err());

        let mut config = small_config();
        config.scenario.p = 13;
        assert!(run_experiment(&config).is_err());

        let mut config = small_config();
        config.lambda_grid = Some(vec![]);
        assert!(compare_methods(&config).is_err());
    }
}
