//! The two-stage adaptive Lasso pipeline.
//!
//! Stage one fits a standard Lasso at λ_init = B·c0·σ·√(log p / n) (or a
//! supplied override). Its coefficients define the adaptive weights
//! w_j = max(1/|β_init_j|, 1), with w_j = +inf for coordinates the initial
//! fit set to zero, and a thresholded support estimate
//! S̄ = { j : |β_init_j| > 4·λ_init }. The size of S̄ then scales the
//! admissible range for the second-stage penalty λ_n, and stage two solves
//! the weighted Lasso at the chosen λ_n.
//!
//! When S̄ comes back empty (or p − s̄ < 2, so log(p − s̄) is unusable), the
//! √s̄ factor collapses the admissible range to the single point zero: stage
//! two degenerates to an unpenalized refit on the coordinates the initial
//! fit kept, which preserves the stage-one support. The full trace records
//! everything either way.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::conditions::{re_constant, ReConfig};
use crate::model::{serde_array1, Constants, Estimate, RegressionProblem, WeightVector};
use crate::solver::{solve_weighted_lasso, SolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveConfig {
    pub constants: Constants,
    /// Overrides the λ_init formula when set.
    pub lambda_init: Option<f64>,
    /// Overrides the λ_n range selection when set.
    pub lambda_n: Option<f64>,
    /// Where in the admissible [lo, hi] range to place λ_n (0 = lo).
    pub lambda_n_position: f64,
    /// Plug-in K for the λ_n range; estimated from the design when absent.
    pub k_override: Option<f64>,
    /// Subset budget for the per-fit K estimate.
    pub re_max_subsets: usize,
    /// Random cone starts per subset for the per-fit K estimate.
    pub re_starts: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            constants: Constants::default(),
            lambda_init: None,
            lambda_n: None,
            lambda_n_position: 0.0,
            k_override: None,
            re_max_subsets: 24,
            re_starts: 2,
        }
    }
}

impl AdaptiveConfig {
    fn check(&self) -> Result<()> {
        self.constants.clone().validated()?;
        if !(0.0..=1.0).contains(&self.lambda_n_position) {
            return Err(Error::InvalidArgument(format!(
                "lambda_n_position must lie in [0,1], got {}",
                self.lambda_n_position
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialFit {
    #[serde(with = "serde_array1")]
    pub beta_init: Array1<f64>,
    pub lambda_init: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Admissible second-stage penalty interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
    /// Set when lo > hi, i.e. M < 4K/η makes the range empty.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveTrace {
    #[serde(with = "serde_array1")]
    pub beta_init: Array1<f64>,
    pub lambda_init_used: f64,
    pub weights: WeightVector,
    pub s_bar: usize,
    pub s_bar_set: Vec<usize>,
    pub lambda_n_range: LambdaRange,
    pub lambda_n_used: f64,
    /// K plugged into the range formula, when one was needed.
    pub k_used: Option<f64>,
    #[serde(rename = "final")]
    pub final_estimate: Estimate,
}

/// Stage one: standard Lasso at the formula (or supplied) penalty.
pub fn fit_initial(problem: &RegressionProblem, config: &AdaptiveConfig) -> Result<InitialFit> {
    config.check()?;
    let lambda_init = initial_penalty(problem, config)?;
    let solver_config = SolverConfig::new(lambda_init, WeightVector::unit(problem.p()))
        .with_tol(config.constants.tol)
        .with_max_iter(config.constants.max_iter);
    let estimate = solve_weighted_lasso(problem, &solver_config)?;
    Ok(InitialFit {
        beta_init: estimate.beta_hat,
        lambda_init,
        converged: estimate.converged,
        iterations: estimate.iterations,
    })
}

fn initial_penalty(problem: &RegressionProblem, config: &AdaptiveConfig) -> Result<f64> {
    if let Some(lambda) = config.lambda_init {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "supplied lambda_init must be positive, got {lambda}"
            )));
        }
        return Ok(lambda);
    }
    let sigma = problem.sigma()?;
    let (n, p) = (problem.n() as f64, problem.p() as f64);
    Ok(config.constants.b * config.constants.c0 * sigma * (p.ln() / n).sqrt())
}

/// Adaptive weights w_j = max(1/|β_init_j|, 1), with +inf for exact zeros.
pub fn compute_weights(beta_init: ArrayView1<'_, f64>) -> WeightVector {
    let w: Vec<f64> = beta_init
        .iter()
        .map(|&b| {
            if b == 0.0 {
                f64::INFINITY
            } else {
                (1.0 / b.abs()).max(1.0)
            }
        })
        .collect();
    WeightVector::new(w).expect("weights from the max(1/|b|,1) rule are always positive")
}

/// Thresholded support estimate S̄ = { j : |β_init_j| > 4·λ_init }, strict.
pub fn threshold_support(beta_init: ArrayView1<'_, f64>, lambda_init: f64) -> Result<Vec<usize>> {
    if lambda_init < 0.0 {
        return Err(Error::InvalidArgument(
            "lambda_init must be nonnegative".into(),
        ));
    }
    let cut = 4.0 * lambda_init;
    Ok(beta_init
        .iter()
        .enumerate()
        .filter(|(_, &b)| b.abs() > cut)
        .map(|(j, _)| j)
        .collect())
}

/// Admissible λ_n interval
/// [ (64·K²/η)·F , 16·M·K·F ] with F = c0·σ·λ_init·√s̄·√(2·log(p−s)/n).
///
/// The interval is empty (flagged degenerate) when M < 4K/η.
#[allow(clippy::too_many_arguments)]
pub fn lambda_n_range(
    s_bar: usize,
    k: f64,
    constants: &Constants,
    lambda_init: f64,
    sigma: f64,
    p: usize,
    n: usize,
    s_for_log: usize,
) -> Result<LambdaRange> {
    if s_bar == 0 {
        return Err(Error::InvalidArgument("s_bar must be at least 1".into()));
    }
    if k.is_nan() || k <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "K must be positive, got {k}"
        )));
    }
    if p < s_for_log + 2 {
        return Err(Error::InvalidArgument(format!(
            "need p - s >= 2 for log(p - s), got p = {p}, s = {s_for_log}"
        )));
    }
    if sigma < 0.0 || lambda_init < 0.0 {
        return Err(Error::InvalidArgument(
            "sigma and lambda_init must be nonnegative".into(),
        ));
    }
    let factor = constants.c0
        * sigma
        * lambda_init
        * (s_bar as f64).sqrt()
        * (2.0 * ((p - s_for_log) as f64).ln() / n as f64).sqrt();
    let lo = (64.0 * k * k / constants.eta) * factor;
    let hi = 16.0 * constants.m_mult * k * factor;
    Ok(LambdaRange {
        lo,
        hi,
        degenerate: lo > hi,
    })
}

/// Runs the full two-stage pipeline and returns the trace.
pub fn adaptive_lasso(
    problem: &RegressionProblem,
    config: &AdaptiveConfig,
) -> Result<AdaptiveTrace> {
    config.check()?;
    let (n, p) = (problem.n(), problem.p());
    let init = fit_initial(problem, config)?;
    let weights = compute_weights(init.beta_init.view());
    let s_bar_set = threshold_support(init.beta_init.view(), init.lambda_init)?;
    let s_bar = s_bar_set.len();

    let mut k_used = None;
    let mut range = LambdaRange {
        lo: 0.0,
        hi: 0.0,
        degenerate: false,
    };
    if s_bar >= 1 && p >= s_bar + 2 && config.lambda_n.is_none() {
        let sigma = problem.sigma()?;
        let k = match config.k_override {
            Some(k) => k,
            None => {
                // Assumption-style block size m = s̄ when it fits, otherwise
                // fall back to the m-free variant.
                let m = if 2 * s_bar <= p { s_bar } else { 0 };
                let mut cfg = ReConfig::budget(m, config.constants.k0);
                cfg.max_subsets = config.re_max_subsets;
                cfg.starts = config.re_starts;
                re_constant(problem.x.view(), s_bar, &cfg)?.value
            }
        };
        k_used = Some(k);
        range = lambda_n_range(
            s_bar,
            k,
            &config.constants,
            init.lambda_init,
            sigma,
            p,
            n,
            s_bar,
        )?;
    }

    let lambda_n_used = match config.lambda_n {
        Some(lambda) => lambda,
        None => {
            if range.degenerate {
                range.lo
            } else {
                range.lo + config.lambda_n_position * (range.hi - range.lo)
            }
        }
    };

    let solver_config = SolverConfig::new(lambda_n_used, weights.clone())
        .with_tol(config.constants.tol)
        .with_max_iter(config.constants.max_iter);
    let final_estimate = solve_weighted_lasso(problem, &solver_config)?;

    Ok(AdaptiveTrace {
        beta_init: init.beta_init,
        lambda_init_used: init.lambda_init,
        weights,
        s_bar,
        s_bar_set,
        lambda_n_range: range,
        lambda_n_used,
        k_used,
        final_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, Array2};

    fn problem_with_sigma(n: usize, p: usize, sigma: f64) -> RegressionProblem {
        let x = Array2::eye(n.max(p));
        let x = x.slice(ndarray::s![..n, ..p]).to_owned();
        RegressionProblem::new(x, Array1::zeros(n)).with_sigma(sigma)
    }

    use ndarray::Array1;

    #[test]
    fn initial_penalty_formula() {
        let problem = problem_with_sigma(100, 100, 1.0);
        let config = AdaptiveConfig::default();
        let fit = fit_initial(&problem, &config).unwrap();
        let expected = (24.0 * (100.0f64).ln() / 100.0).sqrt();
        assert_abs_diff_eq!(fit.lambda_init, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(fit.lambda_init, 1.0513, epsilon = 1e-3);
    }

    #[test]
    fn supplied_lambda_init_bypasses_formula() {
        // No sigma on the problem; the override must carry the stage.
        let x = Array2::eye(4);
        let problem = RegressionProblem::new(x, Array1::zeros(4));
        let config = AdaptiveConfig {
            lambda_init: Some(0.3),
            ..Default::default()
        };
        let fit = fit_initial(&problem, &config).unwrap();
        assert_eq!(fit.lambda_init, 0.3);

        let no_override = AdaptiveConfig::default();
        assert!(fit_initial(&problem, &no_override).is_err());
    }

    #[test]
    fn zero_response_fits_zero() {
        let problem = problem_with_sigma(6, 6, 0.5);
        let fit = fit_initial(&problem, &AdaptiveConfig::default()).unwrap();
        assert!(fit.beta_init.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn weight_rule_examples() {
        let w = compute_weights(arr1(&[2.0, 0.5]).view());
        assert_eq!(w.as_slice(), &[1.0, 2.0]);
        let w = compute_weights(arr1(&[1.0, 1.0]).view());
        assert_eq!(w.as_slice(), &[1.0, 1.0]);
        let w = compute_weights(arr1(&[0.1, 0.0]).view());
        assert_eq!(w.get(0), 10.0);
        assert!(!w.get(1).is_finite());
    }

    #[test]
    fn weight_rule_under_scaling() {
        // The max{·,1} clamp breaks scale equivariance; the literal rule is
        // w_j(c·β) = max(1/(c·|β_j|), 1).
        let beta = arr1(&[0.4, 2.0, -0.1]);
        for &c in &[0.5, 2.0, 10.0] {
            let scaled = beta.mapv(|b| c * b);
            let w = compute_weights(scaled.view());
            for j in 0..3 {
                let expected = (1.0 / (c * beta[j].abs())).max(1.0);
                assert_abs_diff_eq!(w.get(j), expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn threshold_is_strict() {
        let s = threshold_support(arr1(&[0.5, 0.3, 0.05]).view(), 0.1).unwrap();
        assert_eq!(s, vec![0]);
        let s = threshold_support(arr1(&[0.0, 0.0]).view(), 0.1).unwrap();
        assert!(s.is_empty());
        // Exactly at the boundary 4·λ_init: excluded.
        let s = threshold_support(arr1(&[0.4]).view(), 0.1).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn lambda_range_endpoints_and_degeneracy() {
        let constants = Constants {
            eta: 0.5,
            m_mult: 16.0,
            ..Default::default()
        };
        // lo/hi = (64K²/η)/(16MK) = 4K/(ηM); K=1, η=1/2, M=16 gives 1/2.
        let r = lambda_n_range(4, 1.0, &constants, 0.2, 1.0, 50, 100, 4).unwrap();
        assert!(!r.degenerate);
        assert_abs_diff_eq!(r.lo / r.hi, 0.5, epsilon = 1e-12);

        // M = 4K/η exactly collapses the range to one point.
        let k = 1.3;
        let constants = Constants {
            eta: 0.5,
            m_mult: 4.0 * k / 0.5,
            ..Default::default()
        };
        let r = lambda_n_range(4, k, &constants, 0.2, 1.0, 50, 100, 4).unwrap();
        assert_abs_diff_eq!(r.lo, r.hi, epsilon = 1e-12);
        assert!(!r.degenerate);

        // M below 4K/η flags an empty range. The constants themselves stay
        // admissible (M ≥ 4/η) because K > 1 is what breaks the window.
        let constants = Constants {
            eta: 0.5,
            m_mult: 8.0,
            ..Default::default()
        };
        let r = lambda_n_range(4, 2.0, &constants, 0.2, 1.0, 50, 100, 4).unwrap();
        assert!(r.degenerate);
        assert!(r.lo > r.hi);
    }

    #[test]
    fn noiseless_orthonormal_pipeline_recovers_single_signal() {
        let n = 24;
        let p = 6;
        let x = synth::gen_orthonormal_design(n, p, 77).unwrap();
        let mut beta = Array1::zeros(p);
        beta[0] = 5.0;
        let y = x.dot(&beta);
        let problem = RegressionProblem::new(x, y)
            .with_sigma(0.0)
            .with_truth(crate::model::TrueModel::new(beta));
        let config = AdaptiveConfig {
            lambda_init: Some(0.5),
            ..Default::default()
        };
        let trace = adaptive_lasso(&problem, &config).unwrap();

        // Stage one soft-thresholds the orthonormal correlations.
        assert_abs_diff_eq!(trace.beta_init[0], 4.5, epsilon = 1e-8);
        assert!(trace.beta_init.iter().skip(1).all(|&b| b == 0.0));
        assert_abs_diff_eq!(trace.weights.get(0), 1.0, epsilon = 1e-8);
        assert!(!trace.weights.get(1).is_finite());
        assert_eq!(trace.s_bar_set, vec![0]);

        // Noiseless: λ_n collapses to zero and stage two refits exactly.
        assert_eq!(trace.lambda_n_used, 0.0);
        assert_eq!(trace.final_estimate.support, vec![0]);
        assert_abs_diff_eq!(trace.final_estimate.beta_hat[0], 5.0, epsilon = 1e-8);
    }

    #[test]
    fn zero_response_pipeline_is_empty() {
        let problem = problem_with_sigma(10, 8, 1.0);
        let trace = adaptive_lasso(&problem, &AdaptiveConfig::default()).unwrap();
        assert!(trace.final_estimate.beta_hat.iter().all(|&b| b == 0.0));
        assert_eq!(trace.s_bar, 0);
        assert_eq!(trace.lambda_n_used, 0.0);
    }

    #[test]
    fn trace_stages_are_consistent_and_exclusions_propagate() {
        let spec = synth::CovarianceSpec::toeplitz(30, 0.4);
        let x = synth::gen_random_design(&spec, 60, 5).unwrap();
        let signal = synth::SignalSpec::fixed(3, 1.5);
        let problem = synth::gen_problem(&x, &signal, 0.4, 6).unwrap();
        let trace = adaptive_lasso(&problem, &AdaptiveConfig::default()).unwrap();

        let expected_weights = compute_weights(trace.beta_init.view());
        assert_eq!(trace.weights, expected_weights);
        let expected_sbar =
            threshold_support(trace.beta_init.view(), trace.lambda_init_used).unwrap();
        assert_eq!(trace.s_bar_set, expected_sbar);
        assert_eq!(trace.s_bar, trace.s_bar_set.len());
        if !trace.lambda_n_range.degenerate && trace.lambda_n_range.hi > 0.0 {
            assert!(trace.lambda_n_used >= trace.lambda_n_range.lo);
            assert!(trace.lambda_n_used <= trace.lambda_n_range.hi);
        }

        // Every coordinate the initial fit zeroed stays zero in the final.
        for j in 0..problem.p() {
            if trace.beta_init[j] == 0.0 {
                assert_eq!(trace.final_estimate.beta_hat[j], 0.0);
            }
        }
    }

    #[test]
    fn null_model_keeps_empty_support() {
        // β* = 0 with the formula penalty: the initial fit should come back
        // all-zero (hence an empty final support) in almost all replicates.
        let p = 100;
        let n = 100;
        let replicates = 1000;
        let spec = synth::CovarianceSpec::identity(p);
        let mut empty = 0usize;
        for rep in 0..replicates {
            let mut rng = synth::stream_rng(900, rep as u64);
            let x = synth::gen_random_design_with_rng(&spec, n, &mut rng).unwrap();
            let eps = Array1::from_shape_fn(n, |_| {
                rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
            });
            let problem = RegressionProblem::new(x, eps).with_sigma(1.0);
            let trace = adaptive_lasso(&problem, &AdaptiveConfig::default()).unwrap();
            if trace.final_estimate.support.is_empty() {
                empty += 1;
            }
        }
        let rate = empty as f64 / replicates as f64;
        assert!(rate >= 0.995, "empty-support rate {rate}");
    }
}
