//! Synthetic designs, covariance families, sparse signals, and Gaussian
//! graphical samples with known ground truth.
//!
//! Every generator is a pure function of its spec and a seed. Parallel
//! replicates draw from independent ChaCha streams split off one master seed
//! (see [`stream_rng`]), so results are bitwise reproducible regardless of
//! the worker count.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::ggm::PrecisionModel;
use crate::linalg;
use crate::model::{RegressionProblem, TrueModel};
use crate::{Error, Result};

/// Counter-based stream splitting: replicate `stream` of master seed `master`
/// draws from its own ChaCha stream, independent of all other replicates.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Covariance families for random designs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceKind {
    Identity,
    /// Unit diagonal, constant off-diagonal correlation.
    Equicorrelation {
        rho: f64,
    },
    /// Sigma_ij = rho^|i-j|.
    Toeplitz {
        rho: f64,
    },
    /// Inverse of the tridiagonal precision with unit diagonal and
    /// off-diagonal `a`, rescaled to unit variances.
    TridiagonalPrecision {
        a: f64,
    },
    Custom {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    #[serde(flatten)]
    pub kind: CovarianceKind,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn identity(p: usize) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Identity,
            p,
        }
    }

    pub fn equicorrelation(p: usize, rho: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Equicorrelation { rho },
            p,
        }
    }

    pub fn toeplitz(p: usize, rho: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::Toeplitz { rho },
            p,
        }
    }

    pub fn tridiagonal_precision(p: usize, a: f64) -> Self {
        CovarianceSpec {
            kind: CovarianceKind::TridiagonalPrecision { a },
            p,
        }
    }

    pub fn custom(matrix: Array2<f64>) -> Self {
        let p = matrix.nrows();
        let rows = matrix.rows().into_iter().map(|r| r.to_vec()).collect();
        CovarianceSpec {
            kind: CovarianceKind::Custom { matrix: rows },
            p,
        }
    }

    /// Materializes the covariance matrix and checks it is symmetric,
    /// positive-definite, and unit-diagonal (rescaling when necessary).
    pub fn build(&self) -> Result<Array2<f64>> {
        let p = self.p;
        if p == 0 {
            return Err(Error::InvalidArgument(
                "covariance dimension p must be positive".into(),
            ));
        }
        let sigma = match &self.kind {
            CovarianceKind::Identity => Array2::eye(p),
            CovarianceKind::Equicorrelation { rho } => {
                Array2::from_shape_fn((p, p), |(i, j)| if i == j { 1.0 } else { *rho })
            }
            CovarianceKind::Toeplitz { rho } => {
                Array2::from_shape_fn((p, p), |(i, j)| rho.powi((i as i32 - j as i32).abs()))
            }
            CovarianceKind::TridiagonalPrecision { a } => {
                let q = Array2::from_shape_fn((p, p), |(i, j)| {
                    if i == j {
                        1.0
                    } else if i.abs_diff(j) == 1 {
                        *a
                    } else {
                        0.0
                    }
                });
                let sigma =
                    linalg::solve_spd_multi(q.view(), Array2::eye(p).view()).map_err(|_| {
                        Error::Construction("tridiagonal precision is not positive-definite".into())
                    })?;
                unit_diagonal_rescale(&sigma)
            }
            CovarianceKind::Custom { matrix } => {
                if matrix.len() != p || matrix.iter().any(|r| r.len() != p) {
                    return Err(Error::Construction("custom covariance is not p x p".into()));
                }
                let raw = Array2::from_shape_fn((p, p), |(i, j)| matrix[i][j]);
                unit_diagonal_rescale(&raw)
            }
        };
        validate_covariance(&sigma)?;
        Ok(sigma)
    }
}

fn unit_diagonal_rescale(sigma: &Array2<f64>) -> Array2<f64> {
    let p = sigma.nrows();
    let scale: Vec<f64> = (0..p).map(|j| sigma[[j, j]].sqrt()).collect();
    Array2::from_shape_fn((p, p), |(i, j)| sigma[[i, j]] / (scale[i] * scale[j]))
}

fn validate_covariance(sigma: &Array2<f64>) -> Result<()> {
    let p = sigma.nrows();
    for i in 0..p {
        if (sigma[[i, i]] - 1.0).abs() > 1e-12 {
            return Err(Error::Construction(format!(
                "covariance diagonal entry {i} is {} after rescaling",
                sigma[[i, i]]
            )));
        }
        for j in (i + 1)..p {
            if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-12 {
                return Err(Error::Construction(format!(
                    "covariance is asymmetric at ({i},{j})"
                )));
            }
        }
    }
    let min_eig = linalg::min_eig_sym(sigma.view());
    if min_eig <= 0.0 {
        return Err(Error::Construction(format!(
            "covariance is not positive-definite (min eigenvalue {min_eig:e})"
        )));
    }
    Ok(())
}

/// How the true sparse coefficient vector is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    /// Every nonzero coefficient has magnitude exactly beta_min.
    Fixed,
    /// Magnitudes drawn uniformly from [beta_min, b_max].
    Uniform { b_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    Random,
    AllPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportPlacement {
    Random,
    FirstS,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub s: usize,
    pub beta_min: f64,
    pub magnitude: Magnitude,
    pub sign_pattern: SignPattern,
    pub support_placement: SupportPlacement,
}

impl SignalSpec {
    /// Fixed-magnitude signal on a random support with random signs.
    pub fn fixed(s: usize, beta_min: f64) -> Self {
        SignalSpec {
            s,
            beta_min,
            magnitude: Magnitude::Fixed,
            sign_pattern: SignPattern::Random,
            support_placement: SupportPlacement::Random,
        }
    }
}

/// Draws an n x p design with i.i.d. N(0, Sigma) rows via the symmetric
/// square root of Sigma.
pub fn gen_random_design(spec: &CovarianceSpec, n: usize, seed: u64) -> Result<Array2<f64>> {
    gen_random_design_with_rng(spec, n, &mut stream_rng(seed, 0))
}

pub fn gen_random_design_with_rng(
    spec: &CovarianceSpec,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let sigma = spec.build()?;
    let root = linalg::sqrt_spd(sigma.view())?;
    let z = standard_normal_matrix(n, spec.p, rng);
    Ok(z.dot(&root))
}

fn standard_normal_matrix(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::zeros((n, p));
    for i in 0..n {
        for j in 0..p {
            m[[i, j]] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Builds y = X·beta + eps for a generated sparse signal and attaches the
/// ground truth to the problem.
pub fn gen_problem(
    design: &Array2<f64>,
    signal: &SignalSpec,
    sigma_eps: f64,
    seed: u64,
) -> Result<RegressionProblem> {
    gen_problem_with_rng(design, signal, sigma_eps, &mut stream_rng(seed, 0))
}

pub fn gen_problem_with_rng(
    design: &Array2<f64>,
    signal: &SignalSpec,
    sigma_eps: f64,
    rng: &mut ChaCha8Rng,
) -> Result<RegressionProblem> {
    let (n, p) = (design.nrows(), design.ncols());
    if signal.s > p {
        return Err(Error::InvalidArgument(format!(
            "sparsity s = {} exceeds dimension p = {p}",
            signal.s
        )));
    }
    if signal.beta_min.is_nan() || signal.beta_min <= 0.0 {
        return Err(Error::InvalidArgument("beta_min must be positive".into()));
    }
    if sigma_eps < 0.0 {
        return Err(Error::InvalidArgument(
            "sigma_eps must be nonnegative".into(),
        ));
    }

    let support: Vec<usize> = match signal.support_placement {
        SupportPlacement::FirstS => (0..signal.s).collect(),
        SupportPlacement::Random => {
            let mut idx: Vec<usize> = (0..p).collect();
            // Partial Fisher-Yates: the first s entries form the sample.
            for i in 0..signal.s {
                let j = rng.random_range(i..p);
                idx.swap(i, j);
            }
            let mut chosen = idx[..signal.s].to_vec();
            chosen.sort_unstable();
            chosen
        }
    };

    let mut beta = Array1::zeros(p);
    for &j in &support {
        let magnitude = match &signal.magnitude {
            Magnitude::Fixed => signal.beta_min,
            Magnitude::Uniform { b_max } => {
                if *b_max < signal.beta_min {
                    return Err(Error::InvalidArgument(
                        "uniform magnitude needs b_max >= beta_min".into(),
                    ));
                }
                rng.sample(
                    Uniform::new_inclusive(signal.beta_min, *b_max)
                        .map_err(|e| Error::InvalidArgument(format!("bad magnitude range: {e}")))?,
                )
            }
        };
        let sign = match signal.sign_pattern {
            SignPattern::AllPositive => 1.0,
            SignPattern::Random => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        beta[j] = sign * magnitude;
    }

    let noise = if sigma_eps > 0.0 {
        let dist = Normal::new(0.0, sigma_eps)
            .map_err(|e| Error::InvalidArgument(format!("bad noise level: {e}")))?;
        Array1::from_shape_fn(n, |_| rng.sample(dist))
    } else {
        Array1::zeros(n)
    };
    let y = design.dot(&beta) + &noise;

    Ok(RegressionProblem::new(design.clone(), y)
        .with_sigma(sigma_eps)
        .with_truth(TrueModel::new(beta)))
}

/// Draws n i.i.d. samples from the Gaussian graphical model with the given
/// precision matrix, rescaled so the implied covariance has unit diagonal.
/// Returns the samples together with the rescaled model (same edge set).
pub fn gen_ggm_samples(
    precision: &PrecisionModel,
    n: usize,
    seed: u64,
) -> Result<(Array2<f64>, PrecisionModel)> {
    gen_ggm_samples_with_rng(precision, n, &mut stream_rng(seed, 0))
}

pub fn gen_ggm_samples_with_rng(
    precision: &PrecisionModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Array2<f64>, PrecisionModel)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let rescaled = precision.rescaled_to_unit_variances()?;
    let sigma = rescaled.covariance()?;
    let root = linalg::sqrt_spd(sigma.view())?;
    let z = standard_normal_matrix(n, precision.p(), rng);
    Ok((z.dot(&root), rescaled))
}

/// Orthonormal-scaled design: X = sqrt(n)·Q with QᵀQ = I, so XᵀX/n = I
/// exactly (up to roundoff). Requires n ≥ p.
pub fn gen_orthonormal_design(n: usize, p: usize, seed: u64) -> Result<Array2<f64>> {
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "orthonormal-scaled design needs n >= p, got n = {n}, p = {p}"
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let z = standard_normal_matrix(n, p, &mut rng);
    let qr = linalg::to_na(z.view()).qr();
    let q = qr.q();
    let scale = (n as f64).sqrt();
    Ok(Array2::from_shape_fn((n, p), |(i, j)| q[(i, j)] * scale))
}

/// A covariance on which the irrepresentable condition fails for the first
/// `s` coordinates while the matrix stays positive-definite: one extra
/// variable is loaded with correlation `rho` on each of the s (mutually
/// independent) support variables, giving an incoherence row norm of s·rho.
///
/// Feasible only for 1/s < rho < 1/sqrt(s), which requires s ≥ 2. Both the
/// violation and positive-definiteness are verified on the constructed
/// matrix; construction fails loudly otherwise.
pub fn irrepresentable_violating_design(p: usize, s: usize, rho: f64) -> Result<CovarianceSpec> {
    if s < 2 {
        return Err(Error::Construction(
            "s = 1 cannot violate the incoherence row norm with a correlation below 1".into(),
        ));
    }
    if p < s + 1 {
        return Err(Error::Construction(format!(
            "need p >= s + 1, got p = {p}, s = {s}"
        )));
    }
    let mut sigma = Array2::eye(p);
    for i in 0..s {
        sigma[[i, s]] = rho;
        sigma[[s, i]] = rho;
    }
    let spec = CovarianceSpec::custom(sigma.clone());

    // Verify the two defining properties before handing the spec out.
    let support: Vec<usize> = (0..s).collect();
    let norm = crate::conditions::r_n_from_gram(sigma.view(), &support)?;
    if norm <= 1.0 {
        return Err(Error::Construction(format!(
            "construction is not incoherence-violating: row norm {norm:.4} <= 1 (rho too small?)"
        )));
    }
    let min_eig = linalg::min_eig_sym(sigma.view());
    if min_eig <= 0.0 {
        return Err(Error::Construction(format!(
            "construction lost positive-definiteness (min eigenvalue {min_eig:e}; rho too large?)"
        )));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_design_gram_concentrates() {
        let spec = CovarianceSpec::identity(5);
        let x = gen_random_design(&spec, 10_000, 1).unwrap();
        let gram = x.t().dot(&x) / 10_000.0;
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[[i, j]] - expect).abs() < 0.05,
                    "gram[{i},{j}] = {}",
                    gram[[i, j]]
                );
            }
        }
    }

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let spec = CovarianceSpec::toeplitz(6, 0.4);
        let a = gen_random_design(&spec, 50, 9).unwrap();
        let b = gen_random_design(&spec, 50, 9).unwrap();
        assert_eq!(a, b);

        let signal = SignalSpec::fixed(2, 1.0);
        let p1 = gen_problem(&a, &signal, 0.3, 4).unwrap();
        let p2 = gen_problem(&a, &signal, 0.3, 4).unwrap();
        assert_eq!(p1.y, p2.y);
        assert_eq!(p1.truth.unwrap().beta_star, p2.truth.unwrap().beta_star);

        let model =
            crate::ggm::PrecisionModel::new(CovarianceSpec::identity(4).build().unwrap()).unwrap();
        let (s1, _) = gen_ggm_samples(&model, 30, 11).unwrap();
        let (s2, _) = gen_ggm_samples(&model, 30, 11).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn equicorrelation_rejects_non_pd() {
        let p = 5;
        let rho = -1.0 / (p as f64 - 1.0) - 1e-3;
        let spec = CovarianceSpec::equicorrelation(p, rho);
        assert!(spec.build().is_err());
        assert!(CovarianceSpec::equicorrelation(p, 0.3).build().is_ok());
    }

    #[test]
    fn noiseless_problem_reproduces_the_signal_exactly() {
        let spec = CovarianceSpec::identity(4);
        let x = gen_random_design(&spec, 20, 2).unwrap();
        let signal = SignalSpec {
            s: 2,
            beta_min: 0.7,
            magnitude: Magnitude::Fixed,
            sign_pattern: SignPattern::AllPositive,
            support_placement: SupportPlacement::FirstS,
        };
        let problem = gen_problem(&x, &signal, 0.0, 3).unwrap();
        let truth = problem.truth.as_ref().unwrap();
        assert_eq!(truth.beta_star.to_vec(), vec![0.7, 0.7, 0.0, 0.0]);
        assert_eq!(problem.y, x.dot(&truth.beta_star));
    }

    #[test]
    fn noise_variance_concentrates() {
        let spec = CovarianceSpec::identity(2);
        let x = gen_random_design(&spec, 10_000, 5).unwrap();
        let signal = SignalSpec::fixed(1, 1.0);
        let sigma = 0.8;
        let problem = gen_problem(&x, &signal, sigma, 6).unwrap();
        let eps = problem.realized_noise().unwrap();
        let mean_sq = eps.mapv(|e| e * e).sum() / eps.len() as f64;
        assert!(
            (mean_sq - sigma * sigma).abs() < 0.05 * sigma * sigma,
            "empirical noise variance {mean_sq}"
        );
    }

    #[test]
    fn orthonormal_design_has_identity_gram() {
        let x = gen_orthonormal_design(40, 7, 11).unwrap();
        let gram = x.t().dot(&x) / 40.0;
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[[i, j]], expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn violating_design_feasibility_window() {
        let spec = irrepresentable_violating_design(10, 3, 0.55).unwrap();
        let sigma = spec.build().unwrap();
        let row_norm: f64 = (0..3).map(|i| sigma[[3, i]].abs()).sum();
        assert_abs_diff_eq!(row_norm, 1.65, epsilon = 1e-12);

        assert!(irrepresentable_violating_design(10, 3, 0.1).is_err());
        assert!(irrepresentable_violating_design(10, 1, 0.9).is_err());
        assert!(irrepresentable_violating_design(10, 3, 0.6).is_err());
    }

    #[test]
    fn covariance_families_are_unit_diagonal_and_pd() {
        for spec in [
            CovarianceSpec::identity(8),
            CovarianceSpec::equicorrelation(8, 0.3),
            CovarianceSpec::toeplitz(8, -0.6),
            CovarianceSpec::tridiagonal_precision(8, 0.3),
        ] {
            let sigma = spec.build().unwrap();
            for j in 0..8 {
                assert_abs_diff_eq!(sigma[[j, j]], 1.0, epsilon = 1e-12);
            }
            assert!(crate::linalg::min_eig_sym(sigma.view()) > 0.0);
        }
    }
}
