//! Shared data model: regression problems, estimates, penalty weights, and
//! the global tuning constants.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Serialize an `Array1<f64>` as a plain JSON array.
pub(crate) mod serde_array1 {
    use ndarray::Array1;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Array1<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(a.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Array1<f64>, D::Error> {
        Vec::<f64>::deserialize(d).map(Array1::from_vec)
    }
}

/// A regression instance: design matrix, response, and (for synthetic or
/// diagnostic use) the noise level and the true coefficient vector.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    /// Design matrix, n rows (observations) by p columns (variables).
    pub x: Array2<f64>,
    /// Response vector of length n.
    pub y: Array1<f64>,
    /// Noise standard deviation, when known.
    pub sigma_eps: Option<f64>,
    /// Ground truth, when known.
    pub truth: Option<TrueModel>,
}

impl RegressionProblem {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Self {
        RegressionProblem {
            x,
            y,
            sigma_eps: None,
            truth: None,
        }
    }

    pub fn with_sigma(mut self, sigma_eps: f64) -> Self {
        self.sigma_eps = Some(sigma_eps);
        self
    }

    pub fn with_truth(mut self, truth: TrueModel) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Realized noise y − X·β*, available when the truth is known.
    pub fn realized_noise(&self) -> Result<Array1<f64>> {
        let truth = self.truth.as_ref().ok_or(Error::MissingTruth)?;
        if truth.beta_star.len() != self.p() || self.y.len() != self.n() {
            return Err(Error::DimensionMismatch(
                "truth/problem shapes differ".into(),
            ));
        }
        Ok(&self.y - &self.x.dot(&truth.beta_star))
    }

    pub fn sigma(&self) -> Result<f64> {
        self.sigma_eps.ok_or(Error::MissingSigma)
    }
}

/// Known true coefficients with their derived support summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrueModel {
    #[serde(with = "serde_array1")]
    pub beta_star: Array1<f64>,
    pub support: Vec<usize>,
    pub s: usize,
    /// Smallest nonzero magnitude; +inf when the support is empty.
    pub beta_min: f64,
}

impl TrueModel {
    /// Derives support, sparsity and the minimum signal magnitude from the
    /// coefficient vector.
    pub fn new(beta_star: Array1<f64>) -> Self {
        let support: Vec<usize> = beta_star
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect();
        let beta_min = support
            .iter()
            .map(|&j| beta_star[j].abs())
            .fold(f64::INFINITY, f64::min);
        let s = support.len();
        TrueModel {
            beta_star,
            support,
            s,
            beta_min,
        }
    }

    pub fn signs(&self) -> Vec<i8> {
        self.beta_star.iter().map(|&b| sign_of(b)).collect()
    }

    pub fn signs_on_support(&self) -> Vec<i8> {
        self.support
            .iter()
            .map(|&j| sign_of(self.beta_star[j]))
            .collect()
    }

    pub fn complement(&self, p: usize) -> Vec<usize> {
        let mut in_s = vec![false; p];
        for &j in &self.support {
            in_s[j] = true;
        }
        (0..p).filter(|&j| !in_s[j]).collect()
    }
}

pub(crate) fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Coefficient estimate with solver diagnostics. Support and signs are always
/// derived from `beta_hat`, so the stored views cannot drift out of sync.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(rename = "beta", with = "serde_array1")]
    pub beta_hat: Array1<f64>,
    pub support: Vec<usize>,
    pub signs: Vec<i8>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn from_beta(
        beta_hat: Array1<f64>,
        kkt_residual: f64,
        iterations: usize,
        converged: bool,
    ) -> Self {
        let support: Vec<usize> = beta_hat
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect();
        let signs = beta_hat.iter().map(|&b| sign_of(b)).collect();
        Estimate {
            beta_hat,
            support,
            signs,
            kkt_residual,
            iterations,
            converged,
        }
    }
}

/// Per-coordinate penalty weights in (0, +inf]. An infinite weight means the
/// coordinate is excluded from the program and forced to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        for (j, &v) in w.iter().enumerate() {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "weight at {j} must be in (0, +inf], got {v}"
                )));
            }
        }
        Ok(WeightVector { w })
    }

    pub fn unit(p: usize) -> Self {
        WeightVector { w: vec![1.0; p] }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.w[j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn all_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }

    /// Maximum weight over an index set. Errors if the set contains an
    /// excluded (infinite-weight) coordinate.
    pub fn max_over(&self, idx: &[usize]) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::InvalidArgument(
                "w_max over an empty index set".into(),
            ));
        }
        let mut m = 0.0f64;
        for &j in idx {
            let v = self.w[j];
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "w_max over a set containing the excluded coordinate {j}"
                )));
            }
            m = m.max(v);
        }
        Ok(m)
    }

    /// Minimum finite weight over an index set; +inf when every coordinate in
    /// the set is excluded (the associated constraints are vacuous).
    pub fn min_over(&self, idx: &[usize]) -> f64 {
        idx.iter()
            .map(|&j| self.w[j])
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }

    /// The vector b = (sgn(beta*_i)·w_i) over the support, used by the
    /// incoherence conditions and the sign-recovery certificate.
    pub fn signed_on(&self, support: &[usize], signs: &[i8]) -> Result<Vec<f64>> {
        if support.len() != signs.len() {
            return Err(Error::DimensionMismatch(
                "support/sign lengths differ".into(),
            ));
        }
        support
            .iter()
            .zip(signs)
            .map(|(&j, &s)| {
                let v = self.w[j];
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "coordinate {j} of the support carries an infinite weight"
                    )));
                }
                Ok(f64::from(s) * v)
            })
            .collect()
    }
}

impl Serialize for WeightVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // JSON has no +inf; excluded coordinates serialize as null.
        s.collect_seq(
            self.w
                .iter()
                .map(|&v| if v.is_finite() { Some(v) } else { None }),
        )
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        WeightVector::new(
            raw.into_iter()
                .map(|v| v.unwrap_or(f64::INFINITY))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Global tuning constants. Defaults follow the usual parameterization:
/// B = sqrt(24), k0 = 3, C2 just above its admissible floor 4·sqrt(5/3).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Column-norm scale: columns are expected to satisfy ‖X_j‖₂ ≤ c0·√n.
    pub c0: f64,
    /// Gram-deviation scale C2; must exceed 4·√(5/3).
    pub c2: f64,
    /// Initial penalty scale B in λ_init = B·c0·σ·√(log p / n).
    pub b: f64,
    /// Incoherence slack η ∈ (0, 1).
    pub eta: f64,
    /// Penalty-range multiplier M ≥ 4/η.
    pub m_mult: f64,
    /// Cone opening k0 of the restricted eigenvalue condition.
    pub k0: f64,
    /// Solver KKT tolerance.
    pub tol: f64,
    /// Solver sweep limit.
    pub max_iter: usize,
}

/// Floor for the admissible C2 range.
pub fn c2_floor() -> f64 {
    4.0 * (5.0f64 / 3.0).sqrt()
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c0: 1.0,
            c2: c2_floor() + 0.1,
            b: 24.0f64.sqrt(),
            eta: 0.5,
            m_mult: 8.0,
            k0: 3.0,
            tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

impl Constants {
    /// Validates the admissible ranges; returns the constants unchanged on
    /// success so construction sites can chain it.
    pub fn validated(self) -> Result<Self> {
        // NaN fails every comparison below, so it is rejected everywhere.
        let require = |ok: bool, msg: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidArgument(msg))
            }
        };
        require(
            self.c0 > 0.0,
            format!("c0 must be positive, got {}", self.c0),
        )?;
        require(
            self.c2 > c2_floor(),
            format!(
                "C2 must exceed 4·sqrt(5/3) ≈ {:.4}, got {}",
                c2_floor(),
                self.c2
            ),
        )?;
        require(self.b > 0.0, format!("B must be positive, got {}", self.b))?;
        require(
            self.eta > 0.0 && self.eta < 1.0,
            format!("eta must lie in (0,1), got {}", self.eta),
        )?;
        require(
            self.m_mult >= 4.0 / self.eta,
            format!(
                "M must satisfy M ≥ 4/eta = {}, got {}",
                4.0 / self.eta,
                self.m_mult
            ),
        )?;
        require(
            self.k0 > 0.0,
            format!("k0 must be positive, got {}", self.k0),
        )?;
        require(
            self.tol > 0.0,
            format!("tol must be positive, got {}", self.tol),
        )?;
        require(self.max_iter > 0, "max_iter must be at least 1".to_string())?;
        Ok(self)
    }
}

/// Checks the problem invariants and returns a description of every
/// violation found; an empty list means the problem is well-formed.
///
/// The column-norm bound ‖X_j‖₂ ≤ c0·√n is only checked when
/// `check_column_norms` is set.
pub fn validate_problem(
    problem: &RegressionProblem,
    constants: &Constants,
    check_column_norms: bool,
) -> Vec<String> {
    let mut violations = Vec::new();
    let (n, p) = (problem.n(), problem.p());
    if n == 0 {
        violations.push("design has no rows".to_string());
    }
    if p == 0 {
        violations.push("design has no columns".to_string());
    }
    if problem.y.len() != n {
        violations.push("y length mismatch".to_string());
    }
    for ((i, j), &v) in problem.x.indexed_iter() {
        if !v.is_finite() {
            violations.push(format!("non-finite entry at ({i},{j})"));
        }
    }
    for (i, &v) in problem.y.iter().enumerate() {
        if !v.is_finite() {
            violations.push(format!("non-finite response at {i}"));
        }
    }
    if let Some(sigma) = problem.sigma_eps {
        if !sigma.is_finite() || sigma < 0.0 {
            violations.push(format!(
                "sigma_eps must be a finite nonnegative real, got {sigma}"
            ));
        }
    }
    if let Some(truth) = &problem.truth {
        if truth.beta_star.len() != p {
            violations.push("true coefficient length mismatch".to_string());
        }
        let derived = TrueModel::new(truth.beta_star.clone());
        if derived.support != truth.support || derived.s != truth.s {
            violations.push("true model support inconsistent with beta_star".to_string());
        }
        if derived.beta_min != truth.beta_min {
            violations.push("true model beta_min inconsistent with beta_star".to_string());
        }
    }
    if check_column_norms && n > 0 {
        let bound = constants.c0 * (n as f64).sqrt();
        for j in 0..p {
            let norm = problem.x.column(j).mapv(|v| v * v).sum().sqrt();
            if norm > bound {
                violations.push(format!(
                    "column {j} norm {norm:.6} exceeds c0·sqrt(n) = {bound:.6}"
                ));
            }
        }
    }
    violations
}

/// Componentwise comparison of an estimate against the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthDiff {
    /// ‖(β̂ − β*)_S‖_∞ over the true support.
    pub delta_s_inf: f64,
    /// ‖(β̂ − β*)_{S^c}‖_∞ off the true support.
    pub delta_sc_inf: f64,
    pub support_exact: bool,
    pub signs_exact: bool,
}

pub fn diff_against_truth(estimate: &Estimate, truth: &TrueModel) -> Result<TruthDiff> {
    let p = truth.beta_star.len();
    if estimate.beta_hat.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "estimate has length {}, truth has length {p}",
            estimate.beta_hat.len()
        )));
    }
    let mut in_s = vec![false; p];
    for &j in &truth.support {
        in_s[j] = true;
    }
    let mut delta_s_inf = 0.0f64;
    let mut delta_sc_inf = 0.0f64;
    for ((&estimated, &actual), &in_support) in estimate
        .beta_hat
        .iter()
        .zip(truth.beta_star.iter())
        .zip(&in_s)
    {
        let d = (estimated - actual).abs();
        if in_support {
            delta_s_inf = delta_s_inf.max(d);
        } else {
            delta_sc_inf = delta_sc_inf.max(d);
        }
    }
    let support_exact = estimate.support == truth.support;
    let signs_exact = estimate.signs == truth.signs();
    Ok(TruthDiff {
        delta_s_inf,
        delta_sc_inf,
        support_exact,
        signs_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, arr2, Array2};

    #[test]
    fn validate_accepts_scaled_identity_at_the_norm_boundary() {
        // 2x2 identity scaled by sqrt(2): each column norm equals 1·sqrt(2).
        let x = Array2::eye(2) * 2.0f64.sqrt();
        let problem = RegressionProblem::new(x, arr1(&[0.0, 0.0]));
        let violations = validate_problem(&problem, &Constants::default(), true);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn validate_reports_length_and_finiteness() {
        let problem = RegressionProblem::new(Array2::eye(2), arr1(&[0.0, 0.0, 0.0]));
        let violations = validate_problem(&problem, &Constants::default(), false);
        assert!(violations.iter().any(|v| v.contains("y length mismatch")));

        let mut x = Array2::eye(2);
        x[[0, 1]] = f64::NAN;
        let problem = RegressionProblem::new(x, arr1(&[0.0, 0.0]));
        let violations = validate_problem(&problem, &Constants::default(), false);
        assert!(violations
            .iter()
            .any(|v| v.contains("non-finite entry at (0,1)")));
    }

    #[test]
    fn diff_against_truth_cases() {
        let truth = TrueModel::new(arr1(&[1.0, 0.0]));
        let same = Estimate::from_beta(arr1(&[1.0, 0.0]), 0.0, 0, true);
        let d = diff_against_truth(&same, &truth).unwrap();
        assert_eq!(
            d,
            TruthDiff {
                delta_s_inf: 0.0,
                delta_sc_inf: 0.0,
                support_exact: true,
                signs_exact: true
            }
        );

        let off = Estimate::from_beta(arr1(&[0.9, 0.1]), 0.0, 0, true);
        let d = diff_against_truth(&off, &truth).unwrap();
        assert_abs_diff_eq!(d.delta_s_inf, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(d.delta_sc_inf, 0.1, epsilon = 1e-15);
        assert!(!d.support_exact && !d.signs_exact);

        let inflated = Estimate::from_beta(arr1(&[1.2, 0.0]), 0.0, 0, true);
        let d = diff_against_truth(&inflated, &truth).unwrap();
        assert_abs_diff_eq!(d.delta_s_inf, 0.2, epsilon = 1e-15);
        assert_eq!(d.delta_sc_inf, 0.0);
        assert!(d.support_exact && d.signs_exact);
    }

    #[test]
    fn constants_reject_bad_ranges() {
        assert!(Constants {
            c2: 5.0,
            ..Constants::default()
        }
        .validated()
        .is_err());
        assert!(Constants {
            eta: 1.0,
            ..Constants::default()
        }
        .validated()
        .is_err());
        assert!(Constants {
            eta: 0.5,
            m_mult: 7.9,
            ..Constants::default()
        }
        .validated()
        .is_err());
        assert!(Constants::default().validated().is_ok());
    }

    #[test]
    fn weight_vector_queries() {
        let w = WeightVector::new(vec![2.0, f64::INFINITY, 0.5]).unwrap();
        assert!(WeightVector::new(vec![0.0]).is_err());
        assert!(WeightVector::new(vec![-1.0]).is_err());
        assert_eq!(w.max_over(&[0, 2]).unwrap(), 2.0);
        assert!(w.max_over(&[0, 1]).is_err());
        assert_eq!(w.min_over(&[0, 1]), 2.0);
        assert_eq!(w.min_over(&[1]), f64::INFINITY);
        let b = w.signed_on(&[0, 2], &[-1, 1]).unwrap();
        assert_eq!(b, vec![-2.0, 0.5]);
        assert!(w.signed_on(&[1], &[1]).is_err());
    }

    #[test]
    fn weight_vector_json_round_trip_uses_null_for_excluded() {
        let w = WeightVector::new(vec![1.5, f64::INFINITY]).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "[1.5,null]");
        let back: WeightVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn estimate_support_and_signs_derive_from_beta() {
        let e = Estimate::from_beta(arr1(&[0.0, -0.3, 2.0]), 1e-12, 7, true);
        assert_eq!(e.support, vec![1, 2]);
        assert_eq!(e.signs, vec![0, -1, 1]);
    }

    #[test]
    fn realized_noise_needs_matching_truth() {
        let x = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let problem = RegressionProblem::new(x, arr1(&[1.0, 2.0]))
            .with_truth(TrueModel::new(arr1(&[1.0, 0.0])));
        let eps = problem.realized_noise().unwrap();
        assert_eq!(eps, arr1(&[0.0, 2.0]));
    }
}
