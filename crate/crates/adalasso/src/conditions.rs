//! Design-condition diagnostics: restricted eigenvalues over subsets, the
//! restricted eigenvalue constant K on the cone, restricted orthogonality,
//! incoherence margins, noise/Gram concentration events, the exact KKT
//! sign-recovery certificate, and plug-in checks of the recovery-theorem
//! hypotheses.
//!
//! Quantities defined through subset minimization are computed by exact
//! enumeration when the subset count stays under a cap, and otherwise by
//! uniform subset sampling with the examined count reported. The constant K
//! additionally requires minimizing a Rayleigh ratio over an l1 cone, which
//! is done by projected gradient descent from multiple starts; the reported
//! value is 1 over the smallest ratio found. Because every start includes
//! the bottom eigenvector of the subset Gram (a feasible cone point), the
//! reported K always satisfies Lambda_min(s) ≥ 1/K², matching how the
//! eigenvalue and cone quantities are ordered analytically.

use ndarray::{Array1, Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::model::{Constants, RegressionProblem, WeightVector};
use crate::{Error, Result};

/// Default cap on exhaustive subset enumeration.
pub const ENUM_CAP: u128 = 1_000_000;

/// Lexicographic iteration over k-subsets of 0..n.
pub(crate) struct Combinations {
    n: usize,
    k: usize,
    idx: Vec<usize>,
    started: bool,
    done: bool,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            k,
            idx: (0..k).collect(),
            started: false,
            done: k > n,
        }
    }

    pub(crate) fn next(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.idx);
        }
        // Advance the rightmost index that can still move.
        let k = self.k;
        if k == 0 {
            self.done = true;
            return None;
        }
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                return None;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
    }
}

fn sample_subset(p: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).collect();
    for i in 0..k {
        let j = rng.random_range(i..p);
        idx.swap(i, j);
    }
    let mut chosen = idx[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

pub(crate) fn gram_of(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows() as f64;
    x.t().dot(&x) / n
}

fn principal_submatrix(gram: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| gram[[idx[a], idx[b]]])
}

// ---------------------------------------------------------------------------
// Lambda_min over subsets
// ---------------------------------------------------------------------------

/// Λ_min(s): the smallest eigenvalue of any principal s×s block of XᵀX/n.
///
/// Minimizing over |J0| ≤ s equals minimizing over |J0| = s by eigenvalue
/// interlacing. Errors with [`Error::EnumerationCap`] when C(p,s) exceeds the
/// cap; use [`lambda_min_subset_sampled`] in that regime.
pub fn lambda_min_subset(x: ArrayView2<'_, f64>, s: usize) -> Result<f64> {
    lambda_min_subset_gram(gram_of(x).view(), s, ENUM_CAP)
}

pub fn lambda_min_subset_gram(gram: ArrayView2<'_, f64>, s: usize, cap: u128) -> Result<f64> {
    let p = gram.nrows();
    if s == 0 || s > p {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    let count = linalg::binomial(p, s);
    if count > cap {
        return Err(Error::EnumerationCap {
            subsets: count,
            cap,
        });
    }
    if s == 1 {
        return Ok((0..p).map(|j| gram[[j, j]]).fold(f64::INFINITY, f64::min));
    }
    let mut min_eig = f64::INFINITY;
    let mut combos = Combinations::new(p, s);
    while let Some(idx) = combos.next() {
        let block = principal_submatrix(gram, idx);
        min_eig = min_eig.min(linalg::min_eig_sym(block.view()));
    }
    Ok(min_eig)
}

/// Sampled surrogate for Λ_min(s) when enumeration is infeasible: the
/// minimum over `samples` uniformly drawn subsets (an upper bound on the
/// exact minimum).
pub fn lambda_min_subset_sampled(
    gram: ArrayView2<'_, f64>,
    s: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let p = gram.nrows();
    if s == 0 || s > p {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    let mut rng = crate::synth::stream_rng(seed, 0);
    let mut min_eig = f64::INFINITY;
    for _ in 0..samples {
        let idx = sample_subset(p, s, &mut rng);
        let block = principal_submatrix(gram, &idx);
        min_eig = min_eig.min(linalg::min_eig_sym(block.view()));
    }
    Ok(min_eig)
}

// ---------------------------------------------------------------------------
// Restricted eigenvalue constant K
// ---------------------------------------------------------------------------

/// How a reported K was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReKind {
    /// Cone-free case (k0 = 0) with full enumeration: K = 1/sqrt(Λ_min(s)).
    Exact,
    /// Multi-start cone minimization; the true infimum may be smaller, so
    /// the reported constant should be read as the certified direction for
    /// hypothesis checks that place K on their "≤" side.
    UpperBound,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReEstimate {
    /// Estimated restricted eigenvalue constant K.
    pub value: f64,
    pub kind: ReKind,
    pub s: usize,
    /// Denominator block size m; zero means the J0-only (m-free) variant.
    pub m: usize,
    pub k0: f64,
    pub subsets_examined: usize,
    pub exhaustive: bool,
}

/// Search budget for the cone minimization behind [`re_constant`].
#[derive(Debug, Clone)]
pub struct ReConfig {
    /// Denominator block size m (0 requests the J0-only variant).
    pub m: usize,
    /// Cone opening k0.
    pub k0: f64,
    /// Cap on the number of candidate subsets J0.
    pub max_subsets: usize,
    /// Random cone starts per subset, in addition to the eigenvector seed.
    pub starts: usize,
    /// Projected-gradient iterations per start.
    pub iters: usize,
    pub seed: u64,
}

impl ReConfig {
    pub fn new(m: usize, k0: f64) -> Self {
        ReConfig {
            m,
            k0,
            max_subsets: 200,
            starts: 8,
            iters: 60,
            seed: 0,
        }
    }

    /// A cheap budget suitable for per-replicate pipeline use.
    pub fn budget(m: usize, k0: f64) -> Self {
        ReConfig {
            m,
            k0,
            max_subsets: 24,
            starts: 2,
            iters: 40,
            seed: 0,
        }
    }
}

pub fn re_constant(x: ArrayView2<'_, f64>, s: usize, cfg: &ReConfig) -> Result<ReEstimate> {
    re_constant_gram(gram_of(x).view(), s, cfg)
}

/// Estimates K(s, m, k0, ·) from a Gram (or population covariance) matrix.
pub fn re_constant_gram(gram: ArrayView2<'_, f64>, s: usize, cfg: &ReConfig) -> Result<ReEstimate> {
    let p = gram.nrows();
    if s == 0 || s > p {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= s <= p, got s = {s}, p = {p}"
        )));
    }
    if cfg.m > 0 && s + cfg.m > p {
        return Err(Error::InvalidArgument(format!(
            "infeasible block sizes: s + m = {} exceeds p = {p}",
            s + cfg.m
        )));
    }
    if cfg.k0 < 0.0 {
        return Err(Error::InvalidArgument("k0 must be nonnegative".into()));
    }

    let total = linalg::binomial(p, s);
    let exhaustive = total <= cfg.max_subsets as u128;

    if cfg.k0 == 0.0 && exhaustive {
        // Cone-free: the admissible vectors are supported on J0, so the
        // ratio reduces to the subset Rayleigh quotient.
        let lam = lambda_min_subset_gram(gram, s, cfg.max_subsets as u128)?;
        let value = if lam > 0.0 {
            1.0 / lam.sqrt()
        } else {
            f64::INFINITY
        };
        return Ok(ReEstimate {
            value,
            kind: ReKind::Exact,
            s,
            m: cfg.m,
            k0: cfg.k0,
            subsets_examined: total as usize,
            exhaustive: true,
        });
    }

    let mut rng = crate::synth::stream_rng(cfg.seed, 1);
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    if exhaustive {
        let mut combos = Combinations::new(p, s);
        while let Some(idx) = combos.next() {
            subsets.push(idx.to_vec());
        }
    } else {
        // Heuristic candidate: support of the largest entries of the bottom
        // eigenvector, which tends to carry the worst-conditioned direction.
        let (_, vecs) = linalg::sym_eigen_sorted(gram);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| vecs[[b, 0]].abs().partial_cmp(&vecs[[a, 0]].abs()).unwrap());
        let mut worst = order[..s].to_vec();
        worst.sort_unstable();
        subsets.push(worst);
        while subsets.len() < cfg.max_subsets {
            subsets.push(sample_subset(p, s, &mut rng));
        }
    }

    let mut min_ratio_sq = f64::INFINITY;
    for j0 in &subsets {
        min_ratio_sq = min_ratio_sq.min(min_cone_ratio_sq(gram, j0, cfg, &mut rng));
    }
    let value = if min_ratio_sq > 1e-18 {
        1.0 / min_ratio_sq.sqrt()
    } else {
        f64::INFINITY
    };
    Ok(ReEstimate {
        value,
        kind: ReKind::UpperBound,
        s,
        m: cfg.m,
        k0: cfg.k0,
        subsets_examined: subsets.len(),
        exhaustive,
    })
}

/// Squared Rayleigh ratio γᵀGγ / ‖γ_{J0m}‖² at a cone point, with J0m the
/// union of J0 and the m largest magnitudes outside it.
fn ratio_sq(gram: ArrayView2<'_, f64>, j0_mask: &[bool], m: usize, gamma: &Array1<f64>) -> f64 {
    let p = gamma.len();
    let num = gamma.dot(&gram.dot(gamma));
    let mut den: f64 = (0..p)
        .filter(|&j| j0_mask[j])
        .map(|j| gamma[j] * gamma[j])
        .sum();
    if m > 0 {
        let mut outside: Vec<f64> = (0..p)
            .filter(|&j| !j0_mask[j])
            .map(|j| gamma[j].abs())
            .collect();
        outside.sort_by(|a, b| b.partial_cmp(a).unwrap());
        den += outside.iter().take(m).map(|v| v * v).sum::<f64>();
    }
    if den < 1e-300 {
        f64::INFINITY
    } else {
        num / den
    }
}

fn project_cone(gamma: &mut Array1<f64>, j0_mask: &[bool], k0: f64) {
    let inside: f64 = gamma
        .iter()
        .zip(j0_mask)
        .filter(|(_, &m)| m)
        .map(|(g, _)| g.abs())
        .sum();
    let outside: f64 = gamma
        .iter()
        .zip(j0_mask)
        .filter(|(_, &m)| !m)
        .map(|(g, _)| g.abs())
        .sum();
    if outside > k0 * inside {
        let scale = if outside > 0.0 {
            k0 * inside / outside
        } else {
            0.0
        };
        for (g, &m) in gamma.iter_mut().zip(j0_mask) {
            if !m {
                *g *= scale;
            }
        }
    }
    let norm = gamma.dot(gamma).sqrt();
    if norm > 0.0 {
        gamma.mapv_inplace(|g| g / norm);
    }
}

fn min_cone_ratio_sq(
    gram: ArrayView2<'_, f64>,
    j0: &[usize],
    cfg: &ReConfig,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let p = gram.nrows();
    let mut j0_mask = vec![false; p];
    for &j in j0 {
        j0_mask[j] = true;
    }

    // Eigenvector seed: the bottom eigenvector of the subset block, embedded
    // as a supported (hence feasible) vector.
    let block = principal_submatrix(gram, j0);
    let (vals, vecs) = linalg::sym_eigen_sorted(block.view());
    let mut seed_vec = Array1::zeros(p);
    for (a, &j) in j0.iter().enumerate() {
        seed_vec[j] = vecs[[a, 0]];
    }
    let mut best = vals[0].max(0.0);

    let mut starts: Vec<Array1<f64>> = vec![seed_vec];
    for _ in 0..cfg.starts {
        let mut gamma =
            Array1::from_shape_fn(p, |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
        // Rescale the outside block to a random fraction of the cone budget.
        let inside: f64 = j0.iter().map(|&j| gamma[j].abs()).sum();
        let outside: f64 = (0..p)
            .filter(|&j| !j0_mask[j])
            .map(|j| gamma[j].abs())
            .sum();
        if outside > 0.0 {
            let frac: f64 = rng.random::<f64>();
            let scale = frac * cfg.k0 * inside / outside;
            for j in 0..p {
                if !j0_mask[j] {
                    gamma[j] *= scale;
                }
            }
        }
        starts.push(gamma);
    }

    for mut gamma in starts {
        project_cone(&mut gamma, &j0_mask, cfg.k0);
        let mut current = ratio_sq(gram, &j0_mask, cfg.m, &gamma);
        let mut step = 0.2;
        for _ in 0..cfg.iters {
            // Gradient of the ratio with J0m frozen at the current iterate.
            let num_grad = gram.dot(&gamma) * 2.0;
            let mut den = 0.0;
            let mut den_mask = vec![false; p];
            for j in 0..p {
                if j0_mask[j] {
                    den_mask[j] = true;
                    den += gamma[j] * gamma[j];
                }
            }
            if cfg.m > 0 {
                let mut outside: Vec<(usize, f64)> = (0..p)
                    .filter(|&j| !j0_mask[j])
                    .map(|j| (j, gamma[j].abs()))
                    .collect();
                outside.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
                for &(j, _) in outside.iter().take(cfg.m) {
                    den_mask[j] = true;
                    den += gamma[j] * gamma[j];
                }
            }
            if den < 1e-300 {
                break;
            }
            let ratio = gamma.dot(&gram.dot(&gamma)) / den;
            let grad = Array1::from_shape_fn(p, |j| {
                let dden = if den_mask[j] { 2.0 * gamma[j] } else { 0.0 };
                (num_grad[j] - ratio * dden) / den
            });

            let mut accepted = false;
            let mut trial_step = step;
            for _ in 0..20 {
                let mut trial = &gamma - &(&grad * trial_step);
                project_cone(&mut trial, &j0_mask, cfg.k0);
                let value = ratio_sq(gram, &j0_mask, cfg.m, &trial);
                if value < current {
                    gamma = trial;
                    current = value;
                    step = trial_step * 1.2;
                    accepted = true;
                    break;
                }
                trial_step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.min(current);
    }
    best
}

// ---------------------------------------------------------------------------
// Restricted orthogonality
// ---------------------------------------------------------------------------

/// θ_{s,s'}: the largest singular value of any cross-Gram block X_TᵀX_{T'}/n
/// over disjoint subsets with |T| ≤ s and |T'| ≤ s'.
///
/// When either side has size one the maximum has a closed form (pick the s'
/// largest magnitudes in the row), so no enumeration is needed; otherwise
/// disjoint pairs are enumerated under the cap.
pub fn restricted_orthogonality(x: ArrayView2<'_, f64>, s: usize, s_prime: usize) -> Result<f64> {
    restricted_orthogonality_gram(gram_of(x).view(), s, s_prime, ENUM_CAP)
}

pub fn restricted_orthogonality_gram(
    gram: ArrayView2<'_, f64>,
    s: usize,
    s_prime: usize,
    cap: u128,
) -> Result<f64> {
    let p = gram.nrows();
    if s == 0 || s_prime == 0 {
        return Err(Error::InvalidArgument(
            "subset sizes must be positive".into(),
        ));
    }
    if s + s_prime > p {
        return Err(Error::InvalidArgument(format!(
            "need s + s' <= p, got {s} + {s_prime} > {p}"
        )));
    }
    // The block singular value is monotone under adding rows or columns, so
    // only maximal sizes matter; and θ is symmetric in its two arguments.
    let (small, large) = if s <= s_prime {
        (s, s_prime)
    } else {
        (s_prime, s)
    };
    if small == 1 {
        let mut theta: f64 = 0.0;
        for j in 0..p {
            let mut others: Vec<f64> = (0..p)
                .filter(|&k| k != j)
                .map(|k| gram[[j, k]].abs())
                .collect();
            others.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let norm_sq: f64 = others.iter().take(large).map(|v| v * v).sum();
            theta = theta.max(norm_sq.sqrt());
        }
        return Ok(theta);
    }

    let pairs = linalg::binomial(p, s).saturating_mul(linalg::binomial(p - s, s_prime));
    if pairs > cap {
        return Err(Error::EnumerationCap {
            subsets: pairs,
            cap,
        });
    }
    let mut theta: f64 = 0.0;
    let mut outer = Combinations::new(p, s);
    while let Some(t_set) = outer.next() {
        let t_set = t_set.to_vec();
        let mut in_t = vec![false; p];
        for &j in &t_set {
            in_t[j] = true;
        }
        let rest: Vec<usize> = (0..p).filter(|&j| !in_t[j]).collect();
        let mut inner = Combinations::new(rest.len(), s_prime);
        while let Some(pick) = inner.next() {
            let t_prime: Vec<usize> = pick.iter().map(|&a| rest[a]).collect();
            let block = Array2::from_shape_fn((s, s_prime), |(a, b)| gram[[t_set[a], t_prime[b]]]);
            theta = theta.max(linalg::max_singular_value(block.view()));
        }
    }
    Ok(theta)
}

/// Sampled surrogate for θ over uniformly drawn disjoint pairs.
pub fn restricted_orthogonality_sampled(
    gram: ArrayView2<'_, f64>,
    s: usize,
    s_prime: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let p = gram.nrows();
    if s == 0 || s_prime == 0 || s + s_prime > p {
        return Err(Error::InvalidArgument("infeasible subset sizes".into()));
    }
    let mut rng = crate::synth::stream_rng(seed, 2);
    let mut theta: f64 = 0.0;
    for _ in 0..samples {
        let both = sample_subset(p, s + s_prime, &mut rng);
        let t_set = &both[..s];
        let t_prime = &both[s..];
        let block = Array2::from_shape_fn((s, s_prime), |(a, b)| gram[[t_set[a], t_prime[b]]]);
        theta = theta.max(linalg::max_singular_value(block.view()));
    }
    Ok(theta)
}

// ---------------------------------------------------------------------------
// r_n and incoherence
// ---------------------------------------------------------------------------

/// r_n(S) = ‖X_{S^c}ᵀX_S (X_SᵀX_S)⁻¹‖_∞ (max row l1 norm).
pub fn r_n(x: ArrayView2<'_, f64>, support: &[usize]) -> Result<f64> {
    r_n_from_gram(gram_of(x).view(), support)
}

pub fn r_n_from_gram(gram: ArrayView2<'_, f64>, support: &[usize]) -> Result<f64> {
    let p = gram.nrows();
    check_support(p, support)?;
    let complement: Vec<usize> = complement_of(p, support);
    if complement.is_empty() {
        return Ok(0.0);
    }
    let g_ss = principal_submatrix(gram, support);
    let g_s_sc = Array2::from_shape_fn((support.len(), complement.len()), |(a, b)| {
        gram[[support[a], complement[b]]]
    });
    // Columns of the solve are the transposed rows of X_{S^c}ᵀX_S(X_SᵀX_S)⁻¹.
    let solved = linalg::solve_spd_multi(g_ss.view(), g_s_sc.view())?;
    let mut worst: f64 = 0.0;
    for b in 0..complement.len() {
        let row_l1: f64 = solved.column(b).iter().map(|v| v.abs()).sum();
        worst = worst.max(row_l1);
    }
    Ok(worst)
}

fn check_support(p: usize, support: &[usize]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("support must be nonempty".into()));
    }
    let mut seen = vec![false; p];
    for &j in support {
        if j >= p {
            return Err(Error::InvalidArgument(format!(
                "support index {j} out of range (p = {p})"
            )));
        }
        if seen[j] {
            return Err(Error::InvalidArgument(format!(
                "duplicate support index {j}"
            )));
        }
        seen[j] = true;
    }
    Ok(())
}

fn complement_of(p: usize, support: &[usize]) -> Vec<usize> {
    let mut in_s = vec![false; p];
    for &j in support {
        in_s[j] = true;
    }
    (0..p).filter(|&j| !in_s[j]).collect()
}

/// r_n together with its two analytic bounds and their verification flags:
/// r_n ≤ c0·√s/√Λ_min(s) and r_n ≤ θ_{1,s}·√s/Λ_min(s).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RnBounds {
    pub r_n: f64,
    pub lambda_min_s: f64,
    pub theta_1s: f64,
    pub bound_general: f64,
    pub bound_theta: f64,
    pub holds_general: bool,
    pub holds_theta: bool,
}

pub fn r_n_with_bounds(x: ArrayView2<'_, f64>, support: &[usize], c0: f64) -> Result<RnBounds> {
    let gram = gram_of(x);
    let s = support.len();
    let value = r_n_from_gram(gram.view(), support)?;
    let lambda_min_s = lambda_min_subset_gram(gram.view(), s, ENUM_CAP)?;
    let theta_1s = restricted_orthogonality_gram(gram.view(), 1, s, ENUM_CAP)?;
    let bound_general = c0 * (s as f64).sqrt() / lambda_min_s.sqrt();
    let bound_theta = theta_1s * (s as f64).sqrt() / lambda_min_s;
    Ok(RnBounds {
        r_n: value,
        lambda_min_s,
        theta_1s,
        bound_general,
        bound_theta,
        holds_general: value <= bound_general,
        holds_theta: value <= bound_theta,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrrepresentableCheck {
    /// ‖X_{S^c}ᵀX_S(X_SᵀX_S)⁻¹‖_∞.
    pub norm: f64,
    /// 1 − norm.
    pub margin: f64,
    /// Whether norm ≤ 1 − η.
    pub holds: bool,
}

pub fn irrepresentable_margin(
    x: ArrayView2<'_, f64>,
    support: &[usize],
    eta: f64,
) -> Result<IrrepresentableCheck> {
    irrepresentable_margin_gram(gram_of(x).view(), support, eta)
}

pub fn irrepresentable_margin_gram(
    gram: ArrayView2<'_, f64>,
    support: &[usize],
    eta: f64,
) -> Result<IrrepresentableCheck> {
    let norm = r_n_from_gram(gram, support)?;
    Ok(IrrepresentableCheck {
        norm,
        margin: 1.0 - norm,
        holds: norm <= 1.0 - eta,
    })
}

/// The weighted (w, S)-incoherence check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedIncoherence {
    /// Exact per-coordinate condition |X_jᵀX_S(X_SᵀX_S)⁻¹b| ≤ w_j(1−η),
    /// in the order of the support complement. Excluded coordinates hold
    /// vacuously.
    pub per_j_ok: Vec<bool>,
    pub all_per_j_ok: bool,
    /// Sufficient condition r_n ≤ (w_min(S^c)/w_max(S))·(1−η).
    pub sufficient_ok: bool,
}

pub fn weighted_incoherence(
    x: ArrayView2<'_, f64>,
    support: &[usize],
    weights: &WeightVector,
    signs_on_support: &[i8],
    eta: f64,
) -> Result<WeightedIncoherence> {
    weighted_incoherence_gram(gram_of(x).view(), support, weights, signs_on_support, eta)
}

pub fn weighted_incoherence_gram(
    gram: ArrayView2<'_, f64>,
    support: &[usize],
    weights: &WeightVector,
    signs_on_support: &[i8],
    eta: f64,
) -> Result<WeightedIncoherence> {
    let p = gram.nrows();
    check_support(p, support)?;
    if weights.len() != p {
        return Err(Error::DimensionMismatch(
            "weights length differs from p".into(),
        ));
    }
    let b = Array1::from_vec(weights.signed_on(support, signs_on_support)?);
    let g_ss = principal_submatrix(gram, support);
    let u = linalg::solve_spd(g_ss.view(), &b)?;
    let complement = complement_of(p, support);
    let mut per_j_ok = Vec::with_capacity(complement.len());
    for &j in &complement {
        let w_j = weights.get(j);
        if !w_j.is_finite() {
            per_j_ok.push(true);
            continue;
        }
        let v: f64 = support
            .iter()
            .enumerate()
            .map(|(a, &i)| gram[[j, i]] * u[a])
            .sum();
        per_j_ok.push(v.abs() <= w_j * (1.0 - eta));
    }
    let r = r_n_from_gram(gram, support)?;
    let ratio = weights.min_over(&complement) / weights.max_over(support)?;
    let sufficient_ok = r <= ratio * (1.0 - eta);
    let all = per_j_ok.iter().all(|&ok| ok);
    Ok(WeightedIncoherence {
        per_j_ok,
        all_per_j_ok: all,
        sufficient_ok,
    })
}

// ---------------------------------------------------------------------------
// Noise and Gram concentration events
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventT {
    pub max_correlation: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Membership in the low-noise event ‖Xᵀε/n‖_∞ ≤ c0·σ·√(6·log p / n).
pub fn event_t(x: ArrayView2<'_, f64>, eps: &Array1<f64>, sigma: f64, c0: f64) -> Result<EventT> {
    let (n, p) = (x.nrows(), x.ncols());
    if eps.len() != n {
        return Err(Error::DimensionMismatch(
            "noise length differs from row count".into(),
        ));
    }
    let corr = x.t().dot(eps) / n as f64;
    let max_correlation = corr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = c0 * sigma * (6.0 * (p as f64).ln() / n as f64).sqrt();
    Ok(EventT {
        max_correlation,
        threshold,
        holds: max_correlation <= threshold,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventX {
    pub max_delta: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Membership in the Gram concentration event
/// max_{j,k} |(XᵀX/n − Σ)_{jk}| < C2·√(log p / n) (strict).
pub fn event_x(
    x: ArrayView2<'_, f64>,
    sigma_matrix: ArrayView2<'_, f64>,
    c2: f64,
) -> Result<EventX> {
    let (n, p) = (x.nrows(), x.ncols());
    if sigma_matrix.nrows() != p || sigma_matrix.ncols() != p {
        return Err(Error::DimensionMismatch("covariance must be p x p".into()));
    }
    let gram = gram_of(x);
    let mut max_delta: f64 = 0.0;
    for j in 0..p {
        for k in 0..p {
            max_delta = max_delta.max((gram[[j, k]] - sigma_matrix[[j, k]]).abs());
        }
    }
    let threshold = c2 * ((p as f64).ln() / n as f64).sqrt();
    Ok(EventX {
        max_delta,
        threshold,
        holds: max_delta < threshold,
    })
}

// ---------------------------------------------------------------------------
// Sign-recovery certificate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateCondition {
    pub holds: bool,
    /// Slack in absolute units; negative when the condition fails. Infinite
    /// when the condition is vacuous (no constrained coordinate).
    pub margin: f64,
}

/// Exact evaluation of the KKT characterization of sign recovery for the
/// weighted Lasso at the realized noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignRecoveryCertificate {
    /// Dual feasibility off the support:
    /// |Σ̂_{S^cS}(Σ̂_SS)⁻¹[X_Sᵀε/n − λb] − X_{S^c}ᵀε/n| ≤ λ·w_{S^c}.
    pub condition_a: CertificateCondition,
    /// Sign preservation on the support:
    /// sgn(β*_S + (Σ̂_SS)⁻¹[X_Sᵀε/n − λb]) = sgn(β*_S).
    pub condition_b: CertificateCondition,
    /// Both conditions hold, i.e. a sign-consistent solution exists.
    pub predicts_recovery: bool,
}

pub fn sign_recovery_certificate(
    problem: &RegressionProblem,
    lambda: f64,
    weights: &WeightVector,
) -> Result<SignRecoveryCertificate> {
    let truth = problem.truth.as_ref().ok_or(Error::MissingTruth)?;
    let p = problem.p();
    if weights.len() != p {
        return Err(Error::DimensionMismatch(
            "weights length differs from p".into(),
        ));
    }
    let eps = problem.realized_noise()?;
    let n_f = problem.n() as f64;
    let support = &truth.support;
    let signs = truth.signs_on_support();
    let gram = gram_of(problem.x.view());

    // h = (Σ̂_SS)⁻¹ [X_Sᵀε/n − λ·b]
    let h = if support.is_empty() {
        Array1::zeros(0)
    } else {
        let b = Array1::from_vec(weights.signed_on(support, &signs)?);
        let g_ss = principal_submatrix(gram.view(), support);
        let rhs = Array1::from_shape_fn(support.len(), |a| {
            problem.x.column(support[a]).dot(&eps) / n_f - lambda * b[a]
        });
        linalg::solve_spd(g_ss.view(), &rhs)?
    };

    let mut margin_b = f64::INFINITY;
    for (a, &i) in support.iter().enumerate() {
        let shifted = truth.beta_star[i] + h[a];
        margin_b = margin_b.min(f64::from(signs[a]) * shifted);
    }
    let condition_b = CertificateCondition {
        holds: margin_b > 0.0,
        margin: margin_b,
    };

    let mut margin_a = f64::INFINITY;
    for j in complement_of(p, support) {
        let w_j = weights.get(j);
        if !w_j.is_finite() {
            continue; // excluded coordinate: no dual constraint
        }
        let noise_j = problem.x.column(j).dot(&eps) / n_f;
        let v: f64 = support
            .iter()
            .enumerate()
            .map(|(a, &i)| gram[[j, i]] * h[a])
            .sum::<f64>()
            - noise_j;
        margin_a = margin_a.min(lambda * w_j - v.abs());
    }
    let condition_a = CertificateCondition {
        holds: margin_a >= 0.0,
        margin: margin_a,
    };

    let predicts_recovery = condition_a.holds && condition_b.holds;
    Ok(SignRecoveryCertificate {
        condition_a,
        condition_b,
        predicts_recovery,
    })
}

// ---------------------------------------------------------------------------
// Theorem hypothesis checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryHypotheses {
    /// General two-stage result with abstract initial-estimator bounds.
    GeneralInitial,
    /// Fixed design, general r_n bound.
    FixedDesign,
    /// Fixed design, r_n bounded via Λ_min.
    FixedDesignEigen,
    /// Fixed design, r_n bounded via θ_{1,s}.
    FixedDesignOrtho,
    /// Random design with population covariance.
    RandomDesign,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub hypothesis: String,
    pub holds: bool,
    /// Absolute slack in the inequality's own units; positive iff it holds.
    pub slack: f64,
}

impl HypothesisCheck {
    fn upper(name: &str, hypothesis: String, lhs: f64, rhs: f64) -> Self {
        // lhs ≤ rhs
        HypothesisCheck {
            name: name.into(),
            hypothesis,
            holds: lhs <= rhs,
            slack: rhs - lhs,
        }
    }

    fn strict_lower(name: &str, hypothesis: String, lhs: f64, rhs: f64) -> Self {
        // lhs > rhs
        HypothesisCheck {
            name: name.into(),
            hypothesis,
            holds: lhs > rhs,
            slack: lhs - rhs,
        }
    }
}

/// Optional precomputed quantities; anything absent is computed when the
/// enumeration caps allow, and errors otherwise.
#[derive(Debug, Clone, Default)]
pub struct HypothesisInputs {
    /// K(s,s,k0,X) for the fixed-design results, K(s,s,k0,Σ) for the random-design checks.
    pub k: Option<f64>,
    pub lambda_min_s: Option<f64>,
    pub theta_1s: Option<f64>,
    pub r_n_tilde: Option<f64>,
    pub lambda_n: Option<f64>,
    pub lambda_init: Option<f64>,
    pub sigma_matrix: Option<Array2<f64>>,
}

pub fn theorem_hypotheses(
    problem: &RegressionProblem,
    constants: &Constants,
    which: RecoveryHypotheses,
    inputs: &HypothesisInputs,
) -> Result<Vec<HypothesisCheck>> {
    let truth = problem.truth.as_ref().ok_or(Error::MissingTruth)?;
    let (n, p) = (problem.n(), problem.p());
    let s = truth.s;
    if s == 0 {
        // No signal: the β_min requirement is the only meaningful check and
        // it fails by convention (every bound on the right is nonnegative).
        return Ok(vec![HypothesisCheck {
            name: "beta_min".into(),
            hypothesis: "beta_min > 0 required; the true support is empty".into(),
            holds: false,
            slack: 0.0,
        }]);
    }
    let sigma = problem.sigma()?;
    let (n_f, p_f, s_f) = (n as f64, p as f64, s as f64);
    let eta = constants.eta;
    let m_mult = constants.m_mult;
    let k0 = constants.k0;
    let beta_min = truth.beta_min;

    // The random-design result pins the column scale at sqrt(3/2).
    let c0 = if which == RecoveryHypotheses::RandomDesign {
        (1.5f64).sqrt()
    } else {
        constants.c0
    };
    let lambda_init = inputs
        .lambda_init
        .unwrap_or_else(|| constants.b * c0 * sigma * (p_f.ln() / n_f).sqrt());

    let sigma_matrix = inputs.sigma_matrix.as_ref();
    if which == RecoveryHypotheses::RandomDesign && sigma_matrix.is_none() {
        return Err(Error::InvalidArgument(
            "random-design checks need the population covariance in the inputs".into(),
        ));
    }

    let k = match inputs.k {
        Some(k) => k,
        None => {
            let m = s.min(p - s);
            if m < s {
                return Err(Error::InvalidArgument(format!(
                    "cannot form K(s,s,k0,·): s + s = {} exceeds p = {p}",
                    2 * s
                )));
            }
            let cfg = ReConfig::new(s, k0);
            match sigma_matrix {
                Some(sig) if which == RecoveryHypotheses::RandomDesign => {
                    re_constant_gram(sig.view(), s, &cfg)?.value
                }
                _ => re_constant(problem.x.view(), s, &cfg)?.value,
            }
        }
    };

    let lambda_min_s = match inputs.lambda_min_s {
        Some(v) => v,
        None => match (which, sigma_matrix) {
            (RecoveryHypotheses::RandomDesign, Some(sig)) => {
                (16.0 / 17.0) * lambda_min_subset_gram(sig.view(), s, ENUM_CAP)?
            }
            _ => lambda_min_subset(problem.x.view(), s)?,
        },
    };

    let r_n_tilde = match inputs.r_n_tilde {
        Some(v) => v,
        None => {
            if which == RecoveryHypotheses::RandomDesign {
                // On the Gram concentration event, r_n ≤ √(3s/(2Λ_min(s))).
                (3.0 * s_f / (2.0 * lambda_min_s)).sqrt()
            } else {
                r_n(problem.x.view(), &truth.support)?
            }
        }
    };

    // The effective K inside the beta_min/penalty inequalities: the
    // random-design route plugs sqrt(2)·K(Σ) where fixed-design checks use K(X).
    let k_eff = if which == RecoveryHypotheses::RandomDesign {
        2.0f64.sqrt() * k
    } else {
        k
    };
    let log_ps = if p > s { ((p - s) as f64).ln() } else { 0.0 };
    let range_factor = c0 * sigma * lambda_init * s_f.sqrt() * (2.0 * log_ps / n_f).sqrt();
    let lambda_lo = (64.0 * k_eff * k_eff / eta) * range_factor;
    let lambda_hi = 16.0 * m_mult * k_eff * range_factor;
    let lambda_n = inputs.lambda_n.unwrap_or(lambda_lo);

    let mut checks = Vec::new();

    let range_checks = |checks: &mut Vec<HypothesisCheck>| {
        checks.push(HypothesisCheck::upper(
            "penalty_range_lower",
            format!("lambda_n ≥ (64K²/eta)·c0·sigma·lambda_init·sqrt(s)·sqrt(2log(p−s)/n) = {lambda_lo:.6e}"),
            lambda_lo,
            lambda_n,
        ));
        checks.push(HypothesisCheck::upper(
            "penalty_range_upper",
            format!("lambda_n ≤ 16·M·K·c0·sigma·lambda_init·sqrt(s)·sqrt(2log(p−s)/n) = {lambda_hi:.6e}"),
            lambda_n,
            lambda_hi,
        ));
        checks.push(HypothesisCheck::upper(
            "penalty_range_nondegenerate",
            format!("M ≥ 4K/eta with K = {k_eff:.4}, eta = {eta}"),
            4.0 * k_eff / eta,
            m_mult,
        ));
    };

    match which {
        RecoveryHypotheses::GeneralInitial => {
            let delta_s = 4.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            let delta_sc = 16.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            checks.push(HypothesisCheck::upper(
                "delta_s_below_one",
                format!("plug-in bound on ‖δ_S‖_∞ must stay below 1: {delta_s:.6e} < 1"),
                delta_s,
                1.0,
            ));
            checks.push(HypothesisCheck::upper(
                "delta_sc_below_one",
                format!("plug-in bound on ‖δ_Sc‖_∞ must stay below 1: {delta_sc:.6e} < 1"),
                delta_sc,
                1.0,
            ));
            let lo = (4.0 * c0 * sigma * delta_sc / eta) * (2.0 * log_ps / n_f).sqrt();
            let hi = m_mult * c0 * sigma * delta_sc * (2.0 * log_ps / n_f).sqrt();
            checks.push(HypothesisCheck::upper(
                "penalty_range_lower",
                format!("lambda_n ≥ (4·c0·sigma·delta_sc/eta)·sqrt(2log(p−s)/n) = {lo:.6e}"),
                lo,
                lambda_n,
            ));
            checks.push(HypothesisCheck::upper(
                "penalty_range_upper",
                format!("lambda_n ≤ M·c0·sigma·delta_sc·sqrt(2log(p−s)/n) = {hi:.6e}"),
                lambda_n,
                hi,
            ));
            checks.push(HypothesisCheck::upper(
                "incoherence_vs_delta",
                format!("r_n ≤ (1−eta)/delta_sc with r_n = {r_n_tilde:.4}"),
                r_n_tilde,
                (1.0 - eta) / delta_sc,
            ));
            let c1 = (2.0 * r_n_tilde / (1.0 - eta)).max(m_mult / 3.0f64.sqrt());
            let rhs = (2.0 * delta_s)
                .max(2.0 * lambda_n * s_f.sqrt() / lambda_min_s)
                .max(4.0 * c0 * sigma / lambda_min_s * (6.0 * s_f * p_f.ln() / n_f).sqrt())
                .max(c1 * delta_sc);
            checks.push(HypothesisCheck::strict_lower(
                "beta_min",
                format!("beta_min > max of the four signal-strength terms = {rhs:.6e}"),
                beta_min,
                rhs,
            ));
        }
        RecoveryHypotheses::FixedDesign => {
            range_checks(&mut checks);
            let sparsity_rhs = n_f / (96.0 * c0 * c0 * sigma * sigma * k_eff * k_eff * p_f.ln());
            checks.push(HypothesisCheck {
                name: "linear_sparsity".into(),
                hypothesis: format!("s < n/(96·c0²·sigma²·K²·log p) = {sparsity_rhs:.4}"),
                holds: s_f < sparsity_rhs,
                slack: sparsity_rhs - s_f,
            });
            checks.push(HypothesisCheck::upper(
                "incoherence_sparsity",
                "r_n·sqrt(s) ≤ (1−eta)/(32·K²·lambda_init)".to_string(),
                r_n_tilde * s_f.sqrt(),
                (1.0 - eta) / (32.0 * k_eff * k_eff * lambda_init),
            ));
            let factor = (2.0 * r_n_tilde / (1.0 - eta)).max(m_mult / 3.0f64.sqrt());
            let rhs = factor * 16.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            checks.push(HypothesisCheck::strict_lower(
                "beta_min",
                format!(
                    "beta_min > max(2r_n/(1−eta), M/sqrt(3))·16K²·lambda_init·sqrt(s) = {rhs:.6e}"
                ),
                beta_min,
                rhs,
            ));
        }
        RecoveryHypotheses::FixedDesignEigen => {
            range_checks(&mut checks);
            checks.push(HypothesisCheck::upper(
                "sparsity",
                "s ≤ sqrt(Λ_min(s))·(1−eta)/(32·K²·lambda_init)".to_string(),
                s_f,
                lambda_min_s.sqrt() * (1.0 - eta) / (32.0 * k_eff * k_eff * lambda_init),
            ));
            let factor = (2.0 * s_f.sqrt() / ((1.0 - eta) * lambda_min_s.sqrt()))
                .max(m_mult / 3.0f64.sqrt());
            let rhs = factor * 16.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            checks.push(HypothesisCheck::strict_lower(
                "beta_min",
                format!("beta_min > max(2sqrt(s)/((1−eta)sqrt(Λ_min)), M/sqrt(3))·16K²·lambda_init·sqrt(s) = {rhs:.6e}"),
                beta_min,
                rhs,
            ));
        }
        RecoveryHypotheses::FixedDesignOrtho => {
            range_checks(&mut checks);
            let theta_1s = match inputs.theta_1s {
                Some(v) => v,
                None => restricted_orthogonality(problem.x.view(), 1, s)?,
            };
            checks.push(HypothesisCheck::strict_lower(
                "restricted_orthogonality",
                format!(
                    "Λ_min(s) > 16·k0·K²·lambda_init·s·theta_{{1,s}} with theta = {theta_1s:.4}"
                ),
                lambda_min_s,
                16.0 * k0 * k_eff * k_eff * lambda_init * s_f * theta_1s,
            ));
            let sparsity_rhs = n_f / (96.0 * c0 * c0 * sigma * sigma * k_eff * k_eff * p_f.ln());
            checks.push(HypothesisCheck {
                name: "linear_sparsity".into(),
                hypothesis: format!("s < n/(96·c0²·sigma²·K²·log p) = {sparsity_rhs:.4}"),
                holds: s_f < sparsity_rhs,
                slack: sparsity_rhs - s_f,
            });
            let factor = (2.0 * s_f.sqrt() * theta_1s / ((1.0 - eta) * lambda_min_s))
                .max(m_mult / 3.0f64.sqrt());
            let rhs = factor * 16.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            checks.push(HypothesisCheck::strict_lower(
                "beta_min",
                format!("beta_min > max(2sqrt(s)·theta/((1−eta)Λ_min), M/sqrt(3))·16K²·lambda_init·sqrt(s) = {rhs:.6e}"),
                beta_min,
                rhs,
            ));
        }
        RecoveryHypotheses::RandomDesign => {
            range_checks(&mut checks);
            let c2 = constants.c2;
            checks.push(HypothesisCheck {
                name: "dimension_regime".into(),
                hypothesis: format!("p < exp(n/(4·C2²)) = {:.4e}", (n_f / (4.0 * c2 * c2)).exp()),
                holds: p_f < (n_f / (4.0 * c2 * c2)).exp(),
                slack: (n_f / (4.0 * c2 * c2)).exp() - p_f,
            });
            // k here is K(s,s,k0,Σ).
            let cap = (1.0 / (32.0 * k * k))
                * (1.0 / c2).min(lambda_min_s.sqrt() * (1.0 - eta) / (6.0 * 6.0f64.sqrt() * sigma))
                * (n_f / p_f.ln()).sqrt();
            checks.push(HypothesisCheck::upper(
                "sparsity_random",
                format!("s ≤ (1/(32K(Σ)²))·min(1/C2, sqrt(Λ_min)(1−eta)/(6sqrt(6)sigma))·sqrt(n/log p) = {cap:.4}"),
                s_f,
                cap,
            ));
            let factor = (2.0 * s_f.sqrt() / ((1.0 - eta) * lambda_min_s.sqrt()))
                .max(m_mult / 3.0f64.sqrt());
            let rhs = factor * 16.0 * k_eff * k_eff * lambda_init * s_f.sqrt();
            checks.push(HypothesisCheck::strict_lower(
                "beta_min",
                format!("beta_min > max(2sqrt(s)/((1−eta)sqrt(Λ_min)), M/sqrt(3))·16·(sqrt(2)K(Σ))²·lambda_init·sqrt(s) = {rhs:.6e}"),
                beta_min,
                rhs,
            ));
        }
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// Assembled report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_est: Option<ReEstimate>,
    /// θ_{1,s} for the requested s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_1s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_n: Option<RnBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub irrepresentable: Option<IrrepresentableCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_incoherence: Option<WeightedIncoherence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_t: Option<EventT>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_x: Option<EventX>,
    pub theorem_checks: Vec<HypothesisCheck>,
}

/// What to compute in [`condition_report`].
#[derive(Debug, Clone)]
pub struct ReportOptions {
    /// Sparsity for Λ_min(s), K and θ; defaults to the support size.
    pub s: Option<usize>,
    /// Denominator block size m for K; defaults to s.
    pub m: Option<usize>,
    pub support: Option<Vec<usize>>,
    /// Weights with matching support signs for the weighted incoherence check.
    pub weights: Option<(WeightVector, Vec<i8>)>,
    /// Realized noise and its scale for the low-noise event check.
    pub noise: Option<(Array1<f64>, f64)>,
    pub sigma_matrix: Option<Array2<f64>>,
    pub constants: Constants,
    /// Random cone starts per subset when estimating K.
    pub budget: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            s: None,
            m: None,
            support: None,
            weights: None,
            noise: None,
            sigma_matrix: None,
            constants: Constants::default(),
            budget: 8,
        }
    }
}

pub fn condition_report(x: ArrayView2<'_, f64>, opts: &ReportOptions) -> Result<ConditionReport> {
    let p = x.ncols();
    let s = opts.s.or(opts.support.as_ref().map(|sup| sup.len()));
    let gram = gram_of(x);

    let mut report = ConditionReport {
        lambda_min_s: None,
        k_est: None,
        theta_1s: None,
        r_n: None,
        irrepresentable: None,
        weighted_incoherence: None,
        event_t: None,
        event_x: None,
        theorem_checks: Vec::new(),
    };

    if let Some(s) = s {
        if s == 0 || s > p {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= s <= p, got s = {s}"
            )));
        }
        report.lambda_min_s = Some(match lambda_min_subset_gram(gram.view(), s, ENUM_CAP) {
            Ok(v) => v,
            Err(Error::EnumerationCap { .. }) => {
                lambda_min_subset_sampled(gram.view(), s, 2000, 0)?
            }
            Err(e) => return Err(e),
        });
        if s < p {
            report.theta_1s = Some(restricted_orthogonality_gram(gram.view(), 1, s, ENUM_CAP)?);
        }
        let m = opts.m.unwrap_or(s).min(p.saturating_sub(s));
        let mut cfg = ReConfig::new(m, opts.constants.k0);
        cfg.starts = opts.budget;
        report.k_est = Some(re_constant_gram(gram.view(), s, &cfg)?);
    }

    if let Some(support) = &opts.support {
        report.r_n = Some(r_n_with_bounds(x, support, opts.constants.c0)?);
        report.irrepresentable = Some(irrepresentable_margin_gram(
            gram.view(),
            support,
            opts.constants.eta,
        )?);
        if let Some((weights, signs)) = &opts.weights {
            report.weighted_incoherence = Some(weighted_incoherence_gram(
                gram.view(),
                support,
                weights,
                signs,
                opts.constants.eta,
            )?);
        }
    }

    if let Some((eps, sigma)) = &opts.noise {
        report.event_t = Some(event_t(x, eps, *sigma, opts.constants.c0)?);
    }

    if let Some(sigma_matrix) = &opts.sigma_matrix {
        report.event_x = Some(event_x(x, sigma_matrix.view(), opts.constants.c2)?);
    }

    Ok(report)
}
