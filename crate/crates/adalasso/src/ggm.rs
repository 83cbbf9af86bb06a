//! Gaussian graphical model selection by the many-regressions pursuit:
//! each node is regressed on all others with the adaptive Lasso, and edges
//! are declared by combining the two directed neighborhood estimates with
//! the AND or OR rule.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_lasso, AdaptiveConfig, AdaptiveTrace, LambdaRange};
use crate::linalg;
use crate::model::{Estimate, RegressionProblem};
use crate::{Error, Result};

/// An unordered edge with its endpoints in increasing order.
pub type Edge = (usize, usize);

/// A precision matrix (inverse covariance) with its implied edge set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionModel {
    matrix: Vec<Vec<f64>>,
    edges: BTreeSet<Edge>,
}

impl PrecisionModel {
    /// Validates symmetry and positive-definiteness and derives the edge set
    /// from the off-diagonal nonzero pattern.
    pub fn new(q: Array2<f64>) -> Result<Self> {
        let p = q.nrows();
        if q.ncols() != p || p == 0 {
            return Err(Error::InvalidArgument(
                "precision matrix must be square".into(),
            ));
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if (q[[i, j]] - q[[j, i]]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "precision matrix is asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let min_eig = linalg::min_eig_sym(q.view());
        if min_eig <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "precision matrix is not positive-definite (min eigenvalue {min_eig:e})"
            )));
        }
        let mut edges = BTreeSet::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if q[[i, j]] != 0.0 {
                    edges.insert((i, j));
                }
            }
        }
        let matrix = q.rows().into_iter().map(|r| r.to_vec()).collect();
        Ok(PrecisionModel { matrix, edges })
    }

    pub fn p(&self) -> usize {
        self.matrix.len()
    }

    pub fn q(&self) -> Array2<f64> {
        let p = self.p();
        Array2::from_shape_fn((p, p), |(i, j)| self.matrix[i][j])
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Σ = Q⁻¹.
    pub fn covariance(&self) -> Result<Array2<f64>> {
        let p = self.p();
        linalg::solve_spd_multi(self.q().view(), Array2::eye(p).view())
    }

    /// Rescales so the implied covariance has unit diagonal: with
    /// D = diag(Σ), the new precision is D^{1/2}·Q·D^{1/2}. The zero pattern
    /// (hence the edge set) is unchanged.
    pub fn rescaled_to_unit_variances(&self) -> Result<PrecisionModel> {
        let sigma = self.covariance()?;
        let p = self.p();
        let scale: Vec<f64> = (0..p).map(|i| sigma[[i, i]].sqrt()).collect();
        let q = self.q();
        let rescaled = Array2::from_shape_fn((p, p), |(i, j)| scale[i] * q[[i, j]] * scale[j]);
        PrecisionModel::new(rescaled)
    }

    /// Residual noise scale of the node-i regression: sqrt(1/Q_ii).
    pub fn node_noise_sigma(&self, i: usize) -> f64 {
        (1.0 / self.matrix[i][i]).sqrt()
    }
}

/// True regression coefficients of node i on the remaining nodes:
/// beta_j = −Q_ij / Q_ii, returned in reduced order (node i removed).
pub fn beta_from_precision(q: &Array2<f64>, i: usize) -> Result<Array1<f64>> {
    let p = q.nrows();
    if i >= p {
        return Err(Error::InvalidArgument(format!(
            "node {i} out of range (p = {p})"
        )));
    }
    let q_ii = q[[i, i]];
    if q_ii.is_nan() || q_ii <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "precision diagonal entry {i} must be positive, got {q_ii}"
        )));
    }
    Ok(Array1::from_iter(
        (0..p).filter(|&j| j != i).map(|j| -q[[i, j]] / q_ii),
    ))
}

/// Where the per-node noise scale for the λ formulas comes from.
#[derive(Debug, Clone)]
pub enum SigmaSource {
    /// Simulation mode: σ_i = sqrt(1/Q_ii) from a known precision matrix
    /// (rescaled to unit variances before use).
    Precision(PrecisionModel),
    /// One user-supplied scale for every node.
    Fixed(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct GgmConfig {
    pub adaptive: AdaptiveConfig,
    pub sigma: SigmaSource,
}

/// Per-node result of the pursuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRegression {
    pub node: usize,
    /// Estimated neighborhood in node labels.
    pub neighbors: Vec<usize>,
    pub trace: AdaptiveTrace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Regresses column i of the samples on the remaining columns with the full
/// adaptive pipeline and maps the coefficients back to node labels.
pub fn neighborhood_regression(
    samples: &Array2<f64>,
    node: usize,
    config: &GgmConfig,
) -> Result<NodeRegression> {
    let (n, p) = (samples.nrows(), samples.ncols());
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if node >= p {
        return Err(Error::InvalidArgument(format!(
            "node {node} out of range (p = {p})"
        )));
    }

    let others: Vec<usize> = (0..p).filter(|&j| j != node).collect();
    let response = samples.column(node).to_owned();

    // A (near-)constant response carries no regression information; report a
    // trivial converged fit instead of chasing numerical noise.
    let mean = response.sum() / n as f64;
    let variance = response.mapv(|v| (v - mean) * (v - mean)).sum() / n as f64;
    if variance < 1e-12 {
        let zeros = Array1::zeros(p - 1);
        let weights = crate::adaptive::compute_weights(zeros.view());
        return Ok(NodeRegression {
            node,
            neighbors: Vec::new(),
            trace: AdaptiveTrace {
                beta_init: zeros.clone(),
                lambda_init_used: 0.0,
                weights,
                s_bar: 0,
                s_bar_set: Vec::new(),
                lambda_n_range: LambdaRange {
                    lo: 0.0,
                    hi: 0.0,
                    degenerate: false,
                },
                lambda_n_used: 0.0,
                k_used: None,
                final_estimate: Estimate::from_beta(zeros, 0.0, 0, true),
            },
            warning: Some(format!(
                "node {node} has (near-)zero sample variance {variance:e}"
            )),
        });
    }

    let mut design = Array2::zeros((n, p - 1));
    for (k, &j) in others.iter().enumerate() {
        design.column_mut(k).assign(&samples.column(j));
    }

    let sigma = match &config.sigma {
        SigmaSource::Precision(model) => model.rescaled_to_unit_variances()?.node_noise_sigma(node),
        SigmaSource::Fixed(s) => *s,
        SigmaSource::PerNode(v) => {
            if v.len() != p {
                return Err(Error::DimensionMismatch(
                    "per-node sigma length differs from p".into(),
                ));
            }
            v[node]
        }
    };

    let problem = RegressionProblem::new(design, response).with_sigma(sigma);
    let trace = adaptive_lasso(&problem, &config.adaptive)?;
    let neighbors: Vec<usize> = trace
        .final_estimate
        .support
        .iter()
        .map(|&k| others[k])
        .collect();
    Ok(NodeRegression {
        node,
        neighbors,
        trace,
        warning: None,
    })
}

/// Combined estimate over all p neighborhood regressions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphEstimate {
    /// Edges present in both directed neighborhoods.
    pub and_edges: BTreeSet<Edge>,
    /// Edges present in at least one directed neighborhood.
    pub or_edges: BTreeSet<Edge>,
    /// or_edges minus and_edges.
    pub disagreement: BTreeSet<Edge>,
    pub per_node: Vec<NodeRegression>,
    /// Nodes whose regression failed, with the error description. The graph
    /// is assembled from the successful nodes.
    pub failures: Vec<(usize, String)>,
    pub warnings: Vec<String>,
}

/// Runs the p node regressions (in parallel; results do not depend on the
/// worker count) and assembles the AND/OR edge sets.
pub fn select_graph(samples: &Array2<f64>, config: &GgmConfig) -> Result<GraphEstimate> {
    let (n, p) = (samples.nrows(), samples.ncols());
    if n < 2 || p < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and p >= 2, got n = {n}, p = {p}"
        )));
    }

    let mut warnings = Vec::new();
    for j in 0..p {
        let col = samples.column(j);
        let mean = col.sum() / n as f64;
        let var = col.mapv(|v| (v - mean) * (v - mean)).sum() / n as f64;
        if (var - 1.0).abs() > 0.2 {
            warnings.push(format!(
                "column {j} sample variance {var:.3} deviates from 1 by more than 20%"
            ));
        }
    }

    let results: Vec<(usize, Result<NodeRegression>)> = (0..p)
        .into_par_iter()
        .map(|node| (node, neighborhood_regression(samples, node, config)))
        .collect();

    let mut per_node = Vec::new();
    let mut failures = Vec::new();
    let mut directed = vec![BTreeSet::new(); p];
    for (node, outcome) in results {
        match outcome {
            Ok(reg) => {
                directed[node] = reg.neighbors.iter().copied().collect::<BTreeSet<usize>>();
                if let Some(w) = &reg.warning {
                    warnings.push(w.clone());
                }
                per_node.push(reg);
            }
            Err(e) => failures.push((node, e.to_string())),
        }
    }

    let mut and_edges = BTreeSet::new();
    let mut or_edges = BTreeSet::new();
    for i in 0..p {
        for &j in &directed[i] {
            let edge = (i.min(j), i.max(j));
            if directed[j].contains(&i) {
                and_edges.insert(edge);
            }
            or_edges.insert(edge);
        }
    }
    let disagreement: BTreeSet<Edge> = or_edges.difference(&and_edges).copied().collect();

    Ok(GraphEstimate {
        and_edges,
        or_edges,
        disagreement,
        per_node,
        failures,
        warnings,
    })
}

/// Renders edges as a DOT graph; `dashed` edges get a dashed style (used to
/// show OR-only edges next to the AND skeleton).
pub fn to_dot(p: usize, solid: &BTreeSet<Edge>, dashed: Option<&BTreeSet<Edge>>) -> String {
    let mut out = String::from("graph G {\n");
    for node in 0..p {
        out.push_str(&format!("  {node};\n"));
    }
    for &(i, j) in solid {
        out.push_str(&format!("  {i} -- {j};\n"));
    }
    if let Some(extra) = dashed {
        for &(i, j) in extra {
            out.push_str(&format!("  {i} -- {j} [style=dashed];\n"));
        }
    }
    out.push_str("}\n");
    out
}
