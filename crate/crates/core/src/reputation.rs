//! Equilibrium reputations.
//!
//! Absolute reputation follows `dX_i/dt = sum_j a_ij X_j - phi X_i`. Users
//! compare themselves to the most reputable user, `b_i = X_i / X_max`, and
//! the equilibrium of the `b` dynamics is the Perron-Frobenius eigenvector of
//! the adjacency matrix scaled so that its largest entry is exactly 1.
//!
//! The solver iterates `b <- (I + A) b / max((I + A) b)`. The identity shift
//! keeps the iteration from oscillating on periodic (pure cycle) networks and
//! does not move eigenvectors. `lambda1` is read back through the identity
//! `lambda1 = sum_j a_zj b_j`, where `z` is the user with `b_z = 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DirectedNetwork, FollowerIndex, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReputationError {
    #[error("cannot compute reputations of an empty network")]
    EmptyNetwork,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("chain length is unbounded or empty: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    #[default]
    ShiftedPower,
    /// Explicit Euler integration of the relative-reputation ODE, renormalized
    /// to `max(b) = 1` after every step.
    OdeIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Convergence threshold. Iteration stops once both the last max-norm
    /// step and the geometric estimate of the remaining distance to the
    /// fixed point fall below it.
    pub tolerance: f64,
    /// `None` means `100 * n + 1000`.
    pub max_iterations: Option<usize>,
    pub mode: SolverMode,
    /// Euler step for [`SolverMode::OdeIntegration`].
    pub ode_dt: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: None,
            mode: SolverMode::ShiftedPower,
            ode_dt: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = Some(max_iterations);
        self
    }

    pub fn with_mode(mut self, mode: SolverMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ReputationError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(ReputationError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(ReputationError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.ode_dt > 0.0 && self.ode_dt.is_finite()) {
            return Err(ReputationError::InvalidConfig(format!(
                "ode_dt must be positive, got {}",
                self.ode_dt
            )));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or(100 * n + 1000)
    }
}

/// Equilibrium of the relative-reputation dynamics on a fixed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    /// Reputation relative to the most reputable user; `max(b) = 1`.
    pub b: Vec<f64>,
    /// Reputation relative to the total; `sum(x) = 1`.
    pub x: Vec<f64>,
    /// `sum_j a_zj b_j` at the final iterate.
    pub lambda1: f64,
    /// Index of the most reputable user (smallest index on ties).
    pub z: NodeId,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm change over the final iteration (per unit time in ODE mode).
    pub residual: f64,
    /// The network has no directed cycle, so its spectral radius is exactly 0.
    pub acyclic: bool,
}

impl EquilibriumResult {
    /// Spectral radius: exactly zero on acyclic networks, `lambda1` otherwise.
    pub fn spectral_lambda1(&self) -> f64 {
        if self.acyclic {
            0.0
        } else {
            self.lambda1
        }
    }

    /// Reputation averaged over all users.
    pub fn mean_b(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.b.len() as f64
    }
}

/// Perron-Frobenius equilibrium of `net`.
///
/// Acyclic networks have no Perron vector; there the shifted iteration's limit
/// is known in closed form (mass on the endpoints of the longest follower
/// chains, weighted by how many such chains end there) and is returned
/// directly instead of iterating towards it at a `1/t` rate.
pub fn equilibrium(
    net: &DirectedNetwork,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult, ReputationError> {
    cfg.validate()?;
    let n = net.n();
    if n == 0 {
        return Err(ReputationError::EmptyNetwork);
    }
    let index = net.follower_index();
    if let Some(order) = topological_order(net) {
        let b = acyclic_limit(&index, &order);
        return Ok(finish(&index, b, 0, true, 0.0, true));
    }

    let cap = cfg.iteration_cap(n);
    let mut b = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut ratios = [f64::INFINITY; 2];
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        iterations += 1;
        match cfg.mode {
            SolverMode::ShiftedPower => {
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot = b[i] + index.row_sum(i, &b);
                }
            }
            SolverMode::OdeIntegration => {
                let z = argmax(&b);
                let growth = index.row_sum(z, &b);
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot = b[i] + cfg.ode_dt * (index.row_sum(i, &b) - b[i] * growth);
                }
            }
        }
        let top = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        residual = 0.0;
        for (old, new) in b.iter_mut().zip(next.iter()) {
            let scaled = new / top;
            residual = f64::max(residual, (scaled - *old).abs());
            *old = scaled;
        }
        if cfg.mode == SolverMode::OdeIntegration {
            residual /= cfg.ode_dt;
        }
        if residual == 0.0 {
            converged = true;
            break;
        }
        ratios = [ratios[1], residual / previous];
        previous = residual;
        // geometric tail bound on the distance still to travel
        let rho = ratios[0].max(ratios[1]);
        let remaining = if rho < 1.0 {
            residual * rho / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        if residual < cfg.tolerance && remaining < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok(finish(&index, b, iterations, converged, residual, false))
}

fn finish(
    index: &FollowerIndex,
    b: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
    acyclic: bool,
) -> EquilibriumResult {
    let z = argmax(&b);
    let lambda1 = index.row_sum(z, &b);
    let total: f64 = b.iter().sum();
    let x = b.iter().map(|v| v / total).collect();
    EquilibriumResult {
        b,
        x,
        lambda1,
        z,
        iterations,
        converged,
        residual,
        acyclic,
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &value) in v.iter().enumerate().skip(1) {
        if value > v[best] {
            best = i;
        }
    }
    best
}

/// Kahn order along follow edges, or `None` if a cycle exists.
fn topological_order(net: &DirectedNetwork) -> Option<Vec<NodeId>> {
    let n = net.n();
    let mut pending: Vec<usize> = (0..n).map(|v| net.in_degree(v)).collect();
    let mut order: Vec<NodeId> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for w in net.following(v) {
            pending[w] -= 1;
            if pending[w] == 0 {
                order.push(w);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// `lim (I + A)^t 1` direction for nilpotent `A`: the `t^L` term dominates,
/// where `L` is the longest follower chain, and its coefficient at user `i`
/// counts the length-`L` chains ending at `i`.
fn acyclic_limit(index: &FollowerIndex, order: &[NodeId]) -> Vec<f64> {
    let n = index.n();
    let mut depth = vec![0usize; n];
    let mut paths = vec![1.0f64; n];
    for &i in order {
        let row = index.row(i);
        if let Some(d) = row.iter().map(|&j| depth[j] + 1).max() {
            depth[i] = d;
            paths[i] = row
                .iter()
                .filter(|&&j| depth[j] + 1 == d)
                .map(|&j| paths[j])
                .sum();
        }
    }
    let longest = depth.iter().copied().max().unwrap_or(0);
    let top = (0..n)
        .filter(|&i| depth[i] == longest)
        .map(|i| paths[i])
        .fold(0.0, f64::max);
    (0..n)
        .map(|i| {
            if depth[i] == longest {
                paths[i] / top
            } else {
                0.0
            }
        })
        .collect()
}

/// One explicit Euler step of `db_i/dt = sum_j a_ij b_j - b_i sum_j a_zj b_j`,
/// `z = argmax b` (smallest index on ties). No renormalization.
pub fn relative_reputation_ode_step(
    net: &DirectedNetwork,
    b: &[f64],
    dt: f64,
) -> Result<Vec<f64>, ReputationError> {
    check_len(net, b)?;
    if b.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(ReputationError::InvalidInput(
            "reputations must be finite and non-negative".into(),
        ));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(ReputationError::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let z = argmax(b);
    if b[z] <= 0.0 {
        return Err(ReputationError::InvalidInput(
            "max(b) must be positive".into(),
        ));
    }
    let index = net.follower_index();
    let growth = index.row_sum(z, b);
    Ok((0..b.len())
        .map(|i| b[i] + dt * (index.row_sum(i, b) - b[i] * growth))
        .collect())
}

/// `dX_i/dt = sum_j a_ij X_j - phi X_i` for absolute reputations.
pub fn absolute_reputation_derivative(
    net: &DirectedNetwork,
    x: &[f64],
    phi: f64,
) -> Result<Vec<f64>, ReputationError> {
    check_len(net, x)?;
    if phi < 0.0 || x.iter().any(|&v| v < 0.0) {
        return Err(ReputationError::InvalidInput(
            "X and phi must be non-negative".into(),
        ));
    }
    let index = net.follower_index();
    Ok((0..x.len())
        .map(|i| index.row_sum(i, x) - phi * x[i])
        .collect())
}

fn check_len(net: &DirectedNetwork, v: &[f64]) -> Result<(), ReputationError> {
    if v.len() == net.n() {
        Ok(())
    } else {
        Err(ReputationError::InvalidInput(format!(
            "vector has {} entries but the network has {} users",
            v.len(),
            net.n()
        )))
    }
}

/// Longest simple follower chain that survives cost `tau`:
/// `ceil(ln(b_anchor / tau) / ln(lambda1))`.
///
/// The count includes the anchor: position `k` of a chain hanging off a core
/// user with reputation `b_anchor` has `b = b_anchor / lambda1^(k-1)`, so
/// position `n` keeps `b > tau` and position `n + 1` falls to `b <= tau`.
pub fn chain_length_bound(b_anchor: f64, tau: f64, lambda1: f64) -> Result<usize, ReputationError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ReputationError::Domain(format!(
            "tau must lie in (0, 1), got {tau}"
        )));
    }
    if !(b_anchor > 0.0 && b_anchor <= 1.0) {
        return Err(ReputationError::Domain(format!(
            "b_anchor must lie in (0, 1], got {b_anchor}"
        )));
    }
    if !(lambda1 > 1.0 && lambda1.is_finite()) {
        return Err(ReputationError::Domain(format!(
            "lambda1 must exceed 1, got {lambda1}"
        )));
    }
    if b_anchor <= tau {
        return Err(ReputationError::Domain(format!(
            "anchor reputation {b_anchor} does not exceed the cost {tau}"
        )));
    }
    let ratio = (b_anchor / tau).ln() / lambda1.ln();
    // exact integer ratios (b_anchor / tau = lambda1^k) must not round up to k + 1
    let nearest = ratio.round();
    let length = if (ratio - nearest).abs() <= 1e-12 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok(length as usize)
}

/// `max_i |b_i - (1/lambda1) sum_j a_ij b_j|`; zero at an exact equilibrium.
/// Returns infinity when `lambda1` is not positive.
pub fn attenuation_check(net: &DirectedNetwork, eq: &EquilibriumResult) -> f64 {
    if eq.lambda1.is_nan() || eq.lambda1 <= 0.0 {
        return f64::INFINITY;
    }
    let index = net.follower_index();
    (0..net.n())
        .map(|i| (eq.b[i] - index.row_sum(i, &eq.b) / eq.lambda1).abs())
        .fold(0.0, f64::max)
}
