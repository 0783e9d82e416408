//! Entry and exit of users.
//!
//! Each network time step the reputations are taken at their quasi-stationary
//! equilibrium, every user whose benefit falls below the cost `tau` leaves, and
//! if nobody qualifies the single least-reputable user is forced out. Leavers
//! lose all their links and their slots are taken by newcomers who wire
//! themselves to every other user independently with probability `p`, in both
//! directions.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CoreAnalysis, DirectedNetwork, NodeId};
use crate::metrics::StepRecord;
use crate::reputation::{equilibrium, EquilibriumResult, ReputationError, SolverConfig};

/// Reputations within this distance of the minimum are tied for forced exit.
pub const MIN_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("cost tau must lie in [0, 1), got {0}")]
    InvalidTau(f64),
    #[error("link probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("links per user must lie in [0, n - 1] = [0, {max}], got {m}")]
    InvalidLinksPerUser { m: f64, max: f64 },
    #[error("reputation vector is empty")]
    EmptyReputations,
    #[error("no leavers to replace")]
    NoLeavers,
    #[error("leaver {node} is not a slot of a network with {n} users")]
    LeaverOutOfRange { node: NodeId, n: usize },
    #[error("leaver {0} listed twice")]
    DuplicateLeaver(NodeId),
    #[error(transparent)]
    Reputation(#[from] ReputationError),
}

/// Stay iff `b_i - tau >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitRule {
    pub tau: f64,
    /// Force the least-reputable user out when nobody leaves voluntarily.
    pub force_min_exit: bool,
}

impl ExitRule {
    pub fn new(tau: f64) -> Result<Self, DynamicsError> {
        if !(0.0..1.0).contains(&tau) {
            return Err(DynamicsError::InvalidTau(tau));
        }
        Ok(Self {
            tau,
            force_min_exit: true,
        })
    }

    pub fn without_forced_exit(mut self) -> Self {
        self.force_min_exit = false;
        self
    }
}

/// Random wiring of newcomers: every ordered pair involving a newcomer gets an
/// edge with probability `p`, so a newcomer follows `m = p (N - 1)` users on average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewireModel {
    p: f64,
}

impl RewireModel {
    pub fn from_probability(p: f64) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DynamicsError::InvalidProbability(p));
        }
        Ok(Self { p })
    }

    pub fn from_links_per_user(m: f64, n: usize) -> Result<Self, DynamicsError> {
        let max = n.saturating_sub(1) as f64;
        if !(m >= 0.0 && m <= max) || max == 0.0 {
            return Err(DynamicsError::InvalidLinksPerUser { m, max });
        }
        Ok(Self { p: m / max })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn links_per_user(&self, n: usize) -> f64 {
        self.p * n.saturating_sub(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leavers {
    /// Ascending.
    pub ids: Vec<NodeId>,
    /// Set when the only leaver was forced out as the least-reputable user.
    pub forced: Option<NodeId>,
}

/// Users that leave given reputations `b`.
pub fn select_leavers<R: Rng + ?Sized>(
    b: &[f64],
    rule: &ExitRule,
    rng: &mut R,
) -> Result<Leavers, DynamicsError> {
    if b.is_empty() {
        return Err(DynamicsError::EmptyReputations);
    }
    let ids: Vec<NodeId> = (0..b.len()).filter(|&i| b[i] < rule.tau).collect();
    if !ids.is_empty() || !rule.force_min_exit {
        return Ok(Leavers { ids, forced: None });
    }
    let min = b.iter().copied().fold(f64::INFINITY, f64::min);
    let tied: Vec<NodeId> = (0..b.len())
        .filter(|&i| b[i] <= min + MIN_TIE_TOLERANCE)
        .collect();
    let pick = tied[rng.random_range(0..tied.len())];
    Ok(Leavers {
        ids: vec![pick],
        forced: Some(pick),
    })
}

/// Removes every link of each leaver and rewires its slot as a newcomer.
///
/// Newcomers of the same step can link to each other; every ordered pair is
/// sampled exactly once.
pub fn rewire_newcomers<R: Rng + ?Sized>(
    net: &mut DirectedNetwork,
    leavers: &[NodeId],
    model: &RewireModel,
    rng: &mut R,
) -> Result<(), DynamicsError> {
    if leavers.is_empty() {
        return Err(DynamicsError::NoLeavers);
    }
    let n = net.n();
    let mut newcomer_rank = vec![usize::MAX; n];
    for (k, &v) in leavers.iter().enumerate() {
        if v >= n {
            return Err(DynamicsError::LeaverOutOfRange { node: v, n });
        }
        if newcomer_rank[v] != usize::MAX {
            return Err(DynamicsError::DuplicateLeaver(v));
        }
        newcomer_rank[v] = k;
    }
    for &v in leavers {
        net.isolate(v);
    }
    let p = model.p();
    for (k, &v) in leavers.iter().enumerate() {
        for (u, &rank) in newcomer_rank.iter().enumerate() {
            // pairs with an earlier newcomer were sampled when it was wired
            if u == v || rank < k {
                continue;
            }
            if rng.random_bool(p) {
                net.insert_unchecked(v, u);
            }
            if rng.random_bool(p) {
                net.insert_unchecked(u, v);
            }
        }
    }
    Ok(())
}

/// What happened during one network time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub t: u64,
    pub departed: Vec<NodeId>,
    /// Slots reoccupied by newcomers; always equal to `departed`.
    pub arrived: Vec<NodeId>,
    pub b_before: Vec<f64>,
    pub forced_exit: Option<NodeId>,
    /// False when the equilibrium used for the decision did not reach tolerance.
    pub solver_converged: bool,
}

/// One network time step: equilibrium, exit decisions, replacement.
pub fn step<R: Rng + ?Sized>(
    net: &mut DirectedNetwork,
    t: u64,
    rule: &ExitRule,
    model: &RewireModel,
    solver: &SolverConfig,
    rng: &mut R,
) -> Result<(StepOutcome, EquilibriumResult), DynamicsError> {
    let eq = equilibrium(net, solver)?;
    let leavers = select_leavers(&eq.b, rule, rng)?;
    if !leavers.ids.is_empty() {
        rewire_newcomers(net, &leavers.ids, model, rng)?;
    }
    let outcome = StepOutcome {
        t,
        arrived: leavers.ids.clone(),
        departed: leavers.ids,
        b_before: eq.b.clone(),
        forced_exit: leavers.forced,
        solver_converged: eq.converged,
    };
    Ok((outcome, eq))
}

/// Everything observed at one time step, before the replacement takes effect.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub record: StepRecord,
    pub outcome: StepOutcome,
    pub max_out_degree: usize,
}

/// A single seeded run of the entry/exit dynamics.
#[derive(Debug, Clone)]
pub struct Simulation<R> {
    net: DirectedNetwork,
    rule: ExitRule,
    model: RewireModel,
    solver: SolverConfig,
    rng: R,
    t: u64,
    unconverged_steps: u64,
}

impl<R: Rng> Simulation<R> {
    /// Starts from a random network drawn from the rewiring model itself.
    pub fn new(
        n: usize,
        rule: ExitRule,
        model: RewireModel,
        solver: SolverConfig,
        mut rng: R,
    ) -> Self {
        let net = DirectedNetwork::random(n, model.p(), &mut rng);
        Self::from_network(net, rule, model, solver, rng)
    }

    pub fn from_network(
        net: DirectedNetwork,
        rule: ExitRule,
        model: RewireModel,
        solver: SolverConfig,
        rng: R,
    ) -> Self {
        Self {
            net,
            rule,
            model,
            solver,
            rng,
            t: 0,
            unconverged_steps: 0,
        }
    }

    pub fn network(&self) -> &DirectedNetwork {
        &self.net
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Steps whose exit decision used an equilibrium that missed tolerance.
    pub fn unconverged_steps(&self) -> u64 {
        self.unconverged_steps
    }

    pub fn advance(&mut self) -> Result<StepReport, DynamicsError> {
        let analysis = CoreAnalysis::compute(&self.net);
        let max_out_degree = self.net.max_out_degree();
        let n = self.net.n();
        let (outcome, eq) = step(
            &mut self.net,
            self.t,
            &self.rule,
            &self.model,
            &self.solver,
            &mut self.rng,
        )?;
        if !eq.converged {
            self.unconverged_steps += 1;
        }
        let record = StepRecord {
            t: self.t,
            b_mean: eq.mean_b(),
            lambda1: eq.lambda1,
            core_size: analysis.core_size,
            core_alive: analysis.is_core_alive,
            departed: outcome.departed.len(),
            y_remaining: 1.0 - outcome.departed.len() as f64 / n as f64,
            whole_network: analysis.whole_network_component,
        };
        self.t += 1;
        Ok(StepReport {
            record,
            outcome,
            max_out_degree,
        })
    }
}
