//! Consensus protocols for `N` scalar agents `x_i' = a x_i + u_i` on a path
//! graph.
//!
//! The design runs in error coordinates `e_i = x_i - x_{i+1}`, where
//! `e' = a e + B u` with `B` the signed difference matrix. With scalar `X`
//! and `Y` restricted to
//!
//! ```text
//! [ y1 y1 0 .. 0 ]
//! [ 0  y2 0 .. 0 ]
//! [ ..        .. ]
//! [ 0  ..  0  yN ]
//! ```
//!
//! the gain `K = R^-1 B^T P` only uses errors available to each agent through
//! its neighbours: agents 1 and 2 use `e_1, e_2`, agent `i` uses
//! `e_{i-1}, e_i`, and the last agent uses `e_{N-1}`.

use crate::design::{self, DesignCertificate, DesignError, DesignOptions, DesignProblem};
use crate::lmi::{LmiError, StructureSpec};
use crate::matops::{self, Matrix, Vector};
use crate::system::{LtiSystem, ModelError, QuadraticCost};
use crate::verify::{self, Sample, SimOptions, VerifyError};
use nalgebra::DMatrix;
use thiserror::Error;

/// Agreement threshold on `max |x_i - x_j|`.
pub const CONSENSUS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsensusError {
    #[error("consensus needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("weights must be positive (q = {q}, r = {r})")]
    InvalidWeight { q: f64, r: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("protocol violates the path-graph structure: {0}")]
    StructureViolated(String),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProblem {
    pub n_agents: usize,
    pub agent_pole: f64,
    pub q_weight: f64,
    pub r_weight: f64,
    pub initial_states: Vec<f64>,
}

impl ConsensusProblem {
    pub fn validate(&self) -> Result<(), ConsensusError> {
        if self.n_agents < 2 {
            return Err(ConsensusError::TooFewAgents(self.n_agents));
        }
        if !(self.q_weight > 0.0 && self.r_weight > 0.0) {
            return Err(ConsensusError::InvalidWeight {
                q: self.q_weight,
                r: self.r_weight,
            });
        }
        if self.initial_states.len() != self.n_agents {
            return Err(ConsensusError::DimensionMismatch(format!(
                "{} initial states for {} agents",
                self.initial_states.len(),
                self.n_agents
            )));
        }
        if !self.agent_pole.is_finite() || self.initial_states.iter().any(|x| !x.is_finite()) {
            return Err(ConsensusError::DimensionMismatch("non-finite problem data".into()));
        }
        Ok(())
    }

    pub fn n_errors(&self) -> usize {
        self.n_agents - 1
    }
}

/// The `(N-1) x N` map `x -> e` with `e_i = x_i - x_{i+1}`.
pub fn difference_matrix(n_agents: usize) -> Matrix {
    let mut d = Matrix::zeros(n_agents - 1, n_agents);
    for i in 0..n_agents - 1 {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -1.0;
    }
    d
}

/// Scalar `X`, and `Y` free only at `(1,1) = (1,2)` and on the diagonal.
pub fn path_structure(n_errors: usize) -> Result<StructureSpec, LmiError> {
    let mut mask = DMatrix::from_element(n_errors, n_errors, false);
    for i in 0..n_errors {
        mask[(i, i)] = true;
    }
    let mut ties = Vec::new();
    if n_errors >= 2 {
        mask[(0, 1)] = true;
        ties.push(((0, 0), (0, 1)));
    }
    StructureSpec::with_ties(mask, true, ties)
}

/// Entries of the `N x (N-1)` agent gain allowed by the path topology.
pub fn allowed_gain_pattern(n_agents: usize) -> DMatrix<bool> {
    let n_err = n_agents - 1;
    let mut allowed = DMatrix::from_element(n_agents, n_err, false);
    for i in 0..n_agents {
        if i < n_err {
            allowed[(i, i)] = true;
        }
        if i >= 1 {
            allowed[(i, i - 1)] = true;
        }
    }
    if n_err >= 2 {
        allowed[(0, 1)] = true;
        allowed[(1, 0)] = true;
        allowed[(1, 1)] = true;
    }
    allowed
}

pub fn build_error_system(problem: &ConsensusProblem) -> Result<DesignProblem, ConsensusError> {
    problem.validate()?;
    let n = problem.n_errors();
    let a = Matrix::identity(n, n) * problem.agent_pole;
    let b = difference_matrix(problem.n_agents);
    let sys = LtiSystem::new(a, b)?;
    let cost = QuadraticCost::new(
        Matrix::identity(n, n) * problem.q_weight,
        Matrix::identity(problem.n_agents, problem.n_agents) * problem.r_weight,
    )?;
    let x = Vector::from_column_slice(&problem.initial_states);
    let e0 = difference_matrix(problem.n_agents) * x;
    Ok(DesignProblem::new(sys, cost, e0)?.with_structure(path_structure(n)?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProtocol {
    /// Error-space gain, `u = -k e`.
    pub k: Matrix,
    /// `-k`, i.e. `u = protocol_matrix * e`.
    pub protocol_matrix: Matrix,
    pub structure_ok: bool,
    pub gamma_bar: f64,
    /// Exact error-system cost `e0^T Z e0`.
    pub j_realized: f64,
    /// The same cost from simulating the error system.
    pub j_simulated: f64,
    pub certificate: DesignCertificate,
}

/// Checks the sparsity of `k` and, with at least two errors, `k(1,1) = k(1,2)`.
pub fn check_structure(k: &Matrix) -> Result<(), String> {
    let n_agents = k.nrows();
    if n_agents < 2 || k.ncols() != n_agents - 1 {
        return Err(format!("gain has shape {}x{}", k.nrows(), k.ncols()));
    }
    let allowed = allowed_gain_pattern(n_agents);
    for i in 0..n_agents {
        for j in 0..n_agents - 1 {
            if !allowed[(i, j)] && k[(i, j)] != 0.0 {
                return Err(format!("entry ({}, {}) = {:e} must be zero", i + 1, j + 1, k[(i, j)]));
            }
        }
    }
    if n_agents >= 3 && k[(0, 0)] != k[(0, 1)] {
        return Err(format!(
            "first agent weights differ: {:e} vs {:e}",
            k[(0, 0)],
            k[(0, 1)]
        ));
    }
    Ok(())
}

pub fn design_consensus(
    problem: &ConsensusProblem,
    opts: &DesignOptions,
) -> Result<ConsensusProtocol, ConsensusError> {
    let design_problem = build_error_system(problem)?.with_options(opts.clone());
    let cert = design::design_suboptimal(&design_problem)?;
    let k = cert.k.clone();
    check_structure(&k).map_err(ConsensusError::StructureViolated)?;

    let (sys, cost, e0) = (&design_problem.sys, &design_problem.cost, &design_problem.x0);
    let exact = verify::cost_of_gain(&cert.a_cl, cost, &k, e0)?;
    let sim = verify::simulate_cost(sys, cost, &k, e0, &SimOptions::default())?;
    Ok(ConsensusProtocol {
        protocol_matrix: -&k,
        structure_ok: true,
        gamma_bar: cert.gamma_bar,
        j_realized: exact.j,
        j_simulated: sim.j,
        k,
        certificate: cert,
    })
}

/// Agent-level closed loop `x' = (a I - K D) x` with `D` the difference map.
pub fn agent_closed_loop(problem: &ConsensusProblem, k: &Matrix) -> Matrix {
    let n = problem.n_agents;
    Matrix::identity(n, n) * problem.agent_pole - k * difference_matrix(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSimulation {
    /// `cost` accumulates `q ||D x||^2 + r ||u||^2`.
    pub samples: Vec<Sample>,
    pub final_disagreement: f64,
    /// First sample time after which the disagreement stays below
    /// [`CONSENSUS_TOL`], if it does by the end.
    pub consensus_time: Option<f64>,
}

pub fn max_disagreement(x: &Vector) -> f64 {
    x.max() - x.min()
}

/// Simulates all agents under `u = -k D x` up to `t_end`.
pub fn simulate_agents(
    problem: &ConsensusProblem,
    k: &Matrix,
    step: f64,
    t_end: f64,
) -> Result<AgentSimulation, ConsensusError> {
    problem.validate()?;
    if k.shape() != (problem.n_agents, problem.n_errors()) {
        return Err(ConsensusError::DimensionMismatch("gain shape".into()));
    }
    let d = difference_matrix(problem.n_agents);
    let kd = k * &d;
    let weight = matops::symmetric_part(
        &(d.transpose() * &d * problem.q_weight + kd.transpose() * &kd * problem.r_weight),
    );
    let a_cl = agent_closed_loop(problem, k);
    let x0 = Vector::from_column_slice(&problem.initial_states);
    let samples = verify::integrate(&a_cl, &weight, &x0, step, t_end, None);
    let final_disagreement = max_disagreement(&samples.last().expect("initial sample").x);
    let consensus_time = samples
        .iter()
        .rposition(|s| max_disagreement(&s.x) >= CONSENSUS_TOL)
        .map_or(Some(0.0), |i| samples.get(i + 1).map(|s| s.t));
    Ok(AgentSimulation {
        samples,
        final_disagreement,
        consensus_time,
    })
}
