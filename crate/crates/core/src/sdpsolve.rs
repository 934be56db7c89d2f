//! Feasibility solver for small dense systems of affine matrix constraints.
//!
//! Equalities are eliminated first. Plain pins (`v_k = 0`) and ties
//! (`v_a = v_b`) are substituted structurally so that pinned entries stay
//! exactly zero; the remaining equalities are handled by an SVD null-space
//! parameterization `v = v0 + V z`.
//!
//! The inequalities are then shifted by their required margins,
//! `F_i(z) = s_i G_i(v0 + V z) - margin_i I` with `s_i = +-1`, and the solver
//! runs a log-barrier path-following method on
//!
//! ```text
//! minimize t   subject to   F_i(z) + t I > 0,   ||v0 + V z|| < rho
//! ```
//!
//! A final slack `t < 0` means every constraint holds with at least its
//! required margin. An optional second phase minimizes a linear objective
//! over the shifted feasible set.

use crate::lmi::{AffineMatrixConstraint, Sense, VariableLayout};
use crate::matops::{self, MatError, Matrix, Vector};
use nalgebra::Cholesky;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("no constraints supplied")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    NumericalTrouble,
}

impl std::fmt::Display for FeasibilityStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeasibilityStatus::Feasible => "feasible",
            FeasibilityStatus::Infeasible => "infeasible",
            FeasibilityStatus::NumericalTrouble => "numerical trouble",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMargin {
    pub name: String,
    pub sense: Sense,
    pub required: f64,
    /// Minimum eigenvalue (definite constraints) or largest absolute entry
    /// (equalities) at the returned point.
    pub achieved: f64,
}

impl ConstraintMargin {
    pub fn satisfied(&self, feas_tol: f64) -> bool {
        match self.sense {
            Sense::Zero => self.achieved <= feas_tol,
            _ => self.achieved >= self.required - feas_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Present iff `status == Feasible`.
    pub assignment: Option<Vec<f64>>,
    /// Per-constraint margins at the last iterate.
    pub margins: Vec<ConstraintMargin>,
    /// Best slack reached; negative certifies strict feasibility.
    pub slack: f64,
    /// Best slack after each outer iteration (non-increasing).
    pub slack_history: Vec<f64>,
    pub newton_steps: usize,
    /// Value of the secondary objective, when one was requested.
    pub objective: Option<f64>,
    /// Radius of the variable ball in force at the end.
    pub ball_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub initial_barrier: f64,
    pub barrier_decrease: f64,
    pub newton_tol: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Stop when the barrier duality gap falls below this value.
    pub gap_tol: f64,
    /// Radius of the ball bounding the variables. By default the radius
    /// starts at `1e2 * (1 + ||v0||)` and grows by `1e2` (up to `1e10`)
    /// while the ball may be what prevents feasibility.
    pub variable_bound: Option<f64>,
    /// Linear objective over the layout variables for the second phase.
    pub objective: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-7,
            initial_barrier: 1.0,
            barrier_decrease: 0.2,
            newton_tol: 1e-9,
            max_outer: 200,
            max_newton: 100,
            gap_tol: 1e-8,
            variable_bound: None,
            objective: None,
        }
    }
}

const DEFAULT_BALL_RADIUS: f64 = 1e2;
const BALL_GROWTH: f64 = 1e2;
const MAX_BALL_RADIUS: f64 = 1e10;
/// Fraction of the radius beyond which the ball counts as active.
const BALL_ACTIVE: f64 = 0.5;

/// Interface for substituting another conic solver.
pub trait FeasibilityBackend {
    fn solve(
        &self,
        constraints: &[AffineMatrixConstraint],
        layout: &VariableLayout,
        opts: &SolverOptions,
    ) -> Result<FeasibilityResult, SdpError>;
}

/// The built-in log-barrier backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct BarrierSolver;

impl FeasibilityBackend for BarrierSolver {
    fn solve(
        &self,
        constraints: &[AffineMatrixConstraint],
        layout: &VariableLayout,
        opts: &SolverOptions,
    ) -> Result<FeasibilityResult, SdpError> {
        solve_feasibility(constraints, layout, opts)
    }
}

pub fn solve_feasibility(
    constraints: &[AffineMatrixConstraint],
    layout: &VariableLayout,
    opts: &SolverOptions,
) -> Result<FeasibilityResult, SdpError> {
    validate(constraints, layout, opts)?;
    let dim = layout.dim();

    let param = match Parameterization::build(constraints, dim, opts.feas_tol)? {
        Some(p) => p,
        None => {
            return Ok(FeasibilityResult {
                status: FeasibilityStatus::Infeasible,
                assignment: None,
                margins: Vec::new(),
                slack: f64::INFINITY,
                slack_history: Vec::new(),
                newton_steps: 0,
                objective: None,
                ball_radius: 0.0,
            })
        }
    };

    let inequalities: Vec<&AffineMatrixConstraint> = constraints
        .iter()
        .filter(|c| c.sense != Sense::Zero)
        .collect();
    if inequalities.is_empty() {
        let v = param.point(&Vector::zeros(param.basis.ncols()));
        // only equalities: the particular solution is the answer
        return finish(constraints, v, opts.feas_tol, draft(FeasibilityStatus::Feasible, f64::NEG_INFINITY));
    }
    let q = param.basis.ncols();
    let mut rho = opts
        .variable_bound
        .unwrap_or(DEFAULT_BALL_RADIUS * (1.0 + param.offset.norm()));

    // phase 1: minimize the common slack t over y = (z, t); an automatic
    // ball is enlarged while it may be what blocks feasibility
    let mut total_steps = 0;
    let (y, outcome, status) = loop {
        let mut phase1 = BarrierProblem::new(&inequalities, &param, rho, true);
        let mut y = Vector::zeros(q + 1);
        let worst = phase1
            .constants
            .iter()
            .map(|f| matops::min_eig_sym(f).map(|l| -l))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        y[q] = if worst.is_finite() {
            worst + 1.0 + 0.1 * worst.abs()
        } else {
            1.0
        };
        phase1.objective[q] = 1.0;

        let outcome = phase1.run(&mut y, opts, Some(q));
        total_steps += outcome.newton_steps;
        let slack = y[q];
        log::debug!(
            "phase 1 (radius {rho:.1e}): slack {slack:.6e}, {} newton steps, converged {}",
            outcome.newton_steps,
            outcome.converged
        );
        let status = if slack < 0.0 {
            FeasibilityStatus::Feasible
        } else if outcome.certified_infeasible || (outcome.converged && slack >= 0.0) {
            FeasibilityStatus::Infeasible
        } else {
            FeasibilityStatus::NumericalTrouble
        };
        let ball_use = phase1.ball_vector(&y).norm() / rho;
        if status != FeasibilityStatus::Feasible
            && opts.variable_bound.is_none()
            && ball_use > BALL_ACTIVE
            && rho < MAX_BALL_RADIUS
        {
            rho *= BALL_GROWTH;
            continue;
        }
        break (y, outcome, status);
    };
    let slack = y[q];
    let z = y.rows(0, q).into_owned();
    let mut v = param.point(&z);

    let mut newton_steps = total_steps;
    let mut objective_value = None;

    if status == FeasibilityStatus::Feasible {
        if let Some(c) = &opts.objective {
            let mut phase2 = BarrierProblem::new(&inequalities, &param, rho, false);
            let c_v = Vector::from_column_slice(c);
            phase2.objective = param.basis.transpose() * &c_v;
            let mut z2 = z.clone();
            let out2 = phase2.run(&mut z2, opts, None);
            newton_steps += out2.newton_steps;
            let v2 = param.point(&z2);
            if all_satisfied(constraints, &v2, opts.feas_tol)? {
                v = v2;
            } else {
                log::warn!("objective phase left the feasible set; keeping the phase 1 point");
            }
            objective_value = Some(c_v.dot(&Vector::from_column_slice(&v)));
        }
    }

    finish(
        constraints,
        v,
        opts.feas_tol,
        FeasibilityResult {
            slack_history: outcome.slack_history,
            newton_steps,
            objective: objective_value,
            ball_radius: rho,
            ..draft(status, slack)
        },
    )
}

fn draft(status: FeasibilityStatus, slack: f64) -> FeasibilityResult {
    FeasibilityResult {
        status,
        assignment: None,
        margins: Vec::new(),
        slack,
        slack_history: Vec::new(),
        newton_steps: 0,
        objective: None,
        ball_radius: 0.0,
    }
}

/// Re-evaluates every constraint at `v` and fills in margins and the
/// assignment; a `Feasible` status is downgraded if re-evaluation disagrees.
fn finish(
    constraints: &[AffineMatrixConstraint],
    v: Vec<f64>,
    feas_tol: f64,
    mut result: FeasibilityResult,
) -> Result<FeasibilityResult, SdpError> {
    result.margins = constraints
        .iter()
        .map(|c| {
            Ok(ConstraintMargin {
                name: c.name.clone(),
                sense: c.sense,
                required: c.margin,
                achieved: c.margin_at(&v)?,
            })
        })
        .collect::<Result<Vec<_>, MatError>>()?;

    if result.status == FeasibilityStatus::Feasible && !result.margins.iter().all(|m| m.satisfied(feas_tol)) {
        log::warn!("slack is negative but re-evaluated margins fail; reporting numerical trouble");
        result.status = FeasibilityStatus::NumericalTrouble;
    }
    if result.status == FeasibilityStatus::Feasible {
        result.assignment = Some(v);
    }
    Ok(result)
}

fn validate(
    constraints: &[AffineMatrixConstraint],
    layout: &VariableLayout,
    opts: &SolverOptions,
) -> Result<(), SdpError> {
    if constraints.is_empty() {
        return Err(SdpError::Empty);
    }
    for c in constraints {
        if !c.constant.is_square() {
            return Err(SdpError::DimensionMismatch(format!("constraint {} is not square", c.name)));
        }
        for (&k, coeff) in &c.coefficients {
            if k >= layout.dim() {
                return Err(SdpError::DimensionMismatch(format!(
                    "constraint {} references variable {k} beyond layout dimension {}",
                    c.name,
                    layout.dim()
                )));
            }
            if coeff.shape() != c.constant.shape() {
                return Err(SdpError::DimensionMismatch(format!(
                    "constraint {} has inconsistent coefficient shapes",
                    c.name
                )));
            }
        }
    }
    if let Some(obj) = &opts.objective {
        if obj.len() != layout.dim() {
            return Err(SdpError::DimensionMismatch(format!(
                "objective has {} entries, layout has {}",
                obj.len(),
                layout.dim()
            )));
        }
    }
    Ok(())
}

fn all_satisfied(constraints: &[AffineMatrixConstraint], v: &[f64], tol: f64) -> Result<bool, MatError> {
    for c in constraints {
        if !c.satisfied_at(v, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `v = offset + basis * z`, satisfying every equality constraint.
struct Parameterization {
    offset: Vector,
    basis: Matrix,
}

impl Parameterization {
    /// Returns `None` when the equalities are inconsistent.
    fn build(
        constraints: &[AffineMatrixConstraint],
        dim: usize,
        feas_tol: f64,
    ) -> Result<Option<Self>, SdpError> {
        // structural pins and ties: union-find with a "pinned to zero" flag
        let mut parent: Vec<usize> = (0..dim).collect();
        let mut zero = vec![false; dim];
        fn find(parent: &mut [usize], k: usize) -> usize {
            let mut root = k;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = k;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        let mut generic = Vec::new();
        for c in constraints.iter().filter(|c| c.sense == Sense::Zero) {
            let scalar = c.size() == 1 && c.constant[(0, 0)] == 0.0;
            let terms: Vec<(usize, f64)> = c.coefficients.iter().map(|(&k, m)| (k, m[(0, 0)])).collect();
            match terms.as_slice() {
                [(k, _)] if scalar => {
                    let r = find(&mut parent, *k);
                    zero[r] = true;
                }
                [(a, ca), (b, cb)] if scalar && *ca == -*cb => {
                    let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
                    if ra != rb {
                        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                        parent[hi] = lo;
                        zero[lo] = zero[lo] || zero[hi];
                    }
                }
                _ => generic.push(c),
            }
        }
        let mut group_of = vec![None; dim];
        let mut groups = 0;
        let mut root_group = vec![None; dim];
        for (k, slot) in group_of.iter_mut().enumerate() {
            let r = find(&mut parent, k);
            if zero[r] {
                continue;
            }
            let g = *root_group[r].get_or_insert_with(|| {
                groups += 1;
                groups - 1
            });
            *slot = Some(g);
        }
        let mut expand = Matrix::zeros(dim, groups);
        for (k, g) in group_of.iter().enumerate() {
            if let Some(g) = g {
                expand[(k, *g)] = 1.0;
            }
        }

        // remaining equalities: one row per upper-triangular entry
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for c in &generic {
            let n = c.size();
            for i in 0..n {
                for j in i..n {
                    let mut row = vec![0.0; dim];
                    for (&k, m) in &c.coefficients {
                        row[k] = m[(i, j)];
                    }
                    let rhs = -c.constant[(i, j)];
                    let reduced: Vec<f64> = (0..groups)
                        .map(|g| (0..dim).map(|k| row[k] * expand[(k, g)]).sum())
                        .collect();
                    let norm = reduced.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        if rhs.abs() > feas_tol {
                            return Ok(None);
                        }
                        continue;
                    }
                    rows.push((reduced.iter().map(|x| x / norm).collect(), rhs / norm));
                }
            }
        }
        if rows.is_empty() {
            return Ok(Some(Self {
                offset: Vector::zeros(dim),
                basis: expand,
            }));
        }

        let nrows = rows.len().max(groups);
        let mut e = Matrix::zeros(nrows, groups);
        let mut f = Vector::zeros(nrows);
        for (r, (row, rhs)) in rows.iter().enumerate() {
            for g in 0..groups {
                e[(r, g)] = row[g];
            }
            f[r] = *rhs;
        }
        let svd = e.clone().svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested V^T");
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let rank_tol = 1e-10 * sigma_max.max(1.0) * nrows as f64;
        let mut w0 = Vector::zeros(groups);
        let mut null_cols = Vec::new();
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > rank_tol {
                let coef = u.column(i).dot(&f) / s;
                w0 += v_t.row(i).transpose() * coef;
            } else {
                null_cols.push(i);
            }
        }
        // SVD of a tall matrix yields all right singular vectors
        let residual = (&e * &w0 - &f).norm();
        if residual > feas_tol * (1.0 + f.norm()) {
            return Ok(None);
        }
        let mut null = Matrix::zeros(groups, null_cols.len());
        for (c, &i) in null_cols.iter().enumerate() {
            null.set_column(c, &v_t.row(i).transpose());
        }
        Ok(Some(Self {
            offset: &expand * w0,
            basis: &expand * null,
        }))
    }

    fn point(&self, z: &Vector) -> Vec<f64> {
        (&self.offset + &self.basis * z).as_slice().to_vec()
    }
}

struct RunOutcome {
    converged: bool,
    certified_infeasible: bool,
    newton_steps: usize,
    slack_history: Vec<f64>,
}

/// `minimize c^T y / mu - sum_i log det F_i(y) - log(rho^2 - ||v(y)||^2)`.
struct BarrierProblem {
    constants: Vec<Matrix>,
    /// Per constraint: `(variable, coefficient)` pairs over `y`.
    coefficients: Vec<Vec<(usize, Matrix)>>,
    objective: Vector,
    offset: Vector,
    /// Maps the first `basis.ncols()` entries of `y` to `v`.
    basis: Matrix,
    rho_sq: f64,
    nu: f64,
}

impl BarrierProblem {
    fn new(
        inequalities: &[&AffineMatrixConstraint],
        param: &Parameterization,
        rho: f64,
        with_slack: bool,
    ) -> Self {
        let q = param.basis.ncols();
        let offset_v = param.offset.as_slice();
        let mut constants = Vec::with_capacity(inequalities.len());
        let mut coefficients = Vec::with_capacity(inequalities.len());
        for c in inequalities {
            let sign = if c.sense == Sense::NegativeDefinite { -1.0 } else { 1.0 };
            let n = c.size();
            let constant = (c.evaluate(offset_v) * sign) - Matrix::identity(n, n) * c.margin;
            let mut coeffs = Vec::new();
            for j in 0..q {
                let mut g = Matrix::zeros(n, n);
                let mut any = false;
                for (&k, a) in &c.coefficients {
                    let w = param.basis[(k, j)];
                    if w != 0.0 {
                        g += a * (w * sign);
                        any = true;
                    }
                }
                if any && g.iter().any(|&x| x != 0.0) {
                    coeffs.push((j, g));
                }
            }
            if with_slack {
                coeffs.push((q, Matrix::identity(n, n)));
            }
            constants.push(matops::symmetric_part(&constant));
            coefficients.push(coeffs);
        }
        let nu = inequalities.iter().map(|c| c.size() as f64).sum::<f64>() + 1.0;
        let dim_y = q + usize::from(with_slack);
        Self {
            constants,
            coefficients,
            objective: Vector::zeros(dim_y),
            offset: param.offset.clone(),
            basis: param.basis.clone(),
            rho_sq: rho * rho,
            nu,
        }
    }

    fn constraint_matrix(&self, i: usize, y: &Vector) -> Matrix {
        let mut f = self.constants[i].clone();
        for (j, g) in &self.coefficients[i] {
            if y[*j] != 0.0 {
                f += g * y[*j];
            }
        }
        f
    }

    fn ball_vector(&self, y: &Vector) -> Vector {
        let q = self.basis.ncols();
        &self.offset + &self.basis * y.rows(0, q)
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, y: &Vector, inv_mu: f64) -> Option<f64> {
        let mut phi = inv_mu * self.objective.dot(y);
        for i in 0..self.constants.len() {
            let chol = Cholesky::new(self.constraint_matrix(i, y))?;
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
            if !log_det.is_finite() {
                return None;
            }
            phi -= log_det;
        }
        let slack = self.rho_sq - self.ball_vector(y).norm_squared();
        if slack <= 0.0 {
            return None;
        }
        Some(phi - slack.ln())
    }

    /// Gradient and Hessian; `None` outside the domain.
    fn derivatives(&self, y: &Vector, inv_mu: f64) -> Option<(Vector, Matrix)> {
        let dim = y.len();
        let mut grad = &self.objective * inv_mu;
        let mut hess = Matrix::zeros(dim, dim);
        for i in 0..self.constants.len() {
            let chol = Cholesky::new(self.constraint_matrix(i, y))?;
            let inv = chol.inverse();
            let scaled: Vec<(usize, Matrix)> = self.coefficients[i]
                .iter()
                .map(|(j, g)| (*j, &inv * g))
                .collect();
            for (a, (ja, la)) in scaled.iter().enumerate() {
                grad[*ja] -= la.trace();
                for (jb, lb) in scaled.iter().skip(a) {
                    // trace(la * lb)
                    let h = la.component_mul(&lb.transpose()).sum();
                    hess[(*ja, *jb)] += h;
                    if ja != jb {
                        hess[(*jb, *ja)] += h;
                    }
                }
            }
        }
        let q = self.basis.ncols();
        let u = self.ball_vector(y);
        let slack = self.rho_sq - u.norm_squared();
        if slack <= 0.0 {
            return None;
        }
        let bu = self.basis.transpose() * &u;
        let btb = self.basis.transpose() * &self.basis;
        for a in 0..q {
            grad[a] += 2.0 * bu[a] / slack;
            for b in 0..q {
                hess[(a, b)] += 2.0 * btb[(a, b)] / slack + 4.0 * bu[a] * bu[b] / (slack * slack);
            }
        }
        Some((grad, hess))
    }

    fn newton_direction(grad: &Vector, hess: &Matrix) -> Option<Vector> {
        let scale = hess.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max).max(1e-300);
        let mut jitter = 0.0;
        for _ in 0..12 {
            let mut h = hess.clone();
            if jitter > 0.0 {
                for k in 0..h.nrows() {
                    h[(k, k)] += jitter;
                }
            }
            if let Some(chol) = Cholesky::new(h) {
                let step = chol.solve(&(-grad));
                if step.iter().all(|x| x.is_finite()) {
                    return Some(step);
                }
            }
            jitter = if jitter == 0.0 { 1e-14 * scale } else { jitter * 100.0 };
        }
        None
    }

    /// Path following from a strictly feasible `y`. With `slack_index`, the
    /// run stops early once the duality bound certifies a positive slack.
    fn run(&self, y: &mut Vector, opts: &SolverOptions, slack_index: Option<usize>) -> RunOutcome {
        let mut mu = opts.initial_barrier;
        let mut newton_steps = 0;
        let mut slack_history = Vec::new();
        let mut best_slack = f64::INFINITY;
        let mut converged = false;
        let mut certified_infeasible = false;

        'outer: for outer in 0..opts.max_outer {
            let inv_mu = 1.0 / mu;
            let mut centered = false;
            for _ in 0..opts.max_newton {
                let Some((grad, hess)) = self.derivatives(y, inv_mu) else {
                    break 'outer;
                };
                let Some(step) = Self::newton_direction(&grad, &hess) else {
                    log::debug!("newton system could not be factored at outer iteration {outer}");
                    break 'outer;
                };
                let decrement_sq = -grad.dot(&step);
                if decrement_sq / 2.0 <= opts.newton_tol {
                    centered = true;
                    break;
                }
                let f0 = match self.value(y, inv_mu) {
                    Some(f) => f,
                    None => break 'outer,
                };
                let mut alpha = if decrement_sq.sqrt() > 0.5 {
                    1.0 / (1.0 + decrement_sq.sqrt())
                } else {
                    1.0
                };
                let mut accepted = false;
                while alpha > 1e-14 {
                    let trial = &*y + &step * alpha;
                    if let Some(f1) = self.value(&trial, inv_mu) {
                        if f1 <= f0 - 0.25 * alpha * decrement_sq {
                            *y = trial;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                newton_steps += 1;
                if !accepted {
                    // no further progress at this barrier weight
                    centered = decrement_sq / 2.0 <= 1e3 * opts.newton_tol;
                    break;
                }
            }
            if let Some(k) = slack_index {
                best_slack = best_slack.min(y[k]);
                slack_history.push(best_slack);
                if centered && y[k] - self.nu * mu > 0.0 {
                    certified_infeasible = true;
                    break;
                }
            }
            if self.nu * mu <= opts.gap_tol {
                converged = true;
                break;
            }
            mu *= opts.barrier_decrease;
        }
        RunOutcome {
            converged,
            certified_infeasible,
            newton_steps,
            slack_history,
        }
    }
}
