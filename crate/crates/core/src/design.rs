//! Suboptimal LQ design with a non-symmetric design matrix.
//!
//! [`design_suboptimal`] solves the stability, suboptimality and realness
//! constraints for `(X, Y, W, P_)`, recovers `P = Y X^-1`,
//! `K = R^-1 B^T P` and `A_cl = A - B K`, solves `A_cl P^ + P^^T A_cl + W = 0`
//! and returns the certified bound
//!
//! ```text
//! gamma_bar(x0) = trace(P - P_ + P^) * x0^T x0
//! ```

use crate::lmi::{self, AffineMatrixConstraint, BlockName, LmiError, Sense, StructureSpec, VariableLayout};
use crate::lyapunov::{self, LyapunovError};
use crate::matops::{self, MatError, Matrix, Spectrum, Vector};
use crate::sdpsolve::{self, ConstraintMargin, FeasibilityStatus, SdpError, SolverOptions};
use crate::system::{LtiSystem, ModelError, QuadraticCost};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("design LMIs are not feasible ({status}, slack {slack:.3e})")]
    InfeasibleLmi { status: FeasibilityStatus, slack: f64 },
    #[error("closed loop is not symmetric (residual {residual:.3e} > {tolerance:.3e})")]
    AsymmetricClosedLoop { residual: f64, tolerance: f64 },
    #[error("closed loop is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    #[error("bound equation failed: {0}")]
    PHatFailed(LyapunovError),
    #[error("ball radius must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Solver(#[from] SdpError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    /// Strictness margins are `epsilon * (1 + ||A||_F)`.
    pub epsilon: f64,
    pub feas_tol: f64,
    /// Upper bound on `W`; default `1e3 * ||Q||_F`.
    pub w_cap: Option<f64>,
    /// Restrict `X` to a scalar matrix when no structure is given.
    pub x_scalar: bool,
    /// Experimental: after feasibility, minimize `trace(W - P_)`.
    pub minimize_trace: bool,
    pub solver: SolverOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            feas_tol: 1e-7,
            w_cap: None,
            x_scalar: true,
            minimize_trace: false,
            solver: SolverOptions::default(),
        }
    }
}

impl DesignOptions {
    pub fn margin(&self, sys: &LtiSystem) -> f64 {
        self.epsilon * (1.0 + matops::frobenius(sys.a()))
    }

    pub fn w_cap_for(&self, cost: &QuadraticCost) -> f64 {
        self.w_cap.unwrap_or_else(|| {
            let q = matops::frobenius(cost.q());
            if q > 0.0 {
                1e3 * q
            } else {
                1e3
            }
        })
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            feas_tol: self.feas_tol,
            ..self.solver.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub sys: LtiSystem,
    pub cost: QuadraticCost,
    pub x0: Vector,
    pub structure: Option<StructureSpec>,
    pub options: DesignOptions,
}

impl DesignProblem {
    pub fn new(sys: LtiSystem, cost: QuadraticCost, x0: Vector) -> Result<Self, DesignError> {
        cost.check_against(&sys)?;
        if x0.len() != sys.n() {
            return Err(DesignError::DimensionMismatch(format!(
                "x0 has {} entries, state dimension is {}",
                x0.len(),
                sys.n()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(MatError::NonFinite.into());
        }
        Ok(Self {
            sys,
            cost,
            x0,
            structure: None,
            options: DesignOptions::default(),
        })
    }

    pub fn with_structure(mut self, spec: StructureSpec) -> Result<Self, DesignError> {
        if spec.order() != self.sys.n() {
            return Err(DesignError::DimensionMismatch(format!(
                "structure is {o}x{o}, state dimension is {}",
                self.sys.n(),
                o = spec.order()
            )));
        }
        self.structure = Some(spec);
        Ok(self)
    }

    pub fn with_options(mut self, options: DesignOptions) -> Self {
        self.options = options;
        self
    }

    /// The structure in force: the given one, or every entry free.
    pub fn effective_structure(&self) -> StructureSpec {
        self.structure
            .clone()
            .unwrap_or_else(|| StructureSpec::unstructured(self.sys.n(), self.options.x_scalar))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignDiagnostics {
    pub closed_loop_symmetry_residual: f64,
    pub symmetry_tolerance: f64,
    pub margins: Vec<ConstraintMargin>,
    pub p_spectrum: Spectrum,
    pub closed_loop_abscissa: f64,
    pub p_hat_residual: f64,
    pub slack: f64,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCertificate {
    pub x: Matrix,
    pub y: Matrix,
    pub w: Matrix,
    pub p_lower: Matrix,
    pub p: Matrix,
    pub k: Matrix,
    pub a_cl: Matrix,
    pub p_hat: Matrix,
    /// `trace(P - P_ + P^)`.
    pub trace_term: f64,
    pub gamma_bar: f64,
    pub diagnostics: DesignDiagnostics,
}

/// All constraints of the design problem over [`VariableLayout::full`].
pub fn design_constraints(
    problem: &DesignProblem,
    layout: &VariableLayout,
) -> Result<Vec<AffineMatrixConstraint>, DesignError> {
    let (sys, cost, opts) = (&problem.sys, &problem.cost, &problem.options);
    let margin = opts.margin(sys);
    let mut out = vec![
        lmi::build_stability_lmi(sys, cost, layout, margin)?,
        lmi::build_suboptimality_lmi(sys, cost, layout, margin)?,
        lmi::build_realness_constraint(sys, cost, layout)?,
        lmi::build_block_lower_bound(layout, BlockName::X, margin)?,
        lmi::build_block_lower_bound(layout, BlockName::W, margin)?,
        lmi::build_block_upper_bound(layout, BlockName::W, opts.w_cap_for(cost))?,
    ];
    out.extend(lmi::apply_structure(layout, &problem.effective_structure())?);
    Ok(out)
}

/// Recovers `P = Y X^-1`.
pub fn recover_p(x: &Matrix, y: &Matrix) -> Result<Matrix, MatError> {
    // P X = Y  <=>  X^T P^T = Y^T
    Ok(matops::solve_linear(&x.transpose(), &y.transpose())?.transpose())
}

pub fn design_suboptimal(problem: &DesignProblem) -> Result<DesignCertificate, DesignError> {
    let (sys, cost, opts) = (&problem.sys, &problem.cost, &problem.options);
    let n = sys.n();
    let layout = VariableLayout::full(n);
    let constraints = design_constraints(problem, &layout)?;

    let mut solver_opts = opts.solver_options();
    if opts.minimize_trace {
        let mut c = vec![0.0; layout.dim()];
        for i in 0..n {
            c[layout.index(BlockName::PLower, i, i)?] -= 1.0;
            c[layout.index(BlockName::W, i, i)?] += 1.0;
        }
        solver_opts.objective = Some(c);
    }
    let result = sdpsolve::solve_feasibility(&constraints, &layout, &solver_opts)?;
    log::info!(
        "design solve: {} (slack {:.3e}, {} newton steps)",
        result.status,
        result.slack,
        result.newton_steps
    );
    let Some(v) = result.assignment.as_deref() else {
        return Err(DesignError::InfeasibleLmi {
            status: result.status,
            slack: result.slack,
        });
    };

    let x = layout.matrix(v, BlockName::X)?;
    let y = layout.matrix(v, BlockName::Y)?;
    let w = layout.matrix(v, BlockName::W)?;
    let p_lower = layout.matrix(v, BlockName::PLower)?;
    let p = recover_p(&x, &y)?;
    let k = cost.r_inv() * sys.b().transpose() * &p;
    let a_cl = sys.a() - sys.b() * &k;

    let hurwitz = matops::is_hurwitz(&a_cl)?;
    if !hurwitz.hurwitz {
        return Err(DesignError::NotHurwitz {
            abscissa: hurwitz.abscissa,
        });
    }
    let residual = matops::symmetry_residual(&a_cl);
    let tolerance = matops::sym_tol(&a_cl);
    if residual > tolerance {
        return Err(DesignError::AsymmetricClosedLoop { residual, tolerance });
    }

    let p_hat = lyapunov::solve_p_hat(&a_cl, &w).map_err(DesignError::PHatFailed)?;
    let p_hat_residual = lyapunov::p_hat_residual(&a_cl, &p_hat, &w);
    let trace_term = (&p - &p_lower + &p_hat).trace();
    let gamma_bar = trace_term * problem.x0.norm_squared();

    Ok(DesignCertificate {
        diagnostics: DesignDiagnostics {
            closed_loop_symmetry_residual: residual,
            symmetry_tolerance: tolerance,
            margins: result.margins,
            p_spectrum: matops::eig_general(&p)?,
            closed_loop_abscissa: hurwitz.abscissa,
            p_hat_residual,
            slack: result.slack,
            newton_steps: result.newton_steps,
        },
        x,
        y,
        w,
        p_lower,
        p,
        k,
        a_cl,
        p_hat,
        trace_term,
        gamma_bar,
    })
}

/// Cost bound valid for every initial state with `x0^T x0 <= alpha`.
pub fn gamma_for_ball(cert: &DesignCertificate, alpha: f64) -> Result<f64, DesignError> {
    // also rejects NaN
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(DesignError::NonPositiveAlpha(alpha));
    }
    Ok(alpha * cert.trace_term)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaCheck {
    pub suboptimal: bool,
    /// Largest eigenvalue of `A^T P + P A - P B R^-1 B^T P + Q`.
    pub riccati_max_eig: f64,
    pub required_margin: f64,
    /// `x0^T P x0`.
    pub x0_cost: f64,
}

/// Classical test with a symmetric `P > 0`: the Riccati inequality holds
/// strictly and `x0^T P x0 < gamma`.
pub fn check_gamma_suboptimal(
    p: &Matrix,
    gamma: f64,
    problem: &DesignProblem,
) -> Result<GammaCheck, DesignError> {
    let (sys, cost) = (&problem.sys, &problem.cost);
    if p.shape() != (sys.n(), sys.n()) {
        return Err(DesignError::DimensionMismatch(format!(
            "P must be {n}x{n}",
            n = sys.n()
        )));
    }
    let asym = matops::symmetry_residual(p);
    if asym > matops::sym_tol(p) {
        return Err(DesignError::NotSymmetric(asym));
    }
    if !matops::is_positive_definite(p) {
        return Err(DesignError::NotPositiveDefinite);
    }
    let a = sys.a();
    let s = cost.input_weight(sys);
    let ric = a.transpose() * p + p * a - p * s * p + cost.q();
    let riccati_max_eig = matops::max_eig_sym(&matops::symmetric_part(&ric))?;
    let required_margin = problem.options.margin(sys);
    let x0_cost = matops::quadratic_form(p, &problem.x0);
    Ok(GammaCheck {
        suboptimal: riccati_max_eig < -required_margin && x0_cost < gamma,
        riccati_max_eig,
        required_margin,
        x0_cost,
    })
}

/// A gain `K` with `A - B K` Hurwitz from the stabilization LMI alone.
///
/// The search is normalized to `X <= I` and `||Y||_2 <= c` so that the
/// max-margin point stays bounded.
pub fn stabilizing_gain(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    opts: &DesignOptions,
) -> Result<Matrix, DesignError> {
    cost.check_against(sys)?;
    let n = sys.n();
    let layout = VariableLayout::stabilization(n);
    let margin = opts.margin(sys);
    let s = cost.input_weight(sys);
    let s_max = matops::max_eig_sym(&s)?;
    let y_cap = 1e3 * (1.0 + matops::frobenius(sys.a())) / if s_max > 0.0 { s_max } else { 1.0 };
    let yb = *layout.block(BlockName::Y)?;
    let cap_constant = Matrix::identity(2 * n, 2 * n) * y_cap;
    let y_norm = AffineMatrixConstraint::from_linear_map(
        "Y norm cap",
        layout.dim(),
        cap_constant,
        Sense::PositiveDefinite,
        0.0,
        |v| {
            let y = yb.assemble(v);
            let mut g = Matrix::zeros(2 * n, 2 * n);
            g.view_mut((0, n), (n, n)).copy_from(&y);
            g.view_mut((n, 0), (n, n)).copy_from(&y.transpose());
            g
        },
    );
    let constraints = vec![
        lmi::build_stability_lmi(sys, cost, &layout, margin)?,
        lmi::build_block_lower_bound(&layout, BlockName::X, margin)?,
        lmi::build_block_upper_bound(&layout, BlockName::X, 1.0)?,
        y_norm,
    ];
    let result = sdpsolve::solve_feasibility(&constraints, &layout, &opts.solver_options())?;
    let Some(v) = result.assignment.as_deref() else {
        return Err(DesignError::InfeasibleLmi {
            status: result.status,
            slack: result.slack,
        });
    };
    let x = layout.matrix(v, BlockName::X)?;
    let y = layout.matrix(v, BlockName::Y)?;
    let p = recover_p(&x, &y)?;
    let k = cost.r_inv() * sys.b().transpose() * &p;
    let check = matops::is_hurwitz(&(sys.a() - sys.b() * &k))?;
    if !check.hurwitz {
        return Err(DesignError::NotHurwitz {
            abscissa: check.abscissa,
        });
    }
    Ok(k)
}
