//! Independent checks of a gain or design matrix: Hurwitz test, exact cost
//! from the closed-loop Lyapunov equation, numerical simulation of the cost
//! integral, and the spectrum test for `A P + P^T A < 0`.

use crate::lyapunov::{self, LyapunovError};
use crate::matops::{self, MatError, Matrix, Spectrum, Vector};
use crate::system::{LtiSystem, QuadraticCost};
use nalgebra::Cholesky;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("closed loop is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    #[error("weight R is not positive definite")]
    RNotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("simulation did not settle: state norm {final_norm:.3e} at t = {horizon:.3e}")]
    NonConvergent { final_norm: f64, horizon: f64 },
    #[error("matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not negative definite")]
    NotNegativeDefinite,
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

/// `K = R^-1 B^T P` and `A_cl = A - B K`.
pub fn closed_loop(sys: &LtiSystem, r: &Matrix, p: &Matrix) -> Result<(Matrix, Matrix), VerifyError> {
    let (n, m) = (sys.n(), sys.m());
    if r.shape() != (m, m) || p.shape() != (n, n) {
        return Err(VerifyError::DimensionMismatch(format!(
            "expected R {m}x{m} and P {n}x{n}"
        )));
    }
    if matops::symmetry_residual(r) > matops::sym_tol(r) {
        return Err(VerifyError::RNotPositiveDefinite);
    }
    let chol = Cholesky::new(matops::symmetric_part(r)).ok_or(VerifyError::RNotPositiveDefinite)?;
    let k = chol.solve(&(sys.b().transpose() * p));
    let a_cl = sys.a() - sys.b() * &k;
    Ok((k, a_cl))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostEvaluation {
    pub z: Matrix,
    /// `x0^T Z x0`.
    pub j: f64,
    pub residual: f64,
}

/// Exact cost of `u = -R^-1 B^T P x`: `Z` solves
/// `A_cl^T Z + Z A_cl + Q + P^T B R^-1 B^T P = 0`.
pub fn cost_via_z(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    p: &Matrix,
    x0: &Vector,
) -> Result<CostEvaluation, VerifyError> {
    let (k, a_cl) = closed_loop(sys, cost.r(), p)?;
    cost_of_gain(&a_cl, cost, &k, x0)
}

/// Exact cost of `u = -K x` for a given closed loop `A_cl = A - B K`.
pub fn cost_of_gain(
    a_cl: &Matrix,
    cost: &QuadraticCost,
    k: &Matrix,
    x0: &Vector,
) -> Result<CostEvaluation, VerifyError> {
    if x0.len() != a_cl.nrows() {
        return Err(VerifyError::DimensionMismatch("x0 does not match the state".into()));
    }
    let check = matops::is_hurwitz(a_cl)?;
    if !check.hurwitz {
        return Err(VerifyError::NotHurwitz {
            abscissa: check.abscissa,
        });
    }
    let c = matops::symmetric_part(&(cost.q() + k.transpose() * cost.r() * k));
    let z = lyapunov::solve_lyapunov(a_cl, &c)?;
    let residual = lyapunov::lyapunov_residual(a_cl, &z, &c);
    Ok(CostEvaluation {
        j: matops::quadratic_form(&z, x0),
        z,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOptions {
    /// Default `1e-3 / |spectral abscissa|`, capped by `0.05 / spectral radius`.
    pub step: Option<f64>,
    /// Default 40 time constants `40 / |spectral abscissa|`.
    pub horizon: Option<f64>,
    /// Default `1e-9 * ||x0||`.
    pub stop_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vector,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// Accumulated integral plus `tail_bound`.
    pub j: f64,
    /// Estimate of the cost beyond the last sample.
    pub tail_bound: f64,
    pub step: f64,
    pub final_time: f64,
    pub trajectory: Vec<Sample>,
}

/// Default integration step and horizon for a Hurwitz closed loop.
pub fn default_timing(a_cl: &Matrix) -> Result<(f64, f64), VerifyError> {
    let spec = matops::eig_general(a_cl)?;
    let abscissa = spec.spectral_abscissa();
    if abscissa >= 0.0 {
        return Err(VerifyError::NotHurwitz { abscissa });
    }
    let radius = spec.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let step = (1e-3 / abscissa.abs()).min(0.05 / radius);
    Ok((step, 40.0 / abscissa.abs()))
}

/// Fixed-step RK4 on `x' = A_cl x` accumulating `x^T M x`, where
/// `M = Q + K^T R K`.
pub fn simulate_cost(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    k: &Matrix,
    x0: &Vector,
    opts: &SimOptions,
) -> Result<Simulation, VerifyError> {
    if k.shape() != (sys.m(), sys.n()) {
        return Err(VerifyError::DimensionMismatch(format!(
            "gain must be {}x{}",
            sys.m(),
            sys.n()
        )));
    }
    let a_cl = sys.a() - sys.b() * k;
    let weight = matops::symmetric_part(&(cost.q() + k.transpose() * cost.r() * k));
    simulate_quadratic(&a_cl, &weight, x0, opts)
}

/// RK4 integration of `x' = A_cl x` together with `c' = x^T M x`.
///
/// Stops once `||x|| < stop_norm` and then adds the tail estimate
/// `x^T M x / (2 |abscissa|)`, or fails with `NonConvergent` at the horizon.
pub fn simulate_quadratic(
    a_cl: &Matrix,
    weight: &Matrix,
    x0: &Vector,
    opts: &SimOptions,
) -> Result<Simulation, VerifyError> {
    let n = a_cl.nrows();
    if x0.len() != n || weight.shape() != (n, n) {
        return Err(VerifyError::DimensionMismatch("simulation data do not match".into()));
    }
    if x0.iter().all(|&v| v == 0.0) {
        return Ok(Simulation {
            j: 0.0,
            tail_bound: 0.0,
            step: 0.0,
            final_time: 0.0,
            trajectory: vec![Sample {
                t: 0.0,
                x: x0.clone(),
                cost: 0.0,
            }],
        });
    }
    let spec = matops::eig_general(a_cl)?;
    let abscissa = spec.spectral_abscissa();
    let (step, horizon) = match (opts.step, opts.horizon) {
        (Some(h), Some(t)) => (h, t),
        _ => {
            let (h, t) = default_timing(a_cl)?;
            (opts.step.unwrap_or(h), opts.horizon.unwrap_or(t))
        }
    };
    let stop_norm = opts.stop_norm.unwrap_or(1e-9 * x0.norm());

    let trajectory = integrate(a_cl, weight, x0, step, horizon, Some(stop_norm));
    let last = trajectory.last().expect("initial sample");
    let final_norm = last.x.norm();
    if final_norm >= stop_norm {
        return Err(VerifyError::NonConvergent {
            final_norm,
            horizon: last.t,
        });
    }
    let tail_bound = if abscissa < 0.0 {
        matops::quadratic_form(weight, &last.x).max(0.0) / (2.0 * abscissa.abs())
    } else {
        0.0
    };
    Ok(Simulation {
        j: last.cost + tail_bound,
        tail_bound,
        step,
        final_time: last.t,
        trajectory,
    })
}

/// Plain RK4 of `(x, c)` from `t = 0` to `t_end`, optionally stopping early
/// once `||x|| < stop_norm`. Records every step.
pub fn integrate(
    a_cl: &Matrix,
    weight: &Matrix,
    x0: &Vector,
    step: f64,
    t_end: f64,
    stop_norm: Option<f64>,
) -> Vec<Sample> {
    let f = |x: &Vector| -> (Vector, f64) { (a_cl * x, matops::quadratic_form(weight, x)) };
    let mut x = x0.clone();
    let mut c = 0.0;
    let mut t = 0.0;
    let mut out = vec![Sample {
        t,
        x: x.clone(),
        cost: c,
    }];
    let steps = (t_end / step).ceil().max(0.0) as usize;
    for i in 0..steps {
        if stop_norm.is_some_and(|s| x.norm() < s) {
            break;
        }
        let h = step.min(t_end - t);
        if h <= 0.0 {
            break;
        }
        let (k1, c1) = f(&x);
        let (k2, c2) = f(&(&x + &k1 * (h / 2.0)));
        let (k3, c3) = f(&(&x + &k2 * (h / 2.0)));
        let (k4, c4) = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        c += (c1 + 2.0 * c2 + 2.0 * c3 + c4) * (h / 6.0);
        t = if i + 1 == steps { t_end } else { (i + 1) as f64 * step };
        out.push(Sample {
            t,
            x: x.clone(),
            cost: c,
        });
    }
    out
}

/// CSV with header `t,x1..xn,cost_accum`.
pub fn write_trajectory_csv<W: Write>(samples: &[Sample], mut out: W) -> io::Result<()> {
    let n = samples.first().map_or(0, |s| s.x.len());
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",cost_accum");
    writeln!(out, "{header}")?;
    for s in samples {
        write!(out, "{:.12e}", s.t)?;
        for v in s.x.iter() {
            write!(out, ",{v:.12e}")?;
        }
        writeln!(out, ",{:.12e}", s.cost)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsiCheck {
    pub lsi_holds: bool,
    /// Largest eigenvalue of the symmetric part of `A P + P^T A`.
    pub lsi_max_eig: f64,
    pub spectrum: Spectrum,
    pub all_re_positive: bool,
}

/// Tests `A P + P^T A < 0` for symmetric negative definite `A` and reports
/// the spectrum of `P`.
pub fn check_lsi_spectrum(a_bar: &Matrix, p: &Matrix) -> Result<LsiCheck, VerifyError> {
    matops::ensure_square(a_bar)?;
    if p.shape() != a_bar.shape() {
        return Err(VerifyError::DimensionMismatch("P must match the shape of A".into()));
    }
    let asym = matops::symmetry_residual(a_bar);
    if asym > matops::sym_tol(a_bar) {
        return Err(VerifyError::NotSymmetric(asym));
    }
    if matops::max_eig_sym(&matops::symmetric_part(a_bar))? >= 0.0 {
        return Err(VerifyError::NotNegativeDefinite);
    }
    let lhs = a_bar * p + p.transpose() * a_bar;
    let lsi_max_eig = matops::max_eig_sym(&matops::symmetric_part(&lhs))?;
    let spectrum = matops::eig_general(p)?;
    Ok(LsiCheck {
        lsi_holds: lsi_max_eig < 0.0,
        lsi_max_eig,
        all_re_positive: spectrum.all_real_parts_positive(),
        spectrum,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub hurwitz: bool,
    pub spectral_abscissa: f64,
    pub closed_loop_symmetry_residual: f64,
    pub k: Matrix,
    pub a_cl: Matrix,
    pub z: Matrix,
    pub j_analytic: f64,
    pub j_simulated: Option<f64>,
    pub j_star: Option<f64>,
    pub gamma_bar: Option<f64>,
    /// `j_analytic < gamma_bar` when a bound is present, else `true`. At
    /// `x0 = 0` both sides vanish and the bound holds trivially.
    pub bound_ok: bool,
    pub p_spectrum: Spectrum,
    pub lyapunov_residual: f64,
}

impl VerificationReport {
    /// Relative gap between the two cost oracles, if both ran.
    pub fn oracle_gap(&self) -> Option<f64> {
        self.j_simulated
            .map(|js| (js - self.j_analytic).abs() / self.j_analytic.max(1e-12))
    }
}

/// Runs every check for the law `u = -R^-1 B^T P x`. Simulation is skipped
/// when `sim` is `None`.
pub fn verify_design(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    p: &Matrix,
    x0: &Vector,
    gamma_bar: Option<f64>,
    j_star: Option<f64>,
    sim: Option<&SimOptions>,
) -> Result<VerificationReport, VerifyError> {
    let (k, a_cl) = closed_loop(sys, cost.r(), p)?;
    let check = matops::is_hurwitz(&a_cl)?;
    if !check.hurwitz {
        return Err(VerifyError::NotHurwitz {
            abscissa: check.abscissa,
        });
    }
    let eval = cost_of_gain(&a_cl, cost, &k, x0)?;
    let j_simulated = match sim {
        Some(opts) => Some(simulate_cost(sys, cost, &k, x0, opts)?.j),
        None => None,
    };
    Ok(VerificationReport {
        hurwitz: check.hurwitz,
        spectral_abscissa: check.abscissa,
        closed_loop_symmetry_residual: matops::symmetry_residual(&a_cl),
        bound_ok: gamma_bar.is_none_or(|g| eval.j < g || (x0.norm() == 0.0 && eval.j == 0.0 && g == 0.0)),
        p_spectrum: matops::eig_general(p)?,
        k,
        a_cl,
        z: eval.z,
        j_analytic: eval.j,
        j_simulated,
        j_star,
        gamma_bar,
        lyapunov_residual: eval.residual,
    })
}
