mod support;

use asymlyap::design::{self, DesignError, DesignOptions};
use asymlyap::lmi::{BlockName, StructureSpec, VariableLayout};
use asymlyap::lyapunov;
use asymlyap::matops::{self, Matrix, Vector};
use asymlyap::sdpsolve::FeasibilityStatus;
use asymlyap::verify::{self, SimOptions};
use asymlyap::{DesignCertificate, DesignProblem, LtiSystem, QuadraticCost};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every certificate property plus the proof chain, checked independently.
fn check_certificate(prob: &DesignProblem, cert: &DesignCertificate) {
    let n = prob.sys.n();
    // constraints re-evaluated from scratch
    let layout = VariableLayout::full(n);
    let v = layout
        .pack(&[
            (BlockName::X, &cert.x),
            (BlockName::Y, &cert.y),
            (BlockName::W, &cert.w),
            (BlockName::PLower, &cert.p_lower),
        ])
        .unwrap();
    for c in design::design_constraints(prob, &layout).unwrap() {
        assert!(c.satisfied_at(&v, prob.options.feas_tol).unwrap(), "{} fails", c.name);
    }
    assert!(matops::is_positive_definite(&cert.x));
    assert!(matops::is_hurwitz(&cert.a_cl).unwrap().hurwitz);
    assert!(matops::symmetry_residual(&cert.a_cl) <= matops::sym_tol(&cert.a_cl));
    let spectrum = matops::eig_general(&cert.p).unwrap();
    assert!(spectrum.all_real_parts_positive());
    assert!(cert.p.trace() > 0.0);
    let expected = (&cert.p - &cert.p_lower + &cert.p_hat).trace() * prob.x0.norm_squared();
    assert!((cert.gamma_bar - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    assert!(lyapunov::p_hat_residual(&cert.a_cl, &cert.p_hat, &cert.w) <= lyapunov::p_hat_tol(&cert.a_cl, &cert.p_hat, &cert.w));

    let eval = verify::cost_via_z(&prob.sys, &prob.cost, &cert.p, &prob.x0).unwrap();
    let z = &eval.z;
    // proof chain, each link separately
    let tr_z = z.trace();
    assert!(tr_z < cert.trace_term, "trace(Z) {tr_z} vs {}", cert.trace_term);
    assert!(matops::max_eig_sym(z).unwrap() <= tr_z + 1e-12 * tr_z.abs());
    if prob.x0.norm() > 0.0 {
        assert!(eval.j < cert.gamma_bar);
    }
    assert!((&cert.p - &cert.p_lower - z + &cert.p_hat).trace() > 0.0);
    let care = lyapunov::solve_care(&prob.sys, &prob.cost, None).unwrap();
    assert!(eval.j >= care.j_star_of(&prob.x0) - 1e-6);
}

#[test]
fn unstable_two_input_certificate() {
    let prob = support::unstable_two_input();
    let cert = design::design_suboptimal(&prob).unwrap();
    check_certificate(&prob, &cert);
    let rep = verify::verify_design(
        &prob.sys,
        &prob.cost,
        &cert.p,
        &prob.x0,
        Some(cert.gamma_bar),
        None,
        Some(&SimOptions::default()),
    )
    .unwrap();
    assert!(rep.bound_ok);
    assert!(rep.oracle_gap().unwrap() <= 0.01);
    assert!(rep.j_analytic >= 0.0207 - 1e-6);
    let alpha = prob.x0.norm_squared();
    assert!((design::gamma_for_ball(&cert, alpha).unwrap() - cert.gamma_bar).abs() < 1e-12);
}

#[test]
fn design_is_deterministic() {
    let prob = support::unstable_two_input();
    assert_eq!(design::design_suboptimal(&prob), design::design_suboptimal(&prob));
}

#[test]
fn stable_plant_certificate() {
    let prob = support::stable_pair();
    let cert = design::design_suboptimal(&prob).unwrap();
    check_certificate(&prob, &cert);
}

#[test]
fn uncontrollable_unstable_plant_is_infeasible() {
    let prob = DesignProblem::new(
        LtiSystem::new(Matrix::identity(2, 2), Matrix::zeros(2, 2)).unwrap(),
        QuadraticCost::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap(),
        Vector::from_column_slice(&[1.0, 0.0]),
    )
    .unwrap();
    match design::design_suboptimal(&prob) {
        Err(DesignError::InfeasibleLmi { status, .. }) => assert_ne!(status, FeasibilityStatus::Feasible),
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn random_plants_give_valid_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut solved = 0;
    for _ in 0..6 {
        let n = rng.gen_range(1..=3);
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = Matrix::identity(n, n) + Matrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2));
        let q = Matrix::identity(n, n) * rng.gen_range(0.5..5.0);
        let r = Matrix::identity(n, n) * rng.gen_range(0.1..2.0);
        let x0 = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let prob = DesignProblem::new(
            LtiSystem::new(a, b).unwrap(),
            QuadraticCost::new(q, r).unwrap(),
            x0,
        )
        .unwrap();
        match design::design_suboptimal(&prob) {
            Ok(cert) => {
                check_certificate(&prob, &cert);
                solved += 1;
            }
            Err(e) => panic!("design failed: {e}"),
        }
    }
    assert_eq!(solved, 6);
}

#[test]
fn structured_gain_has_exact_zeros() {
    // diagonal Y with scalar X gives a diagonal P, so K = R^-1 B^T P keeps
    // the zeros of B^T
    let prob = DesignProblem::new(
        LtiSystem::new(
            matops::from_rows(&[&[0.5, 0.0], &[0.0, -0.3]]),
            Matrix::identity(2, 2),
        )
        .unwrap(),
        QuadraticCost::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap(),
        Vector::from_column_slice(&[1.0, 1.0]),
    )
    .unwrap();
    let spec = StructureSpec::new(DMatrix::from_row_slice(2, 2, &[true, false, false, true]), true).unwrap();
    let prob = prob.with_structure(spec).unwrap();
    let cert = design::design_suboptimal(&prob).unwrap();
    check_certificate(&prob, &cert);
    assert_eq!(cert.y[(0, 1)], 0.0);
    assert_eq!(cert.p[(0, 1)], 0.0);
    assert_eq!(cert.p[(1, 0)], 0.0);
    assert_eq!(cert.k[(0, 1)], 0.0);
    assert_eq!(cert.k[(1, 0)], 0.0);
}

#[test]
fn non_scalar_x_is_checked_after_the_fact() {
    let prob = support::unstable_two_input().with_options(DesignOptions {
        x_scalar: false,
        ..DesignOptions::default()
    });
    match design::design_suboptimal(&prob) {
        Ok(cert) => check_certificate(&prob, &cert),
        Err(DesignError::AsymmetricClosedLoop { residual, tolerance }) => assert!(residual > tolerance),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn trace_objective_keeps_a_valid_certificate() {
    let prob = support::unstable_two_input().with_options(DesignOptions {
        minimize_trace: true,
        ..DesignOptions::default()
    });
    let cert = design::design_suboptimal(&prob).unwrap();
    check_certificate(&prob, &cert);
}
