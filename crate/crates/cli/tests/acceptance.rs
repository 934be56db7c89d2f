//! Acceptance criteria 1-8, one PASS/FAIL line each.
//!
//! Tolerances below are fixed; none are tuned to the results. A criterion
//! listed in `KNOWN_RED` is expected to fail for a documented reason (see
//! the README). The test fails if any other criterion fails, or if a known
//! red one starts passing, so the list cannot go stale silently.
//!
//! Runtimes are wall clock under the test profile of this workspace.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use asymlyap::consensus::{self, ConsensusProblem};
use asymlyap::design::{self, DesignError, DesignOptions};
use asymlyap::lmi::{BlockName, Sense, StructureSpec, VariableLayout};
use asymlyap::lyapunov;
use asymlyap::matops::{self, from_rows, Matrix, Vector};
use asymlyap::sdpsolve::FeasibilityStatus;
use asymlyap::verify::{self, SimOptions};
use asymlyap::{DesignCertificate, DesignProblem, LtiSystem, QuadraticCost};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::Command;
use std::time::{Duration, Instant};

/// Criterion 2 fails as stated; see `criterion_2` and the README.
const KNOWN_RED: &[u32] = &[2];

// Pinned tolerances and reference values.
const K_STAR_REF: [[f64; 2]; 2] = [[13.6444, -4.5552], [4.5446, 14.4257]];
const K_STAR_TOL: f64 = 1e-3;
const J_STAR_REF: f64 = 0.0207;
const J_STAR_TOL: f64 = 5e-4;
const P_REF: [[f64; 2]; 2] = [[0.0170, -0.0129], [-0.0169, 0.0895]];
const K_REF: [[f64; 2]; 2] = [[1.3604, -1.0302], [0.0034, 3.0638]];
const X_REF: [[f64; 2]; 2] = [[101.0514, -0.1038], [-0.1038, 104.9348]];
const Y_REF: [[f64; 2]; 2] = [[1.7197, -1.3530], [-1.7190, 9.3904]];
const K_TOL: f64 = 1e-3;
const J_REF: f64 = 0.0627;
const J_REL_TOL: f64 = 0.02;
const SYM_RESIDUAL_TOL: f64 = 1e-2;
const J_FLOOR_SLACK: f64 = 1e-6;
const ORACLE_REL_TOL: f64 = 0.01;
const CONSENSUS_T: f64 = 10.0;
const CONSENSUS_STEP: f64 = 1e-3;
const DISAGREEMENT_TOL: f64 = 1e-3;
const DIAG_ORACLE_TOL: f64 = 1e-10;
const QUAD_ORACLE_REL_TOL: f64 = 1e-6;

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

fn timed(id: u32, limit_secs: Option<f64>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = f();
    let elapsed = start.elapsed();
    let limit = limit_secs.map(Duration::from_secs_f64);
    let in_time = limit.is_none_or(|l| elapsed < l);
    Outcome {
        id,
        pass: ok && in_time,
        detail: if in_time {
            detail
        } else {
            format!("{detail}; too slow")
        },
        elapsed,
        limit,
    }
}

fn m2(rows: [[f64; 2]; 2]) -> Matrix {
    from_rows(&[&rows[0], &rows[1]])
}

fn unstable_two_input() -> DesignProblem {
    support::unstable_two_input()
}

fn criterion_1() -> (bool, String) {
    let prob = unstable_two_input();
    let care = lyapunov::solve_care(&prob.sys, &prob.cost, None).expect("Riccati solve");
    let k_err = (&care.k_star - m2(K_STAR_REF)).amax();
    let j_star = care.j_star_of(&prob.x0);
    let j_err = (j_star - J_STAR_REF).abs();
    (
        k_err <= K_STAR_TOL && j_err <= J_STAR_TOL,
        format!("max|K*-K*_ref| = {k_err:.2e} (tol {K_STAR_TOL:e}); J* = {j_star:.6} (|dJ*| = {j_err:.2e}, tol {J_STAR_TOL:e})"),
    )
}

/// The reference P has four decimals; `K = R^-1 B^T P = 20 B^T P` magnifies
/// the rounding by up to `20 * ||B||`. The recomputed gain misses the
/// reference one by 1.8e-3 in entry (1,2) and the closed loop's asymmetry is
/// 1.13e-2, both just over their tolerances. Reported as a failure.
fn criterion_2() -> (bool, String) {
    let prob = unstable_two_input();
    let p = m2(P_REF);
    let (k, a_cl) = verify::closed_loop(&prob.sys, prob.cost.r(), &p).expect("closed loop");
    let k_err = (&k - m2(K_REF)).amax();
    let hurwitz = matops::is_hurwitz(&a_cl).expect("eigenvalues").hurwitz;
    let sym = matops::symmetry_residual(&a_cl);
    let (j_z, j_sim) = if hurwitz {
        let z = verify::cost_via_z(&prob.sys, &prob.cost, &p, &prob.x0).expect("cost via Z").j;
        let s = verify::simulate_cost(&prob.sys, &prob.cost, &k, &prob.x0, &SimOptions::default())
            .expect("simulation")
            .j;
        (z, s)
    } else {
        (f64::NAN, f64::NAN)
    };
    let rel = |j: f64| (j - J_REF).abs() / J_REF;
    let ok = k_err <= K_TOL && hurwitz && sym < SYM_RESIDUAL_TOL && rel(j_z) <= J_REL_TOL && rel(j_sim) <= J_REL_TOL;
    (
        ok,
        format!(
            "max|K-K_ref| = {k_err:.2e} (tol {K_TOL:e}); J_Z = {j_z:.6}, J_sim = {j_sim:.6} (rel {:.2e}, {:.2e}; tol {J_REL_TOL}); \
             Hurwitz = {hurwitz}; ||A_cl - A_cl^T||_F = {sym:.2e} (tol {SYM_RESIDUAL_TOL:e})",
            rel(j_z),
            rel(j_sim)
        ),
    )
}

/// Not a criterion: the same checks with `P = Y X^-1` from the reference
/// `X` and `Y`, which carry more significant digits than the reference `P`.
fn criterion_2_supplement() -> String {
    let prob = unstable_two_input();
    let p = design::recover_p(&m2(X_REF), &m2(Y_REF)).expect("reference X is invertible");
    let (k, a_cl) = verify::closed_loop(&prob.sys, prob.cost.r(), &p).expect("closed loop");
    let k_err = (&k - m2(K_REF)).amax();
    let j = verify::cost_via_z(&prob.sys, &prob.cost, &p, &prob.x0).map(|e| e.j).unwrap_or(f64::NAN);
    let k_ref_j = verify::cost_of_gain(&(prob.sys.a() - prob.sys.b() * m2(K_REF)), &prob.cost, &m2(K_REF), &prob.x0)
        .map(|e| e.j)
        .unwrap_or(f64::NAN);
    format!(
        "P = Y X^-1 from reference X, Y: max|K-K_ref| = {k_err:.2e}, J_Z = {j:.6}, ||A_cl - A_cl^T||_F = {:.2e}; reference K used directly: J_Z = {k_ref_j:.6}",
        matops::symmetry_residual(&a_cl)
    )
}

/// Re-evaluates every design constraint at the certificate: definite
/// constraints must hold with non-negative achieved margin (and at least the
/// required margin up to the solver tolerance), equalities to `feas_tol`.
fn margins_hold(prob: &DesignProblem, cert: &DesignCertificate) -> (bool, f64) {
    let layout = VariableLayout::full(prob.sys.n());
    let v = layout
        .pack(&[
            (BlockName::X, &cert.x),
            (BlockName::Y, &cert.y),
            (BlockName::W, &cert.w),
            (BlockName::PLower, &cert.p_lower),
        ])
        .expect("certificate fits the layout");
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for c in design::design_constraints(prob, &layout).expect("constraints") {
        let achieved = c.margin_at(&v).expect("eigenvalues");
        match c.sense {
            Sense::Zero => ok &= achieved <= prob.options.feas_tol,
            _ => {
                worst = worst.min(achieved);
                ok &= achieved >= 0.0 && achieved >= c.margin - prob.options.feas_tol;
            }
        }
    }
    (ok, worst)
}

fn criterion_3() -> (bool, String) {
    let prob = unstable_two_input();
    let cert = match design::design_suboptimal(&prob) {
        Ok(c) => c,
        Err(e) => return (false, format!("design failed: {e}")),
    };
    let rep = verify::verify_design(&prob.sys, &prob.cost, &cert.p, &prob.x0, Some(cert.gamma_bar), None, Some(&SimOptions::default()))
        .expect("verification");
    let j = rep.j_analytic;
    let js = rep.j_simulated.expect("simulation ran");
    let gap = (j - js).abs() / j;
    let ordering = J_STAR_REF - J_FLOOR_SLACK <= j && j < cert.gamma_bar;
    let lsi = cert.diagnostics.p_spectrum.all_real_parts_positive();
    let (margins_ok, worst) = margins_hold(&prob, &cert);
    (
        ordering && gap <= ORACLE_REL_TOL && lsi && margins_ok,
        format!(
            "{J_STAR_REF} - {J_FLOOR_SLACK:e} <= J = {j:.6} < gamma_bar = {:.6}: {ordering}; |J-J_sim|/J = {gap:.2e}; \
             Re(eig P) > 0: {lsi}; margins ok: {margins_ok} (smallest definite margin {worst:.2e})",
            cert.gamma_bar
        ),
    )
}

fn four_agents() -> ConsensusProblem {
    ConsensusProblem {
        n_agents: 4,
        agent_pole: 1.0,
        q_weight: 10.0,
        r_weight: 0.01,
        initial_states: vec![0.9, 1.0, 0.6, 0.4],
    }
}

fn criterion_4() -> (bool, String) {
    let prob = four_agents();
    let proto = match consensus::design_consensus(&prob, &DesignOptions::default()) {
        Ok(p) => p,
        Err(e) => return (false, format!("design failed: {e}")),
    };
    // sparsity exactly as required: zeros where no information flows,
    // non-zeros elsewhere, and the tie in the first row
    let allowed = consensus::allowed_gain_pattern(4);
    let mut sparsity = proto.k[(0, 0)] == proto.k[(0, 1)];
    for i in 0..4 {
        for j in 0..3 {
            sparsity &= (proto.k[(i, j)] != 0.0) == allowed[(i, j)];
        }
    }
    let sim = consensus::simulate_agents(&prob, &proto.k, CONSENSUS_STEP, CONSENSUS_T).expect("agent simulation");
    let agree = sim.final_disagreement < DISAGREEMENT_TOL;
    let gap = (proto.j_realized - proto.j_simulated).abs() / proto.j_realized;
    let agent_cost = sim.samples.last().expect("samples").cost;
    let agent_gap = (agent_cost - proto.j_realized).abs() / proto.j_realized;
    let bound = proto.j_realized < proto.gamma_bar;
    (
        sparsity && agree && bound && gap <= ORACLE_REL_TOL,
        format!(
            "sparsity exact: {sparsity}; max|xi-xj|(T={CONSENSUS_T}) = {:.2e}; J = {:.6} < gamma_bar = {:.6}: {bound}; \
             |J-J_sim|/J = {gap:.2e}; agent-level J(T) gap {agent_gap:.2e}",
            sim.final_disagreement, proto.j_realized, proto.gamma_bar
        ),
    )
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = random_matrix(rng, n, n);
    &g * g.transpose() + Matrix::identity(n, n) * 0.1
}

fn criterion_5() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_250_501);
    let (mut held, mut violations, mut draws) = (0, 0, 0);
    while held < 100 && draws < 100_000 {
        draws += 1;
        let n = rng.gen_range(1..=5);
        let a_bar = -random_spd(&mut rng, n);
        // either a random non-symmetric P, or one built to satisfy the
        // inequality: P = -a_bar^-1 (M/2 + S), M > 0, S skew
        let p = if rng.gen_bool(0.5) {
            random_matrix(&mut rng, n, n) * 3.0
        } else {
            let m = random_spd(&mut rng, n);
            let g = random_matrix(&mut rng, n, n) * rng.gen_range(0.0..5.0);
            let t = m * 0.5 + &g - g.transpose();
            -matops::solve_linear(&a_bar, &t).expect("a_bar is definite")
        };
        let check = verify::check_lsi_spectrum(&a_bar, &p).expect("spectrum");
        if check.lsi_holds {
            held += 1;
            violations += usize::from(!check.all_re_positive);
        }
    }
    (
        held == 100 && violations == 0,
        format!("{held} pairs satisfying the inequality ({draws} draws), {violations} with Re(eig P) <= 0"),
    )
}

fn random_hurwitz(rng: &mut impl Rng, n: usize) -> Matrix {
    let m = random_matrix(rng, n, n) * 2.0;
    let abscissa = matops::spectral_abscissa(&m).expect("eigenvalues");
    m - Matrix::identity(n, n) * (abscissa + rng.gen_range(0.3..2.0))
}

fn criterion_6() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(6_000_006);
    let mut diag_worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let diag: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.05..10.0)).collect();
        let f = Matrix::from_diagonal(&Vector::from_column_slice(&diag));
        let c = matops::symmetric_part(&random_matrix(&mut rng, n, n));
        let z = lyapunov::solve_lyapunov(&f, &c).expect("diagonal solve");
        diag_worst = diag_worst.max((&z - support::diagonal_lyapunov_oracle(&diag, &c)).amax());
    }
    let mut quad_worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=4);
        let f = random_hurwitz(&mut rng, n);
        let c = random_spd(&mut rng, n);
        let z = lyapunov::solve_lyapunov(&f, &c).expect("dense solve");
        let oracle = support::quadrature_lyapunov_oracle(&f, &c);
        quad_worst = quad_worst.max((&z - &oracle).norm() / oracle.norm());
    }
    (
        diag_worst <= DIAG_ORACLE_TOL && quad_worst <= QUAD_ORACLE_REL_TOL,
        format!(
            "50 diagonal cases: max abs error {diag_worst:.2e} (tol {DIAG_ORACLE_TOL:e}); \
             20 dense cases: max rel error {quad_worst:.2e} (tol {QUAD_ORACLE_REL_TOL:e})"
        ),
    )
}

/// `lambda_max` of the symmetric part of `N^T A N`, with `N` an orthonormal
/// basis of `null(B^T)`. Since `N^T (A - B K) N = N^T A N` for every `K`, a
/// positive value rules out any symmetric Hurwitz closed loop.
fn symmetric_loop_obstruction(a: &Matrix, b: &Matrix) -> Option<f64> {
    let (n, m) = b.shape();
    let svd = (b * b.transpose()).svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12 * (1.0 + b.norm_squared())).count();
    if rank == n || m == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let cols: Vec<_> = order[..n - rank].iter().map(|&j| u.column(j).into_owned()).collect();
    let basis = Matrix::from_columns(&cols);
    matops::max_eig_sym(&(basis.transpose() * matops::symmetric_part(a) * &basis)).ok()
}

/// Every design the suites produce, with the initial state it certifies.
fn design_corpus() -> (Vec<(String, DesignProblem, DesignCertificate)>, Vec<String>) {
    let mut problems: Vec<(String, DesignProblem)> = vec![
        ("unstable 2x2".into(), unstable_two_input()),
        ("stable pair".into(), support::stable_pair()),
        (
            "unstable 2x2, trace objective".into(),
            unstable_two_input().with_options(DesignOptions {
                minimize_trace: true,
                ..DesignOptions::default()
            }),
        ),
        (
            "unstable 2x2, full X".into(),
            unstable_two_input().with_options(DesignOptions {
                x_scalar: false,
                ..DesignOptions::default()
            }),
        ),
    ];
    let diag = DesignProblem::new(
        LtiSystem::new(from_rows(&[&[0.5, 0.0], &[0.0, -0.3]]), Matrix::identity(2, 2)).expect("plant"),
        QuadraticCost::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).expect("cost"),
        Vector::from_column_slice(&[1.0, 1.0]),
    )
    .expect("problem")
    .with_structure(StructureSpec::new(DMatrix::from_row_slice(2, 2, &[true, false, false, true]), true).expect("mask"))
    .expect("structure");
    problems.push(("diagonal structure".into(), diag));
    for (name, states) in [
        ("consensus N=4", vec![0.9, 1.0, 0.6, 0.4]),
        ("consensus N=3", vec![1.0, -1.0, 0.5]),
        ("consensus N=5", vec![1.0, 0.2, -0.3, 0.8, 0.0]),
    ] {
        let cp = ConsensusProblem {
            n_agents: states.len(),
            initial_states: states,
            ..four_agents()
        };
        problems.push((name.into(), consensus::build_error_system(&cp).expect("error system")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..10 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=n);
        let a = random_matrix(&mut rng, n, n) * 1.5;
        let b = random_matrix(&mut rng, n, m) + Matrix::identity(n, m);
        let prob = DesignProblem::new(
            LtiSystem::new(a, b).expect("plant"),
            QuadraticCost::new(random_spd(&mut rng, n), random_spd(&mut rng, m)).expect("cost"),
            Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
        )
        .expect("problem");
        problems.push((format!("random plant {i}"), prob));
    }
    let mut designs = Vec::new();
    let mut skipped = Vec::new();
    for (name, prob) in problems {
        match design::design_suboptimal(&prob) {
            Ok(cert) => designs.push((name, prob, cert)),
            Err(e) => {
                let why = match symmetric_loop_obstruction(prob.sys.a(), prob.sys.b()) {
                    Some(l) if l > 0.0 => format!(" (certified: lambda_max(N^T A N) = {l:.3} > 0)"),
                    _ => String::new(),
                };
                skipped.push(format!("{name}: {e}{why}"))
            }
        }
    }
    (designs, skipped)
}

// negated comparisons so that NaN counts as a violation
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn criterion_7() -> (bool, String) {
    let (designs, skipped) = design_corpus();
    let mut violations = Vec::new();
    for (name, prob, cert) in &designs {
        let z = verify::cost_via_z(&prob.sys, &prob.cost, &cert.p, &prob.x0).expect("cost via Z").z;
        let tr_z = z.trace();
        let j = matops::quadratic_form(&z, &prob.x0);
        if !(tr_z < cert.trace_term) {
            violations.push(format!("{name}: trace(Z) = {tr_z:e} >= {:e}", cert.trace_term));
        }
        if !(matops::max_eig_sym(&z).expect("eigenvalues") <= tr_z) {
            violations.push(format!("{name}: lambda_max(Z) > trace(Z)"));
        }
        if prob.x0.norm() > 0.0 && !(j < cert.gamma_bar) {
            violations.push(format!("{name}: J = {j:e} >= gamma_bar = {:e}", cert.gamma_bar));
        }
    }
    (
        violations.is_empty() && !designs.is_empty(),
        format!(
            "{} designs checked, {} violations{}{}",
            designs.len(),
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(" [{}]", violations.join("; ")) },
            if skipped.is_empty() { String::new() } else { format!("; not designable: [{}]", skipped.join("; ")) },
        ),
    )
}

fn criterion_8() -> (bool, String) {
    let prob = DesignProblem::new(
        LtiSystem::new(Matrix::identity(2, 2), Matrix::zeros(2, 2)).expect("plant"),
        QuadraticCost::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).expect("cost"),
        Vector::from_column_slice(&[1.0, 1.0]),
    )
    .expect("problem");
    let lib = design::design_suboptimal(&prob);
    let lib_ok = matches!(lib, Err(DesignError::InfeasibleLmi { status, .. }) if status != FeasibilityStatus::Feasible);
    let problem_file = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/unstabilizable.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_asymlyap"))
        .arg("design")
        .arg(&problem_file)
        .env("ASYMLYAP_LOG", "quiet")
        .output()
        .expect("binary runs");
    let exit = out.status.code();
    (
        lib_ok && exit == Some(2),
        format!(
            "library: {}; CLI exit code {exit:?}",
            match &lib {
                Err(e) => e.to_string(),
                Ok(_) => "unexpectedly feasible".into(),
            }
        ),
    )
}

#[test]
fn acceptance() {
    let outcomes = vec![
        timed(1, Some(1.0), criterion_1),
        timed(2, Some(1.0), criterion_2),
        timed(3, Some(10.0), criterion_3),
        timed(4, Some(10.0), criterion_4),
        timed(5, Some(5.0), criterion_5),
        timed(6, Some(10.0), criterion_6),
        timed(7, None, criterion_7),
        timed(8, Some(5.0), criterion_8),
    ];
    let mut unexpected = Vec::new();
    for o in &outcomes {
        let limit = o.limit.map_or("no limit".to_string(), |l| format!("limit {:.0} s", l.as_secs_f64()));
        println!(
            "criterion {} {} [{:.3} s, {limit}] {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail
        );
        if o.id == 2 {
            println!("criterion 2 supplementary (informational) {}", criterion_2_supplement());
        }
        if o.pass == KNOWN_RED.contains(&o.id) {
            unexpected.push(o.id);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria {unexpected:?} deviate from the expected outcome (known red: {KNOWN_RED:?})"
    );
}
