use asymlyap::lyapunov;
use asymlyap::matops::{self, Matrix, Vector};
use asymlyap::verify::{self, SimOptions};
use asymlyap::{LtiSystem, QuadraticCost};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix {
    let g = random_matrix(rng, n, n);
    &g * g.transpose() + Matrix::identity(n, n) * 0.1
}

fn random_sym_negative_definite(rng: &mut impl Rng, n: usize) -> Matrix {
    -random_spd(rng, n)
}

#[test]
fn simulation_agrees_with_exact_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 50 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=n);
        let sys = LtiSystem::new(random_matrix(&mut rng, n, n), random_matrix(&mut rng, n, m)).unwrap();
        let cost = QuadraticCost::new(random_spd(&mut rng, n), random_spd(&mut rng, m)).unwrap();
        let k = random_matrix(&mut rng, m, n) * 2.0;
        let a_cl = sys.a() - sys.b() * &k;
        let abscissa = matops::spectral_abscissa(&a_cl).unwrap();
        if abscissa > -0.05 {
            continue;
        }
        let x0 = random_matrix(&mut rng, n, 1).column(0).into_owned();
        let exact = verify::cost_of_gain(&a_cl, &cost, &k, &x0).unwrap();
        let sim = verify::simulate_cost(&sys, &cost, &k, &x0, &SimOptions::default()).unwrap();
        assert!(
            (sim.j - exact.j).abs() <= 0.01 * exact.j.max(1e-12),
            "simulated {} exact {}",
            sim.j,
            exact.j
        );
        checked += 1;
    }
}

#[test]
fn doubling_horizon_changes_little() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let n = rng.gen_range(1..=3);
        let sys = LtiSystem::new(-random_spd(&mut rng, n), Matrix::identity(n, n)).unwrap();
        let cost = QuadraticCost::new(random_spd(&mut rng, n), Matrix::identity(n, n)).unwrap();
        let k = Matrix::zeros(n, n);
        let x0 = random_matrix(&mut rng, n, 1).column(0).into_owned();
        let (step, horizon) = verify::default_timing(sys.a()).unwrap();
        let base = SimOptions {
            step: Some(step),
            horizon: Some(horizon),
            stop_norm: None,
        };
        let doubled = SimOptions {
            horizon: Some(2.0 * horizon),
            ..base.clone()
        };
        let j1 = verify::simulate_cost(&sys, &cost, &k, &x0, &base).unwrap().j;
        let j2 = verify::simulate_cost(&sys, &cost, &k, &x0, &doubled).unwrap().j;
        assert!((j1 - j2).abs() <= 1e-3 * j2, "{j1} vs {j2}");
    }
}

#[test]
fn lsi_implies_positive_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut held = 0;
    let mut draws = 0;
    while held < 100 {
        draws += 1;
        assert!(draws < 100_000, "too few samples satisfy the inequality");
        let n = rng.gen_range(1..=5);
        let a_bar = random_sym_negative_definite(&mut rng, n);
        // symmetric part positive definite plus a skew part of random size
        let s = random_spd(&mut rng, n);
        let g = random_matrix(&mut rng, n, n) * rng.gen_range(0.0..3.0);
        let p = s + &g - g.transpose() + random_matrix(&mut rng, n, n) * rng.gen_range(0.0..0.5);
        let check = verify::check_lsi_spectrum(&a_bar, &p).unwrap();
        if !check.lsi_holds {
            continue;
        }
        held += 1;
        assert!(check.all_re_positive, "counterexample: A = {a_bar}, P = {p}");
    }
}

#[test]
fn lemma_sum_has_positive_spectrum_and_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(1..=5);
        let a_bar = random_sym_negative_definite(&mut rng, n);
        let w = random_spd(&mut rng, n);
        // A P0 + P0 A = W - D with D > 0, then a perturbation that keeps
        // A P + P^T A - W < 0
        let d = random_spd(&mut rng, n) * 0.5;
        let p0 = lyapunov::solve_lyapunov(&a_bar, &(&d - &w)).unwrap();
        let p_tilde = &p0 + random_matrix(&mut rng, n, n) * rng.gen_range(0.0..1.0);
        let lhs = &a_bar * &p_tilde + p_tilde.transpose() * &a_bar - &w;
        if matops::max_eig_sym(&matops::symmetric_part(&lhs)).unwrap() >= 0.0 {
            continue;
        }
        let p_hat = lyapunov::solve_p_hat(&a_bar, &w).unwrap();
        let sum = &p_tilde + &p_hat;
        assert!(matops::eig_general(&sum).unwrap().all_real_parts_positive());
        assert!(sum.trace() > 0.0);
        checked += 1;
    }
}

#[test]
fn verification_report_is_consistent() {
    let sys = LtiSystem::new(-Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
    let cost = QuadraticCost::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
    let x0 = Vector::from_column_slice(&[1.0, -1.0]);
    let rep = verify::verify_design(&sys, &cost, &Matrix::zeros(2, 2), &x0, Some(1.1), None, Some(&SimOptions::default()))
        .unwrap();
    // open-loop cost: x0^T x0 / 2
    assert!((rep.j_analytic - 1.0).abs() < 1e-12);
    assert!(rep.bound_ok);
    assert!(rep.oracle_gap().unwrap() < 0.01);
    let tight = verify::verify_design(&sys, &cost, &Matrix::zeros(2, 2), &x0, Some(1.0), None, None).unwrap();
    assert!(!tight.bound_ok);

    let unstable = LtiSystem::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
    assert!(matches!(
        verify::verify_design(&unstable, &cost, &Matrix::zeros(2, 2), &x0, None, None, None),
        Err(verify::VerifyError::NotHurwitz { .. })
    ));
}
