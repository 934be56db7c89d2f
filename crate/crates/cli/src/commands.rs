use crate::error::{CliError, EXIT_BOUND_VIOLATED, EXIT_OK};
use crate::problem::{self, ConsensusFile, ConsensusSection, GainFile, ProblemFile, Source};
use crate::report::{self, Report};
use asymlyap::consensus::{self, CONSENSUS_TOL};
use asymlyap::design::{self, DesignOptions};
use asymlyap::lyapunov::{self, CareSolution};
use asymlyap::matops::{self, Matrix};
use asymlyap::verify::{self, Sample, SimOptions};
use asymlyap::{DesignProblem, LtiSystem, QuadraticCost};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use toml::Value;

/// Largest accepted relative gap between the analytic and simulated cost.
pub const ORACLE_GAP_TOL: f64 = 0.01;

/// Default consensus check horizon, in units of time.
pub const CONSENSUS_HORIZON: f64 = 10.0;
pub const CONSENSUS_STEP: f64 = 1e-3;

/// Flags shared by the commands; `None` falls back to the problem file and
/// then to the library defaults.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub epsilon: Option<f64>,
    pub feas_tol: Option<f64>,
    pub w_cap: Option<f64>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub no_simulate: bool,
    pub structure: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Settings {
    fn merged(&self, file: &problem::SolverSection) -> Resolved {
        let defaults = DesignOptions::default();
        let epsilon = self.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon);
        let feas_tol = self.feas_tol.or(file.feas_tol).unwrap_or(defaults.feas_tol);
        let w_cap = self.w_cap.or(file.w_cap);
        let mut design = DesignOptions {
            epsilon,
            feas_tol,
            w_cap,
            ..defaults
        };
        design.solver.feas_tol = feas_tol;
        Resolved {
            design,
            sim: SimOptions {
                step: self.step.or(file.step),
                horizon: self.horizon.or(file.horizon),
                stop_norm: None,
            },
            simulate: !self.no_simulate && file.simulate.unwrap_or(true),
        }
    }
}

#[derive(Debug, Clone)]
struct Resolved {
    design: DesignOptions,
    sim: SimOptions,
    simulate: bool,
}

impl Resolved {
    fn record(&self, report: &mut Report, cost: Option<&QuadraticCost>) {
        let s = report.section("settings");
        s.insert("epsilon".into(), report::float(self.design.epsilon));
        s.insert("feas_tol".into(), report::float(self.design.feas_tol));
        if let Some(cost) = cost {
            s.insert("w_cap".into(), report::float(self.design.w_cap_for(cost)));
        }
        s.insert("x_scalar".into(), Value::Boolean(self.design.x_scalar));
        s.insert("simulate".into(), Value::Boolean(self.simulate));
        if let Some(h) = self.sim.step {
            s.insert("step".into(), report::float(h));
        }
        if let Some(t) = self.sim.horizon {
            s.insert("horizon".into(), report::float(t));
        }
    }
}

fn load_problem(path: &Path, settings: &Settings, report: &mut Report) -> Result<(ProblemFile, Resolved), CliError> {
    let source = Source::read(path)?;
    let file: ProblemFile = source.parse()?;
    report.echo("problem", &source);
    let resolved = settings.merged(&file.solver);
    Ok((file, resolved))
}

fn design_problem(file: &ProblemFile, settings: &Settings, report: &mut Report) -> Result<DesignProblem, CliError> {
    let spec = match &settings.structure {
        Some(path) => {
            report.echo("structure", &Source::read(path)?);
            Some(problem::read_structure(path)?)
        }
        None => None,
    };
    file.design_problem(spec)
}

fn write_csv(path: &Path, samples: &[Sample]) -> Result<(), CliError> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let f = File::create(path).map_err(wrap)?;
    verify::write_trajectory_csv(samples, BufWriter::new(f)).map_err(wrap)
}

/// CARE baseline; `None` when the plant has no stabilizing solution.
fn baseline(sys: &LtiSystem, cost: &QuadraticCost) -> Option<CareSolution> {
    match lyapunov::solve_care(sys, cost, None) {
        Ok(c) => Some(c),
        Err(e) => {
            log::warn!("Riccati baseline unavailable: {e}");
            None
        }
    }
}

fn print_matrix(name: &str, m: &Matrix) {
    println!("{name} =");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| format!("{:>14.6e}", x + 0.0)).collect();
        println!("  [{}]", cells.join(" "));
    }
}

/// Runs the simulation oracle; a failure is a verification failure but the
/// report is still written.
fn simulate(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    k: &Matrix,
    x0: &asymlyap::Vector,
    resolved: &Resolved,
    report: &mut Report,
) -> Option<Result<verify::Simulation, CliError>> {
    if !resolved.simulate {
        return None;
    }
    let sim = verify::simulate_cost(sys, cost, k, x0, &resolved.sim).map_err(CliError::from);
    match &sim {
        Ok(s) => {
            let t = report.section("simulation");
            t.insert("j".into(), report::float(s.j));
            t.insert("tail_bound".into(), report::float(s.tail_bound));
            t.insert("step".into(), report::float(s.step));
            t.insert("final_time".into(), report::float(s.final_time));
            t.insert("samples".into(), Value::Integer(s.trajectory.len() as i64));
        }
        Err(e) => report.set("simulation", "error", Value::String(e.to_string())),
    }
    Some(sim)
}

pub fn cmd_design(input: &Path, settings: &Settings, report: &mut Report) -> Result<i32, CliError> {
    let (file, resolved) = load_problem(input, settings, report)?;
    let prob = design_problem(&file, settings, report)?.with_options(resolved.design.clone());
    resolved.record(report, Some(&prob.cost));

    let cert = design::design_suboptimal(&prob)?;
    let c = report.section("certificate");
    for (key, m) in [
        ("X", &cert.x),
        ("Y", &cert.y),
        ("W", &cert.w),
        ("P_lower", &cert.p_lower),
        ("P", &cert.p),
        ("K", &cert.k),
        ("A_cl", &cert.a_cl),
        ("P_hat", &cert.p_hat),
    ] {
        c.insert(key.into(), report::matrix(m));
    }
    c.insert("trace_term".into(), report::float(cert.trace_term));
    c.insert("gamma_bar".into(), report::float(cert.gamma_bar));

    let d = &cert.diagnostics;
    let s = report.section("solver");
    s.insert("slack".into(), report::float(d.slack));
    s.insert("newton_steps".into(), Value::Integer(d.newton_steps as i64));
    s.insert("closed_loop_symmetry_residual".into(), report::float(d.closed_loop_symmetry_residual));
    s.insert("symmetry_tolerance".into(), report::float(d.symmetry_tolerance));
    s.insert("p_hat_residual".into(), report::float(d.p_hat_residual));
    s.insert("margins".into(), report::margins(&d.margins, prob.options.feas_tol));

    let care = baseline(&prob.sys, &prob.cost);
    let j_star = care.as_ref().map(|c| c.j_star_of(&prob.x0));
    let rep = verify::verify_design(&prob.sys, &prob.cost, &cert.p, &prob.x0, Some(cert.gamma_bar), j_star, None)?;
    let sim = simulate(&prob.sys, &prob.cost, &cert.k, &prob.x0, &resolved, report);

    let floor_ok = j_star.is_none_or(|js| rep.j_analytic >= js - 1e-6 * js.abs().max(1.0));
    let margins_ok = d.margins.iter().all(|m| m.satisfied(prob.options.feas_tol));
    let lsi_ok = rep.p_spectrum.all_real_parts_positive();
    let (j_sim, gap) = match &sim {
        Some(Ok(s)) => (Some(s.j), Some((s.j - rep.j_analytic).abs() / rep.j_analytic.max(1e-12))),
        _ => (None, None),
    };
    let gap_ok = gap.is_none_or(|g| g <= ORACLE_GAP_TOL || rep.j_analytic == 0.0);
    let sim_ok = !matches!(sim, Some(Err(_)));

    let v = report.section("verification");
    v.insert("x0".into(), report::vector(&prob.x0));
    v.insert("j_analytic".into(), report::float(rep.j_analytic));
    if let Some(js) = j_sim {
        v.insert("j_simulated".into(), report::float(js));
    }
    if let Some(g) = gap {
        v.insert("oracle_gap".into(), report::float(g));
    }
    if let Some(js) = j_star {
        v.insert("j_star".into(), report::float(js));
    }
    v.insert("gamma_bar".into(), report::float(cert.gamma_bar));
    v.insert("bound_ok".into(), Value::Boolean(rep.bound_ok));
    v.insert("riccati_floor_ok".into(), Value::Boolean(floor_ok));
    v.insert("margins_ok".into(), Value::Boolean(margins_ok));
    v.insert("p_eigenvalues_positive_real".into(), Value::Boolean(lsi_ok));
    v.insert("hurwitz".into(), Value::Boolean(rep.hurwitz));
    v.insert("spectral_abscissa".into(), report::float(rep.spectral_abscissa));
    v.insert("closed_loop_symmetry_residual".into(), report::float(rep.closed_loop_symmetry_residual));
    v.insert("Z".into(), report::matrix(&rep.z));
    v.insert("lyapunov_residual".into(), report::float(rep.lyapunov_residual));
    v.insert("p_spectrum".into(), Value::Table(report::spectrum(&rep.p_spectrum)));
    if let Some(care) = &care {
        let r = report.section("riccati");
        r.insert("P_star".into(), report::matrix(&care.p_star));
        r.insert("K_star".into(), report::matrix(&care.k_star));
        r.insert("residual".into(), report::float(care.residual));
    }

    println!("design: feasible (slack {:.3e})", d.slack);
    print_matrix("P", &cert.p);
    print_matrix("K", &cert.k);
    if let Some(js) = j_star {
        println!("J*        = {js:.6}");
    }
    println!("J         = {:.6}", rep.j_analytic);
    if let Some(js) = j_sim {
        println!("J (sim)   = {js:.6}");
    }
    println!("gamma_bar = {:.6}", cert.gamma_bar);

    if let (Some(path), Some(Ok(s))) = (&settings.csv, &sim) {
        write_csv(path, &s.trajectory)?;
    }
    if let Some(Err(e)) = &sim {
        eprintln!("simulation failed: {e}");
    }
    let ok = rep.bound_ok && floor_ok && margins_ok && lsi_ok && gap_ok && sim_ok;
    if !ok {
        eprintln!(
            "verification failed: bound_ok={} riccati_floor_ok={floor_ok} margins_ok={margins_ok} \
             p_eigenvalues_positive_real={lsi_ok} oracle_gap_ok={gap_ok} simulation_ok={sim_ok}",
            rep.bound_ok
        );
    }
    Ok(if ok { EXIT_OK } else { EXIT_BOUND_VIOLATED })
}

pub fn cmd_riccati(input: &Path, settings: &Settings, report: &mut Report) -> Result<i32, CliError> {
    let (file, _) = load_problem(input, settings, report)?;
    let prob = file.design_problem(None)?;
    let care = lyapunov::solve_care(&prob.sys, &prob.cost, None)?;
    let j_star = care.j_star_of(&prob.x0);
    let r = report.section("riccati");
    r.insert("P_star".into(), report::matrix(&care.p_star));
    r.insert("K_star".into(), report::matrix(&care.k_star));
    r.insert("j_star".into(), report::float(j_star));
    r.insert("residual".into(), report::float(care.residual));
    r.insert("iterations".into(), Value::Integer(care.residual_history.len() as i64));
    print_matrix("P*", &care.p_star);
    print_matrix("K*", &care.k_star);
    println!("J*(x0)   = {j_star:.6}");
    println!("residual = {:.3e}", care.residual);
    Ok(EXIT_OK)
}

pub fn cmd_verify(
    input: &Path,
    gain: &Path,
    gamma: Option<f64>,
    settings: &Settings,
    report: &mut Report,
) -> Result<i32, CliError> {
    let (file, resolved) = load_problem(input, settings, report)?;
    let prob = file.design_problem(None)?.with_options(resolved.design.clone());
    resolved.record(report, None);
    let gain_src = Source::read(gain)?;
    let gain_file: GainFile = gain_src.parse()?;
    report.echo("gain", &gain_src);
    let (sys, cost, x0) = (&prob.sys, &prob.cost, &prob.x0);

    let (p, k) = match (&gain_file.p, &gain_file.k) {
        (Some(p), None) => {
            let p = problem::matrix("P", p)?;
            if p.shape() != (sys.n(), sys.n()) {
                return Err(CliError::Invalid(format!("P must be {n}x{n}", n = sys.n())));
            }
            let (k, _) = verify::closed_loop(sys, cost.r(), &p)?;
            (Some(p), k)
        }
        (None, Some(k)) => {
            let k = problem::matrix("K", k)?;
            if k.shape() != (sys.m(), sys.n()) {
                return Err(CliError::Invalid(format!("K must be {}x{}", sys.m(), sys.n())));
            }
            (None, k)
        }
        _ => return Err(CliError::parse(&gain_src.name, "exactly one of P and K must be given")),
    };
    let a_cl = sys.a() - sys.b() * &k;
    let hurwitz = matops::is_hurwitz(&a_cl)?;
    let v = report.section("verification");
    v.insert("K".into(), report::matrix(&k));
    v.insert("A_cl".into(), report::matrix(&a_cl));
    v.insert("hurwitz".into(), Value::Boolean(hurwitz.hurwitz));
    v.insert("spectral_abscissa".into(), report::float(hurwitz.abscissa));
    v.insert("closed_loop_symmetry_residual".into(), report::float(matops::symmetry_residual(&a_cl)));
    if !hurwitz.hurwitz {
        println!("closed loop is not Hurwitz: spectral abscissa {:.6e}", hurwitz.abscissa);
        return Err(verify::VerifyError::NotHurwitz {
            abscissa: hurwitz.abscissa,
        }
        .into());
    }

    let eval = verify::cost_of_gain(&a_cl, cost, &k, x0)?;
    let sim = simulate(sys, cost, &k, x0, &resolved, report);
    let j_star = baseline(sys, cost).map(|c| c.j_star_of(x0));
    let (j_sim, gap) = match &sim {
        Some(Ok(s)) => (Some(s.j), Some((s.j - eval.j).abs() / eval.j.max(1e-12))),
        _ => (None, None),
    };
    let gap_ok = gap.is_none_or(|g| g <= ORACLE_GAP_TOL || eval.j == 0.0);
    let sim_ok = !matches!(sim, Some(Err(_)));
    let bound_ok = gamma.is_none_or(|g| eval.j < g);

    let v = report.section("verification");
    v.insert("Z".into(), report::matrix(&eval.z));
    v.insert("j_analytic".into(), report::float(eval.j));
    v.insert("lyapunov_residual".into(), report::float(eval.residual));
    if let Some(js) = j_sim {
        v.insert("j_simulated".into(), report::float(js));
    }
    if let Some(g) = gap {
        v.insert("oracle_gap".into(), report::float(g));
    }
    if let Some(js) = j_star {
        v.insert("j_star".into(), report::float(js));
    }
    if let Some(g) = gamma {
        v.insert("gamma".into(), report::float(g));
        v.insert("bound_ok".into(), Value::Boolean(bound_ok));
    }
    if let Some(p) = &p {
        v.insert("p_spectrum".into(), Value::Table(report::spectrum(&matops::eig_general(p)?)));
        if let Some(g) = gamma {
            match design::check_gamma_suboptimal(p, g, &prob) {
                Ok(check) => {
                    let t = report.section("gamma_check");
                    t.insert("suboptimal".into(), Value::Boolean(check.suboptimal));
                    t.insert("riccati_max_eig".into(), report::float(check.riccati_max_eig));
                    t.insert("required_margin".into(), report::float(check.required_margin));
                    t.insert("x0_cost".into(), report::float(check.x0_cost));
                }
                Err(e) => report.set("gamma_check", "skipped", Value::String(e.to_string())),
            }
        }
    }

    print_matrix("K", &k);
    println!("J (analytic)  = {:.6}", eval.j);
    if let Some(js) = j_sim {
        println!("J (simulated) = {js:.6}");
    }
    if let Some(js) = j_star {
        println!("J*            = {js:.6}");
    }
    if let (Some(path), Some(Ok(s))) = (&settings.csv, &sim) {
        write_csv(path, &s.trajectory)?;
    }
    if let Some(Err(e)) = &sim {
        eprintln!("simulation failed: {e}");
    }
    let ok = bound_ok && gap_ok && sim_ok;
    if !ok {
        eprintln!("verification failed: bound_ok={bound_ok} oracle_gap_ok={gap_ok} simulation_ok={sim_ok}");
    }
    Ok(if ok { EXIT_OK } else { EXIT_BOUND_VIOLATED })
}

/// Either a `[consensus]` file or the individual values from the command line.
#[derive(Debug, Clone, Default)]
pub struct ConsensusArgs {
    pub file: Option<PathBuf>,
    pub agents: Option<usize>,
    pub pole: Option<f64>,
    pub q: Option<f64>,
    pub r: Option<f64>,
    pub states: Option<Vec<f64>>,
}

impl ConsensusArgs {
    fn section(&self, report: &mut Report) -> Result<ConsensusSection, CliError> {
        if let Some(path) = &self.file {
            let source = Source::read(path)?;
            let file: ConsensusFile = source.parse()?;
            report.echo("problem", &source);
            return Ok(file.consensus);
        }
        let missing = |what: &str| CliError::parse("command line", format!("--{what} is required without --file"));
        let section = ConsensusSection {
            agents: self.agents.ok_or_else(|| missing("agents"))?,
            pole: self.pole.ok_or_else(|| missing("pole"))?,
            q: self.q.ok_or_else(|| missing("q"))?,
            r: self.r.ok_or_else(|| missing("r"))?,
            states: self.states.clone().ok_or_else(|| missing("states"))?,
        };
        report.echo(
            "problem",
            &Source {
                name: "command line".into(),
                text: section.to_toml(),
            },
        );
        Ok(section)
    }
}

pub fn cmd_consensus(args: &ConsensusArgs, settings: &Settings, report: &mut Report) -> Result<i32, CliError> {
    let section = args.section(report)?;
    let prob = section.problem();
    prob.validate()?;
    let resolved = settings.merged(&Default::default());
    resolved.record(report, None);

    let proto = consensus::design_consensus(&prob, &resolved.design)?;
    let step = settings.step.unwrap_or(CONSENSUS_STEP);
    let horizon = settings.horizon.unwrap_or(CONSENSUS_HORIZON);
    let sim = consensus::simulate_agents(&prob, &proto.k, step, horizon)?;
    let gap = (proto.j_simulated - proto.j_realized).abs() / proto.j_realized.max(1e-12);
    let bound_ok = proto.j_realized < proto.gamma_bar || (proto.gamma_bar == 0.0 && proto.j_realized == 0.0);
    let gap_ok = gap <= ORACLE_GAP_TOL || proto.j_realized == 0.0;

    let t = report.section("protocol");
    t.insert("K".into(), report::matrix(&proto.k));
    t.insert("protocol_matrix".into(), report::matrix(&proto.protocol_matrix));
    t.insert("structure_ok".into(), Value::Boolean(proto.structure_ok));
    t.insert("gamma_bar".into(), report::float(proto.gamma_bar));
    t.insert("j_realized".into(), report::float(proto.j_realized));
    t.insert("j_simulated".into(), report::float(proto.j_simulated));
    t.insert("oracle_gap".into(), report::float(gap));
    t.insert("bound_ok".into(), Value::Boolean(bound_ok));
    let c = &proto.certificate;
    let e = report.section("certificate");
    for (key, m) in [("X", &c.x), ("Y", &c.y), ("W", &c.w), ("P_lower", &c.p_lower), ("P", &c.p), ("P_hat", &c.p_hat)] {
        e.insert(key.into(), report::matrix(m));
    }
    let a = report.section("agents");
    a.insert("step".into(), report::float(step));
    a.insert("horizon".into(), report::float(horizon));
    a.insert("tolerance".into(), report::float(CONSENSUS_TOL));
    a.insert("final_disagreement".into(), report::float(sim.final_disagreement));
    a.insert("consensus_reached".into(), Value::Boolean(sim.consensus_time.is_some()));
    if let Some(tc) = sim.consensus_time {
        a.insert("consensus_time".into(), report::float(tc));
    }

    print_matrix("protocol (u = M e)", &proto.protocol_matrix);
    println!("J         = {:.6}", proto.j_realized);
    println!("J (sim)   = {:.6}", proto.j_simulated);
    println!("gamma_bar = {:.6}", proto.gamma_bar);
    match sim.consensus_time {
        Some(tc) => println!("consensus (disagreement < {CONSENSUS_TOL:e}) from t = {tc:.3}"),
        None => println!("no consensus by t = {horizon} (disagreement {:.3e})", sim.final_disagreement),
    }
    if let Some(path) = &settings.csv {
        write_csv(path, &sim.samples)?;
    }
    let ok = bound_ok && gap_ok;
    if !ok {
        eprintln!("verification failed: bound_ok={bound_ok} oracle_gap_ok={gap_ok}");
    }
    Ok(if ok { EXIT_OK } else { EXIT_BOUND_VIOLATED })
}
