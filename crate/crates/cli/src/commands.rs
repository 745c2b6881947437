use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vectorhost::dynamics::Attractor;
use vectorhost::eigen::{self, EigenWarning};
use vectorhost::periodic::{solve_endemic_pair, solve_hbar, solve_logistic_orbit};
use vectorhost::{
    classify_regime, sandwich_check, verify_trichotomy, EigenResult, EpsChoice, ModelStepper, PeriodStepper,
    PeriodicOrbit, Problem, Reaction, Regime, RegimeReport, StateField, Verdict,
};

use crate::config::{Config, InitialData, RawConfig};
use crate::output::{num, orbit_rows, state_rows, OutputDir, Report};
use crate::{sweep, Cli, CliError, Command};

/// Default band half-width for the sandwich check when `run.eps` is unset.
const DEFAULT_SANDWICH_EPS: f64 = 0.05;

/// A finished command: its report, plus an error that decides the exit code
/// when the report is still worth emitting.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub error: Option<CliError>,
}

impl Outcome {
    fn ok(report: Report) -> Outcome {
        Outcome { report, error: None }
    }
}

pub fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut raw = RawConfig::load(path)?;
    for o in &cli.overrides {
        raw.apply_override(o)?;
    }
    raw.build()
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config = load_config(cli)?;
    let out = OutputDir::create(&cli.out)?;
    let name = cli.command.name();
    let outcome = match cli.command {
        Command::Validate => validate(&config),
        Command::Sweep => sweep::run(&config, &out)?,
        cmd => {
            let check = validate(&config);
            if check.error.is_some() {
                check
            } else {
                match cmd {
                    Command::Eigen => eigen_cmd(&config, &out),
                    Command::Periodic => periodic_cmd(&config, &out),
                    Command::Simulate => simulate(&config, &out, cli.seed),
                    Command::Classify => classify(&config, &out, cli.strict),
                    Command::Verify => verify(&config, &out, cli.seed, cli.strict),
                    Command::Validate | Command::Sweep => unreachable!(),
                }?
            }
        }
    };
    out.write_report(&format!("{name}.txt"), &outcome.report)?;
    Ok(outcome)
}

fn validate(config: &Config) -> Outcome {
    let v = config.problem.validate();
    let mut r = Report::default();
    r.push("hypothesis", if v.pass() { "PASS" } else { "FAIL" });
    r.push("violations", v.violations.len().to_string());
    for violation in &v.violations {
        r.push("violation", violation.to_string());
    }
    let error = (!v.pass()).then(|| {
        CliError::Hypothesis(v.violations.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("\n"))
    });
    Outcome { report: r, error }
}

fn eigen_report(r: &mut Report, key: &str, e: &EigenResult) {
    r.num(key, e.value);
    r.num(format!("{key}_multiplier"), e.multiplier);
    r.push(format!("{key}_iterations"), e.iterations.to_string());
    r.num(format!("{key}_periodicity_residual"), e.periodicity_residual);
    r.num(format!("{key}_map_residual"), e.map_residual);
    for w in &e.warnings {
        match w {
            EigenWarning::ReducibleSystem { min_interior } => {
                r.push(format!("{key}_warning"), format!("ReducibleSystem min_interior={}", num(*min_interior)))
            }
        }
    }
}

fn history_rows(label: &str, e: &EigenResult) -> Vec<Vec<String>> {
    e.history
        .iter()
        .enumerate()
        .map(|(i, r)| vec![label.to_string(), (i + 1).to_string(), num(*r)])
        .collect()
}

fn eigen_cmd(config: &Config, out: &OutputDir) -> Result<Outcome, CliError> {
    let (p, opts) = (&config.problem, &config.solver);
    let g = &p.grid;
    let mut r = Report::default();
    let zeta = eigen::zeta(p, opts)?;
    let gamma = eigen::gamma_rho(p, opts)?;
    eigen_report(&mut r, "zeta", &zeta);
    eigen_report(&mut r, "gamma", &gamma);
    out.write_csv("eigen_zeta.csv", &["x", "t", "phi"], &orbit_rows(g, &[&zeta.eigenfunction]))?;
    out.write_csv("eigen_gamma.csv", &["x", "t", "phi"], &orbit_rows(g, &[&gamma.eigenfunction]))?;
    let mut history = history_rows("zeta", &zeta);
    history.extend(history_rows("gamma", &gamma));

    if zeta.value <= -opts.band {
        let logistic = solve_logistic_orbit(p, opts)?;
        let lv = eigen::lambda_v(p, &logistic.orbit, opts)?;
        eigen_report(&mut r, "lambda_V", &lv);
        let rows = orbit_rows(g, &[&lv.eigenfunction]);
        out.write_csv("eigen_lambda_v.csv", &["x", "t", "phi_h", "phi_v"], &rows)?;
        history.extend(history_rows("lambda_V", &lv));
        if let Some(eps) = config.run.eps {
            r.num("eps", eps);
            let le = eigen::lambda_v_eps(p, &logistic.orbit, &logistic.zeta.eigenfunction, eps, opts)?;
            eigen_report(&mut r, "lambda_V_eps", &le);
            history.extend(history_rows("lambda_V_eps", &le));
        }
    } else {
        r.push("lambda_V", "ABSENT");
    }
    out.write_csv("eigen_history.csv", &["quantity", "iteration", "r_estimate"], &history)?;
    Ok(Outcome::ok(r))
}

fn periodic_cmd(config: &Config, out: &OutputDir) -> Result<Outcome, CliError> {
    let (p, opts) = (&config.problem, &config.solver);
    let g = &p.grid;
    let mut r = Report::default();
    let logistic = solve_logistic_orbit(p, opts)?;
    r.num("zeta", logistic.zeta.value);
    r.num("V_max", logistic.orbit.max());
    r.num("V_min_interior", logistic.orbit.min_interior(g));
    r.push("V_periods", logistic.converged_in.to_string());
    r.num("V_fixed_point_residual", logistic.fixed_point_residual);
    r.num("V_seed_gap", logistic.seed_gap);
    out.write_csv("periodic_v.csv", &["x", "t", "V"], &orbit_rows(g, &[&logistic.orbit]))?;
    if !logistic.is_positive() {
        r.push("hbar", "ABSENT");
        r.push("endemic", "ABSENT");
        return Ok(Outcome::ok(r));
    }

    let phi = &logistic.zeta.eigenfunction;
    let hbar = solve_hbar(p, &logistic.orbit, 0.0, phi, opts)?;
    r.num("hbar_max", hbar.max());
    r.num("hbar_min", hbar.min());
    out.write_csv("periodic_hbar.csv", &["x", "t", "H"], &orbit_rows(g, &[&hbar]))?;

    let lv = eigen::lambda_v(p, &logistic.orbit, opts)?;
    r.num("lambda_V", lv.value);
    if lv.value > -opts.band {
        r.push("endemic", "ABSENT");
        return Ok(Outcome::ok(r));
    }
    let choice = match config.run.eps {
        Some(e) => EpsChoice::Fixed(e),
        None => EpsChoice::Ladder { initial: None },
    };
    let pair = solve_endemic_pair(p, &logistic, choice, opts)?;
    r.num("eps_used", pair.eps_used);
    r.num("lambda_V_eps", pair.lambda_v_eps);
    r.num("delta", pair.delta);
    r.num("H_max", pair.h_orbit.max());
    r.num("V_i_max", pair.vi_orbit.max());
    r.num("upper_residual", pair.upper_residual);
    r.num("lower_residual", pair.lower_residual);
    r.num("gap", pair.gap);
    r.num("truncation_margin", pair.truncation_margin);
    r.num("upper_increase", pair.monotonicity.upper_increase);
    r.num("lower_decrease", pair.monotonicity.lower_decrease);
    r.num("order_violation", pair.monotonicity.order_violation);
    r.num("min_V_minus_V_i", min_gap(p, &logistic.orbit, &pair.vi_orbit));
    let rows = orbit_rows(g, &[&pair.h_orbit, &pair.vi_orbit]);
    out.write_csv("periodic_endemic.csv", &["x", "t", "H_i", "V_i"], &rows)?;
    Ok(Outcome::ok(r))
}

/// `min (V − V_i)` over interior nodes and all stored levels.
fn min_gap(p: &Problem, v: &PeriodicOrbit, vi: &PeriodicOrbit) -> f64 {
    let mut m = f64::INFINITY;
    for (a, b) in v.levels.iter().zip(&vi.levels) {
        for node in 1..=p.grid.nx {
            m = m.min(a.nodal(0, node) - b.nodal(0, node));
        }
    }
    m
}

pub fn initial_state(config: &Config, seed: u64) -> Result<StateField, CliError> {
    let p = &config.problem;
    let layouts = p.full_layouts();
    let state = match &config.run.initial {
        InitialData::Expressions(exprs) => StateField::from_fn(&layouts, 0.0, |c, node| {
            Ok(exprs[c].evaluate(p.grid.x(node), 0.0)?)
        })?,
        InitialData::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            StateField::from_fn(&layouts, 0.0, |_, _| Ok(rng.gen_range(0.1..1.0)))?
        }
    };
    Ok(state)
}

fn simulate(config: &Config, out: &OutputDir, seed: u64) -> Result<Outcome, CliError> {
    let p = &config.problem;
    let u0 = initial_state(config, seed)?;
    let stepper = ModelStepper::new(p, Reaction::Full)?.with_blowup_cap(config.solver.blowup_cap);
    let tr = stepper.integrate_trajectory(&u0, config.run.n_periods, config.run.stride)?;
    let mut rows = Vec::new();
    for s in &tr.samples {
        rows.extend(state_rows(&p.grid, &[s]));
    }
    out.write_csv("simulate.csv", &["x", "t", "H_i", "V_u", "V_i"], &rows)?;
    let last = tr.final_state();
    let mut r = Report::default();
    r.push("n_periods", config.run.n_periods.to_string());
    r.push("samples", tr.samples.len().to_string());
    r.num("t_final", last.t);
    r.num("min_value", tr.min());
    for (c, name) in ["H_i", "V_u", "V_i"].iter().enumerate() {
        r.num(format!("{name}_final_max"), last.component(c).max());
    }
    Ok(Outcome::ok(r))
}

fn regime_report(r: &mut Report, rep: &RegimeReport) {
    r.push("regime", rep.regime.label());
    r.num("zeta", rep.zeta);
    match rep.lambda_v {
        Some(l) => r.num("lambda_V", l),
        None => r.push("lambda_V", "ABSENT"),
    }
    let attractor = match rep.regime {
        Regime::Extinction => "(0,0,0)",
        Regime::DiseaseFree => "(0,V,0)",
        Regime::Endemic => "(H_i,V-V_i,V_i)",
        Regime::Indeterminate => "ABSENT",
    };
    r.push("attractor", attractor);
    if let Some(a) = &rep.attractor {
        for (c, name) in ["H_i", "V_u", "V_i"].iter().enumerate() {
            r.num(format!("attractor_{name}_max"), a.orbit.component(c).max());
        }
    }
}

fn write_attractor(out: &OutputDir, p: &Problem, a: &Attractor) -> Result<(), CliError> {
    out.write_csv("attractor.csv", &["x", "t", "H_i", "V_u", "V_i"], &orbit_rows(&p.grid, &[&a.orbit]))
}

fn classify(config: &Config, out: &OutputDir, strict: bool) -> Result<Outcome, CliError> {
    let rep = classify_regime(&config.problem, &config.solver)?;
    let mut r = Report::default();
    regime_report(&mut r, &rep);
    if let Some(a) = &rep.attractor {
        write_attractor(out, &config.problem, a)?;
    }
    let error = (strict && rep.regime == Regime::Indeterminate).then_some(CliError::Indeterminate);
    Ok(Outcome { report: r, error })
}

fn verify(config: &Config, out: &OutputDir, seed: u64, strict: bool) -> Result<Outcome, CliError> {
    let (p, opts) = (&config.problem, &config.solver);
    let rep = classify_regime(p, opts)?;
    let mut r = Report::default();
    regime_report(&mut r, &rep);
    let Some(attractor) = &rep.attractor else {
        r.push("verdict", "SKIPPED");
        let error = strict.then_some(CliError::Indeterminate);
        return Ok(Outcome { report: r, error });
    };
    write_attractor(out, p, attractor)?;

    let u0 = initial_state(config, seed)?;
    let run = &config.run;
    let conv = verify_trichotomy(p, attractor, &u0, run.n_periods, run.target, opts)?;
    let rows: Vec<Vec<String>> = conv
        .distances
        .iter()
        .enumerate()
        .map(|(n, e)| {
            let ratio = conv
                .distances
                .get(n + 1)
                .filter(|_| *e > 0.0)
                .map_or(String::new(), |next| num(next / e));
            vec![n.to_string(), num(*e), ratio]
        })
        .collect();
    out.write_csv("convergence.csv", &["n", "e_n", "ratio"], &rows)?;
    r.push("n_periods", run.n_periods.to_string());
    r.num("target", run.target);
    r.num("final_distance", conv.final_distance());
    match conv.median_ratio {
        Some(m) => r.num("median_ratio", m),
        None => r.push("median_ratio", "ABSENT"),
    }
    match conv.entered_at {
        Some(n) => r.push("entered_at", n.to_string()),
        None => r.push("entered_at", "NOT_REACHED"),
    }
    r.push("escaped", conv.escaped.to_string());
    r.num("min_value", conv.min_value);
    r.push("verdict", conv.verdict.label());

    let eps = run.eps.unwrap_or(DEFAULT_SANDWICH_EPS);
    let (v, phi) = match &rep.logistic {
        Some(l) if l.is_positive() => (l.orbit.clone(), l.zeta.eigenfunction.clone()),
        _ => {
            let zero = PeriodicOrbit::zero(&[p.vector_layout()], &p.grid);
            (zero.clone(), zero)
        }
    };
    let stepper = ModelStepper::new(p, Reaction::Full)?.with_blowup_cap(opts.blowup_cap);
    let tr = stepper.integrate_trajectory(&u0, run.n_periods, run.stride)?;
    let sandwich = sandwich_check(p, &v, &phi, eps, &tr);
    r.num("sandwich_eps", eps);
    match sandwich.entered_at {
        Some(n) => r.push("sandwich_N", n.to_string()),
        None => r.push("sandwich_N", "NOT_REACHED"),
    }

    let error = match conv.verdict {
        Verdict::Pass => None,
        Verdict::Fail => Some(CliError::VerifyFailed(format!(
            "final distance {} against target {}",
            num(conv.final_distance()),
            num(run.target)
        ))),
    };
    Ok(Outcome { report: r, error })
}
