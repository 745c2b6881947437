//! Periodic solutions: the logistic orbit `V`, the host orbit `H̄` driven by
//! `V + εφ`, and the endemic pair obtained by monotone iteration of the
//! period map from ordered upper and lower seeds.

use crate::eigen::{self, check_eps_positivity, EigenResult};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::options::SolverOptions;
use crate::problem::Problem;
use crate::state::{PeriodicOrbit, StateField};
use crate::stepper::{ModelStepper, PeriodStepper, Reaction};

/// Floor for `min μ2` when sizing the constant upper seed of the logistic equation.
const MU2_FLOOR: f64 = 1e-12;

/// Outcome of iterating a period map to a fixed point.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub state: StateField,
    pub periods: usize,
    /// Sup distance between the last two period-boundary states.
    pub residual: f64,
    /// Period-boundary states `u_0, u_1, …` when recording was requested.
    pub boundaries: Vec<StateField>,
}

/// Iterates `u ↦ P(u)` until the last step `d_n` and the a-posteriori bound
/// `d_n q / (1 − q)`, `q = d_n / d_{n−1}`, are both within `tol`.
pub fn iterate_to_fixed_point(
    stepper: &impl PeriodStepper,
    seed: &StateField,
    tol: f64,
    max_periods: usize,
    record: bool,
    what: &'static str,
) -> Result<FixedPoint> {
    let mut u = seed.clone();
    u.t = 0.0;
    let mut boundaries = if record { vec![u.clone()] } else { Vec::new() };
    let mut prev: Option<f64> = None;
    let mut d = f64::INFINITY;
    for n in 1..=max_periods {
        let mut v = stepper.integrate_over_period(&u)?;
        v.t = 0.0;
        d = v.sup_distance(&u);
        if record {
            boundaries.push(v.clone());
        }
        u = v;
        let settled = match prev {
            _ if d <= 1e-3 * tol => true,
            Some(p) if d < p => {
                let q = d / p;
                d <= tol && d * q / (1.0 - q) <= tol
            }
            _ => false,
        };
        if settled {
            return Ok(FixedPoint {
                state: u,
                periods: n,
                residual: d,
                boundaries,
            });
        }
        prev = Some(d);
    }
    Err(Error::NoConvergence {
        what,
        iterations: max_periods,
        residual: d,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticOrbitResult {
    /// One-component orbit on the vector layout; zero when `ζ ≥ −band`.
    pub orbit: PeriodicOrbit,
    pub zeta: EigenResult,
    pub converged_in: usize,
    /// `‖V(T) − V(0)‖∞` of the returned orbit.
    pub fixed_point_residual: f64,
    /// Sup distance between the limits reached from the upper and lower seeds.
    pub seed_gap: f64,
}

impl LogisticOrbitResult {
    pub fn is_positive(&self) -> bool {
        self.orbit.max() > 0.0
    }
}

pub fn solve_logistic_orbit(problem: &Problem, opts: &SolverOptions) -> Result<LogisticOrbitResult> {
    let zeta = eigen::zeta(problem, opts)?;
    solve_logistic_orbit_with_zeta(problem, zeta, opts)
}

/// As [`solve_logistic_orbit`] with `ζ` already computed.
pub fn solve_logistic_orbit_with_zeta(
    problem: &Problem,
    zeta: EigenResult,
    opts: &SolverOptions,
) -> Result<LogisticOrbitResult> {
    let g = &problem.grid;
    let layout = [problem.vector_layout()];
    if zeta.value >= -opts.band {
        return Ok(LogisticOrbitResult {
            orbit: PeriodicOrbit::zero(&layout, g),
            zeta,
            converged_in: 0,
            fixed_point_residual: 0.0,
            seed_gap: 0.0,
        });
    }
    let c = &problem.coeffs;
    let growth = Field::from(&c.beta) - Field::from(&c.mu1);
    let mu2 = Field::from(&c.mu2);
    let (mut max_growth, mut min_mu2, mut max_mu2) = (0.0f64, f64::INFINITY, 0.0f64);
    for level in 0..=g.steps_per_period {
        for node in 0..g.node_count() {
            max_growth = max_growth.max(growth.at_level(g, node, level)?);
            let m = mu2.at_level(g, node, level)?;
            if m > 0.0 {
                min_mu2 = min_mu2.min(m);
            }
            max_mu2 = max_mu2.max(m);
        }
    }
    let k = 1.0 + max_growth / min_mu2.max(MU2_FLOOR);
    let upper = StateField::constant(&layout, 0.0, k);

    let cap = (-zeta.value / max_mu2.max(MU2_FLOOR)).min(k);
    let delta = largest_power_of_half(|d| d <= 0.5 * cap);
    let mut lower = zeta.eigenfunction.levels[0].clone();
    lower.scale(delta);

    let stepper = ModelStepper::new(problem, Reaction::Logistic)?.with_blowup_cap(opts.blowup_cap);
    let tol = opts.periodic_tol;
    let hi = iterate_to_fixed_point(&stepper, &upper, tol, opts.max_periods, false, "logistic orbit (upper seed)")?;
    let lo = iterate_to_fixed_point(&stepper, &lower, tol, opts.max_periods, false, "logistic orbit (lower seed)")?;
    let seed_gap = hi.state.sup_distance(&lo.state);
    if seed_gap > 10.0 * tol {
        return Err(Error::NonUniqueOrbit {
            gap: seed_gap,
            allowed: 10.0 * tol,
        });
    }
    let orbit = stepper.sweep_period(&hi.state)?;
    let fixed_point_residual = orbit.levels[g.steps_per_period].sup_distance(&orbit.levels[0]);
    Ok(LogisticOrbitResult {
        orbit,
        zeta,
        converged_in: hi.periods.max(lo.periods),
        fixed_point_residual,
        seed_gap,
    })
}

fn largest_power_of_half(ok: impl Fn(f64) -> bool) -> f64 {
    let mut d = 1.0;
    for _ in 0..1000 {
        if ok(d) {
            return d;
        }
        d *= 0.5;
    }
    0.0
}

/// Periodic solution of `ℒ1 H + ρ H = σ1 H_u (V + εφ)` under `bc1`, found as
/// the fixed point of the affine period map (a contraction since `γ(ρ) > 0`).
pub fn solve_hbar(
    problem: &Problem,
    v: &PeriodicOrbit,
    eps: f64,
    phi: &PeriodicOrbit,
    opts: &SolverOptions,
) -> Result<PeriodicOrbit> {
    eigen::gamma_rho(problem, opts)?;
    let g = &problem.grid;
    let mut drive = Field::samples(v.samples(0, g));
    if eps != 0.0 {
        drive = drive + Field::Const(eps) * Field::samples(phi.samples(0, g));
    }
    let source = Field::from(problem.coeffs.host_infection()) * drive;
    let stepper = ModelStepper::new(problem, Reaction::ForcedHost { source })?.with_blowup_cap(opts.blowup_cap);
    let zero = StateField::zeros(&[problem.host_layout()], 0.0);
    let fp = iterate_to_fixed_point(&stepper, &zero, opts.periodic_tol, opts.max_periods, false, "host orbit")?;
    stepper.sweep_period(&fp.state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsChoice {
    /// Start from `initial` (default `0.1 min V / max φ`) and halve until admissible.
    Ladder { initial: Option<f64> },
    /// Use exactly this value; inadmissible values are errors.
    Fixed(f64),
}

/// Order and monotonicity of the recorded period-boundary iterates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityRecord {
    /// `max_n max(U_{n+1} − U_n)`; ≤ 0 for a nonincreasing upper sequence.
    pub upper_increase: f64,
    /// `max_n max(L_n − L_{n+1})`; ≤ 0 for a nondecreasing lower sequence.
    pub lower_decrease: f64,
    /// `max_n max(L_n − U_n)`; ≤ 0 when the sequences stay ordered.
    pub order_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndemicPairResult {
    pub h_orbit: PeriodicOrbit,
    pub vi_orbit: PeriodicOrbit,
    pub eps_used: f64,
    pub lambda_v: f64,
    pub lambda_v_eps: f64,
    /// Scale of the lower seed `δ (φ1^ε, φ2^ε)`.
    pub delta: f64,
    pub upper_residual: f64,
    pub lower_residual: f64,
    pub gap: f64,
    /// `min (V + εφ − V_i)` over the orbit; positive when the truncation is inactive.
    pub truncation_margin: f64,
    pub monotonicity: MonotonicityRecord,
    pub upper_boundaries: Vec<StateField>,
    pub lower_boundaries: Vec<StateField>,
}

/// Checks the second admissibility inequality `(εφ)² μ2 − εφ |β + ζ| < β V`.
fn check_eps_balance(
    problem: &Problem,
    v: &PeriodicOrbit,
    phi: &PeriodicOrbit,
    eps: f64,
    zeta: f64,
) -> Result<()> {
    if eps == 0.0 {
        return Ok(());
    }
    let g = &problem.grid;
    let (beta, mu2) = (Field::from(&problem.coeffs.beta), Field::from(&problem.coeffs.mu2));
    let layout = problem.vector_layout();
    for level in 0..=g.steps_per_period {
        for node in layout.offset..layout.offset + layout.len {
            let b = beta.at_level(g, node, level)?;
            let s = eps * phi.levels[level].nodal(0, node);
            let margin = b * v.levels[level].nodal(0, node) - (s * s * mu2.at_level(g, node, level)? - s.abs() * (b + zeta).abs());
            if margin <= 0.0 {
                return Err(Error::EpsilonTooLarge {
                    eps,
                    node,
                    level,
                    margin,
                });
            }
        }
    }
    Ok(())
}

fn lambda_for_eps(
    problem: &Problem,
    logistic: &LogisticOrbitResult,
    lambda_v: &EigenResult,
    eps: f64,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let (v, phi) = (&logistic.orbit, &logistic.zeta.eigenfunction);
    check_eps_positivity(problem, v, phi, eps)?;
    check_eps_balance(problem, v, phi, eps, logistic.zeta.value)?;
    if eps == 0.0 {
        return Ok(lambda_v.clone());
    }
    eigen::lambda_v_eps(problem, v, phi, eps, opts)
}

/// The unique positive periodic solution `(H_i, V_i)` of the reduced system,
/// as the common limit of the monotone upper and lower period-map sequences
/// of the truncated system.
pub fn solve_endemic_pair(
    problem: &Problem,
    logistic: &LogisticOrbitResult,
    eps: EpsChoice,
    opts: &SolverOptions,
) -> Result<EndemicPairResult> {
    if logistic.zeta.value > -opts.band || !logistic.is_positive() {
        return Err(Error::Regime(format!(
            "zeta = {} is not below -{}: there is no positive vector orbit",
            logistic.zeta.value, opts.band
        )));
    }
    let lv = eigen::lambda_v(problem, &logistic.orbit, opts)?;
    if lv.value > -opts.band {
        return Err(Error::Regime(format!(
            "lambda(V) = {} is not below -{}: no positive endemic solution",
            lv.value, opts.band
        )));
    }
    let g = &problem.grid;
    let (v, phi) = (&logistic.orbit, &logistic.zeta.eigenfunction);

    let (eps_used, lve) = match eps {
        EpsChoice::Fixed(e) => {
            let r = lambda_for_eps(problem, logistic, &lv, e, opts)?;
            if r.value > -opts.band {
                return Err(Error::Regime(format!(
                    "lambda(V; {e}) = {} is not below -{}",
                    r.value, opts.band
                )));
            }
            (e, r)
        }
        EpsChoice::Ladder { initial } => {
            let min_v = v
                .levels
                .iter()
                .flat_map(|l| (1..=g.nx).map(move |j| l.nodal(0, j)))
                .fold(f64::INFINITY, f64::min);
            let mut e = initial.unwrap_or(0.1 * min_v / phi.max());
            let mut found = None;
            for _ in 0..60 {
                match lambda_for_eps(problem, logistic, &lv, e, opts) {
                    Ok(r) if r.value < -opts.band => {
                        found = Some((e, r));
                        break;
                    }
                    Ok(_) | Err(Error::EpsilonTooLarge { .. }) => e *= 0.5,
                    Err(err) => return Err(err),
                }
            }
            found.ok_or_else(|| Error::Regime("no admissible epsilon found by halving".into()))?
        }
    };

    let hbar = solve_hbar(problem, v, eps_used, phi, opts)?;
    let mut cap = v.levels[0].clone();
    for (c, p) in cap.components[0].iter_mut().zip(&phi.levels[0].components[0]) {
        *c += eps_used * p;
    }
    let upper = StateField::stack(&[&hbar.levels[0], &cap]);
    let phi_eps = &lve.eigenfunction.levels[0];
    let delta = largest_power_of_half(|d| {
        phi_eps
            .values()
            .zip(upper.values())
            .all(|(p, u)| d * p <= 0.5 * u)
    });
    if delta == 0.0 {
        return Err(Error::Internal("no positive scale fits the lower seed under the upper seed".into()));
    }
    let mut lower = phi_eps.clone();
    lower.scale(delta);

    let stepper = ModelStepper::new(
        problem,
        Reaction::Truncated {
            v: v.samples(0, g).into(),
            phi: phi.samples(0, g).into(),
            eps: eps_used,
        },
    )?
    .with_blowup_cap(opts.blowup_cap);
    let tol = opts.periodic_tol;
    let hi = iterate_to_fixed_point(&stepper, &upper, tol, opts.max_periods, true, "endemic pair (upper sequence)")?;
    let lo = iterate_to_fixed_point(&stepper, &lower, tol, opts.max_periods, true, "endemic pair (lower sequence)")?;

    let monotonicity = monotonicity(&hi.boundaries, &lo.boundaries);
    let gap = hi.state.sup_distance(&lo.state);
    if gap > 100.0 * tol {
        return Err(Error::Gap {
            gap,
            allowed: 100.0 * tol,
        });
    }
    let orbit = stepper.sweep_period(&hi.state)?;
    let h_orbit = orbit.component(0);
    let vi_orbit = orbit.component(1);
    let mut truncation_margin = f64::INFINITY;
    for (k, level) in vi_orbit.levels.iter().enumerate() {
        for (i, vi) in level.components[0].iter().enumerate() {
            let bound = v.levels[k].components[0][i] + eps_used * phi.levels[k].components[0][i];
            truncation_margin = truncation_margin.min(bound - vi);
        }
    }
    Ok(EndemicPairResult {
        h_orbit,
        vi_orbit,
        eps_used,
        lambda_v: lv.value,
        lambda_v_eps: lve.value,
        delta,
        upper_residual: hi.residual,
        lower_residual: lo.residual,
        gap,
        truncation_margin,
        monotonicity,
        upper_boundaries: hi.boundaries,
        lower_boundaries: lo.boundaries,
    })
}

fn monotonicity(upper: &[StateField], lower: &[StateField]) -> MonotonicityRecord {
    let rise = |seq: &[StateField]| {
        seq.windows(2)
            .map(|w| w[1].max_excess_over(&w[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let fall = |seq: &[StateField]| {
        seq.windows(2)
            .map(|w| w[0].max_excess_over(&w[1]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // a finished sequence stays at its limit
    let n = upper.len().max(lower.len());
    let at = |seq: &'_ [StateField], i: usize| seq[i.min(seq.len() - 1)].clone();
    let order_violation = (0..n)
        .map(|i| at(lower, i).max_excess_over(&at(upper, i)))
        .fold(f64::NEG_INFINITY, f64::max);
    MonotonicityRecord {
        upper_increase: rise(upper),
        lower_decrease: fall(lower),
        order_violation,
    }
}
