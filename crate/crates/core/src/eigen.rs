//! Principal eigenvalues of periodic-parabolic problems.
//!
//! For a cooperative system `∂t u − ∇·d∇u = H(x, t) u` the principal
//! eigenvalue is `λ = −ln r / T`, where `r` is the spectral radius of the
//! period map. `r` is found by power iteration on the discrete period map,
//! and the periodic eigenfunction is `φ(t) = e^{λt} u(t)` along one sweep.

use crate::coeffs::expr::Expression;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::options::SolverOptions;
use crate::problem::Problem;
use crate::state::{PeriodicOrbit, StateField};
use crate::stepper::{ComponentSpec, LinearPeriodicSystem, PeriodMap, PeriodStepper};

/// Relative size below which an eigenfunction entry counts as zero.
const REDUCIBLE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum EigenWarning {
    /// The eigenfunction (nearly) vanishes at an interior node, so the
    /// system is probably not fully coupled.
    ReducibleSystem { min_interior: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub value: f64,
    /// Spectral radius `r = e^{−λT}` of the period map.
    pub multiplier: f64,
    /// Sup-normalized over all stored levels.
    pub eigenfunction: PeriodicOrbit,
    /// `‖φ(T) − φ(0)‖∞ / ‖φ‖∞`.
    pub periodicity_residual: f64,
    /// `‖𝒜φ(0) − rφ(0)‖∞ / ‖φ(0)‖∞`.
    pub map_residual: f64,
    pub iterations: usize,
    /// Multiplier estimate after each iteration.
    pub history: Vec<f64>,
    pub warnings: Vec<EigenWarning>,
}

pub fn principal_eigenvalue(
    system: &LinearPeriodicSystem,
    tol: f64,
    max_iters: usize,
) -> Result<EigenResult> {
    principal_eigenvalue_of_map(&system.prepare()?, tol, max_iters)
}

pub fn principal_eigenvalue_of_map(map: &PeriodMap, tol: f64, max_iters: usize) -> Result<EigenResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    let grid = map.grid().clone();
    let mut u = StateField::constant(map.layouts(), 0.0, 1.0);
    let mut history = Vec::new();
    let mut prev_r = f64::NAN;
    let mut converged = None;
    for it in 1..=max_iters {
        let mut v = map.integrate_over_period(&u)?;
        v.t = 0.0;
        let r = v.max();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Internal(format!(
                "period map produced max {r} from a positive vector"
            )));
        }
        v.scale(1.0 / r);
        history.push(r);
        let dist = v.sup_distance(&u);
        u = v;
        if (r - prev_r).abs() <= tol * r && dist <= tol {
            converged = Some((it, r));
            break;
        }
        prev_r = r;
    }
    let Some((iterations, r)) = converged else {
        let n = history.len();
        let residual = if n >= 2 {
            (history[n - 1] - history[n - 2]).abs() / history[n - 1]
        } else {
            f64::NAN
        };
        return Err(Error::NoConvergence {
            what: "power iteration",
            iterations: max_iters,
            residual,
        });
    };

    let value = -r.ln() / grid.period;
    let mut orbit = map.sweep_period(&u)?;
    let map_residual = orbit.levels[grid.steps_per_period].sup_distance(&scaled(&u, r)) / u.sup_norm();
    for (k, level) in orbit.levels.iter_mut().enumerate() {
        level.scale((value * grid.time(k)).exp());
    }
    let norm = orbit.max();
    orbit.scale(1.0 / norm);
    let periodicity_residual = orbit.periodicity_residual();

    let mut warnings = Vec::new();
    let min_interior = orbit.min_interior(&grid);
    if min_interior <= REDUCIBLE_THRESHOLD {
        warnings.push(EigenWarning::ReducibleSystem { min_interior });
    }
    Ok(EigenResult {
        value,
        multiplier: r,
        eigenfunction: orbit,
        periodicity_residual,
        map_residual,
        iterations,
        history,
        warnings,
    })
}

fn scaled(u: &StateField, factor: f64) -> StateField {
    let mut s = u.clone();
    s.scale(factor);
    s
}

fn scalar_system(grid: &Grid, d: &Expression, bc: &crate::grid::BoundarySpec, h: Field) -> LinearPeriodicSystem {
    LinearPeriodicSystem::scalar(grid.clone(), d.clone(), bc.clone(), h)
}

/// `ζ(μ1, β)`: principal eigenvalue of `ℒ2 φ + (μ1 − β) φ = ζ φ` under `bc2`.
pub fn zeta(problem: &Problem, opts: &SolverOptions) -> Result<EigenResult> {
    let c = &problem.coeffs;
    let h = Field::from(&c.beta) - Field::from(&c.mu1);
    let sys = scalar_system(&problem.grid, &c.d2, &problem.bc2, h);
    principal_eigenvalue(&sys, opts.eigen_tol, opts.eigen_max_iters)
}

/// `γ(ρ)`: principal eigenvalue of `ℒ1 η + ρ η = γ η` under `bc1`; always positive.
pub fn gamma_rho(problem: &Problem, opts: &SolverOptions) -> Result<EigenResult> {
    let c = &problem.coeffs;
    let sys = scalar_system(&problem.grid, &c.d1, &problem.bc1, -Field::from(&c.rho));
    let res = principal_eigenvalue(&sys, opts.eigen_tol, opts.eigen_max_iters)?;
    if res.value <= 0.0 {
        return Err(Error::Internal(format!(
            "gamma(rho) = {} is not positive although rho > 0",
            res.value
        )));
    }
    Ok(res)
}

fn orbit_field(orbit: &PeriodicOrbit, grid: &Grid) -> Field {
    Field::samples(orbit.samples(0, grid))
}

fn check_vector_orbit(problem: &Problem, v: &PeriodicOrbit, name: &str) -> Result<()> {
    let g = &problem.grid;
    if v.levels.len() != g.steps_per_period + 1 || v.component_count() != 1 {
        return Err(Error::Input(format!(
            "{name} must be a one-component orbit with {} levels",
            g.steps_per_period + 1
        )));
    }
    if v.layouts()[0] != problem.vector_layout() {
        return Err(Error::Input(format!("{name} does not match the vector boundary layout")));
    }
    Ok(())
}

/// Linearization at zero of the host / infected-vector system around the
/// logistic orbit, with the vector orbit shifted by `±eps φ`.
fn lambda_system(problem: &Problem, v: &PeriodicOrbit, phi: Option<(&PeriodicOrbit, f64)>) -> LinearPeriodicSystem {
    let g = &problem.grid;
    let c = &problem.coeffs;
    let vf = orbit_field(v, g);
    let (upper, lower) = match phi {
        Some((phi, eps)) if eps != 0.0 => {
            let shift = Field::Const(eps) * orbit_field(phi, g);
            (vf.clone() + shift.clone(), vf - shift)
        }
        _ => (vf.clone(), vf),
    };
    let components = vec![
        ComponentSpec {
            diffusion: c.d1.clone(),
            bc: problem.bc1.clone(),
        },
        ComponentSpec {
            diffusion: c.d2.clone(),
            bc: problem.bc2.clone(),
        },
    ];
    let coupling = vec![
        vec![-Field::from(&c.rho), Field::from(c.host_infection())],
        vec![
            Field::from(&c.sigma2) * upper,
            -(Field::from(&c.mu1) + Field::from(&c.mu2) * lower),
        ],
    ];
    LinearPeriodicSystem::new(g.clone(), components, coupling).expect("2 x 2 coupling")
}

/// `λ(V)`: principal eigenvalue of the linearization at `(0, 0)` of the
/// reduced host / infected-vector system, given the logistic orbit `V`.
pub fn lambda_v(problem: &Problem, v: &PeriodicOrbit, opts: &SolverOptions) -> Result<EigenResult> {
    check_vector_orbit(problem, v, "V")?;
    let min = v.min();
    if min < 0.0 {
        return Err(Error::Input(format!("V has negative entries (min {min:e})")));
    }
    if v.max() <= 0.0 {
        return Err(Error::Input("V vanishes identically".into()));
    }
    let sys = lambda_system(problem, v, None);
    principal_eigenvalue(&sys, opts.eigen_tol, opts.eigen_max_iters)
}

/// Checks `V − |eps| φ > 0` on every stored unknown of the vector layout.
pub fn check_eps_positivity(
    problem: &Problem,
    v: &PeriodicOrbit,
    phi: &PeriodicOrbit,
    eps: f64,
) -> Result<()> {
    let layout = problem.vector_layout();
    for (level, (vl, pl)) in v.levels.iter().zip(&phi.levels).enumerate() {
        for node in layout.offset..layout.offset + layout.len {
            let margin = vl.nodal(0, node) - eps.abs() * pl.nodal(0, node);
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

/// `λ(V; ε)`: like [`lambda_v`] with coupling `σ2 (V + εφ)` and decay
/// `μ1 + μ2 (V − εφ)`, where `φ` is the normalized ζ-eigenfunction.
pub fn lambda_v_eps(
    problem: &Problem,
    v: &PeriodicOrbit,
    phi: &PeriodicOrbit,
    eps: f64,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    check_vector_orbit(problem, v, "V")?;
    check_vector_orbit(problem, phi, "phi")?;
    check_eps_positivity(problem, v, phi, eps)?;
    let sys = lambda_system(problem, v, Some((phi, eps)));
    principal_eigenvalue(&sys, opts.eigen_tol, opts.eigen_max_iters)
}
