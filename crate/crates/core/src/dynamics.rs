//! Regime classification and long-time verification for the full model.
//!
//! The sign of `ζ` decides whether vectors persist; when they do, the sign
//! of `λ(V)` decides whether the infection persists. Each regime has a
//! periodic attractor for `(H_i, V_u, V_i)`: zero, `(0, V, 0)`, or
//! `(H_i, V − V_i, V_i)` built from the endemic pair.

use std::fmt;

use crate::eigen;
use crate::error::{Error, Result};
use crate::options::SolverOptions;
use crate::periodic::{
    solve_endemic_pair, solve_logistic_orbit_with_zeta, EndemicPairResult, EpsChoice,
    LogisticOrbitResult,
};
use crate::problem::Problem;
use crate::state::{PeriodicOrbit, StateField};
use crate::stepper::{ModelStepper, PeriodStepper, Reaction, Trajectory};

/// Distances below this are rounding noise and excluded from ratio estimates.
const DISTANCE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Extinction,
    DiseaseFree,
    Endemic,
    Indeterminate,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Extinction => "EXTINCTION",
            Regime::DiseaseFree => "DISEASE_FREE",
            Regime::Endemic => "ENDEMIC",
            Regime::Indeterminate => "INDETERMINATE",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    Zero,
    DiseaseFree,
    Endemic,
}

/// Periodic attractor of `(H_i, V_u, V_i)` over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Attractor {
    pub kind: AttractorKind,
    pub orbit: PeriodicOrbit,
}

impl Attractor {
    pub fn zero(problem: &Problem) -> Attractor {
        Attractor {
            kind: AttractorKind::Zero,
            orbit: PeriodicOrbit::zero(&problem.full_layouts(), &problem.grid),
        }
    }

    pub fn disease_free(problem: &Problem, v: &PeriodicOrbit) -> Attractor {
        let zero_h = StateField::zeros(&[problem.host_layout()], 0.0);
        let levels = v
            .levels
            .iter()
            .map(|vl| {
                let zero_v = StateField::zeros(&vl.layouts, vl.t);
                let mut s = StateField::stack(&[&zero_h, vl, &zero_v]);
                s.t = vl.t;
                s
            })
            .collect();
        Attractor {
            kind: AttractorKind::DiseaseFree,
            orbit: PeriodicOrbit { levels },
        }
    }

    pub fn endemic(v: &PeriodicOrbit, pair: &EndemicPairResult) -> Attractor {
        let levels = v
            .levels
            .iter()
            .zip(&pair.h_orbit.levels)
            .zip(&pair.vi_orbit.levels)
            .map(|((vl, hl), il)| {
                let mut vu = vl.clone();
                for (u, i) in vu.components[0].iter_mut().zip(&il.components[0]) {
                    *u -= i;
                }
                let mut s = StateField::stack(&[hl, &vu, il]);
                s.t = vl.t;
                s
            })
            .collect();
        Attractor {
            kind: AttractorKind::Endemic,
            orbit: PeriodicOrbit { levels },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub zeta: f64,
    /// Absent when `V` is not positive.
    pub lambda_v: Option<f64>,
    pub regime: Regime,
    /// Absent for [`Regime::Indeterminate`].
    pub attractor: Option<Attractor>,
    pub logistic: Option<LogisticOrbitResult>,
    pub endemic: Option<EndemicPairResult>,
}

pub fn classify_regime(problem: &Problem, opts: &SolverOptions) -> Result<RegimeReport> {
    let zeta = eigen::zeta(problem, opts)?;
    let z = zeta.value;
    let mut report = RegimeReport {
        zeta: z,
        lambda_v: None,
        regime: Regime::Indeterminate,
        attractor: None,
        logistic: None,
        endemic: None,
    };
    if z >= opts.band {
        report.regime = Regime::Extinction;
        report.attractor = Some(Attractor::zero(problem));
        return Ok(report);
    }
    if z > -opts.band {
        return Ok(report);
    }
    let logistic = solve_logistic_orbit_with_zeta(problem, zeta, opts)?;
    let lv = eigen::lambda_v(problem, &logistic.orbit, opts)?.value;
    report.lambda_v = Some(lv);
    if lv >= opts.band {
        report.regime = Regime::DiseaseFree;
        report.attractor = Some(Attractor::disease_free(problem, &logistic.orbit));
    } else if lv <= -opts.band {
        let pair = solve_endemic_pair(problem, &logistic, EpsChoice::Fixed(0.0), opts)?;
        report.regime = Regime::Endemic;
        report.attractor = Some(Attractor::endemic(&logistic.orbit, &pair));
        report.endemic = Some(pair);
    }
    report.logistic = Some(logistic);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `e_n`: sup distance to the attractor over `[nT, (n+1)T]`, `n = 0..N`.
    pub distances: Vec<f64>,
    /// `e_{n+1} / e_n` wherever `e_n` is above rounding level.
    pub ratios: Vec<f64>,
    pub median_ratio: Option<f64>,
    pub target: f64,
    /// First period with `e_n < target`.
    pub entered_at: Option<usize>,
    /// Whether some later `e_n` exceeded `2 target` after entering.
    pub escaped: bool,
    /// Smallest value over the whole trajectory.
    pub min_value: f64,
    pub final_state: StateField,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    pub fn final_distance(&self) -> f64 {
        *self.distances.last().expect("at least one period")
    }
}

fn check_initial(problem: &Problem, initial: &StateField) -> Result<()> {
    if initial.layouts != problem.full_layouts() {
        return Err(Error::Input("initial state must have the (H_i, V_u, V_i) layout".into()));
    }
    for c in 0..3 {
        for node in 1..=problem.grid.nx {
            let v = initial.nodal(c, node);
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Input(format!(
                    "initial data must be positive at interior nodes (component {c}, x = {}, value {v})",
                    problem.grid.x(node)
                )));
            }
        }
    }
    Ok(())
}

/// Integrates the full model from `initial` for `n_periods` and measures the
/// distance to `attractor` over every stored level of each period.
pub fn verify_trichotomy(
    problem: &Problem,
    attractor: &Attractor,
    initial: &StateField,
    n_periods: usize,
    target: f64,
    opts: &SolverOptions,
) -> Result<ConvergenceReport> {
    check_initial(problem, initial)?;
    if n_periods == 0 {
        return Err(Error::Input("n_periods must be at least 1".into()));
    }
    let stepper = ModelStepper::new(problem, Reaction::Full)?.with_blowup_cap(opts.blowup_cap);
    let m = problem.grid.steps_per_period;
    let mut u = initial.clone();
    u.t = 0.0;
    let mut distances = Vec::with_capacity(n_periods);
    let mut min_value = u.min();
    for _ in 0..n_periods {
        let mut e = u.sup_distance(&attractor.orbit.levels[0]);
        for k in 1..=m {
            stepper.step(&mut u)?;
            e = e.max(u.sup_distance(&attractor.orbit.levels[k]));
            min_value = min_value.min(u.min());
        }
        distances.push(e);
    }
    let ratios: Vec<f64> = distances
        .windows(2)
        .filter(|w| w[0] > DISTANCE_FLOOR)
        .map(|w| w[1] / w[0])
        .collect();
    let median_ratio = median(&ratios);
    let entered_at = distances.iter().position(|&e| e < target);
    let escaped = entered_at.is_some_and(|n| distances[n..].iter().any(|&e| e > 2.0 * target));
    let last = *distances.last().expect("n_periods >= 1");
    let verdict = if last <= target && median_ratio.is_none_or(|r| r < 1.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConvergenceReport {
        distances,
        ratios,
        median_ratio,
        target,
        entered_at,
        escaped,
        min_value,
        final_state: u,
        verdict,
    })
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    /// Smallest `N` such that every period `n ≥ N` stays inside the band;
    /// `None` means NOT_REACHED.
    pub entered_at: Option<usize>,
    /// Per period: whether every stored sample lies inside the band.
    pub inside: Vec<bool>,
}

/// Checks `0 < V − εφ ≤ V_u + V_i ≤ V + εφ` on the stored samples of a
/// full-model trajectory, with `V` and `φ` one-component vector orbits.
pub fn sandwich_check(
    problem: &Problem,
    v: &PeriodicOrbit,
    phi: &PeriodicOrbit,
    eps: f64,
    trajectory: &Trajectory,
) -> SandwichReport {
    let g = &problem.grid;
    let m = g.steps_per_period;
    let layout = problem.vector_layout();
    let n_periods = trajectory
        .period_of(trajectory.final_state().t)
        .max(1);
    let mut inside = vec![true; n_periods];
    for s in &trajectory.samples {
        let step = (s.t / g.dt).round() as usize;
        let level = step % m;
        let period = (step / m).min(n_periods - 1);
        let ok = (layout.offset..layout.offset + layout.len).all(|node| {
            let (vk, pk) = (v.levels[level].nodal(0, node), phi.levels[level].nodal(0, node));
            let w = s.nodal(1, node) + s.nodal(2, node);
            let (lo, hi) = (vk - eps * pk, vk + eps * pk);
            lo > 0.0 && lo <= w && w <= hi
        });
        inside[period] &= ok;
    }
    let entered_at = match inside.iter().rposition(|&ok| !ok) {
        None => Some(0),
        Some(last_bad) if last_bad + 1 < n_periods => Some(last_bad + 1),
        Some(_) => None,
    };
    SandwichReport { entered_at, inside }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::expr::Expression;
    use crate::coeffs::CoefficientSet;
    use crate::grid::{BoundarySpec, Grid};

    fn constants(h_u: &str, beta: &str, mu1: &str) -> Problem {
        Problem::new(
            Grid::new(0.0, 1.0, 15, 1.0, 64).unwrap(),
            CoefficientSet::from_strs(["1", "1", "1", beta, mu1, "1", "1", "1", h_u]).unwrap(),
            BoundarySpec::neumann(),
            BoundarySpec::neumann(),
        )
    }

    fn initial(p: &Problem, values: [f64; 3]) -> StateField {
        StateField::from_fn(&p.full_layouts(), 0.0, |c, _| Ok(values[c])).unwrap()
    }

    #[test]
    fn classification_of_the_constant_families() {
        let opts = SolverOptions::default();
        let r = classify_regime(&constants("1", "1", "2"), &opts).unwrap();
        assert_eq!(r.regime, Regime::Extinction);
        assert!(r.lambda_v.is_none());
        assert_eq!(r.attractor.unwrap().orbit.max(), 0.0);

        let r = classify_regime(&constants("1", "2", "1"), &opts).unwrap();
        assert_eq!(r.regime, Regime::DiseaseFree);
        assert!((r.lambda_v.unwrap() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-8);

        let r = classify_regime(&constants("5", "2", "1"), &opts).unwrap();
        assert_eq!(r.regime, Regime::Endemic);
        assert!((r.zeta + 1.0).abs() < 1e-10);
        let a = r.attractor.unwrap();
        let s = a.orbit.start();
        assert!((s.components[0][3] - 3.0).abs() < 1e-6);
        assert!((s.components[1][3] - 0.4).abs() < 1e-6);
        assert!((s.components[2][3] - 0.6).abs() < 1e-6);
    }

    #[test]
    fn near_zero_zeta_is_indeterminate() {
        let r = classify_regime(&constants("1", "1.0005", "1"), &SolverOptions::default()).unwrap();
        assert_eq!(r.regime, Regime::Indeterminate);
        assert!(r.attractor.is_none());
    }

    #[test]
    fn endemic_trajectory_converges() {
        let p = constants("5", "2", "1");
        let opts = SolverOptions::default();
        let a = classify_regime(&p, &opts).unwrap().attractor.unwrap();
        let r = verify_trichotomy(&p, &a, &initial(&p, [1.0, 0.5, 0.1]), 30, 1e-3, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.distances);
        assert!(r.median_ratio.unwrap() < 1.0);
        assert!(!r.escaped);
        assert!(r.min_value >= 0.0);
    }

    #[test]
    fn extinction_decays_monotonically() {
        let p = constants("1", "1", "2");
        let opts = SolverOptions::default();
        let a = Attractor::zero(&p);
        let r = verify_trichotomy(&p, &a, &initial(&p, [1.0, 1.0, 1.0]), 30, 1e-4, &opts).unwrap();
        assert!(r.final_state.max() <= 1e-4);
        assert_eq!(r.verdict, Verdict::Pass);
        // total vectors shrink from one period boundary to the next
        let s = ModelStepper::new(&p, Reaction::Full).unwrap();
        let tr = s.integrate_trajectory(&initial(&p, [1.0, 1.0, 1.0]), 10, 64).unwrap();
        let totals: Vec<f64> = tr
            .period_boundaries()
            .iter()
            .map(|b| (0..b.components[1].len()).map(|i| b.components[1][i] + b.components[2][i]).fold(0.0, f64::max))
            .collect();
        assert!(totals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn seasonal_trajectory_reaches_the_computed_attractor() {
        let p = Problem::new(
            Grid::new(0.0, 3.0, 15, 1.0, 64).unwrap(),
            CoefficientSet::from_strs([
                "1 + 0.2*cos(2*pi*t)",
                "10",
                "1",
                "4*(1 + 0.5*sin(2*pi*t))",
                "1",
                "1 + 0.2*x",
                "0.5",
                "1",
                "1 + 0.5*cos(x)",
            ])
            .unwrap(),
            BoundarySpec::Dirichlet,
            BoundarySpec::robin(Expression::constant(0.5), Expression::parse("0.5 + 0.25*sin(2*pi*t)").unwrap()),
        );
        let opts = SolverOptions::default();
        let report = classify_regime(&p, &opts).unwrap();
        assert_eq!(report.regime, Regime::Endemic);
        let u0 = StateField::from_fn(&p.full_layouts(), 0.0, |c, node| Ok([0.5, 1.0, 0.2][c] + 0.1 * p.grid.x(node))).unwrap();
        let r = verify_trichotomy(&p, report.attractor.as_ref().unwrap(), &u0, 40, 1e-6, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.distances);
    }

    #[test]
    fn initial_data_must_be_positive() {
        let p = constants("5", "2", "1");
        let a = Attractor::zero(&p);
        let err = verify_trichotomy(&p, &a, &initial(&p, [1.0, 0.0, 0.1]), 3, 1e-3, &SolverOptions::default());
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn sandwich_band() {
        let p = constants("5", "2", "1");
        let opts = SolverOptions::default();
        let report = classify_regime(&p, &opts).unwrap();
        let logistic = report.logistic.unwrap();
        let (v, phi) = (&logistic.orbit, &logistic.zeta.eigenfunction);
        let s = ModelStepper::new(&p, Reaction::Full).unwrap();

        let tr = s.integrate_trajectory(&initial(&p, [1.0, 0.5, 0.1]), 20, 1).unwrap();
        let r = sandwich_check(&p, v, phi, 0.05, &tr);
        let n = r.entered_at.unwrap();
        assert!(n > 0 && n <= 15, "{n}");

        let tr = s.integrate_trajectory(&initial(&p, [1.0, 0.7, 0.3]), 5, 1).unwrap();
        assert_eq!(sandwich_check(&p, v, phi, 0.05, &tr).entered_at, Some(0));

        let q = constants("1", "1", "2");
        let zero = PeriodicOrbit::zero(&[q.vector_layout()], &q.grid);
        let s = ModelStepper::new(&q, Reaction::Full).unwrap();
        let tr = s.integrate_trajectory(&initial(&q, [1.0, 1.0, 1.0]), 5, 4).unwrap();
        assert_eq!(sandwich_check(&q, &zero, &zero, 0.05, &tr).entered_at, None);
    }

    #[test]
    fn median_of_ratios() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
