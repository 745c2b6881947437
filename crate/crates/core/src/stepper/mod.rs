//! Time stepping over the periodic step lattice.
//!
//! Every step is a Lie splitting: a pointwise reaction substep with
//! coefficients frozen at the step midpoint, solved exactly (matrix
//! exponential or closed-form flow), followed by one backward Euler
//! diffusion solve per component with the operator assembled at `t + dt`.
//! Both substeps map nonnegative data to nonnegative data, and the
//! reaction substep is monotone for cooperative right-hand sides.

pub mod expm;
mod linear;
mod nonlinear;

pub use linear::{ComponentSpec, LinearPeriodicSystem, PeriodMap};
pub use nonlinear::{ModelStepper, Reaction};

use crate::coeffs::expr::Expression;
use crate::error::{Error, Result};
use crate::grid::{assemble_diffusion, BoundarySpec, Grid};
use crate::state::{Layout, PeriodicOrbit, StateField};
use crate::tridiag::TridiagonalLu;

pub const DEFAULT_BLOWUP_CAP: f64 = 1e12;

/// A one-step evolution on the lattice `t_k = k dt`.
pub trait PeriodStepper {
    fn grid(&self) -> &Grid;

    fn layouts(&self) -> &[Layout];

    /// Magnitude beyond which a trajectory is declared blown up.
    fn blowup_cap(&self) -> f64 {
        DEFAULT_BLOWUP_CAP
    }

    /// One step of size `dt` using the step index `k mod m` with `k = t / dt`.
    fn step_raw(&self, u: &mut StateField, step: usize) -> Result<()>;

    fn step(&self, u: &mut StateField) -> Result<()> {
        let grid = self.grid();
        let k = (u.t / grid.dt).round();
        let step = (k as usize) % grid.steps_per_period;
        self.step_raw(u, step)?;
        u.t = (k + 1.0) * grid.dt;
        let max = u.max();
        if !u.is_finite() || max > self.blowup_cap() {
            return Err(Error::Blowup {
                cap: self.blowup_cap(),
                t: u.t,
            });
        }
        Ok(())
    }

    fn integrate_over_period(&self, u0: &StateField) -> Result<StateField> {
        let mut u = u0.clone();
        for _ in 0..self.grid().steps_per_period {
            self.step(&mut u)?;
        }
        Ok(u)
    }

    /// All `m + 1` levels of the period starting at `u0`.
    fn sweep_period(&self, u0: &StateField) -> Result<PeriodicOrbit> {
        let m = self.grid().steps_per_period;
        let mut levels = Vec::with_capacity(m + 1);
        let mut u = u0.clone();
        levels.push(u.clone());
        for _ in 0..m {
            self.step(&mut u)?;
            levels.push(u.clone());
        }
        Ok(PeriodicOrbit { levels })
    }

    /// States every `stride` steps, always including each period boundary.
    fn integrate_trajectory(
        &self,
        u0: &StateField,
        n_periods: usize,
        stride: usize,
    ) -> Result<Trajectory> {
        if n_periods == 0 {
            return Err(Error::Input("n_periods must be at least 1".into()));
        }
        let stride = stride.max(1);
        let m = self.grid().steps_per_period;
        let mut samples = vec![u0.clone()];
        let mut u = u0.clone();
        for n in 0..n_periods {
            for k in 1..=m {
                self.step(&mut u)?;
                if k % stride == 0 || k == m {
                    samples.push(u.clone());
                }
            }
            debug_assert!((u.t - (n + 1) as f64 * self.grid().period).abs() < 1e-9);
        }
        Ok(Trajectory {
            period: self.grid().period,
            samples,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub period: f64,
    pub samples: Vec<StateField>,
}

impl Trajectory {
    /// Index of the period `[nT, (n+1)T]` a sample time falls into; period
    /// boundaries count as the start of the next period except at the end.
    pub fn period_of(&self, t: f64) -> usize {
        (t / self.period + 1e-9).floor() as usize
    }

    pub fn final_state(&self) -> &StateField {
        self.samples.last().expect("trajectory is never empty")
    }

    /// States at `t = nT`, `n = 0..=n_periods`.
    pub fn period_boundaries(&self) -> Vec<&StateField> {
        self.samples
            .iter()
            .filter(|s| {
                let r = s.t / self.period;
                (r - r.round()).abs() < 1e-9
            })
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().map(StateField::min).fold(f64::INFINITY, f64::min)
    }
}

/// Backward Euler factorizations `I - dt A(t_{k+1})` for every step of a period.
#[derive(Debug, Clone)]
pub(crate) struct DiffusionSchedule {
    factors: Vec<TridiagonalLu>,
}

impl DiffusionSchedule {
    pub(crate) fn new(grid: &Grid, d: &Expression, bc: &BoundarySpec) -> Result<DiffusionSchedule> {
        let factors = (0..grid.steps_per_period)
            .map(|k| {
                assemble_diffusion(grid, d, bc, grid.time(k + 1))?
                    .implicit(grid.dt)
                    .factor()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiffusionSchedule { factors })
    }

    pub(crate) fn solve(&self, step: usize, u: &mut [f64]) {
        self.factors[step].solve_in_place(u);
    }
}
