use std::sync::Arc;

use super::expm::{expm2, logistic_flow, phi1};
use super::{DiffusionSchedule, PeriodStepper, DEFAULT_BLOWUP_CAP};
use crate::coeffs::expr::Expression;
use crate::error::{Error, Result};
use crate::field::{Field, SpaceTimeSamples};
use crate::grid::Grid;
use crate::problem::Problem;
use crate::state::{Layout, StateField};

/// Right-hand side selector for [`ModelStepper`].
#[derive(Debug, Clone)]
pub enum Reaction {
    /// `(H_i, V_u, V_i)`, the full host-vector model.
    Full,
    /// Scalar logistic equation for the total vector population.
    Logistic,
    /// `(U, Z)` with infection `σ2 (V + εφ − Z)⁺ U` and vector decay
    /// `μ1 + μ2 (V − εφ)`; `eps` may have either sign.
    Truncated {
        v: Arc<SpaceTimeSamples>,
        phi: Arc<SpaceTimeSamples>,
        eps: f64,
    },
    /// Host equation `−ρ H + source` with a prescribed nonnegative source.
    ForcedHost { source: Field },
}

/// `[step][node]` coefficient tables at step midpoints.
#[derive(Debug, Clone)]
struct Tables {
    rho: Vec<f64>,
    infection: Vec<f64>,
    sigma2: Vec<f64>,
    beta: Vec<f64>,
    mu1: Vec<f64>,
    mu2: Vec<f64>,
}

impl Tables {
    fn new(p: &Problem) -> Result<Tables> {
        let c = &p.coeffs;
        let tab = |e: &Expression| Field::from(e).tabulate(&p.grid);
        Ok(Tables {
            rho: tab(&c.rho)?,
            infection: tab(&c.host_infection())?,
            sigma2: tab(&c.sigma2)?,
            beta: tab(&c.beta)?,
            mu1: tab(&c.mu1)?,
            mu2: tab(&c.mu2)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Full,
    Logistic,
    Truncated {
        v: Arc<SpaceTimeSamples>,
        phi: Arc<SpaceTimeSamples>,
        eps: f64,
    },
    ForcedHost {
        source: Vec<f64>,
    },
}

/// A prepared nonlinear model on one problem instance.
#[derive(Debug, Clone)]
pub struct ModelStepper {
    grid: Grid,
    layouts: Vec<Layout>,
    tables: Tables,
    kind: Kind,
    schedules: Vec<DiffusionSchedule>,
    schedule_of: Vec<usize>,
    cap: f64,
}

impl ModelStepper {
    pub fn new(problem: &Problem, reaction: Reaction) -> Result<ModelStepper> {
        let g = &problem.grid;
        let c = &problem.coeffs;
        let host = || DiffusionSchedule::new(g, &c.d1, &problem.bc1);
        let vector = || DiffusionSchedule::new(g, &c.d2, &problem.bc2);
        let (h, v) = (problem.host_layout(), problem.vector_layout());
        let (kind, layouts, schedules, schedule_of) = match reaction {
            Reaction::Full => (Kind::Full, vec![h, v, v], vec![host()?, vector()?], vec![0, 1, 1]),
            Reaction::Logistic => (Kind::Logistic, vec![v], vec![vector()?], vec![0]),
            Reaction::Truncated { v: vs, phi, eps } => {
                let levels = g.steps_per_period + 1;
                if vs.levels() != levels || phi.levels() != levels {
                    return Err(Error::Input(format!(
                        "orbit samples must have {levels} levels"
                    )));
                }
                (
                    Kind::Truncated { v: vs, phi, eps },
                    vec![h, v],
                    vec![host()?, vector()?],
                    vec![0, 1],
                )
            }
            Reaction::ForcedHost { source } => (
                Kind::ForcedHost {
                    source: source.tabulate(g)?,
                },
                vec![h],
                vec![host()?],
                vec![0],
            ),
        };
        Ok(ModelStepper {
            grid: g.clone(),
            layouts,
            tables: Tables::new(problem)?,
            kind,
            schedules,
            schedule_of,
            cap: DEFAULT_BLOWUP_CAP,
        })
    }

    pub fn with_blowup_cap(mut self, cap: f64) -> ModelStepper {
        self.cap = cap;
        self
    }

    fn set(&self, u: &mut StateField, c: usize, node: usize, value: f64) {
        let layout = self.layouts[c];
        if layout.contains(node) {
            u.components[c][node - layout.offset] = value;
        }
    }

    fn react(&self, u: &mut StateField, step: usize) {
        let nodes = self.grid.node_count();
        let dt = self.grid.dt;
        let t = &self.tables;
        for node in 0..nodes {
            let i = step * nodes + node;
            match &self.kind {
                Kind::Full => unreachable!("full model steps in full_step"),
                Kind::Logistic => {
                    let w = u.nodal(0, node);
                    let w_new = logistic_flow(w, t.beta[i] - t.mu1[i], t.mu2[i], dt);
                    self.set(u, 0, node, w_new);
                }
                Kind::Truncated { v, phi, eps } => {
                    let (uh, z) = (u.nodal(0, node), u.nodal(1, node));
                    let (vm, pm) = (v.midpoint(step, node), phi.midpoint(step, node));
                    let cap = vm + eps * pm;
                    let decay = t.mu1[i] + t.mu2[i] * (vm - eps * pm);
                    let gain = t.sigma2[i] * (cap - z).max(0.0);
                    let e = expm2(-t.rho[i] * dt, t.infection[i] * dt, gain * dt, -decay * dt);
                    self.set(u, 0, node, e[0] * uh + e[1] * z);
                    self.set(u, 1, node, e[2] * uh + e[3] * z);
                }
                Kind::ForcedHost { source } => {
                    let h = u.nodal(0, node);
                    let rho = t.rho[i];
                    let h_new = h * (-rho * dt).exp() + source[i] * phi1(rho, dt);
                    self.set(u, 0, node, h_new);
                }
            }
        }
    }
}

impl ModelStepper {
    /// The total vector population `W = V_u + V_i` is advanced first by the
    /// logistic step, then `(H_i, V_i)` by the linear propagator with `W`
    /// frozen at the average of its two levels, exactly as the truncated
    /// system with `V = W` and `ε = 0`. `V_u` is recovered as `W − V_i`.
    fn full_step(&self, u: &mut StateField, step: usize) {
        let nodes = self.grid.node_count();
        let dt = self.grid.dt;
        let t = &self.tables;
        let lay = self.layouts[1];
        let w_old: Vec<f64> = u.components[1].iter().zip(&u.components[2]).map(|(a, b)| a + b).collect();
        let w_reacted: Vec<f64> = w_old
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                let i = step * nodes + j + lay.offset;
                logistic_flow(w, t.beta[i] - t.mu1[i], t.mu2[i], dt)
            })
            .collect();
        let mut w_new = w_reacted.clone();
        self.schedules[1].solve(step, &mut w_new);
        for node in 0..nodes {
            let i = step * nodes + node;
            let (h, vi) = (u.nodal(0, node), u.nodal(2, node));
            let (wbar, cap) = if lay.contains(node) {
                let j = node - lay.offset;
                (0.5 * (w_old[j] + w_new[j]), w_reacted[j])
            } else {
                (0.0, 0.0)
            };
            let gain = t.sigma2[i] * (wbar - vi).max(0.0);
            let decay = t.mu1[i] + t.mu2[i] * wbar;
            let e = expm2(-t.rho[i] * dt, t.infection[i] * dt, gain * dt, -decay * dt);
            self.set(u, 0, node, e[0] * h + e[1] * vi);
            self.set(u, 2, node, (e[2] * h + e[3] * vi).min(cap));
        }
        self.schedules[0].solve(step, &mut u.components[0]);
        self.schedules[1].solve(step, &mut u.components[2]);
        let vu: Vec<f64> = w_new.iter().zip(&u.components[2]).map(|(w, vi)| (w - vi).max(0.0)).collect();
        u.components[1] = vu;
    }
}

impl PeriodStepper for ModelStepper {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn layouts(&self) -> &[Layout] {
        &self.layouts
    }

    fn blowup_cap(&self) -> f64 {
        self.cap
    }

    fn step_raw(&self, u: &mut StateField, step: usize) -> Result<()> {
        if u.layouts != self.layouts {
            return Err(Error::Input("state layout does not match the model".into()));
        }
        if let Kind::Full = self.kind {
            self.full_step(u, step);
            return Ok(());
        }
        self.react(u, step);
        for (c, &s) in self.schedule_of.iter().enumerate() {
            self.schedules[s].solve(step, &mut u.components[c]);
        }
        Ok(())
    }
}
