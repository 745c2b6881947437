use super::expm::expm_metzler;
use super::{DiffusionSchedule, PeriodStepper};
use crate::coeffs::expr::Expression;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::{BoundarySpec, Grid};
use crate::state::{Layout, StateField};

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub diffusion: Expression,
    pub bc: BoundarySpec,
}

/// `∂t u_c − ∇·d_c∇u_c = Σ_k h_ck(x, t) u_k` with periodic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPeriodicSystem {
    pub grid: Grid,
    pub components: Vec<ComponentSpec>,
    /// Row-major `m × m` coupling matrix.
    pub coupling: Vec<Field>,
}

impl LinearPeriodicSystem {
    pub fn new(
        grid: Grid,
        components: Vec<ComponentSpec>,
        coupling: Vec<Vec<Field>>,
    ) -> Result<LinearPeriodicSystem> {
        let m = components.len();
        if m == 0 || coupling.len() != m || coupling.iter().any(|row| row.len() != m) {
            return Err(Error::Input(format!(
                "coupling must be {m} x {m} for {m} components"
            )));
        }
        Ok(LinearPeriodicSystem {
            grid,
            components,
            coupling: coupling.into_iter().flatten().collect(),
        })
    }

    pub fn scalar(grid: Grid, d: Expression, bc: BoundarySpec, h: Field) -> LinearPeriodicSystem {
        LinearPeriodicSystem {
            grid,
            components: vec![ComponentSpec { diffusion: d, bc }],
            coupling: vec![h],
        }
    }

    pub fn size(&self) -> usize {
        self.components.len()
    }

    pub fn layouts(&self) -> Vec<Layout> {
        self.components
            .iter()
            .map(|c| Layout::for_boundary(&c.bc, &self.grid))
            .collect()
    }

    /// Off-diagonal couplings must be nonnegative at every node and time level.
    pub fn check_cooperative(&self) -> Result<()> {
        let m = self.size();
        let g = &self.grid;
        for row in 0..m {
            for col in (0..m).filter(|&c| c != row) {
                let f = &self.coupling[row * m + col];
                for level in 0..=g.steps_per_period {
                    for node in 0..g.node_count() {
                        let value = f.at_level(g, node, level)?;
                        if value < 0.0 {
                            return Err(Error::NotCooperative {
                                row,
                                col,
                                x: g.x(node),
                                t: g.time(level),
                                value,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Factorizes the diffusion solves and tabulates the per-node reaction
    /// propagators `exp(dt H(x_j, t_k + dt/2))` for the whole period.
    pub fn prepare(&self) -> Result<PeriodMap> {
        self.check_cooperative()?;
        let g = &self.grid;
        let m = self.size();
        let nodes = g.node_count();
        let steps = g.steps_per_period;
        let tables = self
            .coupling
            .iter()
            .map(|f| f.tabulate(g))
            .collect::<Result<Vec<_>>>()?;
        let mut propagators = Vec::with_capacity(steps * nodes * m * m);
        let mut local = vec![0.0; m * m];
        for step in 0..steps {
            for node in 0..nodes {
                for (i, table) in tables.iter().enumerate() {
                    let value = table[step * nodes + node];
                    if !value.is_finite() || (i / m != i % m && value < 0.0) {
                        return Err(Error::NotCooperative {
                            row: i / m,
                            col: i % m,
                            x: g.x(node),
                            t: (step as f64 + 0.5) * g.dt,
                            value,
                        });
                    }
                    local[i] = g.dt * value;
                }
                propagators.extend(expm_metzler(&local, m));
            }
        }
        let schedules = self
            .components
            .iter()
            .map(|c| DiffusionSchedule::new(g, &c.diffusion, &c.bc))
            .collect::<Result<Vec<_>>>()?;
        Ok(PeriodMap {
            grid: g.clone(),
            layouts: self.layouts(),
            size: m,
            schedules,
            propagators,
        })
    }
}

/// A prepared discrete period map of a linear cooperative system.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    grid: Grid,
    layouts: Vec<Layout>,
    size: usize,
    schedules: Vec<DiffusionSchedule>,
    propagators: Vec<f64>,
}

impl PeriodMap {
    pub fn size(&self) -> usize {
        self.size
    }
}

impl PeriodStepper for PeriodMap {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn layouts(&self) -> &[Layout] {
        &self.layouts
    }

    fn blowup_cap(&self) -> f64 {
        f64::INFINITY
    }

    fn step_raw(&self, u: &mut StateField, step: usize) -> Result<()> {
        let m = self.size;
        let nodes = self.grid.node_count();
        let mut y = vec![0.0; m];
        for node in 0..nodes {
            for (c, yc) in y.iter_mut().enumerate() {
                *yc = u.nodal(c, node);
            }
            let p = &self.propagators[(step * nodes + node) * m * m..][..m * m];
            for c in 0..m {
                let layout = self.layouts[c];
                if layout.contains(node) {
                    let row = &p[c * m..(c + 1) * m];
                    u.components[c][node - layout.offset] =
                        row.iter().zip(&y).map(|(a, b)| a * b).sum();
                }
            }
        }
        for (c, schedule) in self.schedules.iter().enumerate() {
            schedule.solve(step, &mut u.components[c]);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn expr(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn space_constant_decay_is_exact() {
        let g = Grid::new(0.0, 1.0, 7, 1.0, 16).unwrap();
        let sys = LinearPeriodicSystem::scalar(g, expr("1"), BoundarySpec::neumann(), Field::Const(-1.0));
        let map = sys.prepare().unwrap();
        let u = map
            .integrate_over_period(&StateField::constant(map.layouts(), 0.0, 2.0))
            .unwrap();
        assert!((u.max() - 2.0 * (-1f64).exp()).abs() < 1e-14);
        assert!((u.min() - 2.0 * (-1f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn negative_off_diagonal_is_rejected() {
        let g = Grid::new(0.0, 1.0, 7, 1.0, 16).unwrap();
        let spec = ComponentSpec {
            diffusion: expr("1"),
            bc: BoundarySpec::neumann(),
        };
        let sys = LinearPeriodicSystem::new(
            g,
            vec![spec.clone(), spec],
            vec![
                vec![Field::Const(-1.0), Field::Const(1.0)],
                vec![Field::from(expr("sin(2*pi*t)")), Field::Const(-1.0)],
            ],
        )
        .unwrap();
        assert!(matches!(
            sys.prepare(),
            Err(Error::NotCooperative { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn pure_decay_three_components() {
        let g = Grid::new(0.0, 1.0, 9, 1.0, 16).unwrap();
        let spec = |bc| ComponentSpec {
            diffusion: expr("1 + x"),
            bc,
        };
        let z = || Field::Const(0.0);
        let sys = LinearPeriodicSystem::new(
            g,
            vec![
                spec(BoundarySpec::Dirichlet),
                spec(BoundarySpec::neumann()),
                spec(BoundarySpec::robin(expr("1"), expr("2"))),
            ],
            vec![
                vec![Field::Const(-1.0), z(), z()],
                vec![z(), Field::Const(-0.5), z()],
                vec![z(), z(), Field::Const(-2.0)],
            ],
        )
        .unwrap();
        let map = sys.prepare().unwrap();
        let mut u = StateField::constant(map.layouts(), 0.0, 1.0);
        for _ in 0..16 {
            let before = u.clone();
            map.step(&mut u).unwrap();
            for c in 0..3 {
                let (a, b) = (before.component(c).max(), u.component(c).max());
                assert!(b < a);
            }
        }
    }

    fn random_system(rng: &mut ChaCha8Rng, g: &Grid) -> LinearPeriodicSystem {
        let m = rng.gen_range(1..=3);
        let bcs = [
            BoundarySpec::Dirichlet,
            BoundarySpec::neumann(),
            BoundarySpec::robin(Expression::constant(0.5), Expression::constant(1.5)),
        ];
        let components = (0..m)
            .map(|_| ComponentSpec {
                diffusion: expr(&format!("{} + 0.2*sin(2*pi*t)*x", rng.gen_range(0.5..2.0))),
                bc: bcs[rng.gen_range(0..3)].clone(),
            })
            .collect();
        let coupling = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let a: f64 = rng.gen_range(0.0..2.0);
                        let b: f64 = rng.gen_range(0.0..a.max(1e-3));
                        let s = if i == j {
                            format!("-{a} + {b}*cos(2*pi*t + x)")
                        } else {
                            format!("{a} + {b}*sin(2*pi*t - 3*x)")
                        };
                        Field::from(expr(&s))
                    })
                    .collect()
            })
            .collect();
        LinearPeriodicSystem::new(g.clone(), components, coupling).unwrap()
    }

    #[test]
    fn comparison_principle_on_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = Grid::new(0.0, 2.0, 20, 1.0, 32).unwrap();
        for _ in 0..20 {
            let map = random_system(&mut rng, &g).prepare().unwrap();
            let lo = StateField::from_fn(map.layouts(), 0.0, |_, _| Ok(rng.gen_range(0.0..1.0))).unwrap();
            let mut hi = lo.clone();
            hi.components
                .iter_mut()
                .flatten()
                .for_each(|v| *v += rng.gen_range(0.0..0.5));
            let (a, b) = (
                map.integrate_over_period(&lo).unwrap(),
                map.integrate_over_period(&hi).unwrap(),
            );
            assert!(a.min() >= 0.0);
            assert!(a.max_excess_over(&b) <= 1e-14);
        }
    }
}
