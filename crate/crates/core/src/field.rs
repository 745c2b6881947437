//! Space-time coefficient fields evaluated on the step lattice.
//!
//! Reaction terms are frozen at the midpoint `t_k + dt/2` of each step, so
//! fields are queried by `(node, step)` rather than by a raw time.

use std::ops;
use std::sync::Arc;

use crate::coeffs::expr::Expression;
use crate::error::Result;
use crate::grid::Grid;

/// Values of a scalar field at every mesh node and stored time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSamples {
    nodes: usize,
    levels: usize,
    values: Vec<f64>,
}

impl SpaceTimeSamples {
    pub fn new(nodes: usize, levels: usize, values: Vec<f64>) -> SpaceTimeSamples {
        assert_eq!(values.len(), nodes * levels);
        SpaceTimeSamples {
            nodes,
            levels,
            values,
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn at(&self, level: usize, node: usize) -> f64 {
        self.values[level * self.nodes + node]
    }

    /// Average of levels `step` and `step + 1`.
    pub fn midpoint(&self, step: usize, node: usize) -> f64 {
        0.5 * (self.at(step, node) + self.at(step + 1, node))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Const(f64),
    Expr(Expression),
    Samples(Arc<SpaceTimeSamples>),
    Sum(Box<Field>, Box<Field>),
    Product(Box<Field>, Box<Field>),
}

impl Field {
    pub fn samples(s: SpaceTimeSamples) -> Field {
        Field::Samples(Arc::new(s))
    }

    /// Value at mesh node `node`, frozen at the midpoint of step `step` (`0 ≤ step < m`).
    pub fn at_step(&self, grid: &Grid, node: usize, step: usize) -> Result<f64> {
        Ok(match self {
            Field::Const(v) => *v,
            Field::Expr(e) => e.evaluate(grid.x(node), (step as f64 + 0.5) * grid.dt)?,
            Field::Samples(s) => s.midpoint(step, node),
            Field::Sum(a, b) => a.at_step(grid, node, step)? + b.at_step(grid, node, step)?,
            Field::Product(a, b) => a.at_step(grid, node, step)? * b.at_step(grid, node, step)?,
        })
    }

    /// Value at mesh node `node` and stored level `level` (`0 ≤ level ≤ m`).
    pub fn at_level(&self, grid: &Grid, node: usize, level: usize) -> Result<f64> {
        Ok(match self {
            Field::Const(v) => *v,
            Field::Expr(e) => e.evaluate(grid.x(node), grid.time(level))?,
            Field::Samples(s) => s.at(level, node),
            Field::Sum(a, b) => a.at_level(grid, node, level)? + b.at_level(grid, node, level)?,
            Field::Product(a, b) => {
                a.at_level(grid, node, level)? * b.at_level(grid, node, level)?
            }
        })
    }

    /// `[step][node]` table of midpoint values over one period.
    pub fn tabulate(&self, grid: &Grid) -> Result<Vec<f64>> {
        let n = grid.node_count();
        if let Field::Const(v) = self {
            return Ok(vec![*v; n * grid.steps_per_period]);
        }
        let mut out = Vec::with_capacity(n * grid.steps_per_period);
        for step in 0..grid.steps_per_period {
            for node in 0..n {
                out.push(self.at_step(grid, node, step)?);
            }
        }
        Ok(out)
    }
}

impl From<Expression> for Field {
    fn from(e: Expression) -> Field {
        match e.as_constant() {
            Some(v) => Field::Const(v),
            None => Field::Expr(e),
        }
    }
}

impl From<&Expression> for Field {
    fn from(e: &Expression) -> Field {
        Field::from(e.clone())
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Field {
        Field::Const(v)
    }
}

impl ops::Add for Field {
    type Output = Field;
    fn add(self, rhs: Field) -> Field {
        match (self, rhs) {
            (Field::Const(a), Field::Const(b)) => Field::Const(a + b),
            (a, b) => Field::Sum(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Mul for Field {
    type Output = Field;
    fn mul(self, rhs: Field) -> Field {
        match (self, rhs) {
            (Field::Const(a), Field::Const(b)) => Field::Const(a * b),
            (a, b) => Field::Product(Box::new(a), Box::new(b)),
        }
    }
}

impl ops::Neg for Field {
    type Output = Field;
    fn neg(self) -> Field {
        Field::Const(-1.0) * self
    }
}

impl ops::Sub for Field {
    type Output = Field;
    fn sub(self, rhs: Field) -> Field {
        self + (-rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_evaluation() {
        let g = Grid::new(0.0, 1.0, 3, 1.0, 8).unwrap();
        let f = Field::from(Expression::parse("x + t").unwrap());
        let v = f.at_step(&g, 2, 3).unwrap();
        assert!((v - (0.5 + 3.5 / 8.0)).abs() < 1e-15);

        let s = SpaceTimeSamples::new(5, 9, (0..45).map(f64::from).collect());
        let f = Field::samples(s) * Field::Const(2.0) - Field::Const(1.0);
        // levels 3 and 4 at node 2: 17 and 22
        assert_eq!(f.at_step(&g, 2, 3).unwrap(), 38.0);
        assert_eq!(f.at_level(&g, 2, 3).unwrap(), 33.0);
    }
}
