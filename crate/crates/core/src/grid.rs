//! Uniform 1D mesh and the flux-form diffusion operator `∂x(d ∂x ·)`.
//!
//! Nodes are `x_j = x_left + j h` for `j = 0..=nx+1`. Dirichlet components
//! carry the `nx` interior nodes as unknowns; Robin components carry all
//! `nx + 2` nodes and close the endpoint rows by ghost-point elimination of
//! `∂ν u + b u = 0`.

use crate::coeffs::expr::Expression;
use crate::error::{Error, Result};
use crate::tridiag::Tridiagonal;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x_left: f64,
    pub x_right: f64,
    /// Interior node count.
    pub nx: usize,
    pub h: f64,
    pub period: f64,
    pub steps_per_period: usize,
    pub dt: f64,
}

impl Grid {
    pub fn new(
        x_left: f64,
        x_right: f64,
        nx: usize,
        period: f64,
        steps_per_period: usize,
    ) -> Result<Grid> {
        if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
            return Err(Error::Domain(format!(
                "need x_left < x_right, got [{x_left}, {x_right}]"
            )));
        }
        if nx < 3 {
            return Err(Error::Domain(format!("nx must be at least 3, got {nx}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        if steps_per_period < 8 {
            return Err(Error::Domain(format!(
                "steps_per_period must be at least 8, got {steps_per_period}"
            )));
        }
        Ok(Grid {
            x_left,
            x_right,
            nx,
            h: (x_right - x_left) / (nx + 1) as f64,
            period,
            steps_per_period,
            dt: period / steps_per_period as f64,
        })
    }

    /// Number of mesh nodes including both endpoints.
    pub fn node_count(&self) -> usize {
        self.nx + 2
    }

    pub fn x(&self, node: usize) -> f64 {
        if node == self.nx + 1 {
            self.x_right
        } else {
            self.x_left + node as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|j| self.x(j)).collect()
    }

    pub fn time(&self, level: usize) -> f64 {
        level as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    /// `u = 0` at both endpoints.
    Dirichlet,
    /// `∂ν u + b u = 0` with `b ≥ 0`, one time-dependent coefficient per endpoint.
    Robin { left: Expression, right: Expression },
}

impl BoundarySpec {
    pub fn neumann() -> BoundarySpec {
        BoundarySpec::Robin {
            left: Expression::constant(0.0),
            right: Expression::constant(0.0),
        }
    }

    pub fn robin(left: Expression, right: Expression) -> BoundarySpec {
        BoundarySpec::Robin { left, right }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, BoundarySpec::Dirichlet)
    }

    /// Mesh index of the first unknown.
    pub fn offset(&self) -> usize {
        match self {
            BoundarySpec::Dirichlet => 1,
            BoundarySpec::Robin { .. } => 0,
        }
    }

    pub fn unknowns(&self, grid: &Grid) -> usize {
        match self {
            BoundarySpec::Dirichlet => grid.nx,
            BoundarySpec::Robin { .. } => grid.nx + 2,
        }
    }
}

/// Tridiagonal discretization of `+∂x(d ∂x ·)` at a fixed time: nonnegative
/// off-diagonals, nonpositive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionMatrix {
    pub t: f64,
    pub matrix: Tridiagonal,
}

impl DiffusionMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply(u)
    }

    /// `I - dt * A`, the backward Euler matrix.
    pub fn implicit(&self, dt: f64) -> Tridiagonal {
        let m = &self.matrix;
        Tridiagonal {
            lower: m.lower.iter().map(|v| -dt * v).collect(),
            diag: m.diag.iter().map(|v| 1.0 - dt * v).collect(),
            upper: m.upper.iter().map(|v| -dt * v).collect(),
        }
    }
}

fn positive_coefficient(name: &str, d: &Expression, x: f64, t: f64) -> Result<f64> {
    let value = d.evaluate(x, t)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Coefficient {
            name: name.to_string(),
            reason: "must be positive".to_string(),
            x,
            t,
            value,
        })
    }
}

fn robin_coefficient(b: &Expression, x: f64, t: f64) -> Result<f64> {
    let value = b.evaluate(x, t)?;
    if value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Coefficient {
            name: "robin_b".to_string(),
            reason: "must be nonnegative".to_string(),
            x,
            t,
            value,
        })
    }
}

pub fn assemble_diffusion(
    grid: &Grid,
    d: &Expression,
    bc: &BoundarySpec,
    t: f64,
) -> Result<DiffusionMatrix> {
    let h = grid.h;
    let inv_h2 = 1.0 / (h * h);
    let last = grid.nx + 1;
    // faces[j] = d(x_{j+1/2}, t), j = 0..=nx
    let faces = (0..=grid.nx)
        .map(|j| positive_coefficient("d", d, grid.x(j) + 0.5 * h, t))
        .collect::<Result<Vec<_>>>()?;

    let offset = bc.offset();
    let n = bc.unknowns(grid);
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (row, node) in (offset..offset + n).enumerate() {
        if node == 0 || node == last {
            continue;
        }
        let west = faces[node - 1] * inv_h2;
        let east = faces[node] * inv_h2;
        lower[row] = west;
        upper[row] = east;
        diag[row] = -(west + east);
    }
    if let BoundarySpec::Robin { left, right } = bc {
        let (xl, xr) = (grid.x(0), grid.x(last));
        let bl = robin_coefficient(left, xl, t)?;
        let br = robin_coefficient(right, xr, t)?;
        let dl = positive_coefficient("d", d, xl, t)?;
        let dr = positive_coefficient("d", d, xr, t)?;
        // ghost value eliminated via the centred boundary flux
        upper[0] = 2.0 * faces[0] * inv_h2;
        diag[0] = -upper[0] - 2.0 * dl * bl / h;
        lower[n - 1] = 2.0 * faces[grid.nx] * inv_h2;
        diag[n - 1] = -lower[n - 1] - 2.0 * dr * br / h;
    }
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    Ok(DiffusionMatrix {
        t,
        matrix: Tridiagonal { lower, diag, upper },
    })
}
