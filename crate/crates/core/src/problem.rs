use crate::coeffs::{validate_hypothesis, CoefficientSet, ValidationReport};
use crate::grid::{BoundarySpec, Grid};
use crate::state::Layout;

/// Everything that defines one instance of the model: mesh, coefficients,
/// host boundary operator `bc1` and vector boundary operator `bc2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: Grid,
    pub coeffs: CoefficientSet,
    pub bc1: BoundarySpec,
    pub bc2: BoundarySpec,
}

impl Problem {
    pub fn new(grid: Grid, coeffs: CoefficientSet, bc1: BoundarySpec, bc2: BoundarySpec) -> Problem {
        Problem {
            grid,
            coeffs,
            bc1,
            bc2,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        validate_hypothesis(&self.coeffs, &self.bc1, &self.bc2, &self.grid)
    }

    pub fn host_layout(&self) -> Layout {
        Layout::for_boundary(&self.bc1, &self.grid)
    }

    pub fn vector_layout(&self) -> Layout {
        Layout::for_boundary(&self.bc2, &self.grid)
    }

    /// `(H_i, V_u, V_i)`.
    pub fn full_layouts(&self) -> [Layout; 3] {
        let v = self.vector_layout();
        [self.host_layout(), v, v]
    }
}
