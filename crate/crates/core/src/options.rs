/// Tolerances and limits shared by the eigen, periodic and dynamics solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Relative tolerance on successive multiplier estimates and on the
    /// sup distance of normalized power iterates.
    pub eigen_tol: f64,
    pub eigen_max_iters: usize,
    /// Fixed-point tolerance (sup norm) for periodic orbits.
    pub periodic_tol: f64,
    pub max_periods: usize,
    /// Eigenvalues with `|λ| ≤ band` are treated as undecidable.
    pub band: f64,
    pub blowup_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            eigen_tol: 1e-10,
            eigen_max_iters: 10_000,
            periodic_tol: 1e-9,
            max_periods: 5_000,
            band: 1e-3,
            blowup_cap: 1e12,
        }
    }
}
