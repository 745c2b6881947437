//! Nodal solution values and stored periodic orbits.

use crate::error::{Error, Result};
use crate::field::SpaceTimeSamples;
use crate::grid::{BoundarySpec, Grid};

/// Which mesh nodes a component stores: `offset..offset + len`.
/// Nodes outside the range (Dirichlet endpoints) hold zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub offset: usize,
    pub len: usize,
}

impl Layout {
    pub fn for_boundary(bc: &BoundarySpec, grid: &Grid) -> Layout {
        Layout {
            offset: bc.offset(),
            len: bc.unknowns(grid),
        }
    }

    pub fn contains(&self, node: usize) -> bool {
        node >= self.offset && node < self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub t: f64,
    pub layouts: Vec<Layout>,
    pub components: Vec<Vec<f64>>,
}

impl StateField {
    pub fn zeros(layouts: &[Layout], t: f64) -> StateField {
        StateField {
            t,
            layouts: layouts.to_vec(),
            components: layouts.iter().map(|l| vec![0.0; l.len]).collect(),
        }
    }

    pub fn constant(layouts: &[Layout], t: f64, value: f64) -> StateField {
        let mut s = StateField::zeros(layouts, t);
        s.components.iter_mut().for_each(|c| c.fill(value));
        s
    }

    /// Samples `f(component, mesh node)` on each component's unknowns.
    pub fn from_fn(
        layouts: &[Layout],
        t: f64,
        mut f: impl FnMut(usize, usize) -> Result<f64>,
    ) -> Result<StateField> {
        let mut s = StateField::zeros(layouts, t);
        for (c, layout) in layouts.iter().enumerate() {
            for i in 0..layout.len {
                s.components[c][i] = f(c, layout.offset + i)?;
            }
        }
        Ok(s)
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Value at a mesh node; zero where the component has no unknown.
    pub fn nodal(&self, component: usize, node: usize) -> f64 {
        let layout = self.layouts[component];
        if layout.contains(node) {
            self.components[component][node - layout.offset]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().flatten().copied()
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &StateField) -> f64 {
        assert_eq!(self.layouts, other.layouts, "layout mismatch");
        self.values()
            .zip(other.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest `self - other` over all unknowns (≤ 0 iff `self ≤ other`).
    pub fn max_excess_over(&self, other: &StateField) -> f64 {
        assert_eq!(self.layouts, other.layouts, "layout mismatch");
        self.values()
            .zip(other.values())
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b))
    }

    pub fn scale(&mut self, factor: f64) {
        self.components
            .iter_mut()
            .flatten()
            .for_each(|v| *v *= factor);
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// The single-component state holding component `c`.
    pub fn component(&self, c: usize) -> StateField {
        StateField {
            t: self.t,
            layouts: vec![self.layouts[c]],
            components: vec![self.components[c].clone()],
        }
    }

    pub fn stack(parts: &[&StateField]) -> StateField {
        let t = parts.first().map_or(0.0, |p| p.t);
        StateField {
            t,
            layouts: parts.iter().flat_map(|p| p.layouts.clone()).collect(),
            components: parts.iter().flat_map(|p| p.components.clone()).collect(),
        }
    }
}

/// A solution sampled at every time level `0, dt, …, T` of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub levels: Vec<StateField>,
}

impl PeriodicOrbit {
    pub fn new(levels: Vec<StateField>) -> Result<PeriodicOrbit> {
        if levels.len() < 2 {
            return Err(Error::Input("a periodic orbit needs at least two levels".into()));
        }
        Ok(PeriodicOrbit { levels })
    }

    pub fn zero(layouts: &[Layout], grid: &Grid) -> PeriodicOrbit {
        let levels = (0..=grid.steps_per_period)
            .map(|k| StateField::zeros(layouts, grid.time(k)))
            .collect();
        PeriodicOrbit { levels }
    }

    /// Time-independent orbit repeating `state` at every level.
    pub fn stationary(state: &StateField, grid: &Grid) -> PeriodicOrbit {
        let levels = (0..=grid.steps_per_period)
            .map(|k| StateField {
                t: grid.time(k),
                ..state.clone()
            })
            .collect();
        PeriodicOrbit { levels }
    }

    pub fn start(&self) -> &StateField {
        &self.levels[0]
    }

    pub fn component_count(&self) -> usize {
        self.levels[0].component_count()
    }

    pub fn layouts(&self) -> &[Layout] {
        &self.levels[0].layouts
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().map(StateField::sup_norm).fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.levels.iter().map(StateField::min).fold(f64::INFINITY, f64::min)
    }

    /// Smallest value at interior mesh nodes (endpoints excluded).
    pub fn min_interior(&self, grid: &Grid) -> f64 {
        let mut m = f64::INFINITY;
        for level in &self.levels {
            for c in 0..level.component_count() {
                for node in 1..=grid.nx {
                    m = m.min(level.nodal(c, node));
                }
            }
        }
        m
    }

    pub fn max(&self) -> f64 {
        self.levels.iter().map(StateField::max).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `‖u(T) − u(0)‖∞ / ‖u‖∞`, zero for the zero orbit.
    pub fn periodicity_residual(&self) -> f64 {
        let norm = self.sup_norm();
        if norm == 0.0 {
            return 0.0;
        }
        self.levels[self.levels.len() - 1].sup_distance(&self.levels[0]) / norm
    }

    /// Sup distance over all levels and unknowns.
    pub fn sup_distance(&self, other: &PeriodicOrbit) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max)
    }

    pub fn component(&self, c: usize) -> PeriodicOrbit {
        PeriodicOrbit {
            levels: self.levels.iter().map(|l| l.component(c)).collect(),
        }
    }

    /// Component `c` on the full mesh, Dirichlet endpoints as zeros.
    pub fn samples(&self, c: usize, grid: &Grid) -> SpaceTimeSamples {
        let nodes = grid.node_count();
        let mut values = Vec::with_capacity(nodes * self.levels.len());
        for level in &self.levels {
            values.extend((0..nodes).map(|j| level.nodal(c, j)));
        }
        SpaceTimeSamples::new(nodes, self.levels.len(), values)
    }

    pub fn scale(&mut self, factor: f64) {
        self.levels.iter_mut().for_each(|l| l.scale(factor));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_layout_pads_with_zeros() {
        let g = Grid::new(0.0, 1.0, 4, 1.0, 8).unwrap();
        let layouts = [
            Layout::for_boundary(&BoundarySpec::Dirichlet, &g),
            Layout::for_boundary(&BoundarySpec::neumann(), &g),
        ];
        let s = StateField::from_fn(&layouts, 0.0, |c, j| Ok((10 * c + j) as f64)).unwrap();
        assert_eq!(s.components[0], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.components[1].len(), 6);
        assert_eq!(s.nodal(0, 0), 0.0);
        assert_eq!(s.nodal(0, 5), 0.0);
        assert_eq!(s.nodal(0, 2), 2.0);
        assert_eq!(s.nodal(1, 5), 15.0);
    }
}
