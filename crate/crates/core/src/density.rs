use std::io::{self, Write};

use crate::grid::GridSpec;

/// Density values at the `2M + 1` grid nodes at time `t_n = n h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    values: Vec<f64>,
    grid: GridSpec,
    time_index: usize,
}

impl DensityVector {
    /// # Panics
    /// If `values.len()` differs from the grid's node count.
    pub fn new(values: Vec<f64>, grid: GridSpec, time_index: usize) -> Self {
        assert_eq!(values.len(), grid.len(), "density length must match grid");
        Self {
            values,
            grid,
            time_index,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn time_index(&self) -> usize {
        self.time_index
    }

    pub fn time(&self) -> f64 {
        self.time_index as f64 * self.grid.h()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The unscaled sum `K_n = sum_j p_j`.
    pub fn l1_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    /// `k * sum_j p_j`, the on-grid total probability.
    pub fn mass(&self) -> f64 {
        self.grid.k() * self.l1_sum()
    }

    pub fn normalization_defect(&self) -> f64 {
        (self.mass() - 1.0).abs()
    }

    /// Writes `node,density` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node,density")?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(out, "{x:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}
