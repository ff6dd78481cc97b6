//! Radial grids and the cell partition of the half-line used by every
//! discretized operator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::domain;
use crate::Result;

/// Supported space dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Three,
}

impl Dim {
    pub fn new(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            3 => Ok(Dim::Three),
            _ => Err(domain!("dimension must be 1 or 3, got {d}")),
        }
    }

    pub fn get(self) -> u32 {
        match self {
            Dim::One => 1,
            Dim::Three => 3,
        }
    }

    /// Parity of the half-line representative of a radial function.
    pub fn parity(self) -> Parity {
        match self {
            Dim::One => Parity::Even,
            Dim::Three => Parity::Odd,
        }
    }

    /// Surface area of the unit sphere.
    pub fn sphere_area(self) -> f64 {
        match self {
            Dim::One => 2.0,
            Dim::Three => 4.0 * core::f64::consts::PI,
        }
    }
}

/// Even or odd extension of a function from the half-line to the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Log-spaced radii together with a list of times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self {
            radii: log_space(1e-3, 1e2, 512),
            times: log_space(1e-2, 2.0, 64),
        }
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl RadialGrid {
    pub fn new(radii: Vec<f64>, times: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || !strictly_increasing(&radii) || radii[0] <= 0.0 {
            return Err(domain!("radii must be positive and strictly increasing"));
        }
        if !strictly_increasing(&times) || times.first().is_some_and(|&t| t <= 0.0) {
            return Err(domain!("times must be positive and strictly increasing"));
        }
        if radii.iter().chain(&times).any(|x| !x.is_finite()) {
            return Err(domain!("grid values must be finite"));
        }
        Ok(Self { radii, times })
    }

    pub fn log(r_min: f64, r_max: f64, n: usize, times: Vec<f64>) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || n < 2 {
            return Err(domain!("need 0 < r_min < r_max and n >= 2"));
        }
        Self::new(log_space(r_min, r_max, n), times)
    }

    pub fn r_min(&self) -> f64 {
        self.radii[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn describe(&self) -> String {
        format!(
            "N={} log radii [{:.3e}, {:.3e}], M={} times",
            self.radii.len(),
            self.r_min(),
            self.r_max(),
            self.times.len()
        )
    }

    /// The same range with twice as many radii.
    pub fn refined(&self) -> Self {
        Self {
            radii: log_space(self.r_min(), self.r_max(), 2 * self.radii.len() - 1),
            times: self.times.clone(),
        }
    }
}

/// Partition of `[0, edge_N)` into cells `C_j = [e_j, e_{j+1})`, each holding
/// one node. Interior edges are geometric means of neighbouring nodes, so on
/// a log grid every cell is symmetric in `log r` about its node.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<f64>,
    pub edges: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 2 || !strictly_increasing(&nodes) || nodes[0] <= 0.0 {
            return Err(domain!("mesh nodes must be positive, increasing, at least two"));
        }
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(0.0);
        for i in 1..n {
            edges.push((nodes[i - 1] * nodes[i]).sqrt());
        }
        edges.push(nodes[n - 1] * nodes[n - 1] / edges[n - 1]);
        Ok(Self { nodes, edges })
    }

    pub fn from_grid(grid: &RadialGrid) -> Result<Self> {
        Self::new(grid.radii.clone())
    }

    pub fn log(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        Self::new(log_space(r_min, r_max, n))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.edges[j + 1] - self.edges[j]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.width(j)).collect()
    }

    /// Outer edge of the last cell.
    pub fn extent(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Index of the cell containing `r`, if any.
    pub fn cell_of(&self, r: f64) -> Option<usize> {
        if !(0.0..self.extent()).contains(&r) {
            return None;
        }
        Some(self.edges.partition_point(|&e| e <= r) - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = RadialGrid::default();
        assert_eq!(g.radii.len(), 512);
        assert_eq!(g.times.len(), 64);
        assert!((g.r_min() - 1e-3).abs() < 1e-18);
        assert_eq!(g.r_max(), 1e2);
        assert!(RadialGrid::new(alloc::vec![1.0, 1.0], alloc::vec![]).is_err());
        assert!(RadialGrid::new(alloc::vec![0.0, 1.0], alloc::vec![]).is_err());
    }

    #[test]
    fn mesh_cells_cover_half_line() {
        let m = Mesh::log(1e-2, 10.0, 31).unwrap();
        let total: f64 = m.widths().iter().sum();
        assert!((total - m.extent()).abs() < 1e-12);
        for (j, &r) in m.nodes.iter().enumerate() {
            assert_eq!(m.cell_of(r), Some(j));
            if j > 0 {
                let lr = (m.nodes[j] / m.edges[j]).ln();
                let rr = (m.edges[j + 1] / m.nodes[j]).ln();
                assert!((lr - rr).abs() < 1e-12);
            }
        }
        assert_eq!(m.cell_of(m.extent()), None);
    }
}
