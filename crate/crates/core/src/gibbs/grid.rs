use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Norm, Space};

/// Minimum nodes per axis.
pub const MIN_RESOLUTION: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    /// Midpoint product rule on the cube `[c - R, c + R]^d`.
    Cartesian,
    /// Midpoint rule in `(s, theta)` on the disk of radius `R`, with
    /// `n` radial and `2n` angular cells.
    Polar,
}

/// Quadrature nodes covering the ball of radius `radius` around `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadGrid {
    kind: GridKind,
    center: Vec<f64>,
    radius: f64,
    resolution: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadGrid {
    pub fn new(kind: GridKind, center: Vec<f64>, radius: f64, resolution: usize) -> Result<Self> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least {MIN_RESOLUTION} nodes per axis, got {resolution}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("grid radius must be positive, got {radius}")));
        }
        let d = center.len();
        let (nodes, weights) = match kind {
            GridKind::Cartesian => {
                let h = 2.0 * radius / resolution as f64;
                let total = resolution.pow(d as u32);
                let mut nodes = Vec::with_capacity(total);
                for mut idx in 0..total {
                    let mut x = Vec::with_capacity(d);
                    for c in &center {
                        x.push(c - radius + (idx % resolution) as f64 * h + 0.5 * h);
                        idx /= resolution;
                    }
                    nodes.push(x);
                }
                (nodes, vec![h.powi(d as i32); total])
            }
            GridKind::Polar => {
                if d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: d });
                }
                let n_theta = 2 * resolution;
                let ds = radius / resolution as f64;
                let dt = 2.0 * PI / n_theta as f64;
                let mut nodes = Vec::with_capacity(resolution * n_theta);
                let mut weights = Vec::with_capacity(resolution * n_theta);
                for i in 0..resolution {
                    let s = (i as f64 + 0.5) * ds;
                    for j in 0..n_theta {
                        let t = (j as f64 + 0.5) * dt;
                        nodes.push(vec![center[0] + s * t.cos(), center[1] + s * t.sin()]);
                        weights.push(s * ds * dt);
                    }
                }
                (nodes, weights)
            }
        };
        Ok(Self {
            kind,
            center,
            radius,
            resolution,
            nodes,
            weights,
        })
    }

    /// Polar grid for the Euclidean plane, where it follows the round
    /// support exactly; cartesian otherwise.
    pub fn for_support(space: &Space, center: Vec<f64>, radius: f64, resolution: usize) -> Result<Self> {
        space.check_point(&center)?;
        let kind = if space.dim() == 2 && space.norm() == Norm::L2 {
            GridKind::Polar
        } else {
            GridKind::Cartesian
        };
        Self::new(kind, center, radius, resolution)
    }

    /// The same grid with twice the nodes per axis.
    pub fn refined(&self) -> Self {
        Self::new(self.kind, self.center.clone(), self.radius, 2 * self.resolution).expect("refinement of a valid grid")
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.nodes.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }
}
