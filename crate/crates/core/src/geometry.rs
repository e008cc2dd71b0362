//! The ambient space: R^d with either the Euclidean or the sup norm and
//! Lebesgue reference measure.
//!
//! Lebesgue measure pushed forward along `y -> |y - x|` is absolutely
//! continuous for both norms, so thin shells around any point carry small
//! mass. Nothing downstream checks this at runtime.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    Linf,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

/// R^d with a chosen norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Space {
    #[serde(rename = "d")]
    dim: usize,
    norm: Norm,
}

impl Space {
    pub fn new(dim: usize, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self { dim, norm })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(dim, Norm::L2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `|x - y|` in the chosen norm.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist(x, y))
    }

    /// Unchecked distance for hot loops; lengths must already agree.
    #[inline]
    pub(crate) fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match self.norm {
            Norm::L2 => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            Norm::Linf => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Norm of a displacement vector.
    #[inline]
    pub fn length(&self, w: &[f64]) -> f64 {
        match self.norm {
            Norm::L2 => w.iter().map(|a| a * a).sum::<f64>().sqrt(),
            Norm::Linf => w.iter().map(|a| a.abs()).fold(0.0, f64::max),
        }
    }

    /// Volume of the unit ball. Uses `v_d = 2 pi / d * v_{d-2}` for the
    /// Euclidean ball.
    pub fn unit_ball_volume(&self) -> f64 {
        match self.norm {
            Norm::L2 => {
                let mut v = if self.dim.is_multiple_of(2) { 1.0 } else { 2.0 };
                let mut n = if self.dim.is_multiple_of(2) { 2 } else { 3 };
                while n <= self.dim {
                    v *= 2.0 * PI / n as f64;
                    n += 2;
                }
                v
            }
            Norm::Linf => 2f64.powi(self.dim as i32),
        }
    }

    pub fn ball_volume(&self, radius: f64) -> f64 {
        self.unit_ball_volume() * radius.powi(self.dim as i32)
    }

    /// Surface measure of the sphere of the given radius, i.e. the derivative
    /// of `ball_volume` in the radius.
    pub fn sphere_area(&self, radius: f64) -> f64 {
        self.dim as f64 * self.unit_ball_volume() * radius.powi(self.dim as i32 - 1)
    }

    /// Uniform point in the ball of `radius` around `center`.
    pub fn sample_uniform_ball<R: Rng + ?Sized>(
        &self,
        radius: f64,
        center: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_point(center)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        let mut out = vec![0.0; self.dim];
        self.uniform_ball_offset(radius, rng, &mut out);
        for (o, c) in out.iter_mut().zip(center) {
            *o += c;
        }
        Ok(out)
    }

    /// Uniform displacement in the centered ball, written into `out`.
    pub(crate) fn uniform_ball_offset<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R, out: &mut [f64]) {
        match self.norm {
            Norm::L2 => {
                let u: f64 = rng.random();
                let s = if self.dim == 1 {
                    radius * u
                } else {
                    radius * u.powf(1.0 / self.dim as f64)
                };
                self.unit_direction(rng, out);
                for o in out.iter_mut() {
                    *o *= s;
                }
            }
            Norm::Linf => {
                for o in out.iter_mut() {
                    *o = radius * (2.0 * rng.random::<f64>() - 1.0);
                }
            }
        }
    }

    /// Uniform point on the sphere `{w : |w| = radius}` w.r.t. its surface
    /// measure.
    pub(crate) fn sphere_offset<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R, out: &mut [f64]) {
        match self.norm {
            Norm::L2 => {
                self.unit_direction(rng, out);
                for o in out.iter_mut() {
                    *o *= radius;
                }
            }
            Norm::Linf => {
                // All 2d faces have equal area.
                let face = rng.random_range(0..2 * self.dim);
                for o in out.iter_mut() {
                    *o = radius * (2.0 * rng.random::<f64>() - 1.0);
                }
                out[face / 2] = if face % 2 == 0 { radius } else { -radius };
            }
        }
    }

    fn unit_direction<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if self.dim == 1 {
            out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            return;
        }
        loop {
            let mut sq = 0.0;
            for o in out.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *o = g;
                sq += g * g;
            }
            if sq > 1e-300 {
                let inv = 1.0 / sq.sqrt();
                for o in out.iter_mut() {
                    *o *= inv;
                }
                return;
            }
        }
    }
}
