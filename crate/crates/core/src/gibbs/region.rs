use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::potentials::{Energy, Potential};

/// Upper limit on `lambda * volume` accepted by the rejection sampler.
pub const MAX_EXPECTED_POINTS: f64 = 200.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Free,
    Periodic,
}

/// The box `[0, L_1] x ... x [0, L_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    sides: Vec<f64>,
    boundary: Boundary,
}

impl BoxRegion {
    pub fn new(sides: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one side".into()));
        }
        if let Some(s) = sides.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidArgument(format!("box sides must be positive and finite, got {s}")));
        }
        Ok(Self { sides, boundary })
    }

    pub fn cube(dim: usize, side: f64, boundary: Boundary) -> Result<Self> {
        Self::new(vec![side; dim], boundary)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.sides.iter().map(|s| 0.5 * s).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.sides).all(|(c, s)| (0.0..=*s).contains(c))
    }

    /// Maps a point into the box under periodic boundaries; `None` for a
    /// point outside a free box.
    pub fn wrap(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self.boundary {
            Boundary::Free => self.contains(x).then(|| x.to_vec()),
            Boundary::Periodic => Some(x.iter().zip(&self.sides).map(|(c, s)| c.rem_euclid(*s)).collect()),
        }
    }
}

/// A repulsive pair potential at constant activity in a box.
#[derive(Clone, Debug)]
pub struct GibbsModel {
    potential: Potential,
    space: Space,
    region: BoxRegion,
    lambda: f64,
}

impl GibbsModel {
    pub fn new(potential: Potential, space: Space, region: BoxRegion, lambda: f64) -> Result<Self> {
        if region.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: region.dim(),
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        if region.boundary() == Boundary::Periodic {
            let min = 2.0 * potential.cutoff();
            if let Some(s) = region.sides().iter().find(|s| **s < min) {
                return Err(Error::InvalidArgument(format!(
                    "periodic box side {s} is shorter than twice the cutoff ({min})"
                )));
            }
        }
        let expected = lambda * region.volume();
        if expected > MAX_EXPECTED_POINTS {
            return Err(Error::InvalidArgument(format!(
                "lambda * volume = {expected} exceeds the rejection-sampling limit {MAX_EXPECTED_POINTS}"
            )));
        }
        // Surfaces hard-cube/norm mismatches up front.
        potential.temperedness_constant(&space)?;
        Ok(Self {
            potential,
            space,
            region,
            lambda,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.potential.clone(), self.space, self.region.clone(), lambda)
    }

    pub fn expected_points(&self) -> f64 {
        self.lambda * self.region.volume()
    }

    /// Separation in the box: plain distance, or minimum image.
    #[inline]
    pub fn separation(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.region.boundary {
            Boundary::Free => self.space.dist(x, y),
            Boundary::Periodic => {
                let mut acc = 0.0f64;
                let l2 = self.space.norm() == crate::geometry::Norm::L2;
                for ((a, b), s) in x.iter().zip(y).zip(&self.region.sides) {
                    let mut d = (a - b).abs() % s;
                    if d > 0.5 * s {
                        d = s - d;
                    }
                    acc = if l2 { acc + d * d } else { acc.max(d) };
                }
                if l2 {
                    acc.sqrt()
                } else {
                    acc
                }
            }
        }
    }

    #[inline]
    pub fn pair(&self, x: &[f64], y: &[f64]) -> Energy {
        self.potential.evaluate(self.separation(x, y))
    }

    /// `H_v(X) = sum_x phi(v, x)`.
    pub fn interaction<'a, I: IntoIterator<Item = &'a [f64]>>(&self, v: &[f64], points: I) -> Energy {
        let mut e = Energy::ZERO;
        for x in points {
            e += self.pair(v, x);
            if e.is_hard() {
                break;
            }
        }
        e
    }

    /// `H(X) = sum_{i<j} phi(x_i, x_j)`.
    pub fn energy(&self, points: &[Vec<f64>]) -> Energy {
        let mut e = Energy::ZERO;
        for (j, x) in points.iter().enumerate() {
            e += self.interaction(x, points[..j].iter().map(Vec::as_slice));
            if e.is_hard() {
                break;
            }
        }
        e
    }

    pub(crate) fn check_point(&self, v: &[f64]) -> Result<()> {
        self.space.check_point(v)?;
        if !self.region.contains(v) {
            return Err(Error::InvalidArgument(format!("point {v:?} lies outside the box")));
        }
        Ok(())
    }
}
