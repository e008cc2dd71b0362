//! The homogeneous scalar tree recursion `F(lambda, z) = lambda e^{-z C_phi}`.
//!
//! With `alpha = lambda C_phi` and `y = z / lambda`, two-cycles of `F` are the
//! roots of `f_alpha(y) = exp(-alpha exp(-alpha y)) - y` other than the fixed
//! point. Below `alpha = e` the only root is the fixed point; above it two
//! more appear, one on each side.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band around `alpha = e` reported as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

/// Iteration cap for every bisection here.
pub const MAX_BISECTIONS: usize = 200;

/// Grid step of the sign-change scan of `f_alpha` on `[0, 1]`.
pub const SCAN_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecursion {
    lambda: f64,
    c_phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Unique,
    NonUnique,
    Critical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `|F(z*) - z*|`.
    pub fixed_point: f64,
    /// Relative error of `z* C e^{z* C} = alpha`.
    pub lambert_w: f64,
    /// `max |F(z_1) - z_2|, |F(z_2) - z_1|` when a cycle exists.
    pub cycle: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub lambda: f64,
    pub c_phi: f64,
    pub alpha: f64,
    pub z_star: f64,
    pub cycle: Option<[f64; 2]>,
    pub classification: Classification,
    pub residuals: Residuals,
    /// Sign changes of `f_alpha` found by the scan beyond the expected
    /// count (one below `e`, three above). Non-zero values are reported,
    /// never absorbed.
    pub extra_sign_changes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Bisection for a sign change of `g` on `[lo, hi]`, to float resolution.
fn bisect<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl ScalarRecursion {
    pub fn new(lambda: f64, c_phi: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {lambda}")));
        }
        if !(c_phi.is_finite() && c_phi > 0.0) {
            return Err(Error::InvalidArgument(format!("C_phi must be positive and finite, got {c_phi}")));
        }
        Ok(Self { lambda, c_phi })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    pub fn alpha(&self) -> f64 {
        self.lambda * self.c_phi
    }

    #[inline]
    pub fn scalar_map(&self, z: f64) -> f64 {
        self.lambda * (-z * self.c_phi).exp()
    }

    /// The unique root of `z - F(z)` on `[0, lambda]`.
    pub fn fixed_point(&self) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        bisect(|z| z - self.scalar_map(z), 0.0, self.lambda)
    }

    /// Relative error of the Lambert-W identity `x e^x = alpha`, `x = z C`.
    pub fn lambert_w_residual(&self, z: f64) -> f64 {
        let alpha = self.alpha();
        if alpha == 0.0 {
            return (z * self.c_phi).abs();
        }
        let x = z * self.c_phi;
        ((x * x.exp() - alpha) / alpha).abs()
    }

    fn f_alpha(alpha: f64, y: f64) -> f64 {
        (-alpha * (-alpha * y).exp()).exp() - y
    }

    /// The two-cycle `(z_1, z_2)` with `z_1 < z_2`, present only above the
    /// critical band.
    pub fn two_cycle(&self) -> Result<Option<(f64, f64)>> {
        let alpha = self.alpha();
        if alpha <= E + CRITICAL_BAND {
            return Ok(None);
        }
        let f = |y: f64| Self::f_alpha(alpha, y);
        let brackets: [(f64, f64, &'static str); 3] = [
            (0.0, 1.0 / alpha, "(0, 1/alpha)"),
            (1.0 / alpha, 1.0 / E, "(1/alpha, 1/e)"),
            (1.0 / E, 1.0, "(1/e, 1)"),
        ];
        let mut roots = [0.0; 3];
        for (root, &(lo, hi, interval)) in roots.iter_mut().zip(&brackets) {
            let (flo, fhi) = (f(lo), f(hi));
            if !(flo * fhi < 0.0) {
                return Err(Error::BracketFailure { alpha, interval });
            }
            *root = bisect(f, lo, hi);
        }
        let mid = self.fixed_point() / self.lambda;
        if (roots[1] - mid).abs() > 1e-9 {
            return Err(Error::BracketFailure {
                alpha,
                interval: "(1/alpha, 1/e)",
            });
        }
        Ok(Some((self.lambda * roots[0], self.lambda * roots[2])))
    }

    /// Sign changes of `f_alpha` on a uniform grid over `[0, 1]`.
    pub fn scan_sign_changes(&self) -> usize {
        let alpha = self.alpha();
        let n = (1.0 / SCAN_STEP).round() as usize;
        let mut count = 0;
        let mut prev = Self::f_alpha(alpha, 0.0);
        for i in 1..=n {
            let cur = Self::f_alpha(alpha, i as f64 * SCAN_STEP);
            if cur == 0.0 || (prev != 0.0 && (cur > 0.0) != (prev > 0.0)) {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    pub fn classify(&self) -> Result<FixedPointReport> {
        let alpha = self.alpha();
        let z_star = self.fixed_point();
        let classification = if (alpha - E).abs() <= CRITICAL_BAND {
            Classification::Critical
        } else if alpha < E {
            Classification::Unique
        } else {
            Classification::NonUnique
        };
        let cycle = self.two_cycle()?;
        if classification == Classification::NonUnique && cycle.is_none() {
            return Err(Error::BracketFailure {
                alpha,
                interval: "(0, 1)",
            });
        }
        let expected = if cycle.is_some() { 3 } else { 1 };
        let found = if self.lambda > 0.0 { self.scan_sign_changes() } else { expected };
        Ok(FixedPointReport {
            lambda: self.lambda,
            c_phi: self.c_phi,
            alpha,
            z_star,
            cycle: cycle.map(|(a, b)| [a, b]),
            classification,
            residuals: Residuals {
                fixed_point: (self.scalar_map(z_star) - z_star).abs(),
                lambert_w: self.lambert_w_residual(z_star),
                cycle: cycle.map(|(z1, z2)| (self.scalar_map(z1) - z2).abs().max((self.scalar_map(z2) - z1).abs())),
            },
            extra_sign_changes: found.saturating_sub(expected),
        })
    }

    /// Root value of the depth-`k` recursion with constant boundary
    /// condition `tau` and trivial damping.
    pub fn depth_k_iterate(&self, tau: f64, k: usize) -> f64 {
        (0..k).fold(tau, |pi, _| self.scalar_map(pi))
    }

    pub fn contraction_check(&self, tau1: f64, tau2: f64, k: usize) -> Result<ContractionReport> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        for tau in [tau1, tau2] {
            if !(0.0..=self.lambda).contains(&tau) {
                return Err(Error::InvalidArgument(format!(
                    "boundary value {tau} outside [0, {}]",
                    self.lambda
                )));
            }
        }
        let p1 = self.depth_k_iterate(tau1, k);
        let p2 = self.depth_k_iterate(tau2, k);
        let lhs = (p1.sqrt() - p2.sqrt()).powi(2);
        let rhs = (self.alpha() / E).powi(k as i32) * (tau1 - tau2).abs();
        Ok(ContractionReport {
            k,
            lhs,
            rhs,
            ok: lhs <= rhs * (1.0 + 1e-9),
        })
    }
}
