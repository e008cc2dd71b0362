//! Chain integrals `V_k`, the potential-weighted connective constant and
//! the resulting uniqueness thresholds.
//!
//! `V_k` integrates, over chains `v_0, v_1, ..., v_k` started at the origin,
//! the product of Mayer weights along consecutive steps times a damping
//! factor `exp(-phi(v_j, v_i))` whenever `v_j` lands closer to an earlier
//! `v_i` than that point's own successor `v_{i+1}`. The Monte Carlo estimator
//! draws each step from the normalised Mayer density, so a single chain
//! contributes `C_phi^k` times its damping factors.

use std::f64::consts::{E, PI};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Norm, Space};
use crate::potentials::{DisplacementSampler, Energy, Potential, PotentialKind};
use crate::quadrature;
use crate::rng::stream;
use crate::stats::{normal_quantile, Moments};

/// Chains per RNG block.
pub const BLOCK_CHAINS: usize = 1 << 16;

/// Smallest accepted Monte Carlo sample count.
pub const MIN_SAMPLES: u64 = 100;

/// `1/2 + 3 sqrt(3) / (8 pi)`: the hard-disk ratio `V_2 / v_{2,r}^2`.
pub fn hard_disk_v2_ratio() -> f64 {
    0.5 + 3.0 * 3f64.sqrt() / (8.0 * PI)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    ExactLens,
    ExactStrauss,
    ClosedFormBound,
}

impl Method {
    pub fn is_exact(self) -> bool {
        self != Method::MonteCarlo
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte_carlo",
            Method::ExactLens => "exact_lens",
            Method::ExactStrauss => "exact_strauss",
            Method::ClosedFormBound => "closed_form_bound",
        }
    }
}

/// A value or Monte Carlo estimate of `V_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VkEstimate {
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: Method,
    pub c_phi: f64,
}

impl VkEstimate {
    /// An exact value (or analytic upper bound) carrying no sampling error.
    pub fn exact(k: usize, value: f64, method: Method, c_phi: f64) -> Self {
        Self {
            k,
            mean: value,
            std_error: 0.0,
            n_samples: 0,
            seed: 0,
            method,
            c_phi,
        }
    }

    /// Exact methods, and `k = 1` where the estimator is the constant `C_phi`.
    pub fn is_exact(&self) -> bool {
        self.method.is_exact() || self.k == 1
    }

    /// `V_k^{1/k}`.
    pub fn root(&self) -> f64 {
        self.mean.powf(1.0 / self.k as f64)
    }

    /// Delta-method standard error of `V_k^{1/k}`.
    pub fn root_std_error(&self) -> f64 {
        if self.std_error == 0.0 {
            return 0.0;
        }
        let k = self.k as f64;
        self.mean.powf(1.0 / k - 1.0) * self.std_error / k
    }
}

fn check_tuple(space: &Space, points: &[Vec<f64>], min_len: usize) -> Result<()> {
    if points.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "tuple needs at least {min_len} points, got {}",
            points.len()
        )));
    }
    points.iter().try_for_each(|p| space.check_point(p))
}

/// Damping exponent of the last point of `points` against all earlier points
/// except its immediate predecessor.
fn damping_energy(p: &Potential, space: &Space, points: &[Vec<f64>]) -> Energy {
    let k = points.len() - 1;
    let last = &points[k];
    let mut energy = Energy::ZERO;
    for i in 0..k.saturating_sub(1) {
        let reach = space.dist(&points[i], &points[i + 1]);
        let s = space.dist(last, &points[i]);
        energy += p.evaluate(s).gated(s < reach);
        if energy.is_hard() {
            break;
        }
    }
    energy
}

/// The Weitz damping `gamma_w` of a tuple.
pub fn damping_weitz(p: &Potential, space: &Space, points: &[Vec<f64>]) -> Result<f64> {
    check_tuple(space, points, 1)?;
    Ok(damping_energy(p, space, points).boltzmann())
}

/// The `V_k` integrand at `points = (v_0, ..., v_k)`.
pub fn chain_weight(p: &Potential, space: &Space, points: &[Vec<f64>]) -> Result<f64> {
    check_tuple(space, points, 2)?;
    let mut weight = 1.0;
    for j in 1..points.len() {
        let damp = damping_energy(p, space, &points[..=j]).boltzmann();
        if damp == 0.0 {
            return Ok(0.0);
        }
        let mayer = p.mayer(space.dist(&points[j], &points[j - 1])).value();
        weight *= damp * mayer;
    }
    Ok(weight)
}

/// A chain together with its `V_k` integrand.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTuple {
    pub points: Vec<Vec<f64>>,
    pub weight: f64,
}

impl ChainTuple {
    pub fn new(p: &Potential, space: &Space, points: Vec<Vec<f64>>) -> Result<Self> {
        let weight = chain_weight(p, space, &points)?;
        Ok(Self { points, weight })
    }
}

/// Reusable scratch space for one chain.
struct ChainBuffer {
    dim: usize,
    points: Vec<f64>,
    reach: Vec<f64>,
    step: Vec<f64>,
}

impl ChainBuffer {
    fn new(dim: usize, k: usize) -> Self {
        Self {
            dim,
            points: vec![0.0; (k + 1) * dim],
            reach: vec![0.0; k],
            step: vec![0.0; dim],
        }
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Samples one chain and returns its total damping energy, stopping as
    /// soon as a hard core fires.
    fn run<R: Rng + ?Sized>(&mut self, p: &Potential, space: &Space, sampler: &DisplacementSampler, k: usize, rng: &mut R) -> Energy {
        let d = self.dim;
        self.points[..d].fill(0.0);
        let mut total = Energy::ZERO;
        for j in 1..=k {
            sampler.sample_into(rng, &mut self.step);
            let (prev, rest) = self.points.split_at_mut(j * d);
            let cur = &mut rest[..d];
            for ((c, p0), w) in cur.iter_mut().zip(&prev[(j - 1) * d..]).zip(&self.step) {
                *c = p0 + w;
            }
            self.reach[j - 1] = space.length(&self.step);
            for i in 0..j.saturating_sub(1) {
                let s = space.dist(self.point(j), self.point(i));
                if s < self.reach[i] {
                    total += p.evaluate(s);
                    if total.is_hard() {
                        return total;
                    }
                }
            }
        }
        total
    }
}

/// Importance-sampling estimate of `V_k` from `n_samples` chains.
///
/// Chains are processed in blocks of [`BLOCK_CHAINS`]; block `b` draws from
/// stream `(seed, b)` and block moments are merged in block order, so the
/// result does not depend on the number of worker threads.
pub fn estimate_vk(p: &Potential, space: &Space, k: usize, n_samples: u64, seed: u64) -> Result<VkEstimate> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be at least {MIN_SAMPLES}, got {n_samples}"
        )));
    }
    let sampler = DisplacementSampler::new(p, *space)?;
    let c_phi = sampler.c_phi();
    let base = VkEstimate {
        k,
        mean: c_phi,
        std_error: 0.0,
        n_samples,
        seed,
        method: Method::MonteCarlo,
        c_phi,
    };
    if k == 1 {
        return Ok(base);
    }
    let scale = c_phi.powi(k as i32);
    let n_blocks = n_samples.div_ceil(BLOCK_CHAINS as u64);
    let blocks: Vec<Moments> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let len = (n_samples - b * BLOCK_CHAINS as u64).min(BLOCK_CHAINS as u64);
            let mut rng = stream(seed, b);
            let mut buf = ChainBuffer::new(space.dim(), k);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(scale * buf.run(p, space, &sampler, k, &mut rng).boltzmann());
            }
            m
        })
        .collect();
    let total = blocks.into_iter().fold(Moments::default(), |mut acc, m| {
        acc.merge(&m);
        acc
    });
    Ok(VkEstimate {
        mean: total.mean,
        std_error: total.std_error(),
        ..base
    })
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {x}")))
    }
}

/// Exact hard-disk `V_2 = v_{2,r}^2 (1/2 + 3 sqrt(3) / (8 pi))`.
pub fn exact_v2_hard_disk(r: f64) -> Result<f64> {
    check_positive("r", r)?;
    let v = PI * r * r;
    Ok(v * v * hard_disk_v2_ratio())
}

/// Hard-disk `V_2` by radial quadrature over `s = |v_1|`. For `s <= r/2`
/// the forbidden disk `B(0, s)` sits inside `B(v_1, r)`; beyond that only
/// its lens-shaped intersection is removed.
pub fn v2_hard_disk_by_quadrature(r: f64) -> Result<f64> {
    check_positive("r", r)?;
    // Unit radius, then V_2 scales as r^4.
    let allowed_area = |s: f64| -> f64 {
        if s <= 0.5 {
            PI * (1.0 - s * s)
        } else {
            let a1 = (1.0 - 1.0 / (2.0 * s * s)).clamp(-1.0, 1.0).acos();
            let a2 = (1.0 / (2.0 * s)).clamp(-1.0, 1.0).acos();
            let kite = 0.5 * ((2.0 * s - 1.0) * (2.0 * s + 1.0)).max(0.0).sqrt();
            PI - (s * s * a1 + a2 - kite)
        }
    };
    let unit = quadrature::integrate_piecewise(
        |s| 2.0 * PI * s * allowed_area(s),
        &[0.0, 0.5, 1.0],
        1e-13,
        quadrature::DEFAULT_BUDGET,
    )?;
    Ok(unit * r.powi(4))
}

/// Exact Strauss `V_2` in the plane.
pub fn exact_v2_strauss(r: f64, a: f64) -> Result<f64> {
    check_positive("r", r)?;
    check_positive("a", a)?;
    let c = hard_disk_v2_ratio();
    let c_phi = -(-a).exp_m1() * PI * r * r;
    Ok(c_phi * c_phi * (c + (-a).exp() * (1.0 - c)))
}

/// Exact `V_2` where a closed form is known: hard disks and planar Strauss.
pub fn exact_v2(p: &Potential, space: &Space) -> Result<VkEstimate> {
    let c_phi = p.temperedness_constant(space)?;
    match (p.kind(), space.dim(), space.norm()) {
        (PotentialKind::HardSphere { r }, 2, Norm::L2) => Ok(VkEstimate::exact(2, exact_v2_hard_disk(*r)?, Method::ExactLens, c_phi)),
        (PotentialKind::Strauss { r, a }, 2, Norm::L2) => {
            Ok(VkEstimate::exact(2, exact_v2_strauss(*r, *a)?, Method::ExactStrauss, c_phi))
        }
        _ => Err(Error::InvalidArgument(format!(
            "no closed-form V_2 for {} in d={} with the {} norm",
            p.kind_name(),
            space.dim(),
            space.norm().name()
        ))),
    }
}

/// Analytic bounds for hard spheres (Euclidean) or hard cubes (sup norm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionBound {
    pub c_phi: f64,
    /// `C_phi^2 (1 - 8^{-d} + 16^{-d})`.
    pub v2_bound: f64,
    /// `(1 - 8^{-(d+1)}) C_phi`.
    pub delta_bound: f64,
}

impl DimensionBound {
    pub fn as_estimate(&self) -> VkEstimate {
        VkEstimate::exact(2, self.v2_bound, Method::ClosedFormBound, self.c_phi)
    }
}

pub fn v2_bound_dim_d(p: &Potential, space: &Space) -> Result<DimensionBound> {
    match (p.kind(), space.norm()) {
        (PotentialKind::HardSphere { .. }, Norm::L2) | (PotentialKind::HardCube { .. }, Norm::Linf) => {}
        (PotentialKind::HardSphere { .. }, _) => {
            return Err(Error::KindNormMismatch {
                kind: "hard_sphere",
                expected: "l2",
            })
        }
        (PotentialKind::HardCube { .. }, _) => {
            return Err(Error::KindNormMismatch {
                kind: "hard_cube",
                expected: "linf",
            })
        }
        _ => {
            return Err(Error::InvalidPotential(format!(
                "dimension bound applies to hard spheres and hard cubes, not {}",
                p.kind_name()
            )))
        }
    }
    let d = space.dim() as i32;
    if d < 2 {
        return Err(Error::InvalidArgument("dimension bound needs d >= 2".into()));
    }
    let c_phi = p.temperedness_constant(space)?;
    Ok(DimensionBound {
        c_phi,
        v2_bound: c_phi * c_phi * (1.0 - 8f64.powi(-d) + 16f64.powi(-d)),
        delta_bound: (1.0 - 8f64.powi(-(d + 1))) * c_phi,
    })
}

/// An upper bound on the connective constant from finitely many `V_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBound {
    pub value: f64,
    pub k_used: usize,
    pub confidence: f64,
    pub rigorous: bool,
    pub c_phi: f64,
}

/// `min_k (mean_k + z * se_k)^{1/k}`, clamped to `C_phi`.
pub fn delta_bound(estimates: &[VkEstimate], confidence: f64) -> Result<DeltaBound> {
    let first = estimates.first().ok_or(Error::EmptyInput)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let c_phi = first.c_phi;
    if let Some(e) = estimates.iter().find(|e| (e.c_phi - c_phi).abs() > 1e-12 * c_phi) {
        return Err(Error::ProvenanceMismatch(c_phi, e.c_phi));
    }
    let z = normal_quantile(confidence);
    let mut value = c_phi;
    let mut k_used = 1;
    for e in estimates {
        if e.k == 0 {
            return Err(Error::InvalidK);
        }
        let root = (e.mean + z * e.std_error).powf(1.0 / e.k as f64);
        if root < value {
            value = root;
            k_used = e.k;
        }
    }
    Ok(DeltaBound {
        value,
        k_used,
        confidence,
        rigorous: estimates.iter().all(VkEstimate::is_exact),
        c_phi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// Activity `e / Delta`.
    pub value: f64,
    pub rigorous: bool,
    pub c_phi: f64,
}

impl Threshold {
    /// The threshold in units of `1 / C_phi` (for hard spheres, of
    /// `1 / v_{d,r}`).
    pub fn per_c_phi(&self) -> f64 {
        self.value * self.c_phi
    }
}

pub fn uniqueness_threshold(db: &DeltaBound) -> Result<Threshold> {
    check_positive("delta bound", db.value)?;
    Ok(Threshold {
        value: E / db.value,
        rigorous: db.rigorous,
        c_phi: db.c_phi,
    })
}
