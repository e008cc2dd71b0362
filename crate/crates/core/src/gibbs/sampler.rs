use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GibbsModel;
use crate::error::{Error, Result};
use crate::potentials::Energy;
use crate::rng::{stream, StreamRng};

/// Accepted configurations per RNG block.
pub const BLOCK_CONFIGS: usize = 1024;

/// Proposal count after which a low acceptance rate aborts sampling.
pub const PROPOSAL_PATIENCE: u64 = 10_000_000;

/// Acceptance rate below which sampling is abandoned.
pub const MIN_ACCEPTANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConfiguration {
    pub points: Vec<Vec<f64>>,
    pub energy: f64,
}

impl PointConfiguration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSampleBatch {
    pub configs: Vec<PointConfiguration>,
    pub n_proposals: u64,
    pub n_accepted: u64,
    pub lambda: f64,
    pub seed: u64,
    pub volume: f64,
}

impl GibbsSampleBatch {
    pub fn acceptance_rate(&self) -> f64 {
        self.n_accepted as f64 / self.n_proposals as f64
    }
}

fn poisson_count<R: Rng + ?Sized>(dist: &Option<Poisson<f64>>, rng: &mut R) -> usize {
    dist.as_ref().map_or(0, |d| d.sample(rng) as usize)
}

fn poisson(mean: f64) -> Result<Option<Poisson<f64>>> {
    if mean == 0.0 {
        return Ok(None);
    }
    Poisson::new(mean)
        .map(Some)
        .map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))
}

fn uniform_in_box<R: Rng + ?Sized>(model: &GibbsModel, rng: &mut R, out: &mut [f64]) {
    for (o, s) in out.iter_mut().zip(model.region().sides()) {
        *o = s * rng.random::<f64>();
    }
}

/// One rejection proposal. Points are appended to `buf` (flattened) and the
/// energy is accumulated until it exceeds `-ln u`.
fn propose(model: &GibbsModel, dist: &Option<Poisson<f64>>, rng: &mut StreamRng, buf: &mut Vec<f64>) -> Option<Energy> {
    let d = model.space().dim();
    let n = poisson_count(dist, rng);
    let u: f64 = rng.random();
    let budget = -u.ln();
    buf.clear();
    buf.resize(n * d, 0.0);
    let mut energy = Energy::ZERO;
    for j in 0..n {
        let (done, rest) = buf.split_at_mut(j * d);
        let x = &mut rest[..d];
        uniform_in_box(model, rng, x);
        energy += model.interaction(x, done.chunks_exact(d));
        if energy.is_hard() || energy.value() > budget {
            return None;
        }
    }
    (u < energy.boltzmann()).then_some(energy)
}

/// Exact draws from the finite-volume Gibbs measure by Poisson rejection.
///
/// Block `b` collects up to [`BLOCK_CONFIGS`] accepted configurations from
/// stream `(seed, b)`; blocks are concatenated in order.
pub fn sample_gibbs(model: &GibbsModel, n_target: usize, seed: u64) -> Result<GibbsSampleBatch> {
    let dist = poisson(model.expected_points())?;
    let d = model.space().dim();
    let n_blocks = n_target.div_ceil(BLOCK_CONFIGS);
    let blocks: Vec<Result<(Vec<PointConfiguration>, u64)>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let quota = (n_target - b * BLOCK_CONFIGS).min(BLOCK_CONFIGS);
            let mut rng = stream(seed, b as u64);
            let mut buf = Vec::new();
            let mut configs = Vec::with_capacity(quota);
            let mut proposals = 0u64;
            while configs.len() < quota {
                proposals += 1;
                if let Some(e) = propose(model, &dist, &mut rng, &mut buf) {
                    configs.push(PointConfiguration {
                        points: buf.chunks_exact(d).map(<[f64]>::to_vec).collect(),
                        energy: e.value(),
                    });
                }
                if proposals >= PROPOSAL_PATIENCE && (configs.len() as f64) < MIN_ACCEPTANCE * proposals as f64 {
                    return Err(Error::AcceptanceTooLow {
                        rate: configs.len() as f64 / proposals as f64,
                        proposals,
                    });
                }
            }
            Ok((configs, proposals))
        })
        .collect();
    let mut configs = Vec::with_capacity(n_target);
    let mut n_proposals = 0;
    for block in blocks {
        let (c, p) = block?;
        configs.extend(c);
        n_proposals += p;
    }
    Ok(GibbsSampleBatch {
        n_accepted: configs.len() as u64,
        configs,
        n_proposals,
        lambda: model.lambda(),
        seed,
        volume: model.region().volume(),
    })
}

/// Acceptance rates at several activities from one set of proposals.
///
/// Each proposal is a Poisson process at the largest activity with uniform
/// marks; thinning by `mark < lambda / lambda_max` gives the proposal at
/// `lambda`, and all activities share the acceptance variate. Energies only
/// grow with added points, so the rates are non-increasing in `lambda` on
/// every realisation.
pub fn acceptance_sweep(model: &GibbsModel, lambdas: &[f64], n_proposals: u64, seed: u64) -> Result<Vec<f64>> {
    if lambdas.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidArgument(format!("activity must be finite and non-negative, got {l}")));
    }
    let lambda_max = lambdas.iter().copied().fold(0.0, f64::max);
    let top = model.with_lambda(lambda_max)?;
    let dist = poisson(top.expected_points())?;
    let d = model.space().dim();
    let n_blocks = n_proposals.div_ceil(BLOCK_CONFIGS as u64);
    let counts: Vec<Vec<u64>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let len = (n_proposals - b * BLOCK_CONFIGS as u64).min(BLOCK_CONFIGS as u64);
            let mut rng = stream(seed, b);
            let mut counts = vec![0u64; lambdas.len()];
            let mut points: Vec<f64> = Vec::new();
            let mut marks: Vec<f64> = Vec::new();
            let mut kept: Vec<usize> = Vec::new();
            for _ in 0..len {
                let n = poisson_count(&dist, &mut rng);
                let u: f64 = rng.random();
                points.resize(n * d, 0.0);
                marks.clear();
                for x in points.chunks_exact_mut(d) {
                    uniform_in_box(&top, &mut rng, x);
                    marks.push(rng.random());
                }
                for (c, &l) in counts.iter_mut().zip(lambdas) {
                    let cut = if lambda_max > 0.0 { l / lambda_max } else { 0.0 };
                    kept.clear();
                    kept.extend((0..marks.len()).filter(|&i| marks[i] < cut));
                    let point = |i: usize| &points[i * d..(i + 1) * d];
                    let mut energy = Energy::ZERO;
                    for (j, &x) in kept.iter().enumerate() {
                        energy += top.interaction(point(x), kept[..j].iter().map(|&i| point(i)));
                        if energy.is_hard() {
                            break;
                        }
                    }
                    if u < energy.boltzmann() {
                        *c += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; lambdas.len()];
    for c in counts {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    Ok(total.into_iter().map(|c| c as f64 / n_proposals as f64).collect())
}
