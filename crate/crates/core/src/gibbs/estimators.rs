use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use super::{GibbsModel, GibbsSampleBatch, PointConfiguration, QuadGrid};
use crate::error::{Error, Result};
use crate::potentials::Energy;
use crate::stats::Moments;

/// Weight mass below which a reweighted expectation is rejected.
pub const MIN_WEIGHT_MASS: f64 = 1e-12;

/// Configurations per reduction chunk in the second (variance) pass.
const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub z_hat: f64,
    pub z_std_error: f64,
    pub log_z: f64,
    pub log_z_std_error: f64,
    /// `log Z / volume`.
    pub log_pressure: f64,
    pub log_pressure_std_error: f64,
}

/// `Z = e^{lambda V} * P(accept)` for the Poisson proposal.
pub fn estimate_partition(batch: &GibbsSampleBatch) -> Result<PartitionEstimate> {
    if batch.n_proposals == 0 {
        return Err(Error::EmptyBatch);
    }
    if batch.n_accepted == 0 {
        return Err(Error::ZeroAcceptance);
    }
    let n = batch.n_proposals as f64;
    let p = batch.acceptance_rate();
    let p_se = (p * (1.0 - p) / n).sqrt();
    let log_z = batch.lambda * batch.volume + p.ln();
    let log_z_se = p_se / p;
    let z_hat = log_z.exp();
    Ok(PartitionEstimate {
        z_hat,
        z_std_error: z_hat * log_z_se,
        log_z,
        log_z_std_error: log_z_se,
        log_pressure: log_z / batch.volume,
        log_pressure_std_error: log_z_se / batch.volume,
    })
}

fn check_batch(model: &GibbsModel, batch: &GibbsSampleBatch) -> Result<()> {
    if batch.configs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.lambda != model.lambda() || batch.volume != model.region().volume() {
        return Err(Error::InvalidArgument(format!(
            "batch drawn at lambda={} volume={} does not match the model (lambda={} volume={})",
            batch.lambda,
            batch.volume,
            model.lambda(),
            model.region().volume()
        )));
    }
    Ok(())
}

fn points(c: &PointConfiguration) -> impl Iterator<Item = &[f64]> {
    c.points.iter().map(Vec::as_slice)
}

/// `rho(v) = lambda E[e^{-H_v(X)}]`.
pub fn estimate_density(model: &GibbsModel, v: &[f64], batch: &GibbsSampleBatch) -> Result<Estimate> {
    check_batch(model, batch)?;
    model.check_point(v)?;
    let m: Moments = batch
        .configs
        .iter()
        .map(|c| model.interaction(v, points(c)).boltzmann())
        .collect();
    Ok(Estimate {
        value: model.lambda() * m.mean,
        std_error: model.lambda() * m.std_error(),
    })
}

/// Per-point cache of `(|x - v|, phi(x, v))` for one configuration.
type Cache = Vec<(f64, Energy)>;

fn build_cache(model: &GibbsModel, v: &[f64], batch: &GibbsSampleBatch) -> Vec<Cache> {
    batch
        .configs
        .par_iter()
        .map(|c| {
            points(c)
                .map(|x| {
                    let s = model.separation(x, v);
                    (s, model.potential().evaluate(s))
                })
                .collect()
        })
        .collect()
}

/// `(prod_x f(x), prod_x f(x) e^{-H_target})` with
/// `f(x) = exp(-phi(x, v) 1{|x - v| < reach})`.
#[inline]
fn tilted_terms(model: &GibbsModel, config: &PointConfiguration, cache: &Cache, reach: f64, target: &[f64]) -> (f64, f64) {
    let mut tilt = Energy::ZERO;
    for &(s, e) in cache {
        tilt += e.gated(s < reach);
        if tilt.is_hard() {
            return (0.0, 0.0);
        }
    }
    let b = tilt.boltzmann();
    let a = (tilt + model.interaction(target, points(config))).boltzmann();
    (b, a)
}

/// Density at `target` of the measure tilted by `prod_x f(x)`, where
/// `f(x) = exp(-phi(x, v) 1{|x - v| < |v - w|})`.
pub fn estimate_tilted_density(
    model: &GibbsModel,
    v: &[f64],
    w: &[f64],
    target: &[f64],
    batch: &GibbsSampleBatch,
) -> Result<Estimate> {
    check_batch(model, batch)?;
    model.check_point(v)?;
    model.space().check_point(w)?;
    model.check_point(target)?;
    let reach = model.separation(v, w);
    let f_target = model.pair(target, v).gated(model.separation(target, v) < reach).boltzmann();
    let cache = build_cache(model, v, batch);
    let terms: Vec<(f64, f64)> = batch
        .configs
        .iter()
        .zip(&cache)
        .map(|(c, k)| tilted_terms(model, c, k, reach, target))
        .collect();
    let b: Moments = terms.iter().map(|t| t.0).collect();
    let a: Moments = terms.iter().map(|t| t.1).collect();
    if !(b.mean >= MIN_WEIGHT_MASS) {
        return Err(Error::DegenerateWeights { mass: b.mean });
    }
    let ratio = a.mean / b.mean;
    let resid: Moments = terms.iter().map(|(bi, ai)| ai - ratio * bi).collect();
    let scale = model.lambda() * f_target;
    Ok(Estimate {
        value: scale * ratio,
        std_error: scale * resid.std_error() / b.mean,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    /// Standard error of `lhs - rhs` from the paired influence functions.
    pub combined_std_error: f64,
    /// `|lhs - rhs| / combined_std_error`.
    pub z_score: f64,
    /// Right-hand side on the grid with doubled resolution.
    pub rhs_refined: f64,
    pub quadrature_shift: f64,
    pub nodes: usize,
}

impl IdentityReport {
    pub fn within(&self, n_se: f64) -> bool {
        self.z_score <= n_se
    }
}

struct Node {
    point: Vec<f64>,
    reach: f64,
    /// quadrature weight times Mayer weight of `(v, w)`.
    weight: f64,
}

fn support_nodes(model: &GibbsModel, v: &[f64], grid: &QuadGrid) -> Result<Vec<Node>> {
    let mut out = Vec::with_capacity(grid.len());
    for (w, qw) in grid.nodes() {
        model.space().check_point(w)?;
        let Some(point) = model.region().wrap(w) else {
            continue;
        };
        let reach = model.separation(v, &point);
        let weight = qw * model.potential().mayer(reach).value();
        if weight > 0.0 {
            out.push(Node { point, reach, weight });
        }
    }
    Ok(out)
}

/// Per-node means `(E[prod f], E[prod f e^{-H_w}])`.
fn node_means(model: &GibbsModel, batch: &GibbsSampleBatch, cache: &[Cache], nodes: &[Node]) -> Vec<(f64, f64)> {
    let n = batch.configs.len() as f64;
    nodes
        .par_iter()
        .map(|node| {
            let (mut sb, mut sa) = (0.0, 0.0);
            for (c, k) in batch.configs.iter().zip(cache) {
                let (b, a) = tilted_terms(model, c, k, node.reach, &node.point);
                sb += b;
                sa += a;
            }
            (sb / n, sa / n)
        })
        .collect()
}

/// `lambda exp(-sum_g weight_g * rho_tilted(g))` and the per-node ratios.
fn recursion_rhs(model: &GibbsModel, nodes: &[Node], means: &[(f64, f64)]) -> Result<(f64, Vec<f64>)> {
    let lambda = model.lambda();
    let mut exponent = 0.0;
    let mut ratios = Vec::with_capacity(nodes.len());
    for (node, &(b, a)) in nodes.iter().zip(means) {
        if !(b >= MIN_WEIGHT_MASS) {
            return Err(Error::DegenerateWeights { mass: b });
        }
        let r = a / b;
        exponent += node.weight * lambda * r;
        ratios.push(r);
    }
    Ok((lambda * (-exponent).exp(), ratios))
}

/// Compares `rho(v)` with `lambda exp(-int rho_{v->w}(w) (1 - e^{-phi(v,w)}) dw)`
/// on one shared batch. The integral runs over the grid nodes that fall in
/// the box (wrapped under periodic boundaries).
pub fn verify_recursion_identity(
    model: &GibbsModel,
    v: &[f64],
    grid: &QuadGrid,
    batch: &GibbsSampleBatch,
) -> Result<IdentityReport> {
    check_batch(model, batch)?;
    model.check_point(v)?;
    let lambda = model.lambda();
    let cache = build_cache(model, v, batch);

    let nodes = support_nodes(model, v, grid)?;
    let means = node_means(model, batch, &cache, &nodes);
    let (rhs, ratios) = recursion_rhs(model, &nodes, &means)?;

    let fine = support_nodes(model, v, &grid.refined())?;
    let fine_means = node_means(model, batch, &cache, &fine);
    let (rhs_refined, _) = recursion_rhs(model, &fine, &fine_means)?;

    // Influence functions of lhs, rhs and their difference.
    let chunks: Vec<[Moments; 3]> = batch
        .configs
        .par_chunks(CHUNK)
        .zip(cache.par_chunks(CHUNK))
        .map(|(configs, caches)| {
            let mut m: [Moments; 3] = Default::default();
            for (c, k) in configs.iter().zip(caches) {
                let lhs_i = lambda * k.iter().map(|t| t.1).sum::<Energy>().boltzmann();
                let mut t = 0.0;
                for ((node, &(b_mean, _)), &r) in nodes.iter().zip(&means).zip(&ratios) {
                    let (b, a) = tilted_terms(model, c, k, node.reach, &node.point);
                    t += node.weight * lambda * (a - r * b) / b_mean;
                }
                let rhs_i = -rhs * t;
                m[0].push(lhs_i);
                m[1].push(rhs_i);
                m[2].push(lhs_i - rhs_i);
            }
            m
        })
        .collect();
    let mut total: [Moments; 3] = Default::default();
    for c in &chunks {
        for (t, m) in total.iter_mut().zip(c) {
            t.merge(m);
        }
    }
    let lhs = total[0].mean;
    let combined = total[2].std_error();
    let diff = (lhs - rhs).abs();
    Ok(IdentityReport {
        lhs,
        lhs_std_error: total[0].std_error(),
        rhs,
        rhs_std_error: total[1].std_error(),
        combined_std_error: combined,
        z_score: z_score(diff, combined),
        rhs_refined,
        quadrature_shift: (rhs_refined - rhs).abs(),
        nodes: nodes.len(),
    })
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductReport {
    pub direct: f64,
    pub direct_std_error: f64,
    pub product: f64,
    pub product_std_error: f64,
    pub combined_std_error: f64,
    pub z_score: f64,
}

/// The k-point density estimated directly and as a product of 1-point
/// densities of successively reweighted measures, on one shared batch.
pub fn verify_kpoint_product(model: &GibbsModel, pts: &[Vec<f64>], batch: &GibbsSampleBatch) -> Result<ProductReport> {
    check_batch(model, batch)?;
    if !(2..=4).contains(&pts.len()) {
        return Err(Error::InvalidArgument(format!("k-point check needs 2 to 4 points, got {}", pts.len())));
    }
    for p in pts {
        model.check_point(p)?;
    }
    let k = pts.len();
    let lambda = model.lambda();
    let own = model.energy(pts).boltzmann();

    // cum[i][j] = e^{-sum_{l<j} H_{v_l}(X_i)}, j = 0..=k.
    let cum: Vec<Vec<f64>> = batch
        .configs
        .par_iter()
        .map(|c| {
            let mut e = Energy::ZERO;
            let mut row = Vec::with_capacity(k + 1);
            row.push(1.0);
            for v in pts {
                e += model.interaction(v, points(c));
                row.push(e.boltzmann());
            }
            row
        })
        .collect();

    let direct_m: Moments = cum.iter().map(|r| r[k]).collect();
    let scale = own * lambda.powi(k as i32);
    let direct = scale * direct_m.mean;
    let direct_se = scale * direct_m.std_error();

    // factor_j = lambda f_j(v_j) E[G_j e^{-H_{v_j}}] / E[G_j].
    let mut factors = Vec::with_capacity(k);
    let mut pre = Vec::with_capacity(k);
    for j in 0..k {
        let f_j = model.interaction(&pts[j], pts[..j].iter().map(Vec::as_slice)).boltzmann();
        let g: Moments = cum.iter().map(|r| r[j]).collect();
        let a: Moments = cum.iter().map(|r| r[j + 1]).collect();
        if f_j == 0.0 {
            factors.push(0.0);
            pre.push((0.0, 0.0, 1.0));
            continue;
        }
        if !(g.mean >= MIN_WEIGHT_MASS) {
            return Err(Error::DegenerateWeights { mass: g.mean });
        }
        let ratio = a.mean / g.mean;
        factors.push(lambda * f_j * ratio);
        pre.push((lambda * f_j, ratio, g.mean));
    }
    let product: f64 = factors.iter().product();
    let others: Vec<f64> = (0..k)
        .map(|j| factors.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, f)| f).product())
        .collect();
    let infl: Moments = cum
        .iter()
        .map(|r| {
            (0..k)
                .map(|j| {
                    let (c, ratio, g_mean) = pre[j];
                    others[j] * c * (r[j + 1] - ratio * r[j]) / g_mean
                })
                .sum::<f64>()
        })
        .collect();
    let product_se = infl.std_error();
    let combined = direct_se.hypot(product_se);
    Ok(ProductReport {
        direct,
        direct_std_error: direct_se,
        product,
        product_std_error: product_se,
        combined_std_error: combined,
        z_score: z_score((direct - product).abs(), combined),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub mean_count: f64,
    pub std_error: f64,
    pub poisson_mean: f64,
    pub ok: bool,
}

/// Mean point count against the dominating Poisson mean `lambda * volume`.
pub fn check_domination(batch: &GibbsSampleBatch) -> Result<DominationReport> {
    if batch.configs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let m: Moments = batch.configs.iter().map(|c| c.len() as f64).collect();
    let poisson_mean = batch.lambda * batch.volume;
    Ok(DominationReport {
        mean_count: m.mean,
        std_error: m.std_error(),
        poisson_mean,
        ok: m.mean <= poisson_mean + 3.0 * m.std_error(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuelleCheck {
    pub point: Vec<f64>,
    pub density: Estimate,
    pub ok: bool,
}

/// `rho(v) <= lambda` (up to 3 standard errors) at each point.
pub fn check_ruelle(model: &GibbsModel, batch: &GibbsSampleBatch, pts: &[Vec<f64>]) -> Result<Vec<RuelleCheck>> {
    pts.iter()
        .map(|p| {
            let density = estimate_density(model, p, batch)?;
            Ok(RuelleCheck {
                point: p.clone(),
                ok: density.value <= model.lambda() + 3.0 * density.std_error,
                density,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of the configuration sizes against `Poisson(mean)`,
/// pooling the upper tail so that every bin expects at least five counts.
pub fn poisson_count_test(batch: &GibbsSampleBatch, mean: f64) -> Result<ChiSquareReport> {
    let n = batch.configs.len();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    if mean == 0.0 {
        let all_empty = batch.configs.iter().all(PointConfiguration::is_empty);
        return Ok(ChiSquareReport {
            statistic: if all_empty { 0.0 } else { f64::INFINITY },
            dof: 0,
            p_value: if all_empty { 1.0 } else { 0.0 },
        });
    }
    let law = Poisson::new(mean).map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    let nf = n as f64;
    // Bins 0..tail-1 individually, then [tail, inf).
    let mut tail = 1u64;
    while nf * law.pmf(tail) >= 5.0 && nf * law.sf(tail) >= 5.0 {
        tail += 1;
    }
    let mut observed = vec![0u64; tail as usize + 1];
    for c in &batch.configs {
        observed[(c.len() as u64).min(tail) as usize] += 1;
    }
    let mut statistic = 0.0;
    for (k, &o) in observed.iter().enumerate() {
        let p = if (k as u64) < tail {
            law.pmf(k as u64)
        } else {
            law.sf(tail - 1)
        };
        let e = nf * p;
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = observed.len() - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    Ok(ChiSquareReport { statistic, dof, p_value })
}
