//! Repulsive, finite-range, radial pair potentials.
//!
//! A potential is a function of the separation `s = |x - y|` measured in the
//! norm of the ambient [`Space`]. Values live in `[0, +inf]`; the infinite
//! value is carried by [`Energy::Hard`] rather than by a float infinity, so
//! that `0 * inf = 0` holds by construction when an indicator switches an
//! interaction off.

use std::io::Read;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Norm, Space};
use crate::quadrature;

/// Relative tolerance of the radial quadrature behind `temperedness_constant`.
pub const RADIAL_QUADRATURE_TOL: f64 = 1e-10;

/// Knots of the tabulated radial CDF used by the displacement sampler.
pub const CDF_KNOTS: usize = 1 << 12;

/// A pair energy in `[0, +inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    Hard,
}

impl Energy {
    pub const ZERO: Energy = Energy::Finite(0.0);

    /// `+inf` maps to [`Energy::Hard`].
    pub fn from_value(v: f64) -> Energy {
        if v == f64::INFINITY {
            Energy::Hard
        } else {
            Energy::Finite(v)
        }
    }

    pub fn is_hard(self) -> bool {
        matches!(self, Energy::Hard)
    }

    pub fn is_zero(self) -> bool {
        self == Energy::ZERO
    }

    pub fn value(self) -> f64 {
        match self {
            Energy::Finite(v) => v,
            Energy::Hard => f64::INFINITY,
        }
    }

    /// `e^{-E}`, exactly zero for a hard core.
    #[inline]
    pub fn boltzmann(self) -> f64 {
        match self {
            Energy::Finite(0.0) => 1.0,
            Energy::Finite(v) => (-v).exp(),
            Energy::Hard => 0.0,
        }
    }

    /// `1 - e^{-E}`.
    #[inline]
    pub fn mayer(self) -> MayerWeight {
        MayerWeight(match self {
            Energy::Finite(v) => -(-v).exp_m1(),
            Energy::Hard => 1.0,
        })
    }

    /// `1{on} * E` under the convention `0 * inf = 0`.
    #[inline]
    pub fn gated(self, on: bool) -> Energy {
        if on {
            self
        } else {
            Energy::ZERO
        }
    }
}

impl Add for Energy {
    type Output = Energy;

    #[inline]
    fn add(self, rhs: Energy) -> Energy {
        match (self, rhs) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::Hard,
        }
    }
}

impl AddAssign for Energy {
    #[inline]
    fn add_assign(&mut self, rhs: Energy) {
        *self = *self + rhs;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

/// `1 - e^{-phi}`, always in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MayerWeight(f64);

impl MayerWeight {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Piecewise-constant radial potential. Row `i` of the table holds
/// `(radii[i], values[i])` and sets `phi(s) = values[i]` for
/// `radii[i-1] <= s < radii[i]` (with `radii[-1] = 0`), so the profile is
/// right-continuous. The last knot is the cutoff; beyond it `phi = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    radii: Vec<f64>,
    values: Vec<Energy>,
}

impl RadialTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidPotential("radial table has no rows".into()));
        }
        if radii.len() != values.len() {
            return Err(Error::InvalidPotential(format!(
                "radial table has {} radii but {} values",
                radii.len(),
                values.len()
            )));
        }
        let mut prev = 0.0;
        for &r in &radii {
            if !(r.is_finite() && r > prev) {
                return Err(Error::InvalidPotential(format!(
                    "radii must be finite, positive and strictly ascending (got {r} after {prev})"
                )));
            }
            prev = r;
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::InvalidPotential(format!(
                "potential values must be non-negative (got {v})"
            )));
        }
        Ok(Self {
            radii,
            values: values.into_iter().map(Energy::from_value).collect(),
        })
    }

    /// Reads a two-column CSV with header `s,phi`. `inf` marks a hard core.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "phi" {
            return Err(Error::InvalidPotential(format!(
                "radial table header must be `s,phi`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|e| {
                    Error::InvalidPotential(format!("row {}: column {}: {e}", line + 2, i + 1))
                })
            };
            radii.push(parse(0)?);
            values.push(parse(1)?);
        }
        Self::new(radii, values)
    }

    pub fn cutoff(&self) -> f64 {
        *self.radii.last().expect("non-empty table")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[Energy] {
        &self.values
    }

    #[inline]
    pub fn eval(&self, s: f64) -> Energy {
        let i = self.radii.partition_point(|&r| r <= s);
        self.values.get(i).copied().unwrap_or(Energy::ZERO)
    }

    /// `int_{|w| < t} mayer(|w|) dw`, exact for piecewise-constant profiles.
    fn mayer_mass(&self, space: &Space, t: f64) -> f64 {
        let mut mass = 0.0;
        let mut lo = 0.0;
        for (&r, &v) in self.radii.iter().zip(&self.values) {
            if lo >= t {
                break;
            }
            let hi = r.min(t);
            mass += v.mayer().value() * (space.ball_volume(hi) - space.ball_volume(lo));
            lo = r;
        }
        mass
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `+inf` below separation `r`.
    HardSphere { r: f64 },
    /// Hard core in the sup norm: `+inf` when `|x - y|_inf < r`.
    HardCube { r: f64 },
    /// `a * 1{s <= r}`.
    Strauss { r: f64, a: f64 },
    RadialTable(Arc<RadialTable>),
}

/// A repulsive radial pair potential with compact support.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!("radius must be positive and finite, got {r}")))
    }
}

impl Potential {
    pub fn hard_sphere(r: f64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self { kind: PotentialKind::HardSphere { r } })
    }

    pub fn hard_cube(r: f64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self { kind: PotentialKind::HardCube { r } })
    }

    pub fn strauss(r: f64, a: f64) -> Result<Self> {
        check_radius(r)?;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "Strauss strength must be positive and finite, got {a}"
            )));
        }
        Ok(Self { kind: PotentialKind::Strauss { r, a } })
    }

    pub fn radial_table(table: RadialTable) -> Self {
        Self {
            kind: PotentialKind::RadialTable(Arc::new(table)),
        }
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PotentialKind::HardSphere { .. } => "hard_sphere",
            PotentialKind::HardCube { .. } => "hard_cube",
            PotentialKind::Strauss { .. } => "strauss",
            PotentialKind::RadialTable(_) => "radial_table",
        }
    }

    /// Range of the interaction; `phi(s) = 0` for every `s` beyond it.
    pub fn cutoff(&self) -> f64 {
        match &self.kind {
            PotentialKind::HardSphere { r } | PotentialKind::HardCube { r } | PotentialKind::Strauss { r, .. } => *r,
            PotentialKind::RadialTable(t) => t.cutoff(),
        }
    }

    /// `phi` at separation `s >= 0`.
    #[inline]
    pub fn evaluate(&self, s: f64) -> Energy {
        match &self.kind {
            PotentialKind::HardSphere { r } | PotentialKind::HardCube { r } => {
                if s < *r {
                    Energy::Hard
                } else {
                    Energy::ZERO
                }
            }
            PotentialKind::Strauss { r, a } => {
                if s <= *r {
                    Energy::Finite(*a)
                } else {
                    Energy::ZERO
                }
            }
            PotentialKind::RadialTable(t) => t.eval(s),
        }
    }

    #[inline]
    pub fn mayer(&self, s: f64) -> MayerWeight {
        self.evaluate(s).mayer()
    }

    /// Whether the Mayer weight is constant on the ball of radius `cutoff`,
    /// in which case the displacement law is uniform on that ball.
    fn constant_mayer_on_support(&self) -> bool {
        !matches!(self.kind, PotentialKind::RadialTable(_))
    }

    fn check_norm(&self, space: &Space) -> Result<()> {
        if matches!(self.kind, PotentialKind::HardCube { .. }) && space.norm() != Norm::Linf {
            return Err(Error::KindNormMismatch {
                kind: "hard_cube",
                expected: "linf",
            });
        }
        Ok(())
    }

    /// `C_phi = int (1 - e^{-phi(|w|)}) dw`.
    pub fn temperedness_constant(&self, space: &Space) -> Result<f64> {
        self.check_norm(space)?;
        match &self.kind {
            PotentialKind::HardSphere { r } | PotentialKind::HardCube { r } => Ok(space.ball_volume(*r)),
            PotentialKind::Strauss { r, a } => Ok(-(-a).exp_m1() * space.ball_volume(*r)),
            PotentialKind::RadialTable(t) => {
                let mut breaks = Vec::with_capacity(t.radii.len() + 1);
                breaks.push(0.0);
                breaks.extend_from_slice(&t.radii);
                quadrature::integrate_piecewise(
                    |s| t.eval(s).mayer().value() * space.sphere_area(s),
                    &breaks,
                    RADIAL_QUADRATURE_TOL,
                    quadrature::DEFAULT_BUDGET,
                )
            }
        }
    }
}

#[derive(Clone, Debug)]
enum RadialLaw {
    UniformBall { radius: f64 },
    Tabulated { cutoff: f64, cdf: Vec<f64> },
}

/// Draws displacements `w` with density `mayer(|w|) / C_phi`.
///
/// Potentials with a constant Mayer weight on their support sample the
/// uniform ball directly. Radial tables invert a tabulated radial CDF
/// (`CDF_KNOTS` knots, linear interpolation) and then pick a uniform point on
/// the sphere of that radius.
#[derive(Clone, Debug)]
pub struct DisplacementSampler {
    space: Space,
    c_phi: f64,
    law: RadialLaw,
}

impl DisplacementSampler {
    pub fn new(potential: &Potential, space: Space) -> Result<Self> {
        let c_phi = potential.temperedness_constant(&space)?;
        if !(c_phi > 0.0) {
            return Err(Error::DegeneratePotential);
        }
        let law = match &potential.kind {
            _ if potential.constant_mayer_on_support() => RadialLaw::UniformBall {
                radius: potential.cutoff(),
            },
            PotentialKind::RadialTable(t) => {
                let cutoff = t.cutoff();
                let total = t.mayer_mass(&space, cutoff);
                if !(total > 0.0) {
                    return Err(Error::DegeneratePotential);
                }
                let mut cdf: Vec<f64> = (0..=CDF_KNOTS)
                    .map(|i| t.mayer_mass(&space, cutoff * i as f64 / CDF_KNOTS as f64) / total)
                    .collect();
                cdf[CDF_KNOTS] = 1.0;
                // Rounding can break monotonicity by an ulp.
                for i in 1..=CDF_KNOTS {
                    if cdf[i] < cdf[i - 1] {
                        cdf[i] = cdf[i - 1];
                    }
                }
                RadialLaw::Tabulated { cutoff, cdf }
            }
            _ => unreachable!("constant-weight kinds handled above"),
        };
        Ok(Self { space, c_phi, law })
    }

    pub fn c_phi(&self) -> f64 {
        self.c_phi
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.law {
            RadialLaw::UniformBall { radius } => self.space.uniform_ball_offset(*radius, rng, out),
            RadialLaw::Tabulated { cutoff, cdf } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c <= u).clamp(1, CDF_KNOTS);
                let (lo, hi) = (cdf[i - 1], cdf[i]);
                let frac = if hi > lo { (u - lo) / (hi - lo) } else { 0.0 };
                let s = cutoff * ((i - 1) as f64 + frac) / CDF_KNOTS as f64;
                self.space.sphere_offset(s, rng, out);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.space.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

/// One displacement drawn from the normalised Mayer density. Builds the
/// sampler on every call; hot loops should hold a [`DisplacementSampler`].
pub fn sample_mayer_displacement<R: Rng + ?Sized>(potential: &Potential, space: &Space, rng: &mut R) -> Result<Vec<f64>> {
    Ok(DisplacementSampler::new(potential, *space)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::f64::consts::{LN_2, PI};

    fn table_hard_sphere(r: f64) -> Potential {
        Potential::radial_table(RadialTable::new(vec![r], vec![f64::INFINITY]).unwrap())
    }

    #[test]
    fn evaluate_examples() {
        let hs = Potential::hard_sphere(1.0).unwrap();
        assert_eq!(hs.evaluate(0.5), Energy::Hard);
        assert_eq!(hs.evaluate(1.5), Energy::ZERO);
        let st = Potential::strauss(1.0, 2.0).unwrap();
        assert_eq!(st.evaluate(0.3), Energy::Finite(2.0));
        assert_eq!(st.evaluate(1.0), Energy::Finite(2.0));
        assert_eq!(st.evaluate(1.01), Energy::ZERO);
    }

    #[test]
    fn mayer_examples() {
        let hs = Potential::hard_sphere(1.0).unwrap();
        assert_eq!(hs.mayer(0.5).value(), 1.0);
        let st = Potential::strauss(1.0, LN_2).unwrap();
        assert!((st.mayer(0.5).value() - 0.5).abs() < 1e-15);
        for p in [hs, st, table_hard_sphere(2.0)] {
            assert_eq!(p.mayer(p.cutoff() + 0.1).value(), 0.0);
        }
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(Energy::Hard.gated(false), Energy::ZERO);
        assert_eq!((Energy::Hard.gated(false) + Energy::Finite(1.0)).boltzmann(), (-1.0f64).exp());
        assert_eq!((Energy::Hard + Energy::Finite(1.0)).boltzmann(), 0.0);
    }

    #[test]
    fn invalid_constructions() {
        assert!(Potential::hard_sphere(0.0).is_err());
        assert!(Potential::strauss(1.0, -1.0).is_err());
        assert!(RadialTable::new(vec![1.0, 0.5], vec![1.0, 1.0]).is_err());
        assert!(RadialTable::new(vec![1.0], vec![-0.1]).is_err());
        assert!(RadialTable::new(vec![1.0], vec![f64::NAN]).is_err());
        assert!(RadialTable::new(vec![], vec![]).is_err());
    }

    #[test]
    fn table_is_right_continuous() {
        let t = RadialTable::new(vec![0.5, 1.0], vec![f64::INFINITY, 2.0]).unwrap();
        assert_eq!(t.eval(0.0), Energy::Hard);
        assert_eq!(t.eval(0.4999), Energy::Hard);
        assert_eq!(t.eval(0.5), Energy::Finite(2.0));
        assert_eq!(t.eval(1.0), Energy::ZERO);
    }

    #[test]
    fn csv_loading() {
        let t = RadialTable::from_csv("s,phi\n0.5,inf\n1.0, 0.25\n".as_bytes()).unwrap();
        assert_eq!(t.radii(), &[0.5, 1.0]);
        assert_eq!(t.values(), &[Energy::Hard, Energy::Finite(0.25)]);
        assert!(RadialTable::from_csv("r,phi\n1,1\n".as_bytes()).is_err());
        assert!(RadialTable::from_csv("s,phi\n1,abc\n".as_bytes()).is_err());
    }

    #[test]
    fn temperedness_closed_forms() {
        let l2 = Space::euclidean(2).unwrap();
        let c = Potential::hard_sphere(1.0).unwrap().temperedness_constant(&l2).unwrap();
        assert!((c - PI).abs() < 1e-15);
        let c = Potential::strauss(1.0, 50.0).unwrap().temperedness_constant(&l2).unwrap();
        assert!((c - PI * (1.0 - (-50.0f64).exp())).abs() < 1e-15);
        let cube = Space::new(3, Norm::Linf).unwrap();
        assert_eq!(Potential::hard_cube(0.5).unwrap().temperedness_constant(&cube).unwrap(), 1.0);
        assert!(matches!(
            Potential::hard_cube(0.5).unwrap().temperedness_constant(&l2),
            Err(Error::KindNormMismatch { .. })
        ));
    }

    #[test]
    fn temperedness_table_matches_closed_form() {
        let l3 = Space::euclidean(3).unwrap();
        let c = table_hard_sphere(1.0).temperedness_constant(&l3).unwrap();
        assert!((c - 4.0 * PI / 3.0).abs() < 1e-9, "{c}");
        // Two-step profile: independent shell-volume arithmetic.
        let t = RadialTable::new(vec![0.5, 1.5], vec![f64::INFINITY, 1.0]).unwrap();
        let p = Potential::radial_table(t);
        let l2 = Space::euclidean(2).unwrap();
        let expected = PI * 0.25 + (1.0 - (-1.0f64).exp()) * PI * (2.25 - 0.25);
        let c = p.temperedness_constant(&l2).unwrap();
        assert!((c - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn strauss_temperedness_increases_to_hard_sphere() {
        let l2 = Space::euclidean(2).unwrap();
        let hs = Potential::hard_sphere(1.0).unwrap().temperedness_constant(&l2).unwrap();
        let cs: Vec<f64> = [1.0, 5.0, 20.0, 50.0]
            .iter()
            .map(|&a| Potential::strauss(1.0, a).unwrap().temperedness_constant(&l2).unwrap())
            .collect();
        assert!(cs.windows(2).all(|w| w[0] < w[1]));
        assert!(cs.iter().all(|&c| c <= hs));
        assert!((hs - cs[3]) / hs < 1e-20);
    }

    #[test]
    fn temperedness_dominates_subregions() {
        // Mayer mass over nested boxes [-h, h]^2 on one shared lattice.
        let l2 = Space::euclidean(2).unwrap();
        let p = Potential::strauss(1.0, 1.5).unwrap();
        let c = p.temperedness_constant(&l2).unwrap();
        let cell = 0.0125;
        let mut prev = 0.0;
        for half_cells in [20i32, 40, 60, 80, 100] {
            let mut mass = 0.0;
            for i in -half_cells..half_cells {
                for j in -half_cells..half_cells {
                    let x = (i as f64 + 0.5) * cell;
                    let y = (j as f64 + 0.5) * cell;
                    mass += p.mayer(l2.length(&[x, y])).value() * cell * cell;
                }
            }
            assert!(mass >= prev);
            assert!(mass <= c + 1e-2, "{mass} > {c}");
            prev = mass;
        }
    }

    #[test]
    fn degenerate_potential_rejected() {
        let zero = Potential::radial_table(RadialTable::new(vec![1.0], vec![0.0]).unwrap());
        let l2 = Space::euclidean(2).unwrap();
        assert_eq!(zero.temperedness_constant(&l2).unwrap(), 0.0);
        assert!(matches!(DisplacementSampler::new(&zero, l2), Err(Error::DegeneratePotential)));
    }

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn hard_disk_displacement_is_uniform() {
        let l2 = Space::euclidean(2).unwrap();
        let sampler = DisplacementSampler::new(&Potential::hard_sphere(1.0).unwrap(), l2).unwrap();
        let mut rng = stream(3, 0);
        let radii: Vec<f64> = (0..100_000).map(|_| l2.length(&sampler.sample(&mut rng))).collect();
        let ks = ks_distance(radii, |s| s * s);
        assert!(ks < 0.01, "KS {ks}");
    }

    #[test]
    fn strauss_displacement_is_uniform() {
        let l2 = Space::euclidean(2).unwrap();
        let sampler = DisplacementSampler::new(&Potential::strauss(1.0, 0.7).unwrap(), l2).unwrap();
        let mut rng = stream(5, 0);
        let radii: Vec<f64> = (0..100_000).map(|_| l2.length(&sampler.sample(&mut rng))).collect();
        assert!(ks_distance(radii, |s| s * s) < 0.01);
    }

    #[test]
    fn table_displacement_mean_radius() {
        let l3 = Space::euclidean(3).unwrap();
        let sampler = DisplacementSampler::new(&table_hard_sphere(2.0), l3).unwrap();
        let mut rng = stream(9, 0);
        let n = 100_000;
        let m: crate::stats::Moments = (0..n).map(|_| l3.length(&sampler.sample(&mut rng))).collect();
        assert!((m.mean - 1.5).abs() < 3.0 * m.std_error(), "{} +- {}", m.mean, m.std_error());
    }

    /// Radial chi-square over 50 equal-width bins against the exact shell
    /// masses of the target density.
    fn radial_chi_square(p: &Potential, space: Space, seed: u64) -> f64 {
        let sampler = DisplacementSampler::new(p, space).unwrap();
        let cutoff = p.cutoff();
        let bins = 50;
        let n = 1_000_000;
        let mut counts = vec![0u64; bins];
        let mut rng = stream(seed, 0);
        let mut w = vec![0.0; space.dim()];
        for _ in 0..n {
            sampler.sample_into(&mut rng, &mut w);
            let s = space.length(&w);
            let b = ((s / cutoff * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        // Expected bin masses by a fine independent Riemann sum of
        // mayer(s) * area(s).
        let mut expected = vec![0.0; bins];
        let fine = 2000;
        for (b, e) in expected.iter_mut().enumerate() {
            let lo = cutoff * b as f64 / bins as f64;
            let h = cutoff / bins as f64 / fine as f64;
            for i in 0..fine {
                let s = lo + (i as f64 + 0.5) * h;
                *e += p.mayer(s).value() * space.sphere_area(s) * h;
            }
        }
        let total: f64 = expected.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| {
                let e = e / total * n as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn displacement_chi_square_builtins() {
        let l2 = Space::euclidean(2).unwrap();
        let linf = Space::new(2, Norm::Linf).unwrap();
        let cases = [
            (Potential::hard_sphere(1.0).unwrap(), l2),
            (Potential::hard_cube(0.5).unwrap(), linf),
            (Potential::strauss(1.0, 1.0).unwrap(), l2),
            (
                Potential::radial_table(RadialTable::new(vec![0.4, 1.0], vec![f64::INFINITY, 0.5]).unwrap()),
                Space::euclidean(3).unwrap(),
            ),
            (
                Potential::radial_table(RadialTable::new(vec![0.3, 0.8], vec![1.0, 3.0]).unwrap()),
                linf,
            ),
        ];
        for (i, (p, space)) in cases.into_iter().enumerate() {
            let pval = radial_chi_square(&p, space, 100 + i as u64);
            assert!(pval > 0.001, "{} p-value {pval}", p.kind_name());
        }
    }

    proptest! {
        #[test]
        fn mayer_bounded_and_monotone(s in 0.0f64..3.0, ds in 0.0f64..1.0, a in 0.01f64..10.0) {
            let table = RadialTable::new(vec![0.5, 1.0, 2.0], vec![f64::INFINITY, a, a / 2.0]).unwrap();
            for p in [
                Potential::hard_sphere(1.0).unwrap(),
                Potential::strauss(1.0, a).unwrap(),
                Potential::radial_table(table.clone()),
            ] {
                let m = p.mayer(s).value();
                prop_assert!((0.0..=1.0).contains(&m));
                // All of these profiles are non-increasing in s.
                prop_assert!(p.mayer(s + ds).value() <= m);
            }
        }
    }
}
