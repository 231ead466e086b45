//! Random single-particle potentials `V(·, ω)`.
//!
//! Values are produced by a counter-based construction: the value at a site
//! is a pure function of `(seed, realization, site)`. Two cubes that share a
//! projected site therefore see the same potential there, whatever order
//! they are enumerated in, which is what two-volume experiments need.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Cube, Site};
use crate::{Error, Result};

/// Law of the i.i.d. single-site potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Law {
    Gaussian { mean: f64, stdev: f64 },
    Uniform { low: f64, high: f64 },
    /// Takes the value `value` with probability `p`, else 0.
    Bernoulli { p: f64, value: f64 },
    /// Deterministic `V ≡ value`; a degenerate law for baselines.
    Constant { value: f64 },
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::Gaussian { .. } => "gaussian",
            Law::Uniform { .. } => "uniform",
            Law::Bernoulli { .. } => "bernoulli",
            Law::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Law::Gaussian { mean, stdev } => {
                if !mean.is_finite() || !(stdev.is_finite() && stdev > 0.0) {
                    return bad(format!("gaussian needs finite mean and stdev > 0, got ({mean}, {stdev})"));
                }
            }
            Law::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform needs finite a < b, got ({low}, {high})"));
                }
            }
            Law::Bernoulli { p, value } => {
                if !(p > 0.0 && p < 1.0) || !(value.is_finite() && value > 0.0) {
                    return bad(format!("bernoulli needs p in (0,1) and w > 0, got ({p}, {value})"));
                }
            }
            Law::Constant { value } => {
                if !value.is_finite() {
                    return bad(format!("constant potential must be finite, got {value}"));
                }
            }
        }
        Ok(())
    }

    /// Whether `V >= 0` almost surely.
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            Law::Gaussian { .. } => false,
            Law::Uniform { low, .. } => low >= 0.0,
            Law::Bernoulli { .. } => true,
            Law::Constant { value } => value >= 0.0,
        }
    }

    /// Whether the law has a bounded density (no atoms).
    pub fn is_continuous(&self) -> bool {
        matches!(self, Law::Gaussian { .. } | Law::Uniform { .. })
    }

    /// Closed-form modulus bound `ν(t) <= t · sup density of ξ_Q`, available
    /// for Gaussian laws where `ξ_Q ~ N(μ, σ²/|Q|)`.
    pub fn gaussian_modulus_bound(&self, t: f64, region_size: usize) -> Option<f64> {
        match *self {
            Law::Gaussian { stdev, .. } => {
                Some(t * (region_size as f64).sqrt() / (stdev * (2.0 * std::f64::consts::PI).sqrt()))
            }
            _ => None,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Law::Gaussian { mean, stdev } => Normal::new(mean, stdev).expect("validated").sample(rng),
            Law::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
            Law::Bernoulli { p, value } => {
                if Bernoulli::new(p).expect("validated").sample(rng) {
                    value
                } else {
                    0.0
                }
            }
            Law::Constant { value } => value,
        }
    }
}

/// A law plus the master seed of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    #[serde(flatten)]
    pub law: Law,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(law: Law, seed: u64) -> Result<Self> {
        law.validate()?;
        Ok(DisorderSpec { law, seed })
    }
}

/// Finite region `Q ⊂ Z^d` on which a field is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// A single-particle cube.
    Cube(Cube),
    /// Sorted, deduplicated explicit site list.
    Sites(Vec<Site>),
}

impl Region {
    pub fn from_sites(mut sites: Vec<Site>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("field region must be nonempty".into()));
        }
        let d = sites[0].width();
        if sites.iter().any(|s| s.width() != d) {
            return Err(Error::InvalidDims("region sites have mixed dimensions".into()));
        }
        sites.sort();
        sites.dedup();
        Ok(Region::Sites(sites))
    }

    /// Union of the single-particle projections of the given cubes.
    pub fn covering(cubes: &[&Cube], cap: usize) -> Result<Self> {
        let projections: Vec<Cube> = cubes.iter().flat_map(|c| c.projections()).collect();
        let first = projections
            .first()
            .ok_or_else(|| Error::InvalidParameter("no cubes to cover".into()))?;
        if projections.iter().all(|p| p == first) {
            return Ok(Region::Cube(first.clone()));
        }
        let mut sites = Vec::new();
        for p in &projections {
            sites.extend(crate::geometry::cube_sites(p, cap)?);
        }
        Region::from_sites(sites)
    }

    pub fn sites(&self) -> Vec<Site> {
        match self {
            Region::Cube(c) => (0..self.len()).map(|i| c.site_at(i)).collect(),
            Region::Sites(s) => s.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Region::Cube(c) => c.volume().expect("single-particle cube volume") as usize,
            Region::Sites(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One realization `V(·, ω)` on a region.
#[derive(Debug, Clone)]
pub struct FieldSample {
    region: Region,
    values: Vec<f64>,
    lookup: Option<HashMap<Site, usize>>,
}

impl FieldSample {
    /// Field with explicit values, aligned with `region.sites()`.
    pub fn from_values(region: Region, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a region of {} sites",
                values.len(),
                region.len()
            )));
        }
        let lookup = match &region {
            Region::Cube(_) => None,
            Region::Sites(s) => Some(s.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect()),
        };
        Ok(FieldSample { region, values, lookup })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V(x)` for a single-particle position `x`.
    pub fn value_at(&self, x: &[i64]) -> Option<f64> {
        let idx = match (&self.region, &self.lookup) {
            (Region::Cube(c), _) => c.index_of(&Site::new(x.to_vec()))?,
            (Region::Sites(_), Some(map)) => *map.get(&Site::new(x.to_vec()))?,
            (Region::Sites(_), None) => unreachable!("lookup built for explicit regions"),
        };
        Some(self.values[idx])
    }

    /// Like [`FieldSample::value_at`] but without allocating for cube regions.
    pub(crate) fn value_at_fast(&self, x: &[i64]) -> Option<f64> {
        match &self.region {
            Region::Cube(c) => {
                let r = c.radius() as i64;
                let side = c.side() as i64;
                let mut idx = 0i64;
                for (xi, ui) in x.iter().zip(c.center().coords()) {
                    let off = xi - ui + r;
                    if off < 0 || off >= side {
                        return None;
                    }
                    idx = idx * side + off;
                }
                Some(self.values[idx as usize])
            }
            Region::Sites(_) => self.value_at(x),
        }
    }
}

const SITE_STREAM: u64 = 0x5349_5445_5f56_414c;
const MEAN_STREAM: u64 = 0x4d45_414e_5f52_4553;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn site_key(seed: u64, realization: u64, coords: &[i64]) -> u64 {
    let mut h = splitmix(seed ^ SITE_STREAM);
    h = splitmix(h ^ realization);
    for &c in coords {
        h = splitmix(h ^ c as u64);
    }
    h
}

/// Draws `V(x, ω_realization)` for one site.
pub fn site_value(spec: &DisorderSpec, realization: u64, x: &[i64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(site_key(spec.seed, realization, x));
    spec.law.draw(&mut rng)
}

/// Samples the field on `region` for the given realization index.
pub fn sample_field(spec: &DisorderSpec, region: &Region, realization: u64) -> FieldSample {
    let values = region.sites().iter().map(|s| site_value(spec, realization, s.coords())).collect();
    FieldSample::from_values(region.clone(), values).expect("aligned by construction")
}

/// Sample mean `ξ_Q` and fluctuations `η_x = V(x) - ξ_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFluctDecomposition {
    pub mean: f64,
    pub fluct: Vec<f64>,
}

impl MeanFluctDecomposition {
    pub fn reconstruct(&self) -> Vec<f64> {
        self.fluct.iter().map(|eta| self.mean + eta).collect()
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn decompose(field: &FieldSample) -> MeanFluctDecomposition {
    let mean = compensated_sum(field.values.iter().copied()) / field.len() as f64;
    MeanFluctDecomposition { mean, fluct: field.values.iter().map(|v| v - mean).collect() }
}

/// Keeps the fluctuations of `field` and redraws its sample mean from
/// `N(μ, σ²/|Q|)`. Gaussian laws only: there the mean is independent of the
/// fluctuations, so the output has the same law as a fresh field.
pub fn resample_mean_conditional(field: &FieldSample, spec: &DisorderSpec, draw: u64) -> Result<FieldSample> {
    let Law::Gaussian { mean, stdev } = spec.law else {
        return Err(Error::ConditionalIndependenceUnavailable { law: spec.law.name() });
    };
    let parts = decompose(field);
    let q = field.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(splitmix(spec.seed ^ MEAN_STREAM) ^ draw));
    let xi = Normal::new(mean, stdev / q.sqrt()).expect("validated").sample(&mut rng);
    let values = parts.fluct.iter().map(|eta| xi + eta).collect();
    FieldSample::from_values(field.region.clone(), values)
}

/// Empirical modulus of continuity of the sample-mean CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub t_grid: Vec<f64>,
    pub nu_hat: Vec<f64>,
    pub trials: usize,
    /// 95% Dvoretzky–Kiefer–Wolfowitz band on a CDF difference (`2ε`).
    pub ci_halfwidth: f64,
}

impl ModulusEstimate {
    /// Interpolates `ν̂` at `t` from the grid (monotone, clamped).
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.t_grid.partition_point(|&g| g < t);
        if i < self.t_grid.len() && self.t_grid[i] == t {
            return self.nu_hat[i];
        }
        // conservative: value at the next grid point above t
        self.nu_hat.get(i).copied().unwrap_or(1.0)
    }
}

/// Pool-adjacent-violators fit of a nondecreasing sequence.
pub fn isotonic_nondecreasing(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb));
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Largest fraction of sorted samples inside a closed window of width `t`.
fn max_window_mass(sorted: &[f64], t: f64) -> f64 {
    let mut best = 0usize;
    let mut hi = 0usize;
    for lo in 0..sorted.len() {
        hi = hi.max(lo);
        while hi < sorted.len() && sorted[hi] - sorted[lo] <= t {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best as f64 / sorted.len() as f64
}

/// Estimates `ν_R(t) = sup_s |F_ξ(s+t) - F_ξ(s)|` from `trials` sample means
/// of fields on `region` (realizations `0..trials`).
pub fn estimate_modulus(spec: &DisorderSpec, region: &Region, t_grid: &[f64], trials: usize) -> Result<ModulusEstimate> {
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!("modulus estimation needs >= 1000 trials, got {trials}")));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("t grid must be finite and nonnegative".into()));
    }
    let sites = region.sites();
    let mut means: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|r| {
            compensated_sum(sites.iter().map(|s| site_value(spec, r, s.coords()))) / sites.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    let raw: Vec<f64> = order
        .iter()
        .map(|&i| if t_grid[i] == 0.0 { 0.0 } else { max_window_mass(&means, t_grid[i]) })
        .collect();
    let fitted = isotonic_nondecreasing(&raw);
    let mut nu_hat = vec![0.0; t_grid.len()];
    for (k, &i) in order.iter().enumerate() {
        nu_hat[i] = if t_grid[i] == 0.0 { 0.0 } else { fitted[k].clamp(0.0, 1.0) };
    }
    let eps = ((2.0f64 / 0.05).ln() / (2.0 * trials as f64)).sqrt();
    Ok(ModulusEstimate { t_grid: t_grid.to_vec(), nu_hat, trials, ci_halfwidth: 2.0 * eps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dims;

    fn line(radius: u64) -> Region {
        Region::Cube(Cube::at_origin(Dims::new(1, 1, 1).unwrap(), radius))
    }

    fn explicit(values: &[f64]) -> FieldSample {
        let sites = (0..values.len() as i64).map(|i| Site::new(vec![i])).collect();
        FieldSample::from_values(Region::from_sites(sites).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_order_free() {
        let spec = DisorderSpec::new(Law::Gaussian { mean: 0.0, stdev: 1.0 }, 11).unwrap();
        let a = sample_field(&spec, &line(5), 3);
        let b = sample_field(&spec, &line(5), 3);
        assert_eq!(a.values(), b.values());
        // the same site inside a different region gets the same value
        let other = Region::from_sites(vec![Site::new(vec![2]), Site::new(vec![40])]).unwrap();
        let c = sample_field(&spec, &other, 3);
        assert_eq!(c.value_at(&[2]), a.value_at(&[2]));
        assert_ne!(sample_field(&spec, &line(5), 4).values(), a.values());
    }

    #[test]
    fn uniform_and_bernoulli_marginals() {
        let region = line(4999);
        let u = DisorderSpec::new(Law::Uniform { low: 0.0, high: 1.0 }, 5).unwrap();
        let f = sample_field(&u, &region, 0);
        assert!(f.len() >= 10_000 - 1);
        let mean = f.values().iter().sum::<f64>() / f.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");

        let b = DisorderSpec::new(Law::Bernoulli { p: 0.5, value: 1.0 }, 5).unwrap();
        let f = sample_field(&b, &region, 0);
        let ones = f.values().iter().filter(|&&v| v == 1.0).count() as f64 / f.len() as f64;
        assert!((0.47..=0.53).contains(&ones), "{ones}");
        assert!(f.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&explicit(&[1.0, 2.0, 3.0]));
        assert_eq!(d.mean, 2.0);
        assert_eq!(d.fluct, vec![-1.0, 0.0, 1.0]);

        let d = decompose(&explicit(&[4.25; 6]));
        assert_eq!(d.mean, 4.25);
        assert!(d.fluct.iter().all(|&e| e == 0.0));

        let d = decompose(&explicit(&[0.0, 1.0]));
        assert_eq!(d.mean, 0.5);
        assert_eq!(d.fluct, vec![-0.5, 0.5]);
    }

    #[test]
    fn resampling_keeps_fluctuations() {
        let spec = DisorderSpec::new(Law::Gaussian { mean: 1.0, stdev: 2.0 }, 9).unwrap();
        let f = sample_field(&spec, &line(3), 0);
        let g = resample_mean_conditional(&f, &spec, 17).unwrap();
        let (df, dg) = (decompose(&f), decompose(&g));
        for (a, b) in df.fluct.iter().zip(&dg.fluct) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_ne!(df.mean, dg.mean);
    }

    #[test]
    fn resampling_single_site_is_fresh_draw() {
        let spec = DisorderSpec::new(Law::Gaussian { mean: 0.0, stdev: 1.0 }, 9).unwrap();
        let f = sample_field(&spec, &line(0), 0);
        assert_eq!(decompose(&f).fluct, vec![0.0]);
        let g = resample_mean_conditional(&f, &spec, 1).unwrap();
        assert_ne!(g.values()[0], f.values()[0]);
    }

    #[test]
    fn resampling_rejects_non_gaussian() {
        let spec = DisorderSpec::new(Law::Uniform { low: 0.0, high: 1.0 }, 9).unwrap();
        let f = sample_field(&spec, &line(2), 0);
        assert!(matches!(
            resample_mean_conditional(&f, &spec, 0),
            Err(Error::ConditionalIndependenceUnavailable { law: "uniform" })
        ));
    }

    #[test]
    fn modulus_edge_values() {
        let spec = DisorderSpec::new(Law::Uniform { low: 0.0, high: 1.0 }, 2).unwrap();
        let est = estimate_modulus(&spec, &line(2), &[0.0, 0.05, 10.0], 2000).unwrap();
        assert_eq!(est.nu_hat[0], 0.0);
        assert_eq!(est.nu_hat[2], 1.0);
        assert!(est.nu_hat[1] > 0.0 && est.nu_hat[1] < 1.0);
        assert!(estimate_modulus(&spec, &line(2), &[0.1], 999).is_err());
    }

    #[test]
    fn bernoulli_modulus_has_atoms() {
        // with one site the mean is 0 or 1 with probability 1/2 each
        let spec = DisorderSpec::new(Law::Bernoulli { p: 0.5, value: 1.0 }, 2).unwrap();
        let est = estimate_modulus(&spec, &line(0), &[1e-9, 1e-3], 4000).unwrap();
        assert!(est.nu_hat[0] > 0.4, "{:?}", est.nu_hat);
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_nondecreasing(&[0.1, 0.2]), vec![0.1, 0.2]);
    }

    #[test]
    fn law_validation() {
        assert!(Law::Gaussian { mean: 0.0, stdev: 0.0 }.validate().is_err());
        assert!(Law::Uniform { low: 1.0, high: 1.0 }.validate().is_err());
        assert!(Law::Bernoulli { p: 1.0, value: 1.0 }.validate().is_err());
        assert!(Law::Bernoulli { p: 0.5, value: 0.0 }.validate().is_err());
        assert!(Law::Uniform { low: 0.0, high: 1.0 }.is_nonnegative());
        assert!(!Law::Gaussian { mean: 5.0, stdev: 1.0 }.is_nonnegative());
    }
}
