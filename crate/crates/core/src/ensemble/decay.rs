use serde::{Deserialize, Serialize};

use crate::geometry::{max_norm, sym_distance, Cube, Site};
use crate::spectral::SpectralDecomposition;

use super::stats::linear_fit;

/// Which eigenpairs to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSelection {
    /// All eigenvalues in `[lo, hi]`.
    Interval(f64, f64),
    /// The `k` lowest eigenvalues.
    Lowest(usize),
}

impl EigenSelection {
    pub fn indices(&self, decomp: &SpectralDecomposition) -> std::ops::Range<usize> {
        match *self {
            EigenSelection::Interval(lo, hi) => decomp.indices_in(lo, hi),
            EigenSelection::Lowest(k) => 0..k.min(decomp.dim()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Smallest distance included in the regression.
    pub min_distance: u64,
    /// Shells whose envelope falls below this fraction of the peak are dropped.
    pub noise_floor: f64,
    pub min_points: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { min_distance: 0, noise_floor: 1e-12, min_points: 4 }
    }
}

/// Regression of `ln max_{d_S(x, c) = r} |Φ(x)|` against `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub eigen_index: usize,
    pub energy: f64,
    pub center: Site,
    pub pairs: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Amplitude falls by less than a factor 10 across the fitted range.
    pub delocalized: bool,
}

impl DecayFit {
    /// Fitted mass `m̂ = -slope`.
    pub fn mass(&self) -> f64 {
        -self.slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecayOutcome {
    Fit(DecayFit),
    Skipped { eigen_index: usize, reason: String },
}

impl DecayOutcome {
    pub fn fit(&self) -> Option<&DecayFit> {
        match self {
            DecayOutcome::Fit(f) => Some(f),
            DecayOutcome::Skipped { .. } => None,
        }
    }
}

/// Argmax sites of `|Φ_j|` for every eigenvector; near-ties (within 1e-12
/// relative) go to the site closest to the cube center, then the
/// lexicographically smallest.
pub fn centers_of_localization(decomp: &SpectralDecomposition, cube: &Cube) -> Vec<Site> {
    (0..decomp.dim()).map(|j| center_of(decomp, cube, j)).collect()
}

pub(crate) fn center_of(decomp: &SpectralDecomposition, cube: &Cube, j: usize) -> Site {
    let v = decomp.vector(j);
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let u = cube.center();
    // canonical order is lexicographic, so the first minimum wins ties
    let best = (0..v.len())
        .filter(|&i| v[i].abs() >= peak * (1.0 - 1e-12))
        .min_by_key(|&i| max_norm(cube.site_at(i).coords(), u.coords()))
        .expect("nonempty vector");
    cube.site_at(best)
}

/// Fits the decay of an eigenvector's shell envelope away from `center`.
pub fn fit_profile(cube: &Cube, values: &[f64], center: &Site, options: &DecayOptions) -> Result<(Vec<(f64, f64)>, super::stats::LinearFit), String> {
    let d = cube.dims().d;
    let mut envelope: std::collections::BTreeMap<u64, f64> = Default::default();
    for (i, value) in values.iter().enumerate() {
        let r = sym_distance(&cube.site_at(i), center, d);
        let e = envelope.entry(r).or_insert(0.0);
        *e = e.max(value.abs());
    }
    let peak = envelope.values().fold(0.0f64, |m, &x| m.max(x));
    let pairs: Vec<(f64, f64)> = envelope
        .into_iter()
        .filter(|&(r, e)| r >= options.min_distance && e > options.noise_floor * peak)
        .map(|(r, e)| (r as f64, e.ln()))
        .collect();
    if pairs.len() < options.min_points {
        return Err(format!("only {} distances above the noise floor", pairs.len()));
    }
    let fit = linear_fit(&pairs).ok_or_else(|| "degenerate distances".to_string())?;
    if !fit.slope.is_finite() {
        return Err("non-finite slope".into());
    }
    Ok((pairs, fit))
}

/// Decay fits for the selected eigenpairs of one realization.
pub fn decay_fits(decomp: &SpectralDecomposition, cube: &Cube, selection: EigenSelection, options: &DecayOptions) -> Vec<DecayOutcome> {
    selection
        .indices(decomp)
        .map(|j| {
            let center = center_of(decomp, cube, j);
            let values: Vec<f64> = decomp.vector(j).iter().copied().collect();
            match fit_profile(cube, &values, &center, options) {
                Ok((pairs, fit)) => {
                    let span = pairs.last().unwrap().0 - pairs[0].0;
                    DecayOutcome::Fit(DecayFit {
                        eigen_index: j,
                        energy: decomp.eigenvalues()[j],
                        center,
                        delocalized: -fit.slope * span < std::f64::consts::LN_10,
                        pairs,
                        slope: fit.slope,
                        intercept: fit.intercept,
                        r_squared: fit.r_squared,
                    })
                }
                Err(reason) => DecayOutcome::Skipped { eigen_index: j, reason },
            }
        })
        .collect()
}
