use serde::{Deserialize, Serialize};

use crate::geometry::{max_norm, Cube, Site};
use crate::spectral::SpectralDecomposition;

/// `Q_I(x, base) = Σ_{E_j ∈ I} |Φ_j(x)| |Φ_j(base)|` for every site `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub interval: (f64, f64),
    pub base: Site,
    /// Indexed like the cube's sites.
    pub values: Vec<f64>,
}

impl CorrelatorTable {
    pub fn get(&self, cube: &Cube, x: &Site) -> Option<f64> {
        cube.index_of(x).map(|i| self.values[i])
    }
}

/// `Q_I(x, y)` for site indices `x`, `y`.
pub fn correlator(decomp: &SpectralDecomposition, interval: (f64, f64), x: usize, y: usize) -> f64 {
    let v = decomp.eigenvectors();
    decomp
        .indices_in(interval.0, interval.1)
        .map(|j| v[(x, j)].abs() * v[(y, j)].abs())
        .sum()
}

pub fn correlator_table(decomp: &SpectralDecomposition, cube: &Cube, interval: (f64, f64), base: &Site) -> Option<CorrelatorTable> {
    let b = cube.index_of(base)?;
    let values = (0..decomp.dim()).map(|x| correlator(decomp, interval, x, b)).collect();
    Some(CorrelatorTable { interval, base: base.clone(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicalMoment {
    /// `Σ_x |x - u|^s max_{y ∈ K} Q_I(x, y)`, with `u` the cube center.
    pub moment: f64,
    /// `#{E_j ∈ I}`, the trace of the spectral projection.
    pub trace: usize,
}

/// Correlator surrogate for `‖ |X|^{s/2} f(H) P_I(H) 1_K ‖`.
pub fn dynamical_moment(decomp: &SpectralDecomposition, cube: &Cube, interval: (f64, f64), s: f64, base: &[usize]) -> DynamicalMoment {
    let trace = decomp.count_in(interval.0, interval.1);
    let u = cube.center();
    let moment = (0..decomp.dim())
        .map(|x| {
            let r = max_norm(cube.site_at(x).coords(), u.coords()) as f64;
            let q = base.iter().map(|&y| correlator(decomp, interval, x, y)).fold(0.0, f64::max);
            r.powf(s) * q
        })
        .sum();
    DynamicalMoment { moment, trace }
}
