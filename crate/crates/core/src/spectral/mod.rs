//! Eigen-decompositions, Green functions and resolvent identities.

mod lanczos;
mod solve;

use nalgebra::{DMatrix, DVectorView};
use serde::{Deserialize, Serialize};

use crate::geometry::{boundary_edge_pairs, internal_boundary, Site, DEFAULT_SITE_CAP};
use crate::model::{HamiltonianMatrix, DENSE_LIMIT};
use crate::{Error, Result};

/// Below this dimension [`lowest_eigenvalue`] uses a dense solve.
const LANCZOS_THRESHOLD: usize = 256;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns,
/// indexed like the cube's site enumeration.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, j: usize) -> DVectorView<'_, f64> {
        self.eigenvectors.column(j)
    }

    /// `G(x, y; E)` by eigenfunction expansion, sites given by index.
    pub fn green(&self, x: usize, y: usize, energy: f64) -> f64 {
        let v = &self.eigenvectors;
        self.eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &lambda)| v[(x, j)] * v[(y, j)] / (lambda - energy))
            .sum()
    }

    /// Indices `j` with `lo <= λ_j <= hi`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.eigenvalues.partition_point(|&l| l < lo);
        let end = self.eigenvalues.partition_point(|&l| l <= hi);
        start..end.max(start)
    }

    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        self.indices_in(lo, hi).len()
    }
}

/// Full symmetric eigen-decomposition of a dense matrix, sorted ascending with
/// the sign of each eigenvector fixed (first significant component positive).
pub fn diagonalize_dense(m: DMatrix<f64>) -> Option<SpectralDecomposition> {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(m, f64::EPSILON, 1000 * n.max(1))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(j);
        let sign = col
            .iter()
            .find(|c| c.abs() > 1e-10)
            .map_or(1.0, |c| c.signum());
        eigenvectors.set_column(k, &(col * sign));
    }
    Some(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Full decomposition of a cube Hamiltonian, with residuals verified.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    let failed = || Error::EigensolveFailed { fingerprint: h.fingerprint() };
    let decomp = diagonalize_dense(h.to_dense()?).ok_or_else(failed)?;
    let scale = h.max_row_norm().max(1.0);
    let n = h.dim();
    let mut hv = vec![0.0; n];
    for j in 0..n {
        let v: Vec<f64> = decomp.vector(j).iter().copied().collect();
        h.apply(&v, &mut hv);
        let lambda = decomp.eigenvalues[j];
        let residual = hv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if !(residual <= 1e-9 * (1.0 + lambda.abs()) * scale) {
            return Err(failed());
        }
    }
    Ok(decomp)
}

/// Ascending eigenvalues only.
pub fn eigenvalues(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = h.to_dense()?.symmetric_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolveFailed { fingerprint: h.fingerprint() });
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Bottom of the spectrum; Lanczos above a small dimension.
pub fn lowest_eigenvalue(h: &HamiltonianMatrix) -> Result<f64> {
    if h.dim() <= LANCZOS_THRESHOLD {
        return Ok(eigenvalues(h)?[0]);
    }
    lanczos::lowest(h, 1e-10)
}

/// `min_j |λ_j - E|` over an ascending spectrum.
pub fn dist_to_sorted(spectrum: &[f64], energy: f64) -> f64 {
    let i = spectrum.partition_point(|&l| l < energy);
    let above = spectrum.get(i).map(|l| l - energy);
    let below = i.checked_sub(1).map(|k| energy - spectrum[k]);
    above.into_iter().chain(below).fold(f64::INFINITY, f64::min)
}

pub fn dist_to_spectrum(decomp: &SpectralDecomposition, energy: f64) -> f64 {
    dist_to_sorted(&decomp.eigenvalues, energy)
}

/// Energies closer than this to the spectrum are refused by the solvers.
pub fn resonance_floor(h: &HamiltonianMatrix) -> f64 {
    1e-12 * h.max_row_norm().max(1.0)
}

enum Factor {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Iterative,
}

/// Solver for columns of `(H - E)^{-1}`.
pub struct Resolvent<'a> {
    h: &'a HamiltonianMatrix,
    energy: f64,
    factor: Factor,
}

impl<'a> Resolvent<'a> {
    /// Checks the distance to the spectrum first when the matrix is small
    /// enough to diagonalize; large matrices rely on the residual check.
    pub fn new(h: &'a HamiltonianMatrix, energy: f64) -> Result<Self> {
        if h.dim() <= DENSE_LIMIT {
            let spectrum = eigenvalues(h)?;
            Self::with_spectrum(h, &spectrum, energy)
        } else {
            Ok(Resolvent { h, energy, factor: Factor::Iterative })
        }
    }

    pub fn with_spectrum(h: &'a HamiltonianMatrix, spectrum: &[f64], energy: f64) -> Result<Self> {
        let distance = dist_to_sorted(spectrum, energy);
        let floor = resonance_floor(h);
        if !(distance >= floor) {
            return Err(Error::ResonantEnergy { energy, distance, floor });
        }
        let factor = if h.dim() <= DENSE_LIMIT {
            let mut m = h.to_dense()?;
            for i in 0..h.dim() {
                m[(i, i)] -= energy;
            }
            Factor::Dense(m.lu())
        } else {
            Factor::Iterative
        };
        Ok(Resolvent { h, energy, factor })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Column `y` of the resolvent, i.e. `G(·, y)`; residual checked.
    pub fn column(&self, y: usize) -> Result<Vec<f64>> {
        let n = self.h.dim();
        let mut rhs = vec![0.0; n];
        rhs[y] = 1.0;
        let g = match &self.factor {
            Factor::Dense(lu) => {
                let b = nalgebra::DVector::from_vec(rhs.clone());
                lu.solve(&b)
                    .ok_or(Error::ResonantEnergy { energy: self.energy, distance: 0.0, floor: resonance_floor(self.h) })?
                    .iter()
                    .copied()
                    .collect()
            }
            Factor::Iterative => {
                let (lo, _) = self.h.gershgorin();
                if self.energy < lo {
                    solve::pcg_shifted(self.h, self.energy, &rhs, 1e-12)?
                } else {
                    solve::cgnr_shifted(self.h, self.energy, &rhs, 1e-12)?
                }
            }
        };
        let residual = self.residual(&g, y);
        if !(residual <= 1e-9) {
            return Err(Error::NoConvergence { residual });
        }
        Ok(g)
    }

    /// `‖(H - E) g - e_y‖_2`.
    pub fn residual(&self, g: &[f64], y: usize) -> f64 {
        let mut hg = vec![0.0; g.len()];
        self.h.apply(g, &mut hg);
        hg.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (a, b))| {
                let r = a - self.energy * b - if i == y { 1.0 } else { 0.0 };
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }

    /// The whole inverse, column by column (dense matrices only).
    pub fn full(&self) -> Result<DMatrix<f64>> {
        match &self.factor {
            Factor::Dense(lu) => lu.try_inverse().ok_or(Error::ResonantEnergy {
                energy: self.energy,
                distance: 0.0,
                floor: resonance_floor(self.h),
            }),
            Factor::Iterative => Err(Error::DenseTooLarge { dim: self.h.dim(), limit: DENSE_LIMIT }),
        }
    }
}

/// Requested entries `G(x, y; E)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenFunctionSlice {
    pub energy: f64,
    pub entries: Vec<(Site, Site, f64)>,
}

impl GreenFunctionSlice {
    /// Looks up `(x, y)` or, by symmetry, `(y, x)`.
    pub fn get(&self, x: &Site, y: &Site) -> Option<f64> {
        self.entries
            .iter()
            .find(|(a, b, _)| (a == x && b == y) || (a == y && b == x))
            .map(|e| e.2)
    }
}

/// Solves one column per distinct second site.
pub fn green_entries(h: &HamiltonianMatrix, energy: f64, pairs: &[(Site, Site)]) -> Result<GreenFunctionSlice> {
    let cube = h.cube();
    let index = |s: &Site| {
        cube.index_of(s)
            .ok_or_else(|| Error::InvalidParameter(format!("site {:?} is outside the cube", s.coords())))
    };
    let resolvent = Resolvent::new(h, energy)?;
    let mut columns: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    let mut entries = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let (ix, iy) = (index(x)?, index(y)?);
        let column = match columns.entry(iy) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => e.insert(resolvent.column(iy)?),
        };
        entries.push((x.clone(), y.clone(), column[ix]));
    }
    Ok(GreenFunctionSlice { energy, entries })
}

/// Outcome of checking `|G(x,y)| <= 2/η · exp(-η |x-y| / 12D)` on all pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombesThomasReport {
    pub eta: f64,
    pub distance: f64,
    /// Max-norm distance in the exponent.
    pub holds: bool,
    pub worst_pair: (Site, Site),
    pub worst_ratio: f64,
    /// ℓ¹ distance in the exponent.
    pub holds_l1: bool,
    pub worst_ratio_l1: f64,
}

pub fn combes_thomas_check(h: &HamiltonianMatrix, energy: f64, eta: f64) -> Result<CombesThomasReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {eta}")));
    }
    let spectrum = eigenvalues(h)?;
    let distance = dist_to_sorted(&spectrum, energy);
    if distance < eta {
        return Err(Error::EtaTooLarge { eta, distance });
    }
    let g = Resolvent::with_spectrum(h, &spectrum, energy)?.full()?;
    let cube = h.cube();
    let rate = eta / (12.0 * cube.dims().width() as f64);
    let sites: Vec<Site> = (0..h.dim()).map(|i| cube.site_at(i)).collect();
    let mut worst = (0.0f64, 0usize, 0usize);
    let mut worst_l1 = 0.0f64;
    for i in 0..h.dim() {
        for j in 0..h.dim() {
            let value = g[(i, j)].abs();
            let ratio = value / (2.0 / eta * (-rate * sites[i].max_dist(&sites[j]) as f64).exp());
            let ratio_l1 = value / (2.0 / eta * (-rate * sites[i].l1_dist(&sites[j]) as f64).exp());
            if ratio > worst.0 {
                worst = (ratio, i, j);
            }
            worst_l1 = worst_l1.max(ratio_l1);
        }
    }
    Ok(CombesThomasReport {
        eta,
        distance,
        holds: worst.0 <= 1.0,
        worst_pair: (sites[worst.1].clone(), sites[worst.2].clone()),
        worst_ratio: worst.0,
        holds_l1: worst_l1 <= 1.0,
        worst_ratio_l1: worst_l1,
    })
}

/// Both sides of the geometric resolvent identity for one `(x, y)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriReport {
    /// `G_big(x, y)`.
    pub direct: f64,
    /// `Σ_{(v,v')} G_sub(x, v) G_big(v', y)` over boundary edges of the sub-cube.
    pub expansion: f64,
    pub residual: f64,
    pub edge_pairs: usize,
    pub inner_boundary_size: usize,
    /// `#edges · max_v |G_sub(x,v)| · max_v' |G_big(v',y)|`, always valid.
    pub bound_edges: f64,
    /// `|∂⁻ C_sub| · max_{v ∈ C_sub} |G_sub(x,v)| · max_{v' ∈ ∂⁺} |G_big(v',y)|`.
    pub bound_inner_boundary: f64,
}

impl GriReport {
    pub fn identity_holds(&self, tol: f64) -> bool {
        self.residual <= tol * (1.0 + self.direct.abs())
    }

    pub fn edge_inequality_holds(&self) -> bool {
        self.direct.abs() <= self.bound_edges * (1.0 + 1e-10)
    }

    pub fn boundary_inequality_holds(&self) -> bool {
        self.direct.abs() <= self.bound_inner_boundary * (1.0 + 1e-10)
    }
}

/// Checks `G_big(x,y) = Σ G_sub(x,v) G_big(v',y)` for `x` in the sub-cube and
/// `y` outside it. `sub` must be the restriction of `big` to its cube.
pub fn verify_gri(
    big: &HamiltonianMatrix,
    sub: &HamiltonianMatrix,
    energy: f64,
    x: &Site,
    y: &Site,
) -> Result<GriReport> {
    let (big_cube, sub_cube) = (big.cube(), sub.cube());
    if !big_cube.contains_cube(sub_cube) {
        return Err(Error::InvalidParameter("sub-cube is not contained in the big cube".into()));
    }
    let ix = sub_cube
        .index_of(x)
        .ok_or_else(|| Error::InvalidParameter("x must lie in the sub-cube".into()))?;
    if sub_cube.contains(y) || !big_cube.contains(y) {
        return Err(Error::InvalidParameter("y must lie in the big cube but outside the sub-cube".into()));
    }
    for i in 0..sub.dim() {
        let j = big_cube.index_of(&sub_cube.site_at(i)).expect("contained");
        if sub.diagonal()[i] != big.diagonal()[j] {
            return Err(Error::InvalidParameter("sub-cube operator is not a restriction of the big one".into()));
        }
    }
    let iy = big_cube.index_of(y).expect("checked");
    let g_big = Resolvent::new(big, energy)?.column(iy)?;
    let g_sub = Resolvent::new(sub, energy)?.column(ix)?;

    let mut expansion = 0.0;
    let mut edges = 0usize;
    let mut max_sub_edge = 0.0f64;
    let mut max_big_outer = 0.0f64;
    for (v, w) in boundary_edge_pairs(sub_cube, DEFAULT_SITE_CAP)? {
        let Some(iw) = big_cube.index_of(&w) else { continue };
        let iv = sub_cube.index_of(&v).expect("edge starts inside");
        expansion += g_sub[iv] * g_big[iw];
        edges += 1;
        max_sub_edge = max_sub_edge.max(g_sub[iv].abs());
        max_big_outer = max_big_outer.max(g_big[iw].abs());
    }
    let inner = internal_boundary(sub_cube, DEFAULT_SITE_CAP)?.len();
    let max_sub_all = g_sub.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let direct = g_big[big_cube.index_of(x).expect("contained")];
    Ok(GriReport {
        direct,
        expansion,
        residual: (direct - expansion).abs(),
        edge_pairs: edges,
        inner_boundary_size: inner,
        bound_edges: edges as f64 * max_sub_edge * max_big_outer,
        bound_inner_boundary: inner as f64 * max_sub_all * max_big_outer,
    })
}
