//! Multi-scale analysis predicates: non-singularity, resonance, tunnelling,
//! singular-cube counting, initial-scale constants and the radial descent
//! bound for sub-harmonic functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::disorder::FieldSample;
use crate::geometry::{max_norm, sym_distance, Annulus, Cube, Interactivity, ScaleSequence, Site, classify_pi_fi};
use crate::model::{assemble_hamiltonian, HamiltonianMatrix, InteractionSpec};
use crate::spectral::{diagonalize, dist_to_spectrum, SpectralDecomposition};
use crate::{Error, Result};

/// Scale exponent `α` in `L_{k+1} = ⌊L_k^α⌋ + 1`.
pub const ALPHA: f64 = 1.5;
/// Resonance exponent `β` in `dist(E, σ) ≤ e^{-L^β}`.
pub const BETA: f64 = 0.5;

/// Inner exponent of `γ(m, L, n) = m (1 + L^{-e})^{N-n+1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaExponent {
    #[default]
    Quarter,
    Eighth,
}

impl GammaExponent {
    pub fn value(self) -> f64 {
        match self {
            GammaExponent::Quarter => 0.25,
            GammaExponent::Eighth => 0.125,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsaParams {
    pub p: f64,
    pub m: f64,
    pub l0: u64,
    pub e_star: f64,
    pub gamma_exponent: GammaExponent,
}

impl MsaParams {
    pub fn new(p: f64, m: f64, l0: u64, e_star: f64) -> Result<Self> {
        let params = MsaParams { p, m, l0, e_star, gamma_exponent: GammaExponent::Quarter };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be positive, got {}", self.p)));
        }
        if !(self.m >= 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must be nonnegative, got {}", self.m)));
        }
        if self.l0 < 3 {
            return Err(Error::InvalidParameter(format!("L0 must be at least 3, got {}", self.l0)));
        }
        if !(self.e_star > 0.0 && self.e_star.is_finite()) {
            return Err(Error::InvalidParameter(format!("E* must be positive, got {}", self.e_star)));
        }
        Ok(())
    }

    /// `p > N d α / (2 - α)`, needed when comparing against the DS bound.
    pub fn p_admissible(&self, n_max: usize, d: usize) -> bool {
        self.p > (n_max * d) as f64 * ALPHA / (2.0 - ALPHA)
    }

    pub fn with_m(&self, m: f64) -> Self {
        MsaParams { m, ..self.clone() }
    }
}

pub fn gamma(m: f64, l: u64, n: usize, n_max: usize, exponent: GammaExponent) -> f64 {
    debug_assert!(l >= 1 && n >= 1 && n <= n_max);
    m * (1.0 + (l as f64).powf(-exponent.value())).powi((n_max - n + 1) as i32)
}

/// `⌊L^{1/α}⌋ = ⌊L^{2/3}⌋`, computed exactly as the largest `r` with `r³ ≤ L²`.
pub fn core_radius(l: u64) -> u64 {
    let target = (l as u128) * (l as u128);
    let mut r = (target as f64).cbrt() as u128;
    while r * r * r > target {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= target {
        r += 1;
    }
    r as u64
}

/// `e^{-L^β}` with `β = 1/2`.
pub fn resonance_width(l: u64) -> f64 {
    (-(l as f64).sqrt()).exp()
}

pub fn is_resonant(decomp: &SpectralDecomposition, energy: f64, l: u64) -> bool {
    dist_to_spectrum(decomp, energy) <= resonance_width(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub cube: Cube,
    pub energy: f64,
    pub l: u64,
    pub n: usize,
    pub is_ns: bool,
    /// Set when the cube was classified singular because `E` is resonant.
    pub resonant: bool,
    /// `max |G(x, y)|` over core `x` and boundary `y`; absent for resonant cubes.
    pub observed_max: Option<f64>,
    pub threshold: f64,
}

/// Core-to-boundary index sets of a cube.
fn core_and_boundary(cube: &Cube) -> (Vec<usize>, Vec<usize>) {
    let width = cube.dims().width();
    let l = cube.radius() as i64;
    let rc = core_radius(cube.radius()) as i64;
    let mut offsets = vec![0i64; width];
    let (mut core, mut boundary) = (Vec::new(), Vec::new());
    let dim = cube.volume().expect("cube already assembled") as usize;
    for i in 0..dim {
        cube.write_offsets(i, &mut offsets);
        if offsets.iter().all(|&o| (o - l).abs() <= rc) {
            core.push(i);
        }
        if l > 0 && offsets.iter().any(|&o| o == 0 || o == 2 * l) {
            boundary.push(i);
        }
    }
    (core, boundary)
}

/// `(E, m)`-non-singularity of the cube carried by `h`, with resonant energies
/// forced singular.
pub fn is_ns(h: &HamiltonianMatrix, decomp: &SpectralDecomposition, energy: f64, params: &MsaParams) -> SingularityVerdict {
    let cube = h.cube();
    let dims = cube.dims();
    let l = cube.radius();
    let threshold = (-gamma(params.m, l.max(1), dims.n, dims.n_max, params.gamma_exponent) * l as f64).exp();
    let mut verdict = SingularityVerdict {
        cube: cube.clone(),
        energy,
        l,
        n: dims.n,
        is_ns: false,
        resonant: true,
        observed_max: None,
        threshold,
    };
    if is_resonant(decomp, energy, l) {
        return verdict;
    }
    verdict.resonant = false;
    let (core, boundary) = core_and_boundary(cube);
    let v = decomp.eigenvectors();
    let k = decomp.dim();
    let weights: Vec<f64> = decomp.eigenvalues().iter().map(|lambda| 1.0 / (lambda - energy)).collect();
    let left = DMatrix::from_fn(core.len(), k, |a, j| v[(core[a], j)] * weights[j]);
    let right = DMatrix::from_fn(k, boundary.len(), |j, b| v[(boundary[b], j)]);
    let g = left * right;
    let observed = g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    verdict.observed_max = Some(observed);
    verdict.is_ns = observed <= threshold;
    verdict
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConstants {
    pub m: f64,
    pub e_star: f64,
    pub c: f64,
}

/// `m = (14 N^N + 6 N d) / √L0`, `E* = 12 N d · 2^{N+1} m`, `C = E* √L0`.
pub fn initial_constants(n_max: usize, d: usize, l0: u64) -> Result<InitialConstants> {
    if l0 < 3 {
        return Err(Error::InvalidParameter(format!("L0 must be at least 3, got {l0}")));
    }
    let nn = n_max as f64;
    let nd = (n_max * d) as f64;
    let base = 14.0 * nn.powi(n_max as i32) + 6.0 * nd;
    let lift = 12.0 * nd * 2f64.powi(n_max as i32 + 1);
    let m = base / (l0 as f64).sqrt();
    Ok(InitialConstants { m, e_star: lift * m, c: lift * base })
}

/// `L^{-p 2^{N-n+1}}`.
pub fn ds_bound(l: u64, p: f64, n: usize, n_max: usize) -> f64 {
    (l as f64).powf(-p * 2f64.powi((n_max - n + 1) as i32))
}

/// `L^{-2p}`, the form used by the intermediate probability lemmas.
pub fn ds_bound_two_p(l: u64, p: f64) -> f64 {
    (l as f64).powf(-2.0 * p)
}

/// Grid over `[lo, hi]` with step a quarter of the resonance width at `L`,
/// both endpoints included.
pub fn energy_grid(lo: f64, hi: f64, l: u64) -> Vec<f64> {
    if !(hi >= lo) {
        return Vec::new();
    }
    let step = resonance_width(l) / 4.0;
    let count = ((hi - lo) / step).ceil() as usize;
    let mut grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    grid.push(hi);
    grid
}

/// Centers of all radius-`l_sub` cubes contained in `big`, in canonical order.
pub fn subcube_centers(big: &Cube, l_sub: u64) -> Vec<Site> {
    if l_sub > big.radius() {
        return Vec::new();
    }
    let reach = big.radius() - l_sub;
    let inner = Cube::new(big.dims(), big.center().clone(), reach).expect("same dims");
    let count = inner.volume().expect("smaller than an assembled cube") as usize;
    (0..count).map(|i| inner.site_at(i)).collect()
}

/// Sub-cube Hamiltonians with their decompositions, one per contained center.
fn decomposed_subcubes(
    big: &Cube,
    field: &FieldSample,
    interaction: &InteractionSpec,
    l_sub: u64,
) -> Result<Vec<(HamiltonianMatrix, SpectralDecomposition)>> {
    subcube_centers(big, l_sub)
        .into_iter()
        .map(|c| {
            let cube = big.with_center(c, l_sub)?;
            let h = assemble_hamiltonian(&cube, field, interaction, crate::geometry::DEFAULT_SITE_CAP)?;
            let decomp = diagonalize(&h)?;
            Ok((h, decomp))
        })
        .collect()
}

/// A grid energy with two far-apart singular sub-cubes, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnellingWitness {
    pub energy: f64,
    pub first: Site,
    pub second: Site,
}

/// Searches the grid for an energy at which two sub-cubes of radius `L_k`
/// at `d_S >= 2 N L_k` are both singular.
pub fn tunnelling_witness(
    cube: &Cube,
    field: &FieldSample,
    interaction: &InteractionSpec,
    energies: &[f64],
    k: usize,
    params: &MsaParams,
) -> Result<Option<TunnellingWitness>> {
    let l_sub = ScaleSequence::new(params.l0)?.scale_at(k)?;
    if l_sub >= cube.radius() {
        return Err(Error::InvalidParameter(format!(
            "sub-scale L_{k} = {l_sub} must be below the cube radius {}",
            cube.radius()
        )));
    }
    let dims = cube.dims();
    let separation = 2 * dims.n_max as u64 * l_sub;
    let subs = decomposed_subcubes(cube, field, interaction, l_sub)?;
    for &energy in energies {
        let singular: Vec<&Site> = subs
            .iter()
            .filter(|(h, decomp)| !is_ns(h, decomp, energy, params).is_ns)
            .map(|(h, _)| h.cube().center())
            .collect();
        for (i, a) in singular.iter().enumerate() {
            for b in &singular[i + 1..] {
                if sym_distance(a, b, dims.d) >= separation {
                    return Ok(Some(TunnellingWitness { energy, first: (*a).clone(), second: (*b).clone() }));
                }
            }
        }
    }
    Ok(None)
}

pub fn is_tunnelling(
    cube: &Cube,
    field: &FieldSample,
    interaction: &InteractionSpec,
    energies: &[f64],
    k: usize,
    params: &MsaParams,
) -> Result<bool> {
    Ok(tunnelling_witness(cube, field, interaction, energies, k, params)?.is_some())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CubeKind {
    Pi,
    Fi,
}

impl CubeKind {
    pub fn matches(self, class: &Interactivity) -> bool {
        class.is_partial() == (self == CubeKind::Pi)
    }
}

/// Largest pairwise `d_S >= separation` family found among `sites`; exact
/// whenever the answer is at most four.
pub fn max_separated_family(sites: &[Site], d: usize, separation: u64) -> Vec<Site> {
    let far = |a: &Site, b: &Site| sym_distance(a, b, d) >= separation;
    let mut best: Vec<usize> = Vec::new();
    for (i, s) in sites.iter().enumerate() {
        if best.iter().all(|&j| far(&sites[j], s)) {
            best.push(i);
        }
    }
    // try to beat the greedy packing by one, up to a family of five
    while best.len() < 5 {
        let target = best.len() + 1;
        let mut chosen = Vec::with_capacity(target);
        if extend_family(sites, &far, 0, target, &mut chosen) {
            best = chosen;
        } else {
            break;
        }
    }
    best.into_iter().map(|i| sites[i].clone()).collect()
}

fn extend_family(
    sites: &[Site],
    far: &impl Fn(&Site, &Site) -> bool,
    start: usize,
    target: usize,
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == target {
        return true;
    }
    if sites.len() - start < target - chosen.len() {
        return false;
    }
    for i in start..sites.len() {
        if chosen.iter().all(|&j| far(&sites[j], &sites[i])) {
            chosen.push(i);
            if extend_family(sites, far, i + 1, target, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

/// Maximum number of pairwise `2 N L_sub`-distant singular sub-cubes of the
/// given kind inside `big`, all at the common energy `E`.
pub fn count_singular_cubes(
    big: &Cube,
    field: &FieldSample,
    interaction: &InteractionSpec,
    energy: f64,
    kind: CubeKind,
    l_sub: u64,
    params: &MsaParams,
) -> Result<usize> {
    if l_sub >= big.radius() {
        return Err(Error::InvalidParameter(format!(
            "sub-cube radius {l_sub} must be below the big cube radius {}",
            big.radius()
        )));
    }
    let dims = big.dims();
    let singular: Vec<Site> = decomposed_subcubes(big, field, interaction, l_sub)?
        .iter()
        .filter(|(h, _)| kind.matches(&classify_pi_fi(h.cube(), interaction.r0())))
        .filter(|(h, decomp)| !is_ns(h, decomp, energy, params).is_ns)
        .map(|(h, _)| h.cube().center().clone())
        .collect();
    Ok(max_separated_family(&singular, dims.d, 2 * dims.n_max as u64 * l_sub).len())
}

/// Exponent `⌊(L - r - W) / ℓ⌋ - 1` of the descent bound.
pub fn descent_exponent(l: u64, r: u64, ell: u64, w: u64) -> i64 {
    (l as i64 - r as i64 - w as i64).div_euclid(ell as i64) - 1
}

/// `q^{⌊(L - W)/ℓ⌋ - 1}`, the factor bounding `|f(u)|` by `max |f|`.
pub fn subharmonic_descent_bound(l: u64, ell: u64, q: f64, w: u64) -> f64 {
    q.powi(descent_exponent(l, 0, ell, w) as i32)
}

/// `q^{⌊(L - r - W)/ℓ⌋ - 1}`, the factor for `max_{C_r} |f|`.
pub fn subharmonic_descent_bound_at(l: u64, r: u64, ell: u64, q: f64, w: u64) -> f64 {
    q.powi(descent_exponent(l, r, ell, w) as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentViolation {
    pub radius: u64,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicReport {
    /// Sites where the sub-harmonic inequality fails.
    pub definition_violations: Vec<Site>,
    pub cover: Vec<Annulus>,
    pub cover_width: u64,
    /// The neighbourhood of `S` reaches the center, so no annulus cover exists.
    pub degenerate_cover: bool,
    pub radii_checked: Vec<u64>,
    pub conclusion_violations: Vec<DescentViolation>,
    /// `|f(u)| / (q^{⌊(L-W)/ℓ⌋-1} max |f|)`.
    pub center_ratio: Option<f64>,
}

impl SubharmonicReport {
    pub fn is_subharmonic(&self) -> bool {
        self.definition_violations.is_empty()
    }

    pub fn conclusion_holds(&self) -> bool {
        !self.degenerate_cover && self.conclusion_violations.is_empty() && self.center_ratio.is_some_and(|r| r <= 1.0 + 1e-12)
    }
}

/// Offsets `o` of width `width` with `lo <= |o|_∞ <= hi`.
fn shell_offsets(width: usize, lo: u64, hi: u64) -> Vec<Vec<i64>> {
    let side = 2 * hi as usize + 1;
    let total = side.pow(width as u32);
    (0..total)
        .filter_map(|mut i| {
            let mut o = vec![0i64; width];
            for k in (0..width).rev() {
                o[k] = (i % side) as i64 - hi as i64;
                i /= side;
            }
            let r = o.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
            (r >= lo).then_some(o)
        })
        .collect()
}

/// Checks the `(ℓ, q, S, c)`-sub-harmonic inequalities for `f` (indexed like
/// the cube's sites) and then the radial descent bound on an annulus cover of
/// the `cℓ`-neighbourhood of `S`.
pub fn verify_subharmonic_descent(cube: &Cube, f: &[f64], ell: u64, q: f64, s: &[Site], c: f64) -> Result<SubharmonicReport> {
    let dim = cube.checked_volume(crate::geometry::DEFAULT_SITE_CAP)?;
    if f.len() != dim {
        return Err(Error::InvalidParameter(format!("f has {} values for {dim} sites", f.len())));
    }
    if ell == 0 || !(q > 0.0) || !(c >= 1.0) {
        return Err(Error::InvalidParameter("need ell >= 1, q > 0, c >= 1".into()));
    }
    let width = cube.dims().width();
    let l = cube.radius();
    let u = cube.center();
    let wide = ((1.0 + c) * ell as f64).floor() as u64;
    let sphere = shell_offsets(width, ell, ell);
    let shell = shell_offsets(width, ell, wide);
    let in_s: std::collections::HashSet<&Site> = s.iter().collect();
    let abs_f = |x: &Site| cube.index_of(x).map(|i| f[i].abs());

    let mut definition_violations = Vec::new();
    for (i, value) in f.iter().enumerate() {
        let x = cube.site_at(i);
        let inner = Cube::new(cube.dims(), x.clone(), ell)?;
        if !cube.contains_cube(&inner) {
            continue;
        }
        let offsets = if in_s.contains(&x) { &shell } else { &sphere };
        let best = offsets
            .iter()
            .filter_map(|o| {
                let y = Site::new(x.coords().iter().zip(o).map(|(a, b)| a + b).collect());
                abs_f(&y)
            })
            .fold(0.0f64, f64::max);
        if value.abs() > q * best * (1.0 + 1e-12) {
            definition_violations.push(x);
        }
    }

    // radii (distance to u) hit by the cℓ-neighbourhood of S
    let reach = (c * ell as f64).floor() as u64;
    let mut hit = vec![false; l as usize + 1];
    for i in 0..dim {
        let x = cube.site_at(i);
        if s.iter().any(|y| max_norm(x.coords(), y.coords()) <= reach) {
            hit[max_norm(x.coords(), u.coords()) as usize] = true;
        }
    }
    let degenerate_cover = hit[0];
    let mut cover = Vec::new();
    let mut r = 1;
    while r <= l as usize {
        if hit[r] {
            let start = r;
            while r <= l as usize && hit[r] {
                r += 1;
            }
            cover.push(Annulus::new(u.clone(), start as u64 - 1, r as u64 - 1)?);
        } else {
            r += 1;
        }
    }
    let cover_width: u64 = if degenerate_cover { l } else { cover.iter().map(Annulus::width).sum() };

    let mut ball_max = vec![0.0f64; l as usize + 1];
    for (i, value) in f.iter().enumerate() {
        let r = max_norm(cube.site_at(i).coords(), u.coords()) as usize;
        ball_max[r] = ball_max[r].max(value.abs());
    }
    for r in 1..=l as usize {
        ball_max[r] = ball_max[r].max(ball_max[r - 1]);
    }
    let global = ball_max[l as usize];

    let mut radii_checked = Vec::new();
    let mut conclusion_violations = Vec::new();
    let mut center_ratio = None;
    if !degenerate_cover {
        let lo = cover_width + ell;
        let hi = (l + ell).saturating_sub(cover_width).min(l);
        for r in lo..=hi {
            let bound = subharmonic_descent_bound_at(l, r, ell, q, cover_width) * global;
            radii_checked.push(r);
            if ball_max[r as usize] > bound * (1.0 + 1e-12) {
                conclusion_violations.push(DescentViolation { radius: r, observed: ball_max[r as usize], bound });
            }
        }
        let bound = subharmonic_descent_bound(l, ell, q, cover_width) * global;
        center_ratio = Some(if bound > 0.0 { ball_max[0] / bound } else { 0.0 });
    }
    Ok(SubharmonicReport {
        definition_violations,
        cover,
        cover_width,
        degenerate_cover,
        radii_checked,
        conclusion_violations,
        center_ratio,
    })
}
