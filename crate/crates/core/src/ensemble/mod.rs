//! Monte Carlo experiments over disorder realizations.
//!
//! Trial `t` always uses realization `t` of the counter-based field, so
//! results do not depend on the number of workers or on scheduling.

mod correlator;
mod decay;
mod stats;

pub use correlator::{correlator, correlator_table, dynamical_moment, CorrelatorTable, DynamicalMoment};
pub use decay::{centers_of_localization, decay_fits, fit_profile, DecayFit, DecayOptions, DecayOutcome, EigenSelection};
pub use stats::{clopper_pearson, linear_fit, median, LinearFit, ProbabilityEstimate};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::{estimate_modulus, sample_field, DisorderSpec, Region};
use crate::geometry::{sym_distance, Cube, Dims, Site, DEFAULT_SITE_CAP};
use crate::model::{assemble_hamiltonian, InteractionSpec};
use crate::msa::{ds_bound, ds_bound_two_p, energy_grid, is_ns, MsaParams};
use crate::spectral::{diagonalize, eigenvalues, lowest_eigenvalue};
use crate::{Error, Result};

/// Runs `task(t)` for `t in 0..trials` on `workers` threads (0 = all cores)
/// and returns the results in trial order.
pub fn run_trials<T, F>(trials: u64, workers: usize, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..trials).into_par_iter().map(&task).collect())
}

fn need_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    Ok(())
}

/// Smallest `|λ_i - μ_j|` between two ascending spectra.
pub fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut best = f64::INFINITY;
    while i < a.len() && j < b.len() {
        best = best.min((a[i] - b[j]).abs());
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct WegnerSetup {
    pub dims: Dims,
    pub first: Cube,
    pub second: Cube,
    pub spec: DisorderSpec,
    pub interaction: InteractionSpec,
    pub s_grid: Vec<f64>,
    pub trials: u64,
    /// Trials for the empirical modulus; skipped when `None`.
    pub modulus_trials: Option<usize>,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerRow {
    pub s: f64,
    pub estimate: ProbabilityEstimate,
    /// `|C₁| |C₂| · 2s √|Q| / (σ √(2π))`, Gaussian laws only.
    pub bound_closed_form: Option<f64>,
    /// `|C₁| |C₂| · ν̂(2s)`.
    pub bound_empirical: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerResult {
    pub rows: Vec<WegnerRow>,
    /// `|Q|`, the size of the first cube's projection used for the sample mean.
    pub mean_region_size: usize,
    /// Trials whose spectra collided exactly (continuous laws should give 0).
    pub exact_collisions: u64,
}

/// Probability that the spectra of two far-apart cubes sharing one field come
/// within `s`, for every `s` of the grid, from common draws.
pub fn wegner_experiment(setup: &WegnerSetup) -> Result<WegnerResult> {
    need_trials(setup.trials)?;
    let (a, b) = (&setup.first, &setup.second);
    let n_max = setup.dims.n_max as u64;
    let required = 2 * n_max * a.radius().max(b.radius());
    let actual = sym_distance(a.center(), b.center(), setup.dims.d);
    if actual < required {
        return Err(Error::Separation { actual, required });
    }
    if setup.s_grid.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidParameter("s grid must be nonnegative".into()));
    }
    let region = Region::covering(&[a, b], DEFAULT_SITE_CAP)?;
    let distances = run_trials(setup.trials, setup.workers, |t| {
        let field = sample_field(&setup.spec, &region, t);
        let ha = assemble_hamiltonian(a, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        let hb = assemble_hamiltonian(b, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        Ok(spectral_distance(&eigenvalues(&ha)?, &eigenvalues(&hb)?))
    })?;
    let q = Region::Cube(a.projection(0));
    let volumes = a.volume().unwrap_or(0) as f64 * b.volume().unwrap_or(0) as f64;
    let t_grid: Vec<f64> = setup.s_grid.iter().map(|s| 2.0 * s).collect();
    let modulus = setup
        .modulus_trials
        .map(|m| estimate_modulus(&setup.spec, &q, &t_grid, m))
        .transpose()?;
    let rows = setup
        .s_grid
        .iter()
        .map(|&s| {
            let hits = distances.iter().filter(|&&dist| dist <= s).count() as u64;
            WegnerRow {
                s,
                estimate: ProbabilityEstimate::new(format!("dist(spectra) <= {s}"), hits, setup.trials),
                bound_closed_form: setup.spec.law.gaussian_modulus_bound(2.0 * s, q.len()).map(|nu| volumes * nu),
                bound_empirical: modulus.as_ref().map(|m| volumes * m.at(2.0 * s)),
            }
        })
        .collect();
    Ok(WegnerResult {
        rows,
        mean_region_size: q.len(),
        exact_collisions: distances.iter().filter(|&&dist| dist == 0.0).count() as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifshitzSetup {
    pub dims: Dims,
    /// Radius of the cube centered at the origin.
    pub l0: u64,
    pub spec: DisorderSpec,
    pub interaction: InteractionSpec,
    pub c: f64,
    pub trials: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifshitzResult {
    pub l0: u64,
    /// `2 C L0^{-1/2}`.
    pub threshold: f64,
    pub estimate: ProbabilityEstimate,
}

/// Probability that the bottom of the spectrum of `C_{L0}(0)` lies below
/// `2 C L0^{-1/2}`; needs nonnegative disorder.
pub fn lifshitz_experiment(setup: &LifshitzSetup) -> Result<LifshitzResult> {
    need_trials(setup.trials)?;
    if !setup.spec.law.is_nonnegative() {
        return Err(Error::SignedDisorder(format!(
            "{} disorder can be negative; the bottom of the spectrum is only pinned at 0 for nonnegative laws",
            setup.spec.law.name()
        )));
    }
    let cube = Cube::at_origin(setup.dims, setup.l0);
    cube.checked_volume(DEFAULT_SITE_CAP)?;
    let region = Region::Cube(cube.projection(0));
    let threshold = 2.0 * setup.c / (setup.l0 as f64).sqrt();
    let hits = run_trials(setup.trials, setup.workers, |t| {
        let field = sample_field(&setup.spec, &region, t);
        let h = assemble_hamiltonian(&cube, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        Ok(lowest_eigenvalue(&h)? <= threshold)
    })?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(LifshitzResult {
        l0: setup.l0,
        threshold,
        estimate: ProbabilityEstimate::new(format!("E0 <= {threshold}"), successes, setup.trials),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularitySetup {
    pub dims: Dims,
    pub l: u64,
    pub params: MsaParams,
    pub spec: DisorderSpec,
    pub interaction: InteractionSpec,
    pub trials: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityResult {
    pub l: u64,
    pub estimate: ProbabilityEstimate,
    /// `L^{-p 2^{N-n+1}}`.
    pub ds_bound: f64,
    /// `L^{-2p}`.
    pub ds_bound_two_p: f64,
    /// Trials where `E*` exceeded the realized spectrum and was clipped.
    pub clipped_trials: u64,
    /// Lower end of `I`: 0 for nonnegative laws, else the realized minimum.
    pub lower_endpoint_is_zero: bool,
    pub resonant_events: u64,
}

/// `C_L(0)` and its copy shifted by `2 N L + 1` along every coordinate, so
/// the centers are `2NL`-distant and the single-particle projections of the
/// two cubes never overlap.
pub fn separated_pair(dims: Dims, l: u64) -> (Cube, Cube) {
    let shift = 2 * dims.n_max as i64 * l as i64 + 1;
    let first = Cube::at_origin(dims, l);
    let second = first.with_center(Site::new(vec![shift; dims.width()]), l).expect("same dims");
    (first, second)
}

/// Probability that some grid energy in `I` makes both cubes of a
/// `2NL`-separated pair `(E, m)`-singular.
pub fn singularity_probability(setup: &SingularitySetup) -> Result<SingularityResult> {
    need_trials(setup.trials)?;
    if setup.l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let (a, b) = separated_pair(setup.dims, setup.l);
    let region = Region::covering(&[&a, &b], DEFAULT_SITE_CAP)?;
    let nonnegative = setup.spec.law.is_nonnegative();
    let outcomes = run_trials(setup.trials, setup.workers, |t| {
        let field = sample_field(&setup.spec, &region, t);
        let ha = assemble_hamiltonian(&a, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        let hb = assemble_hamiltonian(&b, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        let (da, db) = (diagonalize(&ha)?, diagonalize(&hb)?);
        let (ea, eb) = (da.eigenvalues(), db.eigenvalues());
        let lo = if nonnegative { 0.0 } else { ea[0].min(eb[0]) };
        let top = ea[ea.len() - 1].max(eb[eb.len() - 1]);
        let hi = setup.params.e_star.min(top);
        let mut event = (false, false);
        for energy in energy_grid(lo, hi, setup.l) {
            let va = is_ns(&ha, &da, energy, &setup.params);
            if va.is_ns {
                continue;
            }
            let vb = is_ns(&hb, &db, energy, &setup.params);
            if !vb.is_ns {
                event = (true, va.resonant || vb.resonant);
                break;
            }
        }
        Ok((event, setup.params.e_star > top))
    })?;
    let successes = outcomes.iter().filter(|o| o.0 .0).count() as u64;
    let dims = setup.dims;
    Ok(SingularityResult {
        l: setup.l,
        estimate: ProbabilityEstimate::new("both cubes (E,m)-singular for some E in I", successes, setup.trials),
        ds_bound: ds_bound(setup.l, setup.params.p, dims.n, dims.n_max),
        ds_bound_two_p: ds_bound_two_p(setup.l, setup.params.p),
        clipped_trials: outcomes.iter().filter(|o| o.1).count() as u64,
        lower_endpoint_is_zero: nonnegative,
        resonant_events: outcomes.iter().filter(|o| o.0 .1).count() as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecaySetup {
    pub cube: Cube,
    pub spec: DisorderSpec,
    pub interaction: InteractionSpec,
    pub selection: EigenSelection,
    pub options: DecayOptions,
    pub trials: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayResult {
    /// `(trial, outcome)` in trial order.
    pub outcomes: Vec<(u64, DecayOutcome)>,
    pub median_mass: Option<f64>,
    pub median_r_squared: Option<f64>,
}

impl DecayResult {
    pub fn fits(&self) -> impl Iterator<Item = &DecayFit> {
        self.outcomes.iter().filter_map(|(_, o)| o.fit())
    }
}

/// Exponential decay fits of the selected eigenfunctions over realizations.
pub fn eigenfunction_decay(setup: &DecaySetup) -> Result<DecayResult> {
    need_trials(setup.trials)?;
    let region = Region::covering(&[&setup.cube], DEFAULT_SITE_CAP)?;
    let per_trial = run_trials(setup.trials, setup.workers, |t| {
        let field = sample_field(&setup.spec, &region, t);
        let h = assemble_hamiltonian(&setup.cube, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        Ok(decay_fits(&diagonalize(&h)?, &setup.cube, setup.selection, &setup.options))
    })?;
    let outcomes: Vec<(u64, DecayOutcome)> = per_trial
        .into_iter()
        .enumerate()
        .flat_map(|(t, v)| v.into_iter().map(move |o| (t as u64, o)))
        .collect();
    let masses: Vec<f64> = outcomes.iter().filter_map(|(_, o)| o.fit()).map(DecayFit::mass).collect();
    let r2: Vec<f64> = outcomes.iter().filter_map(|(_, o)| o.fit()).map(|f| f.r_squared).collect();
    Ok(DecayResult { median_mass: median(&masses), median_r_squared: median(&r2), outcomes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynlocSetup {
    pub cube: Cube,
    pub spec: DisorderSpec,
    pub interaction: InteractionSpec,
    pub interval: (f64, f64),
    pub s_grid: Vec<f64>,
    /// Base region `K` as site indices of the cube.
    pub base: Vec<Site>,
    /// Trace event `tr P_I >= C L^{κ N d}` parameters.
    pub trace_c: f64,
    pub kappa: f64,
    pub trials: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynlocRow {
    pub trial: u64,
    pub s: f64,
    pub moment: f64,
    pub trace: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynlocResult {
    pub rows: Vec<DynlocRow>,
    pub trace_threshold: f64,
    pub trace_event: ProbabilityEstimate,
}

/// Correlator moments `Σ_x |x|^s max_{y∈K} Q_I(x,y)` per realization and `s`.
pub fn dynloc_experiment(setup: &DynlocSetup) -> Result<DynlocResult> {
    need_trials(setup.trials)?;
    let cube = &setup.cube;
    let base: Vec<usize> = setup
        .base
        .iter()
        .map(|s| {
            cube.index_of(s)
                .ok_or_else(|| Error::InvalidParameter(format!("base site {:?} is outside the cube", s.coords())))
        })
        .collect::<Result<_>>()?;
    let region = Region::covering(&[cube], DEFAULT_SITE_CAP)?;
    let per_trial = run_trials(setup.trials, setup.workers, |t| {
        let field = sample_field(&setup.spec, &region, t);
        let h = assemble_hamiltonian(cube, &field, &setup.interaction, DEFAULT_SITE_CAP)?;
        let decomp = diagonalize(&h)?;
        Ok(setup
            .s_grid
            .iter()
            .map(|&s| {
                let m = dynamical_moment(&decomp, cube, setup.interval, s, &base);
                DynlocRow { trial: t, s, moment: m.moment, trace: m.trace }
            })
            .collect::<Vec<_>>())
    })?;
    let dims = cube.dims();
    let trace_threshold = setup.trace_c * (cube.radius() as f64).powf(setup.kappa * (dims.n_max * dims.d) as f64);
    let events = per_trial
        .iter()
        .filter(|rows| rows.first().is_some_and(|r| r.trace as f64 >= trace_threshold))
        .count() as u64;
    Ok(DynlocResult {
        rows: per_trial.into_iter().flatten().collect(),
        trace_threshold,
        trace_event: ProbabilityEstimate::new(format!("tr P_I >= {trace_threshold}"), events, setup.trials),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_distance_merges() {
        assert_eq!(spectral_distance(&[0.0, 1.0, 5.0], &[2.5, 4.5]), 0.5);
        assert_eq!(spectral_distance(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn separated_pair_distance() {
        let dims = Dims::new(1, 2, 2).unwrap();
        let (a, b) = separated_pair(dims, 3);
        assert_eq!(sym_distance(a.center(), b.center(), 1), 13);
    }

    #[test]
    fn trials_are_ordered_and_worker_independent() {
        let a = run_trials(50, 1, |t| Ok(t * t)).unwrap();
        let b = run_trials(50, 4, |t| Ok(t * t)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
    }
}
