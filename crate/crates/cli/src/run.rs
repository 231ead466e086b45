//! Executes a resolved configuration and renders its artifacts in memory.

use anderson_core::disorder::{estimate_modulus, sample_field, Region};
use anderson_core::ensemble::{
    dynloc_experiment, eigenfunction_decay, lifshitz_experiment, separated_pair, singularity_probability,
    wegner_experiment, DecayOptions, DecayOutcome, DecaySetup, DynlocSetup, LifshitzSetup, SingularitySetup,
    WegnerSetup,
};
use anderson_core::format::sig17;
use anderson_core::geometry::{Cube, Site, DEFAULT_SITE_CAP};
use anderson_core::model::{assemble_hamiltonian, HamiltonianMatrix};
use anderson_core::spectral::{eigenvalues, Resolvent};
use anderson_core::Result;

use crate::config::{Experiment, ExperimentConfig};

/// Everything a run writes, before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub csv_name: String,
    pub csv: String,
    pub summary: String,
    /// Extra manifest notes such as energy-interval clipping.
    pub notes: Vec<String>,
    /// Coordinate-list dump of the first Hamiltonian, when requested.
    pub matrix: Option<String>,
}

struct Csv(String);

impl Csv {
    fn new(header: &[&str]) -> Self {
        Csv(header.join(",") + "\n")
    }

    fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }
}

fn coords(site: &Site) -> String {
    site.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn opt(x: Option<f64>) -> String {
    x.map(sig17).unwrap_or_default()
}

/// Realization 0 of the cube's Hamiltonian.
fn first_realization(config: &ExperimentConfig, cube: &Cube) -> Result<HamiltonianMatrix> {
    let region = Region::covering(&[cube], DEFAULT_SITE_CAP)?;
    let field = sample_field(&config.disorder, &region, 0);
    assemble_hamiltonian(cube, &field, &config.interaction, DEFAULT_SITE_CAP)
}

fn dump(h: &HamiltonianMatrix) -> String {
    let mut out = Vec::new();
    h.write_coordinate_list(&mut out).expect("writing to memory");
    String::from_utf8(out).expect("ascii output")
}

pub fn execute(config: &ExperimentConfig, emit_matrix: bool) -> Result<Artifacts> {
    let dims = config.dims;
    let name = config.experiment.kind().name();
    let mut notes = Vec::new();
    let mut matrix = None;
    let mut summary = format!(
        "experiment: {name}\nd = {}, n = {}, N = {}, disorder = {}, seed = {}\n",
        dims.d,
        dims.n,
        dims.n_max,
        config.disorder.law.name(),
        config.disorder.seed
    );
    let csv = match &config.experiment {
        Experiment::Spectrum { l, center } => {
            let cube = Cube::new(dims, center.clone(), *l)?;
            let h = first_realization(config, &cube)?;
            if emit_matrix {
                matrix = Some(dump(&h));
            }
            let spectrum = eigenvalues(&h)?;
            let mut csv = Csv::new(&["index", "eigenvalue"]);
            for (i, e) in spectrum.iter().enumerate() {
                csv.row(&[i.to_string(), sig17(*e)]);
            }
            summary += &format!(
                "cube radius {l}, {} eigenvalues in [{}, {}]\n",
                spectrum.len(),
                sig17(spectrum[0]),
                sig17(spectrum[spectrum.len() - 1])
            );
            csv.0
        }
        Experiment::Green { l, center, energy, base } => {
            let cube = Cube::new(dims, center.clone(), *l)?;
            let h = first_realization(config, &cube)?;
            if emit_matrix {
                matrix = Some(dump(&h));
            }
            let y = cube.index_of(base).ok_or_else(|| {
                anderson_core::Error::InvalidParameter(format!("base {:?} is outside the cube", base.coords()))
            })?;
            let column = Resolvent::new(&h, *energy)?.column(y)?;
            let mut csv = Csv::new(&["x", "green"]);
            for (i, g) in column.iter().enumerate() {
                csv.row(&[coords(&cube.site_at(i)), sig17(*g)]);
            }
            summary += &format!("G(x, {}; {}) for {} sites\n", coords(base), sig17(*energy), column.len());
            csv.0
        }
        Experiment::Wegner { l, s_grid, modulus_trials } => {
            let (first, second) = separated_pair(dims, *l);
            let result = wegner_experiment(&WegnerSetup {
                dims,
                first,
                second,
                spec: config.disorder,
                interaction: config.interaction.clone(),
                s_grid: s_grid.clone(),
                trials: config.trials,
                modulus_trials: Some(*modulus_trials),
                workers: config.workers,
            })?;
            let mut csv = Csv::new(&[
                "s",
                "trials",
                "successes",
                "p_hat",
                "ci_lo",
                "ci_hi",
                "bound_closed_form",
                "bound_empirical",
            ]);
            for r in &result.rows {
                let e = &r.estimate;
                csv.row(&[
                    sig17(r.s),
                    e.trials.to_string(),
                    e.successes.to_string(),
                    sig17(e.p_hat),
                    sig17(e.lower()),
                    sig17(e.upper()),
                    opt(r.bound_closed_form),
                    opt(r.bound_empirical),
                ]);
                summary += &format!(
                    "s = {}: p = {} [{}, {}], bound {}\n",
                    sig17(r.s),
                    sig17(e.p_hat),
                    sig17(e.lower()),
                    sig17(e.upper()),
                    opt(r.bound_closed_form.or(r.bound_empirical))
                );
            }
            if result.exact_collisions > 0 {
                notes.push(format!("{} trials had exactly coinciding eigenvalues", result.exact_collisions));
            }
            csv.0
        }
        Experiment::Lifshitz { l0, c } => {
            let mut csv = Csv::new(&["L0", "threshold", "trials", "successes", "p_hat", "ci_lo", "ci_hi"]);
            for &l in l0 {
                let r = lifshitz_experiment(&LifshitzSetup {
                    dims,
                    l0: l,
                    spec: config.disorder,
                    interaction: config.interaction.clone(),
                    c: *c,
                    trials: config.trials,
                    workers: config.workers,
                })?;
                let e = &r.estimate;
                csv.row(&[
                    l.to_string(),
                    sig17(r.threshold),
                    e.trials.to_string(),
                    e.successes.to_string(),
                    sig17(e.p_hat),
                    sig17(e.lower()),
                    sig17(e.upper()),
                ]);
                summary += &format!("L0 = {l}: P(E0 <= {}) = {}\n", sig17(r.threshold), sig17(e.p_hat));
            }
            summary += "prediction: the probability decreases as L0 grows\n";
            csv.0
        }
        Experiment::MsaScan { l } => {
            let mut csv = Csv::new(&[
                "L",
                "trials",
                "successes",
                "p_hat",
                "ci_lo",
                "ci_hi",
                "ds_bound",
                "ds_bound_two_p",
                "clipped_trials",
                "resonant_events",
            ]);
            for &radius in l {
                let r = singularity_probability(&SingularitySetup {
                    dims,
                    l: radius,
                    params: config.msa.clone(),
                    spec: config.disorder,
                    interaction: config.interaction.clone(),
                    trials: config.trials,
                    workers: config.workers,
                })?;
                let e = &r.estimate;
                csv.row(&[
                    radius.to_string(),
                    e.trials.to_string(),
                    e.successes.to_string(),
                    sig17(e.p_hat),
                    sig17(e.lower()),
                    sig17(e.upper()),
                    sig17(r.ds_bound),
                    sig17(r.ds_bound_two_p),
                    r.clipped_trials.to_string(),
                    r.resonant_events.to_string(),
                ]);
                summary += &format!("L = {radius}: p = {} vs L^(-p 2^(N-n+1)) = {}\n", sig17(e.p_hat), sig17(r.ds_bound));
                if r.clipped_trials > 0 {
                    notes.push(format!(
                        "L = {radius}: E* = {} exceeded the realized spectrum in {} of {} trials and was clipped to its top",
                        sig17(config.msa.e_star),
                        r.clipped_trials,
                        e.trials
                    ));
                }
                if !r.lower_endpoint_is_zero {
                    notes.push(format!(
                        "L = {radius}: signed disorder, the lower end of I is each realization's smallest eigenvalue instead of 0"
                    ));
                }
            }
            csv.0
        }
        Experiment::Decay { l, select, min_distance } => {
            let cube = Cube::at_origin(dims, *l);
            if emit_matrix {
                matrix = Some(dump(&first_realization(config, &cube)?));
            }
            let result = eigenfunction_decay(&DecaySetup {
                cube,
                spec: config.disorder,
                interaction: config.interaction.clone(),
                selection: *select,
                options: DecayOptions { min_distance: *min_distance, ..DecayOptions::default() },
                trials: config.trials,
                workers: config.workers,
            })?;
            let mut csv = Csv::new(&[
                "trial",
                "eigen_index",
                "energy",
                "center",
                "mass",
                "intercept",
                "r_squared",
                "delocalized",
                "status",
            ]);
            let mut skipped = 0;
            for (t, outcome) in &result.outcomes {
                match outcome {
                    DecayOutcome::Fit(f) => csv.row(&[
                        t.to_string(),
                        f.eigen_index.to_string(),
                        sig17(f.energy),
                        coords(&f.center),
                        sig17(f.mass()),
                        sig17(f.intercept),
                        sig17(f.r_squared),
                        f.delocalized.to_string(),
                        "fit".into(),
                    ]),
                    DecayOutcome::Skipped { eigen_index, reason } => {
                        skipped += 1;
                        csv.row(&[
                            t.to_string(),
                            eigen_index.to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                            format!("skipped: {reason}"),
                        ])
                    }
                }
            }
            summary += &format!(
                "median mass {}, median r^2 {}, {} fits skipped\n",
                opt(result.median_mass),
                opt(result.median_r_squared),
                skipped
            );
            csv.0
        }
        Experiment::Dynloc { l, interval, s_grid, base, trace_c, kappa } => {
            let cube = Cube::at_origin(dims, *l);
            if emit_matrix {
                matrix = Some(dump(&first_realization(config, &cube)?));
            }
            let result = dynloc_experiment(&DynlocSetup {
                cube,
                spec: config.disorder,
                interaction: config.interaction.clone(),
                interval: *interval,
                s_grid: s_grid.clone(),
                base: vec![base.clone()],
                trace_c: *trace_c,
                kappa: *kappa,
                trials: config.trials,
                workers: config.workers,
            })?;
            let mut csv = Csv::new(&["trial", "s", "moment", "trace"]);
            for r in &result.rows {
                csv.row(&[r.trial.to_string(), sig17(r.s), sig17(r.moment), r.trace.to_string()]);
            }
            summary += &format!(
                "trace event tr P_I >= {}: p = {}\n",
                sig17(result.trace_threshold),
                sig17(result.trace_event.p_hat)
            );
            csv.0
        }
        Experiment::Modulus { l, t_grid } => {
            let cube = Cube::at_origin(dims.with_particles(1)?, *l);
            let region = Region::Cube(cube);
            let estimate = estimate_modulus(&config.disorder, &region, t_grid, config.trials as usize)?;
            let mut csv = Csv::new(&["t", "nu_hat", "ci_halfwidth", "gaussian_bound"]);
            for (t, nu) in estimate.t_grid.iter().zip(&estimate.nu_hat) {
                csv.row(&[
                    sig17(*t),
                    sig17(*nu),
                    sig17(estimate.ci_halfwidth),
                    opt(config.disorder.law.gaussian_modulus_bound(*t, region.len())),
                ]);
            }
            summary += &format!("modulus of the sample mean over {} sites, {} trials\n", region.len(), estimate.trials);
            csv.0
        }
    };
    Ok(Artifacts { csv_name: format!("{name}.csv"), csv, summary, notes, matrix })
}
