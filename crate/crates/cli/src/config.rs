//! Plain-text `key = value` configuration with a strict schema.
//!
//! ```text
//! # two particles on a line
//! d = 1
//! n = 2
//! N = 2
//! seed = 7
//! disorder = uniform(0, 10)
//! phi = 1, 0.5
//! r0 = 1
//! experiment = decay
//! L = 6
//! select = lowest(5)
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use anderson_core::disorder::{DisorderSpec, Law};
use anderson_core::ensemble::EigenSelection;
use anderson_core::geometry::{Dims, Site};
use anderson_core::model::InteractionSpec;
use anderson_core::msa::{initial_constants, GammaExponent, MsaParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), key: None, message: message.into() }
    }

    fn field(entry: &Entry, message: impl Into<String>) -> Self {
        ConfigError { line: entry.line, key: Some(entry.key.clone()), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError { line: None, key: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "`{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

type Parsed<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Green,
    Wegner,
    Lifshitz,
    MsaScan,
    Decay,
    Dynloc,
    Modulus,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectrum,
        ExperimentKind::Green,
        ExperimentKind::Wegner,
        ExperimentKind::Lifshitz,
        ExperimentKind::MsaScan,
        ExperimentKind::Decay,
        ExperimentKind::Dynloc,
        ExperimentKind::Modulus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Green => "green",
            ExperimentKind::Wegner => "wegner",
            ExperimentKind::Lifshitz => "lifshitz",
            ExperimentKind::MsaScan => "msa-scan",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Dynloc => "dynloc",
            ExperimentKind::Modulus => "modulus",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Experiment-specific keys accepted in the config.
    fn keys(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Spectrum => &["L", "center"],
            ExperimentKind::Green => &["L", "center", "energy", "base"],
            ExperimentKind::Wegner => &["L", "s", "modulus_trials"],
            ExperimentKind::Lifshitz => &["L0", "C"],
            ExperimentKind::MsaScan => &["L"],
            ExperimentKind::Decay => &["L", "select", "min_distance"],
            ExperimentKind::Dynloc => &["L", "I", "s", "base", "trace.C", "trace.kappa"],
            ExperimentKind::Modulus => &["L", "t"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum { l: u64, center: Site },
    Green { l: u64, center: Site, energy: f64, base: Site },
    Wegner { l: u64, s_grid: Vec<f64>, modulus_trials: usize },
    Lifshitz { l0: Vec<u64>, c: f64 },
    MsaScan { l: Vec<u64> },
    Decay { l: u64, select: EigenSelection, min_distance: u64 },
    Dynloc { l: u64, interval: (f64, f64), s_grid: Vec<f64>, base: Site, trace_c: f64, kappa: f64 },
    Modulus { l: u64, t_grid: Vec<f64> },
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Spectrum { .. } => ExperimentKind::Spectrum,
            Experiment::Green { .. } => ExperimentKind::Green,
            Experiment::Wegner { .. } => ExperimentKind::Wegner,
            Experiment::Lifshitz { .. } => ExperimentKind::Lifshitz,
            Experiment::MsaScan { .. } => ExperimentKind::MsaScan,
            Experiment::Decay { .. } => ExperimentKind::Decay,
            Experiment::Dynloc { .. } => ExperimentKind::Dynloc,
            Experiment::Modulus { .. } => ExperimentKind::Modulus,
        }
    }
}

/// A fully resolved run description; every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Dims,
    pub disorder: DisorderSpec,
    pub interaction: InteractionSpec,
    pub msa: MsaParams,
    pub experiment: Experiment,
    pub trials: u64,
    /// 0 uses every core.
    pub workers: usize,
    pub out: PathBuf,
}

/// Values that take precedence over the file (command-line flags).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub gamma_exponent: Option<GammaExponent>,
}

const COMMON_KEYS: &[&str] = &[
    "d",
    "n",
    "N",
    "seed",
    "disorder",
    "phi",
    "r0",
    "experiment",
    "trials",
    "workers",
    "out",
    "msa.alpha",
    "msa.beta",
    "msa.p",
    "msa.m",
    "msa.L0",
    "msa.E_star",
    "msa.gamma_exponent",
];

#[derive(Debug, Clone)]
struct Entry {
    line: Option<usize>,
    key: String,
    value: String,
}

struct Entries(BTreeMap<String, Entry>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.0.remove(key)
    }

    fn parse<T>(&mut self, key: &str, parse: impl FnOnce(&Entry) -> Parsed<T>) -> Parsed<Option<T>> {
        self.take(key).map(|e| parse(&e)).transpose()
    }

    fn required<T>(&mut self, key: &str, parse: impl FnOnce(&Entry) -> Parsed<T>) -> Parsed<T> {
        match self.take(key) {
            Some(e) => parse(&e),
            None => Err(ConfigError { line: None, key: Some(key.into()), message: "missing required key".into() }),
        }
    }
}

fn scalar<T: std::str::FromStr>(what: &'static str) -> impl Fn(&Entry) -> Parsed<T> {
    move |e| e.value.trim().parse().map_err(|_| ConfigError::field(e, format!("expected {what}, got `{}`", e.value)))
}

fn real(e: &Entry) -> Parsed<f64> {
    let v: f64 = scalar("a number")(e)?;
    if !v.is_finite() {
        return Err(ConfigError::field(e, "value must be finite"));
    }
    Ok(v)
}

/// A number or a fraction `a/b`.
fn fraction(e: &Entry) -> Parsed<f64> {
    match e.value.split_once('/') {
        Some((a, b)) => {
            let parse = |s: &str| s.trim().parse::<f64>().ok();
            match (parse(a), parse(b)) {
                (Some(a), Some(b)) if b != 0.0 => Ok(a / b),
                _ => Err(ConfigError::field(e, format!("expected a number or fraction, got `{}`", e.value))),
            }
        }
        None => real(e),
    }
}

fn list<T: std::str::FromStr>(what: &'static str) -> impl Fn(&Entry) -> Parsed<Vec<T>> {
    move |e| {
        let items: Parsed<Vec<T>> = e
            .value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| ConfigError::field(e, format!("expected a list of {what}, got `{}`", e.value))))
            .collect();
        let items = items?;
        if items.is_empty() {
            return Err(ConfigError::field(e, "list must not be empty"));
        }
        Ok(items)
    }
}

fn real_list(e: &Entry) -> Parsed<Vec<f64>> {
    let v = list::<f64>("numbers")(e)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::field(e, "values must be finite"));
    }
    Ok(v)
}

/// `name(a, b, ...)` with numeric arguments.
fn call(e: &Entry) -> Parsed<(String, Vec<f64>)> {
    let v = e.value.trim();
    let bad = || ConfigError::field(e, format!("expected `name(args)`, got `{v}`"));
    let (name, rest) = v.split_once('(').ok_or_else(bad)?;
    let args = rest.strip_suffix(')').ok_or_else(bad)?;
    let args: Option<Vec<f64>> = if args.trim().is_empty() {
        Some(Vec::new())
    } else {
        args.split(',').map(|a| a.trim().parse().ok()).collect()
    };
    Ok((name.trim().to_ascii_lowercase(), args.ok_or_else(bad)?))
}

fn law(e: &Entry) -> Parsed<Law> {
    let (name, args) = call(e)?;
    let arity = |k: usize| {
        if args.len() == k {
            Ok(())
        } else {
            Err(ConfigError::field(e, format!("{name} takes {k} arguments, got {}", args.len())))
        }
    };
    let law = match name.as_str() {
        "gaussian" => {
            arity(2)?;
            Law::Gaussian { mean: args[0], stdev: args[1] }
        }
        "uniform" => {
            arity(2)?;
            Law::Uniform { low: args[0], high: args[1] }
        }
        "bernoulli" => {
            arity(2)?;
            Law::Bernoulli { p: args[0], value: args[1] }
        }
        "constant" => {
            arity(1)?;
            Law::Constant { value: args[0] }
        }
        other => {
            return Err(ConfigError::field(
                e,
                format!("unknown law `{other}` (expected gaussian, uniform, bernoulli or constant)"),
            ))
        }
    };
    law.validate().map_err(|err| ConfigError::field(e, err.to_string()))?;
    Ok(law)
}

fn selection(e: &Entry) -> Parsed<EigenSelection> {
    let (name, args) = call(e)?;
    match (name.as_str(), args.as_slice()) {
        ("lowest", [k]) if *k >= 1.0 && k.fract() == 0.0 => Ok(EigenSelection::Lowest(*k as usize)),
        ("interval", [lo, hi]) if lo <= hi => Ok(EigenSelection::Interval(*lo, *hi)),
        _ => Err(ConfigError::field(e, "expected lowest(k) with k >= 1 or interval(lo, hi) with lo <= hi")),
    }
}

fn gamma_exponent(e: &Entry) -> Parsed<GammaExponent> {
    match e.value.trim() {
        "quarter" | "1/4" => Ok(GammaExponent::Quarter),
        "eighth" | "1/8" => Ok(GammaExponent::Eighth),
        other => Err(ConfigError::field(e, format!("expected quarter or eighth, got `{other}`"))),
    }
}

fn split_lines(text: &str) -> Parsed<Vec<Entry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::at(line, "empty key"));
        }
        if value.is_empty() {
            return Err(ConfigError { line: Some(line), key: Some(key.into()), message: "empty value".into() });
        }
        entries.push(Entry { line: Some(line), key: key.into(), value: value.into() });
    }
    Ok(entries)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, &Overrides::default())
}

/// Parses `text`, then applies `overrides`, then validates.
pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for entry in split_lines(text)? {
        if let Some(prev) = map.get(&entry.key) {
            let prev: &Entry = prev;
            return Err(ConfigError::field(&entry, format!("duplicate key (first set on line {})", prev.line.unwrap_or(0))));
        }
        map.insert(entry.key.clone(), entry);
    }
    let mut entries = Entries(map);

    let file_kind = entries
        .parse("experiment", |e| {
            ExperimentKind::from_name(e.value.trim()).ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                ConfigError::field(e, format!("unknown experiment `{}` (expected one of {})", e.value, names.join(", ")))
            })
        })?;
    let kind = match (overrides.experiment, file_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::global(format!(
                "subcommand `{}` conflicts with `experiment = {}` in the config",
                a.name(),
                b.name()
            )))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(ConfigError::global("no experiment given")),
    };

    for entry in entries.0.values() {
        let key = entry.key.as_str();
        if COMMON_KEYS.contains(&key) || kind.keys().contains(&key) {
            continue;
        }
        let used_elsewhere = ExperimentKind::ALL.iter().any(|k| k.keys().contains(&key));
        let message = if used_elsewhere {
            format!("key is not used by experiment `{}`", kind.name())
        } else {
            "unknown key".to_string()
        };
        return Err(ConfigError::field(entry, message));
    }

    let d = entries.required("d", scalar::<usize>("a positive integer"))?;
    let n = entries.required("n", scalar::<usize>("a positive integer"))?;
    let n_max = entries.parse("N", scalar::<usize>("a positive integer"))?.unwrap_or(n);
    let dims = Dims::new(d, n, n_max).map_err(|e| ConfigError::global(e.to_string()))?;

    let seed = entries.parse("seed", scalar::<u64>("an unsigned integer"))?.unwrap_or(0);
    let seed = overrides.seed.unwrap_or(seed);
    let law = entries.required("disorder", law)?;
    let disorder = DisorderSpec { law, seed };

    let r0 = entries.parse("r0", scalar::<u64>("an unsigned integer"))?;
    let phi_entry = entries.take("phi");
    let interaction = match &phi_entry {
        Some(e) => {
            let phi = real_list(e)?;
            if let Some(bad) = phi.iter().find(|v| **v < 0.0) {
                return Err(ConfigError::field(e, format!("interaction must be nonnegative, got {bad}")));
            }
            let r0 = r0.unwrap_or(phi.len() as u64 - 1);
            InteractionSpec::new(r0, phi).map_err(|err| ConfigError::field(e, err.to_string()))?
        }
        None => InteractionSpec::new(r0.unwrap_or(0), Vec::new()).expect("empty interaction"),
    };

    for (key, fixed, name) in [("msa.alpha", 1.5, "alpha is fixed at 3/2"), ("msa.beta", 0.5, "beta is fixed at 1/2")] {
        entries.parse(key, |e| match fraction(e)? {
            v if v == fixed => Ok(v),
            v => Err(ConfigError::field(e, format!("{name}, got {v}"))),
        })?;
    }
    let l0 = entries.parse("msa.L0", scalar::<u64>("an integer >= 3"))?.unwrap_or(3);
    let initial = initial_constants(n_max, d, l0).map_err(|e| ConfigError {
        line: None,
        key: Some("msa.L0".into()),
        message: e.to_string(),
    })?;
    let default_p = 3.0 * (n_max * d) as f64 + 1.0;
    let msa = MsaParams {
        p: entries.parse("msa.p", real)?.unwrap_or(default_p),
        m: entries.parse("msa.m", real)?.unwrap_or(initial.m),
        l0,
        e_star: entries.parse("msa.E_star", real)?.unwrap_or(initial.e_star),
        gamma_exponent: match overrides.gamma_exponent {
            Some(g) => g,
            None => entries.parse("msa.gamma_exponent", gamma_exponent)?.unwrap_or_default(),
        },
    };
    msa.validate().map_err(|e| ConfigError::global(e.to_string()))?;

    let trials = entries.parse("trials", scalar::<u64>("a positive integer"))?.unwrap_or(1000);
    let trials = overrides.trials.unwrap_or(trials);
    if trials == 0 {
        return Err(ConfigError { line: None, key: Some("trials".into()), message: "must be positive".into() });
    }
    let workers = entries.parse("workers", scalar::<usize>("an unsigned integer"))?.unwrap_or(0);
    let workers = overrides.workers.unwrap_or(workers);
    let out = entries.parse("out", |e| Ok(PathBuf::from(e.value.trim())))?.unwrap_or_else(|| PathBuf::from("results"));
    let out = overrides.out.clone().unwrap_or(out);

    let experiment = experiment(kind, dims, &mut entries)?;
    Ok(ExperimentConfig { dims, disorder, interaction, msa, experiment, trials, workers, out })
}

fn site(width: usize) -> impl Fn(&Entry) -> Parsed<Site> {
    move |e| {
        let coords = list::<i64>("integers")(e)?;
        if coords.len() != width {
            return Err(ConfigError::field(e, format!("expected {width} coordinates (n*d), got {}", coords.len())));
        }
        Ok(Site::new(coords))
    }
}

fn radius(e: &Entry) -> Parsed<u64> {
    scalar::<u64>("a nonnegative integer radius")(e)
}

fn nonnegative(e: &Entry, values: &[f64]) -> Parsed<()> {
    match values.iter().find(|v| **v < 0.0) {
        Some(v) => Err(ConfigError::field(e, format!("values must be >= 0, got {v}"))),
        None => Ok(()),
    }
}

fn experiment(kind: ExperimentKind, dims: Dims, entries: &mut Entries) -> Parsed<Experiment> {
    let width = dims.width();
    let origin = || Site::origin(width);
    Ok(match kind {
        ExperimentKind::Spectrum => Experiment::Spectrum {
            l: entries.required("L", radius)?,
            center: entries.parse("center", site(width))?.unwrap_or_else(origin),
        },
        ExperimentKind::Green => {
            let l = entries.required("L", radius)?;
            let center = entries.parse("center", site(width))?.unwrap_or_else(origin);
            let energy = entries.required("energy", real)?;
            let base = entries.parse("base", site(width))?.unwrap_or_else(|| center.clone());
            Experiment::Green { l, center, energy, base }
        }
        ExperimentKind::Wegner => Experiment::Wegner {
            l: entries.required("L", radius)?,
            s_grid: entries
                .required("s", |e| {
                    let v = real_list(e)?;
                    nonnegative(e, &v)?;
                    Ok(v)
                })?,
            modulus_trials: entries
                .parse("modulus_trials", scalar::<usize>("an integer >= 1000"))?
                .unwrap_or(10_000),
        },
        ExperimentKind::Lifshitz => Experiment::Lifshitz {
            l0: entries.required("L0", |e| {
                let v = list::<u64>("positive integers")(e)?;
                if v.contains(&0) {
                    return Err(ConfigError::field(e, "radii must be positive"));
                }
                Ok(v)
            })?,
            c: entries.parse("C", real)?.unwrap_or(1.0),
        },
        ExperimentKind::MsaScan => Experiment::MsaScan {
            l: entries.required("L", |e| {
                let v = list::<u64>("positive integers")(e)?;
                if v.contains(&0) {
                    return Err(ConfigError::field(e, "radii must be positive"));
                }
                Ok(v)
            })?,
        },
        ExperimentKind::Decay => Experiment::Decay {
            l: entries.required("L", radius)?,
            select: entries.parse("select", selection)?.unwrap_or(EigenSelection::Lowest(5)),
            min_distance: entries.parse("min_distance", scalar::<u64>("an unsigned integer"))?.unwrap_or(0),
        },
        ExperimentKind::Dynloc => {
            let l = entries.required("L", radius)?;
            let interval = entries.required("I", |e| match real_list(e)?.as_slice() {
                [lo, hi] if lo <= hi => Ok((*lo, *hi)),
                _ => Err(ConfigError::field(e, "expected `lo, hi` with lo <= hi")),
            })?;
            let s_grid = entries
                .parse("s", |e| {
                    let v = real_list(e)?;
                    nonnegative(e, &v)?;
                    Ok(v)
                })?
                .unwrap_or_else(|| vec![1.0]);
            let base = entries.parse("base", site(width))?.unwrap_or_else(origin);
            Experiment::Dynloc {
                l,
                interval,
                s_grid,
                base,
                trace_c: entries.parse("trace.C", real)?.unwrap_or(1.0),
                kappa: entries.parse("trace.kappa", real)?.unwrap_or(0.0),
            }
        }
        ExperimentKind::Modulus => Experiment::Modulus {
            l: entries.required("L", radius)?,
            t_grid: entries.required("t", |e| {
                let v = real_list(e)?;
                nonnegative(e, &v)?;
                Ok(v)
            })?,
        },
    })
}

/// Canonical `key = value` rendering of a resolved config, accepted by
/// [`parse_config`].
pub fn render_config(config: &ExperimentConfig) -> String {
    use anderson_core::format::sig17;
    let mut lines = Vec::new();
    let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    let join = |v: &[f64]| v.iter().map(|x| sig17(*x)).collect::<Vec<_>>().join(", ");
    let coords = |s: &Site| s.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
    push("d", config.dims.d.to_string());
    push("n", config.dims.n.to_string());
    push("N", config.dims.n_max.to_string());
    push("seed", config.disorder.seed.to_string());
    push(
        "disorder",
        match config.disorder.law {
            Law::Gaussian { mean, stdev } => format!("gaussian({}, {})", sig17(mean), sig17(stdev)),
            Law::Uniform { low, high } => format!("uniform({}, {})", sig17(low), sig17(high)),
            Law::Bernoulli { p, value } => format!("bernoulli({}, {})", sig17(p), sig17(value)),
            Law::Constant { value } => format!("constant({})", sig17(value)),
        },
    );
    if !config.interaction.phi().is_empty() {
        push("phi", join(config.interaction.phi()));
    }
    push("r0", config.interaction.r0().to_string());
    push("msa.p", sig17(config.msa.p));
    push("msa.m", sig17(config.msa.m));
    push("msa.L0", config.msa.l0.to_string());
    push("msa.E_star", sig17(config.msa.e_star));
    push(
        "msa.gamma_exponent",
        match config.msa.gamma_exponent {
            GammaExponent::Quarter => "quarter".into(),
            GammaExponent::Eighth => "eighth".into(),
        },
    );
    push("experiment", config.experiment.kind().name().into());
    push("trials", config.trials.to_string());
    push("workers", config.workers.to_string());
    push("out", config.out.display().to_string());
    match &config.experiment {
        Experiment::Spectrum { l, center } => {
            push("L", l.to_string());
            push("center", coords(center));
        }
        Experiment::Green { l, center, energy, base } => {
            push("L", l.to_string());
            push("center", coords(center));
            push("energy", sig17(*energy));
            push("base", coords(base));
        }
        Experiment::Wegner { l, s_grid, modulus_trials } => {
            push("L", l.to_string());
            push("s", join(s_grid));
            push("modulus_trials", modulus_trials.to_string());
        }
        Experiment::Lifshitz { l0, c } => {
            push("L0", l0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
            push("C", sig17(*c));
        }
        Experiment::MsaScan { l } => push("L", l.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
        Experiment::Decay { l, select, min_distance } => {
            push("L", l.to_string());
            push(
                "select",
                match select {
                    EigenSelection::Lowest(k) => format!("lowest({k})"),
                    EigenSelection::Interval(a, b) => format!("interval({}, {})", sig17(*a), sig17(*b)),
                },
            );
            push("min_distance", min_distance.to_string());
        }
        Experiment::Dynloc { l, interval, s_grid, base, trace_c, kappa } => {
            push("L", l.to_string());
            push("I", join(&[interval.0, interval.1]));
            push("s", join(s_grid));
            push("base", coords(base));
            push("trace.C", sig17(*trace_c));
            push("trace.kappa", sig17(*kappa));
        }
        Experiment::Modulus { l, t_grid } => {
            push("L", l.to_string());
            push("t", join(t_grid));
        }
    }
    lines.join("\n") + "\n"
}
