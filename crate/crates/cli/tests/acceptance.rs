//! Acceptance suite: one numbered check per criterion, each printing a single
//! PASS/FAIL line. Runs as a plain binary so the lines always show.

use std::panic;
use std::time::Instant;

use anderson_core::disorder::{sample_field, DisorderSpec, Law, Region};
use anderson_core::ensemble::{
    correlator, eigenfunction_decay, lifshitz_experiment, separated_pair, wegner_experiment, DecayOptions,
    DecaySetup, EigenSelection, LifshitzSetup, WegnerSetup,
};
use anderson_core::geometry::{Cube, Dims, ScaleSequence, Site, DEFAULT_SITE_CAP};
use anderson_core::model::{assemble_hamiltonian, assemble_laplacian, HamiltonianMatrix, InteractionSpec};
use anderson_core::msa::{gamma, is_ns, verify_subharmonic_descent, GammaExponent, MsaParams};
use anderson_core::spectral::{combes_thomas_check, diagonalize, dist_to_sorted, eigenvalues, verify_gri, Resolvent};
use anderson_lab::{parse_config, run};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hamiltonian(cube: &Cube, spec: &DisorderSpec, interaction: &InteractionSpec, realization: u64) -> HamiltonianMatrix {
    let region = Region::covering(&[cube], DEFAULT_SITE_CAP).unwrap();
    let field = sample_field(spec, &region, realization);
    assemble_hamiltonian(cube, &field, interaction, DEFAULT_SITE_CAP).unwrap()
}

fn random_law(rng: &mut ChaCha8Rng) -> Law {
    if rng.random_bool(0.5) {
        Law::Gaussian { mean: rng.random_range(-1.0..1.0), stdev: rng.random_range(0.5..3.0) }
    } else {
        Law::Uniform { low: 0.0, high: rng.random_range(0.5..20.0) }
    }
}

fn random_interaction(rng: &mut ChaCha8Rng, n: usize) -> InteractionSpec {
    if n == 1 {
        InteractionSpec::none()
    } else {
        InteractionSpec::new(1, vec![rng.random_range(0.0..3.0), rng.random_range(0.0..1.0)]).unwrap()
    }
}

fn tensor_spectrum() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for l in 1..=3u64 {
            let m = 2 * l + 1;
            let single: Vec<f64> = (1..=m)
                .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (2 * l + 2) as f64).cos())
                .collect();
            let mut sums = vec![0.0];
            for _ in 0..n {
                sums = sums.iter().flat_map(|s| single.iter().map(move |e| s + e)).collect();
            }
            sums.sort_by(f64::total_cmp);
            let cube = Cube::at_origin(Dims::new(1, n, n).unwrap(), l);
            let computed = eigenvalues(&assemble_laplacian(&cube, DEFAULT_SITE_CAP).unwrap()).unwrap();
            if computed.len() != sums.len() {
                return Err(format!("n={n}, L={l}: {} eigenvalues, expected {}", computed.len(), sums.len()));
            }
            for (a, b) in computed.iter().zip(&sums) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    check(worst <= 1e-9, format!("max elementwise error {worst:.2e} over n in 1..3, L in 1..3"))
}

fn spectral_bottom() -> Outcome {
    let cube = Cube::at_origin(Dims::new(1, 2, 2).unwrap(), 3);
    let spec = DisorderSpec::new(Law::Uniform { low: 0.0, high: 5.0 }, 2024).unwrap();
    let interaction = InteractionSpec::new(1, vec![1.0, 0.5]).unwrap();
    let mut lowest = f64::INFINITY;
    let mut passed = 0;
    for t in 0..1000 {
        let e0 = eigenvalues(&hamiltonian(&cube, &spec, &interaction, t)).unwrap()[0];
        lowest = lowest.min(e0);
        if e0 >= -1e-10 {
            passed += 1;
        }
    }
    let mut band_ok = true;
    for (d, n, l) in [(1, 1, 5), (1, 2, 3), (2, 1, 3), (1, 3, 2), (2, 2, 1)] {
        let cube = Cube::at_origin(Dims::new(d, n, n).unwrap(), l);
        let spectrum = eigenvalues(&assemble_laplacian(&cube, DEFAULT_SITE_CAP).unwrap()).unwrap();
        let top = (4 * n * d) as f64;
        band_ok &= spectrum[0] >= -1e-10 && spectrum[spectrum.len() - 1] <= top + 1e-10;
    }
    check(
        passed == 1000 && band_ok,
        format!("{passed}/1000 trials with E0 >= -1e-10 (smallest {lowest:.6}); free spectra inside [0, 4nd]: {band_ok}"),
    )
}

fn combes_thomas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut holds, mut worst) = (0, 0.0f64);
    for i in 0..200 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(1..=2);
        let l = if d * n == 4 { rng.random_range(0..=2) } else { rng.random_range(0..=4) };
        let cube = Cube::at_origin(Dims::new(d, n, n).unwrap(), l);
        let spec = DisorderSpec::new(random_law(&mut rng), i).unwrap();
        let h = hamiltonian(&cube, &spec, &random_interaction(&mut rng, n), i);
        let spectrum = eigenvalues(&h).unwrap();
        let (lo, hi) = (spectrum[0] - 1.0, spectrum[spectrum.len() - 1] + 1.0);
        let (energy, dist) = loop {
            let e = rng.random_range(lo..hi);
            let dist = dist_to_sorted(&spectrum, e);
            if dist > 1e-6 {
                break (e, dist);
            }
        };
        let eta = dist.min(1.0) * (1.0 - 1e-6);
        let report = combes_thomas_check(&h, energy, eta).map_err(|e| format!("instance {i}: {e}"))?;
        if report.holds {
            holds += 1;
        }
        worst = worst.max(report.worst_ratio);
    }
    check(holds == 200, format!("{holds}/200 instances satisfy the bound; worst ratio {worst:.3e}"))
}

fn resolvent_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_inverse, mut worst_gri) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(1..=2);
        let big_radius = if d * n == 4 { rng.random_range(1..=2) } else { rng.random_range(1..=5) };
        let dims = Dims::new(d, n, n).unwrap();
        let big = Cube::at_origin(dims, big_radius);
        let sub_radius = rng.random_range(0..big_radius);
        let reach = (big_radius - sub_radius) as i64;
        let center = Site::new((0..dims.width()).map(|_| rng.random_range(-reach..=reach)).collect());
        let sub = big.with_center(center.clone(), sub_radius).unwrap();
        let spec = DisorderSpec::new(random_law(&mut rng), 100 + i).unwrap();
        let interaction = random_interaction(&mut rng, n);
        let region = Region::covering(&[&big], DEFAULT_SITE_CAP).unwrap();
        let field = sample_field(&spec, &region, i);
        let h_big = assemble_hamiltonian(&big, &field, &interaction, DEFAULT_SITE_CAP).unwrap();
        let h_sub = assemble_hamiltonian(&sub, &field, &interaction, DEFAULT_SITE_CAP).unwrap();
        let s_big = eigenvalues(&h_big).unwrap();
        let s_sub = eigenvalues(&h_sub).unwrap();
        let energy = loop {
            let e = rng.random_range(s_big[0] - 0.5..s_big[s_big.len() - 1] + 0.5);
            if dist_to_sorted(&s_big, e) > 1e-3 && dist_to_sorted(&s_sub, e) > 1e-3 {
                break e;
            }
        };
        let g = Resolvent::new(&h_big, energy).unwrap().full().unwrap();
        let mut shifted = h_big.to_dense().unwrap();
        for k in 0..h_big.dim() {
            shifted[(k, k)] -= energy;
        }
        let residual = &shifted * &g - DMatrix::identity(h_big.dim(), h_big.dim());
        worst_inverse = worst_inverse.max(residual.amax());

        let x = sub.site_at(rng.random_range(0..h_sub.dim()));
        let y = loop {
            let y = big.site_at(rng.random_range(0..h_big.dim()));
            if !sub.contains(&y) {
                break y;
            }
        };
        let report = verify_gri(&h_big, &h_sub, energy, &x, &y).map_err(|e| format!("config {i}: {e}"))?;
        worst_gri = worst_gri.max(report.residual / (1.0 + report.direct.abs()));
    }
    check(
        worst_inverse <= 1e-8 && worst_gri <= 1e-8,
        format!("max |(H-E)G - I| = {worst_inverse:.2e}, max relative GRI residual = {worst_gri:.2e} over 100 configurations"),
    )
}

fn wegner() -> Outcome {
    let dims = Dims::new(1, 1, 1).unwrap();
    let (first, second) = separated_pair(dims, 2);
    let s_grid = vec![0.005, 0.01, 0.02, 0.05];
    let result = wegner_experiment(&WegnerSetup {
        dims,
        first,
        second,
        spec: DisorderSpec::new(Law::Gaussian { mean: 0.0, stdev: 1.0 }, 5).unwrap(),
        interaction: InteractionSpec::none(),
        s_grid,
        trials: 10_000,
        modulus_trials: Some(10_000),
        workers: 0,
    })
    .map_err(|e| e.to_string())?;
    let q = result.mean_region_size as f64;
    let mut ok = result.exact_collisions == 0;
    let mut detail = Vec::new();
    let mut previous = 0;
    for row in &result.rows {
        let bound = 25.0 * 2.0 * row.s * q.sqrt() / (2.0 * std::f64::consts::PI).sqrt();
        ok &= row.estimate.upper() <= bound && row.estimate.successes >= previous;
        previous = row.estimate.successes;
        detail.push(format!("s={}: CI hi {:.4} <= {:.4}", row.s, row.estimate.upper(), bound));
    }
    check(ok, detail.join("; "))
}

fn lifshitz() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in 1..=2 {
        let mut estimates = Vec::new();
        for l0 in [4, 9, 16, 25] {
            let r = lifshitz_experiment(&LifshitzSetup {
                dims: Dims::new(1, n, n).unwrap(),
                l0,
                spec: DisorderSpec::new(Law::Uniform { low: 0.0, high: 1.0 }, 6).unwrap(),
                interaction: InteractionSpec::none(),
                c: 1.0,
                trials: 10_000,
                workers: 0,
            })
            .map_err(|e| e.to_string())?;
            estimates.push(r.estimate);
        }
        let strictly = estimates.windows(2).all(|w| w[1].p_hat < w[0].p_hat);
        let separated = estimates[3].upper() < estimates[0].lower();
        ok &= strictly && separated;
        let ps: Vec<String> = estimates.iter().map(|e| format!("{:.4}", e.p_hat)).collect();
        detail.push(format!("n={n}: p = [{}], endpoint CIs disjoint: {separated}", ps.join(", ")));
    }
    check(ok, detail.join("; "))
}

fn msa_coherence() -> Outcome {
    let gammas = gamma(0.5, 16, 2, 2, GammaExponent::Quarter) == 0.75 && gamma(0.5, 16, 1, 2, GammaExponent::Quarter) == 1.125;
    let scales = ScaleSequence::new(3).unwrap().values(3).unwrap() == vec![3, 6, 15, 59];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut monotone, mut ns_seen) = (0, 0);
    for i in 0..100 {
        let n = rng.random_range(1..=2);
        let cube = Cube::at_origin(Dims::new(1, n, 2).unwrap(), rng.random_range(1..=4));
        let spec = DisorderSpec::new(random_law(&mut rng), 700 + i).unwrap();
        let h = hamiltonian(&cube, &spec, &random_interaction(&mut rng, n), i);
        let decomp = diagonalize(&h).unwrap();
        let ev = decomp.eigenvalues();
        let energy = rng.random_range(ev[0] - 2.0..ev[ev.len() - 1] + 2.0);
        let strong = MsaParams::new(10.0, rng.random_range(0.01..2.0), 3, 10.0).unwrap();
        let weak = strong.with_m(strong.m * rng.random_range(0.0..1.0));
        let a = is_ns(&h, &decomp, energy, &strong);
        let b = is_ns(&h, &decomp, energy, &weak);
        ns_seen += a.is_ns as usize;
        if !a.is_ns || b.is_ns {
            monotone += 1;
        }
    }
    check(
        gammas && scales && monotone == 100,
        format!("gamma hand values: {gammas}; 3->6->15->59: {scales}; monotone in m on {monotone}/100 ({ns_seen} NS at the larger m)"),
    )
}

fn subharmonic() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for l in [20u64, 50] {
        let cube = Cube::at_origin(Dims::new(2, 1, 1).unwrap(), l);
        for ell in [2u64, 5] {
            for q in [0.3f64, 0.7] {
                let f: Vec<f64> = (0..cube.volume().unwrap() as usize)
                    .map(|i| {
                        let r = cube.site_at(i).max_dist(cube.center()) as f64;
                        q.powf((l as f64 - r) / ell as f64)
                    })
                    .collect();
                let report = verify_subharmonic_descent(&cube, &f, ell, q, &[], 1.0).map_err(|e| e.to_string())?;
                let ratio = report.center_ratio.unwrap_or(f64::NAN);
                let tight = ratio >= q * q * (1.0 - 1e-12);
                ok &= report.is_subharmonic() && report.conclusion_holds() && tight;
                detail.push(format!("L={l},l={ell},q={q}: f(0)/bound={ratio:.3}"));
            }
        }
    }
    check(ok, detail.join("; "))
}

/// `cos(τH)` and `sin(τH)` by Taylor series on `τH / 2^k` and angle doubling.
fn trig(h: &DMatrix<f64>, tau: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let norm = h.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * tau;
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.5 {
        k += 1;
    }
    let a = h * (tau / 2f64.powi(k));
    let a2 = &a * &a;
    let mut c = DMatrix::identity(n, n);
    let mut s = a.clone();
    let mut term_c = DMatrix::identity(n, n);
    let mut term_s = a.clone();
    for j in 1..20 {
        let jf = j as f64;
        term_c = -&term_c * &a2 / ((2.0 * jf - 1.0) * (2.0 * jf));
        term_s = -&term_s * &a2 / ((2.0 * jf) * (2.0 * jf + 1.0));
        c += &term_c;
        s += &term_s;
    }
    for _ in 0..k {
        let c2 = &c * &c - &s * &s;
        let s2 = (&s * &c) * 2.0;
        c = c2;
        s = s2;
    }
    (c, s)
}

fn correlator_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut violations, mut diag_err, mut checked) = (0, 0.0f64, 0);
    let whole = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..50 {
        let (d, n, l) = match rng.random_range(0..5) {
            0 => (1, 1, rng.random_range(5..=99)),
            1 => (1, 2, rng.random_range(1..=6)),
            2 => (2, 1, rng.random_range(1..=6)),
            3 => (1, 3, 2),
            _ => (3, 1, 2),
        };
        let cube = Cube::at_origin(Dims::new(d, n, n).unwrap(), l);
        let spec = DisorderSpec::new(random_law(&mut rng), 900 + i).unwrap();
        let h = hamiltonian(&cube, &spec, &random_interaction(&mut rng, n), i);
        assert!(h.dim() <= 200);
        let decomp = diagonalize(&h).unwrap();
        let base = cube.index_of(&Site::origin(d * n)).unwrap();
        let dense = h.to_dense().unwrap();
        for tau in [1.0, 10.0] {
            let (c, s) = trig(&dense, tau);
            for x in 0..h.dim() {
                let q = correlator(&decomp, whole, x, base);
                checked += 2;
                violations += (c[(x, base)].abs() > q + 1e-9) as usize;
                violations += (s[(x, base)].abs() > q + 1e-9) as usize;
            }
        }
        for x in 0..h.dim() {
            diag_err = diag_err.max((correlator(&decomp, whole, x, x) - 1.0).abs());
        }
    }
    check(
        violations == 0 && diag_err <= 1e-9,
        format!("{violations} violations in {checked} kernel entries; max |Q(x,x) - 1| = {diag_err:.2e}"),
    )
}

fn localization_trend() -> Outcome {
    let mut medians = Vec::new();
    let mut r2_at_50 = 0.0;
    for b in [1.0, 10.0, 50.0] {
        let result = eigenfunction_decay(&DecaySetup {
            cube: Cube::at_origin(Dims::new(1, 2, 2).unwrap(), 6),
            spec: DisorderSpec::new(Law::Uniform { low: 0.0, high: b }, 10).unwrap(),
            interaction: InteractionSpec::on_site(1.0).unwrap(),
            selection: EigenSelection::Lowest(5),
            options: DecayOptions::default(),
            trials: 100,
            workers: 0,
        })
        .map_err(|e| e.to_string())?;
        medians.push(result.median_mass.unwrap_or(f64::NAN));
        r2_at_50 = result.median_r_squared.unwrap_or(f64::NAN);
    }
    let monotone = medians[0] < medians[1] && medians[1] < medians[2];
    check(
        monotone && medians[2] > 0.5 && r2_at_50 > 0.8,
        format!(
            "median mass b=1: {:.3}, b=10: {:.3}, b=50: {:.3}; median r^2 at b=50: {r2_at_50:.3}",
            medians[0], medians[1], medians[2]
        ),
    )
}

fn determinism() -> Outcome {
    let configs = [
        "d = 1\nn = 1\nN = 1\ndisorder = gaussian(0, 1)\nexperiment = wegner\nL = 2\ns = 0.005, 0.01, 0.02, 0.05\ntrials = 10000\n",
        "d = 1\nn = 2\nN = 2\ndisorder = uniform(0, 1)\nexperiment = lifshitz\nL0 = 4, 9\nC = 1\ntrials = 2000\n",
        "d = 1\nn = 2\nN = 2\ndisorder = uniform(0, 50)\nphi = 1\nexperiment = decay\nL = 6\nselect = lowest(5)\ntrials = 100\n",
        "d = 1\nn = 2\nN = 2\ndisorder = uniform(0, 10)\nexperiment = spectrum\nL = 3\n",
        "d = 1\nn = 2\nN = 2\ndisorder = uniform(0, 20)\nmsa.m = 0.2\nmsa.E_star = 8\nexperiment = msa-scan\nL = 2\ntrials = 50\n",
        "d = 1\nn = 1\nN = 1\ndisorder = uniform(0, 30)\nexperiment = dynloc\nL = 15\nI = -100, 100\ns = 0, 1, 2\ntrials = 20\n",
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut identical = 0;
    for (k, text) in configs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (run_id, workers) in [(0, 1), (1, 4)] {
            let mut config = parse_config(text).map_err(|e| e.to_string())?;
            config.disorder.seed = 11;
            config.workers = workers;
            config.out = dir.path().join(format!("{k}-{run_id}"));
            let artifacts = run(&config, false).map_err(|e| e.to_string())?;
            outputs.push(std::fs::read(config.out.join(&artifacts.csv_name)).map_err(|e| e.to_string())?);
        }
        identical += (outputs[0] == outputs[1]) as usize;
    }
    check(
        identical == configs.len(),
        format!("{identical}/{} experiments produced byte-identical CSVs across two runs (1 and 4 workers)", configs.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("tensor spectrum oracle", tensor_spectrum),
        ("spectrum bounded below", spectral_bottom),
        ("Combes-Thomas bound", combes_thomas),
        ("resolvent identities", resolvent_identities),
        ("Wegner bound", wegner),
        ("Lifshitz trend", lifshitz),
        ("MSA predicate coherence", msa_coherence),
        ("subharmonic descent", subharmonic),
        ("correlator dominance", correlator_dominance),
        ("localization trend", localization_trend),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let mut failures = 0;
    for (i, (name, run_check)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2} ({name})", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.to_lowercase().contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(run_check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("{label}: PASS [{secs:.1}s] {detail}"),
            Err(detail) => {
                failures += 1;
                println!("{label}: FAIL [{secs:.1}s] {detail}");
            }
        }
    }
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
