//! One function per subcommand. Every output file carries the fully
//! resolved configuration (minus the output directory, so that runs into
//! different directories stay byte-identical).

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use landau_core::chern::{
    fermi_spectrum, gap_obstruction, hall_conductance, FermiProjection, HalfPlaneSwitches, Window,
};
use landau_core::config::{LambdaSpec, RunConfig};
use landau_core::fiber::{band_table, uniform_k_grid, FiberConfig};
use landau_core::format::fmt_f64;
use landau_core::random_field::{
    check_spectral_location, discretization_allowance, discretize, write_spectrum_csv, ClusterReport,
    Perturbation, RealizationManifest,
};
use landau_core::selftest::run_selftest;
use landau_core::splitting::{admissibility_report, estimate_splitting, excluded_fields, is_admissible};
use landau_core::{chern, Error};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command};

/// Coupling grid for `split` when the config gives none.
const DEFAULT_SPLIT_GRID: [f64; 3] = [1e-3, 3e-3, 1e-2];

/// Coupling for `random-spectrum` when the config gives none.
const DEFAULT_RANDOM_LAMBDA: f64 = 0.05;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(PathBuf, io::Error),
    Usage(String),
    /// Checks ran but some failed.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Failed(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) | CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if cli.command == Command::Selftest {
        return selftest(&output_dir(cli, None));
    }
    let (mut cfg, text) = load_config(cli)?;
    let dir = output_dir(cli, cfg.out.as_deref());
    cfg.out = None;
    match cli.command {
        Command::Bands => bands(cfg, &dir),
        Command::Split => split(cfg, &dir),
        Command::Admissible => admissible(cfg, &dir),
        Command::RandomSpectrum => random_spectrum(cfg, text.as_deref(), &dir),
        Command::Chern => chern_report(cfg, text.as_deref(), &dir),
        Command::Selftest => unreachable!(),
    }
}

fn output_dir(cli: &Cli, from_config: Option<&str>) -> PathBuf {
    cli.out.clone().or_else(|| from_config.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

/// Reads and validates the config file, then applies command-line
/// overrides and validates again.
fn load_config(cli: &Cli) -> Result<(RunConfig, Option<String>)> {
    let (mut cfg, text) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?;
            (RunConfig::from_json(&text)?, Some(text))
        }
        None => match cli.overrides.b {
            Some(b) => (RunConfig::new(b), None),
            None => return Err(CliError::Usage("either --config or --B is required".into())),
        },
    };
    let o = &cli.overrides;
    if let Some(v) = o.b {
        cfg.b = v;
    }
    if let Some(v) = o.bands {
        cfg.bands = v;
    }
    if let Some(v) = &o.lambda {
        cfg.lambda = Some(if v.len() == 1 { LambdaSpec::Single(v[0]) } else { LambdaSpec::Grid(v.clone()) });
    }
    if let Some(v) = o.eta {
        cfg.eta = v;
    }
    if let Some(v) = o.l {
        cfg.l = v;
    }
    if let Some(v) = o.h {
        cfg.h = v;
    }
    if let Some(v) = o.field_rtol {
        cfg.field_rtol = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok((cfg, text))
}

fn single_lambda(cfg: &RunConfig, default: f64) -> Result<f64> {
    match cfg.lambda_values_or(&[default]).as_slice() {
        [v] => Ok(*v),
        _ => Err(CliError::Core(Error::Config { line: None, message: "this command takes a single lambda".into() })),
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(path.clone(), e))?;
    println!("{}", path.display());
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write(dir, name, text.as_bytes())
}

fn config_comment(cfg: &RunConfig) -> String {
    format!("# config: {}\n", cfg.to_json())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn bands(mut cfg: RunConfig, dir: &Path) -> Result<()> {
    let lambda = single_lambda(&cfg, 0.0)?;
    cfg.lambda = Some(LambdaSpec::Single(lambda));
    cfg.basis_size = Some(cfg.basis());
    let profile = cfg.resolved_profile()?;
    let fiber = FiberConfig::new(cfg.b, lambda, 0.0, profile, cfg.basis())?;
    let table = band_table(cfg.bands, lambda, &uniform_k_grid(cfg.b, cfg.k_samples), &fiber)?;
    let mut out = config_comment(&cfg).into_bytes();
    table.write_csv(&mut out).expect("writing to memory");
    write(dir, "bands.csv", &out)?;
    Ok(())
}

fn split(mut cfg: RunConfig, dir: &Path) -> Result<()> {
    let grid = cfg.lambda_values_or(&DEFAULT_SPLIT_GRID);
    cfg.lambda = Some(LambdaSpec::Grid(grid.clone()));
    cfg.basis_size = Some(cfg.basis());
    let profile = cfg.resolved_profile()?;
    let mut estimates = Vec::new();
    let mut not_admissible = Vec::new();
    for j in 1..=cfg.bands {
        if is_admissible(j, cfg.b, &profile)?.admissible {
            estimates.push(estimate_splitting(j, cfg.b, &profile, &grid, cfg.basis())?);
        } else {
            not_admissible.push(j);
        }
    }
    let report = json!({
        "config": to_value(&cfg),
        "estimates": to_value(&estimates),
        "not_admissible": not_admissible,
    });
    write_json(dir, "split.json", &report)?;
    Ok(())
}

/// Excluded field within `rtol` of `b`, if any. The search range covers
/// `b` even when it lies beyond `B_max`.
fn snap_field(cfg: &RunConfig, profile: &landau_core::PeriodicProfile) -> Result<Option<f64>> {
    let range = cfg.b_max.max(cfg.b * (1.0 + cfg.field_rtol) * 1.01);
    let fields = excluded_fields(cfg.bands, profile, range)?;
    Ok(fields.into_iter().find(|f| (cfg.b - f).abs() <= cfg.field_rtol * f))
}

fn admissible(cfg: RunConfig, dir: &Path) -> Result<()> {
    let profile = cfg.resolved_profile()?;
    let snapped = snap_field(&cfg, &profile)?;
    let evaluated = snapped.unwrap_or(cfg.b);
    let report = admissibility_report(cfg.bands, evaluated, &profile, cfg.b_max)?;
    let out = json!({
        "config": to_value(&cfg),
        "evaluated_B": evaluated,
        "snapped_to_excluded_field": snapped.is_some(),
        "all_admissible": report.all_admissible(),
        "report": to_value(&report),
    });
    write_json(dir, "admissible.json", &out)?;
    Ok(())
}

fn manifest(cfg: &RunConfig, lambda: f64, realization: u64) -> RealizationManifest {
    RealizationManifest {
        b: cfg.b,
        lambda,
        eta: cfg.eta,
        l: cfg.l,
        h: cfg.h,
        seed: cfg.seed,
        realization,
        profile: cfg.profile.clone(),
    }
}

fn random_spectrum(mut cfg: RunConfig, text: Option<&str>, dir: &Path) -> Result<()> {
    cfg.validate_grid(text)?;
    let lambda = single_lambda(&cfg, DEFAULT_RANDOM_LAMBDA)?;
    cfg.lambda = Some(LambdaSpec::Single(lambda));
    let ceiling = 2.0 * cfg.bands as f64 * cfg.b;

    let clean = discretize(cfg.l, cfg.h, cfg.b, &Perturbation::None)?;
    let clean_spectrum = fermi_spectrum(&clean, ceiling)?;
    let clean_bulk = chern::bulk_eigenvalues(&clean, &clean_spectrum);
    let epsilon_h = discretization_allowance(&clean_bulk, cfg.b, cfg.bands);

    let runs = (0..cfg.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let m = manifest(&cfg, lambda, r);
            let (_, ham) = m.build()?;
            let spectrum = fermi_spectrum(&ham, ceiling)?;
            let bulk = chern::bulk_eigenvalues(&ham, &spectrum);
            let report = check_spectral_location(&bulk, cfg.b, lambda, cfg.bands, epsilon_h, None)?;
            Ok((m, spectrum.values, bulk.len(), report))
        })
        .collect::<std::result::Result<Vec<(RealizationManifest, Vec<f64>, usize, ClusterReport)>, Error>>()?;

    let comment = config_comment(&cfg);
    let mut realizations = Vec::new();
    for (m, values, bulk_count, report) in &runs {
        let mut csv = comment.clone().into_bytes();
        write_spectrum_csv(values, &mut csv).expect("writing to memory");
        write(dir, &format!("spectrum_r{}.csv", m.realization), &csv)?;
        realizations.push(json!({
            "manifest": to_value(m),
            "bulk_eigenvalues": bulk_count,
            "report": to_value(report),
        }));
    }
    let fitted: Vec<f64> = runs.iter().filter_map(|r| r.3.fitted_c).collect();
    let ratio = match (fitted.iter().copied().reduce(f64::max), fitted.iter().copied().reduce(f64::min)) {
        (Some(hi), Some(lo)) if lo > 0.0 => Some(hi / lo),
        _ => None,
    };
    let out = json!({
        "config": to_value(&cfg),
        "epsilon_h": epsilon_h,
        "clean_bulk_eigenvalues": clean_bulk.len(),
        "bulk_margin_magnetic_lengths": chern::BULK_MARGIN,
        "bulk_weight": chern::BULK_WEIGHT,
        "fitted_c_ratio": ratio,
        "realizations": realizations,
    });
    write_json(dir, "cluster_report.json", &out)?;
    Ok(())
}

fn chern_report(mut cfg: RunConfig, text: Option<&str>, dir: &Path) -> Result<()> {
    cfg.validate_grid(text)?;
    let grid = cfg.lambda_values_or(&[0.0]);
    cfg.lambda = Some(if grid.len() == 1 { LambdaSpec::Single(grid[0]) } else { LambdaSpec::Grid(grid.clone()) });
    let energies: Vec<f64> = match cfg.energy {
        Some(e) => vec![e],
        None => (1..=cfg.bands).map(|j| 2.0 * j as f64 * cfg.b).collect(),
    };
    let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let switches = HalfPlaneSwitches::default();
    let window = Window::central_fraction(cfg.l, cfg.window_divisor);

    let mut results = Vec::new();
    let mut csv = config_comment(&cfg);
    csv.push_str("lambda,E,sigma_hall,imag_residual\n");
    for &lambda in &grid {
        let (_, ham) = manifest(&cfg, lambda, 0).build()?;
        let spectrum = fermi_spectrum(&ham, top)?;
        for &e in &energies {
            if let Some((upper, lower)) = gap_obstruction(&ham, &spectrum, e) {
                let j = ((e / cfg.b) / 2.0).round().max(1.0) as usize;
                return Err(Error::BandOverlap { j, lambda, upper, lower }.into());
            }
            let p = FermiProjection::new(&spectrum, ham.dim(), e)?;
            let hc = hall_conductance(&ham, &p, &switches, Some(&window));
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(lambda),
                fmt_f64(e),
                fmt_f64(hc.sigma_hall),
                fmt_f64(hc.imag_residual)
            ));
            results.push(json!({
                "B": cfg.b,
                "lambda": lambda,
                "eta": cfg.eta,
                "seed": cfg.seed,
                "E": e,
                "sigma_hall": hc.sigma_hall,
                "imag_residual": hc.imag_residual,
                "theta_re": hc.theta_re,
                "theta_im": hc.theta_im,
                "rank": hc.rank,
                "window": to_value(&window),
            }));
        }
    }
    write_json(dir, "chern.json", &json!({ "config": to_value(&cfg), "results": results }))?;
    write(dir, "plateau.csv", csv.as_bytes())?;
    Ok(())
}

fn selftest(dir: &Path) -> Result<()> {
    let report = run_selftest();
    for c in &report.checks {
        eprintln!("{} {} ({:e} < {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    eprintln!("passed {} failed {}", report.passed, report.failed);
    write_json(dir, "selftest.json", &to_value(&report))?;
    if report.failed > 0 {
        return Err(CliError::Failed(format!("{} selftest checks failed", report.failed)));
    }
    Ok(())
}
