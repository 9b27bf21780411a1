//! Parameter sweeps over scaled potential families.
//!
//! A sweep walks the grid `α × δ × density`, scales `V` by `α` and `W` by
//! `δ`, computes `a` and `b`, samples the trial state at the configured
//! particle number and evaluates the closed-form lower bound. Each grid
//! point becomes one [`SweepRow`]; a failing stage is recorded in the row
//! rather than aborting the sweep.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jastrow::{default_ell1, default_ell2, mc_estimate, McConfig, TrialParams};
use crate::potentials::{GasState, Grid6, Profile, RadialPotential, Table, ThreeBodyPotential};
use crate::scatter2::{solve_scattering_length, Resolution};
use crate::scatter3::solve_scattering_energy;
use crate::spectral::{prop_lower_bound, AlphaWindow, TempleConfig};
use crate::stats::{log_log_fit, LogLogFit};

/// First line of every sweep CSV.
pub const CSV_VERSION_LINE: &str = "# dilute-sweep v1";

/// A potential as written in a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    SoftSphere {
        amplitude: f64,
        radius: f64,
    },
    TruncatedGaussian {
        amplitude: f64,
        width: f64,
        radius: f64,
    },
    /// Two-column text file of radius and value (hyperradius for `W`).
    Table {
        path: PathBuf,
    },
    /// Six-dimensional samples; three-body only.
    Grid6 {
        path: PathBuf,
    },
}

impl PotentialSpec {
    fn path(&self) -> Option<&Path> {
        match self {
            PotentialSpec::Table { path } | PotentialSpec::Grid6 { path } => Some(path),
            _ => None,
        }
    }

    pub fn two_body(&self) -> Result<RadialPotential> {
        match self {
            PotentialSpec::Zero => Ok(RadialPotential::zero()),
            PotentialSpec::SoftSphere { amplitude, radius } => RadialPotential::soft_sphere(*amplitude, *radius),
            PotentialSpec::TruncatedGaussian {
                amplitude,
                width,
                radius,
            } => RadialPotential::truncated_gaussian(*amplitude, *width, *radius),
            PotentialSpec::Table { path } => RadialPotential::from_file(path),
            PotentialSpec::Grid6 { .. } => Err(Error::Config("grid6 is a three-body potential kind".into())),
        }
    }

    pub fn three_body(&self) -> Result<ThreeBodyPotential> {
        match self {
            PotentialSpec::Zero => Ok(ThreeBodyPotential::zero()),
            PotentialSpec::SoftSphere { amplitude, radius } => ThreeBodyPotential::soft_sphere(*amplitude, *radius),
            PotentialSpec::TruncatedGaussian {
                amplitude,
                width,
                radius,
            } => ThreeBodyPotential::truncated_gaussian(*amplitude, *width, *radius),
            PotentialSpec::Table { path } => {
                Ok(ThreeBodyPotential::MRadial(Profile::Tabulated(Table::from_file(path)?)))
            }
            PotentialSpec::Grid6 { path } => Ok(ThreeBodyPotential::Tabulated6d(Grid6::from_file(path)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scaling {
    #[serde(default = "unit_list")]
    pub alpha: Vec<f64>,
    #[serde(default = "unit_list")]
    pub delta: Vec<f64>,
}

fn unit_list() -> Vec<f64> {
    vec![1.0]
}

impl Default for Scaling {
    fn default() -> Self {
        Self {
            alpha: unit_list(),
            delta: unit_list(),
        }
    }
}

/// Densities, either directly or as target gas parameters `Y`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Density {
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarlo {
    pub particles: usize,
    pub chains: usize,
    pub sweeps: usize,
    pub burn_in: Option<usize>,
    pub step_size: Option<f64>,
    pub batches: usize,
    /// `ℓ₁ = ell1_factor · ρ^{−1/3}`.
    pub ell1_factor: f64,
    /// `ℓ₂ = ell2_factor · b^{1/4}(ρ b^{3/4})^{−1/7}`.
    pub ell2_factor: f64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            particles: 64,
            chains: 4,
            sweeps: 4000,
            burn_in: None,
            step_size: None,
            batches: 20,
            ell1_factor: 1.0,
            ell2_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Narrow,
    Wide,
}

impl From<Window> for AlphaWindow {
    fn from(w: Window) -> Self {
        match w {
            Window::Narrow => AlphaWindow::Narrow,
            Window::Wide => AlphaWindow::Wide,
        }
    }
}

/// Settings of the exact-diagonalization and Temple stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub particles: usize,
    pub nodes: usize,
    #[serde(rename = "box")]
    pub side: f64,
    pub tolerance: f64,
    pub window: Window,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            particles: 2,
            nodes: 8,
            side: 2.0,
            tolerance: 1e-9,
            window: Window::Narrow,
        }
    }
}

/// Everything a run needs, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub workers: usize,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub two_body: PotentialSpec,
    #[serde(default)]
    pub three_body: PotentialSpec,
    #[serde(default)]
    pub scaling: Scaling,
    #[serde(default)]
    pub density: Density,
    #[serde(default)]
    pub mc: MonteCarlo,
    #[serde(default)]
    pub grid: GridSettings,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file. Relative potential paths are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for spec in [&mut cfg.two_body, &mut cfg.three_body] {
            if let PotentialSpec::Table { path } | PotentialSpec::Grid6 { path } = spec {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        for (name, list) in [
            ("scaling.alpha", &self.scaling.alpha),
            ("scaling.delta", &self.scaling.delta),
        ] {
            if list.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if let Some(x) = list.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return bad(format!("{name} contains {x}; scale factors must be positive"));
            }
        }
        match (self.density.rho.is_empty(), self.density.y.is_empty()) {
            (true, true) => return bad("density needs a rho or a y list".into()),
            (false, false) => return bad("give either density.rho or density.y, not both".into()),
            _ => {}
        }
        if let Some(x) = self.density.rho.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return bad(format!("density.rho contains {x}"));
        }
        if let Some(x) = self.density.y.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return bad(format!("density.y contains {x}; targets must lie in (0, 1)"));
        }
        for spec in [&self.two_body, &self.three_body] {
            if let Some(p) = spec.path() {
                if !p.exists() {
                    return bad(format!("potential file {} does not exist", p.display()));
                }
            }
        }
        if self.mc.particles == 0 {
            return bad("mc.particles must be positive".into());
        }
        if !(self.mc.ell1_factor > 0.0 && self.mc.ell2_factor > 0.0) {
            return bad("cut-off factors must be positive".into());
        }
        // the step bound depends on the box side and is checked again per row
        self.mc_config(0).check(self.mc.step_size.map_or(1.0, |s| 4.0 * s))
    }

    pub fn mc_config(&self, seed: u64) -> McConfig {
        McConfig {
            chains: self.mc.chains,
            sweeps: self.mc.sweeps,
            burn_in: self.mc.burn_in,
            step_size: self.mc.step_size,
            seed,
            batches: self.mc.batches,
            dump_every: None,
        }
    }
}

/// Density with `ρ max(a, ρb)³ = y`; the left side increases with `ρ`.
pub fn rho_for_y(y: f64, a: f64, b: f64) -> Result<f64> {
    if !(y > 0.0) || (a <= 0.0 && b <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "cannot reach Y = {y} with a = {a}, b = {b}"
        )));
    }
    if a > 0.0 {
        let rho = y / a.powi(3);
        if rho * b <= a {
            return Ok(rho);
        }
    }
    Ok((y / b.powi(3)).powf(0.25))
}

/// One grid point of a sweep. Energies are per unit volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub delta: f64,
    pub rho: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub frak_a: Option<f64>,
    pub y: Option<f64>,
    pub e_pred: Option<f64>,
    pub particles: usize,
    pub side: Option<f64>,
    pub upper: Option<f64>,
    pub upper_se: Option<f64>,
    pub lower: Option<f64>,
    pub ratio_upper: Option<f64>,
    pub ratio_upper_se: Option<f64>,
    pub ratio_lower: Option<f64>,
    pub nu_hat: Option<f64>,
    pub acceptance: Option<f64>,
    /// Empty when every stage succeeded.
    pub reason: String,
}

impl SweepRow {
    fn empty(alpha: f64, delta: f64, particles: usize) -> Self {
        Self {
            alpha,
            delta,
            rho: None,
            a: None,
            b: None,
            frak_a: None,
            y: None,
            e_pred: None,
            particles,
            side: None,
            upper: None,
            upper_se: None,
            lower: None,
            ratio_upper: None,
            ratio_upper_se: None,
            ratio_lower: None,
            nu_hat: None,
            acceptance: None,
            reason: String::new(),
        }
    }

    fn fail(&mut self, stage: &str, e: &Error) {
        if !self.reason.is_empty() {
            self.reason.push_str("; ");
        }
        let _ = write!(self.reason, "{stage}: {e}");
    }
}

struct Point {
    alpha: f64,
    delta: f64,
    density: f64,
}

fn grid_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let densities = if cfg.density.rho.is_empty() {
        &cfg.density.y
    } else {
        &cfg.density.rho
    };
    let mut out = Vec::new();
    for &alpha in &cfg.scaling.alpha {
        for &delta in &cfg.scaling.delta {
            for &density in densities {
                out.push(Point { alpha, delta, density });
            }
        }
    }
    out
}

fn run_row(cfg: &ExperimentConfig, v: &RadialPotential, w: &ThreeBodyPotential, p: &Point, seed: u64) -> SweepRow {
    let n = cfg.mc.particles;
    let mut row = SweepRow::empty(p.alpha, p.delta, n);
    let res = Resolution::default();
    let scaled = v.rescale(p.alpha).and_then(|v| Ok((v, w.rescale(p.delta)?)));
    let (v, w) = match scaled {
        Ok(x) => x,
        Err(e) => {
            row.fail("scaling", &e);
            return row;
        }
    };
    let a = if v.is_zero() {
        Ok(0.0)
    } else {
        solve_scattering_length(&v, res).map(|s| s.a)
    };
    let b = if w.is_zero() {
        Ok(0.0)
    } else {
        solve_scattering_energy(&w, res).map(|s| s.b)
    };
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => {
            row.fail("scatter2", &e);
            return row;
        }
        (_, Err(e)) => {
            row.fail("scatter3", &e);
            return row;
        }
    };
    row.a = Some(a);
    row.b = Some(b);
    let rho = if cfg.density.rho.is_empty() {
        rho_for_y(p.density, a, b)
    } else {
        Ok(p.density)
    };
    let gas = match rho.and_then(|rho| GasState::new(rho, a, b)) {
        Ok(g) => g,
        Err(e) => {
            row.fail("density", &e);
            return row;
        }
    };
    let e_pred = gas.predicted_energy_density();
    row.rho = Some(gas.rho);
    row.frak_a = Some(gas.frak_a);
    row.y = Some(gas.y);
    row.e_pred = Some(e_pred);

    let side = (n as f64 / gas.rho).cbrt();
    row.side = Some(side);
    let ell1 = cfg.mc.ell1_factor * default_ell1(gas.rho);
    let ell2 = if b > 0.0 {
        cfg.mc.ell2_factor * default_ell2(gas.rho, b)
    } else {
        0.0
    };
    let upper =
        TrialParams::new(n, side, &v, &w, Some(ell1), Some(ell2)).and_then(|tp| mc_estimate(&tp, &cfg.mc_config(seed)));
    match upper {
        Ok(e) => {
            let vol = side.powi(3);
            row.upper = Some(e.total.mean / vol);
            row.upper_se = Some(e.total.se / vol);
            row.acceptance = Some(e.acceptance);
            if e_pred > 0.0 {
                row.ratio_upper = Some(e.total.mean / vol / e_pred);
                row.ratio_upper_se = Some(e.total.se / vol / e_pred);
            }
        }
        Err(e) => row.fail("jastrow", &e),
    }

    let lower = TempleConfig::centred(gas.y, cfg.grid.window.into()).and_then(|tc| {
        let ell = tc.box_side(gas.frak_a);
        let count = (gas.rho * ell.powi(3)).round() as usize;
        prop_lower_bound(count, ell, &gas, &tc).map(|r| r.lower_bound() / ell.powi(5))
    });
    match lower {
        Ok(l) => {
            row.lower = Some(l);
            if e_pred > 0.0 {
                row.ratio_lower = Some(l / e_pred);
            }
        }
        Err(e) => row.fail("lower", &e),
    }
    row
}

/// Runs every grid point, `workers` rows at a time, and fills `nu_hat`
/// from the rows that produced an upper estimate. Row `k` samples with
/// seed `cfg.seed + k`, so the output does not depend on `workers`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let v = cfg.two_body.two_body()?;
    let w = cfg.three_body.three_body()?;
    let points = grid_points(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(k, p)| run_row(cfg, &v, &w, p, cfg.seed.wrapping_add(k as u64)))
            .collect()
    });
    if let Ok(fit) = fit_exponent(&rows) {
        for row in &mut rows {
            row.nu_hat = Some(fit.slope);
        }
    }
    Ok(rows)
}

/// Log-log fit of `|ratio_upper − 1|` against `Y`.
pub fn fit_exponent(rows: &[SweepRow]) -> Result<LogLogFit> {
    let (y, dev): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| Some((r.y?, (r.ratio_upper? - 1.0).abs())))
        .unzip();
    log_log_fit(&y, &dev)
}

/// Writes the version line, a header and one line per row.
pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut out = out;
    let io = |source: std::io::Error| Error::Io {
        path: PathBuf::from("<csv>"),
        source,
    };
    writeln!(out, "{CSV_VERSION_LINE}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Column order of [`SweepRow`] in the CSV.
pub const CSV_COLUMNS: [&str; 19] = [
    "alpha",
    "delta",
    "rho",
    "a",
    "b",
    "frak_a",
    "y",
    "e_pred",
    "particles",
    "side",
    "upper",
    "upper_se",
    "lower",
    "ratio_upper",
    "ratio_upper_se",
    "ratio_lower",
    "nu_hat",
    "acceptance",
    "reason",
];

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Reads a file written by [`write_csv`], checking the version line.
pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match text.lines().next() {
        Some(CSV_VERSION_LINE) => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "{}: expected `{CSV_VERSION_LINE}` on the first line, found {other:?}",
                path.display()
            )))
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.deserialize()
        .collect::<std::result::Result<Vec<SweepRow>, _>>()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Text summary of a sweep and the fitted exponent, if one could be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: String,
    pub fit: Option<LogLogFit>,
    pub files: Vec<PathBuf>,
}

/// Summarizes `rows`; with `dir`, also writes `ratio_vs_y.dat` and
/// `summary.txt` there.
pub fn emit_report(rows: &[SweepRow], dir: Option<&Path>) -> Result<Report> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no rows to report".into()));
    }
    let mut s = String::new();
    let ok = rows.iter().filter(|r| r.reason.is_empty()).count();
    let _ = writeln!(
        s,
        "rows: {} ({} complete, {} with failures)",
        rows.len(),
        ok,
        rows.len() - ok
    );
    let _ = writeln!(
        s,
        "{:>12} {:>12} {:>12} {:>10} {:>14}",
        "Y", "upper/pred", "se", "lower/pred", "acceptance"
    );
    let fmt = |x: Option<f64>, p: usize| x.map_or("-".to_string(), |v| format!("{v:.p$}"));
    for r in rows {
        let _ = writeln!(
            s,
            "{:>12} {:>12} {:>12} {:>10} {:>14}",
            r.y.map_or("-".to_string(), |v| format!("{v:.4e}")),
            fmt(r.ratio_upper, 5),
            fmt(r.ratio_upper_se, 5),
            fmt(r.ratio_lower, 3),
            fmt(r.acceptance, 3),
        );
        if !r.reason.is_empty() {
            let _ = writeln!(s, "    {}", r.reason);
        }
    }
    let fit = match fit_exponent(rows) {
        Ok(f) => {
            let _ = writeln!(
                s,
                "fit |upper/pred - 1| ~ Y^nu: nu = {:.4} +- {:.4} over {} rows",
                f.slope, f.slope_se, f.points
            );
            Some(f)
        }
        Err(e) => {
            let _ = writeln!(s, "no fit: {e}");
            None
        }
    };
    let mut files = Vec::new();
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut dat = String::from("# y ratio_upper ratio_upper_se ratio_lower\n");
        for r in rows.iter().filter(|r| r.y.is_some()) {
            let num = |x: Option<f64>| x.map_or("nan".to_string(), |v| format!("{v:.10e}"));
            let _ = writeln!(
                dat,
                "{} {} {} {}",
                num(r.y),
                num(r.ratio_upper),
                num(r.ratio_upper_se),
                num(r.ratio_lower)
            );
        }
        for (name, body) in [("ratio_vs_y.dat", &dat), ("summary.txt", &s)] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            files.push(path);
        }
    }
    Ok(Report { summary: s, fit, files })
}
