use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use dilute::dyson::{dyson2_gap, dyson3_gap, GapMode, Softener2B, Softener3B};
use dilute::experiments::{GridSettings, PotentialSpec};
use dilute::jastrow::{mc_estimate, McConfig, TrialParams};
use dilute::linalg::LinearOperator;
use dilute::scatter2::{build_truncated_2b, solve_scattering_length, Resolution};
use dilute::scatter3::{build_truncated_3b, solve_scattering_energy};
use dilute::spectral::{build_hamiltonian, ground_state, rayleigh, temple_bound};
use dilute::{Error, Result};

use crate::table::{num, Table};
use crate::{Context, GridArgs};

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn scatter2(spec: &PotentialSpec, table: Option<&Path>, ell: Option<f64>) -> Result<Table> {
    let v = spec.two_body()?;
    if v.is_zero() {
        return Err(Error::InvalidInput("two-body potential is zero; give --v".into()));
    }
    let sol = solve_scattering_length(&v, Resolution::default())?;
    if let Some(path) = table {
        let ell = ell.unwrap_or(4.0 * v.support_radius());
        write_file(path, &build_truncated_2b(&v, ell)?.table().to_text())?;
    }
    let mut t = Table::new(&["a", "slope", "r_match", "support", "exterior_residual"]);
    t.push(vec![
        num(sol.a),
        num(sol.slope),
        num(sol.r_match),
        num(sol.support),
        num(sol.exterior_residual),
    ]);
    Ok(t)
}

pub fn scatter3(spec: &PotentialSpec, table: Option<&Path>, ell: Option<f64>) -> Result<Table> {
    let w = spec.three_body()?;
    if w.is_zero() {
        return Err(Error::InvalidInput("three-body potential is zero; give --w".into()));
    }
    let sol = solve_scattering_energy(&w, Resolution::default())?;
    if let Some(path) = table {
        let ell = ell.unwrap_or(4.0 * w.support_radius());
        write_file(path, &build_truncated_3b(&w, ell)?.table().to_text())?;
    }
    let mut t = Table::new(&["beta", "b", "b_tail", "det_m", "support"]);
    t.push(vec![
        num(sol.beta),
        num(sol.b),
        num(sol.b_tail),
        num(sol.det_m),
        num(sol.support),
    ]);
    Ok(t)
}

pub fn dyson_check(v: &PotentialSpec, w: &PotentialSpec, r: f64, c: f64, elements: usize) -> Result<Table> {
    let (v, w) = (v.two_body()?, w.three_body()?);
    if v.is_zero() && w.is_zero() {
        return Err(Error::InvalidInput("both potentials are zero; give --v or --w".into()));
    }
    let mode = GapMode::Sector { elements };
    let mut t = Table::new(&["operator", "r", "coefficient", "lambda_min", "tolerance", "passes"]);
    let mut push = |name: &str, rep: dilute::dyson::GapReport| {
        t.push(vec![
            name.into(),
            num(r),
            num(rep.coefficient),
            num(rep.lambda_min),
            num(rep.tolerance),
            rep.passes().to_string(),
        ]);
    };
    if !v.is_zero() {
        push("two_body", dyson2_gap(&v, &Softener2B::standard(), r, mode)?);
    }
    if !w.is_zero() {
        push("three_body", dyson3_gap(&w, &Softener3B::standard(), r, c, mode)?);
    }
    Ok(t)
}

pub fn grid_settings(ctx: &Context, args: &GridArgs) -> GridSettings {
    let base = ctx.config.as_ref().map(|c| c.grid.clone()).unwrap_or_default();
    GridSettings {
        particles: args.particles.unwrap_or(base.particles),
        nodes: args.nodes.unwrap_or(base.nodes),
        side: args.side.unwrap_or(base.side),
        tolerance: args.tolerance.unwrap_or(base.tolerance),
        window: base.window,
    }
}

pub fn temple(v: &PotentialSpec, w: &PotentialSpec, g: &GridSettings, eps: &[f64], seed: u64) -> Result<Table> {
    let h = build_hamiltonian(g.particles, g.side, g.nodes, &v.two_body()?, &w.three_body()?)?;
    let lambda0 = ground_state(&h, g.tolerance, seed)?.value;
    let ones = vec![1.0; h.dim()];
    let upper = rayleigh(&h, &ones);
    let mut t = Table::new(&["eps", "gamma", "temple", "lambda0", "rayleigh", "holds"]);
    for &e in eps {
        let a = h.split(e)?;
        let gamma = e * PI * PI / (2.0 * g.side * g.side);
        let lower = temple_bound(&a, &ones, gamma)?;
        let holds = lower <= lambda0 + g.tolerance && lambda0 <= upper + g.tolerance;
        t.push(vec![
            num(e),
            num(gamma),
            num(lower),
            num(lambda0),
            num(upper),
            holds.to_string(),
        ]);
    }
    Ok(t)
}

pub fn exact(v: &PotentialSpec, w: &PotentialSpec, g: &GridSettings, seed: u64) -> Result<Table> {
    let h = build_hamiltonian(g.particles, g.side, g.nodes, &v.two_body()?, &w.three_body()?)?;
    let gs = ground_state(&h, g.tolerance, seed)?;
    let mut t = Table::new(&["particles", "nodes", "box", "lambda0", "residual", "matvecs"]);
    t.push(vec![
        g.particles.to_string(),
        g.nodes.to_string(),
        num(g.side),
        num(gs.value),
        num(gs.residual),
        gs.matvecs.to_string(),
    ]);
    Ok(t)
}

pub struct JastrowArgs {
    pub particles: Option<usize>,
    pub side: Option<f64>,
    pub rho: Option<f64>,
    pub ell1: Option<f64>,
    pub ell2: Option<f64>,
    pub chains: Option<usize>,
    pub sweeps: Option<usize>,
    pub batches: Option<usize>,
    pub step: Option<f64>,
    pub dump: Option<(PathBuf, usize)>,
}

const TERMS: [&str; 7] = ["i1", "i2", "j1", "j2", "k1", "k2", "k3"];

pub fn jastrow(ctx: &Context, v: &PotentialSpec, w: &PotentialSpec, args: &JastrowArgs) -> Result<Table> {
    let mut mc = match &ctx.config {
        Some(cfg) => cfg.mc_config(ctx.seed),
        None => McConfig {
            seed: ctx.seed,
            ..McConfig::default()
        },
    };
    let n = args
        .particles
        .or(ctx.config.as_ref().map(|c| c.mc.particles))
        .unwrap_or(64);
    let side = match (args.side, args.rho) {
        (Some(l), _) => l,
        (None, Some(rho)) if rho > 0.0 => (n as f64 / rho).cbrt(),
        (None, Some(rho)) => return Err(Error::InvalidInput(format!("density must be positive, got {rho}"))),
        (None, None) => return Err(Error::InvalidInput("give --box or --rho".into())),
    };
    mc.chains = args.chains.unwrap_or(mc.chains);
    mc.sweeps = args.sweeps.unwrap_or(mc.sweeps);
    mc.batches = args.batches.unwrap_or(mc.batches);
    mc.step_size = args.step.or(mc.step_size);
    mc.dump_every = args.dump.as_ref().map(|d| d.1);

    let tp = TrialParams::new(n, side, &v.two_body()?, &w.three_body()?, args.ell1, args.ell2)?;
    let est = mc_estimate(&tp, &mc)?;
    for warning in &est.warnings {
        eprintln!("warning: {warning}");
    }
    if let Some((path, _)) = &args.dump {
        let mut d = Table::new(&["chain", "sweep", "particle", "x", "y", "z"]);
        for s in &est.dumped {
            for (i, x) in s.positions.iter().enumerate() {
                d.push(vec![
                    s.chain.to_string(),
                    s.sweep.to_string(),
                    i.to_string(),
                    num(x[0]),
                    num(x[1]),
                    num(x[2]),
                ]);
            }
        }
        write_file(path, &d.to_csv()?)?;
    }

    let mut header = vec!["particles", "box", "ell1", "ell2", "a", "b"];
    let mut row = vec![
        n.to_string(),
        num(side),
        num(tp.ell1),
        num(tp.ell2),
        num(tp.a),
        num(tp.b),
    ];
    let ses = ["i1_se", "i2_se", "j1_se", "j2_se", "k1_se", "k2_se", "k3_se"];
    for ((name, se), term) in TERMS.iter().zip(ses).zip(est.terms()) {
        header.extend([*name, se]);
        row.extend([num(term.mean), num(term.se)]);
    }
    header.extend(["total", "total_se", "acceptance", "effective_samples"]);
    row.extend([
        num(est.total.mean),
        num(est.total.se),
        num(est.acceptance),
        num(est.effective_samples),
    ]);
    let mut t = Table::new(&header);
    t.push(row);
    Ok(t)
}
