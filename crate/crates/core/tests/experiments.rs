use std::f64::consts::PI;

use dilute::experiments::{
    emit_report, fit_exponent, read_csv, rho_for_y, run_sweep, write_csv, ExperimentConfig, PotentialSpec, SweepRow,
    CSV_VERSION_LINE,
};
use dilute::potentials::GasState;
use dilute::ErrorKind;

const BASE: &str = r#"
seed = 3

[two_body]
kind = "soft_sphere"
amplitude = 8.0
radius = 0.5

[three_body]
kind = "truncated_gaussian"
amplitude = 10.0
width = 0.3
radius = 0.5

[density]
y = [1e-3, 3e-4]

[mc]
particles = 8
chains = 2
sweeps = 150
batches = 5
ell1_factor = 1.5
ell2_factor = 1.5
"#;

fn base() -> ExperimentConfig {
    ExperimentConfig::from_toml(BASE).unwrap()
}

fn synthetic(y: f64, ratio: f64) -> SweepRow {
    let mut cfg = base();
    cfg.density.y = vec![0.5];
    let mut row = run_sweep(&cfg).unwrap().remove(0);
    row.y = Some(y);
    row.ratio_upper = Some(ratio);
    row.reason.clear();
    row
}

#[test]
fn config_parses_with_defaults() {
    let cfg = base();
    assert_eq!(cfg.workers, 1);
    assert_eq!(cfg.scaling.alpha, vec![1.0]);
    assert_eq!(
        cfg.two_body,
        PotentialSpec::SoftSphere {
            amplitude: 8.0,
            radius: 0.5
        }
    );
    cfg.validate().unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    let cases = [
        BASE.replace("y = [1e-3, 3e-4]", "y = []"),
        BASE.replace("y = [1e-3, 3e-4]", "y = [1e-2]\nrho = [1e-3]"),
        BASE.replace("[density]", "[scaling]\nalpha = []\n[density]"),
        BASE.replace(
            "kind = \"soft_sphere\"",
            "kind = \"table\"\npath = \"/nonexistent/v.txt\"",
        ),
        BASE.replace("seed = 3", ""),
        BASE.replace("particles = 8", "particles = 8\ncolour = 1"),
    ];
    for text in cases {
        let err = ExperimentConfig::from_toml(&text)
            .and_then(|c| c.validate())
            .unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Validation, "{text}");
    }
}

#[test]
fn density_targets_are_met() {
    for (a, b) in [(0.3, 0.0), (0.3, 2.0), (0.0, 2.0), (0.01, 50.0)] {
        for y in [1e-2, 1e-4] {
            let rho = rho_for_y(y, a, b).unwrap();
            let gas = GasState::new(rho, a, b).unwrap();
            assert!((gas.y - y).abs() < 1e-12 * y, "{a} {b} {y}: {}", gas.y);
        }
    }
    assert!(rho_for_y(1e-3, 0.0, 0.0).is_err());
}

#[test]
fn rows_are_consistent() {
    let rows = run_sweep(&base()).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.reason.is_empty() || r.reason.starts_with("lower"), "{}", r.reason);
        assert!(r.upper.is_some());
        let (rho, a, b) = (r.rho.unwrap(), r.a.unwrap(), r.b.unwrap());
        let frak = a.max(rho * b);
        assert_eq!(r.frak_a, Some(frak));
        assert!((r.y.unwrap() - rho * frak.powi(3)).abs() <= 1e-15 * r.y.unwrap());
        let pred = 4.0 * PI * a * rho * rho + b * rho.powi(3) / 6.0;
        assert!((r.e_pred.unwrap() - pred).abs() <= 1e-12 * pred);
        if let (Some(lo), Some(up), Some(se)) = (r.lower, r.upper, r.upper_se) {
            assert!(lo <= up + 2.0 * se);
        }
    }
}

#[test]
fn three_body_scaling_column() {
    let mut cfg = base();
    cfg.scaling.delta = vec![0.5, 1.0, 2.0, 4.0];
    cfg.density.y = vec![1e-2];
    let rows = run_sweep(&cfg).unwrap();
    let b1 = rows[1].b.unwrap();
    for (row, delta) in rows.iter().zip([0.5f64, 1.0, 2.0, 4.0]) {
        assert_eq!(row.a, rows[0].a);
        let want = delta.powi(4) * b1;
        assert!((row.b.unwrap() - want).abs() <= 1e-3 * want, "delta {delta}");
    }
}

#[test]
fn pure_three_body_rows() {
    let mut cfg = base();
    cfg.two_body = PotentialSpec::Zero;
    let rows = run_sweep(&cfg).unwrap();
    for r in &rows {
        assert_eq!(r.a, Some(0.0));
        let (rho, b) = (r.rho.unwrap(), r.b.unwrap());
        assert!((r.e_pred.unwrap() - b * rho.powi(3) / 6.0).abs() <= 1e-14 * r.e_pred.unwrap());
    }
}

#[test]
fn failing_stage_is_recorded() {
    let mut cfg = base();
    // ℓ₁ below twice the support radius
    cfg.mc.ell1_factor = 0.05;
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.upper.is_none());
        assert!(r.reason.contains("jastrow"), "{}", r.reason);
        assert!(r.a.is_some());
    }
}

#[test]
fn sweep_is_reproducible() {
    let csv = |cfg: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_csv(&run_sweep(cfg).unwrap(), &mut buf).unwrap();
        buf
    };
    let cfg = base();
    let first = csv(&cfg);
    assert_eq!(first, csv(&cfg));
    let mut parallel = cfg.clone();
    parallel.workers = 2;
    assert_eq!(first, csv(&parallel));
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_VERSION_LINE));
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("alpha,delta,rho,a,b,frak_a,y,e_pred"));
}

#[test]
fn csv_round_trip() {
    let rows = run_sweep(&base()).unwrap();
    let dir = std::env::temp_dir().join(format!("dilute-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rows.csv");
    dilute::experiments::write_csv_file(&rows, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), rows);
    std::fs::write(&path, "alpha,delta\n1,1\n").unwrap();
    assert_eq!(read_csv(&path).unwrap_err().kind(), ErrorKind::Validation);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn synthetic_exponent_is_recovered() {
    let template = synthetic(1e-2, 1.0);
    let rows: Vec<SweepRow> = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
        .iter()
        .map(|&y| SweepRow {
            y: Some(y),
            ratio_upper: Some(1.0 + y.sqrt()),
            ..template.clone()
        })
        .collect();
    let fit = fit_exponent(&rows).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "{fit:?}");
    let report = emit_report(&rows, None).unwrap();
    assert!(report.fit.is_some());
    assert!(report.summary.contains("nu = 0.5000"));
}

#[test]
fn report_edge_cases() {
    assert_eq!(emit_report(&[], None).unwrap_err().kind(), ErrorKind::Validation);
    let template = synthetic(1e-3, 1.1);
    let rows = vec![template.clone(), template.clone(), template];
    let report = emit_report(&rows, None).unwrap();
    assert!(report.fit.is_none());
    assert!(report.summary.contains("no fit"));
    assert!(report.summary.contains("rows: 3"));
}

#[test]
fn report_writes_plot_data() {
    let rows = run_sweep(&base()).unwrap();
    let dir = std::env::temp_dir().join(format!("dilute-report-{}", std::process::id()));
    let report = emit_report(&rows, Some(&dir)).unwrap();
    assert_eq!(report.files.len(), 2);
    let dat = std::fs::read_to_string(dir.join("ratio_vs_y.dat")).unwrap();
    assert_eq!(dat.lines().count(), 1 + rows.len());
    std::fs::remove_dir_all(&dir).unwrap();
}
