use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stripspectrum::analysis::{shooting_ground_state, ShootingConfig};
use stripspectrum::constructions::cutoff_seed;
use stripspectrum::domains::{build_mask, DomainSpec};
use stripspectrum::grid::{build_grid, GridSpec, ScalarField};
use stripspectrum::io::write_field;

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str], config: Option<&Path>, out: &str) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_stripspectrum"));
        cmd.args(args).arg("--out").arg(self.path(out));
        if let Some(c) = config {
            cmd.arg("--config").arg(c);
        }
        cmd.output().unwrap()
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from {report}"))
        .trim()
        .parse()
        .unwrap()
}

const LINE: &str = "dim = 1\ndomain.kind = whole-space\ngrid.h = 0.05\ngrid.z_min = -20\ngrid.z_max = 20\n";

#[test]
fn line_ground_state_summary() {
    let w = Work::new();
    let cfg = w.config("line.cfg", LINE);
    let o = w.run(&["ground-state"], Some(&cfg), "out");
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("domain,p,energy,pg_norm,iters,beta_z"));
    let e: f64 = lines.next().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((e - 4.0 / 3f64.sqrt()).abs() < 1e-3);
    for f in ["field.axf", "field.axf.mask", "trajectory.csv", "summary.csv"] {
        assert!(w.path("out").join(f).is_file(), "{f}");
    }
    let traj = std::fs::read_to_string(w.path("out/trajectory.csv")).unwrap();
    assert!(traj.starts_with("iter,t,energy,multiplier,pg_norm,barycenter_z\n"));
}

#[test]
fn strip_ground_state_near_m_and_its_diagnosis() {
    let w = Work::new();
    let cfg = w.config("strip.cfg", "domain.kind = strip\ndomain.q = 8\ngrid.s_max = 10\n");
    let o = w.run(&["ground-state"], Some(&cfg), "out");
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let e: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    let m = shooting_ground_state(&ShootingConfig::default()).unwrap().m;
    assert!((e - m).abs() < 0.02 * m, "E = {e}, m = {m}");

    let field = w.path("out/field.axf");
    let d = w.run(&["diagnose", field.to_str().unwrap()], None, "diag");
    assert_eq!(d.status.code(), Some(0));
    let r = stdout(&d);
    assert!((value(&r, "multiplier") - value(&r, "energy")).abs() < 10.0 * 1e-6);
    assert!(r.contains("sign_change = false"));
    let b = w.run(&["barycenter", field.to_str().unwrap()], None, "bar");
    assert!(value(&stdout(&b), "beta_z").abs() < 0.1);
}

#[test]
fn config_errors_leave_no_outputs() {
    let w = Work::new();
    for (name, text, cmd) in [
        ("nodomain.cfg", "p = 4\n", "ground-state"),
        ("empty_q.cfg", "theta.q_list =\n", "theta"),
        ("gap.cfg", "domain.kind = staircase\ndomain.widths = 1,3,8\nbarrier.gap = 3\n", "barrier"),
        ("typo.cfg", "domian.kind = strip\n", "ground-state"),
        ("p.cfg", "p = 7\ndomain.kind = whole-space\n", "ground-state"),
    ] {
        let cfg = w.config(name, text);
        let out = format!("{name}.out");
        let o = w.run(&[cmd], Some(&cfg), &out);
        assert_eq!(o.status.code(), Some(2), "{name}: {o:?}");
        assert!(!w.path(&out).exists(), "{name} wrote outputs");
    }
}

#[test]
fn single_q_is_trivially_monotone() {
    let w = Work::new();
    let cfg = w.config("t.cfg", "theta.q_list = 4\ntheta.h = 0.25\ntheta.depth = 10\nreference.m = 8.6\n");
    let o = w.run(&["theta"], Some(&cfg), "out");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("monotonicity: trivially-monotone"));
    let csv = std::fs::read_to_string(w.path("out/theta.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("q,theta,gap_to_m\n"));
}

#[test]
fn exhausted_budget_exits_as_stagnation() {
    let w = Work::new();
    let cfg = w.config("b.cfg", &format!("{LINE}flow.max_iter = 2\n"));
    let o = w.run(&["ground-state"], Some(&cfg), "out");
    assert_eq!(o.status.code(), Some(3));
    assert!(w.path("out/trajectory.csv").is_file());
}

#[test]
fn field_file_errors() {
    let w = Work::new();
    let missing = w.path("missing.axf");
    assert_eq!(w.run(&["diagnose", missing.to_str().unwrap()], None, "o").status.code(), Some(5));
    let g = build_grid(GridSpec::Line { h: 0.1, x_min: -1.0, x_max: 1.0 }).unwrap();
    let zero = w.path("zero.axf");
    write_field(&zero, &ScalarField::zeros(g, g.interior_mask())).unwrap();
    let o = w.run(&["diagnose", zero.to_str().unwrap()], None, "o");
    assert_eq!(o.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}

#[test]
fn cutoff_seed_file_and_seed_flag() {
    let w = Work::new();
    let radial = build_grid(GridSpec::Radial { h: 0.05, r_max: 10.0, dim: 3 }).unwrap();
    let omega = ScalarField::from_fn(radial, radial.interior_mask(), |r, _| 4.3 * (-r).exp()).unwrap();
    let grid = build_grid(GridSpec::Axial { hs: 0.1, hz: 0.1, s_max: 8.0, z_min: -4.0, z_max: 4.0, dim: 3 }).unwrap();
    let domain = build_mask(&DomainSpec::strip(8.0), &grid).unwrap();
    let seed = cutoff_seed(&omega, 6.0, 0.0, 4.0, &grid, &domain.mask).unwrap();
    let path = w.path("seed.axf");
    write_field(&path, &seed).unwrap();

    let d = w.run(&["diagnose", path.to_str().unwrap()], None, "o");
    let r = stdout(&d);
    let pg = value(&r, "pg_norm");
    assert!(pg > 0.0 && pg < 5.0, "{pg}");
    assert!(r.contains("sign_change = false"));

    let cfg = w.config("s.cfg", "domain.kind = strip\ndomain.q = 8\ngrid.s_max = 8\nflow.max_iter = 400\n");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stripspectrum"));
    let o = cmd
        .args(["ground-state", "--seed-field", path.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out"])
        .arg(w.path("seeded"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    let traj = std::fs::read_to_string(w.path("seeded/trajectory.csv")).unwrap();
    let e0: f64 = traj.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((e0 - value(&r, "energy")).abs() < 1e-9 * e0);
}
