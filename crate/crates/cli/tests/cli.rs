use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kinproj::parse_config;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn kinproj(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kinproj"));
    cmd.args(args).env_remove("KINPROJ_COST_CEILING");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn run_with(command: &str, config: &str, out: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, config).unwrap();
    kinproj(
        &[
            command,
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    )
}

fn shipped(command: &str, name: &str, out: &Path) -> Output {
    let path = configs_dir().join(name);
    kinproj(
        &[
            command,
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    )
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

const BENCHMARK: &str = "\
model = linear
p = 10
eps = 0.05
n_cells = 20
t_end = 1.25
";

#[test]
fn every_shipped_config_is_valid() {
    let mut names: Vec<_> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "conf"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for p in names {
        if let Err(e) = parse_config(&fs::read_to_string(&p).unwrap()) {
            panic!("{}: {e}", p.display());
        }
    }
}

#[test]
fn benchmark_run_writes_density_and_flux_at_final_time() {
    let out = tempfile::tempdir().unwrap();
    let o = shipped("run", "fig3a.conf", out.path());
    assert_ok(&o);
    let snap = out.path().join("projective/snapshot_t2.5.csv");
    assert_eq!(header(&snap), "x,rho,J");
    let data = rows(&snap);
    assert_eq!(data.len(), 20);
    assert!(data
        .iter()
        .all(|r| r[1].parse::<f64>().unwrap().abs() <= 2.0));
    let info = fs::read_to_string(out.path().join("projective/run_info.csv")).unwrap();
    assert!(info.contains("k_inner,4"), "{info}");
    assert_eq!(
        header(&out.path().join("projective/run_log.csv")),
        "step,t,rho_min,rho_max,mass"
    );
    for mode in ["inner", "reference", "heat"] {
        assert!(
            out.path().join(mode).join("snapshot_t2.5.csv").exists(),
            "{mode}"
        );
    }
}

#[test]
fn heat_mode_uses_four_tenths_of_the_parabolic_limit() {
    let out = tempfile::tempdir().unwrap();
    let o = run_with(
        "run",
        &format!("{BENCHMARK}mode = heat\nsnapshot_times = 0.5\n"),
        out.path(),
    );
    assert_ok(&o);
    let info = fs::read_to_string(out.path().join("heat/run_info.csv")).unwrap();
    let dt: f64 = info
        .lines()
        .find_map(|l| l.strip_prefix("dt,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((dt - 0.4 * 0.01 / 0.3325).abs() < 1e-15);
    assert!(out.path().join("heat/snapshot_t0.5.csv").exists());
    assert!(out.path().join("heat/snapshot_t1.25.csv").exists());
}

#[test]
fn fig4_stability_rows() {
    let out = tempfile::tempdir().unwrap();
    assert_ok(&shipped("stability", "fig4.conf", out.path()));
    let verdicts: Vec<(String, String)> = rows(&out.path().join("stability.csv"))
        .into_iter()
        .map(|r| (r[0].clone(), r[1].clone()))
        .collect();
    let expected = [("1", "false"), ("2", "false"), ("3", "true")];
    assert_eq!(verdicts.len(), 3);
    for ((k, s), (ek, es)) in verdicts.iter().zip(expected) {
        assert_eq!((k.as_str(), s.as_str()), (ek, es));
    }
    let advice = rows(&out.path().join("advice.csv"));
    assert_eq!(advice[0][6], "3");
    let bound: f64 = advice[0][7].parse().unwrap();
    assert!(bound > 3.0 && bound < 3.1, "{bound}");
}

#[test]
fn outer_step_of_k_plus_one_inner_steps_is_stable_at_k_one() {
    // dt_outer = 2 dt_inner at eps = 0.01, dx = 0.05.
    let nu = 2.0 * 1e-4 * 0.3325 / 0.0025;
    let cfg = format!(
        "model = linear\np = 10\neps = 0.01\nn_cells = 40\nt_end = 1\nnu = {nu}\nk_max = 1\n"
    );
    let out = tempfile::tempdir().unwrap();
    assert_ok(&run_with("stability", &cfg, out.path()));
    assert_eq!(rows(&out.path().join("stability.csv"))[0][1], "true");
}

#[test]
fn nu_beyond_two_exits_with_divergence() {
    let base = BENCHMARK
        .replace("t_end = 1.25", "t_end = 3.75")
        .replace("eps = 0.05", "eps = 0.01");
    let cfg = format!("{base}nu = 2.5\nk_inner = 3\n");
    let out = tempfile::tempdir().unwrap();
    let o = run_with("run", &cfg, out.path());
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));

    let stable = format!("{base}nu = 1.9\nk_inner = 3\n");
    assert_ok(&run_with("run", &stable, out.path()));
}

#[test]
fn spectrum_zero_mode_is_one_and_zeros() {
    let out = tempfile::tempdir().unwrap();
    assert_ok(&shipped("spectrum", "fig2_left.conf", out.path()));
    let spec = out.path().join("spectrum.csv");
    assert_eq!(header(&spec), "zeta,re,im,is_dominant");
    let all = rows(&spec);
    assert_eq!(all.len(), 40 * 20);
    let zero: Vec<_> = all
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() == 0.0)
        .collect();
    assert_eq!(zero.len(), 20);
    for r in zero {
        let (re, im): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        let target = if r[3] == "true" { 1.0 } else { 0.0 };
        assert!((re - target).abs() < 1e-12 && im.abs() < 1e-12, "{r:?}");
    }
    let modes = rows(&out.path().join("modes.csv"));
    assert!(modes.iter().all(|r| r[3] == "true"));
    let disks = fs::read_to_string(out.path().join("disks.csv")).unwrap();
    assert!(disks.contains("fast_inner") && disks.contains("slow_projective"));
}

#[test]
fn half_step_spectrum_has_half_the_fast_radius() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_ok(&shipped("spectrum", "fig2_left.conf", a.path()));
    assert_ok(&shipped("spectrum", "fig2_right.conf", b.path()));
    let radius = |d: &Path| -> f64 { rows(&d.join("disks.csv"))[0][3].parse().unwrap() };
    assert!((radius(a.path()) - 0.19).abs() < 1e-12);
    assert!((radius(b.path()) - 0.095).abs() < 1e-12);
}

#[test]
fn eps_sweep_of_inner_scheme_has_slope_two() {
    let cfg = format!(
        "{BENCHMARK}mode = inner\nsweep = eps\nsweep_values = 0.05, 0.02, 0.01\nworkers = 3\n"
    );
    let out = tempfile::tempdir().unwrap();
    assert_ok(&run_with("converge", &cfg, out.path()));
    let errors = out.path().join("errors.csv");
    assert_eq!(header(&errors), "label,eps,dx,dt_outer,t,err_rho,err_flux");
    assert_eq!(rows(&errors).len(), 3);
    let slopes = rows(&out.path().join("slopes.csv"));
    assert_eq!(slopes.len(), 1);
    for col in [3, 4] {
        let s: f64 = slopes[0][col].parse().unwrap();
        assert!((1.8..=2.2).contains(&s), "{s}");
    }
    let cached = fs::read_dir(out.path().join("reference_cache"))
        .unwrap()
        .count();
    assert_eq!(cached, 3);
}

#[test]
fn nu_sweep_records_projective_errors_with_outer_step() {
    let cfg = format!(
        "{BENCHMARK}mode = projective\nk_inner = 3\nsweep = nu\nsweep_values = 0.25, 0.5, 1\nreference_dt = eps2\n"
    )
    .replace("eps = 0.05", "eps = 0.01");
    let out = tempfile::tempdir().unwrap();
    assert_ok(&run_with("converge", &cfg, out.path()));
    let errors = rows(&out.path().join("errors.csv"));
    assert_eq!(errors.len(), 3);
    assert!(errors
        .iter()
        .all(|r| r[0] == "projective" && !r[3].is_empty()));
    let s: f64 = rows(&out.path().join("slopes.csv"))[0][3].parse().unwrap();
    assert!((0.8..=1.2).contains(&s), "{s}");
}

#[test]
fn identical_configs_give_identical_files() {
    let cfg = format!(
        "{BENCHMARK}mode = inner, projective\nk_inner = 3\nsweep = eps\nsweep_values = 0.05, 0.02\n"
    );
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_ok(&run_with("converge", &cfg, a.path()));
    assert_ok(&run_with("converge", &cfg, b.path()));
    let run_cfg = format!("{BENCHMARK}mode = inner, projective, heat\nsnapshot_times = 0.5\n");
    assert_ok(&run_with("run", &run_cfg, &a.path().join("run")));
    assert_ok(&run_with("run", &run_cfg, &b.path().join("run")));

    fn files(root: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(root).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(files(&p));
            } else {
                out.push(p);
            }
        }
        out.sort();
        out
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() > 10);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(
            x.strip_prefix(a.path()).unwrap(),
            y.strip_prefix(b.path()).unwrap()
        );
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn suolson_writes_theta_and_limited_flux() {
    let out = tempfile::tempdir().unwrap();
    let o = shipped("suolson", "fig8_9.conf", out.path());
    assert_ok(&o);
    for a in ["A=1e0", "A=1e-10"] {
        let dir = out.path().join(a);
        for scheme in ["inner", "reference", "projective"] {
            assert_eq!(
                header(&dir.join(format!("{scheme}_t1.csv"))),
                "x,rho,J,theta"
            );
        }
        let lf = dir.join("limited_flux_t1.csv");
        assert_eq!(header(&lf), "x,inner,reference,projective");
        assert_eq!(rows(&lf).len(), 310);
    }
    let errors = rows(&out.path().join("errors.csv"));
    assert_eq!(errors.len(), 4);
    let margins = rows(&out.path().join("margins.csv"));
    assert_eq!(margins.len(), 6);
    // At A = 1 the bound holds everywhere.
    assert!(margins
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() == 1.0)
        .all(|r| r[3].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn bad_config_exits_two_with_line_number() {
    let out = tempfile::tempdir().unwrap();
    let o = run_with(
        "run",
        &BENCHMARK.replace("eps = 0.05", "eps = -1"),
        out.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("line 3") && err.contains("eps must be positive"),
        "{err}"
    );
    let o = run_with("run", &format!("{BENCHMARK}colour = blue\n"), out.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key 'colour'"));
}

#[test]
fn missing_config_file_exits_four() {
    let o = kinproj(&["run", "--config", "/nonexistent/kinproj.conf"], &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn cost_ceiling_from_environment_refuses_reference() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, format!("{BENCHMARK}mode = reference\n")).unwrap();
    let out = dir.path().join("out");
    let o = kinproj(
        &[
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[("KINPROJ_COST_CEILING", "1000")],
    );
    assert_eq!(o.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&o.stderr).contains("10000"));
}
