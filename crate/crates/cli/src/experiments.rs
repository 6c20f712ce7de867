//! Experiment drivers. Each command writes CSV files under an output
//! directory and returns a few summary lines for the terminal.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use kinproj_core::diagnostics::{limited_flux_margin, slope, ErrorRecord};
use kinproj_core::io::{
    errors_csv, fmt_f64, run_log_csv, spectrum_csv, stability_csv, write_atomic, Snapshot,
};
use kinproj_core::projective::StepRecord;
use kinproj_core::reference::{kinetic_reference, run_heat, HeatParams};
use kinproj_core::spectral::{self, Disk, Disks, EigenMethod, ModeSpectra};
use kinproj_core::state::{init_linear_benchmark, init_suolson};
use kinproj_core::{
    BoundaryCondition, Error, Grid, InnerStepper, KineticState, LinearScheme, PhaseState,
    ProjectiveParams, SuOlsonScheme, SuOlsonState, VelocitySpace,
};

use crate::config::{KChoice, Mode, Model, RunConfig, Sweep};
use crate::{CliError, CliResult};

/// States that can be written as snapshots.
pub trait Snapshotable: PhaseState {
    fn theta(&self) -> Option<&[f64]>;
}

impl Snapshotable for KineticState {
    fn theta(&self) -> Option<&[f64]> {
        None
    }
}

impl Snapshotable for SuOlsonState {
    fn theta(&self) -> Option<&[f64]> {
        Some(&self.theta)
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Config(msg.into()))
}

fn snapshot_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t}.csv")
}

fn key_value_csv(rows: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

/// Inner and outer steps of a projective run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterSetup {
    pub dt_inner: f64,
    pub dt_outer: f64,
    pub k: usize,
    pub closed_form_k: f64,
}

pub fn outer_setup(
    cfg: &RunConfig,
    vs: &VelocitySpace,
    grid: &Grid,
    eps: f64,
    nu: f64,
) -> CliResult<OuterSetup> {
    let dt_inner = cfg.dt_inner.dt(eps);
    let dx = grid.dx();
    let dt_outer = nu * dx * dx / vs.d_p();
    let closed_form_k = spectral::closed_form_k_bound(vs.v_max(), vs.d_p(), eps / dx, nu);
    let k = match cfg.k_inner {
        KChoice::Fixed(k) => k,
        KChoice::Auto => spectral::min_inner_steps(
            vs,
            grid,
            eps,
            dt_inner,
            dt_outer,
            cfg.flux,
            spectral::DEFAULT_K_MAX,
        )
        .min_k
        .ok_or_else(|| {
            config_error(format!(
                "no K <= {} is stable at eps = {eps}, nu = {nu}",
                spectral::DEFAULT_K_MAX
            ))
        })?,
    };
    if dt_outer < (k + 1) as f64 * dt_inner * (1.0 - 1e-12) {
        return Err(config_error(format!(
            "outer step {dt_outer} is shorter than K + 1 = {} inner steps of {dt_inner}",
            k + 1
        )));
    }
    Ok(OuterSetup {
        dt_inner,
        dt_outer,
        k,
        closed_form_k,
    })
}

struct Run<St> {
    states: Vec<St>,
    log: Vec<StepRecord>,
}

/// Advances `init` through `times` with plain inner steps or projective steps.
fn simulate<S: InnerStepper>(
    cfg: &RunConfig,
    stepper: &S,
    init: &S::State,
    times: &[f64],
    outer: Option<&OuterSetup>,
) -> CliResult<Run<S::State>> {
    let (vs, grid) = (stepper.velocities(), stepper.grid());
    match outer {
        Some(o) => {
            let pp = ProjectiveParams {
                dt_inner: stepper.dt(),
                k_inner: o.k,
                dt_outer: o.dt_outer,
                t_end: *times.last().expect("at least one output time"),
            };
            let traj = kinproj_core::run_projective(stepper, init, &pp, times)?;
            Ok(Run {
                states: traj.snapshots,
                log: traj.log,
            })
        }
        None => {
            let states = kinetic_reference(stepper, init, times, cfg.cost_ceiling)?;
            let mut log = vec![StepRecord::of(0, init, vs, grid)];
            log.extend(
                states
                    .iter()
                    .enumerate()
                    .map(|(n, s)| StepRecord::of(n as u64 + 1, s, vs, grid)),
            );
            Ok(Run { states, log })
        }
    }
}

/// Fails when `max |rho|` in the log exceeds `factor` times its first value.
fn check_growth(what: &str, log: &[StepRecord], factor: f64) -> CliResult<()> {
    let peak = |r: &StepRecord| r.rho_min.abs().max(r.rho_max.abs());
    let Some(first) = log.first() else {
        return Ok(());
    };
    let base = peak(first);
    if base <= 0.0 {
        return Ok(());
    }
    match log.iter().find(|r| !(peak(r) <= factor * base)) {
        Some(r) => Err(CliError::Blowup {
            what: what.to_string(),
            t: r.t,
            ratio: peak(r) / base,
        }),
        None => Ok(()),
    }
}

/// Limit flux `J = -d_p d rho / dx` by centered differences.
fn heat_flux(rho: &[f64], grid: &Grid, d_p: f64) -> Vec<f64> {
    (0..rho.len())
        .map(|i| -d_p * (rho[grid.right(i)] - rho[grid.left(i)]) / (2.0 * grid.dx()))
        .collect()
}

fn run_modes<S, F>(
    cfg: &RunConfig,
    dir: &Path,
    grid: &Grid,
    vs: &VelocitySpace,
    make: F,
    init: &S::State,
) -> CliResult<Vec<String>>
where
    S: InnerStepper,
    S::State: Snapshotable,
    F: Fn(f64) -> kinproj_core::Result<S>,
{
    let eps = cfg.eps;
    let times = cfg.output_times();
    let mut lines = Vec::new();
    for &mode in &cfg.modes {
        let mode_dir = dir.join(mode.name());
        if mode == Mode::Heat {
            let dt = cfg.heat_nu * grid.dx().powi(2) / vs.d_p();
            let hp = HeatParams::new(vs.d_p(), dt, grid.clone())?;
            let mut rho = init.kinetic().density(vs);
            let mut t = init.time();
            for &target in &times {
                rho = run_heat(&rho, &hp, target - t)?;
                t = target;
                let snap = Snapshot {
                    x: grid.centers().to_vec(),
                    flux: heat_flux(&rho, grid, vs.d_p()),
                    rho: rho.clone(),
                    theta: None,
                };
                snap.write(&mode_dir.join(snapshot_name("snapshot", t)))?;
            }
            write_atomic(
                &mode_dir.join("run_info.csv"),
                &key_value_csv(&[
                    ("mode", "heat".into()),
                    ("diffusivity", fmt_f64(vs.d_p())),
                    ("dt", fmt_f64(dt)),
                ]),
            )?;
            lines.push(format!("heat: dt = {dt:.4e}, {} snapshots", times.len()));
            continue;
        }

        let dt = match mode {
            Mode::Reference => cfg.reference_dt.dt(eps),
            _ => cfg.dt_inner.dt(eps),
        };
        let stepper = make(dt)?;
        let outer = match mode {
            Mode::Projective => Some(outer_setup(cfg, vs, grid, eps, cfg.nu)?),
            _ => None,
        };
        let run = simulate(cfg, &stepper, init, &times, outer.as_ref())?;
        for s in &run.states {
            Snapshot::of(s.kinetic(), grid, vs, eps, s.theta())?
                .write(&mode_dir.join(snapshot_name("snapshot", s.time())))?;
        }
        write_atomic(&mode_dir.join("run_log.csv"), &run_log_csv(&run.log))?;
        let mut info = vec![
            ("mode", mode.name().to_string()),
            ("eps", fmt_f64(eps)),
            ("dx", fmt_f64(grid.dx())),
            ("dt_inner", fmt_f64(dt)),
        ];
        if let Some(o) = &outer {
            info.push(("dt_outer", fmt_f64(o.dt_outer)));
            info.push(("k_inner", o.k.to_string()));
            info.push(("closed_form_k", fmt_f64(o.closed_form_k)));
        }
        write_atomic(&mode_dir.join("run_info.csv"), &key_value_csv(&info))?;
        check_growth(mode.name(), &run.log, cfg.blowup_factor)?;

        let last = run.log.last().expect("log has the initial row");
        let mut line = format!(
            "{}: t = {}, rho in [{:.6}, {:.6}], mass {:.12}",
            mode.name(),
            last.t,
            last.rho_min,
            last.rho_max,
            last.mass
        );
        if let Some(o) = &outer {
            let _ = write!(
                line,
                ", K = {}, dt_outer = {:.4e}, {} outer steps",
                o.k,
                o.dt_outer,
                run.log.len() - 1
            );
        }
        lines.push(line);
    }
    Ok(lines)
}

/// Executes every configured mode; snapshots go to `<out>/<mode>/`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> CliResult<Vec<String>> {
    let (grid, vs) = (cfg.grid(), cfg.velocities());
    match cfg.model {
        Model::Linear => {
            let init = init_linear_benchmark(&grid, &vs);
            run_modes(
                cfg,
                out,
                &grid,
                &vs,
                |dt| LinearScheme::new(&grid, &vs, cfg.inner_params(cfg.eps, dt)),
                &init,
            )
        }
        Model::SuOlson => {
            let mut lines = Vec::new();
            for &a in &cfg.amplitudes {
                let init = init_suolson(&grid, &vs, a)?;
                let dir = out.join(format!("A={a:e}"));
                for l in run_modes(
                    cfg,
                    &dir,
                    &grid,
                    &vs,
                    |dt| SuOlsonScheme::new(&grid, &vs, cfg.inner_params(cfg.eps, dt)),
                    &init,
                )? {
                    lines.push(format!("A = {a:e}: {l}"));
                }
            }
            Ok(lines)
        }
    }
}

fn require_linear(cfg: &RunConfig, command: &str) -> CliResult<()> {
    if cfg.model != Model::Linear {
        return Err(config_error(format!(
            "{command} applies to the linear model only"
        )));
    }
    Ok(())
}

fn symbols_for(cfg: &RunConfig, vs: &VelocitySpace, grid: &Grid, dt: f64) -> ModeSpectra {
    if cfg.continuum_points == 0 {
        return ModeSpectra::compute(vs, grid, cfg.eps, dt, cfg.flux);
    }
    let n = cfg.continuum_points;
    let symbols: Vec<_> = (0..n)
        .map(|m| {
            let zeta = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            spectral::symbol(zeta, vs, cfg.eps, dt, grid.dx(), cfg.flux)
        })
        .collect();
    let spectra = symbols.iter().map(spectral::eigenvalues).collect();
    ModeSpectra { symbols, spectra }
}

fn disk_row(s: &mut String, name: &str, d: &Disk) {
    let _ = writeln!(
        s,
        "{name},{},{},{}",
        fmt_f64(d.center.re),
        fmt_f64(d.center.im),
        fmt_f64(d.radius)
    );
}

/// Eigenvalues of the inner amplification symbol per mode, per-mode
/// enclosure checks, and the disks that bound the spectra.
pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> CliResult<Vec<String>> {
    require_linear(cfg, "spectrum")?;
    let (grid, vs) = (cfg.grid(), cfg.velocities());
    let dt = cfg.dt_inner.dt(cfg.eps);
    let ms = symbols_for(cfg, &vs, &grid, dt);
    write_atomic(&out.join("spectrum.csv"), &spectrum_csv(&ms))?;

    let mut modes = String::from(
        "zeta,method,iterations,enclosure_ok,outside,dominant_re,dominant_im,fast_center,fast_radius\n",
    );
    let mut failing = 0;
    let mut flagged = 0;
    for (sym, spec) in ms.symbols.iter().zip(&ms.spectra) {
        let check = spectral::verify_enclosures(sym, spec);
        failing += usize::from(!check.ok);
        flagged += usize::from(spec.flagged());
        let (method, iterations) = match spec.method {
            EigenMethod::Secular { iterations } => ("secular", iterations.to_string()),
            EigenMethod::DenseFallback => ("dense", String::new()),
        };
        let disk = sym.fast_disk();
        let dom = spec.dominant();
        let _ = writeln!(
            modes,
            "{},{method},{iterations},{},{},{},{},{},{}",
            fmt_f64(sym.zeta),
            check.ok,
            check.outside,
            fmt_f64(dom.re),
            fmt_f64(dom.im),
            fmt_f64(disk.center.re),
            fmt_f64(disk.radius)
        );
    }
    write_atomic(&out.join("modes.csv"), &modes)?;

    let envelope = ms.fast_disk_envelope();
    let mut disks = String::from("name,center_re,center_im,radius\n");
    disk_row(&mut disks, "fast_inner", &envelope);
    let dt_outer = cfg.dt_outer(cfg.nu);
    let k = match cfg.k_inner {
        KChoice::Fixed(k) => Some(k),
        KChoice::Auto => (1..=spectral::DEFAULT_K_MAX).find(|&k| ms.stability(dt_outer, k).stable),
    };
    if let Some(k) = k {
        let d = Disks::new(dt, dt_outer, k, envelope);
        disk_row(&mut disks, "slow_projective", &d.slow_projective);
        disk_row(&mut disks, "fast_projective", &d.fast_projective);
    }
    write_atomic(&out.join("disks.csv"), &disks)?;

    Ok(vec![format!(
        "{} modes, {} eigenvalues each; enclosure failing at {failing} modes; \
         {flagged} dense fallbacks; fast disk radius {:.6}",
        ms.symbols.len(),
        2 * vs.p(),
        envelope.radius
    )])
}

/// Stability verdicts for `K = 1..=k_max` and the advised `K`.
pub fn cmd_stability(cfg: &RunConfig, out: &Path) -> CliResult<Vec<String>> {
    require_linear(cfg, "stability")?;
    let (grid, vs) = (cfg.grid(), cfg.velocities());
    let dt = cfg.dt_inner.dt(cfg.eps);
    let dt_outer = cfg.dt_outer(cfg.nu);
    let ms = ModeSpectra::compute(&vs, &grid, cfg.eps, dt, cfg.flux);
    let verdicts: Vec<_> = (1..=cfg.k_max).map(|k| ms.stability(dt_outer, k)).collect();
    write_atomic(&out.join("stability.csv"), &stability_csv(&verdicts))?;

    let min_k =
        (1..=spectral::DEFAULT_K_MAX.max(cfg.k_max)).find(|&k| ms.stability(dt_outer, k).stable);
    let r = cfg.eps / grid.dx();
    let closed = spectral::closed_form_k_bound(vs.v_max(), vs.d_p(), r, cfg.nu);
    let mut advice = String::from("eps,dx,r,nu,dt_inner,dt_outer,min_k,closed_form_k\n");
    let _ = writeln!(
        advice,
        "{},{},{},{},{},{},{},{}",
        fmt_f64(cfg.eps),
        fmt_f64(grid.dx()),
        fmt_f64(r),
        fmt_f64(cfg.nu),
        fmt_f64(dt),
        fmt_f64(dt_outer),
        min_k.map(|k| k.to_string()).unwrap_or_default(),
        fmt_f64(closed)
    );
    write_atomic(&out.join("advice.csv"), &advice)?;

    let mut lines: Vec<String> = verdicts
        .iter()
        .map(|v| {
            format!(
                "K = {}: {} (worst |amplification| {:.6} at zeta = {:.4})",
                v.k,
                if v.stable { "stable" } else { "unstable" },
                v.worst_amplification,
                v.worst_zeta
            )
        })
        .collect();
    lines.push(match min_k {
        Some(k) => format!("smallest stable K = {k}; closed-form bound {closed:.4}"),
        None => format!(
            "no stable K up to {}; closed-form bound {closed:.4}",
            spectral::DEFAULT_K_MAX
        ),
    });
    Ok(lines)
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Periodic => "periodic",
        BoundaryCondition::NeumannHomogeneous => "neumann",
    }
}

/// Cache file for a reference snapshot; the name encodes everything the
/// reference depends on.
pub fn reference_cache_path(cache: &Path, cfg: &RunConfig, eps: f64, t: f64) -> PathBuf {
    cache.join(format!(
        "linear_p{}_{}_{}_x{}_{}_n{}_eps{eps:e}_{}_t{t}.csv",
        cfg.p,
        cfg.flux,
        bc_name(cfg.bc),
        cfg.domain.0,
        cfg.domain.1,
        cfg.n_cells,
        cfg.reference_dt
    ))
}

/// Reference snapshots of the linear benchmark at `times`, read from the
/// cache when every file is present.
fn reference_snapshots(
    cfg: &RunConfig,
    grid: &Grid,
    vs: &VelocitySpace,
    eps: f64,
    times: &[f64],
    cache: &Path,
) -> CliResult<Vec<Snapshot>> {
    let paths: Vec<PathBuf> = times
        .iter()
        .map(|&t| reference_cache_path(cache, cfg, eps, t))
        .collect();
    let cached: Option<Vec<Snapshot>> = paths
        .iter()
        .map(|p| {
            Snapshot::read(p)
                .ok()
                .filter(|s| s.x.as_slice() == grid.centers())
        })
        .collect();
    if let Some(snaps) = cached {
        return Ok(snaps);
    }
    let scheme = LinearScheme::new(grid, vs, cfg.inner_params(eps, cfg.reference_dt.dt(eps)))?;
    let states = kinetic_reference(
        &scheme,
        &init_linear_benchmark(grid, vs),
        times,
        cfg.cost_ceiling,
    )?;
    let mut snaps = Vec::with_capacity(states.len());
    for (s, p) in states.iter().zip(&paths) {
        let snap = Snapshot::of(s, grid, vs, eps, None)?;
        snap.write(p)?;
        snaps.push(snap);
    }
    Ok(snaps)
}

/// One sweep point: the swept value, `eps` and `nu`.
#[derive(Debug, Clone, Copy)]
struct Point {
    value: f64,
    eps: f64,
    nu: f64,
}

/// Errors against the fine-step reference over an `eps` or `nu` sweep, and
/// the log-log slopes of those errors.
pub fn cmd_converge(cfg: &RunConfig, out: &Path) -> CliResult<Vec<String>> {
    require_linear(cfg, "converge")?;
    if let Some(m) = cfg
        .modes
        .iter()
        .find(|m| !matches!(m, Mode::Inner | Mode::Projective))
    {
        return Err(config_error(format!(
            "converge compares inner and projective runs, not '{}'",
            m.name()
        )));
    }
    let (grid, vs) = (cfg.grid(), cfg.velocities());
    let mut times = cfg.error_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let points: Vec<Point> = match &cfg.sweep {
        Sweep::None => vec![Point {
            value: cfg.eps,
            eps: cfg.eps,
            nu: cfg.nu,
        }],
        Sweep::Eps(v) => v
            .iter()
            .map(|&eps| Point {
                value: eps,
                eps,
                nu: cfg.nu,
            })
            .collect(),
        Sweep::Nu(v) => v
            .iter()
            .map(|&nu| Point {
                value: nu,
                eps: cfg.eps,
                nu,
            })
            .collect(),
    };

    let mut eps_values: Vec<f64> = Vec::new();
    for p in &points {
        if !eps_values.contains(&p.eps) {
            eps_values.push(p.eps);
        }
    }
    let cache = out.join("reference_cache");
    let references: Vec<Vec<Snapshot>> = eps_values
        .par_iter()
        .map(|&eps| reference_snapshots(cfg, &grid, &vs, eps, &times, &cache))
        .collect::<CliResult<_>>()?;

    let jobs: Vec<(Point, Mode)> = points
        .iter()
        .flat_map(|&p| cfg.modes.iter().map(move |&m| (p, m)))
        .collect();
    let results: Vec<(Point, Mode, Option<usize>, Vec<ErrorRecord>)> = jobs
        .par_iter()
        .map(|&(point, mode)| -> CliResult<_> {
            let eps = point.eps;
            let reference = &references[eps_values.iter().position(|&e| e == eps).expect("listed")];
            let scheme =
                LinearScheme::new(&grid, &vs, cfg.inner_params(eps, cfg.dt_inner.dt(eps)))?;
            let outer = match mode {
                Mode::Projective => Some(outer_setup(cfg, &vs, &grid, eps, point.nu)?),
                _ => None,
            };
            let dt_outer = outer.map(|o| o.dt_outer);
            let init = init_linear_benchmark(&grid, &vs);
            let records = match simulate(cfg, &scheme, &init, &times, outer.as_ref()) {
                Ok(run) => run
                    .states
                    .iter()
                    .zip(reference)
                    .map(|(s, r)| {
                        ErrorRecord::from_moments(
                            mode.name(),
                            (&s.density(&vs), &s.flux(&vs, eps)?),
                            (&r.rho, &r.flux),
                            &grid,
                            eps,
                            dt_outer,
                            s.t(),
                        )
                    })
                    .collect::<kinproj_core::Result<Vec<_>>>()?,
                Err(CliError::Core(Error::Diverged { .. })) => times
                    .iter()
                    .map(|&t| ErrorRecord {
                        label: mode.name().to_string(),
                        eps,
                        dx: grid.dx(),
                        dt_outer,
                        t,
                        err_rho: f64::INFINITY,
                        err_flux: f64::INFINITY,
                    })
                    .collect(),
                Err(e) => return Err(e),
            };
            Ok((point, mode, outer.map(|o| o.k), records))
        })
        .collect::<CliResult<_>>()?;

    let records: Vec<ErrorRecord> = results.iter().flat_map(|r| r.3.iter().cloned()).collect();
    write_atomic(&out.join("errors.csv"), &errors_csv(&records))?;

    let axis = match cfg.sweep {
        Sweep::Nu(_) => "dt_outer",
        _ => "eps",
    };
    let in_fit = |v: f64| cfg.fit_range.is_none_or(|(lo, hi)| v >= lo && v <= hi);
    let mut slopes = String::from("label,t,axis,slope_rho,slope_flux,points\n");
    let mut lines = Vec::new();
    for &mode in &cfg.modes {
        for &t in &times {
            let mut xs = Vec::new();
            let (mut er, mut ej) = (Vec::new(), Vec::new());
            for (point, m, _, recs) in &results {
                if *m != mode || !in_fit(point.value) {
                    continue;
                }
                let Some(r) = recs.iter().find(|r| (r.t - t).abs() <= 1e-12 * t.max(1.0)) else {
                    continue;
                };
                if r.err_rho.is_finite()
                    && r.err_flux.is_finite()
                    && r.err_rho > 0.0
                    && r.err_flux > 0.0
                {
                    xs.push(if axis == "eps" {
                        r.eps
                    } else {
                        r.dt_outer.unwrap_or(0.0)
                    });
                    er.push(r.err_rho);
                    ej.push(r.err_flux);
                }
            }
            if xs.len() < 2 {
                continue;
            }
            let (sr, sj) = (slope(&xs, &er)?, slope(&xs, &ej)?);
            let _ = writeln!(
                slopes,
                "{},{},{axis},{},{},{}",
                mode.name(),
                fmt_f64(t),
                fmt_f64(sr),
                fmt_f64(sj),
                xs.len()
            );
            lines.push(format!(
                "{} at t = {t}: slope vs {axis} rho {sr:.4}, J {sj:.4} over {} points",
                mode.name(),
                xs.len()
            ));
        }
    }
    write_atomic(&out.join("slopes.csv"), &slopes)?;
    for (point, mode, k, recs) in &results {
        if let Some(r) = recs.last() {
            lines.push(format!(
                "{} eps = {} nu = {}{}: err rho {:.4e}, err J {:.4e} at t = {}",
                mode.name(),
                point.eps,
                point.nu,
                k.map(|k| format!(" K = {k}")).unwrap_or_default(),
                r.err_rho,
                r.err_flux,
                r.t
            ));
        }
    }
    Ok(lines)
}

fn limited_flux_ratio(s: &KineticState, vs: &VelocitySpace, eps: f64) -> CliResult<Vec<f64>> {
    let rho = s.density(vs);
    let flux = s.flux(vs, eps)?;
    Ok(rho.iter().zip(&flux).map(|(r, j)| eps * j / r).collect())
}

/// Cell with the smallest limited-flux margin `v_max rho - eps |J|`.
fn worst_margin_x(s: &KineticState, vs: &VelocitySpace, grid: &Grid, eps: f64) -> CliResult<f64> {
    let rho = s.density(vs);
    let flux = s.flux(vs, eps)?;
    let margin = |i: usize| vs.v_max() * rho[i] - eps * flux[i].abs();
    let i = (0..rho.len())
        .min_by(|&a, &b| margin(a).total_cmp(&margin(b)))
        .expect("nonempty grid");
    Ok(grid.centers()[i])
}

struct SuOlsonOutcome {
    records: Vec<ErrorRecord>,
    margins: Vec<(f64, &'static str, f64, f64, f64)>,
    lines: Vec<String>,
}

fn suolson_amplitude(
    cfg: &RunConfig,
    grid: &Grid,
    vs: &VelocitySpace,
    a: f64,
    out: &Path,
) -> CliResult<SuOlsonOutcome> {
    let eps = cfg.eps;
    let times = cfg.output_times();
    let dir = out.join(format!("A={a:e}"));
    let init = init_suolson(grid, vs, a)?;
    let scheme = |dt| SuOlsonScheme::new(grid, vs, cfg.inner_params(eps, dt));
    let coarse = scheme(cfg.dt_inner.dt(eps))?;
    let outer = outer_setup(cfg, vs, grid, eps, cfg.nu)?;
    let inner = simulate(cfg, &coarse, &init, &times, None)?;
    let reference = simulate(cfg, &scheme(cfg.reference_dt.dt(eps))?, &init, &times, None)?;
    let projective = simulate(cfg, &coarse, &init, &times, Some(&outer))?;

    let runs = [
        ("inner", &inner),
        ("reference", &reference),
        ("projective", &projective),
    ];
    let mut records = Vec::new();
    let mut margins = Vec::new();
    for (n, &t) in times.iter().enumerate() {
        let mut lf = String::from("x,inner,reference,projective\n");
        let ratios: Vec<Vec<f64>> = runs
            .iter()
            .map(|(_, r)| limited_flux_ratio(&r.states[n].kinetic, vs, eps))
            .collect::<CliResult<_>>()?;
        for (i, x) in grid.centers().iter().enumerate() {
            let _ = writeln!(
                lf,
                "{},{},{},{}",
                fmt_f64(*x),
                fmt_f64(ratios[0][i]),
                fmt_f64(ratios[1][i]),
                fmt_f64(ratios[2][i])
            );
        }
        write_atomic(&dir.join(snapshot_name("limited_flux", t)), &lf)?;
        for (name, r) in &runs {
            let s = &r.states[n];
            Snapshot::of(&s.kinetic, grid, vs, eps, Some(&s.theta))?
                .write(&dir.join(snapshot_name(name, t)))?;
            margins.push((
                a,
                *name,
                t,
                limited_flux_margin(&s.kinetic, vs, eps)?,
                worst_margin_x(&s.kinetic, vs, grid, eps)?,
            ));
        }
        let refk = &reference.states[n].kinetic;
        records.push(ErrorRecord::compare(
            format!("inner A={a:e}"),
            &inner.states[n].kinetic,
            refk,
            vs,
            grid,
            eps,
            None,
        )?);
        records.push(ErrorRecord::compare(
            format!("projective A={a:e}"),
            &projective.states[n].kinetic,
            refk,
            vs,
            grid,
            eps,
            Some(outer.dt_outer),
        )?);
    }
    for (name, r) in &runs {
        write_atomic(
            &dir.join(format!("{name}_run_log.csv")),
            &run_log_csv(&r.log),
        )?;
    }

    let (fe, pi) = (&records[records.len() - 2], &records[records.len() - 1]);
    let worst = margins
        .iter()
        .filter(|m| m.2 == cfg.t_end)
        .min_by(|p, q| p.3.total_cmp(&q.3))
        .expect("three runs");
    let lines = vec![format!(
        "A = {a:e}, t = {}: err rho inner {:.4e}, projective {:.4e} (ratio {:.3}); \
         min limited-flux margin {:.4e} ({} at x = {:.3}); K = {}",
        cfg.t_end,
        fe.err_rho,
        pi.err_rho,
        pi.err_rho / fe.err_rho,
        worst.3,
        worst.1,
        worst.4,
        outer.k
    )];
    Ok(SuOlsonOutcome {
        records,
        margins,
        lines,
    })
}

/// Full inner, fine-step reference and projective runs of the Su-Olson
/// system for every configured amplitude.
pub fn cmd_suolson(cfg: &RunConfig, out: &Path) -> CliResult<Vec<String>> {
    if cfg.model != Model::SuOlson {
        return Err(config_error("suolson needs 'model = suolson'"));
    }
    let (grid, vs) = (cfg.grid(), cfg.velocities());
    let outcomes: Vec<SuOlsonOutcome> = cfg
        .amplitudes
        .par_iter()
        .map(|&a| suolson_amplitude(cfg, &grid, &vs, a, out))
        .collect::<CliResult<_>>()?;

    let records: Vec<ErrorRecord> = outcomes
        .iter()
        .flat_map(|o| o.records.iter().cloned())
        .collect();
    write_atomic(&out.join("errors.csv"), &errors_csv(&records))?;
    let mut margins = String::from("amplitude,scheme,t,min_margin,worst_x\n");
    for o in &outcomes {
        for (a, name, t, m, x) in &o.margins {
            let _ = writeln!(
                margins,
                "{},{name},{},{},{}",
                fmt_f64(*a),
                fmt_f64(*t),
                fmt_f64(*m),
                fmt_f64(*x)
            );
        }
    }
    write_atomic(&out.join("margins.csv"), &margins)?;
    Ok(outcomes.into_iter().flat_map(|o| o.lines).collect())
}
