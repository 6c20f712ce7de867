//! Plain-text experiment configuration: `key = value` lines, `#` comments.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use kinproj_core::inner::MIN_EPS;
use kinproj_core::reference::{ReferenceStep, DEFAULT_COST_CEILING};
use kinproj_core::{BoundaryCondition, FluxKind, Grid, InnerParams, VelocitySpace};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Linear,
    SuOlson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inner,
    Projective,
    Heat,
    Reference,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Inner => "inner",
            Mode::Projective => "projective",
            Mode::Heat => "heat",
            Mode::Reference => "reference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Fixed(usize),
    /// Smallest stable `K` from the mode-by-mode check.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// Unit source on `|x| <= 1/2`.
    Default,
    Cells(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    None,
    Eps(Vec<f64>),
    Nu(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub p: usize,
    pub eps: f64,
    pub domain: (f64, f64),
    pub n_cells: usize,
    pub bc: BoundaryCondition,
    pub flux: FluxKind,
    /// Modes to execute, in order. `run` executes all of them.
    pub modes: Vec<Mode>,
    pub dt_inner: ReferenceStep,
    pub nu: f64,
    pub k_inner: KChoice,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub sigma_a: f64,
    pub source: SourceSpec,
    /// Su-Olson initial amplitudes `A`.
    pub amplitudes: Vec<f64>,
    pub output_dir: PathBuf,
    pub cost_ceiling: u64,
    /// Heat-equation step as a multiple of `dx^2 / d_p`.
    pub heat_nu: f64,
    pub reference_dt: ReferenceStep,
    /// A run counts as diverged once `max |rho|` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Largest `K` listed by the stability table.
    pub k_max: usize,
    /// When nonzero, spectra are sampled on this many equispaced wavenumbers in `[0, 2 pi)`
    /// instead of the grid modes.
    pub continuum_points: usize,
    pub sweep: Sweep,
    pub error_times: Vec<f64>,
    /// Only sweep values inside this closed range enter the slope fit.
    pub fit_range: Option<(f64, f64)>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.domain.0, self.domain.1, self.n_cells, self.bc).expect("validated grid")
    }

    pub fn velocities(&self) -> VelocitySpace {
        VelocitySpace::new(self.p).expect("validated p")
    }

    pub fn dx(&self) -> f64 {
        (self.domain.1 - self.domain.0) / self.n_cells as f64
    }

    pub fn dt_outer(&self, nu: f64) -> f64 {
        nu * self.dx().powi(2) / self.velocities().d_p()
    }

    pub fn source_values(&self, grid: &Grid) -> Vec<f64> {
        match &self.source {
            SourceSpec::Default => kinproj_core::inner::default_source(grid),
            SourceSpec::Cells(v) => v.clone(),
        }
    }

    /// Inner parameters at `eps` with step `dt`, including the Su-Olson terms.
    pub fn inner_params(&self, eps: f64, dt: f64) -> InnerParams {
        let params = InnerParams::new(eps, dt, self.flux);
        match self.model {
            Model::Linear => params,
            Model::SuOlson => params
                .with_sigma_a(self.sigma_a)
                .with_source(self.source_values(&self.grid())),
        }
    }

    /// Snapshot times plus `t_end`, ascending and deduplicated.
    pub fn output_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self.snapshot_times.clone();
        times.push(self.t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

const KEYS: &[&str] = &[
    "model",
    "p",
    "eps",
    "domain",
    "n_cells",
    "bc",
    "flux",
    "mode",
    "dt_inner",
    "nu",
    "k_inner",
    "t_end",
    "snapshot_times",
    "sigma_a",
    "source",
    "amplitude",
    "output_dir",
    "cost_ceiling",
    "heat_nu",
    "reference_dt",
    "blowup_factor",
    "k_max",
    "continuum_points",
    "sweep",
    "sweep_values",
    "error_times",
    "fit_range",
    "workers",
];

struct Entries<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: Some(line),
        message: message.into(),
    }
}

impl<'a> Entries<'a> {
    fn parse(text: &'a str) -> Result<Self, ConfigError> {
        let mut map = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(line, format!("key '{key}' has no value")));
            }
            if let Some((first, _)) = map.insert(key, (line, value)) {
                return Err(err(
                    line,
                    format!("key '{key}' already set on line {first}"),
                ));
            }
        }
        Ok(Self { map })
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn get<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<(usize, T)>, ConfigError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(&(line, value)) => parse(value)
                .map(|v| Some((line, v)))
                .map_err(|m| err(line, format!("{key}: {m}"))),
        }
    }

    fn or<T>(
        &self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        Ok(self.get(key, parse)?.map_or(default, |(_, v)| v))
    }

    fn required<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        self.get(key, parse)?
            .map(|(_, v)| v)
            .ok_or_else(|| ConfigError {
                line: None,
                message: format!("missing required key '{key}'"),
            })
    }
}

fn real(s: &str) -> Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("expected a finite number, got '{s}'"))
}

fn integer(s: &str) -> Result<usize, String> {
    s.parse()
        .map_err(|_| format!("expected a nonnegative integer, got '{s}'"))
}

fn big_integer(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    // Accept `1e8`-style literals when they are whole numbers.
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("expected a nonnegative integer, got '{s}'")),
    }
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(real)
        .collect()
}

fn step_policy(s: &str) -> Result<ReferenceStep, String> {
    match s {
        "eps2" => Ok(ReferenceStep::EpsSquared),
        "eps3" => Ok(ReferenceStep::EpsCubed),
        other => real(other)
            .map(ReferenceStep::Explicit)
            .map_err(|_| format!("expected eps2, eps3 or a step size, got '{other}'")),
    }
}

fn mode(s: &str) -> Result<Mode, String> {
    match s {
        "inner" => Ok(Mode::Inner),
        "projective" => Ok(Mode::Projective),
        "heat" => Ok(Mode::Heat),
        "reference" => Ok(Mode::Reference),
        other => Err(format!(
            "unknown mode '{other}' (expected inner, projective, heat or reference)"
        )),
    }
}

fn modes(s: &str) -> Result<Vec<Mode>, String> {
    let out: Vec<Mode> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(mode)
        .collect::<Result<_, _>>()?;
    if out.iter().enumerate().any(|(i, m)| out[..i].contains(m)) {
        return Err("a mode is listed twice".into());
    }
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = Entries::parse(text)?;
    let model = e.or("model", Model::Linear, |s| match s {
        "linear" => Ok(Model::Linear),
        "suolson" | "su-olson" => Ok(Model::SuOlson),
        other => Err(format!(
            "unknown model '{other}' (expected linear or suolson)"
        )),
    })?;
    let p = e.required("p", integer)?;
    let eps = e.required("eps", real)?;
    let n_cells = e.required("n_cells", integer)?;
    let t_end = e.required("t_end", real)?;
    let domain = e.or("domain", (-1.0, 1.0), |s| match list(s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        _ => Err("expected two numbers 'x_left, x_right'".into()),
    })?;
    let bc = e.or("bc", BoundaryCondition::Periodic, |s| match s {
        "periodic" => Ok(BoundaryCondition::Periodic),
        "neumann" => Ok(BoundaryCondition::NeumannHomogeneous),
        other => Err(format!(
            "unknown boundary condition '{other}' (expected periodic or neumann)"
        )),
    })?;
    let flux = e.or("flux", FluxKind::Centered, |s| match s {
        "centered" => Ok(FluxKind::Centered),
        "upwind" => Ok(FluxKind::Upwind),
        other => Err(format!(
            "unknown flux '{other}' (expected centered or upwind)"
        )),
    })?;
    let modes = e.or("mode", vec![Mode::Projective], modes)?;
    let dt_inner = e.or("dt_inner", ReferenceStep::EpsSquared, step_policy)?;
    let nu = e.or("nu", 1.0, real)?;
    let k_inner = e.or("k_inner", KChoice::Auto, |s| match s {
        "auto" => Ok(KChoice::Auto),
        other => integer(other).map(KChoice::Fixed),
    })?;
    let snapshot_times = e.or("snapshot_times", Vec::new(), list)?;
    let sigma_a = e.or("sigma_a", 1.0, real)?;
    let source = e.or("source", SourceSpec::Default, |s| match s {
        "default" => Ok(SourceSpec::Default),
        other => list(other).map(SourceSpec::Cells),
    })?;
    let amplitudes = e.or("amplitude", vec![1.0], list)?;
    let output_dir = e.or("output_dir", PathBuf::from("out"), |s| Ok(PathBuf::from(s)))?;
    let cost_ceiling = e.or("cost_ceiling", DEFAULT_COST_CEILING, big_integer)?;
    let heat_nu = e.or("heat_nu", 0.4, real)?;
    let reference_dt = e.or("reference_dt", ReferenceStep::EpsCubed, step_policy)?;
    let blowup_factor = e.or("blowup_factor", 1e3, real)?;
    let k_max = e.or("k_max", 8, integer)?;
    let continuum_points = e.or("continuum_points", 0, integer)?;
    let sweep_kind = e.or("sweep", None, |s| match s {
        "none" => Ok(None),
        "eps" | "nu" => Ok(Some(s.to_string())),
        other => Err(format!("unknown sweep '{other}' (expected eps or nu)")),
    })?;
    let sweep_values = e.get("sweep_values", list)?;
    let error_times = e.or("error_times", vec![t_end], list)?;
    let fit_range = e
        .get("fit_range", |s| match list(s)?.as_slice() {
            &[a, b] => Ok((a, b)),
            _ => Err("expected two numbers 'lo, hi'".into()),
        })?
        .map(|(_, r)| r);
    let workers = e.get("workers", integer)?.map(|(_, w)| w);

    let sweep = match (sweep_kind.as_deref(), sweep_values) {
        (None, None) => Sweep::None,
        (None, Some((line, _))) => return Err(err(line, "sweep_values given without 'sweep'")),
        (Some(_), None) => {
            return Err(err(
                e.line("sweep").unwrap_or(0),
                "'sweep' needs 'sweep_values'",
            ))
        }
        (Some("eps"), Some((_, v))) => Sweep::Eps(v),
        (Some(_), Some((_, v))) => Sweep::Nu(v),
    };

    let cfg = RunConfig {
        model,
        p,
        eps,
        domain,
        n_cells,
        bc,
        flux,
        modes,
        dt_inner,
        nu,
        k_inner,
        t_end,
        snapshot_times,
        sigma_a,
        source,
        amplitudes,
        output_dir,
        cost_ceiling,
        heat_nu,
        reference_dt,
        blowup_factor,
        k_max,
        continuum_points,
        sweep,
        error_times,
        fit_range,
        workers,
    };
    validate(&cfg, &e)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig, e: &Entries) -> Result<(), ConfigError> {
    let at = |key: &str, message: String| ConfigError {
        line: e.line(key),
        message,
    };
    if !(cfg.eps > 0.0) {
        return Err(at("eps", format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.eps < MIN_EPS {
        return Err(at(
            "eps",
            format!("eps must be at least {MIN_EPS:e}, got {}", cfg.eps),
        ));
    }
    let vs = VelocitySpace::new(cfg.p).map_err(|x| at("p", x.to_string()))?;
    let grid = Grid::new(cfg.domain.0, cfg.domain.1, cfg.n_cells, cfg.bc).map_err(|x| {
        at(
            if e.line("domain").is_some() {
                "domain"
            } else {
                "n_cells"
            },
            x.to_string(),
        )
    })?;
    if cfg.modes.is_empty() {
        return Err(at("mode", "at least one mode is required".into()));
    }
    if !(cfg.t_end > 0.0) {
        return Err(at(
            "t_end",
            format!("t_end must be positive, got {}", cfg.t_end),
        ));
    }
    if let Some(&t) = cfg
        .snapshot_times
        .iter()
        .find(|&&t| !(0.0..=cfg.t_end).contains(&t))
    {
        return Err(at(
            "snapshot_times",
            format!("snapshot time {t} lies outside [0, t_end]"),
        ));
    }
    if let Some(&t) = cfg
        .error_times
        .iter()
        .find(|&&t| !(t > 0.0 && t <= cfg.t_end))
    {
        return Err(at(
            "error_times",
            format!("error time {t} lies outside (0, t_end]"),
        ));
    }
    if !(cfg.nu > 0.0) {
        return Err(at("nu", format!("nu must be positive, got {}", cfg.nu)));
    }
    if cfg.k_inner == KChoice::Fixed(0) {
        return Err(at("k_inner", "K must be at least 1".into()));
    }
    if !(cfg.heat_nu > 0.0 && cfg.heat_nu <= 0.5) {
        return Err(at(
            "heat_nu",
            format!(
                "heat step must satisfy dt <= dx^2 / (2 d_p), i.e. 0 < heat_nu <= 0.5, got {}",
                cfg.heat_nu
            ),
        ));
    }
    if cfg.model == Model::SuOlson && cfg.modes.contains(&Mode::Heat) {
        return Err(at(
            "mode",
            "heat mode applies to the linear model only".into(),
        ));
    }
    if !(cfg.sigma_a >= 0.0) {
        return Err(at(
            "sigma_a",
            format!("sigma_a must be nonnegative, got {}", cfg.sigma_a),
        ));
    }
    if let SourceSpec::Cells(v) = &cfg.source {
        if v.len() != cfg.n_cells {
            return Err(at(
                "source",
                format!(
                    "source lists {} values but the grid has {} cells",
                    v.len(),
                    cfg.n_cells
                ),
            ));
        }
    }
    if let Some(&a) = cfg.amplitudes.iter().find(|&&a| !(a > 0.0)) {
        return Err(at(
            "amplitude",
            format!("initial amplitude must be positive, got {a}"),
        ));
    }
    if cfg.amplitudes.is_empty() {
        return Err(at("amplitude", "at least one amplitude is required".into()));
    }
    if cfg.cost_ceiling == 0 {
        return Err(at("cost_ceiling", "cost ceiling must be at least 1".into()));
    }
    if !(cfg.blowup_factor > 1.0) {
        return Err(at(
            "blowup_factor",
            format!("blowup_factor must exceed 1, got {}", cfg.blowup_factor),
        ));
    }
    if cfg.k_max == 0 {
        return Err(at("k_max", "k_max must be at least 1".into()));
    }
    if cfg.workers == Some(0) {
        return Err(at("workers", "workers must be at least 1".into()));
    }
    if let Some((lo, hi)) = cfg.fit_range {
        if !(lo < hi) {
            return Err(at("fit_range", format!("fit range [{lo}, {hi}] is empty")));
        }
    }
    for (key, policy) in [
        ("dt_inner", cfg.dt_inner),
        ("reference_dt", cfg.reference_dt),
    ] {
        if let ReferenceStep::Explicit(dt) = policy {
            if !(dt > 0.0) {
                return Err(at(key, format!("step must be positive, got {dt}")));
            }
        }
    }

    let sweep_eps: Vec<f64> = match &cfg.sweep {
        Sweep::Eps(v) => v.clone(),
        _ => vec![cfg.eps],
    };
    match &cfg.sweep {
        Sweep::None => {}
        Sweep::Eps(v) | Sweep::Nu(v) => {
            if v.is_empty() {
                return Err(at("sweep_values", "sweep needs at least one value".into()));
            }
            if let Some(&x) = v.iter().find(|&&x| !(x > 0.0)) {
                return Err(at(
                    "sweep_values",
                    format!("sweep values must be positive, got {x}"),
                ));
            }
            if let Some(&x) = v
                .iter()
                .find(|&&x| x < MIN_EPS && matches!(cfg.sweep, Sweep::Eps(_)))
            {
                return Err(at(
                    "sweep_values",
                    format!("eps must be at least {MIN_EPS:e}, got {x}"),
                ));
            }
        }
    }
    if matches!(cfg.sweep, Sweep::Nu(_)) && cfg.modes.iter().any(|&m| m != Mode::Projective) {
        return Err(at(
            "sweep",
            "a nu sweep applies to the projective mode only".into(),
        ));
    }

    let eps_key = if matches!(cfg.sweep, Sweep::Eps(_)) {
        "sweep_values"
    } else {
        "eps"
    };
    for &eps in &sweep_eps {
        let dt = cfg.dt_inner.dt(eps);
        InnerParams::new(eps, dt, cfg.flux)
            .validate(&grid, &vs)
            .map_err(|x| at(eps_key, x.to_string()))?;
        if let KChoice::Fixed(k) = cfg.k_inner {
            if cfg.modes.contains(&Mode::Projective) {
                let nus = match &cfg.sweep {
                    Sweep::Nu(v) => v.clone(),
                    _ => vec![cfg.nu],
                };
                for nu in nus {
                    let dt_outer = nu * grid.dx().powi(2) / vs.d_p();
                    if dt_outer < (k + 1) as f64 * dt * (1.0 - 1e-12) {
                        return Err(at(
                            "nu",
                            format!(
                                "outer step {dt_outer} (nu = {nu}) is shorter than K + 1 = {} inner steps of {dt}",
                                k + 1
                            ),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}
