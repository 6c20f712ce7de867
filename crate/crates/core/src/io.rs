//! CSV export. Floats are written with 17 significant digits so that files
//! round-trip exactly; every file is written to a temporary sibling first and
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::ErrorRecord;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::projective::StepRecord;
use crate::spectral::{ModeSpectra, StabilityVerdict};
use crate::state::KineticState;
use crate::velocity::VelocitySpace;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Density and flux per cell, plus `theta` when given.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub flux: Vec<f64>,
    pub theta: Option<Vec<f64>>,
}

impl Snapshot {
    pub fn of(
        state: &KineticState,
        grid: &Grid,
        vs: &VelocitySpace,
        eps: f64,
        theta: Option<&[f64]>,
    ) -> Result<Self> {
        Ok(Self {
            x: grid.centers().to_vec(),
            rho: state.density(vs),
            flux: state.flux(vs, eps)?,
            theta: theta.map(<[f64]>::to_vec),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(if self.theta.is_some() {
            "x,rho,J,theta\n"
        } else {
            "x,rho,J\n"
        });
        for i in 0..self.x.len() {
            let _ = write!(
                s,
                "{},{},{}",
                fmt_f64(self.x[i]),
                fmt_f64(self.rho[i]),
                fmt_f64(self.flux[i])
            );
            if let Some(th) = &self.theta {
                let _ = write!(s, ",{}", fmt_f64(th[i]));
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let with_theta = match header {
            "x,rho,J" => false,
            "x,rho,J,theta" => true,
            other => {
                return Err(Error::Config(format!(
                    "{}: unexpected snapshot header '{other}'",
                    path.display()
                )))
            }
        };
        let mut snap = Snapshot {
            x: Vec::new(),
            rho: Vec::new(),
            flux: Vec::new(),
            theta: with_theta.then(Vec::new),
        };
        for (n, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 2)))?;
            if vals.len() != 3 + usize::from(with_theta) {
                return Err(Error::Config(format!(
                    "{}:{}: wrong number of columns",
                    path.display(),
                    n + 2
                )));
            }
            snap.x.push(vals[0]);
            snap.rho.push(vals[1]);
            snap.flux.push(vals[2]);
            if let Some(th) = snap.theta.as_mut() {
                th.push(vals[3]);
            }
        }
        Ok(snap)
    }
}

/// `x,v,f`, one row per cell and velocity.
pub fn distribution_csv(state: &KineticState, grid: &Grid, vs: &VelocitySpace) -> String {
    let mut s = String::from("x,v,f\n");
    for (i, x) in grid.centers().iter().enumerate() {
        for (j, v) in vs.velocities().iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_f64(*x),
                fmt_f64(*v),
                fmt_f64(state.get(i, j))
            );
        }
    }
    s
}

pub fn run_log_csv(log: &[StepRecord]) -> String {
    let mut s = String::from("step,t,rho_min,rho_max,mass\n");
    for r in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            fmt_f64(r.t),
            fmt_f64(r.rho_min),
            fmt_f64(r.rho_max),
            fmt_f64(r.mass)
        );
    }
    s
}

pub fn spectrum_csv(modes: &ModeSpectra) -> String {
    let mut s = String::from("zeta,re,im,is_dominant\n");
    for (sym, spec) in modes.symbols.iter().zip(&modes.spectra) {
        let d = spec.dominant_index();
        for (k, z) in spec.values.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_f64(sym.zeta),
                fmt_f64(z.re),
                fmt_f64(z.im),
                k == d
            );
        }
    }
    s
}

pub fn stability_csv(verdicts: &[StabilityVerdict]) -> String {
    let mut s = String::from("K,stable,worst_zeta,worst_amplification\n");
    for v in verdicts {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            v.k,
            v.stable,
            fmt_f64(v.worst_zeta),
            fmt_f64(v.worst_amplification)
        );
    }
    s
}

pub fn errors_csv(records: &[ErrorRecord]) -> String {
    let mut s = String::from("label,eps,dx,dt_outer,t,err_rho,err_flux\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.label,
            fmt_f64(r.eps),
            fmt_f64(r.dx),
            r.dt_outer.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.t),
            fmt_f64(r.err_rho),
            fmt_f64(r.err_flux)
        );
    }
    s
}
