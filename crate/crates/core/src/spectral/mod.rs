//! Von Neumann analysis of the inner forward Euler step and of the
//! projective outer step built on it.
//!
//! On a periodic grid one inner step acts on the discrete Fourier
//! coefficients `F(m) = sum_i f_i exp(+i zeta_m i)` of every velocity
//! component as the `2p x 2p` symbol
//!
//! ```text
//! A(zeta) = (1 - dt/eps^2) I + i (dt/eps) V(zeta) + dt/(2p eps^2) 1 1^T
//! ```
//!
//! with `V` diagonal. The symbol is diagonal plus rank one, so its spectrum
//! comes from a secular equation; see [`eigenvalues`].

mod dense;
mod secular;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::grid::Grid;
use crate::inner::FluxKind;
use crate::velocity::VelocitySpace;

pub const DEFAULT_K_MAX: usize = 64;
/// Slack on disk membership.
pub const DISK_TOL: f64 = 1e-12;
/// Largest imaginary part still counted as real.
pub const REAL_TOL: f64 = 1e-10;
/// Slack on `|outer amplification| <= 1`.
pub const STABILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolMeta {
    pub eps: f64,
    pub dt: f64,
    pub dx: f64,
    pub flux: FluxKind,
    pub p: usize,
}

/// `A(zeta) = shift I + diag(transport) + coupling 1 1^T`.
#[derive(Debug, Clone)]
pub struct AmplificationSymbol {
    pub zeta: f64,
    pub shift: f64,
    pub coupling: f64,
    pub transport: Vec<Complex64>,
    pub meta: SymbolMeta,
}

impl AmplificationSymbol {
    pub fn dim(&self) -> usize {
        self.transport.len()
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |a, b| {
            let mut z = Complex64::new(self.coupling, 0.0);
            if a == b {
                z += self.shift + self.transport[a];
            }
            z
        })
    }

    /// Disk around `1 - dt/eps^2` holding all eigenvalues but the slow one,
    /// radius `max_j (|Re t_j| + |Im t_j|)` over the transport entries `t_j`.
    pub fn fast_disk(&self) -> Disk {
        let radius = self
            .transport
            .iter()
            .map(|t| t.re.abs() + t.im.abs())
            .fold(0.0, f64::max);
        Disk {
            center: Complex64::new(self.shift, 0.0),
            radius,
        }
    }
}

/// Symbol of one inner step for wavenumber `zeta` (in units of `1/dx`).
pub fn symbol(
    zeta: f64,
    vs: &VelocitySpace,
    eps: f64,
    dt: f64,
    dx: f64,
    flux: FluxKind,
) -> AmplificationSymbol {
    let n = vs.len();
    let lambda = dt / eps;
    let transport = vs
        .velocities()
        .iter()
        .map(|&v| {
            let entry = match flux {
                FluxKind::Centered => Complex64::new(zeta.sin() * v / dx, 0.0),
                FluxKind::Upwind => {
                    let phase = if v > 0.0 { zeta / 2.0 } else { -zeta / 2.0 };
                    Complex64::from_polar(2.0 * (zeta / 2.0).sin() * v / dx, phase)
                }
            };
            Complex64::new(0.0, lambda) * entry
        })
        .collect();
    AmplificationSymbol {
        zeta,
        shift: 1.0 - dt / (eps * eps),
        coupling: dt / (eps * eps * n as f64),
        transport,
        meta: SymbolMeta {
            eps,
            dt,
            dx,
            flux,
            p: vs.p(),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Secular {
        iterations: usize,
    },
    /// The secular iteration did not converge and the dense solver was used.
    DenseFallback,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub method: EigenMethod,
}

impl Spectrum {
    /// Index of the eigenvalue with the largest real part.
    pub fn dominant_index(&self) -> usize {
        let mut best = 0;
        for (k, z) in self.values.iter().enumerate() {
            if z.re > self.values[best].re {
                best = k;
            }
        }
        best
    }

    pub fn dominant(&self) -> Complex64 {
        self.values[self.dominant_index()]
    }

    pub fn flagged(&self) -> bool {
        self.method == EigenMethod::DenseFallback
    }
}

/// All eigenvalues of the symbol from the rank-one secular equation, with
/// the dense Schur solver as fallback.
pub fn eigenvalues(sym: &AmplificationSymbol) -> Spectrum {
    let roots = secular::rank_one_update_eigenvalues(&sym.transport, sym.coupling);
    if roots.converged && roots.roots.len() == sym.dim() {
        Spectrum {
            values: roots.roots.iter().map(|mu| mu + sym.shift).collect(),
            method: EigenMethod::Secular {
                iterations: roots.iterations,
            },
        }
    } else {
        Spectrum {
            values: dense_eigenvalues(sym),
            method: EigenMethod::DenseFallback,
        }
    }
}

/// Eigenvalues from a general dense complex Schur decomposition.
pub fn dense_eigenvalues(sym: &AmplificationSymbol) -> Vec<Complex64> {
    dense::schur_eigenvalues(sym.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    /// `radius - |z - center|`; nonnegative inside.
    pub fn margin(&self, z: Complex64) -> f64 {
        self.radius - (z - self.center).norm()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.margin(z) >= -DISK_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnclosureCheck {
    pub ok: bool,
    /// Eigenvalues outside the fast disk.
    pub outside: usize,
    /// The single outside eigenvalue, when there is exactly one.
    pub outlier: Option<Complex64>,
    /// Smallest margin among the eigenvalues inside the fast disk.
    pub worst_margin: f64,
}

/// True when exactly one eigenvalue lies outside the fast disk of `sym` and
/// it is real.
pub fn verify_enclosures(sym: &AmplificationSymbol, spectrum: &Spectrum) -> EnclosureCheck {
    verify_in_disk(&sym.fast_disk(), spectrum)
}

pub fn verify_in_disk(disk: &Disk, spectrum: &Spectrum) -> EnclosureCheck {
    let mut outside = Vec::new();
    let mut worst_margin = f64::INFINITY;
    for &z in &spectrum.values {
        if disk.contains(z) {
            worst_margin = worst_margin.min(disk.margin(z));
        } else {
            outside.push(z);
        }
    }
    let outlier = (outside.len() == 1).then(|| outside[0]);
    EnclosureCheck {
        ok: outlier.is_some_and(|z| z.im.abs() <= REAL_TOL),
        outside: outside.len(),
        outlier,
        worst_margin,
    }
}

/// `((M + 1) lambda - M) lambda^K` with `M = (dt_outer - (K + 1) dt_inner) / dt_inner`.
pub fn outer_amplification(lambda: Complex64, dt_inner: f64, dt_outer: f64, k: usize) -> Complex64 {
    let m = (dt_outer - (k as f64 + 1.0) * dt_inner) / dt_inner;
    (lambda * (m + 1.0) - m) * lambda.powi(k as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub k: usize,
    pub stable: bool,
    /// Mode with the largest outer amplification modulus.
    pub worst_zeta: f64,
    pub worst_amplification: f64,
}

/// Spectra of the inner symbol on every discrete mode `2 pi m / N_x` of a grid.
#[derive(Debug, Clone)]
pub struct ModeSpectra {
    pub symbols: Vec<AmplificationSymbol>,
    pub spectra: Vec<Spectrum>,
}

impl ModeSpectra {
    pub fn compute(
        vs: &VelocitySpace,
        grid: &Grid,
        eps: f64,
        dt_inner: f64,
        flux: FluxKind,
    ) -> Self {
        let symbols: Vec<_> = grid
            .mode_wavenumbers()
            .into_iter()
            .map(|zeta| symbol(zeta, vs, eps, dt_inner, grid.dx(), flux))
            .collect();
        let spectra = symbols.iter().map(eigenvalues).collect();
        Self { symbols, spectra }
    }

    pub fn dt_inner(&self) -> f64 {
        self.symbols[0].meta.dt
    }

    pub fn stability(&self, dt_outer: f64, k: usize) -> StabilityVerdict {
        let dt_inner = self.dt_inner();
        let mut worst_zeta = 0.0;
        let mut worst = 0.0f64;
        for (sym, spec) in self.symbols.iter().zip(&self.spectra) {
            for &lambda in &spec.values {
                let a = outer_amplification(lambda, dt_inner, dt_outer, k).norm();
                if a > worst || a.is_nan() {
                    worst = a;
                    worst_zeta = sym.zeta;
                }
            }
        }
        StabilityVerdict {
            k,
            stable: worst <= 1.0 + STABILITY_TOL,
            worst_zeta,
            worst_amplification: worst,
        }
    }

    /// Fast disk whose radius is the largest per-mode radius.
    pub fn fast_disk_envelope(&self) -> Disk {
        let radius = self
            .symbols
            .iter()
            .map(|s| s.fast_disk().radius)
            .fold(0.0, f64::max);
        Disk {
            center: Complex64::new(self.symbols[0].shift, 0.0),
            radius,
        }
    }
}

pub fn check_stability(
    vs: &VelocitySpace,
    grid: &Grid,
    eps: f64,
    dt_inner: f64,
    dt_outer: f64,
    k: usize,
    flux: FluxKind,
) -> StabilityVerdict {
    ModeSpectra::compute(vs, grid, eps, dt_inner, flux).stability(dt_outer, k)
}

#[derive(Debug, Clone)]
pub struct KSearch {
    pub min_k: Option<usize>,
    pub closed_form_bound: f64,
    /// Verdicts for `K = 1, 2, ...` up to the first stable one.
    pub verdicts: Vec<StabilityVerdict>,
}

/// Smallest `K <= k_max` for which every grid mode is stable.
pub fn min_inner_steps(
    vs: &VelocitySpace,
    grid: &Grid,
    eps: f64,
    dt_inner: f64,
    dt_outer: f64,
    flux: FluxKind,
    k_max: usize,
) -> KSearch {
    let modes = ModeSpectra::compute(vs, grid, eps, dt_inner, flux);
    let mut verdicts = Vec::new();
    let mut min_k = None;
    for k in 1..=k_max {
        let v = modes.stability(dt_outer, k);
        verdicts.push(v);
        if v.stable {
            min_k = Some(k);
            break;
        }
    }
    let dx = grid.dx();
    KSearch {
        min_k,
        closed_form_bound: closed_form_k_bound(
            vs.v_max(),
            vs.d_p(),
            eps / dx,
            vs.d_p() * dt_outer / (dx * dx),
        ),
        verdicts,
    }
}

/// Sufficient number of inner steps from the limiting disk analysis,
/// `2 / (1 + ln v_p / ln r) + ln(d_p / nu) / ln(r v_p)`, for `dt = eps^2`,
/// `r = eps / dx` and `nu = d_p dt_outer / dx^2`.
pub fn closed_form_k_bound(v_p: f64, d_p: f64, r: f64, nu: f64) -> f64 {
    2.0 / (1.0 + v_p.ln() / r.ln()) + (d_p / nu).ln() / (r * v_p).ln()
}

/// Slow disk `D(1 - dt/Dt, dt/Dt)` and fast disk `D(0, (dt/Dt)^(1/K))` of
/// the projective step, plus the fast disk of the inner step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disks {
    pub slow_projective: Disk,
    pub fast_projective: Disk,
    pub fast_inner: Disk,
}

impl Disks {
    pub fn new(dt_inner: f64, dt_outer: f64, k: usize, fast_inner: Disk) -> Self {
        let q = dt_inner / dt_outer;
        Self {
            slow_projective: Disk {
                center: Complex64::new(1.0 - q, 0.0),
                radius: q,
            },
            fast_projective: Disk {
                center: Complex64::new(0.0, 0.0),
                radius: q.powf(1.0 / k as f64),
            },
            fast_inner,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeReport {
    pub zeta: f64,
    pub eigenvalues: Vec<Complex64>,
    pub dominant: Complex64,
    pub enclosure_ok: bool,
    pub method: EigenMethod,
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub modes: Vec<ModeReport>,
    pub disks: Disks,
    pub stable: bool,
    pub min_k: Option<usize>,
}

/// Per-mode spectra, enclosure verdicts, and stability at `K = k` in one pass.
#[allow(clippy::too_many_arguments)]
pub fn spectral_report(
    vs: &VelocitySpace,
    grid: &Grid,
    eps: f64,
    dt_inner: f64,
    dt_outer: f64,
    k: usize,
    flux: FluxKind,
    k_max: usize,
) -> SpectralReport {
    let ms = ModeSpectra::compute(vs, grid, eps, dt_inner, flux);
    let modes = ms
        .symbols
        .iter()
        .zip(&ms.spectra)
        .map(|(sym, spec)| ModeReport {
            zeta: sym.zeta,
            eigenvalues: spec.values.clone(),
            dominant: spec.dominant(),
            enclosure_ok: verify_enclosures(sym, spec).ok,
            method: spec.method,
        })
        .collect();
    let stable = ms.stability(dt_outer, k).stable;
    let min_k = (1..=k_max).find(|&kk| ms.stability(dt_outer, kk).stable);
    SpectralReport {
        modes,
        disks: Disks::new(dt_inner, dt_outer, k, ms.fast_disk_envelope()),
        stable,
        min_k,
    }
}
