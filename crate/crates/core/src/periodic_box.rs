//! Kennard-Robertson relation for a particle on a ring of length `L`.
//!
//! A [`PeriodicWavefunction`] holds samples `ψ(x_k)` at `x_k = −L/2 + kL/N`
//! and is identified with its trigonometric interpolant, wavenumbers
//! `k_n = 2πn/L` for `n ∈ [−N/2, N/2)`. Momentum acts spectrally and position
//! by multiplication. Integrals of `x^p · f(x)` are taken exactly on the
//! interpolant: `ψ` is zero-padded to `2N` points, where products of two
//! interpolants are alias-free, and then integrated against closed-form
//! weights for `∫ x^p e^{ik(x+L/2)} dx`. The non-periodic factor `x` never
//! has to be sampled, so boundary amplitude does not spoil convergence.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::operator::C64;
use crate::random::{complex_gaussian, trial_rng};
use crate::relations::{RelationId, RelationReport};

pub const MIN_GRID: usize = 64;
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Quadrature-limited tolerance of the Kennard-Robertson check.
pub const KR_TOL: f64 = 1e-8;
/// Lower limit for the quadratic form.
pub const QUADRATIC_TOL: f64 = 1e-10;
/// Image terms are summed until the newest ones are below this magnitude.
pub const IMAGE_TAIL: f64 = 1e-14;
const MAX_IMAGES: usize = 100_000;
/// Default mode cutoff of random band-limited states.
pub const DEFAULT_BAND: usize = 12;

#[derive(Debug, Error)]
pub enum BoxError {
    #[error("grid size {0} is not a power of two ≥ {MIN_GRID}")]
    GridSize(usize),
    #[error("box length {0} is not positive and finite")]
    Length(f64),
    #[error("hbar {0} is not positive and finite")]
    Hbar(f64),
    #[error("{found} samples supplied for a grid of {expected}")]
    SampleCount { expected: usize, found: usize },
    #[error("wavefunction norm {norm} deviates from 1 by more than {NORMALIZATION_TOL}")]
    NotNormalized { norm: f64 },
    #[error("wavefunction vanishes")]
    ZeroVector,
    #[error("width {0} is not positive and finite")]
    Width(f64),
    #[error("center {center} lies outside (−L/2, L/2) for L={length}")]
    Center { center: f64, length: f64 },
    #[error("wrapped Gaussian has norm {norm}; width too large for the box")]
    WrappingFailed { norm: f64 },
    #[error("band {band} too large for grid {grid}; need 4·band < grid")]
    Band { band: usize, grid: usize },
    #[error("invalid profile `{0}`; expected plane:n, gaussian:w[:c], random:seed or file:path")]
    Profile(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicWavefunction {
    length: f64,
    hbar: f64,
    samples: Vec<C64>,
}

fn validate_grid(length: f64, grid: usize, hbar: f64) -> Result<(), BoxError> {
    if grid < MIN_GRID || !grid.is_power_of_two() {
        return Err(BoxError::GridSize(grid));
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(BoxError::Length(length));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(BoxError::Hbar(hbar));
    }
    Ok(())
}

fn discrete_norm(samples: &[C64], length: f64) -> f64 {
    let dx = length / samples.len() as f64;
    (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
}

impl PeriodicWavefunction {
    /// Validates that `Σ|ψ_k|² L/N = 1` within [`NORMALIZATION_TOL`].
    pub fn new(samples: Vec<C64>, length: f64, hbar: f64) -> Result<Self, BoxError> {
        validate_grid(length, samples.len(), hbar)?;
        let norm = discrete_norm(&samples, length);
        if !((norm - 1.0).abs() <= NORMALIZATION_TOL) {
            return Err(BoxError::NotNormalized { norm });
        }
        Ok(Self { length, hbar, samples })
    }

    /// Rescales `samples` to unit norm first.
    pub fn normalized(mut samples: Vec<C64>, length: f64, hbar: f64) -> Result<Self, BoxError> {
        validate_grid(length, samples.len(), hbar)?;
        let norm = discrete_norm(&samples, length);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(BoxError::ZeroVector);
        }
        samples.iter_mut().for_each(|z| *z /= norm);
        Self::new(samples, length, hbar)
    }

    /// State with Fourier coefficients `modes = [(n, a_n)]`, that is
    /// `ψ(x) = Σ a_n e^{i 2πn (x + L/2)/L}`, normalized.
    pub fn from_modes(modes: &[(i64, C64)], length: f64, grid: usize, hbar: f64) -> Result<Self, BoxError> {
        validate_grid(length, grid, hbar)?;
        let half = (grid / 2) as i64;
        let mut spectrum = vec![C64::new(0.0, 0.0); grid];
        for &(n, a) in modes {
            if n < -half || n >= half {
                return Err(BoxError::Band {
                    band: n.unsigned_abs() as usize,
                    grid,
                });
            }
            spectrum[n.rem_euclid(grid as i64) as usize] += a;
        }
        FftPlanner::new().plan_fft_inverse(grid).process(&mut spectrum);
        Self::normalized(spectrum, length, hbar)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self, BoxError> {
        validate_grid(self.length, self.samples.len(), hbar)?;
        self.hbar = hbar;
        Ok(self)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn positions(&self) -> Vec<f64> {
        let n = self.grid();
        (0..n).map(|k| -self.length / 2.0 + k as f64 * self.length / n as f64).collect()
    }

    /// Signed wavenumber index of FFT bin `j`; Nyquist maps to `−N/2`.
    fn mode_index(&self, j: usize) -> i64 {
        let n = self.grid();
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode_index(j) as f64 / self.length
    }

    /// Coefficients `a_n` in FFT bin order.
    fn coefficients(&self) -> Vec<C64> {
        let n = self.grid();
        let mut a = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut a);
        a.iter_mut().for_each(|z| *z /= n as f64);
        a
    }

    /// Interpolant of coefficients `a` (FFT bin order, length N) on the
    /// doubled grid.
    fn padded(&self, a: &[C64]) -> Vec<C64> {
        let n = self.grid();
        let mut out = vec![C64::new(0.0, 0.0); 2 * n];
        for (j, &z) in a.iter().enumerate() {
            out[self.mode_index(j).rem_euclid(2 * n as i64) as usize] = z;
        }
        FftPlanner::new().plan_fft_inverse(2 * n).process(&mut out);
        out
    }
}

/// Exact-integration weights on an `m`-point grid over `[−L/2, L/2)`:
/// `Σ_j w_j f_j = ∫ x^p f̃(x) dx` for the interpolant `f̃` of `f_j`, provided
/// `f̃` has no Nyquist component.
fn moment_weights(m: usize, length: f64, power: u32) -> Vec<f64> {
    let half = (m / 2) as i64;
    let mut c = vec![C64::new(0.0, 0.0); m];
    for (j, slot) in c.iter_mut().enumerate() {
        let n = if (j as i64) < half { j as i64 } else { j as i64 - m as i64 };
        let nf = n as f64;
        *slot = match (power, n) {
            (0, 0) => C64::new(length, 0.0),
            (0, _) => C64::new(0.0, 0.0),
            (1, 0) => C64::new(0.0, 0.0),
            // the Nyquist average of ±m/2 cancels for the odd moment
            (1, _) if n == -half => C64::new(0.0, 0.0),
            (1, _) => C64::new(0.0, -length * length / (2.0 * PI * nf)),
            (2, 0) => C64::new(length.powi(3) / 12.0, 0.0),
            (2, _) => C64::new(length.powi(3) / (2.0 * PI * PI * nf * nf), 0.0),
            _ => unreachable!("moments up to second order"),
        } / m as f64;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut c);
    c.into_iter().map(|z| z.re).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean_x: f64,
    pub mean_p: f64,
    pub dev_x: f64,
    pub dev_p: f64,
}

struct Weights {
    w1: Vec<f64>,
    w2: Vec<f64>,
    dx: f64,
}

impl Weights {
    fn new(w: &PeriodicWavefunction) -> Self {
        let m = 2 * w.grid();
        Self {
            w1: moment_weights(m, w.length, 1),
            w2: moment_weights(m, w.length, 2),
            dx: w.length / m as f64,
        }
    }
}

struct Analysis {
    coefficients: Vec<C64>,
    wavenumbers: Vec<f64>,
    psi: Vec<C64>,
    moments: Moments,
    weights: Weights,
}

fn analyze(w: &PeriodicWavefunction) -> Analysis {
    let coefficients = w.coefficients();
    let wavenumbers: Vec<f64> = (0..w.grid()).map(|j| w.wavenumber(j)).collect();
    let weight: Vec<f64> = coefficients.iter().map(|a| w.length * a.norm_sqr()).collect();
    let total: f64 = weight.iter().sum();
    let mean_k = weight.iter().zip(&wavenumbers).map(|(p, k)| p * k).sum::<f64>() / total;
    let var_k = weight
        .iter()
        .zip(&wavenumbers)
        .map(|(p, k)| p * (k - mean_k).powi(2))
        .sum::<f64>()
        / total;

    let psi = w.padded(&coefficients);
    let weights = Weights::new(w);
    let density: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let dot = |ws: &[f64]| ws.iter().zip(&density).map(|(a, b)| a * b).sum::<f64>();
    let mean_x = dot(&weights.w1);
    let var_x = dot(&weights.w2) - mean_x * mean_x;

    Analysis {
        coefficients,
        wavenumbers,
        psi,
        moments: Moments {
            mean_x,
            mean_p: w.hbar * mean_k,
            dev_x: var_x.max(0.0).sqrt(),
            dev_p: w.hbar * var_k.max(0.0).sqrt(),
        },
        weights,
    }
}

/// `(⟨x⟩, ⟨p⟩, Δx, Δp)`.
pub fn moments(w: &PeriodicWavefunction) -> Moments {
    analyze(w).moments
}

/// `(ħ/2)·|1 − L|ψ(±L/2)|²|`, read at the grid point `x_0 = −L/2`.
pub fn kr_bound(w: &PeriodicWavefunction) -> f64 {
    0.5 * w.hbar * (1.0 - w.length * w.samples[0].norm_sqr()).abs()
}

/// `Δp·Δx ≥ kr_bound`, within [`KR_TOL`].
pub fn check36(w: &PeriodicWavefunction) -> RelationReport {
    let m = moments(w);
    RelationReport::with_tolerance(RelationId::KR36, m.dev_p * m.dev_x, kr_bound(w), KR_TOL)
}

fn quadratic_form_with(w: &PeriodicWavefunction, an: &Analysis, s: f64) -> f64 {
    let Moments { mean_x, mean_p, .. } = an.moments;
    let mean_k = mean_p / w.hbar;
    // periodic part is(p − ⟨p⟩)ψ − ⟨x⟩ψ; the remaining term is x·ψ
    let periodic: Vec<C64> = an
        .coefficients
        .iter()
        .zip(&an.wavenumbers)
        .map(|(&a, &k)| a * C64::new(-mean_x, s * w.hbar * (k - mean_k)))
        .collect();
    let a = w.padded(&periodic);
    let b = &an.psi;
    let Weights { w1, w2, dx } = &an.weights;
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (a, b))| dx * a.norm_sqr() + 2.0 * w1[j] * (a.conj() * b).re + w2[j] * b.norm_sqr())
        .sum()
}

/// `∫|[is(p − ⟨p⟩) + (x − ⟨x⟩)]ψ|² dx`.
pub fn quadratic_form(w: &PeriodicWavefunction, s: f64) -> f64 {
    quadratic_form_with(w, &analyze(w), s)
}

/// `points` evenly spaced values of `s` from `lo` to `hi`.
pub fn s_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Quadratic form evaluated at each `s`.
pub fn quadratic_sweep(w: &PeriodicWavefunction, s_values: &[f64]) -> Vec<f64> {
    let an = analyze(w);
    s_values.iter().map(|&s| quadratic_form_with(w, &an, s)).collect()
}

/// `e^{i2πnx/L}/√L`.
pub fn make_plane_wave(n: i64, length: f64, grid: usize) -> Result<PeriodicWavefunction, BoxError> {
    validate_grid(length, grid, 1.0)?;
    let amp = 1.0 / length.sqrt();
    let samples = (0..grid)
        .map(|k| {
            let x = -length / 2.0 + k as f64 * length / grid as f64;
            C64::from_polar(amp, 2.0 * PI * n as f64 * x / length)
        })
        .collect();
    PeriodicWavefunction::new(samples, length, 1.0)
}

/// Periodic sum of `(πw²)^{-1/4} exp(−(x − c)²/(2w²))` over images `x + jL`.
/// The sum is not renormalized: a norm off by more than
/// [`NORMALIZATION_TOL`] means the images overlap and the width does not fit.
pub fn make_wrapped_gaussian(
    width: f64,
    center: f64,
    length: f64,
    grid: usize,
) -> Result<PeriodicWavefunction, BoxError> {
    validate_grid(length, grid, 1.0)?;
    if !(width.is_finite() && width > 0.0) {
        return Err(BoxError::Width(width));
    }
    if !(center.abs() < length / 2.0) {
        return Err(BoxError::Center { center, length });
    }
    let amp = (PI * width * width).powf(-0.25);
    let xs: Vec<f64> = (0..grid)
        .map(|k| -length / 2.0 + k as f64 * length / grid as f64)
        .collect();
    let g = |x: f64| amp * (-(x - center).powi(2) / (2.0 * width * width)).exp();
    let mut samples: Vec<C64> = xs.iter().map(|&x| C64::new(g(x), 0.0)).collect();
    for image in 1..=MAX_IMAGES {
        let shift = image as f64 * length;
        let mut tail = 0.0f64;
        for (s, &x) in samples.iter_mut().zip(&xs) {
            let term = g(x + shift) + g(x - shift);
            tail = tail.max(term);
            s.re += term;
        }
        if tail < IMAGE_TAIL {
            break;
        }
    }
    let norm = discrete_norm(&samples, length);
    if !((norm - 1.0).abs() <= NORMALIZATION_TOL) {
        return Err(BoxError::WrappingFailed { norm });
    }
    PeriodicWavefunction::new(samples, length, 1.0)
}

/// Random state with complex Gaussian coefficients on modes `|n| ≤ band`.
/// The band is independent of the grid, so the same generator state gives
/// the same continuous wavefunction at every admissible `grid`.
pub fn random_band_limited<R: Rng + ?Sized>(
    rng: &mut R,
    band: usize,
    length: f64,
    grid: usize,
) -> Result<PeriodicWavefunction, BoxError> {
    if 4 * band >= grid {
        return Err(BoxError::Band { band, grid });
    }
    let b = band as i64;
    let modes: Vec<(i64, C64)> = (-b..=b).map(|n| (n, complex_gaussian(rng))).collect();
    PeriodicWavefunction::from_modes(&modes, length, grid, 1.0)
}

/// Random band-limited state `trial` of a run seeded with `seed`.
pub fn seeded_band_limited(seed: u64, trial: u64, length: f64, grid: usize) -> Result<PeriodicWavefunction, BoxError> {
    random_band_limited(&mut trial_rng(seed, trial), DEFAULT_BAND, length, grid)
}

fn parse_header(line: &str, path: &Path) -> Result<(f64, usize, Option<f64>), BoxError> {
    let err = |message: String| BoxError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message,
    };
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| err("expected header `# L=<length> N=<grid>`".into()))?;
    let (mut length, mut grid, mut hbar) = (None, None, None);
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| err(format!("header token `{token}` is not key=value")))?;
        match key {
            "L" => length = Some(value.parse::<f64>().map_err(|e| err(format!("L `{value}`: {e}")))?),
            "N" => grid = Some(value.parse::<usize>().map_err(|e| err(format!("N `{value}`: {e}")))?),
            "hbar" => hbar = Some(value.parse::<f64>().map_err(|e| err(format!("hbar `{value}`: {e}")))?),
            other => return Err(err(format!("unknown header key `{other}`"))),
        }
    }
    Ok((
        length.ok_or_else(|| err("header lacks L".into()))?,
        grid.ok_or_else(|| err("header lacks N".into()))?,
        hbar,
    ))
}

/// Parses a two-column `re im` sample file whose first line is
/// `# L=<length> N=<grid>` (optionally `hbar=<value>`). Samples are
/// normalized on load and `L` in the header is authoritative.
pub fn parse_samples(text: &str, path: &Path) -> Result<PeriodicWavefunction, BoxError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| BoxError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "empty sample file".into(),
    })?;
    let (length, grid, hbar) = parse_header(header, path)?;
    let mut samples = Vec::with_capacity(grid);
    for (index, line) in lines {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| BoxError::Parse {
            path: path.to_path_buf(),
            line: index + 1,
            message,
        };
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(err(format!("expected 2 columns (re im), found {}", fields.len())));
        }
        let num = |f: &str| f.parse::<f64>().map_err(|e| err(format!("`{f}`: {e}")));
        samples.push(C64::new(num(fields[0])?, num(fields[1])?));
    }
    if samples.len() != grid {
        return Err(BoxError::SampleCount {
            expected: grid,
            found: samples.len(),
        });
    }
    PeriodicWavefunction::normalized(samples, length, hbar.unwrap_or(1.0))
}

pub fn read_samples(path: &Path) -> Result<PeriodicWavefunction, BoxError> {
    let text = fs::read_to_string(path).map_err(|source| BoxError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_samples(&text, path)
}

pub fn write_samples<W: io::Write>(w: &PeriodicWavefunction, mut out: W) -> io::Result<()> {
    writeln!(out, "# L={} N={} hbar={}", w.length, w.grid(), w.hbar)?;
    for z in &w.samples {
        writeln!(out, "{:.16e} {:.16e}", z.re, z.im)?;
    }
    Ok(())
}

/// State selector for the `box` subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Plane(i64),
    Gaussian { width: f64, center: f64 },
    Random(u64),
    File(PathBuf),
}

impl Profile {
    pub fn build(&self, length: f64, grid: usize) -> Result<PeriodicWavefunction, BoxError> {
        match self {
            Profile::Plane(n) => make_plane_wave(*n, length, grid),
            Profile::Gaussian { width, center } => make_wrapped_gaussian(*width, *center, length, grid),
            Profile::Random(seed) => seeded_band_limited(*seed, 0, length, grid),
            Profile::File(path) => read_samples(path),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Plane(n) => write!(f, "plane:{n}"),
            Profile::Gaussian { width, center } if *center == 0.0 => write!(f, "gaussian:{width}"),
            Profile::Gaussian { width, center } => write!(f, "gaussian:{width}:{center}"),
            Profile::Random(seed) => write!(f, "random:{seed}"),
            Profile::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl FromStr for Profile {
    type Err = BoxError;
    fn from_str(s: &str) -> Result<Self, BoxError> {
        let bad = || BoxError::Profile(s.to_string());
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "plane" => rest.parse().map(Profile::Plane).map_err(|_| bad()),
            "gaussian" => {
                let mut parts = rest.split(':');
                let width = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                let center = match parts.next() {
                    Some(p) => p.parse().map_err(|_| bad())?,
                    None => 0.0,
                };
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(Profile::Gaussian { width, center })
            }
            "random" => rest.parse().map(Profile::Random).map_err(|_| bad()),
            "file" if !rest.is_empty() => Ok(Profile::File(PathBuf::from(rest))),
            _ => Err(bad()),
        }
    }
}

/// One `box` result: the Kennard-Robertson check plus the minimum of the
/// quadratic form over an s-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub state_id: String,
    pub moments: Moments,
    pub report: RelationReport,
    pub min_quadratic: f64,
}

impl BoxRow {
    pub fn satisfied(&self) -> bool {
        self.report.satisfied && self.min_quadratic >= -QUADRATIC_TOL
    }
}

pub const BOX_HEADER: &str = "state_id,devX,devP,lhs,rhs,satisfied";
pub const S_SWEEP: (f64, f64, usize) = (-10.0, 10.0, 101);

pub fn evaluate(state_id: &str, w: &PeriodicWavefunction) -> BoxRow {
    let an = analyze(w);
    let (lo, hi, points) = S_SWEEP;
    let min_quadratic = s_grid(lo, hi, points)
        .into_iter()
        .map(|s| quadratic_form_with(w, &an, s))
        .fold(f64::INFINITY, f64::min);
    let m = an.moments;
    BoxRow {
        state_id: state_id.to_string(),
        moments: m,
        report: RelationReport::with_tolerance(RelationId::KR36, m.dev_p * m.dev_x, kr_bound(w), KR_TOL),
        min_quadratic,
    }
}

pub fn write_box_csv<W: io::Write>(rows: &[BoxRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{BOX_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.state_id,
            r.moments.dev_x,
            r.moments.dev_p,
            r.report.lhs,
            r.report.rhs,
            r.satisfied()
        )?;
    }
    Ok(())
}
