//! Qubit spin measurement with a detuned meter axis.
//!
//! The meter measures `σ_φ = cos φ σ_x + sin φ σ_y` instead of `A = σ_x`;
//! the disturbed observable is `B = σ_y` and the system is prepared in
//! `|+z⟩`. Closed forms: `ε = 2 sin(φ/2)`, `η = √2 cos φ`, `σ(A) = σ(B) = 1`.
//!
//! [`sweep`] evaluates the relations on a uniform φ grid both from the
//! closed forms and from the dilated measurement model, and refuses to
//! return rows on which the two disagree.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::{IndirectModel, Outcome, ProjectiveModel};
use crate::operator::{Operator, StateVector};
use crate::relations::{eval, quantities, RelationId};

/// Analytic and simulated sweep values must agree to this absolute tolerance.
pub const SWEEP_AGREEMENT_TOL: f64 = 1e-9;
/// Lower bound `|⟨[σ_x, σ_y]⟩|` on `|+z⟩`.
pub const RHS_FULL: f64 = 2.0;
/// Lower bound `½|⟨[σ_x, σ_y]⟩|`.
pub const RHS_HALF: f64 = 1.0;
pub const DEFAULT_STEPS: usize = 65;
pub const CSV_HEADER: &str = "phi,eps,eta,sigmaA,sigmaB,lhs14,lhs15,lhs16,lhs13,ratio14,ratio16";
pub const DATA_HEADER: [&str; 4] = ["phi", "quantity_id", "value", "uncertainty"];

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("detuning angle {0} is outside [0, π/2]")]
    OutOfDomain(f64),
    #[error("a sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("analytic and simulated {quantity} disagree at phi={phi}: {analytic} vs {simulated}")]
    Mismatch {
        phi: f64,
        quantity: &'static str,
        analytic: f64,
        simulated: f64,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: bad header `{found}`, expected `{expected}`")]
    Header { path: PathBuf, found: String, expected: String },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{path}: {} malformed row(s): {}", .errors.len(), .errors.join("; "))]
    Rows { path: PathBuf, errors: Vec<String> },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SpinError + '_ {
    move |source| SpinError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_domain(phi: f64) -> Result<(), SpinError> {
    if (0.0..=FRAC_PI_2).contains(&phi) {
        Ok(())
    } else {
        Err(SpinError::OutOfDomain(phi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinScenario {
    phi: f64,
}

impl SpinScenario {
    pub fn new(phi: f64) -> Result<Self, SpinError> {
        check_domain(phi)?;
        Ok(Self { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma_phi(&self) -> Operator {
        &Operator::pauli_x().scale_real(self.phi.cos()) + &Operator::pauli_y().scale_real(self.phi.sin())
    }

    /// `E_φ(±1) = (1 ± σ_φ)/2`.
    pub fn projectors(&self) -> (Operator, Operator) {
        let id = Operator::identity(2);
        let s = self.sigma_phi();
        ((&id + &s).scale_real(0.5), (&id - &s).scale_real(0.5))
    }

    /// `|+z⟩`.
    pub fn state(&self) -> StateVector {
        StateVector::basis(2, 0)
    }

    pub fn projective_model(&self) -> ProjectiveModel {
        let (plus, minus) = self.projectors();
        ProjectiveModel::new(
            vec![
                Outcome { value: 1.0, projector: plus },
                Outcome { value: -1.0, projector: minus },
            ],
            Operator::pauli_x(),
            Operator::pauli_y(),
        )
        .expect("spin projectors form a resolution of the identity")
    }

    pub fn dilated_model(&self) -> IndirectModel {
        self.projective_model().dilate().expect("two ±1 outcomes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticQuantities {
    pub eps: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

/// `(2 sin(φ/2), √2 cos φ, 1, 1)`.
pub fn analytic_quantities(phi: f64) -> Result<AnalyticQuantities, SpinError> {
    check_domain(phi)?;
    Ok(AnalyticQuantities {
        eps: 2.0 * (phi / 2.0).sin(),
        eta: SQRT_2 * phi.cos(),
        sigma_a: 1.0,
        sigma_b: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub phi: f64,
    pub eps: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `(ε + σ_A)(η + σ_B)`
    pub lhs14: f64,
    /// `{(ε² + σ_A²)(η² + σ_B²)}^{1/2}`
    pub lhs15: f64,
    /// `εη + σ_A η + ε σ_B`
    pub lhs16: f64,
    /// `εη`
    pub lhs13: f64,
    pub rhs_full: f64,
    pub rhs_half: f64,
    /// `lhs14 / rhs_full`
    pub ratio14: f64,
    /// `lhs16 / rhs_half`
    pub ratio16: f64,
}

impl SweepRow {
    fn from_quantities(phi: f64, q: AnalyticQuantities) -> Self {
        let AnalyticQuantities {
            eps,
            eta,
            sigma_a,
            sigma_b,
        } = q;
        let lhs14 = (eps + sigma_a) * (eta + sigma_b);
        let lhs15 = ((eps * eps + sigma_a * sigma_a) * (eta * eta + sigma_b * sigma_b)).sqrt();
        let lhs16 = eps * eta + sigma_a * eta + eps * sigma_b;
        Self {
            phi,
            eps,
            eta,
            sigma_a,
            sigma_b,
            lhs14,
            lhs15,
            lhs16,
            lhs13: eps * eta,
            rhs_full: RHS_FULL,
            rhs_half: RHS_HALF,
            ratio14: lhs14 / RHS_FULL,
            ratio16: lhs16 / RHS_HALF,
        }
    }

    /// Analytic row at `phi`.
    pub fn analytic(phi: f64) -> Result<Self, SpinError> {
        Ok(Self::from_quantities(phi, analytic_quantities(phi)?))
    }

    fn to_record(self) -> [f64; 11] {
        [
            self.phi,
            self.eps,
            self.eta,
            self.sigma_a,
            self.sigma_b,
            self.lhs14,
            self.lhs15,
            self.lhs16,
            self.lhs13,
            self.ratio14,
            self.ratio16,
        ]
    }

    fn from_record(r: [f64; 11]) -> Self {
        Self {
            phi: r[0],
            eps: r[1],
            eta: r[2],
            sigma_a: r[3],
            sigma_b: r[4],
            lhs14: r[5],
            lhs15: r[6],
            lhs16: r[7],
            lhs13: r[8],
            rhs_full: RHS_FULL,
            rhs_half: RHS_HALF,
            ratio14: r[9],
            ratio16: r[10],
        }
    }

    pub fn value(&self, quantity: QuantityId) -> f64 {
        match quantity {
            QuantityId::Eps => self.eps,
            QuantityId::Eta => self.eta,
            QuantityId::Lhs14 => self.lhs14,
            QuantityId::Lhs15 => self.lhs15,
            QuantityId::Lhs16Ratio => self.ratio16,
            QuantityId::Lhs14Ratio => self.ratio14,
        }
    }
}

/// Uniform grid of `steps` angles over `[0, π/2]`, endpoints included.
pub fn grid(steps: usize) -> Result<Vec<f64>, SpinError> {
    if steps < 2 {
        return Err(SpinError::TooFewSteps(steps));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k == steps - 1 { FRAC_PI_2 } else { FRAC_PI_2 * k as f64 / last })
        .collect())
}

fn simulated_row(phi: f64) -> Result<SweepRow, SpinError> {
    let scenario = SpinScenario::new(phi)?;
    let analytic = SweepRow::analytic(phi)?;
    let q = quantities(&scenario.dilated_model(), &scenario.state());
    let report = |id| eval(id, &q).expect("full quantity set");
    let simulated = [
        ("eps", q.eps.expect("filled")),
        ("eta", q.eta.expect("filled")),
        ("sigmaA", q.sigma_a.expect("filled")),
        ("sigmaB", q.sigma_b.expect("filled")),
        ("lhs14", report(RelationId::UVH1).lhs),
        ("lhs15", report(RelationId::MAK9).lhs),
        ("lhs16", report(RelationId::OZ16).lhs),
        ("lhs13", report(RelationId::HEDR13).lhs),
        ("rhs_full", report(RelationId::UVH1).rhs),
        ("rhs_half", report(RelationId::OZ16).rhs),
    ];
    let expected = [
        analytic.eps,
        analytic.eta,
        analytic.sigma_a,
        analytic.sigma_b,
        analytic.lhs14,
        analytic.lhs15,
        analytic.lhs16,
        analytic.lhs13,
        analytic.rhs_full,
        analytic.rhs_half,
    ];
    for ((quantity, sim), exp) in simulated.into_iter().zip(expected) {
        if (sim - exp).abs() > SWEEP_AGREEMENT_TOL {
            return Err(SpinError::Mismatch {
                phi,
                quantity,
                analytic: exp,
                simulated: sim,
            });
        }
    }
    Ok(analytic)
}

/// Rows ordered by φ, each cross-checked against the dilated model.
pub fn sweep(steps: usize) -> Result<Vec<SweepRow>, SpinError> {
    grid(steps)?.into_par_iter().map(simulated_row).collect()
}

/// Deviations of a sweep from the expected qualitative picture.
pub fn invariant_failures(rows: &[SweepRow]) -> Vec<String> {
    let mut failures = Vec::new();
    for r in rows {
        if r.lhs14 < r.rhs_full {
            failures.push(format!("phi={}: lhs14={} < 2", r.phi, r.lhs14));
        }
        if r.lhs15 >= r.rhs_full {
            failures.push(format!("phi={}: lhs15={} >= 2", r.phi, r.lhs15));
        }
        if r.lhs16 < r.rhs_half {
            failures.push(format!("phi={}: lhs16={} < 1", r.phi, r.lhs16));
        }
        if r.lhs13 >= r.rhs_half {
            failures.push(format!("phi={}: lhs13={} >= 1", r.phi, r.lhs13));
        }
        if r.lhs14 < r.lhs15 {
            failures.push(format!("phi={}: lhs14 < lhs15", r.phi));
        }
    }
    failures
}

/// Formats a double with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: io::Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let fields: Vec<String> = row.to_record().iter().map(|&v| fmt17(v)).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<(), SpinError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRow>, SpinError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_csv(&text, path)
}

fn parse_csv(text: &str, path: &Path) -> Result<Vec<SweepRow>, SpinError> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != CSV_HEADER {
        return Err(SpinError::Header {
            path: path.to_path_buf(),
            found: header.to_string(),
            expected: CSV_HEADER.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row_err = |message: String| SpinError::Row {
            path: path.to_path_buf(),
            line: index as u64 + 1,
            message,
        };
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|e| row_err(format!("`{f}`: {e}"))))
            .collect::<Result<_, _>>()?;
        let record: [f64; 11] = values
            .try_into()
            .map_err(|v: Vec<f64>| row_err(format!("expected 11 fields, found {}", v.len())))?;
        rows.push(SweepRow::from_record(record));
    }
    Ok(rows)
}

/// Path of `target` relative to directory `base`; both are made absolute
/// against the working directory first.
fn relative_path(base: &Path, target: &Path) -> PathBuf {
    let absolute = |p: &Path| {
        let joined = if p.is_absolute() {
            p.to_path_buf()
        } else {
            std::env::current_dir().unwrap_or_default().join(p)
        };
        let mut out = PathBuf::new();
        for c in joined.components() {
            match c {
                Component::CurDir => {}
                Component::ParentDir => {
                    out.pop();
                }
                other => out.push(other),
            }
        }
        out
    };
    let (base, target) = (absolute(base), absolute(target));
    let b: Vec<_> = base.components().collect();
    let t: Vec<_> = target.components().collect();
    let common = b.iter().zip(&t).take_while(|(x, y)| x == y).count();
    let mut rel = PathBuf::new();
    for _ in common..b.len() {
        rel.push("..");
    }
    for c in &t[common..] {
        rel.push(c);
    }
    rel
}

/// Gnuplot script drawing both figures from the sweep CSV. The CSV is
/// referenced relative to the script's own directory.
pub fn plot_script(rows: &[SweepRow], csv_relative: &str) -> String {
    let phi_max = rows.last().map(|r| r.phi).unwrap_or(FRAC_PI_2);
    let ratio_max = rows.iter().map(|r| r.ratio16.max(r.ratio14)).fold(1.0, f64::max);
    format!(
        r#"# gnuplot script; run from this directory: gnuplot {script}
set datafile separator ","
set key top left
set xlabel "detuning angle phi [rad]"
set xrange [0:{phi_max}]
set terminal pngcairo size 900,600
data = "{csv}"

set output "fig1.png"
set ylabel "left-hand side"
set yrange [0:*]
plot data using 1:6 skip 1 with lines lw 2 lc rgb "red" title "(eps+sigmaA)(eta+sigmaB)", \
     data using 1:7 skip 1 with lines lw 2 lc rgb "blue" title "sqrt((eps^2+sigmaA^2)(eta^2+sigmaB^2))", \
     2 with lines dt 2 lc rgb "black" title "lower bound |<[A,B]>| = 2"

set output "fig2.png"
set ylabel "left-hand side / lower bound"
set yrange [0:{ymax}]
plot data using 1:10 skip 1 with lines lw 2 lc rgb "red" title "(eps+sigmaA)(eta+sigmaB) / 2", \
     data using 1:11 skip 1 with lines lw 2 lc rgb "dark-green" title "(eps eta + sigmaA eta + eps sigmaB) / 1", \
     1 with lines dt 2 lc rgb "black" title "normalized bound"
"#,
        script = "<this file>",
        phi_max = fmt17(phi_max),
        csv = csv_relative,
        ymax = (ratio_max * 1.1).ceil(),
    )
}

pub fn emit_plot_script(rows: &[SweepRow], path: &Path, csv_path: &Path) -> Result<(), SpinError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let rel = relative_path(&dir, csv_path);
    let rel = rel.to_string_lossy().replace('\\', "/");
    fs::write(path, plot_script(rows, &rel)).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantityId {
    #[serde(rename = "eps")]
    Eps,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "lhs14")]
    Lhs14,
    #[serde(rename = "lhs15")]
    Lhs15,
    #[serde(rename = "lhs16_ratio")]
    Lhs16Ratio,
    #[serde(rename = "lhs14_ratio")]
    Lhs14Ratio,
}

impl QuantityId {
    pub const ALL: [QuantityId; 6] = [
        QuantityId::Eps,
        QuantityId::Eta,
        QuantityId::Lhs14,
        QuantityId::Lhs15,
        QuantityId::Lhs16Ratio,
        QuantityId::Lhs14Ratio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuantityId::Eps => "eps",
            QuantityId::Eta => "eta",
            QuantityId::Lhs14 => "lhs14",
            QuantityId::Lhs15 => "lhs15",
            QuantityId::Lhs16Ratio => "lhs16_ratio",
            QuantityId::Lhs14Ratio => "lhs14_ratio",
        }
    }
}

impl fmt::Display for QuantityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuantityId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        QuantityId::ALL
            .into_iter()
            .find(|q| q.as_str() == s.trim())
            .ok_or_else(|| format!("unknown quantity_id `{s}`"))
    }
}

/// An externally supplied value to compare against the analytic curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub phi: f64,
    pub quantity: QuantityId,
    pub value: f64,
    pub uncertainty: Option<f64>,
}

/// Parses a `phi,quantity_id,value,uncertainty` file. Lines starting with
/// `#` are comments; an empty file yields no points.
pub fn ingest(path: &Path) -> Result<Vec<DataPoint>, SpinError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_points(&bytes, path)
}

fn parse_points(bytes: &[u8], path: &Path) -> Result<Vec<DataPoint>, SpinError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| SpinError::Row {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line()).unwrap_or(1),
            message: e.to_string(),
        })?,
    };
    let fields: Vec<&str> = header.iter().collect();
    let header_ok = fields.len() >= 3 && fields.len() <= 4 && fields.iter().zip(DATA_HEADER).all(|(a, b)| *a == b);
    if !header_ok {
        return Err(SpinError::Header {
            path: path.to_path_buf(),
            found: fields.join(","),
            expected: DATA_HEADER.join(","),
        });
    }
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for record in records {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                errors.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_point(&record) {
            Ok(p) => points.push(p),
            Err(message) => errors.push(format!("line {line}: {message}")),
        }
    }
    if errors.is_empty() {
        Ok(points)
    } else {
        Err(SpinError::Rows {
            path: path.to_path_buf(),
            errors,
        })
    }
}

fn parse_point(record: &csv::StringRecord) -> Result<DataPoint, String> {
    if record.len() < 3 || record.len() > 4 {
        return Err(format!("expected 3 or 4 fields, found {}", record.len()));
    }
    let num = |i: usize, name: &str| {
        record[i]
            .parse::<f64>()
            .map_err(|e| format!("{name} `{}`: {e}", &record[i]))
    };
    let phi = num(0, "phi")?;
    check_domain(phi).map_err(|e| e.to_string())?;
    let quantity = record[1].parse::<QuantityId>()?;
    let value = num(2, "value")?;
    let uncertainty = match record.get(3) {
        Some(s) if !s.is_empty() => Some(num(3, "uncertainty")?),
        _ => None,
    };
    Ok(DataPoint {
        phi,
        quantity,
        value,
        uncertainty,
    })
}

pub fn write_points<W: io::Write>(points: &[DataPoint], mut out: W, comment: Option<&str>) -> io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "{}", DATA_HEADER.join(","))?;
    for p in points {
        let unc = p.uncertainty.map(fmt17).unwrap_or_default();
        writeln!(out, "{},{},{},{}", fmt17(p.phi), p.quantity, fmt17(p.value), unc)?;
    }
    Ok(())
}

/// Analytic values of every quantity at `angles`, for self-checks of the
/// overlay pipeline.
pub fn synthetic_points(angles: &[f64]) -> Result<Vec<DataPoint>, SpinError> {
    let mut points = Vec::new();
    for &phi in angles {
        let row = SweepRow::analytic(phi)?;
        for quantity in QuantityId::ALL {
            points.push(DataPoint {
                phi,
                quantity,
                value: row.value(quantity),
                uncertainty: None,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayEntry {
    pub point: DataPoint,
    pub nearest_phi: f64,
    pub curve_value: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Overlay {
    pub entries: Vec<OverlayEntry>,
    pub max_abs_residual: Option<f64>,
    pub mean_abs_residual: Option<f64>,
}

/// Residual of each point against the sweep row nearest in φ.
pub fn overlay(rows: &[SweepRow], points: &[DataPoint]) -> Overlay {
    if rows.is_empty() {
        return Overlay::default();
    }
    let entries: Vec<OverlayEntry> = points
        .iter()
        .map(|&point| {
            let row = rows
                .iter()
                .min_by(|a, b| (a.phi - point.phi).abs().total_cmp(&(b.phi - point.phi).abs()))
                .expect("rows not empty");
            let curve_value = row.value(point.quantity);
            OverlayEntry {
                point,
                nearest_phi: row.phi,
                curve_value,
                residual: point.value - curve_value,
            }
        })
        .collect();
    let abs: Vec<f64> = entries.iter().map(|e| e.residual.abs()).collect();
    Overlay {
        max_abs_residual: abs.iter().copied().reduce(f64::max),
        mean_abs_residual: (!abs.is_empty()).then(|| abs.iter().sum::<f64>() / abs.len() as f64),
        entries,
    }
}
