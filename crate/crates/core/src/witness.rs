//! Randomized search for violations of uncertainty relations.
//!
//! Trial `t` draws its model from [`trial_rng`]`(seed, t)`, so results do not
//! depend on evaluation order or thread count. Injected candidates take trial
//! indices `0..k` and random trials follow. Violations are refined by greedy
//! random perturbation of `ψ` and `U`, accepting only moves that increase the
//! margin.

use std::fs;
use std::io;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::measurement::{IndirectModel, JointModel, MeasurementError, Outcome, ProjectiveModel};
use crate::model_file::{Model, ModelDocument, ModelFileError};
use crate::operator::{Operator, SpaceLayout, StateVector};
use crate::random::{
    haar_unitary, hermitize, perturb_state, perturb_unitary, random_commuting_pair, random_hermitian, random_spectrum,
    random_state, trial_rng,
};
use crate::relations::{eval, joint_quantities, quantities, RelationError, RelationId, RelationReport};
use crate::spin::SpinScenario;

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 8;
pub const DEFAULT_PERTURBATION: f64 = 0.05;
/// Stored and recomputed reports must agree to this absolute tolerance.
pub const VERIFY_TOL: f64 = 1e-12;
/// Offsets the refinement streams from the sampling streams.
const REFINE_SALT: u64 = 0x5eed_0f4e_f1e5;

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("{name} range {lo}..={hi} must lie within [{MIN_DIM}, {MAX_DIM}] and be nonempty")]
    Dims { name: &'static str, lo: usize, hi: usize },
    #[error("perturbation scale {0} must be positive and finite")]
    Perturbation(f64),
    #[error("{0} is not searchable over measurement models")]
    Unsearchable(RelationId),
    #[error("injected candidate {index} does not fit target {target}")]
    Injected { index: usize, target: RelationId },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
    #[error(transparent)]
    File(#[from] ModelFileError),
    #[error("witness block: {0}")]
    Block(String),
    #[error("stored {field} = {stored} but re-evaluation gives {recomputed}")]
    Mismatch {
        field: &'static str,
        stored: f64,
        recomputed: f64,
    },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// A model and the system state it is evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub enum Candidate {
    Indirect { model: IndirectModel, state: StateVector },
    Joint { model: JointModel, state: StateVector },
}

impl Candidate {
    pub fn state(&self) -> &StateVector {
        match self {
            Candidate::Indirect { state, .. } | Candidate::Joint { state, .. } => state,
        }
    }

    pub fn evaluate(&self, target: RelationId) -> Result<RelationReport, WitnessError> {
        let q = match self {
            Candidate::Indirect { model, state } => quantities(model, state),
            Candidate::Joint { model, state } => joint_quantities(model, state)?,
        };
        Ok(eval(target, &q)?)
    }

    fn with_parts(&self, unitary: Operator, state: StateVector) -> Result<Self, MeasurementError> {
        Ok(match self {
            Candidate::Indirect { model, .. } => Candidate::Indirect {
                model: model.with_unitary(unitary)?,
                state,
            },
            Candidate::Joint { model, .. } => Candidate::Joint {
                model: model.with_unitary(unitary)?,
                state,
            },
        })
    }

    fn unitary(&self) -> &Operator {
        match self {
            Candidate::Indirect { model, .. } => model.unitary(),
            Candidate::Joint { model, .. } => model.unitary(),
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        match self {
            Candidate::Indirect { model, state } => ModelDocument::new(Model::Indirect(model.clone()), vec![state.clone()]),
            Candidate::Joint { model, state } => ModelDocument::new(Model::Joint(model.clone()), vec![state.clone()]),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self, WitnessError> {
        let state = doc
            .states
            .first()
            .cloned()
            .ok_or_else(|| WitnessError::Block("model file carries no state".into()))?;
        match &doc.model {
            Model::Indirect(model) => Ok(Candidate::Indirect {
                model: model.clone(),
                state,
            }),
            Model::Joint(model) => Ok(Candidate::Joint {
                model: model.clone(),
                state,
            }),
            Model::Projective(p) => Ok(Candidate::Indirect {
                model: p.dilate().or_else(|_| p.dilate_cyclic())?,
                state,
            }),
        }
    }

    /// The qubit spin model at detuning `phi` on `|+z⟩`.
    pub fn spin(phi: f64) -> Self {
        let s = SpinScenario::new(phi).expect("angle within [0, π/2]");
        Candidate::Indirect {
            model: s.dilated_model(),
            state: s.state(),
        }
    }

    /// Sequential σ_x-then-σ_y joint model on `|+z⟩`.
    pub fn sequential_spin() -> Self {
        Candidate::Joint {
            model: JointModel::sequential_xy(),
            state: StateVector::basis(2, 0),
        }
    }

    fn fits(&self, target: RelationId) -> bool {
        match self {
            Candidate::Indirect { .. } => !target.needs_joint_model(),
            Candidate::Joint { .. } => RelationId::JOINT.contains(&target),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub target: RelationId,
    pub trials: u64,
    pub seed: u64,
    pub dim_system: RangeInclusive<usize>,
    pub dim_apparatus: RangeInclusive<usize>,
    pub refine_steps: usize,
    pub perturbation_scale: f64,
    pub injected: Vec<Candidate>,
}

impl SearchConfig {
    pub fn new(target: RelationId, trials: u64, seed: u64) -> Self {
        Self {
            target,
            trials,
            seed,
            dim_system: 2..=4,
            dim_apparatus: 2..=4,
            refine_steps: 0,
            perturbation_scale: DEFAULT_PERTURBATION,
            injected: Vec::new(),
        }
    }

    /// Injects the spin witness matching the target: the φ = 0 dilation for
    /// single-meter relations, the sequential joint model otherwise.
    pub fn with_spin_injection(mut self) -> Self {
        let candidate = if self.target.needs_joint_model() {
            Candidate::sequential_spin()
        } else {
            Candidate::spin(0.0)
        };
        self.injected.insert(0, candidate);
        self
    }

    pub fn validate(&self) -> Result<(), WitnessError> {
        if self.trials == 0 {
            return Err(WitnessError::NoTrials);
        }
        for (name, r) in [("dimS", &self.dim_system), ("dimA", &self.dim_apparatus)] {
            let (lo, hi) = (*r.start(), *r.end());
            if lo < MIN_DIM || hi > MAX_DIM || lo > hi {
                return Err(WitnessError::Dims { name, lo, hi });
            }
        }
        if !(self.perturbation_scale.is_finite() && self.perturbation_scale > 0.0) {
            return Err(WitnessError::Perturbation(self.perturbation_scale));
        }
        if self.target == RelationId::KR36 {
            return Err(WitnessError::Unsearchable(self.target));
        }
        for (index, c) in self.injected.iter().enumerate() {
            if !c.fits(self.target) {
                return Err(WitnessError::Injected {
                    index,
                    target: self.target,
                });
            }
        }
        Ok(())
    }

    /// Candidate of trial `t`.
    pub fn candidate(&self, trial: u64) -> Candidate {
        if let Some(c) = self.injected.get(trial as usize) {
            return c.clone();
        }
        let mut rng = trial_rng(self.seed, trial);
        let dim_s = rng.random_range(self.dim_system.clone());
        let dim_a = rng.random_range(self.dim_apparatus.clone());
        if self.target.needs_joint_model() {
            random_joint_candidate(&mut rng, dim_s, dim_a)
        } else {
            random_candidate(&mut rng, dim_s, dim_a)
        }
    }
}

/// Haar-random `U`, random `ξ`, and random unit-spectral-radius `M`, `A`, `B`.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, dim_a: usize) -> IndirectModel {
    let layout = SpaceLayout::new(dim_s, dim_a).expect("dimensions ≥ 2");
    let unitary = haar_unitary(rng, layout.composite());
    let xi = random_state(rng, dim_a);
    let meter = random_hermitian(rng, dim_a);
    let a = random_hermitian(rng, dim_s);
    let b = random_hermitian(rng, dim_s);
    IndirectModel::new(layout, unitary, xi, meter, a, b).expect("random model is valid")
}

/// Like [`random_model`] with two commuting meters sharing an eigenbasis.
pub fn random_joint_model<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, dim_a: usize) -> JointModel {
    let layout = SpaceLayout::new(dim_s, dim_a).expect("dimensions ≥ 2");
    let unitary = haar_unitary(rng, layout.composite());
    let xi = random_state(rng, dim_a);
    let (m, n) = random_commuting_pair(rng, dim_a);
    let a = random_hermitian(rng, dim_s);
    let b = random_hermitian(rng, dim_s);
    JointModel::new(layout, unitary, xi, m, n, a, b).expect("random joint model is valid")
}

/// Cyclic dilation of the spectral measurement of a random `A = V Λ V†`.
/// The measurement is precise and unbiased on every state. With
/// `commuting`, `B` shares the eigenbasis of `A` and the disturbance is
/// unbiased too; otherwise `B` is an independent random observable.
pub fn random_spectral_dilation<R: Rng + ?Sized>(rng: &mut R, dim: usize, commuting: bool) -> IndirectModel {
    loop {
        let basis = haar_unitary(rng, dim);
        let values = random_spectrum(rng, dim);
        let a = hermitize(Operator::from_spectrum(&basis, &values));
        let b = if commuting {
            hermitize(Operator::from_spectrum(&basis, &random_spectrum(rng, dim)))
        } else {
            random_hermitian(rng, dim)
        };
        let outcomes = values
            .iter()
            .enumerate()
            .map(|(k, &value)| {
                let mut weights = vec![0.0; dim];
                weights[k] = 1.0;
                Outcome {
                    value,
                    projector: hermitize(Operator::from_spectrum(&basis, &weights)),
                }
            })
            .collect();
        // coincident eigenvalues are rejected as duplicate outcomes; redraw
        if let Ok(model) = ProjectiveModel::new(outcomes, a, b).and_then(|p| p.dilate_cyclic()) {
            return model;
        }
    }
}

pub fn random_candidate<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, dim_a: usize) -> Candidate {
    let model = random_model(rng, dim_s, dim_a);
    let state = random_state(rng, dim_s);
    Candidate::Indirect { model, state }
}

pub fn random_joint_candidate<R: Rng + ?Sized>(rng: &mut R, dim_s: usize, dim_a: usize) -> Candidate {
    let model = random_joint_model(rng, dim_s, dim_a);
    let state = random_state(rng, dim_s);
    Candidate::Joint { model, state }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub trial: u64,
    pub candidate: Candidate,
    pub report: RelationReport,
    /// `−slack`; positive iff the relation is violated.
    pub margin: f64,
    pub accepted_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub target: RelationId,
    pub evaluated: u64,
    /// Violations sorted by margin (descending), ties by trial.
    pub witnesses: Vec<Witness>,
    /// The candidate with the largest margin, violated or not.
    pub closest: Option<Witness>,
}

fn rank(a: &Witness, b: &Witness) -> std::cmp::Ordering {
    b.margin.total_cmp(&a.margin).then(a.trial.cmp(&b.trial))
}

/// Greedy hill climb on the margin; the margin never decreases.
pub fn refine(config: &SearchConfig, witness: Witness) -> Result<Witness, WitnessError> {
    let mut rng = trial_rng(config.seed ^ REFINE_SALT, witness.trial);
    let mut best = witness;
    for _ in 0..config.refine_steps {
        let scale = config.perturbation_scale;
        let state = perturb_state(&mut rng, best.candidate.state(), scale);
        let unitary = perturb_unitary(&mut rng, best.candidate.unitary(), scale);
        let Ok(candidate) = best.candidate.with_parts(unitary, state) else {
            continue;
        };
        let Ok(report) = candidate.evaluate(config.target) else {
            continue;
        };
        if report.margin() > best.margin {
            best = Witness {
                margin: report.margin(),
                trial: best.trial,
                candidate,
                report,
                accepted_steps: best.accepted_steps + 1,
            };
        }
    }
    Ok(best)
}

pub fn search(config: &SearchConfig) -> Result<SearchOutcome, WitnessError> {
    config.validate()?;
    let reports: Vec<(u64, RelationReport)> = (0..config.trials)
        .into_par_iter()
        .map(|t| config.candidate(t).evaluate(config.target).map(|r| (t, r)))
        .collect::<Result<_, _>>()?;

    let realize = |trial: u64, report: &RelationReport| Witness {
        trial,
        candidate: config.candidate(trial),
        margin: report.margin(),
        report: report.clone(),
        accepted_steps: 0,
    };
    let closest_index = reports
        .iter()
        .enumerate()
        .max_by(|(_, (ta, a)), (_, (tb, b))| a.margin().total_cmp(&b.margin()).then(tb.cmp(ta)))
        .map(|(i, _)| i);
    let violations: Vec<Witness> = reports
        .iter()
        .filter(|(_, r)| !r.satisfied)
        .map(|(t, r)| realize(*t, r))
        .collect();

    let mut witnesses: Vec<Witness> = violations
        .into_par_iter()
        .map(|w| refine(config, w))
        .collect::<Result<_, _>>()?;
    witnesses.sort_by(rank);

    let closest = match closest_index {
        None => None,
        Some(i) => {
            let (t, r) = &reports[i];
            match witnesses.iter().find(|w| w.trial == *t) {
                Some(w) => Some(w.clone()),
                None => Some(refine(config, realize(*t, r))?),
            }
        }
    };
    let closest = match (closest, witnesses.first()) {
        (Some(c), Some(top)) if top.margin > c.margin => Some(top.clone()),
        (c, _) => c,
    };
    Ok(SearchOutcome {
        target: config.target,
        evaluated: config.trials,
        witnesses,
        closest,
    })
}

impl Witness {
    /// Model file with the state and a `witness` block holding the report.
    pub fn to_document(&self, seed: u64) -> ModelDocument {
        let mut doc = self.candidate.to_document();
        doc.extra.insert(
            "witness".into(),
            json!({
                "target": self.report.relation.as_str(),
                "seed": seed,
                "trial": self.trial,
                "margin": self.margin,
                "accepted_steps": self.accepted_steps,
                "report": serde_json::to_value(&self.report).expect("reports serialize"),
            }),
        );
        doc
    }
}

/// Re-evaluates the serialized model and compares with the stored report.
pub fn verify_witness(doc: &ModelDocument) -> Result<RelationReport, WitnessError> {
    let block = doc
        .extra
        .get("witness")
        .ok_or_else(|| WitnessError::Block("missing `witness` block".into()))?;
    let stored: RelationReport = serde_json::from_value(
        block
            .get("report")
            .cloned()
            .ok_or_else(|| WitnessError::Block("missing `report`".into()))?,
    )
    .map_err(|e| WitnessError::Block(format!("report: {e}")))?;
    let candidate = Candidate::from_document(doc)?;
    let recomputed = candidate.evaluate(stored.relation)?;
    for (field, a, b) in [
        ("lhs", stored.lhs, recomputed.lhs),
        ("rhs", stored.rhs, recomputed.rhs),
        ("slack", stored.slack, recomputed.slack),
    ] {
        if !((a - b).abs() <= VERIFY_TOL) {
            return Err(WitnessError::Mismatch {
                field,
                stored: a,
                recomputed: b,
            });
        }
    }
    if let Some(margin) = block.get("margin").and_then(Value::as_f64) {
        if !((margin - recomputed.margin()).abs() <= VERIFY_TOL) {
            return Err(WitnessError::Mismatch {
                field: "margin",
                stored: margin,
                recomputed: recomputed.margin(),
            });
        }
    }
    Ok(recomputed)
}

pub const SUMMARY_HEADER: &str = "kind,rank,trial,relation,lhs,rhs,slack,margin,file";

fn summary_line(kind: &str, rank: usize, w: &Witness, file: &str) -> String {
    format!(
        "{kind},{rank},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{file}",
        w.trial, w.report.relation, w.report.lhs, w.report.rhs, w.report.slack, w.margin
    )
}

/// Writes `witness_NNNN.json` per witness, `closest.json`, and
/// `summary.csv` into `dir`.
pub fn write_outcome(outcome: &SearchOutcome, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, WitnessError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| WitnessError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let mut summary = vec![SUMMARY_HEADER.to_string()];
    for (i, w) in outcome.witnesses.iter().enumerate() {
        let name = format!("witness_{:04}.json", i);
        let path = dir.join(&name);
        w.to_document(seed).save(&path)?;
        summary.push(summary_line("witness", i, w, &name));
        written.push(path);
    }
    if let Some(c) = &outcome.closest {
        let path = dir.join("closest.json");
        c.to_document(seed).save(&path)?;
        summary.push(summary_line("closest", 0, c, "closest.json"));
        written.push(path);
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary.join("\n") + "\n").map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_file::{matrix_to_value, parse_document};

    #[test]
    fn random_model_is_deterministic() {
        let a = random_model(&mut trial_rng(42, 3), 3, 2);
        let b = random_model(&mut trial_rng(42, 3), 3, 2);
        assert_eq!(a, b);
        assert!(a.unitary().unitarity_defect() <= 1e-10);
        let doc_a = ModelDocument::new(Model::Indirect(a), vec![]).to_json();
        let doc_b = ModelDocument::new(Model::Indirect(b), vec![]).to_json();
        assert_eq!(doc_a, doc_b);
    }

    #[test]
    fn injected_spin_witnesses() {
        let hedr = search(&SearchConfig::new(RelationId::HEDR13, 50, 42).with_spin_injection()).unwrap();
        let top = &hedr.witnesses[0];
        assert_eq!(top.trial, 0);
        assert!((top.margin - 1.0).abs() < 1e-12);
        assert!(top.report.lhs.abs() < 1e-12 && (top.report.rhs - 1.0).abs() < 1e-12);

        let mak = search(&SearchConfig::new(RelationId::MAK9, 50, 42).with_spin_injection()).unwrap();
        let spin = mak.witnesses.iter().find(|w| w.trial == 0).unwrap();
        assert!((spin.margin - (2.0 - 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn universal_target_has_no_witnesses() {
        let out = search(&SearchConfig::new(RelationId::UVH1, 300, 7)).unwrap();
        assert!(out.witnesses.is_empty());
        let closest = out.closest.unwrap();
        assert!(closest.margin <= 0.0);
    }

    #[test]
    fn joint_target_uses_joint_models() {
        let config = SearchConfig::new(RelationId::AK34, 20, 1).with_spin_injection();
        assert!(matches!(config.candidate(0), Candidate::Joint { .. }));
        assert!(matches!(config.candidate(5), Candidate::Joint { .. }));
        let out = search(&config).unwrap();
        let spin = out.witnesses.iter().find(|w| w.trial == 0).unwrap();
        assert!((spin.report.lhs - 3f64.sqrt()).abs() < 1e-12);
        assert!(SearchConfig {
            injected: vec![Candidate::spin(0.0)],
            ..SearchConfig::new(RelationId::AK34, 5, 1)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn refinement_is_monotone_and_deterministic() {
        let mut config = SearchConfig::new(RelationId::MAK9, 40, 3).with_spin_injection();
        config.refine_steps = 30;
        let a = search(&config).unwrap();
        let b = search(&config).unwrap();
        assert_eq!(a, b);
        let spin = a.witnesses.iter().find(|w| w.trial == 0).unwrap();
        assert!(spin.margin >= 2.0 - 3f64.sqrt() - 1e-15);
        for pair in a.witnesses.windows(2) {
            assert!(pair[0].margin >= pair[1].margin);
        }
    }

    #[test]
    fn spectral_dilations_are_precise_and_unbiased() {
        let mut rng = trial_rng(4, 0);
        for dim in 2..=4 {
            let m = random_spectral_dilation(&mut rng, dim, true);
            assert!(m.is_unbiased_measurement() && m.is_unbiased_disturbance());
            let psi = random_state(&mut rng, dim);
            assert!(m.is_precise(&psi));
            let free = random_spectral_dilation(&mut rng, dim, false);
            assert!(free.is_unbiased_measurement() && !free.is_unbiased_disturbance());
        }
    }

    #[test]
    fn config_validation() {
        let base = SearchConfig::new(RelationId::MAK9, 1, 0);
        assert!(base.validate().is_ok());
        assert!(SearchConfig { trials: 0, ..base.clone() }.validate().is_err());
        assert!(SearchConfig { dim_system: 1..=3, ..base.clone() }.validate().is_err());
        assert!(SearchConfig { dim_apparatus: 2..=9, ..base.clone() }.validate().is_err());
        assert!(SearchConfig { perturbation_scale: 0.0, ..base.clone() }.validate().is_err());
        assert!(SearchConfig { target: RelationId::KR36, ..base }.validate().is_err());
    }

    #[test]
    fn witness_round_trip_and_tamper() {
        let out = search(&SearchConfig::new(RelationId::HEDR13, 5, 42).with_spin_injection()).unwrap();
        let doc = out.witnesses[0].to_document(42);
        let back = parse_document(&doc.to_json()).unwrap();
        let report = verify_witness(&back).unwrap();
        assert!((report.margin() - 1.0).abs() < 1e-12);

        let mut value = back.to_value();
        let mut tampered = Operator::pauli_z();
        tampered[(0, 0)] = crate::operator::C64::new(0.5, 0.0);
        tampered[(1, 1)] = crate::operator::C64::new(-0.5, 0.0);
        value["B"] = matrix_to_value(&tampered);
        let tampered_doc = crate::model_file::from_value(&value).unwrap();
        assert!(matches!(verify_witness(&tampered_doc), Err(WitnessError::Mismatch { .. })));
    }

    #[test]
    fn writes_witness_directory() {
        let dir = tempfile::tempdir().unwrap();
        let out = search(&SearchConfig::new(RelationId::HEDR13, 5, 42).with_spin_injection()).unwrap();
        let files = write_outcome(&out, 42, dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("summary.csv")));
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with(SUMMARY_HEADER));
        let doc = crate::model_file::load(&dir.path().join("witness_0000.json")).unwrap();
        assert!(verify_witness(&doc).is_ok());
    }
}
