//! Evaluation of the uncertainty relations.
//!
//! [`quantities`] gathers every deviation, error and commutator magnitude a
//! relation can need for one (model, state) pair; [`eval`] turns a
//! [`QuantitySet`] into a [`RelationReport`] for one [`RelationId`].
//! Relations that only need the scalar quantities (ε, η, σ, |⟨[A,B]⟩|) can be
//! evaluated from a partially filled set, which is how the closed-form spin
//! curves reuse the same code path.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measurement::{IndirectModel, JointModel, MeasurementError};
use crate::operator::{commutator, expectation, residual_norm, std_dev, Operator, StateVector};

/// A relation counts as satisfied when `lhs − rhs ≥ −VIOLATION_TOL`.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Right-hand sides at or below this are degenerate and carry no normalized slack.
pub const DEGENERATE_RHS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationId {
    /// Robertson: `σ(A)σ(B) ≥ ½|⟨[A,B]⟩|`.
    R8,
    /// Robertson for the error and disturbance operators.
    R20,
    /// `εη ≥ ½|⟨[M^out−A, B^out−B]⟩|`.
    R21,
    /// Ozawa's universal error-disturbance relation.
    OZ16,
    /// `ε̄η̄ ≥ |⟨[A,B]⟩|`.
    UVH1,
    /// Modified Arthurs-Kelly, evaluated through ε, η, σ.
    MAK9,
    /// `εη ≥ ½|⟨[A,B]⟩|`.
    HEDR13,
    /// `{σ(M^out−A)+σ(M^out)}{σ(B^out−B)+σ(B^out)} ≥ ½|⟨[A,B]⟩|`.
    HT30,
    /// Arthurs-Kelly with joint meters.
    AK34,
    /// Universal joint-meter relation.
    UAK35,
    /// Three-commutator triangle decomposition (assumes `[M^out, B^out] = 0`).
    TRI25,
    /// Four-commutator triangle decomposition.
    TRI29,
    /// `ε̄η̄ ≥ σ(M^out)σ(B^out)`.
    CHAIN12,
    /// Kennard-Robertson on a periodic box.
    KR36,
}

impl RelationId {
    pub const ALL: [RelationId; 14] = [
        RelationId::R8,
        RelationId::R20,
        RelationId::R21,
        RelationId::OZ16,
        RelationId::UVH1,
        RelationId::MAK9,
        RelationId::HEDR13,
        RelationId::HT30,
        RelationId::AK34,
        RelationId::UAK35,
        RelationId::TRI25,
        RelationId::TRI29,
        RelationId::CHAIN12,
        RelationId::KR36,
    ];

    /// Relations evaluated on an indirect (single-meter) model.
    pub const INDIRECT: [RelationId; 11] = [
        RelationId::R8,
        RelationId::R20,
        RelationId::R21,
        RelationId::OZ16,
        RelationId::UVH1,
        RelationId::MAK9,
        RelationId::HEDR13,
        RelationId::HT30,
        RelationId::TRI25,
        RelationId::TRI29,
        RelationId::CHAIN12,
    ];

    /// Relations evaluated on a joint model.
    pub const JOINT: [RelationId; 3] = [RelationId::R8, RelationId::AK34, RelationId::UAK35];

    /// Whether the relation is a theorem (a violation means a bug) rather
    /// than a conjecture that concrete models may violate.
    pub fn is_universal(self) -> bool {
        !matches!(self, RelationId::MAK9 | RelationId::HEDR13 | RelationId::AK34)
    }

    pub fn needs_joint_model(self) -> bool {
        matches!(self, RelationId::AK34 | RelationId::UAK35)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationId::R8 => "R8",
            RelationId::R20 => "R20",
            RelationId::R21 => "R21",
            RelationId::OZ16 => "OZ16",
            RelationId::UVH1 => "UVH1",
            RelationId::MAK9 => "MAK9",
            RelationId::HEDR13 => "HEDR13",
            RelationId::HT30 => "HT30",
            RelationId::AK34 => "AK34",
            RelationId::UAK35 => "UAK35",
            RelationId::TRI25 => "TRI25",
            RelationId::TRI29 => "TRI29",
            RelationId::CHAIN12 => "CHAIN12",
            RelationId::KR36 => "KR36",
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown relation id `{0}`")]
pub struct UnknownRelation(pub String);

impl FromStr for RelationId {
    type Err = UnknownRelation;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelationError {
    #[error("quantity `{0}` is required but was not computed")]
    MissingQuantity(&'static str),
    #[error("relation {0} is not evaluated from a quantity set")]
    NotApplicable(RelationId),
    #[error(transparent)]
    Measurement(#[from] MeasurementError),
}

/// One evaluated inequality `lhs ≥ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: RelationId,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// `(lhs − rhs)/rhs`; absent when the right-hand side is degenerate.
    pub normalized_slack: Option<f64>,
    pub satisfied: bool,
    pub degenerate: bool,
    /// Weaker lower bound for the triangle decompositions; `rhs` holds the
    /// stronger (middle) line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom_line: Option<f64>,
    /// Set when a premise of the relation failed on the evaluated state.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub assumption_violated: bool,
}

impl RelationReport {
    pub fn new(relation: RelationId, lhs: f64, rhs: f64) -> Self {
        Self::with_tolerance(relation, lhs, rhs, VIOLATION_TOL)
    }

    pub fn with_tolerance(relation: RelationId, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = lhs - rhs;
        let degenerate = rhs <= DEGENERATE_RHS;
        Self {
            relation,
            lhs,
            rhs,
            slack,
            normalized_slack: (!degenerate).then(|| slack / rhs),
            satisfied: slack >= -tolerance,
            degenerate,
            bottom_line: None,
            assumption_violated: false,
        }
    }

    fn with_bottom_line(mut self, bottom: f64) -> Self {
        self.bottom_line = Some(bottom);
        self.satisfied = self.satisfied && self.lhs - bottom >= -VIOLATION_TOL;
        self
    }

    /// `lhs/rhs`, the lower-bound-normalized value.
    pub fn ratio(&self) -> Option<f64> {
        self.normalized_slack.map(|s| s + 1.0)
    }

    /// Amount by which the relation is violated; positive iff violated.
    pub fn margin(&self) -> f64 {
        -self.slack
    }
}

/// Quantities entering the relations, all measured on `ψ⊗ξ`.
///
/// Commutator fields hold magnitudes `|⟨[X, Y]⟩|`, with `M` for `M^out`,
/// `B′` for `B^out`, and `A`, `B` lifted to the composite space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuantitySet {
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    pub sigma_a: Option<f64>,
    pub sigma_b: Option<f64>,
    pub sigma_mout: Option<f64>,
    pub sigma_bout: Option<f64>,
    pub sigma_mout_minus_a: Option<f64>,
    pub sigma_bout_minus_b: Option<f64>,
    pub comm_ab: Option<f64>,
    /// `|⟨[M−A, B′−B]⟩|`
    pub comm_error_disturbance: Option<f64>,
    /// `|⟨[A, B′−B]⟩|`
    pub comm_a_disturbance: Option<f64>,
    /// `|⟨[M−A, B]⟩|`
    pub comm_error_b: Option<f64>,
    /// `|⟨[M, B′−B]⟩|`
    pub comm_mout_disturbance: Option<f64>,
    /// `|⟨[M−A, B′]⟩|`
    pub comm_error_bout: Option<f64>,
    /// `|⟨[M, B′]⟩|`
    pub comm_mout_bout: Option<f64>,
    /// `|⟨[−A, B′−B] + [M−A, −B] − [−A, −B]⟩|`
    pub tri25_middle: Option<f64>,
    /// `|⟨−[M, B′] + [M, B′−B] + [M−A, B′] + [−A, −B]⟩|`
    pub tri29_middle: Option<f64>,
    /// Joint models: `⟨(N^out − B)²⟩^{1/2}`, the error of the second meter.
    pub eps_b: Option<f64>,
}

impl QuantitySet {
    /// Set with only the scalar quantities filled in.
    pub fn basic(eps: f64, eta: f64, sigma_a: f64, sigma_b: f64, comm_ab: f64) -> Self {
        Self {
            eps: Some(eps),
            eta: Some(eta),
            sigma_a: Some(sigma_a),
            sigma_b: Some(sigma_b),
            comm_ab: Some(comm_ab),
            ..Self::default()
        }
    }
}

fn need(value: Option<f64>, name: &'static str) -> Result<f64, RelationError> {
    value.ok_or(RelationError::MissingQuantity(name))
}

/// Computes every field of the [`QuantitySet`] for an indirect model.
pub fn quantities(model: &IndirectModel, psi: &StateVector) -> QuantitySet {
    let state = model.composite_state(psi);
    let m_out = model.meter_out();
    let b_out = model.conjugate_out();
    let a = model.observable_lifted();
    let b = model.conjugate_lifted();
    let err_op = &m_out - &a;
    let dist_op = &b_out - &b;
    let sd = |o: &Operator| std_dev(o, &state).expect("Hermitian by construction");
    let comm = |x: &Operator, y: &Operator| commutator(x, y).expect("same dimension");
    let mag = |c: &Operator| expectation(c, &state).expect("same dimension").norm();

    let neg_a = -&a;
    let neg_b = -&b;
    let tri25 = &(&comm(&neg_a, &dist_op) + &comm(&err_op, &neg_b)) - &comm(&neg_a, &neg_b);
    let tri29 = &(&(&comm(&m_out, &dist_op) - &comm(&m_out, &b_out)) + &comm(&err_op, &b_out)) + &comm(&neg_a, &neg_b);

    QuantitySet {
        eps: Some(residual_norm(&err_op, &state).expect("same dimension")),
        eta: Some(residual_norm(&dist_op, &state).expect("same dimension")),
        sigma_a: Some(std_dev(model.observable(), psi).expect("validated")),
        sigma_b: Some(std_dev(model.conjugate(), psi).expect("validated")),
        sigma_mout: Some(sd(&m_out)),
        sigma_bout: Some(sd(&b_out)),
        sigma_mout_minus_a: Some(sd(&err_op)),
        sigma_bout_minus_b: Some(sd(&dist_op)),
        comm_ab: Some(mag(&comm(&a, &b))),
        comm_error_disturbance: Some(mag(&comm(&err_op, &dist_op))),
        comm_a_disturbance: Some(mag(&comm(&a, &dist_op))),
        comm_error_b: Some(mag(&comm(&err_op, &b))),
        comm_mout_disturbance: Some(mag(&comm(&m_out, &dist_op))),
        comm_error_bout: Some(mag(&comm(&err_op, &b_out))),
        comm_mout_bout: Some(mag(&comm(&m_out, &b_out))),
        tri25_middle: Some(mag(&tri25)),
        tri29_middle: Some(mag(&tri29)),
        eps_b: None,
    }
}

/// Quantities for a joint model: `eps` is the error of `M^out` against `A`,
/// `eps_b` that of `N^out` against `B`.
pub fn joint_quantities(model: &JointModel, psi: &StateVector) -> Result<QuantitySet, RelationError> {
    let (m_out, n_out) = model.joint_outputs()?;
    let state = model.composite_state(psi);
    let id = Operator::identity(model.layout().dim_apparatus());
    let a = crate::operator::tensor(model.observable(), &id);
    let b = crate::operator::tensor(model.conjugate(), &id);
    let comm_ab = expectation(&commutator(&a, &b).expect("same dimension"), &state)
        .expect("same dimension")
        .norm();
    Ok(QuantitySet {
        eps: Some(residual_norm(&(&m_out - &a), &state).expect("same dimension")),
        eps_b: Some(residual_norm(&(&n_out - &b), &state).expect("same dimension")),
        sigma_a: Some(std_dev(model.observable(), psi).expect("validated")),
        sigma_b: Some(std_dev(model.conjugate(), psi).expect("validated")),
        sigma_mout: Some(std_dev(&m_out, &state).expect("Hermitian")),
        sigma_bout: Some(std_dev(&n_out, &state).expect("Hermitian")),
        comm_ab: Some(comm_ab),
        ..QuantitySet::default()
    })
}

/// Evaluates one relation on a quantity set.
pub fn eval(id: RelationId, q: &QuantitySet) -> Result<RelationReport, RelationError> {
    use RelationId::*;
    let report = match id {
        R8 => {
            let lhs = need(q.sigma_a, "sigma_a")? * need(q.sigma_b, "sigma_b")?;
            RelationReport::new(id, lhs, 0.5 * need(q.comm_ab, "comm_ab")?)
        }
        R20 => {
            let lhs = need(q.sigma_mout_minus_a, "sigma_mout_minus_a")? * need(q.sigma_bout_minus_b, "sigma_bout_minus_b")?;
            RelationReport::new(id, lhs, 0.5 * need(q.comm_error_disturbance, "comm_error_disturbance")?)
        }
        R21 => {
            let lhs = need(q.eps, "eps")? * need(q.eta, "eta")?;
            RelationReport::new(id, lhs, 0.5 * need(q.comm_error_disturbance, "comm_error_disturbance")?)
        }
        OZ16 => {
            let (eps, eta) = (need(q.eps, "eps")?, need(q.eta, "eta")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            RelationReport::new(id, eps * eta + sa * eta + eps * sb, 0.5 * need(q.comm_ab, "comm_ab")?)
        }
        UVH1 => {
            let (eps, eta) = (need(q.eps, "eps")?, need(q.eta, "eta")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            RelationReport::new(id, (eps + sa) * (eta + sb), need(q.comm_ab, "comm_ab")?)
        }
        MAK9 => {
            let (eps, eta) = (need(q.eps, "eps")?, need(q.eta, "eta")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            let lhs = ((eps * eps + sa * sa) * (eta * eta + sb * sb)).sqrt();
            RelationReport::new(id, lhs, need(q.comm_ab, "comm_ab")?)
        }
        HEDR13 => {
            let lhs = need(q.eps, "eps")? * need(q.eta, "eta")?;
            RelationReport::new(id, lhs, 0.5 * need(q.comm_ab, "comm_ab")?)
        }
        HT30 => {
            let first = need(q.sigma_mout_minus_a, "sigma_mout_minus_a")? + need(q.sigma_mout, "sigma_mout")?;
            let second = need(q.sigma_bout_minus_b, "sigma_bout_minus_b")? + need(q.sigma_bout, "sigma_bout")?;
            RelationReport::new(id, first * second, 0.5 * need(q.comm_ab, "comm_ab")?)
        }
        AK34 => {
            let (eps, eps_b) = (need(q.eps, "eps")?, need(q.eps_b, "eps_b")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            let lhs = ((eps * eps + sa * sa) * (eps_b * eps_b + sb * sb)).sqrt();
            RelationReport::new(id, lhs, need(q.comm_ab, "comm_ab")?)
        }
        UAK35 => {
            let (eps, eps_b) = (need(q.eps, "eps")?, need(q.eps_b, "eps_b")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            RelationReport::new(id, (eps + sa) * (eps_b + sb), need(q.comm_ab, "comm_ab")?)
        }
        TRI25 => {
            let lhs = need(q.sigma_mout_minus_a, "sigma_mout_minus_a")? * need(q.sigma_bout_minus_b, "sigma_bout_minus_b")?;
            let middle = 0.5 * need(q.tri25_middle, "tri25_middle")?;
            let bottom = 0.5
                * (need(q.comm_ab, "comm_ab")?
                    - need(q.comm_a_disturbance, "comm_a_disturbance")?
                    - need(q.comm_error_b, "comm_error_b")?);
            let mut report = RelationReport::new(id, lhs, middle).with_bottom_line(bottom);
            report.assumption_violated = need(q.comm_mout_bout, "comm_mout_bout")? > VIOLATION_TOL;
            report
        }
        TRI29 => {
            let lhs = need(q.sigma_mout_minus_a, "sigma_mout_minus_a")? * need(q.sigma_bout_minus_b, "sigma_bout_minus_b")?;
            let middle = 0.5 * need(q.tri29_middle, "tri29_middle")?;
            let bottom = 0.5
                * (need(q.comm_ab, "comm_ab")?
                    - need(q.comm_mout_disturbance, "comm_mout_disturbance")?
                    - need(q.comm_error_bout, "comm_error_bout")?
                    - need(q.comm_mout_bout, "comm_mout_bout")?);
            RelationReport::new(id, lhs, middle).with_bottom_line(bottom)
        }
        CHAIN12 => {
            let (eps, eta) = (need(q.eps, "eps")?, need(q.eta, "eta")?);
            let (sa, sb) = (need(q.sigma_a, "sigma_a")?, need(q.sigma_b, "sigma_b")?);
            let rhs = need(q.sigma_mout, "sigma_mout")? * need(q.sigma_bout, "sigma_bout")?;
            RelationReport::new(id, (eps + sa) * (eta + sb), rhs)
        }
        KR36 => return Err(RelationError::NotApplicable(id)),
    };
    Ok(report)
}

/// Evaluates every relation in `ids` that the set supports, skipping the rest.
pub fn eval_available(ids: &[RelationId], q: &QuantitySet) -> Vec<RelationReport> {
    ids.iter().filter_map(|&id| eval(id, q).ok()).collect()
}

/// The two sides of the modified Arthurs-Kelly product: measured directly as
/// `σ(M^out)σ(B^out)` and through the ε, η, σ formula. They coincide only for
/// unbiased measurement and disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectProducts {
    pub direct: RelationReport,
    pub formula: RelationReport,
    /// `|direct.lhs − formula.lhs|`
    pub difference: f64,
    /// `σ(M^out)` and `(ε² + σ(A)²)^{1/2}`.
    pub measurement_side: (f64, f64),
    /// `σ(B^out)` and `(η² + σ(B)²)^{1/2}`.
    pub disturbance_side: (f64, f64),
}

pub fn eval_direct_products(model: &IndirectModel, psi: &StateVector) -> DirectProducts {
    let q = quantities(model, psi);
    let get = |v: Option<f64>| v.expect("filled by quantities");
    let (eps, eta, sa, sb) = (get(q.eps), get(q.eta), get(q.sigma_a), get(q.sigma_b));
    let (sm, sbo) = (get(q.sigma_mout), get(q.sigma_bout));
    let rhs = get(q.comm_ab);
    let direct = RelationReport::new(RelationId::MAK9, sm * sbo, rhs);
    let formula = eval(RelationId::MAK9, &q).expect("filled by quantities");
    DirectProducts {
        difference: (direct.lhs - formula.lhs).abs(),
        direct,
        formula,
        measurement_side: (sm, (eps * eps + sa * sa).sqrt()),
        disturbance_side: (sbo, (eta * eta + sb * sb).sqrt()),
    }
}

/// AK34 and UAK35 on a joint model.
pub fn eval_ak(model: &JointModel, psi: &StateVector) -> Result<(RelationReport, RelationReport), RelationError> {
    let q = joint_quantities(model, psi)?;
    Ok((eval(RelationId::AK34, &q)?, eval(RelationId::UAK35, &q)?))
}
