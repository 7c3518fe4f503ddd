//! Measurement models in the Heisenberg picture.
//!
//! An [`IndirectModel`] couples the system to an apparatus prepared in `|ξ⟩`
//! through a unitary `U`; the meter reading after the interaction is
//! `M^out = U†(I⊗M)U` and the conjugate observable becomes
//! `B^out = U†(B⊗I)U`. A [`ProjectiveModel`] is a resolution of the identity
//! into orthogonal projectors with real outcome values, and a [`JointModel`]
//! carries two commuting meters read out from the same interaction.

use thiserror::Error;

use crate::operator::{
    commutator, residual_norm, std_dev, tensor, vector_norm, Operator, OperatorError, SpaceLayout,
    StateVector, C64,
};

/// Frobenius-norm threshold for the operator-level bias contraction.
pub const BIAS_TOL: f64 = 1e-10;
/// Error below which a measurement counts as precise on a given state.
pub const PRECISE_TOL: f64 = 1e-10;
/// Pairwise projector products and completeness must vanish to this norm.
pub const RESOLUTION_TOL: f64 = 1e-12;
/// `[M, N]` on the apparatus must vanish to this norm.
pub const METER_COMMUTATOR_TOL: f64 = 1e-12;
/// `[M^out, N^out]` must vanish to this norm.
pub const OUTPUT_COMMUTATOR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{name} has dimension {found}, expected {expected}")]
    Dimension {
        name: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{name} is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { name: &'static str, deviation: f64 },
    #[error("U is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("outcome {index} is not a projector")]
    NotProjector { index: usize },
    #[error("projectors {first} and {second} are not orthogonal")]
    NotOrthogonal { first: usize, second: usize },
    #[error("projectors do not sum to the identity (defect {defect:e})")]
    Incomplete { defect: f64 },
    #[error("outcome values must be distinct (value {value} repeats)")]
    DuplicateValue { value: f64 },
    #[error("a projective model needs at least two outcomes, found {found}")]
    TooFewOutcomes { found: usize },
    #[error("dilation needs exactly two outcomes with values +1 and -1, found {found} outcomes")]
    DilationOutcomes { found: usize },
    #[error("apparatus meters do not commute (norm {norm:e})")]
    MetersDoNotCommute { norm: f64 },
    #[error("output meters do not commute (norm {norm:e})")]
    OutputsDoNotCommute { norm: f64 },
}

fn expect_dim(name: &'static str, expected: usize, found: usize) -> Result<(), MeasurementError> {
    if expected == found {
        Ok(())
    } else {
        Err(MeasurementError::Dimension {
            name,
            expected,
            found,
        })
    }
}

fn expect_hermitian(name: &'static str, op: &Operator) -> Result<(), MeasurementError> {
    let deviation = op.hermitian_deviation();
    if deviation <= crate::operator::HERMITIAN_TOL {
        Ok(())
    } else {
        Err(MeasurementError::NotHermitian { name, deviation })
    }
}

fn expect_unitary(op: &Operator) -> Result<(), MeasurementError> {
    let defect = op.unitarity_defect();
    if defect <= crate::operator::UNITARY_TOL {
        Ok(())
    } else {
        Err(MeasurementError::NotUnitary { defect })
    }
}

/// System-apparatus interaction followed by a meter readout.
#[derive(Debug, Clone, PartialEq)]
pub struct IndirectModel {
    layout: SpaceLayout,
    unitary: Operator,
    xi: StateVector,
    meter: Operator,
    observable: Operator,
    conjugate: Operator,
}

impl IndirectModel {
    /// `observable` is the measured `A`, `conjugate` the disturbed `B`.
    pub fn new(
        layout: SpaceLayout,
        unitary: Operator,
        xi: StateVector,
        meter: Operator,
        observable: Operator,
        conjugate: Operator,
    ) -> Result<Self, MeasurementError> {
        expect_dim("U", layout.composite(), unitary.dim())?;
        expect_dim("xi", layout.dim_apparatus(), xi.dim())?;
        expect_dim("M", layout.dim_apparatus(), meter.dim())?;
        expect_dim("A", layout.dim_system(), observable.dim())?;
        expect_dim("B", layout.dim_system(), conjugate.dim())?;
        expect_unitary(&unitary)?;
        expect_hermitian("M", &meter)?;
        expect_hermitian("A", &observable)?;
        expect_hermitian("B", &conjugate)?;
        Ok(Self {
            layout,
            unitary,
            xi,
            meter,
            observable,
            conjugate,
        })
    }

    /// SWAP coupling with `M = A`: the apparatus copy of `A` is read out, so
    /// `M^out = A⊗I` exactly.
    pub fn swap(observable: Operator, conjugate: Operator, xi: StateVector) -> Result<Self, MeasurementError> {
        let d = observable.dim();
        let layout = SpaceLayout::new(d, d)?;
        Self::new(layout, Operator::swap(d), xi, observable.clone(), observable, conjugate)
    }

    /// `U = I`: no interaction, so `B^out = B⊗I` and `M^out = I⊗M`.
    pub fn no_interaction(
        meter: Operator,
        xi: StateVector,
        observable: Operator,
        conjugate: Operator,
    ) -> Result<Self, MeasurementError> {
        let layout = SpaceLayout::new(observable.dim(), meter.dim())?;
        Self::new(layout, Operator::identity(layout.composite()), xi, meter, observable, conjugate)
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn xi(&self) -> &StateVector {
        &self.xi
    }

    pub fn meter(&self) -> &Operator {
        &self.meter
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn conjugate(&self) -> &Operator {
        &self.conjugate
    }

    /// Same model with a different coupling; validates unitarity.
    pub fn with_unitary(&self, unitary: Operator) -> Result<Self, MeasurementError> {
        Self::new(
            self.layout,
            unitary,
            self.xi.clone(),
            self.meter.clone(),
            self.observable.clone(),
            self.conjugate.clone(),
        )
    }

    pub fn composite_state(&self, psi: &StateVector) -> StateVector {
        assert_eq!(psi.dim(), self.layout.dim_system(), "system state has the wrong dimension");
        psi.tensor(&self.xi)
    }

    /// `A⊗I` on the composite space.
    pub fn observable_lifted(&self) -> Operator {
        tensor(&self.observable, &Operator::identity(self.layout.dim_apparatus()))
    }

    /// `B⊗I` on the composite space.
    pub fn conjugate_lifted(&self) -> Operator {
        tensor(&self.conjugate, &Operator::identity(self.layout.dim_apparatus()))
    }

    /// `M^out = U†(I⊗M)U`.
    pub fn meter_out(&self) -> Operator {
        tensor(&Operator::identity(self.layout.dim_system()), &self.meter).conjugate_by(&self.unitary)
    }

    /// `B^out = U†(B⊗I)U`.
    pub fn conjugate_out(&self) -> Operator {
        self.conjugate_lifted().conjugate_by(&self.unitary)
    }

    /// `ε(A) = ⟨(M^out − A⊗I)²⟩^{1/2}` on `ψ⊗ξ`.
    pub fn error(&self, psi: &StateVector) -> f64 {
        let diff = &self.meter_out() - &self.observable_lifted();
        residual_norm(&diff, &self.composite_state(psi)).expect("dimensions validated")
    }

    /// `η(B) = ⟨(B^out − B⊗I)²⟩^{1/2}` on `ψ⊗ξ`.
    pub fn disturbance(&self, psi: &StateVector) -> f64 {
        let diff = &self.conjugate_out() - &self.conjugate_lifted();
        residual_norm(&diff, &self.composite_state(psi)).expect("dimensions validated")
    }

    /// `ε̄(A) = ε(A) + σ(A)`.
    pub fn inaccuracy(&self, psi: &StateVector) -> f64 {
        self.error(psi) + std_dev(&self.observable, psi).expect("A validated Hermitian")
    }

    /// `η̄(B) = η(B) + σ(B)`.
    pub fn fluctuation(&self, psi: &StateVector) -> f64 {
        self.disturbance(psi) + std_dev(&self.conjugate, psi).expect("B validated Hermitian")
    }

    /// System operator `(I⊗⟨ξ|)(M^out − A⊗I)(I⊗|ξ⟩)`.
    pub fn measurement_bias(&self) -> Operator {
        (&self.meter_out() - &self.observable_lifted()).contract_apparatus(self.layout, &self.xi)
    }

    /// System operator `(I⊗⟨ξ|)(B^out − B⊗I)(I⊗|ξ⟩)`.
    pub fn disturbance_bias(&self) -> Operator {
        (&self.conjugate_out() - &self.conjugate_lifted()).contract_apparatus(self.layout, &self.xi)
    }

    /// `⟨ψ⊗ξ|M^out − A|ψ⊗ξ⟩ = 0` for every `ψ`, decided on the contraction.
    pub fn is_unbiased_measurement(&self) -> bool {
        self.measurement_bias().frobenius_norm() <= BIAS_TOL
    }

    /// `⟨ψ⊗ξ|B^out − B|ψ⊗ξ⟩ = 0` for every `ψ`.
    pub fn is_unbiased_disturbance(&self) -> bool {
        self.disturbance_bias().frobenius_norm() <= BIAS_TOL
    }

    /// `ε(A) = 0` on this particular state.
    pub fn is_precise(&self, psi: &StateVector) -> bool {
        self.error(psi) <= PRECISE_TOL
    }
}

/// One outcome of a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub value: f64,
    pub projector: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveModel {
    outcomes: Vec<Outcome>,
    observable: Operator,
    conjugate: Operator,
}

impl ProjectiveModel {
    pub fn new(outcomes: Vec<Outcome>, observable: Operator, conjugate: Operator) -> Result<Self, MeasurementError> {
        if outcomes.len() < 2 {
            return Err(MeasurementError::TooFewOutcomes { found: outcomes.len() });
        }
        let dim = observable.dim();
        expect_dim("B", dim, conjugate.dim())?;
        expect_hermitian("A", &observable)?;
        expect_hermitian("B", &conjugate)?;
        let mut total = Operator::zeros(dim);
        for (index, outcome) in outcomes.iter().enumerate() {
            expect_dim("projector", dim, outcome.projector.dim())?;
            if !outcome.projector.is_projector() {
                return Err(MeasurementError::NotProjector { index });
            }
            total = &total + &outcome.projector;
        }
        for (i, a) in outcomes.iter().enumerate() {
            for (j, b) in outcomes.iter().enumerate().skip(i + 1) {
                if a.value == b.value {
                    return Err(MeasurementError::DuplicateValue { value: a.value });
                }
                if (&a.projector * &b.projector).frobenius_norm() > RESOLUTION_TOL {
                    return Err(MeasurementError::NotOrthogonal { first: i, second: j });
                }
            }
        }
        let defect = (&total - &Operator::identity(dim)).frobenius_norm();
        if defect > RESOLUTION_TOL {
            return Err(MeasurementError::Incomplete { defect });
        }
        Ok(Self {
            outcomes,
            observable,
            conjugate,
        })
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn conjugate(&self) -> &Operator {
        &self.conjugate
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    /// `Σ_m m·E(m)`.
    pub fn measured_operator(&self) -> Operator {
        self.outcomes
            .iter()
            .fold(Operator::zeros(self.dim()), |acc, o| &acc + &o.projector.scale_real(o.value))
    }

    /// `‖(Σ_m m·E(m) − A)ψ‖`.
    pub fn error(&self, psi: &StateVector) -> f64 {
        residual_norm(&(&self.measured_operator() - &self.observable), psi).expect("dimension checked by caller")
    }

    /// `(Σ_m ‖[E(m), B]ψ‖²)^{1/2}`.
    pub fn disturbance(&self, psi: &StateVector) -> f64 {
        self.outcomes
            .iter()
            .map(|o| {
                let c = commutator(&o.projector, &self.conjugate).expect("dims validated");
                vector_norm(&c.apply(psi.amplitudes())).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Qubit-meter dilation of a two-outcome ±1 measurement:
    /// `ξ = |0⟩`, `U = E(+1)⊗I + E(−1)⊗σ_x`, `M = σ_z`.
    pub fn dilate(&self) -> Result<IndirectModel, MeasurementError> {
        if self.outcomes.len() != 2 {
            return Err(MeasurementError::DilationOutcomes {
                found: self.outcomes.len(),
            });
        }
        let plus = self.outcomes.iter().find(|o| o.value == 1.0);
        let minus = self.outcomes.iter().find(|o| o.value == -1.0);
        let (Some(plus), Some(minus)) = (plus, minus) else {
            return Err(MeasurementError::DilationOutcomes { found: 2 });
        };
        let unitary = &tensor(&plus.projector, &Operator::identity(2)) + &tensor(&minus.projector, &Operator::pauli_x());
        let layout = SpaceLayout::new(self.dim(), 2)?;
        IndirectModel::new(
            layout,
            unitary,
            StateVector::basis(2, 0),
            Operator::pauli_z(),
            self.observable.clone(),
            self.conjugate.clone(),
        )
    }

    /// Dilation for any number of outcomes: the apparatus has one level per
    /// outcome, `ξ = |0⟩`, `U = Σ_k E_k ⊗ S^k` with the cyclic shift `S`,
    /// and `M = diag(m_0, m_1, …)`.
    pub fn dilate_cyclic(&self) -> Result<IndirectModel, MeasurementError> {
        let k = self.outcomes.len();
        let mut shift = Operator::zeros(k);
        for j in 0..k {
            shift[((j + 1) % k, j)] = C64::new(1.0, 0.0);
        }
        let mut power = Operator::identity(k);
        let mut unitary = Operator::zeros(self.dim() * k);
        for outcome in &self.outcomes {
            unitary = &unitary + &tensor(&outcome.projector, &power);
            power = &shift * &power;
        }
        let mut meter = Operator::zeros(k);
        for (j, outcome) in self.outcomes.iter().enumerate() {
            meter[(j, j)] = C64::new(outcome.value, 0.0);
        }
        let layout = SpaceLayout::new(self.dim(), k)?;
        IndirectModel::new(
            layout,
            unitary,
            StateVector::basis(k, 0),
            meter,
            self.observable.clone(),
            self.conjugate.clone(),
        )
    }
}

/// Two meters read out after a single interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    layout: SpaceLayout,
    unitary: Operator,
    xi: StateVector,
    meter_a: Operator,
    meter_b: Operator,
    observable: Operator,
    conjugate: Operator,
}

impl JointModel {
    /// `meter_a` (M) reads `observable` (A); `meter_b` (N) reads `conjugate` (B).
    pub fn new(
        layout: SpaceLayout,
        unitary: Operator,
        xi: StateVector,
        meter_a: Operator,
        meter_b: Operator,
        observable: Operator,
        conjugate: Operator,
    ) -> Result<Self, MeasurementError> {
        expect_dim("U", layout.composite(), unitary.dim())?;
        expect_dim("xi", layout.dim_apparatus(), xi.dim())?;
        expect_dim("M", layout.dim_apparatus(), meter_a.dim())?;
        expect_dim("N", layout.dim_apparatus(), meter_b.dim())?;
        expect_dim("A", layout.dim_system(), observable.dim())?;
        expect_dim("B", layout.dim_system(), conjugate.dim())?;
        expect_unitary(&unitary)?;
        expect_hermitian("M", &meter_a)?;
        expect_hermitian("N", &meter_b)?;
        expect_hermitian("A", &observable)?;
        expect_hermitian("B", &conjugate)?;
        let norm = commutator(&meter_a, &meter_b)?.frobenius_norm();
        if norm > METER_COMMUTATOR_TOL {
            return Err(MeasurementError::MetersDoNotCommute { norm });
        }
        Ok(Self {
            layout,
            unitary,
            xi,
            meter_a,
            meter_b,
            observable,
            conjugate,
        })
    }

    /// Qubit system, two qubit meters: a σ_x dilation onto the first meter
    /// followed by a σ_y dilation onto the second; `ξ = |00⟩`,
    /// `M = σ_z⊗I`, `N = I⊗σ_z`.
    pub fn sequential_xy() -> Self {
        let half = |p: &Operator, sign: f64| (&Operator::identity(2) + &p.scale_real(sign)).scale_real(0.5);
        let (x, y) = (Operator::pauli_x(), Operator::pauli_y());
        let id2 = Operator::identity(2);
        let first = &tensor(&tensor(&half(&x, 1.0), &id2), &id2) + &tensor(&tensor(&half(&x, -1.0), &x), &id2);
        let second = &tensor(&tensor(&half(&y, 1.0), &id2), &id2) + &tensor(&tensor(&half(&y, -1.0), &id2), &x);
        let unitary = &second * &first;
        let layout = SpaceLayout::new(2, 4).expect("static layout");
        Self::new(
            layout,
            unitary,
            StateVector::basis(4, 0),
            tensor(&Operator::pauli_z(), &id2),
            tensor(&id2, &Operator::pauli_z()),
            x,
            y,
        )
        .expect("static model is valid")
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    pub fn xi(&self) -> &StateVector {
        &self.xi
    }

    pub fn meter_a(&self) -> &Operator {
        &self.meter_a
    }

    pub fn meter_b(&self) -> &Operator {
        &self.meter_b
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    pub fn conjugate(&self) -> &Operator {
        &self.conjugate
    }

    pub fn with_unitary(&self, unitary: Operator) -> Result<Self, MeasurementError> {
        Self::new(
            self.layout,
            unitary,
            self.xi.clone(),
            self.meter_a.clone(),
            self.meter_b.clone(),
            self.observable.clone(),
            self.conjugate.clone(),
        )
    }

    pub fn composite_state(&self, psi: &StateVector) -> StateVector {
        assert_eq!(psi.dim(), self.layout.dim_system(), "system state has the wrong dimension");
        psi.tensor(&self.xi)
    }

    /// `(U†(I⊗M)U, U†(I⊗N)U)`, checked to commute.
    pub fn joint_outputs(&self) -> Result<(Operator, Operator), MeasurementError> {
        let id = Operator::identity(self.layout.dim_system());
        let m_out = tensor(&id, &self.meter_a).conjugate_by(&self.unitary);
        let n_out = tensor(&id, &self.meter_b).conjugate_by(&self.unitary);
        let norm = commutator(&m_out, &n_out)?.frobenius_norm();
        if norm > OUTPUT_COMMUTATOR_TOL {
            return Err(MeasurementError::OutputsDoNotCommute { norm });
        }
        Ok((m_out, n_out))
    }
}
