//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Operators are square row-major matrices of [`C64`]; states are unit-norm
//! complex vectors. Composite spaces are always ordered system-first: the
//! basis index of `|i⟩ ⊗ |a⟩` is `i * dim_apparatus + a`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Maximum entrywise deviation `|O[i][j] − conj(O[j][i])|` for a Hermitian operator.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum Frobenius norm of `U†U − I` for a unitary operator.
pub const UNITARY_TOL: f64 = 1e-10;
/// Maximum Frobenius norms of `E² − E` and `E − E†` for a projector.
pub const PROJECTOR_TOL: f64 = 1e-12;
/// Maximum deviation of a state's Euclidean norm from one.
pub const NORM_TOL: f64 = 1e-12;
/// Largest negative variance radicand that is clamped to zero.
pub const RADICAND_CLAMP: f64 = -1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("dimension must be positive")]
    Empty,
    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("negative variance radicand {radicand:e}")]
    NegativeVariance { radicand: f64 },
    #[error("invalid space layout: system dimension {dim_system}, apparatus dimension {dim_apparatus}")]
    InvalidLayout { dim_system: usize, dim_apparatus: usize },
}

/// A dense complex square matrix.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        op
    }

    /// Builds an operator from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self, OperatorError> {
        if dim == 0 {
            return Err(OperatorError::Empty);
        }
        if data.len() != dim * dim {
            return Err(OperatorError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, OperatorError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(OperatorError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, entries) in rows.into_iter().enumerate() {
            if entries.len() != dim {
                return Err(OperatorError::NotSquare {
                    rows: dim,
                    row,
                    len: entries.len(),
                });
            }
            data.extend(entries);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, OperatorError> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// `Σ_k λ_k |v_k⟩⟨v_k|` for orthonormal columns `v_k`.
    pub fn from_spectrum(vectors: &Operator, eigenvalues: &[f64]) -> Self {
        let n = vectors.dim;
        assert_eq!(n, eigenvalues.len(), "spectrum length must match dimension");
        let mut op = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &lambda) in eigenvalues.iter().enumerate() {
                    acc += vectors[(i, k)] * vectors[(j, k)].conj() * lambda;
                }
                op.data[i * n + j] = acc;
            }
        }
        op
    }

    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("static 2x2")
    }

    pub fn pauli_y() -> Self {
        let i = C64::new(0.0, 1.0);
        let o = C64::new(0.0, 0.0);
        Self::from_rows(vec![vec![o, -i], vec![i, o]]).expect("static 2x2")
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("static 2x2")
    }

    /// Two-qudit swap on `C^d ⊗ C^d`.
    pub fn swap(d: usize) -> Self {
        let n = d * d;
        let mut op = Self::zeros(n);
        for i in 0..d {
            for a in 0..d {
                op.data[(i * d + a) * n + (a * d + i)] = C64::new(1.0, 0.0);
            }
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies the operator to a vector of matching length.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length must match operator dimension");
        self.rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn try_apply(&self, v: &[C64]) -> Result<Vec<C64>, OperatorError> {
        check_dim(self.dim, v.len())?;
        Ok(self.apply(v))
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    pub fn unitarity_defect(&self) -> f64 {
        (&(&self.adjoint() * self) - &Self::identity(self.dim)).frobenius_norm()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARY_TOL
    }

    pub fn is_projector(&self) -> bool {
        let idempotent = (&(self * self) - self).frobenius_norm();
        let selfadjoint = (self - &self.adjoint()).frobenius_norm();
        idempotent <= PROJECTOR_TOL && selfadjoint <= PROJECTOR_TOL
    }

    /// Fails unless the operator is Hermitian within [`HERMITIAN_TOL`].
    pub fn ensure_hermitian(&self) -> Result<(), OperatorError> {
        let deviation = self.hermitian_deviation();
        if deviation <= HERMITIAN_TOL {
            Ok(())
        } else {
            Err(OperatorError::NotHermitian { deviation })
        }
    }

    /// `U† X U`.
    pub fn conjugate_by(&self, unitary: &Operator) -> Self {
        &(&unitary.adjoint() * self) * unitary
    }

    /// Contracts the apparatus factor of a composite operator with `|ξ⟩`,
    /// giving the system operator `K` with `⟨ψ|K|ψ⟩ = ⟨ψ⊗ξ|O|ψ⊗ξ⟩`.
    pub fn contract_apparatus(&self, layout: SpaceLayout, xi: &StateVector) -> Self {
        let (ds, da) = (layout.dim_system(), layout.dim_apparatus());
        assert_eq!(self.dim, ds * da, "operator must act on the composite space");
        assert_eq!(xi.dim(), da, "apparatus state has the wrong dimension");
        let n = self.dim;
        let x = xi.amplitudes();
        let mut out = Self::zeros(ds);
        for i in 0..ds {
            for j in 0..ds {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..da {
                    for b in 0..da {
                        acc += x[a].conj() * self.data[(i * da + a) * n + (j * da + b)] * x[b];
                    }
                }
                out.data[i * ds + j] = acc;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

/// A unit-norm complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Validates that `amplitudes` has unit norm within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, OperatorError> {
        if amplitudes.is_empty() {
            return Err(OperatorError::Empty);
        }
        let norm = vector_norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(OperatorError::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self, OperatorError> {
        if amplitudes.is_empty() {
            return Err(OperatorError::Empty);
        }
        let norm = vector_norm(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(OperatorError::ZeroVector);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `|self⟩ ⊗ |other⟩`, system-first.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }
}

/// System and apparatus dimensions of a composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceLayout {
    dim_system: usize,
    dim_apparatus: usize,
}

impl SpaceLayout {
    pub fn new(dim_system: usize, dim_apparatus: usize) -> Result<Self, OperatorError> {
        if dim_system < 2 || dim_apparatus < 1 {
            return Err(OperatorError::InvalidLayout {
                dim_system,
                dim_apparatus,
            });
        }
        Ok(Self {
            dim_system,
            dim_apparatus,
        })
    }

    pub fn dim_system(&self) -> usize {
        self.dim_system
    }

    pub fn dim_apparatus(&self) -> usize {
        self.dim_apparatus
    }

    pub fn composite(&self) -> usize {
        self.dim_system * self.dim_apparatus
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), OperatorError> {
    if expected == found {
        Ok(())
    } else {
        Err(OperatorError::DimensionMismatch { expected, found })
    }
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "vector lengths must match");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter()
        .flat_map(|&a| v.iter().map(move |&b| a * b))
        .collect()
}

/// Kronecker product `X ⊗ Y` with the first factor as the major index.
pub fn tensor(x: &Operator, y: &Operator) -> Operator {
    let (m, n) = (x.dim, y.dim);
    let dim = m * n;
    let mut out = Operator::zeros(dim);
    for i in 0..m {
        for j in 0..m {
            let a = x.data[i * m + j];
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    out.data[(i * n + k) * dim + (j * n + l)] = a * y.data[k * n + l];
                }
            }
        }
    }
    out
}

/// `XY − YX`.
pub fn commutator(x: &Operator, y: &Operator) -> Result<Operator, OperatorError> {
    check_dim(x.dim, y.dim)?;
    Ok(&(x * y) - &(y * x))
}

/// `⟨v|O|v⟩` for an arbitrary (not necessarily normalized) vector.
pub fn sandwich(o: &Operator, v: &[C64]) -> Result<C64, OperatorError> {
    check_dim(o.dim, v.len())?;
    Ok(inner(v, &o.apply(v)))
}

/// `⟨s|O|s⟩`.
pub fn expectation(o: &Operator, s: &StateVector) -> Result<C64, OperatorError> {
    sandwich(o, s.amplitudes())
}

/// `(⟨O²⟩ − ⟨O⟩²)^{1/2}` for Hermitian `O`.
pub fn std_dev(o: &Operator, s: &StateVector) -> Result<f64, OperatorError> {
    o.ensure_hermitian()?;
    let applied = o.try_apply(s.amplitudes())?;
    let mean = inner(s.amplitudes(), &applied).re;
    let second = inner(&applied, &applied).re;
    let radicand = second - mean * mean;
    if radicand >= 0.0 {
        Ok(radicand.sqrt())
    } else if radicand >= RADICAND_CLAMP {
        Ok(0.0)
    } else {
        Err(OperatorError::NegativeVariance { radicand })
    }
}

/// `‖O s‖`; equals `⟨s|O²|s⟩^{1/2}` for Hermitian `O`.
pub fn residual_norm(o: &Operator, s: &StateVector) -> Result<f64, OperatorError> {
    Ok(vector_norm(&o.try_apply(s.amplitudes())?))
}

/// `|⟨s|[X, Y]|s⟩|`.
pub fn commutator_magnitude(x: &Operator, y: &Operator, s: &StateVector) -> Result<f64, OperatorError> {
    Ok(expectation(&commutator(x, y)?, s)?.norm())
}

/// `⟨ψ⊗ξ|O|ψ′⊗ξ⟩` reconstructed from four diagonal expectations on
/// `(ψ ± ψ′)⊗ξ` and `(ψ ± iψ′)⊗ξ`.
pub fn polarization_matrix_element(
    o: &Operator,
    psi: &StateVector,
    psi_prime: &[C64],
    xi: &StateVector,
) -> Result<C64, OperatorError> {
    check_dim(psi.dim(), psi_prime.len())?;
    check_dim(o.dim, psi.dim() * xi.dim())?;
    let i = C64::new(0.0, 1.0);
    let combine = |coef: C64| -> Vec<C64> {
        let mixed: Vec<C64> = psi
            .amplitudes()
            .iter()
            .zip(psi_prime)
            .map(|(a, b)| a + coef * b)
            .collect();
        kron_vec(&mixed, xi.amplitudes())
    };
    let plus = sandwich(o, &combine(C64::new(1.0, 0.0)))?;
    let minus = sandwich(o, &combine(C64::new(-1.0, 0.0)))?;
    let plus_i = sandwich(o, &combine(i))?;
    let minus_i = sandwich(o, &combine(-i))?;
    Ok((plus - minus - i * plus_i + i * minus_i) * 0.25)
}

/// `⟨ψ⊗ξ|O|ψ′⊗ξ⟩` evaluated directly.
pub fn direct_matrix_element(
    o: &Operator,
    psi: &StateVector,
    psi_prime: &[C64],
    xi: &StateVector,
) -> Result<C64, OperatorError> {
    check_dim(psi.dim(), psi_prime.len())?;
    check_dim(o.dim, psi.dim() * xi.dim())?;
    let left = kron_vec(psi.amplitudes(), xi.amplitudes());
    let right = kron_vec(psi_prime, xi.amplitudes());
    Ok(inner(&left, &o.apply(&right)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn plus_z() -> StateVector {
        StateVector::basis(2, 0)
    }

    fn plus_x() -> StateVector {
        StateVector::new(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]).unwrap()
    }

    fn sigma_phi(phi: f64) -> Operator {
        &Operator::pauli_x().scale_real(phi.cos()) + &Operator::pauli_y().scale_real(phi.sin())
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let id = tensor(&Operator::identity(2), &Operator::identity(2));
        assert_eq!(id, Operator::identity(4));
    }

    #[test]
    fn tensor_on_disjoint_factors_commutes() {
        let x = tensor(&Operator::pauli_x(), &Operator::identity(2));
        let z = tensor(&Operator::identity(2), &Operator::pauli_z());
        assert!(commutator(&x, &z).unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn tensor_zz_diagonal() {
        let zz = tensor(&Operator::pauli_z(), &Operator::pauli_z());
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(zz[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn pauli_commutator() {
        let c = commutator(&Operator::pauli_x(), &Operator::pauli_y()).unwrap();
        let expected = Operator::pauli_z().scale(C64::new(0.0, 2.0));
        assert!((&c - &expected).max_abs() < 1e-15);
        let x = Operator::pauli_x();
        assert_eq!(commutator(&x, &x).unwrap().max_abs(), 0.0);
        let mag = commutator_magnitude(&Operator::pauli_x(), &Operator::pauli_y(), &plus_z()).unwrap();
        assert!((mag - 2.0).abs() < 1e-15);
    }

    #[test]
    fn commutator_rejects_mismatched_dims() {
        let err = commutator(&Operator::identity(2), &Operator::identity(3)).unwrap_err();
        assert_eq!(err, OperatorError::DimensionMismatch { expected: 2, found: 3 });
    }

    #[test]
    fn expectations_on_plus_z() {
        let z = expectation(&Operator::pauli_z(), &plus_z()).unwrap();
        assert!((z - C64::new(1.0, 0.0)).norm() < 1e-15);
        let x = expectation(&Operator::pauli_x(), &plus_z()).unwrap();
        assert!(x.norm() < 1e-15);
        for k in 0..16 {
            let phi = k as f64 * PI / 8.0;
            assert!(expectation(&sigma_phi(phi), &plus_z()).unwrap().norm() < 1e-15);
        }
        assert!(expectation(&Operator::pauli_z(), &StateVector::basis(3, 0)).is_err());
    }

    #[test]
    fn standard_deviations_on_plus_z() {
        assert!((std_dev(&Operator::pauli_x(), &plus_z()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(std_dev(&Operator::pauli_z(), &plus_z()).unwrap(), 0.0);
        assert!((std_dev(&Operator::pauli_y(), &plus_z()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn std_dev_requires_hermitian() {
        let skew = Operator::pauli_x().scale(C64::new(0.0, 1.0));
        assert!(matches!(
            std_dev(&skew, &plus_z()),
            Err(OperatorError::NotHermitian { .. })
        ));
    }

    #[test]
    fn residual_norms() {
        let zero = &Operator::pauli_x() - &Operator::pauli_x();
        assert_eq!(residual_norm(&zero, &plus_x()).unwrap(), 0.0);
        for k in 0..=8 {
            let phi = k as f64 * PI / 16.0;
            let d = &sigma_phi(phi) - &Operator::pauli_x();
            let r = residual_norm(&d, &plus_z()).unwrap();
            assert!((r - 2.0 * (phi / 2.0).sin()).abs() < 1e-14, "phi={phi}");
        }
        assert!((residual_norm(&Operator::pauli_z(), &plus_x()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn polarization_with_identity_is_inner_product() {
        let psi = plus_x();
        let psi_prime = vec![C64::new(0.3, -0.2), C64::new(-1.1, 0.7)];
        let xi = StateVector::basis(2, 1);
        let got = polarization_matrix_element(&Operator::identity(4), &psi, &psi_prime, &xi).unwrap();
        let expected = inner(psi.amplitudes(), &psi_prime);
        assert!((got - expected).norm() < 1e-15);
    }

    #[test]
    fn state_validation() {
        assert!(matches!(
            StateVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
            Err(OperatorError::NotNormalized { .. })
        ));
        assert_eq!(
            StateVector::normalized(vec![C64::new(0.0, 0.0); 2]),
            Err(OperatorError::ZeroVector)
        );
        assert!(SpaceLayout::new(1, 2).is_err());
        assert!(SpaceLayout::new(2, 1).is_ok());
    }

    #[test]
    fn predicates() {
        assert!(Operator::pauli_y().is_hermitian());
        assert!(Operator::pauli_y().is_unitary());
        assert!(Operator::swap(3).is_unitary());
        let e = (&Operator::identity(2) + &Operator::pauli_x()).scale_real(0.5);
        assert!(e.is_projector());
        assert!(!Operator::pauli_x().is_projector());
        assert!(!Operator::pauli_x().scale_real(1.1).is_unitary());
    }

    #[test]
    fn contraction_matches_product_state_expectation() {
        let layout = SpaceLayout::new(2, 2).unwrap();
        let o = tensor(&Operator::pauli_x(), &Operator::pauli_z());
        let xi = plus_x();
        // ⟨+x|σ_z|+x⟩ = 0
        assert!(o.contract_apparatus(layout, &xi).max_abs() < 1e-15);
        let k = o.contract_apparatus(layout, &StateVector::basis(2, 1));
        assert!((&k + &Operator::pauli_x()).max_abs() < 1e-15);
    }
}
