//! Seeded random operators and states.
//!
//! Every generator draws from a caller-supplied [`Rng`], so results are a pure
//! function of the generator state. [`trial_rng`] gives each trial its own
//! ChaCha stream, which keeps parallel runs identical to sequential ones.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::{inner, vector_norm, Operator, StateVector, C64};

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Standard complex Gaussian: real and imaginary parts i.i.d. N(0, 1/2).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    (0..dim).map(|_| complex_gaussian(rng)).collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    Operator::from_vec(dim, gaussian_vector(rng, dim * dim)).expect("dim > 0")
}

/// Uniformly distributed unit vector.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let v = gaussian_vector(rng, dim);
        if vector_norm(&v) > 1e-8 {
            return StateVector::normalized(v).expect("nonzero vector");
        }
    }
}

/// Orthonormalizes the columns of `m` by modified Gram-Schmidt with one
/// reorthogonalization pass. Positive-diagonal QR of a complex Gaussian
/// matrix is Haar distributed, and Gram-Schmidt yields exactly that `Q`.
///
/// Returns `None` if the columns are numerically dependent.
pub fn orthonormalize_columns(m: &Operator) -> Option<Operator> {
    let n = m.dim();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let proj = inner(q, col);
                for (c, qv) in col.iter_mut().zip(q) {
                    *c -= proj * qv;
                }
            }
        }
        let norm = vector_norm(col);
        if norm < 1e-10 {
            return None;
        }
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
    let mut out = Operator::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            out[(i, j)] = z;
        }
    }
    Some(out)
}

/// Haar-random unitary of dimension `dim`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    loop {
        if let Some(q) = orthonormalize_columns(&gaussian_matrix(rng, dim)) {
            return q;
        }
    }
}

/// Eigenvalues uniform in [−1, 1], rescaled so the largest magnitude is one.
pub fn random_spectrum<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let vals: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let radius = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if radius > 1e-6 {
            return vals.into_iter().map(|v| v / radius).collect();
        }
    }
}

/// Random Hermitian operator with spectral radius exactly one, built as
/// `V diag(λ) V†` with Haar `V`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let basis = haar_unitary(rng, dim);
    let spectrum = random_spectrum(rng, dim);
    hermitize(Operator::from_spectrum(&basis, &spectrum))
}

/// Two commuting random Hermitian operators sharing a Haar eigenbasis.
pub fn random_commuting_pair<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> (Operator, Operator) {
    let basis = haar_unitary(rng, dim);
    let first = random_spectrum(rng, dim);
    let second = random_spectrum(rng, dim);
    (
        hermitize(Operator::from_spectrum(&basis, &first)),
        hermitize(Operator::from_spectrum(&basis, &second)),
    )
}

/// `(O + O†)/2`, removing rounding-level anti-Hermitian residue.
pub fn hermitize(o: Operator) -> Operator {
    (&o + &o.adjoint()).scale_real(0.5)
}

/// Gaussian perturbation of a state, renormalized.
pub fn perturb_state<R: Rng + ?Sized>(rng: &mut R, state: &StateVector, scale: f64) -> StateVector {
    let v: Vec<C64> = state
        .amplitudes()
        .iter()
        .map(|&z| z + complex_gaussian(rng) * scale)
        .collect();
    StateVector::normalized(v).unwrap_or_else(|_| state.clone())
}

/// Gaussian perturbation of a unitary, re-orthonormalized.
pub fn perturb_unitary<R: Rng + ?Sized>(rng: &mut R, u: &Operator, scale: f64) -> Operator {
    let noise = gaussian_matrix(rng, u.dim()).scale_real(scale);
    orthonormalize_columns(&(u + &noise)).unwrap_or_else(|| u.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutator;

    #[test]
    fn haar_is_unitary_and_seeded() {
        for dim in 2..=8 {
            let u = haar_unitary(&mut trial_rng(7, dim as u64), dim);
            assert!(u.unitarity_defect() <= 1e-12, "dim {dim}");
            let again = haar_unitary(&mut trial_rng(7, dim as u64), dim);
            assert_eq!(u, again);
        }
    }

    #[test]
    fn streams_differ() {
        let a = haar_unitary(&mut trial_rng(1, 0), 3);
        let b = haar_unitary(&mut trial_rng(1, 1), 3);
        assert_ne!(a, b);
    }

    #[test]
    fn hermitian_has_unit_spectral_radius() {
        let mut rng = trial_rng(3, 0);
        for dim in 2..=5 {
            let h = random_hermitian(&mut rng, dim);
            assert!(h.is_hermitian());
            // power iteration on H² for the largest |λ|
            let mut v = gaussian_vector(&mut rng, dim);
            for _ in 0..2000 {
                v = h.apply(&h.apply(&v));
                let n = vector_norm(&v);
                v.iter_mut().for_each(|z| *z /= n);
            }
            let radius = vector_norm(&h.apply(&v));
            assert!((radius - 1.0).abs() < 1e-6, "dim {dim}: {radius}");
        }
    }

    #[test]
    fn commuting_pair_commutes() {
        let (m, n) = random_commuting_pair(&mut trial_rng(5, 2), 4);
        assert!(commutator(&m, &n).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn perturbed_unitary_stays_unitary() {
        let mut rng = trial_rng(9, 0);
        let u = haar_unitary(&mut rng, 4);
        let v = perturb_unitary(&mut rng, &u, 0.05);
        assert!(v.is_unitary());
        assert!((&v - &u).frobenius_norm() > 0.0);
    }
}
