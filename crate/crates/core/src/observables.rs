//! Scalar observables of a density matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::morse::StateVector;

/// Eigenvalues in `[−tol, 0)` are treated as zero by [`entropy`].
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

const IMAG_RESIDUE: f64 = 1e-9;

/// `Tr(op ρ)` for a Hermitian `op`.
pub fn expectation(op: &DMatrix<Complex64>, rho: &DensityMatrix) -> Result<f64> {
    rho.check_dim(op.nrows())?;
    let v = trace_of_product(op, rho.data());
    debug_assert!(
        v.im.abs() < IMAG_RESIDUE * v.re.abs().max(1.0),
        "imaginary residue {} in expectation value",
        v.im
    );
    Ok(v.re)
}

/// `Tr(op ρ)` for a real symmetric `op`.
pub fn expectation_real(op: &DMatrix<f64>, rho: &DensityMatrix) -> Result<f64> {
    rho.check_dim(op.nrows())?;
    let r = rho.data();
    let n = op.nrows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            acc += op[(i, j)] * r[(j, i)].re;
        }
    }
    Ok(acc)
}

pub(crate) fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Von Neumann entropy `−Σ λ ln λ`.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_from_eigenvalues(&rho.eigenvalues())
}

pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -POSITIVITY_TOLERANCE {
            return Err(Error::NegativeEigenvalue(l));
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// `Tr ρ²`
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.data().iter().map(|c| c.norm_sqr()).sum()
}

/// `⟨ψ₀|ρ|ψ₀⟩`
pub fn autocorrelation(rho: &DensityMatrix, initial: &StateVector) -> Result<f64> {
    rho.check_dim(initial.dim())?;
    let c = &initial.amplitudes;
    let v = (c.adjoint() * rho.data() * c)[(0, 0)];
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn random_density(n: usize, seed: u64) -> DensityMatrix {
        // deterministic LCG so the test needs no RNG dependency
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityMatrix::from_matrix(m.unscale(tr)).unwrap()
    }

    #[test]
    fn identity_expectation_is_one() {
        let rho = random_density(6, 3);
        let id = DMatrix::<Complex64>::identity(6, 6);
        assert!((expectation(&id, &rho).unwrap() - 1.0).abs() < 1e-14);
        assert!(expectation(&DMatrix::identity(5, 5), &rho).is_err());
    }

    #[test]
    fn entropy_reference_values() {
        let pure = DensityMatrix::from_pure(&StateVector::eigenstate(5, 1).unwrap());
        assert!(entropy(&pure).unwrap().abs() < 1e-9);
        let mixed = DensityMatrix::maximally_mixed(55);
        assert!((entropy(&mixed).unwrap() - 55f64.ln()).abs() < 1e-12);
        assert!((entropy(&mixed).unwrap() - 4.0073).abs() < 1e-4);
        let half = DensityMatrix::from_populations(&[0.5, 0.0, 0.5]);
        assert!((entropy(&half).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(matches!(
            entropy_from_eigenvalues(&[1.1, -0.1]),
            Err(Error::NegativeEigenvalue(_))
        ));
        assert!(entropy_from_eigenvalues(&[1.0 + 5e-7, -5e-7]).is_ok());
    }

    #[test]
    fn purity_reference_values() {
        let pure = DensityMatrix::from_pure(&StateVector::eigenstate(5, 1).unwrap());
        assert!((purity(&pure) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(8)) - 0.125).abs() < 1e-15);
        // Rényi-2 entropy never exceeds the von Neumann entropy
        for seed in 0..50 {
            let rho = random_density(8, seed);
            let p = purity(&rho);
            let s = entropy(&rho).unwrap();
            assert!(p >= (-s).exp() - 1e-12, "seed {seed}: {p} < e^-{s}");
            assert!(p > 0.0 && p <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn autocorrelation_reference_values() {
        let psi = StateVector {
            amplitudes: DVector::from_vec(vec![
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.0, 0.0),
            ]),
            norm_deficit: 0.0,
        };
        let rho = DensityMatrix::from_pure(&psi);
        assert!((autocorrelation(&rho, &psi).unwrap() - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert!((autocorrelation(&mixed, &psi).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }
}
