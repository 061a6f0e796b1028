//! Reduced density matrix of the vibrational mode in the bound eigenbasis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::morse::StateVector;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::Dimension {
                expected: data.nrows(),
                got: data.ncols(),
            });
        }
        Ok(Self { data })
    }

    /// `|ψ⟩⟨ψ|`
    pub fn from_pure(state: &StateVector) -> Self {
        let a = &state.amplitudes;
        Self { data: a * a.adjoint() }
    }

    pub fn from_populations(populations: &[f64]) -> Self {
        let diag = DVector::from_iterator(populations.len(), populations.iter().map(|&p| Complex64::new(p, 0.0)));
        Self {
            data: DMatrix::from_diagonal(&diag),
        }
    }

    /// `I/N`
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_populations(&vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)].re).collect()
    }

    /// `max |ρ − ρ†| / 2`
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        0.5 * worst
    }

    /// `ρ ← (ρ + ρ†)/2`
    pub fn symmetrize(&mut self) {
        let n = self.dim();
        for i in 0..n {
            self.data[(i, i)].im = 0.0;
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[(i, j)] + self.data[(j, i)].conj());
                self.data[(i, j)] = v;
                self.data[(j, i)] = v.conj();
            }
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.data + self.data.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::Dimension {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}
