//! Thermal-oscillator environment: Bose occupations, emission/absorption
//! operators with an ω³ spectral weight, and the resulting transition rates.
//!
//! Triangularity convention: `⟨φ_m|𝒳|φ_n⟩` is nonzero only for `m < n`,
//! so `𝒳` lowers the energy.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morse::Spectrum;

/// Bath temperature (in units of `ħω_01/k`) and overall coupling `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub temperature: f64,
    pub lambda: f64,
    pub omega01: f64,
}

impl EnvironmentSpec {
    pub fn new(temperature: f64, lambda: f64, omega01: f64) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::Domain(format!("temperature must be >= 0, got {temperature}")));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
        }
        if !(omega01 > 0.0) {
            return Err(Error::Domain(format!("omega01 must be positive, got {omega01}")));
        }
        Ok(Self {
            temperature,
            lambda,
            omega01,
        })
    }

    pub fn for_spectrum<S: Spectrum + ?Sized>(spec: &S, temperature: f64, lambda: f64) -> Result<Self> {
        let e = spec.energies();
        Self::new(temperature, lambda, e[1] - e[0])
    }

    /// Thermal energy `kT` in the dimensionless energy unit.
    pub fn thermal_energy(&self) -> f64 {
        self.temperature * self.omega01
    }
}

/// Mean occupation of a bath mode of frequency `omega`; zero at `T = 0`
/// and whenever the Boltzmann factor underflows.
pub fn bose_occupation(omega: f64, env: &EnvironmentSpec) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("mode frequency must be positive, got {omega}")));
    }
    Ok(occupation(omega, env.thermal_energy()))
}

fn occupation(omega: f64, kt: f64) -> f64 {
    if kt <= 0.0 {
        return 0.0;
    }
    1.0 / (omega / kt).exp_m1()
}

/// Operators entering the dissipator, and the rates derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorOperators {
    /// Strict upper triangle of the position matrix.
    pub x_lower: DMatrix<f64>,
    /// Emission-weighted `𝒳_e`.
    pub xe: DMatrix<f64>,
    /// Absorption-weighted `𝒳_a`.
    pub xa: DMatrix<f64>,
    /// `rates[(i, k)]`: probability per unit time of `k → i`.
    pub rates: DMatrix<f64>,
    /// Coherence decay rates, `gamma_c[(j, i)]` for the element `ρ_ij`.
    pub gamma_c: DMatrix<f64>,
}

impl DissipatorOperators {
    pub fn dim(&self) -> usize {
        self.x_lower.nrows()
    }

    /// Total rate out of each level, `Σ_k γ_ki`.
    pub fn out_rates(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rates.column(i).sum()).collect()
    }

    /// The `count` largest rates as `(to, from, rate)`, descending; ties are
    /// broken by index so the order is deterministic.
    pub fn largest_rates(&self, count: usize) -> Vec<(usize, usize, f64)> {
        let n = self.dim();
        let mut all: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .filter(|&(i, k)| i != k)
            .map(|(i, k)| (i, k, self.rates[(i, k)]))
            .collect();
        all.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        all.truncate(count);
        all
    }
}

/// Builds `𝒳`, `𝒳_e`, `𝒳_a`, the rate matrix and the coherence decay rates.
///
/// Only energy differences enter, so the result is invariant under a global
/// shift of the spectrum.
pub fn build_dissipator<S: Spectrum + ?Sized>(spec: &S, env: &EnvironmentSpec) -> DissipatorOperators {
    let e = spec.energies();
    let x = spec.x_matrix();
    let n = e.len();
    let kt = env.thermal_energy();
    let mut x_lower = DMatrix::zeros(n, n);
    let mut xe = DMatrix::zeros(n, n);
    let mut xa = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in (m + 1)..n {
            let omega = (e[k] - e[m]).abs();
            let nbar = occupation(omega, kt);
            let weight = env.lambda * x[(m, k)] * omega.powi(3);
            x_lower[(m, k)] = x[(m, k)];
            xe[(m, k)] = weight * (nbar + 1.0);
            xa[(m, k)] = weight * nbar;
        }
    }
    let mut rates = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            rates[(i, k)] = if i < k {
                2.0 * xe[(i, k)] * x_lower[(i, k)]
            } else if i > k {
                2.0 * xa[(k, i)] * x_lower[(k, i)]
            } else {
                0.0
            };
        }
    }
    let out: Vec<f64> = (0..n).map(|i| rates.column(i).sum()).collect();
    let gamma_c = DMatrix::from_fn(n, n, |j, i| 0.5 * (out[i] + out[j]));
    DissipatorOperators {
        x_lower,
        xe,
        xa,
        rates,
        gamma_c,
    }
}

/// `λ` for which `ω_01/γ_01 = ratio` at zero temperature.
pub fn calibrate_lambda<S: Spectrum + ?Sized>(spec: &S, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Domain(format!("ratio must be positive, got {ratio}")));
    }
    let e = spec.energies();
    let omega01 = e[1] - e[0];
    let x01 = spec.x_matrix()[(0, 1)];
    if x01.abs() < 1e-300 || !x01.is_finite() {
        return Err(Error::DegenerateCoupling(x01.abs()));
    }
    Ok(1.0 / (2.0 * ratio * x01 * x01 * omega01 * omega01))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morse::LadderModel;
    use approx::assert_relative_eq;

    struct Shifted<'a>(&'a LadderModel, Vec<f64>);

    impl Spectrum for Shifted<'_> {
        fn energies(&self) -> &[f64] {
            &self.1
        }
        fn x_matrix(&self) -> &DMatrix<f64> {
            self.0.x_matrix()
        }
    }

    #[test]
    fn occupation_limits() {
        let cold = EnvironmentSpec::new(0.0, 1.0, 108.08).unwrap();
        assert_eq!(bose_occupation(108.08, &cold).unwrap(), 0.0);
        let warm = EnvironmentSpec::new(1.0, 1.0, 108.08).unwrap();
        assert_relative_eq!(
            bose_occupation(108.08, &warm).unwrap(),
            1.0 / (std::f64::consts::E - 1.0),
            epsilon = 1e-14
        );
        assert!((bose_occupation(108.08, &warm).unwrap() - 0.58198).abs() < 1e-5);
        let mut last = f64::INFINITY;
        for k in 1..200 {
            let v = bose_occupation(k as f64 * 10.0, &warm).unwrap();
            assert!(v < last);
            last = v;
        }
        // far beyond the exponent range: 0, not an error
        assert_eq!(bose_occupation(1e6, &warm).unwrap(), 0.0);
        assert!(bose_occupation(0.0, &warm).is_err());
        assert!(EnvironmentSpec::new(-1.0, 1.0, 1.0).is_err());
        assert!(EnvironmentSpec::new(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn decoupled_limit_is_zero() {
        let l = LadderModel::new(6, 1.0).unwrap();
        let env = EnvironmentSpec::for_spectrum(&l, 2.0, 0.0).unwrap();
        let d = build_dissipator(&l, &env);
        assert!(d.xe.iter().chain(d.xa.iter()).chain(d.rates.iter()).all(|&v| v == 0.0));
        assert!(d.gamma_c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_limit_is_proportional_to_ladder() {
        let omega = 1.3;
        let l = LadderModel::new(12, omega).unwrap();
        let env = EnvironmentSpec::for_spectrum(&l, 0.8, 0.05).unwrap();
        let d = build_dissipator(&l, &env);
        let nbar = bose_occupation(omega, &env).unwrap();
        let ke = env.lambda * omega.powi(3) * (nbar + 1.0);
        let ka = env.lambda * omega.powi(3) * nbar;
        for i in 0..12 {
            for j in 0..12 {
                assert!((d.xe[(i, j)] - ke * d.x_lower[(i, j)]).abs() < 1e-12);
                assert!((d.xa[(i, j)] - ka * d.x_lower[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rates_ignore_global_energy_shift() {
        let l = LadderModel::new(8, 2.0).unwrap();
        let shifted = Shifted(&l, l.energies().iter().map(|e| e - 1234.5).collect());
        let env = EnvironmentSpec::for_spectrum(&l, 1.5, 0.01).unwrap();
        let a = build_dissipator(&l, &env);
        let b = build_dissipator(&shifted, &env);
        assert!((a.rates - b.rates).abs().max() < 1e-14);
    }

    #[test]
    fn largest_rates_are_sorted() {
        let l = LadderModel::new(8, 2.0).unwrap();
        let env = EnvironmentSpec::for_spectrum(&l, 1.5, 0.01).unwrap();
        let d = build_dissipator(&l, &env);
        let top = d.largest_rates(10);
        assert_eq!(top.len(), 10);
        assert!(top.windows(2).all(|w| w[0].2 >= w[1].2));
        // emission out of the top level dominates
        assert_eq!((top[0].0, top[0].1), (6, 7));
    }

    #[test]
    fn calibration_rejects_bad_input() {
        let l = LadderModel::new(4, 1.0).unwrap();
        assert!(calibrate_lambda(&l, 0.0).is_err());
        assert!(calibrate_lambda(&l, -3.0).is_err());
        struct Zero(Vec<f64>, DMatrix<f64>);
        impl Spectrum for Zero {
            fn energies(&self) -> &[f64] {
                &self.0
            }
            fn x_matrix(&self) -> &DMatrix<f64> {
                &self.1
            }
        }
        let z = Zero(vec![0.0, 1.0, 2.0], DMatrix::zeros(3, 3));
        assert!(matches!(calibrate_lambda(&z, 10.0), Err(Error::DegenerateCoupling(_))));
    }
}
