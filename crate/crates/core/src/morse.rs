//! Bound-state physics of the dimensionless Morse oscillator
//! `H = P² + (s+½)²(e^{-2X} − 2e^{-X})` with `[X, P] = i`.
//!
//! Eigenfunctions are the closed-form Laguerre states in `y = (2s+1)e^{-x}`,
//! evaluated in log space. Position matrix elements come from composite
//! Gauss–Legendre quadrature; momentum matrix elements follow from
//! `P = (i/2)[H, X]`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::QuadSpec;

/// Continuum weight above which a state is rejected as dissociating.
pub const DEFAULT_DISSOCIATION_THRESHOLD: f64 = 1e-3;

/// Entry-wise agreement required between a quadrature and its refinement.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

const DEFAULT_LOWER: f64 = -2.0;
const DEFAULT_UPPER: f64 = 12.0;
const DEFAULT_DENSITY: f64 = 48.0;
const DEFAULT_PANEL_ORDER: usize = 24;
const MAX_UPPER: f64 = 400.0;

/// Anything that supplies a nondegenerate spectrum and a real position
/// matrix in its own eigenbasis. Implemented by [`MorseModel`] and by
/// [`LadderModel`], the equidistant reference system.
pub trait Spectrum {
    fn energies(&self) -> &[f64];
    fn x_matrix(&self) -> &DMatrix<f64>;

    fn dim(&self) -> usize {
        self.energies().len()
    }

    /// Largest Bohr frequency, `E_{N-1} − E_0`.
    fn max_bohr_frequency(&self) -> f64 {
        let e = self.energies();
        e[e.len() - 1] - e[0]
    }
}

/// `s = sqrt(2 m D)/(ħ α) − 1/2`.
pub fn shape_param_from_physical(mass: f64, dissociation_energy: f64, range_param: f64, hbar: f64) -> Result<f64> {
    for (name, v) in [
        ("mass", mass),
        ("dissociation_energy", dissociation_energy),
        ("range_param", range_param),
        ("hbar", hbar),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((2.0 * mass * dissociation_energy).sqrt() / (hbar * range_param) - 0.5)
}

/// Number of normalizable states: all `m >= 0` with `s − m > 0`.
pub fn bound_state_count(s: f64) -> Result<usize> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("shape parameter must be positive, got {s}")));
    }
    Ok(s.ceil() as usize)
}

/// `E_m = −(s − m)²` for every bound state.
pub fn bound_energies(s: f64) -> Result<Vec<f64>> {
    let n = bound_state_count(s)?;
    Ok((0..n).map(|m| -(s - m as f64).powi(2)).collect())
}

/// Classical angular frequency of small oscillations, `2(s + 1/2)`.
pub fn classical_frequency(s: f64) -> f64 {
    2.0 * (s + 0.5)
}

/// Period of small classical oscillations at the bottom of the well.
pub fn small_oscillation_period(s: f64) -> f64 {
    2.0 * PI / classical_frequency(s)
}

/// The Morse potential in dimensionless units.
pub fn potential(s: f64, x: f64) -> f64 {
    let e = (-x).exp();
    (s + 0.5).powi(2) * (e * e - 2.0 * e)
}

/// Evaluates Morse eigenfunctions at arbitrary points without overflow.
#[derive(Debug, Clone)]
pub struct EigenfunctionEvaluator {
    s: f64,
    log_norms: Vec<f64>,
}

impl EigenfunctionEvaluator {
    pub fn new(s: f64) -> Result<Self> {
        let n_bound = bound_state_count(s)?;
        let log_norms = (0..n_bound)
            .map(|n| {
                let alpha = 2.0 * (s - n as f64);
                0.5 * (ln_gamma(n as f64 + 1.0) + alpha.ln() - ln_gamma(2.0 * s - n as f64 + 1.0))
            })
            .collect();
        Ok(Self { s, log_norms })
    }

    pub fn n_bound(&self) -> usize {
        self.log_norms.len()
    }

    /// Unit-normalized `φ_n(x)`, positive as `x → ∞`.
    pub fn eval(&self, n: usize, x: f64) -> Result<f64> {
        if n >= self.n_bound() {
            return Err(Error::Index {
                index: n,
                len: self.n_bound(),
            });
        }
        if !x.is_finite() {
            return Err(Error::Domain(format!("x must be finite, got {x}")));
        }
        Ok(self.eval_unchecked(n, x))
    }

    fn eval_unchecked(&self, n: usize, x: f64) -> f64 {
        let ln_y = (2.0 * self.s + 1.0).ln() - x;
        let y = ln_y.exp();
        let alpha = 2.0 * (self.s - n as f64);
        let (lag, lag_log_scale) = laguerre_scaled(n, alpha, y);
        if lag == 0.0 {
            return 0.0;
        }
        let ln_abs = self.log_norms[n] + (self.s - n as f64) * ln_y - 0.5 * y + lag.abs().ln() + lag_log_scale;
        lag.signum() * ln_abs.exp()
    }

    /// All `φ_n(x)` for `n < n_bound`, written into `out`.
    pub fn eval_all_into(&self, x: f64, out: &mut [f64]) {
        for (n, v) in out.iter_mut().enumerate().take(self.n_bound()) {
            *v = self.eval_unchecked(n, x);
        }
    }

    /// Row-major table `[point][n]` of the first `n_states` eigenfunctions.
    pub fn table(&self, points: &[f64], n_states: usize) -> DMatrix<f64> {
        let n_states = n_states.min(self.n_bound());
        let mut buf = vec![0.0; self.n_bound()];
        let mut table = DMatrix::zeros(points.len(), n_states);
        for (i, &x) in points.iter().enumerate() {
            self.eval_all_into(x, &mut buf);
            for n in 0..n_states {
                table[(i, n)] = buf[n];
            }
        }
        table
    }
}

/// Generalized Laguerre `L_n^α(y)` as `(mantissa, ln scale)`.
fn laguerre_scaled(n: usize, alpha: f64, y: f64) -> (f64, f64) {
    const BIG: f64 = 1e200;
    let mut log_scale = 0.0;
    let mut prev = 1.0;
    if n == 0 {
        return (prev, log_scale);
    }
    let mut cur = 1.0 + alpha - y;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - y) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
        }
    }
    (cur, log_scale)
}

/// A state vector in the bound eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<Complex64>,
    /// Weight lost to the discarded continuum before renormalization.
    pub norm_deficit: f64,
}

impl StateVector {
    /// The eigenstate `|φ_n⟩` of an `dim`-level basis.
    pub fn eigenstate(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Index { index: n, len: dim });
        }
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[n] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            norm_deficit: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Bound-state Morse oscillator with cached operator matrices.
#[derive(Debug, Clone)]
pub struct MorseModel {
    s: f64,
    energies: Vec<f64>,
    x_matrix: DMatrix<f64>,
    p_matrix: DMatrix<Complex64>,
    quad: QuadSpec,
    evaluator: EigenfunctionEvaluator,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `basis[(q, n)] = φ_n(nodes[q])`
    basis: DMatrix<f64>,
}

impl MorseModel {
    /// Builds the model on the default quadrature and verifies convergence
    /// against a rule of doubled density.
    pub fn new(s: f64) -> Result<Self> {
        let quad = default_quadrature(s)?;
        Self::with_quadrature(s, quad)
    }

    pub fn with_quadrature(s: f64, quad: QuadSpec) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::Domain(format!("shape parameter must exceed 1, got {s}")));
        }
        let evaluator = EigenfunctionEvaluator::new(s)?;
        let n = evaluator.n_bound();
        let coarse = position_matrix_on(&evaluator, &quad, n);
        let fine_quad = quad.refined();
        let fine = position_matrix_on(&evaluator, &fine_quad, n);
        let (mut max_change, mut arg) = (0.0f64, (0, 0));
        for i in 0..n {
            for j in 0..n {
                let d = (fine[(i, j)] - coarse[(i, j)]).abs();
                if d > max_change {
                    max_change = d;
                    arg = (i, j);
                }
            }
        }
        if max_change >= QUADRATURE_TOLERANCE {
            return Err(Error::Quadrature {
                max_change,
                row: arg.0,
                col: arg.1,
            });
        }
        Ok(Self::assemble(s, fine, fine_quad, evaluator))
    }

    fn assemble(s: f64, x_matrix: DMatrix<f64>, quad: QuadSpec, evaluator: EigenfunctionEvaluator) -> Self {
        let energies = bound_energies(s).expect("validated shape parameter");
        let n = energies.len();
        let mut x_matrix = x_matrix;
        symmetrize_real(&mut x_matrix);
        let p_matrix = momentum_from_commutator(&energies, &x_matrix);
        let (nodes, weights) = quad.nodes_weights();
        let basis = evaluator.table(&nodes, n);
        Self {
            s,
            energies,
            x_matrix,
            p_matrix,
            quad,
            evaluator,
            nodes,
            weights,
            basis,
        }
    }

    /// Keeps only the lowest `n` bound states.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_bound() {
            return Err(Error::Index {
                index: n,
                len: self.n_bound(),
            });
        }
        let x_matrix = self.x_matrix.view((0, 0), (n, n)).into_owned();
        let energies = self.energies[..n].to_vec();
        let p_matrix = momentum_from_commutator(&energies, &x_matrix);
        let basis = self.basis.columns(0, n).into_owned();
        Ok(Self {
            energies,
            x_matrix,
            p_matrix,
            basis,
            nodes: self.nodes.clone(),
            weights: self.weights.clone(),
            evaluator: self.evaluator.clone(),
            ..*self
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n_bound(&self) -> usize {
        self.energies.len()
    }

    pub fn p_matrix(&self) -> &DMatrix<Complex64> {
        &self.p_matrix
    }

    /// `x_matrix` promoted to complex entries.
    pub fn x_matrix_complex(&self) -> DMatrix<Complex64> {
        self.x_matrix.map(|v| Complex64::new(v, 0.0))
    }

    /// Diagonal `H_S` as a complex matrix.
    pub fn hamiltonian(&self) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.n_bound(),
            self.energies.iter().map(|&e| Complex64::new(e, 0.0)),
        ))
    }

    pub fn quad_spec(&self) -> QuadSpec {
        self.quad
    }

    pub fn omega01(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    pub fn t0(&self) -> f64 {
        small_oscillation_period(self.s)
    }

    pub fn evaluator(&self) -> &EigenfunctionEvaluator {
        &self.evaluator
    }

    pub fn eigenfunction(&self, n: usize, x: f64) -> Result<f64> {
        if n >= self.n_bound() {
            return Err(Error::Index {
                index: n,
                len: self.n_bound(),
            });
        }
        self.evaluator.eval(n, x)
    }

    /// Quadrature nodes and weights underlying the matrices.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    /// Eigenfunction values at the quadrature nodes, `[(node, n)]`.
    pub fn basis_table(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Gram matrix `∫ φ_m φ_n dx` under the model quadrature.
    pub fn overlap_matrix(&self) -> DMatrix<f64> {
        let mut weighted = self.basis.clone();
        for (q, w) in self.weights.iter().enumerate() {
            weighted.row_mut(q).scale_mut(*w);
        }
        self.basis.transpose() * weighted
    }

    /// Displaced and boosted ground state `φ_0(x − x0)e^{i p0 x}` projected
    /// onto the bound states, with the default dissociation threshold.
    pub fn coherent_state(&self, x0: f64, p0: f64) -> Result<StateVector> {
        self.coherent_state_with_threshold(x0, p0, DEFAULT_DISSOCIATION_THRESHOLD)
    }

    pub fn coherent_state_with_threshold(&self, x0: f64, p0: f64, threshold: f64) -> Result<StateVector> {
        if !(x0.is_finite() && p0.is_finite()) {
            return Err(Error::Domain(format!("non-finite phase-space point ({x0}, {p0})")));
        }
        let n = self.n_bound();
        let mut amplitudes = DVector::<Complex64>::zeros(n);
        for (q, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let g = self.evaluator.eval_unchecked(0, x - x0) * w;
            if g == 0.0 {
                continue;
            }
            let phase = Complex64::from_polar(g, p0 * x);
            for k in 0..n {
                amplitudes[k] += phase * self.basis[(q, k)];
            }
        }
        // Packet weight inside the quadrature window; the window holds all
        // bound states, so whatever the projection misses is continuum.
        let packet_norm: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * self.evaluator.eval_unchecked(0, x - x0).powi(2))
            .sum();
        let captured: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        let norm_deficit = (1.0 - captured / packet_norm).max(0.0);
        if norm_deficit >= threshold {
            return Err(Error::Dissociation {
                deficit: norm_deficit,
                threshold,
            });
        }
        amplitudes.unscale_mut(captured.sqrt());
        Ok(StateVector {
            amplitudes,
            norm_deficit,
        })
    }

    /// `ψ(x) = Σ_n c_n φ_n(x)`.
    pub fn wavefunction(&self, state: &StateVector, x: f64) -> Complex64 {
        let mut buf = vec![0.0; self.evaluator.n_bound()];
        self.evaluator.eval_all_into(x, &mut buf);
        state.amplitudes.iter().zip(&buf).map(|(c, phi)| c * phi).sum()
    }

    /// Writes the cache file: magic, `s`, `N`, quadrature spec, then the
    /// position matrix as row-major little-endian `f64`.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&self.s.to_le_bytes())?;
        w.write_all(&(self.n_bound() as u64).to_le_bytes())?;
        w.write_all(&self.quad.lower.to_le_bytes())?;
        w.write_all(&self.quad.upper.to_le_bytes())?;
        w.write_all(&(self.quad.panels as u64).to_le_bytes())?;
        w.write_all(&(self.quad.order as u64).to_le_bytes())?;
        let n = self.n_bound();
        for i in 0..n {
            for j in 0..n {
                w.write_all(&self.x_matrix[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Restores a model from [`write_cache`](Self::write_cache) output
    /// without repeating the convergence check.
    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Config("not a Morse matrix cache".into()));
        }
        let s = read_f64(&mut r)?;
        let n = read_u64(&mut r)? as usize;
        let quad = QuadSpec {
            lower: read_f64(&mut r)?,
            upper: read_f64(&mut r)?,
            panels: read_u64(&mut r)? as usize,
            order: read_u64(&mut r)? as usize,
        };
        let evaluator = EigenfunctionEvaluator::new(s)?;
        if n != evaluator.n_bound() {
            return Err(Error::Dimension {
                expected: evaluator.n_bound(),
                got: n,
            });
        }
        let mut data = vec![0.0; n * n];
        for v in data.iter_mut() {
            *v = read_f64(&mut r)?;
        }
        let x_matrix = DMatrix::from_row_slice(n, n, &data);
        Ok(Self::assemble(s, x_matrix, quad, evaluator))
    }
}

impl Spectrum for MorseModel {
    fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn x_matrix(&self) -> &DMatrix<f64> {
        &self.x_matrix
    }
}

const CACHE_MAGIC: &[u8; 8] = b"MORSEXM1";

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Default rule: `[−2, x_hi]` at 48 nodes per unit length. `x_hi` is at
/// least 12 and is pushed outward until the most weakly bound state has a
/// tail weight below ~1e-14, since that state decays only like
/// `e^{−(s−[s])x}`.
pub fn default_quadrature(s: f64) -> Result<QuadSpec> {
    let n = bound_state_count(s)?;
    let binding = s - (n - 1) as f64;
    let upper = ((2.0 * s + 1.0).ln() + 16.2 / binding).clamp(DEFAULT_UPPER, MAX_UPPER);
    Ok(QuadSpec::with_density(
        DEFAULT_LOWER,
        upper,
        DEFAULT_DENSITY,
        DEFAULT_PANEL_ORDER,
    ))
}

/// `∫ φ_m x φ_n dx` on the given rule.
pub fn position_matrix_on(evaluator: &EigenfunctionEvaluator, quad: &QuadSpec, n: usize) -> DMatrix<f64> {
    let (nodes, weights) = quad.nodes_weights();
    let table = evaluator.table(&nodes, n);
    let mut weighted = table.clone();
    for (q, (x, w)) in nodes.iter().zip(&weights).enumerate() {
        weighted.row_mut(q).scale_mut(x * w);
    }
    table.transpose() * weighted
}

/// `⟨m|P|n⟩ = (i/2)(E_m − E_n)⟨m|X|n⟩`.
pub fn momentum_from_commutator(energies: &[f64], x_matrix: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = energies.len();
    DMatrix::from_fn(n, n, |m, k| {
        Complex64::new(0.0, 0.5 * (energies[m] - energies[k]) * x_matrix[(m, k)])
    })
}

fn symmetrize_real(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Equidistant reference system `E_n = nω` with the ladder position matrix
/// `⟨n−1|X|n⟩ = √n`, i.e. the harmonic limit where `𝒳` is the annihilation
/// operator.
#[derive(Debug, Clone)]
pub struct LadderModel {
    omega: f64,
    energies: Vec<f64>,
    x_matrix: DMatrix<f64>,
}

impl LadderModel {
    pub fn new(dim: usize, omega: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("ladder needs at least 2 levels, got {dim}")));
        }
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        let energies = (0..dim).map(|n| n as f64 * omega).collect();
        let mut x_matrix = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            let v = (n as f64).sqrt();
            x_matrix[(n - 1, n)] = v;
            x_matrix[(n, n - 1)] = v;
        }
        Ok(Self {
            omega,
            energies,
            x_matrix,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Annihilation operator `a`, the upper triangle of `x_matrix`.
    pub fn annihilation(&self) -> DMatrix<Complex64> {
        let n = self.energies.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i < j {
                Complex64::new(self.x_matrix[(i, j)], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Glauber coherent state `|α⟩` truncated to the ladder and renormalized.
    pub fn coherent_state(&self, alpha: Complex64) -> StateVector {
        let n = self.energies.len();
        let mut amplitudes = DVector::zeros(n);
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for k in 0..n {
            if k > 0 {
                c *= alpha / (k as f64).sqrt();
            }
            amplitudes[k] = c;
        }
        let captured: f64 = amplitudes.iter().map(|c: &Complex64| c.norm_sqr()).sum();
        amplitudes.unscale_mut(captured.sqrt());
        StateVector {
            amplitudes,
            norm_deficit: 1.0 - captured,
        }
    }
}

impl Spectrum for LadderModel {
    fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn x_matrix(&self) -> &DMatrix<f64> {
        &self.x_matrix
    }
}
