//! Time evolution at three levels of description:
//!
//! * `Full`: the Schrödinger-picture master equation with the complete
//!   dissipator `−(𝒳†𝒳_e ρ + 𝒳𝒳_a†ρ − 𝒳_a†ρ𝒳 − 𝒳_e ρ𝒳† + h.c.)`;
//! * `Secular`: populations and coherences decoupled (interaction picture),
//!   converted back to the Schrödinger picture at every sample;
//! * `Pauli`: populations only.
//!
//! All levels use classical fixed-step RK4 so runs are bit-reproducible.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{DissipatorOperators, EnvironmentSpec};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::morse::{momentum_from_commutator, Spectrum, StateVector};
use crate::observables::{entropy_from_eigenvalues, expectation, expectation_real, POSITIVITY_TOLERANCE};
use crate::record::TrajectoryRecord;

/// Minimum RK4 steps per period of the fastest Bohr frequency.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;
/// Default RK4 steps per period of the fastest Bohr frequency.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 50.0;
/// Trace error at which a run is declared unstable.
pub const UNSTABLE_TRACE_ERROR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Full,
    Secular,
    Pauli,
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Level::Full => "full",
            Level::Secular => "secular",
            Level::Pauli => "pauli",
        })
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Level::Full),
            "secular" => Ok(Level::Secular),
            "pauli" => Ok(Level::Pauli),
            other => Err(Error::Config(format!("unknown level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_max: f64,
    pub sample_stride: usize,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub level: Level,
}

impl TrajectoryConfig {
    /// Default step and level for `spec`, sampling every `sample_stride` steps.
    pub fn for_spectrum<S: Spectrum + ?Sized>(spec: &S, t_max: f64, sample_stride: usize) -> Self {
        Self {
            dt: default_dt(spec),
            t_max,
            sample_stride,
            integrator: Integrator::Rk4,
            level: Level::Full,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn validate<S: Spectrum + ?Sized>(&self, spec: &S, diss: &DissipatorOperators) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_stride == 0 {
            return Err(Error::Config("sample_stride must be at least 1".into()));
        }
        let bound = match self.level {
            Level::Full => stability_bound(spec),
            // interaction picture: only the decay rates set the step
            Level::Secular | Level::Pauli => {
                let fastest = diss.out_rates().into_iter().fold(0.0, f64::max);
                if fastest > 0.0 {
                    1.0 / fastest
                } else {
                    f64::INFINITY
                }
            }
        };
        if self.dt > bound {
            return Err(Error::Config(format!(
                "dt = {:.4e} exceeds the stability bound {:.4e} for the {} level",
                self.dt, bound, self.level
            )));
        }
        Ok(())
    }
}

/// `2π/(20 ω_max)`
pub fn stability_bound<S: Spectrum + ?Sized>(spec: &S) -> f64 {
    2.0 * PI / (MIN_STEPS_PER_PERIOD * spec.max_bohr_frequency())
}

/// `2π/(50 ω_max)`
pub fn default_dt<S: Spectrum + ?Sized>(spec: &S) -> f64 {
    2.0 * PI / (DEFAULT_STEPS_PER_PERIOD * spec.max_bohr_frequency())
}

/// Initial condition for [`evolve`].
#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl InitialState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            InitialState::Pure(s) => DensityMatrix::from_pure(s),
            InitialState::Mixed(r) => r.clone(),
        }
    }
}

impl From<StateVector> for InitialState {
    fn from(s: StateVector) -> Self {
        InitialState::Pure(s)
    }
}

impl From<DensityMatrix> for InitialState {
    fn from(r: DensityMatrix) -> Self {
        InitialState::Mixed(r)
    }
}

fn check_ops(n: usize, diss: &DissipatorOperators) -> Result<()> {
    if diss.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: diss.dim(),
        });
    }
    Ok(())
}

/// Right-hand side of the full master equation, evaluated directly in
/// complex arithmetic.
pub fn liouvillian_rhs<S: Spectrum + ?Sized>(
    rho: &DensityMatrix,
    spec: &S,
    diss: &DissipatorOperators,
) -> Result<DMatrix<Complex64>> {
    let n = spec.dim();
    rho.check_dim(n)?;
    check_ops(n, diss)?;
    let c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let x = c(&diss.x_lower);
    let xe = c(&diss.xe);
    let xa = c(&diss.xa);
    let r = rho.data();
    let e = spec.energies();
    let commutator = DMatrix::from_fn(n, n, |i, j| Complex64::new(0.0, -(e[i] - e[j])) * r[(i, j)]);
    let inner = x.adjoint() * &xe * r + &x * xa.adjoint() * r - xa.adjoint() * r * &x - &xe * r * x.adjoint();
    Ok(commutator - (&inner + inner.adjoint()))
}

/// Right-hand side of the secular (interaction-picture) equation.
pub fn secular_rhs(rho: &DensityMatrix, diss: &DissipatorOperators) -> Result<DMatrix<Complex64>> {
    let n = diss.dim();
    rho.check_dim(n)?;
    let r = rho.data();
    let out = diss.out_rates();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let gain: f64 = (0..n)
                .filter(|&k| k != i)
                .map(|k| diss.rates[(i, k)] * r[(k, k)].re)
                .sum();
            Complex64::new(gain - out[i] * r[(i, i)].re, 0.0)
        } else {
            -r[(i, j)] * diss.gamma_c[(j, i)]
        }
    }))
}

/// `dP_n/dt = Σ_k (γ_nk P_k − γ_kn P_n)`
pub fn pauli_rhs(populations: &[f64], rates: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = populations.len();
    if rates.nrows() != n || rates.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: rates.nrows(),
        });
    }
    if let Some(p) = populations.iter().find(|&&p| p < 0.0) {
        return Err(Error::Domain(format!("negative population {p}")));
    }
    let mut d = vec![0.0; n];
    pauli_into(populations, rates, &mut d);
    Ok(d)
}

fn pauli_into(p: &[f64], rates: &DMatrix<f64>, d: &mut [f64]) {
    let n = p.len();
    for (i, di) in d.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in 0..n {
            acc += rates[(i, k)] * p[k] - rates[(k, i)] * p[i];
        }
        *di = acc;
    }
}

/// Boltzmann populations at the bath temperature, over the bound states.
pub fn thermal_state<S: Spectrum + ?Sized>(spec: &S, env: &EnvironmentSpec) -> DensityMatrix {
    DensityMatrix::from_populations(&thermal_populations(spec, env))
}

pub fn thermal_populations<S: Spectrum + ?Sized>(spec: &S, env: &EnvironmentSpec) -> Vec<f64> {
    let e = spec.energies();
    let kt = env.thermal_energy();
    let mut p: Vec<f64> = if kt > 0.0 {
        e.iter().map(|&en| (-(en - e[0]) / kt).exp()).collect()
    } else {
        (0..e.len()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
    };
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

/// Fast real-arithmetic form of the full generator acting on `[Re ρ, Im ρ]`.
/// Computes `−i[H,ρ] − (K + K†)` with `K = Aρ − M`, the same expression as
/// [`liouvillian_rhs`], so the dissipative part is Hermitian for any input.
pub(crate) struct FullKernel {
    n: usize,
    bohr: DMatrix<f64>,
    x: DMatrix<f64>,
    xt: DMatrix<f64>,
    xa_t: DMatrix<f64>,
    xe: DMatrix<f64>,
    a: DMatrix<f64>,
    rx: DMatrix<f64>,
    ix: DMatrix<f64>,
    rxt: DMatrix<f64>,
    ixt: DMatrix<f64>,
    re_m: DMatrix<f64>,
    im_m: DMatrix<f64>,
    ar: DMatrix<f64>,
    ai: DMatrix<f64>,
}

impl FullKernel {
    pub(crate) fn new(energies: &[f64], diss: &DissipatorOperators) -> Self {
        let n = energies.len();
        let x = diss.x_lower.clone();
        let xt = x.transpose();
        // 𝒳†𝒳_e + 𝒳𝒳_a†, real since every operator is real
        let a = &xt * &diss.xe + &x * diss.xa.transpose();
        let z = || DMatrix::zeros(n, n);
        Self {
            n,
            bohr: DMatrix::from_fn(n, n, |i, j| energies[i] - energies[j]),
            xa_t: diss.xa.transpose(),
            xe: diss.xe.clone(),
            a,
            x,
            xt,
            rx: z(),
            ix: z(),
            rxt: z(),
            ixt: z(),
            re_m: z(),
            im_m: z(),
            ar: z(),
            ai: z(),
        }
    }

    /// `y = [Re ρ | Im ρ]`, each column-major `n × n`.
    pub(crate) fn apply(&mut self, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        let nn = n * n;
        let r = DMatrixView::from_slice(&y[..nn], n, n);
        let i = DMatrixView::from_slice(&y[nn..], n, n);

        // M = 𝒳_a† ρ 𝒳 + 𝒳_e ρ 𝒳†
        self.rx.gemm(1.0, &r, &self.x, 0.0);
        self.ix.gemm(1.0, &i, &self.x, 0.0);
        self.rxt.gemm(1.0, &r, &self.xt, 0.0);
        self.ixt.gemm(1.0, &i, &self.xt, 0.0);
        self.re_m.gemm(1.0, &self.xa_t, &self.rx, 0.0);
        self.re_m.gemm(1.0, &self.xe, &self.rxt, 1.0);
        self.im_m.gemm(1.0, &self.xa_t, &self.ix, 0.0);
        self.im_m.gemm(1.0, &self.xe, &self.ixt, 1.0);
        // Aρ; its adjoint supplies the h.c. term
        self.ar.gemm(1.0, &self.a, &r, 0.0);
        self.ai.gemm(1.0, &self.a, &i, 0.0);

        let (dr, di) = dy.split_at_mut(nn);
        let mut dr = DMatrixViewMut::from_slice(dr, n, n);
        let mut di = DMatrixViewMut::from_slice(di, n, n);
        for col in 0..n {
            for row in 0..n {
                let w = self.bohr[(row, col)];
                dr[(row, col)] = w * i[(row, col)] - self.ar[(row, col)] - self.ar[(col, row)]
                    + self.re_m[(row, col)]
                    + self.re_m[(col, row)];
                di[(row, col)] = -w * r[(row, col)] - self.ai[(row, col)] + self.ai[(col, row)] + self.im_m[(row, col)]
                    - self.im_m[(col, row)];
            }
        }
    }
}

/// Secular generator on `[Re ρ̃ | Im ρ̃]` in the interaction picture.
struct SecularKernel {
    n: usize,
    rates: DMatrix<f64>,
    decay: DMatrix<f64>,
    pops: Vec<f64>,
    dpops: Vec<f64>,
}

impl SecularKernel {
    fn new(diss: &DissipatorOperators) -> Self {
        let n = diss.dim();
        Self {
            n,
            rates: diss.rates.clone(),
            // element (i, j) of ρ decays with gamma_c[(j, i)]
            decay: diss.gamma_c.transpose(),
            pops: vec![0.0; n],
            dpops: vec![0.0; n],
        }
    }

    fn apply(&mut self, y: &[f64], dy: &mut [f64]) {
        let n = self.n;
        let nn = n * n;
        for k in 0..n {
            self.pops[k] = y[k * n + k];
        }
        pauli_into(&self.pops, &self.rates, &mut self.dpops);
        for col in 0..n {
            for row in 0..n {
                let idx = col * n + row;
                let g = self.decay[(row, col)];
                dy[idx] = -g * y[idx];
                dy[nn + idx] = -g * y[nn + idx];
            }
        }
        for k in 0..n {
            dy[k * n + k] = self.dpops[k];
        }
    }
}

enum Kernel {
    Full(Box<FullKernel>),
    Secular(SecularKernel),
    Pauli(DMatrix<f64>),
}

impl Kernel {
    fn apply(&mut self, y: &[f64], dy: &mut [f64]) {
        match self {
            Kernel::Full(k) => k.apply(y, dy),
            Kernel::Secular(k) => k.apply(y, dy),
            Kernel::Pauli(rates) => pauli_into(y, rates, dy),
        }
    }
}

/// Classical RK4 workspace for a flat real state.
struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            k4: vec![0.0; len],
            tmp: vec![0.0; len],
        }
    }

    fn step(&mut self, kernel: &mut Kernel, y: &mut [f64], dt: f64) {
        kernel.apply(y, &mut self.k1);
        axpy_into(&mut self.tmp, y, 0.5 * dt, &self.k1);
        kernel.apply(&self.tmp, &mut self.k2);
        axpy_into(&mut self.tmp, y, 0.5 * dt, &self.k2);
        kernel.apply(&self.tmp, &mut self.k3);
        axpy_into(&mut self.tmp, y, dt, &self.k3);
        kernel.apply(&self.tmp, &mut self.k4);
        let c = dt / 6.0;
        for (idx, v) in y.iter_mut().enumerate() {
            *v += c * (self.k1[idx] + 2.0 * self.k2[idx] + 2.0 * self.k3[idx] + self.k4[idx]);
        }
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], a: f64, k: &[f64]) {
    for ((o, yv), kv) in out.iter_mut().zip(y).zip(k) {
        *o = yv + a * kv;
    }
}

/// Tolerances checked at every sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub positivity: f64,
    pub unstable_trace: f64,
}

impl Default for Monitor {
    fn default() -> Self {
        Self {
            positivity: POSITIVITY_TOLERANCE,
            unstable_trace: UNSTABLE_TRACE_ERROR,
        }
    }
}

/// Drives one trajectory. Observers see every sampled state after
/// symmetrization; snapshots are taken at the step nearest each requested
/// time.
pub struct Evolution<'a, S: Spectrum + ?Sized> {
    spec: &'a S,
    diss: &'a DissipatorOperators,
    cfg: TrajectoryConfig,
    snapshot_times: Vec<f64>,
    monitor: Monitor,
}

impl<'a, S: Spectrum + ?Sized> Evolution<'a, S> {
    pub fn new(spec: &'a S, diss: &'a DissipatorOperators, cfg: TrajectoryConfig) -> Self {
        Self {
            spec,
            diss,
            cfg,
            snapshot_times: Vec::new(),
            monitor: Monitor::default(),
        }
    }

    pub fn snapshots_at(mut self, times: &[f64]) -> Self {
        self.snapshot_times = times.to_vec();
        self
    }

    pub fn monitor(mut self, monitor: Monitor) -> Self {
        self.monitor = monitor;
        self
    }

    pub fn run(&self, initial: &InitialState) -> Result<TrajectoryRecord> {
        self.run_observed(initial, &mut |_, _| {})
    }

    pub fn run_observed(
        &self,
        initial: &InitialState,
        observer: &mut dyn FnMut(f64, &DensityMatrix),
    ) -> Result<TrajectoryRecord> {
        let spec = self.spec;
        let n = spec.dim();
        check_ops(n, self.diss)?;
        self.cfg.validate(spec, self.diss)?;
        let rho0 = initial.density();
        rho0.check_dim(n)?;
        let tr = rho0.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::Domain(format!("initial state not normalized: trace {tr}")));
        }

        let energies = spec.energies();
        let x_op = spec.x_matrix();
        let p_op = momentum_from_commutator(energies, x_op);
        let level = self.cfg.level;
        let mut kernel = match level {
            Level::Full => Kernel::Full(Box::new(FullKernel::new(energies, self.diss))),
            Level::Secular => Kernel::Secular(SecularKernel::new(self.diss)),
            Level::Pauli => Kernel::Pauli(self.diss.rates.clone()),
        };
        let mut y = match level {
            Level::Full | Level::Secular => split(rho0.data()),
            Level::Pauli => rho0.populations(),
        };
        let mut rk4 = Rk4::new(y.len());
        let dt = self.cfg.dt;
        let steps = self.cfg.n_steps();
        let mut record = TrajectoryRecord::new(level, dt);
        let mut pending: Vec<f64> = self.snapshot_times.clone();
        pending.sort_by(f64::total_cmp);
        let mut pending = pending.into_iter().peekable();
        let mut last_good: Option<(f64, DensityMatrix)> = None;

        for step in 0..=steps {
            let t = step as f64 * dt;
            let sample = step % self.cfg.sample_stride == 0 || step == steps;
            let wants_snapshot = pending.peek().is_some_and(|&ts| ts < t + 0.5 * dt);
            if sample || wants_snapshot {
                let mut rho = to_density(&y, n, level, energies, t);
                if sample {
                    let drift = rho.hermiticity_residual();
                    rho.symmetrize();
                    if level == Level::Full {
                        write_back(&rho, &mut y);
                    }
                    let abort = |cause: Error, last_good: &Option<(f64, DensityMatrix)>| Error::Aborted {
                        cause: Box::new(cause),
                        last_good_time: last_good.as_ref().map_or(f64::NAN, |(t, _)| *t),
                        last_good: last_good.as_ref().map(|(_, r)| Box::new(r.clone())),
                    };
                    let trace_err = (rho.trace().re - 1.0).abs();
                    if !trace_err.is_finite() || trace_err > self.monitor.unstable_trace {
                        return Err(abort(Error::Unstable { time: t, trace_err }, &last_good));
                    }
                    let eig = rho.eigenvalues();
                    let min_eig = eig[0];
                    if min_eig < -self.monitor.positivity {
                        return Err(abort(Error::Positivity { time: t, min_eig }, &last_good));
                    }
                    // negativity was already judged by the monitor
                    let clamped: Vec<f64> = eig.iter().map(|&l| l.max(0.0)).collect();
                    let entropy = entropy_from_eigenvalues(&clamped)?;
                    let purity: f64 = rho.data().iter().map(|c| c.norm_sqr()).sum();
                    let energy: f64 = (0..n).map(|k| energies[k] * rho.data()[(k, k)].re).sum();
                    record.push_sample(
                        t,
                        expectation_real(x_op, &rho)?,
                        expectation(&p_op, &rho)?,
                        energy,
                        entropy,
                        purity,
                        trace_err,
                        min_eig,
                        drift,
                    );
                    observer(t, &rho);
                    last_good = Some((t, rho.clone()));
                }
                while pending.peek().is_some_and(|&ts| ts < t + 0.5 * dt) {
                    let ts = pending.next().expect("peeked");
                    let mut snap = rho.clone();
                    snap.symmetrize();
                    record.snapshots.push((ts, snap));
                }
            }
            if step < steps {
                rk4.step(&mut kernel, &mut y, dt);
            }
        }
        Ok(record)
    }
}

/// One trajectory with default monitoring and no snapshots.
pub fn evolve<S: Spectrum + ?Sized>(
    initial: &InitialState,
    cfg: TrajectoryConfig,
    spec: &S,
    diss: &DissipatorOperators,
) -> Result<TrajectoryRecord> {
    Evolution::new(spec, diss, cfg).run(initial)
}

pub(crate) fn split(rho: &DMatrix<Complex64>) -> Vec<f64> {
    let nn = rho.len();
    let mut y = vec![0.0; 2 * nn];
    for (idx, c) in rho.iter().enumerate() {
        y[idx] = c.re;
        y[nn + idx] = c.im;
    }
    y
}

pub(crate) fn join(y: &[f64], n: usize) -> DMatrix<Complex64> {
    let nn = n * n;
    DMatrix::from_fn(n, n, |i, j| Complex64::new(y[j * n + i], y[nn + j * n + i]))
}

fn write_back(rho: &DensityMatrix, y: &mut [f64]) {
    let nn = rho.data().len();
    for (idx, c) in rho.data().iter().enumerate() {
        y[idx] = c.re;
        y[nn + idx] = c.im;
    }
}

fn to_density(y: &[f64], n: usize, level: Level, energies: &[f64], t: f64) -> DensityMatrix {
    let data = match level {
        Level::Full => join(y, n),
        Level::Secular => {
            let mut m = join(y, n);
            for j in 0..n {
                for i in 0..n {
                    m[(i, j)] *= Complex64::from_polar(1.0, -(energies[i] - energies[j]) * t);
                }
            }
            m
        }
        Level::Pauli => return DensityMatrix::from_populations(y),
    };
    DensityMatrix::from_matrix(data).expect("square by construction")
}
