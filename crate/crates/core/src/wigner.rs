//! Wigner quasiprobability `W(x,p) = (1/2π)∫⟨x−u/2|ρ|x+u/2⟩e^{iup}du` on a
//! rectangular phase-space grid.
//!
//! Eigenfunctions are tabulated once on a position mesh of half the x
//! spacing, so both `x ± u/2` fall on mesh points for every `u = 2kh`. The
//! `u` integral for each row is evaluated directly on the requested momentum
//! grid with a chirp-z transform.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::morse::{MorseModel, Spectrum};

/// Minimum position-density mass that must fall inside the x window.
pub const COVERAGE_THRESHOLD: f64 = 0.999;

const IMAG_RESIDUE: f64 = 1e-8;

/// Inclusive phase-space window and resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Default for WignerWindow {
    fn default() -> Self {
        Self {
            x_min: -1.5,
            x_max: 2.5,
            p_min: -60.0,
            p_max: 60.0,
            nx: 256,
            np: 256,
        }
    }
}

impl WignerWindow {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.np < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2×2 points, got {}×{}",
                self.nx, self.np
            )));
        }
        if !(self.x_max > self.x_min && self.p_max > self.p_min) {
            return Err(Error::Config("window bounds must be increasing".into()));
        }
        if ![self.x_min, self.x_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Config("window bounds must be finite".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }
}

/// `values[(i, j)] = W(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub window: WignerWindow,
    pub values: DMatrix<f64>,
}

impl PhaseSpaceGrid {
    fn cell(&self) -> f64 {
        self.window.dx() * self.window.dp()
    }

    /// `∫∫ W dx dp`
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.cell()
    }

    /// `2π ∫∫ W² dx dp`, equal to `Tr ρ²` for a contained state.
    pub fn purity(&self) -> f64 {
        2.0 * PI * self.values.iter().map(|w| w * w).sum::<f64>() * self.cell()
    }

    /// `∫ W dp` at every `x_i`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.window.dp();
        self.values.row_iter().map(|r| r.sum() * dp).collect()
    }

    /// `∫∫ x W dx dp`
    pub fn mean_x(&self) -> f64 {
        self.position_marginal()
            .iter()
            .enumerate()
            .map(|(i, m)| self.window.x(i) * m)
            .sum::<f64>()
            * self.window.dx()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// Negative volume `∫∫ |min(W, 0)| dx dp`.
    pub fn negativity(&self) -> f64 {
        self.values.iter().map(|&w| (-w).max(0.0)).sum::<f64>() * self.cell()
    }

    /// Local maxima above `min_fraction · max W`, strongest first, as
    /// `(x, p, W)`. Positions are refined by a parabola through the
    /// neighbouring grid values.
    pub fn hills(&self, min_fraction: f64) -> Vec<(f64, f64, f64)> {
        let (nx, np) = self.values.shape();
        let v = &self.values;
        let floor = min_fraction * self.max();
        let mut found = Vec::new();
        for i in 1..nx - 1 {
            for j in 1..np - 1 {
                let w = v[(i, j)];
                if w < floor || w <= 0.0 {
                    continue;
                }
                let peak = (0..3).all(|a| (0..3).all(|b| (a == 1 && b == 1) || v[(i + a - 1, j + b - 1)] < w));
                if peak {
                    let shift = |lo: f64, hi: f64| {
                        let curv = lo - 2.0 * w + hi;
                        if curv < 0.0 {
                            0.5 * (lo - hi) / curv
                        } else {
                            0.0
                        }
                    };
                    let x = self.window.x(i) + shift(v[(i - 1, j)], v[(i + 1, j)]) * self.window.dx();
                    let p = self.window.p(j) + shift(v[(i, j - 1)], v[(i, j + 1)]) * self.window.dp();
                    found.push((x, p, w));
                }
            }
        }
        found.sort_by(|a, b| b.2.total_cmp(&a.2));
        found
    }

    /// Separable Gaussian blur with standard deviations `sigma_x`, `sigma_p`;
    /// the kernel is cut at four deviations and renormalized near the edges.
    /// With the ground-state widths this washes out interference fringes and
    /// leaves the wave-packet hills.
    pub fn smoothed(&self, sigma_x: f64, sigma_p: f64) -> PhaseSpaceGrid {
        let kernel = |sigma: f64, step: f64| -> Vec<f64> {
            let half = ((4.0 * sigma / step).ceil() as usize).max(1);
            (0..=2 * half)
                .map(|k| {
                    let d = (k as f64 - half as f64) * step / sigma;
                    (-0.5 * d * d).exp()
                })
                .collect()
        };
        let blur = |data: &DMatrix<f64>, k: &[f64], along_rows: bool| {
            let half = (k.len() / 2) as isize;
            let (nr, nc) = data.shape();
            DMatrix::from_fn(nr, nc, |i, j| {
                let (mut acc, mut norm) = (0.0, 0.0);
                for (o, w) in k.iter().enumerate() {
                    let d = o as isize - half;
                    let (a, b) = if along_rows {
                        (i as isize + d, j as isize)
                    } else {
                        (i as isize, j as isize + d)
                    };
                    if a >= 0 && b >= 0 && (a as usize) < nr && (b as usize) < nc {
                        acc += w * data[(a as usize, b as usize)];
                        norm += w;
                    }
                }
                acc / norm
            })
        };
        let kx = kernel(sigma_x, self.window.dx());
        let kp = kernel(sigma_p, self.window.dp());
        let values = blur(&blur(&self.values, &kx, true), &kp, false);
        PhaseSpaceGrid {
            window: self.window,
            values,
        }
    }

    /// Fraction of `∫∫W` in each of `sectors` equal angles around `center`,
    /// measured in `(x − x_c, (p − p_c)/p_scale)`. Sector 0 starts at angle
    /// `−π`.
    pub fn sector_masses(&self, center: (f64, f64), p_scale: f64, sectors: usize) -> Vec<f64> {
        let mut mass = vec![0.0; sectors];
        for i in 0..self.window.nx {
            let dx = self.window.x(i) - center.0;
            for j in 0..self.window.np {
                let dp = (self.window.p(j) - center.1) / p_scale;
                let angle = dp.atan2(dx);
                let k = (((angle + PI) / (2.0 * PI)) * sectors as f64) as usize;
                mass[k.min(sectors - 1)] += self.values[(i, j)];
            }
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        mass
    }

    /// 16-bit binary PGM, rows from `p_max` down to `p_min`, columns along
    /// `x`; `w_min` maps to 0 and `w_max` to 65535.
    pub fn write_pgm<W: Write>(&self, mut w: W, w_min: f64, w_max: f64) -> Result<()> {
        if !(w_max > w_min) {
            return Err(Error::Domain(format!("empty colour range [{w_min}, {w_max}]")));
        }
        let (nx, np) = (self.window.nx, self.window.np);
        write!(w, "P5\n{nx} {np}\n65535\n")?;
        let mut row = Vec::with_capacity(2 * nx);
        for j in (0..np).rev() {
            row.clear();
            for i in 0..nx {
                let level = ((self.values[(i, j)] - w_min) / (w_max - w_min)).clamp(0.0, 1.0);
                row.extend_from_slice(&((level * 65535.0).round() as u16).to_be_bytes());
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    pub fn frame_meta(&self, w_min: f64, w_max: f64, t: f64) -> FrameMeta {
        FrameMeta {
            w_min,
            w_max,
            x_min: self.window.x_min,
            x_max: self.window.x_max,
            p_min: self.window.p_min,
            p_max: self.window.p_max,
            t,
        }
    }
}

/// Position and momentum widths `(1/√ω, √ω/2)` of the harmonic ground
/// state at the well bottom, `ω = 2(s + ½)`; the natural smoothing scale for
/// [`PhaseSpaceGrid::smoothed`].
pub fn packet_widths(s: f64) -> (f64, f64) {
    let omega = crate::morse::classical_frequency(s);
    (1.0 / omega.sqrt(), 0.5 * omega.sqrt())
}

/// Sidecar of a PGM frame: the affine grey-level mapping and the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub w_min: f64,
    pub w_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub t: f64,
}

/// Reusable transform for one model and window.
pub struct WignerTransform {
    window: WignerWindow,
    /// `φ_n` on the half-spacing mesh, `[point][n]`.
    table: DMatrix<f64>,
    half_step: f64,
    chirp: ChirpZ,
}

impl WignerTransform {
    pub fn new(model: &MorseModel, window: WignerWindow) -> Result<Self> {
        window.validate()?;
        let points = 2 * (window.nx - 1) + 1;
        let half_step = 0.5 * window.dx();
        let mesh: Vec<f64> = (0..points).map(|k| window.x_min + k as f64 * half_step).collect();
        let table = model.evaluator().table(&mesh, model.dim());
        let du = 2.0 * half_step;
        // u_k = k du for k in [−K, K]; K reaches the far edge from the centre row
        let k_max = window.nx - 1;
        let chirp = ChirpZ::new(2 * k_max + 1, window.np, du * window.dp(), du * window.p_min);
        Ok(Self {
            window,
            table,
            half_step,
            chirp,
        })
    }

    pub fn window(&self) -> &WignerWindow {
        &self.window
    }

    /// Position density `⟨z|ρ|z⟩` on the half-spacing mesh.
    fn coordinate_matrices(&self, rho: &DensityMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        rho.check_dim(self.table.ncols())?;
        let re = rho.data().map(|c| c.re);
        let im = rho.data().map(|c| c.im);
        let phi = &self.table;
        let phi_t = phi.transpose();
        Ok((phi * re * &phi_t, phi * im * &phi_t))
    }

    /// Fraction of the position density inside `[x_min, x_max]`.
    pub fn coverage(&self, rho: &DensityMatrix) -> Result<f64> {
        let (re, _) = self.coordinate_matrices(rho)?;
        Ok(trapezoid(re.diagonal().as_slice(), self.half_step))
    }

    pub fn transform(&self, rho: &DensityMatrix) -> Result<PhaseSpaceGrid> {
        let (re, im) = self.coordinate_matrices(rho)?;
        let mass = trapezoid(re.diagonal().as_slice(), self.half_step);
        if mass < COVERAGE_THRESHOLD {
            return Err(Error::Domain(format!(
                "Wigner window [{}, {}] holds only {mass:.6} of the position density",
                self.window.x_min, self.window.x_max
            )));
        }
        let (nx, np) = (self.window.nx, self.window.np);
        let k_max = nx - 1;
        let du = 2.0 * self.half_step;
        let mut values = DMatrix::zeros(nx, np);
        let mut input = vec![Complex64::new(0.0, 0.0); 2 * k_max + 1];
        let mut scratch = self.chirp.scratch();
        let mut out = vec![Complex64::new(0.0, 0.0); np];
        for i in 0..nx {
            let centre = 2 * i;
            let reach = centre.min(2 * k_max - centre);
            input.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            // f(x, u) = ⟨x − u/2|ρ|x + u/2⟩ at input index k + K
            for k in 0..=reach {
                let (a, b) = (centre - k, centre + k);
                input[k_max + k] = Complex64::new(re[(a, b)], im[(a, b)]);
                input[k_max - k] = Complex64::new(re[(b, a)], im[(b, a)]);
            }
            self.chirp.apply(&input, &mut out, &mut scratch);
            for (j, s) in out.iter().enumerate() {
                // undo the k → k + K index shift
                let phase = Complex64::from_polar(1.0, -(k_max as f64) * du * self.window.p(j));
                let v = s * phase * (du / (2.0 * PI));
                debug_assert!(v.im.abs() < IMAG_RESIDUE, "imaginary residue {} in W", v.im);
                values[(i, j)] = v.re;
            }
        }
        Ok(PhaseSpaceGrid {
            window: self.window,
            values,
        })
    }
}

/// One-shot convenience wrapper around [`WignerTransform`].
pub fn wigner_transform(rho: &DensityMatrix, model: &MorseModel, window: WignerWindow) -> Result<PhaseSpaceGrid> {
    WignerTransform::new(model, window)?.transform(rho)
}

/// `∫∫ |min(W, 0)| dx dp`
pub fn negativity(grid: &PhaseSpaceGrid) -> f64 {
    grid.negativity()
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Bluestein evaluation of `X_j = Σ_l a_l e^{i(θ l + φ l j)}` for
/// `j < outputs`.
struct ChirpZ {
    inputs: usize,
    outputs: usize,
    len: usize,
    /// `e^{iθ l} e^{iφ l²/2}`
    pre: Vec<Complex64>,
    /// `e^{iφ j²/2} / len`
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChirpZ {
    fn new(inputs: usize, outputs: usize, phi: f64, theta: f64) -> Self {
        let len = (inputs + outputs - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let half_sq = |m: usize| {
            let m = m as f64;
            0.5 * phi * m * m
        };
        let pre = (0..inputs)
            .map(|l| Complex64::from_polar(1.0, theta * l as f64 + half_sq(l)))
            .collect();
        let post = (0..outputs)
            .map(|j| Complex64::from_polar(1.0 / len as f64, half_sq(j)))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for (m, k) in kernel.iter_mut().enumerate().take(outputs) {
            *k = Complex64::from_polar(1.0, -half_sq(m));
        }
        for m in 1..inputs {
            kernel[len - m] = Complex64::from_polar(1.0, -half_sq(m));
        }
        forward.process(&mut kernel);
        Self {
            inputs,
            outputs,
            len,
            pre,
            post,
            kernel,
            forward,
            inverse,
        }
    }

    fn scratch(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.len]
    }

    fn apply(&self, input: &[Complex64], out: &mut [Complex64], buf: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.inputs);
        debug_assert_eq!(out.len(), self.outputs);
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for ((b, a), p) in buf.iter_mut().zip(input).zip(&self.pre) {
            *b = a * p;
        }
        self.forward.process(buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inverse.process(buf);
        for ((o, b), p) in out.iter_mut().zip(buf.iter()).zip(&self.post) {
            *o = b * p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morse::StateVector;

    #[test]
    fn chirp_z_matches_direct_sum() {
        let (phi, theta) = (0.0137, -0.91);
        let cz = ChirpZ::new(37, 23, phi, theta);
        let input: Vec<Complex64> = (0..37)
            .map(|l| Complex64::new((l as f64 * 0.7).sin(), (l as f64 * 0.3).cos()))
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); 23];
        cz.apply(&input, &mut out, &mut cz.scratch());
        for (j, o) in out.iter().enumerate() {
            let direct: Complex64 = input
                .iter()
                .enumerate()
                .map(|(l, a)| a * Complex64::from_polar(1.0, theta * l as f64 + phi * (l * j) as f64))
                .sum();
            assert!((o - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_state_is_a_single_positive_hill() {
        let m = MorseModel::new(54.54).unwrap();
        let rho = DensityMatrix::from_pure(&StateVector::eigenstate(m.n_bound(), 0).unwrap());
        let w = wigner_transform(&rho, &m, WignerWindow::default()).unwrap();
        assert!((w.integral() - 1.0).abs() < 2e-2);
        assert!(w.min() > -1e-3);
        assert!(w.max() <= 1.0 / PI + 5e-2);
        let hills = w.hills(0.1);
        assert_eq!(hills.len(), 1);
        let x0 = m.x_matrix()[(0, 0)];
        assert!((hills[0].0 - x0).abs() < 2e-2 && hills[0].1.abs() < 1.0);
        assert!(w.negativity() < 1e-3);
        assert!((w.purity() - 1.0).abs() < 2e-2);
    }

    #[test]
    fn window_must_cover_the_state() {
        let m = MorseModel::new(54.54).unwrap();
        let rho = DensityMatrix::from_pure(&StateVector::eigenstate(m.n_bound(), 0).unwrap());
        let narrow = WignerWindow {
            x_min: 0.2,
            x_max: 1.0,
            nx: 32,
            np: 32,
            ..WignerWindow::default()
        };
        assert!(matches!(wigner_transform(&rho, &m, narrow), Err(Error::Domain(_))));
        let bad = WignerWindow {
            nx: 1,
            ..WignerWindow::default()
        };
        assert!(WignerTransform::new(&m, bad).is_err());
    }

    #[test]
    fn pgm_layout() {
        let window = WignerWindow {
            nx: 3,
            np: 2,
            ..WignerWindow::default()
        };
        let grid = PhaseSpaceGrid {
            window,
            values: DMatrix::from_row_slice(3, 2, &[0.0, 1.0, -1.0, 0.5, 1.0, 0.0]),
        };
        let mut buf = Vec::new();
        grid.write_pgm(&mut buf, -1.0, 1.0).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        let px: Vec<u16> = buf[header.len()..]
            .chunks(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        // top row is p_max
        assert_eq!(px, vec![65535, 49151, 32768, 32768, 0, 65535]);
        assert!(grid.write_pgm(Vec::new(), 1.0, 1.0).is_err());
    }

    #[test]
    fn sector_masses_sum_to_one() {
        let window = WignerWindow {
            nx: 8,
            np: 6,
            x_min: -1.0,
            x_max: 1.0,
            p_min: -1.0,
            p_max: 1.0,
        };
        let grid = PhaseSpaceGrid {
            window,
            values: DMatrix::from_element(8, 6, 1.0),
        };
        // the scale keeps every grid point off the sector boundaries
        let m = grid.sector_masses((0.0, 0.0), 1.1, 8);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // point symmetry of the grid pairs opposite sectors
        assert!((0..4).all(|k| (m[k] - m[k + 4]).abs() < 1e-14));
        assert!(m.iter().all(|&v| v > 0.05));
    }
}
