//! Post-processing of trajectories: decoherence time, its exponential law,
//! revivals and state distances.

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Entropy,
    Purity,
}

/// Two-segment fit of a mixedness series; the breakpoint is `t_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceFit {
    pub t_d: f64,
    pub pre_slope: f64,
    pub post_slope: f64,
    /// RMS of the fit residuals.
    pub residual: f64,
    pub source: SeriesKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Required `|pre_slope| / |post_slope|`.
    pub slope_ratio: f64,
    /// Centered moving-average width in samples; 1 disables smoothing.
    pub smoothing_window: usize,
    pub min_samples: usize,
    /// Allowed relative gap between the entropy and purity breakpoints.
    pub agreement: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            slope_ratio: 3.0,
            smoothing_window: 5,
            min_samples: 50,
            agreement: 0.15,
        }
    }
}

/// Entropy-based fit with its purity cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceEstimate {
    pub entropy: DecoherenceFit,
    pub purity: DecoherenceFit,
}

impl DecoherenceEstimate {
    pub fn t_d(&self) -> f64 {
        self.entropy.t_d
    }

    /// `|t_S − t_P| / t_S`
    pub fn disagreement(&self) -> f64 {
        (self.entropy.t_d - self.purity.t_d).abs() / self.entropy.t_d
    }
}

/// JSON fit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub t_d: f64,
    pub pre_slope: f64,
    pub post_slope: f64,
    pub residual: f64,
    pub method: String,
    pub config_hash: String,
}

impl FitReport {
    pub fn new(fit: &DecoherenceFit, options: &FitOptions, config_hash: &str) -> Self {
        let series = match fit.source {
            SeriesKind::Entropy => "entropy",
            SeriesKind::Purity => "purity",
        };
        Self {
            t_d: fit.t_d,
            pre_slope: fit.pre_slope,
            post_slope: fit.post_slope,
            residual: fit.residual,
            method: format!(
                "two-segment continuous piecewise-linear least squares on {series}; moving average {}; slope ratio {}",
                options.smoothing_window, options.slope_ratio
            ),
            config_hash: config_hash.to_owned(),
        }
    }
}

/// Centered moving average; the window shrinks symmetrically at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let reach = half.min(i).min(n - 1 - i);
            let slice = &values[i - reach..=i + reach];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

struct Hinge {
    tau: f64,
    intercept: f64,
    pre: f64,
    kink: f64,
    sse: f64,
}

/// Least squares for `y = a + b t + c (t − τ)₊` at fixed `τ`.
fn hinge_fit(t: &[f64], y: &[f64], tau: f64) -> Option<Hinge> {
    let mut m = [[0.0f64; 3]; 3];
    let mut r = [0.0f64; 3];
    for (&ti, &yi) in t.iter().zip(y) {
        let basis = [1.0, ti, (ti - tau).max(0.0)];
        for a in 0..3 {
            r[a] += basis[a] * yi;
            for b in 0..3 {
                m[a][b] += basis[a] * basis[b];
            }
        }
    }
    let mat = nalgebra::Matrix3::from_fn(|a, b| m[a][b]);
    let coef = mat.lu().solve(&nalgebra::Vector3::from(r))?;
    let sse = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let f = coef[0] + coef[1] * ti + coef[2] * (ti - tau).max(0.0);
            (yi - f) * (yi - f)
        })
        .sum();
    Some(Hinge {
        tau,
        intercept: coef[0],
        pre: coef[1],
        kink: coef[2],
        sse,
    })
}

/// Breakpoint of a single series: grid search over the sample times, then
/// golden-section refinement between the neighbouring samples.
pub fn fit_breakpoint(
    times: &[f64],
    values: &[f64],
    source: SeriesKind,
    options: &FitOptions,
) -> Result<DecoherenceFit> {
    if times.len() != values.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            got: values.len(),
        });
    }
    let n = times.len();
    if n < options.min_samples.max(8) {
        return Err(Error::Inconclusive(format!(
            "{n} samples, at least {} needed",
            options.min_samples.max(8)
        )));
    }
    let y = moving_average(values, options.smoothing_window);
    let edge = 3;
    let mut best: Option<(usize, Hinge)> = None;
    for b in edge..n - edge {
        if let Some(h) = hinge_fit(times, &y, times[b]) {
            if best.as_ref().is_none_or(|(_, cur)| h.sse < cur.sse) {
                best = Some((b, h));
            }
        }
    }
    let (b, mut fit) = best.ok_or_else(|| Error::Inconclusive("singular breakpoint fits".into()))?;
    let (mut lo, mut hi) = (times[b - 1], times[b + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let c = lo + g * (hi - lo);
        match (hinge_fit(times, &y, a), hinge_fit(times, &y, c)) {
            (Some(fa), Some(fc)) => {
                if fa.sse < fc.sse {
                    hi = c;
                    if fa.sse < fit.sse {
                        fit = fa;
                    }
                } else {
                    lo = a;
                    if fc.sse < fit.sse {
                        fit = fc;
                    }
                }
            }
            _ => break,
        }
    }
    let _ = fit.intercept;
    let pre = fit.pre;
    let post = fit.pre + fit.kink;
    if !(pre.abs() > options.slope_ratio * post.abs()) {
        return Err(Error::Inconclusive(format!(
            "{source:?} slopes {pre:.4e} → {post:.4e} do not separate by a factor {}",
            options.slope_ratio
        )));
    }
    Ok(DecoherenceFit {
        t_d: fit.tau,
        pre_slope: pre,
        post_slope: post,
        residual: (fit.sse / n as f64).sqrt(),
        source,
    })
}

/// Decoherence time from the entropy series, cross-checked against purity.
pub fn detect_decoherence_time(
    times: &[f64],
    entropy: &[f64],
    purity: &[f64],
    options: &FitOptions,
) -> Result<DecoherenceEstimate> {
    let estimate = DecoherenceEstimate {
        entropy: fit_breakpoint(times, entropy, SeriesKind::Entropy, options)?,
        purity: fit_breakpoint(times, purity, SeriesKind::Purity, options)?,
    };
    if estimate.disagreement() > options.agreement {
        return Err(Error::Inconclusive(format!(
            "entropy t_d {:.4e} and purity t_d {:.4e} differ by {:.1}%",
            estimate.entropy.t_d,
            estimate.purity.t_d,
            100.0 * estimate.disagreement()
        )));
    }
    Ok(estimate)
}

/// `t_d(x0) = t_d0 · exp(−κ x0)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLaw {
    pub t_d0: f64,
    pub kappa: f64,
    pub x0_range: (f64, f64),
    pub r_squared: f64,
}

impl ExponentialLaw {
    pub fn eval(&self, x0: f64) -> f64 {
        self.t_d0 * (-self.kappa * x0).exp()
    }
}

/// Linear least squares of `ln t_d` against `x0`.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExponentialLaw> {
    if points.len() < 4 {
        return Err(Error::Inconclusive(format!(
            "{} points, at least 4 needed",
            points.len()
        )));
    }
    if let Some(&(x, t)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Domain(format!("nonpositive t_d {t} at x0 = {x}")));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x0 values coincide".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1.ln() - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1.ln() - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExponentialLaw {
        t_d0: intercept.exp(),
        kappa: -slope,
        x0_range: (lo, hi),
        r_squared,
    })
}

/// Running maximum over a centered window of `half_width` samples each side.
pub fn running_max(values: &[f64], half_width: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(n.saturating_sub(1));
            values[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Half the running peak-to-peak range, the local oscillation amplitude.
pub fn running_amplitude(values: &[f64], half_width: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(n.saturating_sub(1));
            let w = &values[lo..=hi];
            let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = w.iter().copied().fold(f64::INFINITY, f64::min);
            0.5 * (max - min)
        })
        .collect()
}

/// Interior local maxima whose topographic prominence is at least
/// `prominence`. Flat tops report their middle sample.
pub fn find_peaks(values: &[f64], prominence: f64) -> Vec<usize> {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                peaks.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks.retain(|&p| peak_prominence(values, p) >= prominence);
    peaks
}

fn peak_prominence(values: &[f64], p: usize) -> f64 {
    let h = values[p];
    let mut left_min = h;
    for k in (0..p).rev() {
        if values[k] > h {
            break;
        }
        left_min = left_min.min(values[k]);
    }
    let mut right_min = h;
    for &v in &values[p + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RevivalKind {
    Quarter,
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub time: f64,
    pub height: f64,
    pub kind: RevivalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalOptions {
    pub prominence: f64,
    /// Width of the running maximum that strips the orbital carrier; `None`
    /// searches the raw series.
    pub carrier_period: Option<f64>,
    /// Spectral estimate of the full revival time; infinite for an
    /// equidistant spectrum, where every return is a full revival.
    pub t_rev: f64,
    /// Classification window as a fraction of `t_rev`.
    pub tolerance: f64,
}

impl Default for RevivalOptions {
    fn default() -> Self {
        Self {
            prominence: 0.1,
            carrier_period: None,
            t_rev: f64::INFINITY,
            tolerance: 1.0 / 16.0,
        }
    }
}

/// `4π / |E''|` at the level nearest `mean_level`; infinite when the second
/// difference vanishes.
pub fn spectral_revival_time(energies: &[f64], mean_level: f64) -> f64 {
    let n = energies.len();
    if n < 3 {
        return f64::INFINITY;
    }
    let k = (mean_level.round() as usize).clamp(1, n - 2);
    let curvature = energies[k + 1] - 2.0 * energies[k] + energies[k - 1];
    if curvature.abs() < 1e-12 * energies[k].abs().max(1.0) {
        f64::INFINITY
    } else {
        4.0 * std::f64::consts::PI / curvature.abs()
    }
}

fn classify(t: f64, t_rev: f64, tolerance: f64) -> Option<(RevivalKind, f64)> {
    if !t_rev.is_finite() {
        return Some((RevivalKind::Full, 1.0));
    }
    let quarters = (4.0 * t / t_rev).round();
    if quarters < 1.0 || (t - quarters * t_rev / 4.0).abs() > tolerance * t_rev {
        return None;
    }
    let kind = match quarters as i64 % 4 {
        0 => RevivalKind::Full,
        2 => RevivalKind::Half,
        _ => RevivalKind::Quarter,
    };
    Some((kind, quarters / 4.0))
}

/// Revival peaks of an autocorrelation series. The spectral `t_rev` is
/// refined by least squares over the half and full revivals found, and the
/// peaks are then classified by the nearest quarter of the fitted value.
pub fn detect_revivals(times: &[f64], values: &[f64], options: &RevivalOptions) -> Result<Vec<Revival>> {
    if times.len() != values.len() {
        return Err(Error::Dimension {
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.len() < 3 {
        return Ok(Vec::new());
    }
    let series = match options.carrier_period {
        Some(period) => {
            let step = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
            running_max(values, ((0.5 * period / step).ceil() as usize).max(1))
        }
        None => values.to_vec(),
    };
    let peaks = find_peaks(&series, options.prominence);
    let mut t_rev = options.t_rev;
    if t_rev.is_finite() {
        let (mut num, mut den) = (0.0, 0.0);
        for &p in &peaks {
            if let Some((RevivalKind::Full | RevivalKind::Half, q)) = classify(times[p], t_rev, options.tolerance) {
                num += q * times[p];
                den += q * q;
            }
        }
        if den > 0.0 {
            t_rev = num / den;
        }
    }
    Ok(peaks
        .into_iter()
        .filter_map(|p| {
            classify(times[p], t_rev, options.tolerance).map(|(kind, _)| Revival {
                time: times[p],
                height: values[p].max(series[p]),
                kind,
            })
        })
        .collect())
}

/// `½ Σ |λ_k(a − b)|`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    b.check_dim(a.dim())?;
    let diff = DensityMatrix::from_matrix(a.data() - b.data())?;
    Ok(0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
}
