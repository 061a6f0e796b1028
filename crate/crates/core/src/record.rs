//! Sampled trajectories and their on-disk formats.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::dynamics::Level;
use crate::error::Result;

/// Version tag written in the CSV header comment.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "t",
    "x_exp",
    "p_exp",
    "energy",
    "entropy",
    "purity",
    "trace_err",
    "min_eig",
    "t_over_t0",
];

#[derive(Debug, Clone, Default)]
pub struct TrajectoryRecord {
    pub level: Level,
    pub dt: f64,
    pub times: Vec<f64>,
    pub x_exp: Vec<f64>,
    pub p_exp: Vec<f64>,
    pub energy: Vec<f64>,
    pub entropy: Vec<f64>,
    pub purity: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub min_eig: Vec<f64>,
    /// `max|ρ − ρ†|/2` just before each symmetrization.
    pub herm_drift: Vec<f64>,
    pub snapshots: Vec<(f64, DensityMatrix)>,
}

impl TrajectoryRecord {
    pub fn new(level: Level, dt: f64) -> Self {
        Self {
            level,
            dt,
            ..Default::default()
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push_sample(
        &mut self,
        t: f64,
        x: f64,
        p: f64,
        energy: f64,
        entropy: f64,
        purity: f64,
        trace_err: f64,
        min_eig: f64,
        herm_drift: f64,
    ) {
        self.times.push(t);
        self.x_exp.push(x);
        self.p_exp.push(p);
        self.energy.push(energy);
        self.entropy.push(entropy);
        self.purity.push(purity);
        self.trace_err.push(trace_err);
        self.min_eig.push(min_eig);
        self.herm_drift.push(herm_drift);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_err(&self) -> f64 {
        self.trace_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_herm_drift(&self) -> f64 {
        self.herm_drift.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn snapshot_near(&self, t: f64) -> Option<&DensityMatrix> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .map(|(_, r)| r)
    }

    /// CSV with a `# schema` comment line, a header and one row per sample.
    /// Numbers use Rust's shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W, t0: f64) -> Result<()> {
        writeln!(
            w,
            "# morse-decoherence trajectory schema v{CSV_SCHEMA_VERSION}; level={}",
            self.level
        )?;
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[k],
                self.x_exp[k],
                self.p_exp[k],
                self.energy[k],
                self.entropy[k],
                self.purity[k],
                self.trace_err[k],
                self.min_eig[k],
                self.times[k] / t0
            )?;
        }
        Ok(())
    }
}

/// JSON sidecar accompanying a snapshot binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub s: f64,
    pub lambda: f64,
    pub temperature: f64,
    pub level: Level,
    pub dt: f64,
    pub count: usize,
    pub record_bytes: usize,
}

/// Per-snapshot record: time as little-endian `f64`, then the matrix
/// row-major as interleaved `(re, im)` little-endian `f64` pairs.
pub fn write_snapshots<W: Write>(mut w: W, snapshots: &[(f64, DensityMatrix)]) -> Result<()> {
    for (t, rho) in snapshots {
        w.write_all(&t.to_le_bytes())?;
        let n = rho.dim();
        for i in 0..n {
            for j in 0..n {
                let c = rho.data()[(i, j)];
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Inverse of [`write_snapshots`] for matrices of dimension `n`.
pub fn read_snapshots(bytes: &[u8], n: usize) -> Result<Vec<(f64, DensityMatrix)>> {
    let rec = 8 * (1 + 2 * n * n);
    if !bytes.len().is_multiple_of(rec) {
        return Err(crate::Error::Config(format!(
            "snapshot stream of {} bytes is not a multiple of the {rec}-byte record",
            bytes.len()
        )));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
    bytes
        .chunks_exact(rec)
        .map(|chunk| {
            let t = f(&chunk[..8]);
            let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
                let o = 8 + 16 * (i * n + j);
                num_complex::Complex64::new(f(&chunk[o..o + 8]), f(&chunk[o + 8..o + 16]))
            });
            Ok((t, DensityMatrix::from_matrix(m)?))
        })
        .collect()
}
