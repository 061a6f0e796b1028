//! Independent finite-difference discretization of the Morse Hamiltonian.
//!
//! Eighth-order central differences give a symmetric banded matrix
//! (half-bandwidth 4). Eigenvalues come from bisection on the inertia of
//! `A − σI` (negative pivots of a banded LDLᵀ); eigenvectors from inverse
//! iteration with a pivoted banded LU.

#![allow(dead_code)]

const HALF_BW: usize = 4;
/// Eighth-order stencil for −d²/dx², offsets 0..=4.
const STENCIL: [f64; 5] = [205.0 / 72.0, -8.0 / 5.0, 1.0 / 5.0, -8.0 / 315.0, 1.0 / 560.0];

pub struct GridHamiltonian {
    pub x: Vec<f64>,
    pub h: f64,
    /// bands[k][i] = A[i][i+k]
    bands: Vec<Vec<f64>>,
}

impl GridHamiltonian {
    pub fn morse(s: f64, lower: f64, upper: f64, points: usize) -> Self {
        let h = (upper - lower) / (points + 1) as f64;
        let x: Vec<f64> = (1..=points).map(|i| lower + i as f64 * h).collect();
        let d = (s + 0.5).powi(2);
        let mut bands = vec![vec![0.0; points]; HALF_BW + 1];
        for i in 0..points {
            let e = (-x[i]).exp();
            bands[0][i] = STENCIL[0] / (h * h) + d * (e * e - 2.0 * e);
            for k in 1..=HALF_BW {
                if i + k < points {
                    bands[k][i] = STENCIL[k] / (h * h);
                }
            }
        }
        Self { x, h, bands }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = b - a;
        if k > HALF_BW {
            0.0
        } else {
            self.bands[k][a]
        }
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.len();
        // banded LDLᵀ: l[i][k] = L[i][i-k], d[i]
        let mut d = vec![0.0; n];
        let mut l = vec![[0.0f64; HALF_BW + 1]; n];
        let mut negatives = 0;
        for i in 0..n {
            for k in (1..=HALF_BW.min(i)).rev() {
                let j = i - k;
                // L[i][j] = (A[i][j] − Σ_{p<j} L[i][p] d[p] L[j][p]) / d[j]
                let mut v = self.entry(i, j);
                for p in j.saturating_sub(HALF_BW)..j {
                    if i - p <= HALF_BW {
                        v -= l[i][i - p] * d[p] * l[j][j - p];
                    }
                }
                l[i][k] = v / d[j];
            }
            let mut di = self.entry(i, i) - sigma;
            for p in i.saturating_sub(HALF_BW)..i {
                di -= l[i][i - p] * l[i][i - p] * d[p];
            }
            if di == 0.0 {
                di = -1e-300;
            }
            d[i] = di;
            if di < 0.0 {
                negatives += 1;
            }
        }
        negatives
    }

    /// The `k`-th eigenvalue (ascending) by bisection in `[lo, hi]`.
    pub fn eigenvalue(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        assert!(self.count_below(lo) <= k && self.count_below(hi) > k);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-13 * hi.abs().max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Unit-normalized (Σ v² h = 1) eigenvector for `eigenvalue`.
    pub fn eigenvector(&self, eigenvalue: f64) -> Vec<f64> {
        let n = self.len();
        let shift = eigenvalue + 1e-9 * eigenvalue.abs().max(1.0);
        let lu = BandedLu::factor(self, shift);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..4 {
            v = lu.solve(&v);
            let norm = (v.iter().map(|a| a * a).sum::<f64>() * self.h).sqrt();
            v.iter_mut().for_each(|a| *a /= norm);
        }
        v
    }
}

/// LU with partial pivoting for a matrix of lower bandwidth `HALF_BW` and
/// upper bandwidth `2·HALF_BW` after fill-in, stored densely per row band.
struct BandedLu {
    n: usize,
    /// u[i][k] = U[i][i+k], k in 0..=2·HALF_BW
    u: Vec<[f64; 2 * HALF_BW + 1]>,
    /// multipliers per elimination step
    mult: Vec<[f64; HALF_BW]>,
    perm: Vec<usize>,
}

impl BandedLu {
    fn factor(a: &GridHamiltonian, shift: f64) -> Self {
        let n = a.len();
        const W: usize = 3 * HALF_BW + 1;
        // work rows: row i holds columns i-HALF_BW ..= i+2·HALF_BW at offset HALF_BW
        let mut rows: Vec<[f64; W]> = (0..n)
            .map(|i| {
                let mut r = [0.0; W];
                for c in i.saturating_sub(HALF_BW)..=(i + HALF_BW).min(n - 1) {
                    let mut v = a.entry(i, c);
                    if c == i {
                        v -= shift;
                    }
                    r[c + HALF_BW - i] = v;
                }
                r
            })
            .collect();
        let get = |rows: &Vec<[f64; W]>, r: usize, c: usize| -> f64 {
            let off = c as isize - r as isize + HALF_BW as isize;
            if off < 0 || off >= W as isize {
                0.0
            } else {
                rows[r][off as usize]
            }
        };
        let mut u = vec![[0.0; 2 * HALF_BW + 1]; n];
        let mut mult = vec![[0.0; HALF_BW]; n];
        let mut perm = vec![0; n];
        for col in 0..n {
            let last = (col + HALF_BW).min(n - 1);
            let mut piv = col;
            for r in col..=last {
                if get(&rows, r, col).abs() > get(&rows, piv, col).abs() {
                    piv = r;
                }
            }
            perm[col] = piv;
            if piv != col {
                let cols: Vec<usize> = (col..=(col + 2 * HALF_BW).min(n - 1)).collect();
                let a_vals: Vec<f64> = cols.iter().map(|&c| get(&rows, col, c)).collect();
                let b_vals: Vec<f64> = cols.iter().map(|&c| get(&rows, piv, c)).collect();
                for (k, &c) in cols.iter().enumerate() {
                    set(&mut rows, col, c, b_vals[k]);
                    set(&mut rows, piv, c, a_vals[k]);
                }
            }
            let mut p = get(&rows, col, col);
            if p == 0.0 {
                p = 1e-300;
                set(&mut rows, col, col, p);
            }
            for k in 0..=(2 * HALF_BW) {
                if col + k < n {
                    u[col][k] = get(&rows, col, col + k);
                }
            }
            for r in (col + 1)..=last {
                let m = get(&rows, r, col) / p;
                mult[col][r - col - 1] = m;
                if m != 0.0 {
                    for c in col..=(col + 2 * HALF_BW).min(n - 1) {
                        let v = get(&rows, r, c) - m * u[col][c - col];
                        set(&mut rows, r, c, v);
                    }
                }
            }
        }
        fn set(rows: &mut [[f64; 3 * HALF_BW + 1]], r: usize, c: usize, v: f64) {
            let off = c as isize - r as isize + HALF_BW as isize;
            if off >= 0 && (off as usize) < 3 * HALF_BW + 1 {
                rows[r][off as usize] = v;
            } else {
                assert!(v == 0.0, "fill outside band");
            }
        }
        Self { n, u, mult, perm }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for col in 0..n {
            y.swap(col, self.perm[col]);
            for k in 0..HALF_BW {
                let r = col + 1 + k;
                if r < n {
                    y[r] -= self.mult[col][k] * y[col];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in 1..=(2 * HALF_BW) {
                if i + k < n {
                    v -= self.u[i][k] * x[i + k];
                }
            }
            x[i] = v / self.u[i][0];
        }
        x
    }
}
