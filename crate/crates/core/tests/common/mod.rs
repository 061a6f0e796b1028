#![allow(dead_code)]

pub mod grid_oracle;

/// Eighth-order central first derivative.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    C.iter()
        .enumerate()
        .map(|(k, c)| {
            let d = (k + 1) as f64 * h;
            c * (f(x + d) - f(x - d))
        })
        .sum::<f64>()
        / h
}

/// SplitMix64 stream mapped to `[-1, 1)`.
pub struct Noise(u64);

impl Noise {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

/// `G G† / Tr(G G†)` for a random complex `G`.
pub fn random_density(n: usize, noise: &mut Noise) -> morse_decoherence::DensityMatrix {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(noise.next(), noise.next()));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    morse_decoherence::DensityMatrix::from_matrix(m.unscale(tr)).expect("square")
}

/// `½ Σ |λ_k(a − b)|`
pub fn trace_distance(a: &morse_decoherence::DensityMatrix, b: &morse_decoherence::DensityMatrix) -> f64 {
    let d = morse_decoherence::DensityMatrix::from_matrix(a.data() - b.data()).expect("square");
    0.5 * d.eigenvalues().iter().map(|l| l.abs()).sum::<f64>()
}
