use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GramSection, Storage};

/// Structured `G·v` in `O(n log n)`: the Toeplitz or Hankel section is embedded
/// in a circulant whose spectrum is computed once.
pub struct FastMatvec {
    n: usize,
    kind: Kind,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

enum Kind {
    Toeplitz,
    Hankel,
    Dense(Vec<Complex64>),
}

impl FastMatvec {
    pub fn new(section: &GramSection) -> Self {
        let n = section.n;
        let (kind, column) = match &section.storage {
            Storage::Toeplitz(c) => {
                // first column of the circulant: τ(p) = G[p][0] = conj(c_p),
                // then τ(-p) = c_p wrapped to the end
                let len = (2 * n).next_power_of_two();
                let mut col = vec![Complex64::new(0.0, 0.0); len];
                for p in 0..n {
                    col[p] = c[p].conj();
                }
                for p in 1..n {
                    col[len - p] = c[p];
                }
                (Kind::Toeplitz, col)
            }
            Storage::Hankel(q) => {
                // y_j = Σ_i q_{j+n-1-i} w_i with w the reversed input: a plain
                // linear convolution, read off at offset n-1
                let len = (3 * n).next_power_of_two();
                let mut col = vec![Complex64::new(0.0, 0.0); len];
                for (m, qm) in q.iter().enumerate() {
                    col[m] = Complex64::new(*qm, 0.0);
                }
                (Kind::Hankel, col)
            }
            Storage::Dense(g) => (Kind::Dense(g.clone()), Vec::new()),
        };
        let len = column.len().max(1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum = column;
        if !spectrum.is_empty() {
            forward.process(&mut spectrum);
        }
        Self {
            n,
            kind,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n, "vector length must match the section size");
        let n = self.n;
        let len = self.spectrum.len();
        match &self.kind {
            Kind::Dense(g) => (0..n)
                .map(|j| g[j * n..(j + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
            Kind::Toeplitz => {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                buf[..n].copy_from_slice(v);
                self.convolve(&mut buf);
                buf.truncate(n);
                buf
            }
            Kind::Hankel => {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for (i, x) in v.iter().rev().enumerate() {
                    buf[i] = *x;
                }
                self.convolve(&mut buf);
                buf[n - 1..2 * n - 1].to_vec()
            }
        }
    }

    fn convolve(&self, buf: &mut [Complex64]) {
        let scale = 1.0 / buf.len() as f64;
        self.forward.process(buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s * scale;
        }
        self.inverse.process(buf);
    }
}
