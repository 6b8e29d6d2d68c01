//! Many moments at once, for building Gram sections.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{powu, Component, Hints, SpectralMeasure};
use crate::error::{Error, Result};
use crate::quadrature::{Focus, QuadError};

/// Largest trapezoid grid tried for circle Fourier coefficients.
const MAX_FFT_POINTS: usize = 1 << 22;

impl SpectralMeasure {
    /// `c_m = ∫_𝕋 z^m dμ` for `m = 0..n`, over the circle part of `μ`
    /// (circle densities and atoms on the circle).
    ///
    /// Circle densities are handled by trapezoid sums evaluated with an FFT,
    /// doubling the grid until successive coefficient vectors agree.
    pub fn circle_coefficients(&self, n: usize) -> Result<Vec<Complex64>> {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for (index, comp) in self.components().iter().enumerate() {
            match comp {
                Component::Atoms(atoms) => {
                    for a in atoms.iter().filter(|a| a.mass > 0.0 && a.on_circle()) {
                        let z = a.location / a.location.norm();
                        let mut p = Complex64::new(a.mass, 0.0);
                        for cm in c.iter_mut() {
                            *cm += p;
                            p *= z;
                        }
                    }
                }
                Component::Circle(cd) => {
                    let mut points = (4 * n).max(64).next_power_of_two();
                    let mut prev = self.fft_coefficients(index, cd, n, points)?;
                    loop {
                        points *= 2;
                        let next = self.fft_coefficients(index, cd, n, points)?;
                        let scale = next.first().map_or(0.0, |v| v.norm());
                        let diff = prev
                            .iter()
                            .zip(&next)
                            .map(|(a, b)| (a - b).norm())
                            .fold(0.0, f64::max);
                        if diff <= self.quadrature().abs_tol.max(self.quadrature().rel_tol * scale) {
                            for (cm, v) in c.iter_mut().zip(&next) {
                                *cm += v;
                            }
                            break;
                        }
                        if points >= MAX_FFT_POINTS {
                            return Err(QuadError::NonConvergence {
                                lower: 0.0,
                                upper: TAU,
                                cells: points,
                                estimate: scale,
                                error: diff,
                            }
                            .into());
                        }
                        prev = next;
                    }
                }
                _ => {}
            }
        }
        Ok(c)
    }

    fn fft_coefficients(
        &self,
        index: usize,
        cd: &super::CircleDensity,
        n: usize,
        points: usize,
    ) -> Result<Vec<Complex64>> {
        let h = TAU / points as f64;
        let mut buf = Vec::with_capacity(points);
        for j in 0..points {
            buf.push(Complex64::new(self.circle_density_at(index, cd, j as f64 * h)?, 0.0));
        }
        // a jump at θ = 0 is averaged, which keeps the trapezoid rule second order
        let left = self.circle_density_at(index, cd, TAU.next_down())?;
        buf[0] = Complex64::new(0.5 * (buf[0].re + left), 0.0);
        let fft = FftPlanner::new().plan_fft_forward(points);
        fft.process(&mut buf);
        Ok(buf[..n.min(points)].iter().map(|x| x.conj() / points as f64).collect())
    }

    /// `q_m = ∫_ℝ t^m dμ` for `m = 0..count`, over the part of `μ` on the real
    /// line (interval densities and real atoms).
    pub fn real_moments(&self, count: usize) -> Result<Vec<f64>> {
        let mut q = vec![0.0; count];
        if count == 0 {
            return Ok(q);
        }
        for (index, comp) in self.components().iter().enumerate() {
            match comp {
                Component::Atoms(atoms) => {
                    for a in atoms.iter().filter(|a| a.mass > 0.0 && a.on_real_line()) {
                        let mut p = a.mass;
                        for qm in q.iter_mut() {
                            *qm += p;
                            p *= a.location.re;
                        }
                    }
                }
                Component::Interval(iv) => {
                    let width = 0.05 / count as f64;
                    let focus: Vec<Focus> = [iv.lower(), iv.upper()]
                        .into_iter()
                        .filter(|e| e.abs() > 0.5)
                        .map(|e| Focus::new(e, width * e.abs()))
                        .collect();
                    let v = self.interval_integrate(index, iv, iv.lower(), iv.upper(), &focus, count, &|t, out| {
                        let mut p = 1.0;
                        for o in out.iter_mut() {
                            *o = p;
                            p *= t;
                        }
                    })?;
                    for (qm, x) in q.iter_mut().zip(&v) {
                        *qm += x;
                    }
                }
                _ => {}
            }
        }
        Ok(q)
    }

    /// Row-major `n × n` matrix with entry `[j][k] = ∫ z^k conj(z)^j dμ`.
    pub fn moment_matrix(&self, n: usize) -> Result<Vec<Complex64>> {
        self.moment_matrix_pattern(n, false)
    }

    /// Row-major `n × n` matrix with entry `[j][k] = ∫ z^j conj(z)^k dμ`, the
    /// Gram matrix of the orbit of the adjoint.
    pub fn adjoint_moment_matrix(&self, n: usize) -> Result<Vec<Complex64>> {
        self.moment_matrix_pattern(n, true)
    }

    fn moment_matrix_pattern(&self, n: usize, adjoint: bool) -> Result<Vec<Complex64>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        // upper triangle k >= j, packed row by row
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect();
        let dim = 2 * pairs.len();
        let hints = Hints {
            pole: None,
            extra_pole: None,
            power: 2 * (n - 1),
            oscillation: n - 1,
        };
        let v = self.integrate_kernel(
            &|z: Complex64, _: f64, out: &mut [f64]| {
                let (zk, zj) = if adjoint { (z.conj(), z) } else { (z, z.conj()) };
                let pk: Vec<Complex64> = (0..n).map(|k| powu(zk, k)).collect();
                let pj: Vec<Complex64> = (0..n).map(|j| powu(zj, j)).collect();
                for (slot, &(j, k)) in pairs.iter().enumerate() {
                    let w = pk[k] * pj[j];
                    out[2 * slot] = w.re;
                    out[2 * slot + 1] = w.im;
                }
            },
            dim,
            hints,
        )?;
        let mut g = vec![Complex64::new(0.0, 0.0); n * n];
        for (slot, &(j, k)) in pairs.iter().enumerate() {
            let w = Complex64::new(v[2 * slot], v[2 * slot + 1]);
            g[j * n + k] = w;
            g[k * n + j] = w.conj();
        }
        for j in 0..n {
            g[j * n + j].im = 0.0;
        }
        if g.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::Singular("moment matrix has non-finite entries".into()));
        }
        Ok(g)
    }
}
