//! Finite sections of the orbit Gram matrix `G[j][k] = ⟨Aᵏx, Aʲx⟩`.
//!
//! The orbit is Bessel exactly when `G` is bounded on `ℓ²`, and then `‖G‖` is
//! the optimal bound. Principal sections `G_n` only see `‖G_n‖ ≤ ‖G‖`, so a
//! [`Profile`] over growing `n` is evidence, not a certificate.
//!
//! When all mass of `μ` lies on the unit circle, `G` is Toeplitz; when it lies
//! on the real line, `G` is Hankel. Those sections keep only their defining
//! coefficients and multiply vectors through an FFT.

mod fast;
mod lanczos;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::SpectralMeasure;

pub use fast::FastMatvec;
pub use lanczos::{NormEstimate, DEFAULT_SEED};

/// Largest section built as an explicit dense matrix.
pub const DEFAULT_MAX_DENSE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Toeplitz,
    Hankel,
    Dense,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Toeplitz => "toeplitz",
            Structure::Hankel => "hankel",
            Structure::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// `c_0..c_{n-1}` with `G[j][k] = c_{k-j}` for `k ≥ j`.
    Toeplitz(Vec<Complex64>),
    /// `q_0..q_{2n-2}` with `G[j][k] = q_{j+k}`.
    Hankel(Vec<f64>),
    /// Row-major `n × n`.
    Dense(Vec<Complex64>),
}

/// Which conjugation pattern the entries follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orbit {
    /// `G[j][k] = ∫ zᵏ conj(z)ʲ dμ`, the orbit of `A`.
    Forward,
    /// `G[j][k] = ∫ zʲ conj(z)ᵏ dμ`, the orbit of `A*`.
    Adjoint,
}

/// An `n × n` principal section of the Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramSection {
    n: usize,
    storage: Storage,
}

impl GramSection {
    /// Builds `G_n` for the orbit of `A`, choosing Toeplitz storage when `μ`
    /// lives on the circle and Hankel storage when it lives on the real line.
    pub fn build(mu: &SpectralMeasure, n: usize) -> Result<Self> {
        Self::build_orbit(mu, n, Orbit::Forward)
    }

    pub fn build_orbit(mu: &SpectralMeasure, n: usize, orbit: Orbit) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("section size must be at least 1".into()));
        }
        if mu.is_circle_supported() {
            let c = mu.circle_coefficients(n)?;
            let c = match orbit {
                Orbit::Forward => c,
                Orbit::Adjoint => c.iter().map(|x| x.conj()).collect(),
            };
            Ok(Self::from_toeplitz(c))
        } else if mu.is_real_supported() {
            Ok(Self::from_hankel(mu.real_moments(2 * n - 1)?))
        } else {
            // the adjoint pattern is integrated on its own, not transposed
            let g = match orbit {
                Orbit::Forward => mu.moment_matrix(n)?,
                Orbit::Adjoint => mu.adjoint_moment_matrix(n)?,
            };
            Ok(Self {
                n,
                storage: Storage::Dense(g),
            })
        }
    }

    /// Hermitian Toeplitz section with first row `c`.
    pub fn from_toeplitz(c: Vec<Complex64>) -> Self {
        let mut c = c;
        if let Some(c0) = c.first_mut() {
            c0.im = 0.0;
        }
        Self {
            n: c.len(),
            storage: Storage::Toeplitz(c),
        }
    }

    /// Hankel section from `q_0..q_{2n-2}`.
    pub fn from_hankel(q: Vec<f64>) -> Self {
        assert!(q.len() % 2 == 1, "a Hankel section needs an odd number of coefficients");
        Self {
            n: q.len().div_ceil(2),
            storage: Storage::Hankel(q),
        }
    }

    /// Dense section from row-major entries; the matrix must be Hermitian.
    pub fn from_dense(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: entries.len(),
            });
        }
        Ok(Self {
            n,
            storage: Storage::Dense(entries),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn structure(&self) -> Structure {
        match self.storage {
            Storage::Toeplitz(_) => Structure::Toeplitz,
            Storage::Hankel(_) => Structure::Hankel,
            Storage::Dense(_) => Structure::Dense,
        }
    }

    pub fn toeplitz_coefficients(&self) -> Option<&[Complex64]> {
        match &self.storage {
            Storage::Toeplitz(c) => Some(c),
            _ => None,
        }
    }

    pub fn hankel_coefficients(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Hankel(q) => Some(q),
            _ => None,
        }
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        assert!(j < self.n && k < self.n, "entry ({j}, {k}) outside a section of size {}", self.n);
        match &self.storage {
            Storage::Toeplitz(c) => {
                if k >= j {
                    c[k - j]
                } else {
                    c[j - k].conj()
                }
            }
            Storage::Hankel(q) => Complex64::new(q[j + k], 0.0),
            Storage::Dense(g) => g[j * self.n + k],
        }
    }

    /// The leading `m × m` principal section.
    pub fn truncated(&self, m: usize) -> Self {
        assert!(m >= 1 && m <= self.n, "cannot truncate a section of size {} to {m}", self.n);
        let storage = match &self.storage {
            Storage::Toeplitz(c) => Storage::Toeplitz(c[..m].to_vec()),
            Storage::Hankel(q) => Storage::Hankel(q[..2 * m - 1].to_vec()),
            Storage::Dense(g) => Storage::Dense(
                (0..m)
                    .flat_map(|j| g[j * self.n..j * self.n + m].iter().copied())
                    .collect(),
            ),
        };
        Self { n: m, storage }
    }

    /// Row-major dense copy of the section.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                out.push(self.entry(j, k));
            }
        }
        out
    }

    /// `G·v` by direct `O(n²)` summation over the entries.
    pub fn dense_matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(v)?;
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        match &self.storage {
            Storage::Dense(g) => {
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj = g[j * n..(j + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
            _ => {
                for (j, yj) in y.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, vk) in v.iter().enumerate() {
                        acc += self.entry(j, k) * vk;
                    }
                    *yj = acc;
                }
            }
        }
        Ok(y)
    }

    /// `G·v`, through circulant embedding and FFT for structured sections.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(v)?;
        match &self.storage {
            Storage::Dense(_) => self.dense_matvec(v),
            _ => Ok(FastMatvec::new(self).apply(v)),
        }
    }

    /// Largest eigenvalue of the section (its operator norm, as `G_n` is PSD),
    /// by Lanczos with full reorthogonalization from a seeded start vector.
    pub fn operator_norm(&self, tol: f64, max_iter: usize) -> Result<NormEstimate> {
        if !(tol > 0.0) {
            return Err(Error::Input(format!("norm tolerance must be positive, got {tol}")));
        }
        match &self.storage {
            Storage::Dense(_) => {
                lanczos::largest_eigenvalue(self.n, tol, max_iter, DEFAULT_SEED, |v| {
                    self.dense_matvec(v).expect("length checked")
                })
            }
            _ => {
                let fast = FastMatvec::new(self);
                lanczos::largest_eigenvalue(self.n, tol, max_iter, DEFAULT_SEED, |v| fast.apply(v))
            }
        }
    }

    /// Same as [`operator_norm`](Self::operator_norm) but multiplying with the
    /// `O(n²)` dense product, used to benchmark and cross-check the FFT path.
    pub fn operator_norm_dense(&self, tol: f64, max_iter: usize) -> Result<NormEstimate> {
        lanczos::largest_eigenvalue(self.n, tol, max_iter, DEFAULT_SEED, |v| {
            self.dense_matvec(v).expect("length checked")
        })
    }

    fn check_len(&self, v: &[Complex64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub n: usize,
    pub norm: f64,
}

/// `‖G_n‖` over increasing section sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub structure: Structure,
    pub points: Vec<ProfilePoint>,
    /// False if some norm dropped below its predecessor by more than the
    /// tolerance, which principal sections of a PSD matrix cannot do.
    pub monotone: bool,
}

impl Profile {
    pub fn last_norm(&self) -> Option<f64> {
        self.points.last().map(|p| p.norm)
    }
}

/// Builds the largest section once and reads the smaller ones off it.
pub fn bessel_bound_profile(
    mu: &SpectralMeasure,
    sizes: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<Profile> {
    if sizes.is_empty() {
        return Err(Error::Input("profile needs at least one size".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] == 0 {
        return Err(Error::Input("profile sizes must be positive and increasing".into()));
    }
    let full = GramSection::build(mu, *sizes.last().unwrap())?;
    let mut points = Vec::with_capacity(sizes.len());
    let mut monotone = true;
    for &n in sizes {
        let norm = full.truncated(n).operator_norm(tol, max_iter)?.value;
        if let Some(prev) = points.last().map(|p: &ProfilePoint| p.norm) {
            if norm < prev - tol * prev.max(1.0) {
                monotone = false;
            }
        }
        points.push(ProfilePoint { n, norm });
    }
    Ok(Profile {
        structure: full.structure(),
        points,
        monotone,
    })
}

/// Default profile sizes: powers of two up to `max_size`, capped at
/// [`DEFAULT_MAX_DENSE`] when the section has to be dense.
pub fn default_sizes(mu: &SpectralMeasure, max_size: usize) -> Vec<usize> {
    let cap = if mu.is_circle_supported() || mu.is_real_supported() {
        max_size
    } else {
        max_size.min(DEFAULT_MAX_DENSE)
    };
    let mut sizes = Vec::new();
    let mut n = 8;
    while n < cap {
        sizes.push(n);
        n *= 2;
    }
    sizes.push(cap.max(1));
    sizes.dedup();
    sizes
}
