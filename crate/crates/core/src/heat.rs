//! The heat-equation measure.
//!
//! Sampling the heat flow `u_t = u_xx` on the Paley-Wiener space `PW_{1/2}` at
//! times `kδ` and one sensor gives the orbit of `A = e^{δ∂²}`, which is
//! multiplication by `e^{-δξ²}` on `[-1/2, 1/2]` on the Fourier side. The
//! spectral measure of a sensor vector lives on `[e^{-δ/4}, 1]`, has total
//! mass 1 and tail
//!
//! ```text
//! μ(t > 1 - ε) = (2/√δ) · (log 1/(1 - ε))^{1/2},
//! ```
//!
//! which is of order `√ε`, not `ε`: the orbit is not Bessel although every
//! moment `q_k` tends to 0.
//!
//! ```
//! use besselkit::heat;
//!
//! let mu = heat::heat_measure(1.0).unwrap();
//! assert!((mu.total_mass().unwrap() - 1.0).abs() < 1e-8);
//! ```

use crate::criteria::{tail_ratio_sup, CriteriaConfig, CriterionReport};
use crate::error::{Error, Result};
use crate::measure::{IntervalDensity, SpectralMeasure};
use crate::quadrature::{graded_breakpoints, integrate, Focus, QuadConfig, Singular};

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("delta must be positive and finite, got {delta}")))
    }
}

/// Left end `e^{-δ/4}` of the support.
pub fn support_lower(delta: f64) -> f64 {
    (-delta / 4.0).exp()
}

/// Density `h(t) = 1 / (t √δ √(-log t))` on `(e^{-δ/4}, 1)`, obtained by
/// differentiating the tail formula; it blows up like `(1 - t)^{-1/2}` at 1.
pub fn heat_measure(delta: f64) -> Result<SpectralMeasure> {
    check_delta(delta)?;
    let source = format!("1/(t*sqrt({delta:?})*sqrt(-log(t)))");
    let density = IntervalDensity::new(support_lower(delta), 1.0, &source)
        .map_err(|error| Error::DensityParse {
            index: 0,
            source_text: source.clone(),
            error,
        })?
        .with_singular(Singular {
            lower: false,
            upper: true,
        });
    SpectralMeasure::new(vec![crate::measure::Component::Interval(density)])
}

/// Closed-form tail `μ(t > 1 - ε) = (2/√δ) (log 1/(1-ε))^{1/2}` for
/// `0 < ε ≤ 1 - e^{-δ/4}`.
pub fn heat_tail(delta: f64, eps: f64) -> Result<f64> {
    check_delta(delta)?;
    let eps_max = 1.0 - support_lower(delta);
    if !(eps > 0.0 && eps <= eps_max * (1.0 + 1e-12)) {
        return Err(Error::Input(format!("tail width must lie in (0, {eps_max}], got {eps}")));
    }
    Ok(2.0 / delta.sqrt() * (-(-eps).ln_1p()).sqrt())
}

/// `q_k = ∫_{-1/2}^{1/2} e^{-kδξ²} dξ`, by quadrature on the Fourier side.
pub fn heat_moment(delta: f64, k: u64) -> Result<f64> {
    check_delta(delta)?;
    if k == 0 {
        return Ok(1.0);
    }
    let a = k as f64 * delta;
    let width = a.sqrt().recip().min(0.5);
    let cfg = QuadConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        ..QuadConfig::default()
    };
    let bp = graded_breakpoints(0.0, 0.5, 4, &[Focus::new(0.0, width)]);
    let half: f64 = integrate(|x: f64| Ok::<f64, Error>((-a * x * x).exp()), &bp, &cfg)?;
    Ok(2.0 * half)
}

/// The tail ratio report for the heat measure, with the closed-form ratio
/// `heat_tail(δ, ε) / ε` in the `reference` column of every sample.
pub fn non_bessel_witness(delta: f64, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let mu = heat_measure(delta)?;
    let mut report = tail_ratio_sup(&mu, cfg)?;
    let eps_max = 1.0 - support_lower(delta);
    for s in &mut report.samples {
        // ε beyond the support width: the whole mass 1 sits in the tail
        let tail = if s.x <= eps_max { heat_tail(delta, s.x)? } else { 1.0 };
        s.reference = Some(tail / s.x);
    }
    report.note = Some(format!(
        "reference column: closed-form tail (2/sqrt(delta)) sqrt(log 1/(1-eps)) / eps with delta = {delta}"
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    #[test]
    fn total_mass_is_one() {
        for delta in [0.25, 1.0, 4.0] {
            let m = heat_measure(delta).unwrap().total_mass().unwrap();
            assert!((m - 1.0).abs() < 1e-9, "{delta}: {m}");
        }
    }

    #[test]
    fn tail_formula_endpoints() {
        assert!((heat_tail(1.0, 1.0 - (-0.25f64).exp()).unwrap() - 1.0).abs() < 1e-12);
        assert!((heat_tail(4.0, 1.0 - (-1.0f64).exp()).unwrap() - 1.0).abs() < 1e-12);
        assert!(heat_tail(1.0, 0.5).is_err());
        assert!(heat_tail(1.0, 0.0).is_err());
        assert!(heat_measure(0.0).is_err());
    }

    #[test]
    fn quadrature_tail_matches_formula() {
        let mu = heat_measure(1.0).unwrap();
        for m in 3..=20 {
            let eps = 2f64.powi(-m);
            let q = mu.tail_mass(eps).unwrap();
            let exact = heat_tail(1.0, eps).unwrap();
            assert!(((q - exact) / exact).abs() < 1e-6, "m = {m}: {q} vs {exact}");
        }
    }

    #[test]
    fn fourier_moment_matches_erf() {
        for k in [1u64, 10, 1000, 1_000_000] {
            let kf = k as f64;
            let erf_form = (std::f64::consts::PI / kf).sqrt() * erf(kf.sqrt() / 2.0);
            let q = heat_moment(1.0, k).unwrap();
            // the erf implementation is good to about 1e-10
            assert!(((q - erf_form) / erf_form).abs() < 1e-9, "{k}: {q} vs {erf_form}");
        }
        assert_eq!(heat_moment(1.0, 0).unwrap(), 1.0);
    }

    #[test]
    fn spectral_moment_matches_fourier_moment() {
        let mu = heat_measure(1.0).unwrap();
        for k in [1usize, 7, 100, 4096] {
            let spectral = mu.moment(k, 0).unwrap().re;
            let fourier = heat_moment(1.0, k as u64).unwrap();
            assert!(((spectral - fourier) / fourier).abs() < 1e-8, "{k}: {spectral} vs {fourier}");
        }
    }

    #[test]
    fn moments_decay_but_k_q_k_grows() {
        let q: Vec<f64> = (0..200).map(|k| heat_moment(1.0, k).unwrap()).collect();
        for k in 1..199 {
            assert!(q[k] > 0.0 && q[k + 1] < q[k]);
            assert!((k + 1) as f64 * q[k + 1] > k as f64 * q[k]);
        }
    }

    #[test]
    fn witness_reference_column_agrees() {
        let cfg = CriteriaConfig {
            eps_min: 2f64.powi(-20),
            ..CriteriaConfig::default()
        };
        let r = non_bessel_witness(1.0, &cfg).unwrap();
        assert!(r.divergent);
        for s in &r.samples {
            let reference = s.reference.unwrap();
            assert!(((s.value - reference) / reference).abs() < 1e-6, "{s:?}");
        }
    }
}
