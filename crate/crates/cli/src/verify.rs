use std::f64::consts::{PI, TAU};

use besselkit::criteria::{carleson_constant, lipschitz_constant_circle, resolvent_growth_sup, Side};
use besselkit::gram::GramSection;
use besselkit::measure::Component;
use besselkit::SpectralMeasure;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::measure_value;
use crate::render::{Body, CheckResult, Report, SCHEMA};
use crate::{Args, Outcome};

type Checked = Result<Option<(bool, String)>, besselkit::Error>;

fn poisson_resolvent(mu: &SpectralMeasure) -> Checked {
    let circle = mu.restrict_to_circle();
    if circle.total_mass()? == 0.0 {
        return Ok(None);
    }
    let mut worst: f64 = 0.0;
    for rho in [0.3, 0.7, 0.95] {
        for i in 0..8 {
            let w = Complex64::from_polar(rho, (i as f64 + 0.5) * TAU / 8.0);
            for w in [w, 1.0 / w.conj()] {
                let direct = circle.poisson_integral(w)?;
                let via = (1.0 - w.norm_sqr()) * circle.resolvent_norm_sq(w)?;
                worst = worst.max((direct - via).abs() / direct.abs());
            }
        }
    }
    Ok(Some((worst <= 1e-8, format!("48 points on both sides of the circle, max relative gap {worst:.2e}"))))
}

fn carleson_resolvent(mu: &SpectralMeasure, args: &Args) -> Checked {
    if mu.support_radius() > 1.0 + 1e-12 {
        return Ok(None);
    }
    let cfg = args.criteria_config();
    let c = carleson_constant(mu, &cfg)?;
    let r = resolvent_growth_sup(mu, &cfg, Side::Outside)?;
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
    Ok(Some((
        c.divergent == r.divergent,
        format!(
            "Carleson constant {} (diverging: {}), outer resolvent growth {} (diverging: {})",
            show(c.constant),
            c.divergent,
            show(r.constant),
            r.divergent
        ),
    )))
}

fn synthesis_gram(mu: &SpectralMeasure) -> Checked {
    let n = 8;
    let g = GramSection::build(mu, n)?;
    let mass = mu.total_mass()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let c: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let gc = g.matvec(&c)?;
        let form: Complex64 = c.iter().zip(&gc).map(|(a, b)| a.conj() * b).sum();
        let direct = mu.integrate_fn(|z| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, ck| acc * z + ck)
                .norm_sqr()
        })?;
        let scale = mass * c.iter().map(|x| x.norm()).sum::<f64>().powi(2);
        if scale > 0.0 {
            worst = worst.max((form - direct).norm() / scale);
        }
    }
    Ok(Some((
        worst <= 1e-9,
        format!("4 seeded coefficient vectors at n = {n}, max scaled gap {worst:.2e}"),
    )))
}

/// `μ|𝕋` of the open arc `(alpha, beta)` plus half the atoms at its ends.
fn arc_value(mu: &SpectralMeasure, alpha: f64, beta: f64) -> Result<f64, besselkit::Error> {
    let densities: Vec<Component> = mu
        .components()
        .iter()
        .filter(|c| matches!(c, Component::Circle(_)))
        .cloned()
        .collect();
    let mut value = 0.0;
    if !densities.is_empty() {
        // the open ball around the arc midpoint through both ends cuts out the open arc
        let half = 0.5 * (beta - alpha);
        let center = Complex64::from_polar(1.0, alpha + half);
        value += SpectralMeasure::new(densities)?.ball_mass(center, 2.0 * (0.5 * half).sin())?;
    }
    for a in mu.circle_atoms() {
        let phi = a.location.arg();
        let d = |x: f64| (phi - x).rem_euclid(TAU);
        if d(alpha) < 1e-12 || d(alpha) > TAU - 1e-12 || d(beta) < 1e-12 || d(beta) > TAU - 1e-12 {
            value += 0.5 * a.mass;
        } else if d(alpha) < beta - alpha {
            value += a.mass;
        }
    }
    Ok(value)
}

fn stieltjes(mu: &SpectralMeasure) -> Checked {
    let circle_mass = mu.restrict_to_circle().total_mass()?;
    if circle_mass == 0.0 {
        return Ok(None);
    }
    let m = 16;
    let r = 1.0 - 2f64.powi(-m);
    let mut worst: f64 = 0.0;
    for (alpha, beta) in [(-PI / 2.0, PI / 2.0), (PI / 2.0, 3.0 * PI / 2.0), (-0.3, 1.1)] {
        let limit = arc_value(mu, alpha, beta)?;
        let got = mu.stieltjes_inversion(alpha, beta, &[r])?[0];
        worst = worst.max((got - limit).abs() / circle_mass);
    }
    Ok(Some((
        worst <= 1e-3,
        format!("3 arcs at r = 1 - 2^-{m}, max gap to the arc mass {worst:.2e} of the circle mass"),
    )))
}

fn toeplitz_symbol(mu: &SpectralMeasure, args: &Args) -> Checked {
    if !mu.is_circle_supported() || !mu.circle_atoms().is_empty() || !mu.has_circle_density() {
        return Ok(None);
    }
    let cfg = args.criteria_config();
    let sup = lipschitz_constant_circle(mu, &cfg)?.constant.unwrap_or(f64::INFINITY);
    let n = args.max_size;
    let norm = GramSection::build(mu, n)?.operator_norm(args.tol, cfg.norm_max_iter)?.value;
    let passed = norm <= sup * (1.0 + 1e-6) + args.tol * sup && norm >= sup * (1.0 - 1e-2);
    Ok(Some((
        passed,
        format!("||G_{n}|| = {norm:.9} against the density supremum {sup:.9}"),
    )))
}

pub fn verify(args: &Args, mu: &SpectralMeasure) -> Outcome {
    let checks: [(&'static str, &'static str, Box<dyn Fn() -> Checked>); 5] = [
        (
            "poisson_resolvent",
            "the Poisson integral of the circle part is (1 - |w|^2) times its resolvent norm",
            Box::new(|| poisson_resolvent(mu)),
        ),
        (
            "carleson_resolvent",
            "the Carleson constant and the outer resolvent growth diverge together",
            Box::new(|| carleson_resolvent(mu, args)),
        ),
        (
            "synthesis_gram",
            "c* G_n c equals the integral of |sum c_k z^k|^2",
            Box::new(|| synthesis_gram(mu)),
        ),
        (
            "stieltjes_inversion",
            "arc integrals of the Poisson extension tend to the arc mass plus half the end atoms",
            Box::new(|| stieltjes(mu)),
        ),
        (
            "toeplitz_symbol",
            "for a circle density, ||G_n|| approaches the density supremum from below",
            Box::new(|| toeplitz_symbol(mu, args)),
        ),
    ];
    let results: Vec<CheckResult> = checks
        .iter()
        .map(|(name, statement, check)| {
            let (passed, detail) = match check() {
                Ok(Some((p, d))) => (Some(p), d),
                Ok(None) => (None, "not applicable to this measure".to_string()),
                Err(e) => (Some(false), format!("evaluation failed: {e}")),
            };
            CheckResult {
                name,
                statement,
                passed,
                detail,
            }
        })
        .collect();
    let passed = results.iter().all(|c| c.passed != Some(false));
    Outcome {
        report: Report {
            schema: SCHEMA,
            command: args.command.as_str(),
            body: Body::Verify {
                measure: measure_value(mu),
                passed,
                checks: results,
            },
        },
        code: if passed { 0 } else { 1 },
    }
}
