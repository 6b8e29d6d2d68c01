use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{diverges, running_max, CriteriaConfig, CriterionId, CriterionReport, Sample, ValueKind};
use crate::error::{Error, Result};
use crate::measure::{Component, Hints, SpectralMeasure};

/// `sup |z|` over the declared support; above 1 the orbit cannot be Bessel.
pub fn support_radius(mu: &SpectralMeasure) -> CriterionReport {
    let nu = mu.support_radius();
    let r = CriterionReport::new(CriterionId::SupportRadius, nu, ValueKind::Certified);
    if nu > 1.0 + 1e-12 {
        r.with_note(format!("support reaches |z| = {nu} > 1"))
    } else {
        r
    }
}

/// Sum of all circle densities at `θ`.
fn circle_density(mu: &SpectralMeasure, theta: f64) -> Result<f64> {
    let mut f = 0.0;
    for (index, c) in mu.components().iter().enumerate() {
        if let Component::Circle(cd) = c {
            f += mu.circle_density_at(index, cd, theta)?;
        }
    }
    Ok(f)
}

/// Grid maximum of the circle density, refined once around the best grid
/// points. Returns `(θ, f(θ))` of the maximum and the grid samples.
fn density_maximum(mu: &SpectralMeasure, grid: usize) -> Result<((f64, f64), Vec<(f64, f64)>)> {
    let n = grid.max(8);
    let h = TAU / n as f64;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| circle_density(mu, j as f64 * h))
        .collect::<Result<_>>()?;
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&j| values[j] >= values[(j + n - 1) % n] && values[j] >= values[(j + 1) % n])
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(8);
    let mut best = (0.0, values[0]);
    for (j, v) in values.iter().enumerate() {
        if *v > best.1 {
            best = (j as f64 * h, *v);
        }
    }
    const SUB: usize = 64;
    for &j in &peaks {
        let centre = j as f64 * h;
        for i in 0..=2 * SUB {
            let theta = centre - h + h * i as f64 / SUB as f64;
            let v = circle_density(mu, theta)?;
            if v > best.1 {
                best = (theta.rem_euclid(TAU), v);
            }
        }
    }
    let samples = values.iter().enumerate().map(|(j, v)| (j as f64 * h, *v)).collect();
    Ok((best, samples))
}

/// Essential supremum of the circle density w.r.t. normalized arc measure.
pub fn lipschitz_constant_circle(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let id = CriterionId::LipschitzConstantCircle;
    let atoms = mu.circle_atoms();
    if !atoms.is_empty() {
        return Ok(CriterionReport::new(id, f64::INFINITY, ValueKind::Infinite).with_note(format!(
            "{} atom(s) on the unit circle, e.g. at {}",
            atoms.len(),
            atoms[0].location
        )));
    }
    let circles: Vec<_> = mu
        .components()
        .iter()
        .filter_map(|c| match c {
            Component::Circle(cd) => Some(cd),
            _ => None,
        })
        .collect();
    if circles.is_empty() {
        return Ok(CriterionReport::new(id, 0.0, ValueKind::Certified).with_note("no circle part"));
    }
    let ((argmax, estimate), grid) = density_maximum(mu, cfg.lipschitz_grid)?;
    let stride = (grid.len() / 512).max(1);
    let samples: Vec<Sample> = grid.iter().step_by(stride).map(|&(t, v)| Sample::new(t, v)).collect();
    let declared: Option<f64> = circles.iter().map(|c| c.declared_sup()).sum();
    let report = match declared {
        Some(d) if estimate <= d * (1.0 + 1e-9) + 1e-15 => CriterionReport::new(id, d, ValueKind::Certified)
            .with_note(format!("declared sup {d}; grid maximum {estimate} at theta = {argmax}")),
        Some(d) => CriterionReport::new(id, estimate, ValueKind::GridEstimate).with_note(format!(
            "declared sup {d} is exceeded on the grid: {estimate} at theta = {argmax}"
        )),
        None => CriterionReport::new(id, estimate, ValueKind::GridEstimate)
            .with_note(format!("maximum at theta = {argmax}")),
    };
    Ok(report
        .with_grid(
            "theta",
            format!("{} equispaced angles, refined once around the 8 largest local maxima", grid.len()),
            grid.len(),
        )
        .with_samples(samples))
}

/// `max_ε μ(|z| > 1 - ε) / ε` over `ε = 2^-1 … eps_min`.
pub fn tail_ratio_sup(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let exps = CriteriaConfig::dyadic_exponents(cfg.eps_min);
    let ratios: Vec<(f64, f64)> = exps
        .par_iter()
        .map(|&m| {
            let eps = 2f64.powi(-m);
            Ok((eps, mu.tail_mass(eps)? / eps))
        })
        .collect::<Result<_>>()?;
    let sup = running_max(ratios.iter().map(|r| r.1));
    let divergent = diverges(&sup, cfg.divergence_window, cfg.divergence_growth);
    let constant = sup.last().copied().unwrap_or(0.0).max(0.0);
    let kind = if divergent {
        ValueKind::DivergentHeuristic
    } else {
        ValueKind::GridEstimate
    };
    Ok(CriterionReport::new(CriterionId::TailRatioSup, constant, kind)
        .with_grid(
            "epsilon",
            format!("eps = 2^-1 .. 2^-{}", exps.last().copied().unwrap_or(0)),
            exps.len(),
        )
        .with_samples(ratios.into_iter().map(|(e, r)| Sample::new(e, r)).collect()))
}

/// `max_{k ≤ K} k·|q_k|` with `q_k = ∫ t^k dμ`, for measures on the real line.
pub fn moment_decay_sup(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    if !mu.is_real_supported() {
        return Err(Error::Input("moment decay needs a measure on the real line".into()));
    }
    let kmax = cfg.moment_max_k.max(10);
    let q = mu.real_moments(kmax + 1)?;
    let weighted: Vec<f64> = (1..=kmax).map(|k| k as f64 * q[k].abs()).collect();
    let sup = running_max(weighted.iter().copied());
    // geometric checkpoints over the last decade of k
    let w = cfg.divergence_window.max(2);
    let checkpoints: Vec<f64> = (0..w)
        .map(|i| {
            let k = (kmax as f64 / 10.0 * 10f64.powf(i as f64 / (w - 1) as f64)).round() as usize;
            sup[k.clamp(1, kmax) - 1]
        })
        .collect();
    let divergent = diverges(&checkpoints, w, cfg.divergence_growth);
    let constant = *sup.last().unwrap();
    let kind = if divergent {
        ValueKind::DivergentHeuristic
    } else {
        ValueKind::GridEstimate
    };
    Ok(CriterionReport::new(CriterionId::MomentDecaySup, constant, kind)
        .with_grid("k", format!("k = 1 .. {kmax}"), kmax)
        .with_samples(
            weighted
                .iter()
                .enumerate()
                .map(|(i, v)| Sample::new((i + 1) as f64, *v))
                .collect(),
        ))
}

/// Angles every angular grid includes: the real axis, the atoms, and the
/// largest value of the circle density.
fn special_angles(mu: &SpectralMeasure) -> Result<Vec<f64>> {
    let mut angles = vec![0.0, PI];
    angles.extend(mu.all_atoms().filter(|a| a.mass > 0.0 && a.location.norm() > 0.0).map(|a| a.location.arg().rem_euclid(TAU)));
    if mu.has_circle_density() {
        let ((argmax, _), _) = density_maximum(mu, 1024)?;
        angles.push(argmax);
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    Ok(angles)
}

/// `count` equispaced angles from 0 plus the special ones.
fn angle_grid(count: usize, special: &[f64]) -> Vec<f64> {
    let mut angles: Vec<f64> = (0..count).map(|i| TAU * i as f64 / count as f64).collect();
    angles.extend_from_slice(special);
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    angles
}

fn spacing_count(spacing: f64, cap: usize) -> usize {
    ((TAU / spacing).ceil() as usize).clamp(1, cap.max(1))
}

/// `max μ(𝔻̄ ∩ B_r(z)) / r` over dyadic radii and centers on the circle.
pub fn carleson_constant(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let exps = CriteriaConfig::dyadic_exponents(cfg.radius_min);
    let special = special_angles(mu)?;
    let mut evaluations = 0;
    let mut per_radius = Vec::with_capacity(exps.len());
    for &m in &exps {
        let r = 2f64.powi(-m);
        let centers = angle_grid(spacing_count(r / 2.0, cfg.max_centers), &special);
        evaluations += centers.len();
        let best = centers
            .par_iter()
            .map(|&phi| Ok(mu.ball_mass(Complex64::from_polar(1.0, phi), r)? / r))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        per_radius.push((r, best));
    }
    let sup = running_max(per_radius.iter().map(|p| p.1));
    let divergent = diverges(&sup, cfg.divergence_window, cfg.divergence_growth);
    let kind = if divergent {
        ValueKind::DivergentHeuristic
    } else {
        ValueKind::GridEstimate
    };
    Ok(CriterionReport::new(CriterionId::CarlesonConstant, *sup.last().unwrap_or(&0.0), kind)
        .with_grid(
            "radius",
            format!(
                "r = 2^-1 .. 2^-{}; centers spaced r/2 on the circle, at most {} per radius, plus atom and density-peak angles",
                exps.last().copied().unwrap_or(0),
                cfg.max_centers
            ),
            evaluations,
        )
        .with_samples(per_radius.into_iter().map(|(r, v)| Sample::new(r, v)).collect()))
}

/// `∫ (1 - |z|²) / |1 - conj(z) w|² dν(w)` for `ν = μ|𝔻`.
pub fn embedding_kernel_integral(nu: &SpectralMeasure, z: Complex64) -> Result<f64> {
    let m = z.norm();
    let scale = (1.0 - m) * (1.0 + m);
    if z.norm() == 0.0 {
        return nu.total_mass();
    }
    let pole = 1.0 / z.conj();
    nu.integrate_real(
        |w| scale / (1.0 - z.conj() * w).norm_sqr(),
        Hints {
            pole: Some(pole),
            ..Hints::default()
        },
    )
}

/// Supremum of the Carleson embedding kernel integral of `μ|𝔻` over
/// `z = (1 - 2^-m) e^{iφ}`.
pub fn carleson_embedding_sup(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let nu = mu.restrict_to_open_disk();
    let exps = CriteriaConfig::dyadic_exponents(cfg.radius_min);
    let special = special_angles(mu)?;
    let mut evaluations = 1;
    let mut per_radius = vec![(0.0, embedding_kernel_integral(&nu, Complex64::new(0.0, 0.0))?)];
    for &m in &exps {
        let d = 2f64.powi(-m);
        let rho = 1.0 - d;
        let angles = angle_grid(spacing_count(d, cfg.max_angles), &special);
        evaluations += angles.len();
        let best = angles
            .par_iter()
            .map(|&phi| embedding_kernel_integral(&nu, Complex64::from_polar(rho, phi)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        per_radius.push((rho, best));
    }
    let sup = running_max(per_radius.iter().map(|p| p.1));
    let divergent = diverges(&sup, cfg.divergence_window, cfg.divergence_growth);
    let kind = if divergent {
        ValueKind::DivergentHeuristic
    } else {
        ValueKind::GridEstimate
    };
    Ok(CriterionReport::new(CriterionId::CarlesonEmbeddingSup, *sup.last().unwrap(), kind)
        .with_grid(
            "z_modulus",
            format!(
                "z = 0 and |z| = 1 - 2^-m for m = 1 .. {}; angular spacing 2^-m, at most {} angles, plus atom angles",
                exps.last().copied().unwrap_or(0),
                cfg.max_angles
            ),
            evaluations,
        )
        .with_samples(per_radius.into_iter().map(|(r, v)| Sample::new(r, v)).collect()))
}

/// Which side of the circle the resolvent grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Outside,
    Inside,
    Both,
}

/// `max |1 - |λ|²| · ‖(A - λ)^{-1} x‖²` over `|λ| = 1 ± 2^-m`.
pub fn resolvent_growth_sup(mu: &SpectralMeasure, cfg: &CriteriaConfig, side: Side) -> Result<CriterionReport> {
    let exps = CriteriaConfig::dyadic_exponents(cfg.radius_min);
    let special = special_angles(mu)?;
    let mut evaluations = 0;
    let mut skipped = 0;
    let mut samples = Vec::new();
    let mut flags = Vec::new();
    let sides: &[f64] = match side {
        Side::Outside => &[1.0],
        Side::Inside => &[-1.0],
        Side::Both => &[1.0, -1.0],
    };
    let mut constant: f64 = 0.0;
    for &sign in sides {
        let mut per_modulus = Vec::with_capacity(exps.len());
        for &m in &exps {
            let d = 2f64.powi(-m);
            let modulus = 1.0 + sign * d;
            let angles = angle_grid(spacing_count(d, cfg.max_angles), &special);
            evaluations += angles.len();
            let values = angles
                .par_iter()
                .map(|&phi| {
                    let lambda = Complex64::from_polar(modulus, phi);
                    match mu.resolvent_norm_sq(lambda) {
                        Ok(v) => Ok(Some((1.0 - modulus * modulus).abs() * v)),
                        Err(Error::Singular(_)) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<Option<f64>>>>()?;
            skipped += values.iter().filter(|v| v.is_none()).count();
            let best = values.into_iter().flatten().fold(0.0, f64::max);
            per_modulus.push((modulus, best));
        }
        let sup = running_max(per_modulus.iter().map(|p| p.1));
        flags.push(diverges(&sup, cfg.divergence_window, cfg.divergence_growth));
        constant = constant.max(*sup.last().unwrap_or(&0.0));
        samples.extend(per_modulus.into_iter().map(|(x, v)| Sample::new(x, v)));
    }
    let divergent = flags.iter().any(|f| *f);
    let kind = if divergent {
        ValueKind::DivergentHeuristic
    } else {
        ValueKind::GridEstimate
    };
    let which = match side {
        Side::Outside => "|lambda| = 1 + 2^-m",
        Side::Inside => "|lambda| = 1 - 2^-m",
        Side::Both => "|lambda| = 1 +/- 2^-m",
    };
    let mut report = CriterionReport::new(CriterionId::ResolventGrowthSup, constant, kind)
        .with_grid(
            "lambda_modulus",
            format!(
                "{which} for m = 1 .. {}; angular spacing 2^-m, at most {} angles, plus atom angles",
                exps.last().copied().unwrap_or(0),
                cfg.max_angles
            ),
            evaluations,
        )
        .with_samples(samples);
    if side == Side::Both {
        report = report.with_note(format!("divergent outside: {}, inside: {}", flags[0], flags[1]));
    }
    if skipped > 0 {
        let note = format!("{skipped} grid point(s) on the support skipped");
        report.note = Some(match report.note.take() {
            Some(n) => format!("{n}; {note}"),
            None => note,
        });
    }
    Ok(report)
}

/// Structural support radius of one component.
fn component_radius(c: &Component) -> f64 {
    match c {
        Component::Atoms(a) => a.iter().filter(|a| a.mass > 0.0).map(|a| a.location.norm()).fold(0.0, f64::max),
        Component::Circle(_) => 1.0,
        Component::Interval(iv) => iv.lower().abs().max(iv.upper().abs()),
        Component::Disk(d) => d.r_max(),
    }
}

fn weight_integral(mu: &SpectralMeasure) -> Result<f64> {
    mu.integrate_radial(
        |r| 1.0 / ((1.0 - r) * (1.0 + r)),
        Hints {
            pole: Some(Complex64::new(1.0, 0.0)),
            extra_pole: Some(Complex64::new(-1.0, 0.0)),
            ..Hints::default()
        },
    )
}

/// `∫ (1 - |z|²)^{-1} dμ`, infinite when `μ` charges the circle.
///
/// Components that reach `|z| = 1` are integrated over the discs
/// `|z| ≤ 1 - 2^-m`; the integral counts as divergent when the layer
/// increments stop shrinking geometrically.
pub fn sufficient_integral_bound(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> Result<CriterionReport> {
    let id = CriterionId::SufficientIntegralBound;
    if !mu.circle_atoms().is_empty() || mu.has_circle_density() {
        return Ok(CriterionReport::new(id, f64::INFINITY, ValueKind::Infinite).with_note("mu charges the unit circle"));
    }
    if mu.support_radius() > 1.0 + 1e-12 {
        return Ok(CriterionReport::new(id, f64::INFINITY, ValueKind::Infinite).with_note("support leaves the closed disc"));
    }
    let (inner, touching): (Vec<Component>, Vec<Component>) = mu
        .components()
        .iter()
        .cloned()
        .partition(|c| component_radius(c) < 1.0);
    let inner = SpectralMeasure::new(inner)?.with_quadrature(*mu.quadrature());
    let mut total = weight_integral(&inner)?;
    if touching.is_empty() {
        return Ok(CriterionReport::new(id, total, ValueKind::Certified));
    }
    let touching = SpectralMeasure::new(touching)?.with_quadrature(*mu.quadrature());
    let exps = CriteriaConfig::dyadic_exponents(cfg.eps_min);
    let partial: Vec<(f64, f64)> = exps
        .par_iter()
        .map(|&m| {
            let rho = 1.0 - 2f64.powi(-m);
            Ok((rho, weight_integral(&touching.restrict_to_radius(rho))?))
        })
        .collect::<Result<_>>()?;
    let increments: Vec<f64> = partial
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).max(0.0))
        .collect();
    let w = cfg.divergence_window.max(2).min(increments.len());
    let tail = &increments[increments.len() - w..];
    // geometric mean of successive increment ratios over the window
    let ratio = if tail[0] > 0.0 && tail[w - 1] > 0.0 {
        (tail[w - 1] / tail[0]).powf(1.0 / (w - 1).max(1) as f64)
    } else {
        0.0
    };
    let samples: Vec<Sample> = partial.iter().map(|&(rho, v)| Sample::new(rho, total + v)).collect();
    let grid = format!("discs |z| <= 1 - 2^-m, m = 1 .. {}", exps.last().copied().unwrap_or(0));
    if ratio > 0.9 {
        return Ok(CriterionReport::new(id, f64::INFINITY, ValueKind::DivergentHeuristic)
            .with_note(format!("layer increments shrink by only {ratio:.3} per halving of 1 - |z|"))
            .with_grid("disc_radius", grid, exps.len())
            .with_samples(samples));
    }
    let last = partial.last().map_or(0.0, |p| p.1);
    let remainder = increments.last().copied().unwrap_or(0.0) * ratio / (1.0 - ratio);
    total += last + remainder;
    let kind = if remainder <= mu.quadrature().rel_tol * total {
        ValueKind::Certified
    } else {
        ValueKind::GridEstimate
    };
    Ok(CriterionReport::new(id, total, kind)
        .with_note(format!("geometric tail estimate {remainder:e} beyond the last disc"))
        .with_grid("disc_radius", grid, exps.len())
        .with_samples(samples))
}

/// `‖x‖² / (1 - ν²)` when the support radius `ν` is below 1.
pub fn compact_support_bound(mu: &SpectralMeasure) -> Result<CriterionReport> {
    let id = CriterionId::CompactSupportBound;
    let nu = mu.support_radius();
    if nu < 1.0 - 1e-12 {
        let mass = mu.total_mass()?;
        Ok(CriterionReport::new(id, mass / (1.0 - nu * nu), ValueKind::Certified)
            .with_note(format!("support radius {nu}, total mass {mass}")))
    } else {
        Ok(CriterionReport::new(id, f64::INFINITY, ValueKind::Infinite).with_note(format!("support radius {nu} >= 1")))
    }
}
