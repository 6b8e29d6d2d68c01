//! Acceptance checks: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use besselkit::criteria::{
    carleson_constant, resolvent_growth_sup, sufficient_integral_bound, tail_ratio_sup, verdict, CriteriaConfig,
    Side, Status,
};
use besselkit::gram::{bessel_bound_profile, FastMatvec, GramSection, Orbit, Structure};
use besselkit::heat::{heat_measure, heat_tail, non_bessel_witness};
use besselkit::measure::{Atom, Component, DiskDensity, IntervalDensity, SpectralMeasure};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fmt<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn no_profile() -> CriteriaConfig {
    CriteriaConfig {
        profile: false,
        ..CriteriaConfig::default()
    }
}

fn arc_identity() -> Check {
    let mu = SpectralMeasure::normalized_arc();
    for n in [8, 256, 4096] {
        let g = GramSection::build(&mu, n).map_err(fmt)?;
        ensure(g.structure() == Structure::Toeplitz, || format!("n = {n}: not Toeplitz"))?;
        let c = g.toeplitz_coefficients().unwrap();
        let off = c.iter().enumerate().map(|(m, v)| (v - if m == 0 { 1.0 } else { 0.0 }).norm()).fold(0.0, f64::max);
        ensure(off <= 1e-10, || format!("n = {n}: max |G - I| = {off:e}"))?;
        let norm = g.operator_norm(1e-12, 50).map_err(fmt)?.value;
        ensure((norm - 1.0).abs() <= 1e-10, || format!("n = {n}: norm {norm}"))?;
    }
    let r = resolvent_growth_sup(&mu, &no_profile(), Side::Inside).map_err(fmt)?;
    let worst = r.samples.iter().map(|s| (s.value - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("inner resolvent growth deviates from 1 by {worst:e}"))?;
    Ok(format!(
        "G_n = I for n = 8, 256, 4096; {} inner-grid samples within {worst:.1e} of 1",
        r.samples.len()
    ))
}

fn lebesgue() -> Check {
    let mu = SpectralMeasure::lebesgue(-1.0, 1.0).map_err(fmt)?;
    let profile = bessel_bound_profile(&mu, &[64, 128, 256, 512], 1e-10, 600).map_err(fmt)?;
    let norms: Vec<f64> = profile.points.iter().map(|p| p.norm).collect();
    ensure(norms.windows(2).all(|w| w[1] >= w[0]), || format!("profile not nondecreasing: {norms:?}"))?;
    ensure(norms.iter().all(|n| *n <= 2.0 * PI + 1e-8), || format!("profile exceeds 2 pi: {norms:?}"))?;
    let tail = tail_ratio_sup(&mu, &no_profile()).map_err(fmt)?;
    let t = tail.constant.unwrap();
    ensure((t - 2.0).abs() <= 1e-9, || format!("tail ratio {t}"))?;
    let v = verdict(&mu, &CriteriaConfig::default());
    ensure(v.status == Status::Bessel, || format!("verdict {:?}", v.status))?;
    Ok(format!("profile {norms:.6?} <= 2 pi; tail ratio {t:.12}; BESSEL"))
}

fn discrete_example() -> Check {
    let mu = SpectralMeasure::from_atoms((1..=60).map(|n| Atom::real(1.0 - 1.0 / n as f64, 2f64.powi(-2 * n))))
        .map_err(fmt)?;
    let series: f64 = (1..=60).map(|n| 2f64.powi(-2 * n) * (n * n) as f64 / (2 * n - 1) as f64).sum();
    let r = sufficient_integral_bound(&mu, &no_profile()).map_err(fmt)?;
    let bound = r.constant.unwrap();
    ensure((bound - series).abs() <= 1e-12, || format!("integral {bound} vs series {series}"))?;
    let g = GramSection::build(&mu, 512).map_err(fmt)?;
    let norm = g.operator_norm(1e-10, 600).map_err(fmt)?.value;
    ensure(norm <= bound + 1e-8, || format!("||G_512|| = {norm} > {bound}"))?;
    let v = verdict(&mu, &CriteriaConfig::default());
    ensure(v.status == Status::Bessel, || format!("verdict {:?}", v.status))?;
    Ok(format!("bound {bound:.15} (series {series:.15}); ||G_512|| = {norm:.6}; BESSEL"))
}

fn heat() -> Check {
    let mu = heat_measure(1.0).map_err(fmt)?;
    let v = verdict(&mu, &CriteriaConfig::default());
    ensure(v.status == Status::NotBessel, || format!("verdict {:?}", v.status))?;
    let cfg = CriteriaConfig {
        eps_min: 2f64.powi(-20),
        ..no_profile()
    };
    let w = non_bessel_witness(1.0, &cfg).map_err(fmt)?;
    let ratios: Vec<f64> = w.samples.iter().map(|s| s.value).collect();
    let last = *ratios.last().unwrap();
    ensure(last > 1e3, || format!("ratio at 2^-20 is {last}"))?;
    let tail10 = &ratios[ratios.len() - 10..];
    ensure(tail10.windows(2).all(|p| p[1] > p[0]), || format!("last ratios not increasing: {tail10:?}"))?;
    let worst = w
        .samples
        .iter()
        .map(|s| ((s.value - s.reference.unwrap()) / s.reference.unwrap()).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("quadrature vs closed-form tail differ by {worst:e}"))?;
    for m in 1..=20 {
        let eps = 2f64.powi(-m);
        if eps <= 1.0 - (-0.25f64).exp() {
            let q = mu.tail_mass(eps).map_err(fmt)?;
            let exact = heat_tail(1.0, eps).map_err(fmt)?;
            ensure(((q - exact) / exact).abs() <= 1e-6, || format!("tail at 2^-{m}: {q} vs {exact}"))?;
        }
    }
    let k = 1_000_000usize;
    let kq = k as f64 * mu.moment(k, 0).map_err(fmt)?.re;
    let kf = k as f64;
    let oracle = (PI * kf).sqrt() * erf(kf.sqrt() / 2.0);
    let rel = (kq - oracle).abs() / oracle;
    ensure(rel <= 1e-3, || format!("k q_k = {kq} vs {oracle}"))?;
    Ok(format!(
        "NOT_BESSEL via {:?}; ratio(2^-20) = {last:.1}; tails agree to {worst:.1e}; k q_k at 1e6 off by {rel:.1e}",
        v.witness.map(|w| w.as_str())
    ))
}

fn toeplitz_symbol() -> Check {
    let mu = SpectralMeasure::circle("1 + 0.5*cos(theta)").map_err(fmt)?;
    let g = GramSection::build(&mu, 4096).map_err(fmt)?;
    let norm = g.operator_norm(1e-4, 600).map_err(fmt)?;
    ensure((1.49..=1.5 + 1e-6).contains(&norm.value), || format!("||G_4096|| = {}", norm.value))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let small = g.truncated(1024);
    let v: Vec<Complex64> = (0..1024).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let fast = small.matvec(&v).map_err(fmt)?;
    let dense = small.dense_matvec(&v).map_err(fmt)?;
    let diff = fast.iter().zip(&dense).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let scale = dense.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    ensure(diff <= 1e-10 * scale, || format!("FFT vs dense at 1024: relative {:e}", diff / scale))?;

    let v: Vec<Complex64> = (0..4096).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let plan = FastMatvec::new(&g);
    let reps = 5;
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(plan.apply(std::hint::black_box(&v)));
    }
    let t_fft = t.elapsed();
    let t = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(g.dense_matvec(std::hint::black_box(&v)).map_err(fmt)?);
    }
    let t_dense = t.elapsed();
    let speedup = t_dense.as_secs_f64() / t_fft.as_secs_f64();
    ensure(speedup >= 10.0, || format!("FFT matvec only {speedup:.1}x faster"))?;
    Ok(format!(
        "||G_4096|| = {:.6} ({} Lanczos steps); FFT vs dense at 1024: {:.1e}; FFT {speedup:.0}x faster at 4096",
        norm.value,
        norm.iterations,
        diff / scale
    ))
}

fn non_carleson() -> Check {
    let mu = SpectralMeasure::from_atoms((1..=30).map(|n| Atom::real(1.0 - 2f64.powi(-n), n as f64 * 2f64.powi(-n))))
        .map_err(fmt)?;
    let mass = mu.total_mass().map_err(fmt)?;
    // Σ_{n ≤ N} n 2^-n = 2 - (N + 2) 2^-N
    let partial = 2.0 - 32.0 * 2f64.powi(-30);
    ensure((mass - partial).abs() <= 1e-12, || format!("total mass {mass} vs {partial}"))?;
    let cfg = no_profile();
    let c = carleson_constant(&mu, &cfg).map_err(fmt)?;
    let r = resolvent_growth_sup(&mu, &cfg, Side::Outside).map_err(fmt)?;
    ensure(c.divergent, || "carleson constant not flagged divergent".into())?;
    ensure(r.divergent, || "resolvent growth not flagged divergent".into())?;
    Ok(format!(
        "total mass {mass:.12} (2 minus the tail 32 * 2^-30 beyond n = 30); Carleson {:.1} and resolvent {:.1} both divergent",
        c.constant.unwrap(),
        r.constant.unwrap()
    ))
}

fn stieltjes() -> Check {
    let mu = SpectralMeasure::from_atoms([Atom::real(1.0, 1.0)]).map_err(fmt)?;
    let radii: Vec<f64> = (1..=16).map(|m| 1.0 - 2f64.powi(-m)).collect();
    let interior = mu.stieltjes_inversion(-0.5, 0.5, &radii).map_err(fmt)?;
    let endpoint = mu.stieltjes_inversion(0.0, 1.0, &radii).map_err(fmt)?;
    for (i, (a, b)) in interior.iter().zip(&endpoint).enumerate() {
        let tol = 2f64.powi(-(i as i32 + 1) + 3);
        ensure((a - 1.0).abs() <= tol, || format!("interior arc at m = {}: {a}", i + 1))?;
        ensure((b - 0.5).abs() <= tol, || format!("endpoint arc at m = {}: {b}", i + 1))?;
    }
    Ok(format!(
        "at r = 1 - 2^-16: interior arc {:.6}, endpoint arc {:.6}",
        interior.last().unwrap(),
        endpoint.last().unwrap()
    ))
}

fn random_mixed(rng: &mut ChaCha8Rng) -> SpectralMeasure {
    let atoms: Vec<Atom> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let z = Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..2.0 * PI));
            Atom::new(z, rng.gen_range(0.1..1.0))
        })
        .collect();
    let mut parts = vec![Component::Atoms(atoms)];
    let a = rng.gen_range(0.5..1.5);
    let b = rng.gen_range(0.0..a);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let r_max = rng.gen_range(0.5..1.0);
    parts.push(Component::Disk(
        DiskDensity::new(&format!("{a} + {b}*r*cos(theta - {phase})")).unwrap().with_radii(0.0, r_max),
    ));
    if rng.gen_bool(0.5) {
        let lo = rng.gen_range(-1.0..0.0);
        let hi = rng.gen_range(0.0..1.0);
        let c = rng.gen_range(0.0..2.0);
        parts.push(Component::Interval(IntervalDensity::new(lo, hi, &format!("1 + {c}*t^2")).unwrap()));
    }
    if rng.gen_bool(0.5) {
        let k = rng.gen_range(1..4);
        let s = rng.gen_range(0.1..0.5);
        parts.push(Component::Circle(
            besselkit::measure::CircleDensity::new(&format!("{s}*(1 + cos({k}*theta))")).unwrap(),
        ));
    }
    SpectralMeasure::new(parts).unwrap()
}

fn adjoint_symmetry() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xad01);
    let n = 24;
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let mu = random_mixed(&mut rng);
        let forward = GramSection::build_orbit(&mu, n, Orbit::Forward).map_err(fmt)?;
        let adjoint = GramSection::build_orbit(&mu, n, Orbit::Adjoint).map_err(fmt)?;
        let a = forward.operator_norm(1e-12, n).map_err(fmt)?.value;
        let b = adjoint.operator_norm(1e-12, n).map_err(fmt)?.value;
        let rel = (a - b).abs() / a;
        ensure(rel <= 1e-9, || format!("spec {i}: {a} vs {b}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("20 random mixed specs at n = {n}: norms agree to {worst:.1e}"))
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Check);
    let criteria: [Criterion; 8] = [
        ("normalized arc: identity sections, inner resolvent growth 1", 5, arc_identity),
        ("Lebesgue on [-1, 1]: profile <= 2 pi, tail ratio 2, BESSEL", 10, lebesgue),
        ("discrete example: integral bound, Gram norm, BESSEL", 10, discrete_example),
        ("heat measure: NOT_BESSEL, tail growth, moments, tails", 30, heat),
        ("Toeplitz symbol: norm -> 1.5, FFT matvec accuracy and speed", 60, toeplitz_symbol),
        ("non-Carleson atoms: Carleson and resolvent flags agree", 10, non_carleson),
        ("Stieltjes inversion at the atom 1", 5, stieltjes),
        ("adjoint orbit: equal Gram norms on random mixed measures", 30, adjoint_symmetry),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {budget} s budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {}: {status} [{:.2} s / {budget} s] {name}: {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
