use std::f64::consts::TAU;

use besselkit::densexpr::{Bindings, DensityExpr, Var};
use besselkit::gram::GramSection;
use besselkit::measure::{Atom, CircleDensity, Component, DiskDensity, IntervalDensity, SpectralMeasure};
use num_complex::Complex64;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Spec {
    atoms: Vec<(f64, f64, f64)>,
    circle: Option<(f64, f64, u32, f64)>,
    interval: Option<(f64, f64, f64)>,
    disk: Option<(f64, f64, f64)>,
}

impl Spec {
    fn measure(&self) -> SpectralMeasure {
        let mut parts = vec![Component::Atoms(
            self.atoms
                .iter()
                .map(|&(r, phi, m)| Atom::new(Complex64::from_polar(r, phi), m))
                .collect(),
        )];
        if let Some((a, b, k, p)) = self.circle {
            parts.push(Component::Circle(
                CircleDensity::new(&format!("{a} + {b}*cos({k}*theta - {p})")).unwrap(),
            ));
        }
        if let Some((lo, hi, c)) = self.interval {
            parts.push(Component::Interval(IntervalDensity::new(lo, hi, &format!("1 + {c}*t")).unwrap()));
        }
        if let Some((a, b, r_max)) = self.disk {
            parts.push(Component::Disk(
                DiskDensity::new(&format!("{a} + {b}*r*sin(theta)")).unwrap().with_radii(0.0, r_max),
            ));
        }
        SpectralMeasure::new(parts).unwrap()
    }
}

fn atom() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..0.95f64, 0.0..TAU, 0.05..1.0f64)
}

fn spec() -> impl Strategy<Value = Spec> {
    (
        prop::collection::vec(atom(), 1..4),
        prop::option::of((0.5..1.5f64, 0.0..1.0f64, 1u32..4, 0.0..TAU).prop_map(|(a, s, k, p)| (a, s * a, k, p))),
        prop::option::of((-0.9..0.0f64, 0.1..0.9f64, -0.9..0.9f64)),
        prop::option::of((0.5..1.5f64, 0.0..1.0f64, 0.3..0.95f64).prop_map(|(a, s, r)| (a, s * a, r))),
    )
        .prop_map(|(atoms, circle, interval, disk)| Spec {
            atoms,
            circle,
            interval,
            disk,
        })
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b)), n)
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn moments_are_hermitian(s in spec(), k in 0usize..6, j in 0usize..6) {
        let mu = s.measure();
        let mass = mu.total_mass().unwrap();
        let a = mu.moment(k, j).unwrap();
        let b = mu.moment(j, k).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-10 * mass, "{a} vs {b}");
    }

    #[test]
    fn gram_quadratic_form_is_the_polynomial_norm(s in spec(), c in coefficients(6)) {
        let mu = s.measure();
        let n = c.len();
        let g = GramSection::build(&mu, n).unwrap();
        for j in 0..n {
            for k in 0..n {
                let m = mu.moment(k, j).unwrap();
                prop_assert!((g.entry(j, k) - m).norm() <= 1e-10 * m.norm().max(1.0));
            }
        }
        let gc = g.matvec(&c).unwrap();
        let form: Complex64 = c.iter().zip(&gc).map(|(a, b)| a.conj() * b).sum();
        let direct = mu
            .integrate_fn(|z| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ck| acc * z + ck).norm_sqr())
            .unwrap();
        let scale = mu.total_mass().unwrap() * c.iter().map(|x| x.norm()).sum::<f64>().powi(2);
        prop_assert!(form.re >= -1e-12 * scale);
        prop_assert!(form.im.abs() <= 1e-10 * scale);
        prop_assert!((form.re - direct).abs() <= 1e-9 * scale, "{form} vs {direct}");
    }

    #[test]
    fn section_norms_are_nondecreasing(s in spec()) {
        let mu = s.measure();
        let g = GramSection::build(&mu, 8).unwrap();
        let mut prev = 0.0;
        for m in 1..=8 {
            let norm = g.truncated(m).operator_norm_dense(1e-12, 64).unwrap().value;
            prop_assert!(norm >= prev - 1e-10 * norm, "n = {m}: {norm} < {prev}");
            prev = norm;
        }
    }

    #[test]
    fn integrals_are_additive(s in spec(), t in spec(), k in 0usize..5, j in 0usize..5, scale in 0.1..10.0f64) {
        let (mu, nu) = (s.measure(), t.measure());
        let sum = mu.plus(&nu).unwrap();
        let lhs = sum.moment(k, j).unwrap();
        let rhs = mu.moment(k, j).unwrap() + nu.moment(k, j).unwrap();
        let size = sum.total_mass().unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * size);
        let center = Complex64::from_polar(1.0, 0.7);
        let ball = sum.ball_mass(center, 0.5).unwrap();
        let parts = mu.ball_mass(center, 0.5).unwrap() + nu.ball_mass(center, 0.5).unwrap();
        prop_assert!((ball - parts).abs() <= 1e-9 * size, "{ball} vs {parts}");
        let scaled = mu.scaled(scale).unwrap().moment(k, j).unwrap();
        prop_assert!((scaled - mu.moment(k, j).unwrap() * scale).norm() <= 1e-10 * scale * size);
        let split = mu.restrict_to_circle().total_mass().unwrap() + mu.restrict_to_open_disk().total_mass().unwrap();
        prop_assert!((split - mu.total_mass().unwrap()).abs() <= 1e-10 * size);
    }

    #[test]
    fn poisson_integral_is_the_harmonic_extension(
        a in 0.5..1.5f64,
        b in 0.0..0.5f64,
        k in 1i32..4,
        p in 0.0..TAU,
        circle_atoms in prop::collection::vec((0.0..TAU, 0.05..1.0f64), 0..3),
        rho in 0.05..0.95f64,
        arg in 0.0..TAU,
    ) {
        let mut parts = vec![Component::Circle(CircleDensity::new(&format!("{a} + {b}*cos({k}*theta - {p})")).unwrap())];
        parts.push(Component::Atoms(circle_atoms.iter().map(|&(phi, m)| Atom::new(Complex64::from_polar(1.0, phi), m)).collect()));
        let mu = SpectralMeasure::new(parts).unwrap();
        let w = Complex64::from_polar(rho, arg);
        let poisson = |w: Complex64, z: Complex64| (1.0 - w.norm_sqr()) / (z - w).norm_sqr();
        let expected = a
            + b * rho.powi(k) * (k as f64 * arg - p).cos()
            + circle_atoms.iter().map(|&(phi, m)| m * poisson(w, Complex64::from_polar(1.0, phi))).sum::<f64>();
        let got = mu.poisson_integral(w).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
        // the same integral through the resolvent, on both sides of the circle
        for w in [w, 1.0 / w.conj()] {
            let via_resolvent = (1.0 - w.norm_sqr()) * mu.resolvent_norm_sq(w).unwrap();
            let direct = mu.poisson_integral(w).unwrap();
            prop_assert!((direct - via_resolvent).abs() <= 1e-9 * direct.abs(), "{direct} vs {via_resolvent}");
        }
    }
}

fn expression() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-5.0..5.0f64).prop_map(|x| format!("{x}")),
        Just("t".to_string()),
        Just("theta".to_string()),
        Just("pi".to_string()),
        Just("0".to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a}){op}({b})")),
            (prop::sample::select(vec!["exp", "log", "sqrt", "abs", "sin", "cos", "-"]), inner)
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, ..ProptestConfig::default() })]

    #[test]
    fn parsing_is_total(source in "\\PC{0,40}") {
        let _ = DensityExpr::parse(&source, &[Var::T, Var::Theta]);
    }

    #[test]
    fn evaluation_is_total_and_finite(source in expression(), t in -2.0..2.0f64, theta in 0.0..TAU) {
        let e = DensityExpr::parse(&source, &[Var::T, Var::Theta]).unwrap();
        if let Ok(v) = e.eval(&Bindings::new().with(Var::T, t).with(Var::Theta, theta)) {
            prop_assert!(v.is_finite());
        }
        // undeclared variables are rejected, not defaulted
        if e.variables().contains(&Var::Theta) {
            prop_assert!(DensityExpr::parse(&source, &[Var::T]).is_err());
        }
    }
}
