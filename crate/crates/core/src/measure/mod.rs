//! Finite positive Borel measures on the complex plane.
//!
//! A [`SpectralMeasure`] is a finite list of [`Component`]s, each one of
//!
//! * point masses at arbitrary complex locations,
//! * a density `f(θ)` on the unit circle, taken with respect to the
//!   **normalized** arc measure `dθ/2π` (so `f ≡ 1` has total mass 1),
//! * a density `f(t)` on a real interval, with respect to `dt`,
//! * a density `g(r, θ)` on an annulus `r_min ≤ r < r_max ≤ 1`, with respect to
//!   planar Lebesgue measure `r dr dθ`.
//!
//! The arc normalization matters: it is the scale in which an essential
//! supremum of the circle density is a Bessel bound.
//!
//! All integrals are sums over components in declaration order, so they are
//! reproducible bit for bit.

mod batch;
mod json;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::densexpr::{Bindings, DensityExpr, ParseError, Var};
use crate::error::{Error, Result};
use crate::quadrature::{
    graded_breakpoints, integrate_interval_vec, integrate_periodic_vec, integrate_vec, Focus, QuadConfig, Singular,
};

/// Points with `||z| - 1| <= ON_CIRCLE_TOL` count as lying on the unit circle.
pub const ON_CIRCLE_TOL: f64 = 1e-12;

/// Distance below which a resolvent kernel is considered to hit the support.
const POLE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Complex64,
    pub mass: f64,
}

impl Atom {
    pub fn new(location: Complex64, mass: f64) -> Self {
        Self { location, mass }
    }

    pub fn real(location: f64, mass: f64) -> Self {
        Self::new(Complex64::new(location, 0.0), mass)
    }

    pub fn on_circle(&self) -> bool {
        (self.location.norm() - 1.0).abs() <= ON_CIRCLE_TOL
    }

    pub fn on_real_line(&self) -> bool {
        self.location.im == 0.0
    }
}

/// Density on the unit circle w.r.t. normalized arc measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDensity {
    density: DensityExpr,
    declared_sup: Option<f64>,
}

impl CircleDensity {
    pub fn new(source: &str) -> Result<Self, ParseError> {
        Ok(Self {
            density: DensityExpr::parse(source, &[Var::Theta])?,
            declared_sup: None,
        })
    }

    /// Records a known essential supremum of the density, which lets the
    /// Lipschitz criterion report a certified rather than estimated constant.
    pub fn with_declared_sup(mut self, sup: f64) -> Self {
        self.declared_sup = Some(sup);
        self
    }

    pub fn density(&self) -> &DensityExpr {
        &self.density
    }

    pub fn declared_sup(&self) -> Option<f64> {
        self.declared_sup
    }
}

/// Density on `[lower, upper] ⊂ ℝ` w.r.t. `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDensity {
    lower: f64,
    upper: f64,
    density: DensityExpr,
    singular: Singular,
}

impl IntervalDensity {
    pub fn new(lower: f64, upper: f64, source: &str) -> Result<Self, ParseError> {
        Ok(Self {
            lower,
            upper,
            density: DensityExpr::parse(source, &[Var::T])?,
            singular: Singular::default(),
        })
    }

    /// Marks endpoints where the density blows up like an inverse square root.
    pub fn with_singular(mut self, singular: Singular) -> Self {
        self.singular = singular;
        self
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn density(&self) -> &DensityExpr {
        &self.density
    }

    pub fn singular(&self) -> Singular {
        self.singular
    }
}

/// Density `g(r, θ)` on the annulus `r_min ≤ r < r_max` w.r.t. `r dr dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskDensity {
    density: DensityExpr,
    r_min: f64,
    r_max: f64,
}

impl DiskDensity {
    pub fn new(source: &str) -> Result<Self, ParseError> {
        Ok(Self {
            density: DensityExpr::parse(source, &[Var::R, Var::Theta])?,
            r_min: 0.0,
            r_max: 1.0,
        })
    }

    pub fn with_radii(mut self, r_min: f64, r_max: f64) -> Self {
        self.r_min = r_min;
        self.r_max = r_max;
        self
    }

    pub fn density(&self) -> &DensityExpr {
        &self.density
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Atoms(Vec<Atom>),
    Circle(CircleDensity),
    Interval(IntervalDensity),
    Disk(DiskDensity),
}

impl Component {
    pub fn kind(&self) -> &'static str {
        match self {
            Component::Atoms(_) => "atoms",
            Component::Circle(_) => "circle",
            Component::Interval(_) => "interval",
            Component::Disk(_) => "disk",
        }
    }
}

/// Hints that shape the initial quadrature mesh of a kernel integral.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Hints {
    /// The kernel has a pole (or sharp peak) here.
    pub pole: Option<Complex64>,
    /// A second pole, refined toward like the first.
    pub extra_pole: Option<Complex64>,
    /// The kernel behaves like `|z|^power`, so it concentrates near `|z| = 1`.
    pub power: usize,
    /// The kernel oscillates like `e^{i·oscillation·θ}`.
    pub oscillation: usize,
}

/// A finite positive measure on ℂ, standing for `‖E(·)x‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    components: Vec<Component>,
    quad: QuadConfig,
}

impl SpectralMeasure {
    /// Validates the components and builds the measure. Errors cite the index
    /// of the offending component.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        for (index, c) in components.iter().enumerate() {
            validate(index, c)?;
        }
        Ok(Self {
            components,
            quad: QuadConfig::default(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn quadrature(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Parses the JSON measure document (a list of tagged components).
    pub fn from_json(text: &str) -> Result<Self> {
        json::parse(text)
    }

    pub fn to_json(&self) -> String {
        json::render(self)
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        Self::new(vec![Component::Atoms(atoms.into_iter().collect())])
    }

    /// Normalized arc measure on the unit circle (total mass 1).
    pub fn normalized_arc() -> Self {
        Self::new(vec![Component::Circle(
            CircleDensity::new("1").expect("constant density").with_declared_sup(1.0),
        )])
        .expect("valid")
    }

    pub fn circle(source: &str) -> Result<Self> {
        let c = CircleDensity::new(source).map_err(|error| parse_err(0, source, error))?;
        Self::new(vec![Component::Circle(c)])
    }

    pub fn interval(lower: f64, upper: f64, source: &str) -> Result<Self> {
        let c = IntervalDensity::new(lower, upper, source).map_err(|error| parse_err(0, source, error))?;
        Self::new(vec![Component::Interval(c)])
    }

    /// Lebesgue measure on `[lower, upper]`.
    pub fn lebesgue(lower: f64, upper: f64) -> Result<Self> {
        Self::interval(lower, upper, "1")
    }

    pub fn disk(source: &str) -> Result<Self> {
        let c = DiskDensity::new(source).map_err(|error| parse_err(0, source, error))?;
        Self::new(vec![Component::Disk(c)])
    }

    /// Concatenates the components of two measures (the sum of the measures).
    pub fn plus(&self, other: &SpectralMeasure) -> Result<Self> {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        Ok(Self::new(components)?.with_quadrature(self.quad))
    }

    /// The measure `s·μ`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Input(format!("scale factor must be positive, got {s}")));
        }
        let scale = |index: usize, e: &DensityExpr, vars: &[Var]| {
            let src = format!("{s:?}*({})", e.source());
            DensityExpr::parse(&src, vars).map_err(|error| parse_err(index, &src, error))
        };
        let mut components = Vec::with_capacity(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            components.push(match c {
                Component::Atoms(a) => {
                    Component::Atoms(a.iter().map(|a| Atom::new(a.location, a.mass * s)).collect())
                }
                Component::Circle(c) => Component::Circle(CircleDensity {
                    density: scale(i, &c.density, &[Var::Theta])?,
                    declared_sup: c.declared_sup.map(|v| v * s),
                }),
                Component::Interval(c) => Component::Interval(IntervalDensity {
                    density: scale(i, &c.density, &[Var::T])?,
                    ..c.clone()
                }),
                Component::Disk(c) => Component::Disk(DiskDensity {
                    density: scale(i, &c.density, &[Var::R, Var::Theta])?,
                    ..c.clone()
                }),
            });
        }
        Ok(Self::new(components)?.with_quadrature(self.quad))
    }

    /// The restriction `μ|𝕋`: circle densities and atoms on the circle.
    pub fn restrict_to_circle(&self) -> Self {
        let mut components = Vec::new();
        for c in &self.components {
            match c {
                Component::Atoms(a) => {
                    let on: Vec<Atom> = a.iter().copied().filter(Atom::on_circle).collect();
                    if !on.is_empty() {
                        components.push(Component::Atoms(on));
                    }
                }
                Component::Circle(_) => components.push(c.clone()),
                _ => {}
            }
        }
        Self {
            components,
            quad: self.quad,
        }
    }

    /// The restriction `μ|𝔻` to the open unit disc.
    pub fn restrict_to_open_disk(&self) -> Self {
        let mut components = Vec::new();
        for c in &self.components {
            match c {
                Component::Atoms(a) => {
                    let inside: Vec<Atom> = a
                        .iter()
                        .copied()
                        .filter(|a| a.location.norm() < 1.0 - ON_CIRCLE_TOL)
                        .collect();
                    if !inside.is_empty() {
                        components.push(Component::Atoms(inside));
                    }
                }
                Component::Circle(_) => {}
                Component::Interval(iv) => {
                    let lo = iv.lower.max(-1.0);
                    let hi = iv.upper.min(1.0);
                    if hi > lo {
                        let singular = Singular {
                            lower: iv.singular.lower && lo == iv.lower,
                            upper: iv.singular.upper && hi == iv.upper,
                        };
                        components.push(Component::Interval(IntervalDensity {
                            lower: lo,
                            upper: hi,
                            density: iv.density.clone(),
                            singular,
                        }));
                    }
                }
                Component::Disk(d) => {
                    let hi = d.r_max.min(1.0);
                    if hi > d.r_min {
                        components.push(Component::Disk(DiskDensity {
                            r_max: hi,
                            ..d.clone()
                        }));
                    }
                }
            }
        }
        Self {
            components,
            quad: self.quad,
        }
    }

    /// The restriction to the closed disc `|z| ≤ rho`, for `rho < 1`.
    pub fn restrict_to_radius(&self, rho: f64) -> Self {
        let mut components = Vec::new();
        for c in &self.components {
            match c {
                Component::Atoms(a) => {
                    let inside: Vec<Atom> = a.iter().copied().filter(|a| a.location.norm() <= rho).collect();
                    if !inside.is_empty() {
                        components.push(Component::Atoms(inside));
                    }
                }
                Component::Circle(_) => {
                    if rho >= 1.0 {
                        components.push(c.clone());
                    }
                }
                Component::Interval(iv) => {
                    let lo = iv.lower.max(-rho);
                    let hi = iv.upper.min(rho);
                    if hi > lo {
                        components.push(Component::Interval(IntervalDensity {
                            lower: lo,
                            upper: hi,
                            density: iv.density.clone(),
                            singular: Singular {
                                lower: iv.singular.lower && lo == iv.lower,
                                upper: iv.singular.upper && hi == iv.upper,
                            },
                        }));
                    }
                }
                Component::Disk(d) => {
                    let hi = d.r_max.min(rho);
                    if hi > d.r_min {
                        components.push(Component::Disk(DiskDensity { r_max: hi, ..d.clone() }));
                    }
                }
            }
        }
        Self {
            components,
            quad: self.quad,
        }
    }

    /// True when all mass sits on the unit circle.
    pub fn is_circle_supported(&self) -> bool {
        self.components.iter().all(|c| match c {
            Component::Atoms(a) => a.iter().all(|a| a.mass == 0.0 || a.on_circle()),
            Component::Circle(_) => true,
            _ => false,
        })
    }

    /// True when all mass sits on the real line.
    pub fn is_real_supported(&self) -> bool {
        self.components.iter().all(|c| match c {
            Component::Atoms(a) => a.iter().all(|a| a.mass == 0.0 || a.on_real_line()),
            Component::Interval(_) => true,
            _ => false,
        })
    }

    pub fn has_circle_density(&self) -> bool {
        self.components.iter().any(|c| matches!(c, Component::Circle(_)))
    }

    /// Atoms of positive mass located on the unit circle.
    pub fn circle_atoms(&self) -> Vec<Atom> {
        self.all_atoms().filter(|a| a.mass > 0.0 && a.on_circle()).collect()
    }

    pub(crate) fn all_atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.components.iter().flat_map(|c| match c {
            Component::Atoms(a) => a.as_slice(),
            _ => &[],
        })
        .copied()
    }

    /// `μ(ℂ)`, i.e. `‖x‖²`.
    pub fn total_mass(&self) -> Result<f64> {
        self.integrate_real(|_| 1.0, Hints::default())
    }

    /// `∫ z^k conj(z)^j dμ = ⟨A^k x, A^j x⟩`.
    pub fn moment(&self, k: usize, j: usize) -> Result<Complex64> {
        let hints = Hints {
            power: k + j,
            oscillation: k.abs_diff(j),
            ..Hints::default()
        };
        self.integrate_complex(
            |z| {
                let zk = powu(z, k);
                let zj = powu(z.conj(), j);
                zk * zj
            },
            hints,
        )
    }

    /// `μ({|z| > 1 - ε})`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Input(format!("tail width must lie in (0, 1), got {eps}")));
        }
        let rho = 1.0 - eps;
        let mut total = 0.0;
        for (index, c) in self.components.iter().enumerate() {
            total += match c {
                Component::Atoms(a) => a.iter().filter(|a| a.location.norm() > rho).map(|a| a.mass).sum(),
                Component::Circle(cd) => self.circle_mass_on(index, cd, 0.0, TAU)?,
                Component::Interval(iv) => {
                    let mut m = 0.0;
                    if iv.upper > rho {
                        m += self.interval_mass_on(index, iv, iv.lower.max(rho), iv.upper)?;
                    }
                    if iv.lower < -rho {
                        m += self.interval_mass_on(index, iv, iv.lower, iv.upper.min(-rho))?;
                    }
                    m
                }
                Component::Disk(d) => {
                    let lo = d.r_min.max(rho);
                    if d.r_max > lo {
                        self.disk_integrate(index, d, lo, d.r_max, &|_| Some((0.0, TAU)), &|_| Vec::new(), &[], Singular::default(), 8, 1, &|_, _, out| out[0] = 1.0)?[0]
                    } else {
                        0.0
                    }
                }
            };
        }
        Ok(total)
    }

    /// `μ(𝔻̄ ∩ B_r(z₀))` for `z₀` on the unit circle (open ball).
    pub fn ball_mass(&self, center: Complex64, radius: f64) -> Result<f64> {
        if (center.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!(
                "ball center must lie on the unit circle, |z0| = {}",
                center.norm()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Input(format!("ball radius must be positive, got {radius}")));
        }
        let phi = center.arg();
        let mut total = 0.0;
        for (index, c) in self.components.iter().enumerate() {
            total += match c {
                Component::Atoms(a) => a
                    .iter()
                    .filter(|a| a.location.norm() <= 1.0 + ON_CIRCLE_TOL && (a.location - center).norm() < radius)
                    .map(|a| a.mass)
                    .sum(),
                Component::Circle(cd) => {
                    if radius >= 2.0 {
                        self.circle_mass_on(index, cd, 0.0, TAU)?
                    } else {
                        let half = 2.0 * (radius / 2.0).asin();
                        self.circle_mass_on(index, cd, phi - half, phi + half)?
                    }
                }
                Component::Interval(iv) => {
                    let (c, s) = (center.re, center.im);
                    if radius <= s.abs() {
                        0.0
                    } else {
                        let h = (radius * radius - s * s).sqrt();
                        let lo = iv.lower.max(c - h).max(-1.0);
                        let hi = iv.upper.min(c + h).min(1.0);
                        if hi > lo {
                            self.interval_mass_on(index, iv, lo, hi)?
                        } else {
                            0.0
                        }
                    }
                }
                Component::Disk(d) => {
                    let lo = d.r_min.max(1.0 - radius);
                    let hi = d.r_max.min(1.0);
                    if hi > lo {
                        let range = move |rr: f64| {
                            // |r e^{iθ} - e^{iφ}|² < radius² ⇔ cos(θ - φ) > (r² + 1 - radius²) / 2r
                            let c = (rr * rr + 1.0 - radius * radius) / (2.0 * rr);
                            if c <= -1.0 {
                                Some((phi - PI, phi + PI))
                            } else if c >= 1.0 {
                                None
                            } else {
                                let a = c.acos();
                                Some((phi - a, phi + a))
                            }
                        };
                        // the arc half-width vanishes like a square root at r = 1 - radius,
                        // and has a square-root kink where the arc becomes the full circle
                        let edge = 1.0 - radius;
                        let singular = Singular {
                            lower: lo == edge,
                            upper: false,
                        };
                        let kink = [Focus::new(radius - 1.0, 0.25 * radius)];
                        let focus: &[Focus] = if radius > 1.0 { &kink } else { &[] };
                        self.disk_integrate(index, d, lo, hi, &range, &|_| Vec::new(), focus, singular, 4, 1, &|_, _, out| {
                            out[0] = 1.0
                        })?[0]
                    } else {
                        0.0
                    }
                }
            };
        }
        Ok(total)
    }

    /// `sup{|z| : z ∈ supp μ}` read off the declared component domains.
    pub fn support_radius(&self) -> f64 {
        self.components
            .iter()
            .map(|c| match c {
                Component::Atoms(a) => a
                    .iter()
                    .filter(|a| a.mass > 0.0)
                    .map(|a| a.location.norm())
                    .fold(0.0, f64::max),
                Component::Circle(_) => 1.0,
                Component::Interval(iv) => iv.lower.abs().max(iv.upper.abs()),
                Component::Disk(d) => d.r_max,
            })
            .fold(0.0, f64::max)
    }

    /// `∫ |z - λ|^{-2} dμ(z) = ‖(A - λ)^{-1} x‖²`.
    ///
    /// Points of the support are only known to `ε|z|`, so the kernel carries
    /// a relative noise of order `ε / dist(λ, supp μ)`; the tolerance is
    /// relaxed to that level.
    pub fn resolvent_norm_sq(&self, lambda: Complex64) -> Result<f64> {
        self.check_pole(lambda)?;
        let floor = 64.0 * f64::EPSILON * lambda.norm().max(1.0) / self.support_distance(lambda);
        if floor > self.quad.rel_tol {
            let quad = QuadConfig {
                rel_tol: floor,
                ..self.quad
            };
            return self.clone().with_quadrature(quad).resolvent_norm_sq(lambda);
        }
        self.integrate_real(
            |z| 1.0 / (z - lambda).norm_sqr(),
            Hints {
                pole: Some(lambda),
                ..Hints::default()
            },
        )
    }

    /// Poisson integral `∫_𝕋 P(w, z) dμ(z)` of the circle part of `μ`, with
    /// `P(w, z) = (1 - |w|²) / |z - w|²`.
    pub fn poisson_integral(&self, w: Complex64) -> Result<f64> {
        if (w.norm() - 1.0).abs() <= POLE_TOL {
            return Err(Error::Singular(format!("Poisson kernel evaluated on the circle at w = {w}")));
        }
        let circle = self.restrict_to_circle();
        circle.check_pole(w)?;
        let scale = 1.0 - w.norm_sqr();
        circle.integrate_real(
            |z| scale / (z - w).norm_sqr(),
            Hints {
                pole: Some(w),
                ..Hints::default()
            },
        )
    }

    /// `∫_Δ 𝒫[μ|𝕋](r z) d|z|` over the open arc `Δ = (α, β)` for each `r`.
    /// As `r ↑ 1` the values tend to `μ(Δ) + ½ μ({e^{iα}, e^{iβ}})`.
    pub fn stieltjes_inversion(&self, alpha: f64, beta: f64, radii: &[f64]) -> Result<Vec<f64>> {
        if !(beta > alpha && beta - alpha <= TAU) {
            return Err(Error::Input(format!("arc ({alpha}, {beta}) is degenerate")));
        }
        if radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::Input("Stieltjes radii must lie in (0, 1)".into()));
        }
        let circle = self.restrict_to_circle();
        let atom_angles: Vec<f64> = circle.all_atoms().map(|a| a.location.arg()).collect();
        let mut out = Vec::with_capacity(radii.len());
        for &r in radii {
            let width = 0.25 * (1.0 - r);
            let mut focus = vec![Focus::new(alpha, width), Focus::new(beta, width)];
            for &phi in &atom_angles {
                for shift in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                    let a = phi + shift * TAU;
                    if a >= alpha && a <= beta {
                        focus.push(Focus::new(a, width));
                    }
                }
            }
            let bp = graded_breakpoints(alpha, beta, 16, &focus);
            let cfg = self.quad;
            let v = integrate_vec(
                |theta: f64, o: &mut [f64]| -> Result<()> {
                    o[0] = circle.poisson_integral(Complex64::from_polar(r, theta))? / TAU;
                    Ok(())
                },
                &bp,
                1,
                &cfg,
            )?;
            out.push(v[0]);
        }
        Ok(out)
    }

    /// `∫ F(z) dμ(z)` for a real integrand.
    pub fn integrate_fn(&self, f: impl Fn(Complex64) -> f64) -> Result<f64> {
        self.integrate_real(f, Hints::default())
    }

    /// Distance from `λ` to the declared support.
    pub(crate) fn support_distance(&self, lambda: Complex64) -> f64 {
        self.components
            .iter()
            .map(|c| match c {
                Component::Atoms(a) => a
                    .iter()
                    .filter(|a| a.mass > 0.0)
                    .map(|a| (a.location - lambda).norm())
                    .fold(f64::INFINITY, f64::min),
                Component::Circle(_) => (lambda.norm() - 1.0).abs(),
                Component::Interval(iv) => (lambda - Complex64::new(lambda.re.clamp(iv.lower, iv.upper), 0.0)).norm(),
                Component::Disk(d) => {
                    let m = lambda.norm();
                    (d.r_min - m).max(m - d.r_max).max(0.0)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_pole(&self, lambda: Complex64) -> Result<()> {
        for (index, c) in self.components.iter().enumerate() {
            let hit = match c {
                Component::Atoms(a) => a
                    .iter()
                    .any(|a| a.mass > 0.0 && (a.location - lambda).norm() <= POLE_TOL * lambda.norm().max(1.0)),
                Component::Circle(_) => (lambda.norm() - 1.0).abs() <= POLE_TOL,
                Component::Interval(iv) => {
                    lambda.im.abs() <= POLE_TOL
                        && lambda.re >= iv.lower - POLE_TOL
                        && lambda.re <= iv.upper + POLE_TOL
                }
                Component::Disk(d) => {
                    let m = lambda.norm();
                    m >= d.r_min - POLE_TOL && m <= d.r_max + POLE_TOL
                }
            };
            if hit {
                return Err(Error::Singular(format!(
                    "λ = {lambda} lies on the support of component {index} ({})",
                    c.kind()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn integrate_real(&self, f: impl Fn(Complex64) -> f64, hints: Hints) -> Result<f64> {
        let v = self.integrate_kernel(
            &|z: Complex64, _: f64, out: &mut [f64]| {
                out[0] = f(z);
            },
            1,
            hints,
        )?;
        Ok(v[0])
    }

    /// `∫ f(|z|) dμ` with `|z|` taken from the component parametrization, so
    /// that kernels such as `1 / (1 - |z|²)` keep full relative accuracy
    /// close to the circle.
    pub(crate) fn integrate_radial(&self, f: impl Fn(f64) -> f64, hints: Hints) -> Result<f64> {
        let v = self.integrate_kernel(
            &|_: Complex64, r: f64, out: &mut [f64]| {
                out[0] = f(r);
            },
            1,
            hints,
        )?;
        Ok(v[0])
    }

    pub(crate) fn integrate_complex(&self, f: impl Fn(Complex64) -> Complex64, hints: Hints) -> Result<Complex64> {
        let v = self.integrate_kernel(
            &|z: Complex64, _: f64, out: &mut [f64]| {
                let w = f(z);
                out[0] = w.re;
                out[1] = w.im;
            },
            2,
            hints,
        )?;
        Ok(Complex64::new(v[0], v[1]))
    }

    /// `∫ K(z, |z|) dμ(z)` for a vector-valued kernel, summed over components.
    pub(crate) fn integrate_kernel(
        &self,
        kernel: &dyn Fn(Complex64, f64, &mut [f64]),
        dim: usize,
        hints: Hints,
    ) -> Result<Vec<f64>> {
        let mut total = vec![0.0; dim];
        let mut buf = vec![0.0; dim];
        for (index, c) in self.components.iter().enumerate() {
            let part = match c {
                Component::Atoms(a) => {
                    let mut acc = vec![0.0; dim];
                    for atom in a {
                        if atom.mass == 0.0 {
                            continue;
                        }
                        buf.iter_mut().for_each(|v| *v = 0.0);
                        kernel(atom.location, atom.location.norm(), &mut buf);
                        for (s, v) in acc.iter_mut().zip(&buf) {
                            *s += atom.mass * v;
                        }
                    }
                    if acc.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Singular(format!("kernel is not finite at an atom of component {index}")));
                    }
                    acc
                }
                Component::Circle(cd) => {
                    let lo = hints.pole.map_or(0.0, |p| p.arg() - PI);
                    let mut focus = Vec::new();
                    for p in hints.pole.iter().chain(&hints.extra_pole) {
                        let w = 0.5 * (p.norm() - 1.0).abs().max(1e-16);
                        for shift in [-TAU, 0.0, TAU] {
                            focus.push(Focus::new(p.arg() + shift, w));
                        }
                    }
                    let base = 16.max(4 * hints.oscillation);
                    self.circle_integrate(index, cd, lo, lo + TAU, &focus, base, dim, &|theta, out| {
                        kernel(Complex64::from_polar(1.0, theta), 1.0, out)
                    })?
                }
                Component::Interval(iv) => {
                    let mut focus = Vec::new();
                    for p in hints.pole.iter().chain(&hints.extra_pole) {
                        let x = p.re.clamp(iv.lower, iv.upper);
                        let d = (Complex64::new(x, 0.0) - p).norm().max(1e-16);
                        focus.push(Focus::new(x, 0.5 * d));
                    }
                    if hints.power > 0 {
                        let w = 0.05 / (hints.power as f64 + 1.0);
                        for e in [iv.lower, iv.upper] {
                            if e.abs() > 0.5 {
                                focus.push(Focus::new(e, w * e.abs()));
                            }
                        }
                    }
                    self.interval_integrate(index, iv, iv.lower, iv.upper, &focus, dim, &|t, out| {
                        kernel(Complex64::new(t, 0.0), t.abs(), out)
                    })?
                }
                Component::Disk(d) => {
                    let mut r_focus = Vec::new();
                    for p in hints.pole.iter().chain(&hints.extra_pole) {
                        let m = p.norm().clamp(d.r_min, d.r_max);
                        r_focus.push(Focus::new(m, 0.5 * (p.norm() - m).abs().max(1e-16)));
                    }
                    if hints.power > 0 && d.r_max > 0.5 {
                        r_focus.push(Focus::new(d.r_max, 0.05 / (hints.power as f64 + 1.0)));
                    }
                    let pole = hints.pole;
                    let poles: Vec<Complex64> = hints.pole.iter().chain(&hints.extra_pole).copied().collect();
                    let theta_focus = move |rr: f64| -> Vec<Focus> {
                        let mut f = Vec::new();
                        for p in &poles {
                            let dist = (p.norm() - rr).abs().max(1e-16);
                            let w = 0.5 * dist / rr.max(p.norm()).max(1e-300);
                            for shift in [-TAU, 0.0, TAU] {
                                f.push(Focus::new(p.arg() + shift, w));
                            }
                        }
                        f
                    };
                    let lo_theta = pole.map_or(0.0, |p| p.arg() - PI);
                    let base = 8.max(4 * hints.oscillation);
                    self.disk_integrate(
                        index,
                        d,
                        d.r_min,
                        d.r_max,
                        &move |_| Some((lo_theta, lo_theta + TAU)),
                        &theta_focus,
                        &r_focus,
                        Singular::default(),
                        base,
                        dim,
                        &|rr, theta, out| kernel(Complex64::from_polar(rr, theta), rr, out),
                    )?
                }
            };
            for (t, p) in total.iter_mut().zip(&part) {
                *t += p;
            }
        }
        Ok(total)
    }

    fn density_value(&self, index: usize, expr: &DensityExpr, b: &Bindings) -> Result<f64> {
        let v = expr.eval(b).map_err(|error| Error::DensityEval { index, error })?;
        if v < 0.0 {
            return Err(Error::NegativeDensity {
                index,
                value: v,
                at: b.to_string(),
            });
        }
        Ok(v)
    }

    pub(crate) fn circle_density_at(&self, index: usize, cd: &CircleDensity, theta: f64) -> Result<f64> {
        self.density_value(index, &cd.density, &Bindings::theta(theta.rem_euclid(TAU)))
    }

    /// `∫_{lo}^{hi} f(θ) K(θ) dθ/2π` over a circle density; `θ` is reduced mod 2π
    /// before the density is evaluated.
    #[allow(clippy::too_many_arguments)]
    fn circle_integrate(
        &self,
        index: usize,
        cd: &CircleDensity,
        lo: f64,
        hi: f64,
        focus: &[Focus],
        base_cells: usize,
        dim: usize,
        kernel: &dyn Fn(f64, &mut [f64]),
    ) -> Result<Vec<f64>> {
        let mut bp = graded_breakpoints(lo, hi, base_cells, focus);
        // the density is only periodic after reduction, so split at multiples of 2π
        let mut k = (lo / TAU).ceil();
        while k * TAU < hi {
            if k * TAU > lo {
                bp.push(k * TAU);
            }
            k += 1.0;
        }
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        integrate_vec(
            |theta: f64, out: &mut [f64]| -> Result<()> {
                let f = self.circle_density_at(index, cd, theta)?;
                if f != 0.0 {
                    kernel(theta, out);
                    out.iter_mut().for_each(|v| *v *= f / TAU);
                }
                Ok(())
            },
            &bp,
            dim,
            &self.quad,
        )
    }

    fn circle_mass_on(&self, index: usize, cd: &CircleDensity, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.circle_integrate(index, cd, lo, hi, &[], 8, 1, &|_, out| out[0] = 1.0)?[0])
    }

    #[allow(clippy::too_many_arguments)]
    fn interval_integrate(
        &self,
        index: usize,
        iv: &IntervalDensity,
        lo: f64,
        hi: f64,
        focus: &[Focus],
        dim: usize,
        kernel: &dyn Fn(f64, &mut [f64]),
    ) -> Result<Vec<f64>> {
        let singular = Singular {
            lower: iv.singular.lower && lo == iv.lower,
            upper: iv.singular.upper && hi == iv.upper,
        };
        integrate_interval_vec(
            |t: f64, out: &mut [f64]| -> Result<()> {
                let f = self.density_value(index, &iv.density, &Bindings::t(t))?;
                if f != 0.0 {
                    kernel(t, out);
                    out.iter_mut().for_each(|v| *v *= f);
                }
                Ok(())
            },
            lo,
            hi,
            singular,
            focus,
            dim,
            &self.quad,
        )
    }

    fn interval_mass_on(&self, index: usize, iv: &IntervalDensity, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.interval_integrate(index, iv, lo, hi, &[], 1, &|_, out| out[0] = 1.0)?[0])
    }

    /// Nested integral `∫_{r_lo}^{r_hi} ∫_{θ-range(r)} g(r, θ) K(r, θ) r dθ dr`.
    #[allow(clippy::too_many_arguments)]
    fn disk_integrate(
        &self,
        index: usize,
        d: &DiskDensity,
        r_lo: f64,
        r_hi: f64,
        theta_range: &dyn Fn(f64) -> Option<(f64, f64)>,
        theta_focus: &dyn Fn(f64) -> Vec<Focus>,
        r_focus: &[Focus],
        r_singular: Singular,
        theta_cells: usize,
        dim: usize,
        kernel: &dyn Fn(f64, f64, &mut [f64]),
    ) -> Result<Vec<f64>> {
        let inner_cfg = self.quad.scaled(0.1);
        integrate_interval_vec(
            |rr: f64, out: &mut [f64]| -> Result<()> {
                let Some((lo, hi)) = theta_range(rr) else {
                    return Ok(());
                };
                let integrand = |theta: f64, o: &mut [f64]| -> Result<()> {
                    let g = self.density_value(index, &d.density, &Bindings::polar(rr, theta.rem_euclid(TAU)))?;
                    if g != 0.0 {
                        kernel(rr, theta, o);
                        o.iter_mut().for_each(|v| *v *= g * rr);
                    }
                    Ok(())
                };
                let focus = theta_focus(rr);
                if focus.is_empty() && ((hi - lo) / TAU - 1.0).abs() < 1e-14 {
                    // the kernels have trigonometric degree about theta_cells / 2
                    let start = theta_cells.next_power_of_two();
                    let max_points = (8 * start).max(256);
                    if let Some(v) = integrate_periodic_vec(integrand, lo, start, max_points, dim, &inner_cfg)? {
                        out.copy_from_slice(&v);
                        return Ok(());
                    }
                }
                let mut tb = graded_breakpoints(lo, hi, theta_cells, &focus);
                let mut k = (lo / TAU).ceil();
                while k * TAU < hi {
                    if k * TAU > lo {
                        tb.push(k * TAU);
                    }
                    k += 1.0;
                }
                tb.sort_by(f64::total_cmp);
                tb.dedup();
                let v = integrate_vec(
                    integrand,
                    &tb,
                    dim,
                    &inner_cfg,
                )?;
                out.copy_from_slice(&v);
                Ok(())
            },
            r_lo,
            r_hi,
            r_singular,
            r_focus,
            dim,
            &self.quad,
        )
    }
}

fn parse_err(index: usize, source: &str, error: ParseError) -> Error {
    Error::DensityParse {
        index,
        source_text: source.to_string(),
        error,
    }
}

fn validate(index: usize, c: &Component) -> Result<()> {
    let bad = |message: String| Err(Error::Spec { index, message });
    match c {
        Component::Atoms(atoms) => {
            for (i, a) in atoms.iter().enumerate() {
                if !(a.mass >= 0.0 && a.mass.is_finite()) {
                    return bad(format!("atom {i} has invalid mass {}", a.mass));
                }
                if !(a.location.re.is_finite() && a.location.im.is_finite()) {
                    return bad(format!("atom {i} has a non-finite location"));
                }
                if atoms[..i].iter().any(|b| b.location == a.location) {
                    return bad(format!("atom {i} repeats location {}", a.location));
                }
            }
        }
        Component::Circle(cd) => {
            if let Some(s) = cd.declared_sup {
                if !(s >= 0.0 && s.is_finite()) {
                    return bad(format!("declared sup must be a finite nonnegative number, got {s}"));
                }
            }
        }
        Component::Interval(iv) => {
            if !(iv.lower.is_finite() && iv.upper.is_finite() && iv.lower < iv.upper) {
                return bad(format!("interval needs lower < upper, got [{}, {}]", iv.lower, iv.upper));
            }
        }
        Component::Disk(d) => {
            if !(d.r_min >= 0.0 && d.r_min < d.r_max && d.r_max <= 1.0) {
                return bad(format!(
                    "disk radii need 0 <= r_min < r_max <= 1, got [{}, {}]",
                    d.r_min, d.r_max
                ));
            }
        }
    }
    Ok(())
}

/// `z^k` by repeated squaring.
pub(crate) fn powu(z: Complex64, k: usize) -> Complex64 {
    let mut result = Complex64::new(1.0, 0.0);
    let mut base = z;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
        }
        base *= base;
        e >>= 1;
    }
    result
}
