//! Composite Gauss–Legendre quadrature with adaptive bisection.
//!
//! Every integral in the crate goes through [`integrate_vec`]: the integration
//! range is split at caller-supplied breakpoints, each cell is integrated with
//! a 12-point Gauss–Legendre rule whose error is estimated from the decay of
//! the Legendre coefficients of the interpolant through the nodes, and the
//! cell with the largest estimate is bisected until the summed estimate is
//! below `max(abs_tol, rel_tol * |I|)`.
//!
//! Integrands are vector valued so that families of integrals over the same
//! measure (all moments up to some order, real and imaginary parts) share one
//! set of density evaluations.
//!
//! Peaks the adaptive loop cannot see from a coarse mesh (a resolvent kernel
//! next to its pole, `t^k` near `|t| = 1`) must be announced through
//! [`graded_breakpoints`]; square-root endpoint singularities are removed with
//! the substitution in [`integrate_interval_vec`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use thiserror::Error;

/// Points per Gauss–Legendre panel.
pub const ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error(
        "quadrature did not converge on [{lower:e}, {upper:e}] after {cells} cells \
         (estimate {estimate:e}, error {error:e})"
    )]
    NonConvergence {
        lower: f64,
        upper: f64,
        cells: usize,
        estimate: f64,
        error: f64,
    },
}

/// Tolerances shared by all integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_cells: 20_000,
        }
    }
}

impl QuadConfig {
    /// Same budget, tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_cells: self.max_cells,
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Rows `k = 8..12` of the discrete Legendre transform on the nodes:
    /// `c_k = Σ_i tail[k - 8][i] f(x_i)` is the `P_k` coefficient of the
    /// interpolant through the nodes.
    tail: [[f64; ORDER]; 4],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (nodes, weights) = gauss_legendre(ORDER);
        let mut tail = [[0.0; ORDER]; 4];
        for (row, k) in tail.iter_mut().zip(ORDER - 4..ORDER) {
            for (i, (x, w)) in nodes.iter().zip(&weights).enumerate() {
                row[i] = w * legendre(k, *x) * (2 * k + 1) as f64 / 2.0;
            }
        }
        Rule { nodes, weights, tail }
    })
}

fn legendre(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    p1
}

struct Cell {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Per-cell scratch space.
struct Work {
    scratch: Vec<f64>,
    /// `|f|` integrated, for the roundoff floor.
    magnitude: Vec<f64>,
    /// Legendre coefficients 8..12, four per component.
    coeffs: Vec<f64>,
}

/// One 12-point panel on `[a, b]` with its error estimate.
///
/// The error is read off the highest Legendre coefficients of the interpolant:
/// if they decay by `q` every two degrees, the neglected coefficients of
/// degree 24 and up are about `q^6` times the last one. When they do not
/// decay, the last coefficient itself is the estimate. Estimates at roundoff
/// level count as zero.
fn panel<F, E>(f: &mut F, a: f64, b: f64, work: &mut Work) -> Result<Cell, E>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
{
    let rule = rule();
    let dim = work.scratch.len();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut value = vec![0.0; dim];
    work.magnitude.iter_mut().for_each(|v| *v = 0.0);
    work.coeffs.iter_mut().for_each(|v| *v = 0.0);
    for (i, (x, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        work.scratch.iter_mut().for_each(|v| *v = 0.0);
        f(mid + half * x, &mut work.scratch)?;
        for (d, s) in work.scratch.iter().enumerate() {
            value[d] += w * half * s;
            work.magnitude[d] += w * half * s.abs();
            for k in 0..4 {
                work.coeffs[4 * d + k] += rule.tail[k][i] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..dim {
        let c = &work.coeffs[4 * d..4 * d + 4];
        let high = c[2].abs().max(c[3].abs());
        let low = c[0].abs().max(c[1].abs());
        if high == 0.0 {
            continue;
        }
        let q = if low > 0.0 { high / low } else { 1.0 };
        let e = 2.0 * half.abs() * high * (16.0 * q.powi(6)).min(1.0);
        if !e.is_finite() {
            err = f64::MAX;
        } else if e > 64.0 * f64::EPSILON * work.magnitude[d] {
            err = err.max(e);
        }
    }
    if value.iter().any(|v| !v.is_finite()) {
        err = f64::MAX;
    }
    Ok(Cell { a, b, value, err })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Integrates a vector-valued `f` over `[breakpoints[0], breakpoints.last()]`.
///
/// `f(x, out)` must write the integrand at `x` into `out` (length `dim`); `out`
/// is zeroed before each call. Breakpoints must be sorted; duplicate points are
/// skipped. Errors from `f` abort the integration.
pub fn integrate_vec<F, E>(
    mut f: F,
    breakpoints: &[f64],
    dim: usize,
    cfg: &QuadConfig,
) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
    E: From<QuadError>,
{
    let mut total = vec![0.0; dim];
    if breakpoints.len() < 2 {
        return Ok(total);
    }
    let mut work = Work {
        scratch: vec![0.0; dim],
        magnitude: vec![0.0; dim],
        coeffs: vec![0.0; 4 * dim],
    };
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;

    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let cell = panel(&mut f, a, b, &mut work)?;
        for i in 0..dim {
            total[i] += cell.value[i];
        }
        total_err += cell.err;
        heap.push(cell);
    }

    let lower = breakpoints[0];
    let upper = *breakpoints.last().unwrap();
    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * max_abs(&total));
        if total_err <= target {
            break;
        }
        let Some(cell) = heap.pop() else { break };
        if cell.err == 0.0 {
            heap.push(cell);
            break;
        }
        let mid = 0.5 * (cell.a + cell.b);
        let width = cell.b - cell.a;
        if width <= 8.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) || mid <= cell.a || mid >= cell.b
        {
            // cannot bisect further in floating point; keep the estimate
            total_err -= cell.err;
            heap.push(Cell { err: 0.0, ..cell });
            continue;
        }
        if heap.len() + 2 > cfg.max_cells {
            return Err(QuadError::NonConvergence {
                lower,
                upper,
                cells: heap.len() + 1,
                estimate: max_abs(&total),
                error: total_err,
            }
            .into());
        }
        let l = panel(&mut f, cell.a, mid, &mut work)?;
        let r = panel(&mut f, mid, cell.b, &mut work)?;
        for i in 0..dim {
            total[i] += l.value[i] + r.value[i] - cell.value[i];
        }
        total_err += l.err + r.err - cell.err;
        heap.push(l);
        heap.push(r);
    }

    // deterministic final sum, left to right
    let mut cells = heap.into_vec();
    cells.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut out = vec![0.0; dim];
    for c in &cells {
        for i in 0..dim {
            out[i] += c.value[i];
        }
    }
    Ok(out)
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F, E>(mut f: F, breakpoints: &[f64], cfg: &QuadConfig) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    let v = integrate_vec(
        |x, out: &mut [f64]| -> Result<(), E> {
            out[0] = f(x)?;
            Ok(())
        },
        breakpoints,
        1,
        cfg,
    )?;
    Ok(v[0])
}

/// A point the mesh should be refined toward, with the finest cell width to
/// reach there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Focus {
    pub at: f64,
    pub width: f64,
}

impl Focus {
    pub fn new(at: f64, width: f64) -> Self {
        Self { at, width }
    }
}

/// Breakpoints on `[a, b]`: `base_cells` uniform cells plus a geometric
/// grading toward every focus point (breakpoints at distance `width, 4 width,
/// 16 width, ...` on both sides). A 12-point rule on `[w, 4w]` resolves a pole
/// at distance `w` to about 1e-12, and the adaptive pass does the rest.
pub fn graded_breakpoints(a: f64, b: f64, base_cells: usize, focus: &[Focus]) -> Vec<f64> {
    let n = base_cells.max(1);
    let mut pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    pts[n] = b;
    let span = b - a;
    for fc in focus {
        if !(fc.at >= a && fc.at <= b) || !(fc.width > 0.0) {
            continue;
        }
        pts.push(fc.at);
        let mut w = fc.width.min(span);
        while w < span {
            for p in [fc.at - w, fc.at + w] {
                if p > a && p < b {
                    pts.push(p);
                }
            }
            w *= 4.0;
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Which ends of an interval carry an inverse-square-root type singularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Singular {
    pub lower: bool,
    pub upper: bool,
}

/// Integrates a `2π`-periodic vector-valued `f` over `[lo, lo + 2π]` with the
/// trapezoid rule, doubling from `start` points up to `max_points`.
///
/// Two successive estimates agreeing to `max(abs_tol, rel_tol * |I|)` count
/// as converged; every refinement reuses the previous nodes. Returns `None`
/// when the rule has not settled by `max_points`, which happens for
/// integrands with kinks or jumps; callers fall back to [`integrate_vec`].
pub fn integrate_periodic_vec<F, E>(
    mut f: F,
    lo: f64,
    start: usize,
    max_points: usize,
    dim: usize,
    cfg: &QuadConfig,
) -> Result<Option<Vec<f64>>, E>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
{
    let mut n = start.max(4).next_power_of_two();
    let mut sum = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    let mut add = |theta: f64, sum: &mut [f64]| -> Result<(), E> {
        out.iter_mut().for_each(|v| *v = 0.0);
        f(theta, &mut out)?;
        sum.iter_mut().zip(&out).for_each(|(s, v)| *s += v);
        Ok(())
    };
    let step = |n: usize| std::f64::consts::TAU / n as f64;
    for i in 0..n {
        add(lo + i as f64 * step(n), &mut sum)?;
    }
    let mut prev: Vec<f64> = sum.iter().map(|s| s * step(n)).collect();
    while 2 * n <= max_points {
        // the new nodes are the midpoints of the old ones
        let h = step(2 * n);
        for i in 0..n {
            add(lo + (2 * i + 1) as f64 * h, &mut sum)?;
        }
        n *= 2;
        let next: Vec<f64> = sum.iter().map(|s| s * h).collect();
        let diff = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if diff <= cfg.abs_tol.max(cfg.rel_tol * max_abs(&next)) {
            return Ok(Some(next));
        }
        prev = next;
    }
    Ok(None)
}

/// Integrates `f` over `[a, b]` honouring endpoint singularities.
///
/// A singular endpoint `c` is removed with `t = c ± u²` (so `dt = 2u du`) and
/// the mesh in `u` is graded toward `u = 0`. Focus points are given in `t`.
pub fn integrate_interval_vec<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    singular: Singular,
    focus: &[Focus],
    dim: usize,
    cfg: &QuadConfig,
) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
    E: From<QuadError>,
{
    if !(b > a) {
        return Ok(vec![0.0; dim]);
    }
    if singular.lower && singular.upper {
        let m = 0.5 * (a + b);
        let lower_half = Singular {
            lower: true,
            upper: false,
        };
        let upper_half = Singular {
            lower: false,
            upper: true,
        };
        let lo = one_sided(&mut f, a, m, lower_half, focus, dim, cfg)?;
        let hi = one_sided(&mut f, m, b, upper_half, focus, dim, cfg)?;
        return Ok(lo.iter().zip(&hi).map(|(x, y)| x + y).collect());
    }
    one_sided(&mut f, a, b, singular, focus, dim, cfg)
}

/// At most one singular end.
fn one_sided<F, E>(
    f: &mut F,
    a: f64,
    b: f64,
    singular: Singular,
    focus: &[Focus],
    dim: usize,
    cfg: &QuadConfig,
) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &mut [f64]) -> Result<(), E>,
    E: From<QuadError>,
{
    if !singular.lower && !singular.upper {
        let bp = graded_breakpoints(a, b, 4, focus);
        return integrate_vec(f, &bp, dim, cfg);
    }
    // substitution toward the singular end `c`
    let (c, sign) = if singular.upper { (b, -1.0) } else { (a, 1.0) };
    // Below a gap g0 the node t = c ± u² no longer resolves the distance to
    // `c`, so that sliver is closed off with the inverse-square-root model
    // f(c ± g) ≈ A/√g, whose integral over [0, g0] is 2·g0·f(c ± g0).
    let mut g0 = ((b - a) * 2f64.powi(-60) + c.abs() * 2f64.powi(-36)).min((b - a) * 2f64.powi(-20));
    if c + sign * g0 == c {
        // keep the sliver node off the singular point itself
        let next = if sign > 0.0 { c.next_up() } else { c.next_down() };
        g0 = (next - c).abs();
        if g0 >= b - a {
            let mut out = vec![0.0; dim];
            f(0.5 * (a + b), &mut out)?;
            out.iter_mut().for_each(|v| *v *= b - a);
            return Ok(out);
        }
    }
    let umin = g0.sqrt();
    let umax = (b - a).sqrt();
    let mut ufocus = vec![Focus::new(umin, umin)];
    for fc in focus {
        let d = (fc.at - c).abs();
        if d <= b - a {
            let u = d.sqrt().max(umin);
            // image of [d - width, d + width] under u = √d
            let lo = (d - fc.width).max(0.0).sqrt();
            let hi = (d + fc.width).sqrt();
            ufocus.push(Focus::new(u, (hi - u).max(u - lo).max(umin).min(umax)));
        }
    }
    let bp = graded_breakpoints(umin, umax, 4, &ufocus);
    let mut inner = vec![0.0; dim];
    let mut total = integrate_vec(
        |u: f64, out: &mut [f64]| -> Result<(), E> {
            let t = c + sign * u * u;
            inner.iter_mut().for_each(|v| *v = 0.0);
            f(t, &mut inner)?;
            for (o, v) in out.iter_mut().zip(&inner) {
                *o = 2.0 * u * v;
            }
            Ok(())
        },
        &bp,
        dim,
        cfg,
    )?;
    inner.iter_mut().for_each(|v| *v = 0.0);
    f(c + sign * g0, &mut inner)?;
    for (t, v) in total.iter_mut().zip(&inner) {
        *t += 2.0 * g0 * v;
    }
    Ok(total)
}

/// Scalar form of [`integrate_interval_vec`].
pub fn integrate_interval<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    singular: Singular,
    focus: &[Focus],
    cfg: &QuadConfig,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<QuadError>,
{
    let v = integrate_interval_vec(
        |x, out: &mut [f64]| -> Result<(), E> {
            out[0] = f(x)?;
            Ok(())
        },
        a,
        b,
        singular,
        focus,
        1,
        cfg,
    )?;
    Ok(v[0])
}
