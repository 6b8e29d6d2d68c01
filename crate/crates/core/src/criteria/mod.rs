//! The Bessel characterizations as numeric constants, and the verdict that
//! combines them.
//!
//! Every criterion reduces to a supremum over some grid (tail widths `ε`, ball
//! radii, resolvent points `λ`). A finite grid can show a supremum growing but
//! never prove it infinite, so each report says whether its constant is
//! certified (closed form or a convergent sufficient integral), a grid
//! estimate, or divergent by the growth heuristic in [`diverges`].

mod evaluate;
mod verdict;

use serde::{Serialize, Serializer};

use crate::measure::SpectralMeasure;

pub use evaluate::{
    embedding_kernel_integral, Side,
    carleson_constant, carleson_embedding_sup, compact_support_bound, lipschitz_constant_circle,
    moment_decay_sup, resolvent_growth_sup, sufficient_integral_bound, support_radius, tail_ratio_sup,
};
pub use verdict::{verdict, BesselVerdict, BoundKind, Status};

/// Identifiers, in the order the verdict consults them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    SupportRadius,
    LipschitzConstantCircle,
    TailRatioSup,
    MomentDecaySup,
    CarlesonConstant,
    CarlesonEmbeddingSup,
    ResolventGrowthSup,
    SufficientIntegralBound,
    CompactSupportBound,
}

impl CriterionId {
    pub const ALL: [CriterionId; 9] = [
        CriterionId::SupportRadius,
        CriterionId::LipschitzConstantCircle,
        CriterionId::TailRatioSup,
        CriterionId::MomentDecaySup,
        CriterionId::CarlesonConstant,
        CriterionId::CarlesonEmbeddingSup,
        CriterionId::ResolventGrowthSup,
        CriterionId::SufficientIntegralBound,
        CriterionId::CompactSupportBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CriterionId::SupportRadius => "support_radius",
            CriterionId::LipschitzConstantCircle => "lipschitz_constant_circle",
            CriterionId::TailRatioSup => "tail_ratio_sup",
            CriterionId::MomentDecaySup => "moment_decay_sup",
            CriterionId::CarlesonConstant => "carleson_constant",
            CriterionId::CarlesonEmbeddingSup => "carleson_embedding_sup",
            CriterionId::ResolventGrowthSup => "resolvent_growth_sup",
            CriterionId::SufficientIntegralBound => "sufficient_integral_bound",
            CriterionId::CompactSupportBound => "compact_support_bound",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }

    /// What the criterion states, in words.
    pub fn citation(self) -> &'static str {
        match self {
            CriterionId::SupportRadius => {
                "necessary: a Bessel orbit has its spectral measure supported in the closed unit disc"
            }
            CriterionId::LipschitzConstantCircle => {
                "unitary: Bessel iff mu is Lipschitz w.r.t. normalized arc measure, \
                 i.e. d mu / d arc is essentially bounded; the optimal bound is its ess sup"
            }
            CriterionId::TailRatioSup => "selfadjoint: Bessel iff mu(|t| > 1 - eps) = O(eps)",
            CriterionId::MomentDecaySup => {
                "selfadjoint: Bessel iff <A^k x, x> = O(1/k), i.e. the Hankel moments q_k = O(1/k)"
            }
            CriterionId::CarlesonConstant => {
                "normal: Bessel iff supp mu lies in the closed disc and mu(B_r(z)) <= C r \
                 for every z on the circle (Carleson condition)"
            }
            CriterionId::CarlesonEmbeddingSup => {
                "Carleson embedding: mu on the open disc is Carleson iff \
                 sup_z int (1 - |z|^2) / |1 - conj(z) w|^2 d mu(w) is finite"
            }
            CriterionId::ResolventGrowthSup => {
                "resolvent growth: Bessel iff ||(A - lambda)^-1 x||^2 <= C / |1 - |lambda|^2| \
                 (outside the disc; also inside for unitary A)"
            }
            CriterionId::SufficientIntegralBound => {
                "sufficient: if (1 - |z|^2)^-1 is mu-integrable, the integral is a Bessel bound"
            }
            CriterionId::CompactSupportBound => {
                "sufficient: if supp mu lies in |z| <= nu < 1, then ||x||^2 / (1 - nu^2) is a Bessel bound"
            }
        }
    }
}

/// How far a reported constant can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Exact up to quadrature tolerance.
    Certified,
    /// Maximum over a finite grid; the true supremum may be larger.
    GridEstimate,
    /// Known to be infinite.
    Infinite,
    /// Grid maxima still grow at the finest scale (heuristic).
    DivergentHeuristic,
    /// The criterion does not apply to this operator class.
    NotApplicable,
    /// Evaluation failed; see `error`.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorClass {
    Unitary,
    Selfadjoint,
    Normal,
}

impl OperatorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorClass::Unitary => "unitary",
            OperatorClass::Selfadjoint => "selfadjoint",
            OperatorClass::Normal => "normal",
        }
    }
}

/// Unitary when all mass is on the circle (checked first, so atoms at `±1`
/// count as unitary), selfadjoint when it is on the real line, else normal.
pub fn classify_operator(mu: &SpectralMeasure) -> OperatorClass {
    if mu.is_circle_supported() {
        OperatorClass::Unitary
    } else if mu.is_real_supported() {
        OperatorClass::Selfadjoint
    } else {
        OperatorClass::Normal
    }
}

/// One evaluated grid point. `x` is the grid parameter (`ε`, `r`, `k`,
/// `|λ|`, ...); `reference` carries an independent value when one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    #[serde(serialize_with = "ser_f64")]
    pub x: f64,
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f64")]
    pub reference: Option<f64>,
}

impl Sample {
    pub fn new(x: f64, value: f64) -> Self {
        Self {
            x,
            value,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    /// Name of the grid parameter in `samples[].x`.
    pub parameter: &'static str,
    pub description: String,
    /// Number of evaluations behind the samples.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: CriterionId,
    #[serde(serialize_with = "ser_opt_f64")]
    pub constant: Option<f64>,
    pub kind: ValueKind,
    pub divergent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Sample>,
    pub citation: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CriterionReport {
    pub(crate) fn new(id: CriterionId, constant: f64, kind: ValueKind) -> Self {
        Self {
            id,
            constant: Some(constant),
            kind,
            divergent: matches!(kind, ValueKind::Infinite | ValueKind::DivergentHeuristic),
            grid: None,
            samples: Vec::new(),
            citation: id.citation(),
            note: None,
            error: None,
        }
    }

    pub(crate) fn not_applicable(id: CriterionId, why: &str) -> Self {
        Self {
            constant: None,
            kind: ValueKind::NotApplicable,
            divergent: false,
            note: Some(why.to_string()),
            ..Self::new(id, 0.0, ValueKind::NotApplicable)
        }
    }

    pub(crate) fn failed(id: CriterionId, error: &crate::Error) -> Self {
        Self {
            constant: None,
            kind: ValueKind::Failed,
            divergent: false,
            error: Some(error.to_string()),
            ..Self::new(id, 0.0, ValueKind::Failed)
        }
    }

    pub(crate) fn with_grid(mut self, parameter: &'static str, description: String, evaluations: usize) -> Self {
        self.grid = Some(Grid {
            parameter,
            description,
            evaluations,
        });
        self
    }

    pub(crate) fn with_samples(mut self, samples: Vec<Sample>) -> Self {
        self.samples = samples;
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// The constant when it is finite.
    pub fn finite_constant(&self) -> Option<f64> {
        self.constant.filter(|c| c.is_finite())
    }
}

/// Grid sizes and tolerances for all criteria.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaConfig {
    /// Finest tail width; the grid is `ε = 2^-1, 2^-2, ...` down to this.
    pub eps_min: f64,
    /// Finest ball radius / distance to the circle for the Carleson,
    /// embedding and resolvent grids.
    pub radius_min: f64,
    /// Largest `k` in the moment decay check.
    pub moment_max_k: usize,
    /// Points in the uniform `θ` grid for the density supremum.
    pub lipschitz_grid: usize,
    /// Cap on equispaced ball centers per radius.
    pub max_centers: usize,
    /// Cap on equispaced angles per modulus on the `λ` and `z` grids.
    pub max_angles: usize,
    /// Trailing grid points examined by the divergence heuristic.
    pub divergence_window: usize,
    /// Average growth per grid step above which a supremum counts as diverging.
    pub divergence_growth: f64,
    /// Largest Gram section in the profile.
    pub gram_max_size: usize,
    pub norm_tol: f64,
    pub norm_max_iter: usize,
    /// Whether the verdict attaches a Gram profile.
    pub profile: bool,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            eps_min: 2f64.powi(-40),
            radius_min: 2f64.powi(-20),
            moment_max_k: 1024,
            lipschitz_grid: 4096,
            max_centers: 256,
            max_angles: 128,
            divergence_window: 10,
            divergence_growth: 0.05,
            gram_max_size: 512,
            norm_tol: 1e-6,
            norm_max_iter: 600,
            profile: true,
        }
    }
}

impl CriteriaConfig {
    /// Dyadic exponents `1..=m` with `2^-m >= min`.
    pub(crate) fn dyadic_exponents(min: f64) -> Vec<i32> {
        (1..=1074).take_while(|&m| 2f64.powi(-m) >= min).collect()
    }
}

/// Growth heuristic for a supremum sampled along a refining grid.
///
/// `running_sup` must be the running maximum in refinement order. The
/// supremum counts as diverging when, over the last `window` points, it grows
/// on average by more than `growth` per step and still grows at the last step.
pub fn diverges(running_sup: &[f64], window: usize, growth: f64) -> bool {
    let w = window.max(2);
    if running_sup.len() < w {
        return false;
    }
    let tail = &running_sup[running_sup.len() - w..];
    let (first, last) = (tail[0], tail[w - 1]);
    if last.is_infinite() {
        return true;
    }
    if !(last > tail[w - 2]) {
        return false;
    }
    if !(first > 0.0) {
        return true;
    }
    (last / first).powf(1.0 / (w - 1) as f64) - 1.0 > growth
}

pub(crate) fn running_max(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = f64::NEG_INFINITY;
    values
        .into_iter()
        .map(|v| {
            acc = acc.max(v);
            acc
        })
        .collect()
}

pub(crate) fn ser_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub(crate) fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64(x, s),
        None => s.serialize_none(),
    }
}
