use rayon::prelude::*;
use serde::Serialize;

use super::evaluate::Side;
use super::{
    carleson_constant, carleson_embedding_sup, classify_operator, compact_support_bound, lipschitz_constant_circle,
    moment_decay_sup, resolvent_growth_sup, ser_opt_f64, sufficient_integral_bound, support_radius, tail_ratio_sup,
    CriteriaConfig, CriterionId, CriterionReport, OperatorClass, ValueKind,
};
use crate::gram::{bessel_bound_profile, default_sizes, Profile};
use crate::measure::SpectralMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Bessel,
    NotBessel,
    Inconclusive,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Bessel => "BESSEL",
            Status::NotBessel => "NOT_BESSEL",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Whether a `BESSEL` bound is proved or read off a finite grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// A sufficient criterion evaluated to a finite number: a valid Bessel bound.
    Certified,
    /// Read off a finite grid: a sufficient bound evaluated on a grid, or the
    /// sampled supremum of a unitary circle density.
    GridEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BesselVerdict {
    pub status: Status,
    #[serde(serialize_with = "ser_opt_f64")]
    pub bound: Option<f64>,
    pub bound_kind: Option<BoundKind>,
    pub witness: Option<CriterionId>,
    pub operator_class: OperatorClass,
    /// Support leaves the closed disc.
    pub support_violation: bool,
    /// One report per criterion, ordered by id.
    pub reports: Vec<CriterionReport>,
    pub profile: Option<Profile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_error: Option<String>,
}

impl BesselVerdict {
    pub fn report(&self, id: CriterionId) -> Option<&CriterionReport> {
        self.reports.iter().find(|r| r.id == id)
    }
}

fn evaluate_one(mu: &SpectralMeasure, cfg: &CriteriaConfig, class: OperatorClass, outside: bool, id: CriterionId) -> CriterionReport {
    let result = match id {
        CriterionId::SupportRadius => Ok(support_radius(mu)),
        CriterionId::LipschitzConstantCircle => lipschitz_constant_circle(mu, cfg),
        CriterionId::TailRatioSup | CriterionId::MomentDecaySup if class != OperatorClass::Selfadjoint => {
            Ok(CriterionReport::not_applicable(id, "only characterizes selfadjoint operators"))
        }
        CriterionId::TailRatioSup => tail_ratio_sup(mu, cfg),
        CriterionId::MomentDecaySup => moment_decay_sup(mu, cfg),
        CriterionId::CarlesonConstant | CriterionId::CarlesonEmbeddingSup | CriterionId::ResolventGrowthSup
            if outside =>
        {
            Ok(CriterionReport::not_applicable(id, "support leaves the closed disc"))
        }
        CriterionId::CarlesonConstant => carleson_constant(mu, cfg),
        CriterionId::CarlesonEmbeddingSup => carleson_embedding_sup(mu, cfg),
        CriterionId::ResolventGrowthSup => {
            let side = if class == OperatorClass::Unitary {
                Side::Both
            } else {
                Side::Outside
            };
            resolvent_growth_sup(mu, cfg, side)
        }
        CriterionId::SufficientIntegralBound => sufficient_integral_bound(mu, cfg),
        CriterionId::CompactSupportBound => compact_support_bound(mu),
    };
    result.unwrap_or_else(|e| CriterionReport::failed(id, &e))
}

/// Evaluates every criterion and decides.
///
/// 1. support outside the closed disc: `NOT_BESSEL`;
/// 2. an atom on the circle: `NOT_BESSEL`;
/// 3. a certified finite sufficient bound: `BESSEL` with the smallest one;
/// 4. a divergent tail ratio (selfadjoint), Carleson constant or resolvent
///    growth: `NOT_BESSEL`. Divergence on a finite grid is heuristic, which
///    is why a certified bound is checked first;
/// 5. any other finite sufficient bound: `BESSEL`;
/// 6. unitary with a finite density supremum: `BESSEL` with that supremum;
/// 7. selfadjoint with a non-divergent tail ratio, or normal with a finite
///    density supremum and a non-divergent Carleson constant: `BESSEL`
///    without a bound, since those constants are not Bessel bounds;
/// 8. otherwise `INCONCLUSIVE`.
///
/// Failed criteria are reported and count as no evidence.
pub fn verdict(mu: &SpectralMeasure, cfg: &CriteriaConfig) -> BesselVerdict {
    let class = classify_operator(mu);
    let radius = mu.support_radius();
    let outside = radius > 1.0 + 1e-12;

    let (reports, profile) = rayon::join(
        || {
            CriterionId::ALL
                .par_iter()
                .map(|&id| evaluate_one(mu, cfg, class, outside, id))
                .collect::<Vec<_>>()
        },
        || {
            cfg.profile.then(|| {
                bessel_bound_profile(
                    mu,
                    &default_sizes(mu, cfg.gram_max_size),
                    cfg.norm_tol,
                    cfg.norm_max_iter,
                )
            })
        },
    );
    let (profile, profile_error) = match profile {
        Some(Ok(p)) => (Some(p), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };
    let get = |id: CriterionId| reports.iter().find(|r| r.id == id).expect("every id is evaluated");

    let decided = |status, bound, bound_kind, witness| (status, bound, bound_kind, Some(witness));
    let sufficient = [CriterionId::SufficientIntegralBound, CriterionId::CompactSupportBound]
        .into_iter()
        .map(get)
        .filter(|r| r.finite_constant().is_some())
        .min_by(|a, b| a.constant.unwrap().total_cmp(&b.constant.unwrap()));
    let certified = sufficient.filter(|r| r.kind == ValueKind::Certified);
    let (status, bound, bound_kind, witness) = if outside {
        decided(Status::NotBessel, None, None, CriterionId::SupportRadius)
    } else if get(CriterionId::LipschitzConstantCircle).kind == ValueKind::Infinite {
        decided(Status::NotBessel, None, None, CriterionId::LipschitzConstantCircle)
    } else if let Some(r) = certified {
        decided(Status::Bessel, r.constant, Some(BoundKind::Certified), r.id)
    } else if let Some(id) = [
        CriterionId::LipschitzConstantCircle,
        CriterionId::TailRatioSup,
        CriterionId::CarlesonConstant,
        CriterionId::ResolventGrowthSup,
    ]
    .into_iter()
    .find(|&id| {
        let r = get(id);
        match id {
            // only an atom on the circle makes the density supremum a witness
            CriterionId::LipschitzConstantCircle => r.kind == ValueKind::Infinite,
            _ => r.divergent,
        }
    }) {
        decided(Status::NotBessel, None, None, id)
    } else if let Some(r) = sufficient {
        let kind = if r.kind == ValueKind::Certified {
            BoundKind::Certified
        } else {
            BoundKind::GridEstimate
        };
        decided(Status::Bessel, r.constant, Some(kind), r.id)
    } else {
        let lip = get(CriterionId::LipschitzConstantCircle);
        let usable = |r: &CriterionReport| r.finite_constant().is_some() && !r.divergent;
        match class {
            OperatorClass::Unitary if usable(lip) => {
                let kind = if lip.kind == ValueKind::Certified {
                    BoundKind::Certified
                } else {
                    BoundKind::GridEstimate
                };
                decided(Status::Bessel, lip.constant, Some(kind), lip.id)
            }
            OperatorClass::Selfadjoint if usable(get(CriterionId::TailRatioSup)) => {
                decided(Status::Bessel, None, None, CriterionId::TailRatioSup)
            }
            OperatorClass::Normal if usable(lip) && usable(get(CriterionId::CarlesonConstant)) => {
                decided(Status::Bessel, None, None, CriterionId::CarlesonConstant)
            }
            _ => (Status::Inconclusive, None, None, None),
        }
    };

    BesselVerdict {
        status,
        bound,
        bound_kind,
        witness,
        operator_class: class,
        support_violation: outside,
        reports,
        profile,
        profile_error,
    }
}
