//! The JSON measure document: a list of components tagged by `kind`.
//!
//! ```json
//! [
//!   {"kind": "atoms", "atoms": [{"re": 0.5, "im": 0.0, "mass": 1.0}]},
//!   {"kind": "circle", "density": "1 + cos(theta)", "sup": 2.0},
//!   {"kind": "interval", "lower": -1, "upper": 1, "density": "1", "singular": "both"},
//!   {"kind": "disk", "density": "r", "r_min": 0.0, "r_max": 0.5}
//! ]
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Atom, CircleDensity, Component, DiskDensity, IntervalDensity, SpectralMeasure};
use crate::error::{Error, Result};
use crate::quadrature::Singular;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawComponent {
    Atoms {
        atoms: Vec<RawAtom>,
    },
    Circle {
        density: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sup: Option<f64>,
    },
    Interval {
        lower: f64,
        upper: f64,
        density: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        singular: Option<RawSingular>,
    },
    Disk {
        density: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r_max: Option<f64>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    re: f64,
    #[serde(default)]
    im: f64,
    mass: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawSingular {
    Lower,
    Upper,
    Both,
}

pub(super) fn parse(text: &str) -> Result<SpectralMeasure> {
    let items: Vec<serde_json::Value> = serde_json::from_str(text)
        .map_err(|e| Error::Document(format!("expected a JSON list of components: {e}")))?;
    let mut components = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let raw: RawComponent = serde_json::from_value(item).map_err(|e| Error::Spec {
            index,
            message: e.to_string(),
        })?;
        components.push(convert(index, raw)?);
    }
    SpectralMeasure::new(components)
}

fn convert(index: usize, raw: RawComponent) -> Result<Component> {
    let parse_err = |src: &str, error| Error::DensityParse {
        index,
        source_text: src.to_string(),
        error,
    };
    Ok(match raw {
        RawComponent::Atoms { atoms } => Component::Atoms(
            atoms
                .into_iter()
                .map(|a| Atom::new(Complex64::new(a.re, a.im), a.mass))
                .collect(),
        ),
        RawComponent::Circle { density, sup } => {
            let mut c = CircleDensity::new(&density).map_err(|e| parse_err(&density, e))?;
            if let Some(s) = sup {
                c = c.with_declared_sup(s);
            }
            Component::Circle(c)
        }
        RawComponent::Interval {
            lower,
            upper,
            density,
            singular,
        } => {
            let singular = match singular {
                None => Singular::default(),
                Some(RawSingular::Lower) => Singular { lower: true, upper: false },
                Some(RawSingular::Upper) => Singular { lower: false, upper: true },
                Some(RawSingular::Both) => Singular { lower: true, upper: true },
            };
            Component::Interval(
                IntervalDensity::new(lower, upper, &density)
                    .map_err(|e| parse_err(&density, e))?
                    .with_singular(singular),
            )
        }
        RawComponent::Disk { density, r_min, r_max } => Component::Disk(
            DiskDensity::new(&density)
                .map_err(|e| parse_err(&density, e))?
                .with_radii(r_min.unwrap_or(0.0), r_max.unwrap_or(1.0)),
        ),
    })
}

pub(super) fn render(measure: &SpectralMeasure) -> String {
    let raw: Vec<RawComponent> = measure
        .components()
        .iter()
        .map(|c| match c {
            Component::Atoms(a) => RawComponent::Atoms {
                atoms: a
                    .iter()
                    .map(|a| RawAtom {
                        re: a.location.re,
                        im: a.location.im,
                        mass: a.mass,
                    })
                    .collect(),
            },
            Component::Circle(c) => RawComponent::Circle {
                density: c.density().source().to_string(),
                sup: c.declared_sup(),
            },
            Component::Interval(c) => RawComponent::Interval {
                lower: c.lower(),
                upper: c.upper(),
                density: c.density().source().to_string(),
                singular: match (c.singular().lower, c.singular().upper) {
                    (false, false) => None,
                    (true, false) => Some(RawSingular::Lower),
                    (false, true) => Some(RawSingular::Upper),
                    (true, true) => Some(RawSingular::Both),
                },
            },
            Component::Disk(c) => RawComponent::Disk {
                density: c.density().source().to_string(),
                r_min: Some(c.r_min()),
                r_max: Some(c.r_max()),
            },
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("measure documents always serialize")
}
