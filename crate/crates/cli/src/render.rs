use std::fmt::Write as _;

use besselkit::criteria::{BesselVerdict, CriteriaConfig, CriterionReport, ValueKind};
use besselkit::gram::Profile;
use serde::Serialize;

use crate::{Command, Failure, Format};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA: &str = "besselkit.report/1";

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Body {
    Verdict {
        config: CriteriaConfig,
        measure: serde_json::Value,
        verdict: BesselVerdict,
    },
    Profile {
        measure: serde_json::Value,
        tol: f64,
        profile: Profile,
    },
    Heat {
        delta: f64,
        moments: Vec<MomentRow>,
        tail: Vec<TailRow>,
        witness: CriterionReport,
    },
    Verify {
        measure: serde_json::Value,
        passed: bool,
        checks: Vec<CheckResult>,
    },
}

#[derive(Debug, Serialize)]
pub struct MomentRow {
    pub k: u64,
    /// `q_k` from the Gaussian integral on the Fourier side.
    pub q_k: f64,
    pub k_q_k: f64,
    /// `q_k` integrated against the spectral measure.
    pub q_k_spectral: f64,
}

#[derive(Debug, Serialize)]
pub struct TailRow {
    pub eps: f64,
    pub tail: f64,
    pub ratio: f64,
    pub closed_form_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub statement: &'static str,
    /// `None` when the identity does not apply to this measure.
    pub passed: Option<bool>,
    pub detail: String,
}

#[derive(Serialize)]
struct FailureReport<'a> {
    schema: &'static str,
    command: &'static str,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: u8,
    message: &'a str,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => json(report),
        Format::Csv => csv_table(report),
        Format::Text => text(report),
    }
}

pub fn render_failure(f: &Failure, command: Command, format: Format) -> String {
    match format {
        Format::Json => json(&FailureReport {
            schema: SCHEMA,
            command: command.as_str(),
            error: ErrorBody {
                kind: f.kind,
                exit_code: f.code,
                message: &f.message,
            },
        }),
        Format::Csv => rows(&["error", "exit_code", "message"], [vec![f.kind.to_string(), f.code.to_string(), f.message.clone()]]),
        Format::Text => format!("error ({}): {}\n", f.kind, f.message),
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn rows(header: &[&str], data: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in data {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn csv_table(report: &Report) -> String {
    match &report.body {
        Body::Verdict { verdict, .. } => {
            let mut data = Vec::new();
            for r in &verdict.reports {
                let parameter = r.grid.as_ref().map_or("", |g| g.parameter);
                for s in &r.samples {
                    data.push(vec![r.id.as_str().into(), parameter.into(), num(s.x), num(s.value), opt(s.reference)]);
                }
            }
            if let Some(p) = &verdict.profile {
                for pt in &p.points {
                    data.push(vec!["gram_profile".into(), "n".into(), pt.n.to_string(), num(pt.norm), String::new()]);
                }
            }
            rows(&["criterion", "parameter", "x", "value", "reference"], data)
        }
        Body::Profile { profile, .. } => rows(
            &["n", "norm"],
            profile.points.iter().map(|p| vec![p.n.to_string(), num(p.norm)]),
        ),
        Body::Heat { moments, tail, .. } => {
            let m = moments
                .iter()
                .map(|r| vec!["moments".into(), r.k.to_string(), num(r.q_k), num(r.k_q_k), num(r.q_k_spectral)]);
            let t = tail
                .iter()
                .map(|r| vec!["tail".into(), num(r.eps), num(r.tail), num(r.ratio), num(r.closed_form_ratio)]);
            rows(&["table", "x", "value", "scaled", "reference"], m.chain(t))
        }
        Body::Verify { checks, .. } => rows(
            &["check", "passed", "detail"],
            checks.iter().map(|c| {
                let passed = c.passed.map_or("not_applicable".into(), |p| p.to_string());
                vec![c.name.into(), passed, c.detail.clone()]
            }),
        ),
    }
}

fn kind_label(kind: ValueKind) -> &'static str {
    match kind {
        ValueKind::Certified => "certified",
        ValueKind::GridEstimate => "grid estimate",
        ValueKind::Infinite => "infinite",
        ValueKind::DivergentHeuristic => "diverging",
        ValueKind::NotApplicable => "not applicable",
        ValueKind::Failed => "failed",
    }
}

fn text(report: &Report) -> String {
    let mut s = String::new();
    match &report.body {
        Body::Verdict { verdict: v, .. } => {
            let _ = writeln!(s, "status: {}", v.status.as_str());
            let _ = writeln!(s, "operator class: {}", v.operator_class.as_str());
            if let Some(b) = v.bound {
                let kind = match v.bound_kind {
                    Some(besselkit::criteria::BoundKind::Certified) => "certified",
                    _ => "grid estimate",
                };
                let _ = writeln!(s, "bound: {} ({kind})", num(b));
            }
            if let Some(w) = v.witness {
                let _ = writeln!(s, "decided by: {}", w.as_str());
                let _ = writeln!(s, "  because {}", w.citation());
            }
            let _ = writeln!(s, "\ncriteria:");
            for r in &v.reports {
                let constant = r.constant.map(num).unwrap_or_else(|| "-".into());
                let _ = writeln!(s, "  {:<28} {:>24}  {}", r.id.as_str(), constant, kind_label(r.kind));
                if let Some(e) = &r.error {
                    let _ = writeln!(s, "      error: {e}");
                }
                if let Some(n) = &r.note {
                    let _ = writeln!(s, "      note: {n}");
                }
            }
            if let Some(p) = &v.profile {
                let _ = writeln!(s, "\ngram profile ({} sections):", p.structure.as_str());
                for pt in &p.points {
                    let _ = writeln!(s, "  n = {:<6} ||G_n|| = {}", pt.n, num(pt.norm));
                }
            }
            if let Some(e) = &v.profile_error {
                let _ = writeln!(s, "\ngram profile failed: {e}");
            }
        }
        Body::Profile { profile, .. } => {
            let _ = writeln!(s, "gram profile ({} sections):", profile.structure.as_str());
            for pt in &profile.points {
                let _ = writeln!(s, "  n = {:<6} ||G_n|| = {}", pt.n, num(pt.norm));
            }
            let _ = writeln!(s, "nondecreasing: {}", profile.monotone);
        }
        Body::Heat {
            delta,
            moments,
            tail,
            witness,
        } => {
            let _ = writeln!(s, "heat measure, delta = {delta}");
            let _ = writeln!(s, "\n{:>10} {:>24} {:>24}", "k", "q_k", "k q_k");
            for r in moments {
                let _ = writeln!(s, "{:>10} {:>24} {:>24}", r.k, num(r.q_k), num(r.k_q_k));
            }
            let _ = writeln!(s, "\n{:>24} {:>24} {:>24}", "eps", "tail", "tail / eps");
            for r in tail {
                let _ = writeln!(s, "{:>24} {:>24} {:>24}", num(r.eps), num(r.tail), num(r.ratio));
            }
            let verdict = if witness.divergent { "NOT_BESSEL" } else { "INCONCLUSIVE" };
            let _ = writeln!(s, "\n{verdict}: tail / eps diverging = {}", witness.divergent);
            let _ = writeln!(s, "  because {}", witness.citation);
        }
        Body::Verify { checks, passed, .. } => {
            for c in checks {
                let mark = match c.passed {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "n/a ",
                };
                let _ = writeln!(s, "[{mark}] {}: {}", c.name, c.detail);
                let _ = writeln!(s, "       {}", c.statement);
            }
            let _ = writeln!(s, "{}", if *passed { "all applicable checks passed" } else { "some checks failed" });
        }
    }
    s
}
