use besselkit::criteria::{verdict, CriteriaConfig, Status};
use besselkit::gram::{bessel_bound_profile, default_sizes};
use besselkit::heat::{heat_measure, heat_moment, non_bessel_witness};
use besselkit::SpectralMeasure;

use crate::render::{Body, MomentRow, Report, TailRow, SCHEMA};
use crate::{Args, Failure, Outcome};

pub fn measure_value(mu: &SpectralMeasure) -> serde_json::Value {
    serde_json::from_str(&mu.to_json()).expect("measure documents are JSON")
}

fn report(args: &Args, body: Body) -> Report {
    Report {
        schema: SCHEMA,
        command: args.command.as_str(),
        body,
    }
}

pub fn status_code(status: Status) -> u8 {
    match status {
        Status::Bessel => 0,
        Status::NotBessel => 1,
        Status::Inconclusive => 2,
    }
}

/// `analyze` and `criteria`; the latter skips the Gram profile.
pub fn analyze(args: &Args, mu: &SpectralMeasure, profile: bool) -> Outcome {
    let config = CriteriaConfig {
        profile,
        ..args.criteria_config()
    };
    let v = verdict(mu, &config);
    let code = status_code(v.status);
    Outcome {
        report: report(
            args,
            Body::Verdict {
                config,
                measure: measure_value(mu),
                verdict: v,
            },
        ),
        code,
    }
}

pub fn gram_profile(args: &Args, mu: &SpectralMeasure) -> Result<Outcome, Failure> {
    let cfg = args.criteria_config();
    let sizes = default_sizes(mu, args.max_size);
    let profile = bessel_bound_profile(mu, &sizes, args.tol, cfg.norm_max_iter).map_err(Failure::from_lib)?;
    Ok(Outcome {
        report: report(
            args,
            Body::Profile {
                measure: measure_value(mu),
                tol: args.tol,
                profile,
            },
        ),
        code: 0,
    })
}

/// `k = 1, 2, 4, ...` up to and including `max_k`.
fn moment_grid(max_k: u64) -> Vec<u64> {
    let mut ks: Vec<u64> = std::iter::successors(Some(1u64), |k| k.checked_mul(2))
        .take_while(|&k| k < max_k)
        .collect();
    ks.push(max_k);
    ks
}

pub fn heat(args: &Args) -> Result<Outcome, Failure> {
    let mu = heat_measure(args.delta).map_err(Failure::from_lib)?;
    let mut moments = Vec::new();
    for k in moment_grid(args.max_k) {
        let q = heat_moment(args.delta, k).map_err(Failure::from_lib)?;
        let spectral = mu.moment(k as usize, 0).map_err(Failure::from_lib)?.re;
        moments.push(MomentRow {
            k,
            q_k: q,
            k_q_k: k as f64 * q,
            q_k_spectral: spectral,
        });
    }
    let witness = non_bessel_witness(args.delta, &args.criteria_config()).map_err(Failure::from_lib)?;
    let tail = witness
        .samples
        .iter()
        .map(|s| TailRow {
            eps: s.x,
            tail: s.value * s.x,
            ratio: s.value,
            closed_form_ratio: s.reference.unwrap_or(f64::NAN),
        })
        .collect();
    let code = if witness.divergent { 1 } else { 2 };
    Ok(Outcome {
        report: report(
            args,
            Body::Heat {
                delta: args.delta,
                moments,
                tail,
                witness,
            },
        ),
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_status() {
        assert_eq!(status_code(Status::Bessel), 0);
        assert_eq!(status_code(Status::NotBessel), 1);
        assert_eq!(status_code(Status::Inconclusive), 2);
    }

    #[test]
    fn moment_grid_ends_at_max_k() {
        assert_eq!(moment_grid(1), vec![1]);
        assert_eq!(moment_grid(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(moment_grid(16), vec![1, 2, 4, 8, 16]);
    }
}
