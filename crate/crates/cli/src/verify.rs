use std::f64::consts::PI;

use grasslearn::manifold::distance_from_angles;
use grasslearn::manifold::reference::{
    lines_pair, planes_pair, PLANES_DISTANCES, PLANES_SECOND_COSINE,
};
use grasslearn::manifold::{principal_angles, random_point, DistanceMetric, PrincipalAngles};
use grasslearn::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::report::Context;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn d(m: DistanceMetric, a: &PrincipalAngles) -> f64 {
    distance_from_angles(m, a)
}

fn lines() -> Result<Check> {
    let (x, y) = lines_pair();
    let a = principal_angles(&x, &y)?;
    let got = [
        a.angles()[0],
        d(DistanceMetric::ArcLength, &a),
        d(DistanceMetric::Chordal, &a),
        d(DistanceMetric::Projection, &a),
    ];
    let want = [PI / 3.0, PI / 3.0, 1.0, 3f64.sqrt() / 2.0];
    let err = got
        .iter()
        .zip(&want)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    Ok(Check {
        name: "lines in the plane at pi/3",
        pass: err <= 1e-12,
        detail: format!("max error {err:e}"),
    })
}

fn planes() -> Result<Check> {
    let (x, y) = planes_pair();
    let a = principal_angles(&x, &y)?;
    let cos = a.cosines();
    let mut err = (cos[0] - 1.0)
        .abs()
        .max((cos[1] - PLANES_SECOND_COSINE).abs());
    for (m, v) in PLANES_DISTANCES {
        err = err.max((d(m, &a) - v).abs());
    }
    Ok(Check {
        name: "planes in R^3 sharing a line",
        pass: err <= 5e-6,
        detail: format!("max error {err:e}"),
    })
}

fn inequalities() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for (n, k) in [(4, 1), (6, 2), (8, 3)] {
        for _ in 0..1000 {
            let a = principal_angles(
                &random_point(n, k, &mut rng)?,
                &random_point(n, k, &mut rng)?,
            )?;
            let (arc, fs) = (
                d(DistanceMetric::ArcLength, &a),
                d(DistanceMetric::FubiniStudy, &a),
            );
            let (ch, pr) = (
                d(DistanceMetric::Chordal, &a),
                d(DistanceMetric::Projection, &a),
            );
            // positive entries are violations
            worst = worst
                .max(ch - arc)
                .max(pr - ch - 1e-12)
                .max(fs - arc - 1e-12);
            count += 1;
        }
    }
    let (x, y) = planes_pair();
    let a = principal_angles(&x, &y)?;
    let tie = (d(DistanceMetric::ArcLength, &a) - d(DistanceMetric::FubiniStudy, &a)).abs();
    Ok(Check {
        name: "distance inequalities",
        pass: worst <= 0.0 && tie <= 1e-12,
        detail: format!(
            "{count} random pairs, largest violation {worst:e}; single-angle tie {tie:e}"
        ),
    })
}

/// Prints one line per check; the JSON report is written only with `--report`.
/// Returns whether every check passed.
pub fn run(ctx: &Context) -> Result<bool> {
    let checks = [lines()?, planes()?, inequalities()?];
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let all = checks.iter().all(|c| c.pass);
    if !ctx.has_report_path() {
        return Ok(all);
    }
    ctx.emit(
        "verify",
        &json!({}),
        json!({
            "passed": all,
            "checks": checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        }),
    )?;
    Ok(all)
}
