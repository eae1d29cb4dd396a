use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use grasslearn::manifold::{distance_from_angles, load_point, principal_angles, DistanceMetric};
use grasslearn::Result;
use serde::Serialize;
use serde_json::json;

#[derive(Args, Debug, Serialize)]
pub struct DistArgs {
    /// CSV basis of the first subspace (orthonormalized if needed).
    pub a: PathBuf,
    /// CSV basis of the second subspace.
    pub b: PathBuf,
    /// One metric name, or `all`.
    #[arg(long, default_value = "all")]
    pub metric: String,
}

pub fn run(ctx: &crate::report::Context, args: &DistArgs) -> Result<()> {
    let metrics: Vec<DistanceMetric> = if args.metric == "all" {
        DistanceMetric::ALL.to_vec()
    } else {
        vec![args.metric.parse()?]
    };
    let a = load_point(&args.a)?;
    let b = load_point(&args.b)?;
    for (p, path) in [(&a, &args.a), (&b, &args.b)] {
        if !p.was_orthonormal {
            log::info!("{}: columns were orthonormalized", path.display());
        }
    }
    let angles = principal_angles(&a.point, &b.point)?;
    let distances: BTreeMap<&str, f64> = metrics
        .iter()
        .map(|&m| (m.name(), distance_from_angles(m, &angles)))
        .collect();
    ctx.emit(
        "dist",
        args,
        json!({
            "n": a.point.n(),
            "k": a.point.k(),
            "angles": angles.angles(),
            "cosines": angles.cosines(),
            "distances": distances,
            "orthonormalized": [!a.was_orthonormal, !b.was_orthonormal],
        }),
    )
}
