use std::path::PathBuf;

use clap::{Args, ValueEnum};
use grasslearn::clustering::{
    adjusted_rand_index, grassmann_kmeans, matched_accuracy, spectral_cluster, ssc_cluster,
    LaplacianKind, SscConfig,
};
use grasslearn::manifold::GrassmannPoint;
use grasslearn::numerics::io;
use grasslearn::optim::OptimConfig;
use grasslearn::{Matrix, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{read_subspaces, usage, OutDir};
use crate::report::Context;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spectral,
    Ssc,
    Grkmeans,
}

#[derive(Args, Debug, Serialize)]
pub struct ClusterArgs {
    #[arg(long, value_enum, default_value = "ssc")]
    pub method: Method,
    /// Points as CSV rows (spectral, ssc) or a subspace JSON file (grkmeans).
    #[arg(long)]
    pub data: PathBuf,
    /// Ground-truth labels, one per line; grkmeans also reads labels from the JSON file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1.6)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub mu: f64,
    /// Run every bandwidth in `--sigmas` instead of `--sigma`.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 1.6, 3.0, 5.0])]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value = "unnormalized")]
    pub laplacian: LaplacianKind,
    /// Cluster the raw embedding rows instead of unit-normalized ones.
    #[arg(long)]
    pub no_normalize_rows: bool,
    /// Optimizer iterations (ssc) or Lloyd iterations (grkmeans).
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Labels, embeddings and projectors are written here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn scores(labels: &[usize], truth: Option<&[usize]>) -> Value {
    match truth {
        Some(t) => json!({
            "accuracy": matched_accuracy(labels, t),
            "ari": adjusted_rand_index(labels, t),
        }),
        None => json!({ "accuracy": null, "ari": null }),
    }
}

struct SigmaRun {
    sigma: f64,
    labels: Vec<usize>,
    embedding: GrassmannPoint,
    extra: Value,
}

fn run_sigma(args: &ClusterArgs, points: &Matrix, sigma: f64, seed: u64) -> Result<SigmaRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normalize = !args.no_normalize_rows;
    match args.method {
        Method::Spectral => {
            let r = spectral_cluster(points, args.k, sigma, args.laplacian, normalize, &mut rng)?;
            Ok(SigmaRun {
                sigma,
                labels: r.labels,
                embedding: r.embedding,
                extra: json!({}),
            })
        }
        Method::Ssc => {
            let cfg = SscConfig {
                k: args.k,
                beta: args.beta,
                mu: args.mu,
                sigma,
                optim: OptimConfig {
                    max_iters: args.max_iters,
                    ..Default::default()
                },
                normalize_rows: normalize,
            };
            let r = ssc_cluster(points, &cfg, args.laplacian, &mut rng)?;
            Ok(SigmaRun {
                sigma,
                extra: json!({
                    "initial_objective": r.initial_value,
                    "objective": r.optim.value,
                    "grad_norm": r.optim.grad_norm,
                    "iterations": r.optim.iterations,
                    "status": r.optim.status,
                }),
                labels: r.labels,
                embedding: r.embedding,
            })
        }
        Method::Grkmeans => unreachable!("handled separately"),
    }
}

fn run_points(ctx: &Context, args: &ClusterArgs) -> Result<()> {
    let points = io::read_matrix(&args.data)?;
    let truth = args.truth.as_ref().map(io::read_labels).transpose()?;
    if let Some(t) = &truth {
        if t.len() != points.rows() {
            return Err(usage(format!(
                "{} points but {} truth labels",
                points.rows(),
                t.len()
            )));
        }
    }
    let sigmas = if args.sweep {
        args.sigmas.clone()
    } else {
        vec![args.sigma]
    };
    if sigmas.is_empty() {
        return Err(usage("empty bandwidth list"));
    }
    let runs: Vec<SigmaRun> = sigmas
        .par_iter()
        .map(|&s| run_sigma(args, &points, s, ctx.seed))
        .collect::<Result<_>>()?;

    let mut out = OutDir::new(args.out_dir.as_deref())?;
    let mut entries = Vec::with_capacity(runs.len());
    for r in &runs {
        let tag = format!("sigma{}", r.sigma);
        out.labels(&format!("labels_{tag}.csv"), &r.labels)?;
        out.matrix(&format!("embedding_{tag}.csv"), r.embedding.basis())?;
        out.matrix(&format!("projector_{tag}.csv"), &r.embedding.projector())?;
        let mut entry = json!({ "sigma": r.sigma, "labels": r.labels });
        let merge = |entry: &mut Value, v: Value| {
            if let (Value::Object(e), Value::Object(m)) = (entry, v) {
                e.extend(m);
            }
        };
        merge(&mut entry, scores(&r.labels, truth.as_deref()));
        merge(&mut entry, r.extra.clone());
        entries.push(entry);
    }
    ctx.emit(
        "cluster",
        args,
        json!({ "method": args.method, "runs": entries, "files": out.written() }),
    )
}

fn run_grkmeans(ctx: &Context, args: &ClusterArgs) -> Result<()> {
    if args.sweep {
        return Err(usage("--sweep applies to spectral and ssc only"));
    }
    let file = read_subspaces(&args.data)?;
    let truth = match &args.truth {
        Some(p) => Some(io::read_labels(p)?),
        None => file.labels.clone(),
    };
    let km = grassmann_kmeans(
        &file.points,
        args.k,
        args.max_iters,
        &mut ChaCha8Rng::seed_from_u64(ctx.seed),
    )?;
    let mut out = OutDir::new(args.out_dir.as_deref())?;
    out.labels("labels.csv", &km.labels)?;
    out.json("centers.json", &km.centers)?;
    let mut result = json!({
        "method": args.method,
        "labels": km.labels,
        "cost": km.cost,
        "cost_trace": km.cost_trace,
        "iterations": km.iterations,
    });
    if let (Value::Object(r), Value::Object(s)) =
        (&mut result, scores(&km.labels, truth.as_deref()))
    {
        r.extend(s);
    }
    result["files"] = json!(out.written());
    ctx.emit("cluster", args, result)
}

pub fn run(ctx: &Context, args: &ClusterArgs) -> Result<()> {
    match args.method {
        Method::Grkmeans => run_grkmeans(ctx, args),
        _ => run_points(ctx, args),
    }
}
