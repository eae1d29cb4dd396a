use std::path::PathBuf;

use clap::{Args, ValueEnum};
use grasslearn::adapt::{adapt_classify, select_sgf_t, AdaptMethod, DomainPair, DEFAULT_NODES};
use grasslearn::datasets::{two_domain_shift, DomainShiftSpec};
use grasslearn::numerics::io;
use grasslearn::Result;
use serde::Serialize;
use serde_json::json;

use crate::files::usage;
use crate::report::Context;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    None,
    Sgf,
    Gfk,
}

#[derive(Args, Debug, Serialize)]
pub struct AdaptArgs {
    #[arg(long, value_enum, default_value = "gfk")]
    pub method: MethodName,
    /// Position on the source-to-target geodesic; chosen on source data from `--t-grid` when absent.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.4, 0.6, 0.8])]
    pub t_grid: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NODES)]
    pub nodes: usize,
    /// Seeded two-domain benchmark instead of files.
    #[arg(long, conflicts_with_all = ["source", "target"])]
    pub demo: bool,
    /// Demo only: rotation between the domains in degrees.
    #[arg(long, default_value_t = 60.0)]
    pub rotation: f64,
    #[arg(long, required_unless_present = "demo")]
    pub source: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub source_labels: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub target: Option<PathBuf>,
    /// Used for scoring only.
    #[arg(long, required_unless_present = "demo")]
    pub target_labels: Option<PathBuf>,
    /// Dimension of the PCA subspaces.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
}

fn load(args: &AdaptArgs, seed: u64) -> Result<DomainPair> {
    if args.demo {
        return two_domain_shift(&DomainShiftSpec {
            rotation_deg: args.rotation,
            latent_dim: args.dim,
            seed,
            ..Default::default()
        });
    }
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| usage(format!("{flag} is required")))
    };
    DomainPair::from_features(
        io::read_matrix(need(&args.source, "--source")?)?,
        io::read_labels(need(&args.source_labels, "--source-labels")?)?,
        io::read_matrix(need(&args.target, "--target")?)?,
        io::read_labels(need(&args.target_labels, "--target-labels")?)?,
        args.dim,
    )
}

pub fn run(ctx: &Context, args: &AdaptArgs) -> Result<()> {
    let pair = load(args, ctx.seed)?;
    let mut selection = None;
    let method = match args.method {
        MethodName::None => AdaptMethod::NoAdapt,
        MethodName::Gfk => AdaptMethod::Gfk { nodes: args.nodes },
        MethodName::Sgf => match args.t {
            Some(t) => AdaptMethod::Sgf { t },
            None => {
                let (t, scores) = select_sgf_t(&pair, &args.t_grid)?;
                selection =
                    Some(json!({ "grid": args.t_grid, "source_scores": scores, "chosen": t }));
                AdaptMethod::Sgf { t }
            }
        },
    };
    let out = adapt_classify(&pair, method)?;
    ctx.emit(
        "adapt",
        args,
        json!({
            "method": out.method,
            "accuracy": out.accuracy,
            "per_class_accuracy": out.per_class_accuracy,
            "predictions": out.predictions,
            "t_selection": selection,
        }),
    )
}
