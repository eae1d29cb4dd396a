use std::path::PathBuf;

use clap::Args;
use grasslearn::adapt::accuracy;
use grasslearn::datasets::{labeled_subspaces, SubspaceClassesSpec};
use grasslearn::gda::{gda_fit, LabeledGrassmannSet};
use grasslearn::kernels::KernelSpec;
use grasslearn::manifold::{DistanceMetric, GrassmannPoint};
use grasslearn::Result;
use serde::Serialize;
use serde_json::json;

use crate::files::{read_subspaces, usage, write_json};
use crate::report::Context;

#[derive(Args, Debug, Serialize)]
pub struct GdaArgs {
    /// Labeled subspace JSON used for fitting.
    #[arg(long, required_unless_present = "demo")]
    pub train: Option<PathBuf>,
    /// Subspace JSON to classify; scored when it carries labels.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Seeded 3-class benchmark on G(10,2), 60 train and 60 test.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub demo: bool,
    /// projection, binet-cauchy, gaussian-projection or gaussian-chordal
    #[arg(long, default_value = "projection")]
    pub kernel: String,
    /// Bandwidth of the gaussian kernels.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of discriminant directions; defaults to classes − 1.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

fn kernel(args: &GdaArgs) -> Result<KernelSpec> {
    match args.kernel.as_str() {
        "projection" => Ok(KernelSpec::Projection),
        "binet-cauchy" => Ok(KernelSpec::BinetCauchy),
        "gaussian-projection" => KernelSpec::gaussian(args.sigma, DistanceMetric::Projection),
        "gaussian-chordal" => KernelSpec::gaussian(args.sigma, DistanceMetric::Chordal),
        other => Err(usage(format!("unknown kernel '{other}'"))),
    }
}

type Split = (LabeledGrassmannSet, Vec<GrassmannPoint>, Option<Vec<usize>>);

fn load(args: &GdaArgs, seed: u64) -> Result<Split> {
    if args.demo {
        let (set, _) = labeled_subspaces(&SubspaceClassesSpec {
            classes: 3,
            per_class: 40,
            n: 10,
            k: 2,
            within_angle: 0.3,
            seed,
        })?;
        let train =
            LabeledGrassmannSet::new(set.points()[..60].to_vec(), set.labels()[..60].to_vec())?;
        return Ok((
            train,
            set.points()[60..].to_vec(),
            Some(set.labels()[60..].to_vec()),
        ));
    }
    let path = args
        .train
        .as_ref()
        .ok_or_else(|| usage("--train is required without --demo"))?;
    let f = read_subspaces(path)?;
    let labels = f
        .labels
        .ok_or_else(|| usage(format!("{} carries no labels", path.display())))?;
    let train = LabeledGrassmannSet::new(f.points, labels)?;
    match &args.test {
        Some(p) => {
            let t = read_subspaces(p)?;
            Ok((train, t.points, t.labels))
        }
        None => Ok((train, Vec::new(), None)),
    }
}

pub fn run(ctx: &Context, args: &GdaArgs) -> Result<()> {
    let spec = kernel(args)?;
    let (train, test, truth) = load(args, ctx.seed)?;
    let m = args
        .dims
        .unwrap_or(train.num_classes().saturating_sub(1).max(1));
    let model = gda_fit(&train, spec, args.epsilon, m)?;
    let train_acc = accuracy(&model.classify_points(train.points())?, train.labels());
    let (predictions, test_acc) = if test.is_empty() {
        (Vec::new(), None)
    } else {
        let p = model.classify_points(&test)?;
        let acc = truth.as_ref().map(|t| accuracy(&p, t));
        (p, acc)
    };
    if let Some(path) = &args.model_out {
        write_json(path, &model)?;
    }
    ctx.emit(
        "gda",
        args,
        json!({
            "kernel": spec.to_string(),
            "epsilon": model.epsilon,
            "dims": m,
            "quotients": model.quotients,
            "train_accuracy": train_acc,
            "test_accuracy": test_acc,
            "predictions": predictions,
        }),
    )
}
