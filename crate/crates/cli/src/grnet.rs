use std::path::PathBuf;

use clap::{Args, Subcommand};
use grasslearn::adapt::accuracy;
use grasslearn::datasets::{labeled_subspaces, SubspaceClassesSpec};
use grasslearn::gda::LabeledGrassmannSet;
use grasslearn::grnet::{
    grnet_loss, grnet_predict, grnet_train, GrNetDims, GrNetParams, GrNetTrainConfig,
};
use grasslearn::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::files::{read_json, read_subspaces, usage, write_json};
use crate::report::Context;

#[derive(Subcommand, Debug)]
pub enum GrnetCommand {
    Train(TrainArgs),
    Eval(EvalArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct DataArgs {
    /// Labeled subspace JSON.
    #[arg(long, required_unless_present = "demo")]
    pub data: Option<PathBuf>,
    /// Seeded two-class set on G(10,3), 20 subspaces per class.
    #[arg(long, conflicts_with = "data")]
    pub demo: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 2)]
    pub filters: usize,
    /// Rows of each filter.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// OrthMap output dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Output classes; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    #[arg(long, default_value_t = grasslearn::grnet::DEFAULT_FD_STEP)]
    pub fd_step: f64,
    /// Where to write the trained parameters.
    #[arg(long)]
    pub params_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Parameters written by `grnet train`.
    #[arg(long)]
    pub params: PathBuf,
}

fn load(args: &DataArgs, seed: u64) -> Result<LabeledGrassmannSet> {
    if args.demo {
        return Ok(labeled_subspaces(&SubspaceClassesSpec {
            classes: 2,
            per_class: 20,
            n: 10,
            k: 3,
            within_angle: 0.3,
            seed,
        })?
        .0);
    }
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| usage("--data is required without --demo"))?;
    let f = read_subspaces(path)?;
    let labels = f
        .labels
        .ok_or_else(|| usage(format!("{} carries no labels", path.display())))?;
    LabeledGrassmannSet::new(f.points, labels)
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<()> {
    let data = load(&args.data, ctx.seed)?;
    let first = &data.points()[0];
    let dims = GrNetDims {
        n: first.n(),
        k_in: first.k(),
        m: args.m,
        d: args.d,
        classes: args.classes.unwrap_or(data.num_classes()),
        filters: args.filters,
    };
    let init = GrNetParams::init(dims, &mut ChaCha8Rng::seed_from_u64(ctx.seed))?;
    let cfg = GrNetTrainConfig {
        epochs: args.epochs,
        step: args.step,
        fd_step: args.fd_step,
    };
    let out = grnet_train(&init, &data, &cfg)?;
    let pred = grnet_predict(&out.params, data.points())?;
    if let Some(path) = &args.params_out {
        write_json(path, &out.params)?;
    }
    ctx.emit(
        "grnet-train",
        args,
        json!({
            "dims": dims,
            "parameters": dims.parameter_count(),
            "loss_trace": out.loss_trace,
            "final_step": out.final_step,
            "train_accuracy": accuracy(&pred, data.labels()),
        }),
    )
}

pub fn eval(ctx: &Context, args: &EvalArgs) -> Result<()> {
    let params: GrNetParams = read_json(&args.params)?;
    let data = load(&args.data, ctx.seed)?;
    let pred = grnet_predict(&params, data.points())?;
    ctx.emit(
        "grnet-eval",
        args,
        json!({
            "loss": grnet_loss(&params, &data)?,
            "accuracy": accuracy(&pred, data.labels()),
            "predictions": pred,
        }),
    )
}
