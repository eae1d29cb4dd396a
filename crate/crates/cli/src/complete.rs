use std::path::PathBuf;

use clap::Args;
use grasslearn::completion::{complete, mask_apply, CompletionKind, Mask};
use grasslearn::datasets::low_rank_masked;
use grasslearn::numerics::io;
use grasslearn::optim::OptimConfig;
use grasslearn::{Matrix, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::files::{usage, OutDir};
use crate::report::Context;

#[derive(Args, Debug, Serialize)]
pub struct CompleteArgs {
    /// Matrix CSV; entries outside the mask are ignored.
    #[arg(long, required_unless_present = "demo")]
    pub values: Option<PathBuf>,
    /// 0/1 CSV of the same shape marking observed entries.
    #[arg(long, required_unless_present = "demo")]
    pub mask: Option<PathBuf>,
    /// Full matrix, used only to report the recovery error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Seeded 20×15 rank-3 matrix with 60% of entries observed.
    #[arg(long, conflicts_with_all = ["values", "mask"])]
    pub demo: bool,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// frobenius or projection
    #[arg(long, default_value = "frobenius")]
    pub objective: CompletionKind,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub grad_tol: f64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: &CompleteArgs) -> Result<()> {
    let (data, truth) = if args.demo {
        let (m, x) = low_rank_masked(20, 15, 3, 0.6, ctx.seed)?;
        (m, Some(x))
    } else {
        let (Some(values), Some(mask)) = (&args.values, &args.mask) else {
            return Err(usage("--values and --mask are required without --demo"));
        };
        let values = io::read_matrix(values)?;
        let mask = Mask::from_matrix(&io::read_matrix(mask)?)?;
        let truth = args.truth.as_ref().map(io::read_matrix).transpose()?;
        (mask_apply(&values, &mask)?, truth)
    };
    let cfg = OptimConfig {
        max_iters: args.max_iters,
        grad_tol: args.grad_tol,
        ..Default::default()
    };
    let res = complete(
        &data,
        args.rank,
        args.objective,
        &cfg,
        args.restarts,
        &mut ChaCha8Rng::seed_from_u64(ctx.seed),
    )?;
    let relative_error = truth
        .as_ref()
        .map(|x: &Matrix| {
            if x.shape() != res.x_hat.shape() {
                return Err(usage("truth and data differ in shape"));
            }
            Ok(res.x_hat.sub(x).frobenius_norm() / x.frobenius_norm())
        })
        .transpose()?;

    let mut out = OutDir::new(args.out_dir.as_deref())?;
    out.matrix("x_hat.csv", &res.x_hat)?;
    out.matrix("u.csv", res.u.basis())?;
    out.matrix("w.csv", &res.w)?;
    let best = &res.restarts[res.best_restart];
    ctx.emit(
        "complete",
        args,
        json!({
            "shape": data.shape(),
            "observed": data.mask().count(),
            "residual": res.residual,
            "relative_error": relative_error,
            "status": res.status,
            "best_restart": res.best_restart,
            "best_restart_seed": best.seed,
            "restarts": res.restarts.iter().map(|r| json!({
                "seed": r.seed,
                "value": r.value,
                "iterations": r.iterations,
                "status": r.status,
            })).collect::<Vec<_>>(),
            "trace": best.trace,
            "files": out.written(),
        }),
    )
}
