use std::path::PathBuf;

use clap::{Args, Subcommand};
use grasslearn::datasets::{
    constellation, labeled_subspaces, low_rank_masked, three_rings, two_domain_shift,
    ConstellationSpec, DomainShiftSpec, RingsSpec, SubspaceClassesSpec,
};
use grasslearn::Result;
use serde::Serialize;
use serde_json::json;

use crate::files::{OutDir, SubspaceFile};
use crate::report::Context;

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Concentric noisy rings: points.csv, labels.csv.
    Rings(RingsArgs),
    /// Low-rank matrix with a random mask: values.csv, mask.csv, truth.csv.
    LowRank(LowRankArgs),
    /// Labeled subspaces around class prototypes: set.json, prototypes.json.
    Subspaces(SubspacesArgs),
    /// Source and target domains related by a rotation.
    Domains(DomainsArgs),
    /// Noisy copies of a random codebook: set.json, codebook.json.
    Constellation(ConstellationArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct RingsArgs {
    #[arg(long, default_value_t = 600)]
    pub n_total: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 20.0, 30.0])]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub noise: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct LowRankArgs {
    #[arg(long, default_value_t = 20)]
    pub rows: usize,
    #[arg(long, default_value_t = 15)]
    pub cols: usize,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Fraction of observed entries.
    #[arg(long, default_value_t = 0.6)]
    pub observed: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SubspacesArgs {
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 40)]
    pub per_class: usize,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.3)]
    pub within_angle: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct DomainsArgs {
    #[arg(long, default_value_t = 40)]
    pub per_class: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 20)]
    pub dim: usize,
    #[arg(long, default_value_t = 60.0)]
    pub rotation: f64,
    #[arg(long, default_value_t = 2)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 0.6)]
    pub spread: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 2.0)]
    pub mean_radius: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ConstellationArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 8)]
    pub codewords: usize,
    #[arg(long, default_value_t = 50)]
    pub per: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise_angle: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(ctx: &Context, cmd: &GenCommand) -> Result<()> {
    let seed = ctx.seed;
    match cmd {
        GenCommand::Rings(a) => {
            let (x, labels) = three_rings(&RingsSpec {
                n_total: a.n_total,
                radii: a.radii.clone(),
                noise_sd: a.noise,
                seed,
            })?;
            let mut out = OutDir::required(&a.out_dir)?;
            out.matrix("points.csv", &x)?;
            out.labels("labels.csv", &labels)?;
            ctx.emit("gen rings", a, json!({ "files": out.written() }))
        }
        GenCommand::LowRank(a) => {
            let (m, truth) = low_rank_masked(a.rows, a.cols, a.rank, a.observed, seed)?;
            let mut out = OutDir::required(&a.out_dir)?;
            out.matrix("values.csv", m.values())?;
            out.matrix("mask.csv", &m.mask().to_matrix())?;
            out.matrix("truth.csv", &truth)?;
            ctx.emit(
                "gen low-rank",
                a,
                json!({ "observed": m.mask().count(), "files": out.written() }),
            )
        }
        GenCommand::Subspaces(a) => {
            let (set, prototypes) = labeled_subspaces(&SubspaceClassesSpec {
                classes: a.classes,
                per_class: a.per_class,
                n: a.n,
                k: a.k,
                within_angle: a.within_angle,
                seed,
            })?;
            let mut out = OutDir::required(&a.out_dir)?;
            out.json(
                "set.json",
                &SubspaceFile {
                    points: set.points().to_vec(),
                    labels: Some(set.labels().to_vec()),
                },
            )?;
            out.json("prototypes.json", &prototypes)?;
            ctx.emit("gen subspaces", a, json!({ "files": out.written() }))
        }
        GenCommand::Domains(a) => {
            let pair = two_domain_shift(&DomainShiftSpec {
                n_per_class: a.per_class,
                classes: a.classes,
                dim: a.dim,
                rotation_deg: a.rotation,
                latent_dim: a.latent_dim,
                spread: a.spread,
                noise: a.noise,
                mean_radius: a.mean_radius,
                seed,
            })?;
            let mut out = OutDir::required(&a.out_dir)?;
            out.matrix("source.csv", &pair.source_features)?;
            out.labels("source_labels.csv", &pair.source_labels)?;
            out.matrix("target.csv", &pair.target_features)?;
            out.labels("target_labels.csv", &pair.target_labels)?;
            ctx.emit("gen domains", a, json!({ "files": out.written() }))
        }
        GenCommand::Constellation(a) => {
            let c = constellation(&ConstellationSpec {
                n: a.n,
                k: a.k,
                codewords: a.codewords,
                per: a.per,
                noise_angle: a.noise_angle,
                seed,
            })?;
            let mut out = OutDir::required(&a.out_dir)?;
            out.json(
                "set.json",
                &SubspaceFile {
                    points: c.points,
                    labels: Some(c.labels),
                },
            )?;
            out.json("codebook.json", &c.codebook)?;
            ctx.emit("gen constellation", a, json!({ "files": out.written() }))
        }
    }
}
