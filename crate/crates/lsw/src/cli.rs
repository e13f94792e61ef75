//! The `lsw` executable: one subcommand per pipeline stage.
//!
//! Every run writes a `run.json` next to its output holding the resolved
//! configuration. Outputs carry no timestamps, so identical flags produce
//! identical bytes.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lsw_core::dci::{compute_dci, DciReport};
use lsw_core::editor::{default_k_grid, default_tau, Direction, EditConfig, Editor};
use lsw_core::forest::{self, ForestConfig, MaxFeatures};
use lsw_core::inversion::{invert, InversionConfig};
use lsw_core::metrics::{
    frechet_distance, identity_preservation, kernel_distance, semantic_correctness, FrechetDistance,
};
use lsw_core::ranking::{rank_linear_coef, rank_score_topk, LinearRankerConfig};
use lsw_core::toygen::{RenderedOutput, ToyGenerator, ToyGeneratorSpec};
use lsw_core::{FeatureRanking, LatentDataset, Matrix, RankerId, SpaceTag};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::dataio::{self, read_dataset, read_json, write_dataset, write_json};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lsw",
    version,
    about = "Latent-dimension ranking and swap editing for 3D-aware generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample paired Z/S datasets from the toy generator
    Synth(SynthArgs),
    /// Rank latent dimensions by relevance to one attribute
    Rank(RankArgs),
    /// Swap top-ranked dimensions from a support-set reference
    Edit(EditArgs),
    /// Compare Z- and S-space disentanglement
    Dci(DciArgs),
    /// Recover latent and camera for a target output
    Invert(InvertArgs),
    /// Score an edit: attribute rates, identity and distribution distances
    Eval(EvalArgs),
    /// Render one toy output vector to a binary file
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator spec JSON; the built-in default when omitted
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 5)]
    min_samples_leaf: usize,
    /// sqrt, third, all or a count
    #[arg(long, default_value = "sqrt", value_parser = parse_max_features)]
    max_features: MaxFeatures,
    #[arg(long)]
    no_bootstrap: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ForestArgs {
    fn config(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
            bootstrap: !self.no_bootstrap,
            seed: self.seed,
        }
    }
}

fn parse_max_features(s: &str) -> std::result::Result<MaxFeatures, String> {
    match s {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "third" => Ok(MaxFeatures::Third),
        "all" => Ok(MaxFeatures::All),
        n => n
            .parse()
            .map(MaxFeatures::Count)
            .map_err(|_| format!("expected sqrt, third, all or a count, got `{n}`")),
    }
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    attr: String,
    #[arg(long, default_value = "forest_mdi")]
    ranker: RankerId,
    #[arg(long)]
    out: PathBuf,
    /// Also dump the fitted forest (forest_mdi only)
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    forest: ForestArgs,
    /// L2 strength for linear_coef
    #[arg(long, default_value_t = 1e-2)]
    l2: f64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
}

#[derive(Debug, Args)]
struct EditArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    ranking: PathBuf,
    #[arg(long)]
    attr: String,
    #[arg(long = "dir", default_value = "add")]
    direction: Direction,
    /// Identity-loss budget; 0.25 for face datasets, 0.1 otherwise
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 32)]
    support_n: usize,
    /// Comma-separated ascending K candidates
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    /// Generator spec; falls back to the dataset's meta.json
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Edit every row instead of only those lacking the edit outcome
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DciArgs {
    #[arg(long)]
    data_z: PathBuf,
    #[arg(long)]
    data_s: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[command(flatten)]
    forest: ForestArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InvertArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.6)]
    lambda2: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda3: f64,
    #[arg(long, default_value_t = 10)]
    alternations: usize,
    #[arg(long, default_value_t = 20)]
    steps_per_phase: usize,
    #[arg(long, default_value_t = 200)]
    final_steps: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    fd_epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    before: PathBuf,
    #[arg(long)]
    after: PathBuf,
    /// Restrict attribute rates to one attribute
    #[arg(long)]
    attr: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    sim_threshold: f64,
    /// KID subset size; min(100, N) when omitted
    #[arg(long)]
    kid_subset_size: Option<usize>,
    #[arg(long, default_value_t = 10)]
    kid_subsets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Render row `--row` of this dataset instead of a fresh sample
    #[arg(long, requires = "row")]
    data: Option<PathBuf>,
    #[arg(long)]
    row: Option<usize>,
    /// Sampling seed when no dataset is given
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    camera: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 success, 1 validation error, 2 I/O error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Synth(a) => synth(a),
        Command::Rank(a) => rank(a),
        Command::Edit(a) => edit(a),
        Command::Dci(a) => dci(a),
        Command::Invert(a) => invert_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Render(a) => render(a),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies `LSW_THREADS` (0 or unset = one worker per core).
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("LSW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "LSW_THREADS must be a non-negative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        // A second run in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Sidecar config path for a file output: `ranking.json` → `ranking.run.json`.
fn run_path_for_file(out: &Path) -> PathBuf {
    out.with_extension("run.json")
}

fn write_run(path: &Path, command: &str, config: serde_json::Value) -> Result<()> {
    let run = json!({
        "command": command,
        "lsw_version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    write_json(path, &run)
}

fn load_spec(path: Option<&Path>) -> Result<ToyGeneratorSpec> {
    match path {
        Some(p) => read_json(p),
        None => Ok(ToyGeneratorSpec::default()),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => {
            fs::create_dir_all(p).map_err(|e| CliError::io(p, e))
        }
        _ => Ok(()),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let generator = ToyGenerator::new(spec.clone())?;
    let (z, s) = generator.sample_dataset(a.n, a.seed)?;
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_json(&a.out.join("spec.json"), &spec)?;
    write_dataset(&a.out.join("z"), &z, Some("../spec.json"))?;
    write_dataset(&a.out.join("s"), &s, Some("../spec.json"))?;
    write_run(
        &a.out.join("run.json"),
        "synth",
        json!({ "spec": spec, "n": a.n, "seed": a.seed, "out": a.out }),
    )?;
    println!(
        "wrote {} samples (d_s = {}) to {}",
        a.n,
        generator.d_s(),
        a.out.display()
    );
    Ok(())
}

fn rank(a: RankArgs) -> Result<()> {
    let (ds, _) = read_dataset(&a.data)?;
    let forest_cfg = a.forest.config();
    let linear_cfg = LinearRankerConfig {
        l2: a.l2,
        epochs: a.epochs,
        seed: a.forest.seed,
    };
    if a.model.is_some() && a.ranker != RankerId::ForestMdi {
        return Err(CliError::Usage(
            "--model only applies to --ranker forest_mdi".into(),
        ));
    }
    let ranking = match a.ranker {
        RankerId::ForestMdi => {
            let y = ds.attribute_scores(&a.attr)?;
            let model = forest::fit(ds.latents(), &y, &forest_cfg)?;
            if let Some(path) = &a.model {
                ensure_parent(path)?;
                write_json(path, &model)?;
            }
            FeatureRanking::from_importances(&a.attr, RankerId::ForestMdi, model.importances)?
        }
        RankerId::ScoreTopk => rank_score_topk(&ds, &a.attr)?,
        RankerId::LinearCoef => rank_linear_coef(&ds, &a.attr, &linear_cfg)?,
    };
    ensure_parent(&a.out)?;
    write_json(&a.out, &ranking)?;
    let config = match a.ranker {
        RankerId::ForestMdi => json!({ "forest": forest_cfg }),
        RankerId::ScoreTopk => json!({}),
        RankerId::LinearCoef => json!({ "linear": linear_cfg }),
    };
    write_run(
        &run_path_for_file(&a.out),
        "rank",
        json!({
            "data": a.data,
            "attribute": a.attr,
            "ranker": a.ranker,
            "ranker_config": config,
            "model": a.model,
            "out": a.out,
        }),
    )?;
    let top: Vec<String> = ranking
        .top(ranking.n_dims().min(8))
        .iter()
        .map(|d| d.to_string())
        .collect();
    println!(
        "{} top dims for `{}`: {}",
        a.ranker.as_str(),
        a.attr,
        top.join(" ")
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ReportRow {
    id: usize,
    reference_index: usize,
    chosen_k: usize,
    identity_loss: f64,
    satisfied: bool,
}

fn render_code(generator: &ToyGenerator, tag: SpaceTag, code: &[f64]) -> Result<RenderedOutput> {
    Ok(match tag {
        SpaceTag::S => generator.render(code, 0.0)?,
        SpaceTag::Z => generator.render_z(code, 0.0)?,
    })
}

fn edit(a: EditArgs) -> Result<()> {
    let (ds, meta) = read_dataset(&a.data)?;
    let ranking: FeatureRanking = read_json(&a.ranking)?;
    let spec_path = match (&a.spec, &meta.generator) {
        (Some(p), _) => p.clone(),
        (None, Some(rel)) => a.data.join(rel),
        (None, None) => {
            return Err(CliError::Usage(
                "edit needs a generator: pass --spec or record `generator` in meta.json".into(),
            ))
        }
    };
    let spec: ToyGeneratorSpec = read_json(&spec_path)?;
    let generator = ToyGenerator::new(spec.clone())?;
    if generator.d_s() != ds.n_dims() {
        return Err(lsw_core::Error::DimensionMismatch {
            expected: ds.n_dims(),
            got: generator.d_s(),
        }
        .into());
    }
    let tau = a.tau.unwrap_or_else(|| default_tau(ds.domain()));
    let cfg = EditConfig {
        attribute: a.attr.clone(),
        direction: a.direction,
        tau,
        support_n: a.support_n,
        k_grid: a
            .k_grid
            .clone()
            .unwrap_or_else(|| default_k_grid(ds.n_dims())),
        ranking,
    };
    let editor = Editor::new(&ds, &cfg)?;
    let scores = ds.attribute_scores(&a.attr)?;
    let rows: Vec<usize> = (0..ds.n_samples())
        .filter(|&i| {
            a.all
                || match a.direction {
                    Direction::Add => scores[i] < a.threshold,
                    Direction::Remove => scores[i] >= a.threshold,
                }
        })
        .collect();

    let tag = ds.space_tag();
    let results = rows
        .par_iter()
        .map(|&i| {
            let target = ds.latent(i);
            let before = render_code(&generator, tag, target)?;
            let result = editor.edit(target, |_, edited| -> Result<f64> {
                let after = render_code(&generator, tag, edited)?;
                Ok(generator.identity_loss(&before, &after)?)
            })?;
            let after = render_code(&generator, tag, &result.edited_latent)?;
            let scores = generator.oracle_classify(&after);
            let emb = generator.identity_embed(&after)?;
            Ok((result, scores, emb))
        })
        .collect::<Result<Vec<_>>>()?;

    let d = ds.n_dims();
    let mut latents = Matrix::zeros(rows.len(), d);
    let mut new_scores = Matrix::zeros(rows.len(), ds.attribute_names().len());
    let mut emb = Matrix::zeros(rows.len(), generator.embed_dim());
    for (r, (res, sc, e)) in results.iter().enumerate() {
        latents.row_mut(r).copy_from_slice(&res.edited_latent);
        new_scores.row_mut(r).copy_from_slice(sc);
        emb.row_mut(r).copy_from_slice(e);
    }
    let before = ds.select(&rows);
    let after = LatentDataset::new(
        tag,
        latents,
        ds.attribute_names().to_vec(),
        new_scores,
        Some(emb),
    )?
    .with_domain(ds.domain().map(str::to_owned));
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_json(&a.out.join("spec.json"), &spec)?;
    write_dataset(&a.out.join("before"), &before, Some("../spec.json"))?;
    write_dataset(&a.out.join("after"), &after, Some("../spec.json"))?;

    let report_path = a.out.join("report.csv");
    let file = File::create(&report_path).map_err(|e| CliError::io(&report_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for (&id, (res, _, _)) in rows.iter().zip(&results) {
        w.serialize(ReportRow {
            id,
            reference_index: res.reference_index,
            chosen_k: res.chosen_k,
            identity_loss: res.identity_loss,
            satisfied: res.satisfied,
        })
        .map_err(|e| CliError::format(&report_path, e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record([
            "id",
            "reference_index",
            "chosen_k",
            "identity_loss",
            "satisfied",
        ])
        .map_err(|e| CliError::format(&report_path, e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(&report_path, e))?;

    write_run(
        &a.out.join("run.json"),
        "edit",
        json!({
            "data": a.data,
            "ranking": a.ranking,
            "attribute": a.attr,
            "direction": a.direction,
            "tau": tau,
            "support_n": a.support_n,
            "k_grid": cfg.k_grid,
            "spec": spec,
            "all": a.all,
            "threshold": a.threshold,
            "out": a.out,
        }),
    )?;
    let satisfied = results.iter().filter(|(r, _, _)| r.satisfied).count();
    println!(
        "edited {} rows, {} within tau = {tau}",
        rows.len(),
        satisfied
    );
    Ok(())
}

fn dci_table(z: &DciReport, s: &DciReport) -> String {
    let mut t = String::from("space  disent.  compl.  inform.\n");
    for r in [s, z] {
        t.push_str(&format!(
            "{:<5}  {:>7.2}  {:>6.2}  {:>7.2}\n",
            r.space_tag.to_string(),
            r.disentanglement,
            r.completeness,
            r.informativeness
        ));
    }
    t
}

fn dci(a: DciArgs) -> Result<()> {
    if !(a.train_frac > 0.0 && a.train_frac < 1.0) {
        return Err(CliError::Usage(format!(
            "--train-frac must lie in (0, 1), got {}",
            a.train_frac
        )));
    }
    let (z, _) = read_dataset(&a.data_z)?;
    let (s, _) = read_dataset(&a.data_s)?;
    let cfg = a.forest.config();
    let report = |ds: &LatentDataset| {
        let (train, test) = ds.split_by_index(a.train_frac);
        compute_dci(&train, &test, &cfg)
    };
    let rz = report(&z)?;
    let rs = report(&s)?;
    ensure_parent(&a.out)?;
    write_json(&a.out, &json!({ "z": rz, "s": rs }))?;
    write_run(
        &run_path_for_file(&a.out),
        "dci",
        json!({
            "data_z": a.data_z,
            "data_s": a.data_s,
            "train_frac": a.train_frac,
            "forest": cfg,
            "out": a.out,
        }),
    )?;
    print!("{}", dci_table(&rz, &rs));
    Ok(())
}

fn invert_cmd(a: InvertArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let generator = ToyGenerator::new(spec.clone())?;
    let target = dataio::read_matrix(&a.target)?;
    if target.rows() != 1 || target.cols() != generator.out_dim() {
        return Err(CliError::format(
            &a.target,
            format!(
                "expected a 1×{} output, found {}×{}",
                generator.out_dim(),
                target.rows(),
                target.cols()
            ),
        ));
    }
    let cfg = InversionConfig {
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        lambda3: a.lambda3,
        n_alternations: a.alternations,
        steps_per_phase: a.steps_per_phase,
        final_latent_steps: a.final_steps,
        learning_rate: a.lr,
        fd_epsilon: a.fd_epsilon,
        seed: a.seed,
    };
    let result = invert(&generator, &RenderedOutput(target.row(0).to_vec()), &cfg)?;
    ensure_parent(&a.out)?;
    write_json(&a.out, &result)?;
    write_run(
        &run_path_for_file(&a.out),
        "invert",
        json!({ "spec": spec, "target": a.target, "inversion": cfg, "out": a.out }),
    )?;
    println!(
        "final loss {:.3e}, camera {:.4}",
        result.final_loss, result.camera_hat
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct AttributeRates {
    attribute: String,
    before: f64,
    after: f64,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    n_samples: usize,
    threshold: f64,
    semantic_correctness: Vec<AttributeRates>,
    sim_threshold: f64,
    identity_preservation: Option<f64>,
    frechet: Option<FrechetDistance>,
    kernel_distance: Option<f64>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let (before, _) = read_dataset(&a.before)?;
    let (after, _) = read_dataset(&a.after)?;
    if before.attribute_names() != after.attribute_names() {
        return Err(CliError::Usage(
            "before and after datasets have different attributes".into(),
        ));
    }
    if before.n_samples() != after.n_samples() {
        return Err(lsw_core::Error::DimensionMismatch {
            expected: before.n_samples(),
            got: after.n_samples(),
        }
        .into());
    }
    let names: Vec<String> = match &a.attr {
        Some(name) => {
            before.attribute_index(name)?;
            vec![name.clone()]
        }
        None => before.attribute_names().to_vec(),
    };
    let mut rates = Vec::new();
    for name in &names {
        let (b, f) = semantic_correctness(
            &before.attribute_scores(name)?,
            &after.attribute_scores(name)?,
            a.threshold,
        )?;
        rates.push(AttributeRates {
            attribute: name.clone(),
            before: b,
            after: f,
        });
    }
    let n = before.n_samples();
    let kid_subset = a.kid_subset_size.unwrap_or(n.min(100));
    let (idp, fd, kid) = match (before.embeddings(), after.embeddings()) {
        (Some(eb), Some(ea)) => {
            let idp = identity_preservation(eb, ea, a.sim_threshold)?;
            let fd = if n >= 2 {
                Some(frechet_distance(eb, ea)?)
            } else {
                None
            };
            let kid = if n >= 2 {
                Some(kernel_distance(eb, ea, kid_subset, a.kid_subsets, a.seed)?)
            } else {
                None
            };
            (Some(idp), fd, kid)
        }
        _ => (None, None, None),
    };
    let report = EvalReport {
        n_samples: n,
        threshold: a.threshold,
        semantic_correctness: rates,
        sim_threshold: a.sim_threshold,
        identity_preservation: idp,
        frechet: fd,
        kernel_distance: kid,
    };
    ensure_parent(&a.out)?;
    write_json(&a.out, &report)?;
    write_run(
        &run_path_for_file(&a.out),
        "eval",
        json!({
            "before": a.before,
            "after": a.after,
            "attributes": names,
            "threshold": a.threshold,
            "sim_threshold": a.sim_threshold,
            "kid_subset_size": kid_subset,
            "kid_subsets": a.kid_subsets,
            "seed": a.seed,
            "out": a.out,
        }),
    )?;
    let mut stdout = std::io::stdout().lock();
    for r in &report.semantic_correctness {
        let _ = writeln!(stdout, "{}: {:.3} -> {:.3}", r.attribute, r.before, r.after);
    }
    if let Some(p) = report.identity_preservation {
        let _ = writeln!(stdout, "identity preserved: {p:.3}");
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let spec = load_spec(a.spec.as_deref())?;
    let generator = ToyGenerator::new(spec.clone())?;
    let (code, source) = match (&a.data, a.row) {
        (Some(dir), Some(row)) => {
            let (ds, _) = read_dataset(dir)?;
            if row >= ds.n_samples() {
                return Err(CliError::Usage(format!(
                    "--row {row} out of range for {} samples",
                    ds.n_samples()
                )));
            }
            let latent = ds.latent(row);
            let s = match ds.space_tag() {
                SpaceTag::S => latent.to_vec(),
                SpaceTag::Z => generator.z_to_s(latent)?,
            };
            (s, json!({ "data": dir, "row": row }))
        }
        (None, Some(_)) => return Err(CliError::Usage("--row requires --data".into())),
        _ => {
            let (_, s) = generator.sample_codes(1, a.seed)?;
            (s.row(0).to_vec(), json!({ "seed": a.seed }))
        }
    };
    let out = generator.render(&code, a.camera)?;
    ensure_parent(&a.out)?;
    dataio::save_matrix(&a.out, &Matrix::from_vec(1, out.0.len(), out.0)?)?;
    write_run(
        &run_path_for_file(&a.out),
        "render",
        json!({ "spec": spec, "source": source, "camera": a.camera, "s": code, "out": a.out }),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_path_replaces_extension() {
        assert_eq!(
            run_path_for_file(Path::new("out/ranking.json")),
            PathBuf::from("out/ranking.run.json")
        );
        assert_eq!(
            run_path_for_file(Path::new("target.f32")),
            PathBuf::from("target.run.json")
        );
    }

    #[test]
    fn max_features_parser() {
        assert_eq!(parse_max_features("sqrt"), Ok(MaxFeatures::Sqrt));
        assert_eq!(parse_max_features("12"), Ok(MaxFeatures::Count(12)));
        assert!(parse_max_features("most").is_err());
    }

    #[test]
    fn unknown_flag_and_subcommand_exit_one() {
        assert_eq!(run(["lsw", "synth", "--bogus"]), 1);
        assert_eq!(run(["lsw", "frobnicate"]), 1);
        assert_eq!(run(["lsw"]), 1);
        assert_eq!(run(["lsw", "--help"]), 0);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
