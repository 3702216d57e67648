//! Command-line pipeline: simulate corpora, extract image features, fit the
//! model, assemble segmentation maps, run the clustering baseline and score
//! detections.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 on numerical failures.

use clap::{Args, Parser, Subcommand};
use pmlda::error::Error;
use pmlda::generative::GenSpec;
use pmlda::model::{Hyperparams, TopicParams};
use pmlda::sampler::{run_inference, SamplerConfig};
use pmlda::{fcm, features, io, roc, segmentation};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pmlda", version, about = "Partial-membership topic segmentation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic corpus with ground-truth latents.
    Generate(GenerateArgs),
    /// Turn an image into a corpus of feature-vector words plus a layout.
    Features(FeaturesArgs),
    /// Run MAP inference over a corpus.
    Fit(FitArgs),
    /// Assemble membership maps and their crisp/transition derivatives.
    Segment(SegmentArgs),
    /// Fuzzy c-means baseline over the same corpus format.
    Fcm(FcmArgs),
    /// Pixel-level ROC curve of a score map against a truth mask.
    EvalRoc(EvalRocArgs),
}

/// Flat `key = value` settings file with flag overrides on top.
struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&PathBuf>) -> pmlda::Result<Self> {
        match path {
            Some(p) => Ok(Self(io::read_key_values(p)?)),
            None => Ok(Self(BTreeMap::new())),
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|s| s.as_str())
    }

    fn f64(&self, key: &str) -> pmlda::Result<Option<f64>> {
        self.get(key)
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("config key `{key}`: not a number"))))
            .transpose()
    }

    fn usize(&self, key: &str) -> pmlda::Result<Option<usize>> {
        self.get(key)
            .map(|s| s.parse::<usize>().map_err(|_| bad(format!("config key `{key}`: not an integer"))))
            .transpose()
    }

    fn u64(&self, key: &str) -> pmlda::Result<Option<u64>> {
        self.get(key)
            .map(|s| s.parse::<u64>().map_err(|_| bad(format!("config key `{key}`: not an integer"))))
            .transpose()
    }

    fn vec(&self, key: &str) -> pmlda::Result<Option<Vec<f64>>> {
        self.get(key).map(|s| parse_vec(s, key)).transpose()
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn parse_vec(s: &str, what: &str) -> pmlda::Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("{what}: `{t}` is not a number"))))
        .collect()
}

fn parse_means(s: &str) -> pmlda::Result<Vec<Vec<f64>>> {
    s.split(';').map(|v| parse_vec(v, "means")).collect()
}

#[derive(Args)]
struct GenerateArgs {
    /// Settings file (keys: alpha, lambda, means, sigma2, docs, words, seed,
    /// fix_pi, fix_s).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Topic means, e.g. "-4,-4;6,6".
    #[arg(long, allow_hyphen_values = true)]
    means: Option<String>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Dirichlet concentration, e.g. "1,1".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    docs: Option<usize>,
    #[arg(long)]
    words: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pin every document's proportions, e.g. "0.5,0.5".
    #[arg(long)]
    fix_pi: Option<String>,
    /// Pin every document's scaling factor.
    #[arg(long)]
    fix_s: Option<f64>,
    /// Corpus CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth latents CSV output.
    #[arg(long)]
    truth: PathBuf,
    /// Optional ground-truth topic parameters as a key-value state file.
    #[arg(long)]
    truth_state: Option<PathBuf>,
}

fn cmd_generate(args: GenerateArgs) -> pmlda::Result<()> {
    let cfg = Settings::load(args.config.as_ref())?;
    let means = match (&args.means, cfg.get("means")) {
        (Some(s), _) => parse_means(s)?,
        (None, Some(s)) => parse_means(s)?,
        (None, None) => return Err(bad("generate needs topic means (--means or config)")),
    };
    let sigma2 = args.sigma2.or(cfg.f64("sigma2")?).unwrap_or(1.0);
    let k = means.len();
    let alpha = match (&args.alpha, cfg.vec("alpha")?) {
        (Some(s), _) => parse_vec(s, "alpha")?,
        (None, Some(v)) => v,
        (None, None) => vec![1.0; k],
    };
    let topics = TopicParams::new(means, sigma2)?;
    let mut spec = GenSpec::isotropic(
        alpha,
        args.lambda.or(cfg.f64("lambda")?).unwrap_or(1.0),
        &topics,
        args.docs.or(cfg.usize("docs")?).unwrap_or(10),
        args.words.or(cfg.usize("words")?).unwrap_or(100),
        args.seed.or(cfg.u64("seed")?).unwrap_or(0),
    );
    spec.fixed_proportions = match (&args.fix_pi, cfg.vec("fix_pi")?) {
        (Some(s), _) => Some(parse_vec(s, "fix_pi")?),
        (None, v) => v,
    };
    spec.fixed_scale = args.fix_s.or(cfg.f64("fix_s")?);

    let (corpus, truth) = pmlda::generative::sample_corpus(&spec)?;
    io::write_corpus(&args.out, &corpus)?;
    io::write_truth(&args.truth, &truth.docs)?;
    if let Some(p) = &args.truth_state {
        io::write_map_state(p, &truth)?;
    }
    println!(
        "generated {} documents x {} words (dim {}), log joint {}",
        corpus.len(),
        spec.words_per_doc,
        corpus[0].dim(),
        truth.log_joint
    );
    Ok(())
}

#[derive(Args)]
struct FeaturesArgs {
    /// Input image: PGM for the grayscale extractors, PPM for gradient-color.
    #[arg(long)]
    image: PathBuf,
    /// intensity-entropy | gradient-color | filter-bank
    #[arg(long)]
    extractor: String,
    /// Settings file (keys: window, stride, sigma, entropy_window,
    /// intensity_scale).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sliding-window size for document tiling.
    #[arg(long)]
    window: Option<usize>,
    /// Sliding-window stride for document tiling.
    #[arg(long)]
    stride: Option<usize>,
    /// Label map (PGM or CSV); selects label-map documents instead of tiling.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Entropy window size.
    #[arg(long)]
    entropy_window: Option<usize>,
    /// Intensity scaling applied to the normalized windowed mean.
    #[arg(long)]
    intensity_scale: Option<f64>,
    /// Gaussian derivative scale for gradient-color.
    #[arg(long)]
    sigma: Option<f64>,
    /// Corpus CSV output.
    #[arg(long)]
    out: PathBuf,
    /// Layout sidecar CSV output.
    #[arg(long)]
    layout_out: PathBuf,
}

fn cmd_features(args: FeaturesArgs) -> pmlda::Result<()> {
    let cfg = Settings::load(args.config.as_ref())?;
    let fimg = match args.extractor.as_str() {
        "intensity-entropy" => {
            let img = io::read_pgm(&args.image)?;
            let window = args.entropy_window.or(cfg.usize("entropy_window")?).unwrap_or(21);
            let scale = args.intensity_scale.or(cfg.f64("intensity_scale")?).unwrap_or(10.0);
            features::extract_intensity_entropy(&img, window, scale)?
        }
        "gradient-color" => {
            let img = io::read_ppm(&args.image)?;
            let sigma = args.sigma.or(cfg.f64("sigma")?).unwrap_or(2.0);
            features::extract_gradient_color(&img, sigma)?
        }
        "filter-bank" => {
            let img = io::read_pgm(&args.image)?;
            features::extract_filter_bank(&img)?
        }
        other => return Err(bad(format!("unknown extractor `{other}`"))),
    };
    let (corpus, layout) = match &args.labels {
        Some(path) => {
            let labels = io::read_label_map(path)?;
            features::group_by_labels(&fimg, &labels)?
        }
        None => {
            let window = args.window.or(cfg.usize("window")?).unwrap_or(64);
            let stride = args.stride.or(cfg.usize("stride")?).unwrap_or(32);
            features::tile_documents(&fimg, window, stride)?
        }
    };
    io::write_corpus(&args.out, &corpus)?;
    io::write_layout(&args.layout_out, &layout)?;
    println!(
        "extracted {} ({} channels), {} documents, {} words",
        fimg.provenance,
        fimg.dim,
        corpus.len(),
        corpus.iter().map(|d| d.len()).sum::<usize>()
    );
    Ok(())
}

#[derive(Args)]
struct FitArgs {
    /// Corpus CSV input.
    #[arg(long)]
    corpus: PathBuf,
    /// Settings file (keys: alpha, lambda, k, t, seed, f, thin, sigma_floor,
    /// fix_pi, fix_s).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dirichlet concentration, e.g. "1,1"; its length sets the topic count.
    #[arg(long)]
    alpha: Option<String>,
    /// Topic count; used with a flat concentration when --alpha is absent.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Sampling sweeps.
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Topic-mean proposal covariance multiplier.
    #[arg(long)]
    proposal_scale: Option<f64>,
    /// Keep a state snapshot every N sweeps (0 = best only).
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    sigma_floor: Option<f64>,
    /// Pin per-document proportions, e.g. "0.333,0.333,0.334".
    #[arg(long)]
    fix_pi: Option<String>,
    /// Pin the per-document scaling factor.
    #[arg(long)]
    fix_s: Option<f64>,
    /// Worker threads for the per-document updates (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Per-sweep log-joint and acceptance-rate CSV output.
    #[arg(long)]
    trace: PathBuf,
    /// MAP state key-value output.
    #[arg(long)]
    state: PathBuf,
    /// MAP per-word membership CSV output.
    #[arg(long)]
    memberships: PathBuf,
}

fn cmd_fit(args: FitArgs) -> pmlda::Result<()> {
    let cfg = Settings::load(args.config.as_ref())?;
    let alpha = match (&args.alpha, cfg.vec("alpha")?) {
        (Some(s), _) => parse_vec(s, "alpha")?,
        (None, Some(v)) => v,
        (None, None) => {
            let k = args.k.or(cfg.usize("k")?).unwrap_or(2);
            vec![1.0; k]
        }
    };
    if let Some(k) = args.k.or(cfg.usize("k")?) {
        if k != alpha.len() {
            return Err(bad("k disagrees with the alpha length"));
        }
    }
    let hp = Hyperparams::new(
        alpha,
        args.lambda.or(cfg.f64("lambda")?).unwrap_or(1.0),
        args.proposal_scale.or(cfg.f64("f")?).unwrap_or(1.0),
        args.sweeps.or(cfg.usize("t")?).unwrap_or(500),
        args.seed.or(cfg.u64("seed")?).unwrap_or(0),
    )?;
    let mut config = SamplerConfig::new(hp);
    if let Some(thin) = args.thin.or(cfg.usize("thin")?) {
        config.thin = thin;
    }
    if let Some(floor) = args.sigma_floor.or(cfg.f64("sigma_floor")?) {
        config.sigma_floor = floor;
    }
    config.fixed_proportions = match (&args.fix_pi, cfg.vec("fix_pi")?) {
        (Some(s), _) => Some(parse_vec(s, "fix_pi")?),
        (None, v) => v,
    };
    config.fixed_scale = args.fix_s.or(cfg.f64("fix_s")?);

    let corpus = io::read_corpus(&args.corpus)?;
    let trace = match args.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| bad(format!("thread pool: {e}")))?;
            pool.install(|| run_inference(&corpus, &config))?
        }
        None => run_inference(&corpus, &config)?,
    };

    io::write_trace(&args.trace, &trace)?;
    io::write_map_state(&args.state, &trace.best_state)?;
    io::write_memberships(&args.memberships, &io::memberships_of(&trace.best_state))?;
    let rates = trace.final_rates();
    println!(
        "fit: {} sweeps, best log joint {}, acceptance pi={:.3} s={:.3} z={:.3} mu={:.3} sigma={:.3}",
        trace.log_joint_series.len(),
        trace.best_log_joint,
        rates.proportions,
        rates.scale,
        rates.membership,
        rates.mean,
        rates.sigma,
    );
    Ok(())
}

#[derive(Args)]
struct SegmentArgs {
    /// Per-word membership CSV (from fit or fcm).
    #[arg(long)]
    memberships: PathBuf,
    /// Layout sidecar CSV.
    #[arg(long)]
    layout: PathBuf,
    /// Output image height (default: layout bound).
    #[arg(long)]
    height: Option<usize>,
    /// Output image width (default: layout bound).
    #[arg(long)]
    width: Option<usize>,
    /// Transition band lower edge.
    #[arg(long, default_value_t = 0.4)]
    lo: f64,
    /// Transition band upper edge.
    #[arg(long, default_value_t = 0.6)]
    hi: f64,
    /// Output prefix; writes {prefix}.topic{t}.{csv,pgm},
    /// {prefix}.crisp.{csv,pgm} and {prefix}.transition.{csv,pgm}.
    #[arg(long)]
    out_prefix: String,
}

fn cmd_segment(args: SegmentArgs) -> pmlda::Result<()> {
    let memberships = io::read_memberships(&args.memberships)?;
    let layout = io::read_layout(&args.layout)?;
    let height = args.height.unwrap_or(layout.height);
    let width = args.width.unwrap_or(layout.width);
    let map = segmentation::assemble_maps(&memberships, &layout, height, width)?;

    for topic in 0..map.k {
        let image = map.topic_image(topic);
        io::write_matrix_csv(
            Path::new(&format!("{}.topic{topic}.csv", args.out_prefix)),
            height,
            width,
            &image,
        )?;
        let gray = io::membership_to_gray(height, width, &image)?;
        io::write_pgm(Path::new(&format!("{}.topic{topic}.pgm", args.out_prefix)), &gray)?;
    }

    let crisp = segmentation::crisp_map(&map);
    let crisp_values: Vec<f64> =
        crisp.iter().map(|t| t.map(|t| t as f64).unwrap_or(-1.0)).collect();
    io::write_matrix_csv(
        Path::new(&format!("{}.crisp.csv", args.out_prefix)),
        height,
        width,
        &crisp_values,
    )?;
    // Crisp PGM: topic index per pixel, 255 for uncovered.
    let crisp_pixels: Vec<u8> = crisp
        .iter()
        .map(|t| t.map(|t| t.min(254) as u8).unwrap_or(255))
        .collect();
    io::write_pgm(
        Path::new(&format!("{}.crisp.pgm", args.out_prefix)),
        &features::GrayImage::new(height, width, crisp_pixels)?,
    )?;

    let transition = segmentation::transition_map(&map, args.lo, args.hi)?;
    let transition_values: Vec<f64> =
        transition.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    io::write_matrix_csv(
        Path::new(&format!("{}.transition.csv", args.out_prefix)),
        height,
        width,
        &transition_values,
    )?;
    let transition_pixels: Vec<u8> = transition.iter().map(|&t| if t { 255 } else { 0 }).collect();
    io::write_pgm(
        Path::new(&format!("{}.transition.pgm", args.out_prefix)),
        &features::GrayImage::new(height, width, transition_pixels)?,
    )?;

    let covered = map.covered.iter().filter(|&&c| c).count();
    println!(
        "assembled {} topics over {}x{} ({} covered pixels, {} in transition)",
        map.k,
        height,
        width,
        covered,
        transition.iter().filter(|&&t| t).count()
    );
    Ok(())
}

#[derive(Args)]
struct FcmArgs {
    /// Corpus CSV input; all words are clustered jointly.
    #[arg(long)]
    corpus: PathBuf,
    /// Cluster count.
    #[arg(long)]
    clusters: usize,
    /// Fuzzifier exponent.
    #[arg(long, default_value_t = 1.5)]
    fuzzifier: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-word membership CSV output (same layout as fit).
    #[arg(long)]
    memberships: PathBuf,
}

fn cmd_fcm(args: FcmArgs) -> pmlda::Result<()> {
    let corpus = io::read_corpus(&args.corpus)?;
    let data: Vec<Vec<f64>> = corpus.iter().flat_map(|d| d.words.iter().cloned()).collect();
    let mut rng = pmlda::stream::substream(args.seed, pmlda::stream::Domain::Baseline, 0, 0);
    let result = fcm::fcm(&data, args.clusters, args.fuzzifier, args.tol, args.max_iter, &mut rng)?;

    // Regroup flat memberships by the corpus document structure.
    let mut grouped = Vec::with_capacity(corpus.len());
    let mut offset = 0;
    for doc in &corpus {
        grouped.push(result.memberships[offset..offset + doc.len()].to_vec());
        offset += doc.len();
    }
    io::write_memberships(&args.memberships, &grouped)?;
    println!(
        "fcm: {} clusters over {} points, {} iterations, final objective {}",
        args.clusters,
        data.len(),
        result.objective_series.len(),
        result.objective_series.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

#[derive(Args)]
struct EvalRocArgs {
    /// Score map: CSV matrix or PGM (values scaled to [0, 1]).
    #[arg(long)]
    scores: PathBuf,
    /// Truth mask: CSV of integers or PGM; nonzero means positive.
    #[arg(long)]
    truth: PathBuf,
    /// ROC curve CSV output (threshold, fpr, tpr).
    #[arg(long)]
    roc: PathBuf,
}

fn cmd_eval_roc(args: EvalRocArgs) -> pmlda::Result<()> {
    let (h, w, scores) = match args.scores.extension().and_then(|e| e.to_str()) {
        Some("pgm") => {
            let img = io::read_pgm(&args.scores)?;
            (
                img.height,
                img.width,
                img.pixels.iter().map(|&p| p as f64 / 255.0).collect::<Vec<f64>>(),
            )
        }
        _ => io::read_matrix_csv(&args.scores)?,
    };
    let mask = io::read_label_map(&args.truth)?;
    if mask.height != h || mask.width != w {
        return Err(bad("score map and truth mask sizes differ"));
    }
    let truth: Vec<bool> = mask.labels.iter().map(|&v| v != 0).collect();
    let curve = roc::roc_curve(&scores, &truth)?;

    let mut out = String::from("threshold,fpr,tpr\n");
    for (threshold, (fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
        out.push_str(&format!("{threshold},{fpr},{tpr}\n"));
    }
    std::fs::write(&args.roc, out)?;
    println!("auc = {}", curve.auc);
    Ok(())
}

fn run(cli: Cli) -> pmlda::Result<()> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Features(args) => cmd_features(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Fcm(args) => cmd_fcm(args),
        Command::EvalRoc(args) => cmd_eval_roc(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
