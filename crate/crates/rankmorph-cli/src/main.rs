//! Command-line frontend: ordering-based color morphology, vote
//! aggregation, irregularity scoring, and the end-to-end experiment.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data-format error,
//! 4 numeric failure.

mod experiment;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rankmorph::image_io::{read_image, write_image};
use rankmorph::irregularity::global_irregularity_detailed;
use rankmorph::sco::loss_curves_to_csv;
use rankmorph::stats::{compare_methods, hasse_from_tests, Direction};
use rankmorph::vote::{borda_scores, exact_condorcet_order, margins_to_csv};
use rankmorph::{
    dataset, sco, Error, ErrorCategory, ModelFile, MorphOp, ReducedMapping, Result, SoftConfig,
    VoteProfile,
};

use experiment::ExperimentConfig;

#[derive(Parser)]
#[command(name = "rankmorph", version, about = "Color morphology from consensus orderings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the learned consensus ordering on CIFAR images.
    Train(TrainArgs),
    /// Apply a morphological operator under an ordering method.
    Morph(MorphArgs),
    /// Aggregate a voter profile file.
    Vote(VoteArgs),
    /// Sort colors under an ordering method.
    Rank(RankArgs),
    /// Global irregularity of a processed image against its original.
    Irregularity(IrregularityArgs),
    /// Pairwise signed-rank comparison of per-image irregularity scores.
    Compare(CompareArgs),
    /// Full pipeline: train, process, score, test, and emit figure data.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// CIFAR-10 binary batch file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    train_start: usize,
    #[arg(long, default_value_t = 100)]
    train_count: usize,
    #[arg(long, default_value_t = 100)]
    val_start: usize,
    #[arg(long, default_value_t = 100)]
    val_count: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 1024)]
    batch_size: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the trained model JSON.
    #[arg(long)]
    model_out: PathBuf,
    /// Optional CSV of per-epoch losses.
    #[arg(long)]
    loss_out: Option<PathBuf>,
}

#[derive(Args)]
struct MorphArgs {
    #[arg(long, value_parser = ["erode", "dilate", "open", "close"])]
    op: String,
    /// Structuring element, e.g. square:3 or disk:10.
    #[arg(long, default_value = "square:3")]
    se: String,
    /// Ordering: lex-rgb, lex-gbr, lex-brg, borda, or learned:MODEL.json.
    #[arg(long, default_value = "lex-rgb")]
    order: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
}

#[derive(Args)]
struct VoteArgs {
    #[command(subcommand)]
    rule: VoteRule,
}

#[derive(Subcommand)]
enum VoteRule {
    /// Borda scores and the order they induce.
    Borda {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Exhaustive Kemeny consensus (small candidate counts).
    KemenyExact {
        #[arg(long)]
        profile: PathBuf,
    },
    /// The pairwise vote-margin matrix.
    Margins {
        #[arg(long)]
        profile: PathBuf,
    },
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, default_value = "lex-rgb")]
    order: String,
    /// Inline colors as r,g,b byte triples separated by semicolons.
    #[arg(long, conflicts_with = "colors_file")]
    colors: Option<String>,
    /// File with one r,g,b triple per line.
    #[arg(long)]
    colors_file: Option<PathBuf>,
    /// Optional 1-by-k strip image of the ranked colors.
    #[arg(long)]
    strip: Option<PathBuf>,
}

#[derive(Args)]
struct IrregularityArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    processed: PathBuf,
    #[arg(long, default_value_t = rankmorph::irregularity::DEFAULT_TRANSPORT_BINS)]
    max_bins: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV with header image,method,phi.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    wilcoxon_out: Option<PathBuf>,
    #[arg(long)]
    hasse_out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    eval_count: Option<usize>,
    #[arg(long)]
    showcase_count: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.category() {
                ErrorCategory::Config => ExitCode::from(2),
                ErrorCategory::Format => ExitCode::from(3),
                ErrorCategory::Numeric => ExitCode::from(4),
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Morph(args) => cmd_morph(args),
        Command::Vote(args) => cmd_vote(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Irregularity(args) => cmd_irregularity(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = SoftConfig {
        tau: args.tau,
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed: args.seed,
        ..SoftConfig::default()
    };
    let train_images =
        dataset::load_cifar_batch(&args.data, args.train_start..args.train_start + args.train_count)?;
    let val_images =
        dataset::load_cifar_batch(&args.data, args.val_start..args.val_start + args.val_count)?;
    let result = sco::train(&train_images, &val_images, &ReducedMapping::lex_family(), &cfg)?;

    ModelFile::new(result.params.clone(), cfg).save(&args.model_out)?;
    if let Some(path) = args.loss_out {
        std::fs::write(path, loss_curves_to_csv(&result))?;
    }
    println!(
        "trained on {} colors; final train loss {:.6}",
        train_images.iter().map(|i| i.pixel_count()).sum::<usize>(),
        result.train_loss.last().unwrap_or(&f64::NAN)
    );
    Ok(())
}

fn cmd_morph(args: MorphArgs) -> Result<()> {
    let op = match args.op.as_str() {
        "erode" => MorphOp::Erode,
        "dilate" => MorphOp::Dilate,
        "close" => MorphOp::Close,
        _ => MorphOp::Open,
    };
    let method = parse::parse_order(&args.order)?;
    let se = parse::parse_se(&args.se)?;
    let image = read_image(&args.input)?;
    let result = method.morph(op, &image, &se)?;
    write_image(&args.output, &result)?;
    Ok(())
}

fn cmd_vote(args: VoteArgs) -> Result<()> {
    let load = |path: &PathBuf| -> Result<VoteProfile> {
        VoteProfile::parse(&std::fs::read_to_string(path)?)
    };
    match args.rule {
        VoteRule::Borda { profile } => {
            let profile = load(&profile)?;
            let scores = borda_scores(&profile.orders)?;
            println!("candidate,score");
            for (i, s) in scores.scores().iter().enumerate() {
                println!("{i},{s}");
            }
            let order: Vec<String> = scores
                .induced_permutation()
                .iter()
                .map(usize::to_string)
                .collect();
            println!("order: {}", order.join(","));
        }
        VoteRule::KemenyExact { profile } => {
            let profile = load(&profile)?;
            let solution = exact_condorcet_order(&profile.margins()?)?;
            let order: Vec<String> = solution.permutation.iter().map(usize::to_string).collect();
            println!("order: {}", order.join(","));
            println!("objective: {}", solution.objective);
        }
        VoteRule::Margins { profile } => {
            let profile = load(&profile)?;
            print!("{}", margins_to_csv(&profile.margins()?));
        }
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let colors = match (&args.colors, &args.colors_file) {
        (Some(spec), None) => parse::parse_colors(spec)?,
        (None, Some(path)) => parse::read_colors_file(path)?,
        (None, None) => rankmorph::color::basic_palette16(),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    let method = parse::parse_order(&args.order)?;
    let ranked = method.rank_colors(&colors)?;
    for color in &ranked {
        println!("{}", parse::format_color(color));
    }
    if let Some(path) = args.strip {
        experiment::write_strip(&path, &ranked)?;
    }
    Ok(())
}

fn cmd_irregularity(args: IrregularityArgs) -> Result<()> {
    let original = read_image(&args.original)?;
    let processed = read_image(&args.processed)?;
    let result = global_irregularity_detailed(&original, &processed, args.max_bins)?;
    if result.quantized {
        eprintln!("note: transport ran on quantized histograms ({} bins cap)", args.max_bins);
    }
    println!("{}", result.phi);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let samples = read_irregularity_csv(&args.input)?;
    let results = compare_methods(&samples, args.alpha)?;

    let mut table = String::from("method_a,method_b,n,statistic,p_value,direction,significant\n");
    for r in &results {
        let direction = match r.test.direction {
            Direction::AGreater => "a_greater",
            Direction::BGreater => "b_greater",
            Direction::Tied => "tied",
        };
        table.push_str(&format!(
            "{},{},{},{},{:.6e},{},{}\n",
            r.method_a, r.method_b, r.test.n_used, r.test.statistic, r.test.p_value, direction,
            r.test.significant
        ));
    }
    match &args.wilcoxon_out {
        Some(path) => std::fs::write(path, &table)?,
        None => print!("{table}"),
    }

    let dot = hasse_from_tests(&results);
    match &args.hasse_out {
        Some(path) => std::fs::write(path, &dot)?,
        None => print!("{dot}"),
    }
    Ok(())
}

/// Reads `image,method,phi` rows into per-method sample vectors aligned by
/// image identifier.
fn read_irregularity_csv(path: &PathBuf) -> Result<Vec<(String, Vec<f64>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<(String, String, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("image")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Format {
                path: path.display().to_string(),
                offset: lineno as u64 + 1,
                message: format!("expected image,method,phi, got '{line}'"),
            });
        }
        let phi: f64 = parts[2].parse().map_err(|_| Error::Format {
            path: path.display().to_string(),
            offset: lineno as u64 + 1,
            message: format!("invalid phi value '{}'", parts[2]),
        })?;
        rows.push((parts[0].to_string(), parts[1].to_string(), phi));
    }

    let mut methods: Vec<String> = rows.iter().map(|(_, m, _)| m.clone()).collect();
    methods.sort();
    methods.dedup();
    let mut images: Vec<String> = rows.iter().map(|(i, _, _)| i.clone()).collect();
    images.sort();
    images.dedup();

    let mut samples = Vec::with_capacity(methods.len());
    for method in &methods {
        let mut values = Vec::with_capacity(images.len());
        for image in &images {
            let phi = rows
                .iter()
                .find(|(i, m, _)| i == image && m == method)
                .map(|(_, _, p)| *p)
                .ok_or_else(|| Error::Format {
                    path: path.display().to_string(),
                    offset: 0,
                    message: format!("method {method} has no value for image {image}"),
                })?;
            values.push(phi);
        }
        samples.push((method.clone(), values));
    }
    Ok(samples)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dataset) = args.dataset {
        config.dataset = Some(dataset);
    }
    if let Some(output) = args.output {
        config.output_dir = Some(output);
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(epochs) = args.epochs {
        config.soft.epochs = epochs;
    }
    if let Some(eval_count) = args.eval_count {
        config.eval_count = eval_count;
    }
    if let Some(showcase_count) = args.showcase_count {
        config.showcase_count = showcase_count;
    }
    let out = experiment::run_experiment(config)?;
    println!("{}", out.display());
    Ok(())
}
